//! Sixteen-slot physicochemical descriptor panel. logP and molar
//! refractivity use Wildman–Crippen atom types; TPSA uses Ertl's N/O
//! fragment contributions.

use std::sync::OnceLock;

use crate::chem::{element, BondKind, Molecule, SmartsQuery};

pub const DESCRIPTOR_NAMES: [&str; 16] = [
    "mol_weight",
    "heavy_atoms",
    "ring_count",
    "aromatic_rings",
    "hbd",
    "hba",
    "rotatable_bonds",
    "tpsa",
    "logp",
    "mr",
    "fraction_csp3",
    "halogens",
    "n_count",
    "o_count",
    "s_count",
    "net_charge",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorVector {
    pub values: [f64; 16],
}

impl DescriptorVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        DESCRIPTOR_NAMES.iter().position(|n| *n == name).map(|i| self.values[i])
    }
}

const HYDROGEN_MASS: f64 = 1.008;

struct CrippenType {
    patterns: &'static [&'static str],
    logp: f64,
    mr: f64,
}

macro_rules! ct {
    ([$($p:expr),+], $logp:expr, $mr:expr) => {
        CrippenType { patterns: &[$($p),+], logp: $logp, mr: $mr }
    };
}

// First matching type wins, so order matters.
#[rustfmt::skip]
const HEAVY_TYPES: &[CrippenType] = &[
    ct!(["[CH4]", "[CH3]C", "[CH2](C)C"], 0.1441, 2.503),
    ct!(["[CH](C)(C)C", "[C](C)(C)(C)C"], 0.0, 2.433),
    ct!(["[CH3][N,O,P,S,F,Cl,Br,I]", "[CH2X4]([N,O,P,S,F,Cl,Br,I])[A;!#1]"], -0.2035, 2.753),
    ct!(["[CH1X4]([N,O,P,S,F,Cl,Br,I])([A;!#1])[A;!#1]", "[CH0X4]([N,O,P,S,F,Cl,Br,I])([A;!#1])([A;!#1])[A;!#1]"], -0.2051, 2.731),
    ct!(["[C]=[!C;A;!#1]"], -0.2783, 5.007),
    ct!(["[CH2]=C", "[CH1](=C)[A;!#1]", "[CH0](=C)([A;!#1])[A;!#1]", "[C](=C)=C"], 0.1551, 3.513),
    ct!(["[CX2]#A"], 0.0017, 3.888),
    ct!(["[CH3]c"], 0.08452, 2.464),
    ct!(["[CH3]a"], -0.1444, 2.412),
    ct!(["[CH2X4]a"], -0.0516, 2.488),
    ct!(["[CHX4]a"], 0.1193, 2.582),
    ct!(["[CH0X4]a"], -0.0967, 2.576),
    ct!(["[cH0]-[A;!C;!N;!O;!S;!F;!Cl;!Br;!I;!#1]"], -0.5443, 4.041),
    ct!(["[c][#9]"], 0.0, 3.257),
    ct!(["[c][#17]"], 0.245, 3.564),
    ct!(["[c][#35]"], 0.198, 3.18),
    ct!(["[c][#53]"], 0.0, 3.104),
    ct!(["[cH]"], 0.1581, 3.35),
    ct!(["[c](:a)(:a):a"], 0.2955, 4.346),
    ct!(["[c](:a)(:a)-a"], 0.2713, 3.904),
    ct!(["[c](:a)(:a)-C"], 0.136, 3.509),
    ct!(["[c](:a)(:a)-N"], 0.4619, 3.067),
    ct!(["[c](:a)(:a)-O"], 0.5437, 3.853),
    ct!(["[c](:a)(:a)-S"], 0.1893, 2.673),
    ct!(["[c](:a)(:a)=[C,N,O]"], -0.8186, 3.135),
    ct!(["[C](=C)(a)[A;!#1]", "[C](=C)(c)a", "[CH1](=C)a", "[C]=c"], 0.264, 4.305),
    ct!(["[CX4][A;!C;!N;!O;!P;!S;!F;!Cl;!Br;!I;!#1]"], 0.2148, 2.693),
    ct!(["[#6]"], 0.08129, 3.243),
    ct!(["[NH2+0][A;!#1]"], -1.019, 2.262),
    ct!(["[NH+0]([A;!#1])[A;!#1]"], -0.7096, 2.173),
    ct!(["[NH2+0]a"], -1.027, 2.827),
    ct!(["[NH1+0](a)[!#1]"], -0.5188, 3.0),
    ct!(["[NH+0]=[!#1]"], 0.08387, 1.757),
    ct!(["[N+0](=[!#1])[!#1]"], 0.1836, 2.428),
    ct!(["[N+0]([A;!#1])([A;!#1])[A;!#1]"], -0.3187, 1.839),
    ct!(["[N+0](a)([!#1])[A;!#1]", "[N+0](a)(a)a"], -0.4458, 2.819),
    ct!(["[N+0]#[A;!#1]"], 0.01508, 1.725),
    ct!(["[NH3,NH2,NH;+,+2,+3]"], -1.95, 0.0),
    ct!(["[n+0]"], -0.3239, 2.202),
    ct!(["[n;+,+2,+3]"], -1.119, 0.0),
    ct!(["[NH0;+,+2,+3]([A;!#1])([A;!#1])([A;!#1])[A;!#1]", "[NH0;+,+2,+3](=[A;!#1])([A;!#1])[!#1]", "[NH0;+,+2,+3](=[#6])=[#7]", "[N;+,+2,+3]#[A;!#1]", "[N;-,-2,-3]", "[N;+,+2,+3](=[N;-,-2,-3])=N"], -0.3396, 0.2604),
    ct!(["[#7]"], -0.4806, 2.134),
    ct!(["[o]"], 0.1552, 1.08),
    ct!(["[OH,OH2]"], -0.2893, 0.8238),
    ct!(["[O]([A;!#1])[A;!#1]"], -0.0684, 1.085),
    ct!(["[O](a)[A;!#1]", "[O](a)a"], -0.4195, 1.182),
    ct!(["[O]=[#7,#8]", "[OX1;-][#7]"], 0.0335, 3.367),
    ct!(["[OX1;-][#16]"], -0.3339, 0.7774),
    ct!(["[O-]C(=O)"], -1.326, 0.0),
    ct!(["[OX1;-]"], -1.189, 0.0),
    ct!(["[O]=c"], 0.1788, 3.135),
    ct!(["[O]=[CH]C", "[O]=C(C)C", "[O]=C(C)[A;!#1]", "[O]=[CH]N", "[O]=[CH]O", "[O]=[CH2]", "[O]=[CX2]=O"], -0.1526, 0.0),
    ct!(["[O]=[CH]c", "[O]=C([C,c])[a;!#1]", "[O]=C(c)[A;!#1]"], 0.1129, 0.2215),
    ct!(["[O]=C([!#1;!#6])[!#1;!#6]"], 0.4833, 0.389),
    ct!(["[#8]"], -0.1188, 0.6865),
    ct!(["[#9-0]"], 0.4202, 1.108),
    ct!(["[#17-0]"], 0.6895, 5.853),
    ct!(["[#35-0]"], 0.8456, 8.927),
    ct!(["[#53-0]"], 0.8857, 14.02),
    ct!(["[#9,#17,#35,#53;-]"], -2.996, 0.0),
    ct!(["[#15]"], 0.8612, 6.92),
    ct!(["[S-0]"], 0.6482, 7.591),
    ct!(["[S-,S-2,S-3,S-4,S+,S+2,S+3]"], -0.0024, 7.365),
    ct!(["[s]"], 0.6237, 6.691),
    ct!(["[#3,#11,#19,#37,#55]"], -0.3808, 5.754),
];

/// Contribution of atoms matching none of the heavy types.
const DEFAULT_HEAVY: (f64, f64) = (-0.0025, 0.0);

const H_ON_CARBON: (f64, f64) = (0.123, 1.057);
const H_ALCOHOL: (f64, f64) = (-0.2677, 1.395);
const H_AMINE: (f64, f64) = (0.2142, 0.9627);
const H_ACID: (f64, f64) = (0.298, 1.805);
const H_OTHER: (f64, f64) = (0.1125, 1.112);

fn compiled_types() -> &'static [(Vec<SmartsQuery>, f64, f64)] {
    static TYPES: OnceLock<Vec<(Vec<SmartsQuery>, f64, f64)>> = OnceLock::new();
    TYPES.get_or_init(|| {
        HEAVY_TYPES
            .iter()
            .map(|t| {
                let qs = t
                    .patterns
                    .iter()
                    .map(|p| SmartsQuery::compile(p).unwrap_or_else(|e| panic!("atom type {p}: {e}")))
                    .collect();
                (qs, t.logp, t.mr)
            })
            .collect()
    })
}

fn hydrogen_type(mol: &Molecule, i: usize) -> (f64, f64) {
    let a = &mol.atoms[i];
    match a.element {
        6 => H_ON_CARBON,
        7 => H_AMINE,
        8 => {
            let Some(&(x, _)) = mol.neighbors(i).first() else {
                return H_OTHER;
            };
            let nb = &mol.atoms[x];
            match nb.element {
                7 => H_AMINE,
                8 | 16 => H_ACID,
                6 => {
                    let unsaturated = mol.neighbors(x).iter().any(|&(_, b)| mol.bonds[b].kind() == BondKind::Double);
                    if unsaturated && !nb.aromatic {
                        H_ACID
                    } else {
                        H_ALCOHOL
                    }
                }
                _ => H_ALCOHOL,
            }
        }
        _ => H_ALCOHOL,
    }
}

/// Per-atom (logP, MR) contributions, hydrogens folded into their heavy atom.
pub fn crippen_contributions(mol: &Molecule) -> Vec<(f64, f64)> {
    let n = mol.atom_count();
    let mut out: Vec<Option<(f64, f64)>> = vec![None; n];
    let mut left = n;
    for (queries, logp, mr) in compiled_types() {
        if left == 0 {
            break;
        }
        for q in queries {
            for (i, hit) in q.root_matches(mol).into_iter().enumerate() {
                if hit && out[i].is_none() {
                    out[i] = Some((*logp, *mr));
                    left -= 1;
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            let (lp, mr) = out[i].unwrap_or(DEFAULT_HEAVY);
            let h = mol.atoms[i].hydrogens as f64;
            let (hl, hm) = hydrogen_type(mol, i);
            (lp + h * hl, mr + h * hm)
        })
        .collect()
}

#[derive(Default)]
struct BondCounts {
    single: u8,
    double: u8,
    triple: u8,
    aromatic: u8,
}

fn bond_counts(mol: &Molecule, i: usize) -> BondCounts {
    let mut c = BondCounts::default();
    for &(_, b) in mol.neighbors(i) {
        match mol.bonds[b].kind() {
            BondKind::Single => c.single += 1,
            BondKind::Double => c.double += 1,
            BondKind::Triple => c.triple += 1,
            BondKind::Aromatic => c.aromatic += 1,
        }
    }
    c
}

fn in_three_ring(mol: &Molecule, i: usize) -> bool {
    mol.rings.iter().any(|r| r.len() == 3 && r.contains(&i))
}

fn tpsa_atom(mol: &Molecule, i: usize) -> f64 {
    let a = &mol.atoms[i];
    let c = bond_counts(mol, i);
    let key = (a.hydrogens, a.charge, c.single, c.double, c.triple, c.aromatic);
    match a.element {
        7 => match key {
            (0, 0, 3, 0, 0, 0) => {
                if in_three_ring(mol, i) {
                    3.01
                } else {
                    3.24
                }
            }
            (0, 0, 1, 1, 0, 0) => 12.36,
            (0, 0, 0, 0, 1, 0) => 23.79,
            (0, 0, 1, 2, 0, 0) => 11.68,
            (0, 0, 0, 1, 1, 0) => 13.6,
            (1, 0, 2, 0, 0, 0) => {
                if in_three_ring(mol, i) {
                    21.94
                } else {
                    12.03
                }
            }
            (1, 0, 0, 1, 0, 0) => 23.85,
            (2, 0, 1, 0, 0, 0) => 26.02,
            (0, 1, 4, 0, 0, 0) => 0.0,
            (0, 1, 2, 1, 0, 0) => 3.01,
            (0, 1, 1, 0, 1, 0) => 4.36,
            (0, 1, 0, 2, 0, 0) => 13.6,
            (1, 1, 3, 0, 0, 0) => 4.44,
            (1, 1, 1, 1, 0, 0) => 13.97,
            (2, 1, 2, 0, 0, 0) => 16.61,
            (2, 1, 0, 1, 0, 0) => 25.59,
            (3, 1, 1, 0, 0, 0) => 27.64,
            (0, 0, 0, 0, 0, 2) => 12.89,
            (0, 0, 0, 0, 0, 3) => 4.41,
            (0, 0, 1, 0, 0, 2) => 4.93,
            (0, 0, 0, 1, 0, 2) => 8.39,
            (1, 0, 0, 0, 0, 2) => 15.79,
            (0, 1, 0, 0, 0, 3) => 4.1,
            (0, 1, 1, 0, 0, 2) => 3.88,
            (1, 1, 0, 0, 0, 2) => 14.14,
            _ => 0.0,
        },
        8 => match key {
            (0, 0, 2, 0, 0, 0) => {
                if in_three_ring(mol, i) {
                    12.53
                } else {
                    9.23
                }
            }
            (0, 0, 0, 0, 0, 2) => 13.14,
            (0, 0, 0, 1, 0, 0) => 17.07,
            (1, 0, 1, 0, 0, 0) => 20.23,
            (0, -1, 1, 0, 0, 0) => 23.06,
            _ => 0.0,
        },
        _ => 0.0,
    }
}

/// Topological polar surface area from N and O contributions.
pub fn tpsa(mol: &Molecule) -> f64 {
    (0..mol.atom_count()).map(|i| tpsa_atom(mol, i)).sum()
}

fn is_amide_nitrogen(mol: &Molecule, i: usize) -> bool {
    mol.neighbors(i).iter().any(|&(c, _)| {
        mol.atoms[c].element == 6
            && mol.neighbors(c).iter().any(|&(o, b)| {
                o != i && mol.atoms[o].element == 8 && mol.bonds[b].kind() == BondKind::Double
            })
    })
}

fn is_acceptor(mol: &Molecule, i: usize) -> bool {
    let a = &mol.atoms[i];
    match a.element {
        8 => a.charge <= 0,
        7 => {
            a.charge <= 0
                && !(a.aromatic && a.hydrogens > 0)
                && mol.degree(i) + a.hydrogens as usize <= 3
                && !is_amide_nitrogen(mol, i)
        }
        _ => false,
    }
}

fn is_rotatable(mol: &Molecule, b: usize) -> bool {
    let bond = &mol.bonds[b];
    if bond.kind() != BondKind::Single || bond.in_ring {
        return false;
    }
    [bond.begin, bond.end].iter().all(|&x| {
        mol.degree(x) >= 2
            && !mol
                .neighbors(x)
                .iter()
                .any(|&(_, nb)| mol.bonds[nb].kind() == BondKind::Triple)
    })
}

pub fn descriptor_panel(mol: &Molecule) -> DescriptorVector {
    let atoms = &mol.atoms;
    let count = |z: u8| atoms.iter().filter(|a| a.element == z).count() as f64;
    let mw: f64 = atoms
        .iter()
        .map(|a| element::average_mass(a.element) + a.hydrogens as f64 * HYDROGEN_MASS)
        .sum();
    let aromatic_rings = mol
        .rings
        .iter()
        .filter(|r| r.iter().all(|&a| atoms[a].aromatic))
        .count();
    let hbd = atoms
        .iter()
        .filter(|a| matches!(a.element, 7 | 8) && a.hydrogens > 0)
        .count();
    let hba = (0..mol.atom_count()).filter(|&i| is_acceptor(mol, i)).count();
    let rotatable = (0..mol.bond_count()).filter(|&b| is_rotatable(mol, b)).count();
    let (logp, mr) = crippen_contributions(mol)
        .into_iter()
        .fold((0.0, 0.0), |(l, m), (a, b)| (l + a, m + b));
    let carbons: Vec<usize> = (0..mol.atom_count()).filter(|&i| atoms[i].element == 6).collect();
    let sp3 = carbons
        .iter()
        .filter(|&&i| {
            !atoms[i].aromatic
                && mol
                    .neighbors(i)
                    .iter()
                    .all(|&(_, b)| mol.bonds[b].kind() == BondKind::Single)
        })
        .count();
    let fsp3 = if carbons.is_empty() {
        0.0
    } else {
        sp3 as f64 / carbons.len() as f64
    };
    let halogens = atoms.iter().filter(|a| element::is_halogen(a.element)).count();

    DescriptorVector {
        values: [
            mw,
            atoms.len() as f64,
            mol.rings.len() as f64,
            aromatic_rings as f64,
            hbd as f64,
            hba as f64,
            rotatable as f64,
            tpsa(mol),
            logp,
            mr,
            fsp3,
            halogens as f64,
            count(7),
            count(8),
            count(16),
            mol.net_charge() as f64,
        ],
    }
}
