use super::element;
use super::rings;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    /// Atomic number; 0 is the `*` wildcard atom.
    pub element: u8,
    pub charge: i8,
    /// Total (implicit + explicit) hydrogen count.
    pub hydrogens: u8,
    pub aromatic: bool,
    pub isotope: Option<u16>,
    pub in_ring: bool,
    /// Written in brackets in the source; bracket atoms keep their stated H count.
    pub bracket: bool,
}

impl Atom {
    pub fn symbol(&self) -> &'static str {
        element::symbol(self.element)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BondKind {
    Single = 1,
    Double = 2,
    Triple = 3,
    Aromatic = 4,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    pub begin: usize,
    pub end: usize,
    /// Formal order in {1, 2, 3}; aromatic bonds carry order 1 plus the aromatic flag.
    pub order: u8,
    pub aromatic: bool,
    pub in_ring: bool,
}

impl Bond {
    pub fn kind(&self) -> BondKind {
        if self.aromatic {
            return BondKind::Aromatic;
        }
        match self.order {
            2 => BondKind::Double,
            3 => BondKind::Triple,
            _ => BondKind::Single,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.begin == atom {
            self.end
        } else {
            self.begin
        }
    }
}

/// A molecular graph with hydrogens folded into heavy atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    /// Smallest set of smallest rings, each an atom cycle in traversal order.
    pub rings: Vec<Vec<usize>>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Molecule {
    /// Builds a molecule and perceives ring membership and SSSR.
    pub(crate) fn from_parts(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Molecule {
        let mut mol = Molecule {
            atoms,
            bonds,
            rings: Vec::new(),
            adjacency: Vec::new(),
        };
        mol.rebuild_adjacency();
        mol.perceive_rings();
        mol
    }

    fn rebuild_adjacency(&mut self) {
        let mut adjacency = vec![Vec::new(); self.atoms.len()];
        for (i, b) in self.bonds.iter().enumerate() {
            adjacency[b.begin].push((b.end, i));
            adjacency[b.end].push((b.begin, i));
        }
        self.adjacency = adjacency;
    }

    pub(crate) fn perceive_rings(&mut self) {
        let ring_bonds = rings::ring_bonds(self);
        for (b, flag) in self.bonds.iter_mut().zip(&ring_bonds) {
            b.in_ring = *flag;
        }
        for a in self.atoms.iter_mut() {
            a.in_ring = false;
        }
        for i in 0..self.bonds.len() {
            if self.bonds[i].in_ring {
                let (x, y) = (self.bonds[i].begin, self.bonds[i].end);
                self.atoms[x].in_ring = true;
                self.atoms[y].in_ring = true;
            }
        }
        self.rings = rings::sssr(self);
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// `(neighbor atom, bond index)` pairs.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|(n, _)| *n == b)
            .map(|&(_, bi)| bi)
    }

    /// Number of SSSR rings containing the atom.
    pub fn ring_membership_count(&self, atom: usize) -> usize {
        self.rings.iter().filter(|r| r.contains(&atom)).count()
    }

    /// Connected components as sorted atom lists, ordered by their smallest atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                let a = comp[i];
                for &(nb, _) in &self.adjacency[a] {
                    if !seen[nb] {
                        seen[nb] = true;
                        comp.push(nb);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Sum of formal bond orders at an atom, counting aromatic bonds as 1.
    pub fn bond_order_sum(&self, atom: usize) -> u32 {
        self.adjacency[atom]
            .iter()
            .map(|&(_, b)| self.bonds[b].order as u32)
            .sum()
    }

    pub fn net_charge(&self) -> i32 {
        self.atoms.iter().map(|a| a.charge as i32).sum()
    }

    /// Returns the same molecule with atoms renumbered: new index `perm[old]`.
    pub fn permuted(&self, perm: &[usize]) -> Molecule {
        assert_eq!(perm.len(), self.atoms.len());
        let mut atoms = self.atoms.clone();
        for (old, a) in self.atoms.iter().enumerate() {
            atoms[perm[old]] = a.clone();
        }
        let mut bonds: Vec<Bond> = self
            .bonds
            .iter()
            .map(|b| Bond {
                begin: perm[b.begin],
                end: perm[b.end],
                ..b.clone()
            })
            .collect();
        // bond order in the list is also scrambled so no information leaks through it
        bonds.sort_by_key(|b| (b.begin.min(b.end), b.begin.max(b.end)));
        Molecule::from_parts(atoms, bonds)
    }

    /// Keeps only the component with the most heavy atoms (ties: earliest).
    pub fn largest_fragment(&self) -> Molecule {
        let comps = self.components();
        if comps.len() <= 1 {
            return self.clone();
        }
        let best = comps
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.len().cmp(&b.len()).then(j.cmp(i)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let keep = &comps[best];
        let mut index = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in keep.iter().enumerate() {
            index[old] = new;
        }
        let atoms = keep.iter().map(|&i| self.atoms[i].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| index[b.begin] != usize::MAX)
            .map(|b| Bond {
                begin: index[b.begin],
                end: index[b.end],
                ..b.clone()
            })
            .collect();
        Molecule::from_parts(atoms, bonds)
    }
}
