//! Built-in candidate features for rule induction: named structural motifs
//! (each with a SMARTS form and, where one is practical, a regex over
//! canonical SMILES) plus descriptor-threshold conditions.

use super::{Comparator, Condition, Predicate};
use crate::chem::Pattern;

/// (id, category, SMARTS, optional text regex)
pub const MOTIFS: &[(&str, &str, &str, Option<&str>)] = &[
    ("nitro", "toxicophore", "[#7](~[OX1])~[OX1]", Some(r"\[N\+\]\(\[O-\]\)=O|\[N\+\]\(=O\)\[O-\]|N\(=O\)=O")),
    ("aromatic_nitro", "toxicophore", "a[#7](~[OX1])~[OX1]", Some(r"c\[N\+\]\(\[O-\]\)=O|\)\[N\+\]\(\[O-\]\)=O")),
    ("nitroso", "toxicophore", "[#6,#7][NX2]=O", Some(r"N=O")),
    ("n_nitroso", "toxicophore", "[#7][NX2]=O", Some(r"NN=O|N\(N=O\)")),
    ("azide", "toxicophore", "[#7]~[#7+]~[#7-]", Some(r"\[N-\]=\[N\+\]=N|N=\[N\+\]=\[N-\]")),
    ("hydrazine", "toxicophore", "[NX3;!a]-[NX3;!a]", Some(r"NN")),
    ("azo", "toxicophore", "[#6]-[NX2]=[NX2]-[#6]", Some(r"N=N")),
    ("diazo", "toxicophore", "[#6]=[#7+]=[#7-]", None),
    ("epoxide", "toxicophore", "C1OC1", Some(r"C1OC1|C1CO1")),
    ("aziridine", "toxicophore", "C1NC1", Some(r"C1NC1|C1CN1")),
    ("michael_acceptor", "toxicophore", "[CX3]=[CX3]-[CX3]=O", Some(r"C=CC\(=O\)|C=CC\([^)]*\)=O")),
    ("aldehyde", "toxicophore", "[CX3;H1](=O)[#6]", None),
    ("acyl_halide", "toxicophore", "[CX3](=O)[F,Cl,Br,I]", None),
    ("alkyl_halide", "toxicophore", "[CX4][Cl,Br,I]", Some(r"CCl|CBr|C\(Cl\)|C\(Br\)|CI\b")),
    ("nitrogen_mustard", "toxicophore", "[Cl,Br,I][CH2][CH2][#7,#16]", Some(r"ClCC[NS]|CCCl")),
    ("alkyl_sulfonate", "toxicophore", "[#6]S(=O)(=O)O[CX4]", None),
    ("peroxide", "toxicophore", "[OX2]-[OX2]", Some(r"OO")),
    ("isocyanate", "toxicophore", "N=C=O", Some(r"N=C=O")),
    ("isothiocyanate", "toxicophore", "N=C=S", Some(r"N=C=S")),
    ("aromatic_amine", "toxicophore", "c[NX3;H2]", Some(r"^Nc|c\(N\)|cN$")),
    ("aromatic_hydroxylamine", "toxicophore", "c[NX3][OX2H]", None),
    ("quinone", "toxicophore", "O=C1C=CC(=O)C=C1", None),
    ("polyaromatic_linear", "toxicophore", "c1ccc2cc3ccccc3cc2c1", None),
    ("polyaromatic_angular", "toxicophore", "c1ccc2c(c1)ccc1ccccc12", None),
    ("fused_aromatic", "aromatic", "c1ccc2ccccc2c1", Some(r"c2c|c12")),
    ("thiocarbonyl", "functional_group", "[#6]=S", Some(r"C=S|=S\)")),
    ("beta_lactam", "functional_group", "O=C1CCN1", None),
    ("perhalo_methyl", "lipophilicity", "[CX4]([F,Cl,Br])([F,Cl,Br])[F,Cl,Br]", Some(r"C\(F\)\(F\)F|FC\(F\)|C\(Cl\)\(Cl\)Cl|ClC\(Cl\)")),
    ("trifluoromethyl", "lipophilicity", "[CX4](F)(F)F", Some(r"C\(F\)\(F\)F|FC\(F\)")),
    ("aryl_halide", "lipophilicity", "c[F,Cl,Br,I]", Some(r"c\((?:Cl|Br|F|I)\)|c(?:Cl|Br|F|I)|(?:Cl|Br|F|I)c")),
    ("aryl_chloride", "lipophilicity", "cCl", Some(r"cCl|c\(Cl\)|Clc")),
    ("aryl_bromide", "lipophilicity", "cBr", Some(r"cBr|c\(Br\)|Brc")),
    ("aryl_fluoride", "lipophilicity", "cF", Some(r"cF|c\(F\)|Fc")),
    ("long_alkyl_chain", "lipophilicity", "[CX4;!R][CX4;!R][CX4;!R][CX4;!R][CX4;!R][CX4;!R]", Some(r"CCCCCC")),
    ("tert_butyl", "lipophilicity", "[CX4]([CH3])([CH3])[CH3]", Some(r"C\(C\)\(C\)C|CC\(C\)\(C\)")),
    ("biaryl", "aromatic", "a-a", Some(r"\)-c|c-c")),
    ("benzene", "aromatic", "c1ccccc1", Some(r"c1ccccc1|c1ccc")),
    ("steroid_core", "lipophilicity", "C1CCC2C(C1)CCC1C2CCC2CCCC12", None),
    ("pyridine", "heteroaromatic", "n1ccccc1", Some(r"n")),
    ("pyrimidine", "heteroaromatic", "n1cnccc1", Some(r"ncn|nc\d*n")),
    ("pyrrole_nh", "heteroaromatic", "[nH]", Some(r"\[nH\]")),
    ("azole_13", "heteroaromatic", "n1a[n,o,s]aa1", Some(r"c\d?nc[ons\[]|n\d?c[ons]")),
    ("azole_12", "heteroaromatic", "n1aaa[n,o,s]1", Some(r"nn|n\d?o|on")),
    ("imidazole", "heteroaromatic", "[nX3]1cncc1", None),
    ("tetrazole", "heteroaromatic", "n1nnnc1", Some(r"nnn")),
    ("thiophene", "heteroaromatic", "c1ccsc1", Some(r"s")),
    ("furan", "heteroaromatic", "c1ccoc1", Some(r"o")),
    ("thiazole", "heteroaromatic", "c1cscn1", None),
    ("oxazole", "heteroaromatic", "c1cocn1", None),
    ("indole", "heteroaromatic", "c1ccc2c(c1)cc[nX3]2", None),
    ("benzimidazole", "heteroaromatic", "c1ccc2[nX3]cnc2c1", None),
    ("quinoline", "heteroaromatic", "c1ccc2ncccc2c1", Some(r"c1ccc2c\(c1\)cccn2|c1ccc2ncccc2c1|n2")),
    ("isoquinoline", "heteroaromatic", "c1ccc2cnccc2c1", None),
    ("aminoquinoline", "heteroaromatic", "[NX3;!a]c1ccnc2ccccc12", None),
    ("nitroimidazole", "toxicophore", "[#7](~[OX1])(~[OX1])c1naaa1", None),
    ("nitrofuran", "toxicophore", "[#7](~[OX1])(~[OX1])c1ccco1", None),
    ("nitrothiophene", "toxicophore", "[#7](~[OX1])(~[OX1])c1cccs1", None),
    ("carboxylic_acid", "polarity", "[CX3](=O)[OX2H1]", Some(r"C\(=O\)O\)|C\(=O\)O$|C\(O\)=O|OC\(=O\)$")),
    ("ester", "functional_group", "[#6][CX3](=O)O[#6]", Some(r"C\(=O\)OC|OC\(=O\)C|C\(OC[^)]*\)=O")),
    ("amide", "functional_group", "[CX3](=O)[NX3]", Some(r"C\(=O\)N|NC\(=O\)|C\(N[^)]*\)=O")),
    ("anilide", "functional_group", "c[NX3][CX3](=O)", Some(r"cNC\(=O\)|C\(Nc")),
    ("urea", "functional_group", "[NX3][CX3](=O)[NX3]", Some(r"NC\(=O\)N|NC\(N[^)]*\)=O")),
    ("guanidine", "basic_amine", "[NX3][CX3](=[NX2])[NX3]", None),
    ("sulfonamide", "hbond", "S(=O)(=O)[NX3]", Some(r"S\(N[^)]*\)\(=O\)=O|S\(=O\)\(=O\)N|NS\(=O\)\(=O\)")),
    ("sulfone", "polarity", "[#6]S(=O)(=O)[#6]", Some(r"S\(=O\)\(=O\)|S\([^)]*\)\(=O\)=O")),
    ("phosphate", "polarity", "P(=O)(O)O", Some(r"P")),
    ("thiol", "functional_group", "[SX2H]", Some(r"S$|^S[^(]|\(S\)")),
    ("phenol", "hbond", "c[OX2H]", Some(r"c\(O\)|cO$|^Oc")),
    ("aliphatic_alcohol", "hbond", "[CX4][OX2H]", Some(r"CO$|^OC|C\(O\)")),
    ("aliphatic_ether", "polarity", "[CX4]-[OX2]-[CX4]", Some(r"COC")),
    ("ketone", "functional_group", "[#6][CX3](=O)[#6]", None),
    ("nitrile", "polarity", "C#N", Some(r"C#N|N#C")),
    ("n_oxide", "polarity", "[n+,NX4+]-[O-]", None),
    ("primary_aliphatic_amine", "basic_amine", "[NX3;H2;!a][CX4]", Some(r"CN$|^NC|C\(N\)")),
    ("secondary_aliphatic_amine", "basic_amine", "[NX3;H1;!a]([CX4])[CX4]", Some(r"CNC")),
    ("tertiary_aliphatic_amine", "basic_amine", "[NX3;H0;!a]([CX4])([CX4])[CX4]", Some(r"CN\(C|N\(C\)C")),
    ("protonated_amine", "basic_amine", "[NX4+;!H0]", Some(r"\[NH\d?\+\]|\[N\+\]\(C\)")),
    ("piperidine", "basic_amine", "C1CCNCC1", Some(r"C1CCNCC1|C1CCN\(CC1\)|N1CCCCC1")),
    ("piperazine", "basic_amine", "C1CNCCN1", Some(r"N1CCNCC1|C1CN\(CCN1")),
    ("morpholine", "basic_amine", "C1COCCN1", Some(r"C1COCCN1|N1CCOCC1")),
    ("pyrrolidine", "basic_amine", "C1CCNC1", None),
    ("hbd_nh_oh", "hbond", "[N,O;!H0]", Some(r"\[nH\]|N|O")),
];

/// (id, category, slot, comparator, threshold)
pub const DESCRIPTOR_CANDIDATES: &[(&str, &str, &str, Comparator, f64)] = &[
    ("logp_gt_3", "lipophilicity", "logp", Comparator::Gt, 3.0),
    ("logp_gt_5", "lipophilicity", "logp", Comparator::Gt, 5.0),
    ("logp_lt_1", "lipophilicity", "logp", Comparator::Lt, 1.0),
    ("tpsa_lt_75", "polarity", "tpsa", Comparator::Lt, 75.0),
    ("tpsa_gt_140", "polarity", "tpsa", Comparator::Gt, 140.0),
    ("hbd_gt_5", "hbond", "hbd", Comparator::Gt, 5.0),
    ("hba_gt_10", "hbond", "hba", Comparator::Gt, 10.0),
    ("mw_gt_500", "size", "mol_weight", Comparator::Gt, 500.0),
    ("mw_lt_250", "size", "mol_weight", Comparator::Lt, 250.0),
    ("rotb_gt_10", "size", "rotatable_bonds", Comparator::Gt, 10.0),
    ("aromatic_rings_ge_3", "aromatic", "aromatic_rings", Comparator::Ge, 3.0),
    ("fsp3_gt_0.5", "size", "fraction_csp3", Comparator::Gt, 0.5),
    ("cationic", "basic_amine", "net_charge", Comparator::Gt, 0.0),
    ("halogens_ge_3", "lipophilicity", "halogens", Comparator::Ge, 3.0),
];

/// A candidate feature offered to rule induction.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub id: String,
    pub category: String,
    pub predicate: Predicate,
}

/// Which pattern language the motif half of the library uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Smarts,
    Text,
}

impl std::fmt::Display for Flavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Flavor::Smarts => "smarts",
            Flavor::Text => "text",
        })
    }
}

fn descriptor_candidates() -> impl Iterator<Item = Candidate> {
    DESCRIPTOR_CANDIDATES.iter().map(|&(id, category, slot, cmp, threshold)| Candidate {
        id: id.to_string(),
        category: category.to_string(),
        predicate: Predicate::Descriptor(Condition::new(slot, cmp, threshold).expect("built-in descriptor slot")),
    })
}

/// The full candidate list for one flavor, motifs first, in a fixed order.
pub fn candidate_library(flavor: Flavor) -> Vec<Candidate> {
    let motifs = MOTIFS.iter().filter_map(|&(id, category, smarts, text)| {
        let pattern = match flavor {
            Flavor::Smarts => Pattern::smarts(smarts).expect("built-in SMARTS compiles"),
            Flavor::Text => Pattern::text(text?).expect("built-in regex compiles"),
        };
        Some(Candidate {
            id: id.to_string(),
            category: category.to_string(),
            predicate: Predicate::Pattern(pattern),
        })
    });
    motifs.chain(descriptor_candidates()).collect()
}
