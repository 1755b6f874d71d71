//! Extended-connectivity fingerprints.

use std::collections::HashSet;

use super::{BitFingerprint, FingerprintTag};
use crate::chem::Molecule;

const SEED: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_seq(values: impl IntoIterator<Item = u64>) -> u64 {
    values
        .into_iter()
        .fold(SEED, |h, v| splitmix(h.rotate_left(5) ^ v.wrapping_add(SEED)))
}

fn initial_identifier(mol: &Molecule, i: usize) -> u64 {
    let a = &mol.atoms[i];
    hash_seq([
        a.element as u64,
        mol.degree(i) as u64,
        a.hydrogens as u64,
        a.charge as i64 as u64,
        a.in_ring as u64,
        a.aromatic as u64,
    ])
}

/// Unfolded environment identifiers up to `radius`, deduplicated by atom
/// set: an environment covering the same atoms as an earlier one adds nothing.
pub fn ecfp_identifiers(mol: &Molecule, radius: usize) -> Vec<u64> {
    let n = mol.atom_count();
    let words = n.div_ceil(64).max(1);
    let mut ids: Vec<u64> = (0..n).map(|i| initial_identifier(mol, i)).collect();
    let mut envs: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut e = vec![0u64; words];
            e[i / 64] |= 1 << (i % 64);
            e
        })
        .collect();
    let mut seen_sets: HashSet<Vec<u64>> = envs.iter().cloned().collect();
    let mut out: Vec<u64> = ids.clone();

    for layer in 1..=radius {
        let mut next_ids = Vec::with_capacity(n);
        let mut next_envs = Vec::with_capacity(n);
        for i in 0..n {
            let mut nb: Vec<(u64, u64)> = mol
                .neighbors(i)
                .iter()
                .map(|&(j, b)| (mol.bonds[b].kind() as u64, ids[j]))
                .collect();
            nb.sort_unstable();
            let id = hash_seq(
                [layer as u64, ids[i]]
                    .into_iter()
                    .chain(nb.iter().flat_map(|&(k, v)| [k, v])),
            );
            let mut env = envs[i].clone();
            for &(j, _) in mol.neighbors(i) {
                for (w, x) in env.iter_mut().zip(&envs[j]) {
                    *w |= x;
                }
            }
            next_ids.push(id);
            next_envs.push(env);
        }
        // within a layer, equal atom sets keep the smallest identifier
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| next_ids[i]);
        for &i in &order {
            if seen_sets.insert(next_envs[i].clone()) {
                out.push(next_ids[i]);
            }
        }
        ids = next_ids;
        envs = next_envs;
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Folded circular fingerprint; radius 2 is ECFP4, radius 3 is ECFP6.
pub fn ecfp(mol: &Molecule, radius: usize, nbits: usize) -> BitFingerprint {
    assert!(nbits > 0, "nbits must be positive");
    let tag = if radius <= 2 { FingerprintTag::EcfpR2 } else { FingerprintTag::EcfpR3 };
    let ids = ecfp_identifiers(mol, radius);
    BitFingerprint::from_indices(nbits, tag, ids.into_iter().map(|h| (h % nbits as u64) as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn fp(s: &str, r: usize) -> BitFingerprint {
        ecfp(&parse_smiles(s).unwrap(), r, 2048)
    }

    #[test]
    fn atom_order_does_not_matter() {
        assert_eq!(fp("CCO", 2), fp("OCC", 2));
        assert_eq!(fp("c1ccccc1O", 3), fp("Oc1ccccc1", 3));
    }

    #[test]
    fn benzene_has_one_environment_per_layer() {
        let ids = ecfp_identifiers(&parse_smiles("c1ccccc1").unwrap(), 2);
        assert_eq!(ids.len(), 3);
    }

    #[test]
    fn methane_saturates_at_radius_zero() {
        assert_eq!(fp("C", 2).ones().collect::<Vec<_>>(), fp("C", 3).ones().collect::<Vec<_>>());
        assert_eq!(fp("C", 2).count_ones(), 1);
    }

    #[test]
    fn larger_radius_adds_bits() {
        for s in ["CC(=O)Nc1ccc(O)cc1", "CCN(CC)CC", "c1ccc2ncccc2c1"] {
            let a = fp(s, 2);
            let b = fp(s, 3);
            assert!(a.ones().all(|i| b.get(i)), "{s}");
        }
    }
}
