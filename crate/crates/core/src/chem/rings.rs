//! Ring perception: bridge detection for ring membership and a minimum cycle
//! basis (SSSR) from Horton candidate cycles reduced over GF(2).

use std::collections::{HashSet, VecDeque};

use super::molecule::Molecule;

/// Flags every bond that lies on at least one cycle (i.e. is not a bridge).
pub fn ring_bonds(mol: &Molecule) -> Vec<bool> {
    let n = mol.atom_count();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; mol.bond_count()];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (atom, bond used to enter, next neighbor cursor)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(top) = stack.len().checked_sub(1) {
            let (v, via, cursor) = stack[top];
            let nbrs = mol.neighbors(v);
            if cursor < nbrs.len() {
                let (w, b) = nbrs[cursor];
                stack[top].2 += 1;
                if b == via {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, b, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        is_bridge[via] = true;
                    }
                }
            }
        }
    }
    is_bridge.iter().map(|b| !b).collect()
}

fn cyclomatic_number(mol: &Molecule) -> usize {
    let comps = mol.components().len();
    (mol.bond_count() + comps).saturating_sub(mol.atom_count())
}

/// Smallest set of smallest rings. Requires `in_ring` flags on bonds.
pub fn sssr(mol: &Molecule) -> Vec<Vec<usize>> {
    let target = cyclomatic_number(mol);
    if target == 0 {
        return Vec::new();
    }
    let n = mol.atom_count();
    let m = mol.bond_count();
    let words = m.div_ceil(64);
    let ring_atoms: Vec<usize> = (0..n).filter(|&a| mol.atoms[a].in_ring).collect();

    let mut candidates: Vec<(Vec<usize>, Vec<u64>)> = Vec::new();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for &root in &ring_atoms {
        // BFS tree over ring bonds only
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut dist = vec![usize::MAX; n];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(w, b) in mol.neighbors(v) {
                if mol.bonds[b].in_ring && dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    parent[w] = Some((v, b));
                    queue.push_back(w);
                }
            }
        }
        let path = |mut v: usize| -> (Vec<usize>, Vec<usize>) {
            let mut atoms = vec![v];
            let mut bonds = Vec::new();
            while let Some((p, b)) = parent[v] {
                atoms.push(p);
                bonds.push(b);
                v = p;
            }
            atoms.reverse();
            bonds.reverse();
            (atoms, bonds)
        };
        for (bi, bond) in mol.bonds.iter().enumerate() {
            if !bond.in_ring {
                continue;
            }
            let (x, y) = (bond.begin, bond.end);
            if dist[x] == usize::MAX || dist[y] == usize::MAX {
                continue;
            }
            if parent[x].map(|p| p.1) == Some(bi) || parent[y].map(|p| p.1) == Some(bi) {
                continue;
            }
            let (px, bx) = path(x);
            let (py, by) = path(y);
            let set_x: HashSet<usize> = px[1..].iter().copied().collect();
            if py[1..].iter().any(|a| set_x.contains(a)) {
                continue;
            }
            let mut bits = vec![0u64; words];
            for &b in bx.iter().chain(by.iter()).chain(std::iter::once(&bi)) {
                bits[b / 64] |= 1 << (b % 64);
            }
            if !seen.insert(bits.clone()) {
                continue;
            }
            let mut cycle = px;
            cycle.extend(py[1..].iter().rev());
            candidates.push((cycle, bits));
        }
    }
    candidates.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.1.cmp(&b.1)));

    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut rings = Vec::new();
    for (cycle, bits) in candidates {
        let mut v = bits;
        for (pivot, row) in &basis {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (x, r) in v.iter_mut().zip(row) {
                    *x ^= r;
                }
            }
        }
        let Some(pivot) = first_bit(&v) else {
            continue;
        };
        basis.push((pivot, v));
        rings.push(cycle);
        if rings.len() == target {
            break;
        }
    }
    rings
}

fn first_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}
