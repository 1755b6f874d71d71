//! Canonical atom ranking and SMILES emission.
//!
//! Ranks start from per-atom invariants and are refined from neighbor ranks
//! until stable. Remaining ties are broken by trying every member of the first
//! tied class and keeping the lexicographically smallest SMILES, so the result
//! does not depend on input atom order.

use super::element;
use super::molecule::{BondKind, Molecule};

/// Upper bound on fully-ranked leaves explored while breaking ties.
const TIE_BREAK_BUDGET: usize = 20_000;

pub fn canonical_smiles(mol: &Molecule) -> String {
    canonical_form(mol).0
}

/// Canonical total order of atoms (0 = written first).
pub fn canonical_ranks(mol: &Molecule) -> Vec<usize> {
    canonical_form(mol).1
}

fn canonical_form(mol: &Molecule) -> (String, Vec<usize>) {
    if mol.atom_count() == 0 {
        return (String::new(), Vec::new());
    }
    let initial = initial_ranks(mol);
    let mut best: Option<(String, Vec<usize>)> = None;
    let mut budget = TIE_BREAK_BUDGET;
    search(mol, initial, &mut best, &mut budget);
    best.expect("at least one leaf is always explored")
}

fn initial_ranks(mol: &Molecule) -> Vec<usize> {
    let keys: Vec<_> = (0..mol.atom_count())
        .map(|i| {
            let a = &mol.atoms[i];
            (
                a.element,
                a.isotope.unwrap_or(0),
                a.charge,
                mol.degree(i),
                a.hydrogens,
                a.in_ring,
                a.aromatic,
            )
        })
        .collect();
    dense_ranks(&keys)
}

fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect()
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().copied().max().map_or(0, |m| m + 1)
}

fn refine(mol: &Molecule, mut ranks: Vec<usize>) -> Vec<usize> {
    let mut classes = class_count(&ranks);
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..mol.atom_count())
            .map(|i| {
                let mut nb: Vec<(usize, u8)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(j, b)| (ranks[j], mol.bonds[b].kind() as u8))
                    .collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        let next = dense_ranks(&keys);
        let next_classes = class_count(&next);
        ranks = next;
        if next_classes == classes {
            return ranks;
        }
        classes = next_classes;
    }
}

fn search(mol: &Molecule, ranks: Vec<usize>, best: &mut Option<(String, Vec<usize>)>, budget: &mut usize) {
    let ranks = refine(mol, ranks);
    let n = mol.atom_count();
    if class_count(&ranks) == n {
        *budget = budget.saturating_sub(1);
        let s = write_smiles(mol, &ranks);
        if best.as_ref().is_none_or(|(b, _)| s < *b) {
            *best = Some((s, ranks));
        }
        return;
    }
    let mut counts = vec![0usize; n];
    for &r in &ranks {
        counts[r] += 1;
    }
    let tied = counts.iter().position(|&c| c > 1).expect("some class is tied");
    let members: Vec<usize> = (0..n).filter(|&i| ranks[i] == tied).collect();
    for &chosen in &members {
        if *budget == 0 && best.is_some() {
            break;
        }
        let split: Vec<usize> = ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| 2 * r + usize::from(r == tied && i != chosen))
            .collect();
        search(mol, dense_ranks(&split), best, budget);
    }
}

/// Hydrogen count an unbracketed organic-subset atom would receive on reparse.
pub(crate) fn implicit_hydrogens(mol: &Molecule, atom: usize) -> Option<u32> {
    let a = &mol.atoms[atom];
    let valences = element::organic_valences(a.element)?;
    let used = mol.bond_order_sum(atom);
    if a.aromatic {
        Some((valences[0] as u32).saturating_sub(used + 1))
    } else {
        valences.iter().find(|&&v| v as u32 >= used).map(|&v| v as u32 - used)
    }
}

fn atom_token(mol: &Molecule, i: usize) -> String {
    let a = &mol.atoms[i];
    let sym = if a.aromatic {
        a.symbol().to_ascii_lowercase()
    } else {
        a.symbol().to_string()
    };
    if a.element == 0 && a.charge == 0 && a.isotope.is_none() && a.hydrogens == 0 {
        return "*".into();
    }
    let organic = a.charge == 0
        && a.isotope.is_none()
        && element::organic_valences(a.element).is_some()
        && (!a.aromatic || matches!(a.element, 5 | 6 | 7 | 8 | 15 | 16))
        && implicit_hydrogens(mol, i) == Some(a.hydrogens as u32);
    if organic {
        return sym;
    }
    let mut t = String::from("[");
    if let Some(iso) = a.isotope {
        t.push_str(&iso.to_string());
    }
    t.push_str(&sym);
    match a.hydrogens {
        0 => {}
        1 => t.push('H'),
        h => {
            t.push('H');
            t.push_str(&h.to_string());
        }
    }
    match a.charge {
        0 => {}
        1 => t.push('+'),
        -1 => t.push('-'),
        c if c > 0 => t.push_str(&format!("+{c}")),
        c => t.push_str(&format!("-{}", -c)),
    }
    t.push(']');
    t
}

fn bond_token(mol: &Molecule, b: usize) -> &'static str {
    let bond = &mol.bonds[b];
    match bond.kind() {
        BondKind::Aromatic => "",
        BondKind::Double => "=",
        BondKind::Triple => "#",
        BondKind::Single => {
            if mol.atoms[bond.begin].aromatic && mol.atoms[bond.end].aromatic {
                "-"
            } else {
                ""
            }
        }
    }
}

fn ring_label(d: usize) -> String {
    if d < 10 {
        d.to_string()
    } else {
        format!("%{d:02}")
    }
}

/// Writes SMILES by depth-first traversal, preferring lower `priority` atoms
/// as roots and as branch order. Any total order yields a valid SMILES; the
/// canonical ranks yield the canonical one.
pub fn write_smiles(mol: &Molecule, priority: &[usize]) -> String {
    let n = mol.atom_count();
    let mut visited = vec![false; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| priority[i]);

    let mut pieces = Vec::new();
    for &start in &order {
        if visited[start] {
            continue;
        }
        // pass 1: spanning tree and ring-closure bonds
        let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut closures: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut is_closure = vec![false; mol.bond_count()];
        let mut tree = Tree {
            children: &mut children,
            closures: &mut closures,
            is_closure: &mut is_closure,
            visited: &mut visited,
        };
        dfs(mol, priority, start, usize::MAX, &mut tree);

        let mut out = String::new();
        let mut digits: Vec<Option<usize>> = vec![None; mol.bond_count()];
        let mut in_use: Vec<bool> = Vec::new();
        emit(mol, priority, start, &children, &closures, &mut digits, &mut in_use, &mut out);
        pieces.push(out);
    }
    pieces.join(".")
}

struct Tree<'a> {
    children: &'a mut [Vec<(usize, usize)>],
    closures: &'a mut [Vec<usize>],
    is_closure: &'a mut [bool],
    visited: &'a mut [bool],
}

fn dfs(mol: &Molecule, priority: &[usize], v: usize, via: usize, tree: &mut Tree<'_>) {
    tree.visited[v] = true;
    let mut nbrs: Vec<(usize, usize)> = mol.neighbors(v).to_vec();
    nbrs.sort_by_key(|&(w, _)| priority[w]);
    for (w, b) in nbrs {
        if b == via || tree.is_closure[b] {
            continue;
        }
        if tree.visited[w] {
            tree.is_closure[b] = true;
            tree.closures[v].push(b);
            tree.closures[w].push(b);
        } else {
            tree.children[v].push((w, b));
            dfs(mol, priority, w, b, tree);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn emit(
    mol: &Molecule,
    priority: &[usize],
    v: usize,
    children: &[Vec<(usize, usize)>],
    closures: &[Vec<usize>],
    digits: &mut [Option<usize>],
    in_use: &mut Vec<bool>,
    out: &mut String,
) {
    out.push_str(&atom_token(mol, v));
    let mut ring_bonds = closures[v].clone();
    ring_bonds.sort_by_key(|&b| priority[mol.bonds[b].other(v)]);
    // close rings opened earlier first, then open new ones
    for &b in &ring_bonds {
        if let Some(d) = digits[b] {
            out.push_str(&ring_label(d));
            in_use[d] = false;
        }
    }
    for &b in &ring_bonds {
        if digits[b].is_none() {
            let d = match in_use.iter().skip(1).position(|u| !u) {
                Some(p) => p + 1,
                None => {
                    if in_use.is_empty() {
                        in_use.push(true);
                    }
                    in_use.push(false);
                    in_use.len() - 1
                }
            };
            in_use[d] = true;
            digits[b] = Some(d);
            out.push_str(bond_token(mol, b));
            out.push_str(&ring_label(d));
        }
    }
    let kids = &children[v];
    for (k, &(w, b)) in kids.iter().enumerate() {
        let last = k + 1 == kids.len();
        if !last {
            out.push('(');
        }
        out.push_str(bond_token(mol, b));
        emit(mol, priority, w, children, closures, digits, in_use, out);
        if !last {
            out.push(')');
        }
    }
}
