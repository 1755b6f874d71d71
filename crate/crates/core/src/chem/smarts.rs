//! SMARTS subset: atom primitives (`*`, `a`, `A`, element symbols, `#n`,
//! `D`, `H`, `X`, `R`, charge), bond primitives (`- = # : ~ @`), the logical
//! operators `! & , ;`, branches, ring closures and `.`-separated components.
//! Recursive SMARTS (`$(...)`) is rejected at compile time.

use std::collections::{BTreeMap, HashSet};

use super::element;
use super::molecule::{BondKind, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid SMARTS at byte {offset}: {message}")]
pub struct SmartsError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum AtomPrim {
    Any,
    Aromatic,
    Aliphatic,
    AtomicNumber(u8),
    /// Element with a required aromaticity (`C` vs `c`).
    Element(u8, bool),
    Charge(i8),
    Degree(u8),
    TotalH(u8),
    Connectivity(u8),
    InRing,
    RingCount(u8),
}

#[derive(Debug, Clone, PartialEq)]
enum Expr<P> {
    Prim(P),
    Not(Box<Expr<P>>),
    And(Vec<Expr<P>>),
    Or(Vec<Expr<P>>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BondPrim {
    Single,
    Double,
    Triple,
    Aromatic,
    Any,
    Ring,
    /// No bond symbol written: single or aromatic.
    Implicit,
}

#[derive(Debug, Clone)]
struct QueryBond {
    a: usize,
    b: usize,
    expr: Expr<BondPrim>,
}

/// A compiled substructure query.
#[derive(Debug, Clone)]
pub struct SmartsQuery {
    atoms: Vec<Expr<AtomPrim>>,
    bonds: Vec<QueryBond>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// Per-molecule facts the matcher reads repeatedly.
struct Target<'m> {
    mol: &'m Molecule,
    ring_counts: Vec<u8>,
}

impl<'m> Target<'m> {
    fn new(mol: &'m Molecule) -> Self {
        let mut ring_counts = vec![0u8; mol.atom_count()];
        for ring in &mol.rings {
            for &a in ring {
                ring_counts[a] = ring_counts[a].saturating_add(1);
            }
        }
        Target { mol, ring_counts }
    }

    fn atom_matches(&self, expr: &Expr<AtomPrim>, i: usize) -> bool {
        match expr {
            Expr::Prim(p) => self.atom_prim(p, i),
            Expr::Not(e) => !self.atom_matches(e, i),
            Expr::And(es) => es.iter().all(|e| self.atom_matches(e, i)),
            Expr::Or(es) => es.iter().any(|e| self.atom_matches(e, i)),
        }
    }

    fn atom_prim(&self, p: &AtomPrim, i: usize) -> bool {
        let a = &self.mol.atoms[i];
        match *p {
            AtomPrim::Any => true,
            AtomPrim::Aromatic => a.aromatic,
            AtomPrim::Aliphatic => !a.aromatic,
            AtomPrim::AtomicNumber(z) => a.element == z,
            AtomPrim::Element(z, arom) => a.element == z && a.aromatic == arom,
            AtomPrim::Charge(c) => a.charge == c,
            AtomPrim::Degree(d) => self.mol.degree(i) == d as usize,
            AtomPrim::TotalH(h) => a.hydrogens == h,
            AtomPrim::Connectivity(x) => self.mol.degree(i) + a.hydrogens as usize == x as usize,
            AtomPrim::InRing => a.in_ring,
            AtomPrim::RingCount(n) => self.ring_counts[i] == n,
        }
    }

    fn bond_matches(&self, expr: &Expr<BondPrim>, b: usize) -> bool {
        match expr {
            Expr::Prim(p) => {
                let bond = &self.mol.bonds[b];
                match p {
                    BondPrim::Single => bond.kind() == BondKind::Single,
                    BondPrim::Double => bond.kind() == BondKind::Double,
                    BondPrim::Triple => bond.kind() == BondKind::Triple,
                    BondPrim::Aromatic => bond.kind() == BondKind::Aromatic,
                    BondPrim::Any => true,
                    BondPrim::Ring => bond.in_ring,
                    BondPrim::Implicit => matches!(bond.kind(), BondKind::Single | BondKind::Aromatic),
                }
            }
            Expr::Not(e) => !self.bond_matches(e, b),
            Expr::And(es) => es.iter().all(|e| self.bond_matches(e, b)),
            Expr::Or(es) => es.iter().any(|e| self.bond_matches(e, b)),
        }
    }
}

impl SmartsQuery {
    pub fn compile(text: &str) -> Result<SmartsQuery, SmartsError> {
        Compiler::new(text).run()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Number of distinct target atom sets covered by an embedding.
    pub fn count_matches(&self, mol: &Molecule) -> usize {
        let mut sets = HashSet::new();
        self.embed(mol, &mut |mapping| {
            let mut key = mapping.to_vec();
            key.sort_unstable();
            sets.insert(key);
            true
        });
        sets.len()
    }

    pub fn has_match(&self, mol: &Molecule) -> bool {
        let mut found = false;
        self.embed(mol, &mut |_| {
            found = true;
            false
        });
        found
    }

    /// Atoms that the first query atom can be mapped onto in some embedding.
    pub fn root_matches(&self, mol: &Molecule) -> Vec<bool> {
        let mut hits = vec![false; mol.atom_count()];
        if self.atoms.is_empty() || mol.atom_count() < self.atoms.len() {
            return hits;
        }
        let target = Target::new(mol);
        let mut mapping = vec![usize::MAX; self.atoms.len()];
        let mut used = vec![false; mol.atom_count()];
        for (root, hit) in hits.iter_mut().enumerate() {
            if !target.atom_matches(&self.atoms[0], root) {
                continue;
            }
            mapping[0] = root;
            used[root] = true;
            let mut found = false;
            self.extend(&target, 1, &mut mapping, &mut used, &mut |_| {
                found = true;
                false
            });
            used[root] = false;
            *hit = found;
        }
        hits
    }

    /// Enumerates embeddings; the callback returns `false` to stop early.
    fn embed(&self, mol: &Molecule, visit: &mut dyn FnMut(&[usize]) -> bool) {
        if self.atoms.is_empty() || mol.atom_count() < self.atoms.len() {
            return;
        }
        let target = Target::new(mol);
        let mut mapping = vec![usize::MAX; self.atoms.len()];
        let mut used = vec![false; mol.atom_count()];
        self.extend(&target, 0, &mut mapping, &mut used, visit);
    }

    fn extend(
        &self,
        target: &Target<'_>,
        depth: usize,
        mapping: &mut Vec<usize>,
        used: &mut Vec<bool>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if depth == self.atoms.len() {
            return visit(mapping);
        }
        // query atoms are numbered so that every atom except a component root
        // has a lower-numbered neighbor
        let anchor = self.adjacency[depth]
            .iter()
            .filter(|&&(q, _)| q < depth)
            .map(|&(q, _)| q)
            .min();
        let candidates: Vec<usize> = match anchor {
            Some(q) => target.mol.neighbors(mapping[q]).iter().map(|&(t, _)| t).collect(),
            None => (0..target.mol.atom_count()).collect(),
        };
        for t in candidates {
            if used[t] || !target.atom_matches(&self.atoms[depth], t) {
                continue;
            }
            let bonds_ok = self.adjacency[depth]
                .iter()
                .filter(|&&(q, _)| q < depth)
                .all(|&(q, qb)| match target.mol.bond_between(mapping[q], t) {
                    Some(tb) => target.bond_matches(&self.bonds[qb].expr, tb),
                    None => false,
                });
            if !bonds_ok {
                continue;
            }
            mapping[depth] = t;
            used[t] = true;
            let go_on = self.extend(target, depth + 1, mapping, used, visit);
            used[t] = false;
            mapping[depth] = usize::MAX;
            if !go_on {
                return false;
            }
        }
        true
    }
}

struct Compiler<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Expr<AtomPrim>>,
    bonds: Vec<QueryBond>,
}

impl<'a> Compiler<'a> {
    fn new(text: &'a str) -> Self {
        Compiler {
            text: text.trim().as_bytes(),
            pos: 0,
            atoms: Vec::new(),
            bonds: Vec::new(),
        }
    }

    fn err(&self, message: impl Into<String>) -> SmartsError {
        SmartsError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<u8> {
        self.text.get(self.pos + k).copied()
    }

    fn run(mut self) -> Result<SmartsQuery, SmartsError> {
        if self.text.is_empty() {
            return Err(self.err("empty pattern"));
        }
        let mut prev: Option<usize> = None;
        let mut pending: Option<Expr<BondPrim>> = None;
        let mut branches: Vec<Option<usize>> = Vec::new();
        let mut rings: BTreeMap<u32, (usize, Option<Expr<BondPrim>>)> = BTreeMap::new();

        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    if prev.is_none() {
                        return Err(self.err("branch without preceding atom"));
                    }
                    branches.push(prev);
                    self.pos += 1;
                }
                b')' => {
                    prev = branches.pop().ok_or_else(|| self.err("unmatched ')'"))?;
                    self.pos += 1;
                }
                b'.' => {
                    prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'~' | b'@' | b'!' => {
                    if pending.is_some() {
                        return Err(self.err("unexpected bond expression"));
                    }
                    pending = Some(self.bond_expr()?);
                }
                b'0'..=b'9' | b'%' => {
                    let number = if c == b'%' {
                        let (Some(a), Some(b)) = (self.peek_at(1), self.peek_at(2)) else {
                            return Err(self.err("'%' needs two digits"));
                        };
                        if !a.is_ascii_digit() || !b.is_ascii_digit() {
                            return Err(self.err("'%' needs two digits"));
                        }
                        self.pos += 3;
                        ((a - b'0') * 10 + (b - b'0')) as u32
                    } else {
                        self.pos += 1;
                        (c - b'0') as u32
                    };
                    let atom = prev.ok_or_else(|| self.err("ring closure without atom"))?;
                    let expr = pending.take();
                    match rings.remove(&number) {
                        Some((open, open_expr)) => {
                            let e = expr.or(open_expr).unwrap_or(Expr::Prim(BondPrim::Implicit));
                            self.bonds.push(QueryBond { a: open, b: atom, expr: e });
                        }
                        None => {
                            rings.insert(number, (atom, expr));
                        }
                    }
                }
                _ => {
                    let expr = if c == b'[' {
                        self.bracket_atom()?
                    } else {
                        self.bare_atom()?
                    };
                    self.atoms.push(expr);
                    let idx = self.atoms.len() - 1;
                    if let Some(p) = prev {
                        let e = pending.take().unwrap_or(Expr::Prim(BondPrim::Implicit));
                        self.bonds.push(QueryBond { a: p, b: idx, expr: e });
                    } else if pending.is_some() {
                        return Err(self.err("bond without preceding atom"));
                    }
                    prev = Some(idx);
                }
            }
        }
        if pending.is_some() {
            return Err(self.err("dangling bond"));
        }
        if !branches.is_empty() {
            return Err(self.err("unclosed '('"));
        }
        if !rings.is_empty() {
            return Err(self.err("unclosed ring bond"));
        }
        if self.atoms.is_empty() {
            return Err(self.err("pattern has no atoms"));
        }
        let mut adjacency = vec![Vec::new(); self.atoms.len()];
        for (i, b) in self.bonds.iter().enumerate() {
            if b.a == b.b {
                return Err(self.err("ring closure to the same atom"));
            }
            adjacency[b.a].push((b.b, i));
            adjacency[b.b].push((b.a, i));
        }
        Ok(SmartsQuery {
            atoms: self.atoms,
            bonds: self.bonds,
            adjacency,
        })
    }

    fn bare_atom(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        let c = self.peek().unwrap();
        let two = (c, self.peek_at(1));
        let (prim, len) = match two {
            (b'C', Some(b'l')) => (AtomPrim::AtomicNumber(17), 2),
            (b'B', Some(b'r')) => (AtomPrim::AtomicNumber(35), 2),
            (b'*', _) => (AtomPrim::Any, 1),
            (b'a', _) => (AtomPrim::Aromatic, 1),
            (b'A', _) => (AtomPrim::Aliphatic, 1),
            (b'B', _) => (AtomPrim::Element(5, false), 1),
            (b'C', _) => (AtomPrim::Element(6, false), 1),
            (b'N', _) => (AtomPrim::Element(7, false), 1),
            (b'O', _) => (AtomPrim::Element(8, false), 1),
            (b'P', _) => (AtomPrim::Element(15, false), 1),
            (b'S', _) => (AtomPrim::Element(16, false), 1),
            (b'F', _) => (AtomPrim::AtomicNumber(9), 1),
            (b'I', _) => (AtomPrim::AtomicNumber(53), 1),
            (b'b', _) => (AtomPrim::Element(5, true), 1),
            (b'c', _) => (AtomPrim::Element(6, true), 1),
            (b'n', _) => (AtomPrim::Element(7, true), 1),
            (b'o', _) => (AtomPrim::Element(8, true), 1),
            (b'p', _) => (AtomPrim::Element(15, true), 1),
            (b's', _) => (AtomPrim::Element(16, true), 1),
            _ => return Err(self.err(format!("unexpected character '{}'", c as char))),
        };
        self.pos += len;
        Ok(Expr::Prim(prim))
    }

    fn bracket_atom(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        self.pos += 1;
        let e = self.atom_low()?;
        if self.peek() != Some(b']') {
            return Err(self.err("expected ']'"));
        }
        self.pos += 1;
        Ok(e)
    }

    fn atom_low(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        let mut parts = vec![self.atom_or()?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            parts.push(self.atom_or()?);
        }
        Ok(collapse(parts, Expr::And))
    }

    fn atom_or(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        let mut parts = vec![self.atom_high()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            parts.push(self.atom_high()?);
        }
        Ok(collapse(parts, Expr::Or))
    }

    fn atom_high(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        let mut parts = vec![self.atom_unary()?];
        loop {
            match self.peek() {
                Some(b'&') => {
                    self.pos += 1;
                    parts.push(self.atom_unary()?);
                }
                Some(b']' | b',' | b';') | None => break,
                Some(_) => parts.push(self.atom_unary()?),
            }
        }
        Ok(collapse(parts, Expr::And))
    }

    fn atom_unary(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        if self.peek() == Some(b'!') {
            self.pos += 1;
            return Ok(Expr::Not(Box::new(self.atom_unary()?)));
        }
        self.atom_primitive()
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            None
        } else {
            std::str::from_utf8(&self.text[start..self.pos]).ok()?.parse().ok()
        }
    }

    fn atom_primitive(&mut self) -> Result<Expr<AtomPrim>, SmartsError> {
        let Some(c) = self.peek() else {
            return Err(self.err("unterminated atom expression"));
        };
        let start = self.pos;
        // two-letter element symbols win over single-letter primitives (Hf, Dy, Rb, Xe)
        if c.is_ascii_uppercase() {
            if let Some(d) = self.peek_at(1).filter(|d| d.is_ascii_lowercase()) {
                let sym = [c, d];
                if let Some(z) = element::atomic_number(std::str::from_utf8(&sym).unwrap()) {
                    self.pos += 2;
                    return Ok(Expr::Prim(element_prim(z)));
                }
            }
        }
        let prim = match c {
            b'*' => {
                self.pos += 1;
                AtomPrim::Any
            }
            b'a' if self.peek_at(1) == Some(b's') => {
                self.pos += 2;
                AtomPrim::Element(33, true)
            }
            b'a' => {
                self.pos += 1;
                AtomPrim::Aromatic
            }
            b'A' => {
                self.pos += 1;
                AtomPrim::Aliphatic
            }
            b'#' => {
                self.pos += 1;
                let z = self.number().ok_or_else(|| self.err("'#' needs an atomic number"))?;
                if z > element::MAX_ATOMIC_NUMBER as u32 {
                    return Err(self.err("atomic number out of range"));
                }
                AtomPrim::AtomicNumber(z as u8)
            }
            b'D' | b'H' | b'X' => {
                self.pos += 1;
                let n = self.number().unwrap_or(1).min(255) as u8;
                match c {
                    b'D' => AtomPrim::Degree(n),
                    b'H' => AtomPrim::TotalH(n),
                    _ => AtomPrim::Connectivity(n),
                }
            }
            b'R' => {
                self.pos += 1;
                match self.number() {
                    None => AtomPrim::InRing,
                    Some(0) => return Ok(Expr::Not(Box::new(Expr::Prim(AtomPrim::InRing)))),
                    Some(n) => AtomPrim::RingCount(n.min(255) as u8),
                }
            }
            b'+' | b'-' => {
                let unit: i32 = if c == b'+' { 1 } else { -1 };
                self.pos += 1;
                let charge = match self.number() {
                    Some(n) => unit * n as i32,
                    None => {
                        let mut q = unit;
                        while self.peek() == Some(c) {
                            self.pos += 1;
                            q += unit;
                        }
                        q
                    }
                };
                AtomPrim::Charge(charge.clamp(-15, 15) as i8)
            }
            b'@' => {
                // chirality is not perceived; accept and ignore
                while self.peek() == Some(b'@') {
                    self.pos += 1;
                }
                AtomPrim::Any
            }
            b'$' => return Err(self.err("recursive SMARTS is not supported")),
            b'c' | b'n' | b'o' | b'p' | b's' | b'b' => {
                if c == b's' && self.peek_at(1) == Some(b'e') {
                    self.pos += 2;
                    AtomPrim::Element(34, true)
                } else {
                    self.pos += 1;
                    let z = match c {
                        b'c' => 6,
                        b'n' => 7,
                        b'o' => 8,
                        b'p' => 15,
                        b's' => 16,
                        _ => 5,
                    };
                    AtomPrim::Element(z, true)
                }
            }
            c if c.is_ascii_uppercase() => {
                let sym = [c];
                let z = element::atomic_number(std::str::from_utf8(&sym).unwrap())
                    .ok_or_else(|| self.err("unknown element"))?;
                self.pos += 1;
                element_prim(z)
            }
            _ => {
                return Err(SmartsError {
                    offset: start,
                    message: format!("unexpected character '{}'", c as char),
                })
            }
        };
        Ok(Expr::Prim(prim))
    }

    fn bond_expr(&mut self) -> Result<Expr<BondPrim>, SmartsError> {
        let mut parts = vec![self.bond_or()?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            parts.push(self.bond_or()?);
        }
        Ok(collapse(parts, Expr::And))
    }

    fn bond_or(&mut self) -> Result<Expr<BondPrim>, SmartsError> {
        let mut parts = vec![self.bond_high()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            parts.push(self.bond_high()?);
        }
        Ok(collapse(parts, Expr::Or))
    }

    fn bond_high(&mut self) -> Result<Expr<BondPrim>, SmartsError> {
        let mut parts = vec![self.bond_unary()?];
        loop {
            match self.peek() {
                Some(b'&') => {
                    self.pos += 1;
                    parts.push(self.bond_unary()?);
                }
                Some(b'-' | b'=' | b'#' | b':' | b'~' | b'@' | b'!') => parts.push(self.bond_unary()?),
                _ => break,
            }
        }
        Ok(collapse(parts, Expr::And))
    }

    fn bond_unary(&mut self) -> Result<Expr<BondPrim>, SmartsError> {
        let Some(c) = self.peek() else {
            return Err(self.err("unterminated bond expression"));
        };
        self.pos += 1;
        let prim = match c {
            b'!' => return Ok(Expr::Not(Box::new(self.bond_unary()?))),
            b'-' => BondPrim::Single,
            b'=' => BondPrim::Double,
            b'#' => BondPrim::Triple,
            b':' => BondPrim::Aromatic,
            b'~' => BondPrim::Any,
            b'@' => BondPrim::Ring,
            _ => {
                self.pos -= 1;
                return Err(self.err("expected a bond primitive"));
            }
        };
        Ok(Expr::Prim(prim))
    }
}

fn element_prim(z: u8) -> AtomPrim {
    // uppercase symbols of elements that can be aromatic mean "aliphatic"
    if element::can_be_aromatic(z) {
        AtomPrim::Element(z, false)
    } else {
        AtomPrim::AtomicNumber(z)
    }
}

fn collapse<P>(mut parts: Vec<Expr<P>>, join: fn(Vec<Expr<P>>) -> Expr<P>) -> Expr<P> {
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        join(parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn count(smiles: &str, smarts: &str) -> usize {
        SmartsQuery::compile(smarts)
            .unwrap()
            .count_matches(&parse_smiles(smiles).unwrap())
    }

    #[test]
    fn element_and_aromaticity() {
        assert_eq!(count("c1ccccc1", "c1ccccc1"), 1);
        assert_eq!(count("c1ccccc1", "c"), 6);
        assert_eq!(count("c1ccccc1", "C"), 0);
        assert_eq!(count("c1ccccc1", "[#6]"), 6);
        assert_eq!(count("CCO", "[#8]"), 1);
        assert_eq!(count("CCO", "[OH]"), 1);
        assert_eq!(count("CCO", "[CH3]"), 1);
        assert_eq!(count("CCCl", "Cl"), 1);
        assert_eq!(count("CC(=O)O", "C=O"), 1);
        assert_eq!(count("CC(=O)O", "[#6]~[#8]"), 2);
    }

    #[test]
    fn nitro_group() {
        let nitro = "[N+](=O)[O-]";
        assert_eq!(count("CCO", nitro), 0);
        assert_eq!(count("O=[N+]([O-])c1ccccc1", nitro), 1);
        assert_eq!(count("O=[N+]([O-])c1ccc(cc1)[N+](=O)[O-]", nitro), 2);
    }

    #[test]
    fn logical_operators() {
        assert_eq!(count("CCN", "[!#6]"), 1);
        assert_eq!(count("CCNO", "[N,O]"), 2);
        assert_eq!(count("CC(C)(C)C", "[C;H3,H4]"), 4);
        assert_eq!(count("C[NH3+]", "[!+0]"), 1);
        assert_eq!(count("CCO", "[!#6;!#1;!H0]"), 1);
        assert_eq!(count("C1CCCCC1C", "[R]"), 6);
        assert_eq!(count("C1CCCCC1C", "[R0]"), 1);
        assert_eq!(count("C1CCC2CCCCC2C1", "[R2]"), 2);
        assert_eq!(count("CC#N", "[CX2]#N"), 1);
        assert_eq!(count("CC(C)C", "[D3]"), 1);
    }

    #[test]
    fn ring_bonds_and_rings() {
        assert_eq!(count("C1CCC1", "*1~*~*~*~1"), 1);
        assert_eq!(count("C1CCCC1", "*1~*~*~*~1"), 0);
        assert_eq!(count("c1ccccc1CC", "*@*!@*"), 2);
        assert_eq!(count("C1=CCCCC1", "[#6]=;@[#6]"), 1);
        assert_eq!(count("C=CCCC", "[#6]=;@[#6]"), 0);
        assert_eq!(count("c1ccccc1", "*1~*~*~*~*~*~1"), 1);
    }

    #[test]
    fn two_letter_elements_beat_primitives() {
        assert_eq!(count("[Hf]", "[Sc,Ti,Y,Zr,Hf]"), 1);
        assert_eq!(count("[Dy]", "[La,Dy]"), 1);
        assert_eq!(count("[Rb+]", "[Li,Na,K,Rb,Cs,Fr]"), 1);
        assert_eq!(count("CC", "[CH3]"), 2);
    }

    #[test]
    fn rooted_matches() {
        let q = SmartsQuery::compile("[CH2]O").unwrap();
        let hits = q.root_matches(&parse_smiles("CCOCC").unwrap());
        assert_eq!(hits, vec![false, true, false, true, false]);
    }

    #[test]
    fn disconnected_components() {
        assert_eq!(count("CCO.CCN", "O.N"), 1);
        assert!(SmartsQuery::compile("O.N").unwrap().has_match(&parse_smiles("OCCN").unwrap()));
    }

    #[test]
    fn compile_errors() {
        assert!(SmartsQuery::compile("[$(CC)]").is_err());
        assert!(SmartsQuery::compile("C(C").is_err());
        assert!(SmartsQuery::compile("C1CC").is_err());
        assert!(SmartsQuery::compile("[C").is_err());
        assert!(SmartsQuery::compile("").is_err());
        assert!(SmartsQuery::compile("[Qq]").is_err());
        assert!(SmartsQuery::compile("CC=").is_err());
    }
}
