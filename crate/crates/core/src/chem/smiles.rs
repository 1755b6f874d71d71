//! SMILES reader.
//!
//! Grammar: organic subset atoms, bracket atoms (isotope, element, H count,
//! charge, atom class), ring-closure digits and `%nn`, branches, bond symbols
//! `- = # :` and dot-disconnected components. Stereo marks (`/`, `\`, `@`) are
//! consumed and dropped.

use std::collections::BTreeMap;

use super::element;
use super::molecule::{Atom, Bond, Molecule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    Syntax,
    UnbalancedRing,
    UnbalancedBranch,
    UnknownElement,
    Valence,
    AromaticOutsideRing,
    DuplicateBond,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} (byte {offset})")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    fn new(kind: ParseErrorKind, offset: usize, message: impl Into<String>) -> Self {
        ParseError {
            kind,
            offset,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
}

struct RawBond {
    a: usize,
    b: usize,
    symbol: Option<BondSymbol>,
}

struct RingOpen {
    atom: usize,
    symbol: Option<BondSymbol>,
    offset: usize,
}

struct Reader<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    offsets: Vec<usize>,
    bonds: Vec<RawBond>,
}

pub fn parse_smiles(text: &str) -> Result<Molecule, ParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ParseError::new(ParseErrorKind::Empty, 0, "empty SMILES"));
    }
    let mut reader = Reader {
        text: trimmed.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        offsets: Vec::new(),
        bonds: Vec::new(),
    };
    reader.read()?;
    reader.finish()
}

impl<'a> Reader<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn peek_at(&self, ahead: usize) -> Option<u8> {
        self.text.get(self.pos + ahead).copied()
    }

    fn err(&self, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        ParseError::new(kind, self.pos, message)
    }

    fn read(&mut self) -> Result<(), ParseError> {
        let mut prev: Option<usize> = None;
        let mut pending: Option<(BondSymbol, usize)> = None;
        let mut branches: Vec<(Option<usize>, usize)> = Vec::new();
        let mut rings: BTreeMap<u32, RingOpen> = BTreeMap::new();

        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    if prev.is_none() || pending.is_some() {
                        return Err(self.err(ParseErrorKind::Syntax, "branch without a preceding atom"));
                    }
                    branches.push((prev, self.pos));
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return Err(self.err(ParseErrorKind::Syntax, "dangling bond before ')'"));
                    }
                    let Some((p, _)) = branches.pop() else {
                        return Err(self.err(ParseErrorKind::UnbalancedBranch, "unmatched ')'"));
                    };
                    prev = p;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if pending.is_some() {
                        return Err(self.err(ParseErrorKind::Syntax, "two consecutive bond symbols"));
                    }
                    let sym = match c {
                        b'=' => BondSymbol::Double,
                        b'#' => BondSymbol::Triple,
                        b':' => BondSymbol::Aromatic,
                        _ => BondSymbol::Single,
                    };
                    pending = Some((sym, self.pos));
                    self.pos += 1;
                }
                b'$' => return Err(self.err(ParseErrorKind::Syntax, "quadruple bonds are not supported")),
                b'.' => {
                    if pending.is_some() {
                        return Err(self.err(ParseErrorKind::Syntax, "bond symbol before '.'"));
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let start = self.pos;
                    let number = self.ring_number()?;
                    let Some(atom) = prev else {
                        return Err(ParseError::new(
                            ParseErrorKind::Syntax,
                            start,
                            "ring closure without a preceding atom",
                        ));
                    };
                    let symbol = pending.take().map(|p| p.0);
                    match rings.remove(&number) {
                        Some(open) => {
                            if open.atom == atom {
                                return Err(ParseError::new(
                                    ParseErrorKind::DuplicateBond,
                                    start,
                                    "ring closure to the same atom",
                                ));
                            }
                            let sym = match (open.symbol, symbol) {
                                (Some(x), Some(y)) if x != y => {
                                    return Err(ParseError::new(
                                        ParseErrorKind::Syntax,
                                        start,
                                        "conflicting ring-closure bond symbols",
                                    ))
                                }
                                (x, y) => x.or(y),
                            };
                            self.add_bond(open.atom, atom, sym, start)?;
                        }
                        None => {
                            rings.insert(
                                number,
                                RingOpen {
                                    atom,
                                    symbol,
                                    offset: start,
                                },
                            );
                        }
                    }
                }
                b'[' => {
                    let start = self.pos;
                    let atom = self.bracket_atom()?;
                    let idx = self.push_atom(atom, start);
                    if let Some(p) = prev {
                        let sym = pending.take();
                        self.add_bond(p, idx, sym.map(|s| s.0), start)?;
                    } else if pending.is_some() {
                        return Err(ParseError::new(ParseErrorKind::Syntax, start, "bond without a preceding atom"));
                    }
                    prev = Some(idx);
                }
                _ => {
                    let start = self.pos;
                    let atom = self.organic_atom()?;
                    let idx = self.push_atom(atom, start);
                    if let Some(p) = prev {
                        let sym = pending.take();
                        self.add_bond(p, idx, sym.map(|s| s.0), start)?;
                    } else if pending.is_some() {
                        return Err(ParseError::new(ParseErrorKind::Syntax, start, "bond without a preceding atom"));
                    }
                    prev = Some(idx);
                }
            }
        }
        if let Some((_, off)) = pending {
            return Err(ParseError::new(ParseErrorKind::Syntax, off, "dangling bond at end of input"));
        }
        if let Some((_, off)) = branches.first() {
            return Err(ParseError::new(ParseErrorKind::UnbalancedBranch, *off, "unclosed '('"));
        }
        if let Some(open) = rings.values().min_by_key(|o| o.offset) {
            return Err(ParseError::new(ParseErrorKind::UnbalancedRing, open.offset, "unclosed ring bond"));
        }
        if self.atoms.is_empty() {
            return Err(ParseError::new(ParseErrorKind::Empty, 0, "no atoms"));
        }
        Ok(())
    }

    fn ring_number(&mut self) -> Result<u32, ParseError> {
        if self.peek() == Some(b'%') {
            let (Some(a), Some(b)) = (self.peek_at(1), self.peek_at(2)) else {
                return Err(self.err(ParseErrorKind::Syntax, "'%' must be followed by two digits"));
            };
            if !a.is_ascii_digit() || !b.is_ascii_digit() {
                return Err(self.err(ParseErrorKind::Syntax, "'%' must be followed by two digits"));
            }
            self.pos += 3;
            Ok(((a - b'0') * 10 + (b - b'0')) as u32)
        } else {
            let d = self.peek().unwrap() - b'0';
            self.pos += 1;
            Ok(d as u32)
        }
    }

    fn push_atom(&mut self, atom: Atom, offset: usize) -> usize {
        self.atoms.push(atom);
        self.offsets.push(offset);
        self.atoms.len() - 1
    }

    fn add_bond(&mut self, a: usize, b: usize, symbol: Option<BondSymbol>, offset: usize) -> Result<(), ParseError> {
        let dup = self
            .bonds
            .iter()
            .any(|r| (r.a == a && r.b == b) || (r.a == b && r.b == a));
        if dup {
            return Err(ParseError::new(ParseErrorKind::DuplicateBond, offset, "duplicate bond"));
        }
        self.bonds.push(RawBond { a, b, symbol });
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, ParseError> {
        let c = self.peek().unwrap();
        let (z, aromatic, len) = match (c, self.peek_at(1)) {
            (b'C', Some(b'l')) => (17, false, 2),
            (b'B', Some(b'r')) => (35, false, 2),
            (b'B', _) => (5, false, 1),
            (b'C', _) => (6, false, 1),
            (b'N', _) => (7, false, 1),
            (b'O', _) => (8, false, 1),
            (b'P', _) => (15, false, 1),
            (b'S', _) => (16, false, 1),
            (b'F', _) => (9, false, 1),
            (b'I', _) => (53, false, 1),
            (b'b', _) => (5, true, 1),
            (b'c', _) => (6, true, 1),
            (b'n', _) => (7, true, 1),
            (b'o', _) => (8, true, 1),
            (b'p', _) => (15, true, 1),
            (b's', _) => (16, true, 1),
            (b'*', _) => (0, false, 1),
            _ => {
                return Err(self.err(
                    ParseErrorKind::UnknownElement,
                    format!("unexpected character '{}'", c as char),
                ))
            }
        };
        self.pos += len;
        Ok(Atom {
            element: z,
            charge: 0,
            hydrogens: 0,
            aromatic,
            isotope: None,
            in_ring: false,
            bracket: false,
        })
    }

    fn digits(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.text[start..self.pos]).ok()?.parse().ok()
    }

    fn bracket_atom(&mut self) -> Result<Atom, ParseError> {
        let open = self.pos;
        self.pos += 1;
        let isotope = self.digits().map(|v| v as u16);

        let (z, aromatic) = self.bracket_symbol()?;

        // chirality: @, @@, @TH1, @AL2, @SP3, @TB10, @OH25
        while self.peek() == Some(b'@') {
            self.pos += 1;
        }
        if let (Some(a), Some(b)) = (self.peek(), self.peek_at(1)) {
            let tag = [a, b];
            if matches!(&tag, b"TH" | b"AL" | b"SP" | b"TB" | b"OH") && self.text[open..self.pos].contains(&b'@') {
                self.pos += 2;
                self.digits();
            }
        }

        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = self.digits().unwrap_or(1) as u8;
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.digits() {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    charge += unit;
                    self.pos += 1;
                }
            }
        }
        if charge.abs() > 15 {
            return Err(self.err(ParseErrorKind::Syntax, "charge out of range"));
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.digits().is_none() {
                return Err(self.err(ParseErrorKind::Syntax, "atom class needs digits"));
            }
        }
        if self.peek() != Some(b']') {
            return Err(self.err(ParseErrorKind::Syntax, "expected ']'"));
        }
        self.pos += 1;
        Ok(Atom {
            element: z,
            charge: charge as i8,
            hydrogens,
            aromatic,
            isotope,
            in_ring: false,
            bracket: true,
        })
    }

    fn bracket_symbol(&mut self) -> Result<(u8, bool), ParseError> {
        let Some(c) = self.peek() else {
            return Err(self.err(ParseErrorKind::Syntax, "unterminated bracket atom"));
        };
        if c == b'*' {
            self.pos += 1;
            return Ok((0, false));
        }
        if c.is_ascii_lowercase() {
            for (sym, z) in [("se", 34u8), ("as", 33), ("b", 5), ("c", 6), ("n", 7), ("o", 8), ("p", 15), ("s", 16)] {
                if self.text[self.pos..].starts_with(sym.as_bytes()) {
                    self.pos += sym.len();
                    return Ok((z, true));
                }
            }
            return Err(self.err(ParseErrorKind::UnknownElement, "unknown aromatic element"));
        }
        if c.is_ascii_uppercase() {
            if let Some(d) = self.peek_at(1).filter(|d| d.is_ascii_lowercase()) {
                let two = [c, d];
                if let Some(z) = element::atomic_number(std::str::from_utf8(&two).unwrap()) {
                    self.pos += 2;
                    return Ok((z, false));
                }
            }
            let one = [c];
            if let Some(z) = element::atomic_number(std::str::from_utf8(&one).unwrap()) {
                self.pos += 1;
                return Ok((z, false));
            }
        }
        Err(self.err(ParseErrorKind::UnknownElement, "unknown element symbol"))
    }

    fn finish(self) -> Result<Molecule, ParseError> {
        let Reader { atoms, offsets, bonds: raw, .. } = self;
        let bonds: Vec<Bond> = raw
            .iter()
            .map(|r| {
                let both_aromatic = atoms[r.a].aromatic && atoms[r.b].aromatic;
                let (order, aromatic) = match r.symbol {
                    Some(BondSymbol::Double) => (2, false),
                    Some(BondSymbol::Triple) => (3, false),
                    Some(BondSymbol::Single) => (1, false),
                    Some(BondSymbol::Aromatic) => (1, both_aromatic),
                    None => (1, both_aromatic),
                };
                Bond {
                    begin: r.a,
                    end: r.b,
                    order,
                    aromatic,
                    in_ring: false,
                }
            })
            .collect();
        let mut mol = Molecule::from_parts(atoms, bonds);

        for (i, atom) in mol.atoms.iter().enumerate() {
            if atom.aromatic && !atom.in_ring {
                return Err(ParseError::new(
                    ParseErrorKind::AromaticOutsideRing,
                    offsets[i],
                    "aromatic atom outside a ring",
                ));
            }
        }
        for b in mol.bonds.iter_mut() {
            if b.aromatic && !b.in_ring {
                b.aromatic = false;
            }
        }

        for i in 0..mol.atoms.len() {
            if mol.atoms[i].bracket || mol.atoms[i].element == 0 {
                continue;
            }
            let valences = element::organic_valences(mol.atoms[i].element)
                .expect("organic subset atoms have default valences");
            let used = mol.bond_order_sum(i);
            let h = if mol.atoms[i].aromatic {
                (valences[0] as u32).saturating_sub(used + 1)
            } else {
                match valences.iter().find(|&&v| v as u32 >= used) {
                    Some(&v) => v as u32 - used,
                    None => {
                        return Err(ParseError::new(
                            ParseErrorKind::Valence,
                            offsets[i],
                            format!("valence {} exceeds the allowed maximum for {}", used, mol.atoms[i].symbol()),
                        ))
                    }
                }
            };
            mol.atoms[i].hydrogens = h as u8;
        }

        promote_kekule_benzenoids(&mut mol);
        Ok(mol)
    }
}

/// Marks six-membered all-carbon rings drawn with alternating single/double
/// bonds as aromatic. Repeats so fused systems promote ring by ring.
pub(crate) fn promote_kekule_benzenoids(mol: &mut Molecule) {
    loop {
        let mut changed = false;
        for r in 0..mol.rings.len() {
            let ring = mol.rings[r].clone();
            if ring.len() != 6 {
                continue;
            }
            if ring.iter().all(|&a| mol.atoms[a].aromatic) {
                continue;
            }
            if ring.iter().any(|&a| mol.atoms[a].element != 6 || mol.atoms[a].charge != 0) {
                continue;
            }
            let ring_bonds: Vec<usize> = (0..6)
                .map(|i| mol.bond_between(ring[i], ring[(i + 1) % 6]))
                .collect::<Option<Vec<_>>>()
                .unwrap_or_default();
            if ring_bonds.len() != 6 || ring_bonds.iter().any(|&b| mol.bonds[b].order == 3) {
                continue;
            }
            let ok = ring.iter().all(|&a| {
                if mol.atoms[a].aromatic {
                    return true;
                }
                let doubles: Vec<usize> = mol
                    .neighbors(a)
                    .iter()
                    .filter(|&&(_, b)| mol.bonds[b].order == 2 && !mol.bonds[b].aromatic)
                    .map(|&(_, b)| b)
                    .collect();
                doubles.len() == 1 && ring_bonds.contains(&doubles[0])
            });
            if !ok {
                continue;
            }
            for &a in &ring {
                mol.atoms[a].aromatic = true;
            }
            for &b in &ring_bonds {
                mol.bonds[b].aromatic = true;
                mol.bonds[b].order = 1;
            }
            changed = true;
        }
        if !changed {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ethanol() {
        let m = parse_smiles("CCO").unwrap();
        assert_eq!(m.atom_count(), 3);
        assert_eq!(m.bond_count(), 2);
        assert!(m.bonds.iter().all(|b| b.order == 1 && !b.aromatic));
        assert_eq!(m.atoms[2].hydrogens, 1);
        assert_eq!(m.atoms[0].hydrogens, 3);
        assert_eq!(m.atoms[1].hydrogens, 2);
    }

    #[test]
    fn benzene_forms() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(m.rings.len(), 1);
        assert!(m.atoms.iter().all(|a| a.aromatic && a.hydrogens == 1));
        let k = parse_smiles("C1=CC=CC=C1").unwrap();
        assert!(k.atoms.iter().all(|a| a.aromatic && a.hydrogens == 1));
        assert!(k.bonds.iter().all(|b| b.aromatic));
    }

    #[test]
    fn kekule_naphthalene_promotes_both_rings() {
        let m = parse_smiles("C1=CC=C2C=CC=CC2=C1").unwrap();
        assert!(m.atoms.iter().all(|a| a.aromatic));
        let fusion_single = parse_smiles("C1=CC2=CC=CC=C2C=C1").unwrap();
        assert!(fusion_single.atoms.iter().all(|a| a.aromatic));
    }

    #[test]
    fn non_benzenoid_rings_stay_aliphatic() {
        let m = parse_smiles("C1=CC=CCC1").unwrap();
        assert!(m.atoms.iter().all(|a| !a.aromatic));
        let q = parse_smiles("O=C1C=CC(=O)C=C1").unwrap();
        assert!(q.atoms.iter().all(|a| !a.aromatic));
    }

    #[test]
    fn bracket_atoms() {
        let m = parse_smiles("[NH4+]").unwrap();
        assert_eq!(m.atoms[0].charge, 1);
        assert_eq!(m.atoms[0].hydrogens, 4);
        let m = parse_smiles("[13CH3][O-]").unwrap();
        assert_eq!(m.atoms[0].isotope, Some(13));
        assert_eq!(m.atoms[1].charge, -1);
        assert_eq!(m.atoms[1].hydrogens, 0);
        let m = parse_smiles("[Fe++]").unwrap();
        assert_eq!(m.atoms[0].charge, 2);
        let m = parse_smiles("c1cc[nH]c1").unwrap();
        assert_eq!(m.atoms[3].hydrogens, 1);
        let m = parse_smiles("[C@@H](F)(Cl)Br").unwrap();
        assert_eq!(m.atoms[0].hydrogens, 1);
        let m = parse_smiles("[CH3:7]C").unwrap();
        assert_eq!(m.atoms[0].hydrogens, 3);
    }

    #[test]
    fn aromatic_heteroatoms() {
        let m = parse_smiles("c1ccsc1").unwrap();
        assert_eq!(m.atoms[3].hydrogens, 0);
        let m = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(m.atoms[3].hydrogens, 0);
        let m = parse_smiles("O=c1cccc[nH]1").unwrap();
        assert_eq!(m.atoms[1].hydrogens, 0);
    }

    #[test]
    fn stereo_and_two_digit_rings() {
        let m = parse_smiles("F/C=C/F").unwrap();
        assert_eq!(m.bonds[1].order, 2);
        let m = parse_smiles("C%10CCCCC%10").unwrap();
        assert_eq!(m.rings.len(), 1);
    }

    #[test]
    fn biphenyl_link_is_not_aromatic() {
        let m = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        assert_eq!(m.bonds.iter().filter(|b| !b.aromatic).count(), 1);
    }

    #[test]
    fn salts_have_components() {
        let m = parse_smiles("CC(=O)[O-].[Na+]").unwrap();
        assert_eq!(m.components().len(), 2);
        assert_eq!(m.largest_fragment().atom_count(), 4);
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse_smiles("C1CC").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnbalancedRing);
        assert_eq!(e.offset, 1);
        let e = parse_smiles("CC(C").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnbalancedBranch);
        assert_eq!(e.offset, 2);
        let e = parse_smiles("CC)C").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnbalancedBranch);
        let e = parse_smiles("C[Xx]").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownElement);
        assert_eq!(e.offset, 2);
        let e = parse_smiles("CQ").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownElement);
        assert_eq!(e.offset, 1);
        let e = parse_smiles("C(C)(C)(C)(C)C").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Valence);
        let e = parse_smiles("O=O=O").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Valence);
        assert_eq!(parse_smiles("").unwrap_err().kind, ParseErrorKind::Empty);
        assert_eq!(parse_smiles("cc").unwrap_err().kind, ParseErrorKind::AromaticOutsideRing);
        assert_eq!(parse_smiles("C11").unwrap_err().kind, ParseErrorKind::DuplicateBond);
        assert_eq!(parse_smiles("C1CC1C1").unwrap_err().kind, ParseErrorKind::UnbalancedRing);
    }

    #[test]
    fn hypervalent_organic_atoms() {
        let m = parse_smiles("CS(=O)(=O)C").unwrap();
        assert_eq!(m.atoms[1].hydrogens, 0);
        let m = parse_smiles("OP(=O)(O)O").unwrap();
        assert_eq!(m.atoms[1].hydrogens, 0);
        let m = parse_smiles("CN(=O)=O").unwrap();
        assert_eq!(m.atoms[1].hydrogens, 0);
    }
}
