use std::collections::BTreeMap;

use crate::elements;
use crate::graph::{
    parity_to_reference, Atom, BondType, DoubleBondStereo, Geometry, MolGraph, Parity, Slot,
};

use super::SmilesError;

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept bracketed placeholders such as `[R1]` or `[Ph]`.
    pub allow_labels: bool,
    /// Accept `[NAME?VAR]` frequency variables.
    pub allow_freq_vars: bool,
}

impl ParseOptions {
    pub fn strict() -> Self {
        ParseOptions::default()
    }

    pub fn with_labels() -> Self {
        ParseOptions {
            allow_labels: true,
            allow_freq_vars: false,
        }
    }

    pub fn markush() -> Self {
        ParseOptions {
            allow_labels: true,
            allow_freq_vars: true,
        }
    }
}

/// Parser output with the bookkeeping needed by Markush extensions.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedSmiles {
    pub graph: MolGraph,
    /// Ring-closure bond indices, ordered by where their digit was opened.
    pub ring_closures: Vec<usize>,
    pub freq_vars: BTreeMap<usize, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
    Up,
    Down,
}

impl BondSym {
    fn from_byte(c: u8) -> Option<BondSym> {
        Some(match c {
            b'-' => BondSym::Single,
            b'=' => BondSym::Double,
            b'#' => BondSym::Triple,
            b':' => BondSym::Aromatic,
            b'/' => BondSym::Up,
            b'\\' => BondSym::Down,
            _ => return None,
        })
    }

    fn is_directional(self) -> bool {
        matches!(self, BondSym::Up | BondSym::Down)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum ListEntry {
    Slot(Slot),
    PendingRing(usize),
}

struct RingOpen {
    atom: usize,
    sym: Option<BondSym>,
    offset: usize,
    seq: usize,
}

/// Directional mark on a single bond: the character was written between
/// `from` (earlier) and `to` (later).
struct Mark {
    from: usize,
    up: bool,
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    opts: ParseOptions,
    graph: MolGraph,
    chirality: BTreeMap<usize, Parity>,
    from_of: Vec<Option<usize>>,
    listing: Vec<Vec<ListEntry>>,
    marks: BTreeMap<usize, Mark>,
    freq_vars: BTreeMap<usize, String>,
    rings: BTreeMap<u32, RingOpen>,
    ring_seq: Vec<Option<usize>>,
}

pub fn parse_with(text: &str, opts: ParseOptions) -> Result<ParsedSmiles, SmilesError> {
    Parser {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        opts,
        graph: MolGraph::new(),
        chirality: BTreeMap::new(),
        from_of: Vec::new(),
        listing: Vec::new(),
        marks: BTreeMap::new(),
        freq_vars: BTreeMap::new(),
        rings: BTreeMap::new(),
        ring_seq: Vec::new(),
    }
    .run()
}

impl<'a> Parser<'a> {
    fn invalid_char(&self, offset: usize) -> SmilesError {
        let ch = self.text[offset..].chars().next().unwrap_or('\u{fffd}');
        SmilesError::InvalidCharacter { offset, ch }
    }

    fn run(mut self) -> Result<ParsedSmiles, SmilesError> {
        if self.bytes.is_empty() {
            return Err(SmilesError::Empty);
        }
        let mut prev: Option<usize> = None;
        let mut pending: Option<(BondSym, usize)> = None;
        let mut branches: Vec<(usize, usize)> = Vec::new();
        // true right after '(' so that "()" is rejected
        let mut just_opened = false;

        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            let offset = self.pos;
            match c {
                b'(' => {
                    if prev.is_none() || pending.is_some() {
                        return Err(self.invalid_char(offset));
                    }
                    branches.push((prev.unwrap(), offset));
                    self.pos += 1;
                    just_opened = true;
                    continue;
                }
                b')' => {
                    if let Some((_, off)) = pending {
                        return Err(SmilesError::DanglingBond { offset: off });
                    }
                    if just_opened {
                        return Err(self.invalid_char(offset));
                    }
                    let Some((atom, _)) = branches.pop() else {
                        return Err(SmilesError::UnbalancedParentheses { offset });
                    };
                    prev = Some(atom);
                    self.pos += 1;
                }
                b'.' => {
                    if let Some((_, off)) = pending {
                        return Err(SmilesError::DanglingBond { offset: off });
                    }
                    if just_opened {
                        return Err(self.invalid_char(offset));
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(atom) = prev else {
                        return Err(self.invalid_char(offset));
                    };
                    if just_opened {
                        return Err(self.invalid_char(offset));
                    }
                    let digit = self.ring_number()?;
                    let sym = pending.take().map(|(s, _)| s);
                    self.ring_bond(atom, digit, sym, offset)?;
                }
                _ if BondSym::from_byte(c).is_some() => {
                    if pending.is_some() || prev.is_none() {
                        return Err(self.invalid_char(offset));
                    }
                    pending = Some((BondSym::from_byte(c).unwrap(), offset));
                    self.pos += 1;
                    continue;
                }
                _ => {
                    let atom = self.atom()?;
                    if let Some(p) = prev {
                        let sym = pending.take().map(|(s, _)| s);
                        self.chain_bond(p, atom, sym, offset)?;
                    } else if pending.is_some() {
                        return Err(self.invalid_char(offset));
                    }
                    prev = Some(atom);
                }
            }
            just_opened = false;
        }

        if let Some((_, off)) = pending {
            return Err(SmilesError::DanglingBond { offset: off });
        }
        if !branches.is_empty() {
            return Err(SmilesError::UnbalancedParentheses {
                offset: self.bytes.len(),
            });
        }
        if let Some(open) = self.rings.values().min_by_key(|r| r.offset) {
            return Err(SmilesError::UnmatchedRingClosure {
                offset: open.offset,
            });
        }
        self.finish()
    }

    fn ring_number(&mut self) -> Result<u32, SmilesError> {
        let c = self.bytes[self.pos];
        if c == b'%' {
            let d = self.bytes.get(self.pos + 1..self.pos + 3);
            match d {
                Some([a, b]) if a.is_ascii_digit() && b.is_ascii_digit() => {
                    self.pos += 3;
                    Ok(u32::from(a - b'0') * 10 + u32::from(b - b'0'))
                }
                _ => Err(self.invalid_char(self.pos)),
            }
        } else {
            self.pos += 1;
            Ok(u32::from(c - b'0'))
        }
    }

    fn default_bond(&self, a: usize, b: usize) -> BondType {
        if self.graph.atoms[a].aromatic && self.graph.atoms[b].aromatic {
            BondType::Aromatic
        } else {
            BondType::Single
        }
    }

    fn bond_type(&self, sym: Option<BondSym>, a: usize, b: usize) -> BondType {
        match sym {
            None => self.default_bond(a, b),
            Some(BondSym::Single) | Some(BondSym::Up) | Some(BondSym::Down) => BondType::Single,
            Some(BondSym::Double) => BondType::Double,
            Some(BondSym::Triple) => BondType::Triple,
            Some(BondSym::Aromatic) => BondType::Aromatic,
        }
    }

    fn chain_bond(
        &mut self,
        from: usize,
        to: usize,
        sym: Option<BondSym>,
        offset: usize,
    ) -> Result<(), SmilesError> {
        if from == to || self.graph.bond_between(from, to).is_some() {
            return Err(SmilesError::InvalidRingClosure { offset });
        }
        let kind = self.bond_type(sym, from, to);
        let bi = self.graph.add_bond(from, to, kind);
        if let Some(s) = sym.filter(|s| s.is_directional()) {
            self.marks.insert(
                bi,
                Mark {
                    from,
                    up: s == BondSym::Up,
                },
            );
        }
        self.listing[from].push(ListEntry::Slot(Slot::Atom(to)));
        self.from_of[to] = Some(from);
        Ok(())
    }

    fn ring_bond(
        &mut self,
        atom: usize,
        digit: u32,
        sym: Option<BondSym>,
        offset: usize,
    ) -> Result<(), SmilesError> {
        let Some(open) = self.rings.remove(&digit) else {
            let seq = self.ring_seq.len();
            self.ring_seq.push(None);
            self.listing[atom].push(ListEntry::PendingRing(seq));
            self.rings.insert(
                digit,
                RingOpen {
                    atom,
                    sym,
                    offset,
                    seq,
                },
            );
            return Ok(());
        };
        if open.atom == atom || self.graph.bond_between(open.atom, atom).is_some() {
            return Err(SmilesError::InvalidRingClosure { offset });
        }
        let chosen = match (open.sym, sym) {
            (Some(a), Some(b)) if a != b && !(a.is_directional() && b.is_directional()) => {
                return Err(SmilesError::ConflictingRingBond { offset });
            }
            (Some(a), _) => Some(a),
            (None, b) => b,
        };
        let kind = self.bond_type(chosen, open.atom, atom);
        let bi = self.graph.add_bond(open.atom, atom, kind);
        match (open.sym, sym) {
            (Some(s), _) if s.is_directional() => {
                self.marks.insert(
                    bi,
                    Mark {
                        from: open.atom,
                        up: s == BondSym::Up,
                    },
                );
            }
            (_, Some(s)) if s.is_directional() => {
                self.marks.insert(
                    bi,
                    Mark {
                        from: atom,
                        up: s == BondSym::Up,
                    },
                );
            }
            _ => {}
        }
        self.ring_seq[open.seq] = Some(bi);
        for e in &mut self.listing[open.atom] {
            if *e == ListEntry::PendingRing(open.seq) {
                *e = ListEntry::Slot(Slot::Atom(atom));
            }
        }
        self.listing[atom].push(ListEntry::Slot(Slot::Atom(open.atom)));
        Ok(())
    }

    fn push_atom(&mut self, atom: Atom, parity: Option<Parity>) -> usize {
        let idx = self.graph.add_atom(atom);
        self.from_of.push(None);
        self.listing.push(Vec::new());
        if let Some(p) = parity {
            self.chirality.insert(idx, p);
        }
        idx
    }

    fn atom(&mut self) -> Result<usize, SmilesError> {
        let offset = self.pos;
        let c = self.bytes[offset];
        if c == b'[' {
            return self.bracket_atom();
        }
        let (atom, len) = match c {
            b'*' => (Atom::new("*"), 1),
            b'C' if self.bytes.get(offset + 1) == Some(&b'l') => (Atom::new("Cl"), 2),
            b'B' if self.bytes.get(offset + 1) == Some(&b'r') => (Atom::new("Br"), 2),
            b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' => {
                (Atom::new((c as char).to_string()), 1)
            }
            b'b' | b'c' | b'n' | b'o' | b'p' | b's' => (
                Atom::aromatic((c.to_ascii_uppercase() as char).to_string()),
                1,
            ),
            _ => return Err(self.invalid_char(offset)),
        };
        self.pos += len;
        Ok(self.push_atom(atom, None))
    }

    fn bracket_atom(&mut self) -> Result<usize, SmilesError> {
        let open = self.pos;
        let Some(rel_close) = self.bytes[open..].iter().position(|&b| b == b']') else {
            return Err(SmilesError::MalformedBracketAtom {
                offset: open,
                reason: "missing ']'".into(),
            });
        };
        let close = open + rel_close;
        let content = &self.text[open + 1..close];
        self.pos = close + 1;

        let (spec, freq) = match content.split_once('?') {
            Some((s, v)) if self.opts.allow_freq_vars => {
                if v.is_empty() || !v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(SmilesError::MalformedBracketAtom {
                        offset: open,
                        reason: format!("bad frequency variable {v:?}"),
                    });
                }
                (s, Some(v.to_string()))
            }
            _ => (content, None),
        };

        let (atom, parity) = match parse_bracket_spec(spec) {
            Ok(v) => v,
            Err(reason) => {
                if self.opts.allow_labels && elements::is_label_syntax(spec) {
                    (Atom::label(spec), None)
                } else {
                    return Err(SmilesError::MalformedBracketAtom {
                        offset: open,
                        reason,
                    });
                }
            }
        };
        let h = atom.explicit_h.unwrap_or(0);
        let idx = self.push_atom(atom, parity);
        if h > 0 && parity.is_some() {
            self.listing[idx].push(ListEntry::Slot(Slot::Implicit));
        }
        if let Some(v) = freq {
            self.freq_vars.insert(idx, v);
        }
        Ok(idx)
    }

    fn finish(mut self) -> Result<ParsedSmiles, SmilesError> {
        let mut listed: Vec<Vec<Slot>> = vec![Vec::new(); self.graph.atoms.len()];
        let from_of = &self.from_of;
        for (i, entries) in self.listing.iter().enumerate() {
            let mut slots = Vec::with_capacity(entries.len() + 1);
            if let Some(f) = from_of[i] {
                slots.push(Slot::Atom(f));
            }
            for e in entries {
                if let ListEntry::Slot(s) = e {
                    slots.push(*s);
                }
            }
            listed[i] = slots;
        }

        for (&center, &parity) in &self.chirality {
            let mut slots = listed[center].clone();
            let explicit = slots.iter().filter(|s| matches!(s, Slot::Atom(_))).count();
            let h = self.graph.atoms[center].explicit_h.unwrap_or(0);
            if explicit == 3 && h == 0 {
                // lone pair takes the hydrogen position
                let at = usize::from(from_of[center].is_some());
                slots.insert(at, Slot::Implicit);
            }
            if slots.len() != 4 {
                continue;
            }
            if let Some(p) = parity_to_reference(&self.graph, center, &slots, parity) {
                self.graph.tetra_parity.insert(center, p);
            }
        }

        self.assign_double_bond_stereo()?;

        let ring_closures = self.ring_seq.iter().map(|b| b.unwrap()).collect();
        Ok(ParsedSmiles {
            graph: self.graph,
            ring_closures,
            freq_vars: self.freq_vars,
        })
    }

    fn assign_double_bond_stereo(&mut self) -> Result<(), SmilesError> {
        let adj = self.graph.adjacency();
        for (bi, bond) in self.graph.bonds.iter().enumerate() {
            if bond.kind != BondType::Double {
                continue;
            }
            let side = |a: usize, other: usize| -> Result<Option<(usize, bool)>, SmilesError> {
                let mut found: Option<(usize, bool)> = None;
                let mut seen_up = None;
                let mut seen_down = None;
                for &(s, sb) in &adj[a] {
                    if s == other {
                        continue;
                    }
                    let Some(mark) = self.marks.get(&sb) else {
                        continue;
                    };
                    // +1 (false) when the substituent lies below the atom
                    let s_first = mark.from == s;
                    let below = s_first == mark.up;
                    let slot = if below { &mut seen_down } else { &mut seen_up };
                    if slot.is_some() {
                        return Err(SmilesError::ConflictingDirection { bond: bi });
                    }
                    *slot = Some(s);
                    if found.is_none() {
                        found = Some((s, below));
                    }
                }
                Ok(found)
            };
            let (Some((s0, b0)), Some((s1, b1))) =
                (side(bond.begin, bond.end)?, side(bond.end, bond.begin)?)
            else {
                continue;
            };
            let geometry = if b0 == b1 {
                Geometry::Cis
            } else {
                Geometry::Trans
            };
            self.graph.db_geometry.insert(
                bi,
                DoubleBondStereo {
                    geometry,
                    refs: (s0, s1),
                },
            );
        }
        Ok(())
    }
}

/// Parses the inside of a bracket atom: isotope, symbol, chirality,
/// hydrogen count and charge.
fn parse_bracket_spec(spec: &str) -> Result<(Atom, Option<Parity>), String> {
    let b = spec.as_bytes();
    let mut i = 0;
    let mut isotope = None;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if i > 0 {
        isotope = Some(spec[..i].parse::<u32>().map_err(|_| "isotope overflow")?);
    }
    let rest = &spec[i..];
    let (element, aromatic, len) = bracket_symbol(rest).ok_or("unknown element")?;
    i += len;

    let mut parity = None;
    if b.get(i) == Some(&b'@') {
        if b.get(i + 1) == Some(&b'@') {
            parity = Some(Parity::Clockwise);
            i += 2;
        } else {
            parity = Some(Parity::CounterClockwise);
            i += 1;
        }
        if b.get(i)
            .is_some_and(|c| c.is_ascii_uppercase() && *c != b'H')
        {
            return Err("extended chirality classes are not supported".into());
        }
    }

    let mut hcount = 0u32;
    if b.get(i) == Some(&b'H') {
        i += 1;
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        hcount = if start == i {
            1
        } else {
            spec[start..i]
                .parse()
                .map_err(|_| "hydrogen count overflow")?
        };
    }

    let mut charge = 0i32;
    if let Some(&sign) = b.get(i).filter(|c| **c == b'+' || **c == b'-') {
        let unit = if sign == b'+' { 1 } else { -1 };
        i += 1;
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if start != i {
            let mag: i32 = spec[start..i].parse().map_err(|_| "charge overflow")?;
            charge = unit * mag;
        } else {
            charge = unit;
            while b.get(i) == Some(&sign) {
                charge += unit;
                i += 1;
            }
        }
    }

    if b.get(i) == Some(&b':') {
        return Err("atom maps are not supported".into());
    }
    if i != b.len() {
        return Err(format!("unexpected {:?}", &spec[i..]));
    }
    let atom = Atom {
        element,
        formal_charge: charge,
        isotope,
        explicit_h: Some(hcount),
        aromatic,
        coord: None,
    };
    Ok((atom, parity))
}

fn bracket_symbol(rest: &str) -> Option<(String, bool, usize)> {
    let b = rest.as_bytes();
    let first = *b.first()?;
    if first == b'*' {
        return Some(("*".into(), false, 1));
    }
    if first.is_ascii_uppercase() {
        if let Some(&second) = b.get(1).filter(|c| c.is_ascii_lowercase()) {
            let two = format!("{}{}", first as char, second as char);
            if elements::is_element(&two) {
                return Some((two, false, 2));
            }
        }
        let one = (first as char).to_string();
        return elements::is_element(&one).then_some((one, false, 1));
    }
    if first.is_ascii_lowercase() {
        for two in ["se", "as"] {
            if rest.starts_with(two) {
                let mut sym = two.to_string();
                sym[..1].make_ascii_uppercase();
                return Some((sym, true, 2));
            }
        }
        if matches!(first, b'b' | b'c' | b'n' | b'o' | b'p' | b's') {
            return Some(((first.to_ascii_uppercase() as char).to_string(), true, 1));
        }
    }
    None
}
