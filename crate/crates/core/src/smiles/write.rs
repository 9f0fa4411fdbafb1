use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::elements;
use crate::graph::{parity_from_reference, BondType, Geometry, MolGraph, Slot};

use super::SmilesError;

/// Controls traversal and annotation when writing.
#[derive(Clone, Copy, Debug, Default)]
pub struct WriteSpec<'a> {
    /// Visiting priority per atom (lower first). Atom index when absent.
    pub order: Option<&'a [usize]>,
    /// Bonds that must be written as ring closures.
    pub closures: Option<&'a [usize]>,
    pub stereo: bool,
    pub freq_vars: Option<&'a BTreeMap<usize, String>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Written {
    pub text: String,
    /// Atom indices in the order their tokens appear in `text`.
    pub atom_order: Vec<usize>,
    /// Ring-closure bonds in the order their digits are opened.
    pub ring_openings: Vec<usize>,
}

/// Writes a SMILES string with stereo, visiting atoms in index order.
pub fn write(g: &MolGraph) -> Result<String, SmilesError> {
    write_with(
        g,
        &WriteSpec {
            stereo: true,
            ..WriteSpec::default()
        },
    )
    .map(|w| w.text)
}

fn unrepresentable(msg: impl Into<String>) -> SmilesError {
    SmilesError::Unrepresentable(msg.into())
}

struct Traversal {
    pos: Vec<usize>,
    order: Vec<usize>,
    roots: Vec<usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<(usize, usize)>>,
    openings: Vec<Vec<usize>>,
    closings: Vec<Vec<usize>>,
    is_closure: Vec<bool>,
}

pub fn write_with(g: &MolGraph, spec: &WriteSpec) -> Result<Written, SmilesError> {
    check_representable(g)?;
    let n = g.atoms.len();
    let key = |a: usize| spec.order.map_or(a, |o| o[a]);
    let mut adj = g.adjacency();
    for list in &mut adj {
        list.sort_by_key(|&(nb, _)| key(nb));
    }
    let forced: HashSet<usize> = spec
        .closures
        .map(|c| c.iter().copied().collect())
        .unwrap_or_default();

    let mut t = Traversal {
        pos: vec![usize::MAX; n],
        order: Vec::with_capacity(n),
        roots: Vec::new(),
        parent: vec![None; n],
        children: vec![Vec::new(); n],
        openings: vec![Vec::new(); n],
        closings: vec![Vec::new(); n],
        is_closure: vec![false; g.bonds.len()],
    };
    let mut tree_bond = vec![false; g.bonds.len()];
    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&a| key(a));
    for s in starts {
        if t.pos[s] != usize::MAX {
            continue;
        }
        t.roots.push(s);
        // iterative DFS keeping an explicit neighbor cursor per frame
        let mut stack: Vec<(usize, usize)> = vec![(s, 0)];
        t.pos[s] = t.order.len();
        t.order.push(s);
        while let Some(&mut (a, ref mut cursor)) = stack.last_mut() {
            if *cursor >= adj[a].len() {
                stack.pop();
                continue;
            }
            let (nb, bi) = adj[a][*cursor];
            *cursor += 1;
            if tree_bond[bi] || t.is_closure[bi] {
                continue;
            }
            if forced.contains(&bi) {
                if t.pos[nb] == usize::MAX {
                    t.openings[a].push(bi);
                    t.closings[nb].push(bi);
                } else {
                    t.openings[nb].push(bi);
                    t.closings[a].push(bi);
                }
                t.is_closure[bi] = true;
                continue;
            }
            if t.pos[nb] != usize::MAX {
                t.openings[nb].push(bi);
                t.closings[a].push(bi);
                t.is_closure[bi] = true;
                continue;
            }
            tree_bond[bi] = true;
            t.parent[nb] = Some(a);
            t.children[a].push((nb, bi));
            t.pos[nb] = t.order.len();
            t.order.push(nb);
            stack.push((nb, 0));
        }
    }
    for a in 0..n {
        let pos = &t.pos;
        t.closings[a].sort_by_key(|&bi| {
            let b = g.bonds[bi];
            pos[b.other(a).unwrap()]
        });
    }

    let marks = if spec.stereo {
        direction_marks(g, &t)?
    } else {
        BTreeMap::new()
    };

    let mut out = Emitter {
        g,
        spec,
        t: &t,
        marks: &marks,
        text: String::new(),
        digit_of: BTreeMap::new(),
        in_use: [false; 100],
        ring_openings: Vec::new(),
    };
    for (i, &root) in t.roots.iter().enumerate() {
        if i > 0 {
            out.text.push('.');
        }
        out.emit(root)?;
    }
    Ok(Written {
        text: out.text,
        atom_order: t.order.clone(),
        ring_openings: out.ring_openings,
    })
}

fn check_representable(g: &MolGraph) -> Result<(), SmilesError> {
    let n = g.atoms.len();
    let mut pairs = HashSet::new();
    for (bi, b) in g.bonds.iter().enumerate() {
        if b.begin >= n || b.end >= n || b.begin == b.end {
            return Err(unrepresentable(format!("bond {bi} has invalid endpoints")));
        }
        if b.kind.is_wedge() || b.kind == BondType::None {
            return Err(unrepresentable(format!(
                "bond {bi} has depiction-only type {}",
                b.kind.name()
            )));
        }
        if !pairs.insert((b.begin.min(b.end), b.begin.max(b.end))) {
            return Err(unrepresentable(format!(
                "bond {bi} duplicates an atom pair"
            )));
        }
    }
    for (i, a) in g.atoms.iter().enumerate() {
        let known = a.is_wildcard() || elements::is_element(&a.element);
        if !known && !elements::is_label_syntax(&a.element) {
            return Err(unrepresentable(format!(
                "atom {i} has element {:?}",
                a.element
            )));
        }
        if a.aromatic && !elements::can_be_aromatic(&a.element) {
            return Err(unrepresentable(format!(
                "atom {i} cannot be written aromatic"
            )));
        }
        if a.is_label()
            && (a.formal_charge != 0 || a.isotope.is_some() || a.explicit_h.unwrap_or(0) != 0)
        {
            return Err(unrepresentable(format!(
                "label atom {i} carries atom properties"
            )));
        }
    }
    Ok(())
}

/// Chooses `/` (false) or `\` (true) for single bonds next to stereo
/// double bonds so that re-reading reproduces every recorded geometry.
fn direction_marks(g: &MolGraph, t: &Traversal) -> Result<BTreeMap<usize, bool>, SmilesError> {
    if g.db_geometry.is_empty() {
        return Ok(BTreeMap::new());
    }
    let adj = g.adjacency();
    // true when atom `a` is written before substituent `s`
    let a_first = |a: usize, s: usize| t.pos[a] < t.pos[s];
    let mut constraints: Vec<(usize, usize, bool)> = Vec::new();
    let mut marked: Vec<usize> = Vec::new();

    for &bi in g.db_geometry.keys() {
        let bond = g.bonds[bi];
        if bond.kind != BondType::Double {
            return Err(unrepresentable(format!("geometry on non-double bond {bi}")));
        }
        let pick = |a: usize, other: usize| -> Option<(usize, usize)> {
            adj[a]
                .iter()
                .filter(|&&(s, sb)| s != other && g.bonds[sb].kind == BondType::Single)
                .min_by_key(|&&(s, sb)| (t.is_closure[sb], t.pos[s]))
                .copied()
        };
        let (Some((s0, e0)), Some((s1, e1))) =
            (pick(bond.begin, bond.end), pick(bond.end, bond.begin))
        else {
            return Err(unrepresentable(format!(
                "double bond {bi} lacks single-bonded substituents for its geometry"
            )));
        };
        let geometry = g
            .geometry_for_refs(bi, (s0, s1))
            .ok_or_else(|| unrepresentable(format!("bad geometry refs on bond {bi}")))?;
        let rhs = a_first(bond.begin, s0) ^ a_first(bond.end, s1) ^ (geometry == Geometry::Trans);
        constraints.push((e0, e1, rhs));
        marked.push(e0);
        marked.push(e1);
    }
    marked.sort_unstable();
    marked.dedup();
    let is_marked = |b: usize| marked.binary_search(&b).is_ok();

    for (di, d) in g.bonds.iter().enumerate() {
        if d.kind != BondType::Double {
            continue;
        }
        let mut sides_marked = 0;
        for (a, other) in [(d.begin, d.end), (d.end, d.begin)] {
            let here: Vec<(usize, usize)> = adj[a]
                .iter()
                .filter(|&&(s, sb)| s != other && is_marked(sb))
                .copied()
                .collect();
            if !here.is_empty() {
                sides_marked += 1;
            }
            for w in here.windows(2) {
                let (s, e) = w[0];
                let (s2, f) = w[1];
                constraints.push((e, f, a_first(a, s) ^ a_first(a, s2) ^ true));
            }
        }
        if sides_marked == 2 && !g.db_geometry.contains_key(&di) {
            return Err(unrepresentable(format!(
                "double bond {di} would acquire a geometry it does not have"
            )));
        }
    }

    // solve the XOR system; the first-written bond of each component is '/'
    let mut links: BTreeMap<usize, Vec<(usize, bool)>> = BTreeMap::new();
    for &(e, f, rhs) in &constraints {
        links.entry(e).or_default().push((f, rhs));
        links.entry(f).or_default().push((e, rhs));
    }
    let written_at = |b: usize| {
        let bd = g.bonds[b];
        let (p, q) = (t.pos[bd.begin], t.pos[bd.end]);
        (p.min(q), p.max(q))
    };
    let mut vars = marked.clone();
    vars.sort_by_key(|&b| written_at(b));
    let mut value: BTreeMap<usize, bool> = BTreeMap::new();
    for root in vars {
        if value.contains_key(&root) {
            continue;
        }
        value.insert(root, false);
        let mut queue = VecDeque::from([root]);
        while let Some(e) = queue.pop_front() {
            let ve = value[&e];
            for &(f, rhs) in links.get(&e).map(Vec::as_slice).unwrap_or(&[]) {
                let want = ve ^ rhs;
                match value.get(&f) {
                    Some(&vf) if vf != want => {
                        return Err(unrepresentable(
                            "double-bond marks cannot be made consistent",
                        ));
                    }
                    Some(_) => {}
                    None => {
                        value.insert(f, want);
                        queue.push_back(f);
                    }
                }
            }
        }
    }
    Ok(value)
}

struct Emitter<'a> {
    g: &'a MolGraph,
    spec: &'a WriteSpec<'a>,
    t: &'a Traversal,
    marks: &'a BTreeMap<usize, bool>,
    text: String,
    digit_of: BTreeMap<usize, u32>,
    in_use: [bool; 100],
    ring_openings: Vec<usize>,
}

impl Emitter<'_> {
    fn emit(&mut self, root: usize) -> Result<(), SmilesError> {
        // explicit stack of pending actions avoids deep recursion
        enum Step {
            Atom(usize),
            Text(&'static str),
            Bond(usize, usize, usize),
        }
        let mut stack = vec![Step::Atom(root)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Text(s) => self.text.push_str(s),
                Step::Bond(from, to, bi) => {
                    let sym = self.bond_symbol(from, to, bi);
                    self.text.push_str(sym);
                }
                Step::Atom(a) => {
                    self.atom_with_rings(a)?;
                    let kids = &self.t.children[a];
                    // pushed in reverse so the first child is emitted first
                    for (i, &(c, bi)) in kids.iter().enumerate().rev() {
                        let last = i + 1 == kids.len();
                        if !last {
                            stack.push(Step::Text(")"));
                        }
                        stack.push(Step::Atom(c));
                        stack.push(Step::Bond(a, c, bi));
                        if !last {
                            stack.push(Step::Text("("));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn bond_symbol(&self, from: usize, to: usize, bi: usize) -> &'static str {
        let g = self.g;
        let arom = g.atoms[from].aromatic && g.atoms[to].aromatic;
        if let Some(&down) = self.marks.get(&bi) {
            return if down { "\\" } else { "/" };
        }
        match g.bonds[bi].kind {
            BondType::Single if arom => "-",
            BondType::Double => "=",
            BondType::Triple => "#",
            BondType::Aromatic if !arom => ":",
            _ => "",
        }
    }

    fn ring_partners(&self, a: usize) -> Vec<usize> {
        self.t.closings[a]
            .iter()
            .chain(self.t.openings[a].iter())
            .map(|&bi| self.g.bonds[bi].other(a).unwrap())
            .collect()
    }

    fn atom_with_rings(&mut self, a: usize) -> Result<(), SmilesError> {
        let atom_text = self.atom_text(a)?;
        self.text.push_str(&atom_text);
        for i in 0..self.t.closings[a].len() {
            let bi = self.t.closings[a][i];
            let d = self.digit_of[&bi];
            push_digit(&mut self.text, d);
        }
        for i in 0..self.t.openings[a].len() {
            let bi = self.t.openings[a][i];
            let d = (1..100)
                .find(|&d| !self.in_use[d as usize])
                .ok_or_else(|| unrepresentable("more than 99 open rings"))?;
            self.in_use[d as usize] = true;
            self.digit_of.insert(bi, d);
            self.ring_openings.push(bi);
            let partner = self.g.bonds[bi].other(a).unwrap();
            let sym = self.bond_symbol(a, partner, bi);
            self.text.push_str(sym);
            push_digit(&mut self.text, d);
        }
        for &bi in &self.t.closings[a] {
            let d = self.digit_of[&bi];
            self.in_use[d as usize] = false;
        }
        Ok(())
    }

    fn atom_text(&self, a: usize) -> Result<String, SmilesError> {
        let g = self.g;
        let atom = &g.atoms[a];
        let hcount = g.hydrogen_count(a);
        let freq = self.spec.freq_vars.and_then(|f| f.get(&a));

        let chir = if self.spec.stereo {
            match g.tetra_parity.get(&a) {
                Some(&p) => Some(self.listed_parity(a, p)?),
                None => None,
            }
        } else {
            None
        };

        let mut s = String::new();
        if atom.is_label() {
            s.push('[');
            s.push_str(&atom.element);
            if let Some(v) = freq {
                s.push('?');
                s.push_str(v);
            }
            s.push(']');
            return Ok(s);
        }
        let default_h = implicit_default(g, a);
        let bare = chir.is_none()
            && freq.is_none()
            && atom.formal_charge == 0
            && atom.isotope.is_none()
            && if atom.is_wildcard() {
                !atom.aromatic && hcount == 0
            } else {
                elements::is_organic(&atom.element) && default_h == Some(hcount)
            };
        let symbol = if atom.aromatic {
            atom.element.to_ascii_lowercase()
        } else {
            atom.element.clone()
        };
        if bare {
            return Ok(symbol);
        }
        s.push('[');
        if let Some(iso) = atom.isotope {
            s.push_str(&iso.to_string());
        }
        s.push_str(&symbol);
        if let Some(p) = chir {
            s.push_str(match p {
                crate::graph::Parity::CounterClockwise => "@",
                crate::graph::Parity::Clockwise => "@@",
            });
        }
        match hcount {
            0 => {}
            1 => s.push('H'),
            h => {
                s.push('H');
                s.push_str(&h.to_string());
            }
        }
        match atom.formal_charge {
            0 => {}
            1 => s.push('+'),
            -1 => s.push('-'),
            c if c > 0 => s.push_str(&format!("+{c}")),
            c => s.push_str(&format!("-{}", -c)),
        }
        if let Some(v) = freq {
            s.push('?');
            s.push_str(v);
        }
        s.push(']');
        Ok(s)
    }

    fn listed_parity(
        &self,
        a: usize,
        p: crate::graph::Parity,
    ) -> Result<crate::graph::Parity, SmilesError> {
        let g = self.g;
        let explicit = g.degree(a);
        if explicit == 4 && g.hydrogen_count(a) > 0 {
            return Err(unrepresentable(format!(
                "stereocenter {a} has four neighbors and hydrogens"
            )));
        }
        let mut listing = Vec::with_capacity(4);
        if let Some(parent) = self.t.parent[a] {
            listing.push(Slot::Atom(parent));
        }
        if explicit == 3 {
            listing.push(Slot::Implicit);
        }
        listing.extend(self.ring_partners(a).into_iter().map(Slot::Atom));
        listing.extend(self.t.children[a].iter().map(|&(c, _)| Slot::Atom(c)));
        parity_from_reference(g, a, &listing, p)
            .ok_or_else(|| unrepresentable(format!("parity on atom {a} has no valid neighbor set")))
    }
}

fn push_digit(text: &mut String, d: u32) {
    if d < 10 {
        text.push(char::from(b'0' + d as u8));
    } else {
        text.push_str(&format!("%{d:02}"));
    }
}

/// Hydrogen count an organic-subset atom would get if written bare.
fn implicit_default(g: &MolGraph, a: usize) -> Option<u32> {
    let atom = &g.atoms[a];
    let valence = elements::default_valence(&atom.element)?;
    let used: u32 = g
        .bonds
        .iter()
        .filter(|b| b.contains(a))
        .map(|b| b.kind.valence())
        .sum::<u32>()
        + u32::from(atom.aromatic);
    Some(valence.saturating_sub(used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Atom, Parity};
    use crate::smiles::parse;

    #[test]
    fn methane() {
        let mut g = MolGraph::new();
        g.add_atom(Atom::new("C"));
        assert_eq!(write(&g).unwrap(), "C");
    }

    #[test]
    fn benzene_aromatic() {
        let g = parse("c1ccccc1").unwrap();
        assert_eq!(write(&g).unwrap(), "c1ccccc1");
    }

    #[test]
    fn index_order_reproduces_input() {
        for s in [
            "CCO",
            "CC(C)(C)O",
            "C1CC2CC1CC2",
            "c1ccccc1-c1ccccc1",
            "[13CH3][NH3+]",
            "C/C=C/C",
            "F/C=C\\Cl",
            "N[C@@H](C)C(=O)O",
            "[Na+].[Cl-]",
            "OC(=O)C#N",
        ] {
            let g = parse(s).unwrap();
            assert_eq!(write(&g).unwrap(), s, "rewriting {s}");
        }
    }

    #[test]
    fn chirality_round_trip() {
        let mut g = MolGraph::new();
        for e in ["C", "F", "Cl", "Br", "I"] {
            g.add_atom(Atom::new(e));
        }
        for i in 1..5 {
            g.add_bond(0, i, BondType::Single);
        }
        for p in [Parity::Clockwise, Parity::CounterClockwise] {
            g.tetra_parity.insert(0, p);
            let text = write(&g).unwrap();
            assert!(text.contains('@'));
            let back = parse(&text).unwrap();
            assert_eq!(back.tetra_parity[&0], p);
        }
    }

    #[test]
    fn wedges_are_rejected() {
        let mut g = parse("CC").unwrap();
        g.bonds[0].kind = BondType::WedgeSolid;
        assert!(matches!(write(&g), Err(SmilesError::Unrepresentable(_))));
    }

    #[test]
    fn conjugated_marks() {
        let g = parse("C/C=C/C=C/C").unwrap();
        assert_eq!(g.db_geometry.len(), 2);
        let back = parse(&write(&g).unwrap()).unwrap();
        assert_eq!(back.db_geometry, g.db_geometry);
    }

    #[test]
    fn forced_closures_and_order() {
        let p =
            crate::smiles::parse_with("CC(C1)CC1", crate::smiles::ParseOptions::strict()).unwrap();
        let w = write_with(
            &p.graph,
            &WriteSpec {
                closures: Some(&p.ring_closures),
                stereo: true,
                ..WriteSpec::default()
            },
        )
        .unwrap();
        assert_eq!(w.text, "CC(C1)CC1");
        assert_eq!(w.atom_order, vec![0, 1, 2, 3, 4]);
        // without forcing, the index-order DFS picks a different tree
        let free = write_with(&p.graph, &WriteSpec::default()).unwrap();
        assert_ne!(free.text, "CC(C1)CC1");
    }

    #[test]
    fn many_rings_use_percent_digits() {
        let mut g = MolGraph::new();
        let n = 24;
        for _ in 0..n {
            g.add_atom(Atom::new("C"));
        }
        // a ladder: chain 0..n plus rungs i -- n-1-i
        for i in 0..n - 1 {
            g.add_bond(i, i + 1, BondType::Single);
        }
        for i in 0..n / 2 - 1 {
            g.add_bond(i, n - 1 - i, BondType::Single);
        }
        let text = write(&g).unwrap();
        let back = parse(&text).unwrap();
        assert_eq!(back.bonds.len(), g.bonds.len());
    }
}
