//! Superatom abbreviations (`Ph`, `OMe`, ...) and their expansion.
//!
//! Table files hold one `LABEL<TAB>FRAGMENT` entry per line; `#` starts a
//! comment. A fragment is SMILES with exactly one `*` marking where the
//! fragment attaches, e.g. `Ph    *c1ccccc1`.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::graph::{transfer_parity, Atom, Bond, DoubleBondStereo, MolGraph, Slot};
use crate::smiles::{self, SmilesError};

const BUILTIN: &[(&str, &str)] = &[
    ("Me", "*C"),
    ("Et", "*CC"),
    ("Pr", "*CCC"),
    ("iPr", "*C(C)C"),
    ("Ph", "*c1ccccc1"),
    ("Bn", "*Cc1ccccc1"),
    ("Ac", "*C(C)=O"),
    ("Boc", "*C(=O)OC(C)(C)C"),
    ("OMe", "*OC"),
    ("OEt", "*OCC"),
    ("CF3", "*C(F)(F)F"),
    ("CCl3", "*C(Cl)(Cl)Cl"),
    ("NO2", "*[N+](=O)[O-]"),
    ("CN", "*C#N"),
    ("COOH", "*C(=O)O"),
    ("CHO", "*C=O"),
    ("OH", "*O"),
    ("NH2", "*N"),
    ("SO3H", "*S(=O)(=O)O"),
    ("TMS", "*[Si](C)(C)C"),
];

#[derive(Debug, Error)]
pub enum AbbrevError {
    #[error("line {line}: expected LABEL<TAB>FRAGMENT")]
    Syntax { line: usize },
    #[error("fragment for {label}: {source}")]
    Fragment {
        label: String,
        #[source]
        source: SmilesError,
    },
    #[error("fragment for {label} must contain exactly one singly-bonded '*' attachment point")]
    Attachment { label: String },
    #[error("cannot read abbreviation table: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExpandError {
    #[error(
        "label atom {atom} has {neighbors} neighbors but its fragment has one attachment point"
    )]
    ArityMismatch { atom: usize, neighbors: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fragment {
    pub smiles: String,
    graph: MolGraph,
    /// Index of the `*` atom in `graph`.
    star: usize,
    /// Index of the atom bonded to `*`.
    attach: usize,
}

impl Fragment {
    pub fn parse(label: &str, smiles: &str) -> Result<Fragment, AbbrevError> {
        let graph = smiles::parse(smiles).map_err(|source| AbbrevError::Fragment {
            label: label.to_string(),
            source,
        })?;
        let stars: Vec<usize> = (0..graph.atoms.len())
            .filter(|&i| graph.atoms[i].is_wildcard())
            .collect();
        let bad = || AbbrevError::Attachment {
            label: label.to_string(),
        };
        let [star] = stars[..] else {
            return Err(bad());
        };
        let nbrs = graph.neighbors(star);
        let [attach] = nbrs[..] else {
            return Err(bad());
        };
        Ok(Fragment {
            smiles: smiles.to_string(),
            graph,
            star,
            attach,
        })
    }

    /// Atoms the fragment adds in place of its label.
    pub fn atom_count(&self) -> usize {
        self.graph.atoms.len() - 1
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AbbreviationTable {
    entries: BTreeMap<String, Fragment>,
}

impl AbbreviationTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Twenty common superatoms.
    pub fn builtin() -> Self {
        let mut t = Self::empty();
        for (label, smi) in BUILTIN {
            t.insert(label, smi).expect("builtin fragment");
        }
        t
    }

    pub fn insert(&mut self, label: &str, smiles: &str) -> Result<(), AbbrevError> {
        let frag = Fragment::parse(label, smiles)?;
        self.entries.insert(label.to_string(), frag);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&Fragment> {
        self.entries.get(label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.entries.contains_key(label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Adds or overrides entries from table-file text.
    pub fn extend_from_str(&mut self, text: &str) -> Result<(), AbbrevError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim_end();
            if line.trim().is_empty() {
                continue;
            }
            let Some((label, frag)) = line.split_once('\t') else {
                return Err(AbbrevError::Syntax { line: i + 1 });
            };
            let (label, frag) = (label.trim(), frag.trim());
            if label.is_empty() || frag.is_empty() {
                return Err(AbbrevError::Syntax { line: i + 1 });
            }
            self.insert(label, frag)?;
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Self, AbbrevError> {
        let mut t = Self::empty();
        t.extend_from_str(text)?;
        Ok(t)
    }

    /// Built-in table overridden and extended by a table file.
    pub fn builtin_with_file(path: &Path) -> Result<Self, AbbrevError> {
        let mut t = Self::builtin();
        t.extend_from_str(&std::fs::read_to_string(path)?)?;
        Ok(t)
    }
}

/// Replaces every atom whose element is a table label by its fragment.
///
/// Kept atoms retain their relative order and come first; fragment atoms are
/// appended. Labels missing from the table (e.g. `R1`) are left in place.
pub fn expand_abbreviations(
    g: &MolGraph,
    table: &AbbreviationTable,
) -> Result<MolGraph, ExpandError> {
    let is_label = |i: usize| table.contains(&g.atoms[i].element);
    if !(0..g.atoms.len()).any(is_label) {
        return Ok(g.clone());
    }
    let adj = g.adjacency();
    for i in 0..g.atoms.len() {
        if is_label(i) && adj[i].len() >= 2 {
            return Err(ExpandError::ArityMismatch {
                atom: i,
                neighbors: adj[i].len(),
            });
        }
    }

    let mut out = MolGraph::new();
    let mut new_index = vec![usize::MAX; g.atoms.len()];
    for (i, atom) in g.atoms.iter().enumerate() {
        if !is_label(i) {
            new_index[i] = out.add_atom(atom.clone());
        }
    }
    // fragment atom maps, one per label atom
    let mut frag_maps: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, atom) in g.atoms.iter().enumerate() {
        if !is_label(i) {
            continue;
        }
        let frag = table.get(&atom.element).unwrap();
        let mut map = vec![usize::MAX; frag.graph.atoms.len()];
        for (fi, fa) in frag.graph.atoms.iter().enumerate() {
            if fi == frag.star {
                continue;
            }
            let mut a: Atom = fa.clone();
            a.coord = if fi == frag.attach { atom.coord } else { None };
            map[fi] = out.add_atom(a);
        }
        new_index[i] = map[frag.attach];
        frag_maps.push((i, map));
    }

    for b in &g.bonds {
        out.bonds
            .push(Bond::new(new_index[b.begin], new_index[b.end], b.kind));
    }
    for (label_atom, map) in &frag_maps {
        let frag = table.get(&g.atoms[*label_atom].element).unwrap();
        for fb in &frag.graph.bonds {
            if fb.contains(frag.star) {
                continue;
            }
            out.bonds
                .push(Bond::new(map[fb.begin], map[fb.end], fb.kind));
        }
    }

    for (&center, &parity) in &g.tetra_parity {
        if is_label(center) {
            continue;
        }
        if let Some(p) = transfer_parity(g, center, parity, &out, new_index[center], |s| match s {
            Slot::Atom(a) => Slot::Atom(new_index[a]),
            Slot::Implicit => Slot::Implicit,
        }) {
            out.tetra_parity.insert(new_index[center], p);
        }
    }
    for (&bi, st) in &g.db_geometry {
        out.db_geometry.insert(
            bi,
            DoubleBondStereo {
                geometry: st.geometry,
                refs: (new_index[st.refs.0], new_index[st.refs.1]),
            },
        );
    }
    for (label_atom, map) in &frag_maps {
        let frag = table.get(&g.atoms[*label_atom].element).unwrap();
        let outside = adj[*label_atom].first().map(|&(nb, _)| new_index[nb]);
        for (&center, &parity) in &frag.graph.tetra_parity {
            let slot_map = |s: Slot| match s {
                Slot::Atom(a) if a == frag.star => outside.map_or(Slot::Implicit, Slot::Atom),
                Slot::Atom(a) => Slot::Atom(map[a]),
                Slot::Implicit => Slot::Implicit,
            };
            if let Some(p) =
                transfer_parity(&frag.graph, center, parity, &out, map[center], slot_map)
            {
                out.tetra_parity.insert(map[center], p);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BondType;
    use crate::smiles::{canonical_smiles, parse, parse_with_labels};

    fn labelled(s: &str) -> MolGraph {
        parse_with_labels(s).unwrap()
    }

    #[test]
    fn builtin_has_twenty_entries() {
        let t = AbbreviationTable::builtin();
        assert_eq!(t.len(), 20);
        assert!(t.contains("Ph") && t.contains("TMS"));
    }

    #[test]
    fn phenyl_expands_to_toluene_skeleton() {
        let g = expand_abbreviations(&labelled("C[Ph]"), &AbbreviationTable::builtin()).unwrap();
        assert_eq!(g.heavy_atom_count(), 7);
        assert!(g.validate().is_empty());
        // hand-built toluene for comparison
        let mut toluene = MolGraph::new();
        toluene.add_atom(Atom::new("C"));
        for _ in 0..6 {
            toluene.add_atom(Atom::aromatic("C"));
        }
        toluene.add_bond(0, 1, BondType::Single);
        for i in 0..6 {
            toluene.add_bond(1 + i, 1 + (i + 1) % 6, BondType::Aromatic);
        }
        assert_eq!(
            canonical_smiles(&g, true).unwrap(),
            canonical_smiles(&toluene, true).unwrap()
        );
    }

    #[test]
    fn methyl_gives_ethane() {
        let g = expand_abbreviations(&labelled("C[Me]"), &AbbreviationTable::builtin()).unwrap();
        assert_eq!(g.atoms.len(), 2);
        assert_eq!(g.bonds, vec![Bond::new(0, 1, BondType::Single)]);
        assert_eq!(g.hydrogen_count(1), 3);
    }

    #[test]
    fn no_labels_is_identity() {
        let g = parse("CC(=O)O").unwrap();
        assert_eq!(
            expand_abbreviations(&g, &AbbreviationTable::builtin()).unwrap(),
            g
        );
    }

    #[test]
    fn unknown_r_labels_survive() {
        let g = labelled("c1ccccc1[R1]");
        let e = expand_abbreviations(&g, &AbbreviationTable::builtin()).unwrap();
        assert_eq!(e, g);
    }

    #[test]
    fn bridging_label_is_an_error() {
        let g = labelled("C[Ph]C");
        assert_eq!(
            expand_abbreviations(&g, &AbbreviationTable::builtin()),
            Err(ExpandError::ArityMismatch {
                atom: 1,
                neighbors: 2
            })
        );
    }

    #[test]
    fn nitro_charges_kept() {
        let g = expand_abbreviations(&labelled("c1ccccc1[NO2]"), &AbbreviationTable::builtin())
            .unwrap();
        let direct = parse("c1ccccc1[N+](=O)[O-]").unwrap();
        assert_eq!(
            canonical_smiles(&g, true).unwrap(),
            canonical_smiles(&direct, true).unwrap()
        );
    }

    #[test]
    fn stereo_survives_expansion() {
        let g = labelled("[Ph][C@@H](N)C(=O)O");
        let e = expand_abbreviations(&g, &AbbreviationTable::builtin()).unwrap();
        let direct = parse("c1ccccc1[C@@H](N)C(=O)O").unwrap();
        assert_eq!(
            canonical_smiles(&e, true).unwrap(),
            canonical_smiles(&direct, true).unwrap()
        );
    }

    #[test]
    fn table_file_parsing() {
        let t =
            AbbreviationTable::parse_str("# custom\nMs\t*S(C)(=O)=O\n\nEt\t*CC # ethyl\n").unwrap();
        assert_eq!(t.len(), 2);
        assert!(matches!(
            AbbreviationTable::parse_str("Bad *C"),
            Err(AbbrevError::Syntax { line: 1 })
        ));
        assert!(matches!(
            AbbreviationTable::parse_str("X\tCC"),
            Err(AbbrevError::Attachment { .. })
        ));
        assert!(matches!(
            AbbreviationTable::parse_str("X\t*C("),
            Err(AbbrevError::Fragment { .. })
        ));
    }

    #[test]
    fn idempotent() {
        let t = AbbreviationTable::builtin();
        let once = expand_abbreviations(&labelled("[OMe]c1ccc([CF3])cc1"), &t).unwrap();
        let twice = expand_abbreviations(&once, &t).unwrap();
        assert_eq!(once, twice);
    }
}
