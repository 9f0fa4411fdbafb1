//! SMILES-M: SMILES with Markush extensions.
//!
//! ```text
//! MAIN<sep>1,2:OMe<sep>3:R1
//! ```
//!
//! The main part is SMILES whose bracket atoms may be placeholders (`[R1]`)
//! or carry a frequency variable (`[G?n]`). Each extension lists 1-based ring
//! numbers and a group that may attach to any of those rings. Rings are
//! numbered by the order in which their closure digits are opened in the
//! main part.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{shortest_path_without, MolGraph};
use crate::smiles::{
    canonical_writes_with, parse_with, write_with, CanonicalKey, ParseOptions, SmilesError,
    WriteSpec,
};

pub const SEP: &str = "<sep>";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkushExtension {
    /// Sorted, unique, 1-based.
    pub ring_indices: Vec<usize>,
    pub group_name: String,
}

impl MarkushExtension {
    pub fn new(mut ring_indices: Vec<usize>, group_name: impl Into<String>) -> Self {
        ring_indices.sort_unstable();
        ring_indices.dedup();
        MarkushExtension {
            ring_indices,
            group_name: group_name.into(),
        }
    }
}

impl fmt::Display for MarkushExtension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.ring_indices.iter().map(usize::to_string).collect();
        write!(f, "{}:{}", idx.join(","), self.group_name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmilesM {
    pub main: MolGraph,
    /// Ring-closure bond of ring `k` at position `k - 1`.
    pub ring_bonds: Vec<usize>,
    pub extensions: Vec<MarkushExtension>,
    /// Frequency variable per atom index of `main`.
    pub freq_groups: BTreeMap<usize, String>,
}

impl SmilesM {
    pub fn plain(main: MolGraph) -> Self {
        SmilesM {
            main,
            ring_bonds: Vec::new(),
            extensions: Vec::new(),
            freq_groups: BTreeMap::new(),
        }
    }

    pub fn ring_count(&self) -> usize {
        self.ring_bonds.len()
    }

    /// Placeholder labels with their frequency variables.
    pub fn freq_groups_by_label(&self) -> Vec<(String, String)> {
        self.freq_groups
            .iter()
            .map(|(&a, v)| (self.main.atoms[a].element.clone(), v.clone()))
            .collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarkushError {
    #[error("main part: {0}")]
    Main(#[from] SmilesError),
    #[error("extension field {field}: missing ':'")]
    MissingColon { field: usize },
    #[error("extension field {field}: ring index {token:?} is not a positive integer")]
    BadRingIndex { field: usize, token: String },
    #[error("extension field {field}: ring index {index} exceeds ring count {rings}")]
    RingOutOfRange {
        field: usize,
        index: usize,
        rings: usize,
    },
    #[error("extension field {field}: empty group name")]
    EmptyGroup { field: usize },
}

impl MarkushError {
    /// 0 for the main part, otherwise the 1-based extension field.
    pub fn field(&self) -> usize {
        match self {
            MarkushError::Main(_) => 0,
            MarkushError::MissingColon { field }
            | MarkushError::BadRingIndex { field, .. }
            | MarkushError::RingOutOfRange { field, .. }
            | MarkushError::EmptyGroup { field } => *field,
        }
    }
}

fn parse_extension(
    field: usize,
    text: &str,
    rings: usize,
) -> Result<MarkushExtension, MarkushError> {
    let (idx, group) = text
        .split_once(':')
        .ok_or(MarkushError::MissingColon { field })?;
    if group.is_empty() {
        return Err(MarkushError::EmptyGroup { field });
    }
    let mut indices = Vec::new();
    for tok in idx.split(',') {
        let index = tok
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&i| i > 0)
            .ok_or_else(|| MarkushError::BadRingIndex {
                field,
                token: tok.to_string(),
            })?;
        if index > rings {
            return Err(MarkushError::RingOutOfRange {
                field,
                index,
                rings,
            });
        }
        indices.push(index);
    }
    Ok(MarkushExtension::new(indices, group))
}

pub fn parse_m(text: &str) -> Result<SmilesM, MarkushError> {
    let mut fields = text.split(SEP);
    let main = fields.next().unwrap_or("");
    let parsed = parse_with(main, ParseOptions::markush())?;
    let rings = parsed.ring_closures.len();
    let extensions = fields
        .enumerate()
        .map(|(i, f)| parse_extension(i + 1, f, rings))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SmilesM {
        main: parsed.graph,
        ring_bonds: parsed.ring_closures,
        extensions,
        freq_groups: parsed.freq_vars,
    })
}

/// Writes the main part in atom-index order, keeping the stored ring-closure
/// bonds as closures and renumbering extension rings to match.
pub fn write_m(m: &SmilesM) -> Result<String, SmilesError> {
    let w = write_with(
        &m.main,
        &WriteSpec {
            closures: Some(&m.ring_bonds),
            stereo: true,
            freq_vars: Some(&m.freq_groups),
            ..WriteSpec::default()
        },
    )?;
    let renumber: BTreeMap<usize, usize> = m
        .ring_bonds
        .iter()
        .enumerate()
        .filter_map(|(k, bi)| {
            let pos = w.ring_openings.iter().position(|b| b == bi)?;
            Some((k + 1, pos + 1))
        })
        .collect();
    let mut out = w.text;
    for ext in &m.extensions {
        let idx = ext
            .ring_indices
            .iter()
            .map(|i| renumber.get(i).copied().unwrap_or(*i))
            .collect();
        out.push_str(SEP);
        out.push_str(&MarkushExtension::new(idx, ext.group_name.clone()).to_string());
    }
    Ok(out)
}

/// Order-independent identity key for a Markush entry.
///
/// Frequency variables take part in canonicalization; each extension is described by the canonical positions of the atoms of
/// the smallest ring through each of its closure bonds.
pub fn markush_graph_key(m: &SmilesM) -> Result<CanonicalKey, SmilesError> {
    let g = &m.main;
    let writes = canonical_writes_with(g, true, Some(&m.freq_groups))?;
    let text = writes[0].text.clone();
    if m.extensions.is_empty() {
        return Ok(CanonicalKey {
            text,
            stereo_included: true,
        });
    }
    let adj = g.adjacency();
    let ring_atoms: Vec<Vec<usize>> = m
        .ring_bonds
        .iter()
        .map(|&bi| {
            let b = g.bonds[bi];
            shortest_path_without(&adj, b.begin, b.end, bi).unwrap_or_default()
        })
        .collect();
    let mut best: Option<String> = None;
    for w in &writes {
        let mut pos = vec![0; g.atoms.len()];
        for (k, &a) in w.atom_order.iter().enumerate() {
            pos[a] = k;
        }
        let mut records: Vec<String> = m
            .extensions
            .iter()
            .map(|ext| {
                let rings: BTreeSet<Vec<usize>> = ext
                    .ring_indices
                    .iter()
                    .filter_map(|&i| ring_atoms.get(i - 1))
                    .map(|atoms| {
                        let mut p: Vec<usize> = atoms.iter().map(|&a| pos[a]).collect();
                        p.sort_unstable();
                        p
                    })
                    .collect();
                let rings: Vec<String> = rings
                    .iter()
                    .map(|r| {
                        let s: Vec<String> = r.iter().map(usize::to_string).collect();
                        format!("({})", s.join(","))
                    })
                    .collect();
                format!("{}:{}", rings.join(""), ext.group_name)
            })
            .collect();
        records.sort();
        records.dedup();
        let candidate = records.join(SEP);
        if best.as_ref().is_none_or(|b| candidate < *b) {
            best = Some(candidate);
        }
    }
    Ok(CanonicalKey {
        text: format!("{text}{SEP}{}", best.unwrap()),
        stereo_included: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::{canonical_smiles, parse};

    #[test]
    fn plain_smiles() {
        let m = parse_m("CCO").unwrap();
        assert!(m.extensions.is_empty() && m.freq_groups.is_empty());
        assert_eq!(m.main, parse("CCO").unwrap());
        assert_eq!(write_m(&m).unwrap(), "CCO");
    }

    #[test]
    fn single_extension() {
        let m = parse_m("c1ccccc1<sep>1:R1").unwrap();
        assert_eq!(m.extensions, vec![MarkushExtension::new(vec![1], "R1")]);
        let text = write_m(&m).unwrap();
        assert_eq!(text.matches(SEP).count(), 1);
        assert_eq!(parse_m(&text).unwrap(), m);
    }

    #[test]
    fn two_rings() {
        let m = parse_m("C1CCCCC1C1CCCCC1<sep>1,2:OMe").unwrap();
        assert_eq!(m.ring_count(), 2);
        assert_eq!(m.extensions[0].ring_indices, vec![1, 2]);
        assert_eq!(parse_m(&write_m(&m).unwrap()).unwrap(), m);
    }

    #[test]
    fn errors_name_fields() {
        assert_eq!(
            parse_m("CC<sep>1:R1"),
            Err(MarkushError::RingOutOfRange {
                field: 1,
                index: 1,
                rings: 0
            })
        );
        assert_eq!(
            parse_m("C1CC1<sep>1R1"),
            Err(MarkushError::MissingColon { field: 1 })
        );
        assert!(matches!(
            parse_m("C1CC1<sep>1:R1<sep>x:R2"),
            Err(MarkushError::BadRingIndex { field: 2, .. })
        ));
        assert_eq!(
            parse_m("C1CC1<sep>1:"),
            Err(MarkushError::EmptyGroup { field: 1 })
        );
        assert_eq!(
            parse_m("C1CC1<sep>0:R"),
            Err(MarkushError::BadRingIndex {
                field: 1,
                token: "0".into()
            })
        );
        assert_eq!(parse_m("C(C").unwrap_err().field(), 0);
    }

    #[test]
    fn frequency_variables_kept() {
        let m = parse_m("c1ccccc1[CH2?n]O").unwrap();
        assert_eq!(m.freq_groups.get(&6).map(String::as_str), Some("n"));
        let again = parse_m(&write_m(&m).unwrap()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn key_ignores_extension_order() {
        let a = parse_m("C1CCCCC1C1CCCCC1<sep>1:R1<sep>2:R2").unwrap();
        let b = parse_m("C1CCCCC1C1CCCCC1<sep>2:R2<sep>1:R1").unwrap();
        assert_eq!(
            markush_graph_key(&a).unwrap(),
            markush_graph_key(&b).unwrap()
        );
    }

    #[test]
    fn key_plain_equals_canonical() {
        let m = parse_m("OCC").unwrap();
        assert_eq!(
            markush_graph_key(&m).unwrap(),
            canonical_smiles(&parse("CCO").unwrap(), true).unwrap()
        );
    }

    #[test]
    fn key_distinguishes_groups() {
        let a = parse_m("c1ccccc1<sep>1:R1").unwrap();
        let b = parse_m("c1ccccc1<sep>1:R2").unwrap();
        assert_ne!(
            markush_graph_key(&a).unwrap(),
            markush_graph_key(&b).unwrap()
        );
    }

    #[test]
    fn key_respects_symmetry() {
        // the two rings of biphenyl-like mains are equivalent
        let a = parse_m("C1CCCCC1C1CCCCC1<sep>1:R1").unwrap();
        let b = parse_m("C1CCCCC1C1CCCCC1<sep>2:R1").unwrap();
        assert_eq!(
            markush_graph_key(&a).unwrap(),
            markush_graph_key(&b).unwrap()
        );
        let c = parse_m("C1CCCCC1C1CCCCC1<sep>1,2:R1").unwrap();
        assert_ne!(
            markush_graph_key(&a).unwrap(),
            markush_graph_key(&c).unwrap()
        );
    }

    #[test]
    fn key_freq_variable_matters() {
        let a = parse_m("c1ccccc1[CH2?n]O").unwrap();
        let b = parse_m("c1ccccc1[CH2?m]O").unwrap();
        let c = parse_m("c1ccccc1CO").unwrap();
        let ka = markush_graph_key(&a).unwrap();
        assert_ne!(ka, markush_graph_key(&b).unwrap());
        assert_ne!(ka, markush_graph_key(&c).unwrap());
    }
}
