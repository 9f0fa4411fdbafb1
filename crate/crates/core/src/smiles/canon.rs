//! Morgan-style atom ranking and canonical SMILES.
//!
//! Ranks start from atom invariants and are refined by neighborhood until the
//! number of classes stops growing. Remaining ties are broken by
//! individualizing one atom of the lowest tied class and refining again; the
//! canonical string is the lexicographically smallest SMILES over every
//! tie-breaking branch, which makes it independent of input atom order even
//! when stereo annotations distinguish otherwise symmetric atoms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{Adjacency, BondType, MolGraph};

use super::write::{write_with, WriteSpec, Written};
use super::SmilesError;

/// Upper bound on tie-breaking leaves explored per molecule. Highly
/// symmetric graphs beyond this bound fall back to the best leaf found.
const MAX_LEAVES: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalKey {
    pub text: String,
    pub stereo_included: bool,
}

fn bond_code(kind: BondType) -> u8 {
    match kind.constitutional() {
        BondType::Single => 1,
        BondType::Double => 2,
        BondType::Triple => 3,
        BondType::Aromatic => 4,
        _ => 0,
    }
}

/// Symmetry classes: equal ranks for atoms the refinement cannot separate.
pub fn canonical_ranks(g: &MolGraph) -> Vec<usize> {
    let adj = g.adjacency();
    refine(g, &adj, initial_ranks(g, &adj, None))
}

fn initial_ranks(
    g: &MolGraph,
    adj: &Adjacency,
    freq_vars: Option<&BTreeMap<usize, String>>,
) -> Vec<usize> {
    let keys: Vec<_> = (0..g.atoms.len())
        .map(|i| {
            let a = &g.atoms[i];
            (
                a.element.as_str(),
                a.formal_charge,
                adj[i].len(),
                a.aromatic,
                a.isotope.unwrap_or(0),
                g.hydrogen_count(i),
                freq_vars.and_then(|f| f.get(&i)).map(String::as_str),
            )
        })
        .collect();
    dense_ranks(&keys)
}

fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    let mut r = 0;
    for w in 0..idx.len() {
        if w > 0 && keys[idx[w]] != keys[idx[w - 1]] {
            r += 1;
        }
        ranks[idx[w]] = r;
    }
    ranks
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().max().map_or(0, |m| m + 1)
}

fn refine(g: &MolGraph, adj: &Adjacency, mut ranks: Vec<usize>) -> Vec<usize> {
    loop {
        let before = class_count(&ranks);
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..ranks.len())
            .map(|i| {
                let mut env: Vec<(usize, u8)> = adj[i]
                    .iter()
                    .map(|&(nb, bi)| (ranks[nb], bond_code(g.bonds[bi].kind)))
                    .collect();
                env.sort_unstable();
                (ranks[i], env)
            })
            .collect();
        let next = dense_ranks(&keys);
        if class_count(&next) == before {
            return next;
        }
        ranks = next;
    }
}

/// Every fully tie-broken ordering reachable by individualization.
fn leaf_orders(g: &MolGraph, freq_vars: Option<&BTreeMap<usize, String>>) -> Vec<Vec<usize>> {
    let adj = g.adjacency();
    let start = refine(g, &adj, initial_ranks(g, &adj, freq_vars));
    let mut leaves = Vec::new();
    let mut stack = vec![start];
    while let Some(ranks) = stack.pop() {
        if leaves.len() >= MAX_LEAVES {
            break;
        }
        let n = ranks.len();
        if class_count(&ranks) == n {
            leaves.push(ranks);
            continue;
        }
        let mut sizes = vec![0usize; n];
        for &r in &ranks {
            sizes[r] += 1;
        }
        let target = (0..n).find(|&r| sizes[r] > 1).unwrap();
        let members: Vec<usize> = (0..n).filter(|&i| ranks[i] == target).collect();
        for &chosen in members.iter().rev() {
            let split: Vec<usize> = (0..n)
                .map(|i| 2 * ranks[i] + usize::from(ranks[i] == target && i != chosen))
                .collect();
            stack.push(refine(g, &adj, dense_ranks(&split)));
        }
    }
    leaves
}

/// All writes achieving the canonical (smallest) text.
pub fn canonical_writes(g: &MolGraph, include_stereo: bool) -> Result<Vec<Written>, SmilesError> {
    canonical_writes_with(g, include_stereo, None)
}

/// As [`canonical_writes`], with frequency variables written into and
/// distinguishing their atoms.
pub fn canonical_writes_with(
    g: &MolGraph,
    include_stereo: bool,
    freq_vars: Option<&BTreeMap<usize, String>>,
) -> Result<Vec<Written>, SmilesError> {
    let stripped;
    let g = if include_stereo {
        g
    } else {
        stripped = g.without_stereo();
        &stripped
    };
    let mut best: Vec<Written> = Vec::new();
    for order in leaf_orders(g, freq_vars) {
        let w = write_with(
            g,
            &WriteSpec {
                order: Some(&order),
                stereo: include_stereo,
                freq_vars,
                ..WriteSpec::default()
            },
        )?;
        match best.first().map(|b| w.text.cmp(&b.text)) {
            None | Some(std::cmp::Ordering::Equal) => best.push(w),
            Some(std::cmp::Ordering::Less) => best = vec![w],
            Some(std::cmp::Ordering::Greater) => {}
        }
    }
    if best.is_empty() {
        // empty graph
        best.push(Written {
            text: String::new(),
            atom_order: Vec::new(),
            ring_openings: Vec::new(),
        });
    }
    Ok(best)
}

pub fn canonical_smiles(g: &MolGraph, include_stereo: bool) -> Result<CanonicalKey, SmilesError> {
    let writes = canonical_writes(g, include_stereo)?;
    Ok(CanonicalKey {
        text: writes.into_iter().next().unwrap().text,
        stereo_included: include_stereo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse;

    fn canon(s: &str, stereo: bool) -> String {
        canonical_smiles(&parse(s).unwrap(), stereo).unwrap().text
    }

    #[test]
    fn methane_rank() {
        assert_eq!(canonical_ranks(&parse("C").unwrap()), vec![0]);
    }

    #[test]
    fn benzene_single_class() {
        let r = canonical_ranks(&parse("c1ccccc1").unwrap());
        assert!(r.iter().all(|&x| x == r[0]));
    }

    #[test]
    fn ethanol_rank_multisets_match() {
        let mut a = canonical_ranks(&parse("CCO").unwrap());
        let mut b = canonical_ranks(&parse("OCC").unwrap());
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn spellings_agree() {
        assert_eq!(canon("OCC", true), canon("CCO", true));
        assert_eq!(canon("C(C)(C)O", true), canon("OC(C)C", true));
        assert_eq!(canon("c1ccncc1", true), canon("n1ccccc1", true));
        assert_eq!(
            canon("N[C@@H](C)C(=O)O", true),
            canon("OC(=O)[C@@H](N)C", true)
        );
        assert_eq!(canon("F/C=C/F", true), canon("F\\C=C\\F", true));
        assert_eq!(canon("F/C=C/F", true), canon("C(\\F)=C/F", true));
    }

    #[test]
    fn stereo_distinguishes_and_strips() {
        assert_ne!(canon("C/C=C/C", true), canon("C/C=C\\C", true));
        assert_eq!(canon("C/C=C/C", false), canon("C/C=C\\C", false));
        assert_ne!(
            canon("N[C@@H](C)C(=O)O", true),
            canon("N[C@H](C)C(=O)O", true)
        );
        assert!(!canon("N[C@@H](C)C(=O)O", false).contains('@'));
    }

    #[test]
    fn parity_on_symmetric_center_is_irrelevant() {
        assert_eq!(canon("C[C@H](C)O", true), canon("C[C@@H](C)O", true));
    }

    #[test]
    fn fixed_point() {
        for s in [
            "CCO",
            "c1ccccc1C(=O)O",
            "C/C=C/C",
            "N[C@@H](C)C(=O)O",
            "C1CC2CCC1C2",
        ] {
            let k = canon(s, true);
            assert_eq!(canon(&k, true), k);
        }
    }

    #[test]
    fn aromatic_and_kekule_differ() {
        assert_ne!(canon("c1ccccc1", true), canon("C1=CC=CC=C1", true));
    }
}
