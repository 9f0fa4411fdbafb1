//! Random small-molecule graphs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::elements::default_valence;
use crate::graph::{Atom, BondType, DoubleBondStereo, Geometry, MolGraph, Parity};
use crate::smiles::{canonical_ranks, write};
use crate::stereo::{double_bond_candidates, is_stereo_candidate};

#[derive(Clone, Debug)]
pub struct ScaffoldOptions {
    pub min_atoms: usize,
    pub max_atoms: usize,
    pub ring_prob: f64,
    pub ring_sizes: (usize, usize),
    pub aromatic_prob: f64,
    pub double_prob: f64,
    pub triple_prob: f64,
    /// Chance of one more ring closure beyond the first ring.
    pub extra_ring_prob: f64,
    /// Charges, isotopes and a second component.
    pub exotic_prob: f64,
}

impl ScaffoldOptions {
    /// Broad coverage for codec tests: multiple rings, charges, isotopes.
    pub fn codec() -> Self {
        ScaffoldOptions {
            min_atoms: 1,
            max_atoms: 18,
            ring_prob: 0.6,
            ring_sizes: (3, 8),
            aromatic_prob: 0.35,
            double_prob: 0.15,
            triple_prob: 0.03,
            extra_ring_prob: 0.3,
            exotic_prob: 0.2,
        }
    }

    /// Drawable molecules: a tree with at most one ring.
    pub fn drawable() -> Self {
        ScaffoldOptions {
            min_atoms: 6,
            max_atoms: 16,
            ring_prob: 0.6,
            ring_sizes: (5, 8),
            aromatic_prob: 0.4,
            double_prob: 0.18,
            triple_prob: 0.0,
            extra_ring_prob: 0.0,
            exotic_prob: 0.0,
        }
    }
}

const ELEMENTS: &[(&str, u32)] = &[
    ("C", 60),
    ("N", 12),
    ("O", 12),
    ("S", 5),
    ("F", 4),
    ("Cl", 4),
    ("Br", 3),
];

fn pick_element(rng: &mut impl Rng) -> &'static str {
    let total: u32 = ELEMENTS.iter().map(|e| e.1).sum();
    let mut x = rng.gen_range(0..total);
    for &(el, w) in ELEMENTS {
        if x < w {
            return el;
        }
        x -= w;
    }
    "C"
}

/// Valence still available on an atom under its default valence.
pub fn free_valence(g: &MolGraph, atom: usize) -> u32 {
    let a = &g.atoms[atom];
    let Some(v) = default_valence(&a.element) else {
        return 0;
    };
    let used: u32 = g
        .bonds
        .iter()
        .filter(|b| b.contains(atom))
        .map(|b| b.kind.valence())
        .sum::<u32>()
        + u32::from(a.aromatic);
    let v = v + u32::from(a.formal_charge > 0 && a.element == "N");
    v.saturating_sub(used)
}

fn add_ring(g: &mut MolGraph, rng: &mut impl Rng, opts: &ScaffoldOptions, attach: Option<usize>) {
    let (lo, hi) = opts.ring_sizes;
    let size = rng.gen_range(lo..=hi);
    let aromatic = size == 6 && rng.gen_bool(opts.aromatic_prob);
    let start = g.atoms.len();
    for i in 0..size {
        let el = if aromatic {
            if i > 0 && rng.gen_bool(0.12) {
                "N"
            } else {
                "C"
            }
        } else if i > 0 && rng.gen_bool(0.12) {
            if rng.gen_bool(0.5) {
                "N"
            } else {
                "O"
            }
        } else {
            "C"
        };
        g.add_atom(if aromatic {
            Atom::aromatic(el)
        } else {
            Atom::new(el)
        });
    }
    for i in 0..size {
        let (a, b) = (start + i, start + (i + 1) % size);
        let kind = if aromatic {
            BondType::Aromatic
        } else {
            BondType::Single
        };
        g.add_bond(a, b, kind);
    }
    if !aromatic && size >= 5 && rng.gen_bool(0.3) {
        let i = rng.gen_range(0..size);
        let (a, b) = (start + i, start + (i + 1) % size);
        let bi = g.bond_between(a, b).unwrap();
        if free_valence(g, a) >= 1 && free_valence(g, b) >= 1 {
            g.bonds[bi].kind = BondType::Double;
        }
    }
    if let Some(p) = attach {
        let ring_atom = start + rng.gen_range(0..size);
        if free_valence(g, p) >= 1 && free_valence(g, ring_atom) >= 1 {
            g.add_bond(p, ring_atom, BondType::Single);
        }
    }
}

fn grow(g: &mut MolGraph, rng: &mut impl Rng, opts: &ScaffoldOptions, target: usize) {
    let mut stall = 0;
    while g.atoms.len() < target && stall < 200 {
        let open: Vec<usize> = (0..g.atoms.len())
            .filter(|&i| free_valence(g, i) >= 1)
            .collect();
        let Some(&parent) = open.choose(rng) else {
            return;
        };
        let el = pick_element(rng);
        let child_max = default_valence(el).unwrap_or(1);
        let room = free_valence(g, parent).min(child_max);
        let order = if room >= 3 && child_max >= 4 && rng.gen_bool(opts.triple_prob) {
            BondType::Triple
        } else if room >= 2 && rng.gen_bool(opts.double_prob) {
            BondType::Double
        } else {
            BondType::Single
        };
        if g.atoms[parent].aromatic && order != BondType::Single {
            stall += 1;
            continue;
        }
        let c = g.add_atom(Atom::new(el));
        g.add_bond(parent, c, order);
        stall = 0;
    }
}

fn add_extra_closure(g: &mut MolGraph, rng: &mut impl Rng) {
    let open: Vec<usize> = (0..g.atoms.len())
        .filter(|&i| free_valence(g, i) >= 1 && !g.atoms[i].aromatic)
        .collect();
    for _ in 0..20 {
        let (Some(&a), Some(&b)) = (open.choose(rng), open.choose(rng)) else {
            return;
        };
        if a != b && g.bond_between(a, b).is_none() {
            g.add_bond(a, b, BondType::Single);
            return;
        }
    }
}

fn add_exotics(g: &mut MolGraph, rng: &mut impl Rng) {
    if g.atoms.is_empty() {
        return;
    }
    let i = rng.gen_range(0..g.atoms.len());
    let h = g.hydrogen_count(i);
    let a = &mut g.atoms[i];
    match (a.element.as_str(), a.aromatic) {
        ("N", false) => {
            a.formal_charge = 1;
            a.explicit_h = Some(h + 1);
        }
        ("O", false) if h >= 1 => {
            a.formal_charge = -1;
            a.explicit_h = Some(h - 1);
        }
        _ => {
            a.isotope = Some(if a.element == "C" {
                13
            } else {
                rng.gen_range(2..80)
            });
            a.explicit_h = Some(h);
        }
    }
    if rng.gen_bool(0.3) {
        for (el, q) in [("Na", 1), ("Cl", -1)] {
            g.add_atom(Atom {
                formal_charge: q,
                explicit_h: Some(0),
                ..Atom::new(el)
            });
        }
    }
}

/// A random connected skeleton (plus, rarely, a counter-ion pair). No stereo.
pub fn random_skeleton(rng: &mut impl Rng, opts: &ScaffoldOptions) -> MolGraph {
    let target = rng.gen_range(opts.min_atoms..=opts.max_atoms);
    let mut g = MolGraph::new();
    if target >= opts.ring_sizes.0 && rng.gen_bool(opts.ring_prob) {
        add_ring(&mut g, rng, opts, None);
    } else {
        g.add_atom(Atom::new("C"));
    }
    grow(&mut g, rng, opts, target);
    if opts.extra_ring_prob > 0.0 && rng.gen_bool(opts.extra_ring_prob) {
        if rng.gen_bool(0.5) && g.atoms.len() + opts.ring_sizes.0 <= opts.max_atoms + 8 {
            let open: Vec<usize> = (0..g.atoms.len())
                .filter(|&i| free_valence(&g, i) >= 1)
                .collect();
            let attach = open.choose(rng).copied();
            add_ring(&mut g, rng, opts, attach);
        } else {
            add_extra_closure(&mut g, rng);
        }
    }
    if opts.exotic_prob > 0.0 && rng.gen_bool(opts.exotic_prob) {
        add_exotics(&mut g, rng);
    }
    g
}

/// Sp3 carbons that can carry a meaningful tetrahedral parity.
pub fn tetra_candidates(g: &MolGraph, ranks: &[usize]) -> Vec<usize> {
    let adj = g.adjacency();
    (0..g.atoms.len())
        .filter(|&i| {
            let a = &g.atoms[i];
            a.element == "C"
                && !a.aromatic
                && a.formal_charge == 0
                && adj[i]
                    .iter()
                    .all(|&(_, bi)| g.bonds[bi].kind == BondType::Single)
                && (adj[i].len() == 4 || (adj[i].len() == 3 && g.hydrogen_count(i) == 1))
                && is_stereo_candidate(g, ranks, i)
        })
        .collect()
}

fn random_parity(rng: &mut impl Rng) -> Parity {
    if rng.gen_bool(0.5) {
        Parity::Clockwise
    } else {
        Parity::CounterClockwise
    }
}

/// Adds random parities (each candidate with probability `p_tetra`) and,
/// with probability `p_double`, random geometry on every eligible double bond
/// using randomly chosen reference substituents. Double-bond stereo is
/// dropped again if the result cannot be written.
pub fn add_random_stereo(g: &mut MolGraph, rng: &mut impl Rng, p_tetra: f64, p_double: f64) {
    let ranks = canonical_ranks(g);
    for c in tetra_candidates(g, &ranks) {
        if rng.gen_bool(p_tetra) {
            g.tetra_parity.insert(c, random_parity(rng));
        }
    }
    if rng.gen_bool(p_double) {
        for (bi, _) in double_bond_candidates(g, &ranks) {
            let b = g.bonds[bi];
            let side = |a: usize, partner: usize| -> Vec<usize> {
                g.neighbors(a)
                    .into_iter()
                    .filter(|&n| n != partner)
                    .collect()
            };
            let ra = *side(b.begin, b.end).choose(rng).unwrap();
            let rb = *side(b.end, b.begin).choose(rng).unwrap();
            let geometry = if rng.gen_bool(0.5) {
                Geometry::Cis
            } else {
                Geometry::Trans
            };
            g.db_geometry.insert(
                bi,
                DoubleBondStereo {
                    geometry,
                    refs: (ra, rb),
                },
            );
        }
        if write(g).is_err() {
            g.db_geometry.clear();
        }
    }
}

/// Skeleton plus random stereo: the workhorse for codec property tests.
pub fn random_molecule(rng: &mut impl Rng, opts: &ScaffoldOptions) -> MolGraph {
    let mut g = random_skeleton(rng, opts);
    add_random_stereo(&mut g, rng, 0.7, 0.7);
    g
}

/// A small edit of `g`: one extra methyl or a swapped terminal heteroatom.
pub fn near_duplicate(g: &MolGraph, rng: &mut impl Rng) -> MolGraph {
    for _ in 0..50 {
        let mut h = g.without_stereo();
        let i = rng.gen_range(0..h.atoms.len());
        if rng.gen_bool(0.5) {
            if free_valence(&h, i) >= 1 {
                let c = h.add_atom(Atom::new("C"));
                h.add_bond(i, c, BondType::Single);
                return h;
            }
        } else if h.degree(i) == 1 && !h.atoms[i].aromatic {
            let used = g
                .bonds
                .iter()
                .filter(|b| b.contains(i))
                .map(|b| b.kind.valence())
                .sum::<u32>();
            let choices: Vec<&str> = ["C", "N", "O", "F", "Cl"]
                .into_iter()
                .filter(|&e| e != h.atoms[i].element && default_valence(e).unwrap() >= used)
                .collect();
            if let Some(&e) = choices.choose(rng) {
                h.atoms[i].element = e.to_string();
                return h;
            }
        }
    }
    g.without_stereo()
}
