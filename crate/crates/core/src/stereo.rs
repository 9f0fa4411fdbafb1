//! Stereo perception from 2D coordinates and wedge bonds, and the inverse
//! wedge assignment used when generating depictions.
//!
//! Neighbors of a stereocenter are ordered by canonical rank (ascending) with
//! an implicit hydrogen or lone pair last. A solid wedge lifts its far atom to
//! z = +1, a hashed wedge to z = -1. For three explicit neighbors the sign of
//! `det(v1, v2, v3)` of the center-relative vectors decides the parity; for
//! four, `det(p1 - p4, p2 - p4, p3 - p4)`. A positive sign is counterclockwise.
//! Wedges point away from the stereocenter: the bond's begin atom is the center.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{
    parity_to_reference, BondType, DoubleBondStereo, Geometry, MolGraph, Parity, Slot,
};
use crate::smiles::canonical_ranks;

/// Normalized sine / determinant magnitude below which a configuration is
/// treated as degenerate.
pub const COLLINEAR_TOL: f64 = 1e-6;

/// Double bonds whose smallest ring has fewer atoms than this are never
/// stereo-perceived.
pub const MIN_STEREO_RING: usize = 8;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StereoAssignment {
    /// Parity in the graph's reference neighbor order.
    pub tetra: BTreeMap<usize, Parity>,
    pub double: BTreeMap<usize, DoubleBondStereo>,
    pub uncertain_atoms: BTreeSet<usize>,
    pub uncertain_bonds: BTreeSet<usize>,
}

impl StereoAssignment {
    pub fn merge(mut self, other: StereoAssignment) -> StereoAssignment {
        self.tetra.extend(other.tetra);
        self.double.extend(other.double);
        self.uncertain_atoms.extend(other.uncertain_atoms);
        self.uncertain_bonds.extend(other.uncertain_bonds);
        self
    }

    pub fn is_certain(&self) -> bool {
        self.uncertain_atoms.is_empty() && self.uncertain_bonds.is_empty()
    }

    /// Copy of `g` carrying exactly the perceived stereo, wedges flattened.
    pub fn apply(&self, g: &MolGraph) -> MolGraph {
        let mut out = g.without_stereo().without_wedges();
        out.tetra_parity = self.tetra.clone();
        out.db_geometry = self.double.clone();
        out
    }
}

type P3 = [f64; 3];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn det3(a: P3, b: P3, c: P3) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

fn norm(a: P3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Sign of a normalized determinant, `None` when degenerate.
fn oriented(a: P3, b: P3, c: P3) -> Option<bool> {
    let d = det3(a, b, c);
    let scale = norm(a) * norm(b) * norm(c);
    if !(scale > 0.0) || (d / scale).abs() < COLLINEAR_TOL {
        None
    } else {
        Some(d > 0.0)
    }
}

/// Atoms with 3 or 4 neighbors whose canonical ranks are pairwise distinct.
pub fn is_stereo_candidate(g: &MolGraph, ranks: &[usize], atom: usize) -> bool {
    let nbrs = g.neighbors(atom);
    if !(3..=4).contains(&nbrs.len()) {
        return false;
    }
    let mut r: Vec<usize> = nbrs.iter().map(|&n| ranks[n]).collect();
    r.sort_unstable();
    r.dedup();
    r.len() == nbrs.len()
}

fn wedge_z(kind: BondType) -> f64 {
    match kind {
        BondType::WedgeSolid => 1.0,
        BondType::WedgeHashed => -1.0,
        _ => 0.0,
    }
}

/// Parity of `center` (reference order) implied by the single wedge `bond`.
fn parity_from_wedge(g: &MolGraph, ranks: &[usize], center: usize, bond: usize) -> Option<Parity> {
    let c = g.atoms[center].coord?;
    let mut nbrs = g.neighbors(center);
    nbrs.sort_by_key(|&n| ranks[n]);
    let lifted = g.bonds[bond].end;
    let z = wedge_z(g.bonds[bond].kind);
    let mut pts = Vec::with_capacity(4);
    for &n in &nbrs {
        let (x, y) = g.atoms[n].coord?;
        let zn = if n == lifted { z } else { 0.0 };
        pts.push([x - c.0, y - c.1, zn]);
    }
    let ccw = if pts.len() == 3 {
        oriented(pts[0], pts[1], pts[2])?
    } else {
        oriented(
            sub(pts[0], pts[3]),
            sub(pts[1], pts[3]),
            sub(pts[2], pts[3]),
        )?
    };
    let mut listed: Vec<Slot> = nbrs.into_iter().map(Slot::Atom).collect();
    if listed.len() == 3 {
        listed.push(Slot::Implicit);
    }
    let p = if ccw {
        Parity::CounterClockwise
    } else {
        Parity::Clockwise
    };
    parity_to_reference(g, center, &listed, p)
}

pub fn perceive_tetrahedral(g: &MolGraph) -> StereoAssignment {
    perceive_tetrahedral_ranked(g, &canonical_ranks(g))
}

fn perceive_tetrahedral_ranked(g: &MolGraph, ranks: &[usize]) -> StereoAssignment {
    let mut out = StereoAssignment::default();
    let mut wedges_at: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (bi, b) in g.bonds.iter().enumerate() {
        if !b.kind.is_wedge() {
            continue;
        }
        if is_stereo_candidate(g, ranks, b.begin) {
            wedges_at.entry(b.begin).or_default().push(bi);
        } else {
            out.uncertain_bonds.insert(bi);
        }
    }
    for (center, wedges) in wedges_at {
        let votes: Vec<Option<Parity>> = wedges
            .iter()
            .map(|&bi| parity_from_wedge(g, ranks, center, bi))
            .collect();
        match votes[0] {
            Some(p) if votes.iter().all(|v| *v == Some(p)) => {
                out.tetra.insert(center, p);
            }
            _ => {
                out.uncertain_atoms.insert(center);
            }
        }
    }
    out
}

fn cross(u: (f64, f64), v: (f64, f64)) -> f64 {
    u.0 * v.1 - u.1 * v.0
}

/// Highest-ranked substituent on `atom` other than `partner`, if unique.
fn top_substituent(g: &MolGraph, ranks: &[usize], atom: usize, partner: usize) -> Option<usize> {
    let mut subs: Vec<usize> = g
        .neighbors(atom)
        .into_iter()
        .filter(|&n| n != partner)
        .collect();
    subs.sort_by_key(|&n| std::cmp::Reverse(ranks[n]));
    match subs.as_slice() {
        [only] => Some(*only),
        [a, b, ..] if ranks[*a] != ranks[*b] => Some(*a),
        _ => None,
    }
}

/// Double bonds eligible for cis/trans: not in a small ring, with a unique
/// top-ranked substituent on both ends. Returns `(bond, refs)`.
pub fn double_bond_candidates(g: &MolGraph, ranks: &[usize]) -> Vec<(usize, (usize, usize))> {
    let mut out = Vec::new();
    for (bi, b) in g.bonds.iter().enumerate() {
        if b.kind != BondType::Double {
            continue;
        }
        if g.smallest_ring_through(bi)
            .is_some_and(|n| n < MIN_STEREO_RING)
        {
            continue;
        }
        let (Some(ra), Some(rb)) = (
            top_substituent(g, ranks, b.begin, b.end),
            top_substituent(g, ranks, b.end, b.begin),
        ) else {
            continue;
        };
        out.push((bi, (ra, rb)));
    }
    out
}

pub fn perceive_double_geometry(g: &MolGraph) -> StereoAssignment {
    perceive_double_ranked(g, &canonical_ranks(g))
}

fn perceive_double_ranked(g: &MolGraph, ranks: &[usize]) -> StereoAssignment {
    let mut out = StereoAssignment::default();
    for (bi, (ra, rb)) in double_bond_candidates(g, ranks) {
        let b = g.bonds[bi];
        let coords = [b.begin, b.end, ra, rb].map(|i| g.atoms[i].coord);
        let [Some(a), Some(e), Some(sa), Some(sb)] = coords else {
            out.uncertain_bonds.insert(bi);
            continue;
        };
        let axis = (e.0 - a.0, e.1 - a.1);
        let da = (sa.0 - a.0, sa.1 - a.1);
        let db = (sb.0 - e.0, sb.1 - e.1);
        let len = |v: (f64, f64)| v.0.hypot(v.1);
        let sin_a = cross(axis, da) / (len(axis) * len(da));
        let sin_b = cross(axis, db) / (len(axis) * len(db));
        if !(sin_a.abs() >= COLLINEAR_TOL && sin_b.abs() >= COLLINEAR_TOL) {
            out.uncertain_bonds.insert(bi);
            continue;
        }
        let geometry = if (sin_a > 0.0) == (sin_b > 0.0) {
            Geometry::Cis
        } else {
            Geometry::Trans
        };
        out.double.insert(
            bi,
            DoubleBondStereo {
                geometry,
                refs: (ra, rb),
            },
        );
    }
    out
}

/// Both perception passes with one rank computation.
pub fn perceive_stereo(g: &MolGraph) -> StereoAssignment {
    let ranks = canonical_ranks(g);
    perceive_tetrahedral_ranked(g, &ranks).merge(perceive_double_ranked(g, &ranks))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WedgeError {
    #[error("atom {atom} has no coordinates needed for wedge assignment")]
    MissingCoordinates { atom: usize },
    #[error("atom {atom} is not a stereocenter (needs 3-4 neighbors of distinct rank)")]
    NotStereocenter { atom: usize },
    #[error("no incident bond of atom {atom} can express its parity")]
    Unresolvable { atom: usize },
}

/// Converts one incident single bond per parity entry into a wedge so that
/// [`perceive_tetrahedral`] recovers the parity. Existing wedges are
/// flattened first.
pub fn assign_wedges(g: &MolGraph) -> Result<MolGraph, WedgeError> {
    let mut out = g.without_wedges();
    if g.tetra_parity.is_empty() {
        return Ok(out);
    }
    let ranks = canonical_ranks(&out);
    for &center in g.tetra_parity.keys() {
        if !is_stereo_candidate(&out, &ranks, center) {
            return Err(WedgeError::NotStereocenter { atom: center });
        }
        for n in std::iter::once(center).chain(out.neighbors(center)) {
            if out.atoms[n].coord.is_none() {
                return Err(WedgeError::MissingCoordinates { atom: n });
            }
        }
    }
    let centers: BTreeSet<usize> = g.tetra_parity.keys().copied().collect();
    let ring = out.ring_bonds();
    let adj = out.adjacency();
    for (&center, &parity) in &g.tetra_parity {
        let mut options: Vec<(usize, usize)> = adj[center]
            .iter()
            .filter(|&&(_, bi)| out.bonds[bi].kind == BondType::Single)
            .map(|&(nb, bi)| (nb, bi))
            .collect();
        options.sort_by_key(|&(nb, bi)| {
            (centers.contains(&nb), ring.contains(&bi), adj[nb].len(), nb)
        });
        let mut done = false;
        for (nb, bi) in options {
            let saved = out.bonds[bi];
            for kind in [BondType::WedgeSolid, BondType::WedgeHashed] {
                out.bonds[bi].begin = center;
                out.bonds[bi].end = nb;
                out.bonds[bi].kind = kind;
                if parity_from_wedge(&out, &ranks, center, bi) == Some(parity) {
                    done = true;
                    break;
                }
            }
            if done {
                break;
            }
            out.bonds[bi] = saved;
        }
        if !done {
            return Err(WedgeError::Unresolvable { atom: center });
        }
    }
    let check = perceive_tetrahedral_ranked(&out, &ranks);
    for (&center, &parity) in &g.tetra_parity {
        if check.tetra.get(&center) != Some(&parity) {
            return Err(WedgeError::Unresolvable { atom: center });
        }
    }
    Ok(out)
}
