//! 2D depiction coordinates for trees with at most one simple ring.
//!
//! Ring atoms sit on a regular polygon; everything else is placed breadth
//! first on hexagonal-lattice angles, choosing the zig-zag side at random.
//! Crowded non-bonded pairs are nudged apart and the result is scaled into
//! the unit square with its aspect ratio kept.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::graph::MolGraph;

const MIN_SEPARATION: f64 = 0.6;
const NUDGE_ROUNDS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("layout needs a connected graph")]
    Disconnected,
    #[error("layout supports at most one simple ring")]
    TooManyRings,
    #[error("atom {0} has more than four neighbors")]
    Crowded(usize),
}

/// Atoms of the single ring in cyclic order, if there is one.
fn ring_cycle(g: &MolGraph) -> Result<Option<Vec<usize>>, LayoutError> {
    let ring = g.ring_bonds();
    if ring.is_empty() {
        return Ok(None);
    }
    let n = g.atoms.len();
    let mut ring_adj = vec![Vec::new(); n];
    for &bi in &ring {
        let b = g.bonds[bi];
        ring_adj[b.begin].push(b.end);
        ring_adj[b.end].push(b.begin);
    }
    if ring_adj.iter().any(|v| !(v.is_empty() || v.len() == 2)) {
        return Err(LayoutError::TooManyRings);
    }
    let start = (0..n).find(|&i| !ring_adj[i].is_empty()).unwrap();
    let mut cycle = vec![start];
    let mut prev = start;
    let mut cur = ring_adj[start][0];
    while cur != start {
        cycle.push(cur);
        let next = if ring_adj[cur][0] == prev {
            ring_adj[cur][1]
        } else {
            ring_adj[cur][0]
        };
        prev = cur;
        cur = next;
    }
    if cycle.len() != ring.len() {
        return Err(LayoutError::TooManyRings);
    }
    Ok(Some(cycle))
}

fn deg(d: f64) -> f64 {
    d * PI / 180.0
}

/// Directions for `k` unplaced neighbors of an atom reached along `incoming`.
fn child_angles(incoming: f64, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut out = match k {
        0 => vec![],
        1 => vec![
            incoming
                + if rng.gen_bool(0.5) {
                    deg(60.0)
                } else {
                    deg(-60.0)
                },
        ],
        2 => vec![incoming + deg(60.0), incoming - deg(60.0)],
        _ => vec![incoming + deg(90.0), incoming, incoming - deg(90.0)],
    };
    out.shuffle(rng);
    out
}

/// Unnormalized layout with unit bond length.
pub fn raw_layout(g: &MolGraph, rng: &mut impl Rng) -> Result<Vec<(f64, f64)>, LayoutError> {
    let n = g.atoms.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if g.components().len() != 1 {
        return Err(LayoutError::Disconnected);
    }
    let adj = g.adjacency();
    if let Some(i) = (0..n).find(|&i| adj[i].len() > 4) {
        return Err(LayoutError::Crowded(i));
    }
    let mut pos: Vec<Option<(f64, f64)>> = vec![None; n];
    // (atom, direction it was reached along)
    let mut queue: VecDeque<(usize, f64)> = VecDeque::new();
    let spin = rng.gen_range(0.0..2.0 * PI);

    if let Some(cycle) = ring_cycle(g)? {
        let m = cycle.len() as f64;
        let radius = 0.5 / (PI / m).sin();
        for (k, &a) in cycle.iter().enumerate() {
            let t = spin + 2.0 * PI * k as f64 / m;
            pos[a] = Some((radius * t.cos(), radius * t.sin()));
        }
        for (k, &a) in cycle.iter().enumerate() {
            let outward = spin + 2.0 * PI * k as f64 / m;
            let kids: Vec<usize> = adj[a]
                .iter()
                .map(|&(b, _)| b)
                .filter(|&b| pos[b].is_none())
                .collect();
            let mut angles = match kids.len() {
                0 => vec![],
                1 => vec![outward],
                _ => vec![outward + deg(30.0), outward - deg(30.0)],
            };
            angles.shuffle(rng);
            let (x, y) = pos[a].unwrap();
            for (&b, &t) in kids.iter().zip(&angles) {
                pos[b] = Some((x + t.cos(), y + t.sin()));
                queue.push_back((b, t));
            }
        }
    } else {
        pos[0] = Some((0.0, 0.0));
        let k = adj[0].len();
        let step = if k == 4 { deg(90.0) } else { deg(120.0) };
        for (j, &(b, _)) in adj[0].iter().enumerate() {
            let t = spin + step * j as f64;
            pos[b] = Some((t.cos(), t.sin()));
            queue.push_back((b, t));
        }
    }

    while let Some((a, incoming)) = queue.pop_front() {
        let kids: Vec<usize> = adj[a]
            .iter()
            .map(|&(b, _)| b)
            .filter(|&b| pos[b].is_none())
            .collect();
        let angles = child_angles(incoming, kids.len(), rng);
        let (x, y) = pos[a].unwrap();
        for (&b, &t) in kids.iter().zip(&angles) {
            pos[b] = Some((x + t.cos(), y + t.sin()));
            queue.push_back((b, t));
        }
    }
    let mut pts: Vec<(f64, f64)> = pos.into_iter().map(|p| p.unwrap()).collect();
    nudge(g, &mut pts);
    Ok(pts)
}

fn nudge(g: &MolGraph, pts: &mut [(f64, f64)]) {
    let n = pts.len();
    let mut bonded = vec![vec![false; n]; n];
    for b in &g.bonds {
        bonded[b.begin][b.end] = true;
        bonded[b.end][b.begin] = true;
    }
    for _ in 0..NUDGE_ROUNDS {
        let mut moved = false;
        for i in 0..n {
            for j in i + 1..n {
                if bonded[i][j] {
                    continue;
                }
                let (dx, dy) = (pts[j].0 - pts[i].0, pts[j].1 - pts[i].1);
                let d = dx.hypot(dy);
                if d >= MIN_SEPARATION {
                    continue;
                }
                let (ux, uy) = if d > 1e-9 {
                    (dx / d, dy / d)
                } else {
                    (1.0, 0.0)
                };
                let push = 0.25 * (MIN_SEPARATION - d);
                pts[i].0 -= ux * push;
                pts[i].1 -= uy * push;
                pts[j].0 += ux * push;
                pts[j].1 += uy * push;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

/// Maps points into `[0, 1]^2`, same scale on both axes, rounded to 1e-4.
pub fn normalize(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if pts.is_empty() {
        return Vec::new();
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let extent = (x1 - x0).max(y1 - y0);
    let scale = if extent > 0.0 { 1.0 / extent } else { 1.0 };
    let (ox, oy) = (0.5 - 0.5 * (x1 - x0) * scale, 0.5 - 0.5 * (y1 - y0) * scale);
    let round = |v: f64| ((v * 1e4).round() / 1e4).clamp(0.0, 1.0);
    pts.iter()
        .map(|&(x, y)| (round(ox + (x - x0) * scale), round(oy + (y - y0) * scale)))
        .collect()
}

/// Normalized layout written into the atoms' coordinates.
pub fn layout(g: &MolGraph, rng: &mut impl Rng) -> Result<MolGraph, LayoutError> {
    let pts = normalize(&raw_layout(g, rng)?);
    let mut out = g.clone();
    for (a, p) in out.atoms.iter_mut().zip(pts) {
        a.coord = Some(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coordinates_in_unit_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in ["C", "CC", "CC(C)(C)C", "c1ccccc1CC(N)O", "C1CCCCCCC1C=CC"] {
            let g = layout(&parse(s).unwrap(), &mut rng).unwrap();
            for a in &g.atoms {
                let (x, y) = a.coord.unwrap();
                assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
            }
        }
    }

    #[test]
    fn bonds_have_equal_raw_length_in_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = parse("CC(O)C(N)C").unwrap();
        let p = raw_layout(&g, &mut rng).unwrap();
        for b in &g.bonds {
            let d = (p[b.begin].0 - p[b.end].0).hypot(p[b.begin].1 - p[b.end].1);
            assert!((d - 1.0).abs() < 0.3, "{d}");
        }
    }

    #[test]
    fn rejects_fused_rings() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(
            raw_layout(&parse("C1CC2CCC1C2").unwrap(), &mut rng),
            Err(LayoutError::TooManyRings)
        );
        assert_eq!(
            raw_layout(&parse("C.C").unwrap(), &mut rng),
            Err(LayoutError::Disconnected)
        );
    }
}
