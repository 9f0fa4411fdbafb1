#![allow(dead_code)]

pub mod grads;
pub mod stereo;

use ocsr_core::harness::scaffold::{random_molecule, ScaffoldOptions};
use ocsr_core::smiles::{parse, write_with, WriteSpec};
use ocsr_core::MolGraph;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn molecule(seed: u64) -> MolGraph {
    random_molecule(&mut rng(seed), &ScaffoldOptions::codec())
}

pub fn shuffled(g: &MolGraph, r: &mut ChaCha8Rng) -> MolGraph {
    let mut perm: Vec<usize> = (0..g.atoms.len()).collect();
    perm.shuffle(r);
    g.permuted(&perm)
}

/// Maps `b` onto `a`'s indexing when `order[k]` is the `a` atom behind `b` atom `k`.
pub fn reindex(b: &MolGraph, order: &[usize]) -> MolGraph {
    b.permuted(order)
}

/// Structural equality of two graphs that share atom indexing: same atoms
/// (by element, charge, isotope, aromaticity, total H), same bond set, same
/// parities and the same cis/trans relations.
pub fn same_molecule(a: &MolGraph, b: &MolGraph) -> Result<(), String> {
    if a.atoms.len() != b.atoms.len() {
        return Err(format!(
            "atom counts {} vs {}",
            a.atoms.len(),
            b.atoms.len()
        ));
    }
    for i in 0..a.atoms.len() {
        let (x, y) = (&a.atoms[i], &b.atoms[i]);
        let kx = (
            &x.element,
            x.formal_charge,
            x.isotope,
            x.aromatic,
            a.hydrogen_count(i),
        );
        let ky = (
            &y.element,
            y.formal_charge,
            y.isotope,
            y.aromatic,
            b.hydrogen_count(i),
        );
        if kx != ky {
            return Err(format!("atom {i}: {kx:?} vs {ky:?}"));
        }
    }
    let bonds = |g: &MolGraph| {
        let mut v: Vec<_> = g
            .bonds
            .iter()
            .map(|bd| (bd.begin.min(bd.end), bd.begin.max(bd.end), bd.kind))
            .collect();
        v.sort();
        v
    };
    if bonds(a) != bonds(b) {
        return Err(format!("bonds {:?} vs {:?}", bonds(a), bonds(b)));
    }
    if a.tetra_parity != b.tetra_parity {
        return Err(format!(
            "parity {:?} vs {:?}",
            a.tetra_parity, b.tetra_parity
        ));
    }
    if a.db_geometry.len() != b.db_geometry.len() {
        return Err(format!(
            "geometry {:?} vs {:?}",
            a.db_geometry, b.db_geometry
        ));
    }
    for (&bi, st) in &a.db_geometry {
        let bd = a.bonds[bi];
        let other = b
            .bond_between(bd.begin, bd.end)
            .ok_or_else(|| format!("bond {bi} missing"))?;
        if b.geometry_for_refs(other, st.refs) != Some(st.geometry) {
            return Err(format!(
                "geometry of bond {bi}: {:?} vs {:?}",
                st,
                b.db_geometry.get(&other)
            ));
        }
    }
    Ok(())
}

pub const FD_STEP: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central difference of `f` at `x[i]`.
pub fn central_diff(x: &mut [f64], i: usize, f: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + FD_STEP;
    let up = f(x);
    x[i] = orig - FD_STEP;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * FD_STEP)
}

/// Largest relative error between `grad` and central differences of `f`
/// over every coordinate of `x`.
pub fn max_grad_error(x: &[f64], grad: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    assert_eq!(x.len(), grad.len());
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| rel_err(grad[i], central_diff(&mut x, i, &mut f)))
        .fold(0.0, f64::max)
}

/// Writes molecule `seed` with stereo, parses it back and compares.
pub fn round_trip(seed: u64) -> Result<(), String> {
    let g = molecule(seed);
    let w = write_with(
        &g,
        &WriteSpec {
            stereo: true,
            ..WriteSpec::default()
        },
    )
    .map_err(|e| format!("write: {e}"))?;
    let p = parse(&w.text).map_err(|e| format!("parse {}: {e}", w.text))?;
    // parsed atom k is original atom atom_order[k]
    let back = reindex(&p, &w.atom_order);
    same_molecule(&g, &back).map_err(|e| format!("{}: {e}", w.text))
}
