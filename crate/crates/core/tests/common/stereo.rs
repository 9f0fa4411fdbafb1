use super::rng;
use ocsr_core::harness::layout::layout;
use ocsr_core::harness::scaffold::{random_skeleton, tetra_candidates, ScaffoldOptions};
use ocsr_core::smiles::{canonical_ranks, canonical_smiles};
use ocsr_core::stereo::{assign_wedges, perceive_double_geometry, perceive_stereo};
use ocsr_core::{MolGraph, Parity};
use rand::Rng;

/// A laid-out molecule carrying random tetrahedral parities and the
/// cis/trans geometry of its drawing; `None` when it has no stereo or the
/// stereo cannot be written as SMILES.
pub fn stereo_instance(seed: u64) -> Option<MolGraph> {
    let mut r = rng(seed);
    let g = random_skeleton(&mut r, &ScaffoldOptions::drawable());
    let mut g = layout(&g, &mut r).ok()?;
    let dbl = perceive_double_geometry(&g);
    if !dbl.is_certain() {
        return None;
    }
    g.db_geometry = dbl.double;
    for c in tetra_candidates(&g, &canonical_ranks(&g)) {
        if r.gen_bool(0.7) {
            let p = if r.gen_bool(0.5) {
                Parity::Clockwise
            } else {
                Parity::CounterClockwise
            };
            g.tetra_parity.insert(c, p);
        }
    }
    (g.has_stereo() && canonical_smiles(&g, true).is_ok()).then_some(g)
}

pub fn map_coords(g: &MolGraph, f: impl Fn(f64, f64) -> (f64, f64)) -> MolGraph {
    let mut out = g.clone();
    for a in &mut out.atoms {
        a.coord = a.coord.map(|(x, y)| f(x, y));
    }
    out
}

pub fn check_round_trip(seed: u64) -> Result<(), String> {
    let Some(g) = stereo_instance(seed) else {
        return Ok(());
    };
    let wedged = assign_wedges(&g).map_err(|e| format!("assign_wedges: {e}"))?;
    let st = perceive_stereo(&wedged.without_stereo());
    if !st.is_certain() {
        return Err(format!("uncertain: {:?}", st));
    }
    if st.tetra != g.tetra_parity {
        return Err(format!("parity {:?} vs {:?}", st.tetra, g.tetra_parity));
    }
    let a = canonical_smiles(&g, true).unwrap();
    let b = canonical_smiles(&st.apply(&wedged), true).unwrap();
    if a != b {
        return Err(format!("{} vs {}", a.text, b.text));
    }
    Ok(())
}
