//! Recognition metrics over prediction/ground-truth pairs.
//!
//! Identity is decided by canonical SMILES keys computed after abbreviation
//! expansion: graph accuracy compares keys without stereo, exact accuracy
//! compares keys with stereo. Aromatic and Kekulé spellings of the same ring
//! are different keys.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abbrev::AbbreviationTable;
use crate::fingerprint::{fingerprint_with, tanimoto, FingerprintParams};
use crate::harness::is_stereo_smiles;
use crate::reward::read_molecule;
use crate::smiles::canonical_smiles;

pub const KEY_CONVENTION: &str =
    "canonical SMILES after abbreviation expansion; aromatic and Kekule spellings differ";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OksError {
    #[error("coordinate lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no keypoints")]
    Empty,
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub pred: String,
    pub gt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_coords: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_coords: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

impl EvalPair {
    pub fn new(pred: impl Into<String>, gt: impl Into<String>) -> Self {
        EvalPair {
            pred: pred.into(),
            gt: gt.into(),
            pred_coords: None,
            gt_coords: None,
            s: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsConfig {
    pub fingerprint: FingerprintParams,
    pub abbreviations: AbbreviationTable,
}

impl MetricsConfig {
    pub fn builtin() -> Self {
        MetricsConfig {
            fingerprint: FingerprintParams::default(),
            abbreviations: AbbreviationTable::builtin(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub key_convention: String,
    pub graph_acc: Option<f64>,
    pub stereo_acc: Option<f64>,
    pub exact_acc: Option<f64>,
    pub mean_tanimoto: Option<f64>,
    pub mean_oks: Option<f64>,
    pub total: usize,
    pub stereo_subset: usize,
    pub pred_parse_failures: usize,
    pub gt_parse_failures: usize,
    /// Pairs that carried coordinates on both sides.
    pub oks_pairs: usize,
    /// Coordinate pairs that could not be scored.
    pub oks_failures: usize,
    /// Unmatched pairs of equal heavy-atom count where only one side uses
    /// aromatic atoms.
    pub aromatic_mismatches: usize,
}

pub const CSV_HEADER: &str = "total,stereo_subset,graph_acc,stereo_acc,exact_acc,mean_tanimoto,mean_oks,pred_parse_failures,gt_parse_failures";

impl MetricsReport {
    pub fn csv_row(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.total,
            self.stereo_subset,
            f(self.graph_acc),
            f(self.stereo_acc),
            f(self.exact_acc),
            f(self.mean_tanimoto),
            f(self.mean_oks),
            self.pred_parse_failures,
            self.gt_parse_failures
        )
    }
}

/// Mean of `exp(-d_n^2 / (2 s^2))` over positionally matched points.
pub fn oks(pred: &[[f64; 2]], gt: &[[f64; 2]], s: f64) -> Result<f64, OksError> {
    if pred.len() != gt.len() {
        return Err(OksError::LengthMismatch(pred.len(), gt.len()));
    }
    if gt.is_empty() {
        return Err(OksError::Empty);
    }
    if !(s > 0.0) {
        return Err(OksError::NonPositiveScale(s));
    }
    let sum: f64 = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| {
            let d2 = (p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2);
            (-d2 / (2.0 * s * s)).exp()
        })
        .sum();
    Ok(sum / gt.len() as f64)
}

/// Bounding-box diagonal over √2, or 1.0 for a degenerate box.
pub fn default_oks_scale(gt: &[[f64; 2]]) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in gt {
        x0 = x0.min(p[0]);
        y0 = y0.min(p[1]);
        x1 = x1.max(p[0]);
        y1 = y1.max(p[1]);
    }
    let diag = (x1 - x0).hypot(y1 - y0) / std::f64::consts::SQRT_2;
    if diag > 0.0 && diag.is_finite() {
        diag
    } else {
        1.0
    }
}

struct PairScore {
    graph: bool,
    exact: bool,
    stereo_gt: bool,
    tanimoto: f64,
    pred_failed: bool,
    gt_failed: bool,
    aromatic_mismatch: bool,
    oks: Option<Result<f64, OksError>>,
}

fn score_pair(p: &EvalPair, cfg: &MetricsConfig) -> PairScore {
    let pred = read_molecule(&p.pred, &cfg.abbreviations);
    let gt = read_molecule(&p.gt, &cfg.abbreviations);
    let key = |g: &Option<crate::MolGraph>, stereo: bool| {
        g.as_ref().and_then(|g| canonical_smiles(g, stereo).ok())
    };
    let (pg, gg) = (key(&pred, false), key(&gt, false));
    let (ps, gs) = (key(&pred, true), key(&gt, true));
    let stereo_gt = match &gs {
        Some(k) => is_stereo_smiles(&k.text),
        None => is_stereo_smiles(&p.gt),
    };
    let tanimoto = match (&pred, &gt) {
        (Some(a), Some(b)) => fingerprint_with(a, &cfg.fingerprint)
            .and_then(|fa| fingerprint_with(b, &cfg.fingerprint).and_then(|fb| tanimoto(&fa, &fb)))
            .unwrap_or(0.0),
        _ => 0.0,
    };
    let oks = match (&p.pred_coords, &p.gt_coords) {
        (Some(pc), Some(gc)) => Some(oks(pc, gc, p.s.unwrap_or_else(|| default_oks_scale(gc)))),
        _ => None,
    };
    let graph = pg.is_some() && pg == gg;
    let aromatic_mismatch = match (&pred, &gt) {
        (Some(a), Some(b)) => {
            let arom = |g: &crate::MolGraph| g.atoms.iter().any(|x| x.aromatic);
            !graph && a.heavy_atom_count() == b.heavy_atom_count() && arom(a) != arom(b)
        }
        _ => false,
    };
    PairScore {
        graph,
        exact: ps.is_some() && ps == gs,
        stereo_gt,
        tanimoto,
        pred_failed: pred.is_none(),
        gt_failed: gt.is_none(),
        aromatic_mismatch,
        oks,
    }
}

/// Mean of values summed in sorted order, so it does not depend on pair order.
fn stable_mean(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v.iter().sum::<f64>() / v.len() as f64)
}

pub fn evaluate(pairs: &[EvalPair], cfg: &MetricsConfig) -> MetricsReport {
    let scores: Vec<PairScore> = pairs.iter().map(|p| score_pair(p, cfg)).collect();
    let n = scores.len();
    let frac = |k: usize, of: usize| (of > 0).then(|| k as f64 / of as f64);
    let count = |f: &dyn Fn(&PairScore) -> bool| scores.iter().filter(|s| f(s)).count();
    let stereo_subset = count(&|s| s.stereo_gt);
    let oks_vals: Vec<f64> = scores
        .iter()
        .filter_map(|s| s.oks.clone().and_then(Result::ok))
        .collect();
    let oks_pairs = count(&|s| s.oks.is_some());
    MetricsReport {
        key_convention: KEY_CONVENTION.to_string(),
        graph_acc: frac(count(&|s| s.graph), n),
        stereo_acc: frac(count(&|s| s.stereo_gt && s.exact), stereo_subset),
        exact_acc: frac(count(&|s| s.exact), n),
        mean_tanimoto: stable_mean(scores.iter().map(|s| s.tanimoto).collect()),
        oks_failures: oks_pairs - oks_vals.len(),
        mean_oks: stable_mean(oks_vals),
        total: n,
        stereo_subset,
        pred_parse_failures: count(&|s| s.pred_failed),
        gt_parse_failures: count(&|s| s.gt_failed),
        oks_pairs,
        aromatic_mismatches: count(&|s| s.aromatic_mismatch),
    }
}
