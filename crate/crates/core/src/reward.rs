//! Combined Tanimoto and stereochemistry reward for predicted SMILES.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abbrev::{expand_abbreviations, AbbrevError, AbbreviationTable};
use crate::fingerprint::{fingerprint_with, tanimoto, FingerprintParams};
use crate::graph::MolGraph;
use crate::smiles::{canonical_smiles, parse_with_labels};

pub const DEFAULT_W_TANIMOTO: f64 = 0.4;
pub const DEFAULT_W_STEREO: f64 = 0.6;

pub const STEREO_EXACT: f64 = 1.0;
pub const STEREO_SAME_SIZE: f64 = 0.3;
pub const STEREO_OTHER: f64 = 0.1;

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("weights must be finite and non-negative")]
    NegativeWeight,
    #[error("{preds} predictions but {gts} ground truths")]
    LengthMismatch { preds: usize, gts: usize },
    #[error("invalid reward config: {0}")]
    Config(String),
    #[error(transparent)]
    Abbreviations(#[from] AbbrevError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardConfig {
    pub w_tanimoto: f64,
    pub w_stereo: f64,
    pub fingerprint: FingerprintParams,
    pub abbreviations: AbbreviationTable,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            w_tanimoto: DEFAULT_W_TANIMOTO,
            w_stereo: DEFAULT_W_STEREO,
            fingerprint: FingerprintParams::default(),
            abbreviations: AbbreviationTable::builtin(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    w_tanimoto: Option<f64>,
    w_stereo: Option<f64>,
    radius: Option<u32>,
    nbits: Option<usize>,
    chirality_sensitive: Option<bool>,
    /// Extra `LABEL SMILES` lines file, relative to the config file.
    abbreviations: Option<String>,
}

impl RewardConfig {
    pub fn new(w_tanimoto: f64, w_stereo: f64) -> Result<Self, RewardError> {
        let cfg = RewardConfig {
            w_tanimoto,
            w_stereo,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if ok(self.w_tanimoto) && ok(self.w_stereo) {
            Ok(())
        } else {
            Err(RewardError::NegativeWeight)
        }
    }

    /// Reads `key = value` settings; `base` resolves a relative
    /// `abbreviations` path.
    pub fn from_toml_str(text: &str, base: Option<&Path>) -> Result<Self, RewardError> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| RewardError::Config(e.message().to_string()))?;
        let mut cfg = RewardConfig::default();
        if let Some(w) = file.w_tanimoto {
            cfg.w_tanimoto = w;
        }
        if let Some(w) = file.w_stereo {
            cfg.w_stereo = w;
        }
        if let Some(r) = file.radius {
            cfg.fingerprint.radius = r;
        }
        if let Some(n) = file.nbits {
            if n == 0 || !n.is_power_of_two() {
                return Err(RewardError::Config(format!(
                    "nbits {n} is not a power of two"
                )));
            }
            cfg.fingerprint.nbits = n;
        }
        if let Some(c) = file.chirality_sensitive {
            cfg.fingerprint.chirality_sensitive = c;
        }
        if let Some(p) = file.abbreviations {
            let path = match base {
                Some(b) => b.join(p),
                None => p.into(),
            };
            cfg.abbreviations = AbbreviationTable::builtin_with_file(&path)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, RewardError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RewardError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_tanimoto: f64,
    pub r_stereo: f64,
    pub r_combined: f64,
    pub valid_pred: bool,
    pub valid_gt: bool,
}

/// Stereo tier for two valid molecules.
pub fn stereo_reward(pred: &MolGraph, gt: &MolGraph) -> f64 {
    let same = match (canonical_smiles(pred, true), canonical_smiles(gt, true)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same {
        STEREO_EXACT
    } else if pred.heavy_atom_count() == gt.heavy_atom_count() {
        STEREO_SAME_SIZE
    } else {
        STEREO_OTHER
    }
}

/// Parses a SMILES string and expands known abbreviations; `None` when
/// the result is not a valid molecule.
pub fn read_molecule(text: &str, table: &AbbreviationTable) -> Option<MolGraph> {
    let g = parse_with_labels(text.trim()).ok()?;
    let g = expand_abbreviations(&g, table).ok()?;
    g.is_valid().then_some(g)
}

pub fn combined_reward(pred: &str, gt: &str, cfg: &RewardConfig) -> RewardBreakdown {
    let p = read_molecule(pred, &cfg.abbreviations);
    let g = read_molecule(gt, &cfg.abbreviations);
    let mut out = RewardBreakdown {
        r_tanimoto: 0.0,
        r_stereo: 0.0,
        r_combined: 0.0,
        valid_pred: p.is_some(),
        valid_gt: g.is_some(),
    };
    let (Some(p), Some(g)) = (p, g) else {
        return out;
    };
    let sim = fingerprint_with(&p, &cfg.fingerprint)
        .and_then(|a| fingerprint_with(&g, &cfg.fingerprint).and_then(|b| tanimoto(&a, &b)));
    let Ok(sim) = sim else {
        return out;
    };
    out.r_tanimoto = sim;
    out.r_stereo = stereo_reward(&p, &g);
    out.r_combined = cfg.w_tanimoto * out.r_tanimoto + cfg.w_stereo * out.r_stereo;
    out
}

pub fn reward_batch<P: AsRef<str>, G: AsRef<str>>(
    preds: &[P],
    gts: &[G],
    cfg: &RewardConfig,
) -> Result<Vec<RewardBreakdown>, RewardError> {
    if preds.len() != gts.len() {
        return Err(RewardError::LengthMismatch {
            preds: preds.len(),
            gts: gts.len(),
        });
    }
    Ok(preds
        .iter()
        .zip(gts)
        .map(|(p, g)| combined_reward(p.as_ref(), g.as_ref(), cfg))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse;

    fn cfg() -> RewardConfig {
        RewardConfig::default()
    }

    #[test]
    fn stereo_tiers() {
        let ala = |s| parse(s).unwrap();
        let r = ala("N[C@@H](C)C(=O)O");
        let s = ala("N[C@H](C)C(=O)O");
        assert_eq!(stereo_reward(&r, &ala("OC(=O)[C@@H](N)C")), 1.0);
        assert_eq!(stereo_reward(&r, &s), 0.3);
        assert_eq!(stereo_reward(&ala("CCO"), &ala("CCCO")), 0.1);
    }

    #[test]
    fn identity_and_invalid() {
        let b = combined_reward("C/C=C/C", "C/C=C/C", &cfg());
        assert_eq!((b.r_tanimoto, b.r_stereo, b.r_combined), (1.0, 1.0, 1.0));
        let b = combined_reward("C1CC", "CCC", &cfg());
        assert_eq!((b.r_tanimoto, b.r_stereo, b.r_combined), (0.0, 0.0, 0.0));
        assert!(!b.valid_pred && b.valid_gt);
    }

    #[test]
    fn enantiomers_score_058() {
        let b = combined_reward("N[C@@H](C)C(=O)O", "N[C@H](C)C(=O)O", &cfg());
        assert_eq!(b.r_tanimoto, 1.0);
        assert_eq!(b.r_stereo, 0.3);
        assert!((b.r_combined - 0.58).abs() < 1e-12);
    }

    #[test]
    fn abbreviations_expand_before_scoring() {
        let b = combined_reward("[Ph]C(=O)O", "c1ccccc1C(=O)O", &cfg());
        assert_eq!(b.r_combined, 1.0);
    }

    #[test]
    fn batch_checks_lengths() {
        assert!(reward_batch(&["C"], &[] as &[&str], &cfg()).is_err());
        assert!(reward_batch(&[] as &[&str], &[] as &[&str], &cfg())
            .unwrap()
            .is_empty());
        let out = reward_batch(&["CCO"; 3], &["OCC"; 3], &cfg()).unwrap();
        assert!(out.iter().all(|b| b.r_combined == 1.0));
    }

    #[test]
    fn config_file() {
        let c =
            RewardConfig::from_toml_str("w_tanimoto = 0.5\nw_stereo = 0.5\nnbits = 1024\n", None)
                .unwrap();
        assert_eq!(
            (c.w_tanimoto, c.w_stereo, c.fingerprint.nbits),
            (0.5, 0.5, 1024)
        );
        assert!(RewardConfig::from_toml_str("w_stereo = -1.0", None).is_err());
        assert!(RewardConfig::from_toml_str("bogus = 1", None).is_err());
        assert!(RewardConfig::new(0.2, -0.1).is_err());
    }
}
