//! Stereo depiction dataset generation.
//!
//! Records come in pairs built from one random scaffold and a near-duplicate
//! of it. Every random choice for pair `p` or record `i` is drawn from its own
//! ChaCha stream keyed by `(seed, purpose, index)`, so the output does not
//! depend on how the index range is split across worker threads.
//!
//! Output is JSONL: one header object, then one object per record with
//! `id`, `smiles`, `coords` (`[x, y]` per atom in SMILES token order),
//! `bonds` (`[begin, end, type]`, wedges begin at the stereocenter) and
//! `style`.

pub mod layout;
pub mod scaffold;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BondType, MolGraph, Parity};
use crate::smiles::{canonical_ranks, canonical_smiles, parse, write, write_with, WriteSpec};
use crate::stereo::{
    assign_wedges, double_bond_candidates, perceive_double_geometry, perceive_stereo,
};

use scaffold::{near_duplicate, random_skeleton, tetra_candidates, ScaffoldOptions};

pub const FORMAT_NAME: &str = "ocsr-stereo-jsonl";
pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_STYLE_WEIGHTS: [f64; 5] = [60.0, 10.0, 10.0, 10.0, 10.0];

const TAG_PAIR: u64 = 1;
const TAG_RECORD: u64 = 2;
const TAG_STYLE: u64 = 3;
const MAX_ATTEMPTS: usize = 200;
const ATTEMPTS_PER_SCAFFOLD: usize = 8;

/// True iff the text carries a stereo marker.
pub fn is_stereo_smiles(s: &str) -> bool {
    s.contains(['@', '/', '\\'])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    Classic,
    SlightBlueBg,
    LightGrayBg,
    WithAtomIndices,
    ThickerLines,
}

impl Style {
    pub const ALL: [Style; 5] = [
        Style::Classic,
        Style::SlightBlueBg,
        Style::LightGrayBg,
        Style::WithAtomIndices,
        Style::ThickerLines,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Style::Classic => "classic",
            Style::SlightBlueBg => "slight_blue_bg",
            Style::LightGrayBg => "light_gray_bg",
            Style::WithAtomIndices => "with_atom_indices",
            Style::ThickerLines => "thicker_lines",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarnessConfig {
    pub seed: u64,
    pub count: usize,
    pub weights: Vec<f64>,
    /// Share of scaffold pairs that carry tetrahedral centers; the rest
    /// carry cis/trans double bonds only.
    pub chiral_fraction: f64,
    pub threads: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            seed: 0,
            count: 1000,
            weights: DEFAULT_STYLE_WEIGHTS.to_vec(),
            chiral_fraction: 0.5,
            threads: 1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("style weights must be {n} non-negative numbers, not all zero", n = Style::ALL.len())]
    BadWeights,
    #[error("chiral fraction must lie in [0, 1]")]
    BadFraction,
    #[error("record {0}: no valid depiction after {MAX_ATTEMPTS} attempts")]
    Exhausted(usize),
    #[error("malformed dataset line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

impl HarnessConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.weights.len() != Style::ALL.len()
            || self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite())
            || self.weights.iter().sum::<f64>() <= 0.0
        {
            return Err(HarnessError::BadWeights);
        }
        if !(0.0..=1.0).contains(&self.chiral_fraction) {
            return Err(HarnessError::BadFraction);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub count: usize,
    pub seed: u64,
    pub weights: Vec<f64>,
    pub styles: Vec<String>,
    pub chiral_fraction: f64,
    /// Depictions discarded and regenerated.
    pub retries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StereoDatasetRecord {
    pub id: usize,
    pub smiles: String,
    pub coords: Vec<[f64; 2]>,
    pub bonds: Vec<(usize, usize, String)>,
    pub style: Style,
}

fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 56) | index);
    rng
}

/// Style of record `index`, drawn from its own stream.
pub fn record_style(seed: u64, index: usize, weights: &WeightedIndex<f64>) -> Style {
    Style::ALL[weights.sample(&mut stream(seed, TAG_STYLE, index as u64))]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Chiral,
    CisTrans,
}

fn supports(g: &MolGraph, kind: Kind) -> bool {
    let ranks = canonical_ranks(g);
    match kind {
        Kind::Chiral => !tetra_candidates(g, &ranks).is_empty(),
        Kind::CisTrans => !double_bond_candidates(g, &ranks).is_empty(),
    }
}

fn scaffold_for(kind: Kind, rng: &mut ChaCha8Rng) -> MolGraph {
    let opts = ScaffoldOptions::drawable();
    loop {
        let g = random_skeleton(rng, &opts);
        if supports(&g, kind) {
            return g;
        }
    }
}

/// Rebuilds a record's drawing as a graph: atoms from the SMILES, bonds and
/// coordinates from the record.
pub fn record_graph(rec: &StereoDatasetRecord) -> Option<MolGraph> {
    let base = parse(&rec.smiles).ok()?;
    if base.atoms.len() != rec.coords.len() || base.bonds.len() != rec.bonds.len() {
        return None;
    }
    let mut g = base.without_stereo();
    for (a, c) in g.atoms.iter_mut().zip(&rec.coords) {
        a.coord = Some((c[0], c[1]));
    }
    for (b, e, name) in &rec.bonds {
        let kind = BondType::from_name(name)?;
        let bi = g.bond_between(*b, *e)?;
        if kind.constitutional() != g.bonds[bi].kind.constitutional() {
            return None;
        }
        g.bonds[bi].begin = *b;
        g.bonds[bi].end = *e;
        g.bonds[bi].kind = kind;
    }
    Some(g)
}

/// Stereo perceived from the record's coordinates and wedges reproduces the
/// stereo identity key of its SMILES.
pub fn verify_record(rec: &StereoDatasetRecord) -> bool {
    if !is_stereo_smiles(&rec.smiles) {
        return false;
    }
    let (Ok(expected), Some(drawn)) = (parse(&rec.smiles), record_graph(rec)) else {
        return false;
    };
    let st = perceive_stereo(&drawn);
    if !st.is_certain() {
        return false;
    }
    match (
        canonical_smiles(&expected, true),
        canonical_smiles(&st.apply(&drawn), true),
    ) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

/// SMILES, coordinates and bond list of one drawing.
type Depiction = (String, Vec<[f64; 2]>, Vec<(usize, usize, String)>);

/// One attempt at depicting `mol`; `None` when any check fails.
fn depict(mol: &MolGraph, kind: Kind, rng: &mut ChaCha8Rng) -> Option<Depiction> {
    let text = write(mol).ok()?;
    let g = parse(&text).ok()?;
    let mut g = layout::layout(&g, rng).ok()?;
    let dbl = perceive_double_geometry(&g);
    if !dbl.is_certain() {
        return None;
    }
    g.db_geometry = dbl.double;
    if kind == Kind::Chiral {
        let centers = tetra_candidates(&g, &canonical_ranks(&g));
        let forced = *centers.choose(rng)?;
        for c in centers {
            if c == forced || rng.gen_bool(0.5) {
                let p = if rng.gen_bool(0.5) {
                    Parity::Clockwise
                } else {
                    Parity::CounterClockwise
                };
                g.tetra_parity.insert(c, p);
            }
        }
    }
    if !g.has_stereo() {
        return None;
    }
    let wedged = assign_wedges(&g).ok()?;
    let written = write_with(
        &g,
        &WriteSpec {
            stereo: true,
            ..WriteSpec::default()
        },
    )
    .ok()?;
    let order = &written.atom_order;
    let mut new_index = vec![0; order.len()];
    for (k, &old) in order.iter().enumerate() {
        new_index[old] = k;
    }
    let coords = order
        .iter()
        .map(|&old| {
            let (x, y) = wedged.atoms[old].coord.unwrap();
            [x, y]
        })
        .collect();
    let mut bonds: Vec<(usize, usize, String)> = wedged
        .bonds
        .iter()
        .map(|b| {
            (
                new_index[b.begin],
                new_index[b.end],
                b.kind.name().to_string(),
            )
        })
        .collect();
    bonds.sort_by_key(|(b, e, _)| ((*b).min(*e), (*b).max(*e)));
    Some((written.text, coords, bonds))
}

/// Records `2p` and `2p + 1` (when below `count`) with their retry count.
fn pair_records(
    cfg: &HarnessConfig,
    styles: &WeightedIndex<f64>,
    pair: usize,
) -> Result<(Vec<StereoDatasetRecord>, usize), HarnessError> {
    let mut prng = stream(cfg.seed, TAG_PAIR, pair as u64);
    let kind = if prng.gen_bool(cfg.chiral_fraction) {
        Kind::Chiral
    } else {
        Kind::CisTrans
    };
    let base = scaffold_for(kind, &mut prng);
    let mut variant = base.clone();
    for _ in 0..20 {
        let v = near_duplicate(&base, &mut prng);
        if supports(&v, kind) {
            variant = v;
            break;
        }
    }
    let mut out = Vec::new();
    let mut retries = 0;
    for (j, mol) in [base, variant].into_iter().enumerate() {
        let id = 2 * pair + j;
        if id >= cfg.count {
            break;
        }
        let mut rrng = stream(cfg.seed, TAG_RECORD, id as u64);
        let mut mol = mol;
        let mut made = None;
        for attempt in 0..MAX_ATTEMPTS {
            if attempt > 0 && attempt % ATTEMPTS_PER_SCAFFOLD == 0 {
                mol = scaffold_for(kind, &mut rrng);
            }
            if let Some((smiles, coords, bonds)) = depict(&mol, kind, &mut rrng) {
                let rec = StereoDatasetRecord {
                    id,
                    smiles,
                    coords,
                    bonds,
                    style: record_style(cfg.seed, id, styles),
                };
                if verify_record(&rec) {
                    made = Some(rec);
                    break;
                }
            }
            retries += 1;
        }
        out.push(made.ok_or(HarnessError::Exhausted(id))?);
    }
    Ok((out, retries))
}

/// Generates all records, sharded over `cfg.threads` workers.
pub fn generate_records(
    cfg: &HarnessConfig,
) -> Result<(Vec<StereoDatasetRecord>, usize), HarnessError> {
    cfg.validate()?;
    let styles = WeightedIndex::new(&cfg.weights).map_err(|_| HarnessError::BadWeights)?;
    let pairs = cfg.count.div_ceil(2);
    let threads = cfg.threads.max(1).min(pairs.max(1));
    let chunk = pairs.div_ceil(threads).max(1);
    let shards: Vec<Result<(Vec<StereoDatasetRecord>, usize), HarnessError>> =
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let styles = &styles;
                    s.spawn(move || {
                        let mut recs = Vec::new();
                        let mut retries = 0;
                        for p in (t * chunk)..((t + 1) * chunk).min(pairs) {
                            let (r, n) = pair_records(cfg, styles, p)?;
                            recs.extend(r);
                            retries += n;
                        }
                        Ok((recs, retries))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
    let mut records = Vec::with_capacity(cfg.count);
    let mut retries = 0;
    for shard in shards {
        let (r, n) = shard?;
        records.extend(r);
        retries += n;
    }
    Ok((records, retries))
}

/// Full JSONL text: header line plus one line per record.
pub fn gen_stereo_dataset(cfg: &HarnessConfig) -> Result<String, HarnessError> {
    let (records, retries) = generate_records(cfg)?;
    let header = DatasetHeader {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        count: records.len(),
        seed: cfg.seed,
        weights: cfg.weights.clone(),
        styles: Style::ALL.iter().map(|s| s.name().to_string()).collect(),
        chiral_fraction: cfg.chiral_fraction,
        retries,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in &records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    Ok(out)
}

pub fn read_stereo_dataset(
    text: &str,
) -> Result<(DatasetHeader, Vec<StereoDatasetRecord>), HarnessError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let bad = |line: usize, e: serde_json::Error| HarnessError::Malformed {
        line: line + 1,
        reason: e.to_string(),
    };
    let (i, first) = lines.next().ok_or(HarnessError::Malformed {
        line: 1,
        reason: "missing header".into(),
    })?;
    let header: DatasetHeader = serde_json::from_str(first).map_err(|e| bad(i, e))?;
    let records = lines
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| bad(i, e)))
        .collect::<Result<Vec<StereoDatasetRecord>, _>>()?;
    Ok((header, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stereo_marker_rule() {
        assert!(!is_stereo_smiles("CC(=O)O"));
        assert!(is_stereo_smiles("C[C@H](N)C(=O)O"));
        assert!(is_stereo_smiles("C/C=C\\C"));
    }

    #[test]
    fn empty_dataset_has_header() {
        let cfg = HarnessConfig {
            count: 0,
            ..HarnessConfig::default()
        };
        let text = gen_stereo_dataset(&cfg).unwrap();
        assert_eq!(text.lines().count(), 1);
        let (h, r) = read_stereo_dataset(&text).unwrap();
        assert_eq!(h.count, 0);
        assert!(r.is_empty());
    }

    #[test]
    fn records_verify() {
        let cfg = HarnessConfig {
            seed: 11,
            count: 40,
            ..HarnessConfig::default()
        };
        let (recs, _) = generate_records(&cfg).unwrap();
        assert_eq!(recs.len(), 40);
        for r in &recs {
            assert!(verify_record(r), "{r:?}");
            assert!(r
                .coords
                .iter()
                .all(|c| c.iter().all(|v| (0.0..=1.0).contains(v))));
        }
        assert!(recs.iter().any(|r| r.smiles.contains('@')));
        assert!(recs
            .iter()
            .any(|r| r.smiles.contains('/') || r.smiles.contains('\\')));
    }

    #[test]
    fn sharding_does_not_change_output() {
        let one = HarnessConfig {
            seed: 3,
            count: 25,
            ..HarnessConfig::default()
        };
        let four = HarnessConfig {
            threads: 4,
            ..one.clone()
        };
        assert_eq!(
            gen_stereo_dataset(&one).unwrap(),
            gen_stereo_dataset(&four).unwrap()
        );
    }

    #[test]
    fn tampered_record_fails_verification() {
        let cfg = HarnessConfig {
            seed: 5,
            count: 10,
            chiral_fraction: 1.0,
            ..HarnessConfig::default()
        };
        let (recs, _) = generate_records(&cfg).unwrap();
        let mut r = recs[0].clone();
        for b in &mut r.bonds {
            b.2 = match b.2.as_str() {
                "wedge_solid" => "wedge_hashed".into(),
                "wedge_hashed" => "wedge_solid".into(),
                _ => b.2.clone(),
            };
        }
        assert!(!verify_record(&r));
    }

    #[test]
    fn bad_weights_rejected() {
        let cfg = HarnessConfig {
            weights: vec![0.0; 5],
            ..HarnessConfig::default()
        };
        assert_eq!(cfg.validate(), Err(HarnessError::BadWeights));
    }
}
