//! Circular (Morgan/ECFP-style) fingerprints folded into a fixed bit vector.
//!
//! Atom identifiers start from `(element, charge, degree, aromatic)` and are
//! updated `radius` times from the sorted multiset of `(bond code, neighbor
//! identifier)` pairs. Every identifier of every iteration sets bit
//! `id mod nbits`. Hashing uses FNV-1a for strings and the SplitMix64
//! finalizer for mixing, so fingerprints are identical on every platform.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{parity_from_reference, BondType, Geometry, MolGraph, Parity, Slot};
use crate::smiles::canonical_ranks;
use crate::stereo::double_bond_candidates;

pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_NBITS: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FingerprintError {
    #[error("fingerprint length {0} is not a positive power of two")]
    BadLength(usize),
    #[error("fingerprint lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid fingerprint hex: {0}")]
    BadHex(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerprintParams {
    pub radius: u32,
    pub nbits: usize,
    pub chirality_sensitive: bool,
}

impl Default for FingerprintParams {
    fn default() -> Self {
        FingerprintParams {
            radius: DEFAULT_RADIUS,
            nbits: DEFAULT_NBITS,
            chirality_sensitive: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fingerprint {
    words: Vec<u64>,
    nbits: usize,
    pub radius: u32,
    pub chirality_sensitive: bool,
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn combine(seed: u64, v: u64) -> u64 {
    mix(seed
        ^ v.wrapping_add(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(seed << 6)
            .wrapping_add(seed >> 2))
}

fn bond_code(kind: BondType) -> u64 {
    match kind.constitutional() {
        BondType::Single => 1,
        BondType::Double => 2,
        BondType::Triple => 3,
        BondType::Aromatic => 4,
        _ => 0,
    }
}

/// Parity relative to neighbors listed by ascending rank, if unambiguous.
fn ranked_parity(g: &MolGraph, ranks: &[usize], center: usize, parity: Parity) -> Option<Parity> {
    let mut nbrs = g.neighbors(center);
    nbrs.sort_by_key(|&n| ranks[n]);
    if nbrs.windows(2).any(|w| ranks[w[0]] == ranks[w[1]]) {
        return None;
    }
    let mut listed: Vec<Slot> = nbrs.into_iter().map(Slot::Atom).collect();
    if listed.len() == 3 {
        listed.push(Slot::Implicit);
    }
    parity_from_reference(g, center, &listed, parity)
}

impl Fingerprint {
    pub fn zeros(nbits: usize) -> Result<Self, FingerprintError> {
        if nbits == 0 || !nbits.is_power_of_two() {
            return Err(FingerprintError::BadLength(nbits));
        }
        Ok(Fingerprint {
            words: vec![0; nbits.div_ceil(64)],
            nbits,
            radius: 0,
            chirality_sensitive: false,
        })
    }

    pub fn len(&self) -> usize {
        self.nbits
    }

    pub fn is_empty(&self) -> bool {
        self.popcount() == 0
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nbits).filter(|&i| self.get(i))
    }

    /// Lowercase hex; bit `i` is `1 << (i % 8)` of byte `i / 8`.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = (0..self.nbits.div_ceil(8))
            .map(|k| (self.words[k / 8] >> (8 * (k % 8))) as u8)
            .collect();
        hex::encode(bytes)
    }

    pub fn from_hex(
        text: &str,
        radius: u32,
        chirality_sensitive: bool,
    ) -> Result<Self, FingerprintError> {
        let bytes = hex::decode(text).map_err(|e| FingerprintError::BadHex(e.to_string()))?;
        let mut fp = Fingerprint::zeros(bytes.len() * 8)?;
        for (k, b) in bytes.iter().enumerate() {
            fp.words[k / 8] |= u64::from(*b) << (8 * (k % 8));
        }
        fp.radius = radius;
        fp.chirality_sensitive = chirality_sensitive;
        Ok(fp)
    }
}

pub fn morgan_fingerprint(
    g: &MolGraph,
    radius: u32,
    nbits: usize,
    chirality_sensitive: bool,
) -> Result<Fingerprint, FingerprintError> {
    let mut fp = Fingerprint::zeros(nbits)?;
    fp.radius = radius;
    fp.chirality_sensitive = chirality_sensitive;
    let adj = g.adjacency();
    let n = g.atoms.len();

    let mut bond_codes: Vec<u64> = g.bonds.iter().map(|b| bond_code(b.kind)).collect();
    let mut atom_stereo = vec![0u64; n];
    if chirality_sensitive && g.has_stereo() {
        let ranks = canonical_ranks(g);
        for (&center, &p) in &g.tetra_parity {
            if center < n {
                atom_stereo[center] = match ranked_parity(g, &ranks, center, p) {
                    Some(Parity::CounterClockwise) => 1,
                    Some(Parity::Clockwise) => 2,
                    None => 0,
                };
            }
        }
        for (bi, refs) in double_bond_candidates(g, &ranks) {
            match g.geometry_for_refs(bi, refs) {
                Some(Geometry::Cis) => bond_codes[bi] += 16,
                Some(Geometry::Trans) => bond_codes[bi] += 32,
                None => {}
            }
        }
    }

    let mut ids: Vec<u64> = (0..n)
        .map(|i| {
            let a = &g.atoms[i];
            let mut h = fnv1a(&a.element);
            h = combine(h, a.formal_charge as i64 as u64);
            h = combine(h, adj[i].len() as u64);
            h = combine(h, u64::from(a.aromatic));
            combine(h, atom_stereo[i])
        })
        .collect();
    let mask = (nbits - 1) as u64;
    for &id in &ids {
        fp.set((id & mask) as usize);
    }
    for iteration in 0..radius {
        ids = (0..n)
            .map(|i| {
                let mut env: Vec<(u64, u64)> = adj[i]
                    .iter()
                    .map(|&(nb, bi)| (bond_codes[bi], ids[nb]))
                    .collect();
                env.sort_unstable();
                let mut h = combine(u64::from(iteration) + 1, ids[i]);
                for (c, id) in env {
                    h = combine(combine(h, c), id);
                }
                h
            })
            .collect();
        for &id in &ids {
            fp.set((id & mask) as usize);
        }
    }
    Ok(fp)
}

pub fn fingerprint_with(
    g: &MolGraph,
    p: &FingerprintParams,
) -> Result<Fingerprint, FingerprintError> {
    morgan_fingerprint(g, p.radius, p.nbits, p.chirality_sensitive)
}

/// `|a & b| / |a | b|`, and 1.0 for two empty fingerprints.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.nbits != b.nbits {
        return Err(FingerprintError::LengthMismatch(a.nbits, b.nbits));
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    Ok(if union == 0 {
        1.0
    } else {
        f64::from(inter) / f64::from(union)
    })
}
