//! SMILES reading, writing and canonicalization.
//!
//! Aromaticity is taken as written: lowercase atoms carry an aromatic flag
//! and no kekulization or perception is attempted, so an aromatic spelling
//! and a Kekulé spelling of the same molecule produce different keys.

mod canon;
mod parse;
mod write;

use thiserror::Error;

use crate::graph::MolGraph;

pub use canon::{
    canonical_ranks, canonical_smiles, canonical_writes, canonical_writes_with, CanonicalKey,
};
pub use parse::{parse_with, ParseOptions, ParsedSmiles};
pub use write::{write, write_with, WriteSpec, Written};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmilesError {
    #[error("empty SMILES")]
    Empty,
    #[error("unbalanced parentheses at offset {offset}")]
    UnbalancedParentheses { offset: usize },
    #[error("unmatched ring-closure digit at offset {offset}")]
    UnmatchedRingClosure { offset: usize },
    #[error("malformed bracket atom at offset {offset}: {reason}")]
    MalformedBracketAtom { offset: usize, reason: String },
    #[error("invalid character {ch:?} at offset {offset}")]
    InvalidCharacter { offset: usize, ch: char },
    #[error("bond symbol without a following atom at offset {offset}")]
    DanglingBond { offset: usize },
    #[error("ring closure at offset {offset} duplicates a bond or closes on itself")]
    InvalidRingClosure { offset: usize },
    #[error("ring closure at offset {offset} has conflicting bond symbols")]
    ConflictingRingBond { offset: usize },
    #[error("conflicting '/' '\\' marks around double bond {bond}")]
    ConflictingDirection { bond: usize },
    #[error("graph cannot be written as SMILES: {0}")]
    Unrepresentable(String),
}

impl SmilesError {
    /// Byte offset of the problem, for errors raised while reading.
    pub fn offset(&self) -> Option<usize> {
        match self {
            SmilesError::UnbalancedParentheses { offset }
            | SmilesError::UnmatchedRingClosure { offset }
            | SmilesError::MalformedBracketAtom { offset, .. }
            | SmilesError::InvalidCharacter { offset, .. }
            | SmilesError::DanglingBond { offset }
            | SmilesError::InvalidRingClosure { offset }
            | SmilesError::ConflictingRingBond { offset } => Some(*offset),
            SmilesError::Empty => Some(0),
            _ => None,
        }
    }
}

/// Parses plain SMILES (no placeholder labels).
pub fn parse(text: &str) -> Result<MolGraph, SmilesError> {
    parse_with(text, ParseOptions::strict()).map(|p| p.graph)
}

/// Parses SMILES that may contain bracketed placeholders such as `[R1]`.
pub fn parse_with_labels(text: &str) -> Result<MolGraph, SmilesError> {
    parse_with(text, ParseOptions::with_labels()).map(|p| p.graph)
}
