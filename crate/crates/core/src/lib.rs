//! Chemically aware building blocks for evaluating, rewarding and fine-tuning
//! optical chemical structure recognition models.

pub mod abbrev;
pub mod elements;
pub mod fingerprint;
pub mod graph;
pub mod grpo;
pub mod harness;
pub mod markush;
pub mod metrics;
pub mod model;
pub mod reward;
pub mod smiles;
pub mod stereo;

pub use graph::{Atom, Bond, BondType, DoubleBondStereo, Geometry, MolGraph, Parity, Slot};
