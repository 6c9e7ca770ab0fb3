//! Grid-based building thermal simulator with an HVAC plant model,
//! occupant-comfort reward, floorplan ingestion and calibration tools.

pub mod building;
pub mod calibration;
pub mod config;
pub mod engine;
pub mod env;
pub mod episode;
pub mod error;
pub mod field;
pub mod grid;
pub mod hvac;
pub mod ingest;
pub mod occupancy;
pub mod parallel;
pub mod policy;
pub mod render;
pub mod reward;
pub mod rollout;
pub mod synth;

pub use error::{Result, SimError};
pub use field::{Direction, Field};

use sha2::{Digest, Sha256};

/// Stable subsystem seed: the first 8 bytes of `sha256(master ‖ name)`.
pub fn derive_seed(master: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
