//! Text formats: CSV tables with `#` provenance headers, legacy VTK fields
//! and the JSON run configuration.

pub mod config;
mod csv_formats;
mod vtk;

pub use config::{ConfigSource, RunConfig, TON_PER_YEAR};
pub use csv_formats::*;
pub use vtk::{write_deposition_vtk, write_field_vtk};

use std::fmt::Write as _;

/// Identifies the inputs behind an output file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: Option<u64>,
    pub tool: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: Option<u64>) -> Self {
        Provenance { config_hash: config_hash.into(), seed, tool: format!("dustfall {}", env!("CARGO_PKG_VERSION")) }
    }

    /// Header lines, each starting with `prefix`.
    pub fn header(&self, prefix: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{prefix} tool={}", self.tool);
        let _ = writeln!(s, "{prefix} config_sha256={}", self.config_hash);
        match self.seed {
            Some(seed) => {
                let _ = writeln!(s, "{prefix} seed={seed}");
            }
            None => {
                let _ = writeln!(s, "{prefix} seed=none");
            }
        }
        s
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
