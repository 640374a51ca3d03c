//! Run provenance written next to every output set.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::{Family, ScenarioConfig};
use crate::attacks::Dsr;
use crate::codec::AXIS_TIE_TOL;
use crate::detection::{GRAM_PSD_TOL, MODE_PRUNE_MASS};
use crate::fockspace::{DEFAULT_TRUNCATION_TOL, EIG_TOL};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Source of the manifest timestamp.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clock {
    System,
    /// Fixed seconds since the epoch, e.g. from `SOURCE_DATE_EPOCH`.
    Fixed(u64),
}

impl Clock {
    pub fn now(self) -> u64 {
        match self {
            Clock::Fixed(t) => t,
            Clock::System => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modeling {
    pub eve_receiver: String,
    pub tie_break: String,
    pub dsr_model: Dsr,
    pub running_key_extraction: String,
    pub key_space: String,
    pub keygen_energy: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub family: Family,
    pub config_sha256: String,
    pub master_seed: Option<u64>,
    pub timestamp_unix: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub modeling: Modeling,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(cfg: &ScenarioConfig, clock: Clock, outputs: Vec<String>) -> Self {
        let tolerances = BTreeMap::from([
            ("eigenvalue".to_string(), EIG_TOL),
            ("fock_truncation".to_string(), DEFAULT_TRUNCATION_TOL),
            ("gram_psd".to_string(), GRAM_PSD_TOL),
            ("label_tie_break".to_string(), AXIS_TIE_TOL),
            ("subspace_mode_prune".to_string(), MODE_PRUNE_MASS),
        ]);
        let keygen_energy = (cfg.family == Family::Keygen && !cfg.scenario.s_prime.is_empty())
            .then(|| {
                format!(
                    "randomized rows evaluated at S = {} * S'",
                    cfg.scenario.energy_scale
                )
            });
        RunManifest {
            tool: "yzero".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            family: cfg.family,
            config_sha256: cfg.config_sha256.clone(),
            master_seed: cfg.scenario.master_seed,
            timestamp_unix: clock.now(),
            tolerances,
            modeling: Modeling {
                eve_receiver: "homodyne threshold for key generation; half-plane labels or heterodyne phase for attacks"
                    .to_string(),
                tie_break: "phase on the boundary within 1e-12 rad counts as up".to_string(),
                dsr_model: cfg.scenario.dsr,
                running_key_extraction: "Fibonacci LFSR, output bit 0, log2(M) bits MSB first, then the OSK bit"
                    .to_string(),
                key_space: "register = key << 1 | 1 in a primitive LFSR of degree key_bits + 1".to_string(),
                keygen_energy,
            },
            outputs,
        }
    }
}

/// Pointer to the manifest embedded in JSON outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRef {
    pub file: String,
    pub config_sha256: String,
}

impl ManifestRef {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        ManifestRef {
            file: MANIFEST_FILE.to_string(),
            config_sha256: cfg.config_sha256.clone(),
        }
    }

    /// First line of every CSV output.
    pub fn csv_comment(&self) -> String {
        format!(
            "# manifest={} config_sha256={}\n",
            self.file, self.config_sha256
        )
    }
}
