//! Label-measurement attack on the Y-00 coding layer and its countermeasures.
//!
//! Eve measures the half-plane label `l = r xor parity(k)` of every symbol,
//! then tries every key: each key's parity mask turns the labels into a
//! candidate data sequence. Errors in Eve's labels, a misaligned axis or
//! deliberate signal randomization (DSR) break the guarantee that the true
//! data is among the candidates.

mod bits;
mod entropy;
mod keygen;

pub use bits::{label_mask, BitSeq, MaskFamily};
pub use entropy::{
    ciphertext_only_entropy, entropy_report, known_plaintext_key_entropy, CiphertextOnlyEstimate,
    EntropyRegime, EntropyReport, KnownPlaintextEstimate, ENTROPY_MAX_KEY_BITS, ENTROPY_MAX_LENGTH,
};
pub use keygen::{binary_entropy, keygen_advantage, randomized_keygen, KeygenRow};

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{
    encode_sequence, halfplane_label, Constellation, KeySpace, Label, SymbolRecord,
};
use crate::error::{Error, Result};
use bits::check_length;

/// Largest key handled by exhaustive candidate search.
pub const SEARCH_MAX_KEY_BITS: u32 = 20;

/// Deliberate signal randomization applied on top of Eve's labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Dsr {
    #[default]
    None,
    /// Each label flipped independently with probability `f`.
    Binary { f: f64 },
    /// Uniform phase noise in `(-delta, delta)` before labeling.
    Jitter { delta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    pub key_bits: u32,
    /// Sequence length N.
    pub length: usize,
    /// Positions where Eve's label is flipped.
    pub error_positions: Vec<usize>,
    /// Offset of Eve's axis from the codec axis, radians.
    pub misalign: f64,
    pub dsr: Dsr,
    pub otp_mode: bool,
    /// `P(data bit = 1)`.
    pub data_bias: f64,
}

impl AttackScenario {
    pub fn new(key_bits: u32, length: usize) -> Self {
        AttackScenario {
            key_bits,
            length,
            error_positions: Vec::new(),
            misalign: 0.0,
            dsr: Dsr::None,
            otp_mode: false,
            data_bias: 0.5,
        }
    }

    pub fn with_errors(mut self, positions: Vec<usize>) -> Self {
        self.error_positions = positions;
        self
    }

    pub fn with_misalign(mut self, delta: f64) -> Self {
        self.misalign = delta;
        self
    }

    pub fn with_dsr(mut self, dsr: Dsr) -> Self {
        self.dsr = dsr;
        self
    }

    pub fn with_otp(mut self, otp: bool) -> Self {
        self.otp_mode = otp;
        self
    }

    pub fn with_data_bias(mut self, bias: f64) -> Self {
        self.data_bias = bias;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.key_bits < 2 {
            return Err(Error::invalid(
                "key_bits",
                format!("must be >= 2, got {}", self.key_bits),
            ));
        }
        if self.key_bits > SEARCH_MAX_KEY_BITS {
            return Err(Error::RegimeCap(format!(
                "key_bits = {} exceeds the exhaustive-search cap of {SEARCH_MAX_KEY_BITS}",
                self.key_bits
            )));
        }
        if self.length == 0 {
            return Err(Error::invalid("n", "sequence length must be positive"));
        }
        if let Some(&p) = self.error_positions.iter().find(|&&p| p >= self.length) {
            return Err(Error::invalid(
                "error_positions",
                format!("{p} is outside 0..{}", self.length),
            ));
        }
        if !self.misalign.is_finite() {
            return Err(Error::invalid("misalign", "must be finite"));
        }
        match self.dsr {
            Dsr::Binary { f } if !(0.0..=1.0).contains(&f) => {
                return Err(Error::invalid(
                    "dsr_f",
                    format!("must lie in [0, 1], got {f}"),
                ));
            }
            Dsr::Jitter { delta } if !(delta >= 0.0 && delta.is_finite()) => {
                return Err(Error::invalid(
                    "dsr_jitter",
                    format!("must be finite and >= 0, got {delta}"),
                ));
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.data_bias) {
            return Err(Error::invalid(
                "data_bias",
                format!("must lie in [0, 1], got {}", self.data_bias),
            ));
        }
        Ok(())
    }

    /// The injected error sequence `e` as a 0/1 array of length N.
    pub fn error_sequence(&self) -> Vec<u8> {
        let mut e = vec![0u8; self.length];
        for &p in &self.error_positions {
            e[p] ^= 1;
        }
        e
    }

    pub fn key_space(&self) -> Result<KeySpace> {
        KeySpace::new(self.key_bits)
    }

    /// Whether Eve's labels equal the transmitted labels exactly.
    pub fn is_noiseless(&self) -> bool {
        self.error_positions.is_empty() && self.misalign == 0.0 && self.dsr == Dsr::None
    }
}

/// Flips `labels` at `positions`.
pub fn inject_errors(labels: &mut [u8], positions: &[usize]) {
    for &p in positions {
        labels[p] ^= 1;
    }
}

/// Label of `phase` seen from an axis rotated by `misalign`.
pub fn misaligned_label(phase: f64, c: &Constellation, misalign: f64) -> Label {
    halfplane_label(phase, c.axis() + misalign)
}

/// XORs a Bernoulli(`f`) sequence into `labels`.
pub fn dsr_binary<R: Rng + ?Sized>(labels: &mut [u8], f: f64, rng: &mut R) {
    for l in labels.iter_mut() {
        *l ^= rng.random_bool(f) as u8;
    }
}

/// `phase` plus uniform noise in `(-delta, delta)`.
pub fn dsr_phase_jitter<R: Rng + ?Sized>(phase: f64, delta: f64, rng: &mut R) -> f64 {
    if delta > 0.0 {
        phase + rng.random_range(-delta..delta)
    } else {
        phase
    }
}

/// Eve's measured labels: half-plane labels against her axis (after phase
/// jitter, if any), XOR the injected errors, XOR the binary DSR sequence.
pub fn measure_labels<R: Rng + ?Sized>(
    symbols: &[SymbolRecord],
    c: &Constellation,
    scenario: &AttackScenario,
    rng: &mut R,
) -> Vec<u8> {
    let mut labels: Vec<u8> = symbols
        .iter()
        .map(|s| {
            let mut phase = c.phase(s.index);
            if let Dsr::Jitter { delta } = scenario.dsr {
                phase = dsr_phase_jitter(phase, delta, rng);
            }
            misaligned_label(phase, c, scenario.misalign).bit()
        })
        .collect();
    let positions: Vec<usize> = scenario
        .error_positions
        .iter()
        .copied()
        .filter(|&p| p < labels.len())
        .collect();
    inject_errors(&mut labels, &positions);
    if let Dsr::Binary { f } = scenario.dsr {
        dsr_binary(&mut labels, f, rng);
    }
    labels
}

/// Fraction of `(-delta, delta)` over which `d + u` lies in the upper half
/// plane.
fn up_fraction(d: f64, delta: f64) -> f64 {
    let (lo, hi) = (d - delta, d + delta);
    let first = (lo / TAU).floor() as i64 - 1;
    let last = (hi / TAU).ceil() as i64 + 1;
    let covered: f64 = (first..=last)
        .map(|k| {
            let a = k as f64 * TAU;
            (hi.min(a + PI) - lo.max(a)).max(0.0)
        })
        .sum();
    covered / (2.0 * delta)
}

/// Probability, averaged over the 2M states, that Eve's label differs from
/// the transmitted one because of axis misalignment and phase jitter.
pub fn label_flip_rate(c: &Constellation, misalign: f64, jitter: f64) -> f64 {
    let n = c.states();
    let total: f64 = (0..n)
        .map(|j| {
            let phase = c.phase(j);
            let sent = c.label(j);
            if jitter > 0.0 {
                let up = up_fraction(phase - (c.axis() + misalign), jitter);
                match sent {
                    Label::Up => 1.0 - up,
                    Label::Down => up,
                }
            } else {
                f64::from(u8::from(misaligned_label(phase, c, misalign) != sent))
            }
        })
        .sum();
    total / n as f64
}

/// Eve's model of her own label noise, used for posteriors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseModel {
    Exact,
    /// Independent flips with a common rate.
    Iid {
        rate: f64,
    },
}

impl NoiseModel {
    /// Flip rate implied by a scenario: the geometric rate of misalignment and
    /// jitter, the binary DSR rate and the injected error density, composed
    /// as independent XORs.
    pub fn for_scenario(scenario: &AttackScenario, c: &Constellation) -> NoiseModel {
        let xor = |a: f64, b: f64| a + b - 2.0 * a * b;
        let jitter = match scenario.dsr {
            Dsr::Jitter { delta } => delta,
            _ => 0.0,
        };
        let mut rate = label_flip_rate(c, scenario.misalign, jitter);
        if let Dsr::Binary { f } = scenario.dsr {
            rate = xor(rate, f);
        }
        if scenario.length > 0 {
            rate = xor(
                rate,
                scenario.error_positions.len() as f64 / scenario.length as f64,
            );
        }
        if rate == 0.0 {
            NoiseModel::Exact
        } else {
            NoiseModel::Iid {
                rate: rate.min(1.0),
            }
        }
    }

    pub fn rate(&self) -> f64 {
        match *self {
            NoiseModel::Exact => 0.0,
            NoiseModel::Iid { rate } => rate,
        }
    }
}

/// Outcome of trying every key against a measured label sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSummary {
    /// Distinct candidate sequences.
    pub candidate_count: u64,
    pub true_in_candidates: bool,
    /// Keys whose candidate equals the truth.
    pub matching_keys: u64,
    /// `1 +` the number of keys whose candidate is strictly closer to the truth.
    pub true_key_rank: Option<u64>,
    pub true_key_distance: Option<usize>,
    /// Other keys producing exactly the true key's mask.
    pub collisions: u64,
    /// Hamming distance from each key's candidate to the truth, by key.
    pub per_seed_distance: Vec<u32>,
}

impl CandidateSummary {
    pub fn match_fractions(&self, length: usize) -> Vec<f64> {
        self.per_seed_distance
            .iter()
            .map(|&d| 1.0 - d as f64 / length as f64)
            .collect()
    }
}

/// Tries every key: candidate `j` is `observed xor mask_j`, compared with
/// `truth`.
pub fn brute_force_candidates(
    observed: &[u8],
    truth: &[u8],
    space: &KeySpace,
    c: &Constellation,
    true_key: Option<u64>,
) -> Result<CandidateSummary> {
    if space.key_bits > SEARCH_MAX_KEY_BITS {
        return Err(Error::RegimeCap(format!(
            "key_bits = {} exceeds the exhaustive-search cap of {SEARCH_MAX_KEY_BITS}",
            space.key_bits
        )));
    }
    check_length("truth", observed.len(), truth.len())?;
    let n = observed.len();
    let family = MaskFamily::new(space, c, n)?;
    // candidate_j == truth  <=>  mask_j == observed xor truth
    let target = BitSeq::from_bits(observed).xor(&BitSeq::from_bits(truth));
    let mut distances = vec![0u32; space.size() as usize];
    family.for_each(|key, mask| distances[key as usize] = mask.distance(&target) as u32);
    let rank = family.rank();
    let true_dist = true_key.map(|k| distances[k as usize]);
    Ok(CandidateSummary {
        candidate_count: 1u64 << rank,
        true_in_candidates: distances.contains(&0),
        matching_keys: distances.iter().filter(|&&d| d == 0).count() as u64,
        true_key_rank: true_dist.map(|t| 1 + distances.iter().filter(|&&d| d < t).count() as u64),
        true_key_distance: true_dist.map(|d| d as usize),
        collisions: (1u64 << (space.key_bits - rank)) - 1,
        per_seed_distance: distances,
    })
}

/// Checks on the one-time-pad stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtpCheck {
    /// `C xor L_m xor K~_true == X` bitwise.
    pub identity_holds: bool,
    pub plaintext_in_candidates: bool,
    /// Agreement of the true key's plaintext candidate with X.
    pub true_seed_plaintext_match: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub key_bits: u32,
    pub length: usize,
    pub true_key: u64,
    pub error_positions: Vec<usize>,
    pub measured_labels: Vec<u8>,
    pub candidate_count: u64,
    pub true_key_rank: Option<u64>,
    pub true_r_in_candidates: bool,
    pub matching_keys: u64,
    pub collisions: u64,
    pub true_seed_distance: usize,
    /// One entry per key; written to the per-seed table, not the summary.
    #[serde(skip)]
    pub per_seed_match_fraction: Vec<f64>,
    pub mutual_info_estimate: Option<f64>,
    pub otp: Option<OtpCheck>,
}

fn random_bits<R: Rng + ?Sized>(n: usize, bias: f64, rng: &mut R) -> Vec<u8> {
    (0..n).map(|_| rng.random_bool(bias) as u8).collect()
}

fn xor_bits(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

fn record_from(
    scenario: &AttackScenario,
    key: u64,
    labels: Vec<u8>,
    summary: CandidateSummary,
    otp: Option<OtpCheck>,
) -> AttackRecord {
    AttackRecord {
        key_bits: scenario.key_bits,
        length: labels.len(),
        true_key: key,
        error_positions: scenario.error_positions.clone(),
        candidate_count: summary.candidate_count,
        true_key_rank: summary.true_key_rank,
        true_r_in_candidates: summary.true_in_candidates,
        matching_keys: summary.matching_keys,
        collisions: summary.collisions,
        true_seed_distance: summary.true_key_distance.unwrap_or(0),
        per_seed_match_fraction: summary.match_fractions(labels.len()),
        measured_labels: labels,
        mutual_info_estimate: None,
        otp,
    }
}

/// Full replay: Alice sends random data `R` under `key` (drawn from `rng`
/// when `None`), Eve measures labels and tries every key.
pub fn nishioka_attack<R: Rng + ?Sized>(
    scenario: &AttackScenario,
    c: &Constellation,
    key: Option<u64>,
    rng: &mut R,
) -> Result<AttackRecord> {
    scenario.validate()?;
    let space = scenario.key_space()?;
    let key = key.unwrap_or_else(|| rng.random_range(0..space.size()));
    if scenario.otp_mode {
        let x = random_bits(scenario.length, scenario.data_bias, rng);
        return otp_stage_attack(&x, scenario, c, key, rng);
    }
    let r = random_bits(scenario.length, scenario.data_bias, rng);
    let symbols = encode_sequence(&r, &mut space.keystream(key, c.key_width(), c.osk())?, c)?;
    let labels = measure_labels(&symbols, c, scenario, rng);
    let summary = brute_force_candidates(&labels, &r, &space, c, Some(key))?;
    Ok(record_from(scenario, key, labels, summary, None))
}

/// One-time-pad stage: Alice sends `C = X xor R` in the clear and `R` (true
/// random) over Y-00. Eve forms plaintext candidates `C xor L_m xor K~_j`.
pub fn otp_stage_attack<R: Rng + ?Sized>(
    x: &[u8],
    scenario: &AttackScenario,
    c: &Constellation,
    key: u64,
    rng: &mut R,
) -> Result<AttackRecord> {
    if !scenario.otp_mode {
        return Err(Error::invalid(
            "otp_mode",
            "one-time-pad attack needs otp_mode = true",
        ));
    }
    scenario.validate()?;
    check_length("plaintext", scenario.length, x.len())?;
    let space = scenario.key_space()?;
    let r = random_bits(scenario.length, 0.5, rng);
    let ciphertext = xor_bits(x, &r);
    let mut ks = space.keystream(key, c.key_width(), c.osk())?;
    let true_mask = label_mask(&mut ks.clone(), x.len()).to_bits();
    let symbols = encode_sequence(&r, &mut ks, c)?;
    let labels = measure_labels(&symbols, c, scenario, rng);
    let observed = xor_bits(&ciphertext, &labels);
    let summary = brute_force_candidates(&observed, x, &space, c, Some(key))?;
    let otp = OtpCheck {
        identity_holds: xor_bits(&observed, &true_mask) == x,
        plaintext_in_candidates: summary.true_in_candidates,
        true_seed_plaintext_match: 1.0
            - summary.true_key_distance.unwrap_or(0) as f64 / x.len() as f64,
    };
    Ok(record_from(scenario, key, labels, summary, Some(otp)))
}
