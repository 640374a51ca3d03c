//! Exact posteriors over every key of a small key space.
//!
//! Per trial a key and data sequence are drawn, Eve observes each symbol
//! (labels, or heterodyne nearest-phase decisions), and the posterior over
//! keys is computed exhaustively. Conditional entropies are averaged over
//! trials; `H(X|Y_E)` is the mean of `-log2 P(X_true | Y_E)`.

use std::f64::consts::LN_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{binary_entropy, measure_labels, AttackScenario, NoiseModel};
use crate::codec::{encode, encode_sequence, Constellation, KeySpace};
use crate::detection::{heterodyne_nearest_index, heterodyne_phase_confusion, heterodyne_sample};
use crate::error::{Error, Result};
use crate::sampling::stream_rng;

pub const ENTROPY_MAX_KEY_BITS: u32 = 12;
pub const ENTROPY_MAX_LENGTH: usize = 32;

/// What Eve observes per symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyRegime {
    /// Half-plane labels, perturbed as the scenario prescribes.
    Classical,
    /// Heterodyne nearest-of-2M phase decisions.
    Quantum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiphertextOnlyEstimate {
    /// `H(K) = |K|`.
    pub h_k: f64,
    /// Prior entropy of the data sequence, `N h2(bias)`.
    pub h_x: f64,
    pub h_k_given_y: f64,
    pub h_x_given_y: f64,
    /// `(H(X) - H(X|Y_E)) / N`, clamped to `[0, 1]`.
    pub mutual_info_per_symbol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnownPlaintextEstimate {
    pub h_k: f64,
    pub h_k_given_y_x: f64,
    /// Mean `log2` of the number of keys that are indistinguishable from the
    /// true key even with noiseless observations.
    pub residual_floor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub regime: EntropyRegime,
    pub key_bits: u32,
    pub length: usize,
    pub trials: u64,
    /// Eve's label-noise model (classical regime only).
    pub noise_model: Option<NoiseModel>,
    pub ciphertext_only: CiphertextOnlyEstimate,
    pub known_plaintext: KnownPlaintextEstimate,
}

/// `P(observation | expected outcome)` as a dense table.
struct Channel {
    outcomes: usize,
    probs: Vec<f64>,
}

impl Channel {
    fn labels(rate: f64) -> Self {
        Channel {
            outcomes: 2,
            probs: vec![1.0 - rate, rate, rate, 1.0 - rate],
        }
    }

    fn heterodyne(c: &Constellation) -> Self {
        let n = c.states();
        let conf = heterodyne_phase_confusion(c.energy(), n);
        let mut probs = vec![0.0; n * n];
        for o in 0..n {
            for e in 0..n {
                probs[o * n + e] = conf[(o + n - e) % n].max(f64::MIN_POSITIVE);
            }
        }
        Channel { outcomes: n, probs }
    }

    fn p(&self, observed: usize, expected: u16) -> f64 {
        self.probs[observed * self.outcomes + expected as usize]
    }
}

/// Expected outcome for data bit 0 and 1, per key and symbol.
fn outcome_table(
    space: &KeySpace,
    c: &Constellation,
    n: usize,
    regime: EntropyRegime,
) -> Result<Vec<[u16; 2]>> {
    let mut table = Vec::with_capacity(space.size() as usize * n);
    for key in 0..space.size() {
        let mut ks = space.keystream(key, c.key_width(), c.osk())?;
        for _ in 0..n {
            let d = ks.next_draw();
            let row = match regime {
                EntropyRegime::Classical => {
                    let m = (d.parity ^ d.osk_bit) as u16;
                    [m, 1 ^ m]
                }
                EntropyRegime::Quantum => [
                    encode(0, d.running_key, d.osk_bit, c)?.index as u16,
                    encode(1, d.running_key, d.osk_bit, c)?.index as u16,
                ],
            };
            table.push(row);
        }
    }
    Ok(table)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Entropy in bits of the distribution proportional to `exp(log_weights)`.
fn entropy_bits(log_weights: &[f64]) -> f64 {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = w.iter().sum();
    -w.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| {
            let p = x / z;
            p * p.log2()
        })
        .sum::<f64>()
}

#[derive(Clone, Copy, Default)]
struct TrialStats {
    h_k_given_y: f64,
    h_x_given_y: f64,
    h_k_given_y_x: f64,
    floor: f64,
}

fn check_regime(scenario: &AttackScenario, regime: EntropyRegime, trials: u64) -> Result<()> {
    if scenario.key_bits > ENTROPY_MAX_KEY_BITS || scenario.length > ENTROPY_MAX_LENGTH {
        return Err(Error::RegimeCap(format!(
            "entropy estimation needs key_bits <= {ENTROPY_MAX_KEY_BITS} and n <= {ENTROPY_MAX_LENGTH}, got {} and {}",
            scenario.key_bits, scenario.length
        )));
    }
    scenario.validate()?;
    if scenario.otp_mode {
        return Err(Error::invalid(
            "otp_mode",
            "entropy estimators treat the transmitted data as X",
        ));
    }
    if regime == EntropyRegime::Quantum && !scenario.is_noiseless() {
        return Err(Error::invalid(
            "regime",
            "the quantum regime models heterodyne noise only; label errors, misalignment and DSR are classical",
        ));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "must be positive"));
    }
    Ok(())
}

/// Ciphertext-only and known-plaintext estimates from the same trials.
pub fn entropy_report(
    scenario: &AttackScenario,
    c: &Constellation,
    regime: EntropyRegime,
    trials: u64,
    seed: u64,
) -> Result<EntropyReport> {
    check_regime(scenario, regime, trials)?;
    let space = scenario.key_space()?;
    let n = scenario.length;
    let keys = space.size() as usize;
    let table = outcome_table(&space, c, n, regime)?;
    let (channel, noise_model) = match regime {
        EntropyRegime::Classical => {
            let model = NoiseModel::for_scenario(scenario, c);
            (Channel::labels(model.rate()), Some(model))
        }
        EntropyRegime::Quantum => (Channel::heterodyne(c), None),
    };
    let bias = scenario.data_bias;
    let prior = [1.0 - bias, bias];

    let run_trial = |trial: u64| -> Result<TrialStats> {
        let mut rng = stream_rng(seed, trial);
        let key = rng.random_range(0..space.size());
        let r: Vec<u8> = (0..n).map(|_| rng.random_bool(bias) as u8).collect();
        let symbols = encode_sequence(&r, &mut space.keystream(key, c.key_width(), c.osk())?, c)?;
        let observed: Vec<usize> = match regime {
            EntropyRegime::Classical => measure_labels(&symbols, c, scenario, &mut rng)
                .into_iter()
                .map(usize::from)
                .collect(),
            EntropyRegime::Quantum => symbols
                .iter()
                .map(|s| {
                    heterodyne_nearest_index(heterodyne_sample(c.amplitude(s.index), &mut rng), c)
                })
                .collect(),
        };
        let mut ll_obs = vec![0.0; keys];
        let mut ll_joint = vec![0.0; keys];
        for j in 0..keys {
            let rows = &table[j * n..(j + 1) * n];
            let (mut obs, mut joint) = (0.0, 0.0);
            for t in 0..n {
                let [e0, e1] = rows[t];
                let (q0, q1) = (channel.p(observed[t], e0), channel.p(observed[t], e1));
                obs += (prior[0] * q0 + prior[1] * q1).ln();
                joint += if r[t] == 1 { q1 } else { q0 }.ln();
            }
            ll_obs[j] = obs;
            ll_joint[j] = joint;
        }
        let ln_prior_r: f64 = r.iter().map(|&b| prior[b as usize].ln()).sum();
        let true_rows = &table[key as usize * n..(key as usize + 1) * n];
        let twins = (0..keys)
            .filter(|&j| &table[j * n..(j + 1) * n] == true_rows)
            .count();
        Ok(TrialStats {
            h_k_given_y: entropy_bits(&ll_obs),
            h_x_given_y: -(ln_prior_r + log_sum_exp(&ll_joint) - log_sum_exp(&ll_obs)) / LN_2,
            h_k_given_y_x: entropy_bits(&ll_joint),
            floor: (twins as f64).log2(),
        })
    };
    let stats = (0..trials)
        .into_par_iter()
        .map(run_trial)
        .collect::<Result<Vec<_>>>()?;

    let mean = |f: fn(&TrialStats) -> f64| stats.iter().map(f).sum::<f64>() / trials as f64;
    let h_k = scenario.key_bits as f64;
    let h_x = n as f64 * binary_entropy(bias);
    let h_x_given_y = mean(|s| s.h_x_given_y);
    Ok(EntropyReport {
        regime,
        key_bits: scenario.key_bits,
        length: n,
        trials,
        noise_model,
        ciphertext_only: CiphertextOnlyEstimate {
            h_k,
            h_x,
            h_k_given_y: mean(|s| s.h_k_given_y),
            h_x_given_y,
            mutual_info_per_symbol: ((h_x - h_x_given_y) / n as f64).clamp(0.0, 1.0),
        },
        known_plaintext: KnownPlaintextEstimate {
            h_k,
            h_k_given_y_x: mean(|s| s.h_k_given_y_x),
            residual_floor: mean(|s| s.floor),
        },
    })
}

/// `H(K|Y_E)` and `H(X|Y_E)` with only Eve's observations.
pub fn ciphertext_only_entropy(
    scenario: &AttackScenario,
    c: &Constellation,
    regime: EntropyRegime,
    trials: u64,
    seed: u64,
) -> Result<CiphertextOnlyEstimate> {
    Ok(entropy_report(scenario, c, regime, trials, seed)?.ciphertext_only)
}

/// `H(K|Y_E, X)` with the data known to Eve.
pub fn known_plaintext_key_entropy(
    scenario: &AttackScenario,
    c: &Constellation,
    regime: EntropyRegime,
    trials: u64,
    seed: u64,
) -> Result<KnownPlaintextEstimate> {
    Ok(entropy_report(scenario, c, regime, trials, seed)?.known_plaintext)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::Dsr;

    fn classical(scenario: &AttackScenario, m: usize, trials: u64) -> EntropyReport {
        let c = Constellation::new(m, 1.0).unwrap();
        entropy_report(scenario, &c, EntropyRegime::Classical, trials, 7).unwrap()
    }

    #[test]
    fn degenerate_posteriors_are_exact() {
        assert_eq!(entropy_bits(&[0.0; 256]), 8.0);
        assert_eq!(
            entropy_bits(&[0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]),
            0.0
        );
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn dsr_half_leaves_key_uniform() {
        let s = AttackScenario::new(8, 16).with_dsr(Dsr::Binary { f: 0.5 });
        let rep = classical(&s, 16, 200);
        assert_eq!(rep.ciphertext_only.h_k_given_y, 8.0);
        assert_eq!(rep.known_plaintext.h_k_given_y_x, 8.0);
        assert!(rep.ciphertext_only.mutual_info_per_symbol < 1e-12);
        assert!((rep.ciphertext_only.h_x_given_y - 16.0).abs() < 1e-9);
    }

    #[test]
    fn fair_data_hides_the_key_from_labels_alone() {
        let rep = classical(&AttackScenario::new(6, 16), 8, 50);
        assert!((rep.ciphertext_only.h_k_given_y - 6.0).abs() < 1e-12);
        // X given labels is pinned down to the candidate set
        assert!(rep.ciphertext_only.h_x_given_y <= 6.0 + 1e-9);
    }

    #[test]
    fn biased_data_leaks_key_without_noise() {
        let s = AttackScenario::new(8, 32).with_data_bias(0.1);
        let rep = classical(&s, 16, 50);
        assert!(rep.ciphertext_only.h_k_given_y < 8.0);
        assert!(rep.ciphertext_only.mutual_info_per_symbol > 0.0);
    }

    #[test]
    fn single_error_spreads_the_posterior() {
        let s = AttackScenario::new(8, 16)
            .with_errors(vec![4])
            .with_data_bias(0.2);
        let rep = classical(&s, 16, 50);
        assert!(rep.ciphertext_only.h_k_given_y > 0.0);
        assert!(rep.known_plaintext.h_k_given_y_x > rep.known_plaintext.residual_floor);
    }

    #[test]
    fn noiseless_known_plaintext_reaches_the_floor() {
        for (bits, n) in [(8, 4), (8, 16), (10, 32)] {
            let rep = classical(&AttackScenario::new(bits, n), 4, 20);
            let kp = rep.known_plaintext;
            assert!(
                (kp.h_k_given_y_x - kp.residual_floor).abs() < 1e-12,
                "{kp:?}"
            );
            // n parity bits can pin down at most n key bits
            assert!(kp.residual_floor >= bits as f64 - n as f64 - 1e-12);
        }
    }

    #[test]
    fn quantum_regime_positive_at_low_energy() {
        let c = Constellation::new(16, 1.0).unwrap();
        let kp = known_plaintext_key_entropy(
            &AttackScenario::new(8, 16),
            &c,
            EntropyRegime::Quantum,
            20,
            3,
        )
        .unwrap();
        assert!(kp.h_k_given_y_x > kp.residual_floor, "{kp:?}");
    }

    #[test]
    fn quantum_regime_approaches_floor_at_high_energy() {
        let s = AttackScenario::new(8, 8);
        let at = |energy: f64| {
            let c = Constellation::new(2, energy).unwrap();
            known_plaintext_key_entropy(&s, &c, EntropyRegime::Quantum, 30, 9).unwrap()
        };
        let (low, high) = (at(0.5), at(200.0));
        assert!(low.h_k_given_y_x > high.h_k_given_y_x);
        assert!(
            (high.h_k_given_y_x - high.residual_floor).abs() < 1e-6,
            "{high:?}"
        );
    }

    #[test]
    fn caps_and_preconditions() {
        let c = Constellation::new(4, 1.0).unwrap();
        let run = |s: AttackScenario, regime| entropy_report(&s, &c, regime, 1, 0);
        assert!(matches!(
            run(AttackScenario::new(13, 8), EntropyRegime::Classical),
            Err(Error::RegimeCap(_))
        ));
        assert!(matches!(
            run(AttackScenario::new(8, 33), EntropyRegime::Classical),
            Err(Error::RegimeCap(_))
        ));
        assert!(run(
            AttackScenario::new(8, 8).with_otp(true),
            EntropyRegime::Classical
        )
        .is_err());
        assert!(run(
            AttackScenario::new(8, 8).with_errors(vec![1]),
            EntropyRegime::Quantum
        )
        .is_err());
    }

    #[test]
    fn repeatable() {
        let s = AttackScenario::new(6, 12).with_dsr(Dsr::Binary { f: 0.2 });
        assert_eq!(classical(&s, 8, 30), classical(&s, 8, 30));
    }
}
