//! Homodyne and heterodyne receiver models.
//!
//! Quadrature convention: a vacuum quadrature has variance 1/4, a coherent
//! state |a> measured along `axis` has mean `|a| cos(arg a - axis)`. Heterodyne
//! measures both quadratures at once and pays one extra vacuum unit, giving
//! variance 1/2 per quadrature.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::codec::Constellation;
use crate::fockspace::Amplitude;
use crate::sampling::{blocks, stream_rng};

pub const HOMODYNE_QUADRATURE_VARIANCE: f64 = 0.25;
pub const HETERODYNE_QUADRATURE_VARIANCE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverKind {
    Homodyne,
    Heterodyne,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceiverModel {
    pub kind: ReceiverKind,
    pub axis: f64,
    pub noise_seed: u64,
}

impl ReceiverModel {
    /// Error rate of `trials` antipodal decisions at signal energy `energy`.
    pub fn antipodal_mc(&self, energy: f64, trials: u64) -> McEstimate {
        match self.kind {
            ReceiverKind::Homodyne => homodyne_antipodal_mc(energy, trials, self.noise_seed),
            ReceiverKind::Heterodyne => {
                let c = Constellation::new(1, energy)
                    .expect("energy validated by caller")
                    .with_phase_offset(self.axis);
                heterodyne_mary_mc(&c, trials, self.noise_seed)
            }
        }
    }
}

pub fn homodyne_sample<R: Rng + ?Sized>(a: Amplitude, axis: f64, rng: &mut R) -> f64 {
    let mean = a.modulus() * (a.phase() - axis).cos();
    let z: f64 = rng.sample(StandardNormal);
    mean + HOMODYNE_QUADRATURE_VARIANCE.sqrt() * z
}

pub fn heterodyne_sample<R: Rng + ?Sized>(a: Amplitude, rng: &mut R) -> Complex64 {
    let sd = HETERODYNE_QUADRATURE_VARIANCE.sqrt();
    let (x, y): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
    Complex64::new(a.re + sd * x, a.im + sd * y)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Threshold-detection error for `+-sqrt(S)` with homodyne: `Phi(-2 sqrt S)`.
pub fn homodyne_antipodal_error(energy: f64) -> f64 {
    normal_cdf(-2.0 * energy.max(0.0).sqrt())
}

/// Monte Carlo error count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McEstimate {
    pub trials: u64,
    pub errors: u64,
}

impl McEstimate {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.errors as f64 / self.trials as f64
        }
    }

    /// Binomial standard deviation of the rate if the true rate were `p`.
    pub fn binomial_sigma(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials.max(1) as f64).sqrt()
    }

    /// Whether the rate lies within `k` binomial sigmas of `p`.
    pub fn agrees_with(&self, p: f64, k: f64) -> bool {
        (self.rate() - p).abs() <= k * self.binomial_sigma(p)
    }
}

fn sum_blocks(trials: u64, block: impl Fn(u64, u64) -> u64 + Sync) -> McEstimate {
    let errors = blocks(trials)
        .into_par_iter()
        .map(|(index, len)| block(index, len))
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    McEstimate { trials, errors }
}

/// Equiprobable `+-sqrt(S)` on the axis, sign decision on the homodyne output.
pub fn homodyne_antipodal_mc(energy: f64, trials: u64, seed: u64) -> McEstimate {
    let plus = Amplitude::from_energy_phase(energy, 0.0);
    let minus = Amplitude::from_energy_phase(energy, PI);
    sum_blocks(trials, |index, len| {
        let mut rng = stream_rng(seed, index);
        (0..len)
            .filter(|_| {
                let bit: bool = rng.random();
                let x = homodyne_sample(if bit { plus } else { minus }, 0.0, &mut rng);
                (x > 0.0) != bit
            })
            .count() as u64
    })
}

/// Nearest constellation phase to a heterodyne outcome.
pub fn heterodyne_nearest_index(sample: Complex64, c: &Constellation) -> usize {
    let n = c.states();
    let rel = (sample.arg() - c.phase(0)).rem_euclid(TAU);
    ((rel * n as f64 / TAU).round() as usize) % n
}

/// Uniform state, heterodyne, nearest-phase decision.
pub fn heterodyne_mary_mc(c: &Constellation, trials: u64, seed: u64) -> McEstimate {
    let n = c.states();
    sum_blocks(trials, |index, len| {
        let mut rng = stream_rng(seed, index);
        (0..len)
            .filter(|_| {
                let j = rng.random_range(0..n);
                heterodyne_nearest_index(heterodyne_sample(c.amplitude(j), &mut rng), c) != j
            })
            .count() as u64
    })
}

/// Density of the heterodyne phase (relative to the signal phase) for a
/// coherent state of energy `S`.
pub fn heterodyne_phase_density(phi: f64, energy: f64) -> f64 {
    // SNR |a|^2 / (2 sigma^2) with sigma^2 = 1/2 equals S.
    let g = energy.max(0.0);
    let root = g.sqrt();
    let cos = phi.cos();
    (-g).exp() / TAU
        + root * cos / (2.0 * PI.sqrt()) * (-g * phi.sin().powi(2)).exp() * (1.0 + erf(root * cos))
}

/// `P(decided = sent + d mod N)` for nearest-phase decisions among `states`
/// equally spaced phases.
pub fn heterodyne_phase_confusion(energy: f64, states: usize) -> Vec<f64> {
    let width = TAU / states as f64;
    let panels = 256usize;
    let h = width / panels as f64;
    let mut probs: Vec<f64> = (0..states)
        .map(|d| {
            let lo = d as f64 * width - 0.5 * width;
            // composite Simpson
            let mut acc =
                heterodyne_phase_density(lo, energy) + heterodyne_phase_density(lo + width, energy);
            for i in 1..panels {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * heterodyne_phase_density(lo + i as f64 * h, energy);
            }
            (acc * h / 3.0).max(0.0)
        })
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    probs
}
