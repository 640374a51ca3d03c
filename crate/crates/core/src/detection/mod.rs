//! Minimum-error detection bounds and physical receiver models.
//!
//! Binary bounds use the Helstrom form `P_e = (1 - ||p1 rho1 - p0 rho0||_1) / 2`.
//! For the symmetric 2M-state constellation the ensembles live in the span of
//! the coherent vectors, and that span has an exact orthonormal basis: the
//! Fourier modes of the circulant Gram matrix (see [`PhaseSubspace`]). Large-M
//! bounds are evaluated there; the full number-basis route is kept for
//! cross-validation.

mod fit;
mod receivers;

pub use fit::{exponent_fit, ExponentFit};
pub use receivers::{
    heterodyne_mary_mc, heterodyne_nearest_index, heterodyne_phase_confusion,
    heterodyne_phase_density, heterodyne_sample, homodyne_antipodal_error, homodyne_antipodal_mc,
    homodyne_sample, normal_cdf, McEstimate, ReceiverKind, ReceiverModel,
    HETERODYNE_QUADRATURE_VARIANCE, HOMODYNE_QUADRATURE_VARIANCE,
};

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codec::{bit_ensemble_weights, Constellation, Label};
use crate::error::{Error, Result};
use crate::fockspace::{
    coherent_overlap, folded_poisson, hermitian_eig, trace_norm, Amplitude, DensityMatrix,
};

/// Fourier modes carrying less Poisson mass than this are dropped.
pub const MODE_PRUNE_MASS: f64 = 1e-24;
/// Gram eigenvalues below `-GRAM_PSD_TOL` indicate numerical failure.
pub const GRAM_PSD_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryMethod {
    HelstromPure,
    HelstromMixed,
}

/// Minimum error probability for discriminating two hypotheses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryBound {
    pub p_error: f64,
    pub method: BinaryMethod,
    pub priors: (f64, f64),
    /// Dimension of the space the operator was diagonalized in.
    pub dim_used: usize,
    /// Probability mass lost to truncation or mode pruning.
    pub truncation_deficit: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaryMethod {
    Srm,
}

/// Minimum error probability for identifying one of `states` pure states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaryBound {
    pub p_error: f64,
    pub states: usize,
    pub method: MaryMethod,
}

fn check_prior(p0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::invalid(
            "p0",
            format!("must lie in [0, 1], got {p0}"),
        ));
    }
    Ok(())
}

/// `(1 - sqrt(1 - x)) / 2` without cancellation for small `x`.
fn half_one_minus_sqrt(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    0.5 * x / (1.0 + (1.0 - x).sqrt())
}

/// Closed-form Helstrom bound for two pure coherent states.
pub fn helstrom_pure(a0: Amplitude, a1: Amplitude, p0: f64) -> Result<BinaryBound> {
    check_prior(p0)?;
    let p1 = 1.0 - p0;
    let overlap_sq = coherent_overlap(a0, a1).norm_sqr();
    Ok(BinaryBound {
        p_error: half_one_minus_sqrt(4.0 * p0 * p1 * overlap_sq),
        method: BinaryMethod::HelstromPure,
        priors: (p0, p1),
        dim_used: 2,
        truncation_deficit: 0.0,
    })
}

fn helstrom_from_trace_norm(norm: f64) -> f64 {
    (0.5 * (1.0 - norm)).max(0.0)
}

/// Helstrom bound for two density matrices.
pub fn helstrom_mixed(rho0: &DensityMatrix, rho1: &DensityMatrix, p0: f64) -> Result<BinaryBound> {
    check_prior(p0)?;
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho0.dim(),
            found: rho1.dim(),
        });
    }
    let p1 = 1.0 - p0;
    let diff = rho1.entries().scale(p1) - rho0.entries().scale(p0);
    Ok(BinaryBound {
        p_error: helstrom_from_trace_norm(trace_norm(&diff)?),
        method: BinaryMethod::HelstromMixed,
        priors: (p0, p1),
        dim_used: rho0.dim(),
        truncation_deficit: rho0.truncation_deficit().max(rho1.truncation_deficit()),
    })
}

/// Orthonormal basis of the span of a constellation's 2M coherent states.
///
/// With `theta_j = theta_0 + 2 pi j / N` (N = 2M) every state decomposes as
/// `|a_j> = sum_m w^(m j) sqrt(mu_m) |u_m>`, `w = exp(2 pi i / N)`, where
/// `u_m` collects the number states `n = m (mod N)` and `mu_m` is their
/// Poisson(S) mass. The `mu_m` are also the Gram eigenvalues divided by N.
#[derive(Clone, Debug)]
pub struct PhaseSubspace {
    states: usize,
    modes: Vec<usize>,
    masses: Vec<f64>,
    dropped: f64,
}

impl PhaseSubspace {
    pub fn new(c: &Constellation) -> Self {
        let states = c.states();
        let (mass, tail) = folded_poisson(c.energy(), states);
        let max = mass.iter().copied().fold(0.0, f64::max);
        let mut modes = Vec::new();
        let mut masses = Vec::new();
        let mut dropped = tail;
        for (m, &mu) in mass.iter().enumerate() {
            if mu >= MODE_PRUNE_MASS || mu == max {
                modes.push(m);
                masses.push(mu);
            } else {
                dropped += mu;
            }
        }
        PhaseSubspace {
            states,
            modes,
            masses,
            dropped,
        }
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    /// Poisson mass outside the retained modes.
    pub fn deficit(&self) -> f64 {
        self.dropped
    }

    /// `sum_j weights[j] |a_j><a_j|` in the retained mode basis.
    pub fn operator(&self, weights: &[f64]) -> Result<DMatrix<Complex64>> {
        let n = self.states;
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: weights.len(),
            });
        }
        let roots: Vec<Complex64> = (0..n)
            .map(|t| Complex64::from_polar(1.0, TAU * t as f64 / n as f64))
            .collect();
        // spectrum[d] = sum_j weights[j] w^(d j)
        let spectrum: Vec<Complex64> = (0..n)
            .map(|d| {
                weights
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(j, &w)| roots[(d * j) % n] * w)
                    .sum()
            })
            .collect();
        let dim = self.dim();
        let amp: Vec<f64> = self.masses.iter().map(|mu| mu.sqrt()).collect();
        Ok(DMatrix::from_fn(dim, dim, |r, s| {
            let d = (self.modes[r] + n - self.modes[s]) % n;
            spectrum[d] * (amp[r] * amp[s])
        }))
    }

    /// Helstrom bound between the mixtures `weights0` and `weights1` over the
    /// constellation states.
    pub fn helstrom(&self, weights0: &[f64], weights1: &[f64], p0: f64) -> Result<BinaryBound> {
        check_prior(p0)?;
        if weights0.len() != weights1.len() {
            return Err(Error::DimensionMismatch {
                expected: weights0.len(),
                found: weights1.len(),
            });
        }
        let p1 = 1.0 - p0;
        let signed: Vec<f64> = weights0
            .iter()
            .zip(weights1)
            .map(|(w0, w1)| p1 * w1 - p0 * w0)
            .collect();
        let op = self.operator(&signed)?;
        Ok(BinaryBound {
            p_error: helstrom_from_trace_norm(trace_norm(&op)?),
            method: BinaryMethod::HelstromMixed,
            priors: (p0, p1),
            dim_used: self.dim(),
            truncation_deficit: self.deficit(),
        })
    }
}

/// Eve's ciphertext-only bit bound: Helstrom between the bit-conditional
/// ensembles with the running key unknown.
pub fn helstrom_bits(c: &Constellation, p0: f64) -> Result<BinaryBound> {
    let (w0, w1) = bit_ensemble_weights(c);
    PhaseSubspace::new(c).helstrom(&w0, &w1, p0)
}

/// Uniform mixtures over the M up-labelled and the M down-labelled states.
pub fn updown_weights(c: &Constellation) -> (Vec<f64>, Vec<f64>) {
    let q = 1.0 / c.bases() as f64;
    let mut up = vec![0.0; c.states()];
    let mut down = vec![0.0; c.states()];
    for j in 0..c.states() {
        match c.label(j) {
            Label::Up => up[j] = q,
            Label::Down => down[j] = q,
        }
    }
    (up, down)
}

/// Helstrom bound for deciding the half-plane label with a perfectly
/// synchronized axis but no running key.
pub fn updown_bound(c: &Constellation) -> Result<BinaryBound> {
    if c.osk() {
        return Err(Error::invalid(
            "constellation",
            "up/down bound is defined for non-OSK sets",
        ));
    }
    let (up, down) = updown_weights(c);
    PhaseSubspace::new(c).helstrom(&down, &up, 0.5)
}

/// Square-root-measurement error for the 2M equiprobable states, from the
/// DFT of the first Gram row: `P_e = 1 - |(1/N) sum_m sqrt(lambda_m)|^2`.
pub fn srm_mary_error(c: &Constellation) -> Result<MaryBound> {
    let n = c.states();
    let a0 = c.amplitude(0);
    let overlaps: Vec<Complex64> = (0..n)
        .map(|k| coherent_overlap(a0, c.amplitude(k)))
        .collect();
    let mut root_sum = 0.0;
    for m in 0..n {
        let lambda: f64 = overlaps
            .iter()
            .enumerate()
            .map(|(k, ck)| ck * Complex64::from_polar(1.0, -TAU * ((m * k) % n) as f64 / n as f64))
            .sum::<Complex64>()
            .re;
        if lambda < -GRAM_PSD_TOL {
            return Err(Error::NotPsd { eigenvalue: lambda });
        }
        root_sum += lambda.max(0.0).sqrt();
    }
    let success = (root_sum / n as f64).powi(2);
    Ok(MaryBound {
        p_error: (1.0 - success).clamp(0.0, 1.0),
        states: n,
        method: MaryMethod::Srm,
    })
}

/// Square-root-measurement error from an explicit Gram matrix square root:
/// `P_c = (1/N) sum_i |(G^(1/2))_ii|^2`. Quadratic memory; meant for small M.
pub fn srm_direct(c: &Constellation) -> Result<MaryBound> {
    let amps = c.amplitudes();
    let n = amps.len();
    let gram = DMatrix::from_fn(n, n, |i, j| coherent_overlap(amps[i], amps[j]));
    let eig = hermitian_eig(&gram)?;
    if let Some(&low) = eig.values.first() {
        if low < -GRAM_PSD_TOL {
            return Err(Error::NotPsd { eigenvalue: low });
        }
    }
    let root = eig.map_spectrum(|x| x.max(0.0).sqrt());
    let success: f64 = (0..n).map(|i| root[(i, i)].norm_sqr()).sum::<f64>() / n as f64;
    Ok(MaryBound {
        p_error: (1.0 - success).clamp(0.0, 1.0),
        states: n,
        method: MaryMethod::Srm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::bit_ensembles;
    use crate::fockspace::{coherent_fock, density_from_ensemble, truncation_dim};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// (1 - sqrt(1 - e^-4)) / 2 from a 30-digit evaluation.
    const ANTIPODAL_UNIT: f64 = 0.004_600_070_369_588_713;

    fn pure_density(a: Amplitude, dim: usize) -> DensityMatrix {
        density_from_ensemble(&[coherent_fock(a, dim).unwrap()], &[1.0]).unwrap()
    }

    fn fock_bound(c: &Constellation, w0: &[f64], w1: &[f64], tol: f64) -> BinaryBound {
        let dim = truncation_dim(c.energy(), tol).unwrap();
        let states: Vec<_> = c
            .amplitudes()
            .into_iter()
            .map(|a| coherent_fock(a, dim).unwrap())
            .collect();
        let r0 = density_from_ensemble(&states, w0).unwrap();
        let r1 = density_from_ensemble(&states, w1).unwrap();
        helstrom_mixed(&r0, &r1, 0.5).unwrap()
    }

    #[test]
    fn pure_examples() {
        let a = Amplitude::new(1.3, -0.2);
        assert_abs_diff_eq!(
            helstrom_pure(a, a, 0.5).unwrap().p_error,
            0.5,
            epsilon = 1e-15
        );
        assert_eq!(
            helstrom_pure(a, Amplitude::VACUUM, 1.0).unwrap().p_error,
            0.0
        );
        let b = helstrom_pure(Amplitude::new(1.0, 0.0), Amplitude::new(-1.0, 0.0), 0.5).unwrap();
        assert_abs_diff_eq!(b.p_error, ANTIPODAL_UNIT, epsilon = 1e-15);
        assert!(helstrom_pure(a, a, 1.2).is_err());
    }

    #[test]
    fn pure_is_stable_at_high_energy() {
        // e^{-4S}/4 to leading order once the overlap is tiny
        let s: f64 = 20.0;
        let b = helstrom_pure(
            Amplitude::new(s.sqrt(), 0.0),
            Amplitude::new(-s.sqrt(), 0.0),
            0.5,
        )
        .unwrap();
        assert!(b.p_error > 0.0);
        assert_abs_diff_eq!(b.p_error.ln(), -4.0 * s - 4f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn mixed_equals_pure_for_rank_one() {
        let dim = truncation_dim(1.0, 1e-15).unwrap();
        let r0 = pure_density(Amplitude::new(1.0, 0.0), dim);
        let r1 = pure_density(Amplitude::new(-1.0, 0.0), dim);
        let b = helstrom_mixed(&r0, &r1, 0.5).unwrap();
        assert_abs_diff_eq!(b.p_error, ANTIPODAL_UNIT, epsilon = 1e-9);
        assert_eq!(helstrom_mixed(&r0, &r0, 0.5).unwrap().p_error, 0.5);
    }

    #[test]
    fn mixed_rejects_mismatched_dims() {
        let r0 = pure_density(Amplitude::VACUUM, 3);
        let r1 = pure_density(Amplitude::VACUUM, 4);
        assert!(matches!(
            helstrom_mixed(&r0, &r1, 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn osk_bits_are_indistinguishable() {
        let c = Constellation::new(8, 3.0).unwrap().with_osk(true);
        let e = bit_ensembles(&c, 0.5, 1e-12).unwrap();
        assert_abs_diff_eq!(
            helstrom_mixed(&e.rho0, &e.rho1, 0.5).unwrap().p_error,
            0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            helstrom_bits(&c, 0.5).unwrap().p_error,
            0.5,
            epsilon = 1e-12
        );
    }

    // The ensembles for large M differ only through coherences between levels
    // n and n + M, which scale like sqrt(P(n) P(n + M)); the number-basis
    // reference therefore needs a far smaller tail cut than 1e-10.
    #[test]
    fn subspace_matches_fock_basis() {
        for &(m, s) in &[
            (1usize, 1.0),
            (2, 0.5),
            (4, 2.0),
            (8, 4.0),
            (16, 6.0),
            (32, 9.0),
        ] {
            for half in [false, true] {
                let c = Constellation::new(m, s)
                    .unwrap()
                    .with_half_step(half)
                    .with_phase_offset(0.4);
                let (w0, w1) = bit_ensemble_weights(&c);
                let sub = PhaseSubspace::new(&c).helstrom(&w0, &w1, 0.5).unwrap();
                let full = fock_bound(&c, &w0, &w1, 1e-30);
                assert_abs_diff_eq!(sub.p_error, full.p_error, epsilon = 1e-9);

                let (up, down) = updown_weights(&c);
                let sub = updown_bound(&c).unwrap();
                let full = fock_bound(&c, &down, &up, 1e-30);
                assert_abs_diff_eq!(sub.p_error, full.p_error, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn subspace_operator_reproduces_gram() {
        // <a_i|a_j> equals the inner product of the mode coordinates, so the
        // rank-one operator of state j has trace 1 and the mixture of all
        // states has spectrum mu_m.
        let c = Constellation::new(4, 1.7).unwrap();
        let sub = PhaseSubspace::new(&c);
        let mut single = vec![0.0; 8];
        single[3] = 1.0;
        let op = sub.operator(&single).unwrap();
        assert_abs_diff_eq!(op.trace().re, 1.0, epsilon = 1e-12);
        let uniform = vec![1.0 / 8.0; 8];
        let ev = crate::fockspace::hermitian_eigenvalues(&sub.operator(&uniform).unwrap()).unwrap();
        let (mut mu, _) = folded_poisson(1.7, 8);
        mu.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&mu) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn eve_bound_grows_with_m() {
        let mut last = 0.0;
        for log_m in 0..7 {
            let b = helstrom_bits(&Constellation::new(1 << log_m, 1.0).unwrap(), 0.5).unwrap();
            assert!(b.p_error >= last - 1e-12);
            last = b.p_error;
        }
        assert!(last > 0.45);
    }

    #[test]
    fn srm_vacuum_is_guessing() {
        for m in [1usize, 4, 32] {
            let c = Constellation::new(m, 0.0).unwrap();
            let b = srm_mary_error(&c).unwrap();
            assert_abs_diff_eq!(b.p_error, 1.0 - 1.0 / (2 * m) as f64, epsilon = 1e-12);
            assert_eq!(b.states, 2 * m);
        }
    }

    #[test]
    fn srm_binary_is_helstrom() {
        for s in [0.1, 1.0, 2.5] {
            let c = Constellation::new(1, s).unwrap();
            let h = helstrom_pure(c.amplitude(0), c.amplitude(1), 0.5).unwrap();
            assert_abs_diff_eq!(
                srm_mary_error(&c).unwrap().p_error,
                h.p_error,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn srm_dft_matches_direct() {
        for m in [1usize, 2, 4, 8] {
            for s in [0.5, 2.0, 4.0, 9.0] {
                let c = Constellation::new(m, s).unwrap().with_phase_offset(0.2);
                let dft = srm_mary_error(&c).unwrap().p_error;
                let direct = srm_direct(&c).unwrap().p_error;
                assert_abs_diff_eq!(dft, direct, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn updown_limits() {
        let c = Constellation::new(16, 0.0).unwrap();
        assert_abs_diff_eq!(updown_bound(&c).unwrap().p_error, 0.5, epsilon = 1e-12);
        assert!(updown_bound(&c.with_osk(true)).is_err());
        // bigger signals separate the half-planes better
        let mut last = 0.5;
        for s in [1.0, 4.0, 16.0, 64.0] {
            let p = updown_bound(&Constellation::new(4, s).unwrap())
                .unwrap()
                .p_error;
            assert!(p < last && p < 0.5);
            last = p;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn pure_monotone_in_overlap(s1 in 0.0f64..4.0, s2 in 0.0f64..4.0) {
            let base = Amplitude::new(1.0, 0.0);
            let (near, far) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
            let p_near = helstrom_pure(base, Amplitude::new(1.0 + near.sqrt(), 0.0), 0.5).unwrap().p_error;
            let p_far = helstrom_pure(base, Amplitude::new(1.0 + far.sqrt(), 0.0), 0.5).unwrap().p_error;
            prop_assert!(p_near >= p_far);
        }

        #[test]
        fn updown_invariant_under_joint_rotation(log_m in 1u32..6, s in 0.5f64..20.0, rot in -3.0f64..3.0) {
            let c = Constellation::new(1 << log_m, s).unwrap();
            let base = updown_bound(&c).unwrap().p_error;
            let rotated = updown_bound(&c.with_phase_offset(rot)).unwrap().p_error;
            prop_assert!((base - rotated).abs() < 1e-12);
        }
    }
}
