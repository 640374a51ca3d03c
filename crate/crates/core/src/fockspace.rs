//! Truncated number-basis numerics: coherent states, density matrices,
//! Hermitian eigendecomposition and the trace norm.
//!
//! A coherent state |a> has number-basis coefficients
//! `c_n = exp(-|a|^2/2) a^n / sqrt(n!)`; the expansion is cut at the smallest
//! dimension whose Poisson tail falls below a tolerance. Truncated vectors are
//! renormalized before they enter a density matrix and the lost probability is
//! carried along as a diagnostic (`truncation_deficit`).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Default Poisson-tail tolerance used to size the number basis.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-10;
/// Entrywise Hermiticity tolerance accepted by [`hermitian_eig`].
pub const HERMITIAN_INPUT_TOL: f64 = 1e-10;
/// Entrywise Hermiticity tolerance of a [`DensityMatrix`].
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-12;
pub const DENSITY_TRACE_TOL: f64 = 1e-9;
pub const DENSITY_PSD_TOL: f64 = 1e-9;
/// Convergence tolerance handed to the eigensolver.
pub const EIG_TOL: f64 = 1e-12;
/// Sweeps allowed per unit of dimension.
pub const EIG_SWEEPS_PER_DIM: usize = 100;

/// Complex amplitude `a` of a coherent state |a>; `|a|^2` is the mean photon
/// number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amplitude {
    pub re: f64,
    pub im: f64,
}

impl Amplitude {
    pub const VACUUM: Amplitude = Amplitude { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Amplitude { re, im }
    }

    /// Amplitude with mean photon number `energy` and the given phase.
    pub fn from_energy_phase(energy: f64, phase: f64) -> Self {
        let r = energy.max(0.0).sqrt();
        Amplitude {
            re: r * phase.cos(),
            im: r * phase.sin(),
        }
    }

    pub fn energy(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn phase(&self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl From<Complex64> for Amplitude {
    fn from(z: Complex64) -> Self {
        Amplitude { re: z.re, im: z.im }
    }
}

/// Analytic overlap `<a|b> = exp(-|a|^2/2 - |b|^2/2 + conj(a) b)`.
pub fn coherent_overlap(a: Amplitude, b: Amplitude) -> Complex64 {
    let (za, zb) = (a.to_complex(), b.to_complex());
    (-0.5 * a.energy() - 0.5 * b.energy() + za.conj() * zb).exp()
}

/// Poisson probability `exp(-mean) mean^n / n!`, evaluated in log space.
pub fn poisson_pmf(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let n_f = n as f64;
    (-mean + n_f * mean.ln() - ln_gamma(n_f + 1.0)).exp()
}

/// Poisson terms `P(0..)` up to the point where the remaining tail is far
/// below `floor`.
fn poisson_terms(mean: f64, floor: f64) -> Vec<f64> {
    let mut terms = Vec::new();
    let mut n = 0usize;
    loop {
        let p = poisson_pmf(mean, n);
        terms.push(p);
        // Past the mode successive terms shrink by at least r = mean/(n+2),
        // so the tail beyond n is bounded by p r / (1 - r).
        let past_mode = (n as f64) + 1.0 > mean;
        if past_mode {
            let ratio = mean / (n as f64 + 2.0);
            let tail_bound = if ratio < 1.0 {
                p * ratio / (1.0 - ratio)
            } else {
                f64::INFINITY
            };
            if tail_bound < floor || p == 0.0 && n as f64 > mean {
                break;
            }
        }
        n += 1;
    }
    terms
}

/// Smallest dimension `n_max + 1` whose Poisson(max_energy) tail above
/// `n_max` is below `tol`.
pub fn truncation_dim(max_energy: f64, tol: f64) -> Result<usize> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid(
            "tol",
            format!("must lie in (0, 1), got {tol}"),
        ));
    }
    if !(max_energy >= 0.0 && max_energy.is_finite()) {
        return Err(Error::invalid(
            "max_energy",
            format!("must be finite and >= 0, got {max_energy}"),
        ));
    }
    let terms = poisson_terms(max_energy, tol * 1e-6);
    // suffix[n] = sum_{k >= n} P(k), accumulated from the small end.
    let mut suffix = vec![0.0; terms.len() + 1];
    for n in (0..terms.len()).rev() {
        suffix[n] = suffix[n + 1] + terms[n];
    }
    let n_max = (0..terms.len())
        .find(|&n| suffix[n + 1] < tol)
        .unwrap_or(terms.len() - 1);
    Ok(n_max + 1)
}

/// Poisson mass folded onto residue classes: `out[m] = sum_{n = m mod modulus} P(n)`.
/// Returns the folded masses and the (negligible) unsummed tail.
pub fn folded_poisson(mean: f64, modulus: usize) -> (Vec<f64>, f64) {
    let terms = poisson_terms(mean, 1e-300);
    let mut folded = vec![0.0; modulus];
    for (n, p) in terms.iter().enumerate() {
        folded[n % modulus] += p;
    }
    let total: f64 = folded.iter().sum();
    (folded, (1.0 - total).max(0.0))
}

/// A truncated number-basis vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    coeffs: DVector<Complex64>,
}

impl FockVector {
    pub fn new(coeffs: DVector<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("dim", "must be >= 1"));
        }
        Ok(FockVector { coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &DVector<Complex64> {
        &self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Probability lost to truncation, `1 - <v|v>`.
    pub fn deficit(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }

    pub fn normalized(&self) -> FockVector {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return self.clone();
        }
        FockVector {
            coeffs: self.coeffs.unscale(norm),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FockVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.coeffs.dotc(&other.coeffs))
    }
}

/// Coherent state |a> truncated to `dim` number states (not renormalized).
pub fn coherent_fock(a: Amplitude, dim: usize) -> Result<FockVector> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be >= 1"));
    }
    if !a.is_finite() {
        return Err(Error::invalid("a", "amplitude must be finite"));
    }
    let energy = a.energy();
    let coeffs = if energy == 0.0 {
        DVector::from_fn(dim, |n, _| {
            if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    } else {
        let (ln_r, phase) = (a.modulus().ln(), a.phase());
        DVector::from_fn(dim, |n, _| {
            let n_f = n as f64;
            let modulus = (-0.5 * energy + n_f * ln_r - 0.5 * ln_gamma(n_f + 1.0)).exp();
            Complex64::from_polar(modulus, n_f * phase)
        })
    };
    Ok(FockVector { coeffs })
}

/// Hermitian, unit-trace, positive semidefinite operator on a truncated
/// number basis.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
    truncation_deficit: f64,
}

impl DensityMatrix {
    /// Validates `entries` against the density-matrix invariants.
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self> {
        let rho = DensityMatrix {
            entries,
            truncation_deficit: 0.0,
        };
        rho.validate()?;
        Ok(rho)
    }

    fn validate(&self) -> Result<()> {
        let m = &self.entries;
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::InvalidDensity(format!(
                "shape {}x{} is not square and non-empty",
                m.nrows(),
                m.ncols()
            )));
        }
        let dev = hermitian_deviation(m);
        if dev > DENSITY_HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!(
                "Hermiticity deviation {dev:.3e}"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > DENSITY_TRACE_TOL || tr.im.abs() > DENSITY_TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = hermitian_eigenvalues(m)?.first().copied().unwrap_or(0.0);
        if min < -DENSITY_PSD_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    /// Largest pre-normalization probability deficit among the ensemble members.
    pub fn truncation_deficit(&self) -> f64 {
        self.truncation_deficit
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// `max_ij |self_ij - other_ij|`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(max_abs(&(&self.entries - &other.entries)))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.entries)
    }

    /// Convex combination `sum_i w_i rho_i` of same-dimension densities.
    pub fn mix(parts: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("parts", "empty mixture"))?;
        let dim = first.1.dim();
        let mut acc = DMatrix::zeros(dim, dim);
        let mut deficit: f64 = 0.0;
        for (w, rho) in parts {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: rho.dim(),
                });
            }
            if *w < 0.0 {
                return Err(Error::invalid("weights", "negative mixture weight"));
            }
            acc += rho.entries.scale(*w);
            deficit = deficit.max(rho.truncation_deficit);
        }
        let mut out = DensityMatrix::from_matrix(acc)?;
        out.truncation_deficit = deficit;
        Ok(out)
    }
}

/// `rho = sum_i p_i |psi_i><psi_i|` with every state renormalized first.
pub fn density_from_ensemble(states: &[FockVector], probs: &[f64]) -> Result<DensityMatrix> {
    if states.is_empty() {
        return Err(Error::invalid("states", "empty ensemble"));
    }
    if states.len() != probs.len() {
        return Err(Error::DimensionMismatch {
            expected: states.len(),
            found: probs.len(),
        });
    }
    if let Some(p) = probs.iter().find(|p| **p < 0.0 || !p.is_finite()) {
        return Err(Error::invalid(
            "probs",
            format!("negative or non-finite probability {p}"),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(
            "probs",
            format!("must sum to 1, got {total}"),
        ));
    }
    let dim = states[0].dim();
    let mut entries = DMatrix::<Complex64>::zeros(dim, dim);
    let mut deficit: f64 = 0.0;
    for (state, &p) in states.iter().zip(probs) {
        if state.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: state.dim(),
            });
        }
        if p == 0.0 {
            continue;
        }
        deficit = deficit.max(state.deficit());
        let v = state.normalized();
        entries.ger(
            Complex64::new(p, 0.0),
            v.coeffs(),
            &v.coeffs().conjugate(),
            Complex64::new(1.0, 0.0),
        );
    }
    let mut rho = DensityMatrix::from_matrix(entries)?;
    rho.truncation_deficit = deficit;
    Ok(rho)
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max_ij |m_ij - conj(m_ji)|`; infinite for non-square input.
pub fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigenvalues (ascending) and matching unit eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl HermitianEigen {
    /// `V diag(values) V^dagger`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let mut scaled = self.vectors.clone();
        for (mut col, &lambda) in scaled.column_iter_mut().zip(&self.values) {
            col *= Complex64::new(lambda, 0.0);
        }
        scaled * self.vectors.adjoint()
    }

    /// Applies `f` to the spectrum: `V diag(f(values)) V^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
        let mapped = HermitianEigen {
            values: self.values.iter().map(|&x| f(x)).collect(),
            vectors: self.vectors.clone(),
        };
        mapped.reconstruct()
    }
}

fn check_hermitian(m: &DMatrix<Complex64>) -> Result<()> {
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_INPUT_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

fn decompose(m: &DMatrix<Complex64>) -> Result<nalgebra::SymmetricEigen<Complex64, nalgebra::Dyn>> {
    check_hermitian(m)?;
    let dim = m.nrows();
    // Symmetrize so the solver sees an exactly Hermitian matrix.
    let sym = (m + m.adjoint()).unscale(2.0);
    nalgebra::SymmetricEigen::try_new(sym, EIG_TOL, EIG_SWEEPS_PER_DIM * dim.max(1))
        .ok_or(Error::NoConvergence { dim })
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted ascending.
pub fn hermitian_eig(m: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    if m.is_empty() {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = decompose(m)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Ok(HermitianEigen { values, vectors })
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let mut values: Vec<f64> = decompose(m)?.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// `Tr|m| = sum_i |lambda_i|` for Hermitian `m`.
pub fn trace_norm(m: &DMatrix<Complex64>) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?.iter().map(|x| x.abs()).sum())
}
