//! Python bindings. Structured results come back as plain dicts.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use ycore::attacks::{self, AttackScenario, Dsr, EntropyRegime};
use ycore::codec::{self, KeySpace, KeystreamSpec};
use ycore::detection;
use ycore::fockspace::Amplitude;
use ycore::runner::{self, Clock, Family};
use ycore::sampling::stream_rng;

create_exception!(yzero, YzeroError, PyException);
create_exception!(yzero, ConfigError, YzeroError);
create_exception!(yzero, RegimeCapError, YzeroError);

fn to_py(err: ycore::Error) -> PyErr {
    match err {
        ycore::Error::Config { .. } => ConfigError::new_err(err.to_string()),
        ycore::Error::RegimeCap(_) => RegimeCapError::new_err(err.to_string()),
        ycore::Error::InvalidArgument { .. } => PyValueError::new_err(err.to_string()),
        other => YzeroError::new_err(other.to_string()),
    }
}

/// Serializes through JSON into Python objects.
fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| YzeroError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn amp(z: Complex64) -> Amplitude {
    Amplitude::new(z.re, z.im)
}

#[pyclass(name = "Constellation", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConstellation {
    inner: codec::Constellation,
}

#[pymethods]
impl PyConstellation {
    #[new]
    #[pyo3(signature = (bases, energy, osk = false, phase_offset = 0.0, half_step = false))]
    fn new(
        bases: usize,
        energy: f64,
        osk: bool,
        phase_offset: f64,
        half_step: bool,
    ) -> PyResult<Self> {
        let inner = codec::Constellation::new(bases, energy)
            .map_err(to_py)?
            .with_osk(osk)
            .with_phase_offset(phase_offset)
            .with_half_step(half_step);
        Ok(PyConstellation { inner })
    }

    #[getter]
    fn bases(&self) -> usize {
        self.inner.bases()
    }

    #[getter]
    fn states(&self) -> usize {
        self.inner.states()
    }

    #[getter]
    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    #[getter]
    fn osk(&self) -> bool {
        self.inner.osk()
    }

    #[getter]
    fn bits_per_symbol(&self) -> u32 {
        self.inner.bits_per_symbol()
    }

    fn phase(&self, index: usize) -> f64 {
        self.inner.phase(index)
    }

    /// Half-plane label of state `index`: 1 for up, 0 for down.
    fn label(&self, index: usize) -> u8 {
        self.inner.label(index).bit()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner
            .amplitudes()
            .into_iter()
            .map(|a| a.to_complex())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Constellation(bases={}, energy={}, osk={})",
            self.inner.bases(),
            self.inner.energy(),
            self.inner.osk()
        )
    }
}

#[pyclass(name = "Keystream", skip_from_py_object)]
#[derive(Clone)]
struct PyKeystream {
    inner: codec::Keystream,
}

#[pymethods]
impl PyKeystream {
    #[new]
    #[pyo3(signature = (poly, seed, key_width, osk = false))]
    fn new(poly: u64, seed: u64, key_width: u32, osk: bool) -> PyResult<Self> {
        Ok(PyKeystream {
            inner: codec::Keystream::new(poly, seed, key_width, osk).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (poly_bitmask_hex, seed_hex, bits_per_symbol, osk = false))]
    fn from_spec(
        poly_bitmask_hex: String,
        seed_hex: String,
        bits_per_symbol: u32,
        osk: bool,
    ) -> PyResult<Self> {
        let spec = KeystreamSpec {
            poly_bitmask_hex,
            seed_hex,
            bits_per_symbol,
        };
        Ok(PyKeystream {
            inner: codec::Keystream::from_spec(&spec, osk).map_err(to_py)?,
        })
    }

    /// Keystream of `key` in the default key space of `key_bits` bits.
    #[staticmethod]
    fn for_key(key_bits: u32, key: u64, constellation: &PyConstellation) -> PyResult<Self> {
        let c = &constellation.inner;
        let space = KeySpace::new(key_bits).map_err(to_py)?;
        Ok(PyKeystream {
            inner: space
                .keystream(key, c.key_width(), c.osk())
                .map_err(to_py)?,
        })
    }

    fn spec<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.spec())
    }

    #[getter]
    fn state(&self) -> u64 {
        self.inner.state()
    }

    fn next_bit(&mut self) -> u8 {
        self.inner.next_bit()
    }

    /// `(running_key, parity, osk_bit)` for the next symbol.
    fn next_draw(&mut self) -> (usize, u8, u8) {
        let d = self.inner.next_draw();
        (d.running_key, d.parity, d.osk_bit)
    }
}

/// Encodes `bits`, advancing `keystream`. Returns one dict per symbol.
#[pyfunction]
fn encode<'py>(
    py: Python<'py>,
    bits: Vec<u8>,
    keystream: &mut PyKeystream,
    constellation: &PyConstellation,
) -> PyResult<Bound<'py, PyAny>> {
    let symbols =
        codec::encode_sequence(&bits, &mut keystream.inner, &constellation.inner).map_err(to_py)?;
    to_dict(py, &symbols)
}

#[pyfunction]
#[pyo3(signature = (a0, a1, p0 = 0.5))]
fn helstrom_pure(a0: Complex64, a1: Complex64, p0: f64) -> PyResult<f64> {
    Ok(detection::helstrom_pure(amp(a0), amp(a1), p0)
        .map_err(to_py)?
        .p_error)
}

/// Eve's bit bound between the bit-conditional mixtures.
#[pyfunction]
#[pyo3(signature = (constellation, p0 = 0.5))]
fn helstrom_bits<'py>(
    py: Python<'py>,
    constellation: &PyConstellation,
    p0: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_dict(
        py,
        &detection::helstrom_bits(&constellation.inner, p0).map_err(to_py)?,
    )
}

#[pyfunction]
fn srm_mary_error(constellation: &PyConstellation) -> PyResult<f64> {
    Ok(detection::srm_mary_error(&constellation.inner)
        .map_err(to_py)?
        .p_error)
}

#[pyfunction]
fn updown_bound<'py>(
    py: Python<'py>,
    constellation: &PyConstellation,
) -> PyResult<Bound<'py, PyAny>> {
    to_dict(
        py,
        &detection::updown_bound(&constellation.inner).map_err(to_py)?,
    )
}

/// `(slope, intercept, r2)` of `ln p` against `S`.
#[pyfunction]
fn exponent_fit(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64)> {
    let f = detection::exponent_fit(&points).map_err(to_py)?;
    Ok((f.slope, f.intercept, f.r2))
}

#[pyfunction]
fn keygen_advantage<'py>(py: Python<'py>, energies: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &attacks::keygen_advantage(&energies).map_err(to_py)?)
}

#[allow(clippy::too_many_arguments)]
fn scenario(
    key_bits: u32,
    length: usize,
    error_positions: Vec<usize>,
    misalign: f64,
    dsr_f: Option<f64>,
    jitter: Option<f64>,
    otp: bool,
    data_bias: f64,
) -> PyResult<AttackScenario> {
    let dsr = match (dsr_f, jitter) {
        (Some(_), Some(_)) => return Err(PyValueError::new_err("give dsr_f or jitter, not both")),
        (Some(f), None) => Dsr::Binary { f },
        (None, Some(delta)) => Dsr::Jitter { delta },
        (None, None) => Dsr::None,
    };
    let s = AttackScenario::new(key_bits, length)
        .with_errors(error_positions)
        .with_misalign(misalign)
        .with_dsr(dsr)
        .with_otp(otp)
        .with_data_bias(data_bias);
    s.validate().map_err(to_py)?;
    Ok(s)
}

/// One key-search attack. The per-key match fractions are returned under
/// `per_seed_match_fraction`.
#[pyfunction]
#[pyo3(signature = (
    constellation, key_bits, length, seed, key = None, error_positions = vec![], misalign = 0.0,
    dsr_f = None, jitter = None, otp = false, data_bias = 0.5
))]
#[allow(clippy::too_many_arguments)]
fn nishioka_attack<'py>(
    py: Python<'py>,
    constellation: &PyConstellation,
    key_bits: u32,
    length: usize,
    seed: u64,
    key: Option<u64>,
    error_positions: Vec<usize>,
    misalign: f64,
    dsr_f: Option<f64>,
    jitter: Option<f64>,
    otp: bool,
    data_bias: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let s = scenario(
        key_bits,
        length,
        error_positions,
        misalign,
        dsr_f,
        jitter,
        otp,
        data_bias,
    )?;
    let rec = attacks::nishioka_attack(&s, &constellation.inner, key, &mut stream_rng(seed, 0))
        .map_err(to_py)?;
    let out = to_dict(py, &rec)?;
    out.set_item("per_seed_match_fraction", rec.per_seed_match_fraction)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (
    constellation, key_bits, length, trials, seed, regime = "classical", error_positions = vec![],
    misalign = 0.0, dsr_f = None, jitter = None, data_bias = 0.5
))]
#[allow(clippy::too_many_arguments)]
fn entropy_report<'py>(
    py: Python<'py>,
    constellation: &PyConstellation,
    key_bits: u32,
    length: usize,
    trials: u64,
    seed: u64,
    regime: &str,
    error_positions: Vec<usize>,
    misalign: f64,
    dsr_f: Option<f64>,
    jitter: Option<f64>,
    data_bias: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let regime = match regime {
        "classical" => EntropyRegime::Classical,
        "quantum" => EntropyRegime::Quantum,
        other => return Err(PyValueError::new_err(format!("unknown regime `{other}`"))),
    };
    let s = scenario(
        key_bits,
        length,
        error_positions,
        misalign,
        dsr_f,
        jitter,
        false,
        data_bias,
    )?;
    let r =
        attacks::entropy_report(&s, &constellation.inner, regime, trials, seed).map_err(to_py)?;
    to_dict(py, &r)
}

/// Runs a scenario file; returns the written paths.
#[pyfunction]
#[pyo3(signature = (family, config, out_dir = None, seed = None, timestamp = None))]
fn run_config(
    py: Python<'_>,
    family: &str,
    config: PathBuf,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    timestamp: Option<u64>,
) -> PyResult<Vec<PathBuf>> {
    let family: Family = family.parse().map_err(to_py)?;
    let clock = timestamp.map_or(Clock::System, Clock::Fixed);
    let report = py
        .detach(|| runner::run_file(family, &config, out_dir.as_deref(), seed, clock))
        .map_err(to_py)?;
    Ok(report.files)
}

#[pymodule]
fn yzero(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("YzeroError", py.get_type::<YzeroError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("RegimeCapError", py.get_type::<RegimeCapError>())?;
    m.add_class::<PyConstellation>()?;
    m.add_class::<PyKeystream>()?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(helstrom_pure, m)?)?;
    m.add_function(wrap_pyfunction!(helstrom_bits, m)?)?;
    m.add_function(wrap_pyfunction!(srm_mary_error, m)?)?;
    m.add_function(wrap_pyfunction!(updown_bound, m)?)?;
    m.add_function(wrap_pyfunction!(exponent_fit, m)?)?;
    m.add_function(wrap_pyfunction!(keygen_advantage, m)?)?;
    m.add_function(wrap_pyfunction!(nishioka_attack, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
