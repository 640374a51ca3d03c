//! Scenario files: TOML with `[constellation]`, `[keystream]`, `[scenario]`
//! and `[output]` sections.
//!
//! Validation runs to completion before any computation and reports the line
//! of the offending key. Requests beyond the exhaustive-enumeration caps are
//! reported as [`Error::RegimeCap`], everything else as [`Error::Config`].

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use crate::attacks::{
    AttackScenario, Dsr, EntropyRegime, ENTROPY_MAX_KEY_BITS, ENTROPY_MAX_LENGTH,
    SEARCH_MAX_KEY_BITS,
};
use crate::codec::{parse_hex, Constellation, KeySpace};
use crate::detection::PhaseSubspace;
use crate::error::{Error, Result};

/// Largest M accepted by bound sweeps.
pub const BOUNDS_MAX_BASES: usize = 4096;
/// Largest subspace dimension a bound sweep may diagonalize.
pub const BOUNDS_MAX_DIM: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bounds,
    Attack,
    Entropy,
    Keygen,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Bounds => "bounds",
            Family::Attack => "attack",
            Family::Entropy => "entropy",
            Family::Keygen => "keygen",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounds" => Ok(Family::Bounds),
            "attack" => Ok(Family::Attack),
            "entropy" => Ok(Family::Entropy),
            "keygen" => Ok(Family::Keygen),
            _ => Err(Error::invalid("family", format!("unknown family `{s}`"))),
        }
    }
}

/// Quantity evaluated by a bound sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundMethod {
    /// Eve's bit bound between the bit-conditional mixtures.
    #[serde(rename = "helstrom_mixed_bit")]
    HelstromMixedBit,
    /// Square-root measurement over the 2M states.
    #[serde(rename = "srm_2M")]
    Srm,
    /// Up/down label bound.
    #[serde(rename = "updown")]
    Updown,
}

impl BoundMethod {
    pub const ALL: [BoundMethod; 3] = [
        BoundMethod::HelstromMixedBit,
        BoundMethod::Srm,
        BoundMethod::Updown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundMethod::HelstromMixedBit => "helstrom_mixed_bit",
            BoundMethod::Srm => "srm_2M",
            BoundMethod::Updown => "updown",
        }
    }
}

/// Constellation parameters with M and S as sweep grids.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstellationGrid {
    pub bases: Vec<usize>,
    pub energies: Vec<f64>,
    pub phase_offset: f64,
    pub half_step: bool,
    pub osk: bool,
}

impl ConstellationGrid {
    pub fn constellation(&self, bases: usize, energy: f64) -> Result<Constellation> {
        Ok(Constellation::new(bases, energy)?
            .with_phase_offset(self.phase_offset)
            .with_half_step(self.half_step)
            .with_osk(self.osk))
    }

    /// The single constellation of a non-sweep family.
    pub fn single(&self) -> Result<Constellation> {
        self.constellation(self.bases[0], self.energies[0])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeystreamConfig {
    pub key_bits: Option<u32>,
    pub poly: Option<u64>,
    /// Fixed key; drawn from the master seed when absent.
    pub key: Option<u64>,
}

impl KeystreamConfig {
    pub fn key_space(&self) -> Result<KeySpace> {
        let bits = self
            .key_bits
            .ok_or_else(|| Error::invalid("key_bits", "missing"))?;
        match self.poly {
            Some(p) => KeySpace::with_poly(bits, p),
            None => KeySpace::new(bits),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioParams {
    pub master_seed: Option<u64>,
    pub methods: Vec<BoundMethod>,
    pub p0: f64,
    pub length: usize,
    pub trials: u64,
    pub error_positions: Vec<usize>,
    pub misalign: Vec<f64>,
    pub dsr: Dsr,
    pub otp_mode: bool,
    pub data_bias: f64,
    pub mi_trials: u64,
    pub regime: EntropyRegime,
    pub s_prime: Vec<f64>,
    pub energy_scale: f64,
    pub mc_trials: u64,
    pub mc_energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub prefix: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub family: Family,
    pub constellation: ConstellationGrid,
    pub keystream: KeystreamConfig,
    pub scenario: ScenarioParams,
    pub output: OutputConfig,
    /// SHA-256 of the config file bytes, hex.
    pub config_sha256: String,
}

impl ScenarioConfig {
    /// Parses and validates `text` for `family`. `seed` overrides
    /// `scenario.master_seed`.
    pub fn parse(text: &str, family: Family, seed: Option<u64>) -> Result<Self> {
        let ctx = Ctx { text };
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map_or(1, |s| ctx.line(&s)),
            message: e.message().trim().to_string(),
        })?;
        let mut cfg = ctx.build(raw, family, seed)?;
        cfg.config_sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(cfg)
    }

    pub fn attack_scenario(&self, misalign: f64) -> AttackScenario {
        let s = &self.scenario;
        AttackScenario::new(self.keystream.key_bits.unwrap_or(0), s.length)
            .with_errors(s.error_positions.clone())
            .with_misalign(misalign)
            .with_dsr(s.dsr)
            .with_otp(s.otp_mode)
            .with_data_bias(s.data_bias)
    }

    pub fn master_seed(&self) -> Result<u64> {
        self.scenario
            .master_seed
            .ok_or_else(|| Error::invalid("master_seed", "required for Monte Carlo runs"))
    }
}

// ---- raw file layout ----

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

type Field<T> = Option<Spanned<T>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    constellation: Field<RawConstellation>,
    keystream: Field<RawKeystream>,
    scenario: Field<RawScenario>,
    output: Field<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstellation {
    #[serde(alias = "M")]
    m: Field<OneOrMany<i64>>,
    #[serde(alias = "S")]
    s: Field<OneOrMany<f64>>,
    phase_offset: Field<f64>,
    half_step: Option<bool>,
    osk: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKeystream {
    key_bits: Field<i64>,
    poly_bitmask_hex: Field<String>,
    seed_hex: Field<String>,
    bits_per_symbol: Field<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    family: Field<String>,
    master_seed: Field<i64>,
    methods: Field<Vec<Spanned<String>>>,
    p0: Field<f64>,
    n: Field<i64>,
    trials: Field<i64>,
    error_positions: Field<Vec<i64>>,
    misalign: Field<OneOrMany<f64>>,
    dsr: Field<String>,
    dsr_f: Field<f64>,
    dsr_jitter: Field<f64>,
    otp_mode: Option<bool>,
    data_bias: Field<f64>,
    mi_trials: Field<i64>,
    regime: Field<String>,
    s_prime: Field<OneOrMany<f64>>,
    energy_scale: Field<f64>,
    mc_trials: Field<i64>,
    mc_energy: Field<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Field<String>,
    prefix: Field<String>,
}

// ---- validation ----

struct Ctx<'a> {
    text: &'a str,
}

/// A value together with the line it came from.
struct At<T> {
    value: T,
    line: usize,
}

impl<'a> Ctx<'a> {
    fn line(&self, span: &Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].matches('\n').count() + 1
    }

    fn last_line(&self) -> usize {
        self.text.lines().count().max(1)
    }

    fn at<T>(&self, s: Spanned<T>) -> At<T> {
        let line = self.line(&s.span());
        At {
            value: s.into_inner(),
            line,
        }
    }

    fn opt<T>(&self, f: Field<T>) -> Option<At<T>> {
        f.map(|s| self.at(s))
    }

    fn section<T>(&self, f: Field<T>) -> (Option<T>, usize) {
        match f {
            Some(s) => {
                let a = self.at(s);
                (Some(a.value), a.line)
            }
            None => (None, self.last_line()),
        }
    }

    fn build(&self, raw: RawConfig, family: Family, seed: Option<u64>) -> Result<ScenarioConfig> {
        let (con, con_line) = self.section(raw.constellation);
        let (ks, ks_line) = self.section(raw.keystream);
        let (sc, sc_line) = self.section(raw.scenario);
        let (out, _) = self.section(raw.output);

        let con = con.ok_or_else(|| config(con_line, "missing [constellation] section"))?;
        let mut sc = sc.unwrap_or_else(RawScenario::empty);
        let ks = ks.unwrap_or(RawKeystream {
            key_bits: None,
            poly_bitmask_hex: None,
            seed_hex: None,
            bits_per_symbol: None,
        });

        if let Some(f) = self.opt(sc.family.take()) {
            if f.value != family.name() {
                return Err(config(
                    f.line,
                    format!("file is for family `{}`, run requested `{family}`", f.value),
                ));
            }
        }

        let constellation = self.constellation(con, con_line, family)?;
        let keystream = self.keystream(ks, ks_line, family, &constellation)?;
        let scenario = self.scenario(sc, sc_line, family, seed, &constellation, &keystream)?;
        let output = match out {
            Some(o) => OutputConfig {
                dir: o
                    .dir
                    .map_or_else(|| PathBuf::from("."), |d| PathBuf::from(d.into_inner())),
                prefix: o.prefix.map(|p| p.into_inner()).unwrap_or_default(),
            },
            None => OutputConfig {
                dir: PathBuf::from("."),
                prefix: String::new(),
            },
        };
        Ok(ScenarioConfig {
            family,
            constellation,
            keystream,
            scenario,
            output,
            config_sha256: String::new(),
        })
    }

    fn constellation(
        &self,
        con: RawConstellation,
        line: usize,
        family: Family,
    ) -> Result<ConstellationGrid> {
        let m = match self.opt(con.m) {
            Some(m) => {
                let values = m.value.into_vec();
                if values.is_empty() {
                    return Err(config(m.line, "grid `M` is empty"));
                }
                let mut bases = Vec::new();
                for v in values {
                    if v < 1 || !(v as u64).is_power_of_two() {
                        return Err(config(
                            m.line,
                            format!("M = {v} is not a positive power of two"),
                        ));
                    }
                    if family == Family::Bounds && v as usize > BOUNDS_MAX_BASES {
                        return Err(cap(
                            m.line,
                            format!("M = {v} exceeds the bound-sweep cap {BOUNDS_MAX_BASES}"),
                        ));
                    }
                    bases.push(v as usize);
                }
                At {
                    value: bases,
                    line: m.line,
                }
            }
            None if family == Family::Keygen => At {
                value: vec![1],
                line,
            },
            None => return Err(config(line, "missing `M` in [constellation]")),
        };
        let s = match self.opt(con.s) {
            Some(s) => {
                let values = s.value.into_vec();
                if values.is_empty() {
                    return Err(config(s.line, "grid `S` is empty"));
                }
                if let Some(bad) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                    return Err(config(s.line, format!("S = {bad} must be finite and >= 0")));
                }
                At {
                    value: values,
                    line: s.line,
                }
            }
            None => return Err(config(line, "missing `S` in [constellation]")),
        };
        if matches!(family, Family::Attack | Family::Entropy) {
            if m.value.len() != 1 {
                return Err(config(
                    m.line,
                    format!("family `{family}` takes a single M"),
                ));
            }
            if s.value.len() != 1 {
                return Err(config(
                    s.line,
                    format!("family `{family}` takes a single S"),
                ));
            }
        }
        let phase_offset = match self.opt(con.phase_offset) {
            Some(p) if !p.value.is_finite() => {
                return Err(config(p.line, "phase_offset must be finite"))
            }
            Some(p) => p.value,
            None => 0.0,
        };
        let grid = ConstellationGrid {
            bases: m.value,
            energies: s.value,
            phase_offset,
            half_step: con.half_step.unwrap_or(false),
            osk: con.osk.unwrap_or(false),
        };
        if family == Family::Bounds {
            for &bases in &grid.bases {
                for &energy in &grid.energies {
                    let dim = PhaseSubspace::new(&grid.constellation(bases, energy)?).dim();
                    if dim > BOUNDS_MAX_DIM {
                        return Err(cap(
                            s.line,
                            format!("M = {bases}, S = {energy} needs a {dim}-dimensional subspace (cap {BOUNDS_MAX_DIM})"),
                        ));
                    }
                }
            }
        }
        Ok(grid)
    }

    fn keystream(
        &self,
        ks: RawKeystream,
        line: usize,
        family: Family,
        grid: &ConstellationGrid,
    ) -> Result<KeystreamConfig> {
        let needs_key = matches!(family, Family::Attack | Family::Entropy);
        let key_bits = match self.opt(ks.key_bits) {
            Some(k) => {
                if k.value < 2 {
                    return Err(config(
                        k.line,
                        format!("key_bits = {} must be >= 2", k.value),
                    ));
                }
                let cap_bits = match family {
                    Family::Entropy => ENTROPY_MAX_KEY_BITS,
                    _ => SEARCH_MAX_KEY_BITS,
                };
                if k.value > i64::from(cap_bits) {
                    return Err(cap(
                        k.line,
                        format!(
                            "key_bits = {} exceeds the exhaustive cap {cap_bits} for `{family}`",
                            k.value
                        ),
                    ));
                }
                Some(At {
                    value: k.value as u32,
                    line: k.line,
                })
            }
            None if needs_key => return Err(config(line, "missing `key_bits` in [keystream]")),
            None => None,
        };
        let poly = match self.opt(ks.poly_bitmask_hex) {
            Some(p) => {
                let value = parse_hex("poly_bitmask_hex", &p.value)
                    .map_err(|e| config(p.line, e.to_string()))?;
                if let Some(k) = &key_bits {
                    KeySpace::with_poly(k.value, value)
                        .map_err(|e| config(p.line, e.to_string()))?;
                }
                Some(value)
            }
            None => None,
        };
        let key = match self.opt(ks.seed_hex) {
            Some(s) => {
                let value =
                    parse_hex("seed_hex", &s.value).map_err(|e| config(s.line, e.to_string()))?;
                if let Some(k) = &key_bits {
                    if value >> k.value != 0 {
                        return Err(config(
                            s.line,
                            format!("key {value:#x} does not fit in {} bits", k.value),
                        ));
                    }
                }
                Some(value)
            }
            None => None,
        };
        if let Some(b) = self.opt(ks.bits_per_symbol) {
            for &m in &grid.bases {
                let expect = i64::from(m.trailing_zeros()) + i64::from(grid.osk);
                if b.value != expect {
                    return Err(config(
                        b.line,
                        format!("bits_per_symbol = {} but M = {m} needs {expect}", b.value),
                    ));
                }
            }
        }
        Ok(KeystreamConfig {
            key_bits: key_bits.map(|k| k.value),
            poly,
            key,
        })
    }

    fn scenario(
        &self,
        sc: RawScenario,
        line: usize,
        family: Family,
        seed: Option<u64>,
        grid: &ConstellationGrid,
        ks: &KeystreamConfig,
    ) -> Result<ScenarioParams> {
        let count =
            |f: Field<i64>, name: &str, default: Option<i64>, min: i64| -> Result<At<i64>> {
                match self.opt(f) {
                    Some(v) if v.value < min => Err(config(
                        v.line,
                        format!("`{name}` must be >= {min}, got {}", v.value),
                    )),
                    Some(v) => Ok(v),
                    None => default
                        .map(|d| At { value: d, line })
                        .ok_or_else(|| config(line, format!("missing `{name}` in [scenario]"))),
                }
            };
        let unit = |f: Field<f64>, name: &str, default: f64| -> Result<f64> {
            match self.opt(f) {
                Some(v) if !(0.0..=1.0).contains(&v.value) => Err(config(
                    v.line,
                    format!("`{name}` must lie in [0, 1], got {}", v.value),
                )),
                Some(v) => Ok(v.value),
                None => Ok(default),
            }
        };

        let master_seed = match (seed, self.opt(sc.master_seed)) {
            (Some(s), _) => Some(s),
            (None, Some(v)) if v.value < 0 => {
                return Err(config(v.line, "master_seed must be >= 0"))
            }
            (None, Some(v)) => Some(v.value as u64),
            (None, None) => None,
        };

        let methods = match self.opt(sc.methods) {
            Some(list) => {
                if list.value.is_empty() {
                    return Err(config(list.line, "`methods` is empty"));
                }
                let mut out = Vec::new();
                for m in list.value {
                    let m = self.at(m);
                    let method = BoundMethod::ALL
                        .into_iter()
                        .find(|b| b.name() == m.value)
                        .ok_or_else(|| {
                            config(
                                m.line,
                                format!(
                                    "unknown method `{}` (helstrom_mixed_bit, srm_2M, updown)",
                                    m.value
                                ),
                            )
                        })?;
                    if method == BoundMethod::Updown && grid.osk {
                        return Err(config(
                            m.line,
                            "updown is defined for non-OSK constellations",
                        ));
                    }
                    out.push(method);
                }
                out
            }
            None if grid.osk => vec![BoundMethod::HelstromMixedBit, BoundMethod::Srm],
            None => BoundMethod::ALL.to_vec(),
        };

        let p0 = unit(sc.p0, "p0", 0.5)?;
        let data_bias = unit(sc.data_bias, "data_bias", 0.5)?;

        let uses_scenario = matches!(family, Family::Attack | Family::Entropy);
        let length = count(sc.n, "n", (!uses_scenario).then_some(1), 1)?;
        if family == Family::Entropy && length.value as usize > ENTROPY_MAX_LENGTH {
            return Err(cap(
                length.line,
                format!(
                    "n = {} exceeds the entropy cap {ENTROPY_MAX_LENGTH}",
                    length.value
                ),
            ));
        }
        let trials = count(
            sc.trials,
            "trials",
            (family != Family::Entropy).then_some(1),
            1,
        )?;
        let mi_trials = count(sc.mi_trials, "mi_trials", Some(0), 0)?;
        if family == Family::Attack && mi_trials.value > 0 {
            let bits = ks.key_bits.unwrap_or(0);
            if bits > ENTROPY_MAX_KEY_BITS || length.value as usize > ENTROPY_MAX_LENGTH {
                return Err(cap(
                    mi_trials.line,
                    format!(
                        "mutual information needs key_bits <= {ENTROPY_MAX_KEY_BITS} and n <= {ENTROPY_MAX_LENGTH}"
                    ),
                ));
            }
        }

        let error_positions = match self.opt(sc.error_positions) {
            Some(e) => {
                let mut out = Vec::new();
                for p in e.value {
                    if p < 0 || p >= length.value {
                        return Err(config(
                            e.line,
                            format!("error position {p} is outside 0..{}", length.value),
                        ));
                    }
                    out.push(p as usize);
                }
                out
            }
            None => Vec::new(),
        };

        let misalign = match self.opt(sc.misalign) {
            Some(m) => {
                let v = m.value.into_vec();
                if v.is_empty() {
                    return Err(config(m.line, "grid `misalign` is empty"));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(config(m.line, "misalign values must be finite"));
                }
                v
            }
            None => vec![0.0],
        };

        let dsr_f = self.opt(sc.dsr_f);
        let dsr_jitter = self.opt(sc.dsr_jitter);
        let dsr = match self.opt(sc.dsr) {
            None => Dsr::None,
            Some(d) => match d.value.as_str() {
                "none" => Dsr::None,
                "binary" => {
                    let f =
                        dsr_f.ok_or_else(|| config(d.line, "dsr = \"binary\" needs `dsr_f`"))?;
                    if !(0.0..=1.0).contains(&f.value) {
                        return Err(config(
                            f.line,
                            format!("`dsr_f` must lie in [0, 1], got {}", f.value),
                        ));
                    }
                    Dsr::Binary { f: f.value }
                }
                "jitter" => {
                    let j = dsr_jitter
                        .ok_or_else(|| config(d.line, "dsr = \"jitter\" needs `dsr_jitter`"))?;
                    if !(j.value >= 0.0 && j.value.is_finite()) {
                        return Err(config(
                            j.line,
                            format!("`dsr_jitter` must be finite and >= 0, got {}", j.value),
                        ));
                    }
                    Dsr::Jitter { delta: j.value }
                }
                other => {
                    return Err(config(
                        d.line,
                        format!("unknown dsr model `{other}` (none, binary, jitter)"),
                    ));
                }
            },
        };

        let otp_mode = sc.otp_mode.unwrap_or(false);
        if otp_mode && mi_trials.value > 0 {
            return Err(config(
                mi_trials.line,
                "mi_trials is not available with otp_mode",
            ));
        }
        let regime = match self.opt(sc.regime) {
            None => EntropyRegime::Classical,
            Some(r) => match r.value.as_str() {
                "classical" => EntropyRegime::Classical,
                "quantum" => EntropyRegime::Quantum,
                other => {
                    return Err(config(
                        r.line,
                        format!("unknown regime `{other}` (classical, quantum)"),
                    ))
                }
            },
        };
        if family == Family::Entropy {
            if otp_mode {
                return Err(config(line, "the entropy family does not take otp_mode"));
            }
            let noiseless = error_positions.is_empty()
                && misalign.iter().all(|&d| d == 0.0)
                && dsr == Dsr::None;
            if regime == EntropyRegime::Quantum && !noiseless {
                return Err(config(
                    line,
                    "regime = \"quantum\" cannot be combined with error_positions, misalign or dsr",
                ));
            }
            if misalign.len() != 1 {
                return Err(config(
                    line,
                    "the entropy family takes a single misalign value",
                ));
            }
        }

        let s_prime = match self.opt(sc.s_prime) {
            Some(g) => {
                let v = g.value.into_vec();
                if v.is_empty() {
                    return Err(config(g.line, "grid `s_prime` is empty"));
                }
                if v.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                    return Err(config(g.line, "s_prime values must be finite and >= 0"));
                }
                v
            }
            None => Vec::new(),
        };
        let energy_scale = match self.opt(sc.energy_scale) {
            Some(e) if !(e.value > 0.0 && e.value.is_finite()) => {
                return Err(config(e.line, "energy_scale must be finite and > 0"));
            }
            Some(e) => e.value,
            None => 0.5,
        };
        let mc_trials = count(sc.mc_trials, "mc_trials", Some(0), 0)?;
        let mc_energy = match self.opt(sc.mc_energy) {
            Some(e) if !(e.value >= 0.0 && e.value.is_finite()) => {
                return Err(config(e.line, "mc_energy must be finite and >= 0"));
            }
            Some(e) => e.value,
            None => 4.0,
        };

        let needs_seed = matches!(family, Family::Attack | Family::Entropy)
            || (family == Family::Keygen && mc_trials.value > 0);
        if needs_seed && master_seed.is_none() {
            return Err(config(
                line,
                format!("`master_seed` is required for `{family}` (or pass --seed)"),
            ));
        }

        Ok(ScenarioParams {
            master_seed,
            methods,
            p0,
            length: length.value as usize,
            trials: trials.value as u64,
            error_positions,
            misalign,
            dsr,
            otp_mode,
            data_bias,
            mi_trials: mi_trials.value as u64,
            regime,
            s_prime,
            energy_scale,
            mc_trials: mc_trials.value as u64,
            mc_energy,
        })
    }
}

impl RawScenario {
    fn empty() -> Self {
        RawScenario {
            family: None,
            master_seed: None,
            methods: None,
            p0: None,
            n: None,
            trials: None,
            error_positions: None,
            misalign: None,
            dsr: None,
            dsr_f: None,
            dsr_jitter: None,
            otp_mode: None,
            data_bias: None,
            mi_trials: None,
            regime: None,
            s_prime: None,
            energy_scale: None,
            mc_trials: None,
            mc_energy: None,
        }
    }
}

fn config(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn cap(line: usize, message: impl Into<String>) -> Error {
    Error::RegimeCap(format!("line {line}: {}", message.into()))
}
