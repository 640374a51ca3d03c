//! Scenario runner: config in, deterministic CSV/JSON out.
//!
//! Each family computes typed rows first (`run_*`), then [`execute`] writes
//! them together with a `manifest.json`. Given the same config, seed and
//! clock, every output file is byte-identical across runs and thread counts.

pub mod config;
pub mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    BoundMethod, ConstellationGrid, Family, KeystreamConfig, OutputConfig, ScenarioConfig,
    ScenarioParams, BOUNDS_MAX_BASES, BOUNDS_MAX_DIM,
};
pub use manifest::{Clock, ManifestRef, Modeling, RunManifest, MANIFEST_FILE};

use crate::attacks::{
    entropy_report, keygen_advantage, label_flip_rate, nishioka_attack, randomized_keygen,
    AttackRecord, AttackScenario, Dsr, EntropyRegime, EntropyReport, KeygenRow,
};
use crate::detection::{
    exponent_fit, helstrom_bits, homodyne_antipodal_error, homodyne_antipodal_mc, srm_mary_error,
    updown_bound, ExponentFit,
};
use crate::error::{Error, Result};
use crate::sampling::{derive_seed, stream_rng};

// ---- bounds ----

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "S")]
    pub s: f64,
    pub method: BoundMethod,
    pub p_error: f64,
    pub dim_used: usize,
    pub truncation_deficit: f64,
}

pub fn run_bounds(cfg: &ScenarioConfig) -> Result<Vec<BoundRow>> {
    let grid = &cfg.constellation;
    let points: Vec<(usize, f64, BoundMethod)> = grid
        .bases
        .iter()
        .flat_map(|&m| {
            grid.energies.iter().flat_map(move |&s| {
                cfg.scenario
                    .methods
                    .iter()
                    .map(move |&method| (m, s, method))
            })
        })
        .collect();
    points
        .into_par_iter()
        .map(|(m, s, method)| {
            let c = grid.constellation(m, s)?;
            let (p_error, dim_used, truncation_deficit) = match method {
                BoundMethod::HelstromMixedBit => {
                    let b = helstrom_bits(&c, cfg.scenario.p0)?;
                    (b.p_error, b.dim_used, b.truncation_deficit)
                }
                BoundMethod::Srm => {
                    let b = srm_mary_error(&c)?;
                    (b.p_error, b.states, 0.0)
                }
                BoundMethod::Updown => {
                    let b = updown_bound(&c)?;
                    (b.p_error, b.dim_used, b.truncation_deficit)
                }
            };
            Ok(BoundRow {
                m,
                s,
                method,
                p_error,
                dim_used,
                truncation_deficit,
            })
        })
        .collect()
}

// ---- attack ----

/// Statistics over the repeated trials at one misalignment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackAggregate {
    pub trials: u64,
    pub true_r_in_candidates_rate: f64,
    pub mean_true_seed_match: f64,
    pub mean_true_key_rank: f64,
    pub mean_candidate_count: f64,
    /// Fraction of trials where the one-time-pad identity held.
    pub otp_identity_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MisalignResult {
    pub misalign: f64,
    /// Geometric label flip rate implied by the misalignment and jitter.
    pub eve_flip_rate: f64,
    /// The first trial in full.
    pub record: AttackRecord,
    pub aggregate: AttackAggregate,
}

/// Uniform average over the misalignment grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MisalignAverage {
    pub eve_flip_rate: f64,
    pub true_r_in_candidates_rate: f64,
    pub mean_true_seed_match: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackOutput {
    pub manifest: ManifestRef,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "S")]
    pub s: f64,
    pub osk: bool,
    pub key_bits: u32,
    pub length: usize,
    pub dsr: Dsr,
    pub otp_mode: bool,
    pub data_bias: f64,
    pub analytic_notes: Vec<String>,
    pub results: Vec<MisalignResult>,
    pub misalign_average: Option<MisalignAverage>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedRow {
    pub misalign: f64,
    pub key: u64,
    pub distance: u64,
    pub match_fraction: f64,
    pub is_true_key: bool,
}

impl AttackOutput {
    /// One row per key and misalignment, from the first trial.
    pub fn seed_rows(&self) -> Vec<SeedRow> {
        let n = self.length as f64;
        self.results
            .iter()
            .flat_map(|res| {
                res.record
                    .per_seed_match_fraction
                    .iter()
                    .enumerate()
                    .map(move |(key, &f)| SeedRow {
                        misalign: res.misalign,
                        key: key as u64,
                        distance: ((1.0 - f) * n).round() as u64,
                        match_fraction: f,
                        is_true_key: key as u64 == res.record.true_key,
                    })
            })
            .collect()
    }
}

fn analytic_notes(key_bits: u32) -> Vec<String> {
    vec![
        format!("exhaustive search here covers 2^{key_bits} keys"),
        "at key_bits = 100 the key search costs 2^100 and the unstructured label-sequence search 2^(2^100); both are \
         stated analytically and never enumerated"
            .to_string(),
    ]
}

fn run_trials(
    scenario: &AttackScenario,
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<(AttackRecord, AttackAggregate)> {
    let c = cfg.constellation.single()?;
    let records: Vec<AttackRecord> = (0..cfg.scenario.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let mut rec = nishioka_attack(scenario, &c, cfg.keystream.key, &mut rng)?;
            if t > 0 {
                rec.per_seed_match_fraction = Vec::new();
            }
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    let n = records.len() as f64;
    let mean = |f: &dyn Fn(&AttackRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    let length = scenario.length as f64;
    let aggregate = AttackAggregate {
        trials: cfg.scenario.trials,
        true_r_in_candidates_rate: mean(&|r| f64::from(u8::from(r.true_r_in_candidates))),
        mean_true_seed_match: mean(&|r| 1.0 - r.true_seed_distance as f64 / length),
        mean_true_key_rank: mean(&|r| r.true_key_rank.unwrap_or(0) as f64),
        mean_candidate_count: mean(&|r| r.candidate_count as f64),
        otp_identity_rate: scenario
            .otp_mode
            .then(|| mean(&|r| f64::from(u8::from(r.otp.is_some_and(|o| o.identity_holds))))),
    };
    let first = records.into_iter().next().expect("trials >= 1");
    Ok((first, aggregate))
}

pub fn run_attack(cfg: &ScenarioConfig) -> Result<AttackOutput> {
    let master = cfg.master_seed()?;
    let c = cfg.constellation.single()?;
    let jitter = match cfg.scenario.dsr {
        Dsr::Jitter { delta } => delta,
        _ => 0.0,
    };
    let mut results = Vec::new();
    for (i, &delta) in cfg.scenario.misalign.iter().enumerate() {
        let scenario = cfg.attack_scenario(delta);
        scenario.validate()?;
        let (mut record, aggregate) =
            run_trials(&scenario, cfg, derive_seed(master, 2 * i as u64))?;
        if cfg.scenario.mi_trials > 0 {
            let report = entropy_report(
                &scenario,
                &c,
                EntropyRegime::Classical,
                cfg.scenario.mi_trials,
                derive_seed(master, 2 * i as u64 + 1),
            )?;
            record.mutual_info_estimate = Some(report.ciphertext_only.mutual_info_per_symbol);
        }
        results.push(MisalignResult {
            misalign: delta,
            eve_flip_rate: label_flip_rate(&c, delta, jitter),
            record,
            aggregate,
        });
    }
    let k = results.len() as f64;
    let misalign_average = (results.len() > 1).then(|| MisalignAverage {
        eve_flip_rate: results.iter().map(|r| r.eve_flip_rate).sum::<f64>() / k,
        true_r_in_candidates_rate: results
            .iter()
            .map(|r| r.aggregate.true_r_in_candidates_rate)
            .sum::<f64>()
            / k,
        mean_true_seed_match: results
            .iter()
            .map(|r| r.aggregate.mean_true_seed_match)
            .sum::<f64>()
            / k,
    });
    let key_bits = cfg.keystream.key_bits.unwrap_or(0);
    Ok(AttackOutput {
        manifest: ManifestRef::new(cfg),
        m: c.bases(),
        s: c.energy(),
        osk: c.osk(),
        key_bits,
        length: cfg.scenario.length,
        dsr: cfg.scenario.dsr,
        otp_mode: cfg.scenario.otp_mode,
        data_bias: cfg.scenario.data_bias,
        analytic_notes: analytic_notes(key_bits),
        results,
        misalign_average,
    })
}

// ---- entropy ----

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyOutput {
    pub manifest: ManifestRef,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "S")]
    pub s: f64,
    pub scenario: AttackScenario,
    pub report: EntropyReport,
    /// `H(X|Y) > H(K)`: the data keeps more uncertainty than the key holds.
    pub data_entropy_exceeds_key: bool,
    /// `H(K|Y,X)` above the noiseless collision floor.
    pub key_entropy_above_floor: bool,
}

pub fn run_entropy(cfg: &ScenarioConfig) -> Result<EntropyOutput> {
    let c = cfg.constellation.single()?;
    let scenario = cfg.attack_scenario(cfg.scenario.misalign[0]);
    let report = entropy_report(
        &scenario,
        &c,
        cfg.scenario.regime,
        cfg.scenario.trials,
        cfg.master_seed()?,
    )?;
    Ok(EntropyOutput {
        manifest: ManifestRef::new(cfg),
        m: c.bases(),
        s: c.energy(),
        data_entropy_exceeds_key: report.ciphertext_only.h_x_given_y > report.ciphertext_only.h_k,
        key_entropy_above_floor: report.known_plaintext.h_k_given_y_x
            > report.known_plaintext.residual_floor,
        scenario,
        report,
    })
}

// ---- keygen ----

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeygenCsvRow {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "Pe_B")]
    pub pe_b: f64,
    #[serde(rename = "Pe_E")]
    pub pe_e: f64,
    pub advantage: f64,
    #[serde(rename = "slope_fit_B")]
    pub slope_fit_b: Option<f64>,
    #[serde(rename = "slope_fit_E")]
    pub slope_fit_e: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomizedCsvRow {
    #[serde(rename = "S_prime")]
    pub s_prime: f64,
    #[serde(rename = "S_eff")]
    pub s_eff: f64,
    #[serde(rename = "Pe_B")]
    pub pe_b: f64,
    #[serde(rename = "Pe_E")]
    pub pe_e: f64,
    pub advantage: f64,
    #[serde(rename = "slope_fit_B")]
    pub slope_fit_b: Option<f64>,
    #[serde(rename = "slope_fit_E")]
    pub slope_fit_e: Option<f64>,
    pub slope_ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepFits {
    pub bob: Option<ExponentFit>,
    pub eve: Option<ExponentFit>,
    /// `bob.slope / eve.slope`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McCheck {
    pub energy: f64,
    pub trials: u64,
    pub errors: u64,
    pub rate: f64,
    pub analytic: f64,
    pub sigma: f64,
    pub within_3_sigma: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeygenSummary {
    pub manifest: ManifestRef,
    pub fits: SweepFits,
    pub randomized_energy_scale: Option<f64>,
    pub randomized_fits: Option<SweepFits>,
    pub homodyne_mc: Option<McCheck>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeygenOutput {
    pub rows: Vec<KeygenCsvRow>,
    pub randomized: Vec<RandomizedCsvRow>,
    pub summary: KeygenSummary,
}

/// Fits `ln p` against the grid over the points where `p` lies in `(0, 0.5)`;
/// `None` below four such points.
fn fit_sweep(rows: &[KeygenRow]) -> SweepFits {
    let fit = |pick: fn(&KeygenRow) -> f64| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.energy, pick(r)))
            .filter(|&(_, p)| p > 0.0 && p < 0.5)
            .collect();
        (pts.len() >= 4).then(|| exponent_fit(&pts).ok()).flatten()
    };
    let bob = fit(|r| r.pe_bob);
    let eve = fit(|r| r.pe_eve);
    let ratio = bob.zip(eve).map(|(b, e)| b.slope / e.slope);
    SweepFits { bob, eve, ratio }
}

pub fn run_keygen(cfg: &ScenarioConfig) -> Result<KeygenOutput> {
    let sc = &cfg.scenario;
    let rows = keygen_advantage(&cfg.constellation.energies)?;
    let fits = fit_sweep(&rows);
    let csv_rows = rows
        .iter()
        .map(|r| KeygenCsvRow {
            s: r.energy,
            pe_b: r.pe_bob,
            pe_e: r.pe_eve,
            advantage: r.advantage,
            slope_fit_b: fits.bob.map(|f| f.slope),
            slope_fit_e: fits.eve.map(|f| f.slope),
        })
        .collect();

    let (randomized, randomized_fits) = if sc.s_prime.is_empty() {
        (Vec::new(), None)
    } else {
        let rows = randomized_keygen(&sc.s_prime, sc.energy_scale)?;
        let fits = fit_sweep(&rows);
        let out = rows
            .iter()
            .map(|r| RandomizedCsvRow {
                s_prime: r.energy,
                s_eff: sc.energy_scale * r.energy,
                pe_b: r.pe_bob,
                pe_e: r.pe_eve,
                advantage: r.advantage,
                slope_fit_b: fits.bob.map(|f| f.slope),
                slope_fit_e: fits.eve.map(|f| f.slope),
                slope_ratio: fits.ratio,
            })
            .collect();
        (out, Some(fits))
    };

    let homodyne_mc = if sc.mc_trials > 0 {
        let est = homodyne_antipodal_mc(sc.mc_energy, sc.mc_trials, cfg.master_seed()?);
        let analytic = homodyne_antipodal_error(sc.mc_energy);
        Some(McCheck {
            energy: sc.mc_energy,
            trials: est.trials,
            errors: est.errors,
            rate: est.rate(),
            analytic,
            sigma: est.binomial_sigma(analytic),
            within_3_sigma: est.agrees_with(analytic, 3.0),
        })
    } else {
        None
    };

    Ok(KeygenOutput {
        rows: csv_rows,
        randomized,
        summary: KeygenSummary {
            manifest: ManifestRef::new(cfg),
            fits,
            randomized_energy_scale: (!sc.s_prime.is_empty()).then_some(sc.energy_scale),
            randomized_fits,
            homodyne_mc,
        },
    })
}

// ---- writing ----

fn csv_bytes<T: Serialize>(manifest: &ManifestRef, rows: &[T]) -> Result<Vec<u8>> {
    let mut buf = manifest.csv_comment().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Files written by [`execute`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub files: Vec<PathBuf>,
}

/// Runs `cfg` and writes its outputs plus `manifest.json` into `out_dir`.
pub fn execute(cfg: &ScenarioConfig, out_dir: &Path, clock: Clock) -> Result<RunReport> {
    let mref = ManifestRef::new(cfg);
    let prefix = &cfg.output.prefix;
    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    let mut push = |name: &str, bytes: Vec<u8>| outputs.push((format!("{prefix}{name}"), bytes));
    match cfg.family {
        Family::Bounds => push("bounds.csv", csv_bytes(&mref, &run_bounds(cfg)?)?),
        Family::Attack => {
            let out = run_attack(cfg)?;
            push("attack.json", json_bytes(&out)?);
            push("attack_seeds.csv", csv_bytes(&mref, &out.seed_rows())?);
        }
        Family::Entropy => push("entropy.json", json_bytes(&run_entropy(cfg)?)?),
        Family::Keygen => {
            let out = run_keygen(cfg)?;
            push("keygen.csv", csv_bytes(&mref, &out.rows)?);
            if !out.randomized.is_empty() {
                push("keygen_randomized.csv", csv_bytes(&mref, &out.randomized)?);
            }
            push("keygen.json", json_bytes(&out.summary)?);
        }
    }
    let manifest = RunManifest::new(cfg, clock, outputs.iter().map(|(n, _)| n.clone()).collect());
    outputs.push((MANIFEST_FILE.to_string(), json_bytes(&manifest)?));

    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    for (name, bytes) in outputs {
        let path = out_dir.join(name);
        fs::File::create(&path)?.write_all(&bytes)?;
        files.push(path);
    }
    Ok(RunReport { manifest, files })
}

/// Reads a config file and runs it. `out_dir` overrides `[output] dir`.
pub fn run_file(
    family: Family,
    config_path: &Path,
    out_dir: Option<&Path>,
    seed: Option<u64>,
    clock: Clock,
) -> Result<RunReport> {
    let text = fs::read_to_string(config_path)?;
    let cfg = ScenarioConfig::parse(&text, family, seed)?;
    let dir = out_dir.map_or_else(|| cfg.output.dir.clone(), Path::to_path_buf);
    execute(&cfg, &dir, clock)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, family: Family) -> ScenarioConfig {
        ScenarioConfig::parse(text, family, None).unwrap()
    }

    #[test]
    fn bounds_rows_follow_grid_order() {
        let cfg = parse(
            "[constellation]\nM = [4, 8]\nS = [1.0, 2.0]\n",
            Family::Bounds,
        );
        let rows = run_bounds(&cfg).unwrap();
        assert_eq!(rows.len(), 12);
        assert_eq!(
            (rows[0].m, rows[0].s, rows[0].method),
            (4, 1.0, BoundMethod::HelstromMixedBit)
        );
        assert_eq!(
            (rows[11].m, rows[11].s, rows[11].method),
            (8, 2.0, BoundMethod::Updown)
        );
        assert!(rows
            .iter()
            .all(|r| (0.0..=0.5).contains(&r.p_error) || r.method == BoundMethod::Srm));
    }

    #[test]
    fn csv_has_manifest_line_and_header() {
        let cfg = parse(
            "[constellation]\nM = 4\nS = 1.0\n[scenario]\nmethods = [\"srm_2M\"]\n",
            Family::Bounds,
        );
        let bytes = csv_bytes(&ManifestRef::new(&cfg), &run_bounds(&cfg).unwrap()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# manifest=manifest.json config_sha256="));
        assert_eq!(lines[1], "M,S,method,p_error,dim_used,truncation_deficit");
        assert!(lines[2].starts_with("4,1.0,srm_2M,"));
    }

    #[test]
    fn attack_noiseless_recovers_truth() {
        let cfg = ScenarioConfig::parse(
            "[constellation]\nM = 16\nS = 4.0\n[keystream]\nkey_bits = 8\n[scenario]\nn = 48\ntrials = 4\nmisalign = [0.0, 0.05]\n",
            Family::Attack,
            Some(11),
        )
        .unwrap();
        let out = run_attack(&cfg).unwrap();
        assert_eq!(out.results.len(), 2);
        assert_eq!(out.results[0].aggregate.true_r_in_candidates_rate, 1.0);
        assert_eq!(out.results[0].eve_flip_rate, 0.0);
        assert!(out.results[1].eve_flip_rate > 0.0);
        assert!(out.misalign_average.is_some());
        let rows = out.seed_rows();
        assert_eq!(rows.len(), 2 * 256);
        assert_eq!(rows.iter().filter(|r| r.is_true_key).count(), 2);
    }

    #[test]
    fn keygen_fits_need_four_points() {
        let cfg = parse("[constellation]\nS = [1.0, 2.0, 3.0]\n", Family::Keygen);
        let out = run_keygen(&cfg).unwrap();
        assert!(out.summary.fits.bob.is_none());
        let cfg = parse(
            "[constellation]\nS = [0.0, 1.0, 2.0, 3.0, 4.0]\n[scenario]\ns_prime = [4, 6, 8, 10, 12]\n",
            Family::Keygen,
        );
        let out = run_keygen(&cfg).unwrap();
        assert!(out.summary.fits.bob.is_some() && out.summary.fits.eve.is_some());
        assert_eq!(out.rows[0].pe_b, 0.5);
        let ratio = out.randomized[0].slope_ratio.unwrap();
        assert!((1.6..=2.4).contains(&ratio), "{ratio}");
    }

    #[test]
    fn execute_is_byte_deterministic() {
        let text = "[constellation]\nM = 16\nS = 4.0\n[keystream]\nkey_bits = 8\n[scenario]\nn = 24\ntrials = 3\nmi_trials = 50\nmaster_seed = 5\n";
        let cfg = parse(text, Family::Attack);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = execute(&cfg, a.path(), Clock::Fixed(0)).unwrap();
        execute(&cfg, b.path(), Clock::Fixed(0)).unwrap();
        assert_eq!(ra.files.len(), 3);
        for f in &ra.files {
            let name = f.file_name().unwrap();
            assert_eq!(
                fs::read(f).unwrap(),
                fs::read(b.path().join(name)).unwrap(),
                "{name:?}"
            );
        }
    }
}
