//! Batch front end: JSON run configs, validation, SNR sweeps and CSV output.
//!
//! A config names a scenario (a preset, an explicit power matrix, an
//! exponential profile or a random drop), the SNR grid and the engines to run:
//!
//! ```json
//! {
//!   "scenario": { "kind": "preset", "name": "S3" },
//!   "snr_db": [0, 5, 10, 15, 20],
//!   "engines": ["exact", "approx", "mc"],
//!   "mc_trials": 200000,
//!   "seed": 1
//! }
//! ```

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::capacity_approx::approx_capacity;
use crate::capacity_bounds::{high_snr_approx, jensen_bound, low_snr_approx};
use crate::capacity_exact::{exact_capacity_detailed, ExactOptions};
use crate::channel::{
    apply_correlation, exponential_profile, random_drop, sigma2_for_snr, CorrelationSpec, DropGeometry,
    PowerMatrix, TableScenario,
};
use crate::combinatorics::RealMatrix;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::montecarlo::mc_capacity;

pub const CSV_HEADER: &str = "rho_db,exact_bits,approx_bits,jensen_bits,lowsnr_bits,highsnr_bits,mc_bits,mc_stderr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Exact,
    Approx,
    Bound,
    Lowsnr,
    Highsnr,
    Mc,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::Approx => "approx",
            Engine::Bound => "bound",
            Engine::Lowsnr => "lowsnr",
            Engine::Highsnr => "highsnr",
            Engine::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioConfig {
    /// One of the eight two-user scenarios S1..S8.
    Preset { name: String },
    /// Row-major powers, one inner list per receive antenna.
    Explicit { powers: Vec<Vec<f64>> },
    Exponential { alphas: Vec<f64>, traces: Vec<f64>, n_r: usize },
    RandomDrop {
        geometry: DropGeometry,
        #[serde(default)]
        seed: u64,
    },
}

/// A matrix entry: a real number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    #[serde(default)]
    pub receive: Vec<Vec<Vec<Entry>>>,
    #[serde(default)]
    pub transmit: Vec<Vec<Vec<Entry>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub snr_db: Vec<f64>,
    pub engines: Vec<Engine>,
    #[serde(default = "default_trials")]
    pub mc_trials: i64,
    #[serde(default)]
    pub seed: u64,
    /// Default output path; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub correlation: Option<CorrelationConfig>,
}

fn default_trials() -> i64 {
    200_000
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    /// Ready-made config for a preset over 0–20 dB.
    pub fn preset(id: TableScenario) -> Self {
        Self {
            scenario: ScenarioConfig::Preset { name: id.name().to_string() },
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            engines: vec![Engine::Exact, Engine::Approx, Engine::Mc],
            mc_trials: default_trials(),
            seed: 1,
            output: None,
            correlation: None,
        }
    }
}

fn matrix_from_entries(rows: &[Vec<Entry>], path: &str) -> std::result::Result<ComplexMatrix, String> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(format!("{path}: block must be square"));
    }
    let data = rows
        .iter()
        .flatten()
        .map(|e| match *e {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        })
        .collect();
    ComplexMatrix::from_vec(n, n, data).map_err(|e| format!("{path}: {e}"))
}

fn correlation_spec(c: &CorrelationConfig) -> std::result::Result<CorrelationSpec, Vec<String>> {
    let mut errs = Vec::new();
    let mut build = |blocks: &[Vec<Vec<Entry>>], side: &str| -> Vec<ComplexMatrix> {
        blocks
            .iter()
            .enumerate()
            .filter_map(|(b, rows)| {
                matrix_from_entries(rows, &format!("correlation.{side}[{b}]")).map_err(|e| errs.push(e)).ok()
            })
            .collect()
    };
    let receive = build(&c.receive, "receive");
    let transmit = build(&c.transmit, "transmit");
    if errs.is_empty() {
        Ok(CorrelationSpec { receive, transmit })
    } else {
        Err(errs)
    }
}

fn scenario_errors(s: &ScenarioConfig) -> Vec<String> {
    let mut e = Vec::new();
    match s {
        ScenarioConfig::Preset { name } => {
            if let Err(err) = TableScenario::parse(name) {
                e.push(format!("scenario.name: {err}"));
            }
        }
        ScenarioConfig::Explicit { powers } => {
            if powers.is_empty() || powers[0].is_empty() {
                e.push("scenario.powers: must be a non-empty matrix".into());
            } else if powers.iter().any(|r| r.len() != powers[0].len()) {
                e.push("scenario.powers: rows differ in length".into());
            }
            for (i, row) in powers.iter().enumerate() {
                for (k, &x) in row.iter().enumerate() {
                    if !(x >= 0.0) || !x.is_finite() {
                        e.push(format!("scenario.powers[{i}][{k}]: must be finite and >= 0, got {x}"));
                    }
                }
            }
        }
        ScenarioConfig::Exponential { alphas, traces, n_r } => {
            if alphas.is_empty() {
                e.push("scenario.alphas: need at least one user".into());
            }
            if alphas.len() != traces.len() {
                e.push(format!(
                    "scenario.traces: {} traces for {} alphas",
                    traces.len(),
                    alphas.len()
                ));
            }
            for (k, &a) in alphas.iter().enumerate() {
                if !(a > 0.0) || !a.is_finite() {
                    e.push(format!("scenario.alphas[{k}]: must be > 0, got {a}"));
                }
            }
            for (k, &t) in traces.iter().enumerate() {
                if !(t > 0.0) || !t.is_finite() {
                    e.push(format!("scenario.traces[{k}]: must be > 0, got {t}"));
                }
            }
            if *n_r == 0 {
                e.push("scenario.n_r: must be >= 1".into());
            }
        }
        ScenarioConfig::RandomDrop { geometry, .. } => {
            e.extend(geometry.validate().into_iter().map(|m| format!("scenario.geometry: {m}")));
        }
    }
    e
}

fn build_scenario(s: &ScenarioConfig) -> Result<PowerMatrix> {
    match s {
        ScenarioConfig::Preset { name } => Ok(TableScenario::parse(name)?.power_matrix()),
        ScenarioConfig::Explicit { powers } => {
            let n_t = powers.first().map_or(0, Vec::len);
            let flat: Vec<f64> = powers.iter().flatten().copied().collect();
            PowerMatrix::from_matrix(RealMatrix::from_vec(powers.len(), n_t, flat)?)
        }
        ScenarioConfig::Exponential { alphas, traces, n_r } => exponential_profile(alphas, traces, *n_r),
        ScenarioConfig::RandomDrop { geometry, seed } => random_drop(geometry, *seed),
    }
}

/// Power matrix described by the config, with correlation applied.
pub fn power_matrix(cfg: &RunConfig) -> Result<PowerMatrix> {
    let p = build_scenario(&cfg.scenario)?;
    match &cfg.correlation {
        None => Ok(p),
        Some(c) => {
            let spec = correlation_spec(c).map_err(|e| Error::Config(e.join("; ")))?;
            apply_correlation(&p, &spec)
        }
    }
}

/// Every problem with the config; empty means it can be run.
pub fn validate(cfg: &RunConfig) -> Vec<String> {
    let mut e = scenario_errors(&cfg.scenario);
    if cfg.engines.is_empty() {
        e.push("engines: at least one engine is required".into());
    }
    let mut seen = cfg.engines.clone();
    seen.sort();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        e.push("engines: duplicate entries".into());
    }
    if cfg.snr_db.is_empty() {
        e.push("snr_db: at least one SNR point is required".into());
    }
    for (j, &r) in cfg.snr_db.iter().enumerate() {
        if !r.is_finite() {
            e.push(format!("snr_db[{j}]: must be finite"));
        }
    }
    if cfg.engines.contains(&Engine::Mc) && cfg.mc_trials < 2 {
        e.push(format!("mc_trials: must be >= 2, got {}", cfg.mc_trials));
    }
    if let Some(c) = &cfg.correlation {
        if let Err(errs) = correlation_spec(c) {
            e.extend(errs);
        }
    }
    if !e.is_empty() {
        return e;
    }
    let p = match power_matrix(cfg) {
        Ok(p) => p,
        Err(err) => {
            e.push(format!("scenario: {err}"));
            return e;
        }
    };
    let (n_r, n_t) = (p.n_r(), p.n_t());
    for eng in &cfg.engines {
        match eng {
            Engine::Exact if n_t != 2 => e.push(format!("engines: exact engine requires N=2, got N={n_t}")),
            Engine::Exact if n_r < 3 => e.push(format!("engines: exact engine requires n_R>=3, got n_R={n_r}")),
            Engine::Approx if n_r < n_t => {
                e.push(format!("engines: approx engine requires n_R >= N, got n_R={n_r}, N={n_t}"))
            }
            Engine::Bound | Engine::Highsnr if n_r.min(n_t) > 8 => {
                e.push(format!("engines: bound engines support min(n_R, N) <= 8, got {}", n_r.min(n_t)))
            }
            _ => {}
        }
    }
    e
}

/// One SNR point of a sweep (bits/s/Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub rho_db: f64,
    pub exact_bits: Option<f64>,
    pub approx_bits: Option<f64>,
    pub jensen_bits: Option<f64>,
    pub lowsnr_bits: Option<f64>,
    pub highsnr_bits: Option<f64>,
    pub mc_bits: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub jittered: bool,
    /// seconds per engine, in config order
    pub wall_time: Vec<(Engine, f64)>,
    pub errors: Vec<String>,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

fn evaluate_point(p: &PowerMatrix, rho_db: f64, cfg: &RunConfig) -> CapacityResult {
    let s2 = sigma2_for_snr(p, rho_db);
    let mut r = CapacityResult {
        rho_db,
        exact_bits: None,
        approx_bits: None,
        jensen_bits: None,
        lowsnr_bits: None,
        highsnr_bits: None,
        mc_bits: None,
        mc_stderr: None,
        jittered: false,
        wall_time: Vec::new(),
        errors: Vec::new(),
    };
    // failed engines are reported as NaN so the row keeps its shape
    let keep = |eng: Engine, v: Result<f64>, errors: &mut Vec<String>| match v {
        Ok(x) => Some(x),
        Err(e) => {
            errors.push(format!("{} at {rho_db} dB: {e}", eng.name()));
            Some(f64::NAN)
        }
    };
    for &eng in &cfg.engines {
        let (_, secs) = timed(|| match eng {
            Engine::Exact => {
                let v = exact_capacity_detailed(p, s2, &ExactOptions::default()).map(|x| {
                    r.jittered = x.jittered;
                    x.bits
                });
                r.exact_bits = keep(eng, v, &mut r.errors);
            }
            Engine::Approx => r.approx_bits = keep(eng, approx_capacity(p, s2), &mut r.errors),
            Engine::Bound => r.jensen_bits = keep(eng, jensen_bound(p, 1.0 / s2).map(|b| b.bound_bits), &mut r.errors),
            Engine::Lowsnr => r.lowsnr_bits = keep(eng, low_snr_approx(p, 1.0 / s2), &mut r.errors),
            Engine::Highsnr => r.highsnr_bits = keep(eng, high_snr_approx(p, 1.0 / s2), &mut r.errors),
            Engine::Mc => match mc_capacity(p, s2, cfg.mc_trials as u64, cfg.seed) {
                Ok(m) => {
                    r.mc_bits = Some(m.mean);
                    r.mc_stderr = Some(m.stderr);
                }
                Err(e) => {
                    r.mc_bits = keep(eng, Err(e), &mut r.errors);
                    r.mc_stderr = Some(f64::NAN);
                }
            },
        });
        r.wall_time.push((eng, secs));
    }
    r
}

/// `x` with 9 significant digits, in plain notation where that is readable.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if !(-5..15).contains(&exp) {
        return sci;
    }
    let s = format!("{:.*}", (8 - exp).max(0) as usize, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn field(v: Option<f64>) -> String {
    v.map(format_sig9).unwrap_or_default()
}

pub fn to_csv(rows: &[CapacityResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            format_sig9(r.rho_db),
            field(r.exact_bits),
            field(r.approx_bits),
            field(r.jensen_bits),
            field(r.lowsnr_bits),
            field(r.highsnr_bits),
            field(r.mc_bits),
            field(r.mc_stderr),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Strict reader for the CSV written by [`to_csv`]: exact header, eight
/// fields per row, each empty or a float.
pub fn parse_csv(text: &str) -> Result<Vec<[Option<f64>; 8]>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("CSV header mismatch".into()));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 8 {
            return Err(Error::Config(format!("row {}: expected 8 fields, got {}", n + 1, parts.len())));
        }
        let mut row = [None; 8];
        for (slot, p) in row.iter_mut().zip(&parts) {
            if !p.is_empty() {
                *slot = Some(p.parse::<f64>().map_err(|e| Error::Config(format!("row {}: {e}", n + 1)))?);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    pub macrocap_version: String,
    pub threads: usize,
    pub n_r: usize,
    pub n_t: usize,
    pub power_matrix: Vec<Vec<f64>>,
    pub rows: Vec<CapacityResult>,
    pub unix_time: u64,
}

pub struct RunOutput {
    pub csv: String,
    pub manifest: Manifest,
    pub rows: Vec<CapacityResult>,
}

impl RunOutput {
    pub fn has_engine_errors(&self) -> bool {
        self.rows.iter().any(|r| !r.errors.is_empty())
    }
}

/// Worker count: `MACROCAP_THREADS` if set to a positive integer, otherwise
/// rayon's default.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("MACROCAP_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs a validated config. `config_bytes` is hashed into the manifest.
pub fn run(cfg: &RunConfig, config_bytes: &[u8], threads: Option<usize>) -> Result<RunOutput> {
    let errs = validate(cfg);
    if !errs.is_empty() {
        return Err(Error::Config(errs.join("; ")));
    }
    let p = power_matrix(cfg)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows: Vec<CapacityResult> =
        pool.install(|| cfg.snr_db.par_iter().map(|&rho| evaluate_point(&p, rho, cfg)).collect());
    let manifest = Manifest {
        config_sha256: Sha256::digest(config_bytes).iter().map(|b| format!("{b:02x}")).collect(),
        seed: cfg.seed,
        macrocap_version: env!("CARGO_PKG_VERSION").to_string(),
        threads: pool.current_num_threads(),
        n_r: p.n_r(),
        n_t: p.n_t(),
        power_matrix: (0..p.n_r()).map(|i| (0..p.n_t()).map(|k| p.get(i, k)).collect()).collect(),
        rows: rows.clone(),
        unix_time: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    Ok(RunOutput { csv: to_csv(&rows), manifest, rows })
}

/// Manifest path next to the CSV: `out.csv` → `out.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn write_outputs(out: &RunOutput, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, &out.csv)?;
    let json = serde_json::to_string_pretty(&out.manifest).map_err(std::io::Error::other)?;
    std::fs::write(manifest_path(path), json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(8.414898816_3), "8.41489882");
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(-10.0), "-10");
        assert_eq!(format_sig9(9.9999999999), "10");
        assert_eq!(format_sig9(0.00012345678912), "0.000123456789");
        assert_eq!(format_sig9(1.5e-9), "1.50000000e-9");
        assert_eq!(format_sig9(f64::NAN), "nan");
    }

    #[test]
    fn presets_validate() {
        for id in TableScenario::ALL {
            assert!(validate(&RunConfig::preset(id)).is_empty());
        }
    }

    #[test]
    fn exact_needs_two_users() {
        let mut cfg = RunConfig::preset(TableScenario::S1);
        cfg.scenario = ScenarioConfig::Exponential { alphas: vec![0.1, 1.0, 10.0], traces: vec![1.0; 3], n_r: 3 };
        let e = validate(&cfg);
        assert!(e.iter().any(|m| m.contains("exact engine requires N=2")), "{e:?}");
    }

    #[test]
    fn negative_trials_rejected() {
        let mut cfg = RunConfig::preset(TableScenario::S1);
        cfg.mc_trials = -5;
        assert!(validate(&cfg).iter().any(|m| m.starts_with("mc_trials")));
    }
}
