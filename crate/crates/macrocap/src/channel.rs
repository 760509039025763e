//! Power matrices and the scenarios that produce them.

use serde::{Deserialize, Serialize};

use crate::combinatorics::RealMatrix;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::montecarlo::StreamRng;

/// `n_R x N` matrix of average link powers `P_ik = E|H_ik|^2` (linear scale).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMatrix {
    m: RealMatrix,
}

impl PowerMatrix {
    pub fn new(n_r: usize, n_t: usize, entries: Vec<f64>) -> Result<Self> {
        let m = RealMatrix::from_vec(n_r, n_t, entries)?;
        Self::from_matrix(m)
    }

    pub fn from_matrix(m: RealMatrix) -> Result<Self> {
        if m.rows() == 0 || m.cols() == 0 {
            return Err(Error::Shape("power matrix must be non-empty".into()));
        }
        if m.as_slice().iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::Domain("powers must be finite and nonnegative".into()));
        }
        if m.as_slice().iter().all(|&x| x == 0.0) {
            return Err(Error::Domain("at least one power must be positive".into()));
        }
        Ok(Self { m })
    }

    /// Builds from columns (one per transmit antenna).
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let n_t = cols.len();
        let n_r = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != n_r) {
            return Err(Error::Shape("columns have different lengths".into()));
        }
        Self::from_matrix(RealMatrix::from_fn(n_r, n_t, |i, k| cols[k][i]))
    }

    /// Builds from rows (one per receive antenna).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_r = rows.len();
        let n_t = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_t) {
            return Err(Error::Shape("rows have different lengths".into()));
        }
        Self::from_matrix(RealMatrix::from_fn(n_r, n_t, |i, k| rows[i][k]))
    }

    pub fn n_r(&self) -> usize {
        self.m.rows()
    }

    pub fn n_t(&self) -> usize {
        self.m.cols()
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.m[(i, k)]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        self.m.as_slice()
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.m
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.m.column(k)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_r()).map(|i| (0..self.n_t()).map(|k| self.get(i, k)).collect()).collect()
    }

    /// `P_T = sum_ik P_ik`.
    pub fn total_power(&self) -> f64 {
        self.m.as_slice().iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_matrix(RealMatrix::from_fn(self.n_r(), self.n_t(), |i, k| c * self.get(i, k)))
    }

    /// Columns reordered as `order[0], order[1], ...`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n_t()];
        if order.len() != self.n_t() || order.iter().any(|&k| k >= self.n_t() || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::Domain(format!("{order:?} is not a permutation of the columns")));
        }
        Ok(Self { m: self.m.select_cols(order) })
    }

    /// Zero entries raised to `rel * max entry`.
    pub fn floored(&self, rel: f64) -> Self {
        let floor = rel * self.entries().iter().fold(0.0f64, |a, &b| a.max(b));
        let m = RealMatrix::from_fn(self.n_r(), self.n_t(), |i, k| self.get(i, k).max(floor));
        Self { m }
    }
}

/// Noise power for average SNR `rho = P_T / sigma2` given in dB.
pub fn sigma2_for_snr(p: &PowerMatrix, rho_db: f64) -> f64 {
    p.total_power() / db_to_linear(rho_db)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `P_ik = K_k alpha_k^{i}` (`i = 0..n_R-1`) with `K_k` set so column `k`
/// sums to `traces[k]`.
pub fn exponential_profile(alphas: &[f64], traces: &[f64], n_r: usize) -> Result<PowerMatrix> {
    if alphas.len() != traces.len() || alphas.is_empty() {
        return Err(Error::Shape("need one alpha and one trace per user".into()));
    }
    if n_r == 0 {
        return Err(Error::Shape("n_R must be positive".into()));
    }
    let mut cols = Vec::with_capacity(alphas.len());
    for (&a, &tr) in alphas.iter().zip(traces) {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("alpha must be positive, got {a}")));
        }
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::Domain(format!("trace must be positive, got {tr}")));
        }
        let pows: Vec<f64> = (0..n_r).map(|i| a.powi(i as i32)).collect();
        let k = tr / pows.iter().sum::<f64>();
        cols.push(pows.iter().map(|p| k * p).collect());
    }
    PowerMatrix::from_columns(&cols)
}

/// The eight two-user scenarios of the reference study (`n_R = 3`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableScenario {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8,
}

impl TableScenario {
    pub const ALL: [TableScenario; 8] = [
        TableScenario::S1,
        TableScenario::S2,
        TableScenario::S3,
        TableScenario::S4,
        TableScenario::S5,
        TableScenario::S6,
        TableScenario::S7,
        TableScenario::S8,
    ];

    /// `(alpha_1, alpha_2, varsigma)` with `varsigma = Tr(P_1)/Tr(P_2)`.
    pub fn parameters(self) -> (f64, f64, f64) {
        use TableScenario::*;
        match self {
            S1 => (0.1, 0.1, 1.0),
            S2 => (0.1, 1.0, 1.0),
            S3 => (0.1, 10.0, 1.0),
            S4 => (1.0, 1.0, 1.0),
            S5 => (0.1, 0.1, 10.0),
            S6 => (0.1, 1.0, 10.0),
            S7 => (0.1, 10.0, 10.0),
            S8 => (1.0, 0.1, 10.0),
        }
    }

    pub fn name(self) -> &'static str {
        use TableScenario::*;
        match self {
            S1 => "S1",
            S2 => "S2",
            S3 => "S3",
            S4 => "S4",
            S5 => "S5",
            S6 => "S6",
            S7 => "S7",
            S8 => "S8",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Lookup(format!("unknown scenario '{s}' (expected S1..S8)")))
    }

    /// Power matrix with `Tr(P_1) + Tr(P_2) = 1`.
    pub fn power_matrix(self) -> PowerMatrix {
        let (a1, a2, vs) = self.parameters();
        let t1 = vs / (1.0 + vs);
        let t2 = 1.0 / (1.0 + vs);
        exponential_profile(&[a1, a2], &[t1, t2], 3).expect("table parameters are valid")
    }
}

/// Table scenario at average SNR `rho_db`: `(P, sigma2)` with `P_T = 1`.
pub fn scenario_table1(id: TableScenario, rho_db: f64) -> (PowerMatrix, f64) {
    (id.power_matrix(), 1.0 / db_to_linear(rho_db))
}

/// Receive/transmit correlation blocks (Kronecker model per BS/user pair).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSpec {
    pub receive: Vec<ComplexMatrix>,
    pub transmit: Vec<ComplexMatrix>,
}

fn block_eigenvalues(blocks: &[ComplexMatrix], total: usize, side: &str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(total);
    for (b, m) in blocks.iter().enumerate() {
        if !m.is_square() {
            return Err(Error::Shape(format!("{side} block {b} is not square")));
        }
        for i in 0..m.rows() {
            if (m[(i, i)].re - 1.0).abs() > 1e-10 || m[(i, i)].im.abs() > 1e-10 {
                return Err(Error::Domain(format!("{side} block {b} has non-unit diagonal")));
            }
        }
        let (w, _) = hermitian_eig(m)?;
        if w.iter().any(|&x| x < -1e-10) {
            return Err(Error::NotPositiveDefinite { pivot: b });
        }
        out.extend(w.into_iter().map(|x| x.max(0.0)));
    }
    if out.len() != total {
        return Err(Error::Shape(format!(
            "{side} blocks cover {} antennas, expected {total}",
            out.len()
        )));
    }
    Ok(out)
}

fn block_ranges(blocks: &[ComplexMatrix]) -> Vec<std::ops::Range<usize>> {
    let mut start = 0;
    blocks
        .iter()
        .map(|m| {
            let r = start..start + m.rows();
            start += m.rows();
            r
        })
        .collect()
}

/// Replaces a correlated channel by the statistically equivalent independent
/// one: `P'_uv = lambda_r(u) lambda_t(v) P_uv`, eigenvalues in descending
/// order within each block.
pub fn apply_correlation(p: &PowerMatrix, c: &CorrelationSpec) -> Result<PowerMatrix> {
    let lr = block_eigenvalues(&c.receive, p.n_r(), "receive")?;
    let lt = block_eigenvalues(&c.transmit, p.n_t(), "transmit")?;
    for rr in block_ranges(&c.receive) {
        for tr in block_ranges(&c.transmit) {
            let p0 = p.get(rr.start, tr.start);
            for u in rr.clone() {
                for v in tr.clone() {
                    if (p.get(u, v) - p0).abs() > 1e-12 * p0.abs().max(f64::MIN_POSITIVE) {
                        return Err(Error::Model(format!(
                            "power not constant inside block at ({u},{v})"
                        )));
                    }
                }
            }
        }
    }
    let m = RealMatrix::from_fn(p.n_r(), p.n_t(), |u, v| lr[u] * lt[v] * p.get(u, v));
    PowerMatrix::from_matrix(m)
}

/// Cellular drop geometry. Distances are in units of the cell radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropGeometry {
    /// number of base stations `M`
    pub base_stations: usize,
    pub antennas_per_bs: usize,
    /// number of users `W`
    pub users: usize,
    pub antennas_per_user: usize,
    #[serde(default = "default_shadowing")]
    pub shadowing_db: f64,
    #[serde(default = "default_pathloss")]
    pub pathloss_exponent: f64,
    /// required maximum received SNR (dB) ...
    #[serde(default = "default_target")]
    pub target_snr_db: f64,
    /// ... met with this probability over user locations
    #[serde(default = "default_coverage")]
    pub coverage: f64,
    #[serde(default = "default_radius")]
    pub cell_radius: f64,
    /// BSs sit equally spaced on a circle of this radius
    #[serde(default = "default_ring")]
    pub bs_ring_radius: f64,
    #[serde(default = "default_min_distance")]
    pub min_distance: f64,
    #[serde(default = "default_calibration")]
    pub calibration_samples: usize,
}

fn default_shadowing() -> f64 {
    8.0
}
fn default_pathloss() -> f64 {
    3.5
}
fn default_target() -> f64 {
    3.0
}
fn default_coverage() -> f64 {
    0.95
}
fn default_radius() -> f64 {
    1.0
}
fn default_ring() -> f64 {
    0.6
}
fn default_min_distance() -> f64 {
    0.05
}
fn default_calibration() -> usize {
    10_000
}

impl DropGeometry {
    /// `M` BSs with `n_R/M` antennas each and `N` single-antenna users, with
    /// the default propagation parameters.
    pub fn standard(base_stations: usize, antennas_per_bs: usize, users: usize) -> Self {
        Self {
            base_stations,
            antennas_per_bs,
            users,
            antennas_per_user: 1,
            shadowing_db: default_shadowing(),
            pathloss_exponent: default_pathloss(),
            target_snr_db: default_target(),
            coverage: default_coverage(),
            cell_radius: default_radius(),
            bs_ring_radius: default_ring(),
            min_distance: default_min_distance(),
            calibration_samples: default_calibration(),
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        if self.base_stations == 0 {
            e.push("base_stations must be >= 1".to_string());
        }
        if self.antennas_per_bs == 0 {
            e.push("antennas_per_bs must be >= 1".to_string());
        }
        if self.users == 0 {
            e.push("users must be >= 1".to_string());
        }
        if self.antennas_per_user == 0 {
            e.push("antennas_per_user must be >= 1".to_string());
        }
        if !(self.shadowing_db >= 0.0) {
            e.push("shadowing_db must be >= 0".to_string());
        }
        if !(self.pathloss_exponent > 0.0) {
            e.push("pathloss_exponent must be > 0".to_string());
        }
        if !(self.coverage > 0.0 && self.coverage < 1.0) {
            e.push("coverage must be in (0, 1)".to_string());
        }
        if !(self.cell_radius > 0.0) {
            e.push("cell_radius must be > 0".to_string());
        }
        if !(self.bs_ring_radius >= 0.0) {
            e.push("bs_ring_radius must be >= 0".to_string());
        }
        if !(self.min_distance > 0.0) {
            e.push("min_distance must be > 0".to_string());
        }
        if self.calibration_samples < 100 {
            e.push("calibration_samples must be >= 100".to_string());
        }
        e
    }

    pub fn n_r(&self) -> usize {
        self.base_stations * self.antennas_per_bs
    }

    pub fn n_t(&self) -> usize {
        self.users * self.antennas_per_user
    }

    pub fn bs_positions(&self) -> Vec<(f64, f64)> {
        (0..self.base_stations)
            .map(|m| {
                if self.base_stations == 1 {
                    return (0.0, 0.0);
                }
                let th = 2.0 * std::f64::consts::PI * m as f64 / self.base_stations as f64;
                (self.bs_ring_radius * th.cos(), self.bs_ring_radius * th.sin())
            })
            .collect()
    }

    /// Large-scale gain `d^{-gamma} 10^{X/10}` from a BS to a location.
    fn gain(&self, bs: (f64, f64), at: (f64, f64), rng: &mut StreamRng) -> f64 {
        let d = ((bs.0 - at.0).powi(2) + (bs.1 - at.1).powi(2)).sqrt().max(self.min_distance);
        let x = self.shadowing_db * rng.normal();
        d.powf(-self.pathloss_exponent) * db_to_linear(x)
    }

    fn location(&self, rng: &mut StreamRng) -> (f64, f64) {
        let r = self.cell_radius * rng.uniform().sqrt();
        let th = 2.0 * std::f64::consts::PI * rng.uniform();
        (r * th.cos(), r * th.sin())
    }

    /// Per-location best-BS gains (unit transmit power) used for calibration.
    pub fn max_gain_samples(&self, seed: u64, stream: u64, count: usize) -> Vec<f64> {
        let mut rng = StreamRng::new(seed ^ CALIBRATION_DOMAIN, stream);
        let bss = self.bs_positions();
        (0..count)
            .map(|_| {
                let at = self.location(&mut rng);
                bss.iter().map(|&b| self.gain(b, at, &mut rng)).fold(0.0, f64::max)
            })
            .collect()
    }

    /// Transmit scale `T` such that `T * max-gain` (noise power 1) exceeds the
    /// target SNR at the requested fraction of locations.
    pub fn calibrate(&self, seed: u64) -> f64 {
        let mut g = self.max_gain_samples(seed, 0, self.calibration_samples);
        g.sort_by(f64::total_cmp);
        let q = empirical_quantile(&g, 1.0 - self.coverage);
        db_to_linear(self.target_snr_db) / q
    }
}

const CALIBRATION_DOMAIN: u64 = 0x6361_6c69_6272_6174;
const DROP_DOMAIN: u64 = 0x6472_6f70_7573_6572;

/// Linear-interpolated quantile of sorted data.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// One random drop: users uniform in the cell, lognormal shadowing and path
/// loss per BS–user link (shared by co-located antennas).
pub fn random_drop(geom: &DropGeometry, seed: u64) -> Result<PowerMatrix> {
    let errs = geom.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs.join("; ")));
    }
    let t = geom.calibrate(seed);
    let mut rng = StreamRng::new(seed ^ DROP_DOMAIN, 0);
    let bss = geom.bs_positions();
    let mut m = RealMatrix::zeros(geom.n_r(), geom.n_t());
    for w in 0..geom.users {
        let at = geom.location(&mut rng);
        for (b, &pos) in bss.iter().enumerate() {
            let g = t * geom.gain(pos, at, &mut rng);
            for a in 0..geom.antennas_per_bs {
                for u in 0..geom.antennas_per_user {
                    m[(b * geom.antennas_per_bs + a, w * geom.antennas_per_user + u)] = g;
                }
            }
        }
    }
    PowerMatrix::from_matrix(m)
}
