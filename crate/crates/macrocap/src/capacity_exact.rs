//! Exact ergodic sum capacity for two sources (`N = 2`, `n_R >= 3`).
//!
//! `E{C} = (I_a1 + I_a2 - I_b) / ln 2` where `I_ak = E ln(1 + |h_k|^2/sigma2)`
//! has a one-line partial-fraction form and `I_b` is a triple sum over
//! distinct receive indices `(i, k, l)` of exponential-integral and
//! log-pole kernels.
//!
//! The closed forms divide by power differences. Repeated or nearly
//! repeated powers (equal-power profiles, proportional columns) are handled by
//! a deterministic relative jitter of the power matrix and a Richardson step
//! that removes the `O(delta)` bias.

use serde::{Deserialize, Serialize};

use crate::channel::PowerMatrix;
use crate::error::{Error, Result};
use crate::specfun::{exp_e1_divided_difference, exp_e1_pv, h2_log_part, log_pole_integral};

/// Value together with the sum of absolute values of everything that was
/// added into it; `mag * eps` bounds the rounding noise of `val`.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    val: f64,
    mag: f64,
}

impl Acc {
    fn of(v: f64) -> Self {
        Acc { val: v, mag: v.abs() }
    }
    fn plus(self, o: Acc) -> Self {
        Acc { val: self.val + o.val, mag: self.mag + o.mag }
    }
    fn minus(self, o: Acc) -> Self {
        Acc { val: self.val - o.val, mag: self.mag + o.mag }
    }
    fn times(self, c: f64) -> Self {
        Acc { val: self.val * c, mag: self.mag * c.abs() }
    }
}

/// `eta_i = p_i^{n-1} / prod_{l != i} (p_i - p_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaWeights {
    pub eta: Vec<f64>,
}

impl EtaWeights {
    pub fn new(p: &[f64]) -> Result<Self> {
        let n = p.len();
        let mut eta = Vec::with_capacity(n);
        for (i, &pi) in p.iter().enumerate() {
            let mut v = pi.powi(n as i32 - 1);
            for (l, &pl) in p.iter().enumerate() {
                if l != i {
                    let d = pi - pl;
                    if d == 0.0 {
                        return Err(Error::Degenerate(format!("repeated power {pi} at indices {l}, {i}")));
                    }
                    v /= d;
                }
            }
            eta.push(v);
        }
        Ok(Self { eta })
    }
}

fn check_powers(p: &[f64], sigma2: f64) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Shape("empty power vector".into()));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("noise power must be positive, got {sigma2}")));
    }
    if p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain("powers must be positive and finite".into()));
    }
    Ok(())
}

fn i_a_acc(p: &[f64], sigma2: f64) -> Result<Acc> {
    check_powers(p, sigma2)?;
    let w = EtaWeights::new(p)?;
    let mut acc = Acc::default();
    for (&pi, &e) in p.iter().zip(&w.eta) {
        acc = acc.plus(Acc::of(e * exp_e1_pv(sigma2 / pi)?));
    }
    Ok(acc)
}

/// `I_a = E ln(1 + h^H h / sigma2)` (nats) for `h ~ CN(0, diag(p))` with
/// distinct entries of `p`.
pub fn i_a(p: &[f64], sigma2: f64) -> Result<f64> {
    Ok(i_a_acc(p, sigma2)?.val)
}

/// Constants shared by all terms with first index `i`.
#[derive(Debug, Clone)]
pub struct TwoSourceContext {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub sigma2: f64,
}

impl TwoSourceContext {
    pub fn new(p1: &[f64], p2: &[f64], sigma2: f64) -> Result<Self> {
        check_powers(p1, sigma2)?;
        check_powers(p2, sigma2)?;
        if p1.len() != p2.len() {
            return Err(Error::Shape("power vectors differ in length".into()));
        }
        if p1.len() < 3 {
            return Err(Error::Shape(format!(
                "exact two-source engine needs n_R >= 3, got {}",
                p1.len()
            )));
        }
        Ok(Self { p1: p1.to_vec(), p2: p2.to_vec(), sigma2 })
    }

    pub fn n_r(&self) -> usize {
        self.p1.len()
    }
}

fn nonzero(x: f64, what: &str) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Degenerate(format!("{what} vanishes")));
    }
    Ok(x)
}

/// The four-term bracket `F(R, b, 1/(p2 s)) + F(r, b, lam) - F(R, b, 1/(p1 s)) - F(r, b, mu)`
/// for `F = H1` and `F = H2` (principal-value forms), sharing the log-pole
/// kernels between the two.
struct Bracket {
    h1: Acc,
    h2: Acc,
}

fn bracket(terms: &[(f64, f64, f64); 4], b: f64, want_h2: bool) -> Result<Bracket> {
    let eb = exp_e1_pv(b)?;
    let mut h1 = Acc::default();
    let mut h2 = Acc::default();
    for &(a, c, sign) in terms {
        let c = nonzero(c, "kernel slope")?;
        let x = a / c;
        let g = log_pole_integral(x, b)?;
        let lc = c.abs().ln();
        let t1 = Acc::of(lc * eb).plus(Acc::of(g));
        h1 = h1.plus(t1.times(sign));
        if want_h2 {
            let t2 = Acc::of(lc * (1.0 / b - eb)).plus(Acc::of(h2_log_part(x, b, eb)?)).minus(Acc::of(g));
            h2 = h2.plus(t2.times(sign));
        }
    }
    Ok(Bracket { h1, h2 })
}

/// `(p2 s/n) (ee(s1) - ee(b))/(b - s1) - (p1 s/n) (ee(s2) - ee(b))/(b - s2)`.
fn pole_terms(p1: f64, p2: f64, s: f64, nn: f64, b: f64) -> Result<Acc> {
    let s1 = s / p1;
    let s2 = s / p2;
    let t1 = -exp_e1_divided_difference(s1, b)? * p2 * s / nn;
    let t2 = -exp_e1_divided_difference(s2, b)? * p1 * s / nn;
    Ok(Acc::of(t1).minus(Acc::of(t2)))
}

fn i_b_acc(ctx: &TwoSourceContext) -> Result<Acc> {
    let (p1, p2, s) = (&ctx.p1, &ctx.p2, ctx.sigma2);
    let n = ctx.n_r();
    let rr: Vec<f64> = (0..n).map(|i| 1.0 / (p1[i] * p2[i])).collect();
    let mut tot = Acc::default();
    for i in 0..n {
        let jac = nonzero(s * (1.0 / p2[i] - 1.0 / p1[i]), "Jacobian (P_i1 = P_i2)")?;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut g = vec![0.0; n];
        for k in (0..n).filter(|&k| k != i) {
            let al = 1.0 / p2[k] - 1.0 / p2[i];
            let be = 1.0 / p1[k] - 1.0 / p1[i];
            a[k] = s * (al - be) / jac;
            b[k] = (be / p2[i] - al / p1[i]) / jac;
            g[k] = rr[k] - rr[i];
        }
        for k in (0..n).filter(|&k| k != i) {
            let ak = nonzero(a[k], "a_ik")?;
            let bk = nonzero(b[k], "b_ik")?;
            let q = nonzero(bk / ak, "q_ik")?;
            let r = g[k] / ak;
            let lam = 1.0 / (p1[i] * s) + q;
            let mu = 1.0 / (p2[i] * s) + q;
            let m = g[k] / bk - rr[i] / q;
            let terms = [
                (rr[i], 1.0 / (p2[i] * s), 1.0),
                (r, lam, 1.0),
                (rr[i], 1.0 / (p1[i] * s), -1.0),
                (r, mu, -1.0),
            ];
            let at_m = bracket(&terms, nonzero(m, "m_ik")?, true)?;
            let others: Vec<usize> = (0..n).filter(|&l| l != i && l != k).collect();
            let c: Vec<f64> = others.iter().map(|&l| b[l] * ak - a[l] * bk).collect();
            let d: Vec<f64> = others.iter().map(|&l| ak * g[l] - g[k] * a[l]).collect();
            for (u, _) in others.iter().enumerate() {
                let cl = nonzero(c[u], "c_ikl")?;
                let mut xi = (ak * cl).powi(n as i32 - 3);
                for z in (0..others.len()).filter(|&z| z != u) {
                    xi /= nonzero(d[z] * cl - c[z] * d[u], "xi denominator")?;
                }
                let eps = nonzero(d[u] / cl, "epsilon_ikl")?;
                let nn = nonzero(r * cl - d[u] * q - cl * rr[i], "n_ikl")?;
                let at_eps = bracket(&terms, eps, false)?;
                let mt = at_eps.h1.times(cl / (nn * nn)).plus(pole_terms(p1[i], p2[i], s, nn, eps)?);
                let nt = at_m
                    .h2
                    .times(1.0 / (nn * q))
                    .plus(at_m.h1.times(cl / (nn * nn)))
                    .plus(pole_terms(p1[i], p2[i], s, nn, m)?);
                tot = tot.plus(mt.minus(nt).times(xi / jac));
            }
        }
    }
    let prod: f64 = p1.iter().chain(p2).product();
    let out = tot.times(-1.0 / prod);
    if !out.val.is_finite() {
        return Err(Error::Degenerate("non-finite I_b".into()));
    }
    Ok(out)
}

/// `I_b` (nats) for columns `p1`, `p2` with `n_R >= 3` and generic (pairwise
/// distinct) powers. No jitter is applied here.
pub fn i_b(p1: &[f64], p2: &[f64], sigma2: f64) -> Result<f64> {
    Ok(i_b_acc(&TwoSourceContext::new(p1, p2, sigma2)?)?.val)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactOptions {
    /// Relative jitter step; the engine evaluates at `delta` and `2 delta`.
    pub jitter_delta: f64,
    /// Closed-form results whose estimated rounding noise (bits) exceeds this
    /// are recomputed on the jittered path.
    pub noise_tolerance: f64,
    /// Pairwise relative power gap below which the jitter path is taken
    /// without trying the closed form first.
    pub min_gap: f64,
    pub force_jitter: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { jitter_delta: 2e-3, noise_tolerance: 1e-6, min_gap: 1e-7, force_jitter: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub bits: f64,
    /// nats
    pub i_a1: f64,
    pub i_a2: f64,
    pub i_b: f64,
    pub jittered: bool,
    /// Rounding-noise estimate of `bits`.
    pub noise_bits: f64,
}

// relative accuracy of the log-pole kernels, which dominates plain rounding
const ROUNDING: f64 = 3e-14;

fn raw_capacity(p1: &[f64], p2: &[f64]) -> Result<ExactResult> {
    let a1 = i_a_acc(p1, 1.0)?;
    let a2 = i_a_acc(p2, 1.0)?;
    let b = i_b_acc(&TwoSourceContext::new(p1, p2, 1.0)?)?;
    let total = a1.plus(a2).minus(b);
    Ok(ExactResult {
        bits: total.val / std::f64::consts::LN_2,
        i_a1: a1.val,
        i_a2: a2.val,
        i_b: b.val,
        jittered: false,
        noise_bits: total.mag * ROUNDING / std::f64::consts::LN_2,
    })
}

// splitmix64 finaliser mapped to [0.5, 1.5): a fixed, generic direction
fn jitter_weight(j: u64) -> f64 {
    let mut z = j.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    0.5 + (z >> 11) as f64 / (1u64 << 53) as f64
}

fn jittered(p: &[Vec<f64>; 2], delta: f64) -> [Vec<f64>; 2] {
    let n_t = 2;
    let mut out = p.clone();
    for (k, col) in out.iter_mut().enumerate() {
        for (i, x) in col.iter_mut().enumerate() {
            *x *= 1.0 + jitter_weight((i * n_t + k) as u64) * delta;
        }
    }
    out
}

fn min_relative_gap(p1: &[f64], p2: &[f64]) -> f64 {
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
    let mut gap = f64::INFINITY;
    for col in [p1, p2] {
        for i in 0..col.len() {
            for l in i + 1..col.len() {
                gap = gap.min(rel(col[i], col[l]));
            }
        }
    }
    for (x, y) in p1.iter().zip(p2) {
        gap = gap.min(rel(*x, *y));
    }
    gap
}

fn cmp_columns(x: &[f64], y: &[f64]) -> std::cmp::Ordering {
    x.iter().zip(y).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

fn is_degeneracy(e: &Error) -> bool {
    matches!(e, Error::Degenerate(_) | Error::NearSingular(_) | Error::Domain(_) | Error::Quadrature(_))
}

/// Exact ergodic sum capacity (bits/s/Hz) of a two-column power matrix.
pub fn exact_capacity_two_source(p: &PowerMatrix, sigma2: f64) -> Result<f64> {
    Ok(exact_capacity_detailed(p, sigma2, &ExactOptions::default())?.bits)
}

/// [`exact_capacity_two_source`] with the individual terms and the jitter flag.
pub fn exact_capacity_detailed(p: &PowerMatrix, sigma2: f64, opts: &ExactOptions) -> Result<ExactResult> {
    if p.n_t() != 2 {
        return Err(Error::Unsupported(format!("exact engine requires N=2, got N={}", p.n_t())));
    }
    if p.n_r() < 3 {
        return Err(Error::Shape(format!("exact engine requires n_R >= 3, got n_R={}", p.n_r())));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("noise power must be positive, got {sigma2}")));
    }
    // the capacity depends on P/sigma2 only
    let pn = p.floored(1e-12).scaled(1.0 / sigma2)?;
    // capacity is symmetric in the two users; a canonical column order makes
    // the result (jittered or not) exactly swap invariant
    let mut cols = [pn.column(0), pn.column(1)];
    if cmp_columns(&cols[0], &cols[1]) == std::cmp::Ordering::Greater {
        cols.swap(0, 1);
    }
    let try_raw = !opts.force_jitter && min_relative_gap(&cols[0], &cols[1]) >= opts.min_gap;
    if try_raw {
        match raw_capacity(&cols[0], &cols[1]) {
            Ok(r) if r.noise_bits <= opts.noise_tolerance => return Ok(r),
            Ok(_) => {}
            Err(e) if is_degeneracy(&e) => {}
            Err(e) => return Err(e),
        }
    }
    let d = opts.jitter_delta;
    let c1 = jittered(&cols, d);
    let c2 = jittered(&cols, 2.0 * d);
    let f1 = raw_capacity(&c1[0], &c1[1])?;
    let f2 = raw_capacity(&c2[0], &c2[1])?;
    let ex = |x: f64, y: f64| 2.0 * x - y;
    Ok(ExactResult {
        bits: ex(f1.bits, f2.bits),
        i_a1: ex(f1.i_a1, f2.i_a1),
        i_a2: ex(f1.i_a2, f2.i_a2),
        i_b: ex(f1.i_b, f2.i_b),
        jittered: true,
        noise_bits: 2.0 * f1.noise_bits + f2.noise_bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_a_examples() {
        assert!((i_a(&[1.0], 1.0).unwrap() - 0.596_347_362_323_194_1).abs() < 1e-14);
        let want = -exp_e1_pv(1.0).unwrap() + 2.0 * exp_e1_pv(0.5).unwrap();
        assert!((i_a(&[1.0, 2.0], 1.0).unwrap() - want).abs() < 1e-14);
        assert!((want - 1.249_473_902_644_27).abs() < 1e-13);
    }

    #[test]
    fn eta_partial_fractions() {
        let p = [0.7, 0.2, 1.3, 0.45];
        let s = 0.8;
        let w = EtaWeights::new(&p).unwrap();
        for &t in &[0.01, 0.3, 1.0, 4.0, 25.0] {
            let det: f64 = p.iter().map(|x| 1.0 + t * x / s).product();
            let lhs = 1.0 / t - 1.0 / (t * det);
            let rhs: f64 = p.iter().zip(&w.eta).map(|(&x, &e)| e / (t + s / x)).sum();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs());
        }
    }

    #[test]
    fn known_capacity_value() {
        let p = PowerMatrix::from_columns(&[vec![0.5, 0.3, 0.2], vec![0.2, 0.35, 0.45]]).unwrap();
        let r = exact_capacity_detailed(&p, 1.0, &ExactOptions::default()).unwrap();
        assert!(!r.jittered);
        assert!((r.bits - 1.782_57).abs() < 1e-5, "{}", r.bits);
    }

    #[test]
    fn rejects_small_and_wide() {
        let p = PowerMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(exact_capacity_two_source(&p, 1.0).is_err());
        let p = PowerMatrix::new(3, 3, vec![1.0; 9]).unwrap();
        let e = exact_capacity_two_source(&p, 1.0).unwrap_err();
        assert!(e.to_string().contains("exact engine requires N=2"));
    }
}
