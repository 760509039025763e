//! Approximate ergodic sum capacity for any `N <= n_R`.
//!
//! The capacity is split into per-stream terms `C_k` (stream `k` decoded in
//! the presence of streams `1..k-1`). Replacing the expectation of a ratio of
//! determinants by the ratio of expectations turns each `C_k` into
//!
//! `C_k ≈ ∫_0^∞ e^{-t}/t (1 - phi_k0 / phi_k(t)) dt`,
//!
//! where `phi_k(t) = |Sigma_k| E|sigma2 I + H_k^H Sigma_k^{-1} H_k|` is a
//! polynomial of degree `n_R` with positive coefficients given by permanents.
//! Factoring `phi_k(t) = phi_kn prod_l (t + omega_l)` gives the closed form
//! `C_k = (phi_k0/phi_kn) sum_l zeta_l e^{omega_l} E1(omega_l)`.

use num_complex::Complex64;

use crate::channel::PowerMatrix;
use crate::combinatorics::{esf_all, perm_any, perm_rect, subset_iter, RealMatrix};
use crate::error::{Error, Result};
use crate::linalg::{poly_roots_neg, PolyRealCoeffs};
use crate::specfun::exp_e1;
use crate::specfun::quadrature::{integrate_to_infinity, QuadratureSpec};

/// `E|sigma2 I + Q^H Q|` for `Q` with independent `CN(0, q_ij)` entries.
pub fn numerator_expectation(q: &RealMatrix, sigma2: f64) -> Result<f64> {
    let (n_r, m) = (q.rows(), q.cols());
    if m > n_r {
        return Err(Error::Shape(format!("need k-1 <= n_R, got {m} columns for n_R = {n_r}")));
    }
    let mut total = 0.0;
    for i in 0..=m {
        let mut s = 0.0;
        for sub in subset_iter(m, i) {
            s += perm_rect(&q.select_cols(sub.indices()))?;
        }
        total += s * sigma2.powi((m - i) as i32);
    }
    Ok(total)
}

/// Coefficients `phi_k0..phi_kn` of `phi_k(t)`.
pub fn phi_coeffs(q: &RealMatrix, pk: &[f64], sigma2: f64) -> Result<PolyRealCoeffs> {
    let (n_r, m) = (q.rows(), q.cols());
    if pk.len() != n_r {
        return Err(Error::Shape("power vector length must equal n_R".into()));
    }
    if m > n_r {
        return Err(Error::Shape(format!("need k-1 <= n_R, got {m} columns for n_R = {n_r}")));
    }
    let mut phi = vec![0.0; n_r + 1];
    for i in 0..=m {
        for rows in subset_iter(n_r, i) {
            let perm = perm_any(&q.select_rows(rows.indices()))?;
            if perm == 0.0 {
                continue;
            }
            let comp: Vec<f64> = rows.complement(n_r).iter().map(|&r| pk[r]).collect();
            let e = esf_all(&comp);
            for (l, el) in e.iter().enumerate() {
                // (sigma2)^{k-1-i-l} with k-1 = m
                phi[l] += perm * el * sigma2.powi(m as i32 - i as i32 - l as i32);
            }
        }
    }
    while phi.len() > 1 && *phi.last().unwrap() == 0.0 {
        phi.pop();
    }
    PolyRealCoeffs::new(phi)
}

/// Everything needed for one stream term `C_k`.
#[derive(Debug, Clone)]
pub struct StreamContext {
    /// 1-based stream index
    pub k: usize,
    pub q: RealMatrix,
    pub pk: Vec<f64>,
    pub sigma2: f64,
    pub phi: PolyRealCoeffs,
    pub omega: Vec<Complex64>,
    /// `zeta[0]` is the `1/t` weight, `zeta[l]` pairs with `omega[l-1]`
    pub zeta: Vec<Complex64>,
}

/// Partial fractions `1/(t prod_l (t + omega_l)) = z0/t - sum_l z_l/(t + omega_l)`.
pub fn partial_fraction_weights(omega: &[Complex64]) -> Vec<Complex64> {
    let z0 = omega.iter().fold(Complex64::new(1.0, 0.0), |acc, w| acc * w).finv();
    let mut out = vec![z0];
    for (l, &wl) in omega.iter().enumerate() {
        let mut d = wl;
        for (u, &wu) in omega.iter().enumerate() {
            if u != l {
                d *= wu - wl;
            }
        }
        out.push(d.finv());
    }
    out
}

impl StreamContext {
    /// Context for stream `k` (1-based) of the columns of `p` in their given order.
    pub fn new(p: &PowerMatrix, k: usize, sigma2: f64) -> Result<Self> {
        if k == 0 || k > p.n_t() {
            return Err(Error::Domain(format!("stream index {k} out of range 1..={}", p.n_t())));
        }
        if !(sigma2 > 0.0) {
            return Err(Error::Domain(format!("noise power must be positive, got {sigma2}")));
        }
        let prev: Vec<usize> = (0..k - 1).collect();
        let q = p.matrix().select_cols(&prev);
        let pk = p.column(k - 1);
        let phi = phi_coeffs(&q, &pk, sigma2)?;
        let omega = if phi.degree() == 0 { Vec::new() } else { poly_roots_neg(&phi)? };
        let zeta = partial_fraction_weights(&omega);
        Ok(Self { k, q, pk, sigma2, phi, omega, zeta })
    }
}

/// `C_k` in nats from the closed form; falls back to direct quadrature of the
/// same integral when clustered roots make the partial-fraction sum cancel.
pub fn stream_capacity(ctx: &StreamContext) -> Result<f64> {
    if ctx.omega.is_empty() {
        return Ok(0.0);
    }
    for w in &ctx.omega {
        if !(w.re > 0.0) {
            return Err(Error::Breakdown(format!("root omega = {w} has nonpositive real part")));
        }
    }
    let (value, magnitude) = closed_form_sum(ctx)?;
    // clustered roots: the partial-fraction terms cancel and both the real
    // part and the imaginary residue lose accuracy
    if magnitude > CANCELLATION_LIMIT * value.norm() {
        return stream_capacity_quadrature(ctx);
    }
    check_residue(ctx, value)
}

fn check_residue(ctx: &StreamContext, v: Complex64) -> Result<f64> {
    if v.im.abs() >= 1e-9 {
        return Err(Error::Breakdown(format!("imaginary residue {:e} in stream {}", v.im, ctx.k)));
    }
    Ok(v.re)
}

const CANCELLATION_LIMIT: f64 = 1e4;

fn closed_form_sum(ctx: &StreamContext) -> Result<(Complex64, f64)> {
    let c = ctx.phi.coeffs();
    let ratio = c[0] / c[c.len() - 1];
    let mut sum = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    for (l, &w) in ctx.omega.iter().enumerate() {
        let t = ctx.zeta[l + 1] * exp_e1(w)?;
        mag += t.norm();
        sum += t;
    }
    Ok((sum * ratio, mag * ratio.abs()))
}

/// Closed form without the clustered-root fallback or the residue check: the
/// complex partial-fraction sum (its imaginary part is the residue) and the
/// magnitude of its terms.
pub fn stream_capacity_closed_form(ctx: &StreamContext) -> Result<(Complex64, f64)> {
    closed_form_sum(ctx)
}

/// `∫_0^∞ e^{-t} (phi(t) - phi_0) / (t phi(t)) dt` by adaptive quadrature.
pub fn stream_capacity_quadrature(ctx: &StreamContext) -> Result<f64> {
    let c = ctx.phi.coeffs().to_vec();
    let f = |t: f64| {
        let mut num = 0.0;
        for &cl in c[1..].iter().rev() {
            num = num * t + cl;
        }
        let den = c.iter().rev().fold(0.0, |acc, &cl| acc * t + cl);
        (-t).exp() * num / den
    };
    let mut pts = vec![0.0];
    let mut scales: Vec<f64> = ctx.omega.iter().map(|w| w.norm()).filter(|&x| x < 700.0).collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    pts.extend(scales);
    let spec = QuadratureSpec { abs_tol: 1e-300, rel_tol: 1e-13, max_subdivisions: 4000 };
    let r = integrate_to_infinity(f, &pts, &spec)?;
    if !r.converged && r.abs_err > 1e-10 * r.value.abs() {
        return Err(Error::Quadrature(format!("stream {} integral did not converge", ctx.k)));
    }
    Ok(r.value)
}

/// Approximate ergodic sum capacity in bits/s/Hz (columns in given order).
pub fn approx_capacity(p: &PowerMatrix, sigma2: f64) -> Result<f64> {
    if p.n_t() > p.n_r() {
        return Err(Error::Unsupported(format!(
            "approximation needs N <= n_R, got N = {} > n_R = {}",
            p.n_t(),
            p.n_r()
        )));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("noise power must be positive, got {sigma2}")));
    }
    // the approximation is homogeneous in (P, sigma2); work at sigma2 = 1
    let pn = p.scaled(1.0 / sigma2)?;
    let mut total = 0.0;
    for k in 1..=p.n_t() {
        let ctx = StreamContext::new(&pn, k, 1.0)?;
        total += stream_capacity(&ctx)?;
    }
    Ok(total / std::f64::consts::LN_2)
}

/// [`approx_capacity`] with the streams decoded in the column order `order`.
pub fn approx_capacity_ordered(p: &PowerMatrix, sigma2: f64, order: &[usize]) -> Result<f64> {
    approx_capacity(&p.permute_columns(order)?, sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::exp_e1_pv;

    #[test]
    fn numerator_small_cases() {
        let empty = RealMatrix::zeros(3, 0);
        assert_eq!(numerator_expectation(&empty, 0.7).unwrap(), 1.0);
        let q = RealMatrix::from_vec(3, 1, vec![0.2, 0.3, 0.5]).unwrap();
        assert!((numerator_expectation(&q, 0.7).unwrap() - 1.7).abs() < 1e-15);
        let wide = RealMatrix::zeros(1, 2);
        assert!(numerator_expectation(&wide, 1.0).is_err());
    }

    #[test]
    fn first_stream_polynomial_is_det_sigma() {
        let p = [0.5, 0.3, 0.2];
        let s2 = 0.4;
        let phi = phi_coeffs(&RealMatrix::zeros(3, 0), &p, s2).unwrap();
        for &t in &[0.3, 1.0, 2.5] {
            let det: f64 = p.iter().map(|x| 1.0 + t * x / s2).product();
            assert!((phi.eval(t) - det).abs() < 1e-13 * det);
        }
    }

    #[test]
    fn phi0_equals_numerator() {
        let q = RealMatrix::from_vec(4, 2, vec![0.1, 0.7, 0.3, 0.2, 0.9, 0.4, 0.25, 0.6]).unwrap();
        let pk = [0.3, 0.8, 0.1, 0.5];
        for &s2 in &[0.1, 1.0, 3.0] {
            let phi = phi_coeffs(&q, &pk, s2).unwrap();
            let num = numerator_expectation(&q, s2).unwrap();
            assert!((phi.coeffs()[0] - num).abs() < 1e-14 * num);
        }
    }

    #[test]
    fn zeta_example() {
        let w = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
        let z = partial_fraction_weights(&w);
        assert!((z[0] - 0.5).norm() < 1e-15);
        assert!((z[1] - 1.0).norm() < 1e-15);
        assert!((z[2] + 0.5).norm() < 1e-15);
        let t = 1.0;
        let lhs = 1.0 / (t * (t + 1.0) * (t + 2.0));
        let rhs = z[0] / t - z[1] / (t + w[0]) - z[2] / (t + w[1]);
        assert!((rhs.re - lhs).abs() < 1e-15);
    }

    #[test]
    fn single_stream_single_antenna() {
        let p = PowerMatrix::new(1, 1, vec![2.0]).unwrap();
        let c = approx_capacity(&p, 0.5).unwrap();
        let exact = exp_e1_pv(0.25).unwrap() / std::f64::consts::LN_2;
        assert!((c - exact).abs() < 1e-13);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let p = PowerMatrix::new(3, 2, vec![0.5, 0.1, 0.3, 0.25, 0.2, 0.9]).unwrap();
        for k in 1..=2 {
            let ctx = StreamContext::new(&p, k, 0.3).unwrap();
            let (cf, _) = stream_capacity_closed_form(&ctx).unwrap();
            let q = stream_capacity_quadrature(&ctx).unwrap();
            assert!((cf.re - q).abs() < 1e-10 * q, "{cf} {q}");
            assert!(cf.im.abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_roots_use_quadrature() {
        let p = PowerMatrix::new(3, 1, vec![1.0 / 3.0; 3]).unwrap();
        let c = approx_capacity(&p, 1.0).unwrap();
        let ctx = StreamContext::new(&p, 1, 1.0).unwrap();
        let q = stream_capacity_quadrature(&ctx).unwrap() / std::f64::consts::LN_2;
        assert!((c - q).abs() < 1e-12);
        assert!(approx_capacity(&PowerMatrix::new(1, 2, vec![1.0, 1.0]).unwrap(), 1.0).is_err());
    }
}
