//! Jensen upper bound `log2 E|I + gbar H^H H|` in permanent form and its
//! one-term low/high-SNR approximations.

use serde::{Deserialize, Serialize};

use crate::channel::PowerMatrix;
use crate::combinatorics::{perm_rect, subset_iter, RealMatrix};
use crate::error::{Error, Result};

const MAX_COLUMNS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    /// `theta[i]` multiplies `gbar^i`
    pub theta: Vec<f64>,
    pub bound_bits: f64,
    pub low_snr_bits: f64,
    /// `None` when `Perm(P) = 0`: the bound stays valid but the one-term
    /// high-SNR form is meaningless
    pub high_snr_bits: Option<f64>,
}

/// Tall orientation (`rows >= cols`); `|I + H H^H| = |I + H^H H|` makes the
/// transpose equivalent.
fn tall(p: &PowerMatrix) -> RealMatrix {
    if p.n_r() >= p.n_t() {
        p.matrix().clone()
    } else {
        p.matrix().transpose()
    }
}

/// `theta_i = sum over i-column subsets of Perm(P^{sigma})`, `i = 0..min(n_R, N)`.
pub fn theta_coefficients(p: &PowerMatrix) -> Result<Vec<f64>> {
    let m = tall(p);
    if m.cols() > MAX_COLUMNS {
        return Err(Error::Size(format!(
            "Jensen bound limited to min(n_R, N) <= {MAX_COLUMNS}, got {}",
            m.cols()
        )));
    }
    let mut theta = Vec::with_capacity(m.cols() + 1);
    for i in 0..=m.cols() {
        let mut s = 0.0;
        for sub in subset_iter(m.cols(), i) {
            s += perm_rect(&m.select_cols(sub.indices()))?;
        }
        theta.push(s);
    }
    Ok(theta)
}

fn check_gbar(gbar: f64) -> Result<()> {
    if !(gbar > 0.0) || !gbar.is_finite() {
        return Err(Error::Domain(format!("inverse noise power must be positive, got {gbar}")));
    }
    Ok(())
}

/// Jensen bound (bits) with its coefficients and one-term approximations.
pub fn jensen_bound(p: &PowerMatrix, gbar: f64) -> Result<BoundBreakdown> {
    check_gbar(gbar)?;
    let theta = theta_coefficients(p)?;
    let poly = theta.iter().rev().fold(0.0, |acc, &t| acc * gbar + t);
    let top = *theta.last().unwrap();
    let high = if top > 0.0 { Some((1.0 + top * gbar.powi(theta.len() as i32 - 1)).log2()) } else { None };
    Ok(BoundBreakdown {
        bound_bits: poly.log2(),
        low_snr_bits: (1.0 + theta[1] * gbar).log2(),
        high_snr_bits: high,
        theta,
    })
}

/// `log2(1 + P_T gbar)`.
pub fn low_snr_approx(p: &PowerMatrix, gbar: f64) -> Result<f64> {
    check_gbar(gbar)?;
    Ok((1.0 + p.total_power() * gbar).log2())
}

/// `log2(1 + Perm(P) gbar^N)` (with `N` the smaller dimension).
pub fn high_snr_approx(p: &PowerMatrix, gbar: f64) -> Result<f64> {
    check_gbar(gbar)?;
    let m = tall(p);
    let perm = perm_rect(&m)?;
    if perm <= 0.0 {
        return Err(Error::Degenerate(
            "Perm(P) = 0: no full transversal of nonzero powers".into(),
        ));
    }
    Ok((1.0 + perm * gbar.powi(m.cols() as i32)).log2())
}
