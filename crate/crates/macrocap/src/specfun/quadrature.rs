//! Globally adaptive Gauss–Kronrod (10/21) quadrature with breakpoints and a
//! mapped semi-infinite tail.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances for [`integrate`] and friends. Convergence means
/// `err <= max(abs_tol, rel_tol * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_subdivisions < 1 {
            return Err(Error::Domain(
                "quadrature tolerances must be > 0 and max_subdivisions >= 1".into(),
            ));
        }
        Ok(Self { abs_tol, rel_tol, max_subdivisions })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-300, rel_tol: 1e-12, max_subdivisions: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    /// Sum of |f| over the domain; `value` cannot be trusted beyond
    /// roughly `1e-16 * resabs`.
    pub resabs: f64,
    pub intervals: usize,
    pub converged: bool,
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208643473767,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ...
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    resabs: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then(other.a.total_cmp(&self.a))
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut resabs = fc.abs() * WGK[10];
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Piece { a, b, value, err, resabs }
}

const ROUNDOFF_FLOOR: f64 = 50.0 * f64::EPSILON * 1.000_001;

fn adapt<F: Fn(f64) -> f64>(f: &F, points: &[f64], spec: &QuadratureSpec) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Piece> = Vec::new();
    let mut value = 0.0;
    let mut err = 0.0;
    for w in points.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let p = gk21(f, w[0], w[1]);
        value += p.value;
        err += p.err;
        heap.push(p);
    }
    let mut count = heap.len();
    let mut converged = false;
    loop {
        if err <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            converged = true;
            break;
        }
        if count >= spec.max_subdivisions {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        // pieces at the rounding floor or too narrow to split stay as they are
        let at_floor = worst.err <= ROUNDOFF_FLOOR * worst.resabs;
        if at_floor || !(mid > worst.a.min(worst.b) && mid < worst.a.max(worst.b)) {
            frozen.push(worst);
            continue;
        }
        let l = gk21(f, worst.a, mid);
        let r = gk21(f, mid, worst.b);
        value += l.value + r.value - worst.value;
        err += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
        count += 1;
    }
    let mut all: Vec<Piece> = heap.into_vec();
    all.extend(frozen);
    all.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value: f64 = all.iter().map(|p| p.value).sum();
    let abs_err: f64 = all.iter().map(|p| p.err).sum();
    let resabs: f64 = all.iter().map(|p| p.resabs).sum();
    if !value.is_finite() {
        return Err(Error::Quadrature("integrand produced a non-finite value".into()));
    }
    if !converged {
        converged = abs_err <= spec.abs_tol.max(spec.rel_tol * value.abs());
    }
    Ok(QuadResult { value, abs_err, resabs, intervals: all.len(), converged })
}

/// Integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    adapt(&f, &[a, b], spec)
}

/// Integral over `[points[0], points[last]]`, with the interior points used as
/// initial breakpoints (place integrable singularities there).
pub fn integrate_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    if points.len() < 2 {
        return Err(Error::Domain("need at least two breakpoints".into()));
    }
    adapt(&f, points, spec)
}

/// Integral over `[points[0], inf)`; the finite points are breakpoints and the
/// tail beyond the last one is mapped onto `[0, 1)` by `t = T + u/(1-u)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    let Some(&last) = points.last() else {
        return Err(Error::Domain("need a lower limit".into()));
    };
    // the tail occupies (last, last + 1) in the mapped coordinate so that both
    // parts share one ordered breakpoint list
    let mut pts: Vec<f64> = points.to_vec();
    pts.push(last + 1.0);
    let g = |x: f64| {
        if x <= last {
            f(x)
        } else {
            let u = x - last;
            let v = 1.0 - u;
            if v <= 0.0 {
                return 0.0;
            }
            let val = f(last + u / v) / (v * v);
            if val.is_finite() {
                val
            } else {
                0.0
            }
        }
    };
    adapt(&g, &pts, spec)
}
