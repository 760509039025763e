//! Exponential integral, the scaled product `e^z E1(z)`, the log–pole
//! integral `D1` and the closed forms `H1`/`H2`.
//!
//! The `*_pv` variants extend the real functions to negative arguments and
//! to logarithms of either sign (`ln|ct + a|`), interpreting poles inside the
//! integration range as Cauchy principal values (and, for the squared pole
//! in `H2`, as Hadamard finite parts). The exact two-source engine needs
//! them because its intermediate constants take both signs.

pub mod quadrature;

use num_complex::Complex64;

use crate::error::{Error, Result};
use quadrature::{integrate_to_infinity, QuadratureSpec};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_RADIUS: f64 = 2.0;
const ASYMPTOTIC_RADIUS: f64 = 50.0;

fn check_cut(z: Complex64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("E1 argument {z} is not finite")));
    }
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(Error::Domain(format!("E1 argument {z} lies on the branch cut")));
    }
    Ok(())
}

// E1(z) = -gamma - ln z - sum_{k>=1} (-z)^k / (k k!)
fn e1_series(z: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..200 {
        term *= -z / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

// e^z E1(z) by the modified Lentz continued fraction
// 1/(z+1- 1/(z+3- 4/(z+5- ...)))
fn exp_e1_cf(z: Complex64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = an * d + b;
        if d.norm() < TINY {
            d = Complex64::new(TINY, 0.0);
        }
        c = b + an / c;
        if c.norm() < TINY {
            c = Complex64::new(TINY, 0.0);
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h
}

/// Principal-branch exponential integral `E1(z)`.
pub fn e1(z: Complex64) -> Result<Complex64> {
    check_cut(z)?;
    if z.norm() <= SERIES_RADIUS {
        let v = e1_series(z);
        Ok(if z.im == 0.0 { Complex64::new(v.re, 0.0) } else { v })
    } else {
        Ok(exp_e1(z)? * (-z).exp())
    }
}

/// `e^z E1(z)`, evaluated without forming `e^z` for large arguments.
pub fn exp_e1(z: Complex64) -> Result<Complex64> {
    check_cut(z)?;
    if z.norm() <= SERIES_RADIUS {
        let v = e1_series(z) * z.exp();
        Ok(if z.im == 0.0 { Complex64::new(v.re, 0.0) } else { v })
    } else {
        let v = if z.norm() >= ASYMPTOTIC_RADIUS { exp_e1_asymptotic(z) } else { exp_e1_cf(z) };
        Ok(if z.im == 0.0 { Complex64::new(v.re, 0.0) } else { v })
    }
}

// (1/z) sum_k (-1)^k k!/z^k, truncated at the smallest term
fn exp_e1_asymptotic(z: Complex64) -> Complex64 {
    let w = z.finv();
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..200 {
        let next = -term * w * k as f64;
        if next.norm() >= term.norm() || next.norm() < 1e-17 * sum.norm() {
            break;
        }
        term = next;
        sum += term;
    }
    sum * w
}

/// Real `E1(x)` for `x > 0`.
pub fn e1_real(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("E1 argument {x} must be positive and finite")));
    }
    Ok(e1(Complex64::new(x, 0.0))?.re)
}

/// Exponential integral `Ei(y)` for `y > 0`.
fn ei_positive(y: f64) -> f64 {
    if y <= 40.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..500 {
            term *= y / k as f64;
            let add = term / k as f64;
            sum += add;
            if add < 1e-17 * sum {
                break;
            }
        }
        EULER_GAMMA + y.ln() + sum
    } else {
        y.exp() * asymptotic_sum(y) / y
    }
}

// sum_k k!/y^k, truncated at the smallest term
fn asymptotic_sum(y: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let next = term * k as f64 / y;
        if next >= term || next < 1e-17 * sum {
            break;
        }
        term = next;
        sum += term;
    }
    sum
}

/// Real `e^x E1(x)` for any `x != 0`; for `x < 0` this is the principal value
/// `e^x PV∫_x^∞ e^{-t}/t dt = -e^x Ei(-x)`.
pub fn exp_e1_pv(x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("e^x E1(x) undefined at x = {x}")));
    }
    if x > 0.0 {
        return Ok(exp_e1(Complex64::new(x, 0.0))?.re);
    }
    let y = -x;
    if y <= 40.0 {
        Ok(-(-y).exp() * ei_positive(y))
    } else {
        Ok(-asymptotic_sum(y) / y)
    }
}

/// Derivative of `e^x E1(x)`, i.e. `e^x E1(x) - 1/x`.
fn exp_e1_prime(x: f64) -> Result<f64> {
    if x.abs() > 50.0 {
        // sum_{k>=0} (-1)^{k+1} (k+1)! / x^{k+2}
        let mut term = -1.0 / (x * x);
        let mut sum = term;
        for k in 1..200 {
            let next = -term * (k + 1) as f64 / x;
            if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
                break;
            }
            term = next;
            sum += term;
        }
        Ok(sum)
    } else {
        Ok(exp_e1_pv(x)? - 1.0 / x)
    }
}

/// Divided difference `(e^x E1(x) - e^y E1(y)) / (x - y)`, switching to a
/// midpoint Taylor expansion when `x` and `y` nearly coincide.
pub fn exp_e1_divided_difference(x: f64, y: f64) -> Result<f64> {
    let scale = x.abs().max(y.abs());
    let h = x - y;
    if h.abs() < 1e-4 * scale {
        let m = 0.5 * (x + y);
        if m == 0.0 {
            return Err(Error::Domain("divided difference straddles zero".into()));
        }
        // ee''' = ee - 1/m + 1/m^2 - 2/m^3
        let d1 = exp_e1_prime(m)?;
        let d3 = d1 + 1.0 / (m * m) - 2.0 / (m * m * m);
        return Ok(d1 + d3 * h * h / 24.0);
    }
    Ok((exp_e1_pv(x)? - exp_e1_pv(y)?) / h)
}

fn kernel_spec() -> QuadratureSpec {
    QuadratureSpec { abs_tol: 1e-300, rel_tol: 5e-14, max_subdivisions: 4000 }
}

/// `G(x0, b) = PV∫_0^∞ e^{-t} ln|t + x0| / (t + b) dt`, so that
/// `e^b D1(x0 - b, b) = G(x0, b)` for `b > 0`.
///
/// A pole inside the range (`b < 0`) is removed analytically:
/// `G = ∫ e^{-t} (ln|t+x0| - ln|x0-b|)/(t+b) dt + ln|x0-b| e^b E1(b)`.
pub fn log_pole_integral(x0: f64, b: f64) -> Result<f64> {
    if b == 0.0 || !b.is_finite() || !x0.is_finite() {
        return Err(Error::Domain(format!("log-pole integral undefined for x0={x0}, b={b}")));
    }
    let mut points = vec![0.0];
    let cutoff = 750.0;
    if x0 < 0.0 && -x0 < cutoff {
        points.push(-x0);
    }
    let value = if b > 0.0 {
        points.sort_by(f64::total_cmp);
        let f = |t: f64| {
            let s = t + x0;
            if s == 0.0 {
                0.0
            } else {
                (-t).exp() * s.abs().ln() / (t + b)
            }
        };
        kernel_value(integrate_to_infinity(f, &points, &kernel_spec())?)?
    } else {
        let tp = -b;
        let w = tp + x0;
        if w.abs() <= 1e-12 * tp.abs().max(x0.abs()) {
            return Err(Error::NearSingular(format!(
                "pole and logarithmic singularity coincide (x0={x0}, b={b})"
            )));
        }
        let lp = w.abs().ln();
        if tp < cutoff {
            points.push(tp);
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        let f = |t: f64| {
            let h = t - tp;
            let u = h / w;
            let e = (-t).exp();
            if u.abs() < 0.5 {
                let ratio = if u == 0.0 { 1.0 } else { u.ln_1p() / u };
                e * ratio / w
            } else {
                let s = t + x0;
                if s == 0.0 {
                    0.0
                } else {
                    e * (s.abs().ln() - lp) / h
                }
            }
        };
        kernel_value(integrate_to_infinity(f, &points, &kernel_spec())?)? + lp * exp_e1_pv(b)?
    };
    Ok(value)
}

fn kernel_value(r: quadrature::QuadResult) -> Result<f64> {
    if !r.converged && r.abs_err > 1e-11 * r.resabs.max(r.value.abs()) {
        return Err(Error::Quadrature(format!(
            "log-pole integral error estimate {:e} for value {:e}",
            r.abs_err, r.value
        )));
    }
    Ok(r.value)
}

/// `D1(a, b) = ∫_b^∞ e^{-t} ln(t + a) / t dt` for `b > 0`, `a > -b`.
pub fn d1(a: f64, b: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!("D1 needs b > 0, got {b}")));
    }
    if !(a > -b) {
        return Err(Error::Domain(format!("D1 needs a > -b for the logarithm, got a={a}, b={b}")));
    }
    Ok((-b).exp() * log_pole_integral(a + b, b)?)
}

fn check_hdomain(a: f64, b: f64, c: f64) -> Result<()> {
    if !(b > 0.0) || !(c > 0.0) || !(a / c > 0.0) || !a.is_finite() || !b.is_finite() || !c.is_finite() {
        return Err(Error::Domain(format!("H1/H2 need b > 0, c > 0, a/c > 0; got a={a}, b={b}, c={c}")));
    }
    Ok(())
}

/// `H1(a,b,c) = ∫_0^∞ e^{-t} ln(ct + a)/(t + b) dt = e^b[E1(b) ln c + D1(a/c - b, b)]`.
pub fn h1(a: f64, b: f64, c: f64) -> Result<f64> {
    check_hdomain(a, b, c)?;
    h1_pv(a, b, c)
}

/// `H2(a,b,c) = ∫_0^∞ e^{-t} ln(ct + a)/(t + b)^2 dt`. Near `a/c = b` the
/// divided difference in the closed form is replaced by its Taylor expansion.
pub fn h2(a: f64, b: f64, c: f64) -> Result<f64> {
    check_hdomain(a, b, c)?;
    h2_pv(a, b, c)
}

/// `H1` with `ln|ct + a|` and a principal value at `t = -b` when `b < 0`.
pub fn h1_pv(a: f64, b: f64, c: f64) -> Result<f64> {
    if c == 0.0 || !c.is_finite() || !a.is_finite() {
        return Err(Error::Domain(format!("H1 needs finite a and c != 0; got a={a}, c={c}")));
    }
    Ok(c.abs().ln() * exp_e1_pv(b)? + log_pole_integral(a / c, b)?)
}

/// `H2` with `ln|ct + a|`; for `b < 0` the double pole is taken as a Hadamard
/// finite part. Closed form (integration by parts):
/// `ln|c| [1/b - e^b E1(b)] + ln|a/c|/b + (e^b E1(b) - e^x E1(x))/(x - b) - G(x, b)`
/// with `x = a/c`.
pub fn h2_pv(a: f64, b: f64, c: f64) -> Result<f64> {
    if c == 0.0 || !c.is_finite() || !a.is_finite() {
        return Err(Error::Domain(format!("H2 needs finite a and c != 0; got a={a}, c={c}")));
    }
    if b == 0.0 || !b.is_finite() {
        return Err(Error::Domain(format!("H2 needs b != 0, got {b}")));
    }
    let x = a / c;
    let eb = exp_e1_pv(b)?;
    Ok(c.abs().ln() * (1.0 / b - eb) + h2_log_part(x, b, eb)? - log_pole_integral(x, b)?)
}

// ln|x|/b + (e^b E1(b) - e^x E1(x))/(x - b); the ln|x| singularities cancel
// as x -> 0, so small x is summed in combined form.
pub(crate) fn h2_log_part(x: f64, b: f64, eb: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(-(eb + EULER_GAMMA) / b);
    }
    if x.abs() < 1.0 && x.abs() < 0.1 * b.abs() {
        let mut term = 1.0;
        let mut s = 0.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = term / k as f64;
            s += add;
            if add.abs() <= 1e-17 * s.abs() {
                break;
            }
        }
        let lnx = x.abs().ln();
        let log_coeff = (x + b * x.exp_m1()) / (b * (x - b));
        return Ok(lnx * log_coeff + (eb + x.exp() * (EULER_GAMMA + s)) / (x - b));
    }
    Ok(x.abs().ln() / b - exp_e1_divided_difference(b, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use quadrature::integrate_to_infinity;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn quad(f: impl Fn(f64) -> f64, pts: &[f64]) -> f64 {
        let spec = QuadratureSpec { abs_tol: 1e-300, rel_tol: 1e-13, max_subdivisions: 5000 };
        integrate_to_infinity(f, pts, &spec).unwrap().value
    }

    #[test]
    fn e1_values() {
        assert!(rel(e1_real(1.0).unwrap(), 0.219_383_934_395_520_27) < 1e-14);
        assert!(rel(e1_real(0.5).unwrap(), 0.559_773_594_776_160_8) < 1e-14);
        assert!(rel(exp_e1_pv(1.0).unwrap(), 0.596_347_362_323_194_1) < 1e-14);
        let big = exp_e1_pv(1000.0).unwrap();
        let asym = 1e-3 - 1e-6 + 2e-9 - 6e-12;
        assert!(rel(big, asym) < 1e-9);
        assert!(exp_e1_pv(1e300).unwrap() > 0.0);
        assert!(e1(Complex64::new(-1.0, 0.0)).is_err());
        assert!(e1(Complex64::new(0.0, 0.0)).is_err());
        assert_eq!(exp_e1(Complex64::new(2.5, 0.0)).unwrap().im, 0.0);
    }

    #[test]
    fn e1_reflection_and_derivative() {
        for &(re, im) in &[(0.3, 0.7), (2.0, -3.5), (5.0, 1.0), (0.01, 2.0), (9.0, 12.0)] {
            let z = Complex64::new(re, im);
            let a = e1(z.conj()).unwrap();
            let b = e1(z).unwrap().conj();
            assert!((a - b).norm() <= 1e-15 * a.norm());
            let h = 1e-6;
            let fd = (e1(z + h).unwrap() - e1(z - h).unwrap()) / (2.0 * h);
            let exact = -(-z).exp() / z;
            assert!((fd - exact).norm() < 1e-6 * exact.norm());
        }
    }

    #[test]
    fn e1_continuity_at_regime_switch() {
        for x in [SERIES_RADIUS, ASYMPTOTIC_RADIUS] {
            let a = exp_e1(Complex64::new(x * (1.0 - 1e-15), 0.0)).unwrap().re;
            let b = exp_e1(Complex64::new(x * (1.0 + 1e-15), 0.0)).unwrap().re;
            assert!(rel(a, b) < 1e-14, "{x}: {a} {b}");
        }
    }

    #[test]
    fn negative_argument_is_principal_value() {
        // -e^x Ei(-x) at x = -1: Ei(1) = 1.8951178163559368
        assert!(rel(exp_e1_pv(-1.0).unwrap(), -(-1f64).exp() * 1.895_117_816_355_936_8) < 1e-14);
        // series/asymptotic handover
        let a = exp_e1_pv(-40.0).unwrap();
        let b = exp_e1_pv(-40.000001).unwrap();
        assert!(rel(a, b) < 1e-7);
    }

    #[test]
    fn divided_difference_taylor_matches_direct() {
        for &x in &[0.3, 2.0, -3.0, 80.0, -120.0] {
            let y = x * (1.0 + 3e-5);
            let t = exp_e1_divided_difference(x, y).unwrap();
            let y2 = x * (1.0 + 3e-3);
            let d = exp_e1_divided_difference(x, y2).unwrap();
            assert!(rel(t, d) < 1e-2, "{x}: {t} {d}");
            let m = 0.5 * (x + y);
            assert!(rel(t, exp_e1_pv(m).unwrap() - 1.0 / m) < 1e-8);
        }
    }

    #[test]
    fn d1_examples() {
        // int_1^inf e^{-t} ln t / t dt (mpmath, 30 digits)
        assert!(rel(d1(0.0, 1.0).unwrap(), 0.097_843_197_216_670_7) < 1e-12);
        let direct = quad(|t: f64| (-(t + 5.0)).exp() * (t + 6.0).ln() / (t + 5.0), &[0.0]);
        assert!(rel(d1(1.0, 5.0).unwrap(), direct) < 1e-12);
        assert!(d1(0.5, 1.0).unwrap() < d1(0.7, 1.0).unwrap());
        assert!(d1(-2.0, 1.0).is_err());
        assert!(d1(0.0, 0.0).is_err());
    }

    #[test]
    fn h_examples() {
        let v = h1(1.0, 1.0, 1.0).unwrap();
        assert!(rel(v, std::f64::consts::E * d1(0.0, 1.0).unwrap()) < 1e-14);
        assert!(rel(v, 0.265_965_385_032_411) < 1e-12);
        let q = quad(|t: f64| (-t).exp() * (t + 2.0).ln() / ((t + 1.0) * (t + 1.0)), &[0.0]);
        assert!(rel(h2(2.0, 1.0, 1.0).unwrap(), q) < 1e-12);
        assert!(h1(-1.0, 1.0, 1.0).is_err());
        assert!(h2(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn h2_at_coincidence() {
        // a/c = b exactly
        let (a, b, c) = (3.0, 1.5, 2.0);
        let q = quad(|t: f64| (-t).exp() * (c * t + a).ln() / ((t + b) * (t + b)), &[0.0]);
        assert!(rel(h2(a, b, c).unwrap(), q) < 1e-10);
    }

    #[test]
    fn pv_forms_match_quadrature() {
        // b < 0 puts the pole at t = 1.3; c < 0 puts ln|ct + a| singular at t = 0.35
        let (a, b, c) = (0.7, -1.3, -2.0);
        let tp = -b;
        let f = |t: f64| (-t).exp() * (c * t + a).abs().ln() / (t + b);
        let spec = QuadratureSpec { abs_tol: 1e-300, rel_tol: 1e-13, max_subdivisions: 5000 };
        // principal value: fold [0, 2tp] symmetrically about the pole
        let fold = quadrature::integrate_breakpoints(|s: f64| f(tp + s) + f(tp - s), &[0.0, tp - 0.35, tp], &spec)
            .unwrap()
            .value;
        let tail = quad(|u: f64| f(2.0 * tp + u), &[0.0]);
        let v = h1_pv(a, b, c).unwrap();
        assert!(rel(v, fold + tail) < 1e-10, "{v} vs {}", fold + tail);
    }
}
