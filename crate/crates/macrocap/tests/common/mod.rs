//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use macrocap::channel::PowerMatrix;
use macrocap::combinatorics::RealMatrix;
use macrocap::linalg::{lu_det, ComplexMatrix};
use macrocap::montecarlo::{mc_moments, StreamRng};
use macrocap::specfun::quadrature::{integrate_to_infinity, QuadratureSpec};
use num_complex::Complex64;

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Uniform power matrix entries in `[lo, hi)`.
pub fn random_powers(rng: &mut StreamRng, n_r: usize, n_t: usize, lo: f64, hi: f64) -> PowerMatrix {
    let v = (0..n_r * n_t).map(|_| lo + (hi - lo) * rng.uniform()).collect();
    PowerMatrix::new(n_r, n_t, v).unwrap()
}

pub fn random_real(rng: &mut StreamRng, rows: usize, cols: usize) -> RealMatrix {
    RealMatrix::from_fn(rows, cols, |_, _| 0.1 + rng.uniform())
}

/// `I_b` by nested adaptive quadrature of
/// `∫∫ e^{-s(t+θ)} / D(t,θ) · Σ_i P1_i P2_i / (1 + t P2_i + θ P1_i) dθ dt`,
/// `D = Π_i (1 + t P2_i + θ P1_i)`: the θ1-derivative of the joint
/// moment-generating determinant taken by hand.
pub fn i_b_quadrature(p1: &[f64], p2: &[f64], s: f64) -> f64 {
    let spec = QuadratureSpec { abs_tol: 1e-300, rel_tol: 1e-11, max_subdivisions: 2000 };
    let inner = |t: f64| {
        let f = |th: f64| {
            let mut d = 1.0;
            let mut tr = 0.0;
            for i in 0..p1.len() {
                let l = 1.0 + t * p2[i] + th * p1[i];
                d *= l;
                tr += p1[i] * p2[i] / l;
            }
            (-s * (t + th)).exp() * tr / d
        };
        integrate_to_infinity(f, &[0.0, 1.0 / s], &spec).unwrap().value
    };
    integrate_to_infinity(inner, &[0.0, 1.0 / s], &spec).unwrap().value
}

/// One draw of `H` with independent `CN(0, q_ij)` entries.
pub fn draw(q: &RealMatrix, rng: &mut StreamRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(q.rows(), q.cols(), |i, j| {
        let a = (0.5 * q[(i, j)]).sqrt();
        Complex64::new(a * rng.normal(), a * rng.normal())
    })
}

/// MC mean and standard error of `stat(H)`.
pub fn mc_mean(q: &RealMatrix, samples: u64, seed: u64, stat: impl Fn(&ComplexMatrix) -> f64 + Sync) -> (f64, f64) {
    mc_moments(samples, seed, |rng| Ok(stat(&draw(q, rng)))).unwrap()
}

pub fn det_re(m: &ComplexMatrix) -> f64 {
    lu_det(m).unwrap().re
}

/// Permanent by the defining sum over all permutations (Heap's algorithm).
pub fn perm_naive(a: &RealMatrix) -> f64 {
    let n = a.rows();
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let term = |p: &[usize]| (0..n).map(|i| a[(i, p[i])]).product::<f64>();
    let mut total = term(&p);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            total += term(&p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    total
}

/// `|s I + Q^H Q|` for one draw of `Q`.
pub fn gram_det(h: &ComplexMatrix, s: f64) -> f64 {
    let g = h.conj_transpose().matmul(h).unwrap();
    det_re(&ComplexMatrix::identity(g.rows()).scale(s).add(&g).unwrap())
}

/// `|Σ| |s I + H^H Σ^{-1} H|` with `Σ = I + t diag(pk)/s`.
pub fn weighted_gram_det(h: &ComplexMatrix, pk: &[f64], s: f64, t: f64) -> f64 {
    let w: Vec<f64> = pk.iter().map(|&x| 1.0 / (1.0 + t * x / s)).collect();
    let det_sigma: f64 = w.iter().map(|x| 1.0 / x).product();
    let scaled = ComplexMatrix::from_fn(h.rows(), h.cols(), |i, j| h[(i, j)] * w[i]);
    let g = h.conj_transpose().matmul(&scaled).unwrap();
    det_sigma * det_re(&ComplexMatrix::identity(g.rows()).scale(s).add(&g).unwrap())
}
