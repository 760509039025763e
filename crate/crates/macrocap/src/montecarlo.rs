//! Monte Carlo reference for `E log2|I + H H^H / sigma2|`.
//!
//! Trial `j` draws from its own ChaCha8 stream `(seed, j)`, so results do not
//! depend on how trials are spread over threads. Per-block moments are merged
//! in a fixed pairwise order.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::PowerMatrix;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_logdet_in_place, ComplexMatrix};

/// Counter-based generator for one logical stream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, spare: None }
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * th.sin());
        r * th.cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// bits/s/Hz
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

/// One channel draw with independent `CN(0, P_ik)` entries.
pub fn sample_channel(p: &PowerMatrix, rng: &mut StreamRng) -> ComplexMatrix {
    let amp: Vec<f64> = p.entries().iter().map(|&x| (0.5 * x).sqrt()).collect();
    let n = p.n_t();
    ComplexMatrix::from_fn(p.n_r(), n, |i, k| {
        let a = amp[i * n + k];
        let g1 = rng.normal();
        let g2 = rng.normal();
        Complex64::new(a * g1, a * g2)
    })
}

const BLOCK: u64 = 2048;

#[derive(Debug, Clone, Copy)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Moments { n, mean: a.mean + d * b.n / n, m2: a.m2 + b.m2 + d * d * a.n * b.n / n }
    }
}

fn pairwise(m: &[Moments]) -> Moments {
    match m.len() {
        0 => Moments { n: 0.0, mean: 0.0, m2: 0.0 },
        1 => m[0],
        k => Moments::merge(pairwise(&m[..k / 2]), pairwise(&m[k / 2..])),
    }
}

/// Monte Carlo estimate of `E log2|I + H H^H / sigma2|`, using any thread
/// count of the ambient rayon pool with bit-identical results.
pub fn mc_capacity(p: &PowerMatrix, sigma2: f64, trials: u64, seed: u64) -> Result<McEstimate> {
    sigma_check(sigma2)?;
    let (mean, stderr) = mc_moments(trials, seed, |rng| trial_capacity(p, sigma2, rng))?;
    Ok(McEstimate { mean, stderr, trials, seed })
}

fn sigma_check(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("noise power must be positive, got {sigma2}")));
    }
    Ok(())
}

/// Mean and standard error of an arbitrary per-trial statistic under the same
/// stream and reduction scheme as [`mc_capacity`].
pub fn mc_moments<F>(trials: u64, seed: u64, stat: F) -> Result<(f64, f64)>
where
    F: Fn(&mut StreamRng) -> Result<f64> + Sync,
{
    if trials < 2 {
        return Err(Error::Domain(format!("need at least 2 trials, got {trials}")));
    }
    let blocks = trials.div_ceil(BLOCK);
    let parts: Result<Vec<Moments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(trials);
            let mut mo = Moments { n: 0.0, mean: 0.0, m2: 0.0 };
            for j in lo..hi {
                let mut rng = StreamRng::new(seed, j);
                let x = stat(&mut rng)?;
                mo.n += 1.0;
                let d = x - mo.mean;
                mo.mean += d / mo.n;
                mo.m2 += d * (x - mo.mean);
            }
            Ok(mo)
        })
        .collect();
    let total = pairwise(&parts?);
    let var = total.m2 / (total.n - 1.0);
    Ok((total.mean, (var / total.n).sqrt()))
}

fn trial_capacity(p: &PowerMatrix, sigma2: f64, rng: &mut StreamRng) -> Result<f64> {
    let h = sample_channel(p, rng);
    let (nr, nt) = (p.n_r(), p.n_t());
    // |I + H H^H/s| = |I + H^H H/s|; factor the smaller Gram matrix
    let n = nr.min(nt);
    let mut a = vec![Complex64::new(0.0, 0.0); n * n];
    let inv = 1.0 / sigma2;
    for i in 0..n {
        for j in 0..=i {
            let mut s = Complex64::new(0.0, 0.0);
            if nr <= nt {
                for k in 0..nt {
                    s += h[(i, k)] * h[(j, k)].conj();
                }
            } else {
                for k in 0..nr {
                    s += h[(k, i)].conj() * h[(k, j)];
                }
            }
            a[i * n + j] = s * inv;
        }
        a[i * n + i] += 1.0;
    }
    Ok(cholesky_logdet_in_place(&mut a, n)? / std::f64::consts::LN_2)
}
