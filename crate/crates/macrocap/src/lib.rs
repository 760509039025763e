//! Ergodic sum capacity of macrodiversity MIMO multiple-access channels.
//!
//! Every engine consumes a [`channel::PowerMatrix`] of average link powers
//! `P_ik = E|H_ik|^2` and a noise power `sigma2`:
//!
//! * [`capacity_exact`] — closed form for two single-antenna sources,
//! * [`capacity_approx`] — permanent/polynomial approximation for any `N <= n_R`,
//! * [`capacity_bounds`] — Jensen upper bound and its one-term asymptotes,
//! * [`montecarlo`] — direct simulation of `E log2|I + H H^H / sigma2|`.

pub mod capacity_approx;
pub mod capacity_bounds;
pub mod capacity_exact;
pub mod channel;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod specfun;

pub use error::{Error, Result};
