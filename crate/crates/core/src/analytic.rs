//! Head-of-line blocking probability of one saturated FIFO queue carrying a
//! single access category with homogeneous traffic.
//!
//! A window of `n_s` queued frames is blocking-free only when all `n_s`
//! destinations differ, which happens with probability
//! `p_opt = n_u! / ((n_u - n_s)! * n_u^n_s)`. The blocking probability is
//! `1 - p_opt` when `n_u >= n_s` and zero otherwise.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HolParams {
    pub n_u: u32,
    pub n_s: u32,
}

impl HolParams {
    pub fn new(n_u: u32, n_s: u32) -> Result<Self> {
        if n_u < 1 {
            return Err(Error::config("n_u", "n_u must be ≥ 1"));
        }
        if n_s < 1 {
            return Err(Error::config("n_s", "n_s must be ≥ 1"));
        }
        Ok(HolParams { n_u, n_s })
    }
}

/// `p_opt` as an exact rational, evaluated as the telescoping product
/// `prod_{k=0}^{n_s-1} (n_u - k) / n_u`.
pub fn p_opt_exact(p: HolParams) -> BigRational {
    if p.n_u < p.n_s {
        return BigRational::zero();
    }
    let n_u = BigInt::from(p.n_u);
    (0..p.n_s).fold(BigRational::one(), |acc, k| {
        acc * BigRational::new(BigInt::from(p.n_u - k), n_u.clone())
    })
}

pub fn hol_blocking_probability_exact(p: HolParams) -> BigRational {
    if p.n_u < p.n_s {
        BigRational::zero()
    } else {
        BigRational::one() - p_opt_exact(p)
    }
}

pub fn hol_blocking_probability(p: HolParams) -> f64 {
    hol_blocking_probability_exact(p)
        .to_f64()
        .expect("probability is finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl McEstimate {
    /// |estimate - reference| measured in standard errors. A zero standard
    /// error yields 0 on exact agreement and infinity otherwise.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.estimate - reference).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Fraction of `samples` windows of `n_s` i.i.d. uniform destinations that
/// contain a repeated user.
pub fn hol_blocking_monte_carlo(p: HolParams, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::config("samples", "samples must be ≥ 1"));
    }
    if p.n_u < p.n_s {
        return Err(Error::config("n_s", "Monte Carlo requires n_u ≥ n_s"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut window = Vec::with_capacity(p.n_s as usize);
    let mut blocked = 0u64;
    for _ in 0..samples {
        window.clear();
        let mut repeated = false;
        for _ in 0..p.n_s {
            let d = rng.gen_range(0..p.n_u);
            repeated |= window.contains(&d);
            window.push(d);
        }
        blocked += repeated as u64;
    }
    let estimate = blocked as f64 / samples as f64;
    let std_error = (estimate * (1.0 - estimate) / samples as f64).sqrt();
    Ok(McEstimate {
        estimate,
        std_error,
        samples,
    })
}

/// Blocking probability for `n_u` in `n_s..=n_u_max` at fixed `n_s`.
pub fn hol_curve(n_s: u32, n_u_max: u32) -> Result<Vec<(u32, f64)>> {
    if n_s < 1 {
        return Err(Error::config("n_s", "n_s must be ≥ 1"));
    }
    if n_u_max < n_s {
        return Err(Error::config("n_u_max", "n_u_max must be ≥ n_s"));
    }
    Ok((n_s..=n_u_max)
        .map(|n_u| (n_u, hol_blocking_probability(HolParams { n_u, n_s })))
        .collect())
}
