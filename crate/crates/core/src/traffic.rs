//! Saturated traffic source: destination split across users and lazy queue
//! refill standing in for infinite backlogs.

use rand::Rng;

use crate::domain::{AccessCategory, Frame, FrameQueue, UserId};
use crate::error::{Error, Result};

const WEIGHT_EPS: f64 = 1e-12;

/// Share of the offered load destined to each user (index 0 is user 1).
#[derive(Debug, Clone, PartialEq)]
pub struct BetaDistribution {
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl BetaDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Distribution("no users".into()));
        }
        let mut weights = weights;
        for (i, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() || *w < -WEIGHT_EPS {
                return Err(Error::Distribution(format!(
                    "weight of user {} is {w}, must be ≥ 0",
                    i + 1
                )));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_EPS {
            return Err(Error::Distribution(format!("weights sum to {total}, not 1")));
        }
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(BetaDistribution {
            weights,
            cumulative,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_users(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, user: UserId) -> f64 {
        self.weights[user.zero_based()]
    }
}

/// Legal β interval of the campaign for `n_users` receivers, if β is used.
pub fn beta_range(n_users: u32) -> Option<(f64, f64)> {
    match n_users {
        2 => Some((0.05, 0.5)),
        3 => Some((0.05, 1.0 / 3.0)),
        _ => None,
    }
}

/// Traffic split for the campaign scenarios:
/// one user gets everything; two users get `(β, 1-β)`; three users get
/// `(β, 1/3, 1-(1/3+β))`. Larger groups get `β` for user 1 and an even split
/// of the remainder.
pub fn build_beta_distribution(n_users: u32, beta: f64) -> Result<BetaDistribution> {
    if n_users == 0 {
        return Err(Error::Distribution("no users".into()));
    }
    if n_users > 1 && !(0.0..=1.0).contains(&beta) {
        return Err(Error::Distribution(format!("beta {beta} out of [0,1]")));
    }
    let weights = match n_users {
        1 => vec![1.0],
        2 => vec![beta, 1.0 - beta],
        3 => vec![beta, 1.0 / 3.0, 1.0 - (1.0 / 3.0 + beta)],
        n => {
            let rest = (1.0 - beta) / (n - 1) as f64;
            std::iter::once(beta)
                .chain(std::iter::repeat_n(rest, n as usize - 1))
                .collect()
        }
    };
    let dist = BetaDistribution::new(weights)?;
    if let Some((lo, hi)) = beta_range(n_users) {
        if beta < lo - WEIGHT_EPS || beta > hi + WEIGHT_EPS {
            log::warn!("beta {beta} outside the campaign range [{lo}, {hi}] for {n_users} users");
        }
    }
    Ok(dist)
}

/// Categorical draw of a destination user.
pub fn sample_destination<R: Rng + ?Sized>(dist: &BetaDistribution, rng: &mut R) -> UserId {
    let u: f64 = rng.gen();
    let pos = dist
        .cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or_else(|| {
            // u landed in the rounding gap above the last cumulative weight
            dist.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
        });
    UserId::from_zero_based(pos)
}

/// Where refilled frames are addressed.
#[derive(Debug, Clone, Copy)]
pub enum DestSource<'a> {
    /// Per-AC FIFO: each frame draws its destination.
    Sampled(&'a BetaDistribution),
    /// Per-user virtual queue: the owner.
    Fixed(UserId),
}

/// Hands out monotone frame ids.
#[derive(Debug, Clone, Default)]
pub struct IdSequence(u64);

impl IdSequence {
    pub fn next_id(&mut self) -> u64 {
        let id = self.0;
        self.0 += 1;
        id
    }
}

/// Appends unit-duration frames until the queue holds `target_depth` frames.
pub fn refill_saturated<R: Rng + ?Sized>(
    queue: &mut FrameQueue,
    target_depth: usize,
    ac: AccessCategory,
    source: DestSource<'_>,
    rng: &mut R,
    ids: &mut IdSequence,
) -> Result<()> {
    while queue.len() < target_depth {
        let dest = match source {
            DestSource::Sampled(dist) => sample_destination(dist, rng),
            DestSource::Fixed(user) => user,
        };
        queue.push_back(Frame::unit(ids.next_id(), ac, dest))?;
    }
    Ok(())
}
