//! Decoupled EDCA / DL-MU-MIMO scheduling.
//!
//! Every user owns one virtual FIFO per access category. A per-frame EDCA
//! step moves one head frame per user into that user's hardware queue `Q_j`
//! (VO with probability `alpha`, BE otherwise), and the MU-MIMO step sends
//! the head of each hardware queue. Since each hardware queue belongs to one
//! user, a plan never repeats a destination and no head-of-line blocking
//! across users can occur.

use std::collections::VecDeque;

use rand::Rng;

use crate::domain::{AccessCategory, Frame, FrameQueue, PerAc, TransmissionPlan, UserId};
use crate::error::{Error, Result};
use crate::traffic::{refill_saturated, DestSource, IdSequence};

#[derive(Debug, Clone)]
pub struct DemsState {
    virtual_queues: Vec<PerAc<FrameQueue>>,
    /// Scheduling order, so ids need not be monotone across ACs.
    hardware_queues: Vec<VecDeque<Frame>>,
    counters: PerAc<u64>,
    ids: IdSequence,
}

impl DemsState {
    pub fn new(n_users: u32) -> Self {
        let n = n_users as usize;
        DemsState {
            virtual_queues: vec![PerAc::default(); n],
            hardware_queues: vec![VecDeque::new(); n],
            counters: PerAc::default(),
            ids: IdSequence::default(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.hardware_queues.len()
    }

    pub fn virtual_queue(&self, ac: AccessCategory, user: UserId) -> &FrameQueue {
        &self.virtual_queues[user.zero_based()][ac]
    }

    pub fn hardware_queue(&self, user: UserId) -> &VecDeque<Frame> {
        &self.hardware_queues[user.zero_based()]
    }

    pub fn counters(&self) -> &PerAc<u64> {
        &self.counters
    }

    /// Keeps every VO and BE virtual queue backlogged with `depth` frames.
    pub fn refill(&mut self, depth: usize) -> Result<()> {
        // fixed destinations consume no randomness
        let mut no_rng = rand::rngs::mock::StepRng::new(0, 0);
        for (j, per_ac) in self.virtual_queues.iter_mut().enumerate() {
            let owner = UserId::from_zero_based(j);
            for ac in AccessCategory::SWEEP {
                refill_saturated(
                    &mut per_ac[ac],
                    depth,
                    ac,
                    DestSource::Fixed(owner),
                    &mut no_rng,
                    &mut self.ids,
                )?;
            }
        }
        Ok(())
    }
}

/// Probabilistic per-frame EDCA step: each user with an empty hardware
/// queue receives its VO head with probability `alpha`, else its BE head.
/// If the chosen class is empty the other one is used.
pub fn schedule_edca<R: Rng + ?Sized>(state: &mut DemsState, alpha: f64, rng: &mut R) {
    for (per_ac, hw) in state
        .virtual_queues
        .iter_mut()
        .zip(state.hardware_queues.iter_mut())
    {
        if !hw.is_empty() {
            continue;
        }
        let (first, second) = if rng.gen::<f64>() < alpha {
            (AccessCategory::Voice, AccessCategory::BestEffort)
        } else {
            (AccessCategory::BestEffort, AccessCategory::Voice)
        };
        let frame = per_ac[first].pop_front().or_else(|| per_ac[second].pop_front());
        if let Some(f) = frame {
            hw.push_back(f);
        }
    }
}

/// Head of each non-empty hardware queue, at most `n_streams` of them. When
/// users outnumber streams the starting user rotates with the period.
pub fn plan_mu_transmission(
    state: &DemsState,
    n_streams: u32,
    period_index: u64,
) -> Result<TransmissionPlan> {
    let n = state.n_users();
    if n == 0 {
        return Err(Error::EmptyQueue("no hardware queues".into()));
    }
    let start = (period_index % n as u64) as usize;
    let frames: Vec<_> = (0..n)
        .map(|k| (start + k) % n)
        .filter_map(|j| state.hardware_queues[j].front().copied())
        .take(n_streams as usize)
        .collect();
    let primary_ac = frames
        .iter()
        .map(|f| f.ac)
        .max()
        .ok_or_else(|| Error::EmptyQueue("all hardware queues".into()))?;
    Ok(TransmissionPlan {
        frames,
        primary_ac,
        period_index,
    })
}

pub fn commit(state: &mut DemsState, plan: &TransmissionPlan) -> Result<()> {
    for f in &plan.frames {
        let hw = state
            .hardware_queues
            .get_mut(f.dest.zero_based())
            .ok_or_else(|| Error::Consistency(format!("no hardware queue for {}", f.dest)))?;
        match hw.front() {
            Some(head) if head.id == f.id => {
                hw.pop_front();
                state.counters[f.ac] += 1;
            }
            _ => {
                return Err(Error::Consistency(format!(
                    "planned frame {} is not at the head of Q_{}",
                    f.id,
                    f.dest.index()
                )))
            }
        }
    }
    Ok(())
}
