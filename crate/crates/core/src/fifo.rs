//! Traditional 802.11ac downlink scheduling: one FIFO per access category,
//! an EDCA winner (the primary AC) per period, and in-order stream filling.
//!
//! Frames cannot be reordered, so a scan stops at the first frame whose
//! destination is already served in this period. That stop is head-of-line
//! blocking. Streams left over after the primary scan are offered to the
//! other ACs (TXOP sharing), under the same stop rule and never longer than
//! the primary head frame.

use rand::Rng;

use crate::domain::{AccessCategory, FrameQueue, PerAc, TransmissionPlan};
use crate::error::{Error, Result};
use crate::traffic::{refill_saturated, BetaDistribution, DestSource, IdSequence};

#[derive(Debug, Clone, Default)]
pub struct FifoState {
    queues: PerAc<FrameQueue>,
    counters: PerAc<u64>,
    ids: IdSequence,
}

impl FifoState {
    pub fn new() -> Self {
        Self::default()
    }

    /// State with preset queue contents; ids of later refills continue
    /// after the largest preset id.
    pub fn with_queues(queues: PerAc<FrameQueue>) -> Result<Self> {
        let mut max_id = None::<u64>;
        for (ac, q) in queues.iter() {
            if let Some(f) = q.iter().find(|f| f.ac != ac) {
                return Err(Error::Consistency(format!(
                    "frame {} of {} placed in {} queue",
                    f.id, f.ac, ac
                )));
            }
            max_id = max_id.max(q.iter().map(|f| f.id).max());
        }
        let mut ids = IdSequence::default();
        if let Some(m) = max_id {
            while ids.next_id() < m {}
        }
        Ok(FifoState {
            queues,
            counters: PerAc::default(),
            ids,
        })
    }

    pub fn queue(&self, ac: AccessCategory) -> &FrameQueue {
        &self.queues[ac]
    }

    /// Frames transmitted so far, per AC.
    pub fn counters(&self) -> &PerAc<u64> {
        &self.counters
    }

    /// Tops the VO and BE queues up to `depth` frames.
    pub fn refill<R: Rng + ?Sized>(
        &mut self,
        dist: &BetaDistribution,
        depth: usize,
        rng: &mut R,
    ) -> Result<()> {
        for ac in AccessCategory::SWEEP {
            refill_saturated(
                &mut self.queues[ac],
                depth,
                ac,
                DestSource::Sampled(dist),
                rng,
                &mut self.ids,
            )?;
        }
        Ok(())
    }
}

/// EDCA abstraction: VO wins the channel with probability `alpha`, BE
/// otherwise.
pub fn select_primary_ac<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> AccessCategory {
    if rng.gen::<f64>() < alpha {
        AccessCategory::Voice
    } else {
        AccessCategory::BestEffort
    }
}

pub fn plan_mu_transmission(
    state: &FifoState,
    primary: AccessCategory,
    n_streams: u32,
    period_index: u64,
) -> Result<TransmissionPlan> {
    let head = state.queues[primary]
        .front()
        .ok_or_else(|| Error::EmptyQueue(format!("primary {primary} queue")))?;
    let limit = head.duration;
    let order = std::iter::once(primary).chain(AccessCategory::ALL.into_iter().filter(|&ac| ac != primary));

    let mut frames = Vec::with_capacity(n_streams as usize);
    'scan: for ac in order {
        for f in state.queues[ac].iter() {
            if frames.len() >= n_streams as usize {
                break 'scan;
            }
            if f.duration > limit || frames.iter().any(|s: &crate::Frame| s.dest == f.dest) {
                break;
            }
            frames.push(*f);
        }
    }
    Ok(TransmissionPlan {
        frames,
        primary_ac: primary,
        period_index,
    })
}

/// Removes the planned frames, which must sit at the queue heads in plan
/// order, and credits the per-AC counters.
pub fn commit(state: &mut FifoState, plan: &TransmissionPlan) -> Result<()> {
    for f in &plan.frames {
        let q = &mut state.queues[f.ac];
        match q.front() {
            Some(head) if head.id == f.id => {
                q.pop_front();
                state.counters[f.ac] += 1;
            }
            Some(head) => {
                return Err(Error::Consistency(format!(
                    "planned {} frame {} but queue head is {}",
                    f.ac, f.id, head.id
                )))
            }
            None => {
                return Err(Error::Consistency(format!(
                    "planned {} frame {} from an empty queue",
                    f.ac, f.id
                )))
            }
        }
    }
    Ok(())
}
