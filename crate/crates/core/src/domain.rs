//! Vocabulary shared by the schedulers, the engine and the trace replayer.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traffic;

/// EDCA access category.
///
/// `Ord` follows channel-access priority: a greater value is served first,
/// so `VO > VI > BE > BK`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessCategory {
    #[serde(rename = "VO")]
    Voice,
    #[serde(rename = "VI")]
    Video,
    #[serde(rename = "BE")]
    BestEffort,
    #[serde(rename = "BK")]
    Background,
}

impl AccessCategory {
    /// All categories, highest priority first.
    pub const ALL: [AccessCategory; 4] = [
        AccessCategory::Voice,
        AccessCategory::Video,
        AccessCategory::BestEffort,
        AccessCategory::Background,
    ];

    /// The two categories exercised by the saturated campaign.
    pub const SWEEP: [AccessCategory; 2] = [AccessCategory::Voice, AccessCategory::BestEffort];

    fn rank(self) -> u8 {
        match self {
            AccessCategory::Voice => 3,
            AccessCategory::Video => 2,
            AccessCategory::BestEffort => 1,
            AccessCategory::Background => 0,
        }
    }

    /// Slot in a [`PerAc`] table (0 = VO … 3 = BK).
    pub fn slot(self) -> usize {
        3 - self.rank() as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AccessCategory::Voice => "VO",
            AccessCategory::Video => "VI",
            AccessCategory::BestEffort => "BE",
            AccessCategory::Background => "BK",
        }
    }
}

impl PartialOrd for AccessCategory {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AccessCategory {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl fmt::Display for AccessCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AccessCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "VO" => Ok(AccessCategory::Voice),
            "VI" => Ok(AccessCategory::Video),
            "BE" => Ok(AccessCategory::BestEffort),
            "BK" => Ok(AccessCategory::Background),
            _ => Err(Error::Unknown {
                kind: "access category",
                value: s.to_string(),
            }),
        }
    }
}

/// Compares two categories by channel-access priority. `Greater` means `a`
/// is served before `b`.
pub fn ac_priority(a: AccessCategory, b: AccessCategory) -> Ordering {
    a.cmp(&b)
}

/// One value per access category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerAc<T>(pub [T; 4]);

impl<T: Copy> PerAc<T> {
    pub fn splat(v: T) -> Self {
        PerAc([v; 4])
    }
}

impl<T> PerAc<T> {
    pub fn from_fn(mut f: impl FnMut(AccessCategory) -> T) -> Self {
        PerAc(AccessCategory::ALL.map(&mut f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (AccessCategory, &T)> {
        AccessCategory::ALL.into_iter().zip(self.0.iter())
    }
}

impl<T> Index<AccessCategory> for PerAc<T> {
    type Output = T;

    fn index(&self, ac: AccessCategory) -> &T {
        &self.0[ac.slot()]
    }
}

impl<T> IndexMut<AccessCategory> for PerAc<T> {
    fn index_mut(&mut self, ac: AccessCategory) -> &mut T {
        &mut self.0[ac.slot()]
    }
}

/// Receiving station, numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(u32);

impl UserId {
    pub fn new(index: u32) -> Option<Self> {
        (index >= 1).then_some(UserId(index))
    }

    /// User for a zero-based position, e.g. in a weight vector.
    pub fn from_zero_based(pos: usize) -> Self {
        UserId(pos as u32 + 1)
    }

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn zero_based(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.0)
    }
}

/// A MAC frame. `duration` is counted in transmission periods (l/r).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frame {
    pub id: u64,
    pub ac: AccessCategory,
    pub dest: UserId,
    pub duration: u32,
}

impl Frame {
    pub fn unit(id: u64, ac: AccessCategory, dest: UserId) -> Self {
        Frame {
            id,
            ac,
            dest,
            duration: 1,
        }
    }
}

/// FIFO of frames with strictly increasing ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameQueue {
    frames: VecDeque<Frame>,
    last_id: Option<u64>,
}

impl FrameQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_back(&mut self, frame: Frame) -> Result<()> {
        if let Some(last) = self.last_id {
            if frame.id <= last {
                return Err(Error::Consistency(format!(
                    "frame id {} enqueued after id {}",
                    frame.id, last
                )));
            }
        }
        if frame.duration == 0 {
            return Err(Error::Consistency(format!("frame {} has zero duration", frame.id)));
        }
        self.last_id = Some(frame.id);
        self.frames.push_back(frame);
        Ok(())
    }

    pub fn front(&self) -> Option<&Frame> {
        self.frames.front()
    }

    pub fn pop_front(&mut self) -> Option<Frame> {
        self.frames.pop_front()
    }

    pub fn get(&self, pos: usize) -> Option<&Frame> {
        self.frames.get(pos)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Frame> {
        self.frames.iter()
    }
}

/// Parameters of one simulation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_users: u32,
    pub n_streams: u32,
    pub alpha: f64,
    pub beta: f64,
    pub periods: u32,
    pub runs: u32,
    pub master_seed: u64,
}

pub const DEFAULT_PERIODS: u32 = 500;
pub const DEFAULT_RUNS: u32 = 15;
pub const AP_ANTENNAS: u32 = 3;
pub const MAX_USERS: u32 = 8;

impl ScenarioConfig {
    /// Campaign defaults for `n_users` receivers: three AP antennas,
    /// 500 periods, 15 runs, uniform traffic split.
    pub fn new(n_users: u32) -> Self {
        let beta = match n_users {
            0 | 1 => 1.0,
            n => 1.0 / n as f64,
        };
        ScenarioConfig {
            n_users,
            n_streams: AP_ANTENNAS.min(n_users).max(1),
            alpha: 1.0,
            beta,
            periods: DEFAULT_PERIODS,
            runs: DEFAULT_RUNS,
            master_seed: 0,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_streams(mut self, n_streams: u32) -> Self {
        self.n_streams = n_streams;
        self
    }

    pub fn with_periods(mut self, periods: u32) -> Self {
        self.periods = periods;
        self
    }

    pub fn with_runs(mut self, runs: u32) -> Self {
        self.runs = runs;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }
}

pub fn validate_config(cfg: ScenarioConfig) -> Result<ScenarioConfig> {
    if !(1..=MAX_USERS).contains(&cfg.n_users) {
        return Err(Error::config(
            "n_users",
            format!("n_users must be in [1, {MAX_USERS}]"),
        ));
    }
    if cfg.n_streams < 1 {
        return Err(Error::config("n_streams", "n_streams must be ≥ 1"));
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::config("alpha", "alpha out of [0,1]"));
    }
    if !(0.0..=1.0).contains(&cfg.beta) {
        return Err(Error::config("beta", "beta out of [0,1]"));
    }
    if let Err(e) = traffic::build_beta_distribution(cfg.n_users, cfg.beta) {
        return Err(Error::config("beta", e.to_string()));
    }
    if cfg.periods < 1 {
        return Err(Error::config("periods", "periods must be ≥ 1"));
    }
    if cfg.runs < 1 {
        return Err(Error::config("runs", "runs must be ≥ 1"));
    }
    Ok(cfg)
}

/// Frames sent together in one DL-MU-MIMO transmission period, in stream
/// assignment order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionPlan {
    pub frames: Vec<Frame>,
    pub primary_ac: AccessCategory,
    pub period_index: u64,
}

impl TransmissionPlan {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn count(&self, ac: AccessCategory) -> usize {
        self.frames.iter().filter(|f| f.ac == ac).count()
    }

    /// Checks stream budget and destination distinctness.
    pub fn check(&self, n_streams: u32) -> Result<()> {
        if self.frames.len() > n_streams as usize {
            return Err(Error::Consistency(format!(
                "plan carries {} frames on {} streams",
                self.frames.len(),
                n_streams
            )));
        }
        for (i, a) in self.frames.iter().enumerate() {
            if self.frames[..i].iter().any(|b| b.dest == a.dest) {
                return Err(Error::Consistency(format!(
                    "plan sends two frames to {}",
                    a.dest
                )));
            }
        }
        Ok(())
    }
}
