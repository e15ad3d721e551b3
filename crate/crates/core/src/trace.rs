//! Deterministic replay of small hand-written workloads.
//!
//! Workload files are line oriented:
//!
//! ```text
//! # comment
//! streams=2
//! primary=VI            # optional per-TXOP EDCA winners, then strict priority
//! [fifo.vo]
//! VO11 u1 1; VO21 u2 1
//! [dems.u1.vo]
//! VO11 u1 1
//! ```
//!
//! Each entry is `<label> u<dest> <duration>`. A label starts with the AC of
//! its section (`VO11` in `[fifo.vo]`); a bare AC token is an unnamed frame.
//! `[vo]` is short for `[fifo.vo]`. `streams` defaults to the largest user
//! index seen.

use std::collections::{HashSet, VecDeque};
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::domain::{AccessCategory, Frame, PerAc, UserId};
use crate::engine::Scheduler;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceFrame {
    pub label: String,
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Workload {
    pub n_streams: u32,
    pub n_users: u32,
    /// EDCA winner of the first TXOPs; later TXOPs use strict priority.
    pub primary_script: Vec<AccessCategory>,
    pub fifo: PerAc<Vec<TraceFrame>>,
    /// Virtual queues per user (index 0 is user 1).
    pub dems: Vec<PerAc<Vec<TraceFrame>>>,
}

impl Workload {
    pub fn frame_count(&self, scheduler: Scheduler) -> usize {
        match scheduler {
            Scheduler::Fifo => self.fifo.iter().map(|(_, q)| q.len()).sum(),
            Scheduler::Dems => self
                .dems
                .iter()
                .flat_map(|u| u.iter().map(|(_, q)| q.len()))
                .sum(),
        }
    }
}

enum Section {
    Fifo(AccessCategory),
    Dems(UserId, AccessCategory),
}

fn parse_ac(token: &str, line: usize) -> Result<AccessCategory> {
    token
        .parse()
        .map_err(|_| Error::parse(line, format!("unknown access category `{token}`")))
}

fn parse_section(inner: &str, line: usize) -> Result<Section> {
    let parts: Vec<&str> = inner.split('.').map(str::trim).collect();
    match parts.as_slice() {
        [ac] => Ok(Section::Fifo(parse_ac(ac, line)?)),
        [side, ac] if side.eq_ignore_ascii_case("fifo") => Ok(Section::Fifo(parse_ac(ac, line)?)),
        [side, user, ac] if side.eq_ignore_ascii_case("dems") => {
            Ok(Section::Dems(parse_user(user, line)?, parse_ac(ac, line)?))
        }
        _ => Err(Error::parse(line, format!("unknown section `[{inner}]`"))),
    }
}

fn parse_user(token: &str, line: usize) -> Result<UserId> {
    token
        .strip_prefix(['u', 'U'])
        .and_then(|n| n.parse::<u32>().ok())
        .and_then(UserId::new)
        .ok_or_else(|| Error::parse(line, format!("bad user token `{token}`")))
}

/// Label prefix must name the section's AC; a bare AC token is unnamed.
fn check_label(label: &str, ac: AccessCategory, line: usize) -> Result<Option<String>> {
    if label.len() < 2 || !label.is_char_boundary(2) {
        return Err(Error::parse(line, format!("unknown access category in label `{label}`")));
    }
    let (prefix, rest) = label.split_at(2);
    let label_ac = parse_ac(prefix, line)?;
    if label_ac != ac {
        return Err(Error::parse(
            line,
            format!("{label_ac} frame `{label}` listed in a {ac} queue"),
        ));
    }
    if !rest.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return Err(Error::parse(line, format!("bad label `{label}`")));
    }
    Ok((!rest.is_empty()).then(|| label.to_string()))
}

#[derive(Default)]
struct SideIds {
    next: u64,
    labels: HashSet<String>,
}

impl SideIds {
    fn assign(&mut self, named: Option<String>, ac: AccessCategory, line: usize) -> Result<(u64, String)> {
        let id = self.next;
        self.next += 1;
        let label = match named {
            Some(l) => {
                if !self.labels.insert(l.clone()) {
                    return Err(Error::parse(line, format!("duplicate frame id `{l}`")));
                }
                l
            }
            None => format!("{ac}.{id}"),
        };
        Ok((id, label))
    }
}

pub fn parse_workload(text: &str) -> Result<Workload> {
    let mut streams = None;
    let mut script = Vec::new();
    let mut fifo: PerAc<Vec<TraceFrame>> = PerAc::default();
    let mut dems: Vec<PerAc<Vec<TraceFrame>>> = Vec::new();
    let mut section = None;
    let (mut fifo_ids, mut dems_ids) = (SideIds::default(), SideIds::default());
    let mut max_user = 0u32;

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(inner) = body.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(line, "unterminated section header"))?;
            section = Some(parse_section(inner, line)?);
            continue;
        }
        if let Some((key, value)) = body.split_once('=') {
            match key.trim() {
                "streams" => {
                    let n: u32 = value
                        .trim()
                        .parse()
                        .ok()
                        .filter(|&n| n >= 1)
                        .ok_or_else(|| Error::parse(line, "streams must be a positive integer"))?;
                    streams = Some(n);
                }
                "primary" => {
                    for tok in value.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                        script.push(parse_ac(tok, line)?);
                    }
                }
                other => return Err(Error::parse(line, format!("unknown directive `{other}`"))),
            }
            continue;
        }
        let sec = section
            .as_ref()
            .ok_or_else(|| Error::parse(line, "frame listed before any section header"))?;
        for entry in body.split(';').map(str::trim).filter(|e| !e.is_empty()) {
            let toks: Vec<&str> = entry.split_whitespace().collect();
            let [label, user, duration] = toks.as_slice() else {
                return Err(Error::parse(line, format!("expected `<id> u<dest> <duration>`, got `{entry}`")));
            };
            let dest = parse_user(user, line)?;
            let duration: i64 = duration
                .parse()
                .map_err(|_| Error::parse(line, format!("bad duration `{duration}`")))?;
            if duration < 1 || duration > u32::MAX as i64 {
                return Err(Error::parse(line, format!("duration must be ≥ 1, got {duration}")));
            }
            max_user = max_user.max(dest.index());
            let (ac, ids) = match sec {
                Section::Fifo(ac) => (*ac, &mut fifo_ids),
                Section::Dems(owner, ac) => {
                    if *owner != dest {
                        return Err(Error::parse(
                            line,
                            format!("frame for {dest} in the virtual queue of {owner}"),
                        ));
                    }
                    (*ac, &mut dems_ids)
                }
            };
            let named = check_label(label, ac, line)?;
            let (id, label) = ids.assign(named, ac, line)?;
            let tf = TraceFrame {
                label,
                frame: Frame {
                    id,
                    ac,
                    dest,
                    duration: duration as u32,
                },
            };
            match sec {
                Section::Fifo(ac) => fifo[*ac].push(tf),
                Section::Dems(owner, ac) => {
                    let j = owner.zero_based();
                    if dems.len() <= j {
                        dems.resize_with(j + 1, PerAc::default);
                    }
                    dems[j][*ac].push(tf);
                }
            }
        }
    }
    let n_users = max_user.max(dems.len() as u32);
    dems.resize_with(n_users as usize, PerAc::default);
    Ok(Workload {
        n_streams: streams.unwrap_or(n_users.max(1)),
        n_users,
        primary_script: script,
        fifo,
        dems,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Placement {
    pub label: String,
    pub frame: Frame,
    /// Offset from the TXOP start, in time units.
    pub start: u32,
}

impl Placement {
    pub fn end(&self) -> u32 {
        self.start + self.frame.duration
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Txop {
    pub primary_ac: AccessCategory,
    pub duration: u32,
    /// One lane per spatial stream; placements on a lane are back to back.
    pub streams: Vec<Vec<Placement>>,
}

impl Txop {
    pub fn occupied(&self, lane: usize) -> u32 {
        self.streams[lane].iter().map(|p| p.frame.duration).sum()
    }

    pub fn padding(&self, lane: usize) -> u32 {
        self.duration - self.occupied(lane)
    }

    pub fn frames(&self) -> impl Iterator<Item = &Placement> {
        self.streams.iter().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Timeline {
    pub scheduler: Scheduler,
    pub n_streams: u32,
    pub txops: Vec<Txop>,
}

impl Timeline {
    /// Every placement with its absolute start time, in TXOP then lane order.
    pub fn absolute(&self) -> Vec<(u32, &Placement)> {
        let mut t0 = 0;
        let mut out = Vec::new();
        for txop in &self.txops {
            out.extend(txop.frames().map(|p| (t0 + p.start, p)));
            t0 += txop.duration;
        }
        out
    }

    /// Structural checks: lanes within the TXOP and non-overlapping, and
    /// concurrently active placements addressed to distinct users.
    pub fn check(&self) -> Result<()> {
        for (k, txop) in self.txops.iter().enumerate() {
            if txop.streams.len() != self.n_streams as usize {
                return Err(Error::Consistency(format!("TXOP {} has {} lanes", k + 1, txop.streams.len())));
            }
            for lane in &txop.streams {
                let mut cursor = 0;
                for p in lane {
                    if p.start < cursor || p.end() > txop.duration {
                        return Err(Error::Consistency(format!(
                            "`{}` at {} overlaps or leaves TXOP {}",
                            p.label,
                            p.start,
                            k + 1
                        )));
                    }
                    cursor = p.end();
                }
            }
            let all: Vec<(usize, &Placement)> = txop
                .streams
                .iter()
                .enumerate()
                .flat_map(|(i, l)| l.iter().map(move |p| (i, p)))
                .collect();
            for (x, (li, p)) in all.iter().enumerate() {
                for (lj, q) in &all[x + 1..] {
                    let overlap = p.start < q.end() && q.start < p.end();
                    if li != lj && overlap && p.frame.dest == q.frame.dest {
                        return Err(Error::Consistency(format!(
                            "`{}` and `{}` reach {} at once in TXOP {}",
                            p.label,
                            q.label,
                            p.frame.dest,
                            k + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn replay(workload: &Workload, scheduler: Scheduler) -> Timeline {
    let txops = match scheduler {
        Scheduler::Fifo => replay_fifo(workload),
        Scheduler::Dems => replay_dems(workload),
    };
    Timeline {
        scheduler,
        n_streams: workload.n_streams,
        txops,
    }
}

fn scripted_primary(
    script: &[AccessCategory],
    k: usize,
    available: impl Fn(AccessCategory) -> bool,
) -> Option<AccessCategory> {
    script
        .get(k)
        .copied()
        .filter(|&ac| available(ac))
        .or_else(|| AccessCategory::ALL.into_iter().find(|&ac| available(ac)))
}

fn place(lane: &mut Vec<Placement>, tf: TraceFrame, start: u32) {
    lane.push(Placement {
        label: tf.label,
        frame: tf.frame,
        start,
    });
}

fn replay_fifo(w: &Workload) -> Vec<Txop> {
    let mut queues: PerAc<VecDeque<TraceFrame>> = PerAc::from_fn(|ac| w.fifo[ac].iter().cloned().collect());
    let n = w.n_streams as usize;
    let mut txops = Vec::new();
    while let Some(primary) = scripted_primary(&w.primary_script, txops.len(), |ac| !queues[ac].is_empty()) {
        let limit = queues[primary].front().expect("primary is non-empty").frame.duration;
        let mut streams: Vec<Vec<Placement>> = vec![Vec::new(); n];
        let mut source: Vec<Option<AccessCategory>> = vec![None; n];
        let mut used = 0;

        let order = std::iter::once(primary).chain(AccessCategory::ALL.into_iter().filter(|&a| a != primary));
        'fill: for ac in order {
            while let Some(head) = queues[ac].front() {
                if used == n {
                    break 'fill;
                }
                let dup = streams.iter().flatten().any(|p| p.frame.dest == head.frame.dest);
                if dup || head.frame.duration > limit {
                    break;
                }
                let tf = queues[ac].pop_front().expect("head exists");
                place(&mut streams[used], tf, 0);
                source[used] = Some(ac);
                used += 1;
            }
        }

        // back-to-back packing of each used lane from its own source queue
        let mut open: Vec<bool> = (0..n).map(|i| i < used).collect();
        loop {
            let lane_end = |s: &Vec<Placement>| s.last().map_or(0, Placement::end);
            let Some(i) = (0..n)
                .filter(|&i| open[i] && lane_end(&streams[i]) < limit)
                .min_by_key(|&i| (lane_end(&streams[i]), i))
            else {
                break;
            };
            let start = lane_end(&streams[i]);
            let ac = source[i].expect("used lane has a source");
            let fits = queues[ac].front().is_some_and(|h| {
                let end = start + h.frame.duration;
                end <= limit
                    && !streams.iter().enumerate().any(|(j, lane)| {
                        j != i
                            && lane
                                .iter()
                                .any(|p| p.frame.dest == h.frame.dest && p.start < end && start < p.end())
                    })
            });
            if fits {
                let tf = queues[ac].pop_front().expect("head exists");
                place(&mut streams[i], tf, start);
            } else {
                open[i] = false;
            }
        }
        txops.push(Txop {
            primary_ac: primary,
            duration: limit,
            streams,
        });
    }
    txops
}

fn replay_dems(w: &Workload) -> Vec<Txop> {
    let mut vqs: Vec<PerAc<VecDeque<TraceFrame>>> = w
        .dems
        .iter()
        .map(|u| PerAc::from_fn(|ac| u[ac].iter().cloned().collect()))
        .collect();
    let n = w.n_streams as usize;
    let fitting = |u: &PerAc<VecDeque<TraceFrame>>, room: u32| {
        AccessCategory::ALL
            .into_iter()
            .find(|&ac| u[ac].front().is_some_and(|h| h.frame.duration <= room))
    };
    let mut txops = Vec::new();
    while let Some(primary) = scripted_primary(&w.primary_script, txops.len(), |ac| {
        vqs.iter().any(|u| !u[ac].is_empty())
    }) {
        let mut primary_users: Vec<usize> = (0..vqs.len()).filter(|&j| !vqs[j][primary].is_empty()).collect();
        primary_users.truncate(n);
        let n_primary = primary_users.len();
        let limit = primary_users
            .iter()
            .map(|&j| vqs[j][primary].front().expect("primary user").frame.duration)
            .max()
            .expect("at least one primary user");
        // remaining streams go to users whose best fitting head ranks highest
        let mut others: Vec<(AccessCategory, usize)> = (0..vqs.len())
            .filter(|&j| vqs[j][primary].is_empty())
            .filter_map(|j| fitting(&vqs[j], limit).map(|ac| (ac, j)))
            .collect();
        others.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let selected: Vec<usize> = primary_users
            .into_iter()
            .chain(others.into_iter().map(|(_, j)| j))
            .take(n)
            .collect();

        let mut streams: Vec<Vec<Placement>> = vec![Vec::new(); n];
        for (lane, &j) in selected.iter().enumerate() {
            let mut cursor = 0;
            if lane < n_primary {
                let tf = vqs[j][primary].pop_front().expect("primary user");
                cursor = tf.frame.duration;
                place(&mut streams[lane], tf, 0);
            }
            while let Some(ac) = AccessCategory::ALL
                .into_iter()
                .find(|&ac| vqs[j][ac].front().is_some_and(|h| cursor + h.frame.duration <= limit))
            {
                let tf = vqs[j][ac].pop_front().expect("head exists");
                let start = cursor;
                cursor += tf.frame.duration;
                place(&mut streams[lane], tf, start);
            }
        }
        txops.push(Txop {
            primary_ac: primary,
            duration: limit,
            streams,
        });
    }
    txops
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimelineStats {
    /// Number of transmission periods (TXOPs).
    pub periods: usize,
    /// Sum of TXOP durations, in time units.
    pub airtime: u32,
    /// 1-based TXOP index holding the last frame of each AC; 0 if none.
    pub completion: PerAc<usize>,
    /// Unused stream-units over all lanes of all TXOPs.
    pub padding_units: u32,
    pub frames_per_txop: Vec<usize>,
}

pub fn timeline_stats(t: &Timeline) -> TimelineStats {
    let mut completion = PerAc::splat(0);
    for (k, txop) in t.txops.iter().enumerate() {
        for p in txop.frames() {
            completion[p.frame.ac] = k + 1;
        }
    }
    TimelineStats {
        periods: t.txops.len(),
        airtime: t.txops.iter().map(|x| x.duration).sum(),
        completion,
        padding_units: t
            .txops
            .iter()
            .map(|x| (0..x.streams.len()).map(|l| x.padding(l)).sum::<u32>())
            .sum(),
        frames_per_txop: t.txops.iter().map(|x| x.frames().count()).collect(),
    }
}

impl fmt::Display for TimelineStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "periods={} vo_done={} vi_done={} be_done={} bk_done={} airtime={} padding={} frames={}",
            self.periods,
            self.completion[AccessCategory::Voice],
            self.completion[AccessCategory::Video],
            self.completion[AccessCategory::BestEffort],
            self.completion[AccessCategory::Background],
            self.airtime,
            self.padding_units,
            self.frames_per_txop.iter().sum::<usize>(),
        )
    }
}

/// Text layout: one block per TXOP, one line per stream.
pub fn render(t: &Timeline) -> String {
    let mut out = String::new();
    for (k, txop) in t.txops.iter().enumerate() {
        let _ = writeln!(out, "TXOP {} primary={} duration={}", k + 1, txop.primary_ac, txop.duration);
        for (i, lane) in txop.streams.iter().enumerate() {
            let cells: Vec<String> = lane
                .iter()
                .map(|p| format!("{}->{}@{}+{}", p.label, p.frame.dest, p.start, p.frame.duration))
                .collect();
            let body = if cells.is_empty() { "-".to_string() } else { cells.join(" ") };
            let _ = writeln!(out, "  s{}: {} (padding {})", i + 1, body, txop.padding(i));
        }
    }
    out
}
