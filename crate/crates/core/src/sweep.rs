//! The (α, β) campaign: grids per scenario, replications at every cell for
//! both schedulers, and CSV/JSON result tables.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{AccessCategory, PerAc, ScenarioConfig, DEFAULT_PERIODS, DEFAULT_RUNS};
use crate::engine::{run_replications_at, CounterStats, Scheduler, RNG_NAME};
use crate::error::{Error, Result};
use crate::metrics::{
    avg_change_over_alpha, avg_change_over_beta, avg_over_alpha, avg_over_beta, even_axis,
    throughput_change, AvgChange, Change, MetricGrid,
};

pub const ALPHA_RANGE: (f64, f64) = (0.5, 1.0);
pub const DEFAULT_GRID: usize = 25;
/// Worker-count override for sweeps; unset means all available cores.
pub const WORKERS_ENV: &str = "DEMSIM_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Scenario {
    #[serde(rename = "1u")]
    OneUser,
    #[serde(rename = "2u")]
    TwoUsers,
    #[serde(rename = "3u")]
    ThreeUsers,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::OneUser, Scenario::TwoUsers, Scenario::ThreeUsers];

    pub fn n_users(self) -> u32 {
        match self {
            Scenario::OneUser => 1,
            Scenario::TwoUsers => 2,
            Scenario::ThreeUsers => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::OneUser => "1u",
            Scenario::TwoUsers => "2u",
            Scenario::ThreeUsers => "3u",
        }
    }

    pub fn beta_range(self) -> (f64, f64) {
        match self {
            Scenario::OneUser => (1.0, 1.0),
            Scenario::TwoUsers => (0.05, 0.5),
            Scenario::ThreeUsers => (0.05, 1.0 / 3.0),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1u" | "1" => Ok(Scenario::OneUser),
            "2u" | "2" => Ok(Scenario::TwoUsers),
            "3u" | "3" => Ok(Scenario::ThreeUsers),
            _ => Err(Error::Unknown {
                kind: "scenario",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridAxes {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Evenly spaced inclusive axes. The single-user scenario has the one-point
/// β axis `[1.0]` and ignores `n_beta`.
pub fn build_grid(scenario: Scenario, n_alpha: usize, n_beta: usize) -> Result<GridAxes> {
    if n_alpha < 2 {
        return Err(Error::config("n_alpha", "grid needs at least 2 alpha points"));
    }
    let beta = match scenario {
        Scenario::OneUser => vec![1.0],
        _ => {
            if n_beta < 2 {
                return Err(Error::config("n_beta", "grid needs at least 2 beta points"));
            }
            let (lo, hi) = scenario.beta_range();
            even_axis(lo, hi, n_beta)
        }
    };
    Ok(GridAxes {
        alpha: even_axis(ALPHA_RANGE.0, ALPHA_RANGE.1, n_alpha),
        beta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub scenario: Scenario,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub periods: u32,
    pub runs: u32,
    pub master_seed: u64,
}

impl SweepParams {
    /// Default campaign: 25x25 grid, 500 periods, 15 runs.
    pub fn new(scenario: Scenario, master_seed: u64) -> Self {
        SweepParams {
            scenario,
            n_alpha: DEFAULT_GRID,
            n_beta: DEFAULT_GRID,
            periods: DEFAULT_PERIODS,
            runs: DEFAULT_RUNS,
            master_seed,
        }
    }
}

/// Metadata carried in every emitted table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub scenario: String,
    pub master_seed: u64,
    pub rng: String,
    pub grid: String,
    pub periods: u32,
    pub runs: u32,
    pub version: String,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "scenario={} master_seed={} rng={} grid={} periods={} runs={} version={}",
            self.scenario, self.master_seed, self.rng, self.grid, self.periods, self.runs, self.version
        )
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Provenance {
            scenario: String::new(),
            master_seed: 0,
            rng: String::new(),
            grid: String::new(),
            periods: 0,
            runs: 0,
            version: String::new(),
        };
        let mut seen = 0u8;
        for token in s.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::Table(format!("bad provenance token `{token}`")))?;
            let num = |v: &str| v.parse().map_err(|_| Error::Table(format!("bad value for {k}: `{v}`")));
            match k {
                "scenario" => p.scenario = v.to_string(),
                "master_seed" => p.master_seed = num(v)?,
                "rng" => p.rng = v.to_string(),
                "grid" => p.grid = v.to_string(),
                "periods" => p.periods = num(v)? as u32,
                "runs" => p.runs = num(v)? as u32,
                "version" => p.version = v.to_string(),
                _ => continue,
            }
            seen += 1;
        }
        if seen < 7 {
            return Err(Error::Table("incomplete provenance line".into()));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub scenario: Scenario,
    pub axes: GridAxes,
    /// Indexed by scheduler (FIFO, DEMS), then `alpha_index * n_beta + beta_index`.
    stats: [Vec<CounterStats>; 2],
    pub provenance: Provenance,
}

fn sched_slot(s: Scheduler) -> usize {
    match s {
        Scheduler::Fifo => 0,
        Scheduler::Dems => 1,
    }
}

/// Worker count from the environment, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

pub fn run_sweep(params: SweepParams) -> Result<SweepResult> {
    run_sweep_with_workers(params, workers_from_env())
}

/// Runs the campaign on a dedicated pool of `workers` threads (all cores when
/// `None`). Results do not depend on the worker count.
pub fn run_sweep_with_workers(params: SweepParams, workers: Option<usize>) -> Result<SweepResult> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    pool.install(|| sweep_in_pool(params))
}

fn sweep_in_pool(params: SweepParams) -> Result<SweepResult> {
    let axes = build_grid(params.scenario, params.n_alpha, params.n_beta)?;
    let (na, nb) = (axes.alpha.len(), axes.beta.len());
    let base = ScenarioConfig::new(params.scenario.n_users())
        .with_periods(params.periods)
        .with_runs(params.runs)
        .with_seed(params.master_seed);

    let cells: Vec<(Scheduler, usize, usize)> = Scheduler::BOTH
        .iter()
        .flat_map(|&s| (0..na).flat_map(move |a| (0..nb).map(move |b| (s, a, b))))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(s, a, b)| {
            let cfg = base.clone().with_alpha(axes.alpha[a]).with_beta(axes.beta[b]);
            run_replications_at(&cfg, s, a as u64, b as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut it = results.into_iter();
    let fifo: Vec<_> = it.by_ref().take(na * nb).collect();
    let dems: Vec<_> = it.collect();

    let provenance = Provenance {
        scenario: params.scenario.to_string(),
        master_seed: params.master_seed,
        rng: RNG_NAME.to_string(),
        grid: format!("{na}x{nb}"),
        periods: params.periods,
        runs: params.runs,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(SweepResult {
        scenario: params.scenario,
        axes,
        stats: [fifo, dems],
        provenance,
    })
}

impl SweepResult {
    pub fn n_alpha(&self) -> usize {
        self.axes.alpha.len()
    }

    pub fn n_beta(&self) -> usize {
        self.axes.beta.len()
    }

    pub fn stats(&self, scheduler: Scheduler, alpha_index: usize, beta_index: usize) -> &CounterStats {
        &self.stats[sched_slot(scheduler)][alpha_index * self.n_beta() + beta_index]
    }

    /// Grid of mean normalized throughput for one scheduler.
    pub fn mean_grid(&self, scheduler: Scheduler) -> MetricGrid {
        let mut g = MetricGrid::new(self.axes.alpha.clone(), self.axes.beta.clone())
            .expect("sweep axes are strictly increasing");
        for a in 0..self.n_alpha() {
            for b in 0..self.n_beta() {
                g.set(a, b, self.stats(scheduler, a, b).mean_c)
                    .expect("index within grid");
            }
        }
        g
    }

    pub fn t_change(&self, ac: AccessCategory, alpha_index: usize, beta_index: usize) -> Change {
        throughput_change(
            self.stats(Scheduler::Dems, alpha_index, beta_index).mean_c[ac],
            self.stats(Scheduler::Fifo, alpha_index, beta_index).mean_c[ac],
        )
        .expect("means are non-negative")
    }

    /// `T_avg[ac](β_j)` for each β, averaging over α.
    pub fn t_avg_vs_beta(&self, scheduler: Scheduler, ac: AccessCategory) -> Vec<f64> {
        let g = self.mean_grid(scheduler);
        (0..self.n_beta())
            .map(|b| avg_over_alpha(&g, ac, b).expect("complete grid"))
            .collect()
    }

    /// `T_avg[ac](α_j)` for each α, averaging over β.
    pub fn t_avg_vs_alpha(&self, scheduler: Scheduler, ac: AccessCategory) -> Vec<f64> {
        let g = self.mean_grid(scheduler);
        (0..self.n_alpha())
            .map(|a| avg_over_beta(&g, ac, a).expect("complete grid"))
            .collect()
    }

    pub fn t_change_vs_beta(&self, ac: AccessCategory) -> Vec<AvgChange> {
        let (d, f) = (self.mean_grid(Scheduler::Dems), self.mean_grid(Scheduler::Fifo));
        (0..self.n_beta())
            .map(|b| avg_change_over_alpha(&d, &f, ac, b).expect("complete grids"))
            .collect()
    }

    pub fn t_change_vs_alpha(&self, ac: AccessCategory) -> Vec<AvgChange> {
        let (d, f) = (self.mean_grid(Scheduler::Dems), self.mean_grid(Scheduler::Fifo));
        (0..self.n_alpha())
            .map(|a| avg_change_over_beta(&d, &f, ac, a).expect("complete grids"))
            .collect()
    }

    pub fn table(&self, id: TableId) -> Table {
        let sc = self.scenario.as_str().to_string();
        let mut rows = Vec::new();
        match id {
            TableId::Counters => {
                for s in Scheduler::BOTH {
                    for a in 0..self.n_alpha() {
                        for b in 0..self.n_beta() {
                            let st = self.stats(s, a, b);
                            for ac in AccessCategory::SWEEP {
                                rows.push(vec![
                                    sc.clone(),
                                    s.to_string(),
                                    fmt_num(self.axes.alpha[a]),
                                    fmt_num(self.axes.beta[b]),
                                    ac.to_string(),
                                    fmt_num(st.mean_c[ac]),
                                    fmt_num(st.stddev_c[ac]),
                                    fmt_num(st.ci95_c[ac]),
                                ]);
                            }
                        }
                    }
                }
            }
            TableId::TChange => {
                for ac in AccessCategory::SWEEP {
                    for a in 0..self.n_alpha() {
                        for b in 0..self.n_beta() {
                            rows.push(vec![
                                sc.clone(),
                                ac.to_string(),
                                fmt_num(self.axes.alpha[a]),
                                fmt_num(self.axes.beta[b]),
                                fmt_change(self.t_change(ac, a, b)),
                            ]);
                        }
                    }
                }
            }
            TableId::TAvgVsBeta | TableId::TAvgVsAlpha => {
                let vs_beta = id == TableId::TAvgVsBeta;
                let axis = if vs_beta { &self.axes.beta } else { &self.axes.alpha };
                for s in Scheduler::BOTH {
                    for ac in AccessCategory::SWEEP {
                        let values = if vs_beta {
                            self.t_avg_vs_beta(s, ac)
                        } else {
                            self.t_avg_vs_alpha(s, ac)
                        };
                        for (x, v) in axis.iter().zip(values) {
                            rows.push(vec![sc.clone(), s.to_string(), ac.to_string(), fmt_num(*x), fmt_num(v)]);
                        }
                    }
                }
            }
            TableId::TChangeVsBeta | TableId::TChangeVsAlpha => {
                let vs_beta = id == TableId::TChangeVsBeta;
                let axis = if vs_beta { &self.axes.beta } else { &self.axes.alpha };
                for ac in AccessCategory::SWEEP {
                    let values = if vs_beta {
                        self.t_change_vs_beta(ac)
                    } else {
                        self.t_change_vs_alpha(ac)
                    };
                    for (x, v) in axis.iter().zip(values) {
                        rows.push(vec![
                            sc.clone(),
                            ac.to_string(),
                            fmt_num(*x),
                            v.percent.map_or_else(|| "nan".to_string(), fmt_num),
                            v.excluded.to_string(),
                        ]);
                    }
                }
            }
        }
        Table {
            id,
            provenance: self.provenance.clone(),
            columns: id.columns().iter().map(|c| c.to_string()).collect(),
            rows,
        }
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        let s = format!("{v:.4}");
        // avoid a "-0.0000" token for tiny negative values
        if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
            s.trim_start_matches('-').to_string()
        } else {
            s
        }
    }
}

fn fmt_change(c: Change) -> String {
    match c {
        Change::Finite(v) => fmt_num(v),
        Change::Unbounded => "inf".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableId {
    Counters,
    TChange,
    TAvgVsBeta,
    TChangeVsBeta,
    TAvgVsAlpha,
    TChangeVsAlpha,
}

impl TableId {
    pub const ALL: [TableId; 6] = [
        TableId::Counters,
        TableId::TChange,
        TableId::TAvgVsBeta,
        TableId::TChangeVsBeta,
        TableId::TAvgVsAlpha,
        TableId::TChangeVsAlpha,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TableId::Counters => "counters",
            TableId::TChange => "t_change",
            TableId::TAvgVsBeta => "t_avg_vs_beta",
            TableId::TChangeVsBeta => "t_change_vs_beta",
            TableId::TAvgVsAlpha => "t_avg_vs_alpha",
            TableId::TChangeVsAlpha => "t_change_vs_alpha",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            TableId::Counters => &["scenario", "scheduler", "alpha", "beta", "ac", "mean", "stddev", "ci95"],
            TableId::TChange => &["scenario", "ac", "alpha", "beta", "percent"],
            TableId::TAvgVsBeta => &["scenario", "scheduler", "ac", "beta", "value"],
            TableId::TChangeVsBeta => &["scenario", "ac", "beta", "percent", "excluded"],
            TableId::TAvgVsAlpha => &["scenario", "scheduler", "ac", "alpha", "value"],
            TableId::TChangeVsAlpha => &["scenario", "ac", "alpha", "percent", "excluded"],
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TableId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "table",
                value: s.to_string(),
            })
    }
}

/// A result table with every cell already formatted for emission.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub id: TableId,
    pub provenance: Provenance,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric view of one column; `inf`/`nan` tokens parse as such.
    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .column_index(name)
            .ok_or_else(|| Error::Table(format!("no column `{name}`")))?;
        self.rows
            .iter()
            .map(|r| {
                r[k].parse::<f64>()
                    .map_err(|_| Error::Table(format!("non-numeric `{}` in {name}", r[k])))
            })
            .collect()
    }
}

/// CSV text: one `# table=<id> <provenance>` comment line, a header, then rows.
pub fn emit_csv(table: &Table) -> String {
    let mut out = format!("# table={} {}\n", table.id, table.provenance);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns).expect("in-memory write");
    for r in &table.rows {
        w.write_record(r).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields"));
    out
}

pub fn parse_csv(text: &str) -> Result<Table> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let meta = first
        .strip_prefix('#')
        .ok_or_else(|| Error::Table("missing provenance comment line".into()))?;
    let (table_tok, rest) = meta.trim_start().split_once(' ').unwrap_or((meta.trim(), ""));
    let id: TableId = table_tok
        .strip_prefix("table=")
        .ok_or_else(|| Error::Table("missing table id".into()))?
        .parse()?;
    let provenance: Provenance = rest.parse()?;

    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let columns: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Table(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if columns != id.columns() {
        return Err(Error::Table(format!("unexpected header for {id}: {columns:?}")));
    }
    let rows = rdr
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| Error::Table(e.to_string()))
        })
        .collect::<Result<Vec<Vec<String>>>>()?;
    Ok(Table {
        id,
        provenance,
        columns,
        rows,
    })
}

/// JSON mirror of a table, with the same field names as the CSV header.
pub fn emit_json(table: &Table) -> String {
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|r| {
            let obj: serde_json::Map<_, _> = table
                .columns
                .iter()
                .zip(r)
                .map(|(c, v)| {
                    let val = match v.parse::<f64>() {
                        Ok(x) if x.is_finite() => serde_json::json!(x),
                        _ => serde_json::json!(v),
                    };
                    (c.clone(), val)
                })
                .collect();
            serde_json::Value::Object(obj)
        })
        .collect();
    let doc = serde_json::json!({
        "table": table.id,
        "provenance": table.provenance,
        "rows": rows,
    });
    serde_json::to_string_pretty(&doc).expect("json values")
}

/// Per-AC means from a counters table, keyed by (scheduler, alpha, beta).
pub fn counters_lookup(table: &Table, scheduler: Scheduler, alpha: &str, beta: &str) -> Option<PerAc<f64>> {
    if table.id != TableId::Counters {
        return None;
    }
    let mut out = PerAc::splat(0.0);
    let mut found = false;
    for r in &table.rows {
        if r[1] == scheduler.as_str() && r[2] == alpha && r[3] == beta {
            let ac: AccessCategory = r[4].parse().ok()?;
            out[ac] = r[5].parse().ok()?;
            found = true;
        }
    }
    found.then_some(out)
}
