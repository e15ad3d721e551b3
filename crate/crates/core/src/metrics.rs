//! Throughput-change and marginal-average metrics over (α, β) counter grids.

use serde::Serialize;

use crate::domain::{AccessCategory, PerAc};
use crate::error::{Error, Result};

/// `n` evenly spaced points from `min` to `max` inclusive:
/// `min + k (max - min) / (n - 1)` for `k = 0..n`. A single point is `min`.
pub fn even_axis(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..n)
            .map(|k| min + k as f64 * (max - min) / (n - 1) as f64)
            .collect(),
    }
}

/// Per-AC values on an (α, β) grid, stored α-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGrid {
    alpha_axis: Vec<f64>,
    beta_axis: Vec<f64>,
    cells: Vec<Option<PerAc<f64>>>,
}

impl MetricGrid {
    pub fn new(alpha_axis: Vec<f64>, beta_axis: Vec<f64>) -> Result<Self> {
        for (name, axis) in [("alpha", &alpha_axis), ("beta", &beta_axis)] {
            if axis.is_empty() {
                return Err(Error::IncompleteGrid(format!("{name} axis is empty")));
            }
            if axis.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
                return Err(Error::IncompleteGrid(format!("{name} axis is not strictly increasing")));
            }
        }
        let n = alpha_axis.len() * beta_axis.len();
        Ok(MetricGrid {
            alpha_axis,
            beta_axis,
            cells: vec![None; n],
        })
    }

    pub fn alpha_axis(&self) -> &[f64] {
        &self.alpha_axis
    }

    pub fn beta_axis(&self) -> &[f64] {
        &self.beta_axis
    }

    pub fn n_alpha(&self) -> usize {
        self.alpha_axis.len()
    }

    pub fn n_beta(&self) -> usize {
        self.beta_axis.len()
    }

    fn slot(&self, alpha_index: usize, beta_index: usize) -> Result<usize> {
        if alpha_index >= self.n_alpha() || beta_index >= self.n_beta() {
            return Err(Error::IncompleteGrid(format!(
                "cell ({alpha_index}, {beta_index}) outside a {}x{} grid",
                self.n_alpha(),
                self.n_beta()
            )));
        }
        Ok(alpha_index * self.n_beta() + beta_index)
    }

    pub fn set(&mut self, alpha_index: usize, beta_index: usize, values: PerAc<f64>) -> Result<()> {
        let k = self.slot(alpha_index, beta_index)?;
        self.cells[k] = Some(values);
        Ok(())
    }

    pub fn get(&self, alpha_index: usize, beta_index: usize) -> Option<&PerAc<f64>> {
        self.slot(alpha_index, beta_index)
            .ok()
            .and_then(|k| self.cells[k].as_ref())
    }

    fn value(&self, alpha_index: usize, beta_index: usize, ac: AccessCategory) -> Result<f64> {
        self.get(alpha_index, beta_index).map(|v| v[ac]).ok_or_else(|| {
            Error::IncompleteGrid(format!("cell ({alpha_index}, {beta_index}) is missing"))
        })
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    fn same_axes(&self, other: &MetricGrid) -> Result<()> {
        if self.alpha_axis != other.alpha_axis || self.beta_axis != other.beta_axis {
            return Err(Error::IncompleteGrid("grids do not share axes".into()));
        }
        Ok(())
    }
}

/// Relative throughput change of DEMS over the FIFO scheduler, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Change {
    Finite(f64),
    /// The FIFO counter is zero while DEMS transmitted something.
    Unbounded,
}

impl Change {
    pub fn finite(self) -> Option<f64> {
        match self {
            Change::Finite(v) => Some(v),
            Change::Unbounded => None,
        }
    }
}

/// `(c_dems / c_ac - 1) * 100`; `0/0` counts as no change.
pub fn throughput_change(c_dems: f64, c_ac: f64) -> Result<Change> {
    if c_dems.is_nan() || c_ac.is_nan() || c_dems < 0.0 || c_ac < 0.0 {
        return Err(Error::config("counter", "counters must be non-negative"));
    }
    Ok(if c_ac == 0.0 {
        if c_dems == 0.0 {
            Change::Finite(0.0)
        } else {
            Change::Unbounded
        }
    } else {
        Change::Finite((c_dems / c_ac - 1.0) * 100.0)
    })
}

/// Mean of per-cell throughput changes with unbounded cells left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AvgChange {
    /// `None` when every cell was unbounded.
    pub percent: Option<f64>,
    pub excluded: usize,
}

fn mean_change(changes: impl Iterator<Item = Result<Change>>) -> Result<AvgChange> {
    let (mut sum, mut n, mut excluded) = (0.0, 0usize, 0usize);
    for c in changes {
        match c? {
            Change::Finite(v) => {
                sum += v;
                n += 1;
            }
            Change::Unbounded => excluded += 1,
        }
    }
    if excluded > 0 {
        log::warn!("{excluded} unbounded throughput-change cells excluded from an average");
    }
    Ok(AvgChange {
        percent: (n > 0).then(|| sum / n as f64),
        excluded,
    })
}

/// Average over the α axis at fixed β column: `T_avg[ac](β_j)`.
pub fn avg_over_alpha(grid: &MetricGrid, ac: AccessCategory, beta_index: usize) -> Result<f64> {
    let sum = (0..grid.n_alpha())
        .map(|a| grid.value(a, beta_index, ac))
        .sum::<Result<f64>>()?;
    Ok(sum / grid.n_alpha() as f64)
}

/// Average over the β axis at fixed α row: `T_avg[ac](α_j)`.
pub fn avg_over_beta(grid: &MetricGrid, ac: AccessCategory, alpha_index: usize) -> Result<f64> {
    let sum = (0..grid.n_beta())
        .map(|b| grid.value(alpha_index, b, ac))
        .sum::<Result<f64>>()?;
    Ok(sum / grid.n_beta() as f64)
}

/// Mean over α of the per-cell change (a mean of ratios).
pub fn avg_change_over_alpha(
    dems: &MetricGrid,
    fifo: &MetricGrid,
    ac: AccessCategory,
    beta_index: usize,
) -> Result<AvgChange> {
    dems.same_axes(fifo)?;
    mean_change((0..dems.n_alpha()).map(|a| {
        throughput_change(dems.value(a, beta_index, ac)?, fifo.value(a, beta_index, ac)?)
    }))
}

/// Mean over β of the per-cell change.
pub fn avg_change_over_beta(
    dems: &MetricGrid,
    fifo: &MetricGrid,
    ac: AccessCategory,
    alpha_index: usize,
) -> Result<AvgChange> {
    dems.same_axes(fifo)?;
    mean_change((0..dems.n_beta()).map(|b| {
        throughput_change(dems.value(alpha_index, b, ac)?, fifo.value(alpha_index, b, ac)?)
    }))
}
