//! SoC grid, time blocks and the two rounding schemes.
//!
//! SoC values on the grid are integers in tenths of a percent (22.0% is
//! `220`). Raw SoC values produced by energy arithmetic are `f64` in the same
//! unit.

use alloc::vec::Vec;

use crate::{Error, Minutes, Result};

/// Full battery in tenths of a percent.
pub const SOC_FULL: i32 = 1000;

/// Slack used when comparing raw SoC values against grid points, so that a
/// value like `459.99999999` computed for an exact grid point still rounds to
/// it.
const SOC_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingMode {
    /// Round SoC down, start charging at the next block. Paths are feasible.
    Conservative,
    /// Round SoC up, allow charging from the block of arrival. Paths relax
    /// feasibility and yield lower bounds.
    Optimistic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocGrid {
    s_min: i32,
    step: i32,
    values: Vec<i32>,
}

impl SocGrid {
    /// Grid `s_min, s_min + step, ...` up to 100%; 100% is appended when the
    /// step does not land on it.
    pub fn new(s_min: i32, step: i32) -> Result<Self> {
        if step <= 0 {
            return Err(Error::Parameter {
                name: "soc-step",
                reason: alloc::format!("must be > 0, got {step}"),
            });
        }
        if !(0..SOC_FULL).contains(&s_min) {
            return Err(Error::Parameter {
                name: "soc-min",
                reason: alloc::format!("must lie in [0, 100%), got {s_min}"),
            });
        }
        let mut values: Vec<i32> = (0..)
            .map(|k| s_min + k * step)
            .take_while(|&s| s <= SOC_FULL)
            .collect();
        if *values.last().unwrap() != SOC_FULL {
            values.push(SOC_FULL);
        }
        Ok(SocGrid {
            s_min,
            step,
            values,
        })
    }

    /// Grid from percentages, e.g. `from_percent(22.0, 3.0)`.
    pub fn from_percent(s_min: f64, step: f64) -> Result<Self> {
        Self::new(
            libm::round(s_min * 10.0) as i32,
            libm::round(step * 10.0) as i32,
        )
    }

    pub fn s_min(&self) -> i32 {
        self.s_min
    }

    pub fn step(&self) -> i32 {
        self.step
    }

    pub fn s_full(&self) -> i32 {
        SOC_FULL
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Position of a grid value in [`values`](Self::values).
    pub fn index_of(&self, s: i32) -> Option<usize> {
        self.values.binary_search(&s).ok()
    }

    /// Maps a raw SoC onto the grid. `None` means no grid node is feasible:
    /// below `s_min` when rounding down, above 100% when rounding up.
    pub fn round(&self, mode: RoundingMode, raw: f64) -> Option<i32> {
        let s_min = self.s_min as f64;
        let top_regular = self.values.len() - if self.has_appended_full() { 2 } else { 1 };
        match mode {
            RoundingMode::Conservative => {
                if raw < s_min - SOC_EPS {
                    return None;
                }
                if raw >= SOC_FULL as f64 - SOC_EPS {
                    return Some(SOC_FULL);
                }
                let k = libm::floor((raw - s_min) / self.step as f64 + SOC_EPS) as usize;
                Some(self.values[k.min(top_regular)])
            }
            RoundingMode::Optimistic => {
                if raw > SOC_FULL as f64 + SOC_EPS {
                    return None;
                }
                if raw <= s_min + SOC_EPS {
                    return Some(self.s_min);
                }
                let k = libm::ceil((raw - s_min) / self.step as f64 - SOC_EPS) as usize;
                Some(self.values[k.min(self.values.len() - 1)])
            }
        }
    }

    fn has_appended_full(&self) -> bool {
        (SOC_FULL - self.s_min) % self.step != 0
    }
}

/// Free-function form of [`SocGrid::round`].
pub fn round_soc(grid: &SocGrid, mode: RoundingMode, raw: f64) -> Option<i32> {
    grid.round(mode, raw)
}

/// Consecutive blocks `[t_b, t_b + len)` starting at the horizon start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeBlocks {
    start: Minutes,
    len: Minutes,
    count: usize,
}

impl TimeBlocks {
    /// Blocks covering `[start, end)`; the last block may stick out past `end`.
    pub fn new(start: Minutes, end: Minutes, len: Minutes) -> Result<Self> {
        if len <= 0 {
            return Err(Error::Parameter {
                name: "block-len",
                reason: alloc::format!("must be > 0, got {len}"),
            });
        }
        if end <= start {
            return Err(Error::Parameter {
                name: "horizon",
                reason: "empty horizon".into(),
            });
        }
        let count = ((end - start + len - 1) / len) as usize;
        Ok(TimeBlocks { start, len, count })
    }

    pub fn len(&self) -> Minutes {
        self.len
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn start(&self, b: usize) -> Minutes {
        self.start + b as Minutes * self.len
    }

    pub fn end(&self, b: usize) -> Minutes {
        self.start(b) + self.len
    }

    /// Block in which charging may start for a vehicle arriving at `arrival`.
    pub fn block_of_arrival(&self, mode: RoundingMode, arrival: Minutes) -> Option<usize> {
        let rel = arrival - self.start;
        let b = match mode {
            RoundingMode::Conservative => {
                if rel <= 0 {
                    0
                } else {
                    ((rel + self.len - 1) / self.len) as usize
                }
            }
            RoundingMode::Optimistic => {
                if rel < 0 {
                    return None;
                }
                (rel / self.len) as usize
            }
        };
        (b < self.count).then_some(b)
    }
}

pub fn block_of_arrival(tb: &TimeBlocks, mode: RoundingMode, arrival: Minutes) -> Option<usize> {
    tb.block_of_arrival(mode, arrival)
}
