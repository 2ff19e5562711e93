//! Immutable containers for simulated asset-price paths and terminal draws.

use std::io::Write;

use crate::error::{Error, Result};

/// Hard cap on stored samples (paths x (steps+1) x assets); larger requests
/// must stream instead of materializing.
pub const MAX_STORED_VALUES: usize = 200_000_000;

/// Simulated price paths on a uniform monitoring grid. `values` is laid out
/// path-major: `values[(path * (n_steps + 1) + step) * n_assets + asset]`.
/// `jump_flags[path * n_steps + k]` marks a jump in the interval
/// `(times[k], times[k + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    n_paths: usize,
    n_steps: usize,
    n_assets: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    jump_flags: Vec<bool>,
    seed: u64,
}

impl PathSet {
    pub(crate) fn from_parts(
        n_paths: usize,
        n_steps: usize,
        n_assets: usize,
        times: Vec<f64>,
        values: Vec<f64>,
        jump_flags: Vec<bool>,
        seed: u64,
    ) -> Result<Self> {
        if times.len() != n_steps + 1
            || values.len() != n_paths * (n_steps + 1) * n_assets
            || jump_flags.len() != n_paths * n_steps
        {
            return Err(Error::DimensionMismatch("path container sizes are inconsistent".into()));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("monitoring times must increase".into()));
        }
        if !values.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::NonFinite("asset prices must be positive and finite".into()));
        }
        Ok(PathSet { n_paths, n_steps, n_assets, times, values, jump_flags, seed })
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("times are nonempty")
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Prices of all assets for `path` at monitoring index `step` (0 is the
    /// initial state).
    pub fn state(&self, path: usize, step: usize) -> &[f64] {
        let start = (path * (self.n_steps + 1) + step) * self.n_assets;
        &self.values[start..start + self.n_assets]
    }

    pub fn terminal(&self, path: usize) -> &[f64] {
        self.state(path, self.n_steps)
    }

    /// Whether a jump occurred in the interval ending at `times[k + 1]`.
    pub fn jumped(&self, path: usize, k: usize) -> bool {
        self.jump_flags[path * self.n_steps + k]
    }

    /// Long-format dump: `path,time,asset,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "path,time,asset,value")?;
        for p in 0..self.n_paths {
            for k in 0..=self.n_steps {
                let state = self.state(p, k);
                for (l, v) in state.iter().enumerate() {
                    writeln!(w, "{p},{},{l},{v}", self.times[k])?;
                }
            }
        }
        Ok(())
    }
}

/// Terminal draws of a market observed at an independent random horizon per
/// path. `values` is path-major like [`PathSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChangedTerminals {
    pub(crate) n_paths: usize,
    pub(crate) n_assets: usize,
    pub(crate) values: Vec<f64>,
    pub(crate) taus: Vec<f64>,
    pub(crate) seed: u64,
}

impl TimeChangedTerminals {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state(&self, path: usize) -> &[f64] {
        &self.values[path * self.n_assets..(path + 1) * self.n_assets]
    }

    pub fn tau(&self, path: usize) -> f64 {
        self.taus[path]
    }
}
