//! Exact-transition Monte-Carlo path generation.
//!
//! Each monitoring step samples the increment of the log-price process from
//! its exact law: a Gaussian part plus an uncompensated compound-Poisson sum,
//! with the per-step drift `(gamma - int x dnu) dt` so that the increment's
//! characteristic function matches the triplet exactly. Step counts therefore
//! affect barrier monitoring only, never the terminal law.
//!
//! All randomness is drawn from counter-based substreams keyed by
//! `(seed, path, step, purpose)`, so results are bit-identical across thread
//! counts and path-count prefixes are stable.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::linalg::psd_sqrt;
use crate::market::MarketSpec;
use crate::measure::{LevyMeasure, MomentPoly};
use crate::rng::{substream, StreamPurpose};
use crate::sim::pathset::{PathSet, TimeChangedTerminals, MAX_STORED_VALUES};

enum JumpTable {
    None,
    Atoms { cumulative: Vec<f64>, locations: Vec<Vec<f64>> },
    Mixture { cumulative: Vec<f64>, means: Vec<Vec<f64>>, roots: Vec<DMatrix<f64>> },
}

/// Precomputed per-step transition sampler for one triplet.
pub(crate) struct StepSampler {
    dim: usize,
    /// Compensated drift per unit time: `gamma - int x dnu`.
    drift: Vec<f64>,
    /// Unscaled Gaussian root `L` with `L L^T = A`.
    root: DMatrix<f64>,
    total_intensity: f64,
    jumps: JumpTable,
}

impl StepSampler {
    pub(crate) fn new(market: &MarketSpec) -> Result<Self> {
        let t = market.triplet();
        let dim = t.dim();
        let zero = nalgebra::DVector::zeros(dim);
        let mut drift = Vec::with_capacity(dim);
        for l in 0..dim {
            drift.push(t.gamma()[l] - t.nu().moment(&zero, MomentPoly::Coord(l))?);
        }
        let root = psd_sqrt(t.a())?;
        let (total_intensity, jumps) = match t.nu() {
            LevyMeasure::Atomic { atoms, .. } if !atoms.is_empty() => {
                let mut cumulative = Vec::with_capacity(atoms.len());
                let mut locations = Vec::with_capacity(atoms.len());
                let mut acc = 0.0;
                for a in atoms {
                    acc += a.mass;
                    cumulative.push(acc);
                    locations.push(a.location.as_slice().to_vec());
                }
                (acc, JumpTable::Atoms { cumulative, locations })
            }
            LevyMeasure::GaussianMixture { components, .. } if !components.is_empty() => {
                let mut cumulative = Vec::with_capacity(components.len());
                let mut means = Vec::with_capacity(components.len());
                let mut roots = Vec::with_capacity(components.len());
                let mut acc = 0.0;
                for c in components {
                    acc += c.intensity;
                    cumulative.push(acc);
                    means.push(c.mean.as_slice().to_vec());
                    roots.push(psd_sqrt(&c.covariance)?);
                }
                (acc, JumpTable::Mixture { cumulative, means, roots })
            }
            _ => (0.0, JumpTable::None),
        };
        Ok(StepSampler { dim, drift, root, total_intensity, jumps })
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn poisson(&self, dt: f64) -> Result<Option<Poisson<f64>>> {
        if self.total_intensity * dt > 0.0 {
            Poisson::new(self.total_intensity * dt)
                .map(Some)
                .map_err(|e| Error::InvalidArgument(format!("jump count distribution: {e}")))
        } else {
            Ok(None)
        }
    }

    /// Add one increment of length `dt` to `xi`, drawing from the three
    /// given streams; returns whether any jump occurred. `z` is scratch of
    /// length `dim`.
    pub(crate) fn advance_core<R: Rng + ?Sized>(
        &self,
        dt: f64,
        poisson: Option<&Poisson<f64>>,
        diffusion_rng: &mut R,
        count_rng: &mut R,
        size_rng: &mut R,
        xi: &mut [f64],
        z: &mut [f64],
    ) -> bool {
        self.diffuse(dt, diffusion_rng, xi, z);
        let Some(poisson) = poisson else {
            return false;
        };
        let count = poisson.sample(count_rng) as u64;
        if count == 0 {
            return false;
        }
        self.apply_jumps(count, size_rng, xi, z);
        true
    }

    /// Increment of length `dt` drawing every role from one stream, in the
    /// same order as `advance_core` reads its three streams.
    pub(crate) fn advance_one_stream<R: Rng + ?Sized>(
        &self,
        dt: f64,
        poisson: Option<&Poisson<f64>>,
        rng: &mut R,
        xi: &mut [f64],
        z: &mut [f64],
    ) -> bool {
        self.diffuse(dt, rng, xi, z);
        let Some(poisson) = poisson else {
            return false;
        };
        let count = poisson.sample(rng) as u64;
        if count == 0 {
            return false;
        }
        self.apply_jumps(count, rng, xi, z);
        true
    }

    fn diffuse<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, xi: &mut [f64], z: &mut [f64]) {
        let sdt = dt.sqrt();
        for slot in z.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *slot = sdt * g;
        }
        for l in 0..self.dim {
            let mut acc = self.drift[l] * dt;
            for m in 0..self.dim {
                acc += self.root[(l, m)] * z[m];
            }
            xi[l] += acc;
        }
    }

    fn apply_jumps<R: Rng + ?Sized>(
        &self,
        count: u64,
        size_rng: &mut R,
        xi: &mut [f64],
        z: &mut [f64],
    ) {
        for _ in 0..count {
            let u = size_rng.random::<f64>() * self.total_intensity;
            match &self.jumps {
                JumpTable::None => unreachable!("positive intensity implies a jump table"),
                JumpTable::Atoms { cumulative, locations } => {
                    let idx =
                        cumulative.partition_point(|c| *c <= u).min(locations.len() - 1);
                    for (slot, x) in xi.iter_mut().zip(locations[idx].iter()) {
                        *slot += x;
                    }
                }
                JumpTable::Mixture { cumulative, means, roots } => {
                    let idx = cumulative.partition_point(|c| *c <= u).min(means.len() - 1);
                    for slot in z.iter_mut() {
                        *slot = size_rng.sample(StandardNormal);
                    }
                    let root = &roots[idx];
                    for l in 0..self.dim {
                        let mut acc = means[idx][l];
                        for m in 0..self.dim {
                            acc += root[(l, m)] * z[m];
                        }
                        xi[l] += acc;
                    }
                }
            }
        }
    }

    /// Increment with the standard keyed substreams for `(seed, path, step)`.
    pub(crate) fn advance(
        &self,
        dt: f64,
        poisson: Option<&Poisson<f64>>,
        seed: u64,
        path: u64,
        step: u64,
        xi: &mut [f64],
        z: &mut [f64],
    ) -> bool {
        let mut diffusion = substream(seed, path, step, StreamPurpose::Diffusion);
        if poisson.is_some() {
            let mut count = substream(seed, path, step, StreamPurpose::JumpCount);
            let mut size = substream(seed, path, step, StreamPurpose::JumpSize);
            self.advance_core(dt, poisson, &mut diffusion, &mut count, &mut size, xi, z)
        } else {
            let mut unused = diffusion.clone();
            let mut unused2 = diffusion.clone();
            self.advance_core(dt, poisson, &mut diffusion, &mut unused, &mut unused2, xi, z)
        }
    }
}

fn validate_counts(n_paths: usize, n_steps: usize) -> Result<()> {
    if n_paths == 0 || n_steps == 0 {
        return Err(Error::InvalidArgument("path and step counts must be positive".into()));
    }
    Ok(())
}

/// Simulate `n_paths` price paths on a uniform grid of `n_steps` steps.
pub fn simulate_paths(
    market: &MarketSpec,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<PathSet> {
    simulate_paths_with(market, n_paths, n_steps, seed, ExecMode::default())
}

/// [`simulate_paths`] with an explicit execution mode; results are
/// bit-identical across modes.
pub fn simulate_paths_with(
    market: &MarketSpec,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<PathSet> {
    validate_counts(n_paths, n_steps)?;
    let dim = market.dim();
    let total = n_paths
        .checked_mul(n_steps + 1)
        .and_then(|x| x.checked_mul(dim))
        .ok_or(Error::ResourceLimit("path container size overflows".into()))?;
    if total > MAX_STORED_VALUES {
        return Err(Error::ResourceLimit(format!(
            "{total} samples exceed the in-memory limit {MAX_STORED_VALUES}; stream instead"
        )));
    }
    let horizon = market.horizon();
    let dt = horizon / n_steps as f64;
    let times: Vec<f64> =
        (0..=n_steps).map(|k| horizon * k as f64 / n_steps as f64).collect();
    let sampler = StepSampler::new(market)?;
    let poisson = sampler.poisson(dt)?;
    let spots = market.spots();
    let lambda = market.carrying_costs();

    let rows: Vec<(Vec<f64>, Vec<bool>)> = map_indexed(n_paths, mode, |p| {
        let mut xi = vec![0.0; dim];
        let mut z = vec![0.0; dim];
        let mut values = Vec::with_capacity((n_steps + 1) * dim);
        let mut flags = Vec::with_capacity(n_steps);
        values.extend_from_slice(spots.as_slice());
        for k in 0..n_steps {
            let jumped = sampler.advance(
                dt,
                poisson.as_ref(),
                seed,
                p as u64,
                k as u64,
                &mut xi,
                &mut z,
            );
            flags.push(jumped);
            let t = times[k + 1];
            for l in 0..dim {
                values.push(spots[l] * (lambda[l] * t + xi[l]).exp());
            }
        }
        (values, flags)
    });

    let mut values = Vec::with_capacity(total);
    let mut jump_flags = Vec::with_capacity(n_paths * n_steps);
    for (v, f) in rows {
        values.extend_from_slice(&v);
        jump_flags.extend_from_slice(&f);
    }
    PathSet::from_parts(n_paths, n_steps, dim, times, values, jump_flags, seed)
}

/// Independent random horizon applied per path before sampling the terminal
/// state exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeChangeSpec {
    Constant { t: f64 },
    TwoPoint { lo: f64, hi: f64, p_hi: f64 },
    Exponential { mean: f64 },
}

impl TimeChangeSpec {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            TimeChangeSpec::Constant { t } => *t > 0.0 && t.is_finite(),
            TimeChangeSpec::TwoPoint { lo, hi, p_hi } => {
                *lo > 0.0 && hi >= lo && hi.is_finite() && (0.0..=1.0).contains(p_hi)
            }
            TimeChangeSpec::Exponential { mean } => *mean > 0.0 && mean.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("random horizon must be positive".into()))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            TimeChangeSpec::Constant { t } => *t,
            TimeChangeSpec::TwoPoint { lo, hi, p_hi } => {
                if rng.random::<f64>() < *p_hi {
                    *hi
                } else {
                    *lo
                }
            }
            TimeChangeSpec::Exponential { mean } => {
                let u = 1.0 - rng.random::<f64>(); // in (0, 1]
                let tau = -mean * u.ln();
                if tau > 0.0 {
                    tau
                } else {
                    mean * f64::EPSILON
                }
            }
        }
    }
}

/// Draw the market state at an independent random horizon per path; the
/// horizon stream is separate from the driving noise, so the draw is an exact
/// sample of the subordinated terminal law.
pub fn time_changed_terminals(
    market: &MarketSpec,
    tau: &TimeChangeSpec,
    n_paths: usize,
    seed: u64,
) -> Result<TimeChangedTerminals> {
    time_changed_terminals_with(market, tau, n_paths, seed, ExecMode::default())
}

pub fn time_changed_terminals_with(
    market: &MarketSpec,
    tau: &TimeChangeSpec,
    n_paths: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<TimeChangedTerminals> {
    validate_counts(n_paths, 1)?;
    tau.validate()?;
    let dim = market.dim();
    let total = n_paths
        .checked_mul(dim)
        .ok_or(Error::ResourceLimit("terminal container size overflows".into()))?;
    if total > MAX_STORED_VALUES {
        return Err(Error::ResourceLimit(format!(
            "{total} samples exceed the in-memory limit {MAX_STORED_VALUES}"
        )));
    }
    let sampler = StepSampler::new(market)?;
    let spots = market.spots();
    let lambda = market.carrying_costs();

    let rows: Vec<(Vec<f64>, f64)> = map_indexed(n_paths, mode, |p| {
        let mut trng = substream(seed, p as u64, 0, StreamPurpose::TimeChange);
        let tau_p = tau.sample(&mut trng);
        let poisson = sampler
            .poisson(tau_p)
            .expect("per-path jump distribution is valid for positive horizons");
        let mut xi = vec![0.0; dim];
        let mut z = vec![0.0; dim];
        sampler.advance(tau_p, poisson.as_ref(), seed, p as u64, 0, &mut xi, &mut z);
        let mut values = Vec::with_capacity(dim);
        for l in 0..dim {
            values.push(spots[l] * (lambda[l] * tau_p + xi[l]).exp());
        }
        (values, tau_p)
    });

    let mut values = Vec::with_capacity(total);
    let mut taus = Vec::with_capacity(n_paths);
    for (v, t) in rows {
        values.extend_from_slice(&v);
        taus.push(t);
    }
    if !values.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(Error::NonFinite("asset prices must be positive and finite".into()));
    }
    Ok(TimeChangedTerminals { n_paths, n_assets: dim, values, taus, seed })
}
