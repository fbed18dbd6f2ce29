//! Monte Carlo trials over the mark coupling, parallel p-sweeps, Wilson
//! intervals and threshold estimates.

mod output;

pub use output::{rows_from_csv, CSV_HEADER};

use crate::field::check_modulus;
use crate::geometry::{build_delaunay, sample_poisson, GeometryError, TorusDomain};
use crate::homology::{binomial, events_on_complex, HomologyError};
use crate::stability::{instability_report, StabilityConfig, StabilityError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

/// Resampling attempts per trial before the sweep gives up.
pub const MAX_RESAMPLES: u32 = 32;
const WILSON_Z: f64 = 1.959964;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("p grid must be nonempty, strictly ascending and inside [0, 1]")]
    PGrid,
    #[error("no domain sizes given")]
    NoSizes,
    #[error("trials must be positive")]
    NoTrials,
    #[error("homology degree {i} outside 0..={d}")]
    Degree { i: usize, d: usize },
    #[error("trial skipped: {0}")]
    Skipped(GeometryError),
    #[error("trial seed {seed} skipped {attempts} times in a row")]
    TooManySkips { seed: u64, attempts: u32 },
    #[error("empirical P(A) never crosses {level} at L = {side}")]
    NoCrossing { side: f64, level: f64 },
    #[error("no size L = {0} in the sweep")]
    UnknownSize(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error("malformed sweep file: {0}")]
    Parse(String),
}

/// Events of one trial at one `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PResult {
    pub a_primal: bool,
    pub s_primal: bool,
    pub a_dual: bool,
    pub s_dual: bool,
    pub rank_phi: usize,
    pub rank_psi: usize,
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Timings {
    pub sample: f64,
    pub delaunay: f64,
    pub homology: f64,
    pub stability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstabilitySummary {
    pub unstable_points: usize,
    pub bad_points: usize,
    pub clusters: usize,
    pub max_cluster_size: usize,
    pub max_cluster_diameter: f64,
    pub max_degree: usize,
}

/// One trial across the whole p grid. Equality ignores timings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub d: usize,
    #[serde(rename = "L")]
    pub side: f64,
    pub i: usize,
    pub q: u32,
    pub points: usize,
    /// Samples rejected before this one was accepted.
    pub skipped: u32,
    pub p_grid: Vec<f64>,
    pub results: Vec<PResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instability: Option<InstabilitySummary>,
    #[serde(skip)]
    pub timings: Timings,
}

impl PartialEq for TrialRecord {
    fn eq(&self, o: &Self) -> bool {
        self.seed == o.seed
            && self.d == o.d
            && self.side == o.side
            && self.i == o.i
            && self.q == o.q
            && self.points == o.points
            && self.skipped == o.skipped
            && self.p_grid == o.p_grid
            && self.results == o.results
            && self.instability == o.instability
    }
}

fn check_grid(p_grid: &[f64]) -> Result<(), SimulationError> {
    let inside = p_grid.iter().all(|p| (0.0..=1.0).contains(p));
    let ascending = p_grid.windows(2).all(|w| w[0] < w[1]);
    if p_grid.is_empty() || !inside || !ascending {
        return Err(SimulationError::PGrid);
    }
    Ok(())
}

/// One Poisson sample, one Delaunay build, events at every `p`.
/// A rejected sample (too sparse or degenerate) gives `Skipped`.
pub fn run_trial(
    domain: TorusDomain,
    p_grid: &[f64],
    i: usize,
    q: u32,
    seed: u64,
) -> Result<TrialRecord, SimulationError> {
    run_trial_with(domain, 1.0, p_grid, i, q, seed, None)
}

fn run_trial_with(
    domain: TorusDomain,
    intensity: f64,
    p_grid: &[f64],
    i: usize,
    q: u32,
    seed: u64,
    epsilon: Option<f64>,
) -> Result<TrialRecord, SimulationError> {
    check_grid(p_grid)?;
    check_modulus(q).map_err(HomologyError::from)?;
    let d = domain.dim();
    if i > d {
        return Err(SimulationError::Degree { i, d });
    }
    let mut timings = Timings::default();
    let t = Instant::now();
    let config = sample_poisson(domain, intensity, seed)?;
    timings.sample = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let k = match build_delaunay(&config) {
        Ok(k) => k,
        Err(e @ (GeometryError::TooSparse { .. } | GeometryError::Degenerate(_) | GeometryError::TooFewPoints { .. })) => {
            return Err(SimulationError::Skipped(e))
        }
        Err(e) => return Err(e.into()),
    };
    timings.delaunay = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let mut results = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let (primal, dual) = events_on_complex(&k, config.marks(), p, i, q, seed)?;
        results.push(PResult {
            a_primal: primal.event_a,
            s_primal: primal.event_s,
            a_dual: dual.event_a,
            s_dual: dual.event_s,
            rank_phi: primal.rank_phi,
            rank_psi: dual.rank_phi,
        });
    }
    timings.homology = t.elapsed().as_secs_f64();
    let instability = match epsilon {
        Some(eps) => {
            let t = Instant::now();
            let cfg = StabilityConfig::new(&domain, eps)?;
            let r = instability_report(&config, &k, &cfg);
            timings.stability = t.elapsed().as_secs_f64();
            Some(InstabilitySummary {
                unstable_points: r.unstable_points.len(),
                bad_points: r.bad_points.len(),
                clusters: r.clusters.len(),
                max_cluster_size: r.max_cluster_size(),
                max_cluster_diameter: r.max_cluster_diameter(),
                max_degree: r.max_degree,
            })
        }
        None => None,
    };
    Ok(TrialRecord {
        seed,
        d,
        side: domain.side(),
        i,
        q,
        points: config.len(),
        skipped: 0,
        p_grid: p_grid.to_vec(),
        results,
        instability,
        timings,
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `trial` at size index `size`, independent of scheduling.
pub fn derive_seed(base: u64, size: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ size as u64) ^ trial as u64)
}

/// [`run_trial`] that resamples rejected samples with `seed ^ counter`.
pub fn run_trial_resampling(
    domain: TorusDomain,
    p_grid: &[f64],
    i: usize,
    q: u32,
    seed: u64,
) -> Result<TrialRecord, SimulationError> {
    resampling(domain, 1.0, p_grid, i, q, seed, None)
}

fn resampling(
    domain: TorusDomain,
    intensity: f64,
    p_grid: &[f64],
    i: usize,
    q: u32,
    seed: u64,
    epsilon: Option<f64>,
) -> Result<TrialRecord, SimulationError> {
    for counter in 0..MAX_RESAMPLES {
        match run_trial_with(domain, intensity, p_grid, i, q, seed ^ counter as u64, epsilon) {
            Ok(mut r) => {
                r.skipped = counter;
                return Ok(r);
            }
            Err(SimulationError::Skipped(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(SimulationError::TooManySkips {
        seed,
        attempts: MAX_RESAMPLES,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub d: usize,
    pub sizes: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub trials: usize,
    pub i: usize,
    pub q: u32,
    pub base_seed: u64,
    #[serde(default = "default_intensity")]
    pub intensity: f64,
    /// Instability summaries per trial at this exponent, when set.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Worker threads; 0 lets the pool decide.
    #[serde(default)]
    pub parallel: usize,
}

fn default_intensity() -> f64 {
    1.0
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        check_grid(&self.p_grid)?;
        if self.sizes.is_empty() {
            return Err(SimulationError::NoSizes);
        }
        if self.trials == 0 {
            return Err(SimulationError::NoTrials);
        }
        for &side in &self.sizes {
            TorusDomain::new(self.d, side)?;
        }
        if self.i > self.d {
            return Err(SimulationError::Degree { i: self.i, d: self.d });
        }
        check_modulus(self.q).map_err(HomologyError::from)?;
        if !(self.intensity.is_finite() && self.intensity > 0.0) {
            return Err(GeometryError::Intensity(self.intensity).into());
        }
        if let Some(eps) = self.epsilon {
            for &side in &self.sizes {
                StabilityConfig::new(&TorusDomain::new(self.d, side)?, eps)?;
            }
        }
        Ok(())
    }
}

/// Aggregate at one `(L, p)`; the Wilson interval is for `P(A)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    #[serde(rename = "L")]
    pub side: f64,
    pub p: f64,
    pub q: u32,
    pub i: usize,
    pub trials: usize,
    pub count_a: usize,
    pub count_s: usize,
    pub count_a_dual: usize,
    pub count_s_dual: usize,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl SweepRow {
    pub fn p_a(&self) -> f64 {
        self.count_a as f64 / self.trials as f64
    }

    pub fn p_s(&self) -> f64 {
        self.count_s as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    #[serde(rename = "L")]
    pub side: f64,
    pub trials: usize,
    pub skipped: usize,
    pub mean_points: f64,
    pub threshold: Option<f64>,
    /// Distance between the crossings of 0.1 and 0.9.
    pub window: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub sizes: Vec<SizeSummary>,
    pub records: Vec<TrialRecord>,
}

/// Wilson score interval at 95% for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let phat = k as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Every trial of the sweep, in parallel; results depend only on the config.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, SimulationError> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.sizes.len())
        .flat_map(|s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    let run = || {
        jobs.par_iter()
            .map(|&(s, t)| {
                let domain = TorusDomain::new(cfg.d, cfg.sizes[s])?;
                resampling(
                    domain,
                    cfg.intensity,
                    &cfg.p_grid,
                    cfg.i,
                    cfg.q,
                    derive_seed(cfg.base_seed, s, t),
                    cfg.epsilon,
                )
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let records = if cfg.parallel > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallel)
            .build()
            .expect("thread pool")
            .install(run)?
    } else {
        run()?
    };
    Ok(aggregate(cfg.clone(), records))
}

fn aggregate(config: SweepConfig, records: Vec<TrialRecord>) -> SweepResult {
    let mut rows = Vec::new();
    let mut sizes = Vec::new();
    for (s, &side) in config.sizes.iter().enumerate() {
        let recs = &records[s * config.trials..(s + 1) * config.trials];
        for (j, &p) in config.p_grid.iter().enumerate() {
            let count = |f: fn(&PResult) -> bool| recs.iter().filter(|r| f(&r.results[j])).count();
            let count_a = count(|r| r.a_primal);
            let (wilson_lo, wilson_hi) = wilson_interval(count_a, recs.len());
            rows.push(SweepRow {
                d: config.d,
                side,
                p,
                q: config.q,
                i: config.i,
                trials: recs.len(),
                count_a,
                count_s: count(|r| r.s_primal),
                count_a_dual: count(|r| r.a_dual),
                count_s_dual: count(|r| r.s_dual),
                wilson_lo,
                wilson_hi,
            });
        }
        let curve: Vec<f64> = rows[rows.len() - config.p_grid.len()..].iter().map(SweepRow::p_a).collect();
        let up = crossing(&config.p_grid, &curve, 0.5);
        let window = match (crossing(&config.p_grid, &curve, 0.1), crossing(&config.p_grid, &curve, 0.9)) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        sizes.push(SizeSummary {
            side,
            trials: recs.len(),
            skipped: recs.iter().map(|r| r.skipped as usize).sum(),
            mean_points: recs.iter().map(|r| r.points as f64).sum::<f64>() / recs.len() as f64,
            threshold: up,
            window,
        });
    }
    SweepResult {
        config,
        rows,
        sizes,
        records,
    }
}

/// First crossing of `level` by linear interpolation, when the curve starts
/// below it.
pub fn crossing(grid: &[f64], curve: &[f64], level: f64) -> Option<f64> {
    if curve.first().is_none_or(|&c| c >= level) {
        return None;
    }
    for j in 1..curve.len() {
        if curve[j] >= level {
            let (x0, x1, y0, y1) = (grid[j - 1], grid[j], curve[j - 1], curve[j]);
            return Some(x0 + (level - y0) / (y1 - y0) * (x1 - x0));
        }
    }
    None
}

impl SweepResult {
    /// Rows of size `side`, in p order.
    pub fn rows_for(&self, side: f64) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.side == side).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SimulationError> {
        serde_json::from_str(text).map_err(|e| SimulationError::Parse(e.to_string()))
    }

    /// Number of `(trial, p)` pairs violating `rank φ + rank ψ = C(d, i)`.
    pub fn duality_failures(&self) -> usize {
        let expected = binomial(self.config.d, self.config.i);
        self.records
            .iter()
            .flat_map(|r| &r.results)
            .filter(|r| r.rank_phi + r.rank_psi != expected)
            .count()
    }
}

/// Threshold estimate at size `side`: first crossing of 1/2 by the
/// empirical `P(A)` curve.
pub fn estimate_threshold(result: &SweepResult, side: f64) -> Result<f64, SimulationError> {
    let rows = result.rows_for(side);
    if rows.is_empty() {
        return Err(SimulationError::UnknownSize(side));
    }
    let grid: Vec<f64> = rows.iter().map(|r| r.p).collect();
    let curve: Vec<f64> = rows.iter().map(|r| r.p_a()).collect();
    crossing(&grid, &curve, 0.5).ok_or(SimulationError::NoCrossing { side, level: 0.5 })
}
