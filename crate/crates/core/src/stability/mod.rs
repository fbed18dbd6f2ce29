//! Instability of the Delaunay structure under small perturbations: close
//! pairs, near-cospherical tuples, bad points and their clusters, coarse
//! states, allocation schemes and perturbation checks.

mod allocation;
mod coarse;
mod perturbation;
mod tuples;

pub use allocation::{allocation_scheme, allocation_scheme_with_radius, AllocationScheme, CubeCluster};
pub use coarse::{coarse_probabilities, coarse_state, CoarseState};
pub use perturbation::{
    good_core, interior_discard_check, stable_certificate, star_isomorphism, StableCertificate,
};
pub use tuples::{
    annulus_width, annulus_width_oracle, annulus_width_oracle_capped, shell_width_capped, shell_width_lower_bound, tuple_detected, unstable_tuples,
};

use crate::complex::{max_degree, DelaunayComplex};
use crate::geometry::{CellGrid, GeometryError, PointConfiguration, TorusDomain};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("epsilon must be positive and finite, got {0}")]
    Epsilon(f64),
    #[error("scales violate 0 < delta < l < 1 < rmax: delta = {delta}, l = {l}, rmax = {rmax}")]
    Scales { delta: f64, l: f64, rmax: f64 },
    #[error("delta must be positive, got {0}")]
    Delta(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Homology(#[from] crate::homology::HomologyError),
    #[error("malformed coarse state text: {0}")]
    Parse(String),
}

/// Scales derived from `epsilon` on a torus of side `L` (with `N = L/2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub dim: usize,
    pub side: f64,
    pub epsilon: f64,
    /// `N^(-epsilon)`.
    pub delta: f64,
    /// `delta^(1/5)` snapped so that `L / l` is an integer.
    pub l: f64,
    /// `delta^(1/30)`.
    pub delta_prime: f64,
    /// `log N`, the cap on shell radii.
    pub rmax: f64,
    /// `delta^5`, the perturbation budget.
    pub eta_perturb: f64,
    /// Candidate neighbourhood size of the tuple detector is
    /// `neighbor_factor * (d + 2)`.
    pub neighbor_factor: usize,
}

pub const DEFAULT_EPSILON: f64 = 0.2;

impl StabilityConfig {
    pub fn new(domain: &TorusDomain, epsilon: f64) -> Result<Self, StabilityError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(StabilityError::Epsilon(epsilon));
        }
        let n = domain.half_side();
        Self::build(domain, epsilon, n.powf(-epsilon))
    }

    /// Same derived scales around an explicit `delta`; `epsilon` is then the
    /// exponent that reproduces it.
    pub fn with_delta(domain: &TorusDomain, delta: f64) -> Result<Self, StabilityError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(StabilityError::Delta(delta));
        }
        let epsilon = -delta.ln() / domain.half_side().ln();
        Self::build(domain, epsilon, delta)
    }

    fn build(domain: &TorusDomain, epsilon: f64, delta: f64) -> Result<Self, StabilityError> {
        let side = domain.side();
        let raw = delta.powf(0.2);
        let cubes = (side / raw).round().max(1.0);
        let l = side / cubes;
        let rmax = domain.half_side().ln();
        let cfg = Self {
            dim: domain.dim(),
            side,
            epsilon,
            delta,
            l,
            delta_prime: delta.powf(1.0 / 30.0),
            rmax,
            eta_perturb: delta.powi(5),
            neighbor_factor: 3,
        };
        if !(0.0 < delta && delta < l && l < 1.0 && 1.0 < rmax) {
            return Err(StabilityError::Scales { delta, l, rmax });
        }
        Ok(cfg)
    }

    /// The same configuration at another instability scale.
    pub fn at_scale(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }

    pub fn cubes_per_axis(&self) -> usize {
        (self.side / self.l).round() as usize
    }

    pub fn neighbors(&self) -> usize {
        self.neighbor_factor * (self.dim + 2)
    }
}

/// All unordered pairs at torus distance `< delta`, sorted.
pub fn close_pairs(config: &PointConfiguration, delta: f64) -> Vec<(u32, u32)> {
    let pts = config.points();
    let grid = CellGrid::new(*config.domain(), pts, delta);
    let mut out = Vec::new();
    let d2 = delta * delta;
    for i in 0..pts.len() as u32 {
        grid.for_each_within(pts, &pts[i as usize], delta, |j, ds| {
            if j > i && ds < d2 {
                out.push((i, j));
            }
        });
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub members: Vec<u32>,
    pub size: usize,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstabilityReport {
    pub delta: f64,
    pub close_pairs: Vec<(u32, u32)>,
    /// Representatives: together they cover every tuple-unstable point.
    pub unstable_tuples: Vec<Vec<u32>>,
    pub unstable_points: BTreeSet<u32>,
    pub bad_points: BTreeSet<u32>,
    pub clusters: Vec<Cluster>,
    pub max_degree: usize,
}

impl InstabilityReport {
    pub fn max_cluster_size(&self) -> usize {
        self.clusters.iter().map(|c| c.size).max().unwrap_or(0)
    }

    pub fn max_cluster_diameter(&self) -> f64 {
        self.clusters.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub(crate) struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    pub fn push(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb) as usize] = ra.min(rb);
        }
    }
}

/// Connected components of `members` in the 1-skeleton of `k`, each sorted,
/// listed by smallest member.
pub(crate) fn components(k: &DelaunayComplex, members: &BTreeSet<u32>) -> Vec<Vec<u32>> {
    let mut uf = UnionFind::new(k.n_vertices());
    for &v in members {
        for &u in k.neighbors(v) {
            if members.contains(&u) {
                uf.union(u, v);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<u32, Vec<u32>> = Default::default();
    for &v in members {
        groups.entry(uf.find(v)).or_default().push(v);
    }
    groups.into_values().collect()
}

fn diameter(config: &PointConfiguration, members: &[u32]) -> f64 {
    let dom = config.domain();
    let pts = config.points();
    let mut best = 0.0f64;
    for (a, &u) in members.iter().enumerate() {
        for &v in &members[a + 1..] {
            best = best.max(dom.distance_sq(&pts[u as usize], &pts[v as usize]));
        }
    }
    best.sqrt()
}

/// Close pairs and unstable tuples at `cfg.delta`, the bad points they
/// generate (the vertices of the star of the unstable points) and the
/// connected clusters of bad points.
pub fn instability_report(
    config: &PointConfiguration,
    k: &DelaunayComplex,
    cfg: &StabilityConfig,
) -> InstabilityReport {
    let pairs = close_pairs(config, cfg.delta);
    let tuples = tuples::covering_tuples(config, cfg);
    let mut unstable = BTreeSet::new();
    for &(a, b) in &pairs {
        unstable.insert(a);
        unstable.insert(b);
    }
    for t in &tuples {
        unstable.extend(t.iter().copied());
    }
    let mut bad = unstable.clone();
    for &v in &unstable {
        bad.extend(k.neighbors(v).iter().copied());
    }
    let clusters = components(k, &bad)
        .into_iter()
        .map(|members| Cluster {
            size: members.len(),
            diameter: diameter(config, &members),
            members,
        })
        .collect();
    InstabilityReport {
        delta: cfg.delta,
        close_pairs: pairs,
        unstable_tuples: tuples,
        unstable_points: unstable,
        bad_points: bad,
        clusters,
        max_degree: max_degree(k),
    }
}
