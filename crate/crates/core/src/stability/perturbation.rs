use super::{instability_report, StabilityConfig, StabilityError};
use crate::complex::{interior_boundary, star, DelaunayComplex};
use crate::geometry::{build_delaunay, CellGrid, PointConfiguration, MAX_DIM};
use crate::homology::{induced_rank_cocycle, InducedMapReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};

fn mapped_star(k: &DelaunayComplex, w: &[u32], map: Option<&[u32]>) -> HashSet<Vec<u32>> {
    let st = star(k, w);
    let mut out = HashSet::new();
    for (dim, ids) in st.simplices.iter().enumerate() {
        let list = k.simplices(dim);
        for &i in ids {
            let mut s: Vec<u32> = list.get(i as usize).to_vec();
            if let Some(m) = map {
                for v in s.iter_mut() {
                    *v = m[*v as usize];
                }
                s.sort_unstable();
            }
            out.insert(s);
        }
    }
    out
}

/// Whether `vertex_map` carries the star of `w` in `k1` onto the star of
/// its image in `k2`, simplex for simplex. A map that is not a bijection of
/// the vertex sets gives `false`.
pub fn star_isomorphism(
    k1: &DelaunayComplex,
    k2: &DelaunayComplex,
    vertex_map: &[u32],
    w: &[u32],
) -> bool {
    let n = k1.n_vertices();
    if vertex_map.len() != n || k2.n_vertices() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &v in vertex_map {
        if v as usize >= n || std::mem::replace(&mut seen[v as usize], true) {
            return false;
        }
    }
    let image: Vec<u32> = w.iter().map(|&v| vertex_map[v as usize]).collect();
    mapped_star(k1, w, Some(vertex_map)) == mapped_star(k2, &image, None)
}

/// Members of `candidates` that are not bad and have no bad neighbour, so
/// the star of the result has no bad vertex.
pub fn good_core(k: &DelaunayComplex, candidates: &[u32], bad: &BTreeSet<u32>) -> Vec<u32> {
    candidates
        .iter()
        .copied()
        .filter(|&v| !bad.contains(&v) && k.neighbors(v).iter().all(|u| !bad.contains(u)))
        .collect()
}

/// Monte Carlo check of `U(Q, Z) = U(∂Q, Z \ Int Q)` at `samples` uniform
/// test points. When every point of the sample is interior to `Q` both
/// sides are the whole torus.
pub fn interior_discard_check(
    config: &PointConfiguration,
    k: &DelaunayComplex,
    q: &[u32],
    samples: usize,
    seed: u64,
) -> bool {
    let pts = config.points();
    if pts.is_empty() {
        return true;
    }
    let dom = *config.domain();
    let d = dom.dim();
    let (boundary, interior) = interior_boundary(k, q);
    let in_q: BTreeSet<u32> = q.iter().copied().collect();
    if interior.len() == pts.len() {
        return true;
    }
    let spacing = (dom.volume() / pts.len() as f64).powf(1.0 / d as f64);
    let grid = CellGrid::new(dom, pts, spacing);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut x = [0.0; MAX_DIM];
        for c in x.iter_mut().take(d) {
            *c = dom.wrap_coord(rng.random::<f64>() * dom.side());
        }
        let (z, _) = grid.nearest(pts, &x).expect("nonempty sample");
        let (y, _) = grid
            .nearest_filtered(pts, &x, |j| !interior.contains(&j))
            .expect("some point is not interior");
        if in_q.contains(&z) != boundary.contains(&y) {
            return false;
        }
    }
    true
}

/// Outcome of the stable-event certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableCertificate {
    /// Induced map on the good red subset.
    pub report: InducedMapReport,
    /// Scale `delta^(1/6)` at which badness was judged.
    pub scale: f64,
    pub red: usize,
    pub good_red: Vec<u32>,
    pub bad_points: usize,
    /// Event A on the good red subset, which certifies A for every
    /// percolation sharing the coarse state.
    pub certified: bool,
}

/// Induced map on the red points that are not `delta^(1/6)`-bad.
pub fn stable_certificate(
    config: &PointConfiguration,
    p: f64,
    cfg: &StabilityConfig,
    i: usize,
    q: u32,
) -> Result<StableCertificate, StabilityError> {
    let k = build_delaunay(config)?;
    let scale = cfg.delta.powf(1.0 / 6.0);
    let report = instability_report(config, &k, &cfg.at_scale(scale));
    let red: Vec<u32> = (0..config.len() as u32)
        .filter(|&v| config.is_red(v as usize, p))
        .collect();
    let good_red: Vec<u32> = red
        .iter()
        .copied()
        .filter(|v| !report.bad_points.contains(v))
        .collect();
    let induced = induced_rank_cocycle(&k, &good_red, i, q)?;
    Ok(StableCertificate {
        certified: induced.event_a,
        report: induced,
        scale,
        red: red.len(),
        good_red,
        bad_points: report.bad_points.len(),
    })
}
