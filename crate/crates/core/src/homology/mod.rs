//! Homology over GF(q): Betti numbers of full subcomplexes, the rank of the
//! map they induce into the homology of the torus, events A and S, and a
//! pixel-grid check of the nerve substitution.

mod cocycle;
mod pixel;

pub use cocycle::induced_rank_cocycle;
use cocycle::induced_rank_mask;
pub use pixel::{
    min_pair_distance, min_voronoi_edge, pixel_oracle, pixel_oracle_refined, PixelHomology,
};

use crate::complex::{full_subcomplex, DelaunayComplex, Subcomplex};
use crate::field::{check_modulus, FieldError, Reducer, SparseColumn};
use crate::geometry::{build_delaunay, GeometryError, PointConfiguration};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomologyError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("homology degree {i} outside 0..={d}")]
    Degree { i: usize, d: usize },
    #[error("complex has no torus domain")]
    NotPeriodic,
    #[error(
        "duality violated at p = {p}: rank phi_{i} = {rank_phi}, rank psi = {rank_psi}, expected sum {expected} (seed {seed})"
    )]
    DualityViolation {
        i: usize,
        p: f64,
        rank_phi: usize,
        rank_psi: usize,
        expected: usize,
        seed: u64,
    },
    #[error("pixel oracle needs d = 2, got d = {0}")]
    PixelDimension(usize),
    #[error("resolution {resolution} gives fewer than 4 pixels across the smallest cell (need <= {limit})")]
    ResolutionTooCoarse { resolution: f64, limit: f64 },
    #[error("resolution {0} would need more than {1} pixels per axis")]
    ResolutionTooFine(f64, usize),
}

/// Rank and nullity of the map `H_i(Del(W; Z)) -> H_i(T^d)` induced by
/// inclusion, with the events it decides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InducedMapReport {
    pub i: usize,
    pub q: u32,
    #[serde(rename = "betti")]
    pub betti_sub: usize,
    #[serde(rename = "rank")]
    pub rank_phi: usize,
    #[serde(rename = "nullity")]
    pub nullity_phi: usize,
    #[serde(rename = "A")]
    pub event_a: bool,
    #[serde(rename = "S")]
    pub event_s: bool,
}

impl InducedMapReport {
    pub(crate) fn new(i: usize, q: u32, betti_sub: usize, rank_phi: usize) -> Self {
        let nullity_phi = betti_sub - rank_phi;
        Self {
            i,
            q,
            betti_sub,
            rank_phi,
            nullity_phi,
            event_a: rank_phi > 0,
            event_s: nullity_phi == 0,
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, j| acc * (n - j) / (j + 1))
}

/// Boundary column of the parent's `k`-simplex `idx`, with rows at
/// filtration positions of `(k-1)`-simplices plus `offset`.
pub(crate) fn boundary_column(
    k_complex: &DelaunayComplex,
    k: usize,
    idx: u32,
    q: u32,
    offset: u32,
    out: &mut SparseColumn,
) {
    for (j, &f) in k_complex.face_indices(k, idx as usize).iter().enumerate() {
        let row = offset + k_complex.filtration_position(k - 1, f);
        let v = if j % 2 == 0 { 1 } else { q - 1 };
        out.push((row, v));
    }
    out.sort_unstable_by_key(|e| e.0);
}

/// Reduce `∂_k` restricted to the subcomplex; returns the reducer.
pub(crate) fn reduce_boundary(s: &Subcomplex<'_>, k: usize, q: u32) -> Reducer {
    let parent = s.parent();
    let mut r = Reducer::new(parent.count(k - 1), q, false);
    let mut v = Vec::new();
    for &idx in s.indices(k) {
        let mut col = Vec::with_capacity(k + 1);
        boundary_column(parent, k, idx, q, 0, &mut col);
        r.insert(col, &mut v);
    }
    r
}

fn rank_boundary(s: &Subcomplex<'_>, k: usize, q: u32) -> usize {
    if k == 0 || k > s.dim() {
        return 0;
    }
    reduce_boundary(s, k, q).rank()
}

/// `dim H_i` of a subcomplex over GF(q).
pub fn betti(s: &Subcomplex<'_>, i: usize, q: u32) -> Result<usize, HomologyError> {
    check_modulus(q)?;
    if i > s.dim() {
        return Err(HomologyError::Degree { i, d: s.dim() });
    }
    Ok(s.count(i) - rank_boundary(s, i, q) - rank_boundary(s, i + 1, q))
}

/// All Betti numbers `b_0..=b_d` of a subcomplex.
pub fn betti_numbers(s: &Subcomplex<'_>, q: u32) -> Result<Vec<usize>, HomologyError> {
    check_modulus(q)?;
    let ranks: Vec<usize> = (0..=s.dim() + 1).map(|k| rank_boundary(s, k, q)).collect();
    Ok((0..=s.dim())
        .map(|i| s.count(i) - ranks[i] - ranks[i + 1])
        .collect())
}

/// Induced rank by the stacked-matrix formula
/// `rank φ_i = rank[D | Z] - rank D`, with `D = ∂_{i+1}` of the whole
/// complex and `Z` a cycle basis of the subcomplex in the complex's chain
/// coordinates.
pub fn induced_rank(
    k: &DelaunayComplex,
    w: &[u32],
    i: usize,
    q: u32,
) -> Result<InducedMapReport, HomologyError> {
    check_modulus(q)?;
    let d = k.dim();
    if i > d {
        return Err(HomologyError::Degree { i, d });
    }
    let s = full_subcomplex(k, w);

    let mut stacked = Reducer::new(k.count(i), q, false);
    let mut scratch = Vec::new();
    if i < d {
        for idx in 0..k.count(i + 1) as u32 {
            let mut col = Vec::with_capacity(i + 2);
            boundary_column(k, i + 1, idx, q, 0, &mut col);
            stacked.insert(col, &mut scratch);
        }
    }
    let rank_d = stacked.rank();

    // Cycle basis of the subcomplex by reduction with tracked combinations.
    let mut cycles: Vec<SparseColumn> = Vec::new();
    if i == 0 {
        cycles.extend(s.indices(0).iter().map(|&v| vec![(v, 1)]));
    } else {
        let mut r = Reducer::new(k.count(i - 1), q, true);
        for &idx in s.indices(i) {
            let mut col = Vec::with_capacity(i + 1);
            boundary_column(k, i, idx, q, 0, &mut col);
            let mut v = vec![(idx, 1)];
            if r.insert(col, &mut v).is_none() {
                cycles.push(v);
            }
        }
    }
    let betti_sub = cycles.len() - rank_boundary(&s, i + 1, q);

    for z in cycles {
        let mut col: SparseColumn = z
            .into_iter()
            .map(|(idx, v)| (k.filtration_position(i, idx), v))
            .collect();
        col.sort_unstable_by_key(|e| e.0);
        stacked.insert(col, &mut scratch);
    }
    let rank_phi = stacked.rank() - rank_d;
    Ok(InducedMapReport::new(i, q, betti_sub, rank_phi))
}

/// Primal report at degree `i` for the red set `{mark <= p}` and dual report
/// at degree `d - i` for its complement, on a prebuilt complex.
pub fn events_on_complex(
    k: &DelaunayComplex,
    marks: &[f64],
    p: f64,
    i: usize,
    q: u32,
    seed: u64,
) -> Result<(InducedMapReport, InducedMapReport), HomologyError> {
    let d = k.dim();
    if i > d {
        return Err(HomologyError::Degree { i, d });
    }
    let red: Vec<bool> = marks.iter().map(|&m| m <= p).collect();
    let white: Vec<bool> = red.iter().map(|r| !r).collect();
    let primal = induced_rank_mask(k, red, i, q)?;
    let dual = induced_rank_mask(k, white, d - i, q)?;
    let expected = binomial(d, i);
    if primal.rank_phi + dual.rank_phi != expected {
        return Err(HomologyError::DualityViolation {
            i,
            p,
            rank_phi: primal.rank_phi,
            rank_psi: dual.rank_phi,
            expected,
            seed,
        });
    }
    Ok((primal, dual))
}

/// Build the Delaunay complex of `config` and evaluate both events at `p`.
pub fn events(
    config: &PointConfiguration,
    p: f64,
    i: usize,
    q: u32,
) -> Result<(InducedMapReport, InducedMapReport), HomologyError> {
    let k = build_delaunay(config)?;
    events_on_complex(&k, config.marks(), p, i, q, config.seed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::boundary_matrix;

    #[test]
    fn triangle_example() {
        let k = DelaunayComplex::from_simplices(2, 3, &[vec![0, 1, 2]]).unwrap();
        let s = full_subcomplex(&k, &[0, 1, 2]);
        assert_eq!(betti_numbers(&s, 3).unwrap(), vec![1, 0, 0]);
        assert_eq!(boundary_matrix(&s, 1, 3).unwrap().rank(), 2);
        assert_eq!(boundary_matrix(&s, 2, 3).unwrap().rank(), 1);
    }

    #[test]
    fn isolated_vertices_and_hollow_triangle() {
        let k = DelaunayComplex::from_simplices(2, 2, &[vec![0], vec![1]]).unwrap();
        let s = full_subcomplex(&k, &[0, 1]);
        assert_eq!(betti(&s, 0, 3).unwrap(), 2);
        let k = DelaunayComplex::from_simplices(2, 3, &[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
        let s = full_subcomplex(&k, &[0, 1, 2]);
        assert_eq!(betti_numbers(&s, 2).unwrap(), vec![1, 1, 0]);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(2, 1), 2);
        assert_eq!(binomial(3, 0), 1);
        assert_eq!(binomial(2, 3), 0);
    }

    #[test]
    fn report_serializes_with_short_keys() {
        let r = InducedMapReport::new(1, 3, 2, 1);
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        for key in ["i", "q", "betti", "rank", "nullity", "A", "S"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["A"], true);
        assert_eq!(v["S"], false);
    }
}
