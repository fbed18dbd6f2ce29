//! Flat-torus geometry: the fundamental domain `[0, L)^d`, the minimum-image
//! metric, Poisson samples with colour marks, circumspheres and the periodic
//! Delaunay triangulation.

mod circumsphere;
mod grid;
mod periodic;
mod sampling;
mod triangulate;

pub use circumsphere::{circumsphere, circumsphere_with_tolerance, orientation, Circumsphere};
pub use grid::CellGrid;
pub use periodic::{build_delaunay, covering_radius, is_r_sample};
pub use sampling::{perturb, sample_poisson, PointConfiguration};
pub(crate) use triangulate::morton_order;
pub(crate) use circumsphere::circumcenter;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 4;

/// A point of the torus or of its universal cover. Only the first `d`
/// coordinates are meaningful; the rest are kept at zero so that norms and
/// differences can be taken over the full array.
pub type Coords = [f64; MAX_DIM];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension {0} outside supported range 2..=4")]
    Dimension(usize),
    #[error("side length must be positive and finite, got {0}")]
    SideLength(f64),
    #[error("intensity must be positive and finite, got {0}")]
    Intensity(f64),
    #[error("max circumradius {max_radius} is not below L/4 = {limit}")]
    TooSparse { max_radius: f64, limit: f64 },
    #[error("general position violated: {0}")]
    Degenerate(String),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("malformed configuration text: {0}")]
    Parse(String),
}

/// The flat torus `[0, L)^d` with opposite faces identified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusDomain {
    dim: usize,
    side: f64,
}

impl TorusDomain {
    pub fn new(dim: usize, side: f64) -> Result<Self, GeometryError> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(GeometryError::Dimension(dim));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(GeometryError::SideLength(side));
        }
        Ok(Self { dim, side })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Side length `L` of the fundamental domain.
    #[inline]
    pub fn side(&self) -> f64 {
        self.side
    }

    /// Half side length; the `N` of `[-N, N]^d`.
    #[inline]
    pub fn half_side(&self) -> f64 {
        self.side / 2.0
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// General-position tolerance, `1e-9 * L`.
    pub fn geo_tolerance(&self) -> f64 {
        1e-9 * self.side
    }

    /// Reduce a coordinate into `[0, L)`.
    #[inline]
    pub fn wrap_coord(&self, x: f64) -> f64 {
        let mut y = x.rem_euclid(self.side);
        if y >= self.side {
            y -= self.side;
        }
        y
    }

    pub fn wrap(&self, x: &Coords) -> Coords {
        let mut out = [0.0; MAX_DIM];
        for k in 0..self.dim {
            out[k] = self.wrap_coord(x[k]);
        }
        out
    }

    /// Minimum-image displacement `y - x`, each component in `[-L/2, L/2]`.
    #[inline]
    pub fn displacement(&self, x: &Coords, y: &Coords) -> Coords {
        let mut out = [0.0; MAX_DIM];
        for k in 0..self.dim {
            let v = y[k] - x[k];
            out[k] = v - self.side * (v / self.side).round();
        }
        out
    }

    /// Integer translation `t` such that `y + L t` is the image of `y`
    /// nearest to `x`.
    pub fn image_shift(&self, x: &Coords, y: &Coords) -> [i32; MAX_DIM] {
        let mut t = [0i32; MAX_DIM];
        for k in 0..self.dim {
            t[k] = ((x[k] - y[k]) / self.side).round() as i32;
        }
        t
    }

    /// Image of `y` nearest to `x` in the universal cover.
    pub fn nearest_image(&self, x: &Coords, y: &Coords) -> Coords {
        let dv = self.displacement(x, y);
        let mut out = [0.0; MAX_DIM];
        for k in 0..self.dim {
            out[k] = x[k] + dv[k];
        }
        out
    }

    #[inline]
    pub fn distance_sq(&self, x: &Coords, y: &Coords) -> f64 {
        let dv = self.displacement(x, y);
        dv[..self.dim].iter().map(|v| v * v).sum()
    }

    /// Geodesic distance on the torus (minimum-image Euclidean length).
    #[inline]
    pub fn distance(&self, x: &Coords, y: &Coords) -> f64 {
        self.distance_sq(x, y).sqrt()
    }

    /// Whether every meaningful coordinate lies in `[0, L)`.
    pub fn contains(&self, x: &Coords) -> bool {
        x[..self.dim].iter().all(|&v| (0.0..self.side).contains(&v))
            && x[self.dim..].iter().all(|&v| v == 0.0)
    }
}

/// Free-function form of [`TorusDomain::distance`].
pub fn torus_distance(x: &Coords, y: &Coords, domain: &TorusDomain) -> f64 {
    domain.distance(x, y)
}

/// Build a [`Coords`] from a slice of at most [`MAX_DIM`] values.
pub fn coords(values: &[f64]) -> Coords {
    assert!(values.len() <= MAX_DIM);
    let mut out = [0.0; MAX_DIM];
    out[..values.len()].copy_from_slice(values);
    out
}

#[inline]
pub(crate) fn sub(a: &Coords, b: &Coords) -> Coords {
    let mut out = [0.0; MAX_DIM];
    for k in 0..MAX_DIM {
        out[k] = a[k] - b[k];
    }
    out
}

#[inline]
pub(crate) fn norm_sq(a: &Coords) -> f64 {
    a.iter().map(|v| v * v).sum()
}

#[inline]
pub(crate) fn dist_sq(a: &Coords, b: &Coords) -> f64 {
    norm_sq(&sub(a, b))
}

/// Volume of the unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}
