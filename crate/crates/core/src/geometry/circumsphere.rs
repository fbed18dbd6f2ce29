use super::{norm_sq, sub, Coords, GeometryError, MAX_DIM};
use serde::{Deserialize, Serialize};

/// Sphere through `d + 1` points, with the centre in unwrapped
/// (universal-cover) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circumsphere {
    pub center: Coords,
    pub radius: f64,
}

/// Circumsphere of `dim + 1` points, rejecting affinely dependent input.
///
/// The dependence tolerance is `1e-9` times the largest distance from the
/// first point to the others.
pub fn circumsphere(points: &[Coords], dim: usize) -> Result<Circumsphere, GeometryError> {
    let scale = points
        .iter()
        .skip(1)
        .map(|p| norm_sq(&sub(p, &points[0])).sqrt())
        .fold(0.0, f64::max);
    circumsphere_with_tolerance(points, dim, 1e-9 * scale)
}

/// Circumsphere with an explicit affine-independence tolerance: every point
/// must lie at least `tol` away from the affine hull of the points before it.
pub fn circumsphere_with_tolerance(
    points: &[Coords],
    dim: usize,
    tol: f64,
) -> Result<Circumsphere, GeometryError> {
    if points.len() != dim + 1 {
        return Err(GeometryError::Degenerate(format!(
            "circumsphere needs {} points, got {}",
            dim + 1,
            points.len()
        )));
    }
    let hull_gap = min_hull_distance(points, dim);
    if !(hull_gap > tol) {
        return Err(GeometryError::Degenerate(format!(
            "points affinely dependent (hull distance {hull_gap:e})"
        )));
    }
    match circumcenter(points, dim) {
        Some((center, r2)) => Ok(Circumsphere {
            center,
            radius: r2.sqrt(),
        }),
        None => Err(GeometryError::Degenerate("singular bisector system".into())),
    }
}

/// Smallest distance from a point to the affine hull of its predecessors,
/// via modified Gram-Schmidt on the edge vectors from `points[0]`.
fn min_hull_distance(points: &[Coords], dim: usize) -> f64 {
    let mut basis: Vec<Coords> = Vec::with_capacity(dim);
    let mut gap = f64::INFINITY;
    for p in &points[1..] {
        let mut r = sub(p, &points[0]);
        for e in &basis {
            let dot: f64 = (0..dim).map(|k| r[k] * e[k]).sum();
            for k in 0..dim {
                r[k] -= dot * e[k];
            }
        }
        let len = norm_sq(&r).sqrt();
        gap = gap.min(len);
        if len == 0.0 {
            return 0.0;
        }
        for v in r.iter_mut() {
            *v /= len;
        }
        basis.push(r);
    }
    gap
}

/// Centre and squared radius by solving the bisector system
/// `2 (x_i - x_0) . c' = |x_i - x_0|^2` with partial pivoting.
/// Returns `None` on an exactly singular system.
pub(crate) fn circumcenter(points: &[Coords], dim: usize) -> Option<(Coords, f64)> {
    let base = points[0];
    let mut a = [[0.0f64; MAX_DIM + 1]; MAX_DIM];
    for i in 0..dim {
        let u = sub(&points[i + 1], &base);
        for k in 0..dim {
            a[i][k] = 2.0 * u[k];
        }
        a[i][dim] = norm_sq(&u);
    }
    let sol = solve_augmented(&mut a, dim)?;
    let mut center = [0.0; MAX_DIM];
    let mut r2 = 0.0;
    for k in 0..dim {
        center[k] = base[k] + sol[k];
        r2 += sol[k] * sol[k];
    }
    Some((center, r2))
}

fn solve_augmented(a: &mut [[f64; MAX_DIM + 1]; MAX_DIM], n: usize) -> Option<[f64; MAX_DIM]> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut x = [0.0; MAX_DIM];
    for row in (0..n).rev() {
        let mut s = a[row][n];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    if x[..n].iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Signed volume factor `det[x_1 - x_0, ..., x_d - x_0]`.
pub fn orientation(points: &[Coords], dim: usize) -> f64 {
    let mut m = [[0.0f64; MAX_DIM]; MAX_DIM];
    for i in 0..dim {
        m[i] = sub(&points[i + 1], &points[0]);
    }
    determinant(&mut m, dim)
}

pub(crate) fn determinant(m: &mut [[f64; MAX_DIM]; MAX_DIM], n: usize) -> f64 {
    match n {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => {
            let mut det = 1.0;
            for col in 0..n {
                let piv = (col..n)
                    .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
                    .unwrap();
                if m[piv][col] == 0.0 {
                    return 0.0;
                }
                if piv != col {
                    m.swap(col, piv);
                    det = -det;
                }
                det *= m[col][col];
                for row in col + 1..n {
                    let f = m[row][col] / m[col][col];
                    for k in col..n {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
            det
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coords;

    #[test]
    fn right_triangle() {
        let s = circumsphere(
            &[coords(&[0.0, 0.0]), coords(&[2.0, 0.0]), coords(&[0.0, 2.0])],
            2,
        )
        .unwrap();
        assert!((s.center[0] - 1.0).abs() < 1e-12);
        assert!((s.center[1] - 1.0).abs() < 1e-12);
        assert!((s.radius - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn collinear_is_degenerate() {
        let r = circumsphere(
            &[coords(&[0.0, 0.0]), coords(&[1.0, 0.0]), coords(&[2.0, 0.0])],
            2,
        );
        assert!(matches!(r, Err(GeometryError::Degenerate(_))));
    }

    #[test]
    fn regular_tetrahedron() {
        // Edge length 1: vertices of a regular tetrahedron.
        let h = (2.0f64 / 3.0).sqrt();
        let pts = [
            coords(&[0.0, 0.0, 0.0]),
            coords(&[1.0, 0.0, 0.0]),
            coords(&[0.5, 3f64.sqrt() / 2.0, 0.0]),
            coords(&[0.5, 3f64.sqrt() / 6.0, h]),
        ];
        for i in 0..4 {
            for j in i + 1..4 {
                assert!((norm_sq(&sub(&pts[i], &pts[j])).sqrt() - 1.0).abs() < 1e-12);
            }
        }
        let s = circumsphere(&pts, 3).unwrap();
        assert!((s.radius - (3.0f64 / 8.0).sqrt()).abs() < 1e-12);
        for p in &pts {
            assert!((norm_sq(&sub(p, &s.center)).sqrt() - s.radius).abs() < 1e-12);
        }
    }

    #[test]
    fn four_dimensional_equidistance() {
        let pts = [
            coords(&[0.1, 0.0, 0.3, 0.0]),
            coords(&[1.0, 0.2, 0.0, 0.1]),
            coords(&[0.0, 1.1, 0.0, 0.4]),
            coords(&[0.3, 0.0, 0.9, 0.0]),
            coords(&[0.0, 0.2, 0.1, 1.3]),
        ];
        let s = circumsphere(&pts, 4).unwrap();
        for p in &pts {
            assert!((norm_sq(&sub(p, &s.center)).sqrt() - s.radius).abs() < 1e-10);
        }
    }

    #[test]
    fn orientation_sign() {
        let ccw = [coords(&[0.0, 0.0]), coords(&[1.0, 0.0]), coords(&[0.0, 1.0])];
        let cw = [coords(&[0.0, 0.0]), coords(&[0.0, 1.0]), coords(&[1.0, 0.0])];
        assert!(orientation(&ccw, 2) > 0.0);
        assert!(orientation(&cw, 2) < 0.0);
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..4 {
            m[i][i] = (i + 1) as f64;
        }
        m[0][3] = 5.0;
        assert!((determinant(&mut m, 4) - 24.0).abs() < 1e-12);
    }
}
