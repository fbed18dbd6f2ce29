use super::circumsphere::orientation;
use super::triangulate::{triangulate, NONE};
use super::{dist_sq, unit_ball_volume, Circumsphere, Coords, GeometryError, PointConfiguration};
use crate::complex::DelaunayComplex;

/// Periodic Delaunay triangulation of the torus.
///
/// Points within a margin of the fundamental domain are lifted to their
/// translates, the lifted set is triangulated in the cover, and every cell
/// whose circumcentre lies in `[0, L)^d` is mapped back to original indices.
/// The margin starts near the expected largest circumradius and doubles
/// (capped at `L/4`) until every kept circumradius is below it and the kept
/// cells tile the torus.
pub fn build_delaunay(config: &PointConfiguration) -> Result<DelaunayComplex, GeometryError> {
    let domain = *config.domain();
    let d = domain.dim();
    let n = config.len();
    if n < d + 2 {
        return Err(GeometryError::TooFewPoints {
            needed: d + 2,
            got: n,
        });
    }
    let side = domain.side();
    let limit = side / 4.0;
    let intensity = n as f64 / domain.volume();
    let spacing = intensity.powf(-1.0 / d as f64);
    let typical = ((n as f64).ln().max(1.0) / (unit_ball_volume(d) * intensity)).powf(1.0 / d as f64);
    let mut margin = (1.5 * typical + spacing).min(limit);

    loop {
        match try_margin(config, margin)? {
            Attempt::Done(k) => return Ok(k),
            Attempt::Grow { max_radius } => {
                if margin >= limit {
                    return Err(GeometryError::TooSparse {
                        max_radius,
                        limit,
                    });
                }
                margin = (2.0 * margin).min(limit);
            }
        }
    }
}

enum Attempt {
    Done(DelaunayComplex),
    Grow { max_radius: f64 },
}

fn lift(config: &PointConfiguration, margin: f64) -> (Vec<Coords>, Vec<u32>) {
    let domain = config.domain();
    let d = domain.dim();
    let side = domain.side();
    let mut lifted = Vec::new();
    let mut origin = Vec::new();
    let shifts = 3usize.pow(d as u32);
    for (i, p) in config.points().iter().enumerate() {
        'shift: for s in 0..shifts {
            let mut code = s;
            let mut q = *p;
            for qk in q.iter_mut().take(d) {
                let t = (code % 3) as f64 - 1.0;
                code /= 3;
                *qk += t * side;
                if *qk < -margin || *qk >= side + margin {
                    continue 'shift;
                }
            }
            lifted.push(q);
            origin.push(i as u32);
        }
    }
    (lifted, origin)
}

fn try_margin(config: &PointConfiguration, margin: f64) -> Result<Attempt, GeometryError> {
    let domain = *config.domain();
    let d = domain.dim();
    let side = domain.side();
    let (lifted, origin) = lift(config, margin);
    let tri = triangulate(&lifted, d)?;

    let mut tops: Vec<Vec<u32>> = Vec::new();
    let mut circum = Vec::new();
    let mut kept = Vec::new();
    let mut max_radius = 0.0f64;
    let mut volume = 0.0;
    let fact: f64 = (1..=d).map(|k| k as f64).product();
    for (id, c) in tri.cells.iter().enumerate() {
        if !c.alive || !tri.is_finite(c) {
            continue;
        }
        if !(0..d).all(|k| (0.0..side).contains(&c.center[k])) {
            continue;
        }
        let r = c.r2.sqrt();
        max_radius = max_radius.max(r);
        let pts: Vec<Coords> = c.v[..=d].iter().map(|&v| tri.points[v as usize]).collect();
        volume += orientation(&pts, d).abs() / fact;
        let mut tuple: Vec<u32> = c.v[..=d].iter().map(|&v| origin[v as usize]).collect();
        tuple.sort_unstable();
        tops.push(tuple);
        circum.push(Circumsphere {
            center: c.center,
            radius: r,
        });
        kept.push(id);
    }
    if max_radius >= margin {
        return Ok(Attempt::Grow { max_radius });
    }
    let target = domain.volume();
    if (volume - target).abs() > 1e-9 * target {
        if margin < side / 4.0 {
            return Ok(Attempt::Grow { max_radius });
        }
        return Err(GeometryError::Degenerate(format!(
            "cells cover volume {volume} instead of {target}"
        )));
    }
    for t in &tops {
        if t.windows(2).any(|w| w[0] == w[1]) {
            return Err(GeometryError::Degenerate("cell with a repeated vertex".into()));
        }
    }

    // Cospherity: the vertex across each facet must be clearly off the sphere.
    let tol = domain.geo_tolerance();
    for &id in &kept {
        let c = &tri.cells[id];
        let r = c.r2.sqrt();
        for k in 0..=d {
            let nb = c.nbr[k];
            if nb == NONE {
                continue;
            }
            let other = &tri.cells[nb as usize];
            let Some(&q) = other.v[..=d].iter().find(|v| !c.v[..=d].contains(v)) else {
                continue;
            };
            if q as usize >= tri.n_input {
                continue;
            }
            let gap = (dist_sq(&tri.points[q as usize], &c.center).sqrt() - r).abs();
            if gap <= tol {
                return Err(GeometryError::Degenerate(format!(
                    "{} points within {gap:e} of a common sphere",
                    d + 2
                )));
            }
        }
    }

    let k = DelaunayComplex::from_delaunay(domain, config.points(), tops, circum)
        .map_err(|e| GeometryError::Degenerate(e.to_string()))?;
    if !k.is_closed_pseudomanifold() {
        return Err(GeometryError::Degenerate(
            "a facet is not shared by exactly two cells".into(),
        ));
    }
    if k.euler_characteristic() != 0 {
        return Err(GeometryError::Degenerate(format!(
            "Euler characteristic {} instead of 0",
            k.euler_characteristic()
        )));
    }
    Ok(Attempt::Done(k))
}

/// Largest circumradius over the top simplices: the smallest `R` for which
/// the sample is an `R`-sample set of the torus.
pub fn covering_radius(k: &DelaunayComplex) -> f64 {
    k.circumdata().iter().map(|c| c.radius).fold(0.0, f64::max)
}

pub fn is_r_sample(k: &DelaunayComplex, r: f64) -> bool {
    covering_radius(k) <= r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{coords, sample_poisson, TorusDomain};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_surface_and_euler() {
        let dom = TorusDomain::new(2, 10.0).unwrap();
        let cfg = sample_poisson(dom, 1.0, 1).unwrap();
        let k = build_delaunay(&cfg).unwrap();
        assert!(k.is_closed_pseudomanifold());
        assert_eq!(k.euler_characteristic(), 0);
        assert_eq!(k.count(1), 3 * cfg.len());
        assert_eq!(k.count(2), 2 * cfg.len());
    }

    #[test]
    fn higher_dimensions_are_valid() {
        for (d, side) in [(3, 6.0), (4, 5.0)] {
            let dom = TorusDomain::new(d, side).unwrap();
            let cfg = sample_poisson(dom, 1.5, 5).unwrap();
            let k = build_delaunay(&cfg).unwrap();
            assert!(k.is_closed_pseudomanifold());
            assert_eq!(k.euler_characteristic(), 0);
        }
    }

    #[test]
    fn sparse_jittered_square_is_rejected() {
        let dom = TorusDomain::new(2, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pts = Vec::new();
        for &(x, y) in &[(1.0, 1.0), (6.0, 1.0), (1.0, 6.0), (6.0, 6.0)] {
            pts.push(coords(&[
                x + rng.random::<f64>() * 0.01,
                y + rng.random::<f64>() * 0.01,
            ]));
        }
        let cfg = PointConfiguration::new(dom, pts, vec![0.5; 4], 0).unwrap();
        // Four points are too few for the L/4 acceptance rule here.
        assert!(matches!(
            build_delaunay(&cfg),
            Err(GeometryError::TooSparse { .. })
        ));
    }

    #[test]
    fn too_few_points() {
        let dom = TorusDomain::new(2, 10.0).unwrap();
        let cfg = PointConfiguration::new(dom, vec![coords(&[1.0, 1.0])], vec![0.1], 0).unwrap();
        assert!(matches!(
            build_delaunay(&cfg),
            Err(GeometryError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn covering_radius_matches_circumdata() {
        let dom = TorusDomain::new(2, 8.0).unwrap();
        let cfg = sample_poisson(dom, 2.0, 3).unwrap();
        let k = build_delaunay(&cfg).unwrap();
        let r = covering_radius(&k);
        let max = k.circumdata().iter().map(|c| c.radius).fold(0.0, f64::max);
        assert_eq!(r, max);
        assert!(is_r_sample(&k, r + 0.001));
        assert!(!is_r_sample(&k, r - 0.001));
    }
}
