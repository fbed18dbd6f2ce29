use super::StabilityConfig;
use crate::geometry::circumcenter;
use crate::geometry::{dist_sq, CellGrid, Coords, PointConfiguration, MAX_DIM};
use std::collections::{BTreeSet, HashSet};

/// Candidate completions lie within this many `delta` of a circumsphere.
const PREFILTER: f64 = 2.0;

/// Width of the thinnest spherical shell centred at `c` holding all points.
pub fn annulus_width(points: &[Coords], c: &Coords) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for p in points {
        let r = dist_sq(p, c).sqrt();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    hi - lo
}

fn nelder_mead<F: Fn(&Coords) -> f64>(f: &F, start: Coords, step: f64, dim: usize) -> (Coords, f64) {
    let mut simplex: Vec<(Coords, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start, f(&start)));
    for k in 0..dim {
        let mut x = start;
        x[k] += step;
        simplex.push((x, f(&x)));
    }
    let blend = |a: &Coords, b: &Coords, t: f64| {
        let mut out = [0.0; MAX_DIM];
        for k in 0..dim {
            out[k] = a[k] + t * (b[k] - a[k]);
        }
        out
    };
    for _ in 0..5000 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let size = simplex[1..]
            .iter()
            .map(|s| dist_sq(&s.0, &simplex[0].0))
            .fold(0.0, f64::max)
            .sqrt();
        if (worst - best).abs() <= 1e-15 * (1.0 + best.abs()) && size < 1e-13 * (1.0 + step) {
            break;
        }
        if size < 1e-15 {
            break;
        }
        let mut centroid = [0.0; MAX_DIM];
        for s in &simplex[..dim] {
            for k in 0..dim {
                centroid[k] += s.0[k] / dim as f64;
            }
        }
        let reflected = blend(&centroid, &simplex[dim].0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = blend(&centroid, &simplex[dim].0, -2.0);
            let fe = f(&expanded);
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let (target, ft) = if fr < worst {
                (reflected, fr)
            } else {
                (simplex[dim].0, worst)
            };
            let contracted = blend(&centroid, &target, 0.5);
            let fc = f(&contracted);
            if fc < ft {
                simplex[dim] = (contracted, fc);
            } else {
                let x0 = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    s.0 = blend(&x0, &s.0, 0.5);
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

fn subsets(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        visit(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        if idx[i] == i + n - k {
            return;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Minimum annulus width of a small point set (unwrapped coordinates), by
/// Nelder–Mead started from every `(d+1)`-subset circumcentre and the
/// centroid, each run restarted once from its result.
pub fn annulus_width_oracle(points: &[Coords], dim: usize) -> f64 {
    minimize_width(points, dim, |c| annulus_width(points, c))
}

/// As [`annulus_width_oracle`], over shells whose inner radius is at most
/// `rmax` (the shells the detector is defined on).
pub fn annulus_width_oracle_capped(points: &[Coords], dim: usize, rmax: f64) -> f64 {
    // The width is 2-Lipschitz in the centre, so a slope of 10 on the
    // constraint violation is an exact penalty.
    minimize_width(points, dim, |c| {
        let inner = points
            .iter()
            .map(|p| dist_sq(p, c).sqrt())
            .fold(f64::INFINITY, f64::min);
        annulus_width(points, c) + 10.0 * (inner - rmax).max(0.0)
    })
}

fn minimize_width(points: &[Coords], dim: usize, f: impl Fn(&Coords) -> f64) -> f64 {
    let scale = points
        .iter()
        .flat_map(|a| points.iter().map(move |b| dist_sq(a, b)))
        .fold(0.0, f64::max)
        .sqrt()
        .max(1e-12);
    let mut starts = Vec::new();
    let mut centroid = [0.0; MAX_DIM];
    for p in points {
        for k in 0..dim {
            centroid[k] += p[k] / points.len() as f64;
        }
    }
    starts.push(centroid);
    subsets(points.len(), dim + 1, |s| {
        let sub: Vec<Coords> = s.iter().map(|&i| points[i]).collect();
        if let Some((c, _)) = circumcenter(&sub, dim) {
            starts.push(c);
        }
    });
    let mut best = f64::INFINITY;
    for s in starts {
        best = best.min(f(&s));
        let (x, _) = nelder_mead(&f, s, 0.1 * scale, dim);
        let (_, v) = nelder_mead(&f, x, 0.01 * scale, dim);
        best = best.min(v);
    }
    best
}

fn bisector(a: &Coords, b: &Coords, dim: usize) -> [f64; MAX_DIM + 1] {
    let mut row = [0.0; MAX_DIM + 1];
    for k in 0..dim {
        row[k] = 2.0 * (b[k] - a[k]);
        row[dim] += b[k] * b[k] - a[k] * a[k];
    }
    row
}

/// Solution set of `rows` (augmented, `dim` unknowns) as a point and an
/// orthonormal basis of directions, of which the first `k` are used.
/// `None` when inconsistent or redundant.
fn affine_solve(rows: &mut [[f64; MAX_DIM + 1]], dim: usize) -> Option<(Coords, [Coords; MAX_DIM], usize)> {
    let m = rows.len();
    let scale = rows
        .iter()
        .flat_map(|r| r[..dim].iter())
        .fold(0.0f64, |a, &x| a.max(x.abs()));
    let tol = 1e-12 * scale;
    let mut pivots = [usize::MAX; MAX_DIM];
    let mut rank = 0;
    for col in 0..dim {
        if rank == m {
            break;
        }
        let mut piv = rank;
        for r in rank + 1..m {
            if rows[r][col].abs() > rows[piv][col].abs() {
                piv = r;
            }
        }
        if rows[piv][col].abs() <= tol {
            continue;
        }
        rows.swap(rank, piv);
        let p = rows[rank][col];
        for k in 0..=dim {
            rows[rank][k] /= p;
        }
        for r in 0..m {
            let f = rows[r][col];
            if r != rank && f != 0.0 {
                for k in 0..=dim {
                    rows[r][k] -= f * rows[rank][k];
                }
            }
        }
        pivots[rank] = col;
        rank += 1;
    }
    if rank < m {
        return None;
    }
    let mut x = [0.0; MAX_DIM];
    for r in 0..rank {
        x[pivots[r]] = rows[r][dim];
    }
    let mut basis = [[0.0; MAX_DIM]; MAX_DIM];
    let mut k = 0;
    for free in (0..dim).filter(|c| !pivots[..rank].contains(c)) {
        let mut u = [0.0; MAX_DIM];
        u[free] = 1.0;
        for r in 0..rank {
            u[pivots[r]] = -rows[r][free];
        }
        for b in &basis[..k] {
            let t: f64 = (0..dim).map(|j| u[j] * b[j]).sum();
            for j in 0..dim {
                u[j] -= t * b[j];
            }
        }
        let norm = (0..dim).map(|j| u[j] * u[j]).sum::<f64>().sqrt();
        for j in 0..dim {
            u[j] /= norm;
        }
        basis[k] = u;
        k += 1;
    }
    Some((x, basis, k))
}

/// Exact minimum width of a spherical shell holding a `(d+2)`-tuple
/// (unwrapped coordinates) with inner radius at most `cap`.
///
/// For every choice of points touching the inner and the outer sphere, the
/// centres keeping those ties form an affine set; on it the width is smooth
/// and its critical points (free, or with the inner radius pinned at `cap`)
/// lie on the line through the projections of one inner and one outer
/// point. All such candidates are evaluated. Returns infinity when none
/// satisfies the cap.
pub fn shell_width_capped(points: &[Coords], dim: usize, cap: f64) -> f64 {
    min_shell(points, dim, cap, f64::NEG_INFINITY)
}

/// [`shell_width_capped`], returning as soon as a width at most `enough`
/// turns up.
fn min_shell(points: &[Coords], dim: usize, cap: f64, enough: f64) -> f64 {
    let n = points.len();
    assert_eq!(n, dim + 2);
    let mut rel = [[0.0; MAX_DIM]; MAX_DIM + 2];
    for (r, p) in rel.iter_mut().zip(points) {
        for k in 0..dim {
            r[k] = p[k] - points[0][k];
        }
    }
    let rel = &rel[..n];
    let width_at = |c: &Coords| {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for p in rel {
            let r = dist_sq(p, c).sqrt();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if lo <= cap * (1.0 + 1e-12) {
            hi - lo
        } else {
            f64::INFINITY
        }
    };
    let mut best = f64::INFINITY;
    // Circumcentres of the (d+1)-subsets first: they settle most tuples.
    for skip in 0..n {
        let mut sub = [[0.0; MAX_DIM]; MAX_DIM + 1];
        for (t, j) in (0..n).filter(|&j| j != skip).enumerate() {
            sub[t] = rel[j];
        }
        if let Some((c, _)) = circumcenter(&sub[..=dim], dim) {
            best = best.min(width_at(&c));
            if best <= enough {
                return best;
            }
        }
    }
    // Each point is free, inner or outer: base-3 digits.
    for code in 0..3usize.pow(n as u32) {
        let (mut inner, mut outer) = ([0usize; MAX_DIM + 2], [0usize; MAX_DIM + 2]);
        let (mut ni, mut no) = (0, 0);
        let mut c = code;
        for i in 0..n {
            match c % 3 {
                1 => {
                    inner[ni] = i;
                    ni += 1;
                }
                2 => {
                    outer[no] = i;
                    no += 1;
                }
                _ => {}
            }
            c /= 3;
        }
        if ni == 0 || no == 0 || ni + no > dim + 2 {
            continue;
        }
        let mut rows = [[0.0; MAX_DIM + 1]; MAX_DIM + 2];
        let mut m = 0;
        for side in [&inner[..ni], &outer[..no]] {
            for &i in &side[1..] {
                rows[m] = bisector(&rel[side[0]], &rel[i], dim);
                m += 1;
            }
        }
        let Some((x, basis, k)) = affine_solve(&mut rows[..m], dim) else {
            continue;
        };
        if k == 0 {
            best = best.min(width_at(&x));
        } else {
            let project = |p: &Coords| {
                let mut a = x;
                for b in &basis[..k] {
                    let t: f64 = (0..dim).map(|j| (p[j] - x[j]) * b[j]).sum();
                    for j in 0..dim {
                        a[j] += t * b[j];
                    }
                }
                (a, dist_sq(p, &a).sqrt())
            };
            let (ai, hi) = project(&rel[inner[0]]);
            let (ao, ho) = project(&rel[outer[0]]);
            let gap = dist_sq(&ai, &ao).sqrt();
            let mut e = basis[0];
            if gap > 0.0 {
                for j in 0..dim {
                    e[j] = (ao[j] - ai[j]) / gap;
                }
            }
            let along = |s: f64| {
                let mut c = ai;
                for j in 0..dim {
                    c[j] += s * e[j];
                }
                c
            };
            if hi != ho {
                best = best.min(width_at(&along(gap * hi / (hi - ho))));
            } else {
                best = best.min(width_at(&ai));
            }
            if cap >= hi {
                let rho = (cap * cap - hi * hi).sqrt();
                best = best.min(width_at(&along(rho))).min(width_at(&along(-rho)));
            }
        }
        if best <= enough {
            return best;
        }
    }
    best
}

/// Lower bound on [`shell_width_capped`] from the lifting map.
///
/// A shell of inner radius `r` and width `w` puts the lifted points
/// `(x, |x|^2)` in a vertical slab of gap `2 r w + w^2`. The narrowest slab
/// over `d + 2` lifted points has gap `|sum l_j |x_j|^2| / sum max(l_j, 0)`
/// for the affine dependence `l`, so `w >= sqrt(cap^2 + gap) - cap`.
pub fn shell_width_lower_bound(points: &[Coords], dim: usize, cap: f64) -> f64 {
    let n = points.len();
    assert_eq!(n, dim + 2);
    let last = points[n - 1];
    let rel = |j: usize| {
        let mut v = [0.0; MAX_DIM];
        for k in 0..dim {
            v[k] = points[j][k] - last[k];
        }
        v
    };
    // l_0 = 1 and sum_{j=1..d} l_j x_j = -x_0 relative to the last point.
    let mut a = [[0.0; MAX_DIM + 1]; MAX_DIM];
    let x0 = rel(0);
    for k in 0..dim {
        for j in 1..=dim {
            a[k][j - 1] = rel(j)[k];
        }
        a[k][dim] = -x0[k];
    }
    let Some((l, _, 0)) = affine_solve(&mut a[..dim], dim) else {
        return 0.0;
    };
    let norm = |v: &Coords| v[..dim].iter().map(|x| x * x).sum::<f64>();
    let mut lifted = norm(&x0);
    let mut positive = 1.0;
    let mut total = 1.0;
    for j in 1..=dim {
        lifted += l[j - 1] * norm(&rel(j));
        positive += l[j - 1].max(0.0);
        total += l[j - 1];
    }
    positive += (-total).max(0.0);
    let gap = lifted.abs() / positive;
    (cap * cap + gap).sqrt() - cap
}

/// Detector predicate on one `(d+2)`-tuple in unwrapped coordinates.
///
/// No two points may be closer than `delta`. The tuple is then reported when
/// some `(d+1)`-subset has circumradius at most `rmax + delta` with the
/// remaining point within `delta` of its circumsphere, or when a shell of
/// width at most `delta` and inner radius at most `rmax` holds all points.
/// The second clause catches badly conditioned tuples the first misses.
pub fn tuple_detected(points: &[Coords], dim: usize, delta: f64, rmax: f64) -> bool {
    assert_eq!(points.len(), dim + 2);
    for (a, p) in points.iter().enumerate() {
        if points[a + 1..].iter().any(|q| dist_sq(p, q) < delta * delta) {
            return false;
        }
    }
    let leave_one_out = (0..dim + 2).any(|skip| {
        let mut sub = [[0.0; MAX_DIM]; MAX_DIM + 1];
        for (t, j) in (0..dim + 2).filter(|&j| j != skip).enumerate() {
            sub[t] = points[j];
        }
        match circumcenter(&sub[..=dim], dim) {
            Some((c, r2)) => {
                let r = r2.sqrt();
                r <= rmax + delta && (dist_sq(&points[skip], &c).sqrt() - r).abs() <= delta
            }
            None => false,
        }
    });
    leave_one_out || exact_clause(points, dim, delta, rmax)
}

fn exact_clause(points: &[Coords], dim: usize, delta: f64, rmax: f64) -> bool {
    shell_width_lower_bound(points, dim, rmax) <= delta && min_shell(points, dim, rmax, delta) <= delta
}

/// Near-cospherical `(d+2)`-tuples of the configuration without close pairs.
///
/// For each point, every `(d+1)`-set made of it and `d` of its
/// `3 (d + 2)` nearest neighbours within `2 rmax` is tried; when the
/// circumradius is at most `rmax + delta`, every further point within
/// `delta` of the circumsphere completes a reported tuple. Points within
/// `PREFILTER * delta` of circumspheres of radius up to `2 rmax` give
/// further candidates, kept when the exact shell clause of
/// [`tuple_detected`] holds. Tuples are returned sorted and deduplicated.
pub fn unstable_tuples(config: &PointConfiguration, cfg: &StabilityConfig) -> Vec<Vec<u32>> {
    detect(config, cfg, false)
}

/// Unstable tuples whose members cover every tuple-unstable point, skipping
/// candidates made only of points already covered.
pub(crate) fn covering_tuples(config: &PointConfiguration, cfg: &StabilityConfig) -> Vec<Vec<u32>> {
    detect(config, cfg, true)
}

fn detect(config: &PointConfiguration, cfg: &StabilityConfig, covering: bool) -> Vec<Vec<u32>> {
    let dom = *config.domain();
    let d = dom.dim();
    let pts = config.points();
    if pts.len() < d + 2 {
        return Vec::new();
    }
    let delta = cfg.delta;
    let d2 = delta * delta;
    let spacing = (dom.volume() / pts.len() as f64).powf(1.0 / d as f64);
    let grid = CellGrid::new(dom, pts, spacing.max(delta));
    let mut found: BTreeSet<[u32; MAX_DIM + 2]> = BTreeSet::new();
    let mut rejected: HashSet<[u32; MAX_DIM + 2]> = HashSet::new();
    let mut covered = vec![false; pts.len()];
    let reach = PREFILTER * delta;

    for a in 0..pts.len() as u32 {
        let xa = pts[a as usize];
        let nbrs = grid.k_nearest(pts, &xa, cfg.neighbors(), 2.0 * cfg.rmax, Some(a));
        if nbrs.len() < d {
            continue;
        }
        let local: Vec<Coords> = nbrs
            .iter()
            .map(|&(j, _)| dom.nearest_image(&xa, &pts[j as usize]))
            .collect();
        subsets(nbrs.len(), d, |s| {
            // Members of the candidate simplex, anchor first.
            let mut ids = [a; MAX_DIM + 1];
            let mut xs = [xa; MAX_DIM + 1];
            for (t, &j) in s.iter().enumerate() {
                ids[t + 1] = nbrs[j].0;
                xs[t + 1] = local[j];
            }
            for u in 0..=d {
                for v in u + 1..=d {
                    if dist_sq(&xs[u], &xs[v]) < d2 {
                        return;
                    }
                }
            }
            let Some((c, r2)) = circumcenter(&xs[..=d], d) else {
                return;
            };
            let r = r2.sqrt();
            if r > 2.0 * cfg.rmax {
                return;
            }
            let center = dom.wrap(&c);
            grid.for_each_within(pts, &center, r + reach, |y, ds| {
                if ids[..=d].contains(&y) || ds.sqrt() < r - reach {
                    return;
                }
                let py = &pts[y as usize];
                if ids[..=d]
                    .iter()
                    .any(|&m| dom.distance_sq(py, &pts[m as usize]) < d2)
                {
                    return;
                }
                let mut t = [u32::MAX; MAX_DIM + 2];
                t[..=d].copy_from_slice(&ids[..=d]);
                t[d + 1] = y;
                t[..d + 2].sort_unstable();
                if found.contains(&t) || (covering && t[..d + 2].iter().all(|&v| covered[v as usize])) {
                    return;
                }
                let mut accept = |t: [u32; MAX_DIM + 2]| {
                    for &v in &t[..d + 2] {
                        covered[v as usize] = true;
                    }
                    found.insert(t);
                };
                if r <= cfg.rmax + delta && (ds.sqrt() - r).abs() <= delta {
                    accept(t);
                    return;
                }
                if rejected.contains(&t) {
                    return;
                }
                let mut tuple = [xa; MAX_DIM + 2];
                tuple[..=d].copy_from_slice(&xs[..=d]);
                tuple[d + 1] = dom.nearest_image(&xa, py);
                if exact_clause(&tuple[..d + 2], d, delta, cfg.rmax) {
                    accept(t);
                } else {
                    rejected.insert(t);
                }
            });
        });
    }
    found.into_iter().map(|t| t[..d + 2].to_vec()).collect()
}
