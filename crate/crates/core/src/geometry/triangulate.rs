//! Incremental Bowyer-Watson Delaunay triangulation in `R^d`, `d <= 4`.
//!
//! Points are inserted in Morton order inside a large enclosing simplex.
//! Each cell caches its circumcentre; a point conflicts with a cell when it
//! lies strictly inside the cached circumsphere. Cavities are grown until
//! every boundary facet sees the new point with positive orientation, which
//! keeps the structure valid under floating-point noise.

use super::circumsphere::{circumcenter, orientation};
use super::{dist_sq, Coords, GeometryError, MAX_DIM};

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub(crate) struct Cell {
    pub v: [u32; MAX_DIM + 1],
    pub nbr: [u32; MAX_DIM + 1],
    pub center: Coords,
    pub r2: f64,
    pub alive: bool,
}

#[derive(Debug)]
pub(crate) struct Triangulation {
    pub dim: usize,
    /// Input points followed by the `dim + 1` enclosing-simplex vertices.
    pub points: Vec<Coords>,
    pub n_input: usize,
    pub cells: Vec<Cell>,
}

impl Triangulation {
    pub fn is_finite(&self, c: &Cell) -> bool {
        c.v[..=self.dim].iter().all(|&v| (v as usize) < self.n_input)
    }
}

struct Builder {
    dim: usize,
    points: Vec<Coords>,
    cells: Vec<Cell>,
    free: Vec<u32>,
    in_cavity: Vec<u32>,
    checked: Vec<u32>,
    stamp: u32,
    rng: u64,
}

fn morton_key(p: &Coords, lo: &Coords, scale: f64, dim: usize) -> u64 {
    let bits = 64 / dim as u32;
    let max = ((1u64 << bits) - 1) as f64;
    let mut key = 0u64;
    let mut q = [0u64; MAX_DIM];
    for k in 0..dim {
        q[k] = (((p[k] - lo[k]) * scale).clamp(0.0, 1.0) * max) as u64;
    }
    for b in (0..bits).rev() {
        for qk in q.iter().take(dim) {
            key = (key << 1) | ((qk >> b) & 1);
        }
    }
    key
}

/// Morton (Z-order) ranks of the points within their bounding box.
pub(crate) fn morton_order(points: &[Coords], dim: usize) -> Vec<usize> {
    if points.is_empty() {
        return Vec::new();
    }
    let mut lo = [f64::INFINITY; MAX_DIM];
    let mut hi = [f64::NEG_INFINITY; MAX_DIM];
    for p in points {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let extent = (0..dim).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
    let scale = if extent > 0.0 { 1.0 / extent } else { 1.0 };
    let mut order: Vec<usize> = (0..points.len()).collect();
    let keys: Vec<u64> = points
        .iter()
        .map(|p| morton_key(p, &lo, scale, dim))
        .collect();
    order.sort_by_key(|&i| (keys[i], i));
    order
}

/// Delaunay triangulation of `points` (pairwise distinct, `dim + 1` or more)
/// together with the cells touching the enclosing simplex.
pub(crate) fn triangulate(points: &[Coords], dim: usize) -> Result<Triangulation, GeometryError> {
    let n = points.len();
    let mut lo = [0.0; MAX_DIM];
    let mut hi = [0.0; MAX_DIM];
    if n > 0 {
        lo = [f64::INFINITY; MAX_DIM];
        hi = [f64::NEG_INFINITY; MAX_DIM];
        for p in points {
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
    }
    let mut mid = [0.0; MAX_DIM];
    let mut half = 0.0f64;
    for k in 0..dim {
        mid[k] = 0.5 * (lo[k] + hi[k]);
        half = half.max(0.5 * (hi[k] - lo[k]));
    }
    let half = half.max(1.0);

    // Corner simplex {o, o + T e_1, ..., o + T e_d} around the box.
    let m = 20.0 * half;
    let t = 3.0 * m * dim as f64;
    let mut all = points.to_vec();
    let mut origin = [0.0; MAX_DIM];
    for k in 0..dim {
        origin[k] = mid[k] - m;
    }
    all.push(origin);
    for k in 0..dim {
        let mut v = origin;
        v[k] += t;
        all.push(v);
    }

    let mut b = Builder {
        dim,
        points: all,
        cells: Vec::with_capacity(8 * n * dim + 16),
        free: Vec::new(),
        in_cavity: Vec::new(),
        checked: Vec::new(),
        stamp: 0,
        rng: 0x9E37_79B9_7F4A_7C15,
    };
    let mut first = [0u32; MAX_DIM + 1];
    for (k, slot) in first.iter_mut().enumerate().take(dim + 1) {
        *slot = (n + k) as u32;
    }
    let verts: Vec<Coords> = first[..=dim].iter().map(|&i| b.points[i as usize]).collect();
    if orientation(&verts, dim) < 0.0 {
        first.swap(0, 1);
    }
    let root = b.new_cell(first, [NONE; MAX_DIM + 1])?;

    let mut last = root;
    for &i in &morton_order(points, dim) {
        last = b.insert(i as u32, last)?;
    }
    Ok(Triangulation {
        dim,
        points: b.points,
        n_input: n,
        cells: b.cells,
    })
}

impl Builder {
    fn new_cell(
        &mut self,
        v: [u32; MAX_DIM + 1],
        nbr: [u32; MAX_DIM + 1],
    ) -> Result<u32, GeometryError> {
        let pts: Vec<Coords> = v[..=self.dim]
            .iter()
            .map(|&i| self.points[i as usize])
            .collect();
        let (center, r2) = circumcenter(&pts, self.dim)
            .ok_or_else(|| GeometryError::Degenerate("flat cell in triangulation".into()))?;
        let cell = Cell {
            v,
            nbr,
            center,
            r2,
            alive: true,
        };
        Ok(match self.free.pop() {
            Some(id) => {
                self.cells[id as usize] = cell;
                id
            }
            None => {
                self.cells.push(cell);
                self.in_cavity.push(0);
                self.checked.push(0);
                (self.cells.len() - 1) as u32
            }
        })
    }

    #[inline]
    fn conflicts(&self, c: u32, p: &Coords) -> bool {
        let cell = &self.cells[c as usize];
        dist_sq(p, &cell.center) < cell.r2
    }

    fn next_rand(&mut self) -> u64 {
        self.rng ^= self.rng << 13;
        self.rng ^= self.rng >> 7;
        self.rng ^= self.rng << 17;
        self.rng
    }

    /// Signed orientation of cell `c` with vertex slot `k` replaced by `p`,
    /// and a scale for deciding when it is numerically zero.
    fn replaced_orientation(&self, c: u32, k: usize, p: &Coords) -> (f64, f64) {
        let cell = &self.cells[c as usize];
        let mut pts = [[0.0; MAX_DIM]; MAX_DIM + 1];
        for j in 0..=self.dim {
            pts[j] = if j == k {
                *p
            } else {
                self.points[cell.v[j] as usize]
            };
        }
        let o = orientation(&pts[..=self.dim], self.dim);
        let mut scale = 1.0;
        for j in 1..=self.dim {
            scale *= dist_sq(&pts[j], &pts[0]).sqrt();
        }
        (o, scale)
    }

    fn locate(&mut self, start: u32, p: &Coords) -> Result<u32, GeometryError> {
        let mut c = start;
        let d = self.dim;
        let limit = 4 * self.cells.len() + 64;
        for _ in 0..limit {
            if self.conflicts(c, p) {
                return Ok(c);
            }
            let offset = (self.next_rand() % (d as u64 + 1)) as usize;
            let mut moved = false;
            for s in 0..=d {
                let k = (s + offset) % (d + 1);
                let (o, _) = self.replaced_orientation(c, k, p);
                if o < 0.0 {
                    let nb = self.cells[c as usize].nbr[k];
                    if nb == NONE {
                        return Err(GeometryError::Degenerate(
                            "point outside enclosing simplex".into(),
                        ));
                    }
                    c = nb;
                    moved = true;
                    break;
                }
            }
            if !moved {
                // Inside (or on the boundary of) c but not strictly inside its
                // circumsphere: only possible for repeated or cospherical input.
                return Err(GeometryError::Degenerate(
                    "point on the circumsphere of its containing cell".into(),
                ));
            }
        }
        Err(GeometryError::Degenerate("point location did not terminate".into()))
    }

    fn insert(&mut self, pi: u32, hint: u32) -> Result<u32, GeometryError> {
        let p = self.points[pi as usize];
        let d = self.dim;
        let hint = if self.cells[hint as usize].alive {
            hint
        } else {
            (0..self.cells.len() as u32)
                .rev()
                .find(|&c| self.cells[c as usize].alive)
                .unwrap()
        };
        let seed = self.locate(hint, &p)?;

        self.stamp += 1;
        let stamp = self.stamp;
        let mut cavity = vec![seed];
        self.in_cavity[seed as usize] = stamp;
        let mut stack = vec![seed];
        while let Some(c) = stack.pop() {
            for k in 0..=d {
                let nb = self.cells[c as usize].nbr[k];
                if nb == NONE
                    || self.in_cavity[nb as usize] == stamp
                    || self.checked[nb as usize] == stamp
                {
                    continue;
                }
                if self.conflicts(nb, &p) {
                    self.in_cavity[nb as usize] = stamp;
                    cavity.push(nb);
                    stack.push(nb);
                } else {
                    self.checked[nb as usize] = stamp;
                }
            }
        }

        // Grow the cavity until it is star-shaped from p.
        let boundary = loop {
            let mut boundary: Vec<(u32, usize)> = Vec::new();
            let mut grow: Option<u32> = None;
            'scan: for &c in &cavity {
                for k in 0..=d {
                    let nb = self.cells[c as usize].nbr[k];
                    if nb != NONE && self.in_cavity[nb as usize] == stamp {
                        continue;
                    }
                    let (o, scale) = self.replaced_orientation(c, k, &p);
                    if o <= 1e-13 * scale {
                        if nb == NONE {
                            return Err(GeometryError::Degenerate(
                                "cavity reaches the enclosing simplex".into(),
                            ));
                        }
                        grow = Some(nb);
                        break 'scan;
                    }
                    boundary.push((c, k));
                }
            }
            match grow {
                Some(nb) => {
                    self.in_cavity[nb as usize] = stamp;
                    cavity.push(nb);
                }
                None => break boundary,
            }
        };

        // Free the cavity, then build the new star around p.
        for &c in &cavity {
            self.cells[c as usize].alive = false;
        }
        let old: Vec<(u32, usize, [u32; MAX_DIM + 1], u32)> = boundary
            .iter()
            .map(|&(c, k)| {
                let cell = &self.cells[c as usize];
                (c, k, cell.v, cell.nbr[k])
            })
            .collect();

        let mut ridges: Vec<([u32; MAX_DIM], u32, usize)> = Vec::with_capacity(old.len() * d);
        let mut created = Vec::with_capacity(old.len());
        for &(c, k, v, outside) in &old {
            let mut nv = v;
            nv[k] = pi;
            let mut nbr = [NONE; MAX_DIM + 1];
            nbr[k] = outside;
            let id = self.new_cell(nv, nbr)?;
            if outside != NONE {
                let oc = &mut self.cells[outside as usize];
                for j in 0..=d {
                    if oc.nbr[j] == c {
                        oc.nbr[j] = id;
                    }
                }
            }
            for j in 0..=d {
                if j == k {
                    continue;
                }
                let mut key = [u32::MAX; MAX_DIM];
                let mut t = 0;
                for (s, &vv) in nv[..=d].iter().enumerate() {
                    if s != j {
                        key[t] = vv;
                        t += 1;
                    }
                }
                key[..d].sort_unstable();
                ridges.push((key, id, j));
            }
            created.push(id);
        }
        // Recycle only now, so outside cells never see a reused id while
        // they are being relinked.
        self.free.extend(cavity.iter().copied());
        ridges.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut i = 0;
        while i < ridges.len() {
            if i + 1 < ridges.len() && ridges[i].0 == ridges[i + 1].0 {
                let (_, a, ja) = ridges[i];
                let (_, b, jb) = ridges[i + 1];
                self.cells[a as usize].nbr[ja] = b;
                self.cells[b as usize].nbr[jb] = a;
                i += 2;
            } else {
                return Err(GeometryError::Degenerate(
                    "cavity boundary is not a closed sphere".into(),
                ));
            }
        }
        Ok(created[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coords;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(d: usize, n: usize, seed: u64) -> Vec<Coords> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| coords(&(0..d).map(|_| rng.random::<f64>() * 5.0).collect::<Vec<_>>()))
            .collect()
    }

    fn check_empty_balls(tri: &Triangulation) {
        for c in tri.cells.iter().filter(|c| c.alive && tri.is_finite(c)) {
            for (i, p) in tri.points[..tri.n_input].iter().enumerate() {
                if c.v[..=tri.dim].contains(&(i as u32)) {
                    continue;
                }
                assert!(dist_sq(p, &c.center) >= c.r2 * (1.0 - 1e-9));
            }
        }
    }

    fn check_links(tri: &Triangulation) {
        for (id, c) in tri.cells.iter().enumerate().filter(|(_, c)| c.alive) {
            for k in 0..=tri.dim {
                let nb = c.nbr[k];
                if nb == NONE {
                    continue;
                }
                let other = &tri.cells[nb as usize];
                assert!(other.alive);
                assert!(other.nbr[..=tri.dim].contains(&(id as u32)));
            }
        }
    }

    #[test]
    fn empty_circumspheres_all_dimensions() {
        for d in 2..=4 {
            let pts = random(d, 60, d as u64 + 100);
            let tri = triangulate(&pts, d).unwrap();
            check_links(&tri);
            check_empty_balls(&tri);
        }
    }

    #[test]
    fn finite_cells_tile_the_hull_in_2d() {
        // Convex hull of the unit-square corners plus interior points: area 25.
        let mut pts = vec![
            coords(&[0.0, 0.0]),
            coords(&[5.0, 0.0]),
            coords(&[0.0, 5.0]),
            coords(&[5.0, 5.0]),
        ];
        pts.extend(random(2, 40, 3).into_iter().map(|p| coords(&[p[0] * 0.9 + 0.2, p[1] * 0.9 + 0.2])));
        let tri = triangulate(&pts, 2).unwrap();
        let area: f64 = tri
            .cells
            .iter()
            .filter(|c| c.alive && tri.is_finite(c))
            .map(|c| {
                let v: Vec<Coords> = c.v[..3].iter().map(|&i| tri.points[i as usize]).collect();
                orientation(&v, 2) / 2.0
            })
            .sum();
        // The square's corners are cocircular, so the hull may be split
        // either way; the area is fixed regardless.
        assert!((area - 25.0).abs() < 1e-9, "area {area}");
    }
}
