use super::{Coords, TorusDomain, MAX_DIM};

const MAX_CELLS: usize = 1 << 22;

/// Cell-list spatial hash on the torus. Cells are cubes of side at least the
/// requested size; queries honour the periodic identification.
#[derive(Debug, Clone)]
pub struct CellGrid {
    domain: TorusDomain,
    per_axis: usize,
    cell: f64,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl CellGrid {
    pub fn new(domain: TorusDomain, points: &[Coords], target_cell: f64) -> Self {
        let d = domain.dim();
        let mut per_axis = if target_cell > 0.0 {
            ((domain.side() / target_cell).floor() as usize).max(1)
        } else {
            1
        };
        while per_axis > 1 && per_axis.pow(d as u32) > MAX_CELLS {
            per_axis -= 1;
        }
        let cell = domain.side() / per_axis as f64;
        let total = per_axis.pow(d as u32);
        let mut grid = Self {
            domain,
            per_axis,
            cell,
            starts: vec![0; total + 1],
            items: vec![0; points.len()],
        };
        let ids: Vec<usize> = points.iter().map(|p| grid.cell_id(p)).collect();
        for &c in &ids {
            grid.starts[c + 1] += 1;
        }
        for c in 0..total {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in ids.iter().enumerate() {
            grid.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    fn axis_index(&self, v: f64) -> usize {
        let w = self.domain.wrap_coord(v);
        ((w / self.cell) as usize).min(self.per_axis - 1)
    }

    fn cell_id(&self, x: &Coords) -> usize {
        let mut id = 0;
        for k in (0..self.domain.dim()).rev() {
            id = id * self.per_axis + self.axis_index(x[k]);
        }
        id
    }

    /// Point indices stored in cell `id`.
    pub fn cell_items(&self, id: usize) -> &[u32] {
        &self.items[self.starts[id] as usize..self.starts[id + 1] as usize]
    }

    /// Calls `f(index, dist_sq)` for every point within `radius` of `x`.
    pub fn for_each_within<F: FnMut(u32, f64)>(
        &self,
        points: &[Coords],
        x: &Coords,
        radius: f64,
        mut f: F,
    ) {
        let d = self.domain.dim();
        let m = self.per_axis;
        let reach = (radius / self.cell).ceil() as usize;
        let full = 2 * reach + 1 >= m;
        let span = if full { m } else { 2 * reach + 1 };
        let mut first = [0usize; MAX_DIM];
        if !full {
            for k in 0..d {
                first[k] = (self.axis_index(x[k]) + m - reach % m) % m;
            }
        }
        let r2 = radius * radius;
        let mut idx = [0usize; MAX_DIM];
        loop {
            let mut id = 0;
            for k in (0..d).rev() {
                let mut c = first[k] + idx[k];
                if c >= m {
                    c -= m;
                }
                id = id * m + c;
            }
            for &j in self.cell_items(id) {
                let ds = self.domain.distance_sq(x, &points[j as usize]);
                if ds <= r2 {
                    f(j, ds);
                }
            }
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < span {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == d {
                    return;
                }
            }
        }
    }

    /// Nearest stored point to `x` among those accepted by `keep`.
    pub fn nearest_filtered<K: Fn(u32) -> bool>(
        &self,
        points: &[Coords],
        x: &Coords,
        keep: K,
    ) -> Option<(u32, f64)> {
        if points.is_empty() {
            return None;
        }
        let diameter = self.domain.side() * (self.domain.dim() as f64).sqrt();
        let mut radius = self.cell;
        loop {
            let mut best: Option<(u32, f64)> = None;
            self.for_each_within(points, x, radius, |j, ds| {
                if keep(j) && best.is_none_or(|(bj, bd)| ds < bd || (ds == bd && j < bj)) {
                    best = Some((j, ds));
                }
            });
            if best.is_some() {
                return best.map(|(j, ds)| (j, ds.sqrt()));
            }
            if radius > diameter {
                return None;
            }
            radius *= 2.0;
        }
    }

    pub fn nearest(&self, points: &[Coords], x: &Coords) -> Option<(u32, f64)> {
        self.nearest_filtered(points, x, |_| true)
    }

    /// Up to `k` nearest points within `radius`, excluding `skip`, sorted by
    /// distance (ties by index).
    pub fn k_nearest(
        &self,
        points: &[Coords],
        x: &Coords,
        k: usize,
        radius: f64,
        skip: Option<u32>,
    ) -> Vec<(u32, f64)> {
        let mut found = Vec::new();
        self.for_each_within(points, x, radius, |j, ds| {
            if Some(j) != skip {
                found.push((j, ds));
            }
        });
        found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        found.truncate(k);
        found.into_iter().map(|(j, ds)| (j, ds.sqrt())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coords;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(d: usize, side: f64, n: usize, seed: u64) -> Vec<Coords> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * side).collect();
                coords(&v)
            })
            .collect()
    }

    #[test]
    fn range_query_matches_brute_force() {
        for d in 2..=4 {
            let dom = TorusDomain::new(d, 6.0).unwrap();
            let pts = random_points(d, 6.0, 300, d as u64);
            let grid = CellGrid::new(dom, &pts, 0.7);
            for (qi, q) in pts.iter().enumerate().take(40) {
                let r = 0.3 + 0.05 * qi as f64;
                let mut got = Vec::new();
                grid.for_each_within(&pts, q, r, |j, _| got.push(j));
                got.sort();
                let want: Vec<u32> = (0..pts.len() as u32)
                    .filter(|&j| dom.distance(q, &pts[j as usize]) <= r)
                    .collect();
                assert_eq!(got, want, "d={d} r={r}");
            }
        }
    }

    #[test]
    fn nearest_matches_brute_force() {
        let dom = TorusDomain::new(2, 10.0).unwrap();
        let pts = random_points(2, 10.0, 50, 9);
        let grid = CellGrid::new(dom, &pts, 0.5);
        let probes = random_points(2, 10.0, 200, 10);
        for x in &probes {
            let (j, dist) = grid.nearest(&pts, x).unwrap();
            let best = pts
                .iter()
                .map(|p| dom.distance(x, p))
                .fold(f64::INFINITY, f64::min);
            assert!((dist - best).abs() < 1e-12);
            assert!((dom.distance(x, &pts[j as usize]) - best).abs() < 1e-12);
        }
    }
}
