use super::coarse::cube_of;
use super::{StabilityConfig, StabilityError, UnionFind};
use crate::geometry::circumcenter;
use crate::geometry::{
    build_delaunay, covering_radius, dist_sq, Coords, PointConfiguration, TorusDomain, MAX_DIM,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Connected potentially-bad cubes. `size` counts cubes, `points` the sample
/// points they hold; `diameter` is in cube side units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeCluster {
    pub cubes: Vec<u32>,
    pub size: usize,
    pub points: usize,
    pub diameter: f64,
}

/// Point counts per `l`-cube with the potential-instability flags derived
/// from the counts alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationScheme {
    pub dim: usize,
    pub side: f64,
    pub l: f64,
    pub cubes_per_axis: usize,
    pub delta_prime: f64,
    pub rmax: f64,
    pub covering_radius: f64,
    pub counts: Vec<u32>,
    pub potentially_unstable: Vec<bool>,
    pub potentially_bad: Vec<bool>,
    /// How many cubes each of the three cases flagged (a cube may count
    /// under several).
    pub case_counts: [usize; 3],
    pub clusters: Vec<CubeCluster>,
}

fn cube_coords(idx: usize, m: usize, dim: usize) -> [usize; MAX_DIM] {
    let mut out = [0; MAX_DIM];
    let mut rest = idx;
    for c in out.iter_mut().take(dim) {
        *c = rest % m;
        rest /= m;
    }
    out
}

fn cube_index(c: &[i64], m: usize) -> usize {
    let mi = m as i64;
    c.iter().rev().fold(0, |acc, &x| acc * m + x.rem_euclid(mi) as usize)
}

/// Calls `f` for every cube whose index offset from `idx` lies in
/// `[-reach, reach]^dim` (wrapping, each cube once).
fn for_each_offset(idx: usize, m: usize, dim: usize, reach: usize, mut f: impl FnMut(usize)) {
    let base = cube_coords(idx, m, dim);
    let (start, span) = if 2 * reach + 1 >= m {
        (0, m as i64)
    } else {
        (-(reach as i64), 2 * reach as i64 + 1)
    };
    let total = span.pow(dim as u32);
    let mut c = [0i64; MAX_DIM];
    for t in 0..total {
        let mut r = t;
        for k in 0..dim {
            c[k] = base[k] as i64 + (r % span) + start;
            r /= span;
        }
        f(cube_index(&c[..dim], m));
    }
}

impl AllocationScheme {
    pub fn n_cubes(&self) -> usize {
        self.counts.len()
    }

    pub fn point_count(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    fn domain(&self) -> TorusDomain {
        TorusDomain::new(self.dim, self.side).expect("scheme domain is valid")
    }

    pub fn cube_of_point(&self, x: &Coords) -> usize {
        cube_of(x, self.dim, self.cubes_per_axis, self.l)
    }

    pub fn cube_center(&self, idx: usize) -> Coords {
        let c = cube_coords(idx, self.cubes_per_axis, self.dim);
        let mut out = [0.0; MAX_DIM];
        for k in 0..self.dim {
            out[k] = (c[k] as f64 + 0.5) * self.l;
        }
        out
    }

    /// A configuration with exactly `counts[c]` uniform points in cube `c`
    /// and uniform marks.
    pub fn realize(&self, seed: u64) -> PointConfiguration {
        let dom = self.domain();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(self.point_count());
        let mut marks = Vec::with_capacity(points.capacity());
        for (idx, &n) in self.counts.iter().enumerate() {
            let corner = cube_coords(idx, self.cubes_per_axis, self.dim);
            for _ in 0..n {
                let mut x = [0.0; MAX_DIM];
                for k in 0..self.dim {
                    x[k] = dom.wrap_coord((corner[k] as f64 + rng.random::<f64>()) * self.l);
                }
                points.push(x);
                marks.push(rng.random::<f64>());
            }
        }
        PointConfiguration::new(dom, points, marks, seed).expect("realization is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scheme serializes")
    }
}

/// Allocation scheme of `config` at cube side `cfg.l`. The star reach of the
/// potentially-bad flag uses the covering radius of the Delaunay complex.
pub fn allocation_scheme(
    config: &PointConfiguration,
    cfg: &StabilityConfig,
) -> Result<AllocationScheme, StabilityError> {
    let k = build_delaunay(config)?;
    Ok(allocation_scheme_with_radius(config, cfg, covering_radius(&k)))
}

/// As [`allocation_scheme`] with a known covering radius.
pub fn allocation_scheme_with_radius(
    config: &PointConfiguration,
    cfg: &StabilityConfig,
    covering: f64,
) -> AllocationScheme {
    let dom = *config.domain();
    let d = dom.dim();
    let m = cfg.cubes_per_axis();
    let l = dom.side() / m as f64;
    let n_cubes = m.pow(d as u32);
    let mut counts = vec![0u32; n_cubes];
    for x in config.points() {
        counts[cube_of(x, d, m, l)] += 1;
    }
    let mut scheme = AllocationScheme {
        dim: d,
        side: dom.side(),
        l,
        cubes_per_axis: m,
        delta_prime: cfg.delta_prime,
        rmax: cfg.rmax,
        covering_radius: covering,
        counts,
        potentially_unstable: vec![false; n_cubes],
        potentially_bad: vec![false; n_cubes],
        case_counts: [0; 3],
        clusters: Vec::new(),
    };
    let slack = l * (d as f64).sqrt();
    let centers: Vec<Coords> = (0..n_cubes).map(|c| scheme.cube_center(c)).collect();
    let nonempty: Vec<usize> = (0..n_cubes).filter(|&c| scheme.counts[c] > 0).collect();

    for &c in &nonempty {
        let mut flagged = false;
        if scheme.counts[c] >= 2 {
            scheme.case_counts[2] += 1;
            flagged = true;
        }
        // Case 1: a ball of diameter δ′ meeting this cube and another nonempty one.
        let reach1 = cfg.delta_prime + slack;
        let steps = (reach1 / l).ceil() as usize;
        let mut case1 = false;
        for_each_offset(c, m, d, steps, |o| {
            if o != c
                && scheme.counts[o] > 0
                && dom.distance(&centers[c], &centers[o]) <= reach1
            {
                case1 = true;
            }
        });
        if case1 {
            scheme.case_counts[0] += 1;
            flagged = true;
        }
        if !flagged && case_two(&scheme, &dom, &centers, c, cfg, slack) {
            scheme.case_counts[1] += 1;
            flagged = true;
        }
        scheme.potentially_unstable[c] = flagged;
    }

    let reach = 2.0 * covering + slack;
    let steps = (reach / l).ceil() as usize;
    for c in 0..n_cubes {
        if !scheme.potentially_unstable[c] {
            continue;
        }
        for_each_offset(c, m, d, steps, |o| {
            if dom.distance(&centers[c], &centers[o]) <= reach {
                scheme.potentially_bad[o] = true;
            }
        });
    }
    scheme.clusters = cube_clusters(&scheme, &dom, &centers);
    scheme
}

/// Case 2: a shell of inner radius below `rmax` and width `δ′` meeting this
/// cube and `d + 1` other nonempty cubes, tested on the circumspheres of cube
/// centres with slack `l √d`. Candidates are the `3 (d + 2)` nearest other
/// nonempty cubes within reach.
fn case_two(
    scheme: &AllocationScheme,
    dom: &TorusDomain,
    centers: &[Coords],
    c: usize,
    cfg: &StabilityConfig,
    slack: f64,
) -> bool {
    let d = scheme.dim;
    let reach = 2.0 * (cfg.rmax + cfg.delta_prime) + slack;
    let steps = (reach / scheme.l).ceil() as usize;
    let mut cand: Vec<(f64, usize)> = Vec::new();
    for_each_offset(c, scheme.cubes_per_axis, d, steps, |o| {
        if o != c && scheme.counts[o] > 0 {
            let ds = dom.distance(&centers[c], &centers[o]);
            if ds <= reach {
                cand.push((ds, o));
            }
        }
    });
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cand.truncate(cfg.neighbors());
    if cand.len() < d + 1 {
        return false;
    }
    let local: Vec<Coords> = cand
        .iter()
        .map(|&(_, o)| dom.nearest_image(&centers[c], &centers[o]))
        .collect();
    let mut idx: Vec<usize> = (0..=d).collect();
    let n = local.len();
    loop {
        let pts: Vec<Coords> = idx.iter().map(|&j| local[j]).collect();
        if let Some((o, r2)) = circumcenter(&pts, d) {
            let r = r2.sqrt();
            if r < cfg.rmax + slack
                && (dist_sq(&centers[c], &o).sqrt() - r).abs() <= cfg.delta_prime + slack
            {
                return true;
            }
        }
        // Next (d+1)-subset in lexicographic order.
        let mut i = d + 1;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if idx[i] != i + n - (d + 1) {
                break;
            }
            if i == 0 {
                return false;
            }
        }
        idx[i] += 1;
        for j in i + 1..=d {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn cube_clusters(scheme: &AllocationScheme, dom: &TorusDomain, centers: &[Coords]) -> Vec<CubeCluster> {
    let n = scheme.n_cubes();
    let m = scheme.cubes_per_axis;
    let mut uf = UnionFind::new(n);
    for c in 0..n {
        if scheme.potentially_bad[c] {
            for_each_offset(c, m, scheme.dim, 1, |o| {
                if scheme.potentially_bad[o] {
                    uf.union(c as u32, o as u32);
                }
            });
        }
    }
    let mut groups: std::collections::BTreeMap<u32, Vec<u32>> = Default::default();
    for c in 0..n {
        if scheme.potentially_bad[c] {
            groups.entry(uf.find(c as u32)).or_default().push(c as u32);
        }
    }
    groups
        .into_values()
        .map(|cubes| {
            let mut diam = 0.0f64;
            for (a, &u) in cubes.iter().enumerate() {
                for &v in &cubes[a + 1..] {
                    diam = diam.max(dom.distance_sq(&centers[u as usize], &centers[v as usize]));
                }
            }
            CubeCluster {
                size: cubes.len(),
                points: cubes.iter().map(|&c| scheme.counts[c as usize] as usize).sum(),
                diameter: diam.sqrt() / scheme.l,
                cubes,
            }
        })
        .collect()
}
