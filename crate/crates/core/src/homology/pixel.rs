use super::HomologyError;
use crate::complex::sub::mask_of;
use crate::complex::DelaunayComplex;
use crate::geometry::{CellGrid, PointConfiguration};
use crate::stability::UnionFind;
use serde::{Deserialize, Serialize};

const MAX_PIXELS_PER_AXIS: usize = 100_000_000;

/// Homology of a rasterised union of Voronoi cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelHomology {
    pub b0: usize,
    pub euler: i64,
    pub b1: i64,
    pub b2: usize,
    pub pixels_per_axis: usize,
    /// 2x2 blocks coloured like a checkerboard. The closed squares of such
    /// a block meet at a corner whose membership the raster cannot decide.
    pub corner_contacts: usize,
}

/// Smallest pairwise torus distance (infinite for fewer than two points).
pub fn min_pair_distance(config: &PointConfiguration) -> f64 {
    let pts = config.points();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let dom = *config.domain();
    let spacing = (dom.volume() / pts.len() as f64).powf(1.0 / dom.dim() as f64);
    let grid = CellGrid::new(dom, pts, spacing);
    (0..pts.len() as u32)
        .filter_map(|i| grid.nearest_filtered(pts, &pts[i as usize], |j| j != i))
        .map(|(_, dist)| dist)
        .fold(f64::INFINITY, f64::min)
}

/// Length of the shortest Voronoi edge (d = 2): the distance between the
/// circumcentres of the two triangles on each Delaunay edge. Cells meeting
/// near a short edge can touch at pixel corners, so a raster only resolves
/// the topology of coloured unions at pixels well below this length.
pub fn min_voronoi_edge(k: &DelaunayComplex) -> f64 {
    let Some(domain) = k.domain() else {
        return f64::INFINITY;
    };
    if k.dim() != 2 {
        return f64::INFINITY;
    }
    let mut cofaces = vec![[u32::MAX; 2]; k.count(1)];
    for t in 0..k.count(2) {
        for &e in k.face_indices(2, t) {
            let slot = &mut cofaces[e as usize];
            if slot[0] == u32::MAX {
                slot[0] = t as u32;
            } else {
                slot[1] = t as u32;
            }
        }
    }
    let circ = k.circumdata();
    cofaces
        .iter()
        .filter(|c| c[1] != u32::MAX)
        .map(|&[a, b]| domain.distance(&circ[a as usize].center, &circ[b as usize].center))
        .fold(f64::INFINITY, f64::min)
}

/// Rasterise `U(W, Z)` (pixels whose centre is nearest to a point of `W`),
/// form the closed-square cubical complex on the periodic grid and return
/// its Betti numbers and Euler characteristic.
///
/// Rows are swept exactly along the Voronoi cells they cross and stored as
/// runs, so very fine resolutions stay cheap in memory.
pub fn pixel_oracle(
    config: &PointConfiguration,
    w: &[u32],
    resolution: f64,
) -> Result<PixelHomology, HomologyError> {
    let dom = *config.domain();
    if dom.dim() != 2 {
        return Err(HomologyError::PixelDimension(dom.dim()));
    }
    let limit = min_pair_distance(config) / 4.0;
    if !(resolution > 0.0) || resolution > limit {
        return Err(HomologyError::ResolutionTooCoarse { resolution, limit });
    }
    let m = (dom.side() / resolution).ceil() as usize;
    if m > MAX_PIXELS_PER_AXIS {
        return Err(HomologyError::ResolutionTooFine(resolution, MAX_PIXELS_PER_AXIS));
    }
    let in_w = mask_of(config.len(), w);
    let mut sweep = RowSweep::new(config);
    let mut acc = RunComplex::new(m);
    for y in 0..m {
        let runs = sweep.runs(y, m, &in_w);
        acc.push_row(runs);
    }
    Ok(acc.finish())
}

/// [`pixel_oracle`] at `resolution`, halved until no corner contacts remain.
pub fn pixel_oracle_refined(
    config: &PointConfiguration,
    w: &[u32],
    resolution: f64,
) -> Result<PixelHomology, HomologyError> {
    let mut res = resolution;
    loop {
        let h = pixel_oracle(config, w, res)?;
        if h.corner_contacts == 0 {
            return Ok(h);
        }
        res /= 2.0;
    }
}

/// Pixel runs `[a, b)` of one row, sorted, disjoint and non-adjacent
/// within `[0, m)`.
type Runs = Vec<(u32, u32)>;

struct RowSweep {
    side: f64,
    /// Point images `(x, y, id)` for `y` in `[-L, 2L)`, sorted by `y`.
    images: Vec<(f64, f64, u32)>,
    band: f64,
    cands: Vec<(f64, f64, u32)>,
    segs: Vec<(f64, u32)>,
}

impl RowSweep {
    fn new(config: &PointConfiguration) -> Self {
        let side = config.domain().side();
        let mut images = Vec::with_capacity(3 * config.len());
        for (id, p) in config.points().iter().enumerate() {
            for s in [-side, 0.0, side] {
                images.push((p[0], p[1] + s, id as u32));
            }
        }
        images.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spacing = (side * side / config.len().max(1) as f64).sqrt();
        Self {
            side,
            images,
            band: spacing,
            cands: Vec::new(),
            segs: Vec::new(),
        }
    }

    fn gather(&mut self, y: f64) {
        let (lo, hi) = (y - self.band, y + self.band);
        let start = self.images.partition_point(|p| p.1 < lo);
        self.cands.clear();
        for &(x, py, id) in &self.images[start..] {
            if py > hi {
                break;
            }
            let dy2 = (py - y) * (py - y);
            self.cands.push((x, dy2, id));
            if x > self.side - self.band {
                self.cands.push((x - self.side, dy2, id));
            }
            if x < self.band {
                self.cands.push((x + self.side, dy2, id));
            }
        }
    }

    /// Cells met along the row at height `y`, as `(start, id)` segments,
    /// and the largest distance from the row to its nearest point. Returns
    /// `None` when the candidate band might miss a nearer point.
    fn walk(&self, out: &mut Vec<(f64, u32)>) -> Option<f64> {
        out.clear();
        let key = |c: &(f64, f64, u32)| c.0 * c.0 + c.1;
        let dist2 = |c: &(f64, f64, u32), t: f64| (t - c.0) * (t - c.0) + c.1;
        let mut z = *self
            .cands
            .iter()
            .min_by(|a, b| dist2(a, 0.0).total_cmp(&dist2(b, 0.0)).then(a.2.cmp(&b.2)))?;
        let mut t = 0.0;
        let b2 = self.band * self.band;
        let mut far = dist2(&z, 0.0);
        if far > b2 {
            return None;
        }
        loop {
            out.push((t, z.2));
            let mut next: Option<(f64, (f64, f64, u32))> = None;
            for c in &self.cands {
                if c.0 <= z.0 {
                    continue;
                }
                // Crossings behind `t` only arise from rounding; every step
                // moves to a larger `x`, so clamping still terminates.
                let tc = ((key(c) - key(&z)) / (2.0 * (c.0 - z.0))).max(t);
                if next.is_none_or(|(tn, n)| tc < tn || (tc == tn && c.0 > n.0)) {
                    next = Some((tc, *c));
                }
            }
            match next {
                Some((tc, c)) if tc < self.side => {
                    far = far.max(dist2(&z, tc));
                    if far > b2 {
                        return None;
                    }
                    t = tc;
                    z = c;
                }
                _ => {
                    far = far.max(dist2(&z, self.side));
                    return (far <= b2).then_some(far.sqrt());
                }
            }
        }
    }

    fn runs(&mut self, row: usize, m: usize, in_w: &[bool]) -> Runs {
        let h = self.side / m as f64;
        let y = (row as f64 + 0.5) * h;
        let mut segs = std::mem::take(&mut self.segs);
        loop {
            self.gather(y);
            if let Some(far) = self.walk(&mut segs) {
                // Neighbouring rows see nearly the same cells.
                self.band = far * 1.05 + 1e-9 * self.side;
                break;
            }
            self.band *= 2.0;
        }
        // First pixel whose centre lies at or beyond `t`.
        let first = |t: f64| ((t / h - 0.5).ceil().max(0.0) as usize).min(m) as u32;
        let mut runs: Runs = Vec::new();
        for (s, &(t0, id)) in segs.iter().enumerate() {
            if !in_w[id as usize] {
                continue;
            }
            let t1 = segs.get(s + 1).map_or(self.side, |n| n.0);
            let (a, b) = (first(t0), first(t1));
            if a >= b {
                continue;
            }
            match runs.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => runs.push((a, b)),
            }
        }
        self.segs = segs;
        runs
    }
}

/// Streaming counts of the closed-square complex of a periodic raster given
/// row by row as runs, with 8-connected components by union-find on runs.
struct RunComplex {
    m: usize,
    rows: usize,
    verts: i64,
    edges: i64,
    faces: i64,
    full_rows: usize,
    corner_contacts: usize,
    /// Components that no longer reach the current row or the first one.
    closed: usize,
    uf: UnionFind,
    first: Option<(Runs, Vec<u32>)>,
    prev: Option<(Runs, Vec<u32>)>,
    pieces: Vec<(i64, i64)>,
    marks: [Vec<u32>; 4],
    renamed: Vec<(u32, u32)>,
}

fn cyclic_meet(a: (i64, i64), b: (i64, i64), m: i64) -> bool {
    if a.1 - a.0 >= m {
        return b.1 > b.0;
    }
    [-m, 0, m]
        .iter()
        .any(|&s| a.0 < b.1 + s && b.0 + s < a.1)
}

/// Columns `x` where a run starts (pixel `x - 1` empty, `x` full) into
/// `starts` and where one ends (pixel `x - 1` full, `x` empty) into `ends`,
/// both sorted mod `m`.
fn boundaries(runs: &Runs, m: u32, starts: &mut Vec<u32>, ends: &mut Vec<u32>) {
    starts.clear();
    ends.clear();
    if runs.len() == 1 && runs[0] == (0, m) {
        return;
    }
    let wraps = runs.len() > 1 && runs[0].0 == 0 && runs[runs.len() - 1].1 == m;
    for (k, r) in runs.iter().enumerate() {
        if !(wraps && k == 0) {
            starts.push(r.0);
        }
        if !(wraps && k == runs.len() - 1) {
            ends.push(r.1 % m);
        }
    }
    if ends.last() == Some(&0) {
        ends.rotate_right(1);
    }
}

impl RunComplex {
    fn new(m: usize) -> Self {
        Self {
            m,
            rows: 0,
            verts: 0,
            edges: 0,
            faces: 0,
            full_rows: 0,
            corner_contacts: 0,
            closed: 0,
            uf: UnionFind::new(0),
            first: None,
            prev: None,
            pieces: Vec::new(),
            marks: Default::default(),
            renamed: Vec::new(),
        }
    }

    /// Measure of the union on `Z / m` of the runs of `rows`, each widened
    /// by `grow` on the right.
    fn union_len(&mut self, rows: &[&Runs], grow: i64) -> i64 {
        let m = self.m as i64;
        self.pieces.clear();
        for &(a, b) in rows.iter().flat_map(|r| r.iter()) {
            let (a, b) = (a as i64, b as i64 + grow);
            if b - a >= m {
                return m;
            }
            if b > m {
                self.pieces.push((a, m));
                self.pieces.push((0, b - m));
            } else {
                self.pieces.push((a, b));
            }
        }
        self.pieces.sort_unstable();
        let mut total = 0;
        let mut cur: Option<(i64, i64)> = None;
        for &(a, b) in &self.pieces {
            match cur {
                Some((ca, cb)) if a <= cb => cur = Some((ca, cb.max(b))),
                Some((ca, cb)) => {
                    total += cb - ca;
                    cur = Some((a, b));
                }
                None => cur = Some((a, b)),
            }
        }
        total + cur.map_or(0, |(a, b)| b - a)
    }

    fn new_ids(&mut self, runs: &Runs) -> Vec<u32> {
        let ids: Vec<u32> = runs.iter().map(|_| self.uf.push()).collect();
        // Pixels m - 1 and 0 of a row are neighbours.
        if runs.len() > 1 && runs[0].0 == 0 && runs[runs.len() - 1].1 as usize == self.m {
            self.uf.union(ids[0], ids[runs.len() - 1]);
        }
        ids
    }

    /// Counts for the lattice line between `below` and `above` and adjacency
    /// of their runs.
    fn join(&mut self, below: &(Runs, Vec<u32>), above: &(Runs, Vec<u32>)) {
        let m = self.m as i64;
        self.verts += self.union_len(&[&below.0, &above.0], 1);
        self.edges += self.union_len(&[&below.0, &above.0], 0);
        let [sb, eb, sa, ea] = &mut self.marks;
        boundaries(&below.0, self.m as u32, sb, eb);
        boundaries(&above.0, self.m as u32, sa, ea);
        self.corner_contacts += count_common(eb, sa) + count_common(sb, ea);
        for (ra, &ia) in below.0.iter().zip(&below.1) {
            let dilated = (ra.0 as i64 - 1, ra.1 as i64 + 1);
            for (rb, &ib) in above.0.iter().zip(&above.1) {
                if cyclic_meet(dilated, (rb.0 as i64, rb.1 as i64), m) {
                    self.uf.union(ia, ib);
                }
            }
        }
    }

    fn push_row(&mut self, runs: Runs) {
        self.faces += runs.iter().map(|r| (r.1 - r.0) as i64).sum::<i64>();
        if runs.len() == 1 && runs[0] == (0, self.m as u32) {
            self.full_rows += 1;
        }
        // Vertical edges inside this row.
        self.edges += self.union_len(&[&runs], 1);
        let ids = self.new_ids(&runs);
        let row = (runs, ids);
        let before = self.prev.take();
        if let Some(prev) = &before {
            self.join(prev, &row);
        }
        if self.first.is_none() {
            self.first = Some(row.clone());
        }
        self.prev = Some(row);
        self.rows += 1;
        self.compact(before.map(|b| b.1).unwrap_or_default());
    }

    /// Count components that ended below the current row and renumber the
    /// live ones, so memory stays proportional to a row.
    fn compact(&mut self, old: Vec<u32>) {
        let (Some(prev), Some(first)) = (self.prev.as_mut(), self.first.as_mut()) else {
            return;
        };
        let renamed = &mut self.renamed;
        renamed.clear();
        for id in prev.1.iter_mut().chain(first.1.iter_mut()) {
            let root = self.uf.find(*id);
            *id = match renamed.iter().find(|e| e.0 == root) {
                Some(e) => e.1,
                None => {
                    renamed.push((root, renamed.len() as u32));
                    renamed.len() as u32 - 1
                }
            };
        }
        let mut ended: Vec<u32> = old
            .iter()
            .map(|&id| self.uf.find(id))
            .filter(|r| !renamed.iter().any(|e| e.0 == *r))
            .collect();
        ended.sort_unstable();
        ended.dedup();
        self.closed += ended.len();
        self.uf = UnionFind::new(renamed.len());
    }

    fn finish(mut self) -> PixelHomology {
        let (Some(prev), Some(first)) = (self.prev.take(), self.first.take()) else {
            unreachable!("at least one row");
        };
        // The top row wraps onto the bottom one.
        self.join(&prev, &first);
        let euler = self.verts - self.edges + self.faces;
        let mut open: Vec<u32> = prev.1.iter().chain(&first.1).map(|&id| self.uf.find(id)).collect();
        open.sort_unstable();
        open.dedup();
        let b0 = self.closed + open.len();
        let b2 = usize::from(self.full_rows == self.rows);
        PixelHomology {
            b0,
            euler,
            b1: b0 as i64 + b2 as i64 - euler,
            b2,
            pixels_per_axis: self.m,
            corner_contacts: self.corner_contacts,
        }
    }
}

fn count_common(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
