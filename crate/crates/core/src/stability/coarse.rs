use super::StabilityError;
use crate::geometry::PointConfiguration;
use std::fmt::Write as _;

/// The `{-1, 0, 1}` grid over `m^d` cubes of side `L/m`, `m = ceil(L/delta)`.
/// Cells are stored with the first axis varying fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseState {
    dim: usize,
    m: usize,
    values: Vec<i8>,
}

/// Cube index along each axis of a point, for a grid of `m` cubes of side `h`.
pub(crate) fn cube_of(x: &[f64], dim: usize, m: usize, h: f64) -> usize {
    let mut idx = 0;
    for k in (0..dim).rev() {
        let c = ((x[k] / h).floor() as usize).min(m - 1);
        idx = idx * m + c;
    }
    idx
}

/// Coarse state of the percolation at level `p` (red means mark ≤ p).
///
/// Panics if `delta` is not positive.
pub fn coarse_state(config: &PointConfiguration, p: f64, delta: f64) -> CoarseState {
    assert!(delta > 0.0, "delta must be positive");
    let dom = config.domain();
    let d = dom.dim();
    let m = (dom.side() / delta).ceil().max(1.0) as usize;
    let h = dom.side() / m as f64;
    let mut values = vec![0i8; m.pow(d as u32)];
    for (x, &mark) in config.points().iter().zip(config.marks()) {
        let c = cube_of(x, d, m, h);
        if mark > p {
            values[c] = -1;
        } else if values[c] == 0 {
            values[c] = 1;
        }
    }
    CoarseState { dim: d, m, values }
}

/// `(p_bad, p_neutral, p_good)` of one cube of volume `delta^d` under unit
/// intensity.
pub fn coarse_probabilities(p: f64, delta: f64, d: usize) -> (f64, f64, f64) {
    let b = delta.powi(d as i32);
    let p_bad = -(-b * (1.0 - p)).exp_m1();
    let p_neutral = (-b).exp();
    let p_good = 1.0 - p_bad - p_neutral;
    (p_bad, p_neutral, p_good.max(0.0))
}

impl CoarseState {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cubes_per_axis(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn get(&self, cell: &[usize]) -> i8 {
        let idx = cell.iter().rev().fold(0, |acc, &c| acc * self.m + c);
        self.values[idx]
    }

    /// Number of cells with value −1, 0 and 1.
    pub fn counts(&self) -> [usize; 3] {
        let mut out = [0; 3];
        for &v in &self.values {
            out[(v + 1) as usize] += 1;
        }
        out
    }

    /// Run-length text: a `coarse d m` header, then one line per row of `m`
    /// cells as `value*count` runs.
    pub fn to_text(&self) -> String {
        let mut s = format!("coarse {} {}\n", self.dim, self.m);
        for row in self.values.chunks(self.m.max(1)) {
            let mut runs: Vec<(i8, usize)> = Vec::new();
            for &v in row {
                match runs.last_mut() {
                    Some((last, n)) if *last == v => *n += 1,
                    _ => runs.push((v, 1)),
                }
            }
            let line: Vec<String> = runs.iter().map(|(v, n)| format!("{v}*{n}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, StabilityError> {
        let bad = |msg: &str| StabilityError::Parse(msg.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty input"))?.split_whitespace().collect();
        if header.len() != 3 || header[0] != "coarse" {
            return Err(bad("expected `coarse d m` header"));
        }
        let dim: usize = header[1].parse().map_err(|_| bad("bad dimension"))?;
        let m: usize = header[2].parse().map_err(|_| bad("bad cube count"))?;
        if !(1..=4).contains(&dim) || m == 0 {
            return Err(bad("dimension or cube count out of range"));
        }
        let total = m.pow(dim as u32);
        let mut values = Vec::with_capacity(total);
        for line in lines {
            let before = values.len();
            for run in line.split_whitespace() {
                let (v, n) = run.split_once('*').ok_or_else(|| bad(run))?;
                let v: i8 = v.parse().map_err(|_| bad(run))?;
                let n: usize = n.parse().map_err(|_| bad(run))?;
                if !(-1..=1).contains(&v) {
                    return Err(bad(run));
                }
                values.extend(std::iter::repeat_n(v, n));
            }
            if values.len() - before != m {
                return Err(bad("row length differs from m"));
            }
        }
        if values.len() != total {
            return Err(bad("wrong number of cells"));
        }
        Ok(Self { dim, m, values })
    }
}
