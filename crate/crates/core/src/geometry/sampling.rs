use super::{Coords, GeometryError, TorusDomain, MAX_DIM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use std::fmt::Write as _;

/// A finite point sample on the torus together with a uniform colour mark per
/// point. The red set at parameter `p` is `{z : mark(z) <= p}`, so a single
/// configuration realises the percolation for every `p` at once and the red
/// sets are nested.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    domain: TorusDomain,
    points: Vec<Coords>,
    marks: Vec<f64>,
    seed: u64,
}

impl PointConfiguration {
    /// Validating constructor: coordinates in `[0, L)`, marks in `[0, 1)`,
    /// points pairwise distinct.
    pub fn new(
        domain: TorusDomain,
        points: Vec<Coords>,
        marks: Vec<f64>,
        seed: u64,
    ) -> Result<Self, GeometryError> {
        if points.len() != marks.len() {
            return Err(GeometryError::Parse(format!(
                "{} points but {} marks",
                points.len(),
                marks.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !domain.contains(p)) {
            return Err(GeometryError::Parse(format!(
                "point {i} lies outside [0, L)^d"
            )));
        }
        if let Some(i) = marks.iter().position(|m| !(0.0..1.0).contains(m)) {
            return Err(GeometryError::Parse(format!("mark {i} outside [0, 1)")));
        }
        if has_duplicates(&points) {
            return Err(GeometryError::Degenerate("repeated point".into()));
        }
        Ok(Self {
            domain,
            points,
            marks,
            seed,
        })
    }

    pub fn empty(domain: TorusDomain, seed: u64) -> Self {
        Self {
            domain,
            points: Vec::new(),
            marks: Vec::new(),
            seed,
        }
    }

    pub fn domain(&self) -> &TorusDomain {
        &self.domain
    }

    pub fn points(&self) -> &[Coords] {
        &self.points
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn is_red(&self, i: usize, p: f64) -> bool {
        self.marks[i] <= p
    }

    /// Membership mask of the red set `R(p)`.
    pub fn red_mask(&self, p: f64) -> Vec<bool> {
        self.marks.iter().map(|&m| m <= p).collect()
    }

    /// Serialise as text: a `d L seed n` header, then one line per point with
    /// `d` coordinates and the mark, all with 17 significant digits.
    pub fn to_text(&self) -> String {
        let d = self.domain.dim();
        let mut out = String::new();
        writeln!(
            out,
            "{} {} {} {}",
            d,
            fmt17(self.domain.side()),
            self.seed,
            self.points.len()
        )
        .unwrap();
        for (p, m) in self.points.iter().zip(&self.marks) {
            for v in &p[..d] {
                out.push_str(&fmt17(*v));
                out.push(' ');
            }
            out.push_str(&fmt17(*m));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GeometryError> {
        let bad = |msg: &str| GeometryError::Parse(msg.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split_whitespace()
            .collect();
        if header.len() != 4 {
            return Err(bad("header must be `d L seed n`"));
        }
        let d: usize = header[0].parse().map_err(|_| bad("bad d"))?;
        let side: f64 = header[1].parse().map_err(|_| bad("bad L"))?;
        let seed: u64 = header[2].parse().map_err(|_| bad("bad seed"))?;
        let n: usize = header[3].parse().map_err(|_| bad("bad n"))?;
        let domain = TorusDomain::new(d, side)?;
        let mut points = Vec::with_capacity(n);
        let mut marks = Vec::with_capacity(n);
        for line in lines {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad("bad number"))?;
            if vals.len() != d + 1 {
                return Err(bad("point line must have d coordinates and a mark"));
            }
            let mut c = [0.0; MAX_DIM];
            c[..d].copy_from_slice(&vals[..d]);
            points.push(c);
            marks.push(vals[d]);
        }
        if points.len() != n {
            return Err(bad("point count does not match header"));
        }
        Self::new(domain, points, marks, seed)
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn has_duplicates(points: &[Coords]) -> bool {
    let mut keys: Vec<[u64; MAX_DIM]> = points.iter().map(|p| p.map(f64::to_bits)).collect();
    keys.sort_unstable();
    keys.windows(2).any(|w| w[0] == w[1])
}

/// Homogeneous Poisson sample of the given intensity with i.i.d. uniform
/// marks. Deterministic in `seed`.
pub fn sample_poisson(
    domain: TorusDomain,
    intensity: f64,
    seed: u64,
) -> Result<PointConfiguration, GeometryError> {
    if !(intensity.is_finite() && intensity > 0.0) {
        return Err(GeometryError::Intensity(intensity));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = intensity * domain.volume();
    let n = Poisson::new(mean)
        .map_err(|_| GeometryError::Intensity(intensity))?
        .sample(&mut rng) as usize;
    let d = domain.dim();
    let draw = |rng: &mut ChaCha8Rng| {
        let mut c = [0.0; MAX_DIM];
        for v in c.iter_mut().take(d) {
            *v = domain.wrap_coord(rng.random::<f64>() * domain.side());
        }
        c
    };
    let mut points: Vec<Coords> = Vec::with_capacity(n);
    let mut marks = Vec::with_capacity(n);
    for _ in 0..n {
        points.push(draw(&mut rng));
        marks.push(rng.random::<f64>());
    }
    while has_duplicates(&points) {
        // Measure-zero event; redraw every repeated coordinate vector.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| points[i].map(f64::to_bits));
        for w in order.windows(2) {
            if points[w[0]] == points[w[1]] {
                points[w[1]] = draw(&mut rng);
            }
        }
    }
    Ok(PointConfiguration {
        domain,
        points,
        marks,
        seed,
    })
}

/// Displace every point by an independent uniform vector of norm `< eta`
/// (rejection-sampled from the cube), wrapping back onto the torus. Marks and
/// ordering are kept, so the induced bijection is the identity on indices.
pub fn perturb(config: &PointConfiguration, eta: f64, seed: u64) -> PointConfiguration {
    if eta <= 0.0 {
        return config.clone();
    }
    let d = config.domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = config
        .points
        .iter()
        .map(|p| {
            let offset = loop {
                let mut v = [0.0; MAX_DIM];
                for x in v.iter_mut().take(d) {
                    *x = (2.0 * rng.random::<f64>() - 1.0) * eta;
                }
                if v.iter().map(|x| x * x).sum::<f64>() < eta * eta {
                    break v;
                }
            };
            let mut q = [0.0; MAX_DIM];
            for k in 0..d {
                q[k] = config.domain.wrap_coord(p[k] + offset[k]);
            }
            q
        })
        .collect();
    PointConfiguration {
        domain: config.domain,
        points,
        marks: config.marks.clone(),
        seed: config.seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        let dom = TorusDomain::new(2, 10.0).unwrap();
        let a = sample_poisson(dom, 1.0, 42).unwrap();
        let b = sample_poisson(dom, 1.0, 42).unwrap();
        let c = sample_poisson(dom, 1.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_nonpositive_intensity() {
        let dom = TorusDomain::new(2, 10.0).unwrap();
        assert!(sample_poisson(dom, 0.0, 1).is_err());
        assert!(sample_poisson(dom, -1.0, 1).is_err());
    }

    #[test]
    fn count_mean_within_three_sigma() {
        // Poisson(1600): mean of 200 seeds has standard error 40 / sqrt(200).
        let dom = TorusDomain::new(2, 40.0).unwrap();
        let trials = 200;
        let total: usize = (0..trials)
            .map(|s| sample_poisson(dom, 1.0, s).unwrap().len())
            .sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 1600.0).abs() < 3.0 * 40.0 / (trials as f64).sqrt());
    }

    #[test]
    fn count_variance_matches_poisson() {
        // Sample variance of Poisson(100) over 1000 seeds: its standard error
        // is sqrt(2 var^2 / (n-1) + mu4 excess) ~ sqrt((2*100^2 + 100)/999).
        let dom = TorusDomain::new(2, 10.0).unwrap();
        let n = 1000;
        let counts: Vec<f64> = (0..n)
            .map(|s| sample_poisson(dom, 1.0, 10_000 + s).unwrap().len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = ((2.0 * 100.0f64.powi(2) + 100.0) / (n - 1) as f64).sqrt();
        assert!((var - 100.0).abs() < 3.0 * se, "var={var} se={se}");
    }

    #[test]
    fn marks_and_points_in_range() {
        let dom = TorusDomain::new(3, 5.0).unwrap();
        let c = sample_poisson(dom, 1.0, 7).unwrap();
        assert!(c.points().iter().all(|p| dom.contains(p)));
        assert!(c.marks().iter().all(|m| (0.0..1.0).contains(m)));
    }

    #[test]
    fn red_sets_are_nested() {
        let dom = TorusDomain::new(2, 10.0).unwrap();
        let c = sample_poisson(dom, 1.0, 3).unwrap();
        let lo = c.red_mask(0.3);
        let hi = c.red_mask(0.6);
        assert!(lo.iter().zip(&hi).all(|(a, b)| !a || *b));
        assert!(c.red_mask(1.0).iter().all(|&r| r));
    }

    #[test]
    fn perturbation_contract() {
        let dom = TorusDomain::new(2, 10.0).unwrap();
        let c = sample_poisson(dom, 1.0, 5).unwrap();
        assert_eq!(perturb(&c, 0.0, 1), c);
        let eta = 0.05;
        let moved = perturb(&c, eta, 9);
        assert_eq!(moved, perturb(&c, eta, 9));
        assert_eq!(moved.marks(), c.marks());
        for (a, b) in c.points().iter().zip(moved.points()) {
            assert!(dom.distance(a, b) < eta);
            assert!(dom.contains(b));
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let dom = TorusDomain::new(3, 4.5).unwrap();
        let c = sample_poisson(dom, 1.0, 11).unwrap();
        let text = c.to_text();
        assert!(text.starts_with("3 "));
        let back = PointConfiguration::from_text(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn malformed_text_is_rejected() {
        assert!(PointConfiguration::from_text("").is_err());
        assert!(PointConfiguration::from_text("2 10 1 2\n1 1 0.5\n").is_err());
        assert!(PointConfiguration::from_text("2 10 1 1\n11 1 0.5\n").is_err());
    }
}
