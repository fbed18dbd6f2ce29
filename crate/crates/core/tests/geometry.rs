use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vorperc_core::geometry::{
    build_delaunay, circumsphere, coords, covering_radius, is_r_sample, perturb, sample_poisson,
    torus_distance, GeometryError, PointConfiguration, TorusDomain,
};

#[test]
fn circumsphere_examples() {
    let c = circumsphere(&[coords(&[0.0, 0.0]), coords(&[2.0, 0.0]), coords(&[0.0, 2.0])], 2).unwrap();
    assert!((c.center[0] - 1.0).abs() < 1e-12 && (c.center[1] - 1.0).abs() < 1e-12);
    assert!((c.radius - 2f64.sqrt()).abs() < 1e-12);
    let collinear = [coords(&[0.0, 0.0]), coords(&[1.0, 0.0]), coords(&[2.0, 0.0])];
    assert!(matches!(circumsphere(&collinear, 2), Err(GeometryError::Degenerate(_))));
    // Regular tetrahedron with unit edges.
    let h = (2.0f64 / 3.0).sqrt();
    let tet = [
        coords(&[0.0, 0.0, 0.0]),
        coords(&[1.0, 0.0, 0.0]),
        coords(&[0.5, 3f64.sqrt() / 2.0, 0.0]),
        coords(&[0.5, 3f64.sqrt() / 6.0, h]),
    ];
    let c = circumsphere(&tet, 3).unwrap();
    assert!((c.radius - (3.0f64 / 8.0).sqrt()).abs() < 1e-12);
}

#[test]
fn empty_circumspheres_on_small_tori() {
    let mut checked = 0;
    for d in [2usize, 3] {
        let side = if d == 2 { 6.0 } else { 3.4 };
        let dom = TorusDomain::new(d, side).unwrap();
        for seed in 0..80 {
            let cfg = sample_poisson(dom, 1.0, seed).unwrap();
            if cfg.len() > 40 {
                continue;
            }
            let Ok(k) = build_delaunay(&cfg) else { continue };
            let tau = dom.geo_tolerance();
            for (t, simplex) in k.simplices(d).iter().enumerate() {
                let ball = k.circumdata()[t];
                for (v, x) in cfg.points().iter().enumerate() {
                    if simplex.contains(&(v as u32)) {
                        continue;
                    }
                    let dist = torus_distance(x, &ball.center, &dom);
                    assert!(dist >= ball.radius - tau, "d={d} seed={seed} point {v} inside ball {t}");
                }
            }
            checked += 1;
        }
    }
    assert!(checked >= 25, "only {checked} samples accepted");
}

#[test]
fn closed_surface_counts() {
    let dom = TorusDomain::new(2, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pts: Vec<_> = (0..100)
        .map(|_| coords(&[rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0]))
        .collect();
    let cfg = PointConfiguration::new(dom, pts, vec![0.5; 100], 4).unwrap();
    let k = build_delaunay(&cfg).unwrap();
    let mut cofaces = vec![0usize; k.count(1)];
    for t in 0..k.count(2) {
        for &e in k.face_indices(2, t) {
            cofaces[e as usize] += 1;
        }
    }
    assert!(cofaces.iter().all(|&c| c == 2));
    assert_eq!(k.euler_characteristic(), 0);
}

#[test]
fn euler_characteristic_vanishes_in_every_dimension() {
    for (d, side, seeds) in [(2usize, 15.0, 4), (3, 7.0, 4), (4, 6.0, 2)] {
        let dom = TorusDomain::new(d, side).unwrap();
        let mut accepted = 0;
        for seed in 0..seeds {
            if let Ok(k) = build_delaunay(&sample_poisson(dom, 1.0, seed).unwrap()) {
                assert_eq!(k.euler_characteristic(), 0, "d={d} seed={seed}");
                assert!(k.is_closed_pseudomanifold());
                accepted += 1;
            }
        }
        assert!(accepted >= seeds - 1, "d={d}");
    }
}

#[test]
fn four_point_square_is_too_sparse_to_periodize() {
    // Circumradius about 3.5 exceeds L/4 = 2.5 on this torus.
    let dom = TorusDomain::new(2, 10.0).unwrap();
    let pts = vec![
        coords(&[1.0, 1.0]),
        coords(&[6.004, 1.002]),
        coords(&[1.007, 6.001]),
        coords(&[6.003, 6.009]),
    ];
    let cfg = PointConfiguration::new(dom, pts, vec![0.1; 4], 0).unwrap();
    assert!(matches!(build_delaunay(&cfg), Err(GeometryError::TooSparse { .. })));
}

#[test]
fn covering_radius_of_a_jittered_grid() {
    let h = 1.0;
    let side = 12.0;
    let dom = TorusDomain::new(2, side).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pts = Vec::new();
    for a in 0..12 {
        for b in 0..12 {
            let j = |rng: &mut ChaCha8Rng| (rng.random::<f64>() - 0.5) * 0.02;
            pts.push(coords(&[(a as f64 + 0.5) * h + j(&mut rng), (b as f64 + 0.5) * h + j(&mut rng)]));
        }
    }
    let n = pts.len();
    let cfg = PointConfiguration::new(dom, pts, vec![0.5; n], 0).unwrap();
    let k = build_delaunay(&cfg).unwrap();
    let r = covering_radius(&k);
    let expected = h * 2f64.sqrt() / 2.0;
    assert!((r - expected).abs() < 0.2 * expected, "r = {r}");
    let max = k.circumdata().iter().map(|c| c.radius).fold(0.0, f64::max);
    assert_eq!(r, max);
    assert!(is_r_sample(&k, r + 0.001));
    assert!(!is_r_sample(&k, r - 0.001));

    // Dense probing for the farthest point from the sample.
    let mut far = 0.0f64;
    for _ in 0..20000 {
        let x = coords(&[rng.random::<f64>() * side, rng.random::<f64>() * side]);
        let near = cfg
            .points()
            .iter()
            .map(|p| torus_distance(&x, p, &dom))
            .fold(f64::INFINITY, f64::min);
        far = far.max(near);
    }
    assert!(far <= r + 1e-9 && far > 0.9 * r, "probe {far} vs {r}");
}

#[test]
fn perturbation_contract() {
    let dom = TorusDomain::new(2, 10.0).unwrap();
    let cfg = sample_poisson(dom, 1.0, 2).unwrap();
    assert_eq!(perturb(&cfg, 0.0, 1), cfg);
    let moved = perturb(&cfg, 0.05, 1);
    assert_eq!(moved, perturb(&cfg, 0.05, 1));
    assert_eq!(moved.marks(), cfg.marks());
    for (a, b) in cfg.points().iter().zip(moved.points()) {
        assert!(torus_distance(a, b, &dom) < 0.05);
    }
}

proptest! {
    #[test]
    fn minimum_image_is_minimal(
        d in 2usize..=4,
        x in prop::array::uniform4(0.0f64..7.0),
        y in prop::array::uniform4(0.0f64..7.0),
        t in prop::array::uniform4(-2i32..=2),
    ) {
        let dom = TorusDomain::new(d, 7.0).unwrap();
        let (mut x, mut y) = (x, y);
        for k in d..4 {
            x[k] = 0.0;
            y[k] = 0.0;
        }
        let dist = torus_distance(&x, &y, &dom);
        let lifted: f64 = (0..d)
            .map(|k| (x[k] - y[k] - 7.0 * t[k] as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        prop_assert!(dist <= lifted + 1e-12);
        prop_assert!((dist - torus_distance(&y, &x, &dom)).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>()) {
        let dom = TorusDomain::new(2, 6.0).unwrap();
        prop_assert_eq!(sample_poisson(dom, 1.0, seed).unwrap(), sample_poisson(dom, 1.0, seed).unwrap());
    }
}
