use proptest::prelude::*;
use std::collections::VecDeque;
use vorperc_core::complex::full_subcomplex;
use vorperc_core::field::FieldMatrix;
use vorperc_core::geometry::{build_delaunay, coords, sample_poisson, PointConfiguration, TorusDomain};
use vorperc_core::homology::{
    betti_numbers, binomial, events, induced_rank, induced_rank_cocycle, min_pair_distance,
    min_voronoi_edge, pixel_oracle_refined, HomologyError,
};
use vorperc_core::DelaunayComplex;

fn red(cfg: &PointConfiguration, p: f64) -> Vec<u32> {
    (0..cfg.len() as u32).filter(|&v| cfg.is_red(v as usize, p)).collect()
}

/// Rank over GF(q) of the winding vectors of the fundamental cycles of the
/// 1-skeleton of `w`, found by breadth-first search with lifted positions.
fn winding_rank(k: &DelaunayComplex, w: &[u32], q: u32) -> usize {
    let dom = *k.domain().unwrap();
    let d = dom.dim();
    let pos = k.positions();
    let mut inside = vec![false; k.n_vertices()];
    for &v in w {
        inside[v as usize] = true;
    }
    let mut lift: Vec<Option<[f64; 4]>> = vec![None; k.n_vertices()];
    let mut windings: Vec<Vec<i64>> = Vec::new();
    for &root in w {
        if lift[root as usize].is_some() {
            continue;
        }
        lift[root as usize] = Some(pos[root as usize]);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let lu = lift[u as usize].unwrap();
            for &v in k.neighbors(u) {
                if !inside[v as usize] {
                    continue;
                }
                let step = dom.displacement(&pos[u as usize], &pos[v as usize]);
                let mut lv = lu;
                for c in 0..d {
                    lv[c] += step[c];
                }
                match lift[v as usize] {
                    None => {
                        lift[v as usize] = Some(lv);
                        queue.push_back(v);
                    }
                    Some(old) => {
                        let wind: Vec<i64> = (0..d).map(|c| ((lv[c] - old[c]) / dom.side()).round() as i64).collect();
                        if wind.iter().any(|&x| x != 0) {
                            windings.push(wind);
                        }
                    }
                }
            }
        }
    }
    if windings.is_empty() {
        return 0;
    }
    FieldMatrix::from_dense(&windings, q).unwrap().rank()
}

#[test]
fn routes_agree_across_dimensions() {
    let cases: [(usize, f64, u64, &[f64]); 3] = [
        (2, 10.0, 3, &[0.3, 0.5, 0.7]),
        (3, 6.0, 1, &[0.4, 0.6]),
        (4, 6.0, 1, &[0.5]),
    ];
    for (d, side, seeds, ps) in cases {
        let dom = TorusDomain::new(d, side).unwrap();
        for seed in 0..seeds {
            let cfg = sample_poisson(dom, 1.0, seed).unwrap();
            let k = build_delaunay(&cfg).unwrap();
            for &p in ps {
                let w = red(&cfg, p);
                let degrees: Vec<usize> = if d == 4 { vec![2] } else { (0..=d).collect() };
                for i in degrees {
                    let a = induced_rank(&k, &w, i, 3).unwrap();
                    let b = induced_rank_cocycle(&k, &w, i, 3).unwrap();
                    assert_eq!(a, b, "d={d} seed={seed} p={p} i={i}");
                }
            }
        }
    }
}

#[test]
fn horizontal_band_carries_one_giant_cycle() {
    let dom = TorusDomain::new(2, 12.0).unwrap();
    let cfg = sample_poisson(dom, 4.0, 7).unwrap();
    let k = build_delaunay(&cfg).unwrap();
    let band: Vec<u32> = (0..cfg.len() as u32)
        .filter(|&v| (cfg.points()[v as usize][1] - 6.0).abs() < 1.0)
        .collect();
    assert_eq!(winding_rank(&k, &band, 3), 1);
    let r = induced_rank(&k, &band, 1, 3).unwrap();
    assert_eq!((r.rank_phi, r.betti_sub), (1, 1));
    assert!(r.event_a && r.event_s);
    let b = betti_numbers(&full_subcomplex(&k, &band), 3).unwrap();
    assert_eq!(b, vec![1, 1, 0]);
}

#[test]
fn rank_matches_winding_oracle() {
    for (d, side) in [(2usize, 10.0), (3, 6.0)] {
        let dom = TorusDomain::new(d, side).unwrap();
        for seed in 0..4 {
            let cfg = sample_poisson(dom, 1.0, 100 + seed).unwrap();
            let k = build_delaunay(&cfg).unwrap();
            for p in [0.2, 0.4, 0.5, 0.6, 0.8] {
                let w = red(&cfg, p);
                let r = induced_rank_cocycle(&k, &w, 1, 3).unwrap();
                assert_eq!(r.rank_phi, winding_rank(&k, &w, 3), "d={d} seed={seed} p={p}");
            }
        }
    }
}

#[test]
fn coefficient_field_does_not_change_surface_ranks() {
    let dom = TorusDomain::new(2, 10.0).unwrap();
    for seed in 0..6 {
        let cfg = sample_poisson(dom, 1.0, seed).unwrap();
        let k = build_delaunay(&cfg).unwrap();
        for p in [0.4, 0.5, 0.6] {
            let w = red(&cfg, p);
            for i in 0..=2 {
                let a = induced_rank_cocycle(&k, &w, i, 3).unwrap();
                let b = induced_rank_cocycle(&k, &w, i, 5).unwrap();
                assert_eq!((a.betti_sub, a.rank_phi), (b.betti_sub, b.rank_phi));
            }
        }
    }
}

// Subcomplexes of an orientable surface carry no torsion, so even GF(2)
// must agree at d = 2.
#[test]
fn event_a_agrees_across_fields_on_a_hundred_seeds() {
    let dom = TorusDomain::new(2, 10.0).unwrap();
    for seed in 0..100 {
        let cfg = sample_poisson(dom, 1.0, 1000 + seed).unwrap();
        let (a3, _) = events(&cfg, 0.5, 1, 3).unwrap();
        let (a5, _) = events(&cfg, 0.5, 1, 5).unwrap();
        let (a2, _) = events(&cfg, 0.5, 1, 2).unwrap();
        assert_eq!(a3.event_a, a5.event_a, "seed {seed}");
        assert_eq!(a3.rank_phi, a5.rank_phi, "seed {seed}");
        assert_eq!(a3.rank_phi, a2.rank_phi, "seed {seed}");
    }
}

#[test]
fn ranks_grow_with_p() {
    let dom = TorusDomain::new(2, 12.0).unwrap();
    for seed in 0..3 {
        let cfg = sample_poisson(dom, 1.0, seed).unwrap();
        let k = build_delaunay(&cfg).unwrap();
        for i in 0..=2 {
            let mut last = 0;
            for step in 0..=20 {
                let p = step as f64 / 20.0;
                let r = induced_rank_cocycle(&k, &red(&cfg, p), i, 3).unwrap();
                assert!(r.rank_phi >= last, "seed={seed} i={i} p={p}");
                last = r.rank_phi;
            }
            assert_eq!(last, binomial(2, i));
        }
    }
}

#[test]
fn duality_holds_on_random_samples() {
    for (d, side) in [(2usize, 12.0), (3, 6.0)] {
        let dom = TorusDomain::new(d, side).unwrap();
        for seed in 0..3 {
            let cfg = sample_poisson(dom, 1.0, seed).unwrap();
            for p in [0.3, 0.5, 0.7] {
                for i in 0..=d {
                    let (primal, dual) = events(&cfg, p, i, 3).unwrap();
                    assert_eq!(primal.rank_phi + dual.rank_phi, binomial(d, i));
                    if dual.event_s && dual.rank_phi == binomial(d, i) {
                        assert!(!primal.event_a);
                    }
                }
            }
        }
    }
}

#[test]
fn empty_and_full_red_sets() {
    let dom = TorusDomain::new(3, 6.0).unwrap();
    let cfg = sample_poisson(dom, 1.0, 2).unwrap();
    let k = build_delaunay(&cfg).unwrap();
    let all: Vec<u32> = (0..cfg.len() as u32).collect();
    for i in 0..=3 {
        let none = induced_rank(&k, &[], i, 3).unwrap();
        assert_eq!((none.betti_sub, none.rank_phi), (0, 0));
        assert!(!none.event_a && none.event_s);
        let full = induced_rank(&k, &all, i, 3).unwrap();
        assert_eq!((full.betti_sub, full.rank_phi), (binomial(3, i), binomial(3, i)));
        assert!(full.event_a && full.event_s);
    }
}

#[test]
fn torus_betti_numbers() {
    let dom = TorusDomain::new(2, 12.0).unwrap();
    let k = build_delaunay(&sample_poisson(dom, 1.0, 0).unwrap()).unwrap();
    let all: Vec<u32> = (0..k.n_vertices() as u32).collect();
    assert_eq!(betti_numbers(&full_subcomplex(&k, &all), 3).unwrap(), vec![1, 2, 1]);

    let dom = TorusDomain::new(4, 6.0).unwrap();
    let k = build_delaunay(&sample_poisson(dom, 1.0, 0).unwrap()).unwrap();
    let all: Vec<u32> = (0..k.n_vertices() as u32).collect();
    assert_eq!(betti_numbers(&full_subcomplex(&k, &all), 3).unwrap(), vec![1, 4, 6, 4, 1]);
}

#[test]
fn rejects_bad_degree_and_modulus() {
    let dom = TorusDomain::new(2, 8.0).unwrap();
    let cfg = sample_poisson(dom, 1.0, 1).unwrap();
    let k = build_delaunay(&cfg).unwrap();
    assert!(matches!(induced_rank(&k, &[], 3, 3), Err(HomologyError::Degree { .. })));
    assert!(induced_rank(&k, &[], 1, 4).is_err());
    let flat = DelaunayComplex::from_simplices(2, 3, &[vec![0, 1, 2]]).unwrap();
    assert!(matches!(induced_rank_cocycle(&flat, &[0], 1, 3), Err(HomologyError::NotPeriodic)));
}

#[test]
fn pixel_oracle_agrees_with_nerve() {
    let dom = TorusDomain::new(2, 10.0).unwrap();
    for seed in [1u64, 9, 18, 44, 48] {
        let cfg = sample_poisson(dom, 1.0, seed).unwrap();
        let k = build_delaunay(&cfg).unwrap();
        let w = red(&cfg, 0.5);
        let b = betti_numbers(&full_subcomplex(&k, &w), 3).unwrap();
        let scale = min_pair_distance(&cfg).min(min_voronoi_edge(&k));
        let h = pixel_oracle_refined(&cfg, &w, scale / 4.0).unwrap();
        assert_eq!((h.b0, h.b1), (b[0], b[1] as i64), "seed {seed}");
        assert_eq!(h.corner_contacts, 0);
    }
}

#[test]
fn pixel_oracle_on_a_lattice() {
    // Square lattice with one red column: the red cells form a vertical band.
    let dom = TorusDomain::new(2, 6.0).unwrap();
    let mut pts = Vec::new();
    let mut marks = Vec::new();
    for a in 0..6 {
        for b in 0..6 {
            pts.push(coords(&[a as f64 + 0.5 + 0.01 * b as f64, b as f64 + 0.5 + 0.013 * a as f64]));
            marks.push(if a == 2 { 0.1 } else { 0.9 });
        }
    }
    let cfg = PointConfiguration::new(dom, pts, marks, 0).unwrap();
    let h = pixel_oracle_refined(&cfg, &red(&cfg, 0.5), 0.01).unwrap();
    assert_eq!((h.b0, h.b1, h.b2), (1, 1, 0));
    assert!(pixel_oracle_refined(&cfg, &red(&cfg, 0.5), 0.5).is_err());
    let all = pixel_oracle_refined(&cfg, &red(&cfg, 1.0), 0.01).unwrap();
    assert_eq!((all.b0, all.b1, all.b2), (1, 2, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn routes_agree_on_random_red_sets(seed in 0u64..500, p in 0.05f64..0.95, i in 0usize..=2) {
        let dom = TorusDomain::new(2, 8.0).unwrap();
        let cfg = sample_poisson(dom, 1.0, seed).unwrap();
        if let Ok(k) = build_delaunay(&cfg) {
            let w = red(&cfg, p);
            prop_assert_eq!(induced_rank(&k, &w, i, 3).unwrap(), induced_rank_cocycle(&k, &w, i, 3).unwrap());
        }
    }
}
