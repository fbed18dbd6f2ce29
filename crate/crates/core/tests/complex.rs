use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use vorperc_core::complex::{
    boundary_matrix, full_subcomplex, interior_boundary, max_degree, star, DelaunayComplex,
};
use vorperc_core::geometry::{build_delaunay, sample_poisson, TorusDomain};

fn torus(d: usize, side: f64, seed: u64) -> DelaunayComplex {
    let dom = TorusDomain::new(d, side).unwrap();
    build_delaunay(&sample_poisson(dom, 1.0, seed).unwrap()).unwrap()
}

fn random_subset(n: usize, keep: f64, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n as u32).filter(|_| rng.random::<f64>() < keep).collect()
}

#[test]
fn single_edge_column() {
    let k = DelaunayComplex::from_simplices(1, 2, &[vec![0, 1]]).unwrap();
    let m = boundary_matrix(&full_subcomplex(&k, &[0, 1]), 1, 5).unwrap();
    assert_eq!(m.to_dense(), vec![vec![4], vec![1]]);
}

#[test]
fn triangle_degree_and_counts() {
    let k = DelaunayComplex::from_simplices(2, 3, &[vec![0, 1, 2]]).unwrap();
    assert_eq!(max_degree(&k), 2);
    assert_eq!((k.count(0), k.count(1), k.count(2)), (3, 3, 1));
}

#[test]
fn face_closure_and_degree_sum() {
    for (d, side) in [(2usize, 10.0), (3, 6.0)] {
        let k = torus(d, side, 1);
        for dim in 1..=d {
            for s in k.simplices(dim).iter() {
                for j in 0..s.len() {
                    let face: Vec<u32> = s.iter().enumerate().filter(|&(x, _)| x != j).map(|(_, &v)| v).collect();
                    assert!(k.index_of(&face).is_some());
                }
            }
        }
        let degrees: usize = (0..k.n_vertices() as u32).map(|v| k.degree(v)).sum();
        assert_eq!(degrees, 2 * k.count(1));
    }
}

#[test]
fn boundary_of_boundary_vanishes() {
    for (d, side) in [(2usize, 10.0), (3, 6.0), (4, 6.0)] {
        let k = torus(d, side, 3);
        for (n, q) in [2u32, 3, 5].into_iter().enumerate() {
            let w = random_subset(k.n_vertices(), 0.7, n as u64);
            let s = full_subcomplex(&k, &w);
            for dim in 2..=d {
                let a = boundary_matrix(&s, dim - 1, q).unwrap();
                let b = boundary_matrix(&s, dim, q).unwrap();
                assert!(a.mul(&b).is_zero(), "d={d} q={q} k={dim}");
            }
        }
    }
}

#[test]
fn full_subcomplex_is_idempotent() {
    let k = torus(2, 10.0, 4);
    let w = random_subset(k.n_vertices(), 0.5, 9);
    let a = full_subcomplex(&k, &w);
    let b = full_subcomplex(&k, &w);
    assert!(a == b);
    let again: Vec<u32> = a.vertices().into_iter().collect();
    assert!(full_subcomplex(&k, &again) == a);
}

#[test]
fn star_examples() {
    let k = torus(2, 10.0, 5);
    assert!(star(&k, &[]).vertices.is_empty());
    let v = 7;
    let mut expected: BTreeSet<u32> = k.neighbors(v).iter().copied().collect();
    expected.insert(v);
    assert_eq!(star(&k, &[v]).vertices, expected);
    let w = random_subset(k.n_vertices(), 0.1, 2);
    let once = star(&k, &w).vertices;
    let twice = star(&k, &once.iter().copied().collect::<Vec<_>>()).vertices;
    assert!(twice.is_superset(&once));
}

#[test]
fn interior_boundary_examples() {
    let k = torus(2, 10.0, 6);
    let all: Vec<u32> = (0..k.n_vertices() as u32).collect();
    let (b, i) = interior_boundary(&k, &all);
    assert!(b.is_empty());
    assert_eq!(i.len(), all.len());
    let (b, i) = interior_boundary(&k, &[3]);
    assert_eq!(b.into_iter().collect::<Vec<_>>(), vec![3]);
    assert!(i.is_empty());
}

#[test]
fn text_round_trip() {
    let k = torus(2, 8.0, 2);
    let back = DelaunayComplex::from_text(&k.to_text()).unwrap();
    assert!(back.same_simplices(&k));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn interior_agrees_with_star_definition(seed in 0u64..1000, keep in 0.2f64..0.95) {
        let k = torus(2, 8.0, seed % 7);
        let q = random_subset(k.n_vertices(), keep, seed);
        let members: BTreeSet<u32> = q.iter().copied().collect();
        let (boundary, interior) = interior_boundary(&k, &q);
        prop_assert_eq!(boundary.len() + interior.len(), q.len());
        for &v in &q {
            let inside = star(&k, &[v]).vertices.is_subset(&members);
            prop_assert_eq!(interior.contains(&v), inside);
        }
    }
}
