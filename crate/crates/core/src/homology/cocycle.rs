//! Induced rank through the cohomology of the torus.
//!
//! The winding cochains `w_a(u, v) = t_a`, where `x_v + L t` is the image of
//! `v` nearest to `u`, are cocycles on any triangulation whose simplices are
//! small against `L`; their cup products `w_{a_1} ∪ … ∪ w_{a_i}` (computed by
//! the Alexander–Whitney formula over sorted vertex order) give a basis of
//! `H^i(T^d)` for every `I = a_1 < … < a_i`. A cycle of the subcomplex maps
//! to zero in `H_i(T^d)` exactly when all of them vanish on it, so
//! `rank φ_i` is the rank of these cochains restricted to `Z_i(W)`:
//! `rank [A; P] - rank A` with `A = ∂_i(W)` and `P` the cochain rows.

use super::{binomial, boundary_column, reduce_boundary, HomologyError, InducedMapReport};
use crate::complex::sub::mask_of;
use crate::complex::{DelaunayComplex, Subcomplex};
use crate::field::{check_modulus, reduce, Reducer};
use crate::geometry::MAX_DIM;

fn index_sets(d: usize, i: usize) -> Vec<[usize; MAX_DIM]> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << d) {
        if mask.count_ones() as usize == i {
            let mut set = [0; MAX_DIM];
            let mut c = 0;
            for a in 0..d {
                if mask >> a & 1 == 1 {
                    set[c] = a;
                    c += 1;
                }
            }
            out.push(set);
        }
    }
    out.sort();
    out
}

/// Same report as [`super::induced_rank`], computed from the cup-product
/// basis of torus cohomology instead of a reduction of the whole complex.
pub fn induced_rank_cocycle(
    k: &DelaunayComplex,
    w: &[u32],
    i: usize,
    q: u32,
) -> Result<InducedMapReport, HomologyError> {
    induced_rank_mask(k, mask_of(k.n_vertices(), w), i, q)
}

pub(crate) fn induced_rank_mask(
    k: &DelaunayComplex,
    mask: Vec<bool>,
    i: usize,
    q: u32,
) -> Result<InducedMapReport, HomologyError> {
    check_modulus(q)?;
    let d = k.dim();
    if i > d {
        return Err(HomologyError::Degree { i, d });
    }
    let domain = *k.domain().ok_or(HomologyError::NotPeriodic)?;
    let s = Subcomplex::from_mask(k, mask);
    let sets = index_sets(d, i);
    let c = binomial(d, i) as u32;

    // Reducing ∂_{i+1} first lets every i-simplex that is already a pivot be
    // skipped: its column reduces to a boundary, on which cocycles vanish.
    let upper = if i < d {
        Some(reduce_boundary(&s, i + 1, q))
    } else {
        None
    };
    let rank_upper = upper.as_ref().map_or(0, Reducer::rank);

    let rows = c as usize + if i > 0 { k.count(i - 1) } else { 0 };
    let mut r = Reducer::new(rows, q, false);
    let mut scratch = Vec::new();
    let (mut rank_phi, mut rank_a) = (0, 0);
    let points = k.positions();
    let list = k.simplices(i);
    let mut shifts = [[0i32; MAX_DIM]; MAX_DIM];
    for &idx in s.indices(i) {
        let pos = k.filtration_position(i, idx);
        if upper.as_ref().is_some_and(|u| u.is_pivot_row(pos)) {
            continue;
        }
        let simplex = list.get(idx as usize);
        for j in 0..i {
            shifts[j] = domain.image_shift(
                &points[simplex[j] as usize],
                &points[simplex[j + 1] as usize],
            );
        }
        let mut col = Vec::with_capacity(c as usize + i + 1);
        for (t, set) in sets.iter().enumerate() {
            let value: i64 = (0..i).map(|j| shifts[j][set[j]] as i64).product();
            let v = reduce(value, q);
            if v != 0 {
                col.push((t as u32, v));
            }
        }
        if i > 0 {
            let mut a = Vec::with_capacity(i + 1);
            boundary_column(k, i, idx, q, c, &mut a);
            col.extend(a);
        }
        if let Some(low) = r.insert(col, &mut scratch) {
            if low < c {
                rank_phi += 1;
            } else {
                rank_a += 1;
            }
        }
    }
    let betti_sub = s.count(i) - rank_a - rank_upper;
    Ok(InducedMapReport::new(i, q, betti_sub, rank_phi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_sets_are_sorted_subsets() {
        assert_eq!(index_sets(4, 2).len(), 6);
        assert_eq!(index_sets(2, 1)[0][0], 0);
        assert_eq!(index_sets(2, 1)[1][0], 1);
        assert_eq!(index_sets(3, 0).len(), 1);
    }
}
