use super::{DelaunayComplex, VertexSet};
use crate::field::{FieldError, FieldMatrix};

const UNSET: u32 = u32::MAX;

pub(crate) fn mask_of(n: usize, w: &[u32]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &v in w {
        mask[v as usize] = true;
    }
    mask
}

/// The full subcomplex spanned by a vertex subset: every simplex of the
/// parent whose vertices all lie in the subset.
#[derive(Debug, Clone)]
pub struct Subcomplex<'a> {
    parent: &'a DelaunayComplex,
    mask: Vec<bool>,
    members: Vec<Vec<u32>>,
}

impl<'a> Subcomplex<'a> {
    pub fn from_mask(parent: &'a DelaunayComplex, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), parent.n_vertices());
        let mut members = Vec::with_capacity(parent.dim() + 1);
        members.push((0..mask.len() as u32).filter(|&v| mask[v as usize]).collect());
        for k in 1..=parent.dim() {
            let list = parent.simplices(k);
            let m: Vec<u32> = (0..list.len() as u32)
                .filter(|&i| list.get(i as usize).iter().all(|&v| mask[v as usize]))
                .collect();
            members.push(m);
        }
        Self {
            parent,
            mask,
            members,
        }
    }

    pub fn parent(&self) -> &'a DelaunayComplex {
        self.parent
    }

    pub fn dim(&self) -> usize {
        self.parent.dim()
    }

    pub fn contains_vertex(&self, v: u32) -> bool {
        self.mask[v as usize]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn vertices(&self) -> VertexSet {
        self.members[0].iter().copied().collect()
    }

    /// Indices into the parent's `k`-list, in list order.
    pub fn indices(&self, k: usize) -> &[u32] {
        self.members.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn count(&self, k: usize) -> usize {
        self.indices(k).len()
    }

    pub fn simplices(&self, k: usize) -> impl Iterator<Item = &[u32]> + '_ {
        let list = self.parent.simplices(k);
        self.indices(k).iter().map(move |&i| list.get(i as usize))
    }

    pub fn is_empty(&self) -> bool {
        self.members[0].is_empty()
    }
}

impl PartialEq for Subcomplex<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.parent, other.parent) && self.mask == other.mask
    }
}

pub fn full_subcomplex<'a>(k: &'a DelaunayComplex, w: &[u32]) -> Subcomplex<'a> {
    Subcomplex::from_mask(k, mask_of(k.n_vertices(), w))
}

/// The simplices containing at least one vertex of a set, with the union of
/// their vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Star {
    pub vertices: VertexSet,
    /// Per dimension, indices into the complex's lists.
    pub simplices: Vec<Vec<u32>>,
}

pub fn star(k: &DelaunayComplex, w: &[u32]) -> Star {
    let mask = mask_of(k.n_vertices(), w);
    let mut vertices = VertexSet::new();
    let mut simplices = Vec::with_capacity(k.dim() + 1);
    for d in 0..=k.dim() {
        let list = k.simplices(d);
        let mut hit = Vec::new();
        for (i, s) in list.iter().enumerate() {
            if s.iter().any(|&v| mask[v as usize]) {
                hit.push(i as u32);
                vertices.extend(s.iter().copied());
            }
        }
        simplices.push(hit);
    }
    Star {
        vertices,
        simplices,
    }
}

/// Split `Q` into its boundary (members with a neighbour outside `Q`) and
/// its interior.
pub fn interior_boundary(k: &DelaunayComplex, q: &[u32]) -> (VertexSet, VertexSet) {
    let mask = mask_of(k.n_vertices(), q);
    let mut boundary = VertexSet::new();
    let mut interior = VertexSet::new();
    for &v in q {
        if k.neighbors(v).iter().any(|&u| !mask[u as usize]) {
            boundary.insert(v);
        } else {
            interior.insert(v);
        }
    }
    (boundary, interior)
}

/// Matrix of `∂_k` on the subcomplex over GF(q): columns are its
/// `k`-simplices and rows its `(k-1)`-simplices, both in list order; the
/// face omitting vertex `j` of a sorted tuple carries sign `(-1)^j`.
pub fn boundary_matrix(s: &Subcomplex<'_>, k: usize, q: u32) -> Result<FieldMatrix, FieldError> {
    assert!(k >= 1 && k <= s.dim(), "boundary degree out of range");
    let parent = s.parent();
    let mut local = vec![UNSET; parent.count(k - 1)];
    for (r, &i) in s.indices(k - 1).iter().enumerate() {
        local[i as usize] = r as u32;
    }
    let entries = s.indices(k).iter().enumerate().flat_map(|(c, &i)| {
        let local = &local;
        parent
            .face_indices(k, i as usize)
            .iter()
            .enumerate()
            .map(move |(j, &f)| (local[f as usize] as usize, c, if j % 2 == 0 { 1 } else { -1 }))
    });
    FieldMatrix::from_triplets(s.count(k - 1), s.count(k), q, entries)
}

pub fn max_degree(k: &DelaunayComplex) -> usize {
    (0..k.n_vertices() as u32).map(|v| k.degree(v)).max().unwrap_or(0)
}
