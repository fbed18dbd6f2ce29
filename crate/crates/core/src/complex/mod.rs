//! Simplicial complexes with sorted-tuple simplices, full subcomplexes,
//! stars and boundary matrices.

pub(crate) mod sub;

pub use sub::{
    boundary_matrix, full_subcomplex, interior_boundary, max_degree, star, Star, Subcomplex,
};

use crate::geometry::{Circumsphere, Coords, TorusDomain, MAX_DIM};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

pub type VertexSet = BTreeSet<u32>;

pub(crate) type Key = [u32; MAX_DIM + 1];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error("simplex {0:?} has more than dim + 1 vertices")]
    TooLarge(Vec<u32>),
    #[error("simplex {0:?} repeats a vertex")]
    Repeated(Vec<u32>),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexRange { vertex: u32, n: usize },
    #[error("duplicate top simplex {0:?}")]
    Duplicate(Vec<u32>),
    #[error("dimension {0} outside 1..=4")]
    Dimension(usize),
    #[error("malformed complex text: {0}")]
    Parse(String),
}

pub(crate) fn key_of(tuple: &[u32]) -> Key {
    let mut k = [u32::MAX; MAX_DIM + 1];
    k[..tuple.len()].copy_from_slice(tuple);
    k
}

/// The `k`-simplices of a complex, each a strictly increasing vertex tuple,
/// stored contiguously in list order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexList {
    k: usize,
    flat: Vec<u32>,
    lookup: Vec<(Key, u32)>,
}

impl SimplexList {
    fn new(k: usize, tuples: Vec<Key>) -> Self {
        let mut flat = Vec::with_capacity(tuples.len() * (k + 1));
        for t in &tuples {
            flat.extend_from_slice(&t[..=k]);
        }
        let mut lookup: Vec<(Key, u32)> = tuples
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, i as u32))
            .collect();
        lookup.sort_unstable();
        Self { k, flat, lookup }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.flat.len() / (self.k + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn get(&self, i: usize) -> &[u32] {
        &self.flat[i * (self.k + 1)..(i + 1) * (self.k + 1)]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.flat.chunks_exact(self.k + 1)
    }

    /// Position of a sorted tuple in the list.
    pub fn index_of(&self, tuple: &[u32]) -> Option<usize> {
        if tuple.len() != self.k + 1 {
            return None;
        }
        let key = key_of(tuple);
        self.lookup
            .binary_search_by(|e| e.0.cmp(&key))
            .ok()
            .map(|p| self.lookup[p].1 as usize)
    }
}

/// A finite simplicial complex of dimension `d`, closed under faces. For a
/// Delaunay complex the top simplices carry circumspheres and the vertex
/// positions are kept.
///
/// Simplices of dimension `k >= 1` are listed in a filtration order: by the
/// descending-sorted ranks of their vertices, compared lexicographically, so
/// every face precedes its cofaces. Vertices are listed by index and ranked
/// separately.
#[derive(Debug, Clone)]
pub struct DelaunayComplex {
    dim: usize,
    domain: Option<TorusDomain>,
    positions: Vec<Coords>,
    lists: Vec<SimplexList>,
    faces: Vec<Vec<u32>>,
    circumdata: Vec<Circumsphere>,
    adjacency: Vec<Vec<u32>>,
    vertex_rank: Vec<u32>,
}

impl DelaunayComplex {
    /// Closure of the given simplices on `n_vertices` vertices. Every vertex
    /// index below `n_vertices` is a 0-simplex even if isolated.
    pub fn from_simplices(
        dim: usize,
        n_vertices: usize,
        simplices: &[Vec<u32>],
    ) -> Result<Self, ComplexError> {
        let rank: Vec<u32> = (0..n_vertices as u32).collect();
        Self::assemble(dim, n_vertices, simplices, rank, None, Vec::new(), Vec::new())
    }

    pub(crate) fn from_delaunay(
        domain: TorusDomain,
        points: &[Coords],
        tops: Vec<Vec<u32>>,
        circumdata: Vec<Circumsphere>,
    ) -> Result<Self, ComplexError> {
        let order = crate::geometry::morton_order(points, domain.dim());
        let mut rank = vec![0u32; points.len()];
        for (pos, &v) in order.iter().enumerate() {
            rank[v] = pos as u32;
        }
        Self::assemble(
            domain.dim(),
            points.len(),
            &tops,
            rank,
            Some(domain),
            points.to_vec(),
            circumdata,
        )
    }

    fn assemble(
        dim: usize,
        n: usize,
        simplices: &[Vec<u32>],
        vertex_rank: Vec<u32>,
        domain: Option<TorusDomain>,
        positions: Vec<Coords>,
        circumdata: Vec<Circumsphere>,
    ) -> Result<Self, ComplexError> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(ComplexError::Dimension(dim));
        }
        let mut per_dim: Vec<Vec<Key>> = vec![Vec::new(); dim + 1];
        let mut tops: Vec<(Key, usize)> = Vec::new();
        for (idx, s) in simplices.iter().enumerate() {
            let mut t = s.clone();
            t.sort_unstable();
            if t.len() > dim + 1 || t.is_empty() {
                return Err(ComplexError::TooLarge(s.clone()));
            }
            if t.windows(2).any(|w| w[0] == w[1]) {
                return Err(ComplexError::Repeated(s.clone()));
            }
            if let Some(&v) = t.iter().find(|&&v| v as usize >= n) {
                return Err(ComplexError::VertexRange { vertex: v, n });
            }
            if t.len() == dim + 1 {
                tops.push((key_of(&t), idx));
            }
            // All nonempty subsets of t.
            let m = t.len();
            for mask in 1u32..(1 << m) {
                let mut face = [u32::MAX; MAX_DIM + 1];
                let mut c = 0;
                for (b, &v) in t.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        face[c] = v;
                        c += 1;
                    }
                }
                if c >= 2 {
                    per_dim[c - 1].push(face);
                }
            }
        }
        if !circumdata.is_empty() {
            let mut sorted: Vec<Key> = tops.iter().map(|t| t.0).collect();
            sorted.sort_unstable();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(ComplexError::Duplicate(w[0][..=dim].to_vec()));
            }
        }
        per_dim[0] = (0..n as u32).map(|v| key_of(&[v])).collect();

        let filtration_key = |t: &Key, k: usize| {
            let mut r = [0u32; MAX_DIM + 1];
            for j in 0..=k {
                r[j] = vertex_rank[t[j] as usize];
            }
            r[..=k].sort_unstable_by(|a, b| b.cmp(a));
            r
        };
        let mut lists = Vec::with_capacity(dim + 1);
        for (k, mut tuples) in per_dim.into_iter().enumerate() {
            if k > 0 {
                tuples.sort_unstable();
                tuples.dedup();
                tuples.sort_by_cached_key(|t| (filtration_key(t, k), *t));
            }
            lists.push(SimplexList::new(k, tuples));
        }

        // Circumdata in top-list order.
        let mut circ = Vec::new();
        if !circumdata.is_empty() {
            circ = vec![circumdata[0]; lists[dim].len()];
            for (key, idx) in &tops {
                let pos = lists[dim].index_of(&key[..=dim]).unwrap();
                circ[pos] = circumdata[*idx];
            }
        }

        let mut faces = vec![Vec::new()];
        for k in 1..=dim {
            let mut f = Vec::with_capacity(lists[k].len() * (k + 1));
            let mut buf = Vec::with_capacity(k);
            for s in lists[k].iter() {
                for j in 0..=k {
                    buf.clear();
                    buf.extend(s.iter().enumerate().filter(|&(x, _)| x != j).map(|(_, &v)| v));
                    f.push(lists[k - 1].index_of(&buf).unwrap() as u32);
                }
            }
            faces.push(f);
        }

        let mut adjacency = vec![Vec::new(); n];
        if dim >= 1 {
            for e in lists[1].iter() {
                adjacency[e[0] as usize].push(e[1]);
                adjacency[e[1] as usize].push(e[0]);
            }
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }

        Ok(Self {
            dim,
            domain,
            positions,
            lists,
            faces,
            circumdata: circ,
            adjacency,
            vertex_rank,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Option<&TorusDomain> {
        self.domain.as_ref()
    }

    /// Vertex coordinates (empty for abstract complexes).
    pub fn positions(&self) -> &[Coords] {
        &self.positions
    }

    pub fn n_vertices(&self) -> usize {
        self.lists[0].len()
    }

    pub fn simplices(&self, k: usize) -> &SimplexList {
        &self.lists[k]
    }

    pub fn count(&self, k: usize) -> usize {
        self.lists.get(k).map_or(0, SimplexList::len)
    }

    pub fn index_of(&self, tuple: &[u32]) -> Option<usize> {
        let k = tuple.len().checked_sub(1)?;
        self.lists.get(k)?.index_of(tuple)
    }

    /// Circumspheres of the top simplices, aligned with `simplices(dim)`.
    pub fn circumdata(&self) -> &[Circumsphere] {
        &self.circumdata
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adjacency[v as usize].len()
    }

    /// Indices into the `(k-1)`-list of the faces of the `k`-simplex `i`;
    /// face `j` omits vertex `j` of the sorted tuple.
    pub fn face_indices(&self, k: usize, i: usize) -> &[u32] {
        &self.faces[k][i * (k + 1)..(i + 1) * (k + 1)]
    }

    /// Position of a `k`-simplex in the filtration order (its row in
    /// reductions).
    #[inline]
    pub(crate) fn filtration_position(&self, k: usize, i: u32) -> u32 {
        if k == 0 {
            self.vertex_rank[i as usize]
        } else {
            i
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.lists
            .iter()
            .enumerate()
            .map(|(k, l)| if k % 2 == 0 { l.len() as i64 } else { -(l.len() as i64) })
            .sum()
    }

    /// Whether every `(d-1)`-simplex is a face of exactly two `d`-simplices.
    pub fn is_closed_pseudomanifold(&self) -> bool {
        let d = self.dim;
        let mut cofaces = vec![0u8; self.count(d - 1)];
        for &f in &self.faces[d] {
            cofaces[f as usize] = cofaces[f as usize].saturating_add(1);
        }
        cofaces.iter().all(|&c| c == 2)
    }

    /// Line-oriented text: `complex d n`, then for each dimension a `k count`
    /// line followed by one tuple per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "complex {} {}", self.dim, self.n_vertices()).unwrap();
        for (k, l) in self.lists.iter().enumerate() {
            writeln!(out, "{} {}", k, l.len()).unwrap();
            for s in l.iter() {
                let parts: Vec<String> = s.iter().map(u32::to_string).collect();
                writeln!(out, "{}", parts.join(" ")).unwrap();
            }
        }
        out
    }

    /// Parse [`DelaunayComplex::to_text`] output into an abstract complex.
    pub fn from_text(text: &str) -> Result<Self, ComplexError> {
        let bad = |m: &str| ComplexError::Parse(m.to_string());
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
        if header.len() != 3 || header[0] != "complex" {
            return Err(bad("header must be `complex d n`"));
        }
        let dim: usize = header[1].parse().map_err(|_| bad("bad d"))?;
        let n: usize = header[2].parse().map_err(|_| bad("bad n"))?;
        let mut simplices = Vec::new();
        while let Some(line) = lines.next() {
            let h: Vec<usize> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| bad("bad section header"))?;
            if h.len() != 2 {
                return Err(bad("section header must be `k count`"));
            }
            for _ in 0..h[1] {
                let t: Vec<u32> = lines
                    .next()
                    .ok_or_else(|| bad("truncated section"))?
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("bad vertex index"))?;
                if t.len() != h[0] + 1 {
                    return Err(bad("tuple length does not match section"));
                }
                simplices.push(t);
            }
        }
        Self::from_simplices(dim, n, &simplices)
    }

    /// Same simplices in every dimension, ignoring list order.
    pub fn same_simplices(&self, other: &DelaunayComplex) -> bool {
        self.dim == other.dim
            && (0..=self.dim).all(|k| {
                let a: BTreeSet<&[u32]> = self.lists[k].iter().collect();
                let b: BTreeSet<&[u32]> = other.lists[k].iter().collect();
                a == b
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn triangle() -> DelaunayComplex {
        DelaunayComplex::from_simplices(2, 3, &[vec![0, 1, 2]]).unwrap()
    }

    #[test]
    fn triangle_closure() {
        let k = triangle();
        assert_eq!((k.count(0), k.count(1), k.count(2)), (3, 3, 1));
        assert_eq!(k.euler_characteristic(), 1);
        assert!(k.index_of(&[0, 2]).is_some());
        assert!(k.index_of(&[0, 3]).is_none());
        assert_eq!(max_degree(&k), 2);
    }

    #[test]
    fn faces_precede_cofaces() {
        let k = DelaunayComplex::from_simplices(
            3,
            6,
            &[vec![0, 1, 2, 3], vec![1, 2, 3, 4], vec![2, 4, 5], vec![0, 5]],
        )
        .unwrap();
        for d in 1..=3 {
            for i in 0..k.count(d) {
                for &f in k.face_indices(d, i) {
                    let face = k.simplices(d - 1).get(f as usize);
                    let s = k.simplices(d).get(i);
                    assert!(face.iter().all(|v| s.contains(v)));
                    if d >= 2 {
                        assert!((f as usize) < k.count(d - 1));
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            DelaunayComplex::from_simplices(2, 3, &[vec![0, 0, 1]]),
            Err(ComplexError::Repeated(_))
        ));
        assert!(matches!(
            DelaunayComplex::from_simplices(2, 3, &[vec![0, 1, 5]]),
            Err(ComplexError::VertexRange { .. })
        ));
        assert!(matches!(
            DelaunayComplex::from_simplices(1, 3, &[vec![0, 1, 2]]),
            Err(ComplexError::TooLarge(_))
        ));
    }

    #[test]
    fn text_round_trip() {
        let k = DelaunayComplex::from_simplices(3, 5, &[vec![0, 1, 2, 3], vec![3, 4]]).unwrap();
        let back = DelaunayComplex::from_text(&k.to_text()).unwrap();
        assert!(k.same_simplices(&back));
        assert!(DelaunayComplex::from_text("complex 2 3\n1 1\n0 1 2\n").is_err());
    }
}
