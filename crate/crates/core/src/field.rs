//! Sparse linear algebra over the prime field GF(q).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not a prime below 2^16")]
    NotPrime(u32),
    #[error("entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

pub fn is_prime(q: u32) -> bool {
    q >= 2 && (2..).take_while(|k| k * k <= q).all(|k| q % k != 0)
}

pub(crate) fn check_modulus(q: u32) -> Result<(), FieldError> {
    if q < (1 << 16) && is_prime(q) {
        Ok(())
    } else {
        Err(FieldError::NotPrime(q))
    }
}

/// Reduce a signed integer into `0..q`.
#[inline]
pub fn reduce(v: i64, q: u32) -> u32 {
    v.rem_euclid(q as i64) as u32
}

#[inline]
pub(crate) fn mul(a: u32, b: u32, q: u32) -> u32 {
    ((a as u64 * b as u64) % q as u64) as u32
}

pub fn inverse(a: u32, q: u32) -> u32 {
    debug_assert!(a % q != 0);
    let mut result = 1u32;
    let mut base = a % q;
    let mut e = q - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = mul(result, base, q);
        }
        base = mul(base, base, q);
        e >>= 1;
    }
    result
}

/// A sparse column: `(row, value)` pairs, strictly increasing in row, no
/// zero values.
pub type SparseColumn = Vec<(u32, u32)>;

/// Column-major sparse matrix over GF(q).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    q: u32,
    columns: Vec<SparseColumn>,
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize, q: u32) -> Result<Self, FieldError> {
        check_modulus(q)?;
        Ok(Self {
            rows,
            cols,
            q,
            columns: vec![Vec::new(); cols],
        })
    }

    /// Build from `(row, col, value)` triplets; values are taken mod `q` and
    /// repeated positions are summed.
    pub fn from_triplets<I>(rows: usize, cols: usize, q: u32, entries: I) -> Result<Self, FieldError>
    where
        I: IntoIterator<Item = (usize, usize, i64)>,
    {
        let mut m = Self::zeros(rows, cols, q)?;
        for (row, col, v) in entries {
            if row >= rows || col >= cols {
                return Err(FieldError::OutOfBounds {
                    row,
                    col,
                    rows,
                    cols,
                });
            }
            m.columns[col].push((row as u32, reduce(v, q)));
        }
        for c in &mut m.columns {
            normalize(c, q);
        }
        Ok(m)
    }

    pub fn from_dense(dense: &[Vec<i64>], q: u32) -> Result<Self, FieldError> {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        Self::from_triplets(
            rows,
            cols,
            q,
            dense
                .iter()
                .enumerate()
                .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &v)| (r, c, v))),
        )
    }

    pub(crate) fn from_columns(rows: usize, q: u32, columns: Vec<SparseColumn>) -> Self {
        Self {
            rows,
            cols: columns.len(),
            q,
            columns,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u32 {
        self.q
    }

    pub fn column(&self, j: usize) -> &[(u32, u32)] {
        &self.columns[j]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        let c = &self.columns[col];
        match c.binary_search_by_key(&(row as u32), |e| e.0) {
            Ok(k) => c[k].1,
            Err(_) => 0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<u32>> {
        let mut out = vec![vec![0; self.cols]; self.rows];
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                out[r as usize][c] = v;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(Vec::is_empty)
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &FieldMatrix) -> FieldMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        assert_eq!(self.q, rhs.q, "modulus mismatch");
        let q = self.q;
        let columns = rhs
            .columns
            .iter()
            .map(|rc| {
                let mut acc: SparseColumn = Vec::new();
                for &(k, v) in rc {
                    for &(r, w) in &self.columns[k as usize] {
                        acc.push((r, mul(v, w, q)));
                    }
                }
                normalize(&mut acc, q);
                acc
            })
            .collect();
        FieldMatrix::from_columns(self.rows, q, columns)
    }

    pub fn rank(&self) -> usize {
        rank_gf(self)
    }
}

/// Sort by row, merge repeats, drop zeros.
fn normalize(c: &mut SparseColumn, q: u32) {
    c.sort_unstable_by_key(|e| e.0);
    let mut out: SparseColumn = Vec::with_capacity(c.len());
    for &(r, v) in c.iter() {
        match out.last_mut() {
            Some(last) if last.0 == r => last.1 = (last.1 + v) % q,
            _ => out.push((r, v % q)),
        }
    }
    out.retain(|e| e.1 != 0);
    *c = out;
}

/// `out = x - f * y` for sorted sparse columns.
pub(crate) fn axpy(q: u32, x: &[(u32, u32)], f: u32, y: &[(u32, u32)], out: &mut SparseColumn) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let take_x = j == y.len() || (i < x.len() && x[i].0 < y[j].0);
        let take_y = i == x.len() || (j < y.len() && y[j].0 < x[i].0);
        if take_x {
            out.push(x[i]);
            i += 1;
        } else if take_y {
            out.push((y[j].0, (q - mul(f, y[j].1, q)) % q));
            j += 1;
        } else {
            let v = (x[i].1 + q - mul(f, y[j].1, q)) % q;
            if v != 0 {
                out.push((x[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
}

const UNSET: u32 = u32::MAX;

/// Incremental column reduction with lowest-row pivots. Columns inserted
/// one at a time are reduced against all earlier pivots; nonzero remainders
/// become new pivots. Optionally tracks the combination `V` that produced
/// each reduced column.
#[derive(Debug)]
pub(crate) struct Reducer {
    q: u32,
    pivot_of_row: Vec<u32>,
    reduced: Vec<SparseColumn>,
    track: bool,
    combos: Vec<SparseColumn>,
    scratch: SparseColumn,
    scratch_v: SparseColumn,
}

impl Reducer {
    pub fn new(rows: usize, q: u32, track: bool) -> Self {
        Self {
            q,
            pivot_of_row: vec![UNSET; rows],
            reduced: Vec::new(),
            track,
            combos: Vec::new(),
            scratch: Vec::new(),
            scratch_v: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.reduced.len()
    }

    pub fn is_pivot_row(&self, row: u32) -> bool {
        self.pivot_of_row[row as usize] != UNSET
    }

    /// Reduce `col` (with combination `v`, ignored unless tracking). Returns
    /// the pivot row if a new pivot was created; otherwise `None` and, when
    /// tracking, the combination of the zero column is returned in `v`.
    pub fn insert(&mut self, mut col: SparseColumn, v: &mut SparseColumn) -> Option<u32> {
        let q = self.q;
        while let Some(&(low, a)) = col.last() {
            let p = self.pivot_of_row[low as usize];
            if p == UNSET {
                break;
            }
            let other = &self.reduced[p as usize];
            let b = other.last().unwrap().1;
            let f = mul(a, inverse(b, q), q);
            axpy(q, &col, f, other, &mut self.scratch);
            std::mem::swap(&mut col, &mut self.scratch);
            if self.track {
                axpy(q, v, f, &self.combos[p as usize], &mut self.scratch_v);
                std::mem::swap(v, &mut self.scratch_v);
            }
        }
        let &(low, _) = col.last()?;
        self.pivot_of_row[low as usize] = self.reduced.len() as u32;
        self.reduced.push(col);
        if self.track {
            self.combos.push(std::mem::take(v));
        }
        Some(low)
    }
}

/// Rank over GF(q) by sparse column reduction.
pub fn rank_gf(m: &FieldMatrix) -> usize {
    let mut r = Reducer::new(m.rows, m.q, false);
    let mut v = Vec::new();
    for c in &m.columns {
        r.insert(c.clone(), &mut v);
    }
    r.rank()
}

/// A basis of the null space `{x : M x = 0}`, as sparse columns indexed by
/// the columns of `M`.
pub fn kernel_basis(m: &FieldMatrix) -> Vec<SparseColumn> {
    let mut r = Reducer::new(m.rows, m.q, true);
    let mut basis = Vec::new();
    for (j, c) in m.columns.iter().enumerate() {
        let mut v = vec![(j as u32, 1)];
        if r.insert(c.clone(), &mut v).is_none() {
            basis.push(v);
        }
    }
    basis
}

/// Dense Gaussian elimination by rows with first-nonzero pivots. Slow; an
/// independent check on [`rank_gf`].
pub fn dense_rank(m: &FieldMatrix) -> usize {
    let q = m.q;
    let mut a = m.to_dense();
    let (rows, cols) = (m.rows, m.cols);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| a[r][c] != 0) else {
            continue;
        };
        a.swap(rank, p);
        let inv = inverse(a[rank][c], q);
        for k in 0..cols {
            a[rank][k] = mul(a[rank][k], inv, q);
        }
        for r in 0..rows {
            if r != rank && a[r][c] != 0 {
                let f = a[r][c];
                for k in 0..cols {
                    a[r][k] = (a[r][k] + q - mul(f, a[rank][k], q)) % q;
                }
            }
        }
        rank += 1;
    }
    rank
}
