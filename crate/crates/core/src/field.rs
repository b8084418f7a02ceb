//! Prime-field arithmetic and dense matrices over `GF(p)`.
//!
//! Elements are stored as canonical residues in `[0, p)`. Products go through
//! 128-bit intermediates, so any prime below `2^63` is supported.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `2^61 - 1`, the default modulus for randomized rank computations.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Smallest admissible modulus is strictly greater than this value.
pub const MIN_MODULUS: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is too small; need a prime greater than 2^31")]
    TooSmall(u64),
    #[error("modulus {0} is too large; need a prime below 2^63")]
    TooLarge(u64),
}

/// A validated prime modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p <= MIN_MODULUS {
            return Err(FieldError::TooSmall(p));
        }
        if p >= 1 << 63 {
            return Err(FieldError::TooLarge(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Prime(p))
    }

    pub fn mersenne61() -> Self {
        Prime(MERSENNE_61)
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn reduce(self, a: u64) -> u64 {
        a % self.0
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.0 as u128) as u64
    }

    pub fn pow(self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1;
        base %= self.0;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `a` must be nonzero.
    pub fn inv(self, a: u64) -> u64 {
        debug_assert!(a % self.0 != 0, "inverse of zero");
        self.pow(a, self.0 - 2)
    }
}

impl TryFrom<u64> for Prime {
    type Error = FieldError;

    fn try_from(p: u64) -> Result<Self, Self::Error> {
        Prime::new(p)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Dense row-major matrix over `GF(p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpMatrix {
    rows: usize,
    cols: usize,
    prime: Prime,
    data: Vec<u64>,
}

impl FpMatrix {
    pub fn zeros(rows: usize, cols: usize, prime: Prime) -> Self {
        FpMatrix {
            rows,
            cols,
            prime,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize, prime: Prime) -> Self {
        let mut m = Self::zeros(n, n, prime);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from row vectors; entries are reduced mod `p`.
    ///
    /// Panics if the rows have unequal length.
    pub fn from_rows(rows: &[Vec<u64>], prime: Prime) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols, prime);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, prime.reduce(v));
            }
        }
        m
    }

    /// Builds a matrix from column vectors of equal length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<u64>], prime: Prime) -> Self {
        let mut m = Self::zeros(rows, columns.len(), prime);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, prime.reduce(v));
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn prime(&self) -> Prime {
        self.prime
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.cols);
        let p = self.prime;
        (0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                row.iter()
                    .zip(v)
                    .fold(0, |acc, (&a, &b)| p.add(acc, p.mul(a, b)))
            })
            .collect()
    }

    pub fn mul(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.cols, other.rows);
        let p = self.prime;
        let mut out = FpMatrix::zeros(self.rows, other.cols, p);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let cur = out.get(i, j);
                    out.set(i, j, p.add(cur, p.mul(a, other.get(k, j))));
                }
            }
        }
        out
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hcat(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.rows, other.rows);
        let mut out = FpMatrix::zeros(self.rows, self.cols + other.cols, self.prime);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, self.get(r, c));
            }
            for c in 0..other.cols {
                out.set(r, self.cols + c, other.get(r, c));
            }
        }
        out
    }

    pub fn scale(&self, s: u64) -> FpMatrix {
        let p = self.prime;
        let s = p.reduce(s);
        FpMatrix {
            data: self.data.iter().map(|&v| p.mul(v, s)).collect(),
            ..self.clone()
        }
    }

    /// Entrywise sum; shapes must agree.
    pub fn add(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let p = self.prime;
        FpMatrix {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| p.add(a, b))
                .collect(),
            ..self.clone()
        }
    }

    /// Exact rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_reduce().0
    }

    /// Determinant of a square matrix.
    pub fn det(&self) -> u64 {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let mut m = self.clone();
        let (rank, swaps, pivots) = m.row_reduce_raw();
        if rank < self.rows {
            return 0;
        }
        let p = self.prime;
        let mut det = pivots.into_iter().fold(1, |acc, v| p.mul(acc, v));
        if swaps % 2 == 1 {
            det = p.neg(det);
        }
        det
    }

    fn row_reduce(&mut self) -> (usize, usize) {
        let (rank, swaps, _) = self.row_reduce_raw();
        (rank, swaps)
    }

    /// Forward elimination without normalization. Returns the rank, the
    /// number of row swaps and the pivot values in order.
    fn row_reduce_raw(&mut self) -> (usize, usize, Vec<u64>) {
        let p = self.prime;
        let mut rank = 0;
        let mut swaps = 0;
        let mut pivots = Vec::new();
        for c in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let Some(pivot_row) = (rank..self.rows).find(|&r| self.get(r, c) != 0) else {
                continue;
            };
            if pivot_row != rank {
                for k in 0..self.cols {
                    self.data.swap(pivot_row * self.cols + k, rank * self.cols + k);
                }
                swaps += 1;
            }
            let pivot = self.get(rank, c);
            pivots.push(pivot);
            let inv = p.inv(pivot);
            for r in rank + 1..self.rows {
                let v = self.get(r, c);
                if v == 0 {
                    continue;
                }
                let factor = p.mul(v, inv);
                for k in c..self.cols {
                    let cur = self.get(r, k);
                    let sub = p.mul(factor, self.get(rank, k));
                    self.set(r, k, p.sub(cur, sub));
                }
            }
            rank += 1;
        }
        (rank, swaps, pivots)
    }
}

/// Exact rank of a finite-field matrix.
pub fn rank_ff(m: &FpMatrix) -> usize {
    m.rank()
}

/// Incrementally maintained basis of a subspace of `GF(p)^n`.
///
/// Stored vectors are in reduced form: each has a leading 1 at its pivot and
/// a zero at the pivot of every earlier vector.
#[derive(Debug, Clone)]
pub struct EchelonBasis {
    dim: usize,
    prime: Prime,
    vectors: Vec<(usize, Vec<u64>)>,
}

impl EchelonBasis {
    pub fn new(dim: usize, prime: Prime) -> Self {
        EchelonBasis {
            dim,
            prime,
            vectors: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[u64]> {
        self.vectors.iter().map(|(_, v)| v.as_slice())
    }

    fn reduce(&self, v: &mut [u64]) {
        let p = self.prime;
        for (pivot, b) in &self.vectors {
            let f = v[*pivot];
            if f == 0 {
                continue;
            }
            for (x, &y) in v.iter_mut().zip(b) {
                *x = p.sub(*x, p.mul(f, y));
            }
        }
    }

    /// Whether `v` lies in the span.
    pub fn contains(&self, v: &[u64]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().all(|&x| x == 0)
    }

    /// Adds `v` if it is independent of the current basis. Returns the index
    /// of the new basis vector, or `None` when `v` was already in the span.
    pub fn insert(&mut self, v: &[u64]) -> Option<usize> {
        assert_eq!(v.len(), self.dim);
        if self.vectors.len() == self.dim {
            return None;
        }
        let p = self.prime;
        let mut w: Vec<u64> = v.iter().map(|&x| p.reduce(x)).collect();
        self.reduce(&mut w);
        let pivot = w.iter().position(|&x| x != 0)?;
        let inv = p.inv(w[pivot]);
        for x in w.iter_mut() {
            *x = p.mul(*x, inv);
        }
        self.vectors.push((pivot, w));
        Some(self.vectors.len() - 1)
    }

    pub fn vector(&self, idx: usize) -> &[u64] {
        &self.vectors[idx].1
    }
}

/// Numerical rank of a real matrix: singular values above
/// `1e-9 * (largest column norm)` are counted.
pub fn rank_real(m: &nalgebra::DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let max_norm = m
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    if max_norm == 0.0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    svd.rank(1e-9 * max_norm)
}
