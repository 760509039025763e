//! Permanents, elementary symmetric functions, principal-minor sums and
//! ordered subset enumeration.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{lu_det, ComplexMatrix};

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Submatrix with the given rows and columns (0-based, in the given order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let cols: Vec<usize> = (0..self.cols).collect();
        self.select(rows, &cols)
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let rows: Vec<usize> = (0..self.rows).collect();
        self.select(&rows, cols)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Strictly increasing 0-based index list; `Display` prints it 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetIndex(Vec<usize>);

impl SubsetIndex {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) || indices.iter().any(|&i| i >= n) {
            return Err(Error::Domain(format!("{indices:?} is not an ordered subset of 0..{n}")));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices of `0..n` not in the subset.
    pub fn complement(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|i| !self.0.contains(i)).collect()
    }
}

impl std::fmt::Display for SubsetIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Lexicographic iterator over the `k`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Subsets {
    n: usize,
    cur: Option<Vec<usize>>,
}

impl Iterator for Subsets {
    type Item = SubsetIndex;

    fn next(&mut self) -> Option<SubsetIndex> {
        let cur = self.cur.take()?;
        let k = cur.len();
        let mut next = cur.clone();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.cur = Some(next);
                break;
            }
        }
        Some(SubsetIndex(cur))
    }
}

/// All `k`-subsets of `{0..n}` in lexicographic order. `k = 0` yields the
/// single empty subset; `k > n` yields nothing.
pub fn subset_iter(n: usize, k: usize) -> Subsets {
    let cur = if k <= n { Some((0..k).collect()) } else { None };
    Subsets { n, cur }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

const MAX_PERM: usize = 20;

/// Permanent of a square matrix (Ryser formula, Gray-code order).
pub fn perm_square(a: &RealMatrix) -> Result<f64> {
    if a.rows != a.cols {
        return Err(Error::Shape(format!("{}x{} matrix is not square", a.rows, a.cols)));
    }
    let n = a.rows;
    if n > MAX_PERM {
        return Err(Error::Size(format!("permanent of order {n} exceeds limit {MAX_PERM}")));
    }
    if n == 0 {
        return Ok(1.0);
    }
    // row sums over the currently selected column set
    let mut rs = vec![0.0; n];
    let mut total = Compensated::default();
    let mut gray: u64 = 0;
    for step in 1u64..(1u64 << n) {
        let g = step ^ (step >> 1);
        let j = (g ^ gray).trailing_zeros() as usize;
        let sign = if g & (1 << j) != 0 { 1.0 } else { -1.0 };
        for (i, r) in rs.iter_mut().enumerate() {
            *r += sign * a[(i, j)];
        }
        gray = g;
        let prod: f64 = rs.iter().product();
        if (n - g.count_ones() as usize).is_multiple_of(2) {
            total.add(prod);
        } else {
            total.add(-prod);
        }
    }
    Ok(total.value())
}

/// Permanent of an `m x n` matrix with `m >= n`: the sum of the permanents of
/// all `n x n` row-subset blocks.
pub fn perm_rect(a: &RealMatrix) -> Result<f64> {
    if a.rows < a.cols {
        return Err(Error::Shape(format!(
            "perm_rect needs rows >= cols, got {}x{} (transpose first)",
            a.rows, a.cols
        )));
    }
    if a.rows == a.cols {
        return perm_square(a);
    }
    let cols: Vec<usize> = (0..a.cols).collect();
    let mut total = Compensated::default();
    for s in subset_iter(a.rows, a.cols) {
        total.add(perm_square(&a.select(s.indices(), &cols))?);
    }
    Ok(total.value())
}

/// Permanent of a matrix of either orientation (`Perm(A) = Perm(A^T)`).
pub fn perm_any(a: &RealMatrix) -> Result<f64> {
    if a.rows >= a.cols {
        perm_rect(a)
    } else {
        perm_rect(&a.transpose())
    }
}

/// All elementary symmetric functions `e_0..e_n` of `values`.
pub fn esf_all(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (j, &x) in values.iter().enumerate() {
        for k in (1..=j + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

/// Elementary symmetric function `e_k(values)`.
pub fn esf(values: &[f64], k: usize) -> f64 {
    if k > values.len() {
        return 0.0;
    }
    esf_all(values)[k]
}

/// Sum of all `k x k` principal minors of a real square matrix.
pub fn tr_k(m: &RealMatrix, k: usize) -> Result<f64> {
    if m.rows != m.cols {
        return Err(Error::Shape(format!("{}x{} matrix is not square", m.rows, m.cols)));
    }
    let n = m.rows;
    if k == 0 {
        return Ok(1.0);
    }
    if k > n {
        return Ok(0.0);
    }
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == 0.0));
    if diagonal {
        let d: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
        return Ok(esf(&d, k));
    }
    let mut total = Compensated::default();
    for s in subset_iter(n, k) {
        let sub = m.select(s.indices(), s.indices());
        let c = ComplexMatrix::from_real(k, k, sub.as_slice())?;
        total.add(lu_det(&c)?.re);
    }
    Ok(total.value())
}

/// Sum of all `k x k` principal minors of a complex square matrix.
pub fn tr_k_complex(m: &ComplexMatrix, k: usize) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    let n = m.rows();
    if k == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for s in subset_iter(n, k) {
        let idx = s.indices();
        let sub = ComplexMatrix::from_fn(k, k, |i, j| m[(idx[i], idx[j])]);
        total += lu_det(&sub)?;
    }
    Ok(total)
}
