//! Small dense kernels on top of nalgebra: Hermitian Cholesky
//! log-determinant, eigendecomposition, LU determinant and polynomial roots.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape("dimension mismatch in add".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Checks Hermitian symmetry relative to the largest entry and returns
    /// the symmetrised copy `(M + M^H)/2`.
    fn hermitian_part(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Shape(format!("{}x{} matrix is not square", self.rows, self.cols)));
        }
        let n = self.rows;
        let tol = HERMITIAN_TOL * self.max_abs();
        let mut out = self.clone();
        for i in 0..n {
            for j in i..n {
                let a = self[(i, j)];
                let b = self[(j, i)].conj();
                if (a - b).norm() > tol {
                    return Err(Error::NotHermitian(format!(
                        "entries ({i},{j}) and ({j},{i}) differ by {:e}",
                        (a - b).norm()
                    )));
                }
                let m = (a + b) * 0.5;
                out[(i, j)] = m;
                out[(j, i)] = m.conj();
            }
        }
        Ok(out)
    }
}

const HERMITIAN_TOL: f64 = 1e-12;

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

fn to_na(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

/// Natural log of the determinant of a Hermitian positive-definite matrix.
pub fn logdet_hpd(m: &ComplexMatrix) -> Result<f64> {
    let mut a = m.hermitian_part()?;
    let n = a.rows;
    cholesky_logdet_in_place(&mut a.data, n)
}

/// Cholesky log-determinant of a row-major `n x n` buffer; only the lower
/// triangle is read. Used directly by the Monte Carlo hot loop.
pub(crate) fn cholesky_logdet_in_place(a: &mut [Complex64], n: usize) -> Result<f64> {
    let mut m = DMatrix::from_row_slice(n, n, a);
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let pivots = lower_cholesky_pivots(&m);
    match pivots.iter().position(|d| !(d.re.is_finite() && d.re > 0.0) || d.im != 0.0) {
        None => Ok(pivots.iter().map(|d| 2.0 * d.re.ln()).sum()),
        Some(j) => Err(Error::NotPositiveDefinite { pivot: j }),
    }
}

/// Diagonal of the Cholesky factor. nalgebra's complex factorisation takes
/// complex square roots of negative pivots instead of failing, so the
/// caller inspects the pivots itself.
fn lower_cholesky_pivots(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    match m.clone().cholesky() {
        Some(c) => c.l_dirty().diagonal().iter().copied().collect(),
        // a zero pivot: report it at the first non-positive leading minor
        None => (1..=m.nrows())
            .map(|k| m.view((0, 0), (k, k)).clone_owned().cholesky())
            .take_while(Option::is_some)
            .map(|_| Complex64::new(1.0, 0.0))
            .chain(std::iter::once(Complex64::new(0.0, 0.0)))
            .collect(),
    }
}

/// Determinant by LU with partial pivoting.
pub fn lu_det(m: &ComplexMatrix) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{}x{} matrix is not square", m.rows, m.cols)));
    }
    Ok(to_na(m).lu().determinant())
}

/// Eigendecomposition `m = V diag(w) V^H` of a Hermitian matrix. Eigenvalues
/// are returned in descending order with the matching eigenvectors as
/// columns of `V`.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let a = m.hermitian_part()?;
    let n = a.rows;
    let e = to_na(&a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| e.eigenvalues[y].total_cmp(&e.eigenvalues[x]));
    let w = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vs = ComplexMatrix::from_fn(n, n, |i, j| e.eigenvectors[(i, order[j])]);
    Ok((w, vs))
}

/// Real-coefficient polynomial `c_0 + c_1 t + ... + c_d t^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyRealCoeffs {
    coeffs: Vec<f64>,
}

impl PolyRealCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        match coeffs.last() {
            None => Err(Error::Degree("empty coefficient list".into())),
            Some(&c) if c == 0.0 || !c.is_finite() => {
                Err(Error::Degree("leading coefficient must be nonzero".into()))
            }
            _ if coeffs.iter().any(|c| !c.is_finite()) => {
                Err(Error::Degree("non-finite coefficient".into()))
            }
            _ => Ok(Self { coeffs }),
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }
}

/// Monic coefficients (lowest degree first) of `prod_l (t + omega_l)`.
pub fn monic_from_neg_roots(omegas: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &w in omegas {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i] += ci * w;
            next[i + 1] += ci;
        }
        c = next;
    }
    c
}

/// Returns `omega_l = -root_l`, so that `prod_l (t + omega_l) = p(t) / c_d`.
///
/// Roots are the eigenvalues of the companion matrix of `p(s u)`, with `s`
/// chosen to equalise the end coefficients, each followed by Newton
/// polishing on `p`. Complex roots are returned as exact conjugate pairs.
pub fn poly_roots_neg(p: &PolyRealCoeffs) -> Result<Vec<Complex64>> {
    let d = p.degree();
    if d == 0 {
        return Err(Error::Degree("constant polynomial has no roots".into()));
    }
    if d > 32 {
        return Err(Error::Size(format!("degree {d} exceeds 32")));
    }
    let c = p.coeffs();
    let lead = c[d];
    if d == 1 {
        return Ok(vec![Complex64::new(c[0] / lead, 0.0)]);
    }

    let s = if c[0] != 0.0 { (c[0] / lead).abs().powf(1.0 / d as f64) } else { 1.0 };
    let mut comp = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        // monic in u: coefficient of u^j is c_j s^j / (c_d s^d)
        comp[(0, d - 1 - j)] = -c[j] / lead * s.powi(j as i32 - d as i32);
    }
    for i in 1..d {
        comp[(i, i - 1)] = 1.0;
    }
    let eig = comp
        .try_schur(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Convergence("companion matrix eigenvalues did not converge".into()))?
        .complex_eigenvalues();

    let mut roots = Vec::with_capacity(d);
    for z in eig.iter().map(|z| z * s) {
        if z.im == 0.0 {
            roots.push(Complex64::new(polish(p, z).re, 0.0));
        } else if z.im > 0.0 {
            let z = polish(p, z);
            if z.im.abs() <= 1e-14 * z.norm() {
                roots.push(Complex64::new(z.re, 0.0));
                roots.push(Complex64::new(z.re, 0.0));
            } else {
                roots.push(z);
                roots.push(z.conj());
            }
        }
    }
    if roots.len() != d {
        return Err(Error::Convergence(format!("found {} of {d} roots", roots.len())));
    }
    Ok(roots.into_iter().map(|z| -z).collect())
}

fn polish(p: &PolyRealCoeffs, mut z: Complex64) -> Complex64 {
    let (mut fz, _) = p.eval_with_derivative(z);
    for _ in 0..4 {
        let (f, df) = p.eval_with_derivative(z);
        if df.norm() == 0.0 || f.norm() == 0.0 {
            break;
        }
        let cand = z - f / df;
        let fc = p.eval_complex(cand);
        if !(fc.norm() < fz.norm()) {
            break;
        }
        z = cand;
        fz = fc;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(logdet_hpd(&ComplexMatrix::identity(4)).unwrap(), 0.0);
        let d = logdet_hpd(&ComplexMatrix::diag(&[2.0, 3.0])).unwrap();
        assert!((d - 6f64.ln()).abs() < 1e-15);
        let s = 0.5;
        let m = ComplexMatrix::from_real(2, 2, &[1.0 + s, s, s, 1.0 + s]).unwrap();
        let d = logdet_hpd(&m).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-14);
        let lu = lu_det(&m).unwrap();
        assert!((lu.re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn logdet_rejects_indefinite() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert_eq!(logdet_hpd(&m), Err(Error::NotPositiveDefinite { pivot: 1 }));
        let m = ComplexMatrix::from_vec(2, 2, vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(logdet_hpd(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig_small() {
        let (w, v) = hermitian_eig(&ComplexMatrix::diag(&[1.0, 3.0])).unwrap();
        assert_eq!(w, vec![3.0, 1.0]);
        assert!((v[(1, 0)].norm() - 1.0).abs() < 1e-15);
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 0.5, 0.5, 1.0]).unwrap();
        let (w, _) = hermitian_eig(&m).unwrap();
        assert!((w[0] - 1.5).abs() < 1e-14 && (w[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn eig_complex_reconstruction() {
        let m = ComplexMatrix::from_vec(
            3,
            3,
            vec![
                c(4.0, 0.0), c(1.0, 2.0), c(0.0, -1.0),
                c(1.0, -2.0), c(5.0, 0.0), c(0.5, 0.5),
                c(0.0, 1.0), c(0.5, -0.5), c(3.0, 0.0),
            ],
        )
        .unwrap();
        let (w, v) = hermitian_eig(&m).unwrap();
        let back = v.matmul(&ComplexMatrix::diag(&w)).unwrap().matmul(&v.conj_transpose()).unwrap();
        let diff = back.add(&m.scale(-1.0)).unwrap().frobenius_norm();
        assert!(diff < 1e-13 * m.frobenius_norm());
        assert!((w.iter().sum::<f64>() - 12.0).abs() < 1e-13);
    }

    #[test]
    fn roots_small() {
        let p = PolyRealCoeffs::new(vec![2.0, 3.0, 1.0]).unwrap();
        let mut w: Vec<f64> = poly_roots_neg(&p).unwrap().iter().map(|z| z.re).collect();
        w.sort_by(f64::total_cmp);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 2.0).abs() < 1e-14);
        let p = PolyRealCoeffs::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(poly_roots_neg(&p).unwrap(), vec![c(1.0, 0.0)]);
        assert!(PolyRealCoeffs::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn roots_complex_pair() {
        // (t^2 + 2t + 5)(t + 3)
        let p = PolyRealCoeffs::new(vec![15.0, 11.0, 5.0, 1.0]).unwrap();
        let w = poly_roots_neg(&p).unwrap();
        let back = monic_from_neg_roots(&w);
        for (b, e) in back.iter().zip([15.0, 11.0, 5.0, 1.0]) {
            assert!((b - e).norm() < 1e-13 * e, "{b} vs {e}");
        }
        assert!(w.iter().all(|z| z.re > 0.0));
    }
}
