use std::sync::Arc;

use nalgebra::DMatrix;

use super::{same_algebra, Coeff, GeneratorSet, Multivector};
use crate::error::{Error, Result};

/// Dense rectangular matrix with Grassmann entries (row-major).
#[derive(Clone, Debug)]
pub struct ElemMatrix<T: Coeff> {
    rows: usize,
    cols: usize,
    algebra: Arc<GeneratorSet>,
    data: Vec<Multivector<T>>,
}

impl<T: Coeff> PartialEq for ElemMatrix<T> {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl<T: Coeff> ElemMatrix<T> {
    pub fn new(
        algebra: &Arc<GeneratorSet>,
        rows: usize,
        cols: usize,
        data: Vec<Multivector<T>>,
    ) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|x| !same_algebra(x.algebra(), algebra)) {
            return Err(Error::AlgebraMismatch);
        }
        Ok(Self { rows, cols, algebra: algebra.clone(), data })
    }

    pub fn zeros(algebra: &Arc<GeneratorSet>, rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            algebra: algebra.clone(),
            data: vec![Multivector::zero(algebra); rows * cols],
        }
    }

    pub fn identity(algebra: &Arc<GeneratorSet>, n: usize) -> Self {
        let mut m = Self::zeros(algebra, n, n);
        for i in 0..n {
            m.set(i, i, Multivector::one(algebra));
        }
        m
    }

    pub fn from_fn(
        algebra: &Arc<GeneratorSet>,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Multivector<T>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(algebra, rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn algebra(&self) -> &Arc<GeneratorSet> {
        &self.algebra
    }

    pub fn get(&self, i: usize, j: usize) -> &Multivector<T> {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Multivector<T>) {
        self.data[i * self.cols + j] = x;
    }

    pub fn all_even(&self) -> bool {
        self.data.iter().all(Multivector::is_even)
    }

    pub fn all_odd(&self) -> bool {
        self.data.iter().all(Multivector::is_odd)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if !same_algebra(&self.algebra, &other.algebra) {
            return Err(Error::AlgebraMismatch);
        }
        let mut out = Self::zeros(&self.algebra, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Multivector::zero(&self.algebra);
                for k in 0..self.cols {
                    acc += &(self.get(i, k) * other.get(k, j));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    fn zip(&self, other: &Self, sub: bool) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape("matrix sizes differ".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| if sub { x.sub_checked(y) } else { x.add_checked(y) })
            .collect::<Result<_>>()?;
        Ok(Self { rows: self.rows, cols: self.cols, algebra: self.algebra.clone(), data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, false)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, true)
    }

    fn require_square_even(&self, what: &str) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::Shape(format!("{what} needs a square matrix")));
        }
        if !self.all_even() {
            return Err(Error::Parity(format!("{what} needs even entries")));
        }
        Ok(())
    }

    /// Determinant over the commutative even subalgebra.
    ///
    /// Cofactor expansion up to 4x4, row-pivoted elimination beyond (pivot =
    /// entry with the largest body).
    pub fn det(&self) -> Result<Multivector<T>> {
        self.require_square_even("det")?;
        if self.rows <= 4 {
            let idx: Vec<usize> = (0..self.rows).collect();
            return Ok(self.cofactor_det(&idx, 0));
        }
        let n = self.rows;
        let mut m = self.data.clone();
        let mut det = Multivector::one(&self.algebra);
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|r| (r, m[r * n + k].body().modulus()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 {
                return Err(Error::Singular("determinant pivot has zero body".into()));
            }
            if p != k {
                for c in 0..n {
                    m.swap(k * n + c, p * n + c);
                }
                det = -det;
            }
            let pivot = m[k * n + k].clone();
            let inv = pivot.inverse()?;
            det = &det * &pivot;
            for r in (k + 1)..n {
                let factor = &m[r * n + k] * &inv;
                if factor.is_zero() {
                    continue;
                }
                for c in k..n {
                    let d = &factor * &m[k * n + c];
                    m[r * n + c] -= &d;
                }
            }
        }
        Ok(det)
    }

    fn cofactor_det(&self, cols: &[usize], row: usize) -> Multivector<T> {
        if cols.is_empty() {
            return Multivector::one(&self.algebra);
        }
        if cols.len() == 1 {
            return self.get(row, cols[0]).clone();
        }
        let mut acc = Multivector::zero(&self.algebra);
        for (k, &c) in cols.iter().enumerate() {
            let entry = self.get(row, c);
            if entry.is_zero() {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let term = entry * &self.cofactor_det(&rest, row + 1);
            if k % 2 == 0 {
                acc += &term;
            } else {
                acc -= &term;
            }
        }
        acc
    }

    /// Inverse of a square matrix with even entries (Gauss–Jordan, body pivoting).
    pub fn inverse(&self) -> Result<Self> {
        self.require_square_even("inverse")?;
        let n = self.rows;
        let mut m = self.data.clone();
        let mut inv = Self::identity(&self.algebra, n).data;
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|r| (r, m[r * n + k].body().modulus()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 {
                return Err(Error::Singular("matrix body is not invertible".into()));
            }
            if p != k {
                for c in 0..n {
                    m.swap(k * n + c, p * n + c);
                    inv.swap(k * n + c, p * n + c);
                }
            }
            let pinv = m[k * n + k].inverse()?;
            for c in 0..n {
                m[k * n + c] = &m[k * n + c] * &pinv;
                inv[k * n + c] = &inv[k * n + c] * &pinv;
            }
            for r in 0..n {
                if r == k {
                    continue;
                }
                let factor = m[r * n + k].clone();
                if factor.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let d = &factor * &m[k * n + c];
                    m[r * n + c] -= &d;
                    let e = &factor * &inv[k * n + c];
                    inv[r * n + c] -= &e;
                }
            }
        }
        Ok(Self { rows: n, cols: n, algebra: self.algebra.clone(), data: inv })
    }
}

impl ElemMatrix<f64> {
    /// Embed a real matrix as constant (body-only) entries.
    pub fn from_real(algebra: &Arc<GeneratorSet>, m: &DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(Multivector::scalar(algebra, m[(i, j)]));
            }
        }
        Self { rows, cols, algebra: algebra.clone(), data }
    }

    pub fn body(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).body())
    }
}

/// Supermatrix `[[A, Σ], [Γ, B]]` with even diagonal blocks and odd off-diagonal blocks.
#[derive(Clone, Debug)]
pub struct SuperMatrix<T: Coeff> {
    pub a: ElemMatrix<T>,
    pub sigma: ElemMatrix<T>,
    pub gamma: ElemMatrix<T>,
    pub b: ElemMatrix<T>,
}

impl<T: Coeff> SuperMatrix<T> {
    pub fn new(
        a: ElemMatrix<T>,
        sigma: ElemMatrix<T>,
        gamma: ElemMatrix<T>,
        b: ElemMatrix<T>,
    ) -> Result<Self> {
        let p = a.rows;
        let q = b.rows;
        if a.cols != p || b.cols != q || sigma.rows != p || sigma.cols != q || gamma.rows != q || gamma.cols != p
        {
            return Err(Error::Shape("supermatrix blocks have inconsistent sizes".into()));
        }
        let alg = a.algebra.clone();
        if [&sigma, &gamma, &b].iter().any(|m| !same_algebra(&m.algebra, &alg)) {
            return Err(Error::AlgebraMismatch);
        }
        if !a.all_even() || !b.all_even() {
            return Err(Error::Parity("diagonal blocks must be even".into()));
        }
        if !sigma.all_odd() || !gamma.all_odd() {
            return Err(Error::Parity("off-diagonal blocks must be odd".into()));
        }
        Ok(Self { a, sigma, gamma, b })
    }

    /// Even dimension `p` and odd dimension `q`.
    pub fn dims(&self) -> (usize, usize) {
        (self.a.rows, self.b.rows)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let a = self.a.mul(&other.a)?.add(&self.sigma.mul(&other.gamma)?)?;
        let sigma = self.a.mul(&other.sigma)?.add(&self.sigma.mul(&other.b)?)?;
        let gamma = self.gamma.mul(&other.a)?.add(&self.b.mul(&other.gamma)?)?;
        let b = self.gamma.mul(&other.sigma)?.add(&self.b.mul(&other.b)?)?;
        Self::new(a, sigma, gamma, b)
    }

    /// Superdeterminant `det(A − Σ B⁻¹ Γ) · det(B)⁻¹`.
    pub fn sdet(&self) -> Result<Multivector<T>> {
        let binv = self.b.inverse()?;
        let schur = self.a.sub(&self.sigma.mul(&binv)?.mul(&self.gamma)?)?;
        let det_b = self.b.det()?;
        Ok(&schur.det()? * &det_b.inverse()?)
    }
}
