//! Dense complex matrices and the handful of kernels the representation needs:
//! products, eigenvalues (Hessenberg + shifted QR), singular values (one-sided
//! Jacobi), LU solves and the matrix exponential (Pade 13, scaling and squaring).

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{abs1, Real};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, actual: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diagonal(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
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

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, alpha: Complex<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| alpha * z).collect() }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, actual: v.len() });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).fold(Complex::zero(), |acc, (a, b)| acc + a * b))
            .collect())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, actual: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d = *d + a * b;
                }
            }
        }
        Ok(out)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                actual: other.rows * other.cols,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    fn require_square(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, actual: self.cols });
        }
        Ok(())
    }

    /// Eigenvalues of a square matrix, in the order they deflate.
    pub fn eigenvalues(&self) -> Result<Vec<Complex<T>>> {
        self.require_square()?;
        let n = self.rows;
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut h = self.clone();
        h.reduce_to_hessenberg();
        h.hessenberg_qr()?;
        Ok((0..n).map(|i| h[(i, i)]).collect())
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<T> {
        // Work on the orientation with at most as many columns as rows.
        let a = if self.cols > self.rows { self.adjoint() } else { self.clone() };
        let mut sv = a.jacobi_column_norms();
        sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
        sv
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> T {
        self.singular_values().first().copied().unwrap_or_else(T::zero)
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        self.require_square()?;
        if rhs.rows != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, actual: rhs.rows });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut x = rhs.clone();
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|r| (r, a[(r, k)].norm()))
                .fold((k, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == T::zero() || !pmax.is_finite() {
                return Err(Error::Singular(k));
            }
            if piv != k {
                a.swap_rows(piv, k);
                x.swap_rows(piv, k);
            }
            let d = a[(k, k)];
            for r in k + 1..n {
                let f = a[(r, k)] / d;
                if f.is_zero() {
                    continue;
                }
                a[(r, k)] = Complex::zero();
                for c in k + 1..n {
                    let v = a[(k, c)];
                    a[(r, c)] = a[(r, c)] - f * v;
                }
                for c in 0..x.cols {
                    let v = x[(k, c)];
                    x[(r, c)] = x[(r, c)] - f * v;
                }
            }
        }
        for k in (0..n).rev() {
            let d = a[(k, k)];
            for c in 0..x.cols {
                let mut s = x[(k, c)];
                for j in k + 1..n {
                    s = s - a[(k, j)] * x[(j, c)];
                }
                x[(k, c)] = s / d;
            }
        }
        Ok(x)
    }

    /// `exp(self)` via Pade(13) with scaling and squaring.
    pub fn exp(&self) -> Result<Self> {
        self.require_square()?;
        let n = self.rows;
        let norm = self.norm_one();
        if !norm.is_finite() || norm.as_f64() > 1e6 {
            return Err(Error::ExpOverflow { norm: norm.as_f64() });
        }
        const THETA_13: f64 = 5.371920351148152;
        const B: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        let ratio = norm.as_f64() / THETA_13;
        let s = if ratio > 1.0 { ratio.log2().ceil() as i32 } else { 0 };
        let a = self.scale(Complex::new(T::of(0.5f64.powi(s)), T::zero()));
        let ident = Self::identity(n);
        let a2 = a.matmul(&a)?;
        let a4 = a2.matmul(&a2)?;
        let a6 = a4.matmul(&a2)?;
        let lin = |terms: &[(&Self, f64)]| -> Self {
            let mut out = Self::zeros(n, n);
            for (m, c) in terms {
                let c = T::of(*c);
                for (d, v) in out.data.iter_mut().zip(&m.data) {
                    *d = *d + v * c;
                }
            }
            out
        };
        let u_inner = a6.matmul(&lin(&[(&a6, B[13]), (&a4, B[11]), (&a2, B[9])]))?;
        let u_poly = &u_inner + &lin(&[(&a6, B[7]), (&a4, B[5]), (&a2, B[3]), (&ident, B[1])]);
        let u = a.matmul(&u_poly)?;
        let v_inner = a6.matmul(&lin(&[(&a6, B[12]), (&a4, B[10]), (&a2, B[8])]))?;
        let v = &v_inner + &lin(&[(&a6, B[6]), (&a4, B[4]), (&a2, B[2]), (&ident, B[0])]);
        let mut x = (&v - &u).solve(&(&v + &u))?;
        for _ in 0..s {
            x = x.matmul(&x)?;
        }
        if !x.is_finite() {
            return Err(Error::ExpOverflow { norm: norm.as_f64() });
        }
        Ok(x)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn reduce_to_hessenberg(&mut self) {
        let n = self.rows;
        if n < 3 {
            return;
        }
        for k in 0..n - 2 {
            let xnorm = (k + 1..n).map(|r| self[(r, k)].norm_sqr()).sum::<T>().sqrt();
            if xnorm == T::zero() {
                continue;
            }
            let x0 = self[(k + 1, k)];
            let phase = if x0.norm() == T::zero() { Complex::one() } else { x0 / x0.norm() };
            let mut v: Vec<Complex<T>> = (k + 1..n).map(|r| self[(r, k)]).collect();
            v[0] = v[0] + phase * xnorm;
            let vnorm2 = v.iter().map(|z| z.norm_sqr()).sum::<T>();
            if vnorm2 == T::zero() {
                continue;
            }
            let two = T::one() + T::one();
            // Left: rows k+1.., P = I - 2 v v^H / |v|^2.
            for c in 0..n {
                let dot = v
                    .iter()
                    .enumerate()
                    .fold(Complex::zero(), |acc, (i, vi)| acc + vi.conj() * self[(k + 1 + i, c)]);
                let f = dot * two / vnorm2;
                for (i, vi) in v.iter().enumerate() {
                    let cur = self[(k + 1 + i, c)];
                    self[(k + 1 + i, c)] = cur - vi * f;
                }
            }
            // Right: columns k+1..
            for r in 0..n {
                let dot = v
                    .iter()
                    .enumerate()
                    .fold(Complex::zero(), |acc, (i, vi)| acc + self[(r, k + 1 + i)] * vi);
                let f = dot * two / vnorm2;
                for (i, vi) in v.iter().enumerate() {
                    let cur = self[(r, k + 1 + i)];
                    self[(r, k + 1 + i)] = cur - f * vi.conj();
                }
            }
            for r in k + 2..n {
                self[(r, k)] = Complex::zero();
            }
        }
    }

    /// Drives an upper Hessenberg matrix to triangular form (eigenvalues only:
    /// updates are confined to the active window).
    fn hessenberg_qr(&mut self) -> Result<()> {
        let n = self.rows;
        let eps = T::epsilon();
        let scale = self.frobenius_norm();
        let max_iter_per_eig = 60;
        let mut total = 0usize;
        let mut hi = n - 1;
        let mut iter = 0usize;
        while hi > 0 {
            let mut l = hi;
            while l > 0 {
                let mut tst = abs1(self[(l - 1, l - 1)]) + abs1(self[(l, l)]);
                if tst == T::zero() {
                    tst = scale;
                }
                if abs1(self[(l, l - 1)]) <= eps * tst {
                    self[(l, l - 1)] = Complex::zero();
                    break;
                }
                l -= 1;
            }
            if l == hi {
                hi -= 1;
                iter = 0;
                continue;
            }
            iter += 1;
            total += 1;
            if iter > max_iter_per_eig {
                return Err(Error::NoConvergence { iterations: total });
            }
            let shift = if iter.is_multiple_of(10) {
                // Exceptional shift to break cycles (e.g. permutation matrices).
                let mut s = abs1(self[(hi, hi - 1)]);
                if hi >= 2 && hi - 1 > l {
                    s = s + abs1(self[(hi - 1, hi - 2)]);
                }
                self[(hi, hi)] + Complex::new(s * T::of(0.75), s * T::of(-0.4375))
            } else {
                wilkinson_shift(self[(hi - 1, hi - 1)], self[(hi - 1, hi)], self[(hi, hi - 1)], self[(hi, hi)])
            };
            self.qr_step(l, hi, shift);
        }
        Ok(())
    }

    fn qr_step(&mut self, lo: usize, hi: usize, shift: Complex<T>) {
        for k in lo..=hi {
            self[(k, k)] = self[(k, k)] - shift;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(self[(k, k)], self[(k + 1, k)]);
            for col in k..=hi {
                let x = self[(k, col)];
                let y = self[(k + 1, col)];
                self[(k, col)] = x * c + s * y;
                self[(k + 1, col)] = y * c - s.conj() * x;
            }
            self[(k + 1, k)] = Complex::zero();
            rots.push((c, s));
        }
        for (i, (c, s)) in rots.into_iter().enumerate() {
            let k = lo + i;
            for row in lo..=(k + 1).min(hi) {
                let x = self[(row, k)];
                let y = self[(row, k + 1)];
                self[(row, k)] = x * c + y * s.conj();
                self[(row, k + 1)] = y * c - x * s;
            }
        }
        for k in lo..=hi {
            self[(k, k)] = self[(k, k)] + shift;
        }
    }

    /// One-sided Jacobi: orthogonalizes columns, returns their norms.
    fn jacobi_column_norms(mut self) -> Vec<T> {
        let (m, n) = (self.rows, self.cols);
        let eps = T::epsilon();
        for _sweep in 0..60 {
            let mut rotated = false;
            for i in 0..n {
                for j in i + 1..n {
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = Complex::<T>::zero();
                    for r in 0..m {
                        let a = self[(r, i)];
                        let b = self[(r, j)];
                        alpha = alpha + a.norm_sqr();
                        beta = beta + b.norm_sqr();
                        gamma = gamma + a.conj() * b;
                    }
                    let g = gamma.norm();
                    if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let phase = gamma / g;
                    let two = T::one() + T::one();
                    let zeta = (beta - alpha) / (two * g);
                    let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                    let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    for r in 0..m {
                        let a = self[(r, i)];
                        let b = self[(r, j)];
                        self[(r, i)] = a * c - b * phase.conj() * s;
                        self[(r, j)] = a * phase * s + b * c;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        (0..n).map(|c| (0..m).map(|r| self[(r, c)].norm_sqr()).sum::<T>().sqrt()).collect()
    }
}

fn wilkinson_shift<T: Real>(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Complex<T> {
    let half = T::of(0.5);
    let delta = (a - d) * half;
    let bc = b * c;
    let mut r = (delta * delta + bc).sqrt();
    if (delta.conj() * r).re < T::zero() {
        r = -r;
    }
    let denom = delta + r;
    if denom.is_zero() {
        d
    } else {
        d - bc / denom
    }
}

/// Rotation `[c s; -conj(s) c]` with real `c` zeroing the second component.
fn givens<T: Real>(a: Complex<T>, b: Complex<T>) -> (T, Complex<T>) {
    if b.is_zero() {
        return (T::one(), Complex::zero());
    }
    if a.is_zero() {
        return (T::zero(), Complex::one());
    }
    let an = a.norm();
    let r = an.hypot(b.norm());
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        self.try_add(rhs).expect("matrix shapes must agree")
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        self.try_sub(rhs).expect("matrix shapes must agree")
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.matmul(rhs).expect("inner dimensions must agree")
    }
}
