//! Small dense complex matrices.
//!
//! Everything the simulator needs fits in a few kilobytes (blocks are capped at
//! 2^10 by the gate layer), so this is a plain row-major `Vec` rather than a
//! BLAS-backed type.

use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::scalar::{cone, czero, creal, Amp, Real};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Amp<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![czero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Amp<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row-major complex entries. Panics on a length mismatch.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<Amp<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    /// Builds from row-major real entries.
    pub fn from_real(rows: usize, cols: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data: data.iter().map(|&x| creal(x)).collect() }
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(diag: &[Amp<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
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

    pub fn as_slice(&self) -> &[Amp<T>] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Amp<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Amp<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: Amp<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix add shape");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix sub shape");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul inner dimension");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == czero() {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Amp<T>]) -> Vec<Amp<T>> {
        assert_eq!(self.cols, v.len(), "matvec dimension");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).fold(czero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// Kronecker product `self ⊗ other`; `self` indexes the slow (high) bits.
    pub fn kron(&self, other: &Self) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |r, c| {
            self[(r / other.rows, c / other.cols)] * other[(r % other.rows, c % other.cols)]
        })
    }

    pub fn pow(&self, mut e: u64) -> Self {
        assert!(self.is_square(), "matrix power of non-square matrix");
        let mut base = self.clone();
        let mut acc = Self::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.matmul(&base);
            }
            base = base.matmul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix diff shape");
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).norm()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    /// `max |U†U − I|` over entries.
    pub fn unitarity_defect(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        self.adjoint().matmul(self).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn map(&self, f: impl Fn(Amp<T>) -> Amp<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    /// Embeds `self` as the top-left block of an `n × n` identity.
    pub fn pad_identity(&self, n: usize) -> Self {
        assert!(self.rows <= n && self.cols <= n);
        Self::from_fn(n, n, |r, c| {
            if r < self.rows && c < self.cols {
                self[(r, c)]
            } else if r == c && (r >= self.rows || c >= self.cols) {
                cone()
            } else {
                czero()
            }
        })
    }

    /// Zero-padded copy with at least `rows × cols` shape.
    pub fn pad_zeros(&self, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |r, c| {
            if r < self.rows && c < self.cols {
                self[(r, c)]
            } else {
                czero()
            }
        })
    }

    /// Top-left `rows × cols` sub-block.
    pub fn top_left(&self, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |r, c| self[(r, c)])
    }
}

impl<T: Real> Index<(usize, usize)> for Matrix<T> {
    type Output = Amp<T>;
    fn index(&self, (r, c): (usize, usize)) -> &Amp<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Amp<T> {
        &mut self.data[r * self.cols + c]
    }
}

pub fn vec_norm<T: Real>(v: &[Amp<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// `⟨a|b⟩` with the first argument conjugated.
pub fn inner<T: Real>(a: &[Amp<T>], b: &[Amp<T>]) -> Amp<T> {
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

/// Completes a set of orthonormal columns to a unitary.
///
/// The given columns come first, in order; the rest are Gram-Schmidt images
/// of the standard basis. Columns that are not orthonormal to 1e-9 are an
/// error on the caller's side and trip an assertion.
pub fn complete_unitary<T: Real>(dim: usize, columns: &[Vec<Amp<T>>]) -> Matrix<T> {
    let tol = T::lit(1e-9);
    let mut basis: Vec<Vec<Amp<T>>> = Vec::with_capacity(dim);
    for col in columns {
        assert_eq!(col.len(), dim, "column length");
        for b in &basis {
            assert!(inner(b, col).norm() <= tol, "columns not orthogonal");
        }
        assert!((vec_norm(col) - T::one()).abs() <= tol, "column not normalised");
        basis.push(col.clone());
    }
    let mut e = 0;
    while basis.len() < dim {
        assert!(e < dim, "failed to complete basis");
        let mut v = vec![czero(); dim];
        v[e] = cone();
        e += 1;
        // Two passes of modified Gram-Schmidt keep the result orthogonal to
        // working precision.
        for _ in 0..2 {
            for b in &basis {
                let p = inner(b, &v);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi = *vi - p * bi;
                }
            }
        }
        let n = vec_norm(&v);
        if n > T::lit(1e-6) {
            basis.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    Matrix::from_fn(dim, dim, |r, c| basis[c][r])
}

/// Unitary whose first column is `v / ‖v‖`.
///
/// Built from a single Householder reflection times a phase, so the map is
/// smooth in `v` away from `v ∝ e0`.
pub fn loader_unitary<T: Real>(v: &[Amp<T>]) -> Matrix<T> {
    let n = vec_norm(v);
    assert!(n > T::zero(), "cannot load the zero vector");
    let dim = v.len();
    let vh: Vec<Amp<T>> = v.iter().map(|&z| z / n).collect();
    let r0 = vh[0].norm();
    let phase = if r0 > T::lit(1e-300) { vh[0] / r0 } else { cone() };
    // u = v̂ − phase·e0; H = I − 2uu†/‖u‖² swaps phase·e0 and v̂.
    let mut u = vh.clone();
    u[0] = u[0] - phase;
    let un2 = u.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
    let mut h = Matrix::identity(dim);
    if un2 > T::lit(1e-30) {
        let two = creal(T::lit(2.0) / un2);
        for r in 0..dim {
            for c in 0..dim {
                h[(r, c)] = h[(r, c)] - two * u[r] * u[c].conj();
            }
        }
    }
    h.scale(phase)
}

/// Single-qubit `R_y(angle)`.
pub fn ry<T: Real>(angle: T) -> Matrix<T> {
    let half = angle / T::lit(2.0);
    let (s, c) = half.sin_cos();
    Matrix::from_real(2, 2, &[c, -s, s, c])
}

/// Single-qubit `R_z(angle) = diag(e^{-iφ/2}, e^{iφ/2})`.
pub fn rz<T: Real>(angle: T) -> Matrix<T> {
    let half = angle / T::lit(2.0);
    Matrix::diagonal(&[Complex::from_polar(T::one(), -half), Complex::from_polar(T::one(), half)])
}

pub fn hadamard<T: Real>() -> Matrix<T> {
    let h = T::one() / T::lit(2.0).sqrt();
    Matrix::from_real(2, 2, &[h, h, h, -h])
}

pub fn pauli_x<T: Real>() -> Matrix<T> {
    Matrix::from_real(2, 2, &[T::zero(), T::one(), T::one(), T::zero()])
}

pub fn pauli_z<T: Real>() -> Matrix<T> {
    Matrix::from_real(2, 2, &[T::one(), T::zero(), T::zero(), -T::one()])
}

/// Two-qubit CZ, used as the ring entangler of the weight ansatz.
pub fn cz<T: Real>() -> Matrix<T> {
    Matrix::diagonal(&[cone(), cone(), cone(), -cone::<T>()])
}

/// Uniformly random unitary from QR of a complex Gaussian matrix.
pub fn random_unitary<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix<f64> {
    let gauss = |rng: &mut R| -> f64 {
        // Box-Muller; keeps rand_distr out of the dependency list.
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let cols: Vec<Vec<Complex<f64>>> =
        (0..dim).map(|_| (0..dim).map(|_| Complex::new(gauss(rng), gauss(rng))).collect()).collect();
    let mut basis: Vec<Vec<Complex<f64>>> = Vec::new();
    for mut v in cols {
        for _ in 0..2 {
            for b in &basis {
                let p = inner(b, &v);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= p * bi;
                }
            }
        }
        let n = vec_norm(&v);
        basis.push(v.into_iter().map(|z| z / n).collect());
    }
    Matrix::from_fn(dim, dim, |r, c| basis[c][r])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kron_puts_left_factor_on_high_bits() {
        let x = pauli_x::<f64>();
        let i = Matrix::<f64>::identity(2);
        let xi = x.kron(&i);
        // |00> -> |10> means column 0 has its 1 in row 2.
        assert_eq!(xi[(2, 0)], Complex::new(1.0, 0.0));
    }

    #[test]
    fn loader_first_column_matches_vector() {
        let v: Vec<Complex<f64>> =
            vec![Complex::new(0.3, 0.1), Complex::new(-0.5, 0.0), Complex::new(0.0, 0.2), Complex::new(0.7, -0.4)];
        let u = loader_unitary(&v);
        let n = vec_norm(&v);
        assert!(u.is_unitary(1e-12));
        for r in 0..4 {
            assert!((u[(r, 0)] - v[r] / n).norm() < 1e-12);
        }
    }

    #[test]
    fn loader_handles_basis_vector() {
        let v = vec![Complex::new(0.0, 0.0), Complex::new(2.0, 0.0)];
        let u = loader_unitary(&v);
        assert!((u[(1, 0)] - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert!(u.is_unitary(1e-12));
    }

    #[test]
    fn complete_unitary_keeps_given_columns() {
        let s = 1.0 / 2f64.sqrt();
        let col = vec![Complex::new(s, 0.0), Complex::new(0.0, s), Complex::new(0.0, 0.0)];
        let u = complete_unitary(3, &[col.clone()]);
        assert!(u.is_unitary(1e-12));
        assert_eq!(u.column(0), col);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [1, 2, 5, 8] {
            assert!(random_unitary(d, &mut rng).is_unitary(1e-12));
        }
    }

    #[test]
    fn ry_pi_matches_closed_form() {
        let m = ry::<f64>(std::f64::consts::PI);
        let expect = Matrix::from_real(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(m.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn pow_matches_repeated_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_unitary(4, &mut rng);
        let u5 = u.matmul(&u).matmul(&u).matmul(&u).matmul(&u);
        assert!(u.pow(5).max_abs_diff(&u5) < 1e-12);
    }
}
