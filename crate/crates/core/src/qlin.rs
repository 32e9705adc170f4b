//! Dense complex linear algebra for the small operators used throughout the
//! crate: Kronecker products, two-qubit partial traces and a cyclic Jacobi
//! eigensolver for Hermitian matrices.
//!
//! Subsystem ordering is fixed: in a two-qubit operator qubit A is the left
//! (most significant) tensor factor, so basis index `2 * a + b` labels
//! `|a b>`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported operator dimension.
pub const MAX_DIM: usize = 64;

const JACOBI_THRESHOLD: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
/// Precondition on `eig_hermitian` inputs.
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Square complex matrix in dense row-major storage.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = r(1.0);
        }
        m
    }

    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Malformed("dimension must be positive".into()));
        }
        if dim > MAX_DIM {
            return Err(Error::TooLarge(dim));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from real entries given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::Malformed(format!(
                    "row of length {} in a {dim}x{dim} matrix",
                    row.len()
                )));
            }
            data.extend(row.iter().map(|&x| r(x)));
        }
        Self::from_vec(dim, data)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = r(d);
        }
        m
    }

    /// `|ket><ket|`
    pub fn outer(ket: &[Complex64]) -> Self {
        let dim = ket.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = ket[i] * ket[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// `max |M - M^dag|` over all entries.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&self, ket: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(ket.len(), self.dim, "dimension mismatch");
        (0..self.dim)
            .map(|i| {
                let row = &self.data[i * self.dim..(i + 1) * self.dim];
                row.iter().zip(ket).map(|(m, v)| m * v).sum()
            })
            .collect()
    }

    /// `<ket| M |ket>`
    pub fn expectation(&self, ket: &[Complex64]) -> Complex64 {
        let image = self.apply(ket);
        ket.iter().zip(&image).map(|(a, b)| a.conj() * b).sum()
    }

    /// `U M U^dag`
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &(u * self) * &u.adjoint()
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut acc = r(0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == r(0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Kronecker product `a ⊗ b`; `a` is the most significant factor.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = a.dim * b.dim;
    if dim > MAX_DIM {
        return Err(Error::TooLarge(dim));
    }
    let mut out = ComplexMatrix::zeros(dim);
    for i in 0..a.dim {
        for j in 0..a.dim {
            let aij = a[(i, j)];
            for k in 0..b.dim {
                for l in 0..b.dim {
                    out[(i * b.dim + k, j * b.dim + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of two state vectors.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

/// One of the two qubits of a two-qubit register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subsystem {
    A,
    B,
}

impl Subsystem {
    pub fn other(self) -> Self {
        match self {
            Subsystem::A => Subsystem::B,
            Subsystem::B => Subsystem::A,
        }
    }
}

/// Reduced operator of a 4x4 two-qubit operator, keeping `keep`.
pub fn partial_trace(rho: &ComplexMatrix, keep: Subsystem) -> Result<ComplexMatrix> {
    if rho.dim != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim,
        });
    }
    let mut out = ComplexMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = match keep {
                Subsystem::A => rho[(2 * i, 2 * j)] + rho[(2 * i + 1, 2 * j + 1)],
                Subsystem::B => rho[(i, j)] + rho[(2 + i, 2 + j)],
            };
        }
    }
    Ok(out)
}

/// Exchanges the two qubits of a 4x4 operator.
pub fn swap_subsystems(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if rho.dim != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim,
        });
    }
    let perm = [0usize, 2, 1, 3];
    let mut out = ComplexMatrix::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            out[(perm[i], perm[j])] = rho[(i, j)];
        }
    }
    Ok(out)
}

/// Spectral decomposition `M = V diag(λ) V^dag` with ascending `λ`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::from_diagonal(&self.eigenvalues);
        d.conjugate_by(&self.eigenvectors)
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        let n = self.eigenvectors.dim();
        (0..n).map(|i| self.eigenvectors[(i, k)]).collect()
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary and then applies a real Givens rotation, so the composite
/// transform zeroes `a_pq` exactly. Sweeps stop once the off-diagonal
/// Frobenius norm drops below `1e-12` (relative to `max(1, ‖M‖_F)`).
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let residual = m.hermiticity_residual();
    if residual > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { residual });
    }
    let n = m.dim;
    // Work on the exactly Hermitian part.
    let mut a = (m + &m.adjoint()).scale(0.5);
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_THRESHOLD * m.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let magnitude = apq.norm();
                if magnitude < 1e-300 {
                    continue;
                }
                let phase_conj = (apq / magnitude).conj();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = 0.5 * (2.0 * magnitude).atan2(aqq - app);
                let (s, cth) = theta.sin_cos();
                // G = diag(1, e^{-i arg a_pq}) * [[c, s], [-s, c]]
                let g_pp = r(cth);
                let g_pq = r(s);
                let g_qp = phase_conj * (-s);
                let g_qq = phase_conj * cth;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
                a[(p, q)] = r(0.0);
                a[(q, p)] = r(0.0);
                a[(p, p)] = r(a[(p, p)].re);
                a[(q, q)] = r(a[(q, q)].re);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[(row, col)] = v[(row, src)];
        }
    }
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}
