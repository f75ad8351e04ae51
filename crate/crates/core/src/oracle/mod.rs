//! Self-contained dense complex linear algebra.
//!
//! Everything downstream that needs a determinant, a linear solve or an
//! eigendecomposition goes through this module: LU with partial pivoting,
//! Householder–Hessenberg reduction followed by shifted QR, inverse-iteration
//! eigenvectors, and a rank-revealing elimination for small nullspaces.
//!
//! Pairings come in two flavours. [`pairing`] is bilinear (`Σ bra_i ket_i`),
//! the convention for SOV covectors and matrix elements `⟨t|O|t′⟩`;
//! [`inner`] conjugates its first argument and is used for Hilbert norms.

mod eig;
mod lu;
mod matrix;

use num_complex::Complex64;

pub use eig::{eig, hessenberg, EigenDecomposition, MAX_DIM};
pub use lu::{lu_det, lu_factor, lu_solve, LuFactorization, PIVOT_RTOL};
pub use matrix::{vec_max_abs_diff, vec_norm, Matrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is numerically singular at pivot {index}")]
    Singular { index: usize },
    #[error("dimension {dim} exceeds eigensolver limit {max}")]
    TooLarge { dim: usize, max: usize },
}

/// Bilinear pairing `Σ_i bra_i ket_i` (no conjugation).
pub fn pairing(bra: &[Complex64], ket: &[Complex64]) -> Result<Complex64, LinalgError> {
    if bra.len() != ket.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: bra.len(),
            found: ket.len(),
        });
    }
    Ok(bra.iter().zip(ket).map(|(a, b)| a * b).sum())
}

/// Sesquilinear inner product `Σ_i conj(v_i) w_i`.
pub fn inner(v: &[Complex64], w: &[Complex64]) -> Result<Complex64, LinalgError> {
    if v.len() != w.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: v.len(),
            found: w.len(),
        });
    }
    Ok(v.iter().zip(w).map(|(a, b)| a.conj() * b).sum())
}

/// Bilinear matrix element `bra · A · ket`.
pub fn matrix_element(bra: &[Complex64], a: &Matrix, ket: &[Complex64]) -> Result<Complex64, LinalgError> {
    if a.cols() != ket.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.cols(),
            found: ket.len(),
        });
    }
    if a.rows() != bra.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows(),
            found: bra.len(),
        });
    }
    pairing(bra, &a.mul_vec(ket))
}

/// Result of a rank-revealing elimination.
#[derive(Debug, Clone)]
pub struct Nullspace {
    pub rank: usize,
    /// Unit-norm basis vectors of the numerical nullspace.
    pub basis: Vec<Vec<Complex64>>,
    /// Pivot moduli after row equilibration, in elimination order.
    pub pivots: Vec<f64>,
}

/// Numerical nullspace by Gaussian elimination with complete pivoting.
///
/// Rows are scaled to unit max-norm first; a pivot below `rtol` times the
/// first pivot ends the elimination.
pub fn nullspace(a: &Matrix, rtol: f64) -> Nullspace {
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    for i in 0..m {
        let s = w.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            for j in 0..n {
                w[(i, j)] /= s;
            }
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    let first = w.max_abs();
    for k in 0..m.min(n) {
        let (mut bi, mut bj, mut best) = (k, k, -1.0);
        for i in k..m {
            for j in k..n {
                let v = w[(i, j)].norm();
                if v > best {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        pivots.push(best);
        if best <= rtol * first || best == 0.0 {
            break;
        }
        for j in 0..n {
            let t = w[(k, j)];
            w[(k, j)] = w[(bi, j)];
            w[(bi, j)] = t;
        }
        for i in 0..m {
            let t = w[(i, k)];
            w[(i, k)] = w[(i, bj)];
            w[(i, bj)] = t;
        }
        perm.swap(k, bj);
        for i in k + 1..m {
            let l = w[(i, k)] / w[(k, k)];
            for j in k..n {
                let t = w[(k, j)];
                w[(i, j)] -= l * t;
            }
        }
        rank += 1;
    }
    let mut basis = Vec::new();
    for f in rank..n {
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        y[f] = Complex64::new(1.0, 0.0);
        for i in (0..rank).rev() {
            let mut acc = -w[(i, f)];
            for j in i + 1..rank {
                acc -= w[(i, j)] * y[j];
            }
            y[i] = acc / w[(i, i)];
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (k, &p) in perm.iter().enumerate() {
            x[p] = y[k];
        }
        let nx = vec_norm(&x);
        basis.push(x.into_iter().map(|z| z / nx).collect());
    }
    Nullspace { rank, basis, pivots }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_pairing_is_kronecker() {
        for k in 0..4 {
            for kp in 0..4 {
                let mut bra = vec![c(0.0, 0.0); 4];
                let mut ket = vec![c(0.0, 0.0); 4];
                bra[k] = c(1.0, 0.0);
                ket[kp] = c(1.0, 0.0);
                let expected = if k == kp { 1.0 } else { 0.0 };
                assert_eq!(pairing(&bra, &ket).unwrap(), c(expected, 0.0));
            }
        }
    }

    #[test]
    fn bilinear_differs_from_sesquilinear() {
        let v = [c(0.0, 1.0), c(0.0, 0.0)];
        assert_eq!(pairing(&v, &v).unwrap(), c(-1.0, 0.0));
        assert_eq!(inner(&v, &v).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn identity_matrix_element_is_pairing() {
        let bra = [c(1.0, 2.0), c(-0.5, 0.3), c(0.2, 0.0)];
        let ket = [c(0.1, -1.0), c(2.0, 0.0), c(0.0, 0.7)];
        let me = matrix_element(&bra, &Matrix::identity(3), &ket).unwrap();
        assert!((me - pairing(&bra, &ket).unwrap()).norm() < 1e-15);
        assert!(pairing(&bra, &ket[..2]).is_err());
    }

    #[test]
    fn nullspace_of_rank_one() {
        let a = Matrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0), c(6.0, 0.0)]]).unwrap();
        let ns = nullspace(&a, 1e-12);
        assert_eq!(ns.rank, 1);
        assert_eq!(ns.basis.len(), 2);
        for v in &ns.basis {
            assert!(vec_norm(&a.mul_vec(v)) < 1e-14);
        }
    }
}
