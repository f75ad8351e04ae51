use num_complex::Complex64;

use super::{LinalgError, Matrix};

/// Pivots smaller than this fraction of the largest entry of `A` count as zero.
pub const PIVOT_RTOL: f64 = 1e-14;

/// Packed `P A = L U` factorization with unit-diagonal `L`.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    factors: Matrix,
    pivots: Vec<usize>,
    sign: f64,
    scale: f64,
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.factors.rows()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn factors(&self) -> &Matrix {
        &self.factors
    }

    pub fn lower(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.factors[(i, j)],
            std::cmp::Ordering::Equal => Complex64::new(1.0, 0.0),
            std::cmp::Ordering::Less => Complex64::new(0.0, 0.0),
        })
    }

    pub fn upper(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| {
            if i <= j {
                self.factors[(i, j)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Applies the row permutation to `b` (row `i` of the result is row `pivots[i]`
    /// of the running permutation, recorded as successive swaps).
    pub fn permute(&self, b: &Matrix) -> Matrix {
        let mut out = b.clone();
        for (k, &p) in self.pivots.iter().enumerate() {
            if p != k {
                for j in 0..out.cols() {
                    let tmp = out[(k, j)];
                    out[(k, j)] = out[(p, j)];
                    out[(p, j)] = tmp;
                }
            }
        }
        out
    }

    pub fn det(&self) -> Complex64 {
        let mut d = Complex64::new(self.sign, 0.0);
        for i in 0..self.dim() {
            d *= self.factors[(i, i)];
        }
        d
    }

    /// First pivot that is numerically zero, if any.
    pub fn singular_pivot(&self) -> Option<usize> {
        let tol = PIVOT_RTOL * self.scale;
        (0..self.dim()).find(|&i| self.factors[(i, i)].norm() <= tol)
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        let n = self.dim();
        if b.rows() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: b.rows(),
            });
        }
        if let Some(index) = self.singular_pivot() {
            return Err(LinalgError::Singular { index });
        }
        let mut x = self.permute(b);
        let m = x.cols();
        for i in 0..n {
            for k in 0..i {
                let l = self.factors[(i, k)];
                if l != Complex64::new(0.0, 0.0) {
                    for j in 0..m {
                        let v = x[(k, j)];
                        x[(i, j)] -= l * v;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.factors[(i, k)];
                for j in 0..m {
                    let v = x[(k, j)];
                    x[(i, j)] -= u * v;
                }
            }
            let d = self.factors[(i, i)];
            for j in 0..m {
                x[(i, j)] /= d;
            }
        }
        Ok(x)
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        let bm = Matrix::from_columns(&[b.to_vec()])?;
        Ok(self.solve(&bm)?.column(0))
    }

    /// Solves `x^T A = b^T`.
    pub fn solve_transpose_vec(&self, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        let n = self.dim();
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        if let Some(index) = self.singular_pivot() {
            return Err(LinalgError::Singular { index });
        }
        // A^T = U^T L^T P, so solve U^T y = b, L^T z = y, x = P^T z.
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let u = self.factors[(k, i)];
                let v = y[k];
                y[i] -= u * v;
            }
            y[i] /= self.factors[(i, i)];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let l = self.factors[(k, i)];
                let v = y[k];
                y[i] -= l * v;
            }
        }
        for (k, &p) in self.pivots.iter().enumerate().rev() {
            y.swap(k, p);
        }
        Ok(y)
    }

    /// One-norm condition number `‖A‖₁‖A⁻¹‖₁`, infinite when singular.
    pub fn condition_estimate(&self, a: &Matrix) -> f64 {
        match self.solve(&Matrix::identity(self.dim())) {
            Ok(inv) => a.norm_one() * inv.norm_one(),
            Err(_) => f64::INFINITY,
        }
    }
}

pub fn lu_factor(a: &Matrix) -> Result<LuFactorization, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut f = a.clone();
    let mut pivots = Vec::with_capacity(n);
    let mut sign = 1.0;
    for k in 0..n {
        let mut p = k;
        let mut best = f[(k, k)].norm();
        for i in k + 1..n {
            let v = f[(i, k)].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        pivots.push(p);
        if p != k {
            sign = -sign;
            for j in 0..n {
                let tmp = f[(k, j)];
                f[(k, j)] = f[(p, j)];
                f[(p, j)] = tmp;
            }
        }
        let d = f[(k, k)];
        if d.norm() == 0.0 {
            continue;
        }
        for i in k + 1..n {
            let l = f[(i, k)] / d;
            f[(i, k)] = l;
            if l != Complex64::new(0.0, 0.0) {
                for j in k + 1..n {
                    let u = f[(k, j)];
                    f[(i, j)] -= l * u;
                }
            }
        }
    }
    Ok(LuFactorization {
        factors: f,
        pivots,
        sign,
        scale: a.max_abs(),
    })
}

pub fn lu_det(a: &Matrix) -> Result<Complex64, LinalgError> {
    Ok(lu_factor(a)?.det())
}

pub fn lu_solve(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    lu_factor(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(n, m, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn identity_and_diagonal() {
        let id = Matrix::identity(4);
        assert_eq!(lu_det(&id).unwrap(), Complex64::new(1.0, 0.0));
        let b = Matrix::from_fn(4, 2, |i, j| Complex64::new(i as f64, j as f64));
        assert_eq!(lu_solve(&id, &b).unwrap(), b);
        let mut d = Matrix::zeros(2, 2);
        d[(0, 0)] = Complex64::new(2.0, 0.0);
        d[(1, 1)] = Complex64::new(0.0, 3.0);
        assert!((lu_det(&d).unwrap() - Complex64::new(0.0, 6.0)).norm() < 1e-15);
    }

    #[test]
    fn random_50_solve_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random(50, 50, &mut rng);
        let b = random(50, 3, &mut rng);
        let x = lu_solve(&a, &b).unwrap();
        let r = (&a.matmul(&x) - &b).norm_fro() / b.norm_fro();
        assert!(r < 1e-11, "residual {r}");
    }

    #[test]
    fn pa_equals_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random(20, 20, &mut rng);
        let f = lu_factor(&a).unwrap();
        let pa = f.permute(&a);
        let lu = f.lower().matmul(&f.upper());
        assert!((&pa - &lu).norm_fro() < 1e-12 * a.norm_fro());
    }

    #[test]
    fn transpose_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random(9, 9, &mut rng);
        let b: Vec<_> = (0..9).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let x = lu_factor(&a).unwrap().solve_transpose_vec(&b).unwrap();
        let back = a.vec_mul(&x);
        assert!(super::super::vec_max_abs_diff(&back, &b) < 1e-12);
    }

    #[test]
    fn singular_reports_index() {
        let a = Matrix::from_fn(3, 3, |i, j| Complex64::new((i + j) as f64, 0.0));
        let f = lu_factor(&a).unwrap();
        assert!(f.det().norm() < 1e-12);
        match f.solve(&Matrix::identity(3)) {
            Err(LinalgError::Singular { index }) => assert_eq!(index, 2),
            other => panic!("expected singular error, got {other:?}"),
        }
    }
}
