use num_complex::Complex64;

use super::{vec_norm, LinalgError, Matrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Eigenvalues and unit-norm right eigenvectors of a dense complex matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<Complex64>,
    /// `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<Complex64>>,
    /// `max_i ‖A v_i − λ_i v_i‖ / ‖A‖_F`.
    pub backward_error: f64,
    /// False when the QR sweep hit its iteration cap; unconverged eigenvalues
    /// are then the remaining diagonal entries.
    pub converged: bool,
}

pub const MAX_DIM: usize = 1024;

pub fn eig(a: &Matrix) -> Result<EigenDecomposition, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n > MAX_DIM {
        return Err(LinalgError::TooLarge { dim: n, max: MAX_DIM });
    }
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![],
            eigenvectors: vec![],
            backward_error: 0.0,
            converged: true,
        });
    }
    let (h, q) = hessenberg(a);
    let (eigenvalues, converged) = hessenberg_qr(&h);
    let norm = h.norm_fro().max(f64::MIN_POSITIVE);

    let mut h_vectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for (i, &lambda) in eigenvalues.iter().enumerate() {
        let cluster: Vec<usize> = (0..i)
            .filter(|&j| (eigenvalues[j] - lambda).norm() <= 1e-8 * norm)
            .collect();
        let x = inverse_iteration(&h, lambda, norm, cluster.len(), |v| {
            for &j in &cluster {
                let u: &Vec<Complex64> = &h_vectors[j];
                let proj: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        });
        h_vectors.push(x);
    }

    let eigenvectors: Vec<Vec<Complex64>> = h_vectors.iter().map(|x| q.mul_vec(x)).collect();
    let a_norm = a.norm_fro().max(f64::MIN_POSITIVE);
    let backward_error = eigenvalues
        .iter()
        .zip(&eigenvectors)
        .map(|(&l, v)| {
            let av = a.mul_vec(v);
            let r: Vec<Complex64> = av.iter().zip(v).map(|(x, y)| x - l * y).collect();
            vec_norm(&r) / a_norm
        })
        .fold(0.0, f64::max);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        backward_error,
        converged,
    })
}

/// Householder reduction `A = Q H Q†` with `H` upper Hessenberg.
pub fn hessenberg(a: &Matrix) -> (Matrix, Matrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = Matrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let alpha = vec_norm(&x);
        if alpha == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { ONE } else { x[0] / x[0].norm() };
        let mut v = x;
        v[0] += phase * alpha;
        let vnorm = vec_norm(&v);
        for vi in v.iter_mut() {
            *vi /= vnorm;
        }
        // H <- (I - 2 v v†) H
        for j in 0..n {
            let s: Complex64 = v.iter().enumerate().map(|(t, vt)| vt.conj() * h[(k + 1 + t, j)]).sum();
            for (t, vt) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= 2.0 * vt * s;
            }
        }
        // H <- H (I - 2 v v†), Q <- Q (I - 2 v v†)
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let s: Complex64 = v.iter().enumerate().map(|(t, vt)| m[(i, k + 1 + t)] * vt).sum();
                for (t, vt) in v.iter().enumerate() {
                    m[(i, k + 1 + t)] -= 2.0 * s * vt.conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if norm == 0.0 {
        (1.0, ZERO)
    } else if a.norm() == 0.0 {
        (0.0, ONE)
    } else {
        let c = a.norm() / norm;
        let s = (a / a.norm()) * b.conj() / norm;
        (c, s)
    }
}

/// Eigenvalue of the 2×2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Shifted QR iteration on an upper Hessenberg matrix; eigenvalues only.
fn hessenberg_qr(h0: &Matrix) -> (Vec<Complex64>, bool) {
    let n = h0.rows();
    let mut h = h0.clone();
    let mut eigenvalues = vec![ZERO; n];
    let norm = h.norm_fro();
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let cap = 60 * n.max(4);
    loop {
        if hi == 0 {
            eigenvalues[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].norm() <= f64::EPSILON * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eigenvalues[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > cap {
            for (i, e) in eigenvalues.iter_mut().enumerate().take(hi + 1) {
                *e = h[(i, i)];
            }
            return (eigenvalues, false);
        }
        let mu = if iter.is_multiple_of(10) {
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.43 * h[(hi, hi - 1)].norm())
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        let mut rotations = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = c * x + s * y;
                h[(k + 1, j)] = -s.conj() * x + c * y;
            }
            h[(k + 1, k)] = ZERO;
            rotations.push((c, s));
        }
        for (idx, &(c, s)) in rotations.iter().enumerate() {
            let k = l + idx;
            for i in l..=(k + 1).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = c * x + s.conj() * y;
                h[(i, k + 1)] = -s * x + c * y;
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    (eigenvalues, true)
}

/// Inverse iteration on the Hessenberg matrix with an O(n²) banded LU.
fn inverse_iteration(
    h: &Matrix,
    lambda: Complex64,
    norm: f64,
    cluster_rank: usize,
    mut deflate: impl FnMut(&mut Vec<Complex64>),
) -> Vec<Complex64> {
    let n = h.rows();
    let tiny = f64::EPSILON * norm;
    let sigma = lambda + Complex64::new(tiny * (1.0 + cluster_rank as f64), 0.0);
    let mut u = h.clone();
    for i in 0..n {
        u[(i, i)] -= sigma;
    }
    let mut swaps = vec![false; n];
    let mut mults = vec![ZERO; n];
    for k in 0..n.saturating_sub(1) {
        if u[(k + 1, k)].norm() > u[(k, k)].norm() {
            swaps[k] = true;
            for j in k..n {
                let t = u[(k, j)];
                u[(k, j)] = u[(k + 1, j)];
                u[(k + 1, j)] = t;
            }
        }
        if u[(k, k)].norm() <= tiny {
            u[(k, k)] = Complex64::new(tiny.max(f64::MIN_POSITIVE), 0.0);
        }
        let m = u[(k + 1, k)] / u[(k, k)];
        mults[k] = m;
        u[(k + 1, k)] = ZERO;
        for j in k + 1..n {
            let t = u[(k, j)];
            u[(k + 1, j)] -= m * t;
        }
    }
    if u[(n - 1, n - 1)].norm() <= tiny {
        u[(n - 1, n - 1)] = Complex64::new(tiny.max(f64::MIN_POSITIVE), 0.0);
    }
    let solve = |b: &mut Vec<Complex64>| {
        for k in 0..n.saturating_sub(1) {
            if swaps[k] {
                b.swap(k, k + 1);
            }
            let t = b[k];
            b[k + 1] -= mults[k] * t;
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..n {
                acc -= u[(i, j)] * b[j];
            }
            b[i] = acc / u[(i, i)];
        }
    };
    // Deterministic, non-degenerate start vector.
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.37 * ((i * 7 + cluster_rank * 3) % 11) as f64, 0.11 * (i % 5) as f64))
        .collect();
    deflate(&mut x);
    for _ in 0..3 {
        solve(&mut x);
        deflate(&mut x);
        let nx = vec_norm(&x);
        if nx == 0.0 || !nx.is_finite() {
            break;
        }
        for xi in x.iter_mut() {
            *xi /= nx;
        }
    }
    x
}
