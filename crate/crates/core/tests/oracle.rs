use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xxz_sov::oracle::{eig, inner, lu_det, lu_factor, matrix_element, pairing, Matrix};

fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// `U diag(d) U†` with `U` from Gram-Schmidt on a random matrix.
fn random_normal(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let a = random_matrix(n, rng);
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    for j in 0..n {
        let mut v = a.column(j);
        for u in &cols {
            let p = inner(u, &v).unwrap();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
        let norm = inner(&v, &v).unwrap().re.sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    let u = Matrix::from_columns(&cols).unwrap();
    let d = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    u.matmul(&d).matmul(&u.adjoint())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lu_reproduces_permuted_matrix(seed in any::<u64>(), n in 1usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(n, &mut rng);
        let lu = lu_factor(&a).unwrap();
        let pa = lu.permute(&a);
        let err = pa.max_abs_diff(&lu.lower().matmul(&lu.upper()));
        prop_assert!(err <= 1e-12 * a.norm_fro(), "err {err}");
    }

    #[test]
    fn determinant_is_multiplicative(seed in any::<u64>(), n in 1usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(n, &mut rng);
        let b = random_matrix(n, &mut rng);
        let dab = lu_det(&a.matmul(&b)).unwrap();
        let prod = lu_det(&a).unwrap() * lu_det(&b).unwrap();
        prop_assert!((dab - prod).norm() <= 1e-9 * prod.norm());
    }

    #[test]
    fn eigenvalues_sum_to_trace_and_multiply_to_det(seed in any::<u64>(), n in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(n, &mut rng);
        let e = eig(&a).unwrap();
        prop_assert!(e.converged);
        prop_assert!(e.backward_error < 1e-9);
        let sum: Complex64 = e.eigenvalues.iter().sum();
        let prod: Complex64 = e.eigenvalues.iter().product();
        let tr = a.trace();
        let det = lu_det(&a).unwrap();
        prop_assert!((sum - tr).norm() <= 1e-9 * a.norm_fro().max(tr.norm()));
        prop_assert!((prod - det).norm() <= 1e-8 * det.norm().max(1e-300));
    }

    #[test]
    fn normal_matrices_have_orthogonal_eigenvectors(seed in any::<u64>(), n in 2usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_normal(n, &mut rng);
        let e = eig(&a).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let g = inner(&e.eigenvectors[i], &e.eigenvectors[j]).unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - expected).norm());
            }
        }
        prop_assert!(worst < 1e-8, "gram residual {worst}");
    }
}

#[test]
fn backward_error_at_dimension_256() {
    let mut rng = ChaCha8Rng::seed_from_u64(256);
    let a = random_matrix(256, &mut rng);
    let e = eig(&a).unwrap();
    assert!(e.converged);
    assert!(e.backward_error < 1e-9, "{}", e.backward_error);
}

#[test]
fn identity_matrix_element_equals_pairing() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1, 4, 9] {
        let bra: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let ket: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let m = matrix_element(&bra, &Matrix::identity(n), &ket).unwrap();
        assert!((m - pairing(&bra, &ket).unwrap()).norm() < 1e-14);
    }
}
