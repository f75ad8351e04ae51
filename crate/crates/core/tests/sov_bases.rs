use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxz_sov::observables::form_factor_sigma_minus;
use xxz_sov::operators::{pauli, PauliKind};
use xxz_sov::oracle::{matrix_element, pairing, vec_norm};
use xxz_sov::params::{ModelParams, Regime};
use xxz_sov::sov::{
    bits, build_sov_basis, build_sov_basis_with_norm, dense_coupling, diagonalization_residual, identity_residual,
    norm_constant, Side, SovBases, Variable,
};
use xxz_sov::spectrum::{q_ratios, random_spectral_point, separate_state_coordinates, solve_spectrum};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn f(x: Complex64) -> Complex64 {
    x - 1.0 / x
}

#[test]
fn identity_decomposition_examples() {
    let p = ModelParams::new(c(1.3, 0.4), vec![c(1.0, 0.0)], Regime::Generic).unwrap();
    assert!(identity_residual(&p, &SovBases::build(&p).unwrap()) < 1e-13);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let p = ModelParams::random(2, Regime::Generic, &mut rng);
    assert!(identity_residual(&p, &SovBases::build(&p).unwrap()) < 1e-11);
    let p = ModelParams::random(4, Regime::Massless, &mut rng);
    assert!(identity_residual(&p, &SovBases::build(&p).unwrap()) < 1e-10);
}

#[test]
fn distinct_basis_states_pair_to_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for n in 1..=4 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let b = SovBases::build(&p).unwrap();
        for i in 0..p.dim() {
            for j in 0..p.dim() {
                if i != j {
                    let s = pairing(&b.left.states[i], &b.right.states[j]).unwrap();
                    let scale = vec_norm(&b.left.states[i]) * vec_norm(&b.right.states[j]);
                    assert!(s.norm() < 1e-11 * scale);
                }
            }
        }
    }
}

/// Flipping `h_a` from 0 to 1 multiplies `⟨h|h⟩` by
/// `∏_{b≠a} f(η_a q^{h_b}/η_b) / f(η_a q^{h_b−1}/η_b)`, `f(x) = x − 1/x`.
#[test]
fn coupling_ratio_recursion_is_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for n in 2..=4 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let b = SovBases::build(&p).unwrap();
        let g = dense_coupling(&b.left, &b.right);
        let (q, e) = (p.q(), p.inhomogeneities());
        for j in 0..p.dim() {
            let h = bits(j, n);
            for a in 0..n {
                if h[a] == 1 {
                    continue;
                }
                let k = j | (1 << a);
                let mut ratio = c(1.0, 0.0);
                for bb in (0..n).filter(|&bb| bb != a) {
                    let hb = i32::from(h[bb]);
                    ratio *= f(e[a] * q.powi(hb) / e[bb]) / f(e[a] * q.powi(hb - 1) / e[bb]);
                }
                let dense = g[(k, k)] / g[(j, j)];
                assert!((dense - ratio).norm() < 1e-10 * ratio.norm(), "N={n} h={h:?} a={a}");
            }
        }
    }
}

#[test]
fn both_families_diagonal_at_five_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for n in 1..=4 {
        let p = ModelParams::random(n, Regime::Massive, &mut rng);
        for _ in 0..5 {
            let l = random_spectral_point(&p, &mut rng);
            for v in [Variable::D, Variable::A] {
                assert!(diagonalization_residual(&p, v, l).unwrap() < 1e-10);
            }
        }
    }
}

/// The normalization `n` is fixed only up to the square-root branches; the
/// determinant form factors cannot see it and neither can ratios that pair
/// every left state with a right state.
#[test]
fn form_factor_ratios_ignore_the_square_root_branches() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let p = ModelParams::random(3, Regime::Generic, &mut rng);
    let spectrum = solve_spectrum(&p, &mut rng).unwrap();
    let (t, tp) = (&spectrum[1], &spectrum[5]);
    let op = pauli(PauliKind::Minus, 2, &p).unwrap();
    let opd = pauli(PauliKind::Plus, 2, &p).unwrap();
    let n0 = norm_constant(&p);
    let ratio = |left_norm: Complex64, right_norm: Complex64| -> (Complex64, Complex64) {
        let l = build_sov_basis_with_norm(&p, Side::Left, Variable::D, left_norm).unwrap();
        let r = build_sov_basis_with_norm(&p, Side::Right, Variable::D, right_norm).unwrap();
        let state = |x: &_, side| {
            let rq = q_ratios(&p, x).unwrap();
            let table = if side == Side::Left { rq.qbar_table } else { rq.q_table };
            let coords = separate_state_coordinates(&p, &table);
            if side == Side::Left {
                l.assemble(&coords)
            } else {
                r.assemble(&coords)
            }
        };
        let (lt, rt, ltp, rtp) = (state(t, Side::Left), state(t, Side::Right), state(tp, Side::Left), state(tp, Side::Right));
        let num = matrix_element(&lt, &op, &rtp).unwrap() * matrix_element(&ltp, &opd, &rt).unwrap();
        let den = pairing(&lt, &rt).unwrap() * pairing(&ltp, &rtp).unwrap();
        (num / den, matrix_element(&lt, &op, &rtp).unwrap())
    };
    let (base, direct) = ratio(n0, n0);
    let formula = form_factor_sigma_minus(&p, t, tp, 2).unwrap();
    assert!((formula - direct).norm() < 1e-9 * direct.norm().max(1e-3));
    for (sl, sr) in [(-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
        let (r, _) = ratio(n0 * sl, n0 * sr);
        assert!((r - base).norm() < 1e-10 * base.norm().max(1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn closed_coupling_matches_dense_pairing(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let b = SovBases::build(&p).unwrap();
        let g = dense_coupling(&b.left, &b.right);
        for j in 0..p.dim() {
            let m = xxz_sov::sov::coupling_closed_form(&p, &bits(j, n));
            prop_assert!((g[(j, j)] - m).norm() < 1e-10 * m.norm());
        }
    }

    #[test]
    fn basis_coordinates_round_trip(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        for side in [Side::Left, Side::Right] {
            let basis = build_sov_basis(&p, side, Variable::A).unwrap();
            let x: Vec<Complex64> = (0..p.dim()).map(|k| c(k as f64 + 1.0, -(k as f64))).collect();
            let back = basis.coordinates(&basis.assemble(&x)).unwrap();
            let err: f64 = back.iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-9 * p.dim() as f64, "{err:e}");
        }
    }
}
