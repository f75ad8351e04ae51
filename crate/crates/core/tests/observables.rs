use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xxz_sov::observables::{
    conjugation_residual, dense_m_point, eigenstate_norm_and_alpha, form_factor, form_factor_sigma_minus_with,
    form_factor_sigma_z_with, m_point_function, relative_error, scalar_product, ObservablesError, SeparateState,
    SpectralData,
};
use xxz_sov::operators::PauliKind;
use xxz_sov::oracle::{inner, pairing, vec_norm};
use xxz_sov::params::{ModelParams, Regime};
use xxz_sov::sov::{Side, SovBases};

fn random_rho(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::from_polar(rng.gen_range(0.3..3.0), rng.gen_range(0.0..TAU))).collect()
}

#[test]
fn two_point_zz_from_four_intermediate_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let p = ModelParams::random(2, Regime::Generic, &mut rng);
    let data = SpectralData::build(&p, 3, &mut rng).unwrap();
    assert_eq!(data.len(), 4);
    let ops = [(PauliKind::Z, 1), (PauliKind::Z, 2)];
    for (i, pair) in data.pairs.iter().enumerate() {
        let s = m_point_function(&p, &data, i, &ops).unwrap();
        let d = dense_m_point(&p, pair, &ops).unwrap();
        assert!((s - d).norm() < 1e-7 * d.norm().max(1.0));
    }
}

#[test]
fn identity_insertion_reproduces_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for n in 1..=4 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let data = SpectralData::build(&p, 2, &mut rng).unwrap();
        let v: Vec<Complex64> = (0..p.dim()).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        assert!(data.identity_insertion_residual(&v).unwrap() < 1e-9);
    }
}

/// Per-node rescalings of the Q tables change every matrix element by the
/// product of the node factors; the normalized ratio stays put.
#[test]
fn form_factors_are_covariant_under_node_rescaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for n in 1..=4 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let data = SpectralData::build(&p, 2, &mut rng).unwrap();
        let (i, j) = (0, data.len() - 1);
        let (t, tp) = (&data.pairs[i].value, &data.pairs[j].value);
        let tables = |x| {
            (
                SeparateState::eigenstate(&p, x, Side::Left).unwrap(),
                SeparateState::eigenstate(&p, x, Side::Right).unwrap(),
            )
        };
        let ((lt, rt), (ltp, rtp)) = (tables(t), tables(tp));
        let (a, b, cc, d) = (random_rho(n, &mut rng), random_rho(n, &mut rng), random_rho(n, &mut rng), random_rho(n, &mut rng));
        let (lt2, rt2, ltp2, rtp2) = (lt.rescaled(&a), rt.rescaled(&b), ltp.rescaled(&cc), rtp.rescaled(&d));
        let factor: Complex64 = a.iter().zip(&d).map(|(x, y)| x * y).product();
        let ff = |kind, l: &SeparateState, r: &SeparateState, x, y, site| match kind {
            PauliKind::Minus => form_factor_sigma_minus_with(&p, x, y, l, r, site).unwrap(),
            _ => form_factor_sigma_z_with(&p, x, y, l, r, site).unwrap(),
        };
        let cases: Vec<(PauliKind, usize)> = [PauliKind::Minus, PauliKind::Z]
            .into_iter()
            .flat_map(|k| (1..=n).map(move |s| (k, s)))
            .collect();
        // Some elements vanish identically; errors are measured against the
        // largest element of the pair.
        let scale = cases.iter().map(|&(k, s)| ff(k, &lt, &rtp, t, tp, s).norm()).fold(0.0, f64::max);
        let back = cases.iter().map(|&(k, s)| ff(k, &ltp, &rt, tp, t, s).norm()).fold(0.0, f64::max);
        let brackets = scalar_product(&p, &lt, &rt).unwrap() * scalar_product(&p, &ltp, &rtp).unwrap();
        let brackets2 = scalar_product(&p, &lt2, &rt2).unwrap() * scalar_product(&p, &ltp2, &rtp2).unwrap();
        let ratio_scale = scale * back / brackets.norm();
        for &(kind, site) in &cases {
            let f0 = ff(kind, &lt, &rtp, t, tp, site);
            let f1 = ff(kind, &lt2, &rtp2, t, tp, site);
            assert!((f1 - factor * f0).norm() < 1e-10 * factor.norm() * scale, "N={n} site={site} {kind:?}");
            let r0 = f0 * ff(kind, &ltp, &rt, tp, t, site) / brackets;
            let r1 = f1 * ff(kind, &ltp2, &rt2, tp, t, site) / brackets2;
            assert!((r0 - r1).norm() < 1e-9 * ratio_scale, "N={n} site={site} {kind:?}");
        }
    }
}

/// On the normal loci the left eigencovector is the conjugate of the right
/// eigenvector, and `⟨t|t⟩` fixes the Hilbert norm up to `α`.
#[test]
fn left_states_are_conjugate_in_normal_regimes() {
    let mut rng = ChaCha8Rng::seed_from_u64(54);
    for regime in [Regime::Massless, Regime::Massive] {
        for n in 1..=4 {
            let p = ModelParams::random(n, regime, &mut rng);
            let data = SpectralData::build(&p, 2, &mut rng).unwrap();
            for pair in &data.pairs {
                let r = conjugation_residual(&pair.left_state, &pair.right_state);
                assert!(r < 1e-9, "{regime:?} N={n}: {r:e}");
                let norm = eigenstate_norm_and_alpha(&p, pair).unwrap();
                let h = inner(&pair.right_state, &pair.right_state).unwrap().re;
                assert!((norm.alpha * norm.bracket - h).norm() < 1e-12 * h);
            }
        }
    }
    let p = ModelParams::random(3, Regime::Generic, &mut rng);
    let data = SpectralData::build(&p, 2, &mut rng).unwrap();
    let worst = data
        .pairs
        .iter()
        .map(|x| conjugation_residual(&x.left_state, &x.right_state))
        .fold(0.0, f64::max);
    assert!(worst > 1e-3, "generic control {worst:e}");
}

#[test]
fn operators_without_a_formula_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let p = ModelParams::random(2, Regime::Generic, &mut rng);
    let data = SpectralData::build(&p, 2, &mut rng).unwrap();
    let (t, tp) = (&data.pairs[0].value, &data.pairs[1].value);
    for kind in [PauliKind::X, PauliKind::Y, PauliKind::Plus] {
        assert!(matches!(form_factor(&p, kind, t, tp, 1), Err(ObservablesError::Unsupported(_))));
    }
    assert!(matches!(form_factor(&p, PauliKind::Z, t, tp, 3), Err(ObservablesError::SiteOutOfRange { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn determinant_pairing_matches_dense(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let bases = SovBases::build(&p).unwrap();
        for _ in 0..10 {
            let a = SeparateState::random(&p, Side::Left, &mut rng);
            let b = SeparateState::random(&p, Side::Right, &mut rng);
            let (va, vb) = (a.assemble(&p, &bases), b.assemble(&p, &bases));
            let dense = pairing(&va, &vb).unwrap();
            let det = scalar_product(&p, &a, &b).unwrap();
            prop_assert!(relative_error(det, dense, vec_norm(&va) * vec_norm(&vb)) < 1e-8);
        }
    }
}
