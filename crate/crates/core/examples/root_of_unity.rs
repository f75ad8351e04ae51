//! At q = e^{2πi/3} every eigenvalue makes the cyclic 3×3 determinant vanish.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xxz_sov::observables::SpectralData;
use xxz_sov::params::{ModelParams, Regime};
use xxz_sov::spectrum::{detect_root_of_unity, root_of_unity_check};

fn main() {
    let q = Complex64::from_polar(1.0, TAU / 3.0);
    println!("detected order {:?}", detect_root_of_unity(q));
    let p = ModelParams::new(q, vec![Complex64::new(0.8, 0.0), Complex64::new(1.5, 0.0)], Regime::Massless).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data = SpectralData::build(&p, 2, &mut rng).unwrap();
    let samples: Vec<Complex64> = (0..6).map(|_| Complex64::from_polar(rng.gen_range(0.7..1.4), rng.gen_range(0.0..TAU))).collect();
    for pair in &data.pairs {
        let r = root_of_unity_check(&p, &pair.value, &samples).unwrap();
        let coeffs: Vec<String> = pair.value.coeffs.iter().map(|z| format!("{z:.4}")).collect();
        println!("t = [{}]  relative det {:.1e}", coeffs.join(", "), r.max_relative_det);
    }
}
