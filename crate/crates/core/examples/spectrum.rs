//! Full transfer-matrix spectrum from the discrete quadratic system.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxz_sov::params::{ModelParams, Regime};
use xxz_sov::spectrum::solve_spectrum;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = ModelParams::random(3, Regime::Generic, &mut rng);
    let spectrum = solve_spectrum(&p, &mut rng).unwrap();
    println!("{} eigenvalues (expected {})", spectrum.len(), p.dim());
    for (k, t) in spectrum.iter().enumerate() {
        let coeffs: Vec<String> = t.coeffs.iter().map(|z| format!("{z:.4}")).collect();
        println!("{k:2}  [{}]  residual {:.1e}", coeffs.join(", "), t.residual);
    }
}
