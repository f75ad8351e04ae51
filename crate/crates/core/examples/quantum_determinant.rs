use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxz_sov::operators::quantum_determinant;
use xxz_sov::params::{eval_a, eval_d, ModelParams, Regime};
use xxz_sov::spectrum::random_spectral_point;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = ModelParams::random(3, Regime::Generic, &mut rng);
    for _ in 0..4 {
        let l = random_spectral_point(&p, &mut rng);
        let qd = quantum_determinant(&p, l).unwrap();
        // The determinant is a multiple of the identity; compare its value.
        let expected = -eval_a(&p, l).unwrap() * eval_d(&p, l / p.q()).unwrap();
        let (off, _) = qd.operator.off_scalar_residual();
        println!(
            "λ = {l:.3}  det = {:.6}  -a(λ)d(λ/q) = {expected:.6}  off-scalar {off:.1e}",
            qd.scalar
        );
    }
}
