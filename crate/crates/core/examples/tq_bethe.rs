use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxz_sov::observables::SpectralData;
use xxz_sov::params::{ModelParams, Regime};
use xxz_sov::spectrum::tq_polynomial_check;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let p = ModelParams::random(2, Regime::Massless, &mut rng);
    let data = SpectralData::build(&p, 2, &mut rng).unwrap();
    for pair in &data.pairs {
        let r = tq_polynomial_check(&p, &pair.value, &mut rng).unwrap();
        println!("nullity {}  TQ residual {:.1e}", r.nullspace_dim, r.tq_residual);
        for (root, bethe) in r.roots.iter().zip(&r.bethe_residuals) {
            match bethe {
                Some(b) => println!("    root {root:.5}  Bethe {b:.1e}"),
                None => println!("    root {root:.5}  (colliding, skipped)"),
            }
        }
    }
}
