//! Local and global Yang-Baxter residuals at random spectral points.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxz_sov::operators::{global_yang_baxter_residual, local_yang_baxter_residual};
use xxz_sov::params::{ModelParams, Regime};
use xxz_sov::spectrum::random_spectral_point;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=4 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let (l, m) = (random_spectral_point(&p, &mut rng), random_spectral_point(&p, &mut rng));
        let local = local_yang_baxter_residual(p.q(), l, m).unwrap();
        let global = global_yang_baxter_residual(&p, l, m).unwrap();
        println!("N={n}  local {local:.2e}  global {global:.2e}");
    }
}
