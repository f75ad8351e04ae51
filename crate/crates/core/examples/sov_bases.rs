//! Build the left and right SOV bases, then check that they diagonalize the
//! D and A families and resolve the identity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxz_sov::params::{ModelParams, Regime};
use xxz_sov::sov::{coupling_residual, diagonalization_residual, identity_residual, SovBases, Variable};
use xxz_sov::spectrum::random_spectral_point;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = ModelParams::random(3, Regime::Massless, &mut rng);
    let bases = SovBases::build(&p).unwrap();
    println!("dimension {}, N = {}", bases.left.states.len(), p.n_sites());

    let l = random_spectral_point(&p, &mut rng);
    for v in [Variable::D, Variable::A] {
        println!("{v:?} eigen-residual  {:.2e}", diagonalization_residual(&p, v, l).unwrap());
    }
    println!("coupling residual  {:.2e}", coupling_residual(&p, &bases));
    println!("identity residual  {:.2e}", identity_residual(&p, &bases));
}
