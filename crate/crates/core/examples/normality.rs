//! On the self-adjoint loci the antiperiodic transfer matrix is normal and,
//! after a fixed phase, Hermitian.

use xxz_sov::operators::{check_normality, selfadjoint_locus_point};
use xxz_sov::params::{ModelParams, Regime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (regime, t) in [(Regime::Massless, 1.3), (Regime::Massive, 0.9)] {
        let p = ModelParams::random(3, regime, &mut rng);
        let l = selfadjoint_locus_point(&p, t).unwrap();
        let r = check_normality(&p, l).unwrap();
        println!(
            "{regime:?}: normality {:.1e}, self-adjoint {:.1e}, on locus {}",
            r.normality_residual, r.selfadjoint_residual, r.on_locus
        );
    }
}
