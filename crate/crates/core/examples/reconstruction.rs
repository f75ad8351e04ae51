//! Local operators rebuilt from transfer matrices at the inhomogeneities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxz_sov::observables::{sigma_x_strings, ReconstructionFlavor, Reconstructor};
use xxz_sov::operators::{PauliKind, SiteOperator};
use xxz_sov::params::{ModelParams, Regime};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = ModelParams::random(3, Regime::Generic, &mut rng);
    let rec = Reconstructor::new(&p).unwrap();
    let ops = [PauliKind::Plus, PauliKind::Minus, PauliKind::Z].map(SiteOperator::pauli);
    for flavor in ReconstructionFlavor::ALL {
        let worst = ops
            .iter()
            .flat_map(|x| (1..=p.n_sites()).map(move |s| (x, s)))
            .map(|(x, s)| rec.residual(x, s, flavor).unwrap())
            .fold(0.0, f64::max);
        println!("{flavor:?}: {worst:.2e}");
    }
    for (c, s) in sigma_x_strings(&p).unwrap().iter().enumerate() {
        println!("σˣ string up to site {}: {:.2e}", c + 1, s.residual());
    }
}
