//! ⟨t| σᶻ_1 σ⁻_2 |t⟩ / ⟨t|t⟩ as a sum over intermediate eigenstates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxz_sov::observables::{dense_m_point, m_point_function, SpectralData};
use xxz_sov::operators::PauliKind;
use xxz_sov::params::{ModelParams, Regime};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let p = ModelParams::random(2, Regime::Generic, &mut rng);
    let data = SpectralData::build(&p, 2, &mut rng).unwrap();
    let ops = [(PauliKind::Z, 1), (PauliKind::Minus, 2)];
    for (i, pair) in data.pairs.iter().enumerate() {
        let sum = m_point_function(&p, &data, i, &ops).unwrap();
        let dense = dense_m_point(&p, pair, &ops).unwrap();
        println!("state {i}: spectral {sum:.6}  dense {dense:.6}");
    }
}
