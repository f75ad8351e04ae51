use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxz_sov::observables::{compare_form_factors, SpectralData};
use xxz_sov::operators::PauliKind;
use xxz_sov::params::{ModelParams, Regime};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = ModelParams::random(2, Regime::Generic, &mut rng);
    let data = SpectralData::build(&p, 2, &mut rng).unwrap();
    for kind in [PauliKind::Minus, PauliKind::Z] {
        let rows = compare_form_factors(&p, &data.pairs, kind, &[1, 2]).unwrap();
        let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
        println!("{kind:?}: {} elements, worst relative error {worst:.1e}", rows.len());
        for r in rows.iter().take(3) {
            println!("    site {}  {:.6}  dense {:.6}", r.site, r.value, r.dense);
        }
    }
}
