//! Scalar products of separate states: N×N determinant vs dense pairing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxz_sov::observables::{relative_error, scalar_product, SeparateState};
use xxz_sov::oracle::{pairing, vec_norm};
use xxz_sov::params::{ModelParams, Regime};
use xxz_sov::sov::{Side, SovBases};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = ModelParams::random(4, Regime::Generic, &mut rng);
    let bases = SovBases::build(&p).unwrap();
    for _ in 0..5 {
        let a = SeparateState::random(&p, Side::Left, &mut rng);
        let b = SeparateState::random(&p, Side::Right, &mut rng);
        let (va, vb) = (a.assemble(&p, &bases), b.assemble(&p, &bases));
        let det = scalar_product(&p, &a, &b).unwrap();
        let dense = pairing(&va, &vb).unwrap();
        let err = relative_error(det, dense, vec_norm(&va) * vec_norm(&vb));
        println!("det {det:.6e}  dense {dense:.6e}  rel {err:.1e}");
    }
}
