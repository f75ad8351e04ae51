use num_complex::Complex64;
use xxz_sov::operators::{hamiltonian_direct, hamiltonian_from_transfer};
use xxz_sov::oracle::eig;
use xxz_sov::params::ModelParams;

fn main() {
    let q = Complex64::from_polar(1.0, 0.6);
    let p = ModelParams::homogeneous(4, q).unwrap();
    let from_t = hamiltonian_from_transfer(&p).unwrap();
    let direct = hamiltonian_direct(&p).unwrap();
    println!("relative difference {:.2e}", (&from_t - &direct).norm_fro() / direct.norm_fro());

    let mut e: Vec<f64> = eig(&direct).unwrap().eigenvalues.iter().map(|z| z.re).collect();
    e.sort_by(f64::total_cmp);
    println!("lowest energies: {:.6?}", &e[..4]);
}
