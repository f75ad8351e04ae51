//! Acceptance suite: one line per criterion, `PASS` or `FAIL` with the worst
//! residual seen and the pinned tolerance.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the report.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xxz_sov::observables::{
    compare_form_factors, dense_m_point, m_point_function, orthogonality_kernel_residual, relative_error, scalar_product,
    sigma_x_strings, Reconstructor, ReconstructionFlavor, SeparateState, SpectralData,
};
use xxz_sov::operators::{
    check_normality, global_yang_baxter_residual, hamiltonian_direct, hamiltonian_from_transfer, local_yang_baxter_residual,
    quantum_determinant, selfadjoint_locus_point, selfadjoint_phase, transfer_antiperiodic, PauliKind, SiteOperator,
};
use xxz_sov::oracle::{eig, pairing, vec_norm, Matrix};
use xxz_sov::params::{eval_a, eval_d, ModelParams, Regime};
use xxz_sov::sov::{
    action_residual, coupling_residual, diagonalization_residual, identity_residual, Side, SovBases, Variable,
};
use xxz_sov::spectrum::{random_spectral_point, root_of_unity_check, tq_polynomial_check, TransferEigenvalue};

const SEED: u64 = 0x5eed_2024;

const TOL_YBE: f64 = 1e-12;
const TOL_QDET: f64 = 1e-10;
const TOL_SOV_DIAG: f64 = 1e-10;
const TOL_SOV_ACTION: f64 = 1e-9;
const TOL_COUPLING: f64 = 1e-10;
const TOL_IDENTITY: f64 = 1e-10;
const TOL_DISCRETE: f64 = 1e-12;
const TOL_EIGENSTATE: f64 = 1e-9;
const TOL_ORTHOGONALITY: f64 = 1e-10;
const TOL_NORMALITY: f64 = 1e-12;
const TOL_REAL_SPECTRUM: f64 = 1e-9;
const TOL_SCALAR_PRODUCT: f64 = 1e-8;
const TOL_KERNEL: f64 = 1e-10;
const TOL_FORM_FACTOR: f64 = 1e-8;
const TOL_RECONSTRUCTION: f64 = 1e-9;
const TOL_SIGMA_X_STRING: f64 = 1e-9;
const TOL_HAMILTONIAN: f64 = 1e-9;
const TOL_ROOT_OF_UNITY: f64 = 1e-8;
const ROOT_OF_UNITY_CONTROL_ORDERS: f64 = 4.0;
const TOL_TQ: f64 = 1e-8;
const TOL_BETHE: f64 = 1e-6;
const TOL_M_POINT: f64 = 1e-7;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// One measured quantity against its bound.
struct Measure {
    label: String,
    value: f64,
    bound: f64,
    /// `true` when `value` must exceed `bound` (negative controls, counts).
    at_least: bool,
}

impl Measure {
    fn below(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            value,
            bound,
            at_least: false,
        }
    }

    fn above(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            value,
            bound,
            at_least: true,
        }
    }

    fn ok(&self) -> bool {
        if self.at_least {
            self.value >= self.bound
        } else {
            self.value < self.bound
        }
    }
}

struct Criterion {
    id: usize,
    title: &'static str,
    measures: Vec<Measure>,
}

impl Criterion {
    fn new(id: usize, title: &'static str) -> Self {
        Self {
            id,
            title,
            measures: Vec::new(),
        }
    }

    fn below(&mut self, label: impl Into<String>, value: f64, bound: f64) {
        self.measures.push(Measure::below(label, value, bound));
    }

    fn above(&mut self, label: impl Into<String>, value: f64, bound: f64) {
        self.measures.push(Measure::above(label, value, bound));
    }

    fn pass(&self) -> bool {
        !self.measures.is_empty() && self.measures.iter().all(Measure::ok)
    }

    fn line(&self) -> String {
        let status = if self.pass() { "PASS" } else { "FAIL" };
        let detail: Vec<String> = self
            .measures
            .iter()
            .map(|m| {
                let op = if m.at_least { ">=" } else { "<" };
                let flag = if m.ok() { "" } else { " !" };
                format!("{} {:.2e} {op} {:.0e}{flag}", m.label, m.value, m.bound)
            })
            .collect();
        format!("{status} criterion {}: {} [{}]", self.id, self.title, detail.join("; "))
    }
}

fn rng_for(criterion: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ (criterion << 32))
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn random_coords(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..dim).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn yang_baxter() -> Criterion {
    let mut out = Criterion::new(1, "Yang-Baxter relation, local and global");
    let mut rng = rng_for(1);
    for n in 1..=4 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let mut local: f64 = 0.0;
        let mut global: f64 = 0.0;
        for _ in 0..10 {
            let (l, m) = (random_spectral_point(&p, &mut rng), random_spectral_point(&p, &mut rng));
            local = local.max(local_yang_baxter_residual(p.q(), l, m).unwrap());
            global = global.max(global_yang_baxter_residual(&p, l, m).unwrap());
        }
        out.below(format!("N={n} local"), local, TOL_YBE);
        out.below(format!("N={n} global"), global, TOL_YBE);
    }
    out
}

fn quantum_det() -> Criterion {
    let mut out = Criterion::new(2, "quantum determinant is the scalar -a(λ)d(λ/q)");
    let mut rng = rng_for(2);
    for n in 1..=5 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let mut scalar: f64 = 0.0;
        let mut value: f64 = 0.0;
        for _ in 0..20 {
            let l = random_spectral_point(&p, &mut rng);
            let d = quantum_determinant(&p, l).unwrap();
            let expected = -eval_a(&p, l).unwrap() * eval_d(&p, l / p.q()).unwrap();
            scalar = scalar.max(d.operator.max_abs_diff(&Matrix::scalar(p.dim(), d.scalar)) / d.scalar.norm());
            value = value.max((d.scalar - expected).norm() / expected.norm());
        }
        out.below(format!("N={n} off-scalar"), scalar, TOL_QDET);
        out.below(format!("N={n} value"), value, TOL_QDET);
    }
    out
}

fn sov_bases() -> Criterion {
    let mut out = Criterion::new(3, "SOV bases diagonalize D and A; closed B/C actions");
    let mut rng = rng_for(3);
    let mut diag: f64 = 0.0;
    let mut action: f64 = 0.0;
    for n in 1..=4 {
        for regime in [Regime::Generic, Regime::Massless, Regime::Massive] {
            let p = ModelParams::random(n, regime, &mut rng);
            for variable in [Variable::D, Variable::A] {
                for _ in 0..2 {
                    let l = random_spectral_point(&p, &mut rng);
                    diag = diag.max(diagonalization_residual(&p, variable, l).unwrap());
                    let x = random_coords(p.dim(), &mut rng);
                    action = action.max(action_residual(&p, variable, l, &x).unwrap());
                }
            }
        }
    }
    out.below("eigenvalue residual", diag, TOL_SOV_DIAG);
    out.below("action residual", action, TOL_SOV_ACTION);
    out
}

fn coupling_and_measure() -> Criterion {
    let mut out = Criterion::new(4, "closed-form coupling and SOV resolution of the identity");
    let mut rng = rng_for(4);
    for n in 1..=5 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let bases = SovBases::build(&p).unwrap();
        out.below(format!("N={n} coupling"), coupling_residual(&p, &bases), TOL_COUPLING);
        if n <= 4 {
            out.below(format!("N={n} identity"), identity_residual(&p, &bases), TOL_IDENTITY);
        }
    }
    out
}

fn spectrum() -> Criterion {
    let mut out = Criterion::new(5, "complete simple spectrum and verified eigenstates");
    let mut rng = rng_for(5);
    for n in 1..=5 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let data = SpectralData::build(&p, 5, &mut rng).unwrap();
        let count = data.len();
        out.below(format!("N={n} |count-2^N|"), (count as f64 - p.dim() as f64).abs(), 0.5);
        let mut gap = f64::INFINITY;
        let mut orth: f64 = 0.0;
        for i in 0..count {
            for j in 0..count {
                if i == j {
                    continue;
                }
                let (a, b) = (&data.pairs[i], &data.pairs[j]);
                gap = gap.min(a.value.distance(&b.value));
                let s = pairing(&a.left_state, &b.right_state).unwrap();
                orth = orth.max(s.norm() / (vec_norm(&a.left_state) * vec_norm(&b.right_state)));
            }
        }
        if count > 1 {
            out.above(format!("N={n} min gap"), gap, 1e-6);
        }
        out.below(format!("N={n} discrete"), max_of(data.pairs.iter().map(|x| x.value.residual)), TOL_DISCRETE);
        out.below(format!("N={n} eigenstates"), max_of(data.pairs.iter().map(|x| x.verify_residual)), TOL_EIGENSTATE);
        out.below(format!("N={n} orthogonality"), orth, TOL_ORTHOGONALITY);
    }
    out
}

fn normality() -> Criterion {
    let mut out = Criterion::new(6, "normality and self-adjointness on the loci");
    let mut rng = rng_for(6);
    for regime in [Regime::Massless, Regime::Massive] {
        let tag = match regime {
            Regime::Massless => "massless",
            _ => "massive",
        };
        let mut normal: f64 = 0.0;
        let mut selfadj: f64 = 0.0;
        let mut imag: f64 = 0.0;
        for n in 1..=4 {
            let p = ModelParams::random(n, regime, &mut rng);
            let phase = selfadjoint_phase(&p).unwrap();
            for _ in 0..3 {
                let t = match regime {
                    Regime::Massless => rng.gen_range(0.5..2.0),
                    _ => rng.gen_range(0.0..TAU),
                };
                let l = selfadjoint_locus_point(&p, t).unwrap();
                let r = check_normality(&p, l).unwrap();
                assert!(r.on_locus);
                normal = normal.max(r.normality_residual);
                selfadj = selfadj.max(r.selfadjoint_residual);
                let x = transfer_antiperiodic(&p, l).unwrap().scale(phase);
                let e = eig(&x).unwrap();
                imag = imag.max(max_of(e.eigenvalues.iter().map(|z| z.im.abs())) / x.norm_fro());
            }
        }
        out.below(format!("{tag} normality"), normal, TOL_NORMALITY);
        out.below(format!("{tag} self-adjoint"), selfadj, TOL_NORMALITY);
        out.below(format!("{tag} imaginary spectrum"), imag, TOL_REAL_SPECTRUM);
    }
    out
}

fn scalar_products() -> Criterion {
    let mut out = Criterion::new(7, "determinant scalar products and orthogonality kernel");
    let mut rng = rng_for(7);
    for n in 1..=5 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let bases = SovBases::build(&p).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let a = SeparateState::random(&p, Side::Left, &mut rng);
            let b = SeparateState::random(&p, Side::Right, &mut rng);
            let (va, vb) = (a.assemble(&p, &bases), b.assemble(&p, &bases));
            let dense = pairing(&va, &vb).unwrap();
            let det = scalar_product(&p, &a, &b).unwrap();
            worst = worst.max(relative_error(det, dense, vec_norm(&va) * vec_norm(&vb)));
        }
        out.below(format!("N={n} pairing"), worst, TOL_SCALAR_PRODUCT);
        let data = SpectralData::build(&p, 2, &mut rng).unwrap();
        let mut kernel: f64 = 0.0;
        for a in &data.pairs {
            for b in &data.pairs {
                if a.value != b.value {
                    kernel = kernel.max(orthogonality_kernel_residual(&p, &a.value, &b.value).unwrap());
                }
            }
        }
        out.below(format!("N={n} kernel"), kernel, TOL_KERNEL);
    }
    out
}

fn form_factors() -> Criterion {
    let mut out = Criterion::new(8, "σ⁻ and σᶻ form factors from determinants");
    let mut rng = rng_for(8);
    for n in 1..=4 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let data = SpectralData::build(&p, 2, &mut rng).unwrap();
        let sites: Vec<usize> = (1..=n).collect();
        for (kind, tag) in [(PauliKind::Minus, "σ⁻"), (PauliKind::Z, "σᶻ")] {
            let rows = compare_form_factors(&p, &data.pairs, kind, &sites).unwrap();
            assert_eq!(rows.len(), p.dim() * p.dim() * n);
            out.below(format!("N={n} {tag}"), max_of(rows.iter().map(|r| r.rel_err)), TOL_FORM_FACTOR);
        }
    }
    out
}

fn reconstruction() -> Criterion {
    let mut out = Criterion::new(9, "local operator reconstruction and σˣ strings");
    let mut rng = rng_for(9);
    let ops = [PauliKind::Plus, PauliKind::Minus, PauliKind::Z, PauliKind::X].map(SiteOperator::pauli);
    for n in 1..=3 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let rec = Reconstructor::new(&p).unwrap();
        let mut worst: f64 = 0.0;
        for flavor in ReconstructionFlavor::ALL {
            for x in ops.iter().chain([&SiteOperator::IDENTITY]) {
                for site in 1..=n {
                    worst = worst.max(rec.residual(x, site, flavor).unwrap());
                }
            }
        }
        out.below(format!("N={n} flavors"), worst, TOL_RECONSTRUCTION);
        let strings = max_of(sigma_x_strings(&p).unwrap().iter().map(|s| s.residual()));
        out.below(format!("N={n} σˣ string"), strings, TOL_SIGMA_X_STRING);
    }
    out
}

fn hamiltonian() -> Criterion {
    let mut out = Criterion::new(10, "log-derivative Hamiltonian equals the Pauli Hamiltonian");
    for n in 2..=4 {
        for q in [Complex64::from_polar(1.0, 0.6), c(1.4, 0.0)] {
            let p = ModelParams::homogeneous(n, q).unwrap();
            let a = hamiltonian_from_transfer(&p).unwrap();
            let b = hamiltonian_direct(&p).unwrap();
            let diff = &a - &b;
            out.below(format!("N={n} q={:.2}{:+.2}i", q.re, q.im), diff.norm_fro() / b.norm_fro(), TOL_HAMILTONIAN);
        }
    }
    out
}

fn root_of_unity() -> Criterion {
    let mut out = Criterion::new(11, "root-of-unity functional equation");
    let mut rng = rng_for(11);
    let cases = [
        (Complex64::from_polar(1.0, TAU / 3.0), vec![0.8, 1.5]),
        (Complex64::from_polar(1.0, PI / 2.0), vec![0.7, 1.1, 1.6]),
    ];
    for (q, etas) in cases {
        let n = etas.len();
        let p = ModelParams::new(q, etas.into_iter().map(|x| c(x, 0.0)).collect(), Regime::Massless).unwrap();
        let data = SpectralData::build(&p, 2, &mut rng).unwrap();
        let samples: Vec<Complex64> = (0..10).map(|_| Complex64::from_polar(rng.gen_range(0.7..1.4), rng.gen_range(0.0..TAU))).collect();
        let mut det: f64 = 0.0;
        let mut control = f64::INFINITY;
        for pair in &data.pairs {
            det = det.max(root_of_unity_check(&p, &pair.value, &samples).unwrap().max_relative_det);
            let mut coeffs = pair.value.coeffs.clone();
            let scale = max_of(coeffs.iter().map(|z| z.norm()));
            coeffs[0] += 1e-2 * scale;
            let perturbed = TransferEigenvalue::from_coeffs(&p, coeffs).unwrap();
            control = control.min(root_of_unity_check(&p, &perturbed, &samples).unwrap().max_relative_det);
        }
        out.below(format!("N={n} det"), det, TOL_ROOT_OF_UNITY);
        out.above(format!("N={n} control orders"), (control / det.max(f64::MIN_POSITIVE)).log10(), ROOT_OF_UNITY_CONTROL_ORDERS);
    }
    out
}

fn tq_bethe() -> Criterion {
    let mut out = Criterion::new(12, "TQ relation and Bethe equations");
    let mut rng = rng_for(12);
    for n in [2, 4] {
        let p = ModelParams::random(n, Regime::Massless, &mut rng);
        let data = SpectralData::build(&p, 2, &mut rng).unwrap();
        let mut nullity: f64 = 0.0;
        let mut tq: f64 = 0.0;
        let mut bethe: f64 = 0.0;
        for pair in &data.pairs {
            let r = tq_polynomial_check(&p, &pair.value, &mut rng).unwrap();
            nullity = nullity.max((r.nullspace_dim as f64 - 1.0).abs());
            tq = tq.max(r.tq_residual);
            bethe = bethe.max(max_of(r.bethe_residuals.iter().flatten().copied()));
        }
        out.below(format!("N={n} |nullity-1|"), nullity, 0.5);
        out.below(format!("N={n} TQ"), tq, TOL_TQ);
        out.below(format!("N={n} Bethe"), bethe, TOL_BETHE);
    }
    out
}

fn m_point() -> Criterion {
    let mut out = Criterion::new(13, "m-point functions from spectral sums");
    let mut rng = rng_for(13);
    for n in 1..=3 {
        let p = ModelParams::random(n, Regime::Generic, &mut rng);
        let data = SpectralData::build(&p, 2, &mut rng).unwrap();
        let chains: [&[(PauliKind, usize)]; 5] = [
            &[(PauliKind::Z, 1)],
            &[(PauliKind::Minus, n), (PauliKind::Z, 1)],
            &[(PauliKind::Z, n), (PauliKind::Z, 1)],
            &[(PauliKind::Z, 1), (PauliKind::Minus, n), (PauliKind::Z, n)],
            &[(PauliKind::Minus, 1), (PauliKind::Z, n), (PauliKind::Minus, n)],
        ];
        let mut worst: f64 = 0.0;
        for ops in chains {
            for (i, pair) in data.pairs.iter().enumerate() {
                let s = m_point_function(&p, &data, i, ops).unwrap();
                let d = dense_m_point(&p, pair, ops).unwrap();
                let bracket = pairing(&pair.left_state, &pair.right_state).unwrap();
                let scale = vec_norm(&pair.left_state) * vec_norm(&pair.right_state) / bracket.norm();
                worst = worst.max(relative_error(s, d, scale));
            }
        }
        out.below(format!("N={n}"), worst, TOL_M_POINT);
    }
    out
}

#[test]
fn acceptance_criteria() {
    let criteria = [
        yang_baxter(),
        quantum_det(),
        sov_bases(),
        coupling_and_measure(),
        spectrum(),
        normality(),
        scalar_products(),
        form_factors(),
        reconstruction(),
        hamiltonian(),
        root_of_unity(),
        tq_bethe(),
        m_point(),
    ];
    for cr in &criteria {
        println!("{}", cr.line());
    }
    let failed: Vec<usize> = criteria.iter().filter(|c| !c.pass()).map(|c| c.id).collect();
    println!("{}/{} criteria passed", criteria.len() - failed.len(), criteria.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
