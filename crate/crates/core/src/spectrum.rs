//! Spectrum of the antiperiodic transfer matrix.
//!
//! Every eigenvalue is a Laurent polynomial `t(λ) = Σ_{b=1}^N c_b λ^{−N−1+2b}`
//! and is fixed by the discrete system
//!
//! ```text
//! t(η_a) t(η_a/q) = a(η_a) d(η_a/q),   a = 1..N.
//! ```
//!
//! [`solve_spectrum_oracle`] gets all `2^N` solutions from one dense
//! eigendecomposition of `T̄(λ₀)`; [`refine_newton`] polishes them on the
//! quadratic system. The eigenstates are separate states in the SOV basis with
//! per-node coefficients `Q_t(η_a q^{−h})`, normalized by `Q_t(η_a) = 1`.

use std::cmp::Ordering;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::json;
use crate::laurent::{laurent_interpolate, LaurentError, LaurentPoly, Parity};
use crate::operators::{transfer_antiperiodic, transfer_exponents, OperatorError};
use crate::oracle::{eig, inner, lu_det, lu_factor, nullspace, vec_norm, LinalgError, Matrix};
use crate::params::{eval_a, eval_d, validate_sov_condition, ModelParams, ParamsError};
use crate::sov::{bits, omega, sov_node, vandermonde_weight, SovBases, SovError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Attempts at drawing a λ₀ with simple spectrum before giving up.
pub const ORACLE_RETRIES: usize = 8;
/// Newton iteration cap.
pub const NEWTON_MAX_ITER: usize = 50;
/// Target relative residual of the discrete system after refinement.
pub const NEWTON_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectrumError {
    #[error(transparent)]
    Sov(#[from] SovError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Laurent(#[from] LaurentError),
    #[error("no simple spectrum found after {attempts} choices of λ₀")]
    Degenerate { attempts: usize },
    #[error("expected {expected} coefficients, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("Newton iteration stalled after {iterations} steps at residual {residual:e}")]
    Divergence { iterations: usize, residual: f64 },
    #[error("pole in Q-ratio at node {site}")]
    QRatioPole { site: usize },
    #[error("{0}")]
    Unsupported(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeValue {
    #[serde(with = "json::complex")]
    pub t_eta: Complex64,
    #[serde(with = "json::complex")]
    pub t_eta_over_q: Complex64,
}

/// One eigenvalue `t(λ)` of `T̄(λ)` in coefficient form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferEigenvalue {
    /// `c_1..c_N`.
    #[serde(with = "json::complex_vec")]
    pub coeffs: Vec<Complex64>,
    pub node_values: Vec<NodeValue>,
    /// Largest relative discrete-system residual `|F_a| / |a(η_a)d(η_a/q)|`.
    pub residual: f64,
}

impl TransferEigenvalue {
    pub fn from_coeffs(params: &ModelParams, coeffs: Vec<Complex64>) -> Result<Self, SpectrumError> {
        if coeffs.len() != params.n_sites() {
            return Err(SpectrumError::Dimension {
                expected: params.n_sites(),
                found: coeffs.len(),
            });
        }
        let exps = transfer_exponents(params.n_sites());
        let ev = |l: Complex64| -> Complex64 { coeffs.iter().zip(&exps).map(|(c, &e)| c * l.powi(e)).sum() };
        let node_values = params
            .inhomogeneities()
            .iter()
            .map(|&e| NodeValue {
                t_eta: ev(e),
                t_eta_over_q: ev(e / params.q()),
            })
            .collect();
        let mut t = Self {
            coeffs,
            node_values,
            residual: 0.0,
        };
        t.residual = relative_residual(params, &t)?;
        Ok(t)
    }

    pub fn n_sites(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        let exps = transfer_exponents(self.n_sites());
        self.coeffs.iter().zip(&exps).map(|(c, &e)| c * lambda.powi(e)).sum()
    }

    pub fn as_laurent(&self) -> LaurentPoly {
        let exps = transfer_exponents(self.n_sites());
        let pairs: Vec<(i32, Complex64)> = exps.iter().copied().zip(self.coeffs.iter().copied()).collect();
        LaurentPoly::from_pairs(&pairs, Parity::of_exponents(&exps)).expect("exponents share a parity")
    }

    /// `t(η_a)` followed by `t(η_a/q)`, the key used for ordering.
    pub fn fingerprint(&self) -> Vec<Complex64> {
        self.node_values
            .iter()
            .map(|v| v.t_eta)
            .chain(self.node_values.iter().map(|v| v.t_eta_over_q))
            .collect()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn quantize(x: f64) -> i64 {
    (x * 1e8).round() as i64
}

/// Lexicographic order on the fingerprint, real part first, at 1e-8 resolution.
pub fn fingerprint_cmp(a: &TransferEigenvalue, b: &TransferEigenvalue) -> Ordering {
    for (x, y) in a.fingerprint().iter().zip(b.fingerprint()) {
        let o = quantize(x.re)
            .cmp(&quantize(y.re))
            .then(quantize(x.im).cmp(&quantize(y.im)));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// `F_a = t(η_a)t(η_a/q) − a(η_a)d(η_a/q)`.
pub fn discrete_system_residual(params: &ModelParams, t: &TransferEigenvalue) -> Result<Vec<Complex64>, SpectrumError> {
    let q = params.q();
    params
        .inhomogeneities()
        .iter()
        .map(|&e| Ok(t.eval(e) * t.eval(e / q) - eval_a(params, e)? * eval_d(params, e / q)?))
        .collect()
}

pub fn relative_residual(params: &ModelParams, t: &TransferEigenvalue) -> Result<f64, SpectrumError> {
    let q = params.q();
    let f = discrete_system_residual(params, t)?;
    let mut r: f64 = 0.0;
    for (fa, &e) in f.iter().zip(params.inhomogeneities()) {
        let s = (eval_a(params, e)? * eval_d(params, e / q)?).norm();
        r = r.max(fa.norm() / s);
    }
    Ok(r)
}

/// `∂F_a/∂c_b = η_a^{e_b} t(η_a/q) + (η_a/q)^{e_b} t(η_a)`.
pub fn discrete_system_jacobian(params: &ModelParams, t: &TransferEigenvalue) -> Matrix {
    let exps = transfer_exponents(params.n_sites());
    let q = params.q();
    let e = params.inhomogeneities();
    Matrix::from_fn(e.len(), e.len(), |a, b| {
        e[a].powi(exps[b]) * t.eval(e[a] / q) + (e[a] / q).powi(exps[b]) * t.eval(e[a])
    })
}

/// Random points with modulus in `[0.5, 2]`, at relative distance at least
/// 1e-2 from every `±η_a` and `±η_a/q`.
pub fn random_spectral_point<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Complex64 {
    let q = params.q();
    loop {
        let z = Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..std::f64::consts::TAU));
        let near = params.inhomogeneities().iter().any(|&e| {
            [e, -e, e / q, -e / q]
                .iter()
                .any(|&x| (z - x).norm() < 1e-2 * x.norm())
        });
        if !near {
            return z;
        }
    }
}

/// All `2^N` eigenvalues from one eigendecomposition of `T̄(λ₀)`, using
/// Rayleigh quotients at the nodes and interpolation on `η_1..η_N`.
/// The result is sorted by fingerprint.
pub fn solve_spectrum_oracle<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<Vec<TransferEigenvalue>, SpectrumError> {
    let cond = validate_sov_condition(params);
    if !cond.holds {
        return Err(SovError::Violation(cond.violations).into());
    }
    let n = params.n_sites();
    let exps = transfer_exponents(n);
    let nodes = params.inhomogeneities().to_vec();
    let t_nodes: Vec<Matrix> = nodes
        .iter()
        .map(|&e| transfer_antiperiodic(params, e))
        .collect::<Result<_, _>>()?;
    for attempt in 0..ORACLE_RETRIES {
        let lambda0 = random_spectral_point(params, rng);
        let t0 = transfer_antiperiodic(params, lambda0)?;
        let dec = match eig(&t0) {
            Ok(d) if d.converged && d.backward_error < 1e-9 => d,
            _ => {
                log::debug!("eigensolver rejected λ₀ = {lambda0} (attempt {attempt})");
                continue;
            }
        };
        let scale = t0.norm_fro();
        let simple = dec.eigenvalues.iter().enumerate().all(|(i, x)| {
            dec.eigenvalues[..i].iter().all(|y| (x - y).norm() > 1e-8 * scale)
        });
        if !simple {
            log::debug!("degenerate spectrum at λ₀ = {lambda0} (attempt {attempt})");
            continue;
        }
        let mut out = Vec::with_capacity(dec.eigenvectors.len());
        for v in &dec.eigenvectors {
            let vv = inner(v, v)?;
            let values: Vec<Complex64> = t_nodes
                .iter()
                .map(|t| inner(v, &t.mul_vec(v)).map(|x| x / vv))
                .collect::<Result<_, _>>()?;
            let poly = laurent_interpolate(&nodes, &values, &exps)?;
            let coeffs = exps.iter().map(|&e| poly.coeff(e)).collect();
            out.push(TransferEigenvalue::from_coeffs(params, coeffs)?);
        }
        let distinct = out
            .iter()
            .enumerate()
            .all(|(i, x)| out[..i].iter().all(|y| x.distance(y) > 1e-6));
        if !distinct {
            continue;
        }
        out.sort_by(fingerprint_cmp);
        return Ok(out);
    }
    Err(SpectrumError::Degenerate {
        attempts: ORACLE_RETRIES,
    })
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub value: TransferEigenvalue,
    pub iterations: usize,
}

/// Newton iteration on the discrete system with the analytic Jacobian.
pub fn refine_newton(params: &ModelParams, t0: &TransferEigenvalue) -> Result<NewtonOutcome, SpectrumError> {
    let mut t = TransferEigenvalue::from_coeffs(params, t0.coeffs.clone())?;
    let mut best = t.clone();
    let mut iterations = 0;
    while iterations < NEWTON_MAX_ITER && t.residual > 1e-15 {
        let f = discrete_system_residual(params, &t)?;
        let j = discrete_system_jacobian(params, &t);
        let lu = lu_factor(&j)?;
        let step = lu.solve_vec(&f.iter().map(|x| -x).collect::<Vec<_>>())?;
        let coeffs: Vec<Complex64> = t.coeffs.iter().zip(&step).map(|(c, s)| c + s).collect();
        iterations += 1;
        let next = TransferEigenvalue::from_coeffs(params, coeffs)?;
        let small_step = vec_norm(&step) <= 1e-15 * vec_norm(&t.coeffs).max(1.0);
        t = next;
        if t.residual < best.residual {
            best = t.clone();
        } else if best.residual < NEWTON_TOL || small_step {
            break;
        }
        if small_step {
            break;
        }
    }
    if best.residual >= NEWTON_TOL {
        return Err(SpectrumError::Divergence {
            iterations,
            residual: best.residual,
        });
    }
    Ok(NewtonOutcome {
        value: best,
        iterations,
    })
}

/// Oracle spectrum followed by Newton polishing of every eigenvalue.
pub fn solve_spectrum<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<Vec<TransferEigenvalue>, SpectrumError> {
    let raw = solve_spectrum_oracle(params, rng)?;
    let mut refined: Vec<TransferEigenvalue> = raw
        .par_iter()
        .map(|t| refine_newton(params, t).map(|o| o.value))
        .collect::<Result<_, _>>()?;
    refined.sort_by(fingerprint_cmp);
    Ok(refined)
}

/// Multi-start Newton on the discrete system. Returns the distinct solutions
/// found; no completeness is implied.
pub fn solve_spectrum_multistart<R: Rng + ?Sized>(params: &ModelParams, starts: usize, rng: &mut R) -> Vec<TransferEigenvalue> {
    let n = params.n_sites();
    let scale = (params.q() - 1.0 / params.q()).norm().max(1.0);
    let mut found: Vec<TransferEigenvalue> = Vec::new();
    for _ in 0..starts {
        let coeffs: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale)
            .collect();
        let Ok(t0) = TransferEigenvalue::from_coeffs(params, coeffs) else { continue };
        if let Ok(o) = refine_newton(params, &t0) {
            if found.iter().all(|f| f.distance(&o.value) > 1e-6) {
                found.push(o.value);
            }
        }
    }
    found.sort_by(fingerprint_cmp);
    found
}

/// Per-node values `Q(η_a)`, `Q(η_a/q)` of the right (`Q`) and left (`Q̄`) separate states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QRatios {
    pub q_table: Vec<[Complex64; 2]>,
    pub qbar_table: Vec<[Complex64; 2]>,
}

/// `Q(η_a) = Q̄(η_a) = 1`, `Q(η_a/q) = t(η_a)/d(η_a/q)`, `Q̄(η_a/q) = t(η_a)/a(η_a)`.
pub fn q_ratios(params: &ModelParams, t: &TransferEigenvalue) -> Result<QRatios, SpectrumError> {
    let q = params.q();
    let mut q_table = Vec::with_capacity(params.n_sites());
    let mut qbar_table = Vec::with_capacity(params.n_sites());
    for (k, &e) in params.inhomogeneities().iter().enumerate() {
        let d = eval_d(params, e / q)?;
        let a = eval_a(params, e)?;
        if d == ZERO || a == ZERO {
            return Err(SpectrumError::QRatioPole { site: k + 1 });
        }
        let te = t.eval(e);
        q_table.push([ONE, te / d]);
        qbar_table.push([ONE, te / a]);
    }
    Ok(QRatios { q_table, qbar_table })
}

/// SOV coordinates `∏_a table_a(h_a)/ω(η_a q^{−h_a}) · V(h)` of a separate state.
pub fn separate_state_coordinates(params: &ModelParams, table: &[[Complex64; 2]]) -> Vec<Complex64> {
    let n = params.n_sites();
    (0..params.dim())
        .map(|j| {
            let h = bits(j, n);
            let f: Complex64 = (0..n)
                .map(|a| table[a][h[a] as usize] / omega(params, sov_node(params, a + 1, h[a])))
                .product();
            f * vandermonde_weight(params, &h)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSide {
    Left,
    Right,
}

/// Dense right eigenvector `|t⟩` or left covector `⟨t|`.
pub fn build_eigenstate(params: &ModelParams, t: &TransferEigenvalue, side: StateSide, bases: &SovBases) -> Result<Vec<Complex64>, SpectrumError> {
    let r = q_ratios(params, t)?;
    Ok(match side {
        StateSide::Right => bases.right.assemble(&separate_state_coordinates(params, &r.q_table)),
        StateSide::Left => bases.left.assemble(&separate_state_coordinates(params, &r.qbar_table)),
    })
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: TransferEigenvalue,
    pub ratios: QRatios,
    pub right_state: Vec<Complex64>,
    pub left_state: Vec<Complex64>,
    /// Largest [`eigen_residual`] over the sample points, both sides.
    pub verify_residual: f64,
}

/// Backward error `‖T̄v − tv‖ / (‖T̄‖_F ‖v‖)` of a right vector or left covector.
pub fn eigen_residual(tbar: &Matrix, t_value: Complex64, v: &[Complex64], side: StateSide) -> f64 {
    let tv = match side {
        StateSide::Right => tbar.mul_vec(v),
        StateSide::Left => tbar.vec_mul(v),
    };
    let r: Vec<Complex64> = tv.iter().zip(v).map(|(x, y)| x - t_value * y).collect();
    vec_norm(&r) / (tbar.norm_fro().max(f64::MIN_POSITIVE) * vec_norm(v))
}

/// Both eigenstates of `t`, verified densely at the given spectral points.
pub fn build_eigenpair(
    params: &ModelParams,
    t: &TransferEigenvalue,
    bases: &SovBases,
    samples: &[(Complex64, Matrix)],
) -> Result<EigenPair, SpectrumError> {
    let ratios = q_ratios(params, t)?;
    let right_state = bases.right.assemble(&separate_state_coordinates(params, &ratios.q_table));
    let left_state = bases.left.assemble(&separate_state_coordinates(params, &ratios.qbar_table));
    let mut verify_residual: f64 = 0.0;
    for (lambda, tbar) in samples {
        let tv = t.eval(*lambda);
        verify_residual = verify_residual
            .max(eigen_residual(tbar, tv, &right_state, StateSide::Right))
            .max(eigen_residual(tbar, tv, &left_state, StateSide::Left));
    }
    Ok(EigenPair {
        value: t.clone(),
        ratios,
        right_state,
        left_state,
        verify_residual,
    })
}

/// `T̄(λ)` at `count` random spectral points, for eigenpair verification.
pub fn verification_samples<R: Rng + ?Sized>(params: &ModelParams, count: usize, rng: &mut R) -> Result<Vec<(Complex64, Matrix)>, SpectrumError> {
    (0..count)
        .map(|_| {
            let l = random_spectral_point(params, rng);
            Ok((l, transfer_antiperiodic(params, l)?))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TqReport {
    pub nullspace_dim: usize,
    /// Pivot moduli of the elimination (row-equilibrated).
    pub pivots: Vec<f64>,
    /// `Q(λ) = Σ_k p_k λ^{k−N/2}` when the nullspace is one-dimensional.
    pub q_poly: Option<LaurentPoly>,
    #[serde(with = "json::complex_vec")]
    pub roots: Vec<Complex64>,
    /// Largest relative TQ residual on fresh points.
    pub tq_residual: f64,
    /// Per-root Bethe residual, `None` for roots excluded as colliding.
    pub bethe_residuals: Vec<Option<f64>>,
}

/// Roots of `Σ_k p_k λ^k` from the companion matrix.
pub fn polynomial_roots(p: &[Complex64]) -> Result<Vec<Complex64>, SpectrumError> {
    let scale = p.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut deg = p.len() - 1;
    while deg > 0 && p[deg].norm() <= 1e-13 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Ok(vec![]);
    }
    let lead = p[deg];
    let comp = Matrix::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -p[deg - 1 - j] / lead
        } else if j + 1 == i {
            ONE
        } else {
            ZERO
        }
    });
    Ok(eig(&comp)?.eigenvalues)
}

fn tq_row(params: &ModelParams, t: &TransferEigenvalue, lambda: Complex64, k: i32) -> Result<Complex64, SpectrumError> {
    let q = params.q();
    let half = params.n_sites() as i32 / 2;
    let e = k - half;
    Ok(t.eval(lambda) * lambda.powi(e) - eval_a(params, lambda)? * (lambda / q).powi(e) - eval_d(params, lambda)? * (lambda * q).powi(e))
}

/// Eigenvalue-level TQ relation `t(λ)Q(λ) = a(λ)Q(λ/q) + d(λ)Q(λq)` with
/// `Q(λ) = λ^{−N/2} ∏_k (λ − λ_k)`, and the Bethe equations
/// `∏_n (q²λ_k² − η_n²)/(λ_k² − η_n²) = ∏_a (qλ_k − λ_a)/(λ_k/q − λ_a)`.
pub fn tq_polynomial_check<R: Rng + ?Sized>(params: &ModelParams, t: &TransferEigenvalue, rng: &mut R) -> Result<TqReport, SpectrumError> {
    let n = params.n_sites();
    if !n.is_multiple_of(2) {
        return Err(SpectrumError::Unsupported("the TQ check is implemented for even N only"));
    }
    let q = params.q();
    let samples: Vec<Complex64> = (0..2 * n + 2).map(|_| random_spectral_point(params, rng)).collect();
    let mut rows = Vec::with_capacity(samples.len());
    for &l in &samples {
        rows.push((0..=n as i32).map(|k| tq_row(params, t, l, k)).collect::<Result<Vec<_>, _>>()?);
    }
    let m = Matrix::from_rows(&rows)?;
    let ns = nullspace(&m, 1e-8);
    let nullspace_dim = ns.basis.len();
    if nullspace_dim != 1 {
        return Ok(TqReport {
            nullspace_dim,
            pivots: ns.pivots,
            q_poly: None,
            roots: vec![],
            tq_residual: f64::INFINITY,
            bethe_residuals: vec![],
        });
    }
    let p = ns.basis[0].clone();
    let half = n as i32 / 2;
    let pairs: Vec<(i32, Complex64)> = p.iter().enumerate().map(|(k, &c)| (k as i32 - half, c)).collect();
    let q_poly = LaurentPoly::from_pairs(&pairs, Parity::None)?;
    let qe = |l: Complex64| q_poly.eval(l);
    let mut tq_residual: f64 = 0.0;
    for _ in 0..10 {
        let l = random_spectral_point(params, rng);
        let x = t.eval(l) * qe(l)?;
        let y = eval_a(params, l)? * qe(l / q)?;
        let z = eval_d(params, l)? * qe(l * q)?;
        tq_residual = tq_residual.max((x - y - z).norm() / (x.norm() + y.norm() + z.norm()));
    }
    let roots = polynomial_roots(&p)?;
    let etas = params.inhomogeneities();
    let bethe_residuals = roots
        .iter()
        .enumerate()
        .map(|(k, &lk)| {
            let s = lk.norm();
            let collides = s < 1e-8
                || roots.iter().enumerate().any(|(j, &lj)| j != k && (lj - lk).norm() < 1e-6 * s)
                || roots.iter().any(|&lj| (lk / q - lj).norm() < 1e-6 * s)
                || etas.iter().any(|&e| (lk * lk - e * e).norm() < 1e-6 * s * s || (q * q * lk * lk - e * e).norm() < 1e-6 * s * s);
            if collides {
                return None;
            }
            let lhs: Complex64 = etas.iter().map(|&e| (q * q * lk * lk - e * e) / (lk * lk - e * e)).product();
            let rhs: Complex64 = roots.iter().map(|&la| (q * lk - la) / (lk / q - la)).product();
            Some((lhs / rhs - ONE).norm())
        })
        .collect();
    Ok(TqReport {
        nullspace_dim,
        pivots: ns.pivots,
        q_poly: Some(q_poly),
        roots,
        tq_residual,
        bethe_residuals,
    })
}

/// `(p, p′)` with `q = e^{2πip′/p}`, smallest `p ≤ 64`.
pub fn detect_root_of_unity(q: Complex64) -> Option<(u32, u32)> {
    (2..=64u32).find_map(|p| {
        if (q.powi(p as i32) - ONE).norm() < 1e-10 {
            let frac = q.arg() * p as f64 / std::f64::consts::TAU;
            let pp = (frac.round() as i64).rem_euclid(p as i64) as u32;
            Some((p, pp))
        } else {
            None
        }
    })
}

/// The cyclic `p × p` matrix with rows `−a(q^iλ), t(q^iλ), −d(q^iλ)`; the two
/// wrap-around entries carry `ε = (−1)^{p′N}`.
pub fn root_of_unity_matrix(params: &ModelParams, t: &TransferEigenvalue, lambda: Complex64, p: u32, p_prime: u32) -> Result<Matrix, SpectrumError> {
    let p = p as usize;
    let q = params.q();
    let eps = if (p_prime as usize * params.n_sites()).is_multiple_of(2) { ONE } else { -ONE };
    let mut m = Matrix::zeros(p, p);
    for i in 0..p {
        let z = q.powi(i as i32) * lambda;
        m[(i, i)] += t.eval(z);
        let wd = if i == p - 1 { eps } else { ONE };
        let wa = if i == 0 { eps } else { ONE };
        m[(i, (i + 1) % p)] -= eval_d(params, z)? * wd;
        m[(i, (i + p - 1) % p)] -= eval_a(params, z)? * wa;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RootOfUnityReport {
    pub p: u32,
    pub p_prime: u32,
    pub max_abs_det: f64,
    /// Largest `|det D| / ∏_i ‖row_i‖₂` (Hadamard-normalized).
    pub max_relative_det: f64,
}

/// `max |det_p D(Λ^{1/p})|` over the samples (principal root).
pub fn root_of_unity_check(params: &ModelParams, t: &TransferEigenvalue, samples: &[Complex64]) -> Result<RootOfUnityReport, SpectrumError> {
    let (p, p_prime) = detect_root_of_unity(params.q()).ok_or(SpectrumError::Unsupported("q is not a root of unity of order ≤ 64"))?;
    let mut max_abs_det: f64 = 0.0;
    let mut max_relative_det: f64 = 0.0;
    for &big in samples {
        let lambda = big.powf(1.0 / p as f64);
        let m = root_of_unity_matrix(params, t, lambda, p, p_prime)?;
        let det = lu_det(&m)?.norm();
        let hadamard: f64 = (0..m.rows()).map(|i| vec_norm(m.row(i))).product();
        max_abs_det = max_abs_det.max(det);
        max_relative_det = max_relative_det.max(det / hadamard);
    }
    Ok(RootOfUnityReport {
        p,
        p_prime,
        max_abs_det,
        max_relative_det,
    })
}
