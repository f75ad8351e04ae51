//! Scalar products, form factors and local-operator reconstruction.
//!
//! Separate states are stored as coefficient tables `α_a(η_a q^{−h})`, `h ∈ {0,1}`,
//! and only assembled into dense vectors for comparison with the oracle.
//! The pairing of a left and a right separate state is
//!
//! ```text
//! ⟨α|β⟩ = det_N M,   M_ab = η_a^{2(b−1)} Σ_h α_a(η_a q^{−h}) β_a(η_a q^{−h}) q^{−2(b−1)h} / ω(η_a q^{−h})
//! ```
//!
//! and the form factors of `σ⁻_n`, `σᶻ_n` are `(N+1)×(N+1)` determinants built
//! from the same sums with shifted exponents.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::json;
use crate::operators::{embed, monodromy, BlockOperator, pauli, transfer_antiperiodic, transfer_periodic, OperatorError, PauliKind, SiteOperator};
use crate::oracle::{inner, lu_det, lu_factor, pairing, vec_norm, LinalgError, Matrix};
use crate::params::{eval_a, eval_d, ModelParams, ParamsError};
use crate::sov::{omega, Side, SovBases, SovError};
use crate::spectrum::{q_ratios, separate_state_coordinates, solve_spectrum, verification_samples, build_eigenpair, EigenPair, SpectrumError, TransferEigenvalue};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Floor of the relative-error denominator, as a fraction of `‖⟨t|‖·‖|t′⟩‖`.
pub const ZERO_SCALE: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObservablesError {
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Sov(#[from] SovError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("site {site} outside 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("expected {expected} table rows, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite separate-state coefficient at node {0}")]
    NonFinite(usize),
    #[error("both states must be {0}")]
    WrongSide(&'static str),
    #[error("quantum determinant of the antiperiodic monodromy is singular at node {site}")]
    SingularDeterminant { site: usize },
    #[error("prefactor pole a(η)d(η/q) = 0 at node {site}")]
    PrefactorPole { site: usize },
    #[error("vanishing bracket ⟨t|t⟩ for eigenvalue {index}")]
    DegenerateNormalization { index: usize },
    #[error("{0}")]
    Unsupported(&'static str),
}

fn check_site(params: &ModelParams, site: usize) -> Result<usize, ObservablesError> {
    if site == 0 || site > params.n_sites() {
        return Err(ObservablesError::SiteOutOfRange {
            site,
            n_sites: params.n_sites(),
        });
    }
    Ok(site - 1)
}

/// A state whose SOV coordinates factorize over the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparateState {
    pub side: Side,
    /// `table[a][h] = α_{a+1}(η_{a+1} q^{−h})`.
    pub table: Vec<[Complex64; 2]>,
}

impl SeparateState {
    pub fn new(params: &ModelParams, side: Side, table: Vec<[Complex64; 2]>) -> Result<Self, ObservablesError> {
        if table.len() != params.n_sites() {
            return Err(ObservablesError::Dimension {
                expected: params.n_sites(),
                found: table.len(),
            });
        }
        if let Some(a) = table.iter().position(|r| r.iter().any(|z| !z.is_finite())) {
            return Err(ObservablesError::NonFinite(a + 1));
        }
        Ok(Self { side, table })
    }

    /// `⟨t|` (Q̄-table) or `|t⟩` (Q-table) of a transfer-matrix eigenvalue.
    pub fn eigenstate(params: &ModelParams, t: &TransferEigenvalue, side: Side) -> Result<Self, ObservablesError> {
        let r = q_ratios(params, t)?;
        let table = match side {
            Side::Left => r.qbar_table,
            Side::Right => r.q_table,
        };
        Self::new(params, side, table)
    }

    /// Entries drawn uniformly from the square `[−1, 1]²`.
    pub fn random<R: Rng + ?Sized>(params: &ModelParams, side: Side, rng: &mut R) -> Self {
        let mut z = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let table = (0..params.n_sites()).map(|_| [z(), z()]).collect();
        Self { side, table }
    }

    /// The SOV basis state with label `h` itself.
    pub fn indicator(params: &ModelParams, side: Side, h: &[u8]) -> Result<Self, ObservablesError> {
        let table = h
            .iter()
            .map(|&x| if x == 0 { [ONE, ZERO] } else { [ZERO, ONE] })
            .collect();
        Self::new(params, side, table)
    }

    /// Multiply the coefficients of node `a` (1-based) by `rho[a−1]`.
    pub fn rescaled(&self, rho: &[Complex64]) -> Self {
        let table = self.table.iter().zip(rho).map(|(r, s)| [r[0] * s, r[1] * s]).collect();
        Self { side: self.side, table }
    }

    pub fn coordinates(&self, params: &ModelParams) -> Vec<Complex64> {
        separate_state_coordinates(params, &self.table)
    }

    pub fn assemble(&self, params: &ModelParams, bases: &SovBases) -> Vec<Complex64> {
        let basis = match self.side {
            Side::Left => &bases.left,
            Side::Right => &bases.right,
        };
        basis.assemble(&self.coordinates(params))
    }
}

/// Columns `η_a^{e} Σ_h α_a β_a q^{−e h} / ω(η_a q^{−h})` for each exponent `e`.
fn node_sums(params: &ModelParams, alpha: &[[Complex64; 2]], beta: &[[Complex64; 2]], exponents: &[i32]) -> Matrix {
    let q = params.q();
    let etas = params.inhomogeneities();
    Matrix::from_fn(etas.len(), exponents.len(), |a, b| {
        let e = exponents[b];
        let mut s = ZERO;
        for h in 0..2 {
            let x = etas[a] * q.powi(-(h as i32));
            s += alpha[a][h] * beta[a][h] * q.powi(-e * h as i32) / omega(params, x);
        }
        etas[a].powi(e) * s
    })
}

fn sides(alpha: &SeparateState, beta: &SeparateState) -> Result<(), ObservablesError> {
    if alpha.side != Side::Left {
        return Err(ObservablesError::WrongSide("a left state followed by a right state"));
    }
    if beta.side != Side::Right {
        return Err(ObservablesError::WrongSide("a left state followed by a right state"));
    }
    Ok(())
}

pub fn scalar_product_matrix(params: &ModelParams, alpha: &SeparateState, beta: &SeparateState) -> Result<Matrix, ObservablesError> {
    sides(alpha, beta)?;
    let exps: Vec<i32> = (0..params.n_sites() as i32).map(|b| 2 * b).collect();
    Ok(node_sums(params, &alpha.table, &beta.table, &exps))
}

/// `⟨α|β⟩` as an `N×N` determinant.
pub fn scalar_product(params: &ModelParams, alpha: &SeparateState, beta: &SeparateState) -> Result<Complex64, ObservablesError> {
    Ok(lu_det(&scalar_product_matrix(params, alpha, beta)?)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shift {
    Zero,
    Half,
}

#[derive(Debug, Clone)]
pub struct PhiMatrix {
    pub shift: Shift,
    pub entries: Matrix,
}

/// `Φ^{(t,t′)}` with `n_cols` columns: column `b` (0-based) has exponent `2b`
/// for [`Shift::Zero`] and `2b − 1` for [`Shift::Half`], i.e. `Φ_{a,b+1}` and
/// `Φ_{a,b+1/2}` in 1-based labels.
pub fn phi_matrix(
    params: &ModelParams,
    t: &TransferEigenvalue,
    t_prime: &TransferEigenvalue,
    shift: Shift,
    n_cols: usize,
) -> Result<PhiMatrix, ObservablesError> {
    let left = q_ratios(params, t)?.qbar_table;
    let right = q_ratios(params, t_prime)?.q_table;
    Ok(PhiMatrix {
        shift,
        entries: phi_from_tables(params, &left, &right, shift, n_cols),
    })
}

fn phi_from_tables(params: &ModelParams, left: &[[Complex64; 2]], right: &[[Complex64; 2]], shift: Shift, n_cols: usize) -> Matrix {
    let off = match shift {
        Shift::Zero => 0,
        Shift::Half => -1,
    };
    let exps: Vec<i32> = (0..n_cols as i32).map(|b| 2 * b + off).collect();
    node_sums(params, left, right, &exps)
}

/// `max_a |Σ_b Φ_ab (c′_b − c_b)| / Σ_{b,h} |term|`, which vanishes for
/// distinct eigenvalues. The denominator is the sum of moduli of the terms
/// entering row `a`; `Φ` itself can vanish (e.g. `N = 1`).
pub fn orthogonality_kernel_residual(
    params: &ModelParams,
    t: &TransferEigenvalue,
    t_prime: &TransferEigenvalue,
) -> Result<f64, ObservablesError> {
    let left = q_ratios(params, t)?.qbar_table;
    let right = q_ratios(params, t_prime)?.q_table;
    let v: Vec<Complex64> = t_prime.coeffs.iter().zip(&t.coeffs).map(|(x, y)| x - y).collect();
    let q = params.q();
    let mut worst: f64 = 0.0;
    for (a, &eta) in params.inhomogeneities().iter().enumerate() {
        let mut sum = ZERO;
        let mut abs = 0.0;
        for (b, vb) in v.iter().enumerate() {
            let e = 2 * b as i32;
            for h in 0..2 {
                let x = eta * q.powi(-(h as i32));
                let term = left[a][h] * right[a][h] * x.powi(e) / omega(params, x) * vb;
                sum += term;
                abs += term.norm();
            }
        }
        if abs > 0.0 {
            worst = worst.max(sum.norm() / abs);
        }
    }
    Ok(worst)
}

/// `∏_{h<n} t(η_h) ∏_{h≤n} t′(η_h/q) / ∏_{h≤n} a(η_h) d(η_h/q)` with `n` 0-based.
fn ff_prefactor(params: &ModelParams, t: &TransferEigenvalue, t_prime: &TransferEigenvalue, n: usize) -> Result<Complex64, ObservablesError> {
    let q = params.q();
    let mut p = ONE;
    for h in 0..=n {
        let e = params.eta(h + 1);
        let den = eval_a(params, e)? * eval_d(params, e / q)?;
        if den == ZERO {
            return Err(ObservablesError::PrefactorPole { site: h + 1 });
        }
        if h < n {
            p *= t.eval(e);
        }
        p *= t_prime.eval(e / q) / den;
    }
    Ok(p)
}

/// `(N+1)×(N+1)` matrix of the `σ⁻_n` form factor: rows `Φ_{a,b+1/2}`,
/// `b = 0..N`, and last row `η_n^{2b−N}`.
pub fn sigma_minus_matrix(
    params: &ModelParams,
    left: &SeparateState,
    right: &SeparateState,
    site: usize,
) -> Result<Matrix, ObservablesError> {
    sides(left, right)?;
    let n = check_site(params, site)?;
    let nn = params.n_sites();
    let phi = phi_from_tables(params, &left.table, &right.table, Shift::Half, nn + 1);
    let eta_n = params.eta(n + 1);
    Ok(Matrix::from_fn(nn + 1, nn + 1, |a, b| {
        if a < nn {
            phi[(a, b)]
        } else {
            eta_n.powi(2 * b as i32 - nn as i32)
        }
    }))
}

/// `(N+1)×(N+1)` bordered matrix of the `σᶻ_n` form factor: `Φ` block, last
/// row `η_n^{2b+1−N}`, last column `Q_{t′}(η_a/q) Q̄_t(η_a) d(η_a/q)` and corner `t(η_n)/2`.
/// The gauge factors `(η_a/q)^{N−1}/ω(η_a/q)` of the last column cancel.
pub fn sigma_z_matrix(
    params: &ModelParams,
    t: &TransferEigenvalue,
    left: &SeparateState,
    right: &SeparateState,
    site: usize,
) -> Result<Matrix, ObservablesError> {
    sides(left, right)?;
    let n = check_site(params, site)?;
    let nn = params.n_sites();
    let q = params.q();
    let phi = phi_from_tables(params, &left.table, &right.table, Shift::Zero, nn);
    let eta_n = params.eta(n + 1);
    let mut border = Vec::with_capacity(nn);
    for a in 0..nn {
        let x = params.eta(a + 1) / q;
        let gauge = x.powi(nn as i32 - 1) / omega(params, x);
        border.push(right.table[a][1] * left.table[a][0] * gauge * eval_d(params, x)?);
    }
    Ok(Matrix::from_fn(nn + 1, nn + 1, |a, b| match (a < nn, b < nn) {
        (true, true) => phi[(a, b)],
        (true, false) => border[a],
        (false, true) => eta_n.powi(2 * b as i32 + 1 - nn as i32),
        (false, false) => t.eval(eta_n) / 2.0,
    }))
}

/// `⟨t|σ⁻_n|t′⟩` for the eigenstates built from the Q-ratio tables.
pub fn form_factor_sigma_minus(
    params: &ModelParams,
    t: &TransferEigenvalue,
    t_prime: &TransferEigenvalue,
    site: usize,
) -> Result<Complex64, ObservablesError> {
    let left = SeparateState::eigenstate(params, t, Side::Left)?;
    let right = SeparateState::eigenstate(params, t_prime, Side::Right)?;
    form_factor_sigma_minus_with(params, t, t_prime, &left, &right, site)
}

/// As [`form_factor_sigma_minus`] with explicitly normalized eigenstate tables.
pub fn form_factor_sigma_minus_with(
    params: &ModelParams,
    t: &TransferEigenvalue,
    t_prime: &TransferEigenvalue,
    left: &SeparateState,
    right: &SeparateState,
    site: usize,
) -> Result<Complex64, ObservablesError> {
    let s = sigma_minus_matrix(params, left, right, site)?;
    Ok(ff_prefactor(params, t, t_prime, site - 1)? * lu_det(&s)?)
}

/// `⟨t|σᶻ_n|t′⟩ = −2 · prefactor · det S`.
pub fn form_factor_sigma_z(
    params: &ModelParams,
    t: &TransferEigenvalue,
    t_prime: &TransferEigenvalue,
    site: usize,
) -> Result<Complex64, ObservablesError> {
    let left = SeparateState::eigenstate(params, t, Side::Left)?;
    let right = SeparateState::eigenstate(params, t_prime, Side::Right)?;
    form_factor_sigma_z_with(params, t, t_prime, &left, &right, site)
}

pub fn form_factor_sigma_z_with(
    params: &ModelParams,
    t: &TransferEigenvalue,
    t_prime: &TransferEigenvalue,
    left: &SeparateState,
    right: &SeparateState,
    site: usize,
) -> Result<Complex64, ObservablesError> {
    let s = sigma_z_matrix(params, t, left, right, site)?;
    Ok(-2.0 * ff_prefactor(params, t, t_prime, site - 1)? * lu_det(&s)?)
}

/// Operators with a determinant form-factor formula.
pub fn form_factor(
    params: &ModelParams,
    kind: PauliKind,
    t: &TransferEigenvalue,
    t_prime: &TransferEigenvalue,
    site: usize,
) -> Result<Complex64, ObservablesError> {
    match kind {
        PauliKind::Minus => form_factor_sigma_minus(params, t, t_prime, site),
        PauliKind::Z => form_factor_sigma_z(params, t, t_prime, site),
        _ => Err(ObservablesError::Unsupported("form factors are available for sigma_minus and sigma_z only")),
    }
}

/// `|f − d| / max(|d|, ZERO_SCALE · scale)`.
pub fn relative_error(formula: Complex64, dense: Complex64, scale: f64) -> f64 {
    (formula - dense).norm() / dense.norm().max(ZERO_SCALE * scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormFactorComparison {
    /// Position of `t` in the sorted spectrum.
    pub left: usize,
    pub right: usize,
    pub operator: PauliKind,
    pub site: usize,
    #[serde(with = "json::complex")]
    pub value: Complex64,
    #[serde(with = "json::complex")]
    pub dense: Complex64,
    pub rel_err: f64,
}

/// Determinant form factors against dense matrix elements, for every ordered
/// pair of eigenstates and every requested site.
pub fn compare_form_factors(
    params: &ModelParams,
    pairs: &[EigenPair],
    kind: PauliKind,
    sites: &[usize],
) -> Result<Vec<FormFactorComparison>, ObservablesError> {
    let ops: Vec<Matrix> = sites.iter().map(|&s| pauli(kind, s, params)).collect::<Result<_, _>>()?;
    let applied: Vec<Vec<Vec<Complex64>>> = ops
        .par_iter()
        .map(|o| pairs.iter().map(|p| o.mul_vec(&p.right_state)).collect())
        .collect();
    let tasks: Vec<(usize, usize, usize)> = (0..pairs.len())
        .flat_map(|i| (0..pairs.len()).flat_map(move |j| (0..sites.len()).map(move |k| (i, j, k))))
        .collect();
    tasks
        .par_iter()
        .map(|&(i, j, k)| {
            let (l, r) = (&pairs[i], &pairs[j]);
            let value = form_factor(params, kind, &l.value, &r.value, sites[k])?;
            let dense = pairing(&l.left_state, &applied[k][j])?;
            let scale = vec_norm(&l.left_state) * vec_norm(&r.right_state);
            Ok(FormFactorComparison {
                left: i,
                right: j,
                operator: kind,
                site: sites[k],
                value,
                dense,
                rel_err: relative_error(value, dense, scale),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionFlavor {
    Antiperiodic1,
    Antiperiodic2,
    Periodic1,
    Periodic2,
}

impl ReconstructionFlavor {
    pub const ALL: [Self; 4] = [Self::Antiperiodic1, Self::Antiperiodic2, Self::Periodic1, Self::Periodic2];
}

/// `det M(η_b) = −a(η_b)d(η_b/q)`.
fn det_m(params: &ModelParams, lambda: Complex64, site: usize) -> Result<Complex64, ObservablesError> {
    let v = -eval_a(params, lambda)? * eval_d(params, lambda / params.q())?;
    if v == ZERO {
        return Err(ObservablesError::PrefactorPole { site });
    }
    Ok(v)
}

/// `det M̄(η_b)⁻¹ X` by an LU solve.
fn solve_det_m_bar(params: &ModelParams, site: usize, rhs: &Matrix) -> Result<Matrix, ObservablesError> {
    let eta = params.eta(site);
    let m = monodromy(params, eta)?;
    let mq = monodromy(params, eta / params.q())?;
    let det = &m.b.matmul(&mq.c) - &m.a.matmul(&mq.d);
    let lu = lu_factor(&det)?;
    if lu.singular_pivot().is_some() {
        return Err(ObservablesError::SingularDeterminant { site });
    }
    lu.solve(rhs).map_err(|e| match e {
        LinalgError::Singular { .. } => ObservablesError::SingularDeterminant { site },
        other => other.into(),
    })
}

/// Node data shared by all reconstructions on one chain: prefix products of
/// the transfer matrices and the monodromy at `η_n` and `η_n/q`.
#[derive(Debug, Clone)]
pub struct Reconstructor {
    n_sites: usize,
    /// `∏_{b≤k} T̄(η_b)` for `k = 0..N` (empty product first).
    tbar_prefix: Vec<Matrix>,
    /// `∏_{b≤k} det M̄(η_b)⁻¹ T̄(η_b/q)`.
    tbar_q_prefix: Vec<Matrix>,
    /// `∏_{b≤k} T(η_b)`.
    tper_prefix: Vec<Matrix>,
    /// `∏_{b≤k} T(η_b/q) / det M(η_b)`.
    tper_q_prefix: Vec<Matrix>,
    at_node: Vec<BlockOperator<Matrix>>,
    /// Auxiliary transposes of `M(η_n/q)`.
    at_node_q: Vec<BlockOperator<Matrix>>,
    det_m: Vec<Complex64>,
}

fn prefix_products(dim: usize, factors: Vec<Matrix>) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(factors.len() + 1);
    out.push(Matrix::identity(dim));
    for f in factors {
        let next = out.last().expect("non-empty").matmul(&f);
        out.push(next);
    }
    out
}

impl Reconstructor {
    pub fn new(params: &ModelParams) -> Result<Self, ObservablesError> {
        let n = params.n_sites();
        let dim = params.dim();
        let q = params.q();
        let per_node: Vec<_> = (1..=n)
            .into_par_iter()
            .map(|b| -> Result<_, ObservablesError> {
                let e = params.eta(b);
                let dm = det_m(params, e, b)?;
                Ok((
                    transfer_antiperiodic(params, e)?,
                    solve_det_m_bar(params, b, &transfer_antiperiodic(params, e / q)?)?,
                    transfer_periodic(params, e)?,
                    transfer_periodic(params, e / q)?.scale(1.0 / dm),
                    monodromy(params, e)?,
                    monodromy(params, e / q)?.aux_transpose(),
                    dm,
                ))
            })
            .collect::<Result<_, _>>()?;
        let mut cols: (Vec<_>, Vec<_>, Vec<_>, Vec<_>, Vec<_>, Vec<_>, Vec<_>) = Default::default();
        for (a, b, c, d, e, f, g) in per_node {
            cols.0.push(a);
            cols.1.push(b);
            cols.2.push(c);
            cols.3.push(d);
            cols.4.push(e);
            cols.5.push(f);
            cols.6.push(g);
        }
        Ok(Self {
            n_sites: n,
            tbar_prefix: prefix_products(dim, cols.0),
            tbar_q_prefix: prefix_products(dim, cols.1),
            tper_prefix: prefix_products(dim, cols.2),
            tper_q_prefix: prefix_products(dim, cols.3),
            at_node: cols.4,
            at_node_q: cols.5,
            det_m: cols.6,
        })
    }

    /// `X_n` rebuilt from transfer matrices at the nodes.
    ///
    /// ```text
    /// AP1: ∏_{b<n} T̄(η_b) · tr₀[M(η_n) X σˣ] · ∏_{b≤n} det M̄(η_b)⁻¹ T̄(η_b/q)
    /// AP2: ∏_{b≤n} T̄(η_b) · tr₀[σᶻ M^{t₀}(η_n/q) σᶻ X σˣ] / det M(η_n) · ∏_{b<n} det M̄(η_b)⁻¹ T̄(η_b/q)
    /// P1:  ∏_{b<n} T(η_b) · tr₀[M(η_n) X] · ∏_{b≤n} T(η_b/q) / det M(η_b)
    /// P2:  ∏_{b≤n} T(η_b) · tr₀[σʸ M^{t₀}(η_n/q) σʸ X] / det M(η_n) · ∏_{b<n} T(η_b/q) / det M(η_b)
    /// ```
    pub fn reconstruct(&self, x: &SiteOperator, site: usize, flavor: ReconstructionFlavor) -> Result<Matrix, ObservablesError> {
        if site == 0 || site > self.n_sites {
            return Err(ObservablesError::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            });
        }
        let n = site;
        let sx = SiteOperator::pauli(PauliKind::X);
        let sy = SiteOperator::pauli(PauliKind::Y);
        let sz = SiteOperator::pauli(PauliKind::Z);
        let inv_det = 1.0 / self.det_m[n - 1];
        let (lhs, mid, rhs) = match flavor {
            ReconstructionFlavor::Antiperiodic1 => (
                &self.tbar_prefix[n - 1],
                self.at_node[n - 1].trace_with(&x.matmul(&sx)),
                &self.tbar_q_prefix[n],
            ),
            ReconstructionFlavor::Antiperiodic2 => (
                &self.tbar_prefix[n],
                self.at_node_q[n - 1].trace_with(&sz.matmul(x).matmul(&sx).matmul(&sz)).scale(inv_det),
                &self.tbar_q_prefix[n - 1],
            ),
            ReconstructionFlavor::Periodic1 => (
                &self.tper_prefix[n - 1],
                self.at_node[n - 1].trace_with(x),
                &self.tper_q_prefix[n],
            ),
            ReconstructionFlavor::Periodic2 => (
                &self.tper_prefix[n],
                self.at_node_q[n - 1].trace_with(&sy.matmul(x).matmul(&sy)).scale(inv_det),
                &self.tper_q_prefix[n - 1],
            ),
        };
        Ok(lhs.matmul(&mid).matmul(rhs))
    }

    pub fn residual(&self, x: &SiteOperator, site: usize, flavor: ReconstructionFlavor) -> Result<f64, ObservablesError> {
        let r = self.reconstruct(x, site, flavor)?;
        Ok(r.max_abs_diff(&embed(x, site, self.n_sites)?))
    }
}

/// One-off reconstruction; see [`Reconstructor::reconstruct`].
pub fn reconstruct_local_operator(
    params: &ModelParams,
    x: &SiteOperator,
    site: usize,
    flavor: ReconstructionFlavor,
) -> Result<Matrix, ObservablesError> {
    check_site(params, site)?;
    Reconstructor::new(params)?.reconstruct(x, site, flavor)
}

/// `max |reconstructed − X_n|` over matrix entries.
pub fn reconstruction_residual(
    params: &ModelParams,
    x: &SiteOperator,
    site: usize,
    flavor: ReconstructionFlavor,
) -> Result<f64, ObservablesError> {
    check_site(params, site)?;
    Reconstructor::new(params)?.residual(x, site, flavor)
}

#[derive(Debug, Clone)]
pub struct SigmaXString {
    /// `∏_{b≤c} σˣ_b`.
    pub direct: Matrix,
    /// `∏_{b≤c} T̄(η_b) · ∏_{b≤c} T(η_b/q)/det M(η_b)`.
    pub first: Matrix,
    /// `∏_{b≤c} det M̄(η_b)⁻¹ T(η_b) · ∏_{b≤c} T̄(η_b/q)`.
    pub second: Matrix,
}

impl SigmaXString {
    pub fn residual(&self) -> f64 {
        self.first.max_abs_diff(&self.direct).max(self.second.max_abs_diff(&self.direct))
    }
}

/// Both transfer-matrix forms of the string `σˣ_1 ⋯ σˣ_c`.
pub fn sigma_x_string(params: &ModelParams, c: usize) -> Result<SigmaXString, ObservablesError> {
    check_site(params, c)?;
    let mut all = sigma_x_strings_upto(params, c)?;
    Ok(all.pop().expect("c ≥ 1"))
}

/// [`sigma_x_string`] for every `c = 1..N`, sharing the node factors.
pub fn sigma_x_strings(params: &ModelParams) -> Result<Vec<SigmaXString>, ObservablesError> {
    sigma_x_strings_upto(params, params.n_sites())
}

fn sigma_x_strings_upto(params: &ModelParams, c: usize) -> Result<Vec<SigmaXString>, ObservablesError> {
    let dim = params.dim();
    let q = params.q();
    let sx = SiteOperator::pauli(PauliKind::X);
    let factors: Vec<[Matrix; 5]> = (1..=c)
        .into_par_iter()
        .map(|b| -> Result<_, ObservablesError> {
            let e = params.eta(b);
            Ok([
                embed(&sx, b, params.n_sites())?,
                transfer_antiperiodic(params, e)?,
                transfer_periodic(params, e / q)?.scale(1.0 / det_m(params, e, b)?),
                solve_det_m_bar(params, b, &transfer_periodic(params, e)?)?,
                transfer_antiperiodic(params, e / q)?,
            ])
        })
        .collect::<Result<_, _>>()?;
    let mut acc: [Matrix; 5] = std::array::from_fn(|_| Matrix::identity(dim));
    let mut out = Vec::with_capacity(c);
    for f in &factors {
        for (a, m) in acc.iter_mut().zip(f) {
            *a = a.matmul(m);
        }
        out.push(SigmaXString {
            direct: acc[0].clone(),
            first: acc[1].matmul(&acc[2]),
            second: acc[3].matmul(&acc[4]),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenstateNorm {
    /// `⟨t|t⟩` from the determinant formula.
    #[serde(with = "json::complex")]
    pub bracket: Complex64,
    /// `‖|t⟩‖²`.
    pub hilbert_norm_sq: f64,
    /// `‖|t⟩‖² / ⟨t|t⟩`.
    #[serde(with = "json::complex")]
    pub alpha: Complex64,
}

pub fn eigenstate_norm_and_alpha(params: &ModelParams, pair: &EigenPair) -> Result<EigenstateNorm, ObservablesError> {
    let left = SeparateState::eigenstate(params, &pair.value, Side::Left)?;
    let right = SeparateState::eigenstate(params, &pair.value, Side::Right)?;
    let bracket = scalar_product(params, &left, &right)?;
    if bracket.norm() <= 1e-300 {
        return Err(ObservablesError::DegenerateNormalization { index: 0 });
    }
    let hilbert_norm_sq = inner(&pair.right_state, &pair.right_state)?.re;
    Ok(EigenstateNorm {
        bracket,
        hilbert_norm_sq,
        alpha: hilbert_norm_sq / bracket,
    })
}

/// `min_c ‖⟨t| − c·(|t⟩)†‖ / ‖⟨t|‖`: how far the left eigencovector is from
/// the conjugate of the right eigenvector.
pub fn conjugation_residual(left: &[Complex64], right: &[Complex64]) -> f64 {
    let rr: f64 = right.iter().map(|z| z.norm_sqr()).sum();
    let c: Complex64 = right.iter().zip(left).map(|(r, l)| r * l).sum::<Complex64>() / rr;
    let diff: Vec<Complex64> = left.iter().zip(right).map(|(l, r)| l - c * r.conj()).collect();
    vec_norm(&diff) / vec_norm(left)
}

/// The complete eigenbasis of `T̄(λ)` with determinant brackets.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub pairs: Vec<EigenPair>,
    /// `⟨t|t⟩` per eigenvalue.
    pub brackets: Vec<Complex64>,
}

impl SpectralData {
    /// Solve the spectrum and build verified eigenpairs at `samples` random points.
    pub fn build<R: Rng + ?Sized>(params: &ModelParams, samples: usize, rng: &mut R) -> Result<Self, ObservablesError> {
        let spectrum = solve_spectrum(params, rng)?;
        let bases = SovBases::build(params)?;
        let points = verification_samples(params, samples, rng)?;
        let pairs: Vec<EigenPair> = spectrum
            .par_iter()
            .map(|t| build_eigenpair(params, t, &bases, &points))
            .collect::<Result<_, _>>()?;
        Self::from_pairs(params, pairs)
    }

    pub fn from_pairs(params: &ModelParams, pairs: Vec<EigenPair>) -> Result<Self, ObservablesError> {
        let brackets = pairs
            .iter()
            .enumerate()
            .map(|(index, p)| {
                let b = lu_det(&phi_matrix(params, &p.value, &p.value, Shift::Zero, params.n_sites())?.entries)?;
                if b.norm() <= 1e-300 {
                    return Err(ObservablesError::DegenerateNormalization { index });
                }
                Ok(b)
            })
            .collect::<Result<_, ObservablesError>>()?;
        Ok(Self { pairs, brackets })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `F[i][j] = ⟨t_i|O|t_j⟩` from the determinant formulas.
    pub fn form_factor_matrix(&self, params: &ModelParams, kind: PauliKind, site: usize) -> Result<Matrix, ObservablesError> {
        let n = self.len();
        let entries: Vec<Complex64> = (0..n * n)
            .into_par_iter()
            .map(|k| form_factor(params, kind, &self.pairs[k / n].value, &self.pairs[k % n].value, site))
            .collect::<Result<_, _>>()?;
        Ok(Matrix::from_fn(n, n, |i, j| entries[i * n + j]))
    }

    /// `max |Σ_t |t⟩⟨t|v⟩/⟨t|t⟩ − v| / ‖v‖`.
    pub fn identity_insertion_residual(&self, v: &[Complex64]) -> Result<f64, ObservablesError> {
        let mut acc = vec![ZERO; v.len()];
        for (p, b) in self.pairs.iter().zip(&self.brackets) {
            let w = pairing(&p.left_state, v)? / b;
            for (o, r) in acc.iter_mut().zip(&p.right_state) {
                *o += w * r;
            }
        }
        let diff: Vec<Complex64> = acc.iter().zip(v).map(|(x, y)| x - y).collect();
        Ok(vec_norm(&diff) / vec_norm(v))
    }
}

/// `⟨t|O_1 ⋯ O_m|t⟩ / ⟨t|t⟩` as a spectral sum over intermediate eigenstates,
/// every matrix element taken from the form-factor determinants.
pub fn m_point_function(
    params: &ModelParams,
    data: &SpectralData,
    index: usize,
    ops: &[(PauliKind, usize)],
) -> Result<Complex64, ObservablesError> {
    if data.is_empty() {
        return Err(ObservablesError::Unsupported("the spectrum must be computed first"));
    }
    if index >= data.len() {
        return Err(ObservablesError::Dimension {
            expected: data.len(),
            found: index + 1,
        });
    }
    if ops.is_empty() {
        return Ok(ONE);
    }
    let mut row: Vec<Complex64> = (0..data.len()).map(|j| if j == index { ONE } else { ZERO }).collect();
    for (k, &(kind, site)) in ops.iter().enumerate() {
        let f = data.form_factor_matrix(params, kind, site)?;
        row = f.vec_mul(&row);
        if k + 1 < ops.len() {
            for (x, b) in row.iter_mut().zip(&data.brackets) {
                *x /= b;
            }
        }
    }
    Ok(row[index] / data.brackets[index])
}

/// The same quantity from dense operator products.
pub fn dense_m_point(params: &ModelParams, pair: &EigenPair, ops: &[(PauliKind, usize)]) -> Result<Complex64, ObservablesError> {
    let mut v = pair.right_state.clone();
    for &(kind, site) in ops.iter().rev() {
        v = pauli(kind, site, params)?.mul_vec(&v);
    }
    Ok(pairing(&pair.left_state, &v)? / pairing(&pair.left_state, &pair.right_state)?)
}
