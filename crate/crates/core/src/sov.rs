//! Sklyanin's separation-of-variables bases.
//!
//! SOV states are labelled by `h ∈ {0,1}^N`, with `j = 1 + Σ_a 2^{a−1} h_a`.
//! The D-bases are
//!
//! ```text
//! ⟨h| = ⟨0| ∏_n (C(η_n)/d(η_n/q))^{h_n} / n,     |h⟩ = ∏_n (B(η_n)/a(η_n))^{h_n} |0⟩ / n
//! n   = ∏_{b<a} (η_a/η_b − η_b/η_a)^{1/2}
//! ```
//!
//! and diagonalize `D(λ)` with eigenvalue `d_h(λ) = ∏_n (λq^{h_n}/η_n − η_n/(λq^{h_n}))`.
//! The A-bases use `C(η_n/q)` and `B(η_n/q)` instead and diagonalize `A(λ)`.
//! Both are built by dense operator application; the closed action formulas
//! in [`sov_action`] are independent of that construction.
//!
//! The gauge is `ω(x) = x^{N−1}` evaluated at the separated variables
//! `x_a = η_a q^{−h_a}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::json;
use crate::operators::{monodromy, OperatorError};
use crate::oracle::{lu_factor, pairing, vec_norm, LinalgError, Matrix};
use crate::params::{eval_a, eval_d, sov_margin, validate_sov_condition, ModelParams, ParamsError, SovViolation};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SovError {
    #[error("SOV condition violated by {0:?}")]
    Violation(Vec<SovViolation>),
    #[error("SOV index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("expected {expected} coefficients, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variable {
    D,
    A,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    B,
    C,
}

/// `κ(h) = 1 + Σ_a 2^{a−1} h_a`.
pub fn kappa(h: &[u8]) -> Result<usize, SovError> {
    if h.len() >= usize::BITS as usize - 1 {
        return Err(SovError::IndexOutOfRange(format!("{} bits", h.len())));
    }
    let mut j = 0usize;
    for (a, &bit) in h.iter().enumerate() {
        match bit {
            0 => {}
            1 => j |= 1 << a,
            other => return Err(SovError::IndexOutOfRange(format!("h_{} = {other}", a + 1))),
        }
    }
    Ok(j + 1)
}

/// Inverse of [`kappa`] for an `n_sites` chain.
pub fn kappa_inv(j: usize, n_sites: usize) -> Result<Vec<u8>, SovError> {
    if j == 0 || j > (1usize << n_sites) {
        return Err(SovError::IndexOutOfRange(format!("j = {j} for N = {n_sites}")));
    }
    Ok(bits(j - 1, n_sites))
}

/// Bits of a 0-based index, site 1 first.
pub fn bits(index: usize, n_sites: usize) -> Vec<u8> {
    (0..n_sites).map(|a| ((index >> a) & 1) as u8).collect()
}

fn require_sov(params: &ModelParams) -> Result<(), SovError> {
    let cond = validate_sov_condition(params);
    if !cond.holds {
        return Err(SovError::Violation(cond.violations));
    }
    if sov_margin(params) < 1e-4 {
        log::warn!("inhomogeneities are close to violating the SOV condition; bases are ill-conditioned");
    }
    Ok(())
}

/// `n = ∏_{b<a} (η_a/η_b − η_b/η_a)^{1/2}`, principal branch per factor.
pub fn norm_constant(params: &ModelParams) -> Complex64 {
    let e = params.inhomogeneities();
    let mut n = ONE;
    for a in 0..e.len() {
        for b in 0..a {
            n *= (e[a] / e[b] - e[b] / e[a]).sqrt();
        }
    }
    n
}

/// Separated variable `η_a q^{−h}` (site 1-based).
pub fn sov_node(params: &ModelParams, site: usize, h: u8) -> Complex64 {
    params.eta(site) * params.q().powi(-i32::from(h))
}

/// Gauge `ω(x) = x^{N−1}`.
pub fn omega(params: &ModelParams, x: Complex64) -> Complex64 {
    x.powi(params.n_sites() as i32 - 1)
}

/// `V(h) = ∏_{b<a} (η_a² q^{−2h_a} − η_b² q^{−2h_b})`.
pub fn vandermonde_weight(params: &ModelParams, h: &[u8]) -> Complex64 {
    let x: Vec<Complex64> = (1..=params.n_sites()).map(|a| sov_node(params, a, h[a - 1])).collect();
    let mut v = ONE;
    for a in 0..x.len() {
        for b in 0..a {
            v *= x[a] * x[a] - x[b] * x[b];
        }
    }
    v
}

/// The `2^N` left or right SOV states of one variable.
#[derive(Debug, Clone)]
pub struct SovBasis {
    pub side: Side,
    pub variable: Variable,
    pub n_sites: usize,
    pub norm_constant: Complex64,
    /// `states[j − 1]` is the state with label `κ⁻¹(j)`.
    pub states: Vec<Vec<Complex64>>,
}

impl SovBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// `U^{(R)}` (states as columns) or `U^{(L)}` (states as rows).
    pub fn matrix(&self) -> Matrix {
        let rows = Matrix::from_rows(&self.states).expect("equal lengths");
        match self.side {
            Side::Left => rows,
            Side::Right => rows.transpose(),
        }
    }

    /// `Σ_j x_j |h_j⟩` or `Σ_j x_j ⟨h_j|`.
    pub fn assemble(&self, coords: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim()];
        for (x, s) in coords.iter().zip(&self.states) {
            if *x != ZERO {
                for (o, v) in out.iter_mut().zip(s) {
                    *o += x * v;
                }
            }
        }
        out
    }

    /// SOV coordinates of a dense (co)vector.
    pub fn coordinates(&self, v: &[Complex64]) -> Result<Vec<Complex64>, SovError> {
        let lu = lu_factor(&self.matrix())?;
        Ok(match self.side {
            Side::Right => lu.solve_vec(v)?,
            Side::Left => lu.solve_transpose_vec(v)?,
        })
    }
}

pub fn build_sov_basis(params: &ModelParams, side: Side, variable: Variable) -> Result<SovBasis, SovError> {
    build_sov_basis_with_norm(params, side, variable, norm_constant(params))
}

/// As [`build_sov_basis`] with an explicit normalization constant.
pub fn build_sov_basis_with_norm(
    params: &ModelParams,
    side: Side,
    variable: Variable,
    norm: Complex64,
) -> Result<SovBasis, SovError> {
    require_sov(params)?;
    let n = params.n_sites();
    let dim = params.dim();
    let q = params.q();
    let mut steps = Vec::with_capacity(n);
    for site in 1..=n {
        let eta = params.eta(site);
        let arg = match variable {
            Variable::D => eta,
            Variable::A => eta / q,
        };
        let m = monodromy(params, arg)?;
        let step = match side {
            Side::Right => m.b.scale(1.0 / eval_a(params, eta)?),
            Side::Left => m.c.scale(1.0 / eval_d(params, eta / q)?),
        };
        steps.push(step);
    }
    let mut states = vec![Vec::new(); dim];
    let mut vac = vec![ZERO; dim];
    vac[0] = 1.0 / norm;
    states[0] = vac;
    for level in 1..=n as u32 {
        let idx: Vec<usize> = (1..dim).filter(|j| j.count_ones() == level).collect();
        let built: Vec<(usize, Vec<Complex64>)> = idx
            .par_iter()
            .map(|&j| {
                let k = j.trailing_zeros() as usize;
                let prev = &states[j ^ (1 << k)];
                let v = match side {
                    Side::Right => steps[k].mul_vec(prev),
                    Side::Left => steps[k].vec_mul(prev),
                };
                (j, v)
            })
            .collect();
        for (j, v) in built {
            states[j] = v;
        }
    }
    Ok(SovBasis {
        side,
        variable,
        n_sites: n,
        norm_constant: norm,
        states,
    })
}

/// D-variable: `∏_n (λq^{h_n}/η_n − η_n/(λq^{h_n}))`; A-variable: exponent `1 − h_n`.
pub fn eigenvalue_at(params: &ModelParams, variable: Variable, h: &[u8], lambda: Complex64) -> Result<Complex64, SovError> {
    if lambda.norm() == 0.0 {
        return Err(ParamsError::ZeroArgument.into());
    }
    if h.len() != params.n_sites() {
        return Err(SovError::Dimension {
            expected: params.n_sites(),
            found: h.len(),
        });
    }
    let q = params.q();
    Ok(h.iter()
        .zip(params.inhomogeneities())
        .map(|(&hn, &e)| {
            let p = match variable {
                Variable::D => i32::from(hn),
                Variable::A => 1 - i32::from(hn),
            };
            let x = lambda * q.powi(p);
            x / e - e / x
        })
        .product())
}

/// Interpolation coefficient `∏_{b≠a} (λ/y_b − y_b/λ)/(x_a/y_b − y_b/x_a)`.
fn action_coefficient(params: &ModelParams, variable: Variable, h: &[u8], a: usize, lambda: Complex64) -> Complex64 {
    let q = params.q();
    let e = params.inhomogeneities();
    let p = |hb: u8| match variable {
        Variable::D => i32::from(hb),
        Variable::A => 1 - i32::from(hb),
    };
    let xa = e[a] / q.powi(p(h[a]));
    let mut c = ONE;
    for b in 0..e.len() {
        if b == a {
            continue;
        }
        let y = e[b] / q.powi(p(h[b]));
        c *= (lambda / y - y / lambda) / (xa / y - y / xa);
    }
    c
}

/// Applies `B(λ)` or `C(λ)` to a state given by SOV coordinates, using the
/// closed interpolation formulas; shifts leaving `{0,1}` drop out.
pub fn sov_action(
    params: &ModelParams,
    variable: Variable,
    side: Side,
    generator: Generator,
    coeffs: &[Complex64],
    lambda: Complex64,
) -> Result<Vec<Complex64>, SovError> {
    let n = params.n_sites();
    let dim = params.dim();
    if coeffs.len() != dim {
        return Err(SovError::Dimension {
            expected: dim,
            found: coeffs.len(),
        });
    }
    if lambda.norm() == 0.0 {
        return Err(ParamsError::ZeroArgument.into());
    }
    let q = params.q();
    let mut out = vec![ZERO; dim];
    for (j, &x) in coeffs.iter().enumerate() {
        if x == ZERO {
            continue;
        }
        let h = bits(j, n);
        for a in 0..n {
            let eta = params.inhomogeneities()[a];
            let ha = i32::from(h[a]);
            let (shift, weight) = match (side, generator) {
                (Side::Left, Generator::C) => (1, eval_d(params, eta * q.powi(ha - 1))?),
                (Side::Left, Generator::B) => (-1, eval_a(params, eta * q.powi(ha - 1))?),
                (Side::Right, Generator::C) => (-1, eval_d(params, eta * q.powi(-ha))?),
                (Side::Right, Generator::B) => (1, eval_a(params, eta * q.powi(-ha))?),
            };
            let target = ha + shift;
            if !(0..=1).contains(&target) {
                continue;
            }
            let jt = j ^ (1 << a);
            out[jt] += x * weight * action_coefficient(params, variable, &h, a, lambda);
        }
    }
    Ok(out)
}

/// Largest `‖Xv − x_h(λ)v‖ / (‖X‖_F ‖v‖)` over both bases of the family, `X = D(λ)` or `A(λ)`.
pub fn diagonalization_residual(params: &ModelParams, variable: Variable, lambda: Complex64) -> Result<f64, SovError> {
    let n = params.n_sites();
    let left = build_sov_basis(params, Side::Left, variable)?;
    let right = build_sov_basis(params, Side::Right, variable)?;
    let m = monodromy(params, lambda)?;
    let op = match variable {
        Variable::D => &m.d,
        Variable::A => &m.a,
    };
    let scale = op.norm_fro();
    let mut worst: f64 = 0.0;
    for j in 0..params.dim() {
        let ev = eigenvalue_at(params, variable, &bits(j, n), lambda)?;
        let (r, l) = (&right.states[j], &left.states[j]);
        let rr: Vec<Complex64> = op.mul_vec(r).iter().zip(r).map(|(x, y)| x - ev * y).collect();
        let ll: Vec<Complex64> = op.vec_mul(l).iter().zip(l).map(|(x, y)| x - ev * y).collect();
        worst = worst.max(vec_norm(&rr) / (scale * vec_norm(r))).max(vec_norm(&ll) / (scale * vec_norm(l)));
    }
    Ok(worst)
}

/// Closed `B`/`C` actions against dense application, both sides, for the
/// state with SOV coordinates `coeffs`; relative 2-norm.
pub fn action_residual(params: &ModelParams, variable: Variable, lambda: Complex64, coeffs: &[Complex64]) -> Result<f64, SovError> {
    let m = monodromy(params, lambda)?;
    let mut worst: f64 = 0.0;
    for side in [Side::Left, Side::Right] {
        let basis = build_sov_basis(params, side, variable)?;
        let v = basis.assemble(coeffs);
        for generator in [Generator::B, Generator::C] {
            let g = match generator {
                Generator::B => &m.b,
                Generator::C => &m.c,
            };
            let gv = match side {
                Side::Right => g.mul_vec(&v),
                Side::Left => g.vec_mul(&v),
            };
            let dense = basis.coordinates(&gv)?;
            let closed = sov_action(params, variable, side, generator, coeffs, lambda)?;
            let d: Vec<Complex64> = dense.iter().zip(&closed).map(|(a, b)| a - b).collect();
            worst = worst.max(vec_norm(&d) / vec_norm(&dense).max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

/// Closed-form coupling `⟨h|h⟩ = ∏_{b<a} 1/(η_a q^{h_b−h_a}/η_b − η_b/(q^{h_b−h_a}η_a))`.
pub fn coupling_closed_form(params: &ModelParams, h: &[u8]) -> Complex64 {
    let e = params.inhomogeneities();
    let q = params.q();
    let mut m = ONE;
    for a in 0..e.len() {
        for b in 0..a {
            let s = q.powi(i32::from(h[b]) - i32::from(h[a]));
            m /= e[a] * s / e[b] - e[b] / (s * e[a]);
        }
    }
    m
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingData {
    #[serde(with = "json::complex_vec")]
    pub m_diag: Vec<Complex64>,
    /// Sklyanin measure `μ_j = 1/M_jj`.
    #[serde(with = "json::complex_vec")]
    pub measure: Vec<Complex64>,
    /// Exponent of the gauge `ω(x) = x^{gauge_power}`.
    pub gauge_power: i32,
}

pub fn coupling_data(params: &ModelParams) -> Result<CouplingData, SovError> {
    require_sov(params)?;
    let n = params.n_sites();
    let m_diag: Vec<Complex64> = (0..params.dim()).map(|j| coupling_closed_form(params, &bits(j, n))).collect();
    let measure = m_diag.iter().map(|m| 1.0 / m).collect();
    Ok(CouplingData {
        m_diag,
        measure,
        gauge_power: n as i32 - 1,
    })
}

/// Dense pairing matrix `G_{ij} = ⟨h_i|h_j⟩`.
pub fn dense_coupling(left: &SovBasis, right: &SovBasis) -> Matrix {
    Matrix::from_fn(left.dim(), right.dim(), |i, j| {
        pairing(&left.states[i], &right.states[j]).expect("equal dimensions")
    })
}

/// `max_{ij} |G_ij − δ_ij M_ii| / |M_ii|` between the dense pairing and the closed form.
pub fn coupling_residual(params: &ModelParams, bases: &SovBases) -> f64 {
    let n = params.n_sites();
    let g = dense_coupling(&bases.left, &bases.right);
    let mut worst: f64 = 0.0;
    for i in 0..params.dim() {
        let m = coupling_closed_form(params, &bits(i, n));
        for j in 0..params.dim() {
            let expected = if i == j { m } else { ZERO };
            worst = worst.max((g[(i, j)] - expected).norm() / m.norm());
        }
    }
    worst
}

/// Left and right D-bases, the pair every eigenstate construction uses.
#[derive(Debug, Clone)]
pub struct SovBases {
    pub left: SovBasis,
    pub right: SovBasis,
}

impl SovBases {
    pub fn build(params: &ModelParams) -> Result<Self, SovError> {
        Ok(Self {
            left: build_sov_basis(params, Side::Left, Variable::D)?,
            right: build_sov_basis(params, Side::Right, Variable::D)?,
        })
    }
}

/// Weight of `|h⟩⟨h|` in the SOV resolution of the identity,
/// `V(h) / ∏_b ω(η_b q^{−h_b})`.
pub fn identity_weight(params: &ModelParams, h: &[u8]) -> Complex64 {
    let om: Complex64 = (1..=params.n_sites()).map(|b| omega(params, sov_node(params, b, h[b - 1]))).product();
    vandermonde_weight(params, h) / om
}

/// `max |Σ_h w(h) |h⟩⟨h| − 1|` over matrix entries.
pub fn check_identity_decomposition(params: &ModelParams) -> Result<f64, SovError> {
    let bases = SovBases::build(params)?;
    Ok(identity_residual(params, &bases))
}

pub fn identity_residual(params: &ModelParams, bases: &SovBases) -> f64 {
    let n = params.n_sites();
    let dim = params.dim();
    let mut acc = Matrix::zeros(dim, dim);
    for j in 0..dim {
        let w = identity_weight(params, &bits(j, n));
        let r = &bases.right.states[j];
        let l = &bases.left.states[j];
        for x in 0..dim {
            let rx = w * r[x];
            for y in 0..dim {
                acc[(x, y)] += rx * l[y];
            }
        }
    }
    acc.max_abs_diff(&Matrix::identity(dim))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SovStateDump {
    pub j: usize,
    pub h: Vec<u8>,
    #[serde(with = "json::complex_vec")]
    pub entries: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SovBasisDump {
    pub side: Side,
    pub variable: Variable,
    #[serde(with = "json::complex")]
    pub norm_constant: Complex64,
    pub states: Vec<SovStateDump>,
}

impl From<&SovBasis> for SovBasisDump {
    fn from(b: &SovBasis) -> Self {
        Self {
            side: b.side,
            variable: b.variable,
            norm_constant: b.norm_constant,
            states: b
                .states
                .iter()
                .enumerate()
                .map(|(i, s)| SovStateDump {
                    j: i + 1,
                    h: bits(i, b.n_sites),
                    entries: s.clone(),
                })
                .collect(),
        }
    }
}
