//! Dense operators on the `2^N`-dimensional chain space.
//!
//! Basis convention: the product state `|s_N … s_1⟩` has index
//! `Σ_n s_n 2^{n−1}` with spin up encoded as `s_n = 0`, so site 1 is the
//! least significant bit and index 0 is the all-up reference state `|0⟩`.
//!
//! The Lax operator in auxiliary space is
//!
//! ```text
//! L_n(λ) = | x₊(λ) + x₋(λ)σᶻ_n     (q − q⁻¹)σ⁻_n     |
//!          | (q − q⁻¹)σ⁺_n         x₊(λ) − x₋(λ)σᶻ_n |
//! x±(λ) = (λq − 1/(λq) ± (λ − 1/λ)) / 2
//! ```
//!
//! and coincides with the six-vertex R-matrix. The monodromy matrix is
//! `M(λ) = L_N(λ/η_N) ⋯ L_1(λ/η_1)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::json;
use crate::laurent::{interpolate_columns, LaurentError};
use crate::oracle::{lu_factor, LinalgError, Matrix};
use crate::params::{eval_a, eval_d, ModelParams, ParamsError, Regime};

pub type DenseOperator = Matrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OperatorError {
    #[error("site {site} outside 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("{0}")]
    Unsupported(&'static str),
    #[error("operator is numerically singular (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error(transparent)]
    Laurent(#[from] LaurentError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliKind {
    #[serde(rename = "sigma_x", alias = "x")]
    X,
    #[serde(rename = "sigma_y", alias = "y")]
    Y,
    #[serde(rename = "sigma_z", alias = "z")]
    Z,
    #[serde(rename = "sigma_plus", alias = "plus")]
    Plus,
    #[serde(rename = "sigma_minus", alias = "minus")]
    Minus,
}

impl FromStr for PauliKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "x" | "sigma_x" => Ok(Self::X),
            "y" | "sigma_y" => Ok(Self::Y),
            "z" | "sigma_z" => Ok(Self::Z),
            "plus" | "sigma_plus" => Ok(Self::Plus),
            "minus" | "sigma_minus" => Ok(Self::Minus),
            other => Err(format!("unknown operator `{other}`")),
        }
    }
}

impl fmt::Display for PauliKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::X => "sigma_x",
            Self::Y => "sigma_y",
            Self::Z => "sigma_z",
            Self::Plus => "sigma_plus",
            Self::Minus => "sigma_minus",
        };
        f.write_str(s)
    }
}

/// A 2×2 complex matrix acting on one site (or on auxiliary space).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteOperator(pub [[Complex64; 2]; 2]);

impl SiteOperator {
    pub const IDENTITY: Self = Self([[ONE, ZERO], [ZERO, ONE]]);
    pub const ZERO: Self = Self([[ZERO, ZERO], [ZERO, ZERO]]);

    pub fn pauli(kind: PauliKind) -> Self {
        match kind {
            PauliKind::X => Self([[ZERO, ONE], [ONE, ZERO]]),
            PauliKind::Y => Self([[ZERO, -I], [I, ZERO]]),
            PauliKind::Z => Self([[ONE, ZERO], [ZERO, -ONE]]),
            PauliKind::Plus => Self([[ZERO, ONE], [ZERO, ZERO]]),
            PauliKind::Minus => Self([[ZERO, ZERO], [ONE, ZERO]]),
        }
    }

    /// Twist `Σ^{(α,b)} = (σˣ)^b diag(e^α, e^{−α})`.
    pub fn twist(alpha: Complex64, b: u8) -> Self {
        let d = Self([[alpha.exp(), ZERO], [ZERO, (-alpha).exp()]]);
        if b % 2 == 1 {
            Self::pauli(PauliKind::X).matmul(&d)
        } else {
            d
        }
    }

    pub fn matmul(&self, o: &Self) -> Self {
        let mut r = [[ZERO; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j];
            }
        }
        Self(r)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self([
            [self.0[0][0] + o.0[0][0], self.0[0][1] + o.0[0][1]],
            [self.0[1][0] + o.0[1][0], self.0[1][1] + o.0[1][1]],
        ])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self([[self.0[0][0] * s, self.0[0][1] * s], [self.0[1][0] * s, self.0[1][1] * s]])
    }

    pub fn adjoint(&self) -> Self {
        Self([[self.0[0][0].conj(), self.0[1][0].conj()], [self.0[0][1].conj(), self.0[1][1].conj()]])
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(2, 2, |i, j| self.0[i][j])
    }
}

fn check_site(site: usize, n_sites: usize) -> Result<usize, OperatorError> {
    if site == 0 || site > n_sites {
        return Err(OperatorError::SiteOutOfRange { site, n_sites });
    }
    Ok(site - 1)
}

/// `op` acting on `site` (1-based) of an `n_sites` chain, identity elsewhere.
pub fn embed(op: &SiteOperator, site: usize, n_sites: usize) -> Result<Matrix, OperatorError> {
    let bit = 1usize << check_site(site, n_sites)?;
    let dim = 1usize << n_sites;
    let mut m = Matrix::zeros(dim, dim);
    for i in 0..dim {
        let si = usize::from(i & bit != 0);
        let base = i & !bit;
        for sj in 0..2 {
            let v = op.0[si][sj];
            if v != ZERO {
                m[(i, base | (sj * bit))] = v;
            }
        }
    }
    Ok(m)
}

pub fn pauli(kind: PauliKind, site: usize, params: &ModelParams) -> Result<Matrix, OperatorError> {
    embed(&SiteOperator::pauli(kind), site, params.n_sites())
}

/// `(op)_site · m` without forming the embedded operator.
fn apply_site_left(op: &SiteOperator, bit: usize, m: &Matrix) -> Matrix {
    let dim = m.rows();
    let cols = m.cols();
    let mut out = Matrix::zeros(dim, cols);
    for i in 0..dim {
        if i & bit != 0 {
            continue;
        }
        let (i0, i1) = (i, i | bit);
        for j in 0..cols {
            let (v0, v1) = (m[(i0, j)], m[(i1, j)]);
            out[(i0, j)] = op.0[0][0] * v0 + op.0[0][1] * v1;
            out[(i1, j)] = op.0[1][0] * v0 + op.0[1][1] * v1;
        }
    }
    out
}

/// Operator-valued 2×2 matrix in auxiliary space, `[[a, b], [c, d]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T> BlockOperator<T> {
    pub fn block(&self, i: usize, j: usize) -> &T {
        match (i, j) {
            (0, 0) => &self.a,
            (0, 1) => &self.b,
            (1, 0) => &self.c,
            _ => &self.d,
        }
    }
}

impl BlockOperator<Matrix> {
    /// `tr₀[X₀ M₀] = Σ_{ij} X_ij M_ji`.
    pub fn trace_with(&self, x: &SiteOperator) -> Matrix {
        let mut out = Matrix::zeros(self.a.rows(), self.a.cols());
        for i in 0..2 {
            for j in 0..2 {
                if x.0[i][j] != ZERO {
                    out = &out + &self.block(j, i).scale(x.0[i][j]);
                }
            }
        }
        out
    }

    /// Full matrix on auxiliary ⊗ quantum space, auxiliary index most significant.
    pub fn to_full(&self) -> Matrix {
        let dim = self.a.rows();
        Matrix::from_fn(2 * dim, 2 * dim, |r, s| self.block(r / dim, s / dim)[(r % dim, s % dim)])
    }

    /// `M^{t₀}`: transpose in auxiliary space only.
    pub fn aux_transpose(&self) -> Self {
        Self {
            a: self.a.clone(),
            b: self.c.clone(),
            c: self.b.clone(),
            d: self.d.clone(),
        }
    }

    /// `P · M · Q` with `P`, `Q` acting in auxiliary space.
    pub fn aux_sandwich(&self, p: &SiteOperator, q: &SiteOperator) -> Self {
        let entry = |i: usize, j: usize| {
            let mut acc = Matrix::zeros(self.a.rows(), self.a.cols());
            for k in 0..2 {
                for l in 0..2 {
                    let w = p.0[i][k] * q.0[l][j];
                    if w != ZERO {
                        acc = &acc + &self.block(k, l).scale(w);
                    }
                }
            }
            acc
        };
        Self {
            a: entry(0, 0),
            b: entry(0, 1),
            c: entry(1, 0),
            d: entry(1, 1),
        }
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        [
            self.a.max_abs_diff(&o.a),
            self.b.max_abs_diff(&o.b),
            self.c.max_abs_diff(&o.c),
            self.d.max_abs_diff(&o.d),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn nonzero(lambda: Complex64) -> Result<(), OperatorError> {
    if lambda.norm() == 0.0 {
        return Err(ParamsError::ZeroArgument.into());
    }
    Ok(())
}

/// `(x₊(λ), x₋(λ))`.
pub fn x_pm(q: Complex64, lambda: Complex64) -> (Complex64, Complex64) {
    let u = lambda * q - 1.0 / (lambda * q);
    let v = lambda - 1.0 / lambda;
    ((u + v) * 0.5, (u - v) * 0.5)
}

/// Local Lax operator at site argument `lambda` (callers pass `λ/η_n`).
pub fn lax(q: Complex64, lambda: Complex64) -> Result<BlockOperator<SiteOperator>, OperatorError> {
    nonzero(lambda)?;
    let (xp, xm) = x_pm(q, lambda);
    let z = SiteOperator::pauli(PauliKind::Z);
    let w = q - 1.0 / q;
    Ok(BlockOperator {
        a: SiteOperator::IDENTITY.scale(xp).add(&z.scale(xm)),
        b: SiteOperator::pauli(PauliKind::Minus).scale(w),
        c: SiteOperator::pauli(PauliKind::Plus).scale(w),
        d: SiteOperator::IDENTITY.scale(xp).add(&z.scale(-xm)),
    })
}

/// The Lax operator as a block operator on a single site.
pub fn lax_block(q: Complex64, lambda: Complex64) -> Result<BlockOperator<Matrix>, OperatorError> {
    let l = lax(q, lambda)?;
    Ok(BlockOperator {
        a: l.a.to_matrix(),
        b: l.b.to_matrix(),
        c: l.c.to_matrix(),
        d: l.d.to_matrix(),
    })
}

/// Six-vertex R-matrix on `C² ⊗ C²`, basis `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn r_matrix(q: Complex64, lambda: Complex64) -> Result<Matrix, OperatorError> {
    nonzero(lambda)?;
    let a = lambda * q - 1.0 / (lambda * q);
    let b = lambda - 1.0 / lambda;
    let c = q - 1.0 / q;
    let mut r = Matrix::zeros(4, 4);
    r[(0, 0)] = a;
    r[(3, 3)] = a;
    r[(1, 1)] = b;
    r[(2, 2)] = b;
    r[(1, 2)] = c;
    r[(2, 1)] = c;
    Ok(r)
}

pub fn monodromy(params: &ModelParams, lambda: Complex64) -> Result<BlockOperator<Matrix>, OperatorError> {
    nonzero(lambda)?;
    let dim = params.dim();
    let mut m = BlockOperator {
        a: Matrix::identity(dim),
        b: Matrix::zeros(dim, dim),
        c: Matrix::zeros(dim, dim),
        d: Matrix::identity(dim),
    };
    for (k, &eta) in params.inhomogeneities().iter().enumerate() {
        let l = lax(params.q(), lambda / eta)?;
        let bit = 1usize << k;
        let mul = |x: &SiteOperator, y: &Matrix| apply_site_left(x, bit, y);
        m = BlockOperator {
            a: &mul(&l.a, &m.a) + &mul(&l.b, &m.c),
            b: &mul(&l.a, &m.b) + &mul(&l.b, &m.d),
            c: &mul(&l.c, &m.a) + &mul(&l.d, &m.c),
            d: &mul(&l.c, &m.b) + &mul(&l.d, &m.d),
        };
    }
    Ok(m)
}

/// `‖R₁₂(λ/μ) M₁(λ) M₂(μ) − M₂(μ) M₁(λ) R₁₂(λ/μ)‖_max / ‖R₁₂(λ/μ) M₁(λ) M₂(μ)‖_max`
/// on aux₁ ⊗ aux₂ ⊗ quantum.
pub fn yang_baxter_residual(
    q: Complex64,
    m_lambda: &BlockOperator<Matrix>,
    m_mu: &BlockOperator<Matrix>,
    ratio: Complex64,
) -> Result<f64, OperatorError> {
    let dim = m_lambda.a.rows();
    let n = 4 * dim;
    let idx = |i: usize, k: usize, x: usize| (i * 2 + k) * dim + x;
    let mut on1 = Matrix::zeros(n, n);
    let mut on2 = Matrix::zeros(n, n);
    let mut rr = Matrix::zeros(n, n);
    let r = r_matrix(q, ratio)?;
    for i in 0..2 {
        for j in 0..2 {
            let b1 = m_lambda.block(i, j);
            let b2 = m_mu.block(i, j);
            for k in 0..2 {
                for x in 0..dim {
                    for y in 0..dim {
                        on1[(idx(i, k, x), idx(j, k, y))] = b1[(x, y)];
                        on2[(idx(k, i, x), idx(k, j, y))] = b2[(x, y)];
                    }
                }
            }
        }
    }
    for s in 0..4 {
        for t in 0..4 {
            if r[(s, t)] != ZERO {
                for x in 0..dim {
                    rr[(s * dim + x, t * dim + x)] = r[(s, t)];
                }
            }
        }
    }
    let lhs = rr.matmul(&on1).matmul(&on2);
    let rhs = on2.matmul(&on1).matmul(&rr);
    Ok(lhs.max_abs_diff(&rhs) / lhs.max_abs().max(f64::MIN_POSITIVE))
}

/// Local Yang–Baxter residual for a single site.
pub fn local_yang_baxter_residual(q: Complex64, lambda: Complex64, mu: Complex64) -> Result<f64, OperatorError> {
    yang_baxter_residual(q, &lax_block(q, lambda)?, &lax_block(q, mu)?, lambda / mu)
}

pub fn global_yang_baxter_residual(params: &ModelParams, lambda: Complex64, mu: Complex64) -> Result<f64, OperatorError> {
    yang_baxter_residual(params.q(), &monodromy(params, lambda)?, &monodromy(params, mu)?, lambda / mu)
}

/// `T^{(α,b)}(λ) = tr₀[Σ^{(α,b)} M(λ)]`.
pub fn transfer_general(params: &ModelParams, lambda: Complex64, alpha: Complex64, b: u8) -> Result<Matrix, OperatorError> {
    Ok(monodromy(params, lambda)?.trace_with(&SiteOperator::twist(alpha, b)))
}

/// Periodic transfer matrix `T(λ) = A(λ) + D(λ)`.
pub fn transfer_periodic(params: &ModelParams, lambda: Complex64) -> Result<Matrix, OperatorError> {
    let m = monodromy(params, lambda)?;
    Ok(&m.a + &m.d)
}

/// Antiperiodic transfer matrix `T̄(λ) = B(λ) + C(λ)`.
pub fn transfer_antiperiodic(params: &ModelParams, lambda: Complex64) -> Result<Matrix, OperatorError> {
    let m = monodromy(params, lambda)?;
    Ok(&m.b + &m.c)
}

/// Exponents of the entries of `T̄(λ)`: `{−N+1, −N+3, …, N−1}`.
pub fn transfer_exponents(n_sites: usize) -> Vec<i32> {
    let n = n_sites as i32;
    (1..=n).map(|b| -n - 1 + 2 * b).collect()
}

/// An operator whose entries are Laurent polynomials on a common exponent set.
#[derive(Debug, Clone)]
pub struct OperatorLaurent {
    pub exponents: Vec<i32>,
    pub coeffs: Vec<Matrix>,
}

impl OperatorLaurent {
    /// Samples `f` at `exponents.len()` nodes spread over the unit circle and
    /// interpolates every entry.
    pub fn interpolate(
        exponents: &[i32],
        mut f: impl FnMut(Complex64) -> Result<Matrix, OperatorError>,
    ) -> Result<Self, OperatorError> {
        let m = exponents.len();
        // Same-parity exponents only see λ², so half the circle suffices.
        let arc = if exponents.iter().all(|e| (e - exponents[0]) % 2 == 0) { 1.0 } else { 2.0 };
        let nodes: Vec<Complex64> = (0..m)
            .map(|k| Complex64::from_polar(1.0, arc * std::f64::consts::PI * (k as f64 + 0.5) / m as f64))
            .collect();
        let samples: Vec<Matrix> = nodes.iter().map(|&x| f(x)).collect::<Result<_, _>>()?;
        let (rows, cols) = (samples[0].rows(), samples[0].cols());
        let values = Matrix::from_fn(m, rows * cols, |k, e| samples[k].as_slice()[e]);
        let c = interpolate_columns(&nodes, &values, exponents)?;
        let coeffs = (0..m)
            .map(|k| Matrix::from_fn(rows, cols, |i, j| c[(k, i * cols + j)]))
            .collect();
        Ok(Self {
            exponents: exponents.to_vec(),
            coeffs,
        })
    }

    pub fn eval(&self, lambda: Complex64) -> Matrix {
        let mut out = Matrix::zeros(self.coeffs[0].rows(), self.coeffs[0].cols());
        for (&e, c) in self.exponents.iter().zip(&self.coeffs) {
            out = &out + &c.scale(lambda.powi(e));
        }
        out
    }

    pub fn derivative_at(&self, lambda: Complex64) -> Matrix {
        let mut out = Matrix::zeros(self.coeffs[0].rows(), self.coeffs[0].cols());
        for (&e, c) in self.exponents.iter().zip(&self.coeffs) {
            if e != 0 {
                out = &out + &c.scale(lambda.powi(e - 1) * e as f64);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct QuantumDeterminant {
    /// `A(λ)D(λ/q) − B(λ)C(λ/q)`.
    pub operator: Matrix,
    /// `−a(λ)d(λ/q)`.
    pub scalar: Complex64,
}

pub fn quantum_determinant(params: &ModelParams, lambda: Complex64) -> Result<QuantumDeterminant, OperatorError> {
    let m = monodromy(params, lambda)?;
    let mq = monodromy(params, lambda / params.q())?;
    let operator = &m.a.matmul(&mq.d) - &m.b.matmul(&mq.c);
    let scalar = -eval_a(params, lambda)? * eval_d(params, lambda / params.q())?;
    Ok(QuantumDeterminant { operator, scalar })
}

/// Local determinant `A_n(λ)D_n(λ/q) − B_n(λ)C_n(λ/q)` of a single Lax operator.
pub fn local_quantum_determinant(q: Complex64, lambda: Complex64) -> Result<SiteOperator, OperatorError> {
    let l = lax(q, lambda)?;
    let lq = lax(q, lambda / q)?;
    Ok(l.a.matmul(&lq.d).add(&l.b.matmul(&lq.c).scale(-ONE)))
}

/// The overall sign `s` for which `A(λ)D(λ/q) − B(λ)C(λ/q) = −s·∏_n(λq/η_n − η_n/(λq))·d(λ/q)`,
/// read off numerically from the operator identity.
pub fn calibrate_a_sign(params: &ModelParams, lambda: Complex64) -> Result<f64, OperatorError> {
    let qd = quantum_determinant(params, lambda)?;
    let (_, value) = qd.operator.off_scalar_residual();
    let x = lambda * params.q();
    let product: Complex64 = params.inhomogeneities().iter().map(|&e| x / e - e / x).product();
    let s = -value / (product * eval_d(params, lambda / params.q())?);
    Ok(if s.re >= 0.0 { 1.0 } else { -1.0 })
}

#[derive(Debug, Clone)]
pub struct AntiperiodicDeterminant {
    /// `T̄(λ) T̄(λ/q)`.
    pub transfer_product: Matrix,
    /// `det M̄(λ) = B(λ)C(λ/q) − A(λ)D(λ/q)`.
    pub determinant: Matrix,
    pub at_node: bool,
}

pub fn antiperiodic_quantum_determinant(
    params: &ModelParams,
    lambda: Complex64,
) -> Result<AntiperiodicDeterminant, OperatorError> {
    let at_node = params
        .inhomogeneities()
        .iter()
        .any(|&e| (e - lambda).norm() <= 1e-12 * e.norm());
    if !at_node {
        log::warn!("antiperiodic determinant identity evaluated off the nodes at λ = {lambda}");
    }
    let m = monodromy(params, lambda)?;
    let mq = monodromy(params, lambda / params.q())?;
    let transfer_product = (&m.b + &m.c).matmul(&(&mq.b + &mq.c));
    let determinant = &m.b.matmul(&mq.c) - &m.a.matmul(&mq.d);
    Ok(AntiperiodicDeterminant {
        transfer_product,
        determinant,
        at_node,
    })
}

/// `σ L(λ)† σ` residual for the Lax Hermiticity property of each regime
/// (dagger in quantum space only):
/// massless `L(λ)† = σʸ L(λ*/q) σʸ`, massive `L(λ)† = σˣ L(−1/(λ*q)) σˣ`.
pub fn lax_hermiticity_residual(q: Complex64, lambda: Complex64, regime: Regime) -> Result<f64, OperatorError> {
    let (sigma, partner) = match regime {
        Regime::Massless => (SiteOperator::pauli(PauliKind::Y), lambda.conj() / q),
        Regime::Massive => (SiteOperator::pauli(PauliKind::X), -1.0 / (lambda.conj() * q)),
        Regime::Generic => return Err(OperatorError::Unsupported("Lax Hermiticity needs a normal regime")),
    };
    let l = lax_block(q, lambda)?;
    let dagger = BlockOperator {
        a: l.a.adjoint(),
        b: l.b.adjoint(),
        c: l.c.adjoint(),
        d: l.d.adjoint(),
    };
    let rhs = lax_block(q, partner)?.aux_sandwich(&sigma, &sigma);
    Ok(dagger.max_abs_diff(&rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalityReport {
    /// `‖T̄T̄† − T̄†T̄‖ / ‖T̄‖²`.
    pub normality_residual: f64,
    /// `‖X − X†‖ / ‖X‖` for the regime's self-adjoint family `X`.
    pub selfadjoint_residual: f64,
    /// Whether `λ` lies on the regime's self-adjoint locus.
    pub on_locus: bool,
}

/// Point on the self-adjoint locus: `t·q^{−1/2}` (massless, real `t`) or
/// `e^{it}q^{−1/2}` (massive), principal square root.
pub fn selfadjoint_locus_point(params: &ModelParams, t: f64) -> Result<Complex64, OperatorError> {
    let qh = params.q().sqrt();
    match params.regime() {
        Regime::Massless => Ok(Complex64::new(t, 0.0) / qh),
        Regime::Massive => Ok(Complex64::from_polar(1.0, t) / qh),
        Regime::Generic => Err(OperatorError::Unsupported("no self-adjoint locus in the generic regime")),
    }
}

/// Phase `c` such that `c·T̄(λ)` is self-adjoint on the locus.
pub fn selfadjoint_phase(params: &ModelParams) -> Result<Complex64, OperatorError> {
    match params.regime() {
        Regime::Massless => Ok(I),
        Regime::Massive => Ok(if params.parity_flag() == 1 { I } else { ONE }),
        Regime::Generic => Err(OperatorError::Unsupported("no self-adjoint family in the generic regime")),
    }
}

pub fn check_normality(params: &ModelParams, lambda: Complex64) -> Result<NormalityReport, OperatorError> {
    let phase = selfadjoint_phase(params)?;
    let t = transfer_antiperiodic(params, lambda)?;
    normality_of(params, &t, lambda, phase)
}

/// Residuals without regime restriction; used for negative controls.
pub fn normality_of(params: &ModelParams, t: &Matrix, lambda: Complex64, phase: Complex64) -> Result<NormalityReport, OperatorError> {
    let td = t.adjoint();
    let nt = t.norm_fro();
    let normality_residual = t.matmul(&td).max_abs_diff(&td.matmul(t)) / (nt * nt);
    let x = t.scale(phase);
    let selfadjoint_residual = x.max_abs_diff(&x.adjoint()) / nt;
    let z = lambda * params.q().sqrt();
    let on_locus = match params.regime() {
        Regime::Massless => z.im.abs() <= 1e-12 * z.norm(),
        Regime::Massive => (z.norm() - 1.0).abs() <= 1e-12,
        Regime::Generic => false,
    };
    Ok(NormalityReport {
        normality_residual,
        selfadjoint_residual,
        on_locus,
    })
}

/// Antiperiodic Hamiltonian from Pauli strings,
/// `H = Σ_n [σˣσˣ + σʸσʸ + ½(q+q⁻¹) σᶻσᶻ]_{n,n+1}` with `σ^a_{N+1} = ±σ^a_1`
/// (`+` for `x`, `−` for `y, z`).
pub fn hamiltonian_direct(params: &ModelParams) -> Result<Matrix, OperatorError> {
    let n = params.n_sites();
    if n < 2 {
        return Err(OperatorError::Unsupported("Hamiltonian needs at least two sites"));
    }
    let q = params.q();
    let delta = (q + 1.0 / q) * 0.5;
    let dim = params.dim();
    let mut h = Matrix::zeros(dim, dim);
    for site in 1..=n {
        let next = site % n + 1;
        let wrap = site == n;
        for (kind, coupling) in [(PauliKind::X, ONE), (PauliKind::Y, ONE), (PauliKind::Z, delta)] {
            let sign = if wrap && kind != PauliKind::X { -1.0 } else { 1.0 };
            let term = pauli(kind, site, params)?.matmul(&pauli(kind, next, params)?);
            h = &h + &term.scale(coupling * sign);
        }
    }
    Ok(h)
}

/// `H = (q − q⁻¹) T̄(1)⁻¹ T̄′(1) − N(q + q⁻¹)/2` for a homogeneous chain, with
/// `T̄′` from the exact Laurent coefficients of the entries.
pub fn hamiltonian_from_transfer(params: &ModelParams) -> Result<Matrix, OperatorError> {
    if !params.is_homogeneous(1e-12) {
        return Err(OperatorError::Unsupported("log-derivative Hamiltonian needs all inhomogeneities equal to 1"));
    }
    let q = params.q();
    let exps = transfer_exponents(params.n_sites());
    let t = OperatorLaurent::interpolate(&exps, |x| transfer_antiperiodic(params, x))?;
    let t1 = transfer_antiperiodic(params, ONE)?;
    let dt = t.derivative_at(ONE);
    let lu = lu_factor(&t1)?;
    let x = lu.solve(&dt).map_err(|_| OperatorError::Singular {
        condition: lu.condition_estimate(&t1),
    })?;
    let shift = Matrix::scalar(params.dim(), (q + 1.0 / q) * (params.n_sites() as f64 * 0.5));
    Ok(&x.scale(q - 1.0 / q) - &shift)
}

/// JSON dump of a dense operator, row-major with real and imaginary parts interleaved.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorDump {
    pub name: String,
    pub n_sites: usize,
    pub dim: usize,
    pub basis: String,
    #[serde(with = "json::complex")]
    pub lambda: Complex64,
    pub layout: String,
    pub data: Vec<f64>,
}

pub const BASIS_CONVENTION: &str = "sigma^z product states; site 1 is the least significant bit; spin up = 0";

impl OperatorDump {
    pub fn new(name: &str, params: &ModelParams, lambda: Complex64, m: &Matrix) -> Self {
        Self {
            name: name.to_string(),
            n_sites: params.n_sites(),
            dim: m.rows(),
            basis: BASIS_CONVENTION.to_string(),
            lambda,
            layout: "row-major, re/im interleaved".to_string(),
            data: m.as_slice().iter().flat_map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| {
            let k = 2 * (i * self.dim + j);
            Complex64::new(self.data[k], self.data[k + 1])
        })
    }
}
