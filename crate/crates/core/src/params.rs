//! Model parameters of the inhomogeneous antiperiodic XXZ chain.
//!
//! A chain is fixed by its length `N`, the anisotropy `q` and the
//! inhomogeneities `η_1..η_N`. The scalar functions
//!
//! ```text
//! a(λ) = −∏_n (λq/η_n − η_n/(λq)),    d(λ) = ∏_n (λ/η_n − η_n/λ)
//! ```
//!
//! are the reference-state data of the monodromy matrix; with this sign the
//! quantum determinant is `A(λ)D(λ/q) − B(λ)C(λ/q) = −a(λ)d(λ/q)` and the
//! all-up state satisfies `A(λ)|0⟩ = −a(λ)|0⟩`, `D(λ)|0⟩ = d(λ)|0⟩`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::json;

/// Overall sign in front of the product defining `a(λ)`.
pub const A_SIGN: f64 = -1.0;

/// Relative tolerance used by [`validate_sov_condition`].
pub const SOV_RTOL: f64 = 1e-8;

/// Tolerance for the regime hypotheses (`|q| = 1`, real or unimodular `η`).
pub const REGIME_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamsError {
    #[error("n_sites must be at least 1")]
    NoSites,
    #[error("expected {expected} inhomogeneities, found {found}")]
    InhomogeneityCount { expected: usize, found: usize },
    #[error("q must not be 0, 1 or -1 (got {0})")]
    DegenerateQ(Complex64),
    #[error("inhomogeneity {site} is zero")]
    ZeroInhomogeneity { site: usize },
    #[error("non-finite parameter")]
    NonFinite,
    #[error("regime {regime:?} requires {requirement}")]
    Regime { regime: Regime, requirement: &'static str },
    #[error("spectral parameter must be nonzero")]
    ZeroArgument,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `|q| = 1`, real inhomogeneities.
    Massless,
    /// Real `q > 0`, unimodular inhomogeneities.
    Massive,
    Generic,
}

/// Comparison tolerances used by verification paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative tolerance for operator identities.
    pub operator: f64,
    /// Relative tolerance for determinant-formula comparisons.
    pub determinant: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            operator: 1e-10,
            determinant: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    n_sites: usize,
    q: Complex64,
    inhomogeneities: Vec<Complex64>,
    regime: Regime,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    n_sites: usize,
    #[serde(with = "json::complex")]
    q: Complex64,
    #[serde(with = "json::complex_vec")]
    inhomogeneities: Vec<Complex64>,
    regime: Regime,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = ParamsError;
    fn try_from(r: RawParams) -> Result<Self, ParamsError> {
        if r.inhomogeneities.len() != r.n_sites {
            return Err(ParamsError::InhomogeneityCount {
                expected: r.n_sites,
                found: r.inhomogeneities.len(),
            });
        }
        ModelParams::new(r.q, r.inhomogeneities, r.regime)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            n_sites: p.n_sites,
            q: p.q,
            inhomogeneities: p.inhomogeneities,
            regime: p.regime,
        }
    }
}

impl ModelParams {
    pub fn new(q: Complex64, inhomogeneities: Vec<Complex64>, regime: Regime) -> Result<Self, ParamsError> {
        let n = inhomogeneities.len();
        if n == 0 {
            return Err(ParamsError::NoSites);
        }
        if !q.is_finite() || inhomogeneities.iter().any(|e| !e.is_finite()) {
            return Err(ParamsError::NonFinite);
        }
        let one = Complex64::new(1.0, 0.0);
        if q.norm() == 0.0 || (q - one).norm() <= REGIME_TOL || (q + one).norm() <= REGIME_TOL {
            return Err(ParamsError::DegenerateQ(q));
        }
        if let Some(site) = inhomogeneities.iter().position(|e| e.norm() == 0.0) {
            return Err(ParamsError::ZeroInhomogeneity { site: site + 1 });
        }
        match regime {
            Regime::Massless => {
                if (q.norm() - 1.0).abs() > REGIME_TOL {
                    return Err(ParamsError::Regime {
                        regime,
                        requirement: "|q| = 1",
                    });
                }
                if inhomogeneities.iter().any(|e| e.im.abs() > REGIME_TOL * e.norm()) {
                    return Err(ParamsError::Regime {
                        regime,
                        requirement: "real inhomogeneities",
                    });
                }
            }
            Regime::Massive => {
                if q.im.abs() > REGIME_TOL * q.norm() || q.re <= 0.0 {
                    return Err(ParamsError::Regime {
                        regime,
                        requirement: "real positive q",
                    });
                }
                if inhomogeneities.iter().any(|e| (e.norm() - 1.0).abs() > REGIME_TOL) {
                    return Err(ParamsError::Regime {
                        regime,
                        requirement: "unimodular inhomogeneities",
                    });
                }
            }
            Regime::Generic => {}
        }
        Ok(Self {
            n_sites: n,
            q,
            inhomogeneities,
            regime,
        })
    }

    /// Homogeneous chain, all `η_n = 1`.
    pub fn homogeneous(n_sites: usize, q: Complex64) -> Result<Self, ParamsError> {
        let regime = if (q.norm() - 1.0).abs() <= REGIME_TOL {
            Regime::Massless
        } else if q.im.abs() <= REGIME_TOL * q.norm() && q.re > 0.0 {
            Regime::Massive
        } else {
            Regime::Generic
        };
        Self::new(q, vec![Complex64::new(1.0, 0.0); n_sites], regime)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Hilbert-space dimension `2^N`.
    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    pub fn inhomogeneities(&self) -> &[Complex64] {
        &self.inhomogeneities
    }

    /// `η_a` for a 1-based site index.
    pub fn eta(&self, site: usize) -> Complex64 {
        self.inhomogeneities[site - 1]
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// `e_N`: 1 for even `N`, 0 for odd.
    pub fn parity_flag(&self) -> u32 {
        u32::from(self.n_sites.is_multiple_of(2))
    }

    pub fn is_homogeneous(&self, tol: f64) -> bool {
        self.inhomogeneities.iter().all(|e| (e - 1.0).norm() <= tol)
    }

    pub fn with_q(&self, q: Complex64) -> Result<Self, ParamsError> {
        Self::new(q, self.inhomogeneities.clone(), self.regime)
    }

    /// Random parameters in the given regime that satisfy the SOV condition
    /// with a comfortable margin.
    pub fn random<R: Rng + ?Sized>(n_sites: usize, regime: Regime, rng: &mut R) -> Self {
        assert!(n_sites >= 1);
        loop {
            let (q, etas) = match regime {
                Regime::Massless => {
                    let q = Complex64::from_polar(1.0, rng.gen_range(0.3..1.2));
                    let etas = (0..n_sites)
                        .map(|k| Complex64::new(0.7 * 1.3f64.powi(k as i32) * rng.gen_range(0.93..1.07), 0.0))
                        .collect();
                    (q, etas)
                }
                Regime::Massive => {
                    let q = Complex64::new(rng.gen_range(1.2..1.8), 0.0);
                    let step = std::f64::consts::PI / n_sites as f64;
                    let etas = (0..n_sites)
                        .map(|k| Complex64::from_polar(1.0, step * (k as f64 + 0.5) + rng.gen_range(-0.2..0.2) * step))
                        .collect();
                    (q, etas)
                }
                Regime::Generic => {
                    let q = Complex64::from_polar(rng.gen_range(1.1..1.5), rng.gen_range(0.2..0.9));
                    let etas = (0..n_sites)
                        .map(|k| {
                            Complex64::from_polar(
                                0.8 * 1.2f64.powi(k as i32) * rng.gen_range(0.95..1.05),
                                rng.gen_range(-0.6..0.6),
                            )
                        })
                        .collect();
                    (q, etas)
                }
            };
            if let Ok(p) = Self::new(q, etas, regime) {
                if sov_margin(&p) > 0.1 {
                    return p;
                }
            }
        }
    }
}

/// A violated pair `η_b = ±q^j η_a`, sites 1-based with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SovViolation {
    pub a: usize,
    pub b: usize,
    pub j: i32,
    /// True for the `η_b = −q^j η_a` variant.
    pub negated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SovCondition {
    pub holds: bool,
    pub violations: Vec<SovViolation>,
}

/// Checks `η_b ≠ ±q^j η_a` for `j ∈ {−1, 0, 1}` and all `a < b`.
///
/// Every construction depends on the inhomogeneities only through `η²`, so
/// the sign-flipped coincidences are excluded as well.
pub fn validate_sov_condition(params: &ModelParams) -> SovCondition {
    validate_sov_condition_with(params, SOV_RTOL)
}

pub fn validate_sov_condition_with(params: &ModelParams, rtol: f64) -> SovCondition {
    let mut violations = Vec::new();
    let etas = params.inhomogeneities();
    let q = params.q();
    for a in 0..etas.len() {
        for b in a + 1..etas.len() {
            for j in -1..=1 {
                let target = q.powi(j) * etas[a];
                let scale = etas[b].norm().max(target.norm());
                for negated in [false, true] {
                    let t = if negated { -target } else { target };
                    if (etas[b] - t).norm() <= rtol * scale {
                        violations.push(SovViolation {
                            a: a + 1,
                            b: b + 1,
                            j,
                            negated,
                        });
                    }
                }
            }
        }
    }
    SovCondition {
        holds: violations.is_empty(),
        violations,
    }
}

/// Smallest relative distance `|η_a² − q^{2j}η_b²|/|η_a²|` over all pairs.
pub fn sov_margin(params: &ModelParams) -> f64 {
    let etas = params.inhomogeneities();
    let q = params.q();
    let mut m = f64::INFINITY;
    for a in 0..etas.len() {
        for b in a + 1..etas.len() {
            for j in -1..=1 {
                let ea2 = etas[a] * etas[a];
                let r = (ea2 - q.powi(2 * j) * etas[b] * etas[b]).norm() / ea2.norm();
                m = m.min(r);
            }
        }
    }
    m
}

/// `a(λ) = A_SIGN · ∏_n (λq/η_n − η_n/(λq))`.
pub fn eval_a(params: &ModelParams, lambda: Complex64) -> Result<Complex64, ParamsError> {
    if lambda.norm() == 0.0 {
        return Err(ParamsError::ZeroArgument);
    }
    let x = lambda * params.q();
    Ok(params
        .inhomogeneities()
        .iter()
        .map(|&e| x / e - e / x)
        .product::<Complex64>()
        * A_SIGN)
}

/// `d(λ) = ∏_n (λ/η_n − η_n/λ)`.
pub fn eval_d(params: &ModelParams, lambda: Complex64) -> Result<Complex64, ParamsError> {
    if lambda.norm() == 0.0 {
        return Err(ParamsError::ZeroArgument);
    }
    Ok(params
        .inhomogeneities()
        .iter()
        .map(|&e| lambda / e - e / lambda)
        .product())
}
