//! Complex Laurent polynomials with an optional parity constraint.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::oracle::{lu_factor, LinalgError, Matrix};

/// Largest acceptable one-norm condition number for an interpolation system.
pub const MAX_INTERPOLATION_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    pub fn admits(self, exponent: i32) -> bool {
        match self {
            Parity::Even => exponent.rem_euclid(2) == 0,
            Parity::Odd => exponent.rem_euclid(2) == 1,
            Parity::None => true,
        }
    }

    /// The parity shared by every exponent of the set, `None` when mixed.
    pub fn of_exponents(exponents: &[i32]) -> Parity {
        if !exponents.is_empty() && exponents.iter().all(|&k| Parity::Even.admits(k)) {
            Parity::Even
        } else if !exponents.is_empty() && exponents.iter().all(|&k| Parity::Odd.admits(k)) {
            Parity::Odd
        } else {
            Parity::None
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LaurentError {
    #[error("exponent {exponent} violates declared parity {parity:?}")]
    Parity { exponent: i32, parity: Parity },
    #[error("evaluation at zero with negative exponents")]
    ZeroArgument,
    #[error("nodes, values and exponents differ in length ({nodes}, {values}, {exponents})")]
    Length { nodes: usize, values: usize, exponents: usize },
    #[error("interpolation node {index} is zero or repeated")]
    BadNode { index: usize },
    #[error("interpolation system is ill-conditioned (condition estimate {condition:e})")]
    Conditioning { condition: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i32, Complex64>,
    parity: Parity,
}

impl LaurentPoly {
    pub fn new(coeffs: BTreeMap<i32, Complex64>, parity: Parity) -> Result<Self, LaurentError> {
        if let Some(&exponent) = coeffs.keys().find(|&&k| !parity.admits(k)) {
            return Err(LaurentError::Parity { exponent, parity });
        }
        Ok(Self { coeffs, parity })
    }

    pub fn from_pairs(pairs: &[(i32, Complex64)], parity: Parity) -> Result<Self, LaurentError> {
        let mut coeffs = BTreeMap::new();
        for &(k, c) in pairs {
            *coeffs.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Self::new(coeffs, parity)
    }

    pub fn coeffs(&self) -> &BTreeMap<i32, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, exponent: i32) -> Complex64 {
        self.coeffs.get(&exponent).copied().unwrap_or_default()
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn min_exp(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn eval(&self, lambda: Complex64) -> Result<Complex64, LaurentError> {
        if lambda.norm() == 0.0 {
            if self.coeffs.keys().any(|&k| k < 0) {
                return Err(LaurentError::ZeroArgument);
            }
            return Ok(self.coeff(0));
        }
        Ok(self.coeffs.iter().map(|(&k, &c)| c * lambda.powi(k)).sum())
    }

    pub fn derivative(&self) -> LaurentPoly {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(&k, _)| k != 0)
            .map(|(&k, &c)| (k - 1, c * k as f64))
            .collect();
        let parity = match self.parity {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::None => Parity::None,
        };
        LaurentPoly { coeffs, parity }
    }
}

/// Generalized Vandermonde matrix `V_{ik} = nodes_i^{exponents_k}`.
pub fn vandermonde(nodes: &[Complex64], exponents: &[i32]) -> Matrix {
    Matrix::from_fn(nodes.len(), exponents.len(), |i, k| nodes[i].powi(exponents[k]))
}

/// Coefficients `c_k` with `Σ_k c_k nodes_i^{e_k} = values[i][j]` for every
/// column `j` of `values` (one solve, many right-hand sides).
pub fn interpolate_columns(nodes: &[Complex64], values: &Matrix, exponents: &[i32]) -> Result<Matrix, LaurentError> {
    if nodes.len() != exponents.len() || values.rows() != nodes.len() {
        return Err(LaurentError::Length {
            nodes: nodes.len(),
            values: values.rows(),
            exponents: exponents.len(),
        });
    }
    for (i, &x) in nodes.iter().enumerate() {
        if x.norm() == 0.0 || nodes[..i].iter().any(|&y| (x - y).norm() <= 1e-14 * x.norm()) {
            return Err(LaurentError::BadNode { index: i });
        }
    }
    let v = vandermonde(nodes, exponents);
    let lu = lu_factor(&v).expect("square by construction");
    let condition = lu.condition_estimate(&v);
    if condition.is_nan() || condition > MAX_INTERPOLATION_CONDITION {
        return Err(LaurentError::Conditioning { condition });
    }
    lu.solve(values).map_err(|e| match e {
        LinalgError::Singular { .. } => LaurentError::Conditioning {
            condition: f64::INFINITY,
        },
        other => panic!("unexpected solve failure: {other}"),
    })
}

/// The Laurent polynomial supported on `exponents` through the given samples.
pub fn laurent_interpolate(nodes: &[Complex64], values: &[Complex64], exponents: &[i32]) -> Result<LaurentPoly, LaurentError> {
    if values.len() != nodes.len() {
        return Err(LaurentError::Length {
            nodes: nodes.len(),
            values: values.len(),
            exponents: exponents.len(),
        });
    }
    let rhs = Matrix::from_fn(values.len(), 1, |i, _| values[i]);
    let c = interpolate_columns(nodes, &rhs, exponents)?;
    let pairs: Vec<(i32, Complex64)> = exponents.iter().enumerate().map(|(k, &e)| (e, c[(k, 0)])).collect();
    LaurentPoly::from_pairs(&pairs, Parity::of_exponents(exponents))
}

/// `{−m, −m+2, …, m}`.
pub fn symmetric_exponents(m: i32) -> Vec<i32> {
    (0..=m).map(|k| -m + 2 * k).collect()
}
