//! Command pipelines behind the `xxz-sov` binary.
//!
//! A run reads one JSON config (either a bare parameter document or
//! `{"params": …, "tolerances": …, "operator": …, "sites": […], "pairs": …}`),
//! executes one command and renders JSON or CSV. Exit codes: 0 success,
//! 1 I/O failure, 2 configuration error, 3 SOV condition violated,
//! 4 numerical failure or a failed check.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::json;
use crate::observables::{
    compare_form_factors, dense_m_point, m_point_function, orthogonality_kernel_residual,
    relative_error, scalar_product, sigma_x_strings, FormFactorComparison, ObservablesError, ReconstructionFlavor,
    Reconstructor, SeparateState, SpectralData,
};
use crate::operators::{
    check_normality, global_yang_baxter_residual, hamiltonian_direct, hamiltonian_from_transfer, lax_hermiticity_residual,
    local_yang_baxter_residual, monodromy, quantum_determinant, selfadjoint_locus_point, transfer_antiperiodic,
    transfer_periodic, OperatorDump, OperatorError, PauliKind, SiteOperator,
};
use crate::oracle::{eig, pairing, vec_norm, Matrix};
use crate::params::{eval_a, eval_d, validate_sov_condition, ModelParams, ParamsError, Regime, SovViolation, Tolerances};
use crate::sov::{
    action_residual, coupling_residual, diagonalization_residual, identity_residual, Side, SovBases,
    SovBasisDump, SovError, Variable,
};
use crate::spectrum::{
    detect_root_of_unity, random_spectral_point, root_of_unity_check, tq_polynomial_check, NodeValue, SpectrumError,
    NEWTON_TOL,
};

/// Largest chain accepted without `--allow-large`.
pub const MAX_SITES: usize = 8;
/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "XXZ_SOV_THREADS";
/// Spectral points at which assembled eigenstates are checked.
pub const VERIFY_POINTS: usize = 5;
/// Default threshold for eigenvalue and eigenstate residuals.
pub const SPECTRUM_TOL: f64 = 1e-9;
/// Default threshold for the Hamiltonian comparison.
pub const HAMILTONIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("SOV condition violated: {}", format_violations(.0))]
    Sov(Vec<SovViolation>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

fn format_violations(v: &[SovViolation]) -> String {
    v.iter()
        .map(|x| {
            let sign = if x.negated { "-" } else { "" };
            format!("eta_{} = {sign}q^{} eta_{}", x.b, x.j, x.a)
        })
        .collect::<Vec<_>>()
        .join(", ")
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::Sov(_) => 3,
            Self::Numerical(_) => 4,
        }
    }
}

impl From<ParamsError> for CliError {
    fn from(e: ParamsError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<SovError> for CliError {
    fn from(e: SovError) -> Self {
        match e {
            SovError::Violation(v) => Self::Sov(v),
            SovError::Params(p) => p.into(),
            other => Self::Numerical(other.to_string()),
        }
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::Sov(s) => s.into(),
            SpectrumError::Params(p) => p.into(),
            other => Self::Numerical(other.to_string()),
        }
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        match e {
            OperatorError::Params(p) => p.into(),
            other => Self::Numerical(other.to_string()),
        }
    }
}

impl From<ObservablesError> for CliError {
    fn from(e: ObservablesError) -> Self {
        match e {
            ObservablesError::Spectrum(s) => s.into(),
            ObservablesError::Sov(s) => s.into(),
            ObservablesError::Params(p) => p.into(),
            ObservablesError::SiteOutOfRange { .. } => Self::Config(e.to_string()),
            other => Self::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    ScalarProduct,
    FormFactor,
    Hamiltonian,
    Verify,
}

impl Command {
    pub const ALL: [Self; 5] = [Self::Spectrum, Self::ScalarProduct, Self::FormFactor, Self::Hamiltonian, Self::Verify];

    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::ScalarProduct => "scalar-product",
            Self::FormFactor => "form-factor",
            Self::Hamiltonian => "hamiltonian",
            Self::Verify => "verify",
        }
    }

    pub fn supports_csv(self) -> bool {
        matches!(self, Self::Spectrum | Self::ScalarProduct | Self::FormFactor)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(Self::Json),
            Some("csv") => Ok(Self::Csv),
            _ => Err(CliError::Config(format!("output `{}` must end in .json or .csv", path.display()))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDocument {
    params: ModelParams,
    tolerances: Option<Tolerances>,
    operator: Option<String>,
    sites: Option<Vec<usize>>,
    pairs: Option<usize>,
}

/// A parsed and validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub command: Command,
    pub tolerances: Tolerances,
    /// Overrides the threshold of the command's main comparison.
    pub tol: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub seed: u64,
    pub operator: Option<PauliKind>,
    pub sites: Vec<usize>,
    /// Random separate-state pairs for `scalar-product`.
    pub pairs: usize,
    pub allow_large: bool,
}

impl RunConfig {
    /// Parse a config document for `command`; command-line overrides are applied afterwards.
    pub fn from_json(command: Command, text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let doc = if value.get("params").is_some() {
            serde_json::from_value::<ConfigDocument>(value).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            ConfigDocument {
                params: serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?,
                tolerances: None,
                operator: None,
                sites: None,
                pairs: None,
            }
        };
        let operator = doc.operator.as_deref().map(parse_operator).transpose()?;
        let sites = doc.sites.unwrap_or_else(|| (1..=doc.params.n_sites()).collect());
        Ok(Self {
            command,
            tolerances: doc.tolerances.unwrap_or_default(),
            tol: None,
            output: None,
            format: OutputFormat::Json,
            seed: 0,
            operator,
            sites,
            pairs: doc.pairs.unwrap_or(50),
            allow_large: false,
            params: doc.params,
        })
    }

    pub fn load(command: Command, path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(command, &text)
    }

    pub fn with_output(mut self, path: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(p) = &path {
            self.format = OutputFormat::from_path(p)?;
        }
        self.output = path;
        Ok(self)
    }

    /// Command-specific requirements.
    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.params.n_sites();
        if n > MAX_SITES && !self.allow_large {
            return Err(CliError::Config(format!("N = {n} exceeds {MAX_SITES}; pass --allow-large to override")));
        }
        if self.format == OutputFormat::Csv && !self.command.supports_csv() {
            return Err(CliError::Config(format!("{} has no CSV output", self.command)));
        }
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Config(format!("tolerance must be positive, got {t}")));
            }
        }
        if let Some(s) = self.sites.iter().find(|&&s| s == 0 || s > n) {
            return Err(CliError::Config(format!("site {s} outside 1..={n}")));
        }
        if self.command == Command::FormFactor {
            match self.operator {
                Some(PauliKind::Minus | PauliKind::Z) => {}
                Some(other) => return Err(CliError::Config(format!("no form-factor formula for {other}"))),
                None => return Err(CliError::Config("form-factor requires an operator (sigma_minus or sigma_z)".into())),
            }
            if self.sites.is_empty() {
                return Err(CliError::Config("form-factor requires at least one site".into()));
            }
        }
        if self.command == Command::Hamiltonian && !self.params.is_homogeneous(1e-12) {
            return Err(CliError::Config("hamiltonian requires all inhomogeneities equal to 1".into()));
        }
        Ok(())
    }

    fn threshold(&self) -> f64 {
        self.tol.unwrap_or(match self.command {
            Command::Spectrum => SPECTRUM_TOL,
            Command::Hamiltonian => HAMILTONIAN_TOL,
            _ => self.tolerances.determinant,
        })
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

pub fn parse_operator(s: &str) -> Result<PauliKind, CliError> {
    s.parse::<PauliKind>().map_err(CliError::Config)
}

/// `"re"` or `"re,im"`.
pub fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let bad = || CliError::Config(format!("cannot parse `{s}` as a complex number (use re or re,im)"));
    let mut parts = s.split(',').map(|p| p.trim().parse::<f64>());
    let re = parts.next().ok_or_else(bad)?.map_err(|_| bad())?;
    let im = match parts.next() {
        Some(x) => x.map_err(|_| bad())?,
        None => 0.0,
    };
    if parts.next().is_some() || !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

/// Rendered result of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub pass: bool,
    pub json: String,
    pub csv: Option<String>,
}

impl CommandOutput {
    pub fn render(&self, format: OutputFormat) -> &str {
        match (format, &self.csv) {
            (OutputFormat::Csv, Some(c)) => c,
            _ => &self.json,
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Numerical(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Numerical(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Numerical(e.to_string()))
}

fn require_sov(params: &ModelParams) -> Result<(), CliError> {
    let c = validate_sov_condition(params);
    if c.holds {
        Ok(())
    } else {
        Err(CliError::Sov(c.violations))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRecord {
    pub index: usize,
    #[serde(with = "json::complex_vec")]
    pub coeffs: Vec<Complex64>,
    /// `t(η_a)` and `t(η_a/q)` per node.
    pub node_values: Vec<NodeValue>,
    /// Relative discrete-system residual after Newton polishing.
    pub residual: f64,
    /// Eigenstate backward error at the verification points.
    pub verify_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub command: Command,
    pub params: ModelParams,
    pub seed: u64,
    pub expected_count: usize,
    pub count: usize,
    pub threshold: f64,
    pub pass: bool,
    pub eigenvalues: Vec<SpectrumRecord>,
}

#[derive(Serialize)]
struct SpectrumCsvRow {
    index: usize,
    coefficient: usize,
    re: f64,
    im: f64,
    residual: f64,
    verify_residual: f64,
}

pub fn run_spectrum(config: &RunConfig) -> Result<CommandOutput, CliError> {
    require_sov(&config.params)?;
    let mut rng = config.rng();
    let data = SpectralData::build(&config.params, VERIFY_POINTS, &mut rng)?;
    let threshold = config.threshold();
    let eigenvalues: Vec<SpectrumRecord> = data
        .pairs
        .iter()
        .enumerate()
        .map(|(index, p)| SpectrumRecord {
            index,
            coeffs: p.value.coeffs.clone(),
            node_values: p.value.node_values.clone(),
            residual: p.value.residual,
            verify_residual: p.verify_residual,
        })
        .collect();
    let expected_count = config.params.dim();
    let pass = eigenvalues.len() == expected_count
        && eigenvalues
            .iter()
            .all(|r| r.residual < threshold && r.verify_residual < threshold);
    let csv_rows: Vec<SpectrumCsvRow> = eigenvalues
        .iter()
        .flat_map(|r| {
            r.coeffs.iter().enumerate().map(move |(b, c)| SpectrumCsvRow {
                index: r.index,
                coefficient: b + 1,
                re: c.re,
                im: c.im,
                residual: r.residual,
                verify_residual: r.verify_residual,
            })
        })
        .collect();
    let report = SpectrumReport {
        command: Command::Spectrum,
        params: config.params.clone(),
        seed: config.seed,
        expected_count,
        count: eigenvalues.len(),
        threshold,
        pass,
        eigenvalues,
    };
    Ok(CommandOutput {
        pass,
        json: to_json(&report)?,
        csv: Some(to_csv(&csv_rows)?),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FormFactorRow {
    pub t_fingerprint: usize,
    pub t_prime_fingerprint: usize,
    pub operator: PauliKind,
    pub site: usize,
    pub re: f64,
    pub im: f64,
    pub dense_re: f64,
    pub dense_im: f64,
    pub rel_err: f64,
}

impl From<&FormFactorComparison> for FormFactorRow {
    fn from(c: &FormFactorComparison) -> Self {
        Self {
            t_fingerprint: c.left,
            t_prime_fingerprint: c.right,
            operator: c.operator,
            site: c.site,
            re: c.value.re,
            im: c.value.im,
            dense_re: c.dense.re,
            dense_im: c.dense.im,
            rel_err: c.rel_err,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FormFactorReport {
    pub command: Command,
    pub params: ModelParams,
    pub seed: u64,
    pub operator: PauliKind,
    pub sites: Vec<usize>,
    pub threshold: f64,
    pub max_rel_err: f64,
    pub pass: bool,
    pub rows: Vec<FormFactorRow>,
}

pub fn run_form_factor(config: &RunConfig) -> Result<CommandOutput, CliError> {
    config.validate()?;
    require_sov(&config.params)?;
    let kind = config.operator.expect("validated");
    let mut rng = config.rng();
    let data = SpectralData::build(&config.params, VERIFY_POINTS, &mut rng)?;
    let rows: Vec<FormFactorRow> = compare_form_factors(&config.params, &data.pairs, kind, &config.sites)?
        .iter()
        .map(FormFactorRow::from)
        .collect();
    let threshold = config.threshold();
    let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let pass = rows.iter().all(|r| r.rel_err < threshold);
    let report = FormFactorReport {
        command: Command::FormFactor,
        params: config.params.clone(),
        seed: config.seed,
        operator: kind,
        sites: config.sites.clone(),
        threshold,
        max_rel_err,
        pass,
        rows: rows.clone(),
    };
    Ok(CommandOutput {
        pass,
        json: to_json(&report)?,
        csv: Some(to_csv(&rows)?),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarProductRow {
    pub pair: usize,
    pub re: f64,
    pub im: f64,
    pub dense_re: f64,
    pub dense_im: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarProductReport {
    pub command: Command,
    pub params: ModelParams,
    pub seed: u64,
    pub threshold: f64,
    pub max_rel_err: f64,
    pub pass: bool,
    pub rows: Vec<ScalarProductRow>,
}

/// Determinant pairings of random separate states against dense pairings.
pub fn scalar_product_rows(params: &ModelParams, pairs: usize, rng: &mut impl Rng) -> Result<Vec<ScalarProductRow>, CliError> {
    let bases = SovBases::build(params)?;
    let states: Vec<(SeparateState, SeparateState)> = (0..pairs)
        .map(|_| (SeparateState::random(params, Side::Left, rng), SeparateState::random(params, Side::Right, rng)))
        .collect();
    states
        .par_iter()
        .enumerate()
        .map(|(pair, (a, b))| {
            let value = scalar_product(params, a, b)?;
            let (va, vb) = (a.assemble(params, &bases), b.assemble(params, &bases));
            let dense = pairing(&va, &vb).map_err(|e| CliError::Numerical(e.to_string()))?;
            Ok(ScalarProductRow {
                pair,
                re: value.re,
                im: value.im,
                dense_re: dense.re,
                dense_im: dense.im,
                rel_err: relative_error(value, dense, vec_norm(&va) * vec_norm(&vb)),
            })
        })
        .collect()
}

pub fn run_scalar_product(config: &RunConfig) -> Result<CommandOutput, CliError> {
    require_sov(&config.params)?;
    let mut rng = config.rng();
    let rows = scalar_product_rows(&config.params, config.pairs, &mut rng)?;
    let threshold = config.threshold();
    let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let pass = rows.iter().all(|r| r.rel_err < threshold);
    let report = ScalarProductReport {
        command: Command::ScalarProduct,
        params: config.params.clone(),
        seed: config.seed,
        threshold,
        max_rel_err,
        pass,
        rows: rows.clone(),
    };
    Ok(CommandOutput {
        pass,
        json: to_json(&report)?,
        csv: Some(to_csv(&rows)?),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HamiltonianReport {
    pub command: Command,
    pub params: ModelParams,
    /// `‖H_transfer − H_direct‖_F / ‖H_direct‖_F`.
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Spectrum of the direct Hamiltonian, sorted by real then imaginary part.
    #[serde(with = "json::complex_vec")]
    pub energies: Vec<Complex64>,
}

fn relative_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm_fro() / b.norm_fro()
}

pub fn run_hamiltonian(config: &RunConfig) -> Result<CommandOutput, CliError> {
    config.validate()?;
    let h_direct = hamiltonian_direct(&config.params)?;
    let h_transfer = hamiltonian_from_transfer(&config.params)?;
    let residual = relative_frobenius(&h_transfer, &h_direct);
    let mut energies = eig(&h_direct).map_err(|e| CliError::Numerical(e.to_string()))?.eigenvalues;
    for e in &mut energies {
        // normalize signed zeros and sub-ulp noise for stable output
        *e = Complex64::new(round_sig(e.re), round_sig(e.im));
    }
    energies.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let threshold = config.threshold();
    let pass = residual < threshold;
    let report = HamiltonianReport {
        command: Command::Hamiltonian,
        params: config.params.clone(),
        residual,
        threshold,
        pass,
        energies,
    };
    Ok(CommandOutput {
        pass,
        json: to_json(&report)?,
        csv: None,
    })
}

fn round_sig(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub command: Command,
    pub params: ModelParams,
    pub seed: u64,
    pub checks: Vec<VerifyCheck>,
    /// Checks not applicable to this configuration.
    pub skipped: Vec<String>,
    pub pass: bool,
}

#[derive(Default)]
struct Checks {
    checks: Vec<VerifyCheck>,
    skipped: Vec<String>,
}

impl Checks {
    fn push(&mut self, name: &str, residual: f64, threshold: f64) {
        log::info!("{name}: {residual:.3e} (threshold {threshold:.0e})");
        self.checks.push(VerifyCheck {
            name: name.to_string(),
            residual,
            threshold,
            pass: residual < threshold,
        });
    }

    fn skip(&mut self, name: &str) {
        self.skipped.push(name.to_string());
    }
}

fn is_pole(e: &ObservablesError) -> bool {
    matches!(e, ObservablesError::PrefactorPole { .. } | ObservablesError::SingularDeterminant { .. })
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

/// The full identity suite at the configured size.
pub fn run_verify_report(config: &RunConfig) -> Result<VerifyReport, CliError> {
    let p = &config.params;
    let n = p.n_sites();
    let tol = config.tolerances;
    let det_tol = config.tol.unwrap_or(tol.determinant);
    let mut rng = config.rng();
    let mut c = Checks::default();

    let points: Vec<(Complex64, Complex64)> = (0..5)
        .map(|_| (random_spectral_point(p, &mut rng), random_spectral_point(p, &mut rng)))
        .collect();
    let mut local = 0.0f64;
    let mut global = 0.0f64;
    for &(l, m) in &points {
        local = local.max(local_yang_baxter_residual(p.q(), l, m)?);
        global = global.max(global_yang_baxter_residual(p, l, m)?);
    }
    c.push("yang_baxter_local", local, 1e-12);
    c.push("yang_baxter_global", global, 1e-12);

    let mut qdet = 0.0f64;
    for _ in 0..5 {
        let l = random_spectral_point(p, &mut rng);
        let d = quantum_determinant(p, l)?;
        let s = d.scalar.norm();
        qdet = qdet.max(d.operator.max_abs_diff(&Matrix::scalar(p.dim(), d.scalar)) / s);
    }
    c.push("quantum_determinant", qdet, tol.operator);

    match p.regime() {
        Regime::Generic => c.skip("normality"),
        regime => {
            let mut normal = 0.0f64;
            let mut selfadj = 0.0f64;
            let mut lax = 0.0f64;
            for k in 0..3 {
                let t = match regime {
                    Regime::Massless => 0.6 + 0.4 * k as f64,
                    _ => 0.3 + 1.7 * k as f64,
                };
                let l = selfadjoint_locus_point(p, t)?;
                let r = check_normality(p, l)?;
                normal = normal.max(r.normality_residual);
                selfadj = selfadj.max(r.selfadjoint_residual);
                lax = lax.max(lax_hermiticity_residual(p.q(), random_spectral_point(p, &mut rng), regime)?);
            }
            c.push("lax_hermiticity", lax, 1e-12);
            c.push("normality", normal, 1e-12);
            c.push("self_adjointness", selfadj, 1e-12);
        }
    }

    let q = p.q();
    let mut rp3 = 0.0f64;
    let mut rap3 = 0.0f64;
    for &e in p.inhomogeneities() {
        let dm = -eval_a(p, e)? * eval_d(p, e / q)?;
        let tt = transfer_periodic(p, e)?.matmul(&transfer_periodic(p, e / q)?);
        rp3 = rp3.max(tt.max_abs_diff(&Matrix::scalar(p.dim(), dm)) / dm.norm());
        let m = monodromy(p, e)?;
        let mq = monodromy(p, e / q)?;
        let det_bar = &m.b.matmul(&mq.c) - &m.a.matmul(&mq.d);
        let tb = transfer_antiperiodic(p, e)?.matmul(&transfer_antiperiodic(p, e / q)?);
        rap3 = rap3.max(tb.max_abs_diff(&det_bar) / dm.norm());
    }
    c.push("periodic_determinant_at_nodes", rp3, tol.operator);
    c.push("antiperiodic_determinant_at_nodes", rap3, tol.operator);

    let ops = [
        SiteOperator::pauli(PauliKind::Minus),
        SiteOperator::pauli(PauliKind::Plus),
        SiteOperator::pauli(PauliKind::Z),
        SiteOperator::pauli(PauliKind::X),
        SiteOperator::IDENTITY,
    ];
    let sov_holds = validate_sov_condition(p).holds;
    let reconstruction_names = [
        (ReconstructionFlavor::Antiperiodic1, "reconstruction_antiperiodic_1"),
        (ReconstructionFlavor::Antiperiodic2, "reconstruction_antiperiodic_2"),
        (ReconstructionFlavor::Periodic1, "reconstruction_periodic_1"),
        (ReconstructionFlavor::Periodic2, "reconstruction_periodic_2"),
    ];
    // Coinciding shifted nodes put poles in the reconstruction formulas.
    match Reconstructor::new(p) {
        Ok(rec) => {
            for (flavor, name) in reconstruction_names {
                let mut r = 0.0f64;
                for x in &ops {
                    for site in 1..=n {
                        r = r.max(rec.residual(x, site, flavor)?);
                    }
                }
                c.push(name, r, 1e-9);
            }
        }
        Err(e) if !sov_holds && is_pole(&e) => reconstruction_names.iter().for_each(|(_, name)| c.skip(name)),
        Err(e) => return Err(e.into()),
    }
    match sigma_x_strings(p) {
        Ok(strings) => c.push("sigma_x_string", max_of(strings.iter().map(|s| s.residual())), 1e-9),
        Err(e) if !sov_holds && is_pole(&e) => c.skip("sigma_x_string"),
        Err(e) => return Err(e.into()),
    }

    if n >= 2 && p.is_homogeneous(1e-12) {
        let h = relative_frobenius(&hamiltonian_from_transfer(p)?, &hamiltonian_direct(p)?);
        c.push("hamiltonian", h, HAMILTONIAN_TOL);
    } else {
        c.skip("hamiltonian");
    }

    if sov_holds {
        verify_sov_suite(config, &mut c, &mut rng, det_tol)?;
    } else {
        for name in ["sov_bases", "sov_actions", "coupling", "identity_decomposition", "spectrum", "scalar_products", "form_factors", "tq_bethe", "root_of_unity", "m_point"] {
            c.skip(name);
        }
    }

    let pass = c.checks.iter().all(|x| x.pass);
    Ok(VerifyReport {
        command: Command::Verify,
        params: p.clone(),
        seed: config.seed,
        checks: c.checks,
        skipped: c.skipped,
        pass,
    })
}

fn verify_sov_suite(config: &RunConfig, c: &mut Checks, rng: &mut ChaCha8Rng, det_tol: f64) -> Result<(), CliError> {
    let p = &config.params;
    let n = p.n_sites();
    let dim = p.dim();
    let tol = config.tolerances;

    let mut diag = 0.0f64;
    let mut action = 0.0f64;
    for variable in [Variable::D, Variable::A] {
        let l = random_spectral_point(p, rng);
        diag = diag.max(diagonalization_residual(p, variable, l)?);
        let x: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        action = action.max(action_residual(p, variable, l, &x)?);
    }
    c.push("sov_bases", diag, tol.operator);
    c.push("sov_actions", action, 1e-9);

    let bases = SovBases::build(p)?;
    c.push("coupling", coupling_residual(p, &bases), tol.operator);
    c.push("identity_decomposition", identity_residual(p, &bases), tol.operator);

    let data = SpectralData::build(p, VERIFY_POINTS, rng)?;
    let count = data.len();
    c.push("spectrum_count", (count as f64 - dim as f64).abs(), 0.5);
    let distinct = (0..count).all(|i| (0..i).all(|j| data.pairs[i].value.distance(&data.pairs[j].value) > 1e-6));
    c.push("spectrum_simple", if distinct { 0.0 } else { 1.0 }, 0.5);
    c.push("discrete_system", max_of(data.pairs.iter().map(|x| x.value.residual)), NEWTON_TOL);
    c.push("eigenstates", max_of(data.pairs.iter().map(|x| x.verify_residual)), SPECTRUM_TOL);
    let mut orth = 0.0f64;
    let mut kernel = 0.0f64;
    for (i, a) in data.pairs.iter().enumerate() {
        for (j, b) in data.pairs.iter().enumerate() {
            if i == j {
                continue;
            }
            let s = pairing(&a.left_state, &b.right_state).map_err(|e| CliError::Numerical(e.to_string()))?;
            orth = orth.max(s.norm() / (vec_norm(&a.left_state) * vec_norm(&b.right_state)));
            kernel = kernel.max(orthogonality_kernel_residual(p, &a.value, &b.value)?);
        }
    }
    c.push("eigenstate_orthogonality", orth, 1e-10);
    c.push("orthogonality_kernel", kernel, 1e-10);
    let sp = scalar_product_rows(p, 20, rng)?;
    c.push("scalar_products", max_of(sp.iter().map(|r| r.rel_err)), det_tol);
    let sites: Vec<usize> = (1..=n).collect();
    for (kind, name) in [(PauliKind::Minus, "form_factor_sigma_minus"), (PauliKind::Z, "form_factor_sigma_z")] {
        let rows = compare_form_factors(p, &data.pairs, kind, &sites)?;
        c.push(name, max_of(rows.iter().map(|r| r.rel_err)), det_tol);
    }
    let v: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    c.push("identity_insertion", data.identity_insertion_residual(&v)?, 1e-9);

    if n <= 4 {
        let ops = [(PauliKind::Z, 1), (PauliKind::Minus, n), (PauliKind::Z, n)];
        let mut r = 0.0f64;
        for m in 1..=ops.len() {
            for (i, pair) in data.pairs.iter().enumerate() {
                let s = m_point_function(p, &data, i, &ops[..m])?;
                let d = dense_m_point(p, pair, &ops[..m])?;
                let scale = vec_norm(&pair.left_state) * vec_norm(&pair.right_state) / pairing(&pair.left_state, &pair.right_state).map_err(|e| CliError::Numerical(e.to_string()))?.norm();
                r = r.max(relative_error(s, d, scale));
            }
        }
        c.push("m_point", r, 1e-7);
    } else {
        c.skip("m_point");
    }

    if n.is_multiple_of(2) {
        let mut ns = 0.0f64;
        let mut tq = 0.0f64;
        let mut bethe = 0.0f64;
        for pair in &data.pairs {
            let r = tq_polynomial_check(p, &pair.value, rng)?;
            ns = ns.max((r.nullspace_dim as f64 - 1.0).abs());
            tq = tq.max(r.tq_residual);
            bethe = bethe.max(max_of(r.bethe_residuals.iter().flatten().copied()));
        }
        c.push("tq_nullspace_dim", ns, 0.5);
        c.push("tq_relation", tq, 1e-8);
        c.push("bethe_equations", bethe, 1e-6);
    } else {
        c.skip("tq_bethe");
    }

    if detect_root_of_unity(p.q()).is_some() {
        let samples: Vec<Complex64> = (0..10)
            .map(|_| Complex64::from_polar(rng.gen_range(0.7..1.4), rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let mut r = 0.0f64;
        for pair in &data.pairs {
            r = r.max(root_of_unity_check(p, &pair.value, &samples)?.max_relative_det);
        }
        c.push("root_of_unity", r, 1e-8);
    } else {
        c.skip("root_of_unity");
    }
    Ok(())
}

pub fn run_verify(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let report = run_verify_report(config)?;
    Ok(CommandOutput {
        pass: report.pass,
        json: to_json(&report)?,
        csv: None,
    })
}

/// Validate and dispatch.
pub fn run(config: &RunConfig) -> Result<CommandOutput, CliError> {
    config.validate()?;
    match config.command {
        Command::Spectrum => run_spectrum(config),
        Command::ScalarProduct => run_scalar_product(config),
        Command::FormFactor => run_form_factor(config),
        Command::Hamiltonian => run_hamiltonian(config),
        Command::Verify => run_verify(config),
    }
}

/// Name of the transfer-matrix dump file.
pub const OPERATOR_DUMP_FILE: &str = "transfer_operator.json";
/// Name of the SOV-basis dump file.
pub const SOV_BASIS_DUMP_FILE: &str = "sov_basis.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SovBasesDump {
    pub left: SovBasisDump,
    pub right: SovBasisDump,
}

/// Write `T̄(λ)` to `dir/transfer_operator.json`.
pub fn dump_operator(params: &ModelParams, lambda: Complex64, dir: &Path) -> Result<PathBuf, CliError> {
    let t = transfer_antiperiodic(params, lambda)?;
    let dump = OperatorDump::new("antiperiodic_transfer", params, lambda, &t);
    let path = dir.join(OPERATOR_DUMP_FILE);
    fs::write(&path, to_json(&dump)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Write the left and right D-bases to `dir/sov_basis.json`.
pub fn dump_sov_basis(params: &ModelParams, dir: &Path) -> Result<PathBuf, CliError> {
    let bases = SovBases::build(params)?;
    let dump = SovBasesDump {
        left: (&bases.left).into(),
        right: (&bases.right).into(),
    };
    let path = dir.join(SOV_BASIS_DUMP_FILE);
    fs::write(&path, to_json(&dump)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Run, write the artifact (to `config.output` or stdout) and return the exit code.
pub fn execute(config: &RunConfig) -> i32 {
    let out = match run(config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let text = out.render(config.format);
    match &config.output {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                let err = CliError::Io(format!("{}: {e}", path.display()));
                eprintln!("error: {err}");
                return err.exit_code();
            }
        }
        None => print!("{text}"),
    }
    if out.pass {
        0
    } else {
        eprintln!("error: {}", CliError::Numerical(format!("{} checks did not pass", config.command)));
        4
    }
}

/// Parse `XXZ_SOV_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{s}`"))),
        },
        Err(_) => Ok(None),
    }
}
