use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("normal-mode instability; ω_− imaginary (4G² = {four_g2:.6e}, Δ_bd·ω_a = {product:.6e})")]
    Instability { four_g2: f64, product: f64 },

    #[error("steady state did not converge after {iterations} iterations (last residual {residual:.3e})")]
    SteadyStateNotConverged { iterations: usize, residual: f64 },

    #[error("argument out of validated range: {0}")]
    OutOfRange(String),

    #[error("no sign change in bracket [{lo}, {hi}] (f(lo) = {flo:.6e}, f(hi) = {fhi:.6e})")]
    NoSignChange { lo: f64, hi: f64, flo: f64, fhi: f64 },

    #[error("resonance condition violated: δ⁻ + Δ_m0 = {residual:.6e}")]
    Resonance { residual: f64 },

    #[error("mean-spin collapse; ξ² undefined")]
    MeanSpinCollapse,

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("representation {representation} cannot handle N = {n_spins}: {reason}")]
    Representation {
        representation: &'static str,
        n_spins: usize,
        reason: String,
    },

    #[error("positivity violated at t = {time:.6e}: minimum eigenvalue {min_eigenvalue:.3e}")]
    Positivity { time: f64, min_eigenvalue: f64 },

    #[error("integrator failure at t = {time:.6e}: {reason}")]
    Integrator { time: f64, reason: String },

    #[error("boson truncation not converged: moment change {change:.3e} on raising n_max {n_max} -> {n_max_check}")]
    Truncation {
        n_max: usize,
        n_max_check: usize,
        change: f64,
    },

    #[error("negative radicand {0:.3e} in closed-form squeezing (regime violation)")]
    NegativeRadicand(f64),

    #[error("optimum at t→∞ in asymptotic model (all rates zero)")]
    NoOptimum,

    #[error("degenerate fit data: {0}")]
    DegenerateFit(String),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Whether the error stems from user input rather than a failed computation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::Io { .. } | Error::InvalidParameter { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
