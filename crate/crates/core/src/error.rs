use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("position list is empty")]
    EmptyPositions,

    #[error("ions {i} and {j} coincide")]
    CoincidentIons { i: usize, j: usize },

    #[error("minimizer did not converge after {iterations} iterations (max |grad| = {gradient:.3e} m*omega^2*L)")]
    NotConverged { iterations: usize, gradient: f64 },

    #[error("state is not a local minimum (lowest curvature {0:.3e} rad^2/s^2)")]
    NotLocalMin(f64),

    #[error("depinning bracket [{lo:.6e}, {hi:.6e}] N does not contain the restoring force")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("no order-parameter change between eta = {lo:.6e} and {hi:.6e} rad/s")]
    NoTransition { lo: f64, hi: f64 },

    #[error("mode {index} has frequency {freq:.3e} rad/s, below the gap tolerance")]
    ZeroFrequencyMode { index: usize, freq: f64 },

    #[error("fluctuation system is unstable (max Re = {0:.3e} kappa)")]
    Unstable(f64),

    #[error("Lyapunov equation is near singular (eigenvalue margin {0:.3e} kappa)")]
    NearSingular(f64),

    #[error("Lyapunov residual {residual:.3e} exceeds {limit:.3e}")]
    Residual { residual: f64, limit: f64 },

    #[error("spectrum is not finite at nu = {0:.6e} rad/s")]
    NonFiniteSpectrum(f64),

    #[error("line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
