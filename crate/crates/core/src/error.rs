use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not traceless (trace = {trace:e})")]
    NotTraceless { trace: f64 },
    #[error("Cartan triple does not sum to zero (sum = {sum:e})")]
    NotSumZero { sum: f64 },
    #[error("matrix is not symmetric (asymmetry = {asym:e})")]
    NotSymmetric { asym: f64 },
    #[error("matrix is not antisymmetric (symmetric part = {sym:e})")]
    NotAntisymmetric { sym: f64 },
    #[error("matrix is not a rotation (orthogonality defect = {defect:e}, det = {det})")]
    NotRotation { defect: f64, det: f64 },
    #[error("determinant {det} is not 1")]
    NotUnimodular { det: f64 },
    #[error("spectral parameter has imaginary part {imag:e}, expected a real covector")]
    NonRealSpectral { imag: f64 },
    #[error("spectral parameter imaginary part {imag:e} exceeds declared bound {bound:e}")]
    ImaginaryPartTooLarge { imag: f64, bound: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("element is regular, a singular element was required")]
    RegularElement,
    #[error("point is not critical (gradient residual {residual:e} > {tol:e})")]
    NotCritical { residual: f64, tol: f64 },
    #[error("continuation failed at scale {last_good_scale} (residual {residual:e})")]
    ContinuationFailed { last_good_scale: f64, residual: f64 },
    #[error("quadrature rule cache mismatch: {0}")]
    RuleCache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
