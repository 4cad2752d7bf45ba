use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the numerical pipeline.
///
/// Variant names double as stable diagnostic identifiers; see [`Error::name`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("delta kernels have no pointwise time-domain value; use the delta weight")]
    DeltaKernelNotPointwise,
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("tabulated kernel has no rational Laplace representation")]
    TabulatedNotRational,
    #[error("tabulated kernel cannot be embedded as auxiliary Markovian modes")]
    TabulatedNotEmbeddable,
    #[error("quadrature did not reach tolerance (estimated error {estimate:e} after {panels} panels)")]
    QuadratureNonConvergence { estimate: f64, panels: usize },
    #[error("environment contains no reservoir")]
    EmptyEnvironment,
    #[error("total friction kernel vanishes")]
    ZeroFriction,
    #[error("repeated pole near s = {0}")]
    RepeatedPole(f64),
    #[error("pole with positive real part {0}")]
    UnstablePole(f64),
    #[error("attenuation exponent stays below one; no coherence time")]
    NoDecoherence,
    #[error("covariance integration failed: {0}")]
    IntegratorFailure(String),
    #[error("phase-space grid too small: {0}")]
    GridTooSmall(String),
    #[error("time step too large: {0}")]
    StepTooLarge(String),
    #[error("normalization drifted by {0:e}")]
    NormalizationDrift(f64),
    #[error("interference peak below floating-point floor")]
    PeakBelowFloor,
    #[error("trap frequency {0} rad/s outside the configured range")]
    FrequencyOutOfRange(f64),
    #[error("ambient spectrum is not flat (reduced chi-square {0:.3})")]
    InconsistentFlatness(f64),
    #[error("spectral fit did not converge: {0}")]
    FitNonConvergence(String),
    #[error("fitted correlation times {0:e} and {1:e} are within 5%")]
    DegenerateComponents(f64, f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Stable identifier used on diagnostic output.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DeltaKernelNotPointwise => "DeltaKernelNotPointwise",
            Error::NegativeTime(_) => "NegativeTime",
            Error::TabulatedNotRational => "TabulatedNotRational",
            Error::TabulatedNotEmbeddable => "TabulatedNotEmbeddable",
            Error::QuadratureNonConvergence { .. } => "QuadratureNonConvergence",
            Error::EmptyEnvironment => "EmptyEnvironment",
            Error::ZeroFriction => "ZeroFriction",
            Error::RepeatedPole(_) => "RepeatedPole",
            Error::UnstablePole(_) => "UnstablePole",
            Error::NoDecoherence => "NoDecoherence",
            Error::IntegratorFailure(_) => "IntegratorFailure",
            Error::GridTooSmall(_) => "GridTooSmall",
            Error::StepTooLarge(_) => "StepTooLarge",
            Error::NormalizationDrift(_) => "NormalizationDrift",
            Error::PeakBelowFloor => "PeakBelowFloor",
            Error::FrequencyOutOfRange(_) => "FrequencyOutOfRange",
            Error::InconsistentFlatness(_) => "InconsistentFlatness",
            Error::FitNonConvergence(_) => "FitNonConvergence",
            Error::DegenerateComponents(..) => "DegenerateComponents",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || !t.is_finite() {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}
