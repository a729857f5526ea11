use thiserror::Error;

/// Errors raised by the simulation and fitting routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum HitchError {
    /// An argument or parameter set violates a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A diagnostic is undefined for the given field (e.g. zero power).
    #[error("undefined diagnostics: {0}")]
    Undefined(String),

    /// Too much intensity reached the edges of the transverse window.
    #[error("edge leakage: {0}")]
    EdgeLeakage(String),

    /// The idler has not been generated (mode 2 identically zero).
    #[error("idler not yet generated")]
    IdlerAbsent,

    /// A propagation or diagnostic step failed at a given z.
    #[error("at z = {z}: {source}")]
    AtZ {
        z: f64,
        #[source]
        source: Box<HitchError>,
    },

    #[error("gain not attainable: {0}")]
    GainNotAttainable(String),

    /// Net gain was found to decrease with b inside the bracket.
    #[error("non-monotone gain curve near b = {b}; sweep: {sweep:?}")]
    NonMonotone { b: f64, sweep: Vec<(f64, f64)> },

    #[error("hitching onset not found: {0}")]
    OnsetNotFound(String),

    #[error("insufficient rows: {rows} rows for {params} free parameters")]
    InsufficientRows { rows: usize, params: usize },
}

impl HitchError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        HitchError::Parameter(msg.into())
    }

    pub(crate) fn at_z(self, z: f64) -> Self {
        match self {
            e @ HitchError::AtZ { .. } => e,
            e => HitchError::AtZ {
                z,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, with any z annotation stripped.
    pub fn root(&self) -> &HitchError {
        match self {
            HitchError::AtZ { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, HitchError>;
