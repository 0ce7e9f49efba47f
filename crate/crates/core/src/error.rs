use thiserror::Error;

/// Failures raised by the simulation, optimization and oracle layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("both coherent amplitudes are zero; normalized manifold vectors are undefined")]
    BothAmplitudesZero,

    #[error("total mean quanta {alpha_sq} exceeds the weak-excitation limit {limit}")]
    ExcitationTooStrong { alpha_sq: f64, limit: f64 },

    #[error("norm drift {drift:e} exceeds tolerance {tolerance:e}; integration step {step} is too large")]
    StepTooLarge { step: f64, drift: f64, tolerance: f64 },

    #[error("mode-1 population {n1:e} is below the floor {floor:e}; correlation undefined")]
    PopulationVanished { n1: f64, floor: f64 },

    #[error("coupling is still active at t = {t}; closed-form two-time correlation needs J = 0 after t")]
    CouplingActive { t: f64 },

    #[error("constant-coupling g2 has no interior minimum on [0, {window}]")]
    NoMinimumFound { window: f64 },

    #[error("coupling schedule does not tile [0, {tau_end}]: {reason}")]
    SegmentGap { tau_end: f64, reason: String },

    #[error("step-halving check failed: g2 = {coarse:e} vs {fine:e} (relative {relative:e})")]
    NotConverged { coarse: f64, fine: f64, relative: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
