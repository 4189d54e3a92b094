use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared across the estimation pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("no observation receives positive kernel weight near u0={u0} (h={h})")]
    DegenerateWindow { u0: f64, h: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("penalty scale undefined: nhp={nhp} (needs nhp > 1)")]
    InvalidScale { nhp: f64 },

    #[error("max_j sum_i w_i^2 x_ij^2 = 0; penalty is undefined on an all-zero design")]
    ZeroDesign,

    #[error(
        "solver did not converge after {iters} iterations \
         (objective {objective:.6e}, kkt gap {kkt_gap:.3e})"
    )]
    NonConvergence {
        iters: usize,
        objective: f64,
        kkt_gap: f64,
    },

    #[error("refit support is empty")]
    EmptySupport,

    #[error("restricted design is singular or flat")]
    SingularRefit,

    #[error("Powell bandwidth {h_p} leaves tau={tau} +/- h_p outside (0,1)")]
    BandwidthOverflow { tau: f64, h_p: f64 },

    #[error("all residuals are equal; the residual bandwidth would be zero")]
    DegenerateResiduals,

    #[error("weights sum to zero")]
    ZeroWeights,

    #[error("every w_i * f_hat_i vanishes; the plug-in Hessian is zero")]
    AllZeroDensity,

    #[error("V11 block is numerically singular (condition {cond:.3e})")]
    SingularV11 { cond: f64 },

    #[error("score covariance is numerically singular even after ridge regularization")]
    DegenerateScoreCov,

    #[error("negative variance {0} passed to confidence interval construction")]
    NegativeVariance(f64),

    #[error("R^2 calibration failed: {0}")]
    CalibrationFailure(String),
}

impl Error {
    /// Stable machine-readable category, used in report files.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DegenerateWindow { .. } => "degenerate_window",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::InvalidInput(_) => "invalid_input",
            Error::InvalidScale { .. } => "invalid_scale",
            Error::ZeroDesign => "zero_design",
            Error::NonConvergence { .. } => "non_convergence",
            Error::EmptySupport => "empty_support",
            Error::SingularRefit => "singular_refit",
            Error::BandwidthOverflow { .. } => "bandwidth_overflow",
            Error::DegenerateResiduals => "degenerate_residuals",
            Error::ZeroWeights => "zero_weights",
            Error::AllZeroDensity => "all_zero_density",
            Error::SingularV11 { .. } => "singular_v11",
            Error::DegenerateScoreCov => "degenerate_score_cov",
            Error::NegativeVariance(_) => "negative_variance",
            Error::CalibrationFailure(_) => "calibration_failure",
        }
    }

    /// True for data/window problems (as opposed to numerical failures).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::DegenerateWindow { .. }
                | Error::DimensionMismatch(_)
                | Error::InvalidInput(_)
                | Error::InvalidScale { .. }
                | Error::ZeroDesign
                | Error::EmptySupport
                | Error::ZeroWeights
        )
    }
}
