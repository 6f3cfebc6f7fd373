//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate frame: input vectors have rank deficiency at tolerance {tol}")]
    DegenerateFrame { tol: f64 },

    #[error("grid too small: need at least {min} nodes per direction, got {nu}x{nv}")]
    GridTooSmall { nu: usize, nv: usize, min: usize },

    #[error("chart is not isothermal: worst node ({iu},{iv}) has |E-G|/lambda^2 = {e_minus_g:.3e}, |F|/lambda^2 = {f:.3e} (tolerance {tol:.1e})")]
    NonIsothermal {
        iu: usize,
        iv: usize,
        e_minus_g: f64,
        f: f64,
        tol: f64,
    },

    #[error("unknown example `{0}`")]
    UnknownExample(String),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("immersion degenerate at node ({iu},{iv}): conformal factor {lambda:.3e} <= 0")]
    DegenerateImmersion { iu: usize, iv: usize, lambda: f64 },

    #[error("surface grid format error: {0}")]
    Format(String),

    #[error("position at node ({iu},{iv}) is off the ambient sphere: |x| = {norm} but 1/sqrt(c) = {radius}")]
    OffSphere {
        iu: usize,
        iv: usize,
        norm: f64,
        radius: f64,
    },

    #[error("matrix is not orthogonal within {tol:.1e}")]
    NotOrthogonal { tol: f64 },

    #[error("rigid motions of the sphere (c > 0) cannot carry a translation")]
    SphereTranslation,

    #[error("normal space has rank < 2 at node ({iu},{iv})")]
    DegenerateNormal { iu: usize, iv: usize },

    #[error("curvature data inconsistent at node ({iu},{iv}): clamped magnitude {value:.3e} below -{tol:.1e}")]
    AxesInconsistent { iu: usize, iv: usize, value: f64, tol: f64 },

    #[error("curvature ellipse is a circle at node ({iu},{iv}); principal frames are undefined")]
    CirclePoint { iu: usize, iv: usize },

    #[error("mean curvature vector is not parallel: residuals r- = {r_minus:.3e}, r+ = {r_plus:.3e} exceed {tol:.1e}")]
    NotParallelMeanCurvature { r_minus: f64, r_plus: f64, tol: f64 },

    #[error("reconstruction is only supported for c = 0 (the frame equation would live in SO(5))")]
    CurvedAmbientReconstruction,

    #[error("frame integration inconsistent: path independence {defect:.3e} exceeds 10x the structure-equation residual scale {scale:.3e}")]
    IntegrationInconsistent { defect: f64, scale: f64 },

    #[error("degenerate point covariance; surfaces cannot be aligned")]
    DegenerateCovariance,

    #[error("grids differ; operation requires both surfaces on the same chart grid")]
    GridMismatch,

    #[error("trusted region {{|H| > threshold}} is disconnected; the normal bundle isometry is not determined")]
    DisconnectedTrustedRegion,

    #[error("surfaces do not have the same mean curvature: {0}")]
    MeanCurvatureMismatch(String),

    #[error("pair is not a valid same-mean-curvature pair: ratio q/phi leaves the unit circle about 1 by {0:.3e}")]
    NotOnCircle(f64),

    #[error("surface is not Lagrangian: max |f*Omega|/lambda^2 = {0:.3e}")]
    NotLagrangian(f64),

    #[error("operation requires c = 0, got c = {0}")]
    CurvedAmbient(f64),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
