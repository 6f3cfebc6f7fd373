//! Per-surface analysis reports (the Report JSON of the pipeline).

use serde::Serialize;

use crate::error::Result;
use crate::gaussmap;
use crate::immersion::ImmersionGrid;
use crate::invariants::{
    analyze_pointwise, euler_numbers, ricci_like_residuals, vertical_harmonicity_residual,
    EulerReport, SurfaceAnalysis,
};
use crate::lagrangian::{self, KahlerStructure};

#[derive(Debug, Clone, Serialize)]
pub struct ResidualBlock {
    /// Vertical-harmonicity residuals of the two Gauss lifts.
    pub r_minus: f64,
    pub r_plus: f64,
    /// Laplace-identity residuals for the lift with the smaller
    /// vertical-harmonicity residual.
    #[serde(rename = "R3")]
    pub r3: f64,
    #[serde(rename = "R4")]
    pub r4: f64,
    pub lift_sign: i8,
}

#[derive(Debug, Clone, Serialize)]
pub struct LagrangianBlock {
    pub max_residual: f64,
    pub holo_res_upsilon: f64,
    pub holo_res_theta: f64,
    pub upsilon_max: f64,
    pub theta_max: f64,
    pub isotropy_residual: f64,
    pub maslov_loop_u: f64,
    pub maslov_loop_v: f64,
    /// Set when the cubic differential vanishes identically, i.e. the
    /// surface is superconformal Lagrangian.
    pub superconformal: bool,
}

/// Summary of one surface; byte-stable given identical input.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceReport {
    #[serde(rename = "K_range")]
    pub k_range: [f64; 2],
    #[serde(rename = "K_N_range")]
    pub k_n_range: [f64; 2],
    #[serde(rename = "H_norm_range")]
    pub h_norm_range: [f64; 2],
    pub lambda1_range: [f64; 2],
    pub lambda2_range: [f64; 2],
    pub residuals: ResidualBlock,
    pub euler: EulerReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lagrangian: Option<LagrangianBlock>,
}

fn trusted_range(values: &[f64], trusted: &[bool]) -> [f64; 2] {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (v, t) in values.iter().zip(trusted.iter()) {
        if *t {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    [lo, hi]
}

/// Run the full pointwise pipeline and summarize.
pub fn analyze_surface(surface: &ImmersionGrid) -> Result<(SurfaceReport, SurfaceAnalysis)> {
    let analysis = analyze_pointwise(surface)?;
    let (r_minus, r_plus) = vertical_harmonicity_residual(&analysis.hd, &analysis.fd);
    let lift_sign: i8 = if r_minus <= r_plus { -1 } else { 1 };
    let ricci = ricci_like_residuals(&analysis.fd, &analysis.cd, lift_sign);
    let euler = euler_numbers(&analysis.fd, &analysis.cd, &analysis.hd);

    let lagrangian = if surface.c == 0.0 {
        let jets = surface.jets()?;
        let structure = KahlerStructure::standard();
        let test = lagrangian::lagrangian_test(&jets, &analysis.fd, &structure);
        let worst = test.iter().fold(0.0f64, |m, &x| m.max(x));
        if worst < lagrangian::LAGRANGIAN_TOL {
            let data =
                lagrangian::lagrangian_differentials(&jets, &analysis.fd, &analysis.hd, &structure)?;
            // superconformal Lagrangian surfaces are exactly those whose
            // cubic differential vanishes identically
            let coeff_scale = analysis
                .fd
                .lambda
                .iter()
                .fold(0.0f64, |m, &l| m.max(l * l * l));
            Some(LagrangianBlock {
                max_residual: worst,
                holo_res_upsilon: data.holo_res_upsilon,
                holo_res_theta: data.holo_res_theta,
                upsilon_max: data.upsilon_max,
                theta_max: data.theta_max,
                isotropy_residual: data.isotropy_residual,
                maslov_loop_u: data.maslov_loop_u,
                maslov_loop_v: data.maslov_loop_v,
                superconformal: data.theta_max < 1e-10 * coeff_scale.max(1e-300),
            })
        } else {
            None
        }
    } else {
        None
    };

    let report = SurfaceReport {
        k_range: trusted_range(&analysis.cd.k, &analysis.fd.trusted),
        k_n_range: trusted_range(&analysis.cd.k_n, &analysis.fd.trusted),
        h_norm_range: trusted_range(&analysis.fd.h_norm, &analysis.fd.trusted),
        lambda1_range: trusted_range(&analysis.cd.lambda1, &analysis.fd.trusted),
        lambda2_range: trusted_range(&analysis.cd.lambda2, &analysis.fd.trusted),
        residuals: ResidualBlock {
            r_minus,
            r_plus,
            r3: ricci.max3,
            r4: ricci.max4,
            lift_sign,
        },
        euler,
        lagrangian,
    };
    Ok((report, analysis))
}

/// Byte-stable JSON rendering of the report.
pub fn report_json(report: &SurfaceReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Gauss map summary used by the CLI when `c = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct GaussMapBlock {
    pub jacobian_identity_k: f64,
    pub jacobian_identity_k_n: f64,
    pub great_circle_minus: f64,
    pub great_circle_plus: f64,
}

pub fn gauss_map_block(surface: &ImmersionGrid, analysis: &SurfaceAnalysis) -> Result<GaussMapBlock> {
    let jets = surface.jets()?;
    let gm = gaussmap::gauss_map(&jets, &analysis.fd)?;
    let (rk, rkn) = gaussmap::jacobian_residuals(&gm, &analysis.fd, &analysis.cd);
    Ok(GaussMapBlock {
        jacobian_identity_k: rk,
        jacobian_identity_k_n: rkn,
        great_circle_minus: gaussmap::great_circle_residual(&gm.g_minus),
        great_circle_plus: gaussmap::great_circle_residual(&gm.g_plus),
    })
}
