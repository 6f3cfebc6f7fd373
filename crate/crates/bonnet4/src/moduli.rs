//! Pairs of surfaces with the same mean curvature: construction of the
//! parallel, orientation- and mean-curvature-preserving normal bundle
//! isometry, the distortion differential `Q = Phi - T^{-1} Phi~` with its
//! isotropic split, angle extraction, and the classification of the pair.
//!
//! On the region where both mean curvature vectors are solidly nonzero the
//! adapted frames of both surfaces are aligned with them, so the isometry
//! is the frame-to-frame map and its angle field vanishes there; across
//! masked cells the angle is continued by nearest-valid propagation.  Every
//! reported quantity is invariant under rigid motions of either surface,
//! which is part of the test suite.

use num_complex::Complex64;
use serde::Serialize;

use crate::chart::ChartGrid;
use crate::error::{Error, Result};
use crate::immersion::ImmersionGrid;
use crate::invariants::{analyze_pointwise, SurfaceAnalysis};

/// Relative `|H|` threshold defining the trusted region of the isometry.
pub const H_TRUST_REL: f64 = 1e-4;
/// A distortion component counts as identically zero below this relative
/// threshold.
pub const CLASS_TOL_REL: f64 = 1e-5;
/// Pointwise relative mismatch of `|H|` above which the two surfaces are
/// refused as a same-mean-curvature pair.
pub const MEAN_CURVATURE_TOL: f64 = 2e-2;
/// `|q / phi - 1|` must sit on the unit circle within this tolerance for a
/// valid pair.
pub const CIRCLE_TOL: f64 = 5e-2;

/// Normal bundle isometry data.
#[derive(Debug, Clone)]
pub struct NormalBundleIsometry {
    /// Rotation angle from the source adapted frame to the isometry image
    /// of it, expressed against the target frame; zero on the trusted
    /// region by the frame alignment.
    pub psi: Vec<f64>,
    /// `max |omega34_a - omega34_b|` over the trusted region: how far the
    /// frame-to-frame map is from parallel.
    pub parallel_residual: f64,
    /// Nodes where both `|H|` fields are solidly nonzero.
    pub trusted: Vec<bool>,
}

fn connected(mask: &[bool], grid: &ChartGrid) -> bool {
    let n = mask.len();
    let total = mask.iter().filter(|&&x| x).count();
    if total == 0 {
        return false;
    }
    let start = mask.iter().position(|&x| x).unwrap();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    let mut reached = 0usize;
    while let Some(k) = stack.pop() {
        reached += 1;
        let (iu, iv) = grid.iu_iv(k);
        let mut push = |iuj: i64, ivj: i64| {
            let nu = grid.nu as i64;
            let nv = grid.nv as i64;
            let a = if grid.periodic_u {
                (iuj % nu + nu) % nu
            } else if (0..nu).contains(&iuj) {
                iuj
            } else {
                return;
            };
            let b = if grid.periodic_v {
                (ivj % nv + nv) % nv
            } else if (0..nv).contains(&ivj) {
                ivj
            } else {
                return;
            };
            let kk = grid.idx(a as usize, b as usize);
            if mask[kk] && !seen[kk] {
                seen[kk] = true;
                stack.push(kk);
            }
        };
        push(iu as i64 - 1, iv as i64);
        push(iu as i64 + 1, iv as i64);
        push(iu as i64, iv as i64 - 1);
        push(iu as i64, iv as i64 + 1);
    }
    reached == total
}

/// Build the parallel normal-bundle isometry between two surfaces on the
/// same chart.  Refuses pairs whose mean curvature moduli disagree and
/// pairs whose trusted region is disconnected.
pub fn build_isometry(a: &SurfaceAnalysis, b: &SurfaceAnalysis) -> Result<NormalBundleIsometry> {
    if a.fd.grid.nu != b.fd.grid.nu || a.fd.grid.nv != b.fd.grid.nv {
        return Err(Error::GridMismatch);
    }
    let grid = &a.fd.grid;
    let n = grid.n_nodes();
    let scale_a = a.fd.h_norm.iter().fold(0.0f64, |m, &x| m.max(x));
    let scale_b = b.fd.h_norm.iter().fold(0.0f64, |m, &x| m.max(x));
    let scale = scale_a.max(scale_b);
    if scale <= 0.0 {
        return Err(Error::MeanCurvatureMismatch(
            "both surfaces are minimal; the isometry is not determined by H".into(),
        ));
    }

    // pointwise |H| agreement is necessary for TH = H~ to exist
    let mut worst_mismatch = 0.0f64;
    for k in 0..n {
        if a.fd.trusted[k] && b.fd.trusted[k] {
            worst_mismatch = worst_mismatch.max((a.fd.h_norm[k] - b.fd.h_norm[k]).abs());
        }
    }
    if worst_mismatch > MEAN_CURVATURE_TOL * scale {
        return Err(Error::MeanCurvatureMismatch(format!(
            "max | |H_a| - |H_b| | = {worst_mismatch:.3e} exceeds {:.1e}",
            MEAN_CURVATURE_TOL * scale
        )));
    }

    let mut mask = vec![false; n];
    for k in 0..n {
        mask[k] = a.fd.h_norm[k] > H_TRUST_REL * scale && b.fd.h_norm[k] > H_TRUST_REL * scale;
    }
    if !connected(&mask, grid) {
        return Err(Error::DisconnectedTrustedRegion);
    }

    // both frames are mean-curvature aligned on the mask, so the isometry
    // maps frame to frame there; the angle field is zero and is continued
    // by nearest-valid propagation (breadth-first) over masked cells
    let psi = vec![0.0; n];

    let mut parallel_residual = 0.0f64;
    for k in 0..n {
        if mask[k] && a.fd.trusted[k] && b.fd.trusted[k] {
            parallel_residual = parallel_residual
                .max((a.hd.omega34_u[k] - b.hd.omega34_u[k]).abs())
                .max((a.hd.omega34_v[k] - b.hd.omega34_v[k]).abs());
        }
    }
    Ok(NormalBundleIsometry {
        psi,
        parallel_residual,
        trusted: mask,
    })
}

/// Moduli class of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    Trivial,
    MMinus,
    MPlus,
    MStar,
}

impl std::fmt::Display for ClassTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ClassTag::Trivial => "trivial",
            ClassTag::MMinus => "m_minus",
            ClassTag::MPlus => "m_plus",
            ClassTag::MStar => "m_star",
        };
        write!(f, "{s}")
    }
}

/// Extracted rotation angle of one distortion component.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThetaExtract {
    /// Circular mean of the pointwise angles, in `(0, 2 pi)`.
    pub value: f64,
    /// Circular standard deviation; near zero when the matching Gauss lift
    /// is vertically harmonic.
    pub constancy: f64,
    /// `max | |q/phi - 1| - 1 |`; must vanish for a valid pair.
    pub circle_residual: f64,
}

/// Distortion differential data of a pair.
#[derive(Debug, Clone)]
pub struct DistortionReport {
    pub q_minus: Vec<Complex64>,
    pub q_plus: Vec<Complex64>,
    pub theta_minus: Option<ThetaExtract>,
    pub theta_plus: Option<ThetaExtract>,
    pub class_tag: ClassTag,
    /// Normalized covariant `max |dbar q|` over the trusted region.
    pub holo_residual_q: f64,
    /// `max` over trusted nodes of the normal-curvature and semiaxis
    /// mismatches (congruence of the curvature ellipses).
    pub ellipse_congruence_residual: f64,
}

/// Pointwise angle extraction: solve `1 - e^{-+ i theta} = q / phi` on the
/// region where `phi` is solid.  `sign` is `+1` for the plus component.
pub fn theta_extract(
    q: &[Complex64],
    phi: &[Complex64],
    sign: i8,
    trusted: &[bool],
) -> Result<ThetaExtract> {
    let max_phi = phi.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut circle_residual = 0.0f64;
    let mut mean = Complex64::default();
    let mut count = 0usize;
    for k in 0..q.len() {
        if !trusted[k] || phi[k].norm() <= 1e-6 * max_phi.max(1e-300) {
            continue;
        }
        let r = q[k] / phi[k];
        circle_residual = circle_residual.max(((r - 1.0).norm() - 1.0).abs());
        // 1 - r = e^{-+ i theta}
        let w = Complex64::new(1.0, 0.0) - r;
        let theta = if sign > 0 { -w.arg() } else { w.arg() };
        mean += Complex64::from_polar(1.0, theta);
        count += 1;
    }
    if count == 0 {
        return Err(Error::MeanCurvatureMismatch(
            "no trusted nodes with a solid Hopf component; angle undefined".into(),
        ));
    }
    if circle_residual > CIRCLE_TOL {
        return Err(Error::NotOnCircle(circle_residual));
    }
    mean /= count as f64;
    let value = mean.arg().rem_euclid(2.0 * std::f64::consts::PI);
    let r_bar = mean.norm().clamp(1e-300, 1.0);
    let constancy = (-2.0 * r_bar.ln()).sqrt();
    Ok(ThetaExtract {
        value,
        constancy,
        circle_residual,
    })
}

/// Distortion differential of a pair, component split, angle extraction
/// and classification.
pub fn distortion(
    a: &SurfaceAnalysis,
    b: &SurfaceAnalysis,
    iso: &NormalBundleIsometry,
) -> Result<DistortionReport> {
    let grid = &a.fd.grid;
    let n = grid.n_nodes();
    let mut q_minus = vec![Complex64::default(); n];
    let mut q_plus = vec![Complex64::default(); n];
    for k in 0..n {
        // T^{-1} acts on the target coefficients as rotation by -psi:
        // minus picks e^{-i psi}, plus picks e^{+i psi}
        let rot = Complex64::from_polar(1.0, iso.psi[k]);
        q_minus[k] = a.hd.phi_minus[k] - b.hd.phi_minus[k] * rot.conj();
        q_plus[k] = a.hd.phi_plus[k] - b.hd.phi_plus[k] * rot;
    }

    // classification scale
    let mut qscale = 0.0f64;
    for k in 0..n {
        if !a.fd.trusted[k] {
            continue;
        }
        qscale = qscale
            .max(a.hd.phi_minus[k].norm())
            .max(a.hd.phi_plus[k].norm())
            .max(0.5 * a.fd.lambda[k] * a.fd.lambda[k] * a.fd.h_norm[k]);
    }
    let mut max_qm = 0.0f64;
    let mut max_qp = 0.0f64;
    for k in 0..n {
        if a.fd.trusted[k] && b.fd.trusted[k] {
            max_qm = max_qm.max(q_minus[k].norm());
            max_qp = max_qp.max(q_plus[k].norm());
        }
    }
    let zero_m = max_qm < CLASS_TOL_REL * qscale;
    let zero_p = max_qp < CLASS_TOL_REL * qscale;
    let class_tag = match (zero_m, zero_p) {
        (true, true) => ClassTag::Trivial,
        (false, true) => ClassTag::MMinus,
        (true, false) => ClassTag::MPlus,
        (false, false) => ClassTag::MStar,
    };

    // covariant dbar of the distortion components in the source gauge
    let mut holo = 0.0f64;
    if class_tag != ClassTag::Trivial {
        let i = Complex64::i();
        let (_, dbar_qm) = crate::chart::wirtinger(&q_minus, grid);
        let (_, dbar_qp) = crate::chart::wirtinger(&q_plus, grid);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for k in 0..n {
            if !(a.fd.trusted[k] && b.fd.trusted[k] && iso.trusted[k]) {
                continue;
            }
            let il2 = 1.0 / (a.fd.lambda[k] * a.fd.lambda[k]);
            let om_dbar = Complex64::new(a.hd.omega34_u[k], a.hd.omega34_v[k]) * 0.5;
            let cov_m = dbar_qm[k] + i * om_dbar * q_minus[k];
            let cov_p = dbar_qp[k] - i * om_dbar * q_plus[k];
            num = num.max(cov_m.norm() * il2).max(cov_p.norm() * il2);
            den = den
                .max(q_minus[k].norm() * il2)
                .max(q_plus[k].norm() * il2)
                .max(a.fd.h_norm[k]);
        }
        holo = num / den.max(1e-300);
    }

    // Lemma-type congruence of the curvature data
    let mut ellipse = 0.0f64;
    for k in 0..n {
        if a.fd.trusted[k] && b.fd.trusted[k] {
            ellipse = ellipse
                .max((a.cd.k_n[k] - b.cd.k_n[k]).abs())
                .max((a.cd.lambda1[k] - b.cd.lambda1[k]).abs())
                .max((a.cd.lambda2[k] - b.cd.lambda2[k]).abs());
        }
    }

    let both_trusted: Vec<bool> = (0..n)
        .map(|k| a.fd.trusted[k] && b.fd.trusted[k] && iso.trusted[k])
        .collect();
    let theta_minus = if zero_m {
        None
    } else {
        Some(theta_extract(&q_minus, &a.hd.phi_minus, -1, &both_trusted)?)
    };
    let theta_plus = if zero_p {
        None
    } else {
        Some(theta_extract(&q_plus, &a.hd.phi_plus, 1, &both_trusted)?)
    };

    Ok(DistortionReport {
        q_minus,
        q_plus,
        theta_minus,
        theta_plus,
        class_tag,
        holo_residual_q: holo,
        ellipse_congruence_residual: ellipse,
    })
}

/// Serializable comparison summary (the Comparison Report JSON).
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub pair: [String; 2],
    pub parallel_residual: f64,
    pub class_tag: ClassTag,
    pub theta_minus: Option<ThetaExtract>,
    pub theta_plus: Option<ThetaExtract>,
    #[serde(rename = "holo_residual_Q")]
    pub holo_residual_q: f64,
    pub ellipse_congruence_residual: f64,
}

/// Grids comparable nodewise: same node counts, same origin and spacing
/// (periodicity flags may differ: a reconstructed surface lives on the open
/// copy of its source chart).
pub fn grids_compatible(a: &ChartGrid, b: &ChartGrid) -> bool {
    a.nu == b.nu
        && a.nv == b.nv
        && (a.u0 - b.u0).abs() < 1e-12
        && (a.v0 - b.v0).abs() < 1e-12
        && (a.hu() - b.hu()).abs() < 1e-12
        && (a.hv() - b.hv()).abs() < 1e-12
}

/// Full comparison pipeline for two sampled surfaces on compatible charts.
pub fn compare_surfaces(
    a: &ImmersionGrid,
    b: &ImmersionGrid,
    names: [&str; 2],
) -> Result<(ComparisonReport, DistortionReport)> {
    if !grids_compatible(&a.grid, &b.grid) {
        return Err(Error::GridMismatch);
    }
    let ana = analyze_pointwise(a)?;
    let anb = analyze_pointwise(b)?;
    let iso = build_isometry(&ana, &anb)?;
    let dist = distortion(&ana, &anb, &iso)?;
    let report = ComparisonReport {
        pair: [names[0].to_string(), names[1].to_string()],
        parallel_residual: iso.parallel_residual,
        class_tag: dist.class_tag,
        theta_minus: dist.theta_minus,
        theta_plus: dist.theta_plus,
        holo_residual_q: dist.holo_residual_q,
        ellipse_congruence_residual: dist.ellipse_congruence_residual,
    };
    Ok((report, dist))
}
