//! Verification battery: every numbered acceptance criterion as an
//! executable check with pinned tolerances.  The same code backs the
//! `verify` CLI subcommand and the acceptance test suite.
//!
//! Convergence-order checks follow one shared convention: a residual
//! sequence passes if its measured order over halvings meets the bound, or
//! if the values already sit at rounding level (an identically vanishing
//! quantity cannot be refined).

use num_complex::Complex64;

use crate::deform::{
    deform_data, deform_data_two, deform_further, gcr_residuals, procrustes_align, reconstruct,
    source_seed,
};
use crate::error::Result;
use crate::gaussmap;
use crate::geom::Vec4;
use crate::immersion::{apply_rigid_motion, make_example, Example, ImmersionGrid, RigidMotion};
use crate::invariants::{
    analyze_pointwise, ellipse_frame, euler_numbers, ricci_like_residuals,
    vertical_harmonicity_residual, SurfaceAnalysis,
};
use crate::lagrangian::{self, KahlerStructure};
use crate::moduli::{compare_surfaces, ClassTag};
use crate::report::{analyze_surface, report_json};

/// Residuals below `FLOOR * scale` count as converged outright.
const FLOOR: f64 = 1e-10;

/// Outcome of one criterion: a pass flag and the measured lines.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub lines: Vec<String>,
}

impl CriterionOutcome {
    fn new(name: &'static str) -> Self {
        CriterionOutcome {
            name,
            passed: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: &str, detail: String) {
        self.passed &= ok;
        let tag = if ok { "pass" } else { "FAIL" };
        self.lines.push(format!("  [{tag}] {what}: {detail}"));
    }

    fn note(&mut self, text: String) {
        self.lines.push(format!("  [....] {text}"));
    }
}

/// Criterion names in execution order.
pub const CRITERIA: [&str; 13] = [
    "closed-form",
    "axes",
    "av",
    "vertical-harmonicity",
    "ricci",
    "euler",
    "gauss-map",
    "associated-family",
    "group-law",
    "distortion",
    "ellipse-congruence",
    "lagrangian",
    "determinism",
];

/// Resolutions for order measurements: `levels` halvings starting at 32.
fn level_sizes(levels: usize) -> Vec<usize> {
    (0..levels.clamp(2, 4)).map(|l| 32usize << l).collect()
}

/// Asymptotic order of a residual sequence over halvings: the base-2 log
/// of the last ratio (the coarsest level may sit outside the asymptotic
/// regime).
fn measured_order(errs: &[f64]) -> f64 {
    let n = errs.len();
    (errs[n - 2] / errs[n - 1]).log2()
}

fn converges(errs: &[f64], order_bound: f64, scale: f64) -> (bool, String) {
    if errs.iter().all(|&e| e < FLOOR * scale) {
        return (
            true,
            format!("at rounding level {:.2e} (identically satisfied)", errs.last().unwrap()),
        );
    }
    let order = measured_order(errs);
    (
        order >= order_bound,
        format!("order {order:.2} (errors {errs:?})"),
    )
}

fn analysis(example: Example, n: usize) -> Result<SurfaceAnalysis> {
    analyze_pointwise(&make_example(example, n, n)?)
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

fn closed_form() -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("closed-form");
    let tol = 1e-8;

    let a = analysis(Example::ProductTorus { a: 1.0, b: 1.0 }, 64)?;
    let mut worst = [0.0f64; 5];
    for k in 0..a.fd.n_nodes() {
        worst[0] = worst[0].max((a.fd.h_norm[k] * a.fd.h_norm[k] - 0.5).abs());
        worst[1] = worst[1].max(a.cd.k[k].abs());
        worst[2] = worst[2].max(a.cd.k_n[k].abs());
        worst[3] = worst[3].max((a.cd.lambda1[k] - std::f64::consts::FRAC_1_SQRT_2).abs());
        worst[4] = worst[4].max(a.cd.lambda2[k].abs());
    }
    out.check(
        worst.iter().all(|&w| w < tol),
        "product_torus(1,1) |H|^2=1/2, K=0, K_N=0, l1=1/sqrt2, l2=0",
        format!("worst deviations {:?}", worst.map(|w| format!("{w:.3e}"))),
    );

    let a = analysis(Example::CliffordTorus, 64)?;
    let mut worst = [0.0f64; 4];
    for k in 0..a.fd.n_nodes() {
        worst[0] = worst[0].max((a.fd.h_norm[k] - 1.0).abs());
        worst[1] = worst[1].max(a.cd.k[k].abs().max(a.cd.k_n[k].abs()));
        worst[2] = worst[2].max((a.cd.lambda1[k] - 1.0).abs());
        worst[3] = worst[3].max(a.cd.lambda2[k].abs());
    }
    out.check(
        worst.iter().all(|&w| w < tol),
        "clifford |H|=1, K=K_N=0, l1=1, l2=0",
        format!("worst deviations {:?}", worst.map(|w| format!("{w:.3e}"))),
    );

    let a = analysis(Example::Sphere { r: 1.0 }, 64)?;
    let mut worst = [0.0f64; 2];
    for k in 0..a.fd.n_nodes() {
        if !a.fd.trusted[k] {
            continue;
        }
        worst[0] = worst[0].max((a.cd.k[k] - 1.0).abs());
        worst[1] = worst[1]
            .max(a.hd.phi_minus[k].norm())
            .max(a.hd.phi_plus[k].norm());
    }
    out.check(
        worst[0] < tol && worst[1] < tol,
        "sphere(1) K=1, Phi identically 0",
        format!("worst K deviation {:.3e}, max |phi| {:.3e}", worst[0], worst[1]),
    );
    Ok(out)
}

fn axes(levels: usize) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("axes");

    // dual route with analytic jets: semiaxes from the closed form vs the
    // principal-frame construction
    for example in [
        Example::ProductTorus { a: 1.0, b: 1.0 },
        Example::CliffordTorus,
        Example::Sphere { r: 1.0 },
        Example::WhitneySphere,
        Example::ComplexCurveZz2,
        Example::Graph { eps: 5e-4 },
        Example::RevolutionTorus { big_r: 3.0, small_r: 1.0 },
    ] {
        let a = analysis(example, 48)?;
        // the displayed identities, pointwise at every node (quadratic
        // quantities, no square-root amplification near circle points)
        let mut worst_axes = 0.0f64;
        for k in 0..a.fd.n_nodes() {
            let h2 = a.fd.h_norm[k] * a.fd.h_norm[k];
            let sum = a.cd.lambda1[k] * a.cd.lambda1[k] + a.cd.lambda2[k] * a.cd.lambda2[k];
            let prod = a.cd.lambda1[k] * a.cd.lambda2[k];
            worst_axes = worst_axes
                .max((sum - (h2 - (a.cd.k[k] - a.fd.c))).abs())
                .max((prod - 0.5 * a.cd.k_n[k].abs()).abs());
        }
        out.check(
            worst_axes < 1e-8 * a.cd.scale,
            &format!("{example:?} l1^2+l2^2 = |H|^2-(K-c), l1 l2 = |K_N|/2"),
            format!("worst {worst_axes:.3e}, scale {:.2}", a.cd.scale),
        );
        // dual route via the principal-frame construction, away from the
        // square-root-degenerate neighbourhood of circle points
        let mut worst = 0.0f64;
        let mut checked = 0usize;
        for k in 0..a.fd.n_nodes() {
            if !a.fd.trusted[k] || a.cd.pseudo_umbilic_margin[k] <= 1e-4 * a.cd.scale {
                continue;
            }
            checked += 1;
            let ef = ellipse_frame(&a.fd, &a.cd, k)?;
            worst = worst
                .max((ef.kappa - a.cd.lambda1[k]).abs())
                .max((ef.mu.abs() - a.cd.lambda2[k]).abs())
                .max((2.0 * ef.kappa * ef.mu - a.cd.k_n[k]).abs());
        }
        out.check(
            checked == 0 || worst < 1e-8 * a.cd.scale,
            &format!("{example:?} principal-frame route agrees"),
            format!("worst {worst:.3e} over {checked} nodes"),
        );
    }

    // with finite-difference jets the semiaxes converge at second order to
    // the analytic values: ratio close to 4 per halving
    let mut errs = Vec::new();
    for n in level_sizes(levels.max(3)) {
        let mut fd_surf = make_example(Example::RevolutionTorus { big_r: 3.0, small_r: 1.0 }, n, n)?;
        fd_surf.analytic = None;
        fd_surf.d1 = None;
        fd_surf.d2 = None;
        let approx = analyze_pointwise(&fd_surf)?;
        let exact = analysis(Example::RevolutionTorus { big_r: 3.0, small_r: 1.0 }, n)?;
        let mut worst = 0.0f64;
        for k in 0..approx.fd.n_nodes() {
            worst = worst
                .max((approx.cd.lambda1[k] - exact.cd.lambda1[k]).abs())
                .max((approx.cd.lambda2[k] - exact.cd.lambda2[k]).abs());
        }
        errs.push(worst);
    }
    let mut ratios_ok = true;
    let mut ratios = Vec::new();
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        ratios.push(r);
        ratios_ok &= (3.5..=4.5).contains(&r);
    }
    out.check(
        ratios_ok,
        "finite-difference jets converge at ratio 3.5..4.5 per halving",
        format!("ratios {ratios:.3?} (errors {:?})", errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>()),
    );
    Ok(out)
}

fn av_identity() -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("av");
    for example in [
        Example::ProductTorus { a: 1.0, b: 1.0 },
        Example::CliffordTorus,
        Example::Sphere { r: 1.3 },
        Example::WhitneySphere,
        Example::Graph { eps: 5e-4 },
        Example::RevolutionTorus { big_r: 3.0, small_r: 1.0 },
    ] {
        let a = analysis(example, 48)?;
        let mut worst = 0.0f64;
        let mut scale = 1.0f64;
        for k in 0..a.fd.n_nodes() {
            let l4 = a.fd.lambda[k].powi(4);
            let h2 = a.fd.h_norm[k] * a.fd.h_norm[k];
            let base = h2 - (a.cd.k[k] - a.fd.c);
            let lhs_p = 16.0 * a.hd.psi_plus[k].norm_sqr();
            let lhs_m = 16.0 * a.hd.psi_minus[k].norm_sqr();
            let rhs_p = l4 * h2 * (base - a.cd.k_n[k]);
            let rhs_m = l4 * h2 * (base + a.cd.k_n[k]);
            worst = worst.max((lhs_p - rhs_p).abs()).max((lhs_m - rhs_m).abs());
            scale = scale.max(l4 * a.cd.scale * a.cd.scale);
        }
        out.check(
            worst < 1e-8 * scale,
            &format!("{example:?} 16|psi|^2 = lambda^4 |H|^2 (|H|^2-(K-c)-+K_N)"),
            format!("worst {worst:.3e} at scale {scale:.2e}"),
        );
    }
    Ok(out)
}

fn vertical_harmonicity(levels: usize) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("vertical-harmonicity");
    let sizes = level_sizes(levels.max(3));

    let mut minus_errs = Vec::new();
    let mut plus_errs = Vec::new();
    for &n in &sizes {
        let a = analysis(Example::CliffordTorus, n)?;
        let (rm, rp) = vertical_harmonicity_residual(&a.hd, &a.fd);
        minus_errs.push(rm);
        plus_errs.push(rp);
    }
    for (label, errs) in [("minus", &minus_errs), ("plus", &plus_errs)] {
        let (ok, detail) = converges(errs, 1.8, 1.0);
        out.check(ok, &format!("clifford dbar residual, {label} lift"), detail);
    }

    let mut harmonic_side = Vec::new();
    let mut other_side = Vec::new();
    for &n in &sizes {
        let a = analysis(Example::WhitneySphere, n)?;
        let (rm, rp) = vertical_harmonicity_residual(&a.hd, &a.fd);
        harmonic_side.push(rm.min(rp));
        other_side.push(rm.max(rp));
    }
    let (ok, detail) = converges(&harmonic_side, 1.8, 1.0);
    out.check(ok, "whitney superconformal-side dbar residual", detail);
    out.note(format!(
        "whitney non-harmonic side stays at {other_side:.3?}"
    ));

    let mut control_ok = true;
    let mut control_vals = Vec::new();
    for &n in &sizes {
        let a = analysis(Example::Graph { eps: 5e-4 }, n)?;
        let (rm, rp) = vertical_harmonicity_residual(&a.hd, &a.fd);
        control_vals.push(rm.min(rp));
        control_ok &= rm > 0.01 && rp > 0.01;
    }
    out.check(
        control_ok,
        "generic graph control stays above 0.01 at all levels",
        format!("min residuals {control_vals:.3?}"),
    );
    Ok(out)
}

fn ricci(levels: usize) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("ricci");

    let a = analysis(Example::CliffordTorus, 64)?;
    let rr = ricci_like_residuals(&a.fd, &a.cd, 1);
    let rr2 = ricci_like_residuals(&a.fd, &a.cd, -1);
    out.check(
        rr.max3.max(rr.max4).max(rr2.max3).max(rr2.max4) < 1e-9,
        "clifford Laplace identities hold identically",
        format!(
            "max residuals {:.2e}",
            rr.max3.max(rr.max4).max(rr2.max3).max(rr2.max4)
        ),
    );

    let sizes: Vec<usize> = level_sizes(levels.max(3)).iter().map(|n| n * 3 / 2).collect();
    let mut errs3 = Vec::new();
    let mut errs4 = Vec::new();
    let mut aux_live = false;
    for &n in &sizes {
        let a = analysis(Example::WhitneySphere, n)?;
        let (rm, rp) = vertical_harmonicity_residual(&a.hd, &a.fd);
        let sign = if rm <= rp { -1 } else { 1 };
        let rr = ricci_like_residuals(&a.fd, &a.cd, sign);
        errs3.push(rr.max3);
        errs4.push(rr.max4);
        aux_live |= rr.res4_ok.iter().any(|&x| x);
    }
    let (ok3, d3) = converges(&errs3, 1.8, 1.0);
    out.check(ok3, "whitney interior Delta log |H|^2 = -+2K_N", d3);
    if aux_live {
        let (ok4, d4) = converges(&errs4, 1.8, 1.0);
        out.check(ok4, "whitney interior Delta log(aux) = 2(2K +- K_N)", d4);
    } else {
        // the aux identity presumes a nonvanishing pairing; a superconformal
        // surface degenerates it identically, so it holds vacuously
        out.check(
            true,
            "whitney Delta log(aux) identity",
            "vacuous: the aux function vanishes identically on the superconformal side".to_string(),
        );
    }
    Ok(out)
}

fn euler() -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("euler");

    let a = analysis(Example::CliffordTorus, 96)?;
    let rep = euler_numbers(&a.fd, &a.cd, &a.hd);
    out.check(
        rep.chi.abs() < 1e-6 && rep.chi_n.abs() < 1e-6 && rep.n_h2 == Some(0),
        "clifford chi = chi_N = 0, N(|H|^2) = 0",
        format!("chi {:.2e}, chi_N {:.2e}, N {:?}", rep.chi, rep.chi_n, rep.n_h2),
    );

    let a = analysis(Example::Sphere { r: 1.0 }, 128)?;
    let rep = euler_numbers(&a.fd, &a.cd, &a.hd);
    out.check(
        (rep.chi - 2.0).abs() < 1e-3,
        "sphere chart chi = 2 within 1e-3",
        format!("chi {:.6}", rep.chi),
    );

    let a = analysis(Example::WhitneySphere, 128)?;
    let rep = euler_numbers(&a.fd, &a.cd, &a.hd);
    let chi_ok = (rep.chi - 2.0).abs() < 1e-2;
    let chi_n_ok = (rep.chi_n - 2.0).abs() < 1e-2;
    out.check(
        chi_ok && chi_n_ok,
        "whitney chi = 2, chi_N = 2 within 1e-2",
        format!("chi {:.4}, chi_N {:.4}", rep.chi, rep.chi_n),
    );
    let n = rep.n_h2;
    let consistent = match n {
        Some(count) => 2 * (rep.chi_n.round() as i64) == rep.lift_sign as i64 * count,
        None => false,
    };
    out.check(
        consistent,
        "whitney 2 chi_N = (lift sign) N(|H|^2) as exact integers",
        format!(
            "2 chi_N = {}, lift {}, N = {:?}",
            2 * rep.chi_n.round() as i64,
            rep.lift_sign,
            n
        ),
    );
    Ok(out)
}

fn gauss_map(levels: usize) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("gauss-map");
    let sizes = level_sizes(levels.max(3));

    for example in [
        Example::ProductTorus { a: 1.0, b: 1.0 },
        Example::CliffordTorus,
        Example::Sphere { r: 1.0 },
        Example::WhitneySphere,
        Example::ComplexCurveZz2,
        Example::RevolutionTorus { big_r: 3.0, small_r: 1.0 },
    ] {
        let mut errs = Vec::new();
        for &n in &sizes {
            let surf = make_example(example, n, n)?;
            let a = analyze_pointwise(&surf)?;
            let gm = gaussmap::gauss_map(&surf.jets()?, &a.fd)?;
            let (rk, rkn) = gaussmap::jacobian_residuals(&gm, &a.fd, &a.cd);
            errs.push(rk.max(rkn));
        }
        let (ok, detail) = converges(&errs, 1.8, 1.0);
        out.check(ok, &format!("{example:?} K = J+ + J-, K_N = J+ - J-"), detail);
    }

    let surf = make_example(Example::ProductTorus { a: 1.0, b: 1.0 }, 64, 64)?;
    let a = analyze_pointwise(&surf)?;
    let gm = gaussmap::gauss_map(&surf.jets()?, &a.fd)?;
    let circle = gaussmap::great_circle_residual(&gm.g_minus);
    out.check(
        circle < 1e-9,
        "product torus g- lies on a great circle",
        format!("max deviation {circle:.2e}"),
    );

    // eigenfunction residual where the lift is harmonic
    for sign in [1i8, -1] {
        let mut errs = Vec::new();
        for &n in &sizes {
            let surf = make_example(Example::CliffordTorus, n, n)?;
            let a = analyze_pointwise(&surf)?;
            let gm = gaussmap::gauss_map(&surf.jets()?, &a.fd)?;
            errs.push(gaussmap::eigenfunction_residual(&gm, &a.fd, &a.cd, sign));
        }
        let (ok, detail) = converges(&errs, 1.8, 1.0);
        out.check(ok, &format!("clifford eigenfunction residual, sign {sign:+}"), detail);
    }
    let mut errs = Vec::new();
    for &n in &sizes {
        let n = n * 3 / 2;
        let surf = make_example(Example::WhitneySphere, n, n)?;
        let a = analyze_pointwise(&surf)?;
        let gm = gaussmap::gauss_map(&surf.jets()?, &a.fd)?;
        let (rm, rp) = vertical_harmonicity_residual(&a.hd, &a.fd);
        let sign = if rm <= rp { -1 } else { 1 };
        errs.push(gaussmap::eigenfunction_residual(&gm, &a.fd, &a.cd, sign));
    }
    let (ok, detail) = converges(&errs, 1.8, 1.0);
    out.check(ok, "whitney eigenfunction residual on the harmonic side", detail);
    Ok(out)
}

struct ReconstructedPair {
    src_open: ImmersionGrid,
    rec: crate::deform::ReconstructionResult,
}

fn clifford_pair(theta: f64, lift: i8, n: usize) -> Result<ReconstructedPair> {
    let surf = make_example(Example::CliffordTorus, n, n)?;
    let a = analyze_pointwise(&surf)?;
    let dd = deform_data(&a.fd, &a.hd, theta, lift);
    let (frame, _) = source_seed(&a.fd);
    let p0 = Vec4([
        surf.position[0],
        surf.position[1],
        surf.position[2],
        surf.position[3],
    ]);
    let rec = reconstruct(&dd, &frame, &p0)?;
    let mut src_open = surf;
    src_open.grid = rec.surface.grid;
    Ok(ReconstructedPair { src_open, rec })
}

fn associated_family(levels: usize) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("associated-family");

    // exact round trip at theta = 0
    let pair = clifford_pair(0.0, 1, 128)?;
    let (_, rms) = procrustes_align(&pair.rec.surface, &pair.src_open)?;
    out.check(
        rms < 1e-6,
        "theta = 0 reconstruction reproduces the source (128^2)",
        format!("procrustes rms {rms:.2e}"),
    );

    // quarter turn: isometric, same |H|, flat-connection certificate, and
    // genuinely non-congruent at every level
    let sizes = level_sizes(levels.max(3));
    let mut all_ok = true;
    let mut lines = Vec::new();
    for &n in &sizes {
        let pair = clifford_pair(std::f64::consts::FRAC_PI_2, 1, n)?;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let bound = h * h;
        let deformed = analyze_pointwise(&pair.rec.surface)?;
        let mut h_dev = 0.0f64;
        for k in 0..deformed.fd.n_nodes() {
            if deformed.fd.trusted[k] {
                h_dev = h_dev.max((deformed.fd.h_norm[k] - 1.0).abs());
            }
        }
        let dd = {
            let a = analyze_pointwise(&make_example(Example::CliffordTorus, n, n)?)?;
            deform_data(&a.fd, &a.hd, std::f64::consts::FRAC_PI_2, 1)
        };
        let gcr = gcr_residuals(&dd);
        let (_, rms) = procrustes_align(&pair.rec.surface, &pair.src_open)?;
        let ok = pair.rec.metric_residual < bound
            && h_dev < bound
            && gcr.max_gauss.max(gcr.max_codazzi).max(gcr.max_ricci) < bound
            && pair.rec.path_independence < bound
            && rms >= 0.05;
        all_ok &= ok;
        lines.push(format!(
            "n={n}: metric {:.2e}, |H|-1 {:.2e}, gcr {:.2e}, path {:.2e}, rms {:.3} (bound h^2 = {bound:.2e})",
            pair.rec.metric_residual,
            h_dev,
            gcr.max_gauss.max(gcr.max_codazzi).max(gcr.max_ricci),
            pair.rec.path_independence,
            rms
        ));
    }
    out.check(
        all_ok,
        "theta = pi/2 family member: O(h^2) certificates, non-congruent",
        lines.join("; "),
    );
    Ok(out)
}

fn group_law() -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("group-law");
    let a = analysis(Example::CliffordTorus, 32)?;
    let (t1, t2) = (0.8, 1.7);
    let mut worst_group = 0.0f64;
    let mut worst_period = 0.0f64;
    for lift in [1i8, -1] {
        let once = deform_further(&deform_data(&a.fd, &a.hd, t1, lift), t2, lift);
        let direct = deform_data(&a.fd, &a.hd, t1 + t2, lift);
        let full = deform_data(&a.fd, &a.hd, 2.0 * std::f64::consts::PI, lift);
        for k in 0..a.fd.n_nodes() {
            for d in 0..2 {
                worst_group = worst_group
                    .max((once.beta11[k][d] - direct.beta11[k][d]).abs())
                    .max((once.beta12[k][d] - direct.beta12[k][d]).abs())
                    .max((once.beta22[k][d] - direct.beta22[k][d]).abs());
                worst_period = worst_period
                    .max((full.beta11[k][d] - a.fd.alpha11[k][d]).abs())
                    .max((full.beta12[k][d] - a.fd.alpha12[k][d]).abs())
                    .max((full.beta22[k][d] - a.fd.alpha22[k][d]).abs());
            }
        }
    }
    out.check(
        worst_group < 1e-12,
        "composition law theta1 o theta2 = theta1 + theta2",
        format!("worst {worst_group:.2e}"),
    );
    out.check(
        worst_period < 1e-12,
        "2 pi periodicity at the data level",
        format!("worst {worst_period:.2e}"),
    );
    Ok(out)
}

fn distortion_pipeline() -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("distortion");

    // one-parameter pair at theta = 1
    let pair = clifford_pair(1.0, 1, 128)?;
    let (report, _) = compare_surfaces(&pair.src_open, &pair.rec.surface, ["clifford", "theta=1"])?;
    let ext = report.theta_plus;
    let ok = report.class_tag == ClassTag::MPlus
        && ext.is_some_and(|e| {
            (e.value - 1.0).abs() < 1e-6 && e.constancy < 1e-6 && e.circle_residual < 1e-6
        });
    out.check(
        ok,
        "clifford plus-deformation at theta = 1: class m_plus, angle recovered",
        format!(
            "class {}, theta {:?}",
            report.class_tag,
            ext.map(|e| (e.value, e.constancy, e.circle_residual))
        ),
    );
    out.check(
        report.holo_residual_q < 1e-6,
        "distortion differential is holomorphic",
        format!("normalized dbar residual {:.2e}", report.holo_residual_q),
    );

    // two-parameter pair
    let surf = make_example(Example::CliffordTorus, 128, 128)?;
    let a = analyze_pointwise(&surf)?;
    let dd = deform_data_two(&a.fd, &a.hd, 1.0, 2.0)?;
    let (frame, _) = source_seed(&a.fd);
    let p0 = Vec4([surf.position[0], surf.position[1], surf.position[2], surf.position[3]]);
    let rec = reconstruct(&dd, &frame, &p0)?;
    let mut src_open = surf.clone();
    src_open.grid = rec.surface.grid;
    let (report, dist) = compare_surfaces(&src_open, &rec.surface, ["clifford", "(1,2)"])?;
    let tm = report.theta_minus;
    let tp = report.theta_plus;
    let ok = report.class_tag == ClassTag::MStar
        && tm.is_some_and(|e| (e.value - 1.0).abs() < 1e-6)
        && tp.is_some_and(|e| (e.value - 2.0).abs() < 1e-6);
    out.check(
        ok,
        "two-parameter pair (1, 2): class m_star, both angles recovered",
        format!(
            "class {}, theta- {:?}, theta+ {:?}",
            report.class_tag,
            tm.map(|e| e.value),
            tp.map(|e| e.value)
        ),
    );
    // coefficientwise match with the predicted distortion
    let ana = analyze_pointwise(&src_open)?;
    let rot_m = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, 1.0);
    let rot_p = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -2.0);
    let mut worst = 0.0f64;
    for k in 0..src_open.grid.n_nodes() {
        if ana.fd.trusted[k] {
            worst = worst
                .max((dist.q_minus[k] - rot_m * ana.hd.phi_minus[k]).norm())
                .max((dist.q_plus[k] - rot_p * ana.hd.phi_plus[k]).norm());
        }
    }
    out.check(
        worst < 1e-6,
        "distortion matches (1-e^{i theta}) Phi- + (1-e^{-i phi}) Phi+ coefficientwise",
        format!("worst coefficient deviation {worst:.2e}"),
    );

    // rigidly moved copy
    let surf = make_example(Example::CliffordTorus, 64, 64)?;
    let motion = RigidMotion::rotation_in_plane(4, 0, 3, 0.7).with_translation(&[0.2, -0.1, 0.4, 0.0]);
    let moved = apply_rigid_motion(&surf, &motion)?;
    let (report, dist) = compare_surfaces(&surf, &moved, ["clifford", "moved"])?;
    let max_q = dist
        .q_minus
        .iter()
        .chain(dist.q_plus.iter())
        .fold(0.0f64, |m, z| m.max(z.norm()));
    let scale = a.cd.scale;
    out.check(
        report.class_tag == ClassTag::Trivial && max_q < 1e-8 * scale,
        "rigidly moved copy: trivial class",
        format!("class {}, max |q| {max_q:.2e}", report.class_tag),
    );
    Ok(out)
}

fn ellipse_congruence(levels: usize) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("ellipse-congruence");
    let sizes = level_sizes(levels.max(2));
    let mut errs = Vec::new();
    for &n in &sizes {
        let pair = clifford_pair(1.3, 1, n)?;
        let (report, _) = compare_surfaces(&pair.src_open, &pair.rec.surface, ["a", "b"])?;
        errs.push(report.ellipse_congruence_residual);
    }
    let (ok, detail) = converges(&errs, 1.8, 1.0);
    out.check(
        ok,
        "normal curvature and semiaxes agree across a constructed pair",
        detail,
    );
    Ok(out)
}

fn lagrangian_suite(levels: usize) -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("lagrangian");
    let structure = KahlerStructure::standard();
    let sizes = level_sizes(levels.max(3));

    // product torus: residual, holomorphy of both differentials
    let mut res_u = Vec::new();
    let mut res_t = Vec::new();
    let mut worst_lag: f64 = 0.0;
    for &n in &sizes {
        let surf = make_example(Example::ProductTorus { a: 1.0, b: 1.0 }, n, n)?;
        let a = analyze_pointwise(&surf)?;
        let jets = surf.jets()?;
        let test = lagrangian::lagrangian_test(&jets, &a.fd, &structure);
        worst_lag = worst_lag.max(test.iter().fold(0.0f64, |m, &x| m.max(x)));
        let data = lagrangian::lagrangian_differentials(&jets, &a.fd, &a.hd, &structure)?;
        res_u.push(data.holo_res_upsilon);
        res_t.push(data.holo_res_theta);
    }
    out.check(
        worst_lag < 1e-9,
        "product torus Lagrangian residual",
        format!("max {worst_lag:.2e}"),
    );
    let (ok_u, du) = converges(&res_u, 1.8, 1.0);
    out.check(ok_u, "mean curvature form holomorphy residual", du);
    let (ok_t, dt) = converges(&res_t, 1.8, 1.0);
    out.check(ok_t, "cubic differential holomorphy residual", dt);

    // whitney sphere
    let surf = make_example(Example::WhitneySphere, 96, 96)?;
    let a = analyze_pointwise(&surf)?;
    let jets = surf.jets()?;
    let test = lagrangian::lagrangian_test(&jets, &a.fd, &structure);
    let worst = test.iter().fold(0.0f64, |m, &x| m.max(x));
    let data = lagrangian::lagrangian_differentials(&jets, &a.fd, &a.hd, &structure)?;
    let coeff_scale = a.fd.lambda.iter().fold(0.0f64, |m, &l| m.max(l * l * l));
    out.check(
        worst < 1e-9,
        "whitney sphere Lagrangian residual",
        format!("max {worst:.2e}"),
    );
    out.check(
        data.theta_max < 1e-10 * coeff_scale,
        "whitney sphere superconformal flag (cubic differential vanishes)",
        format!("max |theta coefficient| {:.2e}", data.theta_max),
    );
    out.check(
        data.isotropy_residual < 1e-8,
        "isotropic leg identity J~ T^(1,0) in the minus bundle",
        format!("residual {:.2e}", data.isotropy_residual),
    );
    Ok(out)
}

fn determinism() -> Result<CriterionOutcome> {
    let mut out = CriterionOutcome::new("determinism");
    let mut all_same = true;
    for example in [Example::CliffordTorus, Example::WhitneySphere] {
        let surf1 = make_example(example, 64, 64)?;
        let (r1, _) = analyze_surface(&surf1)?;
        let surf2 = make_example(example, 64, 64)?;
        let (r2, _) = analyze_surface(&surf2)?;
        all_same &= report_json(&r1)? == report_json(&r2)?;
    }
    out.check(all_same, "two pipeline runs produce byte-identical reports", String::new());

    // the comparison pipeline too
    let p1 = clifford_pair(0.9, 1, 48)?;
    let (rep1, _) = compare_surfaces(&p1.src_open, &p1.rec.surface, ["a", "b"])?;
    let p2 = clifford_pair(0.9, 1, 48)?;
    let (rep2, _) = compare_surfaces(&p2.src_open, &p2.rec.surface, ["a", "b"])?;
    out.check(
        serde_json::to_string(&rep1)? == serde_json::to_string(&rep2)?,
        "two comparison runs produce byte-identical reports",
        String::new(),
    );
    Ok(out)
}

/// Run a single criterion by name.
pub fn run_criterion(name: &str, levels: usize) -> Result<CriterionOutcome> {
    match name {
        "closed-form" => closed_form(),
        "axes" => axes(levels),
        "av" => av_identity(),
        "vertical-harmonicity" => vertical_harmonicity(levels),
        "ricci" => ricci(levels),
        "euler" => euler(),
        "gauss-map" => gauss_map(levels),
        "associated-family" => associated_family(levels),
        "group-law" => group_law(),
        "distortion" => distortion_pipeline(),
        "ellipse-congruence" => ellipse_congruence(levels),
        "lagrangian" => lagrangian_suite(levels),
        "determinism" => determinism(),
        other => Err(crate::error::Error::BadParameter(format!(
            "unknown verification case `{other}`; valid cases: all, {}",
            CRITERIA.join(", ")
        ))),
    }
}

/// Run every criterion.
pub fn run_all(levels: usize) -> Result<Vec<CriterionOutcome>> {
    CRITERIA.iter().map(|c| run_criterion(c, levels)).collect()
}
