//! Mean-curvature-preserving isometric deformation families, structure
//! equation residuals, and surface reconstruction by integrating the
//! moving-frame equations in `SO(4)`.
//!
//! A deformation rotates the isotropic components of `alpha(dz, dz)` by
//! unit complex numbers while keeping the metric, the `(1,1)`-part (hence
//! the mean curvature coefficients) and the normal connection form fixed:
//!
//! * one-parameter, plus lift:  `(phi-, phi+) -> (phi-, e^{-i theta} phi+)`
//! * one-parameter, minus lift: `(phi-, phi+) -> (e^{i theta} phi-, phi+)`
//! * two-parameter (parallel mean curvature only):
//!   `(phi-, phi+) -> (e^{i theta} phi-, e^{-i phi} phi+)`
//!
//! Reconstruction integrates `dF = F A` along the first column and then
//! along `u`-lines with classical fourth-order stepping, cubic mid-step
//! interpolation of the connection data and a polar reprojection to `SO(4)`
//! after every step; the position follows `df = lambda (e1 du + e2 dv)`.

use num_complex::Complex64;

use crate::chart::{self, ChartGrid};
use crate::error::{Error, Result};
use crate::geom::{Frame4, Vec4};
use crate::immersion::{ImmersionGrid, RigidMotion};
use crate::invariants::{vertical_harmonicity_residual, FundamentalData, HopfData};

/// Threshold on the vertical-harmonicity residuals below which the mean
/// curvature vector counts as parallel (two-parameter family allowed).
pub const PARALLEL_H_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeformMode {
    Identity,
    One { theta: f64, lift_sign: i8 },
    Two { theta: f64, phi: f64 },
}

/// Deformed fundamental data `(lambda^2, beta, omega34)` ready for the
/// Gauss-Codazzi-Ricci check and for reconstruction.  All normal
/// coefficients refer to the source surface's adapted frame field.
#[derive(Debug, Clone)]
pub struct DeformationData {
    pub grid: ChartGrid,
    pub c: f64,
    pub lambda: Vec<f64>,
    pub beta11: Vec<[f64; 2]>,
    pub beta12: Vec<[f64; 2]>,
    pub beta22: Vec<[f64; 2]>,
    /// Mean curvature coefficients; `trace(beta)/2` equals this by
    /// construction.
    pub h: Vec<[f64; 2]>,
    pub omega34_u: Vec<f64>,
    pub omega34_v: Vec<f64>,
    pub mode: DeformMode,
    pub trusted: Vec<bool>,
}

impl DeformationData {
    /// Isotropic coefficients of `beta(dz, dz)` at a node.
    pub fn phi_pair(&self, k: usize) -> (Complex64, Complex64) {
        let i = Complex64::i();
        let l2half = 0.5 * self.lambda[k] * self.lambda[k];
        let u = [
            0.5 * (self.beta11[k][0] - self.beta22[k][0]),
            0.5 * (self.beta11[k][1] - self.beta22[k][1]),
        ];
        let v = self.beta12[k];
        let pa = Complex64::new(u[0], -v[0]) * l2half;
        let pb = Complex64::new(u[1], -v[1]) * l2half;
        ((pa + i * pb) * 0.5, (pa - i * pb) * 0.5)
    }
}

/// Borrowed view of the deformation-independent data of a surface.
struct SourceData<'a> {
    grid: &'a ChartGrid,
    c: f64,
    lambda: &'a [f64],
    h: &'a [[f64; 2]],
    om_u: &'a [f64],
    om_v: &'a [f64],
    trusted: &'a [bool],
}

fn assemble(
    src: SourceData<'_>,
    phi_minus: &[Complex64],
    phi_plus: &[Complex64],
    mode: DeformMode,
) -> DeformationData {
    let SourceData { grid, c, lambda, h, om_u, om_v, trusted } = src;
    let n = lambda.len();
    let i = Complex64::i();
    let mut beta11 = vec![[0.0; 2]; n];
    let mut beta12 = vec![[0.0; 2]; n];
    let mut beta22 = vec![[0.0; 2]; n];
    for k in 0..n {
        let pa = phi_minus[k] + phi_plus[k];
        let pb = -i * (phi_minus[k] - phi_plus[k]);
        let inv = 2.0 / (lambda[k] * lambda[k]);
        let u = [pa.re * inv, pb.re * inv];
        let v = [-pa.im * inv, -pb.im * inv];
        beta11[k] = [h[k][0] + u[0], h[k][1] + u[1]];
        beta22[k] = [h[k][0] - u[0], h[k][1] - u[1]];
        beta12[k] = v;
    }
    DeformationData {
        grid: *grid,
        c,
        lambda: lambda.to_vec(),
        beta11,
        beta12,
        beta22,
        h: h.to_vec(),
        omega34_u: om_u.to_vec(),
        omega34_v: om_v.to_vec(),
        mode,
        trusted: trusted.to_vec(),
    }
}

fn rotated_pair(
    phi_minus: &[Complex64],
    phi_plus: &[Complex64],
    mode: DeformMode,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let (rot_m, rot_p) = match mode {
        DeformMode::Identity => (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)),
        DeformMode::One { theta, lift_sign } => {
            if lift_sign > 0 {
                (Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, -theta))
            } else {
                (Complex64::from_polar(1.0, theta), Complex64::new(1.0, 0.0))
            }
        }
        DeformMode::Two { theta, phi } => (
            Complex64::from_polar(1.0, theta),
            Complex64::from_polar(1.0, -phi),
        ),
    };
    (
        phi_minus.iter().map(|z| z * rot_m).collect(),
        phi_plus.iter().map(|z| z * rot_p).collect(),
    )
}

/// One-parameter associated family at angle `theta` for the given lift.
pub fn deform_data(
    fd: &FundamentalData,
    hd: &HopfData,
    theta: f64,
    lift_sign: i8,
) -> DeformationData {
    let mode = DeformMode::One { theta, lift_sign };
    let (pm, pp) = rotated_pair(&hd.phi_minus, &hd.phi_plus, mode);
    assemble(
        SourceData {
            grid: &fd.grid,
            c: fd.c,
            lambda: &fd.lambda,
            h: &fd.h,
            om_u: &hd.omega34_u,
            om_v: &hd.omega34_v,
            trusted: &fd.trusted,
        },
        &pm,
        &pp,
        mode,
    )
}

/// Two-parameter family for surfaces with parallel mean curvature vector
/// field; refuses other inputs, citing the failing residual.
pub fn deform_data_two(
    fd: &FundamentalData,
    hd: &HopfData,
    theta: f64,
    phi: f64,
) -> Result<DeformationData> {
    let (rm, rp) = vertical_harmonicity_residual(hd, fd);
    if rm > PARALLEL_H_TOL || rp > PARALLEL_H_TOL {
        return Err(Error::NotParallelMeanCurvature {
            r_minus: rm,
            r_plus: rp,
            tol: PARALLEL_H_TOL,
        });
    }
    let mode = DeformMode::Two { theta, phi };
    let (pm, pp) = rotated_pair(&hd.phi_minus, &hd.phi_plus, mode);
    Ok(assemble(
        SourceData {
            grid: &fd.grid,
            c: fd.c,
            lambda: &fd.lambda,
            h: &fd.h,
            om_u: &hd.omega34_u,
            om_v: &hd.omega34_v,
            trusted: &fd.trusted,
        },
        &pm,
        &pp,
        mode,
    ))
}

/// Apply a further one-parameter rotation to already deformed data (used
/// for the group-law checks).
pub fn deform_further(dd: &DeformationData, theta: f64, lift_sign: i8) -> DeformationData {
    let n = dd.lambda.len();
    let mut pm = vec![Complex64::default(); n];
    let mut pp = vec![Complex64::default(); n];
    for k in 0..n {
        let (m, p) = dd.phi_pair(k);
        pm[k] = m;
        pp[k] = p;
    }
    let mode = DeformMode::One { theta, lift_sign };
    let (pm, pp) = rotated_pair(&pm, &pp, mode);
    assemble(
        SourceData {
            grid: &dd.grid,
            c: dd.c,
            lambda: &dd.lambda,
            h: &dd.h,
            om_u: &dd.omega34_u,
            om_v: &dd.omega34_v,
            trusted: &dd.trusted,
        },
        &pm,
        &pp,
        mode,
    )
}

/// Residual fields of the three fundamental equations on deformation data.
#[derive(Debug, Clone)]
pub struct GcrResiduals {
    /// `|(K - c) - (|H|^2 - |traceless|^2)|` in curvature units, with `K`
    /// recovered from the conformal factor.
    pub gauss: Vec<f64>,
    /// Norm of `nabla_dbar beta(dz,dz) - (lambda^2/2) nabla_d H`.
    pub codazzi: Vec<f64>,
    /// `|K_N(beta) - K_N(omega34)|` with the second value from
    /// `d omega34 = -K_N omega1 ^ omega2`.
    pub ricci: Vec<f64>,
    pub max_gauss: f64,
    pub max_codazzi: f64,
    pub max_ricci: f64,
}

pub fn gcr_residuals(dd: &DeformationData) -> GcrResiduals {
    let grid = &dd.grid;
    let n = grid.n_nodes();
    let i = Complex64::i();

    let log_lambda: Vec<f64> = dd.lambda.iter().map(|x| x.ln()).collect();
    let k_field: Vec<f64> = chart::laplace_beltrami(&log_lambda, &dd.lambda, grid)
        .iter()
        .map(|x| -x)
        .collect();

    // isotropic coefficient fields
    let mut bm = vec![Complex64::default(); n];
    let mut bp = vec![Complex64::default(); n];
    let mut em = vec![Complex64::default(); n];
    let mut ep = vec![Complex64::default(); n];
    for k in 0..n {
        let (m, p) = dd.phi_pair(k);
        bm[k] = m;
        bp[k] = p;
        em[k] = Complex64::new(dd.h[k][0], dd.h[k][1]) * 0.5;
        ep[k] = Complex64::new(dd.h[k][0], -dd.h[k][1]) * 0.5;
    }
    let (_, dbar_bm) = chart::wirtinger(&bm, grid);
    let (_, dbar_bp) = chart::wirtinger(&bp, grid);
    let (dz_em, _) = chart::wirtinger(&em, grid);
    let (dz_ep, _) = chart::wirtinger(&ep, grid);
    let (dz_om_u, _) = (chart::d_du(&dd.omega34_u, grid), ());
    let dv_om_u = chart::d_dv(&dd.omega34_u, grid);
    let du_om_v = chart::d_du(&dd.omega34_v, grid);
    let _ = dz_om_u;

    let mut gauss = vec![0.0; n];
    let mut codazzi = vec![0.0; n];
    let mut ricci = vec![0.0; n];
    let mut max_gauss = 0.0f64;
    let mut max_codazzi = 0.0f64;
    let mut max_ricci = 0.0f64;
    for k in 0..n {
        let l2 = dd.lambda[k] * dd.lambda[k];
        let h2 = dd.h[k][0] * dd.h[k][0] + dd.h[k][1] * dd.h[k][1];
        let u = [
            0.5 * (dd.beta11[k][0] - dd.beta22[k][0]),
            0.5 * (dd.beta11[k][1] - dd.beta22[k][1]),
        ];
        let v = dd.beta12[k];
        let traceless2 = u[0] * u[0] + u[1] * u[1] + v[0] * v[0] + v[1] * v[1];
        gauss[k] = ((k_field[k] - dd.c) - (h2 - traceless2)).abs();

        // covariant derivatives: minus coefficients pick +i omega34, plus
        // pick -i omega34
        let om_dbar = Complex64::new(dd.omega34_u[k], dd.omega34_v[k]) * 0.5;
        let om_dz = Complex64::new(dd.omega34_u[k], -dd.omega34_v[k]) * 0.5;
        let cov_bm = dbar_bm[k] + i * om_dbar * bm[k];
        let cov_bp = dbar_bp[k] - i * om_dbar * bp[k];
        let cov_em = dz_em[k] + i * om_dz * em[k];
        let cov_ep = dz_ep[k] - i * om_dz * ep[k];
        let cm = cov_bm - 0.5 * l2 * cov_em;
        let cp = cov_bp - 0.5 * l2 * cov_ep;
        codazzi[k] = (2.0 * (cm.norm_sqr() + cp.norm_sqr())).sqrt();

        let kn_beta = 2.0 * (u[0] * v[1] - u[1] * v[0]);
        let kn_omega = -(du_om_v[k] - dv_om_u[k]) / l2;
        ricci[k] = (kn_beta - kn_omega).abs();

        if dd.trusted[k] {
            max_gauss = max_gauss.max(gauss[k]);
            max_codazzi = max_codazzi.max(codazzi[k]);
            max_ricci = max_ricci.max(ricci[k]);
        }
    }
    GcrResiduals {
        gauss,
        codazzi,
        ricci,
        max_gauss,
        max_codazzi,
        max_ricci,
    }
}

// ---------------------------------------------------------------------------
// SO(4) frame integration
// ---------------------------------------------------------------------------

type Mat4 = [[f64; 4]; 4];

fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = 0.0;
            for l in 0..4 {
                acc += a[i][l] * b[l][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

fn mat_add_scaled(a: &Mat4, s: f64, b: &Mat4) -> Mat4 {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += s * b[i][j];
        }
    }
    out
}

fn mat_transpose(a: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i];
        }
    }
    out
}

fn mat_inverse(a: &Mat4) -> Option<Mat4> {
    let mut m = [[0.0f64; 8]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = a[i][j];
        }
        m[i][4 + i] = 1.0;
    }
    for col in 0..4 {
        let mut piv = col;
        for row in col + 1..4 {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        let d = m[col][col];
        for j in 0..8 {
            m[col][j] /= d;
        }
        for row in 0..4 {
            if row != col {
                let f = m[row][col];
                for j in 0..8 {
                    m[row][j] -= f * m[col][j];
                }
            }
        }
    }
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = m[i][4 + j];
        }
    }
    Some(out)
}

fn mat_frobenius_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let d = a[i][j] - b[i][j];
            acc += d * d;
        }
    }
    acc.sqrt()
}

/// Polar projection to the orthogonal group: Newton iteration
/// `X <- (X + X^{-T}) / 2`, quadratically convergent from near-orthogonal
/// matrices.
fn polar_project(a: &Mat4) -> Mat4 {
    let mut x = *a;
    for _ in 0..4 {
        let inv_t = match mat_inverse(&x) {
            Some(inv) => mat_transpose(&inv),
            None => return x,
        };
        let next = mat_add_scaled(&mat_add_scaled(&[[0.0; 4]; 4], 0.5, &x), 0.5, &inv_t);
        if mat_frobenius_diff(&next, &x) < 1e-15 {
            return next;
        }
        x = next;
    }
    x
}

/// Connection matrix `A(dir)` at a node: `dF = F A`, with
/// `A[m][k] = omega_{k m}(dir)` for the frame order `(e1, e2, e3, e4)`.
fn connection_matrices(dd: &DeformationData) -> (Vec<Mat4>, Vec<Mat4>) {
    let grid = &dd.grid;
    let n = grid.n_nodes();
    let lam_u = chart::d_du(&dd.lambda, grid);
    let lam_v = chart::d_dv(&dd.lambda, grid);
    let mut a_u = vec![[[0.0; 4]; 4]; n];
    let mut a_v = vec![[[0.0; 4]; 4]; n];
    for k in 0..n {
        let lam = dd.lambda[k];
        let om12_u = -lam_v[k] / lam;
        let om12_v = lam_u[k] / lam;
        // omega_{i a}(e_j-dual) = <beta(e_i, e_j), e_a> lambda on du/dv
        let fill = |mat: &mut Mat4, om12: f64, b1: &[f64; 2], b2: &[f64; 2], om34: f64| {
            let mut set = |k_idx: usize, m_idx: usize, val: f64| {
                mat[m_idx][k_idx] = val;
                mat[k_idx][m_idx] = -val;
            };
            set(0, 1, om12);
            set(0, 2, lam * b1[0]);
            set(0, 3, lam * b1[1]);
            set(1, 2, lam * b2[0]);
            set(1, 3, lam * b2[1]);
            set(2, 3, om34);
        };
        // mat[m][k] = omega_{km}: set(k, m, omega_km)
        fill(
            &mut a_u[k],
            om12_u,
            &dd.beta11[k],
            &dd.beta12[k],
            dd.omega34_u[k],
        );
        fill(
            &mut a_v[k],
            om12_v,
            &dd.beta12[k],
            &dd.beta22[k],
            dd.omega34_v[k],
        );
    }
    (a_u, a_v)
}

/// Cubic (or one-sided quadratic) interpolation of per-node values to the
/// midpoint of the step `i -> i+1` along a line of length `n`.
fn midpoint_weights(i: usize, n: usize, periodic: bool) -> ([usize; 4], [f64; 4]) {
    if periodic {
        (
            [(i + n - 1) % n, i, (i + 1) % n, (i + 2) % n],
            [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0],
        )
    } else if i == 0 {
        ([0, 1, 2, 2], [0.375, 0.75, -0.125, 0.0])
    } else if i + 2 >= n {
        ([i - 1, i, i + 1, i + 1], [-0.125, 0.75, 0.375, 0.0])
    } else {
        (
            [i - 1, i, i + 1, i + 2],
            [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0],
        )
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// The reconstructed immersion on an open copy of the chart (periodic
    /// flags dropped: the data may have nontrivial monodromy, which is
    /// reported, not resolved).
    pub surface: ImmersionGrid,
    /// Frame at every node, columns `(e1, e2, e3, e4)`.
    pub frames: Vec<Mat4>,
    /// Max frame discrepancy between column-first and row-first
    /// integration.
    pub path_independence: f64,
    /// `max |I_reconstructed - lambda^2 delta|` over the interior.
    pub metric_residual: f64,
    /// Monodromy defect of frame + position over the `u`-period (0 on open
    /// charts).
    pub closure_u: f64,
    /// Same over the `v`-period.
    pub closure_v: f64,
}

struct LineData<'a> {
    a_mats: &'a [Mat4],
    lambda: &'a [f64],
    nodes: Vec<usize>,
    h: f64,
    periodic: bool,
    dir_col: usize,
}

/// One fourth-order step of the coupled frame/position system from line
/// index `i` to `i+1`.
fn rk4_step(state: &mut (Mat4, Vec4), i: usize, line: &LineData) {
    let n = line.nodes.len();
    let a0 = line.a_mats[line.nodes[i]];
    let a1 = {
        let (idx, w) = midpoint_weights(i, n, line.periodic);
        let mut acc = [[0.0; 4]; 4];
        for (j, wj) in idx.iter().zip(w.iter()) {
            acc = mat_add_scaled(&acc, *wj, &line.a_mats[line.nodes[*j]]);
        }
        acc
    };
    let a2 = line.a_mats[line.nodes[(i + 1) % n]];
    let l0 = line.lambda[line.nodes[i]];
    let l1 = {
        let (idx, w) = midpoint_weights(i, n, line.periodic);
        idx.iter()
            .zip(w.iter())
            .map(|(j, wj)| wj * line.lambda[line.nodes[*j]])
            .sum::<f64>()
    };
    let l2 = line.lambda[line.nodes[(i + 1) % n]];
    let h = line.h;

    let col = |m: &Mat4| -> Vec4 {
        Vec4([
            m[0][line.dir_col],
            m[1][line.dir_col],
            m[2][line.dir_col],
            m[3][line.dir_col],
        ])
    };

    let (f0, p0) = (state.0, state.1);
    let k1 = mat_mul(&f0, &a0);
    let q1 = col(&f0).scale(l0);
    let f_k2 = mat_add_scaled(&f0, 0.5 * h, &k1);
    let k2 = mat_mul(&f_k2, &a1);
    let q2 = col(&f_k2).scale(l1);
    let f_k3 = mat_add_scaled(&f0, 0.5 * h, &k2);
    let k3 = mat_mul(&f_k3, &a1);
    let q3 = col(&f_k3).scale(l1);
    let f_k4 = mat_add_scaled(&f0, h, &k3);
    let k4 = mat_mul(&f_k4, &a2);
    let q4 = col(&f_k4).scale(l2);

    let mut f_next = f0;
    for (w, k) in [(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)] {
        f_next = mat_add_scaled(&f_next, w * h / 6.0, k);
    }
    let p_next = p0
        .add(&q1.scale(h / 6.0))
        .add(&q2.scale(h / 3.0))
        .add(&q3.scale(h / 3.0))
        .add(&q4.scale(h / 6.0));
    state.0 = polar_project(&f_next);
    state.1 = p_next;
}

fn integrate_grid(
    dd: &DeformationData,
    a_u: &[Mat4],
    a_v: &[Mat4],
    seed: (Mat4, Vec4),
    column_first: bool,
) -> (Vec<Mat4>, Vec<Vec4>) {
    let grid = &dd.grid;
    let n = grid.n_nodes();
    let mut frames = vec![[[0.0; 4]; 4]; n];
    let mut points = vec![Vec4::ZERO; n];

    let u_line = |iv: usize| -> LineData {
        LineData {
            a_mats: a_u,
            lambda: &dd.lambda,
            nodes: (0..grid.nu).map(|iu| grid.idx(iu, iv)).collect(),
            h: grid.hu(),
            periodic: grid.periodic_u,
            dir_col: 0,
        }
    };
    let v_line = |iu: usize| -> LineData {
        LineData {
            a_mats: a_v,
            lambda: &dd.lambda,
            nodes: (0..grid.nv).map(|iv| grid.idx(iu, iv)).collect(),
            h: grid.hv(),
            periodic: grid.periodic_v,
            dir_col: 1,
        }
    };

    if column_first {
        // down the first column, then across every row
        let line = v_line(0);
        let mut state = seed;
        frames[grid.idx(0, 0)] = state.0;
        points[grid.idx(0, 0)] = state.1;
        for iv in 0..grid.nv - 1 {
            rk4_step(&mut state, iv, &line);
            frames[grid.idx(0, iv + 1)] = state.0;
            points[grid.idx(0, iv + 1)] = state.1;
        }
        for iv in 0..grid.nv {
            let line = u_line(iv);
            let mut state = (frames[grid.idx(0, iv)], points[grid.idx(0, iv)]);
            for iu in 0..grid.nu - 1 {
                rk4_step(&mut state, iu, &line);
                frames[grid.idx(iu + 1, iv)] = state.0;
                points[grid.idx(iu + 1, iv)] = state.1;
            }
        }
    } else {
        let line = u_line(0);
        let mut state = seed;
        frames[grid.idx(0, 0)] = state.0;
        points[grid.idx(0, 0)] = state.1;
        for iu in 0..grid.nu - 1 {
            rk4_step(&mut state, iu, &line);
            frames[grid.idx(iu + 1, 0)] = state.0;
            points[grid.idx(iu + 1, 0)] = state.1;
        }
        for iu in 0..grid.nu {
            let line = v_line(iu);
            let mut state = (frames[grid.idx(iu, 0)], points[grid.idx(iu, 0)]);
            for iv in 0..grid.nv - 1 {
                rk4_step(&mut state, iv, &line);
                frames[grid.idx(iu, iv + 1)] = state.0;
                points[grid.idx(iu, iv + 1)] = state.1;
            }
        }
    }
    (frames, points)
}

/// Integrate the structure equations and rebuild the surface.  Euclidean
/// ambient only; periodic flags are ignored during the march (universal
/// cover rectangle) and the closure defects are reported.
pub fn reconstruct(
    dd: &DeformationData,
    seed_frame: &Frame4,
    seed_point: &Vec4,
) -> Result<ReconstructionResult> {
    if dd.c != 0.0 {
        return Err(Error::CurvedAmbientReconstruction);
    }
    seed_frame.validate()?;
    let grid = &dd.grid;
    let (a_u, a_v) = connection_matrices(dd);

    let mut seed_mat = [[0.0; 4]; 4];
    for (j, e) in seed_frame.columns().iter().enumerate() {
        for i in 0..4 {
            seed_mat[i][j] = e.0[i];
        }
    }
    let seed = (seed_mat, *seed_point);

    let (frames, points) = integrate_grid(dd, &a_u, &a_v, seed, true);
    let (frames2, _) = integrate_grid(dd, &a_u, &a_v, seed, false);

    let mut path_independence = 0.0f64;
    for k in 0..grid.n_nodes() {
        path_independence = path_independence.max(mat_frobenius_diff(&frames[k], &frames2[k]));
    }

    // closure defects over the periods
    let mut closure_u = 0.0;
    if grid.periodic_u {
        let line = LineData {
            a_mats: &a_u,
            lambda: &dd.lambda,
            nodes: (0..grid.nu).map(|iu| grid.idx(iu, 0)).collect(),
            h: grid.hu(),
            periodic: true,
            dir_col: 0,
        };
        let mut state = (frames[grid.idx(grid.nu - 1, 0)], points[grid.idx(grid.nu - 1, 0)]);
        rk4_step(&mut state, grid.nu - 1, &line);
        closure_u = mat_frobenius_diff(&state.0, &frames[grid.idx(0, 0)])
            + state.1.sub(&points[grid.idx(0, 0)]).norm();
    }
    let mut closure_v = 0.0;
    if grid.periodic_v {
        let line = LineData {
            a_mats: &a_v,
            lambda: &dd.lambda,
            nodes: (0..grid.nv).map(|iv| grid.idx(0, iv)).collect(),
            h: grid.hv(),
            periodic: true,
            dir_col: 1,
        };
        let mut state = (frames[grid.idx(0, grid.nv - 1)], points[grid.idx(0, grid.nv - 1)]);
        rk4_step(&mut state, grid.nv - 1, &line);
        closure_v = mat_frobenius_diff(&state.0, &frames[grid.idx(0, 0)])
            + state.1.sub(&points[grid.idx(0, 0)]).norm();
    }

    // the output chart is open: the march unrolled any periodic direction
    let open_grid = ChartGrid::new(
        grid.u0,
        grid.u0 + (grid.nu - 1) as f64 * grid.hu(),
        grid.v0,
        grid.v0 + (grid.nv - 1) as f64 * grid.hv(),
        grid.nu,
        grid.nv,
        false,
        false,
    )?;
    let mut position = vec![0.0; 4 * grid.n_nodes()];
    let mut d1 = vec![0.0; 8 * grid.n_nodes()];
    let mut d2 = vec![0.0; 12 * grid.n_nodes()];
    let lam_u = chart::d_du(&dd.lambda, grid);
    let lam_v = chart::d_dv(&dd.lambda, grid);
    for k in 0..grid.n_nodes() {
        position[4 * k..4 * (k + 1)].copy_from_slice(&points[k].0);
        let lam = dd.lambda[k];
        let e = |col: usize, i: usize| frames[k][i][col];
        for i in 0..4 {
            d1[8 * k + i] = lam * e(0, i);
            d1[8 * k + 4 + i] = lam * e(1, i);
        }
        // the structure equations carry the full second jet:
        // f_uu = d_u(lambda e1), f_uv = d_v(lambda e1), f_vv = d_v(lambda e2)
        let om12_u = -lam_v[k] / lam;
        let om12_v = lam_u[k] / lam;
        for i in 0..4 {
            d2[12 * k + i] = lam_u[k] * e(0, i)
                + lam * (om12_u * e(1, i)
                    + lam * dd.beta11[k][0] * e(2, i)
                    + lam * dd.beta11[k][1] * e(3, i));
            d2[12 * k + 4 + i] = lam_v[k] * e(0, i)
                + lam * (om12_v * e(1, i)
                    + lam * dd.beta12[k][0] * e(2, i)
                    + lam * dd.beta12[k][1] * e(3, i));
            d2[12 * k + 8 + i] = lam_v[k] * e(1, i)
                + lam * (-om12_v * e(0, i)
                    + lam * dd.beta22[k][0] * e(2, i)
                    + lam * dd.beta22[k][1] * e(3, i));
        }
    }
    let surface = ImmersionGrid {
        grid: open_grid,
        ambient_dim: 4,
        c: 0.0,
        position,
        d1: Some(d1),
        d2: Some(d2),
        analytic: None,
    };

    // first fundamental form of the reconstructed positions vs lambda^2,
    // differentiated independently of the frames (the sampled d1 would make
    // this check circular)
    let mut metric_residual = 0.0f64;
    {
        let positions_only = ImmersionGrid {
            d1: None,
            d2: None,
            ..surface.clone()
        };
        let jets = positions_only.jets()?;
        let margin_u = ChartGrid::margin(grid.nu);
        let margin_v = ChartGrid::margin(grid.nv);
        for iv in margin_v..grid.nv - margin_v {
            for iu in margin_u..grid.nu - margin_u {
                let k = grid.idx(iu, iv);
                let l2 = dd.lambda[k] * dd.lambda[k];
                let e = crate::immersion::avec_dot(&jets[k].fu, &jets[k].fu);
                let g = crate::immersion::avec_dot(&jets[k].fv, &jets[k].fv);
                let f = crate::immersion::avec_dot(&jets[k].fu, &jets[k].fv);
                metric_residual = metric_residual
                    .max((e - l2).abs())
                    .max((g - l2).abs())
                    .max(f.abs());
            }
        }
    }

    // consistency gate: path independence must sit at the level the data's
    // own structure-equation residuals allow
    let gcr = gcr_residuals(dd);
    let area = (grid.u1 - grid.u0) * (grid.v1 - grid.v0);
    let lam_max = dd.lambda.iter().fold(0.0f64, |m, &x| m.max(x));
    let gcr_scale = (gcr.max_gauss + gcr.max_ricci + gcr.max_codazzi / (lam_max * lam_max).max(1e-300))
        * area
        * lam_max
        * lam_max;
    if path_independence > 10.0 * gcr_scale + 1e-7 {
        return Err(Error::IntegrationInconsistent {
            defect: path_independence,
            scale: gcr_scale,
        });
    }

    Ok(ReconstructionResult {
        surface,
        frames,
        path_independence,
        metric_residual,
        closure_u,
        closure_v,
    })
}

/// Seed frame and point taken from the source surface at the grid origin,
/// so that the zero deformation reconstructs the source itself.
pub fn source_seed(fd: &FundamentalData) -> (Frame4, Vec4) {
    let k = 0;
    let to4 = |v: crate::immersion::AVec| Vec4([v[0], v[1], v[2], v[3]]);
    (
        Frame4 {
            e1: to4(fd.frame_vec(1, k)),
            e2: to4(fd.frame_vec(2, k)),
            e3: to4(fd.frame_vec(3, k)),
            e4: to4(fd.frame_vec(4, k)),
        },
        Vec4::ZERO,
    )
}

// ---------------------------------------------------------------------------
// Congruence alignment
// ---------------------------------------------------------------------------

/// Symmetric 4x4 Jacobi eigen decomposition; returns eigenvalues and the
/// matrix of column eigenvectors.
fn jacobi_eigen4(m: &Mat4) -> ([f64; 4], Mat4) {
    let mut a = *m;
    let mut v = [[0.0f64; 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..64 {
        let (mut p, mut q, mut big) = (0usize, 1usize, 0.0f64);
        for i in 0..4 {
            for j in (i + 1)..4 {
                if a[i][j].abs() > big {
                    big = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        let trace: f64 = (0..4).map(|i| a[i][i].abs()).sum();
        if big < 1e-15 * trace.max(1e-300) {
            break;
        }
        let theta = 0.5 * (2.0 * a[p][q]).atan2(a[p][p] - a[q][q]);
        let (c, s) = (theta.cos(), theta.sin());
        let mut rot = [[0.0f64; 4]; 4];
        for (i, row) in rot.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        rot[p][p] = c;
        rot[q][q] = c;
        rot[p][q] = -s;
        rot[q][p] = s;
        a = mat_mul(&mat_transpose(&rot), &mat_mul(&a, &rot));
        v = mat_mul(&v, &rot);
    }
    ([a[0][0], a[1][1], a[2][2], a[3][3]], v)
}

/// Best orientation-preserving rigid motion taking `a` onto `b` in the
/// least-squares sense, and the residual RMS distance.
pub fn procrustes_align(a: &ImmersionGrid, b: &ImmersionGrid) -> Result<(RigidMotion, f64)> {
    if a.grid.nu != b.grid.nu || a.grid.nv != b.grid.nv {
        return Err(Error::GridMismatch);
    }
    if a.ambient_dim != 4 || b.ambient_dim != 4 {
        return Err(Error::Format("alignment needs 4-dimensional ambient".into()));
    }
    let n = a.grid.n_nodes();
    let mut ca = [0.0f64; 4];
    let mut cb = [0.0f64; 4];
    for k in 0..n {
        for d in 0..4 {
            ca[d] += a.position[4 * k + d];
            cb[d] += b.position[4 * k + d];
        }
    }
    for d in 0..4 {
        ca[d] /= n as f64;
        cb[d] /= n as f64;
    }
    // cross covariance M = sum (b - cb)(a - ca)^T
    let mut m = [[0.0f64; 4]; 4];
    for k in 0..n {
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] +=
                    (b.position[4 * k + i] - cb[i]) * (a.position[4 * k + j] - ca[j]);
            }
        }
    }
    // SVD via eigen of M^T M
    let mtm = mat_mul(&mat_transpose(&m), &m);
    let (vals, vecs) = jacobi_eigen4(&mtm);
    // sort by decreasing eigenvalue
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&x, &y| vals[y].partial_cmp(&vals[x]).unwrap());
    let sigma: Vec<f64> = order.iter().map(|&i| vals[i].max(0.0).sqrt()).collect();
    if sigma[2] < 1e-12 * sigma[0].max(1e-300) {
        return Err(Error::DegenerateCovariance);
    }
    let mut vmat = [[0.0; 4]; 4]; // columns: sorted eigenvectors
    for (col, &i) in order.iter().enumerate() {
        for r in 0..4 {
            vmat[r][col] = vecs[r][i];
        }
    }
    // U columns: M v / sigma where solid; last column completed by
    // orthogonality if needed
    let mut umat = [[0.0; 4]; 4];
    for col in 0..4 {
        if sigma[col] > 1e-12 * sigma[0] {
            for r in 0..4 {
                let mut acc = 0.0;
                for l in 0..4 {
                    acc += m[r][l] * vmat[l][col];
                }
                umat[r][col] = acc / sigma[col];
            }
        } else {
            // orthonormal complement of the first three columns
            let cols: Vec<crate::immersion::AVec> = (0..3)
                .map(|c| {
                    let mut v = [0.0; 5];
                    for r in 0..4 {
                        v[r] = umat[r][c];
                    }
                    v
                })
                .collect();
            let comp = orientation_complement4(&cols);
            for r in 0..4 {
                umat[r][col] = comp[r];
            }
        }
    }
    // orientation-preserving correction on the smallest singular direction
    let det_uv = {
        let mut f = Frame4::STANDARD;
        let uvt = mat_mul(&umat, &mat_transpose(&vmat));
        f.e1 = Vec4([uvt[0][0], uvt[1][0], uvt[2][0], uvt[3][0]]);
        f.e2 = Vec4([uvt[0][1], uvt[1][1], uvt[2][1], uvt[3][1]]);
        f.e3 = Vec4([uvt[0][2], uvt[1][2], uvt[2][2], uvt[3][2]]);
        f.e4 = Vec4([uvt[0][3], uvt[1][3], uvt[2][3], uvt[3][3]]);
        f.det()
    };
    let mut d = [1.0, 1.0, 1.0, 1.0];
    if det_uv < 0.0 {
        d[3] = -1.0;
    }
    let mut rot = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = 0.0;
            for l in 0..4 {
                acc += umat[i][l] * d[l] * vmat[j][l];
            }
            rot[i][j] = acc;
        }
    }
    // translation: cb - R ca
    let mut t = [0.0; 4];
    for i in 0..4 {
        let mut acc = 0.0;
        for j in 0..4 {
            acc += rot[i][j] * ca[j];
        }
        t[i] = cb[i] - acc;
    }
    let motion = RigidMotion {
        dim: 4,
        matrix: rot.iter().flatten().copied().collect(),
        translation: t.to_vec(),
    };
    // rms
    let mut acc = 0.0;
    for k in 0..n {
        let mut p = [0.0; 5];
        p[..4].copy_from_slice(&a.position[4 * k..4 * k + 4]);
        let moved = motion.apply_vec(&p);
        let mut d2 = 0.0;
        for i in 0..4 {
            let d = moved[i] + motion.translation[i] - b.position[4 * k + i];
            d2 += d * d;
        }
        acc += d2;
    }
    let rms = (acc / n as f64).sqrt();
    Ok((motion, rms))
}

fn orientation_complement4(cols: &[crate::immersion::AVec]) -> [f64; 4] {
    // v with <v, x> = det[cols..., x]
    let mut out = [0.0; 4];
    for i in 0..4 {
        let mut m = [[0.0; 4]; 4];
        for (j, c) in cols.iter().enumerate() {
            for r in 0..4 {
                m[r][j] = c[r];
            }
        }
        let mut basis = [0.0; 4];
        basis[i] = 1.0;
        for r in 0..4 {
            m[r][3] = basis[r];
        }
        out[i] = crate::geom::det4(&m);
    }
    let norm = (out.iter().map(|x| x * x).sum::<f64>()).sqrt().max(1e-300);
    for x in out.iter_mut() {
        *x /= norm;
    }
    out
}
