//! Lagrangian diagnostics in `(R^4, J~)`: the Lagrangian test, Maslov
//! form, mean curvature form, cubic differential, and their holomorphy
//! residuals.
//!
//! The canonical complex structure is fixed once: `J~ (a, b, c, d) =
//! (-b, a, d, -c)`, i.e. multiplication by `i` on the first complex plane
//! `(x1, x2)` and by `-i` on the second `(x3, x4)`.  This is the choice
//! compatible with the standard orientation of `R^4` (for orthonormal
//! `e1, e2` spanning a Lagrangian plane, `{e1, e2, J~ e1, J~ e2}` is
//! positively oriented), its Kaehler form is anti-self-dual, and the product
//! torus `(cos u, sin u, cos v, sin v)` is Lagrangian for it.

use num_complex::Complex64;

use crate::chart;
use crate::error::{Error, Result};
use crate::immersion::{avec_dot, AVec, Jet2};
use crate::invariants::{FundamentalData, HopfData};

/// Orthogonal complex structure on `R^4` compatible with the orientation,
/// with its Kaehler form `Omega(x, y) = <x, J~ y>`.
#[derive(Debug, Clone, Copy)]
pub struct KahlerStructure {
    /// Row-major 4x4 matrix of `J~`.
    pub matrix: [[f64; 4]; 4],
}

impl KahlerStructure {
    /// The canonical structure described in the module docs.
    pub fn standard() -> Self {
        KahlerStructure {
            matrix: [
                [0.0, -1.0, 0.0, 0.0],
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, -1.0, 0.0],
            ],
        }
    }

    pub fn apply(&self, x: &AVec) -> AVec {
        let mut out = [0.0; 5];
        for i in 0..4 {
            for j in 0..4 {
                out[i] += self.matrix[i][j] * x[j];
            }
        }
        out
    }

    /// Kaehler form on real vectors.
    pub fn omega(&self, x: &AVec, y: &AVec) -> f64 {
        avec_dot(x, &self.apply(y))
    }

    /// Complex-bilinear Kaehler form, `y` complex with real and imaginary
    /// ambient parts.
    pub fn omega_c(&self, x: &AVec, y_re: &AVec, y_im: &AVec) -> Complex64 {
        Complex64::new(self.omega(x, y_re), self.omega(x, y_im))
    }
}

/// Tolerance under which a surface counts as Lagrangian.
pub const LAGRANGIAN_TOL: f64 = 1e-6;

/// Per-node `|Omega(f_u, f_v)| / lambda^2`; identically zero on Lagrangian
/// surfaces.
pub fn lagrangian_test(jets: &[Jet2], fd: &FundamentalData, structure: &KahlerStructure) -> Vec<f64> {
    jets.iter()
        .zip(fd.lambda.iter())
        .map(|(j, &lam)| structure.omega(&j.fu, &j.fv).abs() / (lam * lam))
        .collect()
}

/// Maslov form, mean curvature form and cubic differential with their
/// holomorphy residuals.
#[derive(Debug, Clone)]
pub struct LagrangianData {
    /// Components of the Maslov 1-form `(1/pi) Omega(f_* X, H)`.
    pub maslov_u: Vec<f64>,
    pub maslov_v: Vec<f64>,
    /// Coefficient of the mean curvature form `Omega(H, f_* dz)`.
    pub upsilon: Vec<Complex64>,
    /// Coefficient of the cubic differential `Omega(alpha(dz,dz), f_* dz)`.
    pub theta: Vec<Complex64>,
    /// Normalized `max |dbar upsilon|` over trusted nodes.
    pub holo_res_upsilon: f64,
    /// Normalized `max |dbar theta|` over trusted nodes.
    pub holo_res_theta: f64,
    /// Largest coefficient moduli over trusted nodes; a differential whose
    /// coefficient sits at rounding level is holomorphic trivially and its
    /// normalized residual is meaningless.
    pub upsilon_max: f64,
    pub theta_max: f64,
    /// Largest plus-isotropic component of `J~ f_* dz` relative to lambda;
    /// zero exactly when `J~` maps `T^{(1,0)}` into the minus bundle.
    pub isotropy_residual: f64,
    /// Loop integrals of the Maslov form over the two grid circles
    /// (diagnostic; integer-valued on closed Lagrangian tori).
    pub maslov_loop_u: f64,
    pub maslov_loop_v: f64,
}

/// Compute the Lagrangian differentials.  Errors unless the surface passes
/// the Lagrangian test at [`LAGRANGIAN_TOL`].
pub fn lagrangian_differentials(
    jets: &[Jet2],
    fd: &FundamentalData,
    hd: &HopfData,
    structure: &KahlerStructure,
) -> Result<LagrangianData> {
    if fd.c != 0.0 {
        return Err(Error::CurvedAmbient(fd.c));
    }
    let residual = lagrangian_test(jets, fd, structure);
    let worst = residual.iter().fold(0.0f64, |m, &x| m.max(x));
    if worst > LAGRANGIAN_TOL {
        return Err(Error::NotLagrangian(worst));
    }

    let n = fd.n_nodes();
    let grid = &fd.grid;
    let mut maslov_u = vec![0.0; n];
    let mut maslov_v = vec![0.0; n];
    let mut upsilon = vec![Complex64::default(); n];
    let mut theta = vec![Complex64::default(); n];
    let mut isotropy = 0.0f64;

    for (k, j) in jets.iter().enumerate() {
        let h = fd.h_ambient(k);
        maslov_u[k] = structure.omega(&j.fu, &h) / std::f64::consts::PI;
        maslov_v[k] = structure.omega(&j.fv, &h) / std::f64::consts::PI;

        // f_* dz = (f_u - i f_v)/2
        let fdz_re = [j.fu[0] * 0.5, j.fu[1] * 0.5, j.fu[2] * 0.5, j.fu[3] * 0.5, 0.0];
        let fdz_im = [
            -j.fv[0] * 0.5,
            -j.fv[1] * 0.5,
            -j.fv[2] * 0.5,
            -j.fv[3] * 0.5,
            0.0,
        ];
        upsilon[k] = structure.omega_c(&h, &fdz_re, &fdz_im);

        // alpha(dz,dz) in ambient coordinates: (lambda^2/2)(u - i v)
        let e3 = fd.frame_vec(3, k);
        let e4 = fd.frame_vec(4, k);
        let half_l2 = 0.5 * fd.lambda[k] * fd.lambda[k];
        let upair = [
            0.5 * (fd.alpha11[k][0] - fd.alpha22[k][0]),
            0.5 * (fd.alpha11[k][1] - fd.alpha22[k][1]),
        ];
        let vpair = fd.alpha12[k];
        let mut add_re = [0.0; 5];
        let mut add_im = [0.0; 5];
        for d in 0..4 {
            add_re[d] = half_l2 * (upair[0] * e3[d] + upair[1] * e4[d]);
            add_im[d] = -half_l2 * (vpair[0] * e3[d] + vpair[1] * e4[d]);
        }
        // Omega(alpha(dz,dz), f_* dz), complex bilinear in both slots
        let om_re = structure.omega_c(&add_re, &fdz_re, &fdz_im);
        let om_im = structure.omega_c(&add_im, &fdz_re, &fdz_im);
        theta[k] = om_re + Complex64::i() * om_im;

        // isotropic-leg identity: J~ f_* dz has no plus component
        let jf_re = structure.apply(&fdz_re);
        let jf_im = structure.apply(&fdz_im);
        let a = Complex64::new(avec_dot(&jf_re, &e3), avec_dot(&jf_im, &e3));
        let b = Complex64::new(avec_dot(&jf_re, &e4), avec_dot(&jf_im, &e4));
        let plus = (a - Complex64::i() * b) * 0.5;
        isotropy = isotropy.max(plus.norm() / fd.lambda[k]);
    }

    // plain dbar of the scalar coefficients (both differentials are
    // scalar-valued; single-chart input, no cross-chart weight needed)
    let (_, dbar_ups) = chart::wirtinger(&upsilon, grid);
    let (_, dbar_th) = chart::wirtinger(&theta, grid);
    let mut num_u = 0.0f64;
    let mut num_t = 0.0f64;
    let mut den_u = 0.0f64;
    let mut den_t = 0.0f64;
    for k in 0..n {
        if !fd.trusted[k] {
            continue;
        }
        num_u = num_u.max(dbar_ups[k].norm());
        num_t = num_t.max(dbar_th[k].norm());
        den_u = den_u.max(upsilon[k].norm());
        den_t = den_t.max(theta[k].norm());
    }

    // diagnostic Maslov loop integrals along mid-grid circles
    let mid_v = grid.nv / 2;
    let mut loop_u = 0.0;
    for iu in 0..grid.nu {
        loop_u += maslov_u[grid.idx(iu, mid_v)] * grid.hu();
    }
    let mid_u = grid.nu / 2;
    let mut loop_v = 0.0;
    for iv in 0..grid.nv {
        loop_v += maslov_v[grid.idx(mid_u, iv)] * grid.hv();
    }

    let _ = hd;
    Ok(LagrangianData {
        maslov_u,
        maslov_v,
        upsilon,
        theta,
        holo_res_upsilon: num_u / den_u.max(1e-300),
        holo_res_theta: num_t / den_t.max(1e-300),
        upsilon_max: den_u,
        theta_max: den_t,
        isotropy_residual: isotropy,
        maslov_loop_u: loop_u,
        maslov_loop_v: loop_v,
    })
}
