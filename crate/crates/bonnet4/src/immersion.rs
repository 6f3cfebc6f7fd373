//! Sources of surfaces: built-in closed-form examples with analytic jets,
//! Surface Grid JSON I/O, jet evaluation and rigid motions.
//!
//! Positions live in `R^4` (`c = 0`) or on the sphere of radius `1/sqrt(c)`
//! in `R^5` (`c > 0`).  Hyperbolic ambients (`c < 0`) are rejected at load
//! time.  Ambient vectors are carried as `[f64; 5]` with a trailing zero in
//! the 4-dimensional case.

use serde::{Deserialize, Serialize};

use crate::chart::{self, ChartGrid};
use crate::error::{Error, Result};

/// Maximum ambient dimension (sphere case).
pub const MAX_DIM: usize = 5;

/// Ambient vector; only the first `dim` components are meaningful.
pub type AVec = [f64; MAX_DIM];

pub fn avec_dot(a: &AVec, b: &AVec) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn avec_norm(a: &AVec) -> f64 {
    avec_dot(a, a).sqrt()
}

pub fn avec_scale(a: &AVec, s: f64) -> AVec {
    let mut out = *a;
    for x in out.iter_mut() {
        *x *= s;
    }
    out
}

pub fn avec_add(a: &AVec, b: &AVec) -> AVec {
    let mut out = *a;
    for (x, y) in out.iter_mut().zip(b.iter()) {
        *x += y;
    }
    out
}

pub fn avec_sub(a: &AVec, b: &AVec) -> AVec {
    let mut out = *a;
    for (x, y) in out.iter_mut().zip(b.iter()) {
        *x -= y;
    }
    out
}

/// `a + s * b`.
pub fn avec_axpy(a: &AVec, s: f64, b: &AVec) -> AVec {
    let mut out = *a;
    for (x, y) in out.iter_mut().zip(b.iter()) {
        *x += s * y;
    }
    out
}

/// Second-order jet of the immersion at one node.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jet2 {
    pub f: AVec,
    pub fu: AVec,
    pub fv: AVec,
    pub fuu: AVec,
    pub fuv: AVec,
    pub fvv: AVec,
}

/// Built-in closed-form examples.  Every one of them is isothermal by
/// construction; `sphere` and `whitney_sphere` come on open charts that
/// exclude the poles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Example {
    /// `(a cos(u/a), a sin(u/a), b cos(v/b), b sin(v/b))`, flat Lagrangian
    /// torus with parallel mean curvature.
    ProductTorus { a: f64, b: f64 },
    /// `(cos u, sin u, cos v, sin v)/sqrt2`, the Clifford torus of `S^3`
    /// viewed in `R^4`.
    CliffordTorus,
    /// Round sphere of radius `r` in `R^3 x {0}`, Mercator chart.
    Sphere { r: f64 },
    /// Whitney sphere on the Mercator chart, Lagrangian for the canonical
    /// complex structure used in [`crate::lagrangian`].
    WhitneySphere,
    /// Holomorphic curve `(z, z^2)`, i.e. `(u, v, u^2 - v^2, 2uv)`.
    ComplexCurveZz2,
    /// Near-flat graph `(u, v, eps w1, eps w2)` with a fixed non-holomorphic
    /// `w`; generic control surface (no vertically harmonic Gauss lift).
    Graph { eps: f64 },
    /// Torus of revolution with radii `big_r > small_r`, conformally
    /// reparametrized profile; generic non-CMC closed surface.
    RevolutionTorus { big_r: f64, small_r: f64 },
}

/// Half-width of the open Mercator charts.  Caps beyond the chart carry an
/// area fraction of order `e^{-2 MERCATOR_SPAN}`, below every topological
/// tolerance used in the verification battery.
pub const MERCATOR_SPAN: f64 = 6.0;

impl Example {
    pub fn parse(name: &str, params: &ExampleParams) -> Result<Example> {
        let ex = match name {
            "product_torus" => Example::ProductTorus {
                a: params.a,
                b: params.b,
            },
            "clifford" | "clifford_torus" => Example::CliffordTorus,
            "sphere" => Example::Sphere { r: params.r },
            "whitney" | "whitney_sphere" => Example::WhitneySphere,
            "complex_curve_zz2" => Example::ComplexCurveZz2,
            "graph" => Example::Graph { eps: params.eps },
            "revolution_torus" => Example::RevolutionTorus {
                big_r: params.big_r,
                small_r: params.small_r,
            },
            other => return Err(Error::UnknownExample(other.to_string())),
        };
        ex.validate_params()?;
        Ok(ex)
    }

    pub fn names() -> &'static [&'static str] {
        &[
            "product_torus",
            "clifford_torus",
            "sphere",
            "whitney_sphere",
            "complex_curve_zz2",
            "graph",
            "revolution_torus",
        ]
    }

    fn validate_params(&self) -> Result<()> {
        match *self {
            Example::ProductTorus { a, b } if a <= 0.0 || b <= 0.0 => Err(Error::BadParameter(
                format!("product_torus radii must be positive, got a={a}, b={b}"),
            )),
            Example::Sphere { r } if r <= 0.0 => Err(Error::BadParameter(format!(
                "sphere radius must be positive, got r={r}"
            ))),
            Example::Graph { eps } if eps <= 0.0 || eps > 2e-3 => Err(Error::BadParameter(
                format!("graph amplitude must lie in (0, 2e-3] to stay isothermal, got eps={eps}"),
            )),
            Example::RevolutionTorus { big_r, small_r }
                if !(small_r > 0.0 && big_r > 2.0 * small_r) =>
            {
                Err(Error::BadParameter(format!(
                    "revolution_torus needs big_r > 2 small_r > 0 (nonvanishing mean curvature), got {big_r}, {small_r}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Natural chart of the example.
    pub fn domain(&self, nu: usize, nv: usize) -> Result<ChartGrid> {
        use std::f64::consts::PI;
        match *self {
            Example::ProductTorus { a, b } => {
                ChartGrid::new(0.0, 2.0 * PI * a, 0.0, 2.0 * PI * b, nu, nv, true, true)
            }
            Example::CliffordTorus => {
                ChartGrid::new(0.0, 2.0 * PI, 0.0, 2.0 * PI, nu, nv, true, true)
            }
            Example::Sphere { .. } | Example::WhitneySphere => ChartGrid::new(
                0.0,
                2.0 * PI,
                -MERCATOR_SPAN,
                MERCATOR_SPAN,
                nu,
                nv,
                true,
                false,
            ),
            Example::ComplexCurveZz2 => ChartGrid::new(-1.5, 1.5, -1.5, 1.5, nu, nv, false, false),
            Example::Graph { .. } => ChartGrid::new(0.0, 2.0 * PI, 0.0, 2.0 * PI, nu, nv, false, false),
            Example::RevolutionTorus { big_r, small_r } => {
                let m = (big_r * big_r - small_r * small_r).sqrt();
                ChartGrid::new(0.0, 2.0 * PI, 0.0, 2.0 * PI * small_r / m, nu, nv, true, true)
            }
        }
    }

    /// Closed-form jet at chart coordinates `(u, v)`.
    pub fn jet(&self, u: f64, v: f64) -> Jet2 {
        match *self {
            Example::ProductTorus { a, b } => {
                let (cu, su) = ((u / a).cos(), (u / a).sin());
                let (cv, sv) = ((v / b).cos(), (v / b).sin());
                Jet2 {
                    f: [a * cu, a * su, b * cv, b * sv, 0.0],
                    fu: [-su, cu, 0.0, 0.0, 0.0],
                    fv: [0.0, 0.0, -sv, cv, 0.0],
                    fuu: [-cu / a, -su / a, 0.0, 0.0, 0.0],
                    fuv: [0.0; 5],
                    fvv: [0.0, 0.0, -cv / b, -sv / b, 0.0],
                }
            }
            Example::CliffordTorus => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let (cu, su) = (u.cos(), u.sin());
                let (cv, sv) = (v.cos(), v.sin());
                Jet2 {
                    f: [s * cu, s * su, s * cv, s * sv, 0.0],
                    fu: [-s * su, s * cu, 0.0, 0.0, 0.0],
                    fv: [0.0, 0.0, -s * sv, s * cv, 0.0],
                    fuu: [-s * cu, -s * su, 0.0, 0.0, 0.0],
                    fuv: [0.0; 5],
                    fvv: [0.0, 0.0, -s * cv, -s * sv, 0.0],
                }
            }
            Example::Sphere { r } => {
                let (cu, su) = (u.cos(), u.sin());
                let s = 1.0 / v.cosh();
                let t = v.tanh();
                // s' = -s t, t' = s^2
                let sp = -s * t;
                let spp = -(s * (s * s - t * t)); // s'' = -(st)'
                let s2p = -2.0 * s * s * t; // (s^2)'
                Jet2 {
                    f: [r * s * cu, r * s * su, r * t, 0.0, 0.0],
                    fu: [-r * s * su, r * s * cu, 0.0, 0.0, 0.0],
                    fv: [r * sp * cu, r * sp * su, r * s * s, 0.0, 0.0],
                    fuu: [-r * s * cu, -r * s * su, 0.0, 0.0, 0.0],
                    fuv: [-r * sp * su, r * sp * cu, 0.0, 0.0, 0.0],
                    fvv: [r * spp * cu, r * spp * su, r * s2p, 0.0, 0.0],
                }
            }
            Example::WhitneySphere => {
                let (cu, su) = (u.cos(), u.sin());
                let s = 1.0 / v.cosh();
                let t = v.tanh();
                let d = 1.0 + t * t;
                let g = s / d;
                let h = s * t / d;
                let gp = -s * t * (3.0 - t * t) / (d * d);
                let hp = s * (1.0 - 3.0 * t * t) / (d * d);
                let gpp = s * (-3.0 + 9.0 * t * t - 4.0 * t.powi(4)) / (d * d)
                    + 4.0 * s.powi(3) * t * t * (3.0 - t * t) / d.powi(3);
                let hpp = s * t * (9.0 * t * t - 7.0) / (d * d)
                    - 4.0 * s.powi(3) * t * (1.0 - 3.0 * t * t) / d.powi(3);
                // (f1, f2, f3, f4) = (g cu, h cu, h su, g su): Lagrangian for
                // the block structure with the second complex plane conjugated.
                Jet2 {
                    f: [g * cu, h * cu, h * su, g * su, 0.0],
                    fu: [-g * su, -h * su, h * cu, g * cu, 0.0],
                    fv: [gp * cu, hp * cu, hp * su, gp * su, 0.0],
                    fuu: [-g * cu, -h * cu, -h * su, -g * su, 0.0],
                    fuv: [-gp * su, -hp * su, hp * cu, gp * cu, 0.0],
                    fvv: [gpp * cu, hpp * cu, hpp * su, gpp * su, 0.0],
                }
            }
            Example::ComplexCurveZz2 => Jet2 {
                f: [u, v, u * u - v * v, 2.0 * u * v, 0.0],
                fu: [1.0, 0.0, 2.0 * u, 2.0 * v, 0.0],
                fv: [0.0, 1.0, -2.0 * v, 2.0 * u, 0.0],
                fuu: [0.0, 0.0, 2.0, 0.0, 0.0],
                fuv: [0.0, 0.0, 0.0, 2.0, 0.0],
                fvv: [0.0, 0.0, -2.0, 0.0, 0.0],
            },
            Example::Graph { eps } => {
                // w1 = sin u cos 2v, w2 = cos 2u sin v
                let (su, cu) = (u.sin(), u.cos());
                let (s2u, c2u) = ((2.0 * u).sin(), (2.0 * u).cos());
                let (sv, cv) = (v.sin(), v.cos());
                let (s2v, c2v) = ((2.0 * v).sin(), (2.0 * v).cos());
                Jet2 {
                    f: [u, v, eps * su * c2v, eps * c2u * sv, 0.0],
                    fu: [1.0, 0.0, eps * cu * c2v, -2.0 * eps * s2u * sv, 0.0],
                    fv: [0.0, 1.0, -2.0 * eps * su * s2v, eps * c2u * cv, 0.0],
                    fuu: [0.0, 0.0, -eps * su * c2v, -4.0 * eps * c2u * sv, 0.0],
                    fuv: [0.0, 0.0, -2.0 * eps * cu * s2v, -2.0 * eps * s2u * cv, 0.0],
                    fvv: [0.0, 0.0, -4.0 * eps * su * c2v, -eps * c2u * sv, 0.0],
                }
            }
            Example::RevolutionTorus { big_r, small_r } => {
                let (r0, r1) = (big_r, small_r);
                let m = (r0 * r0 - r1 * r1).sqrt();
                let kk = ((r0 + r1) / (r0 - r1)).sqrt();
                let th = m * v / (2.0 * r1);
                let (sth, cth) = (th.sin(), th.cos());
                let den = cth * cth + kk * kk * sth * sth;
                let cpsi = (cth * cth - kk * kk * sth * sth) / den;
                let spsi = 2.0 * kk * sth * cth / den;
                let w = (r0 + r1 * cpsi) / r1; // = d psi / d v
                let wp = -spsi * w;
                let wpp = -cpsi * w * w + spsi * spsi * w;
                let cpw_p = -spsi * w * w - spsi * cpsi * w; // (cpsi * w)'
                let (cu, su) = (u.cos(), u.sin());
                Jet2 {
                    f: [r1 * w * cu, r1 * w * su, r1 * spsi, 0.0, 0.0],
                    fu: [-r1 * w * su, r1 * w * cu, 0.0, 0.0, 0.0],
                    fv: [r1 * wp * cu, r1 * wp * su, r1 * cpsi * w, 0.0, 0.0],
                    fuu: [-r1 * w * cu, -r1 * w * su, 0.0, 0.0, 0.0],
                    fuv: [-r1 * wp * su, r1 * wp * cu, 0.0, 0.0, 0.0],
                    fvv: [r1 * wpp * cu, r1 * wpp * su, r1 * cpw_p, 0.0, 0.0],
                }
            }
        }
    }
}

/// Parameters accepted by [`make_example`]; unused entries are ignored.
#[derive(Debug, Clone, Copy)]
pub struct ExampleParams {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub eps: f64,
    pub big_r: f64,
    pub small_r: f64,
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams {
            a: 1.0,
            b: 1.0,
            r: 1.0,
            eps: 5e-4,
            big_r: 3.0,
            small_r: 1.0,
        }
    }
}

/// Sampled immersion over a chart grid.
#[derive(Debug, Clone)]
pub struct ImmersionGrid {
    pub grid: ChartGrid,
    pub ambient_dim: usize,
    /// Ambient curvature: 0 for `R^4`; `c > 0` puts the position field on
    /// the sphere of radius `1/sqrt(c)` in `R^5`.
    pub c: f64,
    /// `ambient_dim` reals per node, node-major.
    pub position: Vec<f64>,
    /// Optional sampled first derivatives, `f_u` then `f_v` per node.
    pub d1: Option<Vec<f64>>,
    /// Optional sampled second derivatives, `f_uu, f_uv, f_vv` per node.
    pub d2: Option<Vec<f64>>,
    /// Closed-form jet provider when the surface is a built-in example.
    pub analytic: Option<Example>,
}

impl ImmersionGrid {
    pub fn position_at(&self, k: usize) -> AVec {
        let mut out = [0.0; MAX_DIM];
        out[..self.ambient_dim]
            .copy_from_slice(&self.position[self.ambient_dim * k..self.ambient_dim * (k + 1)]);
        out
    }

    /// Hermitian check of the sphere constraint for `c > 0`.
    pub fn validate_sphere_constraint(&self) -> Result<()> {
        if self.c <= 0.0 {
            return Ok(());
        }
        let radius = 1.0 / self.c.sqrt();
        for k in 0..self.grid.n_nodes() {
            let p = self.position_at(k);
            let norm = avec_norm(&p);
            if (norm - radius).abs() > 1e-9 * radius.max(1.0) {
                let (iu, iv) = self.grid.iu_iv(k);
                return Err(Error::OffSphere {
                    iu,
                    iv,
                    norm,
                    radius,
                });
            }
        }
        Ok(())
    }

    /// Second-order jets at every node.  Analytic jets win; otherwise each
    /// derivative level uses the sampled payload when present and central
    /// finite differences of the best available lower level otherwise
    /// (periodic wrap where flagged).
    pub fn jets(&self) -> Result<Vec<Jet2>> {
        let n = self.grid.n_nodes();
        let dim = self.ambient_dim;
        let mut jets = vec![Jet2::default(); n];

        if let Some(example) = self.analytic {
            for iv in 0..self.grid.nv {
                for iu in 0..self.grid.nu {
                    let k = self.grid.idx(iu, iv);
                    jets[k] = example.jet(self.grid.u(iu), self.grid.v(iv));
                }
            }
        } else {
            for (k, j) in jets.iter_mut().enumerate() {
                j.f = self.position_at(k);
            }
            match &self.d1 {
                Some(d1) => {
                    for (k, j) in jets.iter_mut().enumerate() {
                        j.fu[..dim].copy_from_slice(&d1[2 * dim * k..2 * dim * k + dim]);
                        j.fv[..dim]
                            .copy_from_slice(&d1[2 * dim * k + dim..2 * dim * k + 2 * dim]);
                    }
                }
                None => {
                    let mut comp = vec![0.0; n];
                    for d in 0..dim {
                        for k in 0..n {
                            comp[k] = self.position[dim * k + d];
                        }
                        let du = chart::d_du(&comp, &self.grid);
                        let dv = chart::d_dv(&comp, &self.grid);
                        for k in 0..n {
                            jets[k].fu[d] = du[k];
                            jets[k].fv[d] = dv[k];
                        }
                    }
                }
            }
            match &self.d2 {
                Some(d2) => {
                    for (k, j) in jets.iter_mut().enumerate() {
                        j.fuu[..dim].copy_from_slice(&d2[3 * dim * k..3 * dim * k + dim]);
                        j.fuv[..dim]
                            .copy_from_slice(&d2[3 * dim * k + dim..3 * dim * k + 2 * dim]);
                        j.fvv[..dim]
                            .copy_from_slice(&d2[3 * dim * k + 2 * dim..3 * dim * k + 3 * dim]);
                    }
                }
                None => {
                    // differentiate the first-derivative fields (sampled or
                    // already finite-differenced)
                    let mut fu_c = vec![0.0; n];
                    let mut fv_c = vec![0.0; n];
                    for d in 0..dim {
                        for k in 0..n {
                            fu_c[k] = jets[k].fu[d];
                            fv_c[k] = jets[k].fv[d];
                        }
                        let duu = chart::d_du(&fu_c, &self.grid);
                        let dvv = chart::d_dv(&fv_c, &self.grid);
                        let duv = chart::d_dv(&fu_c, &self.grid);
                        for k in 0..n {
                            jets[k].fuu[d] = duu[k];
                            jets[k].fuv[d] = duv[k];
                            jets[k].fvv[d] = dvv[k];
                        }
                    }
                }
            }
        }

        for (k, j) in jets.iter().enumerate() {
            let lambda = avec_norm(&j.fu);
            if lambda <= 1e-14 {
                let (iu, iv) = self.grid.iu_iv(k);
                return Err(Error::DegenerateImmersion { iu, iv, lambda });
            }
        }
        Ok(jets)
    }

    /// Conformal factor field `lambda = |f_u|`.
    pub fn conformal_factor(&self) -> Result<Vec<f64>> {
        Ok(self.jets()?.iter().map(|j| avec_norm(&j.fu)).collect())
    }

    /// Normalized isothermality report; errors when the chart is not
    /// isothermal.  With analytic or sampled first derivatives the
    /// tolerance is [`chart::ISOTHERMAL_TOL`]; with finite-difference jets
    /// the check allows for their own `O(h^2)` truncation.
    pub fn validate_isothermal(&self) -> Result<chart::IsothermalReport> {
        let jets = self.jets()?;
        let dim = self.ambient_dim;
        let mut d1 = vec![0.0; 2 * dim * jets.len()];
        for (k, j) in jets.iter().enumerate() {
            d1[2 * dim * k..2 * dim * k + dim].copy_from_slice(&j.fu[..dim]);
            d1[2 * dim * k + dim..2 * dim * (k + 1)].copy_from_slice(&j.fv[..dim]);
        }
        let tol = if self.analytic.is_some() || self.d1.is_some() {
            chart::ISOTHERMAL_TOL
        } else {
            let (hu, hv) = (self.grid.hu(), self.grid.hv());
            chart::ISOTHERMAL_TOL.max(hu * hu + hv * hv)
        };
        chart::require_isothermal(&d1, dim, &self.grid, tol)
    }
}

/// Build a built-in example on an `nu x nv` grid.  Analytic jets are
/// attached and also sampled into the `d1`/`d2` payload so that a saved
/// file keeps jet-exact data.
pub fn make_example(example: Example, nu: usize, nv: usize) -> Result<ImmersionGrid> {
    example.validate_params()?;
    let grid = example.domain(nu, nv)?;
    let dim = 4;
    let n = grid.n_nodes();
    let mut position = vec![0.0; dim * n];
    let mut d1 = vec![0.0; 2 * dim * n];
    let mut d2 = vec![0.0; 3 * dim * n];
    for iv in 0..grid.nv {
        for iu in 0..grid.nu {
            let k = grid.idx(iu, iv);
            let j = example.jet(grid.u(iu), grid.v(iv));
            position[dim * k..dim * (k + 1)].copy_from_slice(&j.f[..dim]);
            d1[2 * dim * k..2 * dim * k + dim].copy_from_slice(&j.fu[..dim]);
            d1[2 * dim * k + dim..2 * dim * (k + 1)].copy_from_slice(&j.fv[..dim]);
            d2[3 * dim * k..3 * dim * k + dim].copy_from_slice(&j.fuu[..dim]);
            d2[3 * dim * k + dim..3 * dim * k + 2 * dim].copy_from_slice(&j.fuv[..dim]);
            d2[3 * dim * k + 2 * dim..3 * dim * (k + 1)].copy_from_slice(&j.fvv[..dim]);
        }
    }
    let surface = ImmersionGrid {
        grid,
        ambient_dim: dim,
        c: 0.0,
        position,
        d1: Some(d1),
        d2: Some(d2),
        analytic: Some(example),
    };
    // every built-in example must hold up its side of the contract
    surface.validate_isothermal()?;
    Ok(surface)
}

/// Convenience wrapper used by the CLI: name + parameter bag.
pub fn make_example_named(
    name: &str,
    params: &ExampleParams,
    nu: usize,
    nv: usize,
) -> Result<ImmersionGrid> {
    make_example(Example::parse(name, params)?, nu, nv)
}

// ---------------------------------------------------------------------------
// Surface Grid JSON (version 1)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SurfaceGridFile {
    version: u32,
    c: f64,
    domain: ChartGrid,
    ambient_dim: usize,
    position: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d1: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d2: Option<Vec<Vec<f64>>>,
}

fn flatten(rows: &[Vec<f64>], per_node: usize, n: usize, what: &str) -> Result<Vec<f64>> {
    if rows.len() != n {
        return Err(Error::Format(format!(
            "{what}: expected nu*nv = {n} rows, got {}",
            rows.len()
        )));
    }
    let mut out = Vec::with_capacity(per_node * n);
    for (k, row) in rows.iter().enumerate() {
        if row.len() != per_node {
            return Err(Error::Format(format!(
                "{what}: row {k} has {} entries, expected {per_node}",
                row.len()
            )));
        }
        for &x in row {
            if !x.is_finite() {
                return Err(Error::Format(format!("{what}: non-finite value at row {k}")));
            }
            out.push(x);
        }
    }
    Ok(out)
}

fn unflatten(flat: &[f64], per_node: usize) -> Vec<Vec<f64>> {
    flat.chunks(per_node).map(|c| c.to_vec()).collect()
}

pub fn to_json(surface: &ImmersionGrid) -> Result<String> {
    let dim = surface.ambient_dim;
    let file = SurfaceGridFile {
        version: 1,
        c: surface.c,
        domain: surface.grid,
        ambient_dim: dim,
        position: unflatten(&surface.position, dim),
        d1: surface.d1.as_ref().map(|d| unflatten(d, 2 * dim)),
        d2: surface.d2.as_ref().map(|d| unflatten(d, 3 * dim)),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn from_json(text: &str) -> Result<ImmersionGrid> {
    let file: SurfaceGridFile = serde_json::from_str(text)?;
    if file.version != 1 {
        return Err(Error::Format(format!(
            "unsupported surface grid version {}",
            file.version
        )));
    }
    if file.c < 0.0 {
        return Err(Error::Format(
            "hyperbolic ambient (c < 0) is not supported".to_string(),
        ));
    }
    if file.ambient_dim != 4 && file.ambient_dim != 5 {
        return Err(Error::Format(format!(
            "ambient_dim must be 4 or 5, got {}",
            file.ambient_dim
        )));
    }
    if file.c > 0.0 && file.ambient_dim != 5 {
        return Err(Error::Format(
            "c > 0 requires ambient_dim = 5 (sphere in R^5)".to_string(),
        ));
    }
    let grid = ChartGrid::new(
        file.domain.u0,
        file.domain.u1,
        file.domain.v0,
        file.domain.v1,
        file.domain.nu,
        file.domain.nv,
        file.domain.periodic_u,
        file.domain.periodic_v,
    )?;
    let n = grid.n_nodes();
    let dim = file.ambient_dim;
    let surface = ImmersionGrid {
        grid,
        ambient_dim: dim,
        c: file.c,
        position: flatten(&file.position, dim, n, "position")?,
        d1: file
            .d1
            .as_ref()
            .map(|rows| flatten(rows, 2 * dim, n, "d1"))
            .transpose()?,
        d2: file
            .d2
            .as_ref()
            .map(|rows| flatten(rows, 3 * dim, n, "d2"))
            .transpose()?,
        analytic: None,
    };
    surface.validate_sphere_constraint()?;
    Ok(surface)
}

pub fn save_grid(surface: &ImmersionGrid, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, to_json(surface)?)?;
    Ok(())
}

pub fn load_grid(path: &std::path::Path) -> Result<ImmersionGrid> {
    from_json(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Rigid motions
// ---------------------------------------------------------------------------

/// Ambient isometry `x -> A x + t` with `A` orthogonal; `t = 0` is forced
/// for `c > 0`.
#[derive(Debug, Clone)]
pub struct RigidMotion {
    pub dim: usize,
    /// Row-major `dim x dim` orthogonal matrix.
    pub matrix: Vec<f64>,
    pub translation: Vec<f64>,
}

impl RigidMotion {
    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        RigidMotion {
            dim,
            matrix,
            translation: vec![0.0; dim],
        }
    }

    /// Rotation by `angle` in the coordinate plane `(i, j)`.
    pub fn rotation_in_plane(dim: usize, i: usize, j: usize, angle: f64) -> Self {
        let mut m = Self::identity(dim);
        let (c, s) = (angle.cos(), angle.sin());
        m.matrix[i * dim + i] = c;
        m.matrix[i * dim + j] = -s;
        m.matrix[j * dim + i] = s;
        m.matrix[j * dim + j] = c;
        m
    }

    /// Reflection flipping the axis `i` (determinant -1).
    pub fn reflection(dim: usize, i: usize) -> Self {
        let mut m = Self::identity(dim);
        m.matrix[i * dim + i] = -1.0;
        m
    }

    pub fn with_translation(mut self, t: &[f64]) -> Self {
        self.translation = t.to_vec();
        self
    }

    pub fn apply_vec(&self, x: &AVec) -> AVec {
        let mut out = [0.0; MAX_DIM];
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..self.dim {
                acc += self.matrix[i * self.dim + j] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn det(&self) -> f64 {
        // dim <= 5; Laplace expansion via a small LU is overkill, use
        // Gaussian elimination with partial pivoting.
        let n = self.dim;
        let mut m = self.matrix.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut piv = col;
            for row in col + 1..n {
                if m[row * n + col].abs() > m[piv * n + col].abs() {
                    piv = row;
                }
            }
            if m[piv * n + col].abs() < 1e-300 {
                return 0.0;
            }
            if piv != col {
                for k in 0..n {
                    m.swap(col * n + k, piv * n + k);
                }
                det = -det;
            }
            det *= m[col * n + col];
            for row in col + 1..n {
                let factor = m[row * n + col] / m[col * n + col];
                for k in col..n {
                    m[row * n + k] -= factor * m[col * n + k];
                }
            }
        }
        det
    }

    pub fn validate(&self, c: f64) -> Result<()> {
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                let mut g = 0.0;
                for k in 0..n {
                    g += self.matrix[k * n + i] * self.matrix[k * n + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                if (g - target).abs() > 1e-12 {
                    return Err(Error::NotOrthogonal { tol: 1e-12 });
                }
            }
        }
        if c > 0.0 && self.translation.iter().any(|&t| t != 0.0) {
            return Err(Error::SphereTranslation);
        }
        Ok(())
    }
}

/// Move a surface by a rigid motion.  Jets are composed with the motion and
/// stored as sampled data (the result is no longer a named example).
pub fn apply_rigid_motion(surface: &ImmersionGrid, motion: &RigidMotion) -> Result<ImmersionGrid> {
    if motion.dim != surface.ambient_dim {
        return Err(Error::Format(format!(
            "motion dimension {} does not match ambient dimension {}",
            motion.dim, surface.ambient_dim
        )));
    }
    motion.validate(surface.c)?;
    let jets = surface.jets()?;
    let dim = surface.ambient_dim;
    let n = surface.grid.n_nodes();
    let mut position = vec![0.0; dim * n];
    let mut d1 = vec![0.0; 2 * dim * n];
    let mut d2 = vec![0.0; 3 * dim * n];
    for (k, j) in jets.iter().enumerate() {
        let f = avec_add_translation(&motion.apply_vec(&j.f), &motion.translation, dim);
        let fu = motion.apply_vec(&j.fu);
        let fv = motion.apply_vec(&j.fv);
        let fuu = motion.apply_vec(&j.fuu);
        let fuv = motion.apply_vec(&j.fuv);
        let fvv = motion.apply_vec(&j.fvv);
        position[dim * k..dim * (k + 1)].copy_from_slice(&f[..dim]);
        d1[2 * dim * k..2 * dim * k + dim].copy_from_slice(&fu[..dim]);
        d1[2 * dim * k + dim..2 * dim * (k + 1)].copy_from_slice(&fv[..dim]);
        d2[3 * dim * k..3 * dim * k + dim].copy_from_slice(&fuu[..dim]);
        d2[3 * dim * k + dim..3 * dim * k + 2 * dim].copy_from_slice(&fuv[..dim]);
        d2[3 * dim * k + 2 * dim..3 * dim * (k + 1)].copy_from_slice(&fvv[..dim]);
    }
    Ok(ImmersionGrid {
        grid: surface.grid,
        ambient_dim: dim,
        c: surface.c,
        position,
        d1: Some(d1),
        d2: Some(d2),
        analytic: None,
    })
}

fn avec_add_translation(x: &AVec, t: &[f64], dim: usize) -> AVec {
    let mut out = *x;
    for i in 0..dim.min(t.len()) {
        out[i] += t[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_example_is_isothermal_with_analytic_jets() {
        let defaults = ExampleParams::default();
        for name in Example::names() {
            let surf = make_example_named(name, &defaults, 32, 32).unwrap();
            let rep = surf.validate_isothermal().unwrap();
            // the graph is isothermal only to O(eps^2); everything
            // else is exact
            let tol = if name == &"graph" { chart::ISOTHERMAL_TOL } else { 1e-9 };
            assert!(
                rep.max_e_minus_g < tol && rep.max_f < tol,
                "{name}: {rep:?}"
            );
        }
    }

    #[test]
    fn analytic_jets_match_finite_differences() {
        // independent check of every hand-derived jet formula
        let defaults = ExampleParams::default();
        for name in Example::names() {
            let surf = make_example_named(name, &defaults, 48, 48).unwrap();
            let example = surf.analytic.unwrap();
            let (hu, hv) = (1e-5, 1e-5);
            for &(u, v) in &[(0.7, 0.9), (2.0, 1.3)] {
                let j = example.jet(u, v);
                let jup = example.jet(u + hu, v);
                let jum = example.jet(u - hu, v);
                let jvp = example.jet(u, v + hv);
                let jvm = example.jet(u, v - hv);
                for d in 0..4 {
                    let fu_fd = (jup.f[d] - jum.f[d]) / (2.0 * hu);
                    let fv_fd = (jvp.f[d] - jvm.f[d]) / (2.0 * hv);
                    let fuu_fd = (jup.f[d] - 2.0 * j.f[d] + jum.f[d]) / (hu * hu);
                    let fvv_fd = (jvp.f[d] - 2.0 * j.f[d] + jvm.f[d]) / (hv * hv);
                    let fuv_fd = (jvp.fu[d] - jvm.fu[d]) / (2.0 * hv);
                    let scale = 1.0 + j.f[d].abs();
                    assert!((fu_fd - j.fu[d]).abs() < 1e-7 * scale, "{name} fu");
                    assert!((fv_fd - j.fv[d]).abs() < 1e-7 * scale, "{name} fv");
                    assert!((fuu_fd - j.fuu[d]).abs() < 1e-4 * scale, "{name} fuu");
                    assert!((fvv_fd - j.fvv[d]).abs() < 1e-4 * scale, "{name} fvv");
                    assert!((fuv_fd - j.fuv[d]).abs() < 1e-7 * scale, "{name} fuv");
                }
            }
        }
    }

    #[test]
    fn product_torus_second_jet_value() {
        let j = Example::ProductTorus { a: 1.0, b: 1.0 }.jet(0.0, 0.0);
        assert_eq!(&j.fuu[..4], &[-1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn fd_jets_converge_to_analytic_on_clifford() {
        let mut errs = Vec::new();
        for n in [32usize, 64] {
            let mut surf = make_example(Example::CliffordTorus, n, n).unwrap();
            surf.analytic = None;
            surf.d1 = None;
            surf.d2 = None;
            let fd = surf.jets().unwrap();
            let exact = make_example(Example::CliffordTorus, n, n)
                .unwrap()
                .jets()
                .unwrap();
            let mut worst: f64 = 0.0;
            for k in 0..fd.len() {
                for d in 0..4 {
                    worst = worst.max((fd[k].fu[d] - exact[k].fu[d]).abs());
                    worst = worst.max((fd[k].fuu[d] - exact[k].fuu[d]).abs());
                    worst = worst.max((fd[k].fuv[d] - exact[k].fuv[d]).abs());
                }
            }
            errs.push(worst);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.3 && ratio < 4.7, "ratio {ratio}");
    }

    #[test]
    fn constant_map_is_degenerate() {
        let grid = ChartGrid::new(0.0, 1.0, 0.0, 1.0, 8, 8, false, false).unwrap();
        let surf = ImmersionGrid {
            grid,
            ambient_dim: 4,
            c: 0.0,
            position: vec![1.0; 4 * grid.n_nodes()],
            d1: None,
            d2: None,
            analytic: None,
        };
        assert!(matches!(
            surf.jets(),
            Err(Error::DegenerateImmersion { .. })
        ));
    }

    #[test]
    fn json_round_trip_is_bit_identical() {
        let surf = make_example(Example::ProductTorus { a: 1.0, b: 1.0 }, 16, 16).unwrap();
        let text = to_json(&surf).unwrap();
        let back = from_json(&text).unwrap();
        assert_eq!(surf.position, back.position);
        assert_eq!(surf.d1, back.d1);
        assert_eq!(surf.d2, back.d2);
        assert_eq!(surf.grid, back.grid);
    }

    #[test]
    fn truncated_payload_is_rejected_with_expected_size() {
        let surf = make_example(Example::CliffordTorus, 8, 8).unwrap();
        let mut file: serde_json::Value = serde_json::from_str(&to_json(&surf).unwrap()).unwrap();
        file["position"].as_array_mut().unwrap().pop();
        let err = from_json(&file.to_string()).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("64"), "{msg}");
    }

    #[test]
    fn off_sphere_point_is_rejected() {
        let grid = ChartGrid::new(0.0, 1.0, 0.0, 1.0, 8, 8, true, true).unwrap();
        let n = grid.n_nodes();
        let mut position = vec![0.0; 5 * n];
        for k in 0..n {
            position[5 * k] = 1.0; // on the unit sphere
        }
        position[5 * 3] = 1.5; // except node 3
        let file = SurfaceGridFile {
            version: 1,
            c: 1.0,
            domain: grid,
            ambient_dim: 5,
            position: unflatten(&position, 5),
            d1: None,
            d2: None,
        };
        let err = from_json(&serde_json::to_string(&file).unwrap()).unwrap_err();
        assert!(matches!(err, Error::OffSphere { iu: 3, iv: 0, .. }), "{err}");
    }

    #[test]
    fn rigid_motion_must_be_orthogonal() {
        let mut m = RigidMotion::identity(4);
        m.matrix[0] = 1.1;
        assert!(m.validate(0.0).is_err());
    }

    #[test]
    fn identity_motion_preserves_grid() {
        let surf = make_example(Example::CliffordTorus, 16, 16).unwrap();
        let moved = apply_rigid_motion(&surf, &RigidMotion::identity(4)).unwrap();
        assert_eq!(surf.position, moved.position);
    }

    #[test]
    fn unknown_example_and_bad_params() {
        let defaults = ExampleParams::default();
        assert!(matches!(
            make_example_named("moebius", &defaults, 16, 16),
            Err(Error::UnknownExample(_))
        ));
        let bad = ExampleParams {
            r: 0.0,
            ..ExampleParams::default()
        };
        assert!(matches!(
            make_example_named("sphere", &bad, 16, 16),
            Err(Error::BadParameter(_))
        ));
    }
}

