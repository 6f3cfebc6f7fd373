//! Discrete calculus on rectangular parameter grids in isothermal
//! coordinates: Wirtinger derivatives, Laplace-Beltrami, surface integrals
//! and periodicity handling.
//!
//! All stencils are second order.  Periodic directions wrap; open edges use
//! one-sided second-order stencils and are flagged untrusted by
//! [`ChartGrid::trusted_mask`].  Fields are immutable snapshots and every
//! operation is a pure map over nodes with read-only shared input, so
//! callers may freely parallelize over nodes.

use std::io::Write;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Per-node scalar values over a [`ChartGrid`]; length `nu * nv`.
pub type ScalarField = Vec<f64>;
/// Per-node complex values over a [`ChartGrid`].
pub type ComplexField = Vec<Complex64>;

/// Rectangular parameter grid.  Node index is `iv * nu + iu` (u fastest).
/// In a periodic direction the right/top edge is identified with the left/
/// bottom one, so the spacing is `(u1 - u0) / nu`; open directions include
/// both endpoints and use `(u1 - u0) / (nu - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChartGrid {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
    pub nu: usize,
    pub nv: usize,
    pub periodic_u: bool,
    pub periodic_v: bool,
}

/// Minimum node count per direction; below this the one-sided stencils and
/// the trusted margins overlap.
pub const MIN_NODES: usize = 8;

impl ChartGrid {
    pub fn new(
        u0: f64,
        u1: f64,
        v0: f64,
        v1: f64,
        nu: usize,
        nv: usize,
        periodic_u: bool,
        periodic_v: bool,
    ) -> Result<Self> {
        if nu < MIN_NODES || nv < MIN_NODES {
            return Err(Error::GridTooSmall {
                nu,
                nv,
                min: MIN_NODES,
            });
        }
        Ok(ChartGrid {
            u0,
            u1,
            v0,
            v1,
            nu,
            nv,
            periodic_u,
            periodic_v,
        })
    }

    pub fn hu(&self) -> f64 {
        let span = self.u1 - self.u0;
        if self.periodic_u {
            span / self.nu as f64
        } else {
            span / (self.nu - 1) as f64
        }
    }

    pub fn hv(&self) -> f64 {
        let span = self.v1 - self.v0;
        if self.periodic_v {
            span / self.nv as f64
        } else {
            span / (self.nv - 1) as f64
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nu * self.nv
    }

    pub fn idx(&self, iu: usize, iv: usize) -> usize {
        iv * self.nu + iu
    }

    pub fn iu_iv(&self, idx: usize) -> (usize, usize) {
        (idx % self.nu, idx / self.nu)
    }

    pub fn u(&self, iu: usize) -> f64 {
        self.u0 + iu as f64 * self.hu()
    }

    pub fn v(&self, iv: usize) -> f64 {
        self.v0 + iv as f64 * self.hv()
    }

    pub fn closed(&self) -> bool {
        self.periodic_u && self.periodic_v
    }

    /// Untrusted margin width (in nodes) next to an open edge: at least 3
    /// nodes, growing with resolution so the trusted region has a fixed
    /// physical size.
    pub fn margin(n: usize) -> usize {
        3.max(n / 16)
    }

    /// True at nodes far enough from every open edge for cascaded stencils
    /// to be clean.  Periodic directions are fully trusted.
    pub fn trusted_mask(&self) -> Vec<bool> {
        let mu = if self.periodic_u { 0 } else { Self::margin(self.nu) };
        let mv = if self.periodic_v { 0 } else { Self::margin(self.nv) };
        let mut mask = vec![false; self.n_nodes()];
        for iv in 0..self.nv {
            for iu in 0..self.nu {
                let ok_u = self.periodic_u || (iu >= mu && iu + mu < self.nu);
                let ok_v = self.periodic_v || (iv >= mv && iv + mv < self.nv);
                mask[self.idx(iu, iv)] = ok_u && ok_v;
            }
        }
        mask
    }
}

/// Scalar-like element for which the finite-difference stencils make sense.
pub trait FieldValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
}

impl FieldValue for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl FieldValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

fn line_first_derivative<T: FieldValue>(vals: &[T], h: f64, periodic: bool, out: &mut [T]) {
    let n = vals.len();
    let inv2h = 1.0 / (2.0 * h);
    if periodic {
        for i in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            out[i] = (vals[ip] - vals[im]) * inv2h;
        }
    } else {
        out[0] = (vals[0] * (-3.0) + vals[1] * 4.0 - vals[2]) * inv2h;
        for i in 1..n - 1 {
            out[i] = (vals[i + 1] - vals[i - 1]) * inv2h;
        }
        out[n - 1] = (vals[n - 1] * 3.0 - vals[n - 2] * 4.0 + vals[n - 3]) * inv2h;
    }
}

fn line_second_derivative<T: FieldValue>(vals: &[T], h: f64, periodic: bool, out: &mut [T]) {
    let n = vals.len();
    let invh2 = 1.0 / (h * h);
    if periodic {
        for i in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            out[i] = (vals[ip] - vals[i] * 2.0 + vals[im]) * invh2;
        }
    } else {
        out[0] = (vals[0] * 2.0 - vals[1] * 5.0 + vals[2] * 4.0 - vals[3]) * invh2;
        for i in 1..n - 1 {
            out[i] = (vals[i + 1] - vals[i] * 2.0 + vals[i - 1]) * invh2;
        }
        out[n - 1] =
            (vals[n - 1] * 2.0 - vals[n - 2] * 5.0 + vals[n - 3] * 4.0 - vals[n - 4]) * invh2;
    }
}

/// First derivative along u, second-order stencils.
pub fn d_du<T: FieldValue>(field: &[T], grid: &ChartGrid) -> Vec<T> {
    let mut out = vec![T::zero(); field.len()];
    let mut line = vec![T::zero(); grid.nu];
    let mut dline = vec![T::zero(); grid.nu];
    for iv in 0..grid.nv {
        for iu in 0..grid.nu {
            line[iu] = field[grid.idx(iu, iv)];
        }
        line_first_derivative(&line, grid.hu(), grid.periodic_u, &mut dline);
        for iu in 0..grid.nu {
            out[grid.idx(iu, iv)] = dline[iu];
        }
    }
    out
}

/// First derivative along v, second-order stencils.
pub fn d_dv<T: FieldValue>(field: &[T], grid: &ChartGrid) -> Vec<T> {
    let mut out = vec![T::zero(); field.len()];
    let mut line = vec![T::zero(); grid.nv];
    let mut dline = vec![T::zero(); grid.nv];
    for iu in 0..grid.nu {
        for iv in 0..grid.nv {
            line[iv] = field[grid.idx(iu, iv)];
        }
        line_first_derivative(&line, grid.hv(), grid.periodic_v, &mut dline);
        for iv in 0..grid.nv {
            out[grid.idx(iu, iv)] = dline[iv];
        }
    }
    out
}

/// Second derivative along u.
pub fn d2_duu<T: FieldValue>(field: &[T], grid: &ChartGrid) -> Vec<T> {
    let mut out = vec![T::zero(); field.len()];
    let mut line = vec![T::zero(); grid.nu];
    let mut dline = vec![T::zero(); grid.nu];
    for iv in 0..grid.nv {
        for iu in 0..grid.nu {
            line[iu] = field[grid.idx(iu, iv)];
        }
        line_second_derivative(&line, grid.hu(), grid.periodic_u, &mut dline);
        for iu in 0..grid.nu {
            out[grid.idx(iu, iv)] = dline[iu];
        }
    }
    out
}

/// Second derivative along v.
pub fn d2_dvv<T: FieldValue>(field: &[T], grid: &ChartGrid) -> Vec<T> {
    let mut out = vec![T::zero(); field.len()];
    let mut line = vec![T::zero(); grid.nv];
    let mut dline = vec![T::zero(); grid.nv];
    for iu in 0..grid.nu {
        for iv in 0..grid.nv {
            line[iv] = field[grid.idx(iu, iv)];
        }
        line_second_derivative(&line, grid.hv(), grid.periodic_v, &mut dline);
        for iv in 0..grid.nv {
            out[grid.idx(iu, iv)] = dline[iv];
        }
    }
    out
}

/// Wirtinger derivatives of a complex field:
/// `dz = (d_u - i d_v)/2`, `dzbar = (d_u + i d_v)/2`.
pub fn wirtinger(field: &[Complex64], grid: &ChartGrid) -> (ComplexField, ComplexField) {
    let fu = d_du(field, grid);
    let fv = d_dv(field, grid);
    let i = Complex64::i();
    let mut dz = vec![Complex64::new(0.0, 0.0); field.len()];
    let mut dzbar = dz.clone();
    for k in 0..field.len() {
        dz[k] = (fu[k] - i * fv[k]) * 0.5;
        dzbar[k] = (fu[k] + i * fv[k]) * 0.5;
    }
    (dz, dzbar)
}

/// Wirtinger `dzbar` of a real field, returned as a complex field.
pub fn dzbar_of_real(field: &[f64], grid: &ChartGrid) -> ComplexField {
    let fu = d_du(field, grid);
    let fv = d_dv(field, grid);
    (0..field.len())
        .map(|k| Complex64::new(fu[k] * 0.5, fv[k] * 0.5))
        .collect()
}

/// Laplace-Beltrami operator of the metric `lambda^2 |dz|^2`:
/// `(f_uu + f_vv) / lambda^2`.
pub fn laplace_beltrami(f: &[f64], lambda: &[f64], grid: &ChartGrid) -> ScalarField {
    let fuu = d2_duu(f, grid);
    let fvv = d2_dvv(f, grid);
    (0..f.len())
        .map(|k| (fuu[k] + fvv[k]) / (lambda[k] * lambda[k]))
        .collect()
}

/// Integral of `f` against the area element `lambda^2 du dv`.  Midpoint rule
/// in periodic directions, trapezoid weights at open edges.  Returns the
/// value together with a `closed` flag so callers asking topological
/// questions can tell whether the grid actually covers a closed surface.
pub fn surface_integral(f: &[f64], lambda: &[f64], grid: &ChartGrid) -> (f64, bool) {
    let mut acc = 0.0;
    for iv in 0..grid.nv {
        let wv = if grid.periodic_v || (iv > 0 && iv + 1 < grid.nv) {
            1.0
        } else {
            0.5
        };
        for iu in 0..grid.nu {
            let wu = if grid.periodic_u || (iu > 0 && iu + 1 < grid.nu) {
                1.0
            } else {
                0.5
            };
            let k = grid.idx(iu, iv);
            acc += f[k] * lambda[k] * lambda[k] * wu * wv;
        }
    }
    (acc * grid.hu() * grid.hv(), grid.closed())
}

/// Report of the isothermal check: normalized `max |E - G|` and `max |F|`.
#[derive(Debug, Clone, Copy)]
pub struct IsothermalReport {
    pub max_e_minus_g: f64,
    pub max_f: f64,
    pub worst_node: (usize, usize),
}

/// Default tolerance for accepting a chart as isothermal.
pub const ISOTHERMAL_TOL: f64 = 1e-5;

/// Check `|f_u| = |f_v|` and `<f_u, f_v> = 0` from sampled first
/// derivatives (`dim` components per vector, `f_u` then `f_v` per node).
pub fn isothermal_report(d1: &[f64], dim: usize, grid: &ChartGrid) -> IsothermalReport {
    let mut rep = IsothermalReport {
        max_e_minus_g: 0.0,
        max_f: 0.0,
        worst_node: (0, 0),
    };
    let mut worst = 0.0;
    for k in 0..grid.n_nodes() {
        let fu = &d1[2 * dim * k..2 * dim * k + dim];
        let fv = &d1[2 * dim * k + dim..2 * dim * k + 2 * dim];
        let e: f64 = fu.iter().map(|x| x * x).sum();
        let g: f64 = fv.iter().map(|x| x * x).sum();
        let f: f64 = fu.iter().zip(fv.iter()).map(|(a, b)| a * b).sum();
        let l2 = 0.5 * (e + g);
        if l2 <= 0.0 {
            continue;
        }
        let de = (e - g).abs() / l2;
        let df = f.abs() / l2;
        rep.max_e_minus_g = rep.max_e_minus_g.max(de);
        rep.max_f = rep.max_f.max(df);
        if de + df > worst {
            worst = de + df;
            rep.worst_node = grid.iu_iv(k);
        }
    }
    rep
}

pub fn require_isothermal(d1: &[f64], dim: usize, grid: &ChartGrid, tol: f64) -> Result<IsothermalReport> {
    let rep = isothermal_report(d1, dim, grid);
    if rep.max_e_minus_g > tol || rep.max_f > tol {
        let (iu, iv) = rep.worst_node;
        return Err(Error::NonIsothermal {
            iu,
            iv,
            e_minus_g: rep.max_e_minus_g,
            f: rep.max_f,
            tol,
        });
    }
    Ok(rep)
}

/// Write named per-node columns as CSV: `iu,iv,u,v,<names...>`, iv-major row
/// order matching the node indexing.
pub fn write_csv<W: Write>(
    out: &mut W,
    grid: &ChartGrid,
    columns: &[(&str, &[f64])],
) -> Result<()> {
    write!(out, "iu,iv,u,v")?;
    for (name, _) in columns {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for iv in 0..grid.nv {
        for iu in 0..grid.nu {
            let k = grid.idx(iu, iv);
            write!(out, "{},{},{},{}", iu, iv, grid.u(iu), grid.v(iv))?;
            for (_, col) in columns {
                write!(out, ",{}", col[k])?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus_grid(n: usize) -> ChartGrid {
        ChartGrid::new(0.0, 2.0 * std::f64::consts::PI, 0.0, 2.0 * std::f64::consts::PI, n, n, true, true)
            .unwrap()
    }

    #[test]
    fn wirtinger_of_z_and_zbar() {
        // open grid exercises the one-sided stencils too
        let grid = ChartGrid::new(-1.0, 1.0, -1.0, 1.0, 24, 24, false, false).unwrap();
        let mut z = vec![Complex64::new(0.0, 0.0); grid.n_nodes()];
        let mut zbar = z.clone();
        for iv in 0..grid.nv {
            for iu in 0..grid.nu {
                let k = grid.idx(iu, iv);
                z[k] = Complex64::new(grid.u(iu), grid.v(iv));
                zbar[k] = Complex64::new(grid.u(iu), -grid.v(iv));
            }
        }
        let (dz, dzb) = wirtinger(&z, &grid);
        let (dz2, dzb2) = wirtinger(&zbar, &grid);
        for k in 0..grid.n_nodes() {
            assert!((dz[k] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            assert!(dzb[k].norm() < 1e-10);
            assert!(dz2[k].norm() < 1e-10);
            assert!((dzb2[k] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn wirtinger_matches_analytic_derivative_at_second_order() {
        // field e^{i(u+v)}: dz = (1+i)/2 e^{i(u+v)}, dzbar = (1-i)/2...
        // wait: d_u = i f, d_v = i f; dz = (i f - i * i f)/2 = f (i + 1)/2.
        let mut errs = Vec::new();
        for n in [16usize, 32, 64] {
            let grid = torus_grid(n);
            let mut f = vec![Complex64::new(0.0, 0.0); grid.n_nodes()];
            for iv in 0..grid.nv {
                for iu in 0..grid.nu {
                    f[grid.idx(iu, iv)] = Complex64::from_polar(1.0, grid.u(iu) + grid.v(iv));
                }
            }
            let (dz, _) = wirtinger(&f, &grid);
            let mut worst: f64 = 0.0;
            for k in 0..grid.n_nodes() {
                let expect = f[k] * Complex64::new(0.5, 0.5);
                worst = worst.max((dz[k] - expect).norm());
            }
            errs.push(worst);
        }
        // second-order convergence: ratio close to 4 per halving
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 3.3 && ratio < 4.7, "ratio {ratio}");
        }
    }

    #[test]
    fn laplace_of_constant_and_saddle() {
        let grid = ChartGrid::new(-1.0, 1.0, -1.0, 1.0, 16, 16, false, false).unwrap();
        let lambda = vec![1.0; grid.n_nodes()];
        let c = vec![3.5; grid.n_nodes()];
        for x in laplace_beltrami(&c, &lambda, &grid) {
            assert_eq!(x, 0.0);
        }
        let mut saddle = vec![0.0; grid.n_nodes()];
        for iv in 0..grid.nv {
            for iu in 0..grid.nu {
                let (u, v) = (grid.u(iu), grid.v(iv));
                saddle[grid.idx(iu, iv)] = u * u - v * v;
            }
        }
        for x in laplace_beltrami(&saddle, &lambda, &grid) {
            assert!(x.abs() < 1e-9);
        }
    }

    #[test]
    fn laplace_log_lambda_recovers_sphere_curvature() {
        // Mercator chart of the radius-r sphere: lambda = r sech v,
        // Delta log lambda = -K = -1/r^2.
        let r = 1.7;
        let grid = ChartGrid::new(0.0, 2.0 * std::f64::consts::PI, -2.0, 2.0, 48, 48, true, false).unwrap();
        let mut lambda = vec![0.0; grid.n_nodes()];
        for iv in 0..grid.nv {
            for iu in 0..grid.nu {
                lambda[grid.idx(iu, iv)] = r / grid.v(iv).cosh();
            }
        }
        let loglam: Vec<f64> = lambda.iter().map(|x| x.ln()).collect();
        let lap = laplace_beltrami(&loglam, &lambda, &grid);
        let mask = grid.trusted_mask();
        let mut worst: f64 = 0.0;
        for k in 0..grid.n_nodes() {
            if mask[k] {
                worst = worst.max((lap[k] + 1.0 / (r * r)).abs());
            }
        }
        assert!(worst < 2e-3, "worst {worst}");
    }

    #[test]
    fn area_of_flat_torus() {
        let grid = torus_grid(32);
        let one = vec![1.0; grid.n_nodes()];
        let lambda = vec![1.0; grid.n_nodes()];
        let (area, closed) = surface_integral(&one, &lambda, &grid);
        assert!(closed);
        let expect = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
        assert!((area - expect).abs() < 1e-9);
    }

    #[test]
    fn mixed_wirtinger_commutes_on_periodic_grids() {
        let grid = torus_grid(24);
        let mut f = vec![Complex64::new(0.0, 0.0); grid.n_nodes()];
        for iv in 0..grid.nv {
            for iu in 0..grid.nu {
                let (u, v) = (grid.u(iu), grid.v(iv));
                f[grid.idx(iu, iv)] =
                    Complex64::new((2.0 * u).sin() * v.cos(), (u + v).cos());
            }
        }
        let (dz, dzb) = wirtinger(&f, &grid);
        let (_, a) = wirtinger(&dz, &grid);
        let (b, _) = wirtinger(&dzb, &grid);
        for k in 0..grid.n_nodes() {
            assert!((a[k] - b[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn conjugate_pair_for_real_fields() {
        let grid = torus_grid(16);
        let mut f = vec![0.0; grid.n_nodes()];
        for iv in 0..grid.nv {
            for iu in 0..grid.nu {
                f[grid.idx(iu, iv)] = (grid.u(iu)).sin() + (2.0 * grid.v(iv)).cos();
            }
        }
        let fc: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let (dz, dzb) = wirtinger(&fc, &grid);
        for k in 0..grid.n_nodes() {
            assert!((dzb[k] - dz[k].conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn integral_of_laplacian_vanishes_on_closed_grids() {
        let grid = torus_grid(20);
        let mut f = vec![0.0; grid.n_nodes()];
        let mut lambda = vec![0.0; grid.n_nodes()];
        for iv in 0..grid.nv {
            for iu in 0..grid.nu {
                let (u, v) = (grid.u(iu), grid.v(iv));
                f[grid.idx(iu, iv)] = u.sin() * (2.0 * v).cos() + (u + v).cos();
                lambda[grid.idx(iu, iv)] = 1.3 + 0.2 * u.cos() * v.sin();
            }
        }
        let lap = laplace_beltrami(&f, &lambda, &grid);
        let (total, _) = surface_integral(&lap, &lambda, &grid);
        let scale: f64 = f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(total.abs() < 1e-9 * scale.max(1.0));
    }

    #[test]
    fn isothermal_check_flags_sheared_grid() {
        // f(u,v) = (u, v + 0.1 u, 0, 0)
        let grid = ChartGrid::new(0.0, 1.0, 0.0, 1.0, 16, 16, false, false).unwrap();
        let mut d1 = vec![0.0; grid.n_nodes() * 8];
        for k in 0..grid.n_nodes() {
            let fu = [1.0, 0.1, 0.0, 0.0];
            let fv = [0.0, 1.0, 0.0, 0.0];
            d1[8 * k..8 * k + 4].copy_from_slice(&fu);
            d1[8 * k + 4..8 * k + 8].copy_from_slice(&fv);
        }
        let rep = isothermal_report(&d1, 4, &grid);
        assert!(rep.max_f > 0.05);
        assert!(require_isothermal(&d1, 4, &grid, ISOTHERMAL_TOL).is_err());
    }

    #[test]
    fn grids_below_the_minimum_are_rejected() {
        assert!(matches!(
            ChartGrid::new(0.0, 1.0, 0.0, 1.0, 7, 16, false, false),
            Err(crate::error::Error::GridTooSmall { .. })
        ));
    }

    #[test]
    fn csv_layout_is_iv_major() {
        let grid = ChartGrid::new(0.0, 1.0, 0.0, 1.0, 8, 8, false, false).unwrap();
        let vals: Vec<f64> = (0..grid.n_nodes()).map(|k| k as f64).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &grid, &[("val", &vals)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iu,iv,u,v,val");
        assert!(lines[1].starts_with("0,0,"));
        assert!(lines[2].starts_with("1,0,")); // u fastest
        assert_eq!(lines.len(), 1 + grid.n_nodes());
    }
}
