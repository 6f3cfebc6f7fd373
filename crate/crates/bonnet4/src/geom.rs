//! Exact small-dimension linear algebra: 4-vectors, oriented orthonormal
//! 4-frames, complexified normal vectors with their isotropic split, and
//! bivectors of `Lambda^2 R^4` with the Hodge eigenspace decomposition.
//!
//! Conventions fixed here and used everywhere else:
//!
//! * a frame `(e1, e2, e3, e4)` lists the tangent pair first, then the normal
//!   pair, and is positively oriented (`det = +1`);
//! * `J_perp` rotates the normal plane by `+pi/2`, i.e. `e3 -> e4`, so
//!   `e4 = J_perp e3` always;
//! * the eigenvector `e3 - i e4` of `J_perp` has eigenvalue `+i` and spans
//!   the minus isotropic line, `e3 + i e4` has eigenvalue `-i` and spans the
//!   plus one.  A normal vector `a e3 + b e4` therefore splits with minus
//!   coefficient `(a + i b)/2` and plus coefficient `(a - i b)/2`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Orthonormality tolerance for frame validation: far above double-precision
/// noise, far below any discretization error we produce.
pub const FRAME_TOL: f64 = 1e-9;

/// Point or vector of the ambient Euclidean `R^4`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec4(pub [f64; 4]);

impl Vec4 {
    pub const ZERO: Vec4 = Vec4([0.0; 4]);

    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Vec4([x, y, z, w])
    }

    pub fn dot(&self, other: &Vec4) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Vec4 {
        Vec4([self.0[0] * s, self.0[1] * s, self.0[2] * s, self.0[3] * s])
    }

    pub fn add(&self, other: &Vec4) -> Vec4 {
        let mut out = [0.0; 4];
        for k in 0..4 {
            out[k] = self.0[k] + other.0[k];
        }
        Vec4(out)
    }

    pub fn sub(&self, other: &Vec4) -> Vec4 {
        let mut out = [0.0; 4];
        for k in 0..4 {
            out[k] = self.0[k] - other.0[k];
        }
        Vec4(out)
    }

    pub fn normalize(&self) -> Option<Vec4> {
        let n = self.norm();
        if n > 0.0 {
            Some(self.scale(1.0 / n))
        } else {
            None
        }
    }
}

/// Positively oriented orthonormal frame of `R^4`, tangent pair then normal
/// pair.
#[derive(Debug, Clone, Copy)]
pub struct Frame4 {
    pub e1: Vec4,
    pub e2: Vec4,
    pub e3: Vec4,
    pub e4: Vec4,
}

impl Frame4 {
    pub const STANDARD: Frame4 = Frame4 {
        e1: Vec4([1.0, 0.0, 0.0, 0.0]),
        e2: Vec4([0.0, 1.0, 0.0, 0.0]),
        e3: Vec4([0.0, 0.0, 1.0, 0.0]),
        e4: Vec4([0.0, 0.0, 0.0, 1.0]),
    };

    pub fn columns(&self) -> [Vec4; 4] {
        [self.e1, self.e2, self.e3, self.e4]
    }

    /// Maximal deviation from orthonormality over all Gram entries.
    pub fn orthonormality_defect(&self) -> f64 {
        let cols = self.columns();
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let g = cols[i].dot(&cols[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    pub fn det(&self) -> f64 {
        let cols = self.columns();
        let mut m = [[0.0; 4]; 4];
        for (j, c) in cols.iter().enumerate() {
            for i in 0..4 {
                m[i][j] = c.0[i];
            }
        }
        det4(&m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.orthonormality_defect() > FRAME_TOL || (self.det() - 1.0).abs() > 1e-6 {
            return Err(Error::DegenerateFrame { tol: FRAME_TOL });
        }
        Ok(())
    }
}

/// Determinant of a 4x4 matrix by cofactor expansion over 2x2 blocks.
pub fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let s0 = m[0][0] * m[1][1] - m[1][0] * m[0][1];
    let s1 = m[0][0] * m[1][2] - m[1][0] * m[0][2];
    let s2 = m[0][0] * m[1][3] - m[1][0] * m[0][3];
    let s3 = m[0][1] * m[1][2] - m[1][1] * m[0][2];
    let s4 = m[0][1] * m[1][3] - m[1][1] * m[0][3];
    let s5 = m[0][2] * m[1][3] - m[1][2] * m[0][3];

    let c5 = m[2][2] * m[3][3] - m[3][2] * m[2][3];
    let c4 = m[2][1] * m[3][3] - m[3][1] * m[2][3];
    let c3 = m[2][1] * m[3][2] - m[3][1] * m[2][2];
    let c2 = m[2][0] * m[3][3] - m[3][0] * m[2][3];
    let c1 = m[2][0] * m[3][2] - m[3][0] * m[2][2];
    let c0 = m[2][0] * m[3][1] - m[3][0] * m[2][1];

    s0 * c5 - s1 * c4 + s2 * c3 + s3 * c2 - s4 * c1 + s5 * c0
}

/// Gram-Schmidt orthonormalization preserving `span{raw1, raw2}` and the
/// orientation sign.  If the result has determinant `-1`, `e4` is negated and
/// the flag in the return value is set.
pub fn frame_orthonormalize(raw: &[Vec4; 4]) -> Result<(Frame4, bool)> {
    let mut ortho: Vec<Vec4> = Vec::with_capacity(4);
    for r in raw.iter() {
        let mut v = *r;
        for b in &ortho {
            let p = v.dot(b);
            v = v.sub(&b.scale(p));
        }
        let n = v.norm();
        if n < FRAME_TOL {
            return Err(Error::DegenerateFrame { tol: FRAME_TOL });
        }
        ortho.push(v.scale(1.0 / n));
    }
    let mut frame = Frame4 {
        e1: ortho[0],
        e2: ortho[1],
        e3: ortho[2],
        e4: ortho[3],
    };
    let flipped = frame.det() < 0.0;
    if flipped {
        frame.e4 = frame.e4.scale(-1.0);
    }
    Ok((frame, flipped))
}

/// Complexified normal vector `xi = a e3 + b e4` in the coefficients of a
/// frame's normal pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CNormal {
    pub a: Complex64,
    pub b: Complex64,
}

impl CNormal {
    pub fn new(a: Complex64, b: Complex64) -> Self {
        CNormal { a, b }
    }

    pub fn from_real(a: f64, b: f64) -> Self {
        CNormal {
            a: Complex64::new(a, 0.0),
            b: Complex64::new(b, 0.0),
        }
    }

    /// Complex-bilinear square `<xi, xi>` (no conjugation).
    pub fn bilinear_square(&self) -> Complex64 {
        self.a * self.a + self.b * self.b
    }
}

/// Isotropic components of `xi`: coefficients of `e3 - i e4` (minus) and
/// `e3 + i e4` (plus), so that
/// `xi = minus (e3 - i e4) + plus (e3 + i e4)`.
pub fn isotropic_parts(xi: &CNormal) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let minus = (xi.a + i * xi.b) * 0.5;
    let plus = (xi.a - i * xi.b) * 0.5;
    (minus, plus)
}

/// Recombine isotropic coefficients into frame coefficients.
pub fn from_isotropic(minus: Complex64, plus: Complex64) -> CNormal {
    let i = Complex64::i();
    CNormal {
        a: minus + plus,
        b: -i * (minus - plus),
    }
}

/// Rotation of the normal plane by `theta`; acts on isotropic components as
/// `minus -> e^{i theta} minus`, `plus -> e^{-i theta} plus`.
#[derive(Debug, Clone, Copy)]
pub struct NormalRotation {
    pub angle: f64,
}

impl NormalRotation {
    pub fn new(angle: f64) -> Self {
        NormalRotation { angle }
    }

    pub fn apply(&self, xi: &CNormal) -> CNormal {
        let (minus, plus) = isotropic_parts(xi);
        let rot = Complex64::from_polar(1.0, self.angle);
        from_isotropic(minus * rot, plus * rot.conj())
    }

    pub fn inverse(&self) -> NormalRotation {
        NormalRotation { angle: -self.angle }
    }
}

/// Index order of the bivector basis: `e12, e13, e14, e23, e24, e34`.
pub const BIVECTOR_BASIS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Element of `Lambda^2 R^4` with all six components stored explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Bivector(pub [f64; 6]);

impl Bivector {
    pub const ZERO: Bivector = Bivector([0.0; 6]);

    /// Wedge product `a /\ b`.
    pub fn wedge(a: &Vec4, b: &Vec4) -> Bivector {
        let mut out = [0.0; 6];
        for (k, &(i, j)) in BIVECTOR_BASIS.iter().enumerate() {
            out[k] = a.0[i] * b.0[j] - a.0[j] * b.0[i];
        }
        Bivector(out)
    }

    /// Inner product `<<. , .>>`; on simple bivectors it equals the 2x2 Gram
    /// determinant `det(<v_j, w_k>)`.
    pub fn dot(&self, other: &Bivector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn add(&self, other: &Bivector) -> Bivector {
        let mut out = [0.0; 6];
        for k in 0..6 {
            out[k] = self.0[k] + other.0[k];
        }
        Bivector(out)
    }

    pub fn sub(&self, other: &Bivector) -> Bivector {
        let mut out = [0.0; 6];
        for k in 0..6 {
            out[k] = self.0[k] - other.0[k];
        }
        Bivector(out)
    }

    pub fn scale(&self, s: f64) -> Bivector {
        let mut out = self.0;
        for x in out.iter_mut() {
            *x *= s;
        }
        Bivector(out)
    }

    /// Hodge star: `e12 <-> e34`, `e13 <-> -e24`, `e14 <-> e23`.
    pub fn star(&self) -> Bivector {
        let b = &self.0;
        Bivector([b[5], -b[4], b[3], b[2], -b[1], b[0]])
    }
}

/// Split into self-dual and anti-self-dual parts: `b = plus + minus` with
/// `star(plus) = plus` and `star(minus) = -minus`.
pub fn hodge_split(b: &Bivector) -> (Bivector, Bivector) {
    let s = b.star();
    (b.add(&s).scale(0.5), b.sub(&s).scale(0.5))
}

/// Coordinates of the self-dual (`sign = +1`) or anti-self-dual
/// (`sign = -1`) part of `b` with respect to the orthonormal basis
/// `(e12 +- e34)/sqrt2, (e13 -+ e24)/sqrt2, (e14 +- e23)/sqrt2`.
pub fn dual_coords(b: &Bivector, sign: f64) -> [f64; 3] {
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let c = &b.0;
    [
        (c[0] + sign * c[5]) * inv,
        (c[1] - sign * c[4]) * inv,
        (c[2] + sign * c[3]) * inv,
    ]
}
