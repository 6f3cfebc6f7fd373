//! Numerical differential geometry of immersed surfaces in 4-dimensional
//! space forms.
//!
//! The crate computes, on sampled isothermal parameter grids:
//!
//! * adapted frames, fundamental forms, mean/Gauss/normal curvature and the
//!   curvature ellipse ([`invariants`]),
//! * the splitting of the quadratic differential of the second fundamental
//!   form along the isotropic normal subbundles, together with
//!   holomorphicity / vertical-harmonicity diagnostics ([`invariants`]),
//! * the Gauss map into the product of two 2-spheres via the Hodge split of
//!   2-forms, and its Jacobian identities ([`gaussmap`]),
//! * Lagrangian diagnostics: Maslov form, mean curvature form and the cubic
//!   differential ([`lagrangian`]),
//! * mean-curvature-preserving isometric deformation families and surface
//!   reconstruction by integrating the moving-frame structure equations
//!   ([`deform`]),
//! * pairwise comparison of surfaces through the distortion differential and
//!   the classification of the resulting pair ([`moduli`]).
//!
//! Everything is deterministic: no randomness, fixed probe vectors, and
//! byte-stable reports. See [`verify`] for the built-in verification battery.

// numeric kernels iterate several parallel per-node arrays by index; the
// index form is the clearer one here
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]

pub mod chart;
pub mod deform;
pub mod error;
pub mod gaussmap;
pub mod geom;
pub mod immersion;
pub mod invariants;
pub mod lagrangian;
pub mod moduli;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
