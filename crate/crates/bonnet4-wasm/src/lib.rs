//! Browser demo bindings: generate a built-in surface, analyze it, run a
//! mean-curvature-preserving deformation with its certificate, and compare
//! the pair through the distortion differential — all in memory.
//!
//! The page in `www/` drives three operations:
//! * `analyze_example` — invariant summary of a built-in surface,
//! * `deform_example` — reconstructed family member with positions for the
//!   wireframe view and the structure-equation certificate,
//! * `compare_pair` — classification of (surface, deformed surface).

use wasm_bindgen::prelude::wasm_bindgen;

use bonnet4::deform::{deform_data, deform_data_two, gcr_residuals, reconstruct, source_seed};
use bonnet4::geom::Vec4;
use bonnet4::immersion::{make_example_named, ExampleParams, ImmersionGrid};
use bonnet4::invariants::analyze_pointwise;
use bonnet4::moduli::compare_surfaces;
use bonnet4::report::{analyze_surface, gauss_map_block, report_json};

fn build(example: &str, n: u32) -> Result<ImmersionGrid, String> {
    let params = ExampleParams::default();
    make_example_named(example, &params, n as usize, n as usize).map_err(|e| e.to_string())
}

/// Invariant report of a built-in example as a JSON string.
#[wasm_bindgen]
pub fn analyze_example(example: &str, n: u32) -> Result<String, String> {
    let surface = build(example, n)?;
    let (report, analysis) = analyze_surface(&surface).map_err(|e| e.to_string())?;
    let mut value: serde_json::Value =
        serde_json::from_str(&report_json(&report).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    if surface.c == 0.0 {
        if let Ok(gm) = gauss_map_block(&surface, &analysis) {
            value["gauss_map"] = serde_json::to_value(&gm).map_err(|e| e.to_string())?;
        }
    }
    serde_json::to_string_pretty(&value).map_err(|e| e.to_string())
}

/// Positions of a built-in example (flattened, 4 reals per node) for the
/// wireframe view.
#[wasm_bindgen]
pub fn example_positions(example: &str, n: u32) -> Result<Vec<f64>, String> {
    Ok(build(example, n)?.position)
}

/// A reconstructed member of the associated family.
#[wasm_bindgen]
pub struct DeformedSurface {
    positions: Vec<f64>,
    nu: u32,
    nv: u32,
    certificate: String,
}

#[wasm_bindgen]
impl DeformedSurface {
    /// Flattened positions, 4 reals per node, `iv`-major.
    pub fn positions(&self) -> Vec<f64> {
        self.positions.clone()
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn nv(&self) -> u32 {
        self.nv
    }

    /// Structure-equation certificate as a JSON string.
    pub fn certificate(&self) -> String {
        self.certificate.clone()
    }
}

fn deform_surface(
    example: &str,
    n: u32,
    theta: f64,
    phi: f64,
    lift_plus: bool,
    two_parameter: bool,
) -> Result<(ImmersionGrid, String), String> {
    let surface = build(example, n)?;
    let analysis = analyze_pointwise(&surface).map_err(|e| e.to_string())?;
    let dd = if two_parameter {
        deform_data_two(&analysis.fd, &analysis.hd, theta, phi).map_err(|e| e.to_string())?
    } else {
        deform_data(&analysis.fd, &analysis.hd, theta, if lift_plus { 1 } else { -1 })
    };
    let (frame, _) = source_seed(&analysis.fd);
    let p0 = Vec4([
        surface.position[0],
        surface.position[1],
        surface.position[2],
        surface.position[3],
    ]);
    let rec = reconstruct(&dd, &frame, &p0).map_err(|e| e.to_string())?;
    let gcr = gcr_residuals(&dd);
    let certificate = serde_json::json!({
        "gauss_residual": gcr.max_gauss,
        "codazzi_residual": gcr.max_codazzi,
        "ricci_residual": gcr.max_ricci,
        "path_independence": rec.path_independence,
        "metric_residual": rec.metric_residual,
        "closure_defect_u": rec.closure_u,
        "closure_defect_v": rec.closure_v,
    });
    Ok((
        rec.surface,
        serde_json::to_string_pretty(&certificate).map_err(|e| e.to_string())?,
    ))
}

/// Reconstruct a family member of a built-in example.
#[wasm_bindgen]
pub fn deform_example(
    example: &str,
    n: u32,
    theta: f64,
    phi: f64,
    lift_plus: bool,
    two_parameter: bool,
) -> Result<DeformedSurface, String> {
    let (surface, certificate) = deform_surface(example, n, theta, phi, lift_plus, two_parameter)?;
    Ok(DeformedSurface {
        nu: surface.grid.nu as u32,
        nv: surface.grid.nv as u32,
        positions: surface.position,
        certificate,
    })
}

/// Compare a built-in example against its deformation; returns the
/// Comparison Report JSON (class tag, recovered angles, residuals).
#[wasm_bindgen]
pub fn compare_pair(
    example: &str,
    n: u32,
    theta: f64,
    phi: f64,
    lift_plus: bool,
    two_parameter: bool,
) -> Result<String, String> {
    let (deformed, _) = deform_surface(example, n, theta, phi, lift_plus, two_parameter)?;
    let mut source = build(example, n)?;
    source.grid = deformed.grid;
    let (report, _) =
        compare_surfaces(&source, &deformed, ["source", "deformed"]).map_err(|e| e.to_string())?;
    serde_json::to_string_pretty(&report).map_err(|e| e.to_string())
}

/// Names accepted by the demo.
#[wasm_bindgen]
pub fn example_names() -> Vec<String> {
    bonnet4::immersion::Example::names()
        .iter()
        .map(|s| s.to_string())
        .collect()
}
