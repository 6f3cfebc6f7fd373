//! Command-line pipeline: example generation, invariant analysis,
//! mean-curvature-preserving deformation with reconstruction, pair
//! comparison, and the verification battery.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bonnet4::chart::write_csv;
use bonnet4::deform::{
    deform_data, deform_data_two, gcr_residuals, reconstruct, source_seed,
};
use bonnet4::geom::Vec4;
use bonnet4::immersion::{load_grid, make_example_named, save_grid, ExampleParams, ImmersionGrid};
use bonnet4::invariants::analyze_pointwise;
use bonnet4::moduli::compare_surfaces;
use bonnet4::report::{analyze_surface, gauss_map_block, report_json};
use bonnet4::verify;

#[derive(Parser)]
#[command(
    name = "bonnet4",
    about = "Invariants, deformations and moduli diagnostics for surfaces in 4-dimensional space forms",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a built-in example surface as a Surface Grid JSON file.
    Make(MakeArgs),
    /// Analyze a surface file and write its invariant report.
    Analyze(AnalyzeArgs),
    /// Deform a surface, reconstruct the deformed immersion and certify it.
    Deform(DeformArgs),
    /// Compare two surfaces through the distortion differential.
    Compare(CompareArgs),
    /// Run the verification battery.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct MakeArgs {
    /// One of: product_torus, clifford_torus, sphere, whitney_sphere,
    /// complex_curve_zz2, graph, revolution_torus.
    #[arg(long)]
    example: String,
    #[arg(long, default_value_t = 128)]
    nu: usize,
    #[arg(long, default_value_t = 128)]
    nv: usize,
    /// First radius (product_torus).
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Second radius (product_torus).
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Sphere radius.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Graph amplitude.
    #[arg(long, default_value_t = 5e-4)]
    eps: f64,
    /// Large radius of the revolution torus.
    #[arg(long = "big-r", default_value_t = 3.0)]
    big_r: f64,
    /// Small radius of the revolution torus.
    #[arg(long = "small-r", default_value_t = 1.0)]
    small_r: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Surface Grid JSON input.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Report JSON output (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-node fields (K, K_N, |H|, semiaxes) as CSV.
    #[arg(long)]
    fields: Option<PathBuf>,
}

#[derive(Args)]
struct DeformArgs {
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// One-parameter family angle.
    #[arg(long, conflicts_with = "two")]
    theta: Option<f64>,
    /// Lift sign for the one-parameter family: plus or minus.
    #[arg(long, default_value = "plus")]
    lift: String,
    /// Two-parameter family angles (requires parallel mean curvature).
    #[arg(long, num_args = 2, value_names = ["THETA", "PHI"])]
    two: Option<Vec<f64>>,
    /// Deformed Surface Grid JSON output.
    #[arg(long)]
    out: PathBuf,
    /// Certificate JSON output (defaults to `<out>.certificate.json`).
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Also export a wavefront OBJ of the orthogonal projection; the value
    /// picks the kept axes (visualization only).
    #[arg(long, value_parser = ["xyz", "xyw", "xzw", "yzw"])]
    project: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, value_name = "FILE")]
    a: PathBuf,
    #[arg(long, value_name = "FILE")]
    b: PathBuf,
    /// Comparison Report JSON output (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Criterion name, or `all`.
    #[arg(long, default_value = "all")]
    case: String,
    /// Number of refinement levels for convergence measurements (2..4).
    #[arg(long, default_value_t = 3)]
    refine: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> bonnet4::Result<ExitCode> {
    match cli.command {
        Command::Make(args) => {
            let params = ExampleParams {
                a: args.a,
                b: args.b,
                r: args.r,
                eps: args.eps,
                big_r: args.big_r,
                small_r: args.small_r,
            };
            let surface = make_example_named(&args.example, &params, args.nu, args.nv)?;
            save_grid(&surface, &args.out)?;
            println!(
                "wrote {} ({} x {} nodes, domain [{:.6}, {:.6}] x [{:.6}, {:.6}])",
                args.out.display(),
                surface.grid.nu,
                surface.grid.nv,
                surface.grid.u0,
                surface.grid.u1,
                surface.grid.v0,
                surface.grid.v1
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze(args) => {
            let surface = load_grid(&args.input)?;
            let (report, analysis) = analyze_surface(&surface)?;
            let mut text = report_json(&report)?;
            if surface.c == 0.0 {
                let gm = gauss_map_block(&surface, &analysis)?;
                let mut value: serde_json::Value = serde_json::from_str(&text)?;
                value["gauss_map"] = serde_json::to_value(&gm)?;
                text = serde_json::to_string_pretty(&value)?;
            }
            match &args.out {
                Some(path) => std::fs::write(path, &text)?,
                None => println!("{text}"),
            }
            if let Some(path) = &args.fields {
                let mut file = std::fs::File::create(path)?;
                write_csv(
                    &mut file,
                    &surface.grid,
                    &[
                        ("K", &analysis.cd.k),
                        ("K_N", &analysis.cd.k_n),
                        ("H_norm", &analysis.fd.h_norm),
                        ("lambda1", &analysis.cd.lambda1),
                        ("lambda2", &analysis.cd.lambda2),
                        ("lambda", &analysis.fd.lambda),
                    ],
                )?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Deform(args) => {
            let surface = load_grid(&args.input)?;
            let analysis = analyze_pointwise(&surface)?;
            let dd = match (&args.two, args.theta) {
                (Some(two), _) => deform_data_two(&analysis.fd, &analysis.hd, two[0], two[1])?,
                (None, Some(theta)) => {
                    let lift = match args.lift.as_str() {
                        "plus" => 1,
                        "minus" => -1,
                        other => {
                            return Err(bonnet4::Error::BadParameter(format!(
                                "lift must be `plus` or `minus`, got `{other}`"
                            )))
                        }
                    };
                    deform_data(&analysis.fd, &analysis.hd, theta, lift)
                }
                (None, None) => {
                    return Err(bonnet4::Error::BadParameter(
                        "either --theta or --two THETA PHI is required".into(),
                    ))
                }
            };
            let (frame, _) = source_seed(&analysis.fd);
            let p0 = Vec4([
                surface.position[0],
                surface.position[1],
                surface.position[2],
                surface.position[3],
            ]);
            let rec = reconstruct(&dd, &frame, &p0)?;
            let gcr = gcr_residuals(&dd);

            // mean curvature preservation measured on the reconstruction
            let deformed = analyze_pointwise(&rec.surface)?;
            let mut h_dev = 0.0f64;
            for k in 0..deformed.fd.n_nodes() {
                if deformed.fd.trusted[k] && analysis.fd.trusted[k] {
                    h_dev = h_dev.max((deformed.fd.h_norm[k] - analysis.fd.h_norm[k]).abs());
                }
            }

            save_grid(&rec.surface, &args.out)?;
            let certificate = serde_json::json!({
                "gauss_residual": gcr.max_gauss,
                "codazzi_residual": gcr.max_codazzi,
                "ricci_residual": gcr.max_ricci,
                "path_independence": rec.path_independence,
                "metric_residual": rec.metric_residual,
                "mean_curvature_deviation": h_dev,
                "closure_defect_u": rec.closure_u,
                "closure_defect_v": rec.closure_v,
            });
            let cert_path = args
                .certificate
                .unwrap_or_else(|| args.out.with_extension("certificate.json"));
            std::fs::write(&cert_path, serde_json::to_string_pretty(&certificate)?)?;
            println!("wrote {} and {}", args.out.display(), cert_path.display());
            if let Some(axes) = &args.project {
                let obj_path = args.out.with_extension("obj");
                write_obj(&rec.surface, axes, &obj_path)?;
                println!("wrote {} (projection {axes})", obj_path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare(args) => {
            let a = load_grid(&args.a)?;
            let b = load_grid(&args.b)?;
            let name_a = args.a.display().to_string();
            let name_b = args.b.display().to_string();
            let (report, _) = compare_surfaces(&a, &b, [&name_a, &name_b])?;
            let text = serde_json::to_string_pretty(&report)?;
            match &args.out {
                Some(path) => std::fs::write(path, &text)?,
                None => println!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let outcomes = if args.case == "all" {
                verify::run_all(args.refine)?
            } else {
                vec![verify::run_criterion(&args.case, args.refine)?]
            };
            let mut all_passed = true;
            for outcome in &outcomes {
                let status = if outcome.passed { "PASS" } else { "FAIL" };
                println!("{status} {}", outcome.name);
                for line in &outcome.lines {
                    println!("{line}");
                }
                all_passed &= outcome.passed;
            }
            println!(
                "{} of {} criteria passed",
                outcomes.iter().filter(|o| o.passed).count(),
                outcomes.len()
            );
            Ok(if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

/// Wavefront OBJ export of the axis-drop projection to 3-space, with grid
/// quads as faces.
fn write_obj(surface: &ImmersionGrid, axes: &str, path: &std::path::Path) -> bonnet4::Result<()> {
    use std::io::Write;
    let keep: [usize; 3] = match axes {
        "xyz" => [0, 1, 2],
        "xyw" => [0, 1, 3],
        "xzw" => [0, 2, 3],
        _ => [1, 2, 3],
    };
    let grid = &surface.grid;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# orthogonal projection of a surface in R^4 (axes {axes})")?;
    for k in 0..grid.n_nodes() {
        let p = &surface.position[4 * k..4 * (k + 1)];
        writeln!(out, "v {} {} {}", p[keep[0]], p[keep[1]], p[keep[2]])?;
    }
    let vid = |iu: usize, iv: usize| iv * grid.nu + iu + 1;
    for iv in 0..grid.nv - 1 {
        for iu in 0..grid.nu - 1 {
            writeln!(
                out,
                "f {} {} {} {}",
                vid(iu, iv),
                vid(iu + 1, iv),
                vid(iu + 1, iv + 1),
                vid(iu, iv + 1)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use bonnet4::immersion::{Example, ExampleParams};

    #[test]
    fn example_names_parse() {
        let defaults = ExampleParams::default();
        for name in Example::names() {
            assert!(Example::parse(name, &defaults).is_ok(), "{name}");
        }
    }
}
