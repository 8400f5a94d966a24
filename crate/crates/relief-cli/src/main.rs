//! relief: gradient-domain bas-relief synthesis from height/depth fields.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 I/O failure, 4 numeric
//! failure (solver non-convergence, optimizer divergence, non-finite data).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use relief_core::io::{
    export_mesh, read_height, read_mask, write_height, write_preview, HeightFormat, MeshFormat,
};
use relief_core::{
    detail_layer, gradient, optimize_height, phi1, structure_layer, style_compare, two_scale,
    Error as CoreError, Init, LossKind, MaskField, OptimizeConfig, PhiMode, ReliefParams,
    ScalarField,
};

#[derive(Parser)]
#[command(
    name = "relief",
    version,
    about = "Gradient-domain bas-relief synthesis",
    after_help = "Height files: .pfm (lossless) or .png (16-bit, with a .range.json sidecar).\n\
                  Set RELIEF_THREADS to a positive integer to pin the worker count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PipelineArgs {
    /// Source height field (.pfm or .png)
    #[arg(long)]
    input: PathBuf,
    /// Foreground mask image, or "none" for all-foreground
    #[arg(long, default_value = "none")]
    mask: String,
    /// Structure remap strength
    #[arg(long, default_value_t = 8.0)]
    alpha: f64,
    /// Lower detail band edge
    #[arg(long, default_value_t = 4.0)]
    alpha1: f64,
    /// Upper detail band edge
    #[arg(long, default_value_t = 16.0)]
    alpha2: f64,
    /// Gradient remap mode
    #[arg(long, default_value = "normalized")]
    mode: PhiMode,
    /// Output height field (.pfm or .png)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Source height field (.pfm or .png)
    #[arg(long)]
    input: PathBuf,
    /// Foreground mask image, or "none" for all-foreground
    #[arg(long, default_value = "none")]
    mask: String,
    /// Loss to minimize
    #[arg(long)]
    loss: String,
    /// Iteration budget
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    /// Initial step size
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Normal steepness for the cosine loss
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    /// Momentum coefficient in [0, 1)
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    /// Initial iterate: zeros or source
    #[arg(long, default_value = "zeros")]
    init: Init,
    /// Structure remap strength for the target gradients
    #[arg(long, default_value_t = 8.0)]
    alpha: f64,
    /// Gradient remap mode for the target gradients
    #[arg(long, default_value = "normalized")]
    mode: PhiMode,
    /// Output height field
    #[arg(long)]
    out: PathBuf,
    /// Also run the three-loss style comparison and write its JSON report
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PreviewArgs {
    /// Height field to shade
    #[arg(long)]
    input: PathBuf,
    /// Light direction "x,y,z" (normalized internally)
    #[arg(long, default_value = "0,0,1")]
    light: String,
    /// Normal steepness
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Output 8-bit grayscale image
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MeshArgs {
    /// Height field to extrude
    #[arg(long)]
    input: PathBuf,
    /// Physical width of the relief
    #[arg(long, default_value_t = 100.0)]
    width_mm: f64,
    /// Height range mapped onto the relief surface
    #[arg(long, default_value_t = 5.0)]
    relief_depth_mm: f64,
    /// Solid base thickness under the relief
    #[arg(long, default_value_t = 3.0)]
    base_mm: f64,
    /// obj or stl_binary
    #[arg(long, default_value = "stl_binary")]
    format: MeshFormat,
    /// Output mesh file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Structure layer: Poisson reconstruction of remapped gradients
    Structure(PipelineArgs),
    /// Detail layer: Poisson reconstruction of band-passed gradients
    Detail(PipelineArgs),
    /// Two-scale pipeline: structure plus native-resolution detail
    Pipeline(PipelineArgs),
    /// Minimize a gradient/normal-domain loss directly over the heights
    Optimize(OptimizeArgs),
    /// Lambertian shaded preview
    Preview(PreviewArgs),
    /// Export a watertight printable solid
    Mesh(MeshArgs),
}

/// Usage-level error (exit 2), distinct from I/O (3) and numeric (4).
struct UsageError(String);

enum CmdError {
    Usage(String),
    Core(CoreError),
}

impl From<CoreError> for CmdError {
    fn from(e: CoreError) -> Self {
        CmdError::Core(e)
    }
}

impl From<UsageError> for CmdError {
    fn from(e: UsageError) -> Self {
        CmdError::Usage(e.0)
    }
}

fn exit_code_for(err: &CmdError) -> u8 {
    match err {
        CmdError::Usage(_) => 2,
        CmdError::Core(e) => match e {
            CoreError::Io(_)
            | CoreError::Image(_)
            | CoreError::Json(_)
            | CoreError::Malformed { .. }
            | CoreError::MissingSidecar(_) => 3,
            CoreError::NonConvergence { .. }
            | CoreError::Diverged { .. }
            | CoreError::NonFinite { .. } => 4,
            _ => 2,
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse(); // clap exits with code 2 on usage errors
    if let Err(e) = configure_threads() {
        eprintln!("error: {}", e.0);
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Structure(args) => run_layer(&args, Layer::Structure),
        Command::Detail(args) => run_layer(&args, Layer::Detail),
        Command::Pipeline(args) => run_layer(&args, Layer::TwoScale),
        Command::Optimize(args) => run_optimize(&args),
        Command::Preview(args) => run_preview(&args),
        Command::Mesh(args) => run_mesh(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CmdError::Usage(msg) => eprintln!("error: {msg}"),
                CmdError::Core(err) => eprintln!("error: {err}"),
            }
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Honor RELIEF_THREADS (positive integer; absent = hardware default).
/// A sequential build still validates the value but always runs one thread.
fn configure_threads() -> Result<(), UsageError> {
    let raw = match std::env::var("RELIEF_THREADS") {
        Err(_) => return Ok(()),
        Ok(raw) => raw,
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            UsageError(format!(
                "RELIEF_THREADS must be a positive integer, got '{raw}'"
            ))
        })?;
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| UsageError(format!("thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn load_input(path: &Path) -> Result<ScalarField, CmdError> {
    let format = HeightFormat::from_path(path).map_err(|e| CmdError::Usage(e.to_string()))?;
    Ok(read_height(path, format)?)
}

fn load_mask(spec: &str, like: &ScalarField) -> Result<MaskField, CmdError> {
    if spec == "none" {
        return Ok(MaskField::all_true(like.width(), like.height())?);
    }
    let mask = read_mask(Path::new(spec))?;
    if mask.width() != like.width() || mask.height() != like.height() {
        return Err(CmdError::Usage(format!(
            "mask is {}x{} but the input is {}x{}",
            mask.width(),
            mask.height(),
            like.width(),
            like.height()
        )));
    }
    Ok(mask)
}

fn save_output(path: &Path, h: &ScalarField) -> Result<(), CmdError> {
    let format = HeightFormat::from_path(path).map_err(|e| CmdError::Usage(e.to_string()))?;
    Ok(write_height(path, h, format)?)
}

fn build_params(args: &PipelineArgs) -> Result<ReliefParams, CmdError> {
    let params = ReliefParams {
        alpha: args.alpha,
        alpha1: args.alpha1,
        alpha2: args.alpha2,
        phi_mode: args.mode,
        ..ReliefParams::default()
    };
    params.validate().map_err(|e| CmdError::Usage(e.to_string()))?;
    Ok(params)
}

enum Layer {
    Structure,
    Detail,
    TwoScale,
}

fn run_layer(args: &PipelineArgs, layer: Layer) -> Result<(), CmdError> {
    let params = build_params(args)?;
    let start = Instant::now();
    let input = load_input(&args.input)?;
    let mask = load_mask(&args.mask, &input)?;
    let (name, out, residual) = match layer {
        Layer::Structure => {
            let (h, report) = structure_layer(&input, &mask, &params)?;
            ("structure", h, report.residual)
        }
        Layer::Detail => {
            let (h, report) = detail_layer(&input, &params)?;
            ("detail", h, report.residual)
        }
        Layer::TwoScale => {
            let (h, report) = two_scale(&input, &mask, &params)?;
            let residual = report
                .detail
                .map(|d| d.residual.max(report.structure.residual))
                .unwrap_or(report.structure.residual);
            ("pipeline", h, residual)
        }
    };
    save_output(&args.out, &out)?;
    println!(
        "{name} {}x{} -> {} residual={residual:.3e} wall={:.3}s",
        out.width(),
        out.height(),
        args.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn parse_loss(raw: &str) -> Result<LossKind, CmdError> {
    match raw {
        "l1" => Ok(LossKind::L1s),
        "l2" => Ok(LossKind::L2s),
        "cosine" => Ok(LossKind::Cosine),
        other => Err(CmdError::Usage(format!(
            "unknown loss '{other}' (l1|l2|cosine)"
        ))),
    }
}

fn run_optimize(args: &OptimizeArgs) -> Result<(), CmdError> {
    let loss_kind = parse_loss(&args.loss)?;
    let params = ReliefParams {
        alpha: args.alpha,
        phi_mode: args.mode,
        eta: args.eta,
        ..ReliefParams::default()
    };
    params.validate().map_err(|e| CmdError::Usage(e.to_string()))?;
    let cfg = OptimizeConfig {
        loss_kind,
        step: args.step,
        momentum: args.momentum,
        max_iter: args.iters,
        rel_tol: 1e-12,
        init: args.init,
    };
    cfg.validate().map_err(|e| CmdError::Usage(e.to_string()))?;

    let start = Instant::now();
    let input = load_input(&args.input)?;
    let mask = load_mask(&args.mask, &input)?;
    let g_target = phi1(&gradient(&input), params.alpha, params.phi_mode)?;
    let full = MaskField::all_true(input.width(), input.height())?;
    let (h, iterations) = optimize_height(&g_target, &full, &cfg, args.eta, Some(&input))?;

    let final_loss = match loss_kind {
        LossKind::L1s => relief_core::loss_l1s(&h, &g_target, &full)?.value,
        LossKind::L2s => relief_core::loss_l2s(&h, &g_target, &full)?.value,
        LossKind::Cosine => relief_core::loss_cosine(&h, &g_target, args.eta, &full)?.value,
    };
    save_output(&args.out, &h)?;

    if let Some(report_path) = &args.report {
        let report = style_compare(&input, &mask, &params, &cfg)?;
        std::fs::write(report_path, serde_json::to_string_pretty(&report).map_err(CoreError::from)?)
            .map_err(CoreError::from)?;
    }
    println!(
        "optimize {loss_kind} {}x{} iters={iterations} final_loss={final_loss:.6e} -> {} wall={:.3}s",
        h.width(),
        h.height(),
        args.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn parse_light(raw: &str) -> Result<[f64; 3], CmdError> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return Err(CmdError::Usage(format!(
            "light must be 'x,y,z', got '{raw}'"
        )));
    }
    let mut light = [0.0; 3];
    for (slot, part) in light.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| CmdError::Usage(format!("bad light component '{part}'")))?;
    }
    Ok(light)
}

fn run_preview(args: &PreviewArgs) -> Result<(), CmdError> {
    let light = parse_light(&args.light)?;
    if !(args.eta > 0.0) {
        return Err(CmdError::Usage(format!(
            "eta must be positive, got {}",
            args.eta
        )));
    }
    let start = Instant::now();
    let input = load_input(&args.input)?;
    write_preview(&args.out, &input, light, args.eta)?;
    println!(
        "preview {}x{} -> {} wall={:.3}s",
        input.width(),
        input.height(),
        args.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn run_mesh(args: &MeshArgs) -> Result<(), CmdError> {
    if !(args.width_mm > 0.0 && args.relief_depth_mm > 0.0 && args.base_mm > 0.0) {
        return Err(CmdError::Usage(
            "mesh dimensions (--width-mm, --relief-depth-mm, --base-mm) must be positive".into(),
        ));
    }
    let start = Instant::now();
    let input = load_input(&args.input)?;
    let mesh = export_mesh(
        &args.out,
        &input,
        args.width_mm,
        args.relief_depth_mm,
        args.base_mm,
        args.format,
    )?;
    println!(
        "mesh {}x{} vertices={} triangles={} -> {} wall={:.3}s",
        input.width(),
        input.height(),
        mesh.vertices.len(),
        mesh.triangles.len(),
        args.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
