//! `rncmc`: construct, verify and export SS-CMC slices and foliations.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use rncmc::checks::{self, SuiteSize};
use rncmc::export::{self, ExportDocument};
use rncmc::quadrature::QuadratureOptions;
use rncmc::slice::{self, Branch, Placement, Side};
use rncmc::{
    foliate_fixed, foliate_varied, solve_dirichlet, solve_ivp, DiagramPoint, DirichletOptions,
    EmbedOptions, FixedHLoop, IvpData, SliceSpec, SpacetimeParams,
};

const TOLERANCE_ENV: &str = "RNCMC_TOLERANCE";

#[derive(Parser, Debug)]
#[command(
    name = "rncmc",
    version,
    about = "SS-CMC slices and foliations of Reissner-Nordström"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Mass parameter.
    #[arg(long = "M", global = true)]
    mass: Option<f64>,
    /// Charge parameter, |e| < M.
    #[arg(long = "e", global = true)]
    charge: Option<f64>,
    /// JSON config file; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Output path (default: stdout).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Absolute quadrature tolerance (overrides RNCMC_TOLERANCE).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Samples per profile piece.
    #[arg(long, global = true)]
    samples: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Embed one slice.
    Slice(SliceArgs),
    /// Slice through a point with a given diagram slope.
    Ivp(IvpArgs),
    /// Symmetric slice through (T0, +-X0).
    Dirichlet(DirichletArgs),
    /// Fixed-H or varied-H foliation.
    Foliate(FoliateArgs),
    /// Tables of the envelopes F and G and the critical values.
    Envelopes(EnvelopeArgs),
    /// Run the acceptance checks.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct SliceArgs {
    #[arg(long = "H")]
    h: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Cylindrical slice at R_H (unprimed) or r_H (primed).
    #[arg(long, value_enum)]
    cylinder: Option<CylinderArg>,
    #[arg(long)]
    primed: bool,
    #[arg(long, value_enum)]
    side: Option<SideArg>,
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    /// Time offset at the core point; default places the core on the axis.
    #[arg(long, allow_hyphen_values = true)]
    offset: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    copy: Option<i64>,
}

#[derive(Args, Debug)]
struct IvpArgs {
    #[arg(long = "H", allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long = "T0", allow_hyphen_values = true)]
    t0: Option<f64>,
    #[arg(long = "X0", allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long = "V", allow_hyphen_values = true)]
    v: Option<f64>,
}

#[derive(Args, Debug)]
struct DirichletArgs {
    #[arg(long = "H", allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long = "T0", allow_hyphen_values = true)]
    t0: Option<f64>,
    #[arg(long = "X0")]
    x0: Option<f64>,
}

#[derive(Args, Debug)]
struct FoliateArgs {
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long = "H", allow_hyphen_values = true)]
    h: Option<f64>,
    /// Leaves per period (fixed) or per segment (varied).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    copies: Option<i64>,
    #[arg(long)]
    segments: Option<usize>,
}

#[derive(Args, Debug)]
struct EnvelopeArgs {
    #[arg(long = "H", allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
enum CylinderArg {
    #[value(name = "RH")]
    #[serde(rename = "RH")]
    Outer,
    #[value(name = "rH")]
    #[serde(rename = "rH")]
    Inner,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SideArg {
    Inner,
    Outer,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BranchArg {
    Positive,
    Negative,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Fixed,
    Varied,
}

/// Config file contents. Keys follow the flag names; `M` and `e` may also
/// sit under `params` as in exported documents.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(rename = "M")]
    mass: Option<f64>,
    e: Option<f64>,
    params: Option<FileParams>,
    #[serde(rename = "H")]
    h: Option<f64>,
    c: Option<f64>,
    cylinder: Option<CylinderArg>,
    primed: Option<bool>,
    side: Option<SideArg>,
    branch: Option<BranchArg>,
    offset: Option<f64>,
    copy: Option<i64>,
    #[serde(rename = "T0")]
    t0: Option<f64>,
    #[serde(rename = "X0")]
    x0: Option<f64>,
    #[serde(rename = "V")]
    v: Option<f64>,
    mode: Option<Mode>,
    n: Option<usize>,
    copies: Option<i64>,
    segments: Option<usize>,
    format: Option<Format>,
    tolerance: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
struct FileParams {
    #[serde(rename = "M")]
    mass: Option<f64>,
    e: Option<f64>,
}

/// Failure with its exit status.
#[derive(Debug)]
enum Failure {
    Validation(String, String),
    Numerical(String, String),
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure::Validation("InvalidParameter".into(), msg.into())
    }

    fn io(e: std::io::Error) -> Self {
        Failure::Numerical("Io".into(), e.to_string())
    }
}

impl From<rncmc::Error> for Failure {
    fn from(e: rncmc::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.kind().into(), e.to_string())
        } else {
            Failure::Numerical(e.kind().into(), e.to_string())
        }
    }
}

type Outcome<T> = Result<T, Failure>;

/// Resolved settings shared by every subcommand.
struct Context {
    params: SpacetimeParams,
    format: Format,
    embed: EmbedOptions,
    file: FileConfig,
}

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Outcome<T> {
    flag.or(file)
        .ok_or_else(|| Failure::usage(format!("missing --{name}")))
}

fn env_tolerance() -> Outcome<Option<f64>> {
    match std::env::var(TOLERANCE_ENV) {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .map(Some)
            .map_err(|_| Failure::usage(format!("{TOLERANCE_ENV} is not a number: {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn context(g: &Global) -> Outcome<Context> {
    let file = match &g.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let nested = file.params.as_ref();
    let mass = g
        .mass
        .or(file.mass)
        .or(nested.and_then(|n| n.mass))
        .unwrap_or(1.0);
    let charge = g
        .charge
        .or(file.e)
        .or(nested.and_then(|n| n.e))
        .unwrap_or(0.6);
    let params = SpacetimeParams::new(mass, charge)?;

    let mut embed = EmbedOptions::default();
    let tolerance = match g.tolerance.or(file.tolerance) {
        Some(t) => Some(t),
        None => env_tolerance()?,
    };
    if let Some(tol) = tolerance {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Failure::usage(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        embed.quadrature = QuadratureOptions {
            abs_tol: tol,
            ..embed.quadrature
        };
    }
    if let Some(n) = g.samples.or(file.samples) {
        if n < 16 {
            return Err(Failure::usage(format!(
                "need at least 16 samples per piece, got {n}"
            )));
        }
        embed.samples_per_piece = n;
    }
    Ok(Context {
        params,
        format: g.format.or(file.format).unwrap_or(Format::Json),
        embed,
        file,
    })
}

fn render(ctx: &Context, doc: &ExportDocument) -> Outcome<String> {
    Ok(match ctx.format {
        Format::Json => doc.to_json()?,
        Format::Csv => doc.to_csv(),
        Format::Svg => doc.to_svg(&ctx.params),
    })
}

fn json_only(ctx: &Context, value: &Value) -> Outcome<String> {
    match ctx.format {
        Format::Json => Ok(export::to_json(value)?),
        other => Err(Failure::usage(format!(
            "format {other:?} is not available for this command"
        ))),
    }
}

fn cmd_slice(ctx: &Context, a: &SliceArgs) -> Outcome<String> {
    let p = &ctx.params;
    let f = &ctx.file;
    let h = required(a.h, f.h, "H")?;
    let cylinder = a.cylinder.or(f.cylinder);
    let primed = a.primed || f.primed.unwrap_or(false);
    let mut spec = match cylinder {
        Some(CylinderArg::Outer) => SliceSpec::cylinder(p, h, false)?,
        Some(CylinderArg::Inner) => SliceSpec::cylinder(p, h, true)?,
        None => {
            let c = required(a.c, f.c, "c")?;
            SliceSpec::new(p, h, c)?.with_primed(p, primed)?
        }
    };
    if let Some(side) = a.side.or(f.side) {
        spec = spec.with_side(match side {
            SideArg::Inner => Side::Inner,
            SideArg::Outer => Side::Outer,
        });
    }
    if let Some(branch) = a.branch.or(f.branch) {
        spec = spec.with_branch(match branch {
            BranchArg::Positive => Branch::PositiveSlope,
            BranchArg::Negative => Branch::NegativeSlope,
        });
    }
    if let Some(x) = a.offset.or(f.offset) {
        spec = spec.with_placement(Placement::Offset(x));
    }
    if let Some(k) = a.copy.or(f.copy) {
        spec = spec.with_copy(k);
    }
    let slice = rncmc::atlas::embed_slice(p, &spec, &ctx.embed)?;
    render(ctx, &ExportDocument::new(p).with_slice(&slice))
}

fn cmd_ivp(ctx: &Context, a: &IvpArgs) -> Outcome<String> {
    let f = &ctx.file;
    let data = IvpData {
        h: a.h.or(f.h).unwrap_or(0.0),
        point: DiagramPoint {
            time: required(a.t0, f.t0, "T0")?,
            space: required(a.x0, f.x0, "X0")?,
        },
        slope: required(a.v, f.v, "V")?,
    };
    let slice = solve_ivp(&ctx.params, &data, &ctx.embed)?;
    let doc = ExportDocument::new(&ctx.params)
        .with_slice(&slice)
        .with_extra("c", json!(slice.spec.c));
    render(ctx, &doc)
}

fn cmd_dirichlet(ctx: &Context, a: &DirichletArgs) -> Outcome<String> {
    let f = &ctx.file;
    let h = required(a.h, f.h, "H")?;
    let t0 = required(a.t0, f.t0, "T0")?;
    let x0 = required(a.x0, f.x0, "X0")?;
    let sol = solve_dirichlet(
        &ctx.params,
        h,
        t0,
        x0,
        &DirichletOptions::default(),
        &ctx.embed,
    )?;
    // Polyline symmetry plus fresh quadrature at mirrored abscissae.
    let mut symmetry = sol.slice.polyline.symmetry_residual();
    for k in 1..=16 {
        let x = x0 * k as f64 / 16.0;
        let right = sol
            .slice
            .time_at_exact(&ctx.params, x, &ctx.embed.quadrature)?;
        let left = sol
            .slice
            .time_at_exact(&ctx.params, -x, &ctx.embed.quadrature)?;
        if let (Some(a), Some(b)) = (right, left) {
            symmetry = symmetry.max((a - b).abs());
        }
    }
    let mut record = export::SliceRecord::new(&sol.slice);
    record.parameter = Some(sol.parameter);
    let mut doc = ExportDocument::new(&ctx.params)
        .with_extra("parameter", json!(sol.parameter))
        .with_extra("iterations", json!(sol.iterations))
        .with_extra("miss", json!(sol.miss))
        .with_extra("symmetry_residual", json!(symmetry));
    doc.slices.push(record);
    render(ctx, &doc)
}

fn cmd_foliate(ctx: &Context, a: &FoliateArgs) -> Outcome<String> {
    let p = &ctx.params;
    let f = &ctx.file;
    let mode = a.mode.or(f.mode).unwrap_or(Mode::Fixed);
    let doc = match mode {
        Mode::Fixed => {
            let h = required(a.h, f.h, "H")?;
            let n = a.n.or(f.n).unwrap_or(24);
            let copies = a.copies.or(f.copies).unwrap_or(1);
            if copies < 1 {
                return Err(Failure::usage(format!(
                    "need at least one copy, got {copies}"
                )));
            }
            let leaves = foliate_fixed(p, h, (0, copies - 1), n, &ctx.embed)?;
            let curve = FixedHLoop::new(p, h)?.curve(256)?;
            ExportDocument::new(p)
                .with_leaves(&leaves)
                .with_curve(curve)
        }
        Mode::Varied => {
            let segments = a.segments.or(f.segments).unwrap_or(4);
            let n = a.n.or(f.n).unwrap_or(6);
            let fol = foliate_varied(p, segments, n, &ctx.embed)?;
            let mut doc = ExportDocument::new(p).with_leaves(&fol.leaves);
            for seg in &fol.segments {
                doc = doc.with_curve(seg.curve.clone());
            }
            doc.with_extra(
                "segments",
                serde_json::to_value(&fol.segments).map_err(|e| Failure::usage(e.to_string()))?,
            )
        }
    };
    render(ctx, &doc)
}

fn cmd_envelopes(ctx: &Context, a: &EnvelopeArgs) -> Outcome<String> {
    let p = &ctx.params;
    let h = required(a.h, ctx.file.h, "H")?;
    let n = a.n.or(ctx.file.n).unwrap_or(64).max(2);
    let cp = slice::critical_points(p, h)?;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let r = p.r_minus + (p.r_plus - p.r_minus) * i as f64 / (n - 1) as f64;
        rows.push((r, slice::envelope_f(p, h, r)?, slice::envelope_g(p, h, r)?));
    }
    match ctx.format {
        Format::Csv => {
            let mut out = String::from("r,F,G\n");
            for (r, ff, g) in rows {
                out.push_str(&format!(
                    "{},{},{}\n",
                    export::fmt17(r),
                    export::fmt17(ff),
                    export::fmt17(g)
                ));
            }
            Ok(out)
        }
        _ => json_only(
            ctx,
            &json!({
                "params": export::ParamsRecord::from(p),
                "H": h,
                "R_H": cp.r_big,
                "C_H": cp.c_big,
                "r_H": cp.r_small,
                "c_H": cp.c_small,
                "table": rows,
            }),
        ),
    }
}

fn cmd_selftest(ctx: &Context, a: &SelftestArgs) -> Outcome<(String, bool)> {
    let mut size = SuiteSize::default();
    if let Some(seed) = a.seed.or(ctx.file.seed) {
        size.seed = seed;
    }
    let outcomes = checks::run_all(&size, &ctx.embed)?;
    for o in &outcomes {
        eprintln!("{o}");
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let text = json_only(
        ctx,
        &json!({ "seed": size.seed, "passed": passed, "criteria": outcomes }),
    )?;
    Ok((text, passed))
}

fn run(cli: &Cli) -> Outcome<bool> {
    let ctx = context(&cli.global)?;
    let (text, ok) = match &cli.command {
        Command::Slice(a) => (cmd_slice(&ctx, a)?, true),
        Command::Ivp(a) => (cmd_ivp(&ctx, a)?, true),
        Command::Dirichlet(a) => (cmd_dirichlet(&ctx, a)?, true),
        Command::Foliate(a) => (cmd_foliate(&ctx, a)?, true),
        Command::Envelopes(a) => (cmd_envelopes(&ctx, a)?, true),
        Command::Selftest(a) => cmd_selftest(&ctx, a)?,
    };
    match &cli.global.output {
        Some(path) => fs::write(path, text).map_err(Failure::io)?,
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(Failure::io(e)),
                _ => {}
            }
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(failure) => {
            let (code, kind, message) = match failure {
                Failure::Validation(k, m) => (2, k, m),
                Failure::Numerical(k, m) => (3, k, m),
            };
            eprintln!("{}", json!({ "error": kind, "message": message }));
            ExitCode::from(code)
        }
    }
}
