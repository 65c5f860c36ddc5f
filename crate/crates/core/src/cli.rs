//! The `cliffham` command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage, configuration or
//! input error, 3 runtime failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::{OutputFormat, OutputSpec, PartialConfig, SimulationConfig};
use crate::dynamics::{energy_drift, integrate, separability_warning, IntegratorId, Trajectory};
use crate::error::Error;
use crate::forms::{canonical_one_form, liouville_form, symplectic_form};
use crate::hamiltonian::rhs_table;
use crate::plot::{read_trajectory, render_svg};
use crate::structures::StructureId;
use crate::verify::{load_structure_set, run_catalog, VerifyOptions, DEFAULT_POINTS, DEFAULT_SEED};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Environment variable capping the worker threads used for parallel work.
pub const MAX_THREADS_ENV: &str = "CLIFFHAM_MAX_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "cliffham", version, about = "Hamiltonian mechanics on Cliffordian Kähler manifolds")]
pub struct Cli {
    /// Output format for reports and summaries.
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    /// Seed for the random states drawn by `verify`.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Suppress summaries on standard output.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print ω, λ, Φ and the Hamilton equations for one structure.
    Derive(DeriveArgs),
    /// Integrate the Hamilton equations and write the trajectory.
    Simulate(SimulateArgs),
    /// Run the certification catalog.
    Verify(VerifyArgs),
    /// Draw a phase portrait of two coordinates as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    #[arg(long)]
    pub structure: StructureId,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON configuration file; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub structure: Option<StructureId>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub hamiltonian: Option<String>,
    /// Initial state, comma separated (8n values).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long)]
    pub integrator: Option<IntegratorId>,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Trajectory output path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Trajectory format; defaults to the config's, else the extension.
    #[arg(long)]
    pub output_format: Option<OutputFormat>,
    /// Write the resolved configuration to this path.
    #[arg(long)]
    pub write_config: Option<PathBuf>,
    /// Resolve and validate only; do not integrate.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Values of n to check.
    #[arg(long = "n", value_delimiter = ',', default_values_t = [1usize, 2, 3])]
    pub ns: Vec<usize>,
    /// Random states per (structure, Hamiltonian, n).
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub points: usize,
    /// Replace structure tables with those in a JSON file.
    #[arg(long, hide = true)]
    pub structure_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Trajectory file (CSV or JSON).
    pub trajectory: PathBuf,
    /// Coordinates to plot, 1-based, e.g. `1,2`.
    #[arg(long, value_delimiter = ',', num_args = 1, default_values_t = [1usize, 2])]
    pub pair: Vec<usize>,
    #[arg(long, short)]
    pub output: PathBuf,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    format: ReportFormat,
    quiet: bool,
}

impl Io<'_> {
    fn fail(&mut self, code: i32, e: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {e}");
        code
    }
}

/// Exit code for an error raised while reading inputs or integrating.
fn code_for(e: &Error) -> i32 {
    match e {
        Error::MidpointDivergence { .. } | Error::Aborted { .. } | Error::Domain(_) | Error::DegenerateForm { .. } => {
            EXIT_RUNTIME
        }
        _ => EXIT_USAGE,
    }
}

/// Applies [`MAX_THREADS_ENV`] to the global thread pool (once per process).
pub fn configure_threads() {
    if let Some(k) = std::env::var(MAX_THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&k| k > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    configure_threads();
    let mut io = Io {
        out,
        err,
        format: cli.format,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Derive(a) => cmd_derive(&mut io, &a),
        Command::Simulate(a) => cmd_simulate(&mut io, &a),
        Command::Verify(a) => cmd_verify(&mut io, &a, cli.seed),
        Command::Plot(a) => cmd_plot(&mut io, &a),
    }
}

fn cmd_derive(io: &mut Io<'_>, a: &DeriveArgs) -> i32 {
    let id = a.structure;
    let forms = canonical_one_form(a.n)
        .and_then(|w| Ok((w, liouville_form(id, a.n)?, symplectic_form(id, a.n)?)));
    let (omega, lambda, phi) = match forms {
        Ok(f) => f,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    let table = rhs_table(id);
    let rows = table.render_rows(a.n);
    let text = match io.format {
        ReportFormat::Text => {
            let mut s = format!("structure {id}, n = {}\n", a.n);
            s.push_str(&format!("omega  = {omega}\nlambda = {lambda}\nPhi    = {phi}\n"));
            s.push_str("Hamilton equations:\n");
            for r in &rows {
                s.push_str(&format!("  {r}\n"));
            }
            s
        }
        ReportFormat::Json => {
            let v = json!({
                "structure": id,
                "n": a.n,
                "omega": { "text": omega.to_string(), "terms": omega.to_json() },
                "lambda": { "text": lambda.to_string(), "terms": lambda.to_json() },
                "phi": { "text": phi.to_string(), "terms": phi.to_json() },
                "equations": table.rows,
                "equations_text": rows,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json value"))
        }
    };
    let _ = io.out.write_all(text.as_bytes());
    EXIT_OK
}

fn flags_as_partial(a: &SimulateArgs) -> PartialConfig {
    let output = a.output.as_ref().map(|path| OutputSpec {
        path: path.clone(),
        format: a.output_format.unwrap_or_else(|| format_from_extension(path)),
    });
    PartialConfig {
        structure: a.structure,
        n: a.n,
        hamiltonian: a.hamiltonian.clone(),
        x0: a.x0.clone(),
        integrator: a.integrator,
        dt: a.dt,
        steps: a.steps,
        output,
    }
}

fn format_from_extension(path: &Path) -> OutputFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => OutputFormat::Json,
        _ => OutputFormat::Csv,
    }
}

/// Resolves the configuration from the optional file and the flags.
pub fn resolve_config(a: &SimulateArgs) -> crate::Result<SimulationConfig> {
    let base = match &a.config {
        Some(p) => PartialConfig::from_file(p)?,
        None => PartialConfig::default(),
    };
    let mut merged = base.merged(flags_as_partial(a));
    if let (Some(fmt), Some(out)) = (a.output_format, merged.output.as_mut()) {
        out.format = fmt;
    }
    merged.resolve()
}

fn write_trajectory(traj: &Trajectory, spec: &OutputSpec) -> crate::Result<()> {
    let text = match spec.format {
        OutputFormat::Csv => traj.to_csv_string(),
        OutputFormat::Json => traj.to_json_string()? + "\n",
    };
    std::fs::write(&spec.path, text)?;
    Ok(())
}

fn cmd_simulate(io: &mut Io<'_>, a: &SimulateArgs) -> i32 {
    let cfg = match resolve_config(a) {
        Ok(c) => c,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    if let Some(path) = &a.write_config {
        let written = cfg.to_json().and_then(|j| Ok(std::fs::write(path, j + "\n")?));
        if let Err(e) = written {
            return io.fail(EXIT_RUNTIME, e);
        }
    }
    if a.dry_run {
        return EXIT_OK;
    }
    let h = match cfg.parsed_hamiltonian() {
        Ok(h) => h,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    if let Some(w) = separability_warning(cfg.integrator, cfg.structure, &h) {
        let _ = writeln!(io.err, "{w}");
    }

    let start = Instant::now();
    let (traj, failure) = match integrate(&cfg) {
        Ok(t) => (t, None),
        Err(Error::Aborted { step, cause, partial }) => (*partial, Some((step, cause))),
        Err(e) => return io.fail(code_for(&e), e),
    };
    let wall = start.elapsed().as_secs_f64();

    if let Some(spec) = &cfg.output {
        if let Err(e) = write_trajectory(&traj, spec) {
            return io.fail(EXIT_RUNTIME, e);
        }
    }
    if let Some((step, cause)) = failure {
        let _ = writeln!(
            io.err,
            "error: integration aborted at step {step}: {cause}; partial trajectory flagged invalid"
        );
        return EXIT_RUNTIME;
    }
    if !io.quiet {
        let summary = summarize(&traj, wall, &cfg, io.format);
        let _ = io.out.write_all(summary.as_bytes());
    }
    EXIT_OK
}

fn summarize(traj: &Trajectory, wall: f64, cfg: &SimulationConfig, format: ReportFormat) -> String {
    let last = traj.samples.last().expect("at least the initial sample");
    let drift = energy_drift(traj);
    match format {
        ReportFormat::Text => {
            let xs: Vec<String> = last.x.iter().map(|v| v.to_string()).collect();
            let mut s = format!(
                "structure {}, integrator {}, n = {}, dt = {}, steps = {}\n",
                cfg.structure, cfg.integrator, cfg.n, cfg.dt, cfg.steps
            );
            s.push_str(&format!("final t = {}\n", last.t));
            s.push_str(&format!("final state = {}\n", xs.join(" ")));
            s.push_str(&format!("energy drift = {drift:e}\n"));
            s.push_str(&format!("wall time = {wall:.3} s\n"));
            if let Some(spec) = &cfg.output {
                s.push_str(&format!("wrote {} ({})\n", spec.path.display(), spec.format));
            }
            s
        }
        ReportFormat::Json => {
            let v = json!({
                "structure": cfg.structure,
                "integrator": cfg.integrator,
                "final_t": last.t,
                "final_state": last.x,
                "energy_drift": drift,
                "wall_time_s": wall,
                "output": cfg.output.as_ref().map(|o| o.path.display().to_string()),
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json value"))
        }
    }
}

fn cmd_verify(io: &mut Io<'_>, a: &VerifyArgs, seed: u64) -> i32 {
    let set = match &a.structure_table {
        Some(p) => match std::fs::read_to_string(p).map_err(Error::from).and_then(|t| load_structure_set(&t)) {
            Ok(s) => s,
            Err(e) => return io.fail(EXIT_USAGE, e),
        },
        None => Default::default(),
    };
    let opts = VerifyOptions {
        ns: a.ns.clone(),
        seed,
        points: a.points,
    };
    let report = match run_catalog(&set, &opts) {
        Ok(r) => r,
        Err(e) => return io.fail(code_for(&e), e),
    };
    if !io.quiet || !report.passed() {
        let text = match io.format {
            ReportFormat::Text => report.render_text(),
            ReportFormat::Json => report.to_json().expect("report serializes") + "\n",
        };
        let _ = io.out.write_all(text.as_bytes());
    }
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

fn cmd_plot(io: &mut Io<'_>, a: &PlotArgs) -> i32 {
    let [x, y] = a.pair[..] else {
        return io.fail(EXIT_USAGE, "--pair takes exactly two coordinates");
    };
    let traj = match read_trajectory(&a.trajectory) {
        Ok(t) => t,
        Err(e) => return io.fail(EXIT_USAGE, format!("{}: {e}", a.trajectory.display())),
    };
    let svg = match render_svg(&traj, x, y) {
        Ok(s) => s,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    if let Err(e) = std::fs::write(&a.output, svg) {
        return io.fail(EXIT_RUNTIME, e);
    }
    if !io.quiet {
        let _ = writeln!(
            io.out,
            "wrote {} ({} samples, x{x} vs x{y})",
            a.output.display(),
            traj.len()
        );
    }
    EXIT_OK
}
