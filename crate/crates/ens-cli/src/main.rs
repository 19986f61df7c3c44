//! `ens` command-line front end.
//!
//! Exit codes: 0 on success, 2 on configuration/validation failures, 3 when
//! a run aborts numerically.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// `println!` that ignores a closed stdout (e.g. piped into `head`) instead
/// of panicking.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

use ens_cli::builtins::{builtin, BUILTINS};
use ens_cli::checks::{sweep_g, validate};
use ens_cli::config::RunConfig;
use ens_cli::error::{CliError, Result};
use ens_cli::runner::run;
use ens_cli::series::Series;
use ens_core::diagnostics::{fit_decay, C0Mode};

#[derive(Parser)]
#[command(name = "ens", version, about = "coupled two-velocity flow simulator and analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run configuration (a TOML path or a built-in scenario name).
    Run(RunArgs),
    /// Fit a decay exponent to a column of an existing series file.
    Fit(FitArgs),
    /// Sweep the damped-coupling closed form against dense matrix exponentials.
    SweepG(SweepArgs),
    /// Cross-check fast kernels against independent reference implementations.
    Validate,
    /// List built-in scenarios (optionally emit them as TOML files).
    Scenarios(ScenariosArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a run TOML, or the name of a built-in scenario.
    config: String,
    /// Override the output directory from the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Series CSV produced by `ens run`.
    series: PathBuf,
    /// Column name, or several column names joined with '+'.
    #[arg(long)]
    column: String,
    /// Fit window as two times: --window T0 T1.
    #[arg(long, num_args = 2, value_names = ["T0", "T1"])]
    window: Vec<f64>,
    /// Offset handling: fit, unit, or given (with --c0).
    #[arg(long, default_value = "fit")]
    c0_mode: String,
    /// Offset value for --c0-mode given.
    #[arg(long)]
    c0: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 200)]
    t_points: usize,
    #[arg(long, default_value_t = 200)]
    lambda_points: usize,
    /// Fail if the closed form deviates from the dense exponential by more.
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
}

#[derive(Args)]
struct ScenariosArgs {
    /// Write each built-in as <DIR>/<name>.toml.
    #[arg(long)]
    emit: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Run(args) => cmd_run(args),
        Command::Fit(args) => cmd_fit(args),
        Command::SweepG(args) => cmd_sweep(args),
        Command::Validate => cmd_validate(),
        Command::Scenarios(args) => cmd_scenarios(args),
    }
}

fn load_config(arg: &str) -> Result<RunConfig> {
    let path = PathBuf::from(arg);
    if path.exists() {
        return RunConfig::from_path(&path);
    }
    if let Some(cfg) = builtin(arg) {
        return Ok(cfg);
    }
    Err(CliError::Config(format!(
        "{arg}: no such file or built-in scenario (try `ens scenarios`)"
    )))
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&args.config)?;
    if let Some(dir) = args.out_dir {
        cfg.output.dir = dir;
    }
    let out = run(&cfg)?;
    let s = &out.summary;
    say!("scenario {} finished: {} steps, {:.2}s wallclock", s.scenario, s.constants.steps, s.wallclock_s);
    for f in &s.fits {
        match (f.exponent, &f.error) {
            (Some(e), _) => say!(
                "  fit {:<14} exponent {:+.4}  (residual {:.2e}, window [{}, {}]{})",
                f.name,
                e,
                f.residual.unwrap_or(f64::NAN),
                f.window[0],
                f.window[1],
                if f.floored { ", floored" } else { "" }
            ),
            (None, Some(err)) => say!("  fit {:<14} refused: {err}", f.name),
            (None, None) => {}
        }
    }
    say!("  Z: {:.4e} -> {:.4e} (growth {:.3})", s.constants.z0, s.constants.z_final, s.constants.z_growth);
    say!("  series:  {}", out.series_path.display());
    say!("  summary: {}", out.summary_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_fit(args: FitArgs) -> Result<ExitCode> {
    if args.window.len() != 2 {
        return Err(CliError::Config("--window needs exactly two values".into()));
    }
    let mode = match args.c0_mode.as_str() {
        "fit" => C0Mode::Fit,
        "unit" => C0Mode::Unit,
        "given" => match args.c0 {
            Some(c) => C0Mode::Given(c),
            None => return Err(CliError::Config("--c0-mode given requires --c0".into())),
        },
        other => return Err(CliError::Config(format!("unknown c0 mode {other:?}"))),
    };
    let series = Series::read(&args.series)?;
    let times = series.column("t")?.to_vec();
    let values = series.eval(&args.column)?;
    let fit = fit_decay(&times, &values, (args.window[0], args.window[1]), mode)?;
    let payload = serde_json::json!({
        "column": args.column,
        "exponent": fit.exponent,
        "amplitude": fit.amplitude,
        "c0": fit.c0,
        "residual": fit.residual,
        "window": [fit.window.0, fit.window.1],
        "samples": fit.samples,
    });
    say!("{}", serde_json::to_string_pretty(&payload).expect("fit payload serializes"));
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let r = sweep_g(args.t_points, args.lambda_points);
    say!(
        "sweep-g over {} × {} points: max |g − dense| = {:.3e} at (t, λ) = ({:.4}, {:.4})",
        r.t_points, r.lambda_points, r.max_abs_err, r.err_at.0, r.err_at.1
    );
    say!(
        "  sharpness |g|/(2 t e^(-tλ)): max {:.6} at (t, λ) = ({:.4}, {:.4})",
        r.max_ratio, r.ratio_at.0, r.ratio_at.1
    );
    let ok = r.max_abs_err <= args.tolerance && r.max_ratio <= 1.0;
    say!("{}", if ok { "PASS" } else { "FAIL" });
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_validate() -> Result<ExitCode> {
    let checks = validate()?;
    let mut all = true;
    for c in &checks {
        say!("{} {:<18} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        all &= c.pass;
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_scenarios(args: ScenariosArgs) -> Result<ExitCode> {
    if let Some(dir) = &args.emit {
        std::fs::create_dir_all(dir)?;
        for b in BUILTINS {
            let path = dir.join(format!("{}.toml", b.name));
            std::fs::write(&path, (b.make)().to_toml())?;
            say!("wrote {}", path.display());
        }
    } else {
        for b in BUILTINS {
            say!("{:<18} {}", b.name, b.about);
        }
    }
    Ok(ExitCode::SUCCESS)
}
