//! Command-line front end: list built-in scenarios, run one to CSV and
//! SVG, compare a PI/PID pair, or autotune a controller. Exit codes:
//! 0 success, 1 usage or configuration error, 2 numeric failure during
//! simulation.

use crate::controller::PidConfig;
use crate::csv::emit_csv;
use crate::error::{Error, Result};
use crate::fixtures::{builtin, FIXTURE_NAMES};
use crate::metrics::{step_metrics, StepMetrics};
use crate::plot::emit_plot;
use crate::report::ComparisonReport;
use crate::scenario::parse_scenario;
use crate::simloop::{run_closed_loop, run_pair, LoopScenario, SimTrace};
use crate::tuning::{autotune_observed, VaryMask};
use clap::{Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "tankloop",
    about = "Closed-loop process control simulation toolkit",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios
    List,
    /// Run one scenario and write its trace as CSV plus an SVG plot
    Run {
        /// Built-in scenario name or path to a scenario file
        #[arg(long)]
        scenario: String,
        /// Override the scenario's noise seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's duration (s)
        #[arg(long)]
        duration: Option<f64>,
        /// Output directory for trace.csv / plot.svg
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a PI scenario and a PID scenario with paired noise and report
    /// the per-metric comparison
    Compare {
        /// PI side: built-in name or scenario file path
        #[arg(long)]
        pi: String,
        /// PID side: built-in name or scenario file path
        #[arg(long)]
        pid: String,
        /// Shared noise seed override for both runs
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the CSVs and the combined plot
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Autotune a scenario's controller by simplex search
    Tune {
        /// Built-in scenario name or path to a scenario file
        #[arg(long)]
        scenario: String,
        /// Which parameter set to vary
        #[arg(long, value_enum)]
        kind: TuneKind,
        /// Objective evaluation budget
        #[arg(long, default_value_t = 200)]
        budget: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TuneKind {
    /// Vary kp, ti and the setpoint weight
    Pi,
    /// Vary kp, ti, td and the setpoint weight
    Pid,
}

/// Entry point for `main`: parses real process arguments.
pub fn run_from_env() -> i32 {
    run(std::env::args_os())
}

/// Parses and executes `argv`, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 2 on usage errors by default; this tool reserves
            // 2 for numeric failures, so usage problems map to 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e @ Error::Numeric { .. }) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::List => {
            for name in FIXTURE_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Run { scenario, seed, duration, out } => cmd_run(&scenario, seed, duration, &out),
        Command::Compare { pi, pid, seed, out } => cmd_compare(&pi, &pid, seed, &out),
        Command::Tune { scenario, kind, budget } => cmd_tune(&scenario, kind, budget),
    }
}

/// Resolves a `--scenario` argument: built-in name first, then a file
/// path. Returns the scenario and a short stem for naming outputs.
fn resolve(spec: &str) -> Result<(LoopScenario, String)> {
    if let Some(s) = builtin(spec) {
        return Ok((s, spec.to_string()));
    }
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());
        return Ok((parse_scenario(&text)?, stem));
    }
    Err(Error::Config(format!(
        "`{spec}` is neither a built-in scenario ({}) nor a scenario file",
        FIXTURE_NAMES.join(", ")
    )))
}

fn apply_overrides(scenario: &mut LoopScenario, seed: Option<u64>, duration: Option<f64>) {
    if let Some(s) = seed {
        scenario.seed = s;
    }
    if let Some(d) = duration {
        scenario.duration = d;
    }
}

/// Analysis window and step endpoints implied by the scenario's first
/// setpoint change.
fn step_window(scenario: &LoopScenario) -> Option<((f64, f64), (f64, f64))> {
    let (t, before, after) = scenario.setpoint.first_change()?;
    if t >= scenario.duration {
        return None;
    }
    Some(((t, scenario.duration), (before, after)))
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

fn print_metrics(label: &str, m: &StepMetrics) {
    let opt = |v: Option<f64>| match v {
        Some(x) => format!("{x:.3} s"),
        None => "-".to_string(),
    };
    println!("{label}:");
    println!("  overshoot          {:.2} %", m.overshoot);
    println!("  rise time          {}", opt(m.rise_time));
    println!("  settling time      {}", opt(m.settling_time));
    println!("  steady-state error {:.4} %", m.steady_state_error);
    println!("  iae/ise/itae       {:.2} / {:.2} / {:.2}", m.iae, m.ise, m.itae);
    println!("  control variance   {:.5}", m.control_variance);
}

fn cmd_run(spec: &str, seed: Option<u64>, duration: Option<f64>, out: &Path) -> Result<()> {
    let (mut scenario, stem) = resolve(spec)?;
    apply_overrides(&mut scenario, seed, duration);
    let trace = run_closed_loop(&scenario)?;
    let csv_path = write_out(out, &format!("{stem}.csv"), &emit_csv(&trace))?;
    let svg_path = write_out(out, &format!("{stem}.svg"), &emit_plot(&[(stem.as_str(), &trace)])?)?;
    if let Some((window, step)) = step_window(&scenario) {
        print_metrics(&stem, &step_metrics(&trace, window, step)?);
    }
    println!("wrote {}", csv_path.display());
    println!("wrote {}", svg_path.display());
    Ok(())
}

fn cmd_compare(pi_spec: &str, pid_spec: &str, seed: Option<u64>, out: &Path) -> Result<()> {
    let (mut pi, pi_stem) = resolve(pi_spec)?;
    let (mut pid, pid_stem) = resolve(pid_spec)?;
    apply_overrides(&mut pi, seed, None);
    apply_overrides(&mut pid, seed, None);
    let (pi_trace, pid_trace) = run_pair(&pi, &pid)?;

    let analyze = |scenario: &LoopScenario, trace: &SimTrace, label: &str| -> Result<StepMetrics> {
        let (window, step) = step_window(scenario).ok_or_else(|| {
            Error::Argument(format!("{label} has a constant setpoint; nothing to compare"))
        })?;
        step_metrics(trace, window, step)
    };
    let pi_metrics = analyze(&pi, &pi_trace, pi_spec)?;
    let pid_metrics = analyze(&pid, &pid_trace, pid_spec)?;

    let report = ComparisonReport::new(&pi_stem, &pid_stem, &pi_metrics, &pid_metrics);
    print!("{}", report.render());

    let pi_csv = write_out(out, &format!("{pi_stem}.csv"), &emit_csv(&pi_trace))?;
    let pid_csv = write_out(out, &format!("{pid_stem}.csv"), &emit_csv(&pid_trace))?;
    let svg = emit_plot(&[(pi_stem.as_str(), &pi_trace), (pid_stem.as_str(), &pid_trace)])?;
    let svg_path = write_out(out, &format!("{pi_stem}_vs_{pid_stem}.svg"), &svg)?;
    println!("wrote {}", pi_csv.display());
    println!("wrote {}", pid_csv.display());
    println!("wrote {}", svg_path.display());
    Ok(())
}

fn fmt_config(c: &PidConfig) -> String {
    let ti = match c.ti {
        Some(t) => format!("{t:.4}"),
        None => "off".to_string(),
    };
    format!("kp={:.4} ti={} td={:.4} beta={:.4}", c.kp, ti, c.td, c.beta)
}

fn cmd_tune(spec: &str, kind: TuneKind, budget: usize) -> Result<()> {
    let (scenario, stem) = resolve(spec)?;
    let mask = match kind {
        TuneKind::Pi => VaryMask::pi(),
        TuneKind::Pid => VaryMask::pid(),
    };
    let result = autotune_observed(&scenario, &mask, budget, |i, cfg, obj| {
        println!("eval {i:>4}: {} -> objective {obj:.4}", fmt_config(cfg));
    })?;
    println!("tuned {stem} in {} evaluations (converged: {})", result.evaluations, result.converged);
    println!("objective {:.4} -> {:.4}", result.objective_initial, result.objective_final);
    println!("controller: {}", fmt_config(&result.config));
    Ok(())
}
