//! `gkp` — prepare comb-encoded oscillator states, analyse their error
//! probabilities, run shift-error recovery trials, and compile ion-trap
//! pulse schedules.
//!
//! Exit codes: 0 success, 1 domain error from the simulation core, 2 usage.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gkp_core::analysis;
use gkp_core::comb::Quadrature;
use gkp_core::grid::default_grid_spec;
use gkp_core::io;
use gkp_core::lattice::LogicalBit;
use gkp_core::protocol::{self, Mode, OutcomeRecord, ProtocolConfig};
use gkp_core::recovery::{self, AncillaSource, RecoveryConfig, RecoverySummary, ShiftSpec};
use gkp_core::schedule;

#[derive(Parser)]
#[command(name = "gkp", version, about = "Oscillator-encoded qubit toolkit")]
struct Cli {
    /// Directory for emitted files (created if missing)
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the preparation protocol and emit densities plus the outcome record
    Prepare(PrepareArgs),
    /// Compute misidentification probabilities, bounds, and the sweep table
    Analyze(AnalyzeArgs),
    /// Run seeded shift-error recovery trials
    Recover(RecoverArgs),
    /// Lower the protocol to an ion-trap pulse schedule
    CompileSchedule(CompileArgs),
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v = match s {
        "sqrt(pi/2)" => (std::f64::consts::PI / 2.0).sqrt(),
        "sqrt(pi)" => std::f64::consts::PI.sqrt(),
        other => other.parse::<f64>().map_err(|e| format!("bad alpha `{other}`: {e}"))?,
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("alpha must be positive, got {v}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("bad value `{s}`: {e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("value must be positive, got {v}"))
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).map_err(|e| e.to_string())
}

fn parse_quadrature(s: &str) -> Result<Quadrature, String> {
    Quadrature::parse(s).map_err(|e| e.to_string())
}

fn parse_ancilla(s: &str) -> Result<AncillaSource, String> {
    AncillaSource::parse(s).map_err(|e| e.to_string())
}

/// Either a fixed shift or `uniform:X` for a symmetric uniform draw, in
/// units of the syndrome lattice period.
#[derive(Debug, Clone, Copy)]
enum ShiftArg {
    Fixed(f64),
    Uniform(f64),
}

fn parse_shift(s: &str) -> Result<ShiftArg, String> {
    if let Some(rest) = s.strip_prefix("uniform:") {
        let max: f64 = rest.parse().map_err(|e| format!("bad uniform shift `{s}`: {e}"))?;
        if !(max > 0.0) {
            return Err("uniform shift bound must be positive".into());
        }
        return Ok(ShiftArg::Uniform(max));
    }
    Ok(ShiftArg::Fixed(s.parse::<f64>().map_err(|e| format!("bad shift `{s}`: {e}"))?))
}

#[derive(Args)]
struct PrepareArgs {
    /// Lattice constant; accepts `sqrt(pi/2)` and `sqrt(pi)` verbatim
    #[arg(long, default_value = "sqrt(pi/2)", value_parser = parse_alpha)]
    alpha: f64,
    /// Gaussian peak width
    #[arg(long, default_value_t = 0.15, value_parser = parse_positive)]
    delta: f64,
    /// Iteration count
    #[arg(long, default_value_t = 3)]
    n: u32,
    /// Target logical bit
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    bit: u8,
    /// postselect | deterministic | sample
    #[arg(long, default_value = "postselect", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Outcome pattern for a single deterministic branch, e.g. `101`
    #[arg(long)]
    bits: Option<String>,
    /// Density file format: csv | json | both
    #[arg(long, default_value = "csv")]
    out: String,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, default_value = "sqrt(pi/2)", value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, default_value_t = 0.15, value_parser = parse_positive)]
    delta: f64,
    #[arg(long, default_value_t = 3)]
    n: u32,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long, default_value = "sqrt(pi/2)", value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, default_value_t = 0.10, value_parser = parse_positive)]
    delta: f64,
    #[arg(long, default_value_t = 2)]
    n: u32,
    /// Shift along the corrected quadrature, in units of the lattice period
    /// (`alpha` for position, `pi/alpha` for momentum); or `uniform:X`
    #[arg(long = "dq-shift", default_value = "0.2", value_parser = parse_shift)]
    dq_shift: ShiftArg,
    /// Dual-quadrature shift in units of the dual lattice period
    #[arg(long = "dp-shift", default_value_t = 0.0)]
    dp_shift: f64,
    /// `ideal` or `bits:<pattern>`
    #[arg(long, default_value = "ideal", value_parser = parse_ancilla)]
    ancilla: AncillaSource,
    /// Ideal-comb ancilla peak width
    #[arg(long, default_value_t = 0.05, value_parser = parse_positive)]
    ancilla_width: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which quadrature the recovery corrects
    #[arg(long, default_value = "position", value_parser = parse_quadrature)]
    quadrature: Quadrature,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long, default_value = "sqrt(pi/2)", value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, default_value_t = 0.15, value_parser = parse_positive)]
    delta: f64,
    #[arg(long, default_value_t = 3)]
    n: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "postselect", value_parser = parse_mode)]
    mode: Mode,
    /// json | text
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    config: serde_json::Value,
    seed: u64,
    outputs: Vec<String>,
    version: String,
    wall_time_ms: u128,
}

struct Emitter {
    out_dir: PathBuf,
    outputs: Vec<String>,
}

impl Emitter {
    fn new(out_dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        Ok(Emitter { out_dir: out_dir.to_path_buf(), outputs: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        std::fs::write(self.out_dir.join(name), contents)?;
        self.outputs.push(name.to_string());
        println!("wrote {}", self.out_dir.join(name).display());
        Ok(())
    }

    fn finish(
        mut self,
        command: &str,
        config: serde_json::Value,
        seed: u64,
        started: Instant,
    ) -> std::io::Result<()> {
        self.outputs.push("manifest.json".to_string());
        let manifest = Manifest {
            command: command.to_string(),
            config,
            seed,
            outputs: self.outputs.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_ms: started.elapsed().as_millis(),
        };
        std::fs::write(
            self.out_dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest).expect("manifest serialises"),
        )
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

enum CliError {
    Core(gkp_core::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<gkp_core::Error> for CliError {
    fn from(e: gkp_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Prepare(args) => cmd_prepare(&cli.out_dir, args),
        Command::Analyze(args) => cmd_analyze(&cli.out_dir, args),
        Command::Recover(args) => cmd_recover(&cli.out_dir, args),
        Command::CompileSchedule(args) => cmd_compile(&cli.out_dir, args),
    }
}

fn emit_densities(
    emitter: &mut Emitter,
    record: &OutcomeRecord,
    alpha: f64,
    n: u32,
    format: &str,
) -> Result<(), CliError> {
    let (origin, dq, len) = default_grid_spec(alpha, n);
    let position = record.state.to_grid(origin, dq, len)?;
    let momentum = position.fourier()?;
    if format == "csv" || format == "both" {
        emitter.write("position_density.csv", &io::grid_to_csv(&position))?;
        emitter.write("momentum_density.csv", &io::grid_to_csv(&momentum))?;
    }
    if format == "json" || format == "both" {
        emitter.write("position_density.json", &io::grid_to_json(&position))?;
        emitter.write("momentum_density.json", &io::grid_to_json(&momentum))?;
    }
    Ok(())
}

fn cmd_prepare(out_dir: &Path, args: PrepareArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut config = ProtocolConfig::new(args.alpha, args.delta, args.n)?;
    config.target_bit = LogicalBit::parse(args.bit)?;
    config.mode = args.mode;
    config.seed = args.seed;
    for w in config.warnings() {
        eprintln!("warning: {w}");
    }
    let mut emitter = Emitter::new(out_dir)?;

    let record = match args.mode {
        Mode::Postselect => protocol::prepare(&config)?,
        Mode::Sample => protocol::sample_run(&config)?,
        Mode::Deterministic => {
            let branches = protocol::enumerate_branches(&config)?;
            let rows: Vec<serde_json::Value> = branches
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "bits": r.bits,
                        "probability": r.probability,
                        "normalization": r.normalization,
                    })
                })
                .collect();
            emitter.write(
                "branches.json",
                &serde_json::to_string_pretty(&rows).expect("branch table serialises"),
            )?;
            match &args.bits {
                Some(pattern) => {
                    let bits: Vec<u8> = pattern
                        .chars()
                        .map(|c| match c {
                            '0' => Ok(0u8),
                            '1' => Ok(1u8),
                            other => Err(gkp_core::Error::Domain(format!("bad bit `{other}`"))),
                        })
                        .collect::<gkp_core::Result<_>>()?;
                    if bits.len() != args.n as usize {
                        return Err(gkp_core::Error::Domain(format!(
                            "--bits needs {} bits, got {}",
                            args.n,
                            bits.len()
                        ))
                        .into());
                    }
                    protocol::branch_for_bits(&config, &bits)?
                }
                None => branches.into_iter().next().expect("at least one branch"),
            }
        }
    };

    emit_densities(&mut emitter, &record, args.alpha, args.n, &args.out)?;
    emitter.write("outcome.json", &io::record_to_json(&record))?;

    let config_echo = serde_json::json!({
        "alpha": args.alpha,
        "delta": args.delta,
        "n": args.n,
        "bit": args.bit,
        "mode": args.mode.label(),
        "bits": args.bits,
        "out": args.out,
    });
    emitter.finish("prepare", config_echo, args.seed, started)?;
    println!(
        "prepare: bits {:?}, probability {:.9e}",
        record.bits, record.probability
    );
    Ok(())
}

fn cmd_analyze(out_dir: &Path, args: AnalyzeArgs) -> Result<(), CliError> {
    let started = Instant::now();
    if args.n < 1 {
        return Err(gkp_core::Error::Domain("analysis needs n >= 1".into()).into());
    }
    let mut emitter = Emitter::new(out_dir)?;
    let report = analysis::report(args.alpha, args.delta, args.n)?;
    emitter.write(
        "report.json",
        &serde_json::to_string_pretty(&report).expect("report serialises"),
    )?;

    let deltas = [0.1, 0.15, 0.2, 0.3];
    let ns = [1u32, 2, 3, 4];
    let sweep = analysis::sweep(args.alpha, &deltas, &ns)?;
    let mut csv = String::from(
        "alpha,delta,n,position_error,position_bound,momentum_error,momentum_bound,overlap01,mean_energy,bounds_dominate\n",
    );
    for r in &sweep {
        csv.push_str(&format!(
            "{:.17e},{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            r.alpha,
            r.delta,
            r.iterations,
            r.position_error,
            r.position_bound,
            r.momentum_error,
            r.momentum_bound,
            r.overlap01,
            r.mean_energy,
            r.bounds_dominate()
        ));
    }
    emitter.write("sweep.csv", &csv)?;

    let config_echo = serde_json::json!({
        "alpha": args.alpha, "delta": args.delta, "n": args.n,
    });
    emitter.finish("analyze", config_echo, 0, started)?;
    println!(
        "analyze: position error {:.3e} <= bound {:.3e}; momentum error {:.3e} <= bound {:.3e}",
        report.position_error, report.position_bound, report.momentum_error, report.momentum_bound
    );
    Ok(())
}

fn cmd_recover(out_dir: &Path, args: RecoverArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut config = RecoveryConfig::new(args.alpha, args.delta, args.n)?;
    config.seed = args.seed;
    config.quadrature = args.quadrature;
    config.ancilla_width = args.ancilla_width;
    let mut emitter = Emitter::new(out_dir)?;

    let state = recovery::default_encoded_state(&config)?;
    let period = config.period();
    let spec = match args.dq_shift {
        ShiftArg::Fixed(x) => ShiftSpec::Fixed { primary: x * period, dual: args.dp_shift * dual_period(&config) },
        ShiftArg::Uniform(max) => ShiftSpec::UniformPrimary { max_abs: max * period },
    };
    let trials = recovery::run_trials(&state, spec, &args.ancilla, &config, args.trials)?;
    let summary = RecoverySummary::from_trials(&trials);

    let mut csv = String::from("eps,q_m,eps_est,fidelity,displacement_fidelity,logical_failure\n");
    for t in &trials {
        csv.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            t.shift.0,
            t.syndrome.measured,
            t.syndrome.estimate,
            t.fidelity,
            t.displacement_fidelity,
            t.logical_failure
        ));
    }
    emitter.write("trials.csv", &csv)?;
    emitter.write(
        "summary.json",
        &serde_json::to_string_pretty(&summary).expect("summary serialises"),
    )?;

    let config_echo = serde_json::json!({
        "alpha": args.alpha, "delta": args.delta, "n": args.n,
        "quadrature": args.quadrature.label(),
        "trials": args.trials,
        "ancilla_width": args.ancilla_width,
        "dp_shift": args.dp_shift,
    });
    emitter.finish("recover", config_echo, args.seed, started)?;
    println!(
        "recover: median |eps_est - eps| = {:.4e} ({}x cell), median fidelity {:.4}, logical failures {:.2}%",
        summary.median_syndrome_error,
        summary.median_syndrome_error / config.spacing(),
        summary.median_fidelity,
        100.0 * summary.logical_failure_rate
    );
    Ok(())
}

fn dual_period(config: &RecoveryConfig) -> f64 {
    match config.quadrature {
        Quadrature::Position => std::f64::consts::PI / config.alpha,
        Quadrature::Momentum => config.alpha,
    }
}

fn cmd_compile(out_dir: &Path, args: CompileArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut config = ProtocolConfig::new(args.alpha, args.delta, args.n)?;
    config.mode = args.mode;
    config.seed = args.seed;
    let sched = schedule::compile(&config)?;
    let violations = schedule::validate(&sched);
    if !violations.is_empty() {
        return Err(gkp_core::Error::InvalidSchedule(violations.join("; ")).into());
    }
    let mut emitter = Emitter::new(out_dir)?;
    match args.format.as_str() {
        "json" => emitter.write("schedule.json", &schedule::emit_json(&sched)?)?,
        "text" => emitter.write("schedule.txt", &schedule::emit_text(&sched)?)?,
        other => {
            return Err(gkp_core::Error::Domain(format!("unknown format `{other}`")).into());
        }
    }
    let config_echo = serde_json::json!({
        "alpha": args.alpha, "delta": args.delta, "n": args.n,
        "mode": args.mode.label(), "format": args.format,
    });
    emitter.finish("compile-schedule", config_echo, args.seed, started)?;
    println!(
        "compile-schedule: {} ops over {} trap periods",
        sched.ops.len(),
        sched.total_duration()
    );
    Ok(())
}
