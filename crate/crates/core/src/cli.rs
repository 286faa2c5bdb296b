//! The `covconn` command line.
//!
//! Exit codes: 0 when every checked property holds, 1 when one fails, 2 on
//! usage or input errors.

use clap::{Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::commgraph::{build_graph, check_spacing, connectivity_margin, is_connected};
use crate::coverage::{check_coverage, sample_coverage_oracle};
use crate::deployment::Deployment;
use crate::experiments::{records_to_csv, run_experiment, tightness_probe, ExperimentConfig, ExperimentError};
use crate::generate::{generate, GenSpec};
use crate::geometry::Tolerance;
use crate::io::{self, IoError};
use crate::redistribute::{hexagon_packing, is_valid_packing, max_packing_in_disk, redistribute, RedistributeError};
use crate::routing::{bound_constant, Router};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "covconn", version, about = "Coverage and connectivity checks for sensor deployments")]
pub struct Cli {
    /// Comparison tolerance for strict inequalities (absolute, < r_s/1000).
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Cross-check coverage with a sampling grid of this step.
    #[arg(long, global = true)]
    pub oracle_step: Option<f64>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the seed of generators, experiments and pack-test.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report coverage, spacing and connectivity of a deployment.
    Check { file: PathBuf },
    /// Remove spacing violations while keeping coverage.
    Redistribute {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Step log path; defaults to `<output>.steps.json`.
        #[arg(long)]
        steps: Option<PathBuf>,
    },
    /// Build the covering route between two sensors and print it as JSON.
    Route {
        file: PathBuf,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
    },
    /// Run a Monte Carlo experiment and write CSV rows and a JSON summary.
    Experiment {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Search for large spaced packings in a disk.
    PackTest {
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Generate a deployment from a generator spec.
    Gen {
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Failure of a command: exit code plus message for stderr.
struct Failure(i32, String);

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure(EXIT_USAGE, e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> CmdResult {
    match &cli.command {
        Command::Check { file } => cmd_check(cli, file, out),
        Command::Redistribute { file, output, steps } => cmd_redistribute(cli, file, output, steps.as_deref(), out),
        Command::Route { file, from, to } => cmd_route(cli, file, *from, *to, out),
        Command::Experiment { config, output } => cmd_experiment(cli, config, output, out),
        Command::PackTest { trials } => cmd_pack_test(cli, *trials, out),
        Command::Gen { spec, output } => cmd_gen(cli, spec, output, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure(EXIT_USAGE, format!("writing output: {e}")))
}

fn load(cli: &Cli, path: &Path) -> Result<Deployment, Failure> {
    let d = io::read_deployment(path)?;
    match cli.tolerance {
        None => Ok(d),
        Some(t) => {
            let tol = Tolerance::new(t, d.r_s()).map_err(|e| Failure(EXIT_USAGE, format!("--tolerance: {e}")))?;
            d.with_tolerance(tol).map_err(|e| Failure(EXIT_USAGE, e.to_string()))
        }
    }
}

fn cmd_check(cli: &Cli, file: &Path, out: &mut dyn Write) -> CmdResult {
    let d = load(cli, file)?;
    let mut text = String::new();
    let coverage = check_coverage(&d);
    text += &format!("covered: {}\n", coverage.covered);
    if let Some(w) = coverage.witness {
        text += &format!("witness: ({:?}, {:?})\n", w.x, w.y);
    }
    if coverage.marginal {
        text += "marginal: true\n";
    }
    let mut oracle_ok = true;
    if let Some(step) = cli.oracle_step {
        let oracle = sample_coverage_oracle(&d, step).map_err(|e| Failure(EXIT_USAGE, format!("--oracle-step: {e}")))?;
        let agrees = oracle.covered == coverage.covered || coverage.marginal;
        oracle_ok = agrees;
        text += &format!(
            "oracle: covered: {} (step {step:?}){}\n",
            oracle.covered,
            if agrees { "" } else { ", DISAGREES with checker" }
        );
    }
    let spacing = check_spacing(&d);
    if spacing.ok {
        text += "spacing: ok\n";
    } else {
        text += &format!("spacing: {} violating pairs\n", spacing.violating_pairs.len());
        for v in &spacing.violating_pairs {
            text += &format!("  sensors {} and {}: distance {:?}\n", v.first, v.second, v.distance);
        }
    }
    let connected = is_connected(&build_graph(&d));
    text += &format!("connected: {} (r_c = {:?})\n", connected, d.r_c());
    match connectivity_margin(&d) {
        Ok(m) => text += &format!("margin: {:?} ({:?} r_s)\n", m, m / d.r_s()),
        Err(_) => text += "margin: n/a (fewer than two sensors)\n",
    }
    let needed = bound_constant() * d.r_s();
    text += &format!("r_c >= bound*r_s: {} (bound*r_s = {:?})\n", d.r_c() >= needed - d.tau(), needed);
    text += &format!("region valid: {}\n", d.region_valid());
    emit(out, &text)?;
    let pass = coverage.covered && spacing.ok && connected && oracle_ok;
    Ok(if pass { EXIT_OK } else { EXIT_PROPERTY })
}

#[derive(Serialize)]
struct StepLog<'a> {
    iterations: usize,
    max_additions: usize,
    steps: &'a [crate::redistribute::RedistributionStep],
}

fn cmd_redistribute(cli: &Cli, file: &Path, output: &Path, steps: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let d = load(cli, file)?;
    let result = match redistribute(&d) {
        Ok(r) => r,
        Err(e @ (RedistributeError::NotCovering | RedistributeError::RegionInvalid)) => {
            return Err(Failure(EXIT_PROPERTY, e.to_string()))
        }
        Err(e) => return Err(Failure(EXIT_PROPERTY, format!("redistribution failed: {e}"))),
    };
    io::write_deployment(output, &result.final_deployment)?;
    let log_path = steps.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut p = output.as_os_str().to_owned();
        p.push(".steps.json");
        PathBuf::from(p)
    });
    io::write_text(
        &log_path,
        &io::versioned_json(&StepLog {
            iterations: result.iterations,
            max_additions: result.max_additions(),
            steps: &result.steps,
        }),
    )?;
    emit(
        out,
        &format!(
            "removed: {}\nadded: {}\nsensors: {} -> {}\nwrote {} and {}\n",
            result.steps.len(),
            result.steps.iter().map(|s| s.added.len()).sum::<usize>(),
            d.len(),
            result.final_deployment.len(),
            output.display(),
            log_path.display()
        ),
    )?;
    Ok(EXIT_OK)
}

fn cmd_route(cli: &Cli, file: &Path, from: usize, to: usize, out: &mut dyn Write) -> CmdResult {
    let d = load(cli, file)?;
    for id in [from, to] {
        if id >= d.len() {
            return Err(Failure(EXIT_USAGE, format!("sensor id {id} out of range (n = {})", d.len())));
        }
    }
    let router = Router::new(&d).map_err(|e| Failure(EXIT_PROPERTY, e.to_string()))?;
    let trace = router.build_route(from, to).map_err(|e| Failure(EXIT_PROPERTY, e.to_string()))?;
    emit(out, &io::versioned_json(&trace))?;
    Ok(EXIT_OK)
}

fn cmd_experiment(cli: &Cli, config: &Path, dir: &Path, out: &mut dyn Write) -> CmdResult {
    let origin = config.display().to_string();
    let mut cfg: ExperimentConfig = io::parse_json(&io::read_text(config)?, &origin)?;
    io::check_version(cfg.format_version, &origin)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t) = cli.tolerance {
        cfg.gen.tolerance = Some(t);
    }
    let output = match run_experiment(&cfg, cli.threads) {
        Ok(o) => o,
        Err(e) => return Err(experiment_failure(e, dir)),
    };
    let csv_path = dir.join("trials.csv");
    let summary_path = dir.join("summary.json");
    io::write_text(&csv_path, &records_to_csv(&output.records))?;
    io::write_text(&summary_path, &io::to_json(&output.summary))?;
    let mut text = format!(
        "trials: {}\nhypothesis trials: {}\n",
        output.summary.trials, output.summary.hypothesis_trials
    );
    for f in &output.summary.per_factor {
        let rate = f.rate.map(|r| format!("{r:?}")).unwrap_or_else(|| "n/a".into());
        text += &format!("rc_factor {:?}: connected rate {rate}\n", f.rc_factor);
    }
    if let Some(grid) = &cfg.tightness_grid {
        let report = tightness_probe(&cfg, grid, cli.threads).map_err(|e| experiment_failure(e, dir))?;
        for (f, t, d) in &report.reproducers {
            io::write_deployment(&dir.join("tightness").join(format!("factor_{f:?}_trial_{t}.json")), d)?;
        }
        io::write_text(&dir.join("tightness.json"), &io::versioned_json(&serde_json::json!({ "factors": report.factors })))?;
        for f in &report.factors {
            text += &format!("tightness {:?}: {} disconnected\n", f.rc_factor, f.disconnected);
        }
    }
    text += &format!("wrote {} and {}\n", csv_path.display(), summary_path.display());
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn experiment_failure(e: ExperimentError, dir: &Path) -> Failure {
    match (&e, e.reproducer()) {
        (ExperimentError::Config(_) | ExperimentError::Generate { .. }, _) => Failure(EXIT_USAGE, e.to_string()),
        (_, Some(d)) => {
            let path = dir.join("reproducer.json");
            match io::write_deployment(&path, d) {
                Ok(()) => Failure(EXIT_PROPERTY, format!("{e}; reproducer written to {}", path.display())),
                Err(w) => Failure(EXIT_PROPERTY, format!("{e}; could not write reproducer: {w}")),
            }
        }
        _ => Failure(EXIT_PROPERTY, e.to_string()),
    }
}

fn cmd_pack_test(cli: &Cli, trials: usize, out: &mut dyn Write) -> CmdResult {
    let seed = cli.seed.unwrap_or(42);
    let found = match cli.threads {
        None => max_packing_in_disk(1.0, trials, seed),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure(EXIT_USAGE, e.to_string()))?
            .install(|| max_packing_in_disk(1.0, trials, seed)),
    };
    let hexagon = is_valid_packing(&hexagon_packing(1.0), 1.0, 1e-12);
    emit(out, &format!("max packing: {found}\nhexagon packing valid: {hexagon}\n"))?;
    Ok(if found <= 6 && hexagon { EXIT_OK } else { EXIT_PROPERTY })
}

#[derive(serde::Deserialize)]
struct VersionHeader {
    #[serde(default = "io_version")]
    format_version: u32,
}

fn io_version() -> u32 {
    io::FORMAT_VERSION
}

fn cmd_gen(cli: &Cli, spec_path: &Path, output: &Path, out: &mut dyn Write) -> CmdResult {
    let origin = spec_path.display().to_string();
    let text = io::read_text(spec_path)?;
    let header: VersionHeader = io::parse_json(&text, &origin)?;
    io::check_version(header.format_version, &origin)?;
    let mut spec: GenSpec = io::parse_json(&text, &origin)?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    if let Some(t) = cli.tolerance {
        spec.tolerance = Some(t);
    }
    let d = generate(&spec).map_err(|e| Failure(EXIT_USAGE, format!("{origin}: {e}")))?;
    io::write_deployment(output, &d)?;
    emit(out, &format!("generated {} sensors into {}\n", d.len(), output.display()))?;
    Ok(EXIT_OK)
}
