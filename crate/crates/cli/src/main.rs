//! Command-line driver: runs one scenario file through a simulation or a
//! study and writes CSV tables, snapshots and a manifest into the output
//! directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ribbonflow::io::{ledger_csv, sha256_hex, write_atomic, RunManifest, Scenario, Snapshot, ViscousKind};
use ribbonflow::lab::{
    commutativity_report, decoupling_checks, epsilon_study, gamma_check, geodesic_convexity_check,
    random_ribbon_state, slope_consistency, tau_study, StudyReport,
};
use ribbonflow::movements::{dissipation_ledger, run_trajectory};
use ribbonflow::ribbon::local_slope_1d;

const EXIT_FAILURE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_HYPOTHESIS: u8 = 3;
const EXIT_USAGE: u8 = 64;
const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Parser)]
#[command(name = "ribbonflow", version, about = "Viscoelastic plate and ribbon gradient flows")]
struct Cli {
    /// Output directory; overrides `output.dir` of the scenario.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the random-state property suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ribbon trajectory with its energy-dissipation ledger and snapshot.
    #[command(name = "simulate-1d")]
    Simulate1d { scenario: PathBuf },
    /// Plate trajectory of width `geometry.eps`, started from the recovery of the ribbon initial state.
    #[command(name = "simulate-2d")]
    Simulate2d { scenario: PathBuf },
    /// Time-step refinement of the ribbon scheme over `study.taus`.
    #[command(name = "tau-study")]
    TauStudy { scenario: PathBuf },
    /// Plate runs over `study.eps` against the ribbon run.
    #[command(name = "reduce-study")]
    ReduceStudy { scenario: PathBuf },
    /// Both limit orders over the grid `study.eps × study.taus`.
    #[command(name = "commute-study")]
    CommuteStudy { scenario: PathBuf },
    /// Recovery energies against ribbon energies over `study.eps`.
    #[command(name = "gamma-check")]
    GammaCheck { scenario: PathBuf },
    /// Metric slope against the step rate along a ribbon run.
    #[command(name = "slope-check")]
    SlopeCheck { scenario: PathBuf },
    /// Decoupling of the lateral bending and of the twist.
    #[command(name = "decouple-check")]
    DecoupleCheck { scenario: PathBuf },
    /// Calibration of the generalized-geodesic constant on random pairs.
    #[command(name = "geodesic-check")]
    GeodesicCheck { scenario: PathBuf },
    /// Summary of a finished output directory.
    Report { dir: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate1d { .. } => "simulate-1d",
            Command::Simulate2d { .. } => "simulate-2d",
            Command::TauStudy { .. } => "tau-study",
            Command::ReduceStudy { .. } => "reduce-study",
            Command::CommuteStudy { .. } => "commute-study",
            Command::GammaCheck { .. } => "gamma-check",
            Command::SlopeCheck { .. } => "slope-check",
            Command::DecoupleCheck { .. } => "decouple-check",
            Command::GeodesicCheck { .. } => "geodesic-check",
            Command::Report { .. } => "report",
        }
    }

    fn scenario(&self) -> Option<&Path> {
        match self {
            Command::Simulate1d { scenario }
            | Command::Simulate2d { scenario }
            | Command::TauStudy { scenario }
            | Command::ReduceStudy { scenario }
            | Command::CommuteStudy { scenario }
            | Command::GammaCheck { scenario }
            | Command::SlopeCheck { scenario }
            | Command::DecoupleCheck { scenario }
            | Command::GeodesicCheck { scenario } => Some(scenario),
            Command::Report { .. } => None,
        }
    }
}

/// Output directory with its manifest; every file goes through [`Run::emit`].
struct Run {
    dir: PathBuf,
    manifest: RunManifest,
    started: Instant,
    quiet: bool,
}

impl Run {
    fn start(cli: &Cli, command: &str, path: &Path, scenario: &Scenario, bytes: &[u8]) -> Result<Self> {
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&scenario.output.dir));
        let material = scenario.material.build()?;
        let (q1w, q0w) = material.elastic_reduced()?;
        let (q1r, q0r) = material.viscous_reduced()?;
        let entries = |m: &ribbonflow::forms::QuadForm1| {
            m.matrix().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        };
        let mut manifest = RunManifest::new();
        manifest.set("status", "running");
        manifest.set("command", command);
        manifest.set("version", env!("CARGO_PKG_VERSION"));
        manifest.set("config_path", path.display());
        manifest.set("config_sha256", sha256_hex(bytes));
        manifest.set("seed", cli.seed);
        manifest.set("hypothesis", material.hypothesis);
        manifest.set("C0_W", q0w.c0);
        manifest.set("C0_R", q0r.c0);
        manifest.set("Q1_W", entries(&q1w));
        manifest.set("Q1_R", entries(&q1r));
        manifest.set(
            "viscous_family",
            match scenario.material.viscous {
                ViscousKind::Fixed => "fixed: the same viscous form for every eps",
                ViscousKind::H2Family => "h2_family: Q1_R(q11, q12) + eps*q22^2",
            },
        );
        manifest.set("incremental_minimizer", "first local minimizer reached from the previous state");
        for (k, v) in scenario.echo() {
            manifest.set(&format!("config.{k}"), v);
        }
        let run = Self {
            dir,
            manifest,
            started: Instant::now(),
            quiet: cli.quiet,
        };
        run.manifest.write(&run.dir.join(MANIFEST))?;
        Ok(run)
    }

    fn emit(&mut self, name: &str, text: &str) -> Result<()> {
        write_atomic(&self.dir.join(name), text.as_bytes())
            .with_context(|| format!("writing {}", self.dir.join(name).display()))?;
        self.manifest.add_output(name);
        self.manifest.write(&self.dir.join(MANIFEST))?;
        Ok(())
    }

    /// Raw tables first, then fits, metrics and notes.
    fn emit_report(&mut self, report: &StudyReport) -> Result<()> {
        let study = report.kind.name();
        for t in &report.tables {
            self.emit(&format!("{study}_{}.csv", t.name), &t.to_csv())?;
        }
        if !report.fits.is_empty() {
            self.emit(&format!("{study}_fits.csv"), &report.fits_csv())?;
        }
        if !report.metrics.is_empty() {
            self.emit(&format!("{study}_metrics.csv"), &report.metrics_csv())?;
        }
        if !report.notes.is_empty() {
            self.emit(&format!("{study}_notes.txt"), &(report.notes.join("\n") + "\n"))?;
        }
        if !self.quiet {
            for f in &report.fits {
                match f.order {
                    Some(o) => println!("{study}: {} observed order {o:.3}", f.label),
                    None => println!("{study}: {} order not available", f.label),
                }
            }
            for (k, v) in &report.metrics {
                println!("{study}: {k} = {v:e}");
            }
        }
        Ok(())
    }

    fn finish(mut self, summary: &str) -> Result<()> {
        self.manifest.set("wall_clock_seconds", self.started.elapsed().as_secs_f64());
        self.manifest.set("status", "complete");
        self.manifest.write(&self.dir.join(MANIFEST))?;
        if !self.quiet {
            println!("{summary}");
        }
        Ok(())
    }
}

fn execute(cli: &Cli) -> Result<()> {
    if let Command::Report { dir } = &cli.command {
        return report(dir, cli.quiet);
    }
    let path = cli.command.scenario().expect("simulation commands take a scenario");
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = String::from_utf8(bytes.clone()).context("scenario is not UTF-8")?;
    let scenario = Scenario::from_toml_str(&text)?;
    let problem = scenario.problem()?;
    let (tau, horizon) = (scenario.time.tau, scenario.time.horizon);
    let study = &scenario.study;
    let mut run = Run::start(cli, cli.command.name(), path, &scenario, &bytes)?;

    match &cli.command {
        Command::Simulate1d { .. } => {
            let m = problem.ribbon()?;
            let traj = run_trajectory(&m, &problem.initial_ribbon(&m)?, tau, horizon, &problem.solver)?;
            let slope = |u: &[f64]| local_slope_1d(&m, u).map(|s| s.slope);
            let ledger = dissipation_ledger(&traj, Some(&slope))?;
            run.emit("ledger.csv", &ledger_csv(&ledger))?;
            run.emit("snapshot_1d.txt", &Snapshot::of(&format!("ribbon n1d={} fields=xi1,xi2,w,theta", scenario.mesh.n1d), &traj).to_text())?;
            let residual = ledger.residual().unwrap_or(f64::NAN);
            run.finish(&format!("simulate-1d: {} steps, energy-identity residual {residual:e}", traj.steps()))
        }
        Command::Simulate2d { .. } => {
            let eps = scenario.geometry.eps;
            let ribbon = problem.matched_ribbon()?;
            let plate = problem.plate(eps)?;
            let u0 = problem.recover(&plate, &ribbon, &problem.initial_ribbon(&ribbon)?)?;
            let traj = run_trajectory(&plate, &u0, tau, horizon, &problem.solver)?;
            run.emit("ledger.csv", &ledger_csv(&dissipation_ledger(&traj, None)?))?;
            run.emit("snapshot_2d.txt", &Snapshot::of(
                &format!("plate eps={eps} nx={} ny={} fields=y1,y2,w", scenario.mesh.nx, scenario.mesh.ny),
                &traj,
            ).to_text())?;
            run.finish(&format!("simulate-2d: {} steps at eps = {eps}", traj.steps()))
        }
        Command::TauStudy { .. } => {
            let m = problem.ribbon()?;
            let slope = |u: &[f64]| local_slope_1d(&m, u).map(|s| s.slope);
            let r = tau_study(&m, &problem.initial_ribbon(&m)?, &study.taus, horizon, &problem.solver, Some(&slope))?;
            run.emit_report(&r)?;
            run.finish("tau-study: done")
        }
        Command::ReduceStudy { .. } => {
            let r = epsilon_study(&problem, &study.eps, tau, horizon)?;
            run.emit_report(&r)?;
            run.finish("reduce-study: done")
        }
        Command::CommuteStudy { .. } => {
            let r = commutativity_report(&problem, &study.eps, &study.taus, horizon)?;
            run.emit_report(&r)?;
            run.finish("commute-study: done")
        }
        Command::GammaCheck { .. } => {
            let r = gamma_check(&problem, &scenario.targets(), &study.eps)?;
            run.emit_report(&r)?;
            run.finish("gamma-check: done")
        }
        Command::SlopeCheck { .. } => {
            let m = problem.ribbon()?;
            let traj = run_trajectory(&m, &problem.initial_ribbon(&m)?, tau, horizon, &problem.solver)?;
            run.emit_report(&slope_consistency(&m, &traj)?)?;
            run.finish("slope-check: done")
        }
        Command::DecoupleCheck { .. } => {
            let r = decoupling_checks(&problem, tau, horizon, &study.w_perturbation)?;
            run.emit_report(&r)?;
            run.finish("decouple-check: done")
        }
        Command::GeodesicCheck { .. } => {
            let m = problem.ribbon()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let mut pool = || {
                (0..study.pairs)
                    .map(|_| random_ribbon_state(&m, &mut rng, study.amplitude, study.degree))
                    .collect::<ribbonflow::Result<Vec<_>>>()
            };
            let (start, end) = (pool()?, pool()?);
            let c = geodesic_convexity_check(&m, &start, &end, study.pairs, &mut rng)?;
            run.emit_report(&c.report)?;
            run.finish(&format!("geodesic-check: calibrated C = {:e}", c.constant))
        }
        Command::Report { .. } => unreachable!("handled above"),
    }
}

/// Prints the manifest summary and the fitted orders, and checks that every
/// listed output exists.
fn report(dir: &Path, quiet: bool) -> Result<()> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let manifest = RunManifest::parse(&text)?;
    let missing: Vec<&String> = manifest.outputs().iter().filter(|o| !dir.join(o).is_file()).collect();
    if !missing.is_empty() {
        bail!("outputs listed in the manifest are missing: {missing:?}");
    }
    if quiet {
        return Ok(());
    }
    for key in ["command", "status", "hypothesis", "C0_W", "C0_R", "config_sha256", "wall_clock_seconds"] {
        println!("{key}: {}", manifest.get(key).unwrap_or("-"));
    }
    for o in manifest.outputs() {
        println!("output: {o}");
        if o.ends_with("_fits.csv") || o.ends_with("_metrics.csv") {
            let body = std::fs::read_to_string(dir.join(o))?;
            for line in body.lines().skip(1) {
                println!("  {line}");
            }
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<ribbonflow::Error>() {
        Some(ribbonflow::Error::HypothesisRequired) => EXIT_HYPOTHESIS,
        Some(ribbonflow::Error::SolverFailure { .. }) => EXIT_SOLVER,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(exit_code(&e))
        }
    }
}
