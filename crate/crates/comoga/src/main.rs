use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use comoga::commands::{self, Outputs};
use comoga::config::{resolve, MetricsConfig, SelftestConfig, TabularConfig, TabularMethod, ToyConfig, ToyMethodName};
use comoga::error::{CliError, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "comoga", version, about = "Constrained multi-objective gradient aggregation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Trajectories on the analytic two-objective benchmark.
    Toy {
        #[command(flatten)]
        common: Common,
        #[arg(long = "method", value_enum)]
        methods: Vec<MethodArg>,
        /// Start point as `x1,x2`; repeat for several.
        #[arg(long = "start", value_parser = parse_pair, allow_hyphen_values = true)]
        starts: Vec<[f64; 2]>,
        /// Preference as `w1,w2`.
        #[arg(long, value_parser = parse_pair)]
        preference: Option<[f64; 2]>,
        #[arg(long)]
        grid_count: Option<usize>,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        sweep_start: Option<[f64; 2]>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        ls_lr: Option<f64>,
        #[arg(long)]
        multiplier_lr: Option<f64>,
        #[arg(long)]
        oracle_resolution: Option<usize>,
        #[arg(long)]
        success_radius: Option<f64>,
        #[arg(long)]
        constraint_tolerance: Option<f64>,
    },
    /// Preference-grid training on a tabular CMOMDP against the oracle front.
    Tabular {
        #[command(flatten)]
        common: Common,
        /// Model JSON; the bundled five-state model by default.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Option<TabularMethodArg>,
        #[arg(long)]
        grid_count: Option<usize>,
        #[arg(long)]
        alpha0: Option<f64>,
        #[arg(long)]
        epsilon0: Option<f64>,
        #[arg(long)]
        g_min: Option<f64>,
        #[arg(long)]
        g_max: Option<f64>,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        stop_tolerance: Option<f64>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        distance_tolerance: Option<f64>,
        #[arg(long)]
        slack_tolerance: Option<f64>,
        #[arg(long)]
        max_policies: Option<u64>,
        #[arg(long)]
        history_stride: Option<usize>,
    },
    /// Hypervolume and normalized sparsity of archive files.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Archive JSON files.
        fronts: Vec<PathBuf>,
        /// Reference point as comma-separated values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        reference: Option<Vec<f64>>,
        #[arg(long)]
        mc_samples: Option<usize>,
    },
    /// Oracle-equivalence and finite-difference self-checks.
    Selftest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        gradient_points: Option<usize>,
        #[arg(long)]
        hv_archives: Option<usize>,
        #[arg(long)]
        mc_samples: Option<usize>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Comoga,
    Ls,
    Lagrangian,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum TabularMethodArg {
    Comoga,
    Generalized,
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got `{s}`"));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    Ok([num(parts[0])?, num(parts[1])?])
}

/// Collects the flags that were given as `(key, value)` overrides.
#[derive(Default)]
struct Overrides(Vec<(&'static str, Value)>);

impl Overrides {
    fn set<T: Serialize>(&mut self, key: &'static str, value: Option<T>) -> &mut Self {
        if let Some(v) = value {
            self.0.push((key, serde_json::to_value(v).expect("flag values serialise")));
        }
        self
    }
}

fn finish(out: &PathBuf, outputs: &Outputs) -> Result<()> {
    outputs.write_all(out)
}

fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    match cli.command {
        Command::Toy {
            common,
            methods,
            starts,
            preference,
            grid_count,
            sweep_start,
            epsilon,
            steps,
            ls_lr,
            multiplier_lr,
            oracle_resolution,
            success_radius,
            constraint_tolerance,
        } => {
            let methods: Vec<ToyMethodName> = methods
                .into_iter()
                .map(|m| match m {
                    MethodArg::Comoga => ToyMethodName::Comoga,
                    MethodArg::Ls => ToyMethodName::Ls,
                    MethodArg::Lagrangian => ToyMethodName::Lagrangian,
                })
                .collect();
            let mut o = Overrides::default();
            o.set("seed", common.seed)
                .set("methods", (!methods.is_empty()).then_some(methods))
                .set("starts", (!starts.is_empty()).then_some(starts))
                .set("preference", preference)
                .set("grid_count", grid_count)
                .set("sweep_start", sweep_start)
                .set("epsilon", epsilon)
                .set("steps", steps)
                .set("ls_lr", ls_lr)
                .set("multiplier_lr", multiplier_lr)
                .set("oracle_resolution", oracle_resolution)
                .set("success_radius", success_radius)
                .set("constraint_tolerance", constraint_tolerance);
            let config: ToyConfig = resolve(common.config.as_deref(), o.0)?;
            let (report, outputs) = commands::toy::run(&config)?;
            finish(&common.out, &outputs)?;
            for r in &report.runs {
                let dist = r.distance_to_cp_set.map_or("diverged".to_string(), |d| format!("{d:.4}"));
                println!(
                    "{:<10} start ({:>6.2}, {:>6.2})  C = {:>10.3e}  distance {:>8}  {}",
                    r.method,
                    r.start[0],
                    r.start[1],
                    r.final_constraint,
                    dist,
                    if r.reached_cp_set { "reached" } else { "not reached" }
                );
            }
            if let Some(s) = &report.sweep {
                println!("sweep front: {} points, HV {:.6}", s.archive.points.len(), s.hypervolume);
            }
        }
        Command::Tabular {
            common,
            model,
            method,
            grid_count,
            alpha0,
            epsilon0,
            g_min,
            g_max,
            lambda_max,
            steps,
            stop_tolerance,
            patience,
            distance_tolerance,
            slack_tolerance,
            max_policies,
            history_stride,
        } => {
            let method = method.map(|m| match m {
                TabularMethodArg::Comoga => TabularMethod::Comoga,
                TabularMethodArg::Generalized => TabularMethod::Generalized,
            });
            let mut o = Overrides::default();
            o.set("seed", common.seed)
                .set("model", model)
                .set("method", method)
                .set("grid_count", grid_count)
                .set("alpha0", alpha0)
                .set("epsilon0", epsilon0)
                .set("g_min", g_min)
                .set("g_max", g_max)
                .set("lambda_max", lambda_max)
                .set("steps", steps)
                .set("stop_tolerance", stop_tolerance)
                .set("patience", patience)
                .set("distance_tolerance", distance_tolerance)
                .set("slack_tolerance", slack_tolerance)
                .set("max_policies", max_policies)
                .set("history_stride", history_stride);
            let config: TabularConfig = resolve(common.config.as_deref(), o.0)?;
            let (report, outputs) = commands::tabular::run(&config)?;
            finish(&common.out, &outputs)?;
            for r in &report.runs {
                let dist = r.front_distance.map_or("n/a".to_string(), |d| format!("{d:.3e}"));
                let slack = r.slacks.iter().copied().fold(f64::INFINITY, f64::min);
                println!("preference {:?}  distance {dist}  min slack {slack:.3e}  steps {}", r.preference, r.steps_taken);
            }
            println!(
                "all slacks ok: {}  all within tolerance: {}  conflicts: {}",
                report.all_slacks_ok, report.all_within_tolerance, report.total_conflicts
            );
        }
        Command::Metrics { common, fronts, reference, mc_samples } => {
            let mut o = Overrides::default();
            o.set("seed", common.seed)
                .set("fronts", (!fronts.is_empty()).then_some(fronts))
                .set("reference", reference)
                .set("mc_samples", mc_samples);
            let config: MetricsConfig = resolve(common.config.as_deref(), o.0)?;
            let (report, outputs) = commands::metrics::run(&config)?;
            finish(&common.out, &outputs)?;
            for a in &report.archives {
                let sp = a.metrics.normalized_sparsity.map_or("absent".to_string(), |s| format!("{s:.6}"));
                println!("{}: HV {}  SP {sp}  points {}", a.path, a.metrics.hypervolume, a.metrics.n_points);
            }
        }
        Command::Selftest { common, instances, gradient_points, hv_archives, mc_samples } => {
            let mut o = Overrides::default();
            o.set("seed", common.seed)
                .set("instances", instances)
                .set("gradient_points", gradient_points)
                .set("hv_archives", hv_archives)
                .set("mc_samples", mc_samples);
            let config: SelftestConfig = resolve(common.config.as_deref(), o.0)?;
            let (report, outputs) = commands::selftest::run(&config)?;
            finish(&common.out, &outputs)?;
            print!("{}", outputs.get("selftest.txt").unwrap_or_default());
            for s in &report.suites {
                eprintln!("{}: {:.2} s", s.name, s.seconds);
            }
            if !report.passed {
                return Err(CliError::Acceptance("self-test suite failed".into()));
            }
        }
    }
    eprintln!("wall-clock: {:.2} s", started.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
