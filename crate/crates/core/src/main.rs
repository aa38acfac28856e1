use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use flowplan::branch_and_cut::SearchMode;
use flowplan::driver::{bench_table, load_task, run_bench, solve_task, InputSource, RunConfig, RunError};
use flowplan::formulations::Formulation;
use flowplan::separation::{CutScope, CutStrategy, SeparationConfig, SeparationMode};

/// Planning by integer programming over per-variable flow networks.
#[derive(Parser, Debug)]
#[command(name = "flowplan", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run several instances under several formulations and print a table.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct Tuning {
    /// First horizon tried.
    #[arg(long, default_value_t = 1)]
    start_periods: usize,
    /// Last horizon tried.
    #[arg(long, default_value_t = 30)]
    max_periods: usize,
    /// Wall-clock budget in seconds shared by all horizons.
    #[arg(long, default_value_t = 1800.0)]
    time_limit: f64,
    /// Minimize the number of actions instead of stopping at the first plan.
    #[arg(long)]
    optimize: bool,
    /// `first` adds one violated cycle per separation round, `all` every one found.
    #[arg(long, default_value = "first", value_parser = parse_strategy)]
    cut_strategy: CutStrategy,
    /// `all` copies each cut to every period, `period` keeps it where it was found.
    #[arg(long, default_value = "all", value_parser = parse_scope)]
    cut_scope: CutScope,
    /// Violation test: `paper` (cycle weight below 1) or `exact` (below 2).
    #[arg(long, default_value = "paper", value_parser = parse_mode)]
    separation: SeparationMode,
    /// Branch-and-bound nodes allowed per horizon.
    #[arg(long, default_value_t = 1_000_000)]
    node_limit: usize,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// One of 1sc, g1sc, g2sc, pathsc.
    #[arg(long, default_value = "g1sc", value_parser = parse_formulation)]
    formulation: Formulation,
    /// PDDL domain; needs --problem.
    #[arg(long, requires = "problem", conflicts_with = "sas")]
    domain: Option<PathBuf>,
    /// PDDL problem; needs --domain.
    #[arg(long, requires = "domain")]
    problem: Option<PathBuf>,
    /// Multi-valued task in the translator's text format.
    #[arg(long)]
    sas: Option<PathBuf>,
    /// Where to write the plan; stdout when absent.
    #[arg(long)]
    plan_out: Option<PathBuf>,
    /// Where to write `key=value` records; stderr gets the summary either way.
    #[arg(long)]
    stats_out: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Formulations to run, in order; all four when absent.
    #[arg(long = "formulation", value_parser = parse_formulation)]
    formulations: Vec<Formulation>,
    /// `FILE.sas`, or `DOMAIN,PROBLEM` for a PDDL pair.
    instances: Vec<String>,
    #[command(flatten)]
    tuning: Tuning,
}

fn parse_formulation(s: &str) -> Result<Formulation, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_strategy(s: &str) -> Result<CutStrategy, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_scope(s: &str) -> Result<CutScope, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_mode(s: &str) -> Result<SeparationMode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

impl Tuning {
    fn config(&self, formulation: Formulation) -> Result<RunConfig, RunError> {
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            return Err(RunError::Input("time limit must be positive".into()));
        }
        let config = RunConfig {
            formulation,
            start_periods: self.start_periods,
            max_periods: self.max_periods,
            time_limit: Duration::from_secs_f64(self.time_limit),
            mode: if self.optimize { SearchMode::Optimize } else { SearchMode::FirstFeasible },
            separation: SeparationConfig { mode: self.separation, strategy: self.cut_strategy, scope: self.cut_scope },
            node_limit: self.node_limit,
        };
        config.check()?;
        Ok(config)
    }
}

fn write_out(path: &Option<PathBuf>, text: &str, fallback: impl FnOnce(&str)) -> Result<(), RunError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| RunError::Input(format!("{}: {e}", p.display()))),
        None => {
            fallback(text);
            Ok(())
        }
    }
}

fn solve(args: &SolveArgs) -> Result<i32, RunError> {
    let source = match (&args.domain, &args.problem, &args.sas) {
        (Some(d), Some(p), None) => InputSource::Pddl { domain: d.clone(), problem: p.clone() },
        (None, None, Some(s)) => InputSource::Sas(s.clone()),
        _ => return Err(RunError::Input("give either --domain and --problem, or --sas".into())),
    };
    let config = args.tuning.config(args.formulation)?;
    let task = load_task(&source)?;
    let stats = solve_task(&task, &config)?;
    eprint!("{}", stats.report());
    if let Some(plan) = &stats.plan {
        write_out(&args.plan_out, &plan.text(), |t| print!("{t}"))?;
    }
    if let Some(p) = &args.stats_out {
        write_out(&Some(p.clone()), &stats.records_text(), |_| {})?;
    }
    Ok(stats.exit_code())
}

fn bench(args: &BenchArgs) -> Result<i32, RunError> {
    let formulations = if args.formulations.is_empty() { Formulation::ALL.to_vec() } else { args.formulations.clone() };
    let config = args.tuning.config(formulations.first().copied().unwrap_or(Formulation::G1sc))?;
    let instances: Vec<(String, InputSource)> = args
        .instances
        .iter()
        .map(|s| {
            let source = match s.split_once(',') {
                Some((d, p)) => InputSource::Pddl { domain: d.into(), problem: p.into() },
                None => InputSource::Sas(s.into()),
            };
            (s.clone(), source)
        })
        .collect();
    let rows = run_bench(&instances, &formulations, &config);
    print!("{}", bench_table(&rows));
    Ok(0)
}

fn main() -> ExitCode {
    // Usage errors are input errors (3); clap's own code 2 means timeout here.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let result = match &cli.command {
        Some(Command::Bench(b)) => bench(b),
        None => solve(&cli.solve),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("flowplan: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
