//! The incremental-horizon protocol: encode with `T` periods, solve, and on
//! infeasibility retry with `T + 1` until a plan is found, the maximum
//! horizon is exhausted or the time budget runs out.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::branch_and_cut::{solve_ip, IpStatus, NoCuts, SearchConfig, SearchMode};
use crate::formulations::{encode, Formulation};
use crate::pddl;
use crate::plan::{check_formulation_shape, extract_plan, linearize_periods, validate_linear, write_plan, Plan};
use crate::sas::{parse_sas, validate_task, SasTask};
use crate::separation::{build_precedence_graph, CycleSeparator, GraphVariant, SeparationConfig};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InputSource {
    Pddl { domain: PathBuf, problem: PathBuf },
    Sas(PathBuf),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub formulation: Formulation,
    pub start_periods: usize,
    pub max_periods: usize,
    pub time_limit: Duration,
    pub mode: SearchMode,
    pub separation: SeparationConfig,
    pub node_limit: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            formulation: Formulation::G1sc,
            start_periods: 1,
            max_periods: 30,
            time_limit: Duration::from_secs(1800),
            mode: SearchMode::FirstFeasible,
            separation: SeparationConfig::default(),
            node_limit: 1_000_000,
        }
    }
}

impl RunConfig {
    pub fn check(&self) -> Result<(), RunError> {
        if self.start_periods < 1 || self.start_periods > self.max_periods {
            return Err(RunError::Input(format!(
                "need 1 <= start periods ({}) <= max periods ({})",
                self.start_periods, self.max_periods
            )));
        }
        if self.time_limit.is_zero() {
            return Err(RunError::Input("time limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HorizonStatus {
    Plan,
    Infeasible,
    Timeout,
}

impl HorizonStatus {
    pub fn name(self) -> &'static str {
        match self {
            HorizonStatus::Plan => "plan",
            HorizonStatus::Infeasible => "infeasible",
            HorizonStatus::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HorizonRecord {
    pub horizon: usize,
    pub status: HorizonStatus,
    pub variables: usize,
    pub rows: usize,
    pub lp_solves: usize,
    pub nodes: usize,
    pub cuts: usize,
    pub cycles: usize,
    pub pivots: usize,
    pub wall: Duration,
}

/// A validated plan together with the task its indices refer to.
#[derive(Clone, Debug)]
pub struct SolvedPlan {
    pub task: SasTask,
    pub plan: Plan,
    /// Periods in execution order.
    pub ordered: Vec<Vec<usize>>,
}

impl SolvedPlan {
    pub fn text(&self) -> String {
        write_plan(&self.task, &self.ordered)
    }

    pub fn sequence(&self) -> Vec<usize> {
        self.ordered.iter().flatten().copied().collect()
    }
}

#[derive(Clone, Debug)]
pub struct RunStats {
    pub formulation: Formulation,
    pub status: HorizonStatus,
    pub records: Vec<HorizonRecord>,
    pub plan: Option<SolvedPlan>,
}

impl RunStats {
    pub fn first_feasible_horizon(&self) -> Option<usize> {
        self.plan.as_ref().map(|p| p.plan.horizon)
    }

    pub fn total_nodes(&self) -> usize {
        self.records.iter().map(|r| r.nodes).sum()
    }

    pub fn total_cuts(&self) -> usize {
        self.records.iter().map(|r| r.cuts).sum()
    }

    pub fn total_lp_solves(&self) -> usize {
        self.records.iter().map(|r| r.lp_solves).sum()
    }

    pub fn wall(&self) -> Duration {
        self.records.iter().map(|r| r.wall).sum()
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            HorizonStatus::Plan => 0,
            HorizonStatus::Infeasible => 1,
            HorizonStatus::Timeout => 2,
        }
    }

    /// Newline-delimited `key=value` records: one `record=horizon` line per
    /// attempted horizon and a closing `record=total` line. Timing is
    /// omitted so identical runs produce identical output.
    pub fn records_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(
                out,
                "record=horizon formulation={} horizon={} status={} variables={} rows={} lp_solves={} nodes={} cuts={} cycles={} pivots={}",
                self.formulation,
                r.horizon,
                r.status.name(),
                r.variables,
                r.rows,
                r.lp_solves,
                r.nodes,
                r.cuts,
                r.cycles,
                r.pivots
            );
        }
        let (horizon, actions) = match &self.plan {
            Some(p) => (p.plan.horizon.to_string(), p.plan.num_actions().to_string()),
            None => ("-".into(), "-".into()),
        };
        let _ = writeln!(
            out,
            "record=total formulation={} status={} horizon={} actions={} lp_solves={} nodes={} cuts={}",
            self.formulation,
            self.status.name(),
            horizon,
            actions,
            self.total_lp_solves(),
            self.total_nodes(),
            self.total_cuts()
        );
        out
    }

    /// Human-readable summary including wall times.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "formulation {}", self.formulation);
        let _ = writeln!(out, "{:>4} {:>10} {:>8} {:>8} {:>8} {:>6} {:>10}", "T", "status", "vars", "rows", "nodes", "cuts", "seconds");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:>4} {:>10} {:>8} {:>8} {:>8} {:>6} {:>10.3}",
                r.horizon,
                r.status.name(),
                r.variables,
                r.rows,
                r.nodes,
                r.cuts,
                r.wall.as_secs_f64()
            );
        }
        match &self.plan {
            Some(p) => {
                let _ = writeln!(out, "plan: {} actions in {} periods", p.plan.num_actions(), p.plan.horizon);
            }
            None => {
                let _ = writeln!(out, "no plan ({})", self.status.name());
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("input error: {0}")]
    Input(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input(_) => 3,
            RunError::Internal(_) => 4,
        }
    }
}

/// Reads a task from files.
pub fn load_task(source: &InputSource) -> Result<SasTask, RunError> {
    let read = |p: &PathBuf| fs::read_to_string(p).map_err(|e| RunError::Input(format!("{}: {e}", p.display())));
    let task = match source {
        InputSource::Sas(path) => parse_sas(&read(path)?).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?,
        InputSource::Pddl { domain, problem } => {
            let d = pddl::parse_domain(&read(domain)?).map_err(|e| RunError::Input(format!("{}: {e}", domain.display())))?;
            let p = pddl::parse_problem(&read(problem)?, &d)
                .map_err(|e| RunError::Input(format!("{}: {e}", problem.display())))?;
            let g = pddl::ground_task(&d, &p, pddl::DEFAULT_ACTION_CAP).map_err(|e| RunError::Input(e.to_string()))?;
            pddl::binary_encode(&g)
        }
    };
    validate_task(&task).map_err(|v| {
        RunError::Input(v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
    })?;
    Ok(task)
}

/// Runs the horizon loop on `task`.
pub fn solve_task(task: &SasTask, config: &RunConfig) -> Result<RunStats, RunError> {
    config.check()?;
    let start = Instant::now();
    let mut stats = RunStats {
        formulation: config.formulation,
        status: HorizonStatus::Infeasible,
        records: Vec::new(),
        plan: None,
    };
    for horizon in config.start_periods..=config.max_periods {
        let remaining = config.time_limit.saturating_sub(start.elapsed());
        if remaining.is_zero() {
            stats.status = HorizonStatus::Timeout;
            return Ok(stats);
        }
        let t0 = Instant::now();
        let enc = encode(task, config.formulation, horizon).map_err(|e| RunError::Input(e.to_string()))?;
        let search = SearchConfig {
            mode: config.mode,
            node_limit: config.node_limit,
            time_limit: remaining,
            preferred_columns: enc.map.num_actions() * horizon,
            ..SearchConfig::default()
        };
        let variant = config.formulation.precedence_variant();
        let graph = build_precedence_graph(&enc.task, variant.unwrap_or(GraphVariant::Base));
        let (result, cycles) = match variant {
            Some(_) => {
                let mut sep = CycleSeparator::new(graph.clone(), horizon, config.separation);
                let r = solve_ip(&enc.model, &mut sep, &search);
                (r, sep.cycles_found())
            }
            None => (solve_ip(&enc.model, NoCuts, &search), 0),
        };
        let result = result.map_err(|e| RunError::Internal(e.to_string()))?;
        let status = match result.status {
            IpStatus::Optimal | IpStatus::Feasible => HorizonStatus::Plan,
            IpStatus::Infeasible => HorizonStatus::Infeasible,
            IpStatus::Timeout => HorizonStatus::Timeout,
        };
        let c = result.state.counters;
        stats.records.push(HorizonRecord {
            horizon,
            status,
            variables: enc.model.num_vars(),
            rows: enc.model.num_rows(),
            lp_solves: c.lp_solves,
            nodes: c.nodes,
            cuts: c.cuts_added,
            cycles,
            pivots: c.pivots,
            wall: t0.elapsed(),
        });
        match status {
            HorizonStatus::Infeasible => continue,
            HorizonStatus::Timeout => {
                stats.status = HorizonStatus::Timeout;
                return Ok(stats);
            }
            HorizonStatus::Plan => {
                let point = result.state.incumbent.expect("incumbent present");
                let plan = extract_plan(&point.values, &enc.map, config.formulation)
                    .map_err(|e| RunError::Internal(e.to_string()))?;
                let ordered = linearize_periods(&plan, &graph).map_err(|e| RunError::Internal(e.to_string()))?;
                let sequence: Vec<usize> = ordered.iter().flatten().copied().collect();
                let report = validate_linear(&enc.task, &sequence);
                if !report.ok() {
                    return Err(RunError::Internal(format!("plan fails simulation: {}", report.failures[0])));
                }
                let shape = check_formulation_shape(&enc.task, &plan);
                if !shape.ok() {
                    return Err(RunError::Internal(format!("plan breaks formulation limits: {}", shape.failures[0])));
                }
                stats.status = HorizonStatus::Plan;
                stats.plan = Some(SolvedPlan { task: enc.task, plan, ordered });
                return Ok(stats);
            }
        }
    }
    Ok(stats)
}

/// One benchmark row.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub instance: String,
    pub formulation: Formulation,
    pub outcome: Result<RunStats, String>,
}

/// Runs every instance under every formulation of `formulations`, in order.
pub fn run_bench(instances: &[(String, InputSource)], formulations: &[Formulation], base: &RunConfig) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for (name, source) in instances {
        let task = load_task(source);
        for &f in formulations {
            let outcome = match &task {
                Err(e) => Err(e.to_string()),
                Ok(task) => {
                    let cfg = RunConfig { formulation: f, ..base.clone() };
                    solve_task(task, &cfg).map_err(|e| e.to_string())
                }
            };
            rows.push(BenchRow { instance: name.clone(), formulation: f, outcome });
            if task.is_err() {
                break;
            }
        }
    }
    rows
}

/// Tabular rendering of benchmark rows.
pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:<7} {:<7} {:>3} {:>7} {:>8} {:>6} {:>9}",
        "instance", "form", "solved", "T", "actions", "nodes", "cuts", "seconds"
    );
    for r in rows {
        match &r.outcome {
            Ok(s) => {
                let t = s.first_feasible_horizon().map_or("-".to_string(), |t| t.to_string());
                let actions = s.plan.as_ref().map_or("-".to_string(), |p| p.plan.num_actions().to_string());
                let _ = writeln!(
                    out,
                    "{:<28} {:<7} {:<7} {:>3} {:>7} {:>8} {:>6} {:>9.3}",
                    r.instance,
                    r.formulation.name(),
                    if s.plan.is_some() { "yes" } else { s.status.name() },
                    t,
                    actions,
                    s.total_nodes(),
                    s.total_cuts(),
                    s.wall().as_secs_f64()
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{:<28} {:<7} error: {e}", r.instance, r.formulation.name());
            }
        }
    }
    out
}
