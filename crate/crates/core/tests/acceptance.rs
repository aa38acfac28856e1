//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Runs without the libtest harness so the lines are always shown.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::graphs::{has_cycle, is_simple_cycle};
use common::lp_oracle::{binary_enumeration, random_binary_program, random_lp, vertex_enumeration};
use common::parallel::shortest_parallel;
use common::tasks::{bfs, data, logistics_toy, random_task, separation_example, TaskShape};
use flowplan::branch_and_cut::{solve_ip, IpStatus, NoCuts, SearchConfig, SearchMode, Separator};
use flowplan::driver::{solve_task, HorizonStatus, RunConfig};
use flowplan::formulations::{encode, Formulation};
use flowplan::model::{LinearConstraint, MipModel, SolveStatus};
use flowplan::pddl::{binary_encode, ground_task, parse_domain, parse_problem, DEFAULT_ACTION_CAP};
use flowplan::plan::{check_formulation_shape, extract_plan, linearize_periods, validate_linear};
use flowplan::sas::{parse_sas, SasTask};
use flowplan::separation::{
    build_precedence_graph, separate, CutScope, CutStrategy, CycleSeparator, GraphVariant, PrecedenceGraph,
    SeparationConfig, SeparationMode, WeightedSubgraph,
};
use flowplan::simplex::solve_lp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let task = separation_example();
    let graph = build_precedence_graph(&task, GraphVariant::Base);
    ensure(graph.arcs() == vec![(0, 2), (1, 2), (2, 3), (3, 0)], || format!("arcs {:?}", graph.arcs()))?;
    let x = [0.8, 1.0, 1.0, 0.8, 0.2];
    let sub = WeightedSubgraph::new(&graph, &x, 1);
    let w = |a, b| sub.weight(a, b).unwrap_or(f64::NAN);
    for (a, b, want) in [(0, 2, 0.8), (2, 3, 0.8), (1, 2, 1.0), (3, 0, 0.6)] {
        ensure(close(w(a, b), want, 1e-9), || format!("w(A{},A{}) = {}", a + 1, b + 1, w(a, b)))?;
    }
    let d = sub.distance(0, 3).unwrap_or(f64::NAN);
    ensure(close(d, 0.4, 1e-9), || format!("d(A1,A4) = {d}"))?;
    let mut sep = CycleSeparator::new(
        graph.clone(),
        1,
        SeparationConfig { mode: SeparationMode::Paper, strategy: CutStrategy::All, scope: CutScope::AllPeriods },
    );
    let rows = sep.cuts(&x);
    ensure(rows.len() == 1, || format!("{} rows", rows.len()))?;
    let mut cols: Vec<usize> = rows[0].terms.iter().map(|&(j, _)| j).collect();
    cols.sort_unstable();
    ensure(cols == vec![0, 2, 3] && rows[0].terms.iter().all(|&(_, c)| c == 1.0), || format!("{:?}", rows[0]))?;
    ensure(rows[0].rhs == 2.0, || format!("rhs {}", rows[0].rhs))?;
    let lhs = rows[0].activity(&x);
    ensure(close(lhs, 2.6, 1e-9), || format!("lhs {lhs}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("cut x1 + x3 + x4 <= 2, lhs {lhs:.3}, d {d:.3}, {elapsed:.2?}"))
}

fn toy_horizons() -> Outcome {
    let start = Instant::now();
    let task = logistics_toy();
    let mut found = Vec::new();
    for (f, want) in Formulation::ALL.into_iter().zip([3, 2, 1, 1]) {
        // independent check of the expected value by explicit search
        let oracle = shortest_parallel(&task, f, 6);
        ensure(oracle == Some(want), || format!("explicit search gives {oracle:?} for {f}"))?;
        let cfg = RunConfig { formulation: f, max_periods: 6, ..Default::default() };
        let stats = solve_task(&task, &cfg).map_err(|e| e.to_string())?;
        let plan = stats.plan.ok_or_else(|| format!("{f}: no plan"))?;
        ensure(plan.plan.horizon == want, || format!("{f}: T = {}", plan.plan.horizon))?;
        let graph = build_precedence_graph(&plan.task, f.precedence_variant().unwrap_or(GraphVariant::Base));
        let seq = linearize_periods(&plan.plan, &graph).map_err(|e| e.to_string())?;
        let seq: Vec<usize> = seq.into_iter().flatten().collect();
        ensure(validate_linear(&plan.task, &seq).ok(), || format!("{f}: plan does not validate"))?;
        ensure(simulate(&plan.task, &seq), || format!("{f}: plan fails independent simulation"))?;
        found.push(format!("{f}={want}"));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("{}, {elapsed:.2?}", found.join(" ")))
}

/// Sequential execution written independently of the library.
fn simulate(task: &SasTask, seq: &[usize]) -> bool {
    let mut s = task.initial.clone();
    for &i in seq {
        let a = &task.actions[i];
        for (&v, e) in &a.effects {
            if e.pre.is_some_and(|p| s[v] != p) {
                return false;
            }
        }
        if a.prevails.iter().any(|(&v, &p)| s[v] != p) {
            return false;
        }
        for (&v, e) in &a.effects {
            s[v] = e.post;
        }
    }
    task.goal.iter().zip(&s).all(|(g, &v)| g.map_or(true, |g| g == v))
}

/// Records every integral point the inner separator accepts.
struct Recording<S> {
    inner: S,
    accepted: std::cell::RefCell<Vec<Vec<f64>>>,
}

impl<S: Separator> Separator for Recording<S> {
    fn cuts(&mut self, point: &[f64]) -> Vec<LinearConstraint> {
        self.inner.cuts(point)
    }

    fn accepts(&self, point: &[f64]) -> bool {
        let ok = self.inner.accepts(point);
        if ok {
            self.accepted.borrow_mut().push(point.to_vec());
        }
        ok
    }
}

struct Corpus {
    tasks: Vec<(SasTask, usize)>,
}

fn corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut tasks = Vec::new();
    while tasks.len() < 250 {
        let task = random_task(&mut rng, TaskShape::default());
        if let Some(opt) = bfs(&task, 100_000).optimal {
            if (1..=6).contains(&opt) {
                tasks.push((task, opt));
            }
        }
    }
    Corpus { tasks }
}

fn dominance(corpus: &Corpus) -> Outcome {
    let mut violations = Vec::new();
    let mut strict = [0usize; 3];
    for (i, (task, _)) in corpus.tasks.iter().enumerate() {
        let t = |f: Formulation| -> Result<usize, String> {
            let cfg = RunConfig { formulation: f, max_periods: 6, ..Default::default() };
            let s = solve_task(task, &cfg).map_err(|e| e.to_string())?;
            // unsolved within the cap counts as infinite
            Ok(s.first_feasible_horizon().unwrap_or(usize::MAX))
        };
        let (one, g1, g2, path) =
            (t(Formulation::OneSc)?, t(Formulation::G1sc)?, t(Formulation::G2sc)?, t(Formulation::PathSc)?);
        if !(path <= g1 && g1 <= one && g2 <= g1) {
            violations.push(format!("task {i}: 1sc {one} g1sc {g1} g2sc {g2} pathsc {path}"));
        }
        strict[0] += (g1 < one) as usize;
        strict[1] += (g2 < g1) as usize;
        strict[2] += (path < g1) as usize;
    }
    ensure(violations.is_empty(), || format!("{} violations, first: {}", violations.len(), violations[0]))?;
    Ok(format!(
        "{} tasks, 0 violations; strictly fewer periods: g1sc<1sc {}, g2sc<g1sc {}, pathsc<g1sc {}",
        corpus.tasks.len(),
        strict[0],
        strict[1],
        strict[2]
    ))
}

/// Every incumbent accepted while solving, under both search modes, at the
/// first feasible horizon and the one after it.
fn soundness(corpus: &Corpus) -> Outcome {
    let mut checked = 0usize;
    for (i, (task, _)) in corpus.tasks.iter().enumerate() {
        for f in Formulation::ALL {
            let cfg = RunConfig { formulation: f, max_periods: 6, ..Default::default() };
            let Some(first) = solve_task(task, &cfg).map_err(|e| e.to_string())?.first_feasible_horizon() else {
                continue;
            };
            for horizon in [first, first + 1] {
                for mode in [SearchMode::FirstFeasible, SearchMode::Optimize] {
                    let enc = encode(task, f, horizon).map_err(|e| e.to_string())?;
                    let variant = f.precedence_variant();
                    let graph = build_precedence_graph(&enc.task, variant.unwrap_or(GraphVariant::Base));
                    let search = SearchConfig { mode, ..SearchConfig::default() };
                    let accepted = match variant {
                        Some(_) => {
                            let sep = CycleSeparator::new(graph.clone(), horizon, SeparationConfig::default());
                            let mut rec = Recording { inner: sep, accepted: Default::default() };
                            solve_ip(&enc.model, &mut rec, &search).map_err(|e| e.to_string())?;
                            rec.accepted.into_inner()
                        }
                        None => {
                            let mut rec = Recording { inner: NoCuts, accepted: Default::default() };
                            solve_ip(&enc.model, &mut rec, &search).map_err(|e| e.to_string())?;
                            rec.accepted.into_inner()
                        }
                    };
                    ensure(!accepted.is_empty(), || format!("task {i} {f} T={horizon}: no incumbent"))?;
                    for point in accepted {
                        checked += 1;
                        let where_ = || format!("task {i} {f} T={horizon} {mode:?}");
                        let plan = extract_plan(&point, &enc.map, f).map_err(|e| format!("{}: {e}", where_()))?;
                        let sum: f64 = (0..enc.map.num_actions() * horizon).map(|j| point[j]).sum();
                        ensure(plan.num_actions() == sum.round() as usize, || format!("{}: action count", where_()))?;
                        let seq: Vec<usize> = linearize_periods(&plan, &graph)
                            .map_err(|e| format!("{}: {e}", where_()))?
                            .into_iter()
                            .flatten()
                            .collect();
                        let report = validate_linear(&enc.task, &seq);
                        ensure(report.ok(), || format!("{}: {:?}", where_(), report.failures))?;
                        let shape = check_formulation_shape(&enc.task, &plan);
                        ensure(shape.ok(), || format!("{}: {:?}", where_(), shape.failures))?;
                        ensure(simulate(&enc.task, &seq), || format!("{}: independent simulation", where_()))?;
                    }
                }
            }
        }
    }
    Ok(format!("{checked} accepted incumbents, all valid"))
}

fn bfs_equivalence(corpus: &Corpus) -> Outcome {
    let mut solvable_runs = 0;
    for (i, (task, opt)) in corpus.tasks.iter().enumerate() {
        for f in Formulation::ALL {
            let cfg = RunConfig { formulation: f, max_periods: 6, ..Default::default() };
            let s = solve_task(task, &cfg).map_err(|e| e.to_string())?;
            let plan = s.plan.ok_or_else(|| format!("task {i} {f}: solvable but no plan"))?;
            ensure(plan.plan.num_actions() >= *opt, || {
                format!("task {i} {f}: {} actions below the optimum {opt}", plan.plan.num_actions())
            })?;
            solvable_runs += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut unsolvable = 0;
    let mut max_reachable = 0;
    while unsolvable < 60 {
        let task = random_task(&mut rng, TaskShape::default());
        let out = bfs(&task, 100_000);
        if out.optimal.is_some() || out.reachable > 24 {
            continue;
        }
        unsolvable += 1;
        max_reachable = max_reachable.max(out.reachable);
        for f in Formulation::ALL {
            let cfg = RunConfig { formulation: f, max_periods: out.reachable, ..Default::default() };
            let s = solve_task(&task, &cfg).map_err(|e| e.to_string())?;
            ensure(s.status == HorizonStatus::Infeasible, || {
                format!("{f}: status {} on an unsolvable task with {} states", s.status.name(), out.reachable)
            })?;
        }
    }
    Ok(format!(
        "{solvable_runs} solvable runs at or above the optimum; {unsolvable} unsolvable tasks (<= {max_reachable} states) infeasible up to T = states"
    ))
}

fn separation_completeness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cases = 0usize;
    let mut cyclic = 0usize;
    let mut check = |n: usize, arcs: Vec<(usize, usize)>, selected: Vec<bool>| -> Result<(), String> {
        let graph = PrecedenceGraph::from_arcs(n, arcs.iter().copied());
        let x: Vec<f64> = selected.iter().map(|&s| s as u8 as f64).collect();
        let want = has_cycle(n, &arcs, &selected);
        for mode in [SeparationMode::Paper, SeparationMode::Exact] {
            let cuts = separate(&x, n, &graph, 1, mode, CutStrategy::All);
            ensure(cuts.is_empty() != want, || format!("n={n} arcs={arcs:?} sel={selected:?} {mode}"))?;
            for c in &cuts {
                ensure(c.actions.iter().all(|&a| selected[a]) && is_simple_cycle(&c.actions, &arcs), || {
                    format!("cut {:?} is not a selected cycle", c.actions)
                })?;
                let lhs: f64 = c.actions.iter().map(|&a| x[a]).sum();
                ensure(lhs > c.rhs() + 0.5, || "cut not violated".into())?;
            }
        }
        cases += 1;
        cyclic += want as usize;
        Ok(())
    };
    // every arc set on up to four nodes, every selection
    for n in 1..=4usize {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect();
        for mask in 0u32..1 << pairs.len() {
            let arcs: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &p)| p).collect();
            let sel_masks: Vec<u32> = if n <= 3 { (0..1 << n).collect() } else { vec![(1 << n) - 1] };
            for sel in sel_masks {
                check(n, arcs.clone(), (0..n).map(|v| sel >> v & 1 == 1).collect())?;
            }
        }
    }
    // sampled arc sets on five to eight nodes
    for _ in 0..12_000 {
        let n = rng.gen_range(5..=8);
        let density = rng.gen_range(0.05..0.5);
        let arcs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| a != b)
            .filter(|_| rng.gen_bool(density))
            .collect();
        let selected: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
        check(n, arcs, selected)?;
    }
    ensure(cases >= 10_000, || format!("only {cases} cases"))?;
    Ok(format!("{cases} digraphs, {cyclic} cyclic, cut iff cycle in both modes"))
}

fn lp_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let m = random_lp(&mut rng);
        let (p, _) = solve_lp(&m, &[]).map_err(|e| e.to_string())?;
        match vertex_enumeration(&m) {
            None => ensure(p.status == SolveStatus::Infeasible, || format!("lp {case}: expected infeasible"))?,
            Some(z) => {
                ensure(p.status == SolveStatus::Optimal, || format!("lp {case}: status {:?}", p.status))?;
                worst = worst.max((p.objective - z).abs());
                ensure(close(p.objective, z, 1e-7), || format!("lp {case}: {} vs {z}", p.objective))?;
            }
        }
    }
    let mut mips = 0;
    for case in 0..400 {
        let m: MipModel = random_binary_program(&mut rng, 12);
        let cfg = SearchConfig { mode: SearchMode::Optimize, ..SearchConfig::default() };
        let r = solve_ip(&m, NoCuts, &cfg).map_err(|e| e.to_string())?;
        match binary_enumeration(&m) {
            None => ensure(r.status == IpStatus::Infeasible, || format!("mip {case}: expected infeasible"))?,
            Some(z) => {
                ensure(r.status == IpStatus::Optimal, || format!("mip {case}: status {:?}", r.status))?;
                let got = r.state.incumbent_value().unwrap_or(f64::NAN);
                ensure(close(got, z, 1e-7), || format!("mip {case}: {got} vs {z}"))?;
            }
        }
        mips += 1;
    }
    Ok(format!("1000 LPs (max gap {worst:.1e}), {mips} binary programs match enumeration"))
}

fn prevail_strength() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut tasks = vec![logistics_toy(), separation_example()];
    while tasks.len() < 40 {
        let t = random_task(&mut rng, TaskShape { undefined_pre: 0.0, ..TaskShape::default() });
        if t.actions.iter().any(|a| !a.prevails.is_empty()) {
            tasks.push(t);
        }
    }
    let mut points = 0;
    while points < 10_000 {
        let task = &tasks[rng.gen_range(0..tasks.len())];
        let horizon = rng.gen_range(1..=3);
        let weak = encode(task, Formulation::OneSc, horizon).map_err(|e| e.to_string())?;
        let strong = encode(task, Formulation::G1sc, horizon).map_err(|e| e.to_string())?;
        let rows: Vec<&LinearConstraint> =
            weak.model.constraints().iter().filter(|r| r.name.starts_with("prev_")).collect();
        if rows.is_empty() {
            continue;
        }
        let row5 = rows[rng.gen_range(0..rows.len())];
        let row6 = strong
            .model
            .constraints()
            .iter()
            .find(|r| r.name == row5.name)
            .ok_or_else(|| format!("no row {} in the generalized encoding", row5.name))?;
        // shared columns must mean the same thing in both encodings
        for &(j, _) in &row6.terms {
            ensure(weak.model.variables()[j].name == strong.model.variables()[j].name, || "column mismatch".into())?;
        }
        let x = loop {
            let x: Vec<f64> = (0..strong.model.num_vars()).map(|_| rng.gen::<f64>()).collect();
            if row5.violation(&x) <= 0.0 {
                break x;
            }
        };
        ensure(row6.violation(&x) <= 0.0, || format!("{} violated at a point satisfying its simple form", row6.name))?;
        points += 1;
    }
    Ok(format!("{points} points, 0 violations"))
}

fn miconic() -> Outcome {
    let start = Instant::now();
    let mut found = Vec::new();
    for name in ["f2-p3", "f3-p3"] {
        let task = parse_sas(&data(&format!("miconic/{name}.sas"))).map_err(|e| e.to_string())?;
        let cfg = RunConfig { formulation: Formulation::PathSc, max_periods: 6, ..Default::default() };
        let s = solve_task(&task, &cfg).map_err(|e| e.to_string())?;
        let t = s.first_feasible_horizon().ok_or_else(|| format!("{name}: no plan"))?;
        ensure(t <= 2, || format!("{name}: T = {t}"))?;
        // the STRIPS version compiled to two-valued variables, for reference
        let d = parse_domain(&data("miconic/domain.pddl")).map_err(|e| e.to_string())?;
        let p = parse_problem(&data(&format!("miconic/{name}.pddl")), &d).map_err(|e| e.to_string())?;
        let binary = binary_encode(&ground_task(&d, &p, DEFAULT_ACTION_CAP).map_err(|e| e.to_string())?);
        let tb = solve_task(&binary, &cfg).map_err(|e| e.to_string())?.first_feasible_horizon();
        found.push(format!("{name} T={t} (two-valued T={})", tb.map_or("-".into(), |t| t.to_string())));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{}, {elapsed:.2?}", found.join(", ")))
}

fn encoding_size() -> Outcome {
    let d = parse_domain(&data("logistics-toy-domain.pddl")).map_err(|e| e.to_string())?;
    let p = parse_problem(&data("logistics-toy-problem.pddl"), &d).map_err(|e| e.to_string())?;
    let binary = binary_encode(&ground_task(&d, &p, DEFAULT_ACTION_CAP).map_err(|e| e.to_string())?);
    let multi = logistics_toy();
    let mut sizes = Vec::new();
    for horizon in 1..=3 {
        let b = encode(&binary, Formulation::G1sc, horizon).map_err(|e| e.to_string())?;
        let m = encode(&multi, Formulation::G1sc, horizon).map_err(|e| e.to_string())?;
        let (bv, br, mv, mr) = (b.model.num_vars(), b.model.num_rows(), m.model.num_vars(), m.model.num_rows());
        ensure(bv > mv && br > mr, || format!("T={horizon}: two-valued {bv}x{br} vs multi-valued {mv}x{mr}"))?;
        sizes.push(format!("T={horizon} {bv}/{br} vs {mv}/{mr}"));
    }
    Ok(format!("variables/rows two-valued vs multi-valued: {}", sizes.join(", ")))
}

fn main() -> ExitCode {
    let corpus_start = Instant::now();
    let corpus = corpus();
    let corpus_time = corpus_start.elapsed();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("worked separation example", Box::new(worked_example)),
        ("toy logistics first feasible horizons", Box::new(toy_horizons)),
        ("dominance chain over random tasks", Box::new(|| dominance(&corpus))),
        ("soundness of accepted incumbents", Box::new(|| soundness(&corpus))),
        ("agreement with breadth-first search", Box::new(|| bfs_equivalence(&corpus))),
        ("separation finds a cut iff cyclic", Box::new(separation_completeness)),
        ("simplex and branch-and-cut optima", Box::new(lp_correctness)),
        ("generalized prevail rows are weaker", Box::new(prevail_strength)),
        ("mini-miconic in at most two periods", Box::new(miconic)),
        ("two-valued encoding is larger", Box::new(encoding_size)),
    ];
    println!("corpus: {} solvable random tasks built in {corpus_time:.2?}", corpus.tasks.len());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{t:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{t:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
