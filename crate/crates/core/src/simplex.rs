//! Bounded-variable primal simplex.
//!
//! Every row `a·x (<=|=|>=) b` gets a logical column `r` with `a·x - r = 0`
//! and bounds taken from the row sense, so the working system always has a
//! zero right-hand side and every column has box bounds (possibly infinite
//! on one side for logicals). Phase 1 minimizes the sum of bound
//! infeasibilities of the basic variables starting from whatever basis is
//! current, which makes warm starts after bound changes or appended rows
//! the same code path as a cold start.
//!
//! The basis inverse is kept dense and updated in product form, with a
//! fresh Gauss-Jordan inversion every `refactor_every` pivots.

use thiserror::Error;

use crate::model::{LinearConstraint, MipModel, Sense, SolutionPoint, SolveStatus, VarId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpOptions {
    pub feasibility_tol: f64,
    pub pivot_tol: f64,
    pub cost_tol: f64,
    pub max_pivots: usize,
    /// Degenerate pivots tolerated before switching to Bland's rule.
    pub bland_after: usize,
    pub refactor_every: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            feasibility_tol: 1e-7,
            pivot_tol: 1e-9,
            cost_tol: 1e-9,
            max_pivots: 100_000,
            bland_after: 1000,
            refactor_every: 50,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("simplex gave up after {0} pivots")]
    PivotLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("bound override for unknown variable {0}")]
    UnknownVariable(VarId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic with both bounds infinite, held at zero.
    Free,
}

/// Snapshot of a basis: which column occupies each basis position, and
/// the state of every column (structurals first, then one logical per row).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis {
    pub basic: Vec<usize>,
    pub states: Vec<ColumnState>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LpCounters {
    pub pivots: usize,
    pub degenerate: usize,
    pub refactorizations: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone)]
pub struct LpSolver {
    opts: LpOptions,
    n: usize,
    m: usize,
    /// Structural columns, sparse `(row, coef)`.
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    root_lower: Vec<f64>,
    root_upper: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basic: Vec<usize>,
    state: Vec<ColumnState>,
    /// Row-major dense basis inverse, `m * m`.
    binv: Vec<f64>,
    since_refactor: usize,
    bland: bool,
    counters: LpCounters,
    // scratch
    alpha: Vec<f64>,
    duals: Vec<f64>,
}

fn row_bounds(sense: Sense, rhs: f64) -> (f64, f64) {
    match sense {
        Sense::Le => (f64::NEG_INFINITY, rhs),
        Sense::Ge => (rhs, f64::INFINITY),
        Sense::Eq => (rhs, rhs),
    }
}

fn resting_state(lower: f64, upper: f64, prefer_upper: bool) -> (ColumnState, f64) {
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) if prefer_upper => (ColumnState::AtUpper, upper),
        (true, _) => (ColumnState::AtLower, lower),
        (false, true) => (ColumnState::AtUpper, upper),
        (false, false) => (ColumnState::Free, 0.0),
    }
}

impl LpSolver {
    /// Builds a solver for the continuous relaxation of `model` with the
    /// all-logical starting basis.
    pub fn new(model: &MipModel, opts: LpOptions) -> Self {
        let n = model.num_vars();
        let mut cost = vec![0.0; n];
        for &(j, c) in model.objective() {
            cost[j] += c;
        }
        let root_lower: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
        let root_upper: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
        let mut s = LpSolver {
            opts,
            n,
            m: 0,
            cols: vec![Vec::new(); n],
            cost,
            lower: root_lower.clone(),
            upper: root_upper.clone(),
            root_lower,
            root_upper,
            x: vec![0.0; n],
            basic: Vec::new(),
            state: Vec::with_capacity(n),
            binv: Vec::new(),
            since_refactor: 0,
            bland: false,
            counters: LpCounters::default(),
            alpha: Vec::new(),
            duals: Vec::new(),
        };
        for j in 0..n {
            let (st, v) = resting_state(s.lower[j], s.upper[j], false);
            s.state.push(st);
            s.x[j] = v;
        }
        s.append_rows(model.constraints());
        s
    }

    /// Builds a solver and installs a previously exported basis. Falls back
    /// to the logical basis when the snapshot does not fit the model.
    pub fn with_basis(model: &MipModel, basis: &Basis, opts: LpOptions) -> Self {
        let mut s = LpSolver::new(model, opts);
        if basis.states.len() == s.n + s.m && basis.basic.len() == s.m {
            s.basic = basis.basic.clone();
            s.state = basis.states.clone();
            for j in 0..s.n + s.m {
                s.x[j] = match s.state[j] {
                    ColumnState::AtLower => s.lower[j],
                    ColumnState::AtUpper => s.upper[j],
                    _ => 0.0,
                };
                if !s.x[j].is_finite() {
                    let (st, v) = resting_state(s.lower[j], s.upper[j], false);
                    s.state[j] = st;
                    s.x[j] = v;
                }
            }
        }
        s
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn counters(&self) -> LpCounters {
        self.counters
    }

    pub fn basis(&self) -> Basis {
        Basis { basic: self.basic.clone(), states: self.state.clone() }
    }

    fn append_rows(&mut self, rows: &[LinearConstraint]) {
        for row in rows {
            let i = self.m;
            for &(j, a) in &row.terms {
                if a != 0.0 {
                    self.cols[j].push((i, a));
                }
            }
            let (lo, hi) = row_bounds(row.sense, row.rhs);
            let col = self.n + i;
            self.lower.push(lo);
            self.upper.push(hi);
            self.x.push(0.0);
            self.state.push(ColumnState::Basic(i));
            self.basic.push(col);
            self.m += 1;
        }
        // basis inverse is rebuilt at the start of the next solve
        self.binv.clear();
    }

    /// Appends rows; the current basis is extended by their logicals.
    pub fn add_rows(&mut self, rows: &[LinearConstraint]) {
        self.append_rows(rows);
    }

    /// Resets structural bounds to the model's and applies `overrides`
    /// (`(var, lower, upper)`), which may only tighten.
    pub fn set_bounds(&mut self, overrides: &[(VarId, f64, f64)]) -> Result<(), LpError> {
        self.lower[..self.n].copy_from_slice(&self.root_lower);
        self.upper[..self.n].copy_from_slice(&self.root_upper);
        for &(j, lo, hi) in overrides {
            if j >= self.n {
                return Err(LpError::UnknownVariable(j));
            }
            self.lower[j] = self.lower[j].max(lo);
            self.upper[j] = self.upper[j].min(hi);
        }
        for j in 0..self.n {
            match self.state[j] {
                ColumnState::Basic(_) => {}
                st => {
                    let (nst, v) =
                        resting_state(self.lower[j], self.upper[j], st == ColumnState::AtUpper);
                    self.state[j] = nst;
                    self.x[j] = v;
                }
            }
        }
        Ok(())
    }

    fn column(&self, j: usize) -> ColumnIter<'_> {
        if j < self.n {
            ColumnIter::Structural(self.cols[j].iter())
        } else {
            ColumnIter::Logical(Some(j - self.n))
        }
    }

    /// Solves from the current basis and bounds.
    pub fn solve(&mut self) -> Result<SolutionPoint, LpError> {
        self.bland = false;
        let start_pivots = self.counters.pivots;
        let start_degenerate = self.counters.degenerate;
        self.refactor()?;
        self.compute_basics();
        let outcome = match self.run(Phase::One, start_pivots, start_degenerate)? {
            Outcome::Optimal => {
                if self.max_infeasibility() > self.opts.feasibility_tol {
                    Outcome::Infeasible
                } else {
                    self.run(Phase::Two, start_pivots, start_degenerate)?
                }
            }
            other => other,
        };
        let values = self.x[..self.n].to_vec();
        Ok(match outcome {
            Outcome::Optimal => {
                let objective = self.cost.iter().zip(&values).map(|(c, x)| c * x).sum();
                SolutionPoint { values, objective, status: SolveStatus::Optimal }
            }
            Outcome::Infeasible => SolutionPoint {
                values,
                objective: f64::INFINITY,
                status: SolveStatus::Infeasible,
            },
            Outcome::Unbounded => SolutionPoint {
                values,
                objective: f64::NEG_INFINITY,
                status: SolveStatus::Unbounded,
            },
        })
    }

    fn max_infeasibility(&self) -> f64 {
        self.basic
            .iter()
            .map(|&j| (self.lower[j] - self.x[j]).max(self.x[j] - self.upper[j]).max(0.0))
            .fold(0.0, f64::max)
    }

    /// `x_B = -B^{-1} N x_N`.
    fn compute_basics(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.n + m {
            if matches!(self.state[j], ColumnState::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            for (i, a) in self.column(j) {
                rhs[i] -= a * xj;
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let v: f64 = row.iter().zip(&rhs).map(|(b, r)| b * r).sum();
            self.x[self.basic[p]] = v;
        }
    }

    /// Inverts the basis matrix from scratch. Columns that turn out to be
    /// linearly dependent are swapped for logicals of uncovered rows.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        self.counters.refactorizations += 1;
        self.since_refactor = 0;
        for attempt in 0..2 {
            let mut b = vec![0.0; m * m];
            for (p, &j) in self.basic.iter().enumerate() {
                for (i, a) in self.column(j) {
                    b[i * m + p] = a;
                }
            }
            match invert(&mut b, m) {
                Ok(inv) => {
                    self.binv = inv;
                    return Ok(());
                }
                Err((bad_positions, free_rows)) => {
                    if attempt == 1 {
                        return Err(LpError::Numerical("singular basis after repair".into()));
                    }
                    self.repair_basis(&bad_positions, &free_rows);
                }
            }
        }
        unreachable!()
    }

    fn repair_basis(&mut self, bad_positions: &[usize], free_rows: &[usize]) {
        for (&p, &i) in bad_positions.iter().zip(free_rows) {
            let old = self.basic[p];
            let (st, v) = resting_state(self.lower[old], self.upper[old], false);
            self.state[old] = st;
            self.x[old] = v;
            let col = self.n + i;
            self.basic[p] = col;
            self.state[col] = ColumnState::Basic(p);
        }
    }

    fn phase_cost(&self, phase: Phase, j: usize) -> f64 {
        match phase {
            Phase::Two => {
                if j < self.n {
                    self.cost[j]
                } else {
                    0.0
                }
            }
            Phase::One => {
                let tol = self.opts.feasibility_tol;
                if self.x[j] < self.lower[j] - tol {
                    -1.0
                } else if self.x[j] > self.upper[j] + tol {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn run(&mut self, phase: Phase, start_pivots: usize, start_degenerate: usize) -> Result<Outcome, LpError> {
        let m = self.m;
        let tol = self.opts.feasibility_tol;
        loop {
            if self.counters.pivots - start_pivots >= self.opts.max_pivots {
                return Err(LpError::PivotLimit(self.opts.max_pivots));
            }
            if !self.bland && self.counters.degenerate - start_degenerate >= self.opts.bland_after {
                self.bland = true;
            }
            if phase == Phase::One && self.max_infeasibility() <= tol {
                return Ok(Outcome::Optimal);
            }

            // duals y = c_B B^{-1}
            self.duals.clear();
            self.duals.resize(m, 0.0);
            for p in 0..m {
                let cb = self.phase_cost(phase, self.basic[p]);
                if cb != 0.0 {
                    let row = &self.binv[p * m..(p + 1) * m];
                    for (y, b) in self.duals.iter_mut().zip(row) {
                        *y += cb * b;
                    }
                }
            }

            // pricing
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.n + m {
                let st = self.state[j];
                if matches!(st, ColumnState::Basic(_)) || self.lower[j] == self.upper[j] {
                    continue;
                }
                let c = if phase == Phase::Two && j < self.n { self.cost[j] } else { 0.0 };
                let d = c - self.column(j).map(|(i, a)| self.duals[i] * a).sum::<f64>();
                let eligible = match st {
                    ColumnState::AtLower => d < -self.opts.cost_tol,
                    ColumnState::AtUpper => d > self.opts.cost_tol,
                    ColumnState::Free => d.abs() > self.opts.cost_tol,
                    ColumnState::Basic(_) => false,
                };
                if !eligible {
                    continue;
                }
                if self.bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.map_or(true, |(_, best)| d.abs() > best.abs()) {
                    entering = Some((j, d));
                }
            }
            let Some((q, dq)) = entering else {
                return Ok(Outcome::Optimal);
            };
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };

            // alpha = B^{-1} A_q
            self.alpha.clear();
            self.alpha.resize(m, 0.0);
            let colq: Vec<(usize, f64)> = self.column(q).collect();
            for p in 0..m {
                let row = &self.binv[p * m..(p + 1) * m];
                self.alpha[p] = colq.iter().map(|&(i, a)| row[i] * a).sum();
            }

            let leave = self.ratio_test(phase, dir);
            let flip = self.upper[q] - self.lower[q];
            let step = match leave {
                Some((_, t, _)) if t < flip => t,
                _ if flip.is_finite() => flip,
                _ => {
                    if phase == Phase::One {
                        return Err(LpError::Numerical("phase 1 direction without a blocking bound".into()));
                    }
                    return Ok(Outcome::Unbounded);
                }
            };

            // move
            for p in 0..m {
                let a = self.alpha[p];
                if a != 0.0 {
                    let jb = self.basic[p];
                    self.x[jb] -= dir * step * a;
                }
            }
            self.x[q] += dir * step;
            self.counters.pivots += 1;
            if step <= 1e-12 {
                self.counters.degenerate += 1;
            }

            match leave {
                Some((p, t, at_upper)) if t < flip => {
                    let jl = self.basic[p];
                    self.x[jl] = if at_upper { self.upper[jl] } else { self.lower[jl] };
                    self.state[jl] = if at_upper { ColumnState::AtUpper } else { ColumnState::AtLower };
                    self.basic[p] = q;
                    self.state[q] = ColumnState::Basic(p);
                    self.pivot_inverse(p);
                    self.since_refactor += 1;
                    if self.since_refactor >= self.opts.refactor_every {
                        self.refactor()?;
                        self.compute_basics();
                    }
                }
                _ => {
                    // bound flip
                    if dir > 0.0 {
                        self.state[q] = ColumnState::AtUpper;
                        self.x[q] = self.upper[q];
                    } else {
                        self.state[q] = ColumnState::AtLower;
                        self.x[q] = self.lower[q];
                    }
                }
            }
        }
    }

    /// Returns the leaving position, step length and whether it leaves at
    /// its upper bound. Harris two-pass in normal mode; smallest column
    /// index among ties under Bland's rule.
    fn ratio_test(&self, phase: Phase, dir: f64) -> Option<(usize, f64, bool)> {
        let tol = self.opts.feasibility_tol;
        let ptol = self.opts.pivot_tol;
        // candidate: (pos, exact ratio, relaxed ratio, leaves at upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        for p in 0..self.m {
            let a = self.alpha[p];
            if a.abs() <= ptol {
                continue;
            }
            let j = self.basic[p];
            let rate = -dir * a;
            let (xj, lo, hi) = (self.x[j], self.lower[j], self.upper[j]);
            let below = phase == Phase::One && xj < lo - tol;
            let above = phase == Phase::One && xj > hi + tol;
            if rate < 0.0 {
                // decreasing
                if below {
                    continue;
                }
                let (target, at_upper) = if above { (hi, true) } else { (lo, false) };
                if !target.is_finite() {
                    continue;
                }
                let exact = ((xj - target) / -rate).max(0.0);
                let relaxed = (xj - target + tol) / -rate;
                cands.push((p, exact, relaxed, at_upper));
            } else {
                if above {
                    continue;
                }
                let (target, at_upper) = if below { (lo, false) } else { (hi, true) };
                if !target.is_finite() {
                    continue;
                }
                let exact = ((target - xj) / rate).max(0.0);
                let relaxed = (target - xj + tol) / rate;
                cands.push((p, exact, relaxed, at_upper));
            }
        }
        if cands.is_empty() {
            return None;
        }
        if self.bland {
            let min = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let best = cands
                .iter()
                .filter(|c| c.1 <= min + 1e-12)
                .min_by_key(|c| self.basic[c.0])
                .unwrap();
            return Some((best.0, best.1, best.3));
        }
        let bound = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        let best = cands
            .iter()
            .filter(|c| c.1 <= bound)
            .max_by(|a, b| {
                self.alpha[a.0]
                    .abs()
                    .partial_cmp(&self.alpha[b.0].abs())
                    .unwrap()
                    .then(b.0.cmp(&a.0))
            })
            .unwrap();
        Some((best.0, best.1, best.3))
    }

    fn pivot_inverse(&mut self, r: usize) {
        let m = self.m;
        let piv = self.alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        for (p, row) in before.chunks_mut(m).enumerate() {
            let a = self.alpha[p];
            if a != 0.0 {
                for (v, pr) in row.iter_mut().zip(prow.iter()) {
                    *v -= a * pr;
                }
            }
        }
        for (off, row) in after.chunks_mut(m).enumerate() {
            let a = self.alpha[r + 1 + off];
            if a != 0.0 {
                for (v, pr) in row.iter_mut().zip(prow.iter()) {
                    *v -= a * pr;
                }
            }
        }
    }
}

enum ColumnIter<'a> {
    Structural(std::slice::Iter<'a, (usize, f64)>),
    Logical(Option<usize>),
}

impl Iterator for ColumnIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColumnIter::Structural(it) => it.next().copied(),
            ColumnIter::Logical(row) => row.take().map(|i| (i, -1.0)),
        }
    }
}

/// Gauss-Jordan inversion with partial pivoting of a row-major `m * m`
/// matrix. On failure returns the columns (basis positions) without a
/// pivot and the rows left unpivoted.
fn invert(b: &mut [f64], m: usize) -> Result<Vec<f64>, (Vec<usize>, Vec<usize>)> {
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    let mut row_of_col = vec![usize::MAX; m];
    let mut used = vec![false; m];
    let mut bad = Vec::new();
    for c in 0..m {
        let mut best = None;
        let mut best_abs = 1e-11;
        for r in 0..m {
            if !used[r] && b[r * m + c].abs() > best_abs {
                best_abs = b[r * m + c].abs();
                best = Some(r);
            }
        }
        let Some(r) = best else {
            bad.push(c);
            continue;
        };
        used[r] = true;
        row_of_col[c] = r;
        let piv = b[r * m + c];
        for k in 0..m {
            b[r * m + k] /= piv;
            inv[r * m + k] /= piv;
        }
        for r2 in 0..m {
            if r2 == r {
                continue;
            }
            let f = b[r2 * m + c];
            if f != 0.0 {
                for k in 0..m {
                    b[r2 * m + k] -= f * b[r * m + k];
                    inv[r2 * m + k] -= f * inv[r * m + k];
                }
            }
        }
    }
    if !bad.is_empty() {
        let free = (0..m).filter(|&r| !used[r]).collect();
        return Err((bad, free));
    }
    // Row r of `inv` now holds the inverse row for basis position c.
    let mut out = vec![0.0; m * m];
    for c in 0..m {
        let r = row_of_col[c];
        out[c * m..(c + 1) * m].copy_from_slice(&inv[r * m..(r + 1) * m]);
    }
    Ok(out)
}

/// One-shot LP solve of the continuous relaxation of `model` under bound
/// overrides `(var, lower, upper)`.
pub fn solve_lp(
    model: &MipModel,
    overrides: &[(VarId, f64, f64)],
) -> Result<(SolutionPoint, Basis), LpError> {
    let mut s = LpSolver::new(model, LpOptions::default());
    s.set_bounds(overrides)?;
    let p = s.solve()?;
    Ok((p, s.basis()))
}

/// Re-solves `model` extended by `rows`, starting from `previous` (a basis
/// of `model` without the new rows).
pub fn reoptimize_with_added_rows(
    model: &MipModel,
    previous: &Basis,
    rows: &[LinearConstraint],
) -> Result<(SolutionPoint, Basis), LpError> {
    let mut s = LpSolver::with_basis(model, previous, LpOptions::default());
    s.add_rows(rows);
    let p = s.solve()?;
    Ok((p, s.basis()))
}
