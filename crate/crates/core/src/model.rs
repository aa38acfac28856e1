//! Sparse mixed-integer models shared by the encoders and the solvers.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

pub type VarId = usize;

pub const FEASIBILITY_TOL: f64 = 1e-6;
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelVariable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integral: bool,
}

impl ModelVariable {
    pub fn binary(name: impl Into<String>) -> Self {
        ModelVariable { name: name.into(), lower: 0.0, upper: 1.0, integral: true }
    }

    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        ModelVariable { name: name.into(), lower, upper, integral: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(name: impl Into<String>, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        LinearConstraint { name: name.into(), terms, sense, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("constraint `{constraint}` references variable {var} but the model has {count}")]
    DanglingVariable { constraint: String, var: VarId, count: usize },
    #[error("objective references variable {var} but the model has {count}")]
    DanglingObjective { var: VarId, count: usize },
    #[error("constraint `{constraint}` mentions variable {var} twice")]
    DuplicateTerm { constraint: String, var: VarId },
    #[error("constraint `{constraint}` has a non-finite coefficient or rhs")]
    NonFinite { constraint: String },
    #[error("variable `{name}` has lower bound above upper bound")]
    InvalidBounds { name: String },
    #[error("point has {found} values, model has {expected} variables")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Minimization model: `min c x` subject to rows and variable bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct MipModel {
    variables: Vec<ModelVariable>,
    constraints: Vec<LinearConstraint>,
    objective: Vec<(VarId, f64)>,
}

impl MipModel {
    /// Validates indices and bounds. After construction only row appends
    /// are possible.
    pub fn new(
        variables: Vec<ModelVariable>,
        constraints: Vec<LinearConstraint>,
        objective: Vec<(VarId, f64)>,
    ) -> Result<Self, ModelError> {
        for v in &variables {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ModelError::InvalidBounds { name: v.name.clone() });
            }
        }
        for &(j, _) in &objective {
            if j >= variables.len() {
                return Err(ModelError::DanglingObjective { var: j, count: variables.len() });
            }
        }
        let mut model = MipModel { variables, constraints: Vec::new(), objective };
        for c in constraints {
            model.add_constraint(c)?;
        }
        Ok(model)
    }

    pub fn add_constraint(&mut self, c: LinearConstraint) -> Result<(), ModelError> {
        self.check_row(&c)?;
        self.constraints.push(c);
        Ok(())
    }

    pub fn check_row(&self, c: &LinearConstraint) -> Result<(), ModelError> {
        let n = self.variables.len();
        let mut seen = HashSet::with_capacity(c.terms.len());
        if !c.rhs.is_finite() {
            return Err(ModelError::NonFinite { constraint: c.name.clone() });
        }
        for &(j, a) in &c.terms {
            if j >= n {
                return Err(ModelError::DanglingVariable {
                    constraint: c.name.clone(),
                    var: j,
                    count: n,
                });
            }
            if !a.is_finite() {
                return Err(ModelError::NonFinite { constraint: c.name.clone() });
            }
            if !seen.insert(j) {
                return Err(ModelError::DuplicateTerm { constraint: c.name.clone(), var: j });
            }
        }
        Ok(())
    }

    pub fn variables(&self) -> &[ModelVariable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn integral_vars(&self) -> Vec<VarId> {
        (0..self.variables.len()).filter(|&j| self.variables[j].integral).collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// The same model with every integrality flag cleared.
    pub fn relaxed(&self) -> MipModel {
        let mut m = self.clone();
        for v in &mut m.variables {
            v.integral = false;
        }
        m
    }

    /// Lists every bound, row and integrality violation larger than `tol`.
    pub fn check_point(&self, x: &[f64], tol: f64) -> Result<FeasibilityReport, ModelError> {
        if x.len() != self.variables.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.variables.len(),
                found: x.len(),
            });
        }
        let mut violations = Vec::new();
        for (j, v) in self.variables.iter().enumerate() {
            if x[j] < v.lower - tol || x[j] > v.upper + tol {
                violations.push(PointViolation::Bound { var: j, value: x[j] });
            }
            if v.integral && (x[j] - x[j].round()).abs() > tol {
                violations.push(PointViolation::Integrality { var: j, value: x[j] });
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let amount = c.violation(x);
            if amount > tol {
                violations.push(PointViolation::Row { row: i, amount });
            }
        }
        Ok(FeasibilityReport { violations })
    }
}

/// `relax_model` in free-function form.
pub fn relax_model(model: &MipModel) -> MipModel {
    model.relaxed()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointViolation {
    Bound { var: VarId, value: f64 },
    Row { row: usize, amount: f64 },
    Integrality { var: VarId, value: f64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<PointViolation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionPoint {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
}

impl SolutionPoint {
    pub fn infeasible(n: usize) -> Self {
        SolutionPoint { values: vec![0.0; n], objective: f64::INFINITY, status: SolveStatus::Infeasible }
    }
}

// ---------------------------------------------------------------------------
// Plain-text LP format
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq)]
pub enum LpFormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn write_terms(out: &mut String, terms: &[(VarId, f64)], vars: &[ModelVariable]) {
    for &(j, a) in terms {
        if a.is_sign_negative() {
            let _ = write!(out, " - {} {}", -a, vars[j].name);
        } else {
            let _ = write!(out, " + {} {}", a, vars[j].name);
        }
    }
}

fn fmt_bound(b: f64) -> String {
    if b == f64::INFINITY {
        "+inf".into()
    } else if b == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{b}")
    }
}

/// Writes the model in CPLEX-LP-compatible text. Sections, in order:
/// `Minimize`, `Subject To`, `Bounds`, `Binaries`, `Generals`, `End`.
/// Every variable gets an explicit `lo <= name <= hi` bound line.
pub fn write_lp(model: &MipModel) -> String {
    let vars = &model.variables;
    let mut s = String::from("\\ flowplan model\nMinimize\n obj:");
    write_terms(&mut s, &model.objective, vars);
    s.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(s, " {}:", c.name);
        write_terms(&mut s, &c.terms, vars);
        let _ = writeln!(s, " {} {}", c.sense, c.rhs);
    }
    s.push_str("Bounds\n");
    for v in vars {
        let _ = writeln!(s, " {} <= {} <= {}", fmt_bound(v.lower), v.name, fmt_bound(v.upper));
    }
    let binaries: Vec<&str> = vars
        .iter()
        .filter(|v| v.integral && v.lower == 0.0 && v.upper == 1.0)
        .map(|v| v.name.as_str())
        .collect();
    let generals: Vec<&str> = vars
        .iter()
        .filter(|v| v.integral && !(v.lower == 0.0 && v.upper == 1.0))
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        s.push_str("Binaries\n");
        for chunk in binaries.chunks(8) {
            let _ = writeln!(s, " {}", chunk.join(" "));
        }
    }
    if !generals.is_empty() {
        s.push_str("Generals\n");
        for chunk in generals.chunks(8) {
            let _ = writeln!(s, " {}", chunk.join(" "));
        }
    }
    s.push_str("End\n");
    s
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Objective,
    Rows,
    Bounds,
    Integers,
    End,
}

fn parse_num(tok: &str) -> Option<f64> {
    match tok {
        "+inf" | "inf" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => tok.parse().ok(),
    }
}

/// Reads back what [`write_lp`] produces. This is not a general LP-format
/// reader: every variable must appear in the `Bounds` section.
pub fn read_lp(text: &str) -> Result<MipModel, LpFormatError> {
    let mut section = Section::Start;
    let mut obj_tokens: Vec<(usize, String)> = Vec::new();
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    let mut vars: Vec<ModelVariable> = Vec::new();
    let mut index: HashMap<String, VarId> = HashMap::new();
    let mut integral: Vec<(usize, String)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        match line.to_ascii_lowercase().as_str() {
            "minimize" => {
                section = Section::Objective;
                continue;
            }
            "subject to" => {
                section = Section::Rows;
                continue;
            }
            "bounds" => {
                section = Section::Bounds;
                continue;
            }
            "binaries" | "generals" => {
                section = Section::Integers;
                continue;
            }
            "end" => {
                section = Section::End;
                continue;
            }
            _ => {}
        }
        let toks: Vec<String> = line.split_whitespace().map(String::from).collect();
        match section {
            Section::Objective => obj_tokens.extend(toks.into_iter().map(|t| (ln, t))),
            Section::Rows => rows.push((ln, toks)),
            Section::Bounds => {
                let bad = || LpFormatError::Syntax { line: ln, msg: format!("bad bound `{line}`") };
                if toks.len() != 5 || toks[1] != "<=" || toks[3] != "<=" {
                    return Err(bad());
                }
                let lower = parse_num(&toks[0]).ok_or_else(bad)?;
                let upper = parse_num(&toks[4]).ok_or_else(bad)?;
                index.insert(toks[2].clone(), vars.len());
                vars.push(ModelVariable { name: toks[2].clone(), lower, upper, integral: false });
            }
            Section::Integers => integral.extend(toks.into_iter().map(|t| (ln, t))),
            Section::Start | Section::End => {
                return Err(LpFormatError::Syntax { line: ln, msg: format!("unexpected `{line}`") })
            }
        }
    }
    for (ln, name) in integral {
        let j = *index.get(&name).ok_or_else(|| LpFormatError::Syntax {
            line: ln,
            msg: format!("unknown variable `{name}`"),
        })?;
        vars[j].integral = true;
    }

    let parse_terms = |ln: usize, toks: &[String]| -> Result<Vec<(VarId, f64)>, LpFormatError> {
        let err = |msg: String| LpFormatError::Syntax { line: ln, msg };
        if toks.len() % 3 != 0 {
            return Err(err("terms must be `sign coef name` triples".into()));
        }
        toks.chunks(3)
            .map(|t| {
                let sign = match t[0].as_str() {
                    "+" => 1.0,
                    "-" => -1.0,
                    s => return Err(err(format!("expected sign, found `{s}`"))),
                };
                let coef = parse_num(&t[1]).ok_or_else(|| err(format!("bad number `{}`", t[1])))?;
                let j = *index.get(&t[2]).ok_or_else(|| err(format!("unknown variable `{}`", t[2])))?;
                Ok((j, sign * coef))
            })
            .collect()
    };

    let (obj_ln, obj_toks): (Vec<usize>, Vec<String>) = obj_tokens.into_iter().unzip();
    let obj_ln = obj_ln.first().copied().unwrap_or(0);
    if obj_toks.first().map(String::as_str) != Some("obj:") {
        return Err(LpFormatError::Syntax { line: obj_ln, msg: "objective must start with `obj:`".into() });
    }
    let objective = parse_terms(obj_ln, &obj_toks[1..])?;

    let mut constraints = Vec::with_capacity(rows.len());
    for (ln, toks) in rows {
        let err = |msg: &str| LpFormatError::Syntax { line: ln, msg: msg.into() };
        if toks.len() < 3 || !toks[0].ends_with(':') {
            return Err(err("row must be `name: terms sense rhs`"));
        }
        let name = toks[0].trim_end_matches(':').to_string();
        let k = toks.len();
        let sense = match toks[k - 2].as_str() {
            "<=" => Sense::Le,
            ">=" => Sense::Ge,
            "=" => Sense::Eq,
            _ => return Err(err("missing sense")),
        };
        let rhs = parse_num(&toks[k - 1]).ok_or_else(|| err("bad rhs"))?;
        let terms = parse_terms(ln, &toks[1..k - 2])?;
        constraints.push(LinearConstraint { name, terms, sense, rhs });
    }
    Ok(MipModel::new(vars, constraints, objective)?)
}
