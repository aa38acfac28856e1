//! Reader and writer for the translator output format, version 3.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Effect, SasAction, SasTask, Variable};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SasError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported format: {0}")]
    Unsupported(String),
}

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Lines { lines, pos: 0 }
    }

    fn line_no(&self) -> usize {
        self.lines
            .get(self.pos)
            .or(self.lines.last())
            .map_or(0, |(n, _)| *n)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SasError> {
        Err(SasError::Parse { line: self.line_no(), msg: msg.into() })
    }

    fn next(&mut self) -> Result<&'a str, SasError> {
        match self.lines.get(self.pos) {
            Some(&(_, l)) => {
                if l == "begin_rule" {
                    return Err(SasError::Unsupported("axioms (begin_rule) are not supported".into()));
                }
                self.pos += 1;
                Ok(l)
            }
            None => self.err("unexpected end of input"),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|&(_, l)| l)
    }

    fn expect(&mut self, word: &str) -> Result<(), SasError> {
        let l = self.next()?;
        if l != word {
            self.pos -= 1;
            return self.err(format!("expected `{word}`, found `{l}`"));
        }
        Ok(())
    }

    fn int(&mut self) -> Result<i64, SasError> {
        let l = self.next()?;
        l.parse().or_else(|_| {
            self.pos -= 1;
            self.err(format!("expected an integer, found `{l}`"))
        })
    }

    fn count(&mut self) -> Result<usize, SasError> {
        let v = self.int()?;
        if v < 0 {
            self.pos -= 1;
            return self.err(format!("negative count {v}"));
        }
        Ok(v as usize)
    }

    fn ints(&mut self, n: usize) -> Result<Vec<i64>, SasError> {
        let l = self.next()?;
        let parsed: Result<Vec<i64>, _> = l.split_whitespace().map(str::parse).collect();
        match parsed {
            Ok(v) if v.len() == n => Ok(v),
            _ => {
                self.pos -= 1;
                self.err(format!("expected {n} integers, found `{l}`"))
            }
        }
    }
}

fn index(lines: &Lines, v: i64, bound: usize, what: &str) -> Result<usize, SasError> {
    if v < 0 || v as usize >= bound {
        lines.err(format!("{what} {v} out of range (limit {bound})"))
    } else {
        Ok(v as usize)
    }
}

/// Parses a task in translator output format version 3. Axioms, derived
/// variables and conditional effects are rejected; mutex groups and the
/// metric flag are read and dropped.
pub fn parse_sas(text: &str) -> Result<SasTask, SasError> {
    if text.lines().any(|l| l.trim() == "begin_rule") {
        return Err(SasError::Unsupported("axioms (begin_rule) are not supported".into()));
    }
    let mut lines = Lines::new(text);
    lines.expect("begin_version")?;
    let version = lines.int()?;
    if version != 3 {
        return Err(SasError::Unsupported(format!("version {version}, expected 3")));
    }
    lines.expect("end_version")?;
    lines.expect("begin_metric")?;
    lines.int()?;
    lines.expect("end_metric")?;

    let nvars = lines.count()?;
    let mut variables = Vec::with_capacity(nvars);
    for _ in 0..nvars {
        lines.expect("begin_variable")?;
        let name = lines.next()?.to_string();
        let layer = lines.int()?;
        if layer != -1 {
            return Err(SasError::Unsupported(format!(
                "derived variable `{name}` (axiom layer {layer})"
            )));
        }
        let size = lines.count()?;
        let mut values = Vec::with_capacity(size);
        for _ in 0..size {
            values.push(lines.next()?.to_string());
        }
        lines.expect("end_variable")?;
        variables.push(Variable { name, values });
    }
    let sizes: Vec<usize> = variables.iter().map(Variable::domain_size).collect();

    let ngroups = lines.count()?;
    for _ in 0..ngroups {
        lines.expect("begin_mutex_group")?;
        let k = lines.count()?;
        for _ in 0..k {
            lines.ints(2)?;
        }
        lines.expect("end_mutex_group")?;
    }

    lines.expect("begin_state")?;
    let mut initial = Vec::with_capacity(nvars);
    for v in 0..nvars {
        let val = lines.int()?;
        initial.push(index(&lines, val, sizes[v], "initial value")?);
    }
    lines.expect("end_state")?;

    lines.expect("begin_goal")?;
    let mut goal = vec![None; nvars];
    let ngoal = lines.count()?;
    for _ in 0..ngoal {
        let p = lines.ints(2)?;
        let var = index(&lines, p[0], nvars, "variable")?;
        goal[var] = Some(index(&lines, p[1], sizes[var], "goal value")?);
    }
    lines.expect("end_goal")?;

    let nops = lines.count()?;
    let mut actions = Vec::with_capacity(nops);
    for _ in 0..nops {
        lines.expect("begin_operator")?;
        let mut a = SasAction::new(lines.next()?);
        let nprev = lines.count()?;
        for _ in 0..nprev {
            let p = lines.ints(2)?;
            let var = index(&lines, p[0], nvars, "variable")?;
            a.prevails.insert(var, index(&lines, p[1], sizes[var], "prevail value")?);
        }
        let neff = lines.count()?;
        for _ in 0..neff {
            let l = lines.next()?;
            let nums: Result<Vec<i64>, _> = l.split_whitespace().map(str::parse).collect();
            let nums = match nums {
                Ok(n) if !n.is_empty() => n,
                _ => {
                    lines.pos -= 1;
                    return lines.err(format!("malformed effect `{l}`"));
                }
            };
            if nums[0] != 0 {
                return Err(SasError::Unsupported(format!(
                    "conditional effect in operator `{}`",
                    a.name
                )));
            }
            if nums.len() != 4 {
                lines.pos -= 1;
                return lines.err(format!("malformed effect `{l}`"));
            }
            let var = index(&lines, nums[1], nvars, "variable")?;
            let pre = if nums[2] == -1 {
                None
            } else {
                Some(index(&lines, nums[2], sizes[var], "effect precondition")?)
            };
            let post = index(&lines, nums[3], sizes[var], "effect value")?;
            if a.effects.insert(var, Effect { pre, post }).is_some() {
                lines.pos -= 1;
                return lines.err(format!("two effects on var{var} in `{}`", a.name));
            }
        }
        a.cost = lines.int()?;
        lines.expect("end_operator")?;
        actions.push(a);
    }

    let naxioms = lines.count()?;
    if naxioms != 0 {
        return Err(SasError::Unsupported(format!("{naxioms} axiom rules")));
    }
    if let Some(l) = lines.peek() {
        return lines.err(format!("trailing content `{l}`"));
    }
    Ok(SasTask { variables, actions, initial, goal })
}

/// Writes a task in the same format `parse_sas` reads.
pub fn write_sas(task: &SasTask) -> String {
    let mut s = String::new();
    s.push_str("begin_version\n3\nend_version\nbegin_metric\n0\nend_metric\n");
    let _ = writeln!(s, "{}", task.variables.len());
    for v in &task.variables {
        let _ = writeln!(s, "begin_variable\n{}\n-1\n{}", v.name, v.values.len());
        for val in &v.values {
            let _ = writeln!(s, "{val}");
        }
        s.push_str("end_variable\n");
    }
    s.push_str("0\nbegin_state\n");
    for v in &task.initial {
        let _ = writeln!(s, "{v}");
    }
    s.push_str("end_state\nbegin_goal\n");
    let goals: Vec<(usize, usize)> = task
        .goal
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.map(|g| (i, g)))
        .collect();
    let _ = writeln!(s, "{}", goals.len());
    for (v, g) in goals {
        let _ = writeln!(s, "{v} {g}");
    }
    s.push_str("end_goal\n");
    let _ = writeln!(s, "{}", task.actions.len());
    for a in &task.actions {
        let _ = writeln!(s, "begin_operator\n{}\n{}", a.name, a.prevails.len());
        for (v, p) in &a.prevails {
            let _ = writeln!(s, "{v} {p}");
        }
        let _ = writeln!(s, "{}", a.effects.len());
        for (v, e) in &a.effects {
            let pre = e.pre.map_or(-1, |p| p as i64);
            let _ = writeln!(s, "0 {v} {pre} {}", e.post);
        }
        let _ = writeln!(s, "{}\nend_operator", a.cost);
    }
    s.push_str("0\n");
    s
}
