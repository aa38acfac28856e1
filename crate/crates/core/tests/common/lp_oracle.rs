//! Brute-force references for small LPs and 0/1 programs.

use flowplan::model::{LinearConstraint, MipModel, ModelVariable, Sense, VarId};
use rand::Rng;

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn k_subsets(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        if idx[i] == i + n - k {
            return;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Optimum of the LP relaxation of a model with finite bounds by
/// enumerating every basic solution. `None` when infeasible.
pub fn vertex_enumeration(model: &MipModel) -> Option<f64> {
    let n = model.num_vars();
    if n == 0 {
        return model
            .constraints()
            .iter()
            .all(|c| c.violation(&[]) <= 1e-9)
            .then_some(0.0);
    }
    // hyperplanes: rows, then lower bounds, then upper bounds
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in model.constraints() {
        let mut a = vec![0.0; n];
        for &(j, v) in &c.terms {
            a[j] += v;
        }
        planes.push((a, c.rhs));
    }
    for (j, v) in model.variables().iter().enumerate() {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        planes.push((a.clone(), v.lower));
        planes.push((a, v.upper));
    }
    let mut best: Option<f64> = None;
    k_subsets(planes.len(), n, |sub| {
        let a = sub.iter().map(|&i| planes[i].0.clone()).collect();
        let b = sub.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            let ok = model
                .variables()
                .iter()
                .enumerate()
                .all(|(j, v)| x[j] >= v.lower - 1e-9 && x[j] <= v.upper + 1e-9)
                && model.constraints().iter().all(|c| c.violation(&x) <= 1e-9);
            if ok {
                let z = model.objective_value(&x);
                if best.map_or(true, |b| z < b) {
                    best = Some(z);
                }
            }
        }
    });
    best
}

/// Optimum over all 0/1 assignments; `None` when no assignment is feasible.
pub fn binary_enumeration(model: &MipModel) -> Option<f64> {
    let n = model.num_vars();
    let mut best: Option<f64> = None;
    for mask in 0u64..(1u64 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        if model.constraints().iter().all(|c| c.violation(&x) <= 1e-9) {
            let z = model.objective_value(&x);
            if best.map_or(true, |b| z < b) {
                best = Some(z);
            }
        }
    }
    best
}

fn random_sense(rng: &mut impl Rng) -> Sense {
    match rng.gen_range(0..5) {
        0 => Sense::Eq,
        1 | 2 => Sense::Le,
        _ => Sense::Ge,
    }
}

/// Random LP with at most 6 variables and 6 rows, integer data, finite boxes.
pub fn random_lp(rng: &mut impl Rng) -> MipModel {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(0..=6);
    let vars = (0..n)
        .map(|j| {
            let lo = rng.gen_range(-3..=1) as f64;
            let hi = lo + rng.gen_range(0..=4) as f64;
            ModelVariable::continuous(format!("x{j}"), lo, hi)
        })
        .collect();
    let rows = (0..m)
        .map(|i| {
            let mut terms: Vec<(VarId, f64)> = Vec::new();
            for j in 0..n {
                if rng.gen_bool(0.7) {
                    terms.push((j, rng.gen_range(-5..=5) as f64));
                }
            }
            LinearConstraint::new(format!("r{i}"), terms, random_sense(rng), rng.gen_range(-6..=6) as f64)
        })
        .collect();
    let obj = (0..n).map(|j| (j, rng.gen_range(-5..=5) as f64)).collect();
    MipModel::new(vars, rows, obj).unwrap()
}

/// Random 0/1 program with at most `max_vars` binaries.
pub fn random_binary_program(rng: &mut impl Rng, max_vars: usize) -> MipModel {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(1..=6);
    let vars = (0..n).map(|j| ModelVariable::binary(format!("b{j}"))).collect();
    let rows = (0..m)
        .map(|i| {
            let mut terms: Vec<(VarId, f64)> = Vec::new();
            for j in 0..n {
                if rng.gen_bool(0.5) {
                    terms.push((j, rng.gen_range(-4..=6) as f64));
                }
            }
            let rhs = rng.gen_range(-2..=8) as f64;
            LinearConstraint::new(format!("r{i}"), terms, random_sense(rng), rhs)
        })
        .collect();
    let obj = (0..n).map(|j| (j, rng.gen_range(-9..=9) as f64)).collect();
    MipModel::new(vars, rows, obj).unwrap()
}
