//! Fixed points of sparse column-stochastic matrices.
//!
//! Power iteration from the uniform vector is tried first. When it stalls
//! (periodic or slowly mixing chains) a closed communicating class is
//! located and solved exactly with the Grassmann-Taksar-Heyman elimination,
//! which is subtraction-free and therefore stable for stochastic matrices.
//! Any fixed point is accepted; for reducible matrices the result is one of
//! several.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column `j` lists `(i, Q[i][j])` for the nonzero entries of `Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseColumns {
    columns: Vec<Vec<(usize, f64)>>,
}

impl SparseColumns {
    /// Validates that every column is a probability vector within `1e-12`.
    pub fn new(columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = columns.len();
        if n == 0 {
            return Err(Error::Config("matrix has no columns".into()));
        }
        for (j, col) in columns.iter().enumerate() {
            let mut sum = 0.0;
            for &(i, v) in col {
                if i >= n || !(v >= 0.0) {
                    return Err(Error::Config(format!("bad entry ({i}, {j}) = {v}")));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("column {j} sums to {sum}")));
            }
        }
        Ok(SparseColumns { columns })
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<(usize, f64)>] {
        &self.columns
    }

    /// `out = Q p`.
    pub fn apply_into(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (col, &pj) in self.columns.iter().zip(p) {
            if pj == 0.0 {
                continue;
            }
            for &(i, v) in col {
                out[i] += v * pj;
            }
        }
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(p, &mut out);
        out
    }

    /// `||Q p - p||_1`.
    pub fn residual(&self, p: &[f64]) -> f64 {
        self.apply(p).iter().zip(p).map(|(a, b)| (a - b).abs()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryConfig {
    /// Target `||Q p - p||_1`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Iterations without a new best residual before giving up on power
    /// iteration.
    pub stall_window: usize,
    /// Largest dimension handled by the exact fallback.
    pub dense_fallback_max: usize,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        StationaryConfig {
            tolerance: 1e-12,
            max_iterations: 100_000,
            stall_window: 1_000,
            dense_fallback_max: 512,
        }
    }
}

impl StationaryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 || self.stall_window == 0 {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverPath {
    PowerIteration,
    ClosedClass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stationary {
    pub distribution: Vec<f64>,
    pub path: SolverPath,
    pub iterations: usize,
    pub residual: f64,
}

pub fn stationary_distribution(q: &SparseColumns, config: &StationaryConfig) -> Result<Stationary> {
    if let Some(found) = power_iteration(q, config) {
        return Ok(found);
    }
    if q.dim() > config.dense_fallback_max {
        return Err(Error::Stationary(format!(
            "power iteration did not reach {:e} and dimension {} exceeds the exact fallback limit",
            config.tolerance,
            q.dim()
        )));
    }
    let distribution = closed_class_solve(q)?;
    let residual = q.residual(&distribution);
    // GTH is accurate to a few ulps per entry; allow for that beyond the
    // power-iteration target.
    let limit = config.tolerance.max(64.0 * f64::EPSILON * q.dim() as f64);
    if residual > limit {
        return Err(Error::Stationary(format!("exact solve left residual {residual:e}")));
    }
    Ok(Stationary {
        distribution,
        path: SolverPath::ClosedClass,
        iterations: 0,
        residual,
    })
}

fn power_iteration(q: &SparseColumns, config: &StationaryConfig) -> Option<Stationary> {
    let n = q.dim();
    let mut p = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut best_at = 0;
    for iteration in 0..config.max_iterations {
        q.apply_into(&p, &mut next);
        let residual: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        if residual <= config.tolerance {
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= total);
            let residual = q.residual(&p);
            if residual <= config.tolerance {
                return Some(Stationary {
                    distribution: p,
                    path: SolverPath::PowerIteration,
                    iterations: iteration,
                    residual,
                });
            }
        }
        if residual < best {
            best = residual;
            best_at = iteration;
        } else if iteration - best_at > config.stall_window {
            return None;
        }
        std::mem::swap(&mut p, &mut next);
    }
    None
}

/// Strongly connected components of the transition graph `j -> i` for
/// `Q[i][j] > 0`, by iterative Tarjan.
fn components(q: &SparseColumns) -> Vec<Vec<usize>> {
    let n = q.dim();
    let succ: Vec<Vec<usize>> = q
        .columns()
        .iter()
        .map(|col| col.iter().filter(|e| e.1 > 0.0).map(|e| e.0).collect())
        .collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        // (node, next successor position)
        let mut work = vec![(root, 0usize)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = work.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Stationary distribution supported on the closed class with the smallest
/// member index.
fn closed_class_solve(q: &SparseColumns) -> Result<Vec<f64>> {
    let n = q.dim();
    let mut comp_of = vec![0; n];
    let comps = components(q);
    for (c, members) in comps.iter().enumerate() {
        for &v in members {
            comp_of[v] = c;
        }
    }
    let closed = comps
        .iter()
        .enumerate()
        .filter(|(c, members)| {
            members.iter().all(|&j| {
                q.columns()[j]
                    .iter()
                    .all(|&(i, v)| v == 0.0 || comp_of[i] == *c)
            })
        })
        .min_by_key(|(_, members)| members[0])
        .map(|(_, members)| members.clone())
        .ok_or_else(|| Error::Stationary("no closed class found".into()))?;

    let m = closed.len();
    let mut local = vec![usize::MAX; n];
    for (a, &v) in closed.iter().enumerate() {
        local[v] = a;
    }
    // Row-stochastic transition matrix on the class: P[a][b] = Q[b][a].
    let mut p = vec![vec![0.0; m]; m];
    for (a, &j) in closed.iter().enumerate() {
        for &(i, v) in &q.columns()[j] {
            if v > 0.0 {
                p[a][local[i]] += v;
            }
        }
    }
    let pi = gth(p)?;
    let mut out = vec![0.0; n];
    for (a, &v) in closed.iter().enumerate() {
        out[v] = pi[a];
    }
    Ok(out)
}

/// Grassmann-Taksar-Heyman elimination for an irreducible row-stochastic
/// matrix.
fn gth(mut p: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let m = p.len();
    for k in (1..m).rev() {
        let s: f64 = p[k][..k].iter().sum();
        if !(s > 0.0) {
            return Err(Error::Stationary("class is not irreducible".into()));
        }
        for i in 0..k {
            p[i][k] /= s;
        }
        for i in 0..k {
            let pik = p[i][k];
            if pik == 0.0 {
                continue;
            }
            for j in 0..k {
                let pkj = p[k][j];
                p[i][j] += pik * pkj;
            }
        }
    }
    let mut pi = vec![0.0; m];
    pi[0] = 1.0;
    for k in 1..m {
        pi[k] = (0..k).map(|i| pi[i] * p[i][k]).sum();
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    Ok(pi)
}
