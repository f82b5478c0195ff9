//! Neighborhood-selection graph estimation and consensus graphs.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;

/// `S(z, γ) = sign(z)·max(|z| - γ, 0)`.
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetrizationRule {
    /// Keep `{i, j}` if either regression selects the other node.
    Or,
    /// Keep `{i, j}` only if both regressions select each other.
    And,
}

impl std::str::FromStr for SymmetrizationRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "or" | "or_rule" => Ok(SymmetrizationRule::Or),
            "and" | "and_rule" => Ok(SymmetrizationRule::And),
            other => Err(Error::invalid(format!("unknown symmetrization rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MbConfig {
    pub lambda: f64,
    pub rule: SymmetrizationRule,
    /// Convergence threshold on the largest coordinate change in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for MbConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            rule: SymmetrizationRule::Or,
            tol: 1e-7,
            max_sweeps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coef: Array1<f64>,
    pub sweeps: usize,
    /// Objective after each sweep.
    pub objective_trace: Vec<f64>,
}

/// `(1/2n)‖b - Aw‖² + λ‖w‖₁`.
pub fn lasso_objective(a: &Array2<f64>, b: ArrayView1<f64>, w: ArrayView1<f64>, lambda: f64) -> f64 {
    let r = &b - &a.dot(&w);
    r.dot(&r) / (2.0 * a.nrows() as f64) + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
}

/// Cyclic coordinate descent for the ℓ1-penalized least-squares problem,
/// keeping the residual up to date between coordinate updates.
pub fn lasso_cd(a: &Array2<f64>, b: ArrayView1<f64>, lambda: f64, tol: f64, max_sweeps: usize) -> Result<LassoFit> {
    let (n, q) = a.dim();
    if b.len() != n {
        return Err(Error::invalid(format!("response has length {}, expected {n}", b.len())));
    }
    if !(lambda >= 0.0) || !(tol > 0.0) {
        return Err(Error::invalid("lasso needs lambda >= 0 and tol > 0"));
    }
    let nf = n as f64;
    let col_sq: Vec<f64> = a.axis_iter(Axis(1)).map(|c| c.dot(&c) / nf).collect();
    let mut w = Array1::<f64>::zeros(q);
    let mut resid = b.to_owned();
    let mut objective_trace = Vec::new();
    let mut last_change = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        let mut max_change = 0.0f64;
        for j in 0..q {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = a.column(j);
            let old = w[j];
            let z = col.dot(&resid) / nf + col_sq[j] * old;
            let new = soft_threshold(z, lambda) / col_sq[j];
            if new != old {
                resid.scaled_add(old - new, &col);
                w[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        let obj = resid.dot(&resid) / (2.0 * nf) + lambda * w.iter().map(|v| v.abs()).sum::<f64>();
        objective_trace.push(obj);
        last_change = max_change;
        if max_change < tol {
            return Ok(LassoFit {
                coef: w,
                sweeps: sweep,
                objective_trace,
            });
        }
    }
    Err(Error::Convergence {
        what: "lasso coordinate descent",
        iterations: max_sweeps,
        residual: last_change,
        last: w.to_vec(),
    })
}

/// Nodes selected by regressing column `j` on all other columns.
fn select_neighbors(x: &Array2<f64>, j: usize, config: &MbConfig) -> Result<Vec<usize>> {
    let others: Vec<usize> = (0..x.ncols()).filter(|&k| k != j).collect();
    let a = x.select(Axis(1), &others);
    let fit = lasso_cd(&a, x.column(j), config.lambda, config.tol, config.max_sweeps)?;
    Ok(others
        .iter()
        .zip(fit.coef.iter())
        .filter(|(_, c)| **c != 0.0)
        .map(|(&k, _)| k)
        .collect())
}

/// Meinshausen–Bühlmann neighborhood selection on standardized columns.
/// Per-node regressions run in parallel; a failure names its node.
pub fn mb_estimate(x: &Array2<f64>, config: &MbConfig) -> Result<UndirectedGraph> {
    if !(config.lambda >= 0.0) {
        return Err(Error::invalid("MB lambda must be nonnegative"));
    }
    let p = x.ncols();
    let selections: Vec<Result<Vec<usize>>> = (0..p)
        .into_par_iter()
        .map(|j| {
            select_neighbors(x, j, config).map_err(|e| Error::Node {
                node: j,
                source: Box::new(e),
            })
        })
        .collect();
    let mut selected = vec![vec![false; p]; p];
    for (j, sel) in selections.into_iter().enumerate() {
        for k in sel? {
            selected[j][k] = true;
        }
    }
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            let keep = match config.rule {
                SymmetrizationRule::Or => selected[i][j] || selected[j][i],
                SymmetrizationRule::And => selected[i][j] && selected[j][i],
            };
            if keep {
                edges.push((i, j));
            }
        }
    }
    UndirectedGraph::from_edges(p, edges)
}

/// How many of `total` graphs contain each edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeCounts {
    pub p: usize,
    /// Keyed by `(i, j)` with `i < j`; edges never seen are absent.
    pub counts: BTreeMap<(usize, usize), usize>,
    pub total: usize,
}

impl EdgeCounts {
    pub fn tally(graphs: &[UndirectedGraph]) -> Result<Self> {
        let p = match graphs.first() {
            Some(g) => g.p(),
            None => return Err(Error::invalid("no graphs to tally")),
        };
        let mut counts = BTreeMap::new();
        for (k, g) in graphs.iter().enumerate() {
            if g.p() != p {
                return Err(Error::invalid(format!(
                    "graph {k} has p = {} but the first graph has p = {p}",
                    g.p()
                )));
            }
            for e in g.edges() {
                *counts.entry(e).or_insert(0) += 1;
            }
        }
        Ok(Self {
            p,
            counts,
            total: graphs.len(),
        })
    }

    pub fn count(&self, i: usize, j: usize) -> usize {
        let key = if i < j { (i, j) } else { (j, i) };
        self.counts.get(&key).copied().unwrap_or(0)
    }

    /// Edges seen strictly more than `threshold` times.
    pub fn threshold(&self, threshold: usize) -> Result<UndirectedGraph> {
        UndirectedGraph::from_edges(
            self.p,
            self.counts.iter().filter(|(_, &c)| c > threshold).map(|(&e, _)| e),
        )
    }
}

/// Tallies `graphs` and keeps edges present in more than `threshold` of them.
pub fn consensus(graphs: &[UndirectedGraph], threshold: usize) -> Result<(EdgeCounts, UndirectedGraph)> {
    if threshold > graphs.len() {
        return Err(Error::invalid(format!(
            "threshold {threshold} exceeds the number of graphs {}",
            graphs.len()
        )));
    }
    let counts = EdgeCounts::tally(graphs)?;
    let graph = counts.threshold(threshold)?;
    Ok((counts, graph))
}
