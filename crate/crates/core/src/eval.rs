//! Data splits, grid tuning by validation error, and evaluation metrics.

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::models::{
    build_grid, default_weights, lambda_max, radii_for, GridConfig, ModelKind, ModelParams, ModelSpec,
    RadiusMapping, TuningGrid,
};
use crate::numerics::{extreme_eigs_sym, spectral_norm_sym, SeededRng, DEFAULT_EIG_MAX_ITER, DEFAULT_EIG_TOL};
use crate::solver::{fit_least_squares, LeastSquares, SolverConfig};
use crate::synth::{standardize, Dataset};

/// Coefficients with magnitude at or below this count as zero.
pub const NONZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitScheme {
    /// One seeded shuffle cut into train, validation and test blocks.
    FixedCounts {
        n_train: usize,
        n_val: usize,
        n_test: usize,
        seed: u64,
    },
    /// Seeded partition into near-equal segments; every ordered
    /// (test, validation) segment pair gives one split.
    PermutationSegments { segments: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions `0..n` after a seeded shuffle into `k` segments whose sizes differ
/// by at most one (larger segments first).
pub fn segment_partition(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rows: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut rows);
    let (base, extra) = (n / k, n % k);
    let mut out = Vec::with_capacity(k);
    let mut at = 0;
    for s in 0..k {
        let len = base + usize::from(s < extra);
        out.push(rows[at..at + len].to_vec());
        at += len;
    }
    out
}

pub fn make_splits(n: usize, scheme: &SplitScheme) -> Result<Vec<Split>> {
    match *scheme {
        SplitScheme::FixedCounts {
            n_train,
            n_val,
            n_test,
            seed,
        } => {
            if n_train + n_val + n_test > n {
                return Err(Error::invalid(format!(
                    "split {n_train}/{n_val}/{n_test} needs more than {n} rows"
                )));
            }
            let mut rows: Vec<usize> = (0..n).collect();
            SeededRng::new(seed).shuffle(&mut rows);
            Ok(vec![Split {
                train: rows[..n_train].to_vec(),
                val: rows[n_train..n_train + n_val].to_vec(),
                test: rows[n_train + n_val..n_train + n_val + n_test].to_vec(),
            }])
        }
        SplitScheme::PermutationSegments { segments, seed } => {
            if segments < 3 {
                return Err(Error::invalid("permutation splits need at least 3 segments"));
            }
            if segments > n {
                return Err(Error::invalid(format!("{segments} segments exceed {n} rows")));
            }
            let parts = segment_partition(n, segments, seed);
            let mut splits = Vec::with_capacity(segments * (segments - 1));
            for t in 0..segments {
                for v in 0..segments {
                    if v == t {
                        continue;
                    }
                    let train = (0..segments)
                        .filter(|&s| s != t && s != v)
                        .flat_map(|s| parts[s].iter().copied())
                        .collect();
                    splits.push(Split {
                        train,
                        val: parts[v].clone(),
                        test: parts[t].clone(),
                    });
                }
            }
            Ok(splits)
        }
    }
}

/// Prediction error and coefficient error of one fitted vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub l2_distance: f64,
    pub mse: f64,
    pub nonzero: usize,
}

pub fn mse(x: &Array2<f64>, y: ArrayView1<f64>, beta: ArrayView1<f64>) -> f64 {
    if y.is_empty() {
        return f64::NAN;
    }
    let r = &y - &x.dot(&beta);
    r.dot(&r) / y.len() as f64
}

pub fn l2_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

pub fn nonzero_count(beta: ArrayView1<f64>) -> usize {
    beta.iter().filter(|v| v.abs() > NONZERO_TOL).count()
}

pub fn metrics(
    beta_hat: ArrayView1<f64>,
    beta_true: ArrayView1<f64>,
    x_test: &Array2<f64>,
    y_test: ArrayView1<f64>,
) -> Result<Metrics> {
    if beta_hat.len() != beta_true.len() || x_test.ncols() != beta_hat.len() || x_test.nrows() != y_test.len() {
        return Err(Error::invalid("metric inputs have mismatched dimensions"));
    }
    Ok(Metrics {
        l2_distance: l2_distance(beta_hat, beta_true),
        mse: mse(x_test, y_test, beta_hat),
        nonzero: nonzero_count(beta_hat),
    })
}

/// Everything that shapes a tuning run besides the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TuneConfig {
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub mapping: RadiusMapping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub params: ModelParams,
    /// Validation MSE on the standardized response; infinite when the fit failed.
    pub val_mse: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub model: ModelKind,
    pub lambda_max: f64,
    pub sigma: f64,
    pub entries: Vec<GridEntry>,
    pub best_index: usize,
    pub best_params: ModelParams,
    /// Selected coefficients on the standardized scale.
    pub beta: Vec<f64>,
    /// Selected coefficients mapped back to the original data scale.
    pub beta_original: Vec<f64>,
    /// Test MSE of the standardized response.
    pub test_mse: f64,
    /// Test MSE on the original response scale.
    pub test_mse_original: f64,
    /// `‖β̂ - β_true‖₂` on the original scale, when the truth is known.
    pub l2_distance: Option<f64>,
    pub nonzero: usize,
    /// Seconds spent on the whole tuning run.
    pub wall_time: f64,
}

/// Standardizes on the training rows, fits every grid point on the training
/// rows (warm-started along the grid), selects the point with the smallest
/// validation MSE (the earliest, most-shrunk point wins ties) and evaluates it
/// on the test rows.
pub fn tune(
    dataset: &Dataset,
    graph: &UndirectedGraph,
    kind: ModelKind,
    config: &TuneConfig,
    split: &Split,
    beta_true: Option<ArrayView1<f64>>,
) -> Result<TuningReport> {
    tune_with_grid(dataset, graph, kind, config, split, beta_true, None)
}

/// [`tune`] with an optional explicit grid in place of the configured one.
pub fn tune_with_grid(
    dataset: &Dataset,
    graph: &UndirectedGraph,
    kind: ModelKind,
    config: &TuneConfig,
    split: &Split,
    beta_true: Option<ArrayView1<f64>>,
    grid: Option<TuningGrid>,
) -> Result<TuningReport> {
    let start = Instant::now();
    let p = dataset.p();
    if graph.p() != p {
        return Err(Error::invalid(format!("graph has p = {} but data has {p} columns", graph.p())));
    }
    if let Some(b) = beta_true {
        if b.len() != p {
            return Err(Error::invalid("true coefficients have the wrong length"));
        }
    }
    if split.train.is_empty() || split.val.is_empty() || split.test.is_empty() {
        return Err(Error::invalid("train, validation and test sets must be nonempty"));
    }
    let std = standardize(dataset, &split.train)?;
    let stats = std.standardization.clone().expect("standardize records its map");
    let (x_tr, y_tr) = std.rows(&split.train);
    let (x_val, y_val) = std.rows(&split.val);
    let (x_te, y_te) = std.rows(&split.test);

    let neighborhoods = graph.neighborhoods();
    let weights = default_weights(kind, &x_tr, y_tr.view(), graph)?;
    let degrees = graph.degrees();
    let lmax = lambda_max(&x_tr, y_tr.view(), &neighborhoods, &weights, &config.mapping)?;
    let grid = match grid {
        Some(g) => {
            if g.kind != kind {
                return Err(Error::invalid("grid kind does not match the model"));
            }
            g
        }
        None => build_grid(kind, lmax, &config.grid)?,
    };
    let ls = LeastSquares::new(&x_tr, y_tr.view())?;

    let mut betas: Vec<Option<Array1<f64>>> = Vec::with_capacity(grid.len());
    let mut entries = Vec::with_capacity(grid.len());
    for point in &grid.points {
        let warm = point.warm_from.and_then(|k| betas.get(k).and_then(|b| b.as_ref()));
        let attempt = ModelSpec::new(point.params, weights.clone(), degrees.clone())
            .and_then(|spec| radii_for(&spec, &neighborhoods, p, ls.sigma(), &config.mapping))
            .and_then(|radii| fit_least_squares(&ls, &radii, &config.solver, warm.map(|b| b.view())));
        match attempt {
            Ok(fit) => {
                let v = mse(&x_val, y_val.view(), fit.beta.view());
                entries.push(GridEntry {
                    params: point.params,
                    val_mse: if v.is_finite() { v } else { f64::INFINITY },
                    iterations: fit.iterations,
                    converged: fit.converged,
                    error: None,
                });
                betas.push(Some(fit.beta));
            }
            Err(e) => {
                log::warn!("{kind} grid point {:?} failed: {e}", point.params);
                entries.push(GridEntry {
                    params: point.params,
                    val_mse: f64::INFINITY,
                    iterations: 0,
                    converged: false,
                    error: Some(e.to_string()),
                });
                betas.push(None);
            }
        }
    }

    let mut best: Option<usize> = None;
    for (k, e) in entries.iter().enumerate() {
        if betas[k].is_none() {
            continue;
        }
        match best {
            Some(b) if !(e.val_mse < entries[b].val_mse) => {}
            _ => best = Some(k),
        }
    }
    let best_index = best.ok_or_else(|| Error::invalid("every grid point failed to fit"))?;
    let beta = betas[best_index].take().expect("best point has a fit");
    let beta_original = stats.coefficients_to_original(beta.view());

    let test_mse = mse(&x_te, y_te.view(), beta.view());
    let (x_te_raw, y_te_raw) = dataset.rows(&split.test);
    let intercept = stats.y_mean
        - beta_original
            .iter()
            .zip(&stats.x_mean)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    let resid = &y_te_raw - &(x_te_raw.dot(&beta_original) + intercept);
    let test_mse_original = resid.dot(&resid) / resid.len() as f64;

    Ok(TuningReport {
        model: kind,
        lambda_max: grid.lambda_max,
        sigma: ls.sigma(),
        best_params: entries[best_index].params,
        entries,
        best_index,
        nonzero: nonzero_count(beta.view()),
        l2_distance: beta_true.map(|b| l2_distance(beta_original.view(), b)),
        beta: beta.to_vec(),
        beta_original: beta_original.to_vec(),
        test_mse,
        test_mse_original,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Inputs of the finite-sample error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub sigma_noise: f64,
    /// Largest eigenvalue of `X_{N_i}ᵀX_{N_i}` over all groups.
    pub sigma_max_star: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub tau_max: f64,
    /// Number of active groups in the true decomposition.
    pub a: f64,
    pub p: f64,
    pub n: f64,
    pub kappa_l: f64,
}

/// `(36/d_min)·σ²·σ*_max·(τ_max + √d_max)²·a·(log p + d_max) / (n·κ_L)`.
pub fn error_bound(inputs: &BoundInputs) -> Result<f64> {
    let BoundInputs {
        sigma_noise,
        sigma_max_star,
        d_min,
        d_max,
        tau_max,
        a,
        p,
        n,
        kappa_l,
    } = *inputs;
    let all = [sigma_noise, sigma_max_star, d_min, d_max, tau_max, a, p, n, kappa_l];
    if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("every bound input must be positive and finite"));
    }
    let spread = tau_max + d_max.sqrt();
    Ok(36.0 / d_min * sigma_noise * sigma_noise * sigma_max_star * spread * spread * a * (p.ln() + d_max)
        / (n * kappa_l))
}

/// Bound inputs estimated from a design: `σ*_max` over the graph's groups and
/// `κ_L` as the smallest eigenvalue of `X_SᵀX_S/n` on the true support `S`.
/// The active-group count is the number of support nodes.
pub fn bound_inputs_from_design(
    x: &Array2<f64>,
    graph: &UndirectedGraph,
    weights: &[f64],
    support: &[usize],
    sigma_noise: f64,
) -> Result<BoundInputs> {
    if support.is_empty() {
        return Err(Error::invalid("the true support is empty"));
    }
    let (n, p) = x.dim();
    let mut sigma_max_star = 0.0f64;
    for nb in graph.neighborhoods() {
        let xs = x.select(Axis(1), &nb.members);
        let g = xs.t().dot(&xs);
        let s = spectral_norm_sym(&g, DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER, 0)?;
        sigma_max_star = sigma_max_star.max(s.value);
    }
    let xs = x.select(Axis(1), support);
    let restricted = xs.t().dot(&xs) / n as f64;
    let (kappa_l, _) = extreme_eigs_sym(&restricted, DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER, 0)?;
    let degrees = graph.degrees();
    Ok(BoundInputs {
        sigma_noise,
        sigma_max_star,
        d_min: *degrees.iter().min().unwrap_or(&1) as f64,
        d_max: *degrees.iter().max().unwrap_or(&1) as f64,
        tau_max: weights.iter().copied().fold(0.0, f64::max),
        a: support.len() as f64,
        p: p as f64,
        n: n as f64,
        kappa_l,
    })
}
