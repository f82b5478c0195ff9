//! Doubly projected proximal gradient solver.
//!
//! Accelerated (FISTA) proximal gradient on `(1/2n)‖y - Xβ‖²` where the
//! proximal step is [`prox_regularizer`]: subtract the projection of the
//! gradient point onto the active groups' ℓ2/ℓ∞ ball intersection.

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{spectral_norm_sym, DEFAULT_EIG_MAX_ITER, DEFAULT_EIG_TOL};
use crate::prox::{prox_regularizer, GroupRadii, ProjectorKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Relative iterate-change tolerance.
    pub tol: f64,
    pub projector: ProjectorKind,
    /// Multiplier on the step `1/σ`. Radii must be built for `σ / step_scale`.
    pub step_scale: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-6,
            projector: ProjectorKind::default(),
            step_scale: 1.0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.step_scale > 0.0) {
            return Err(Error::invalid(
                "solver needs tol > 0, max_iter >= 1 and step_scale > 0",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub active_final: Vec<usize>,
    /// `(1/2n)‖y - Xβ^m‖²` after every iteration.
    pub loss_trace: Vec<f64>,
    /// Wall-clock seconds spent in the iteration loop.
    pub wall_time: f64,
    /// Step constant `σ = ‖XᵀX‖/n`.
    pub sigma: f64,
}

/// `σ = ‖XᵀX‖₂ / n`.
pub fn step_constant(x: &Array2<f64>) -> Result<f64> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::invalid("design matrix has no rows"));
    }
    let gram = x.t().dot(x);
    let est = spectral_norm_sym(&gram, DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER, 0)?;
    if est.value == 0.0 {
        return Err(Error::invalid("design matrix is zero"));
    }
    Ok(est.value / n as f64)
}

/// `(1/2n)‖y - Xβ‖²`.
pub fn loss(x: &Array2<f64>, y: ArrayView1<f64>, beta: ArrayView1<f64>) -> f64 {
    let r = &y - &x.dot(&beta);
    r.dot(&r) / (2.0 * x.nrows() as f64)
}

/// Sufficient statistics of the least-squares loss, shared by every fit on the
/// same training data.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// `XᵀX / n`.
    gram: Array2<f64>,
    /// `Xᵀy / n`.
    xty: Array1<f64>,
    /// `yᵀy / n`.
    yty: f64,
    sigma: f64,
}

impl LeastSquares {
    pub fn new(x: &Array2<f64>, y: ArrayView1<f64>) -> Result<Self> {
        let n = x.nrows();
        if n != y.len() {
            return Err(Error::invalid(format!(
                "design has {n} rows but response has {}",
                y.len()
            )));
        }
        let sigma = step_constant(x)?;
        let nf = n as f64;
        Ok(Self {
            gram: x.t().dot(x) / nf,
            xty: x.t().dot(&y) / nf,
            yty: y.dot(&y) / nf,
            sigma,
        })
    }

    pub fn p(&self) -> usize {
        self.xty.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gram(&self) -> &Array2<f64> {
        &self.gram
    }

    pub fn xty(&self) -> &Array1<f64> {
        &self.xty
    }

    /// Loss from the Gram form `½(βᵀGβ - 2βᵀc + yᵀy/n)`.
    pub fn loss(&self, beta: ArrayView1<f64>) -> f64 {
        let gb = self.gram.dot(&beta);
        (0.5 * (beta.dot(&gb) - 2.0 * beta.dot(&self.xty) + self.yty)).max(0.0)
    }
}

/// Fits `β` from zero.
pub fn fit(x: &Array2<f64>, y: ArrayView1<f64>, radii: &GroupRadii, config: &SolverConfig) -> Result<FitResult> {
    let ls = LeastSquares::new(x, y)?;
    fit_least_squares(&ls, radii, config, None)
}

/// Runs the accelerated iteration from `warm_start` (zero when absent).
pub fn fit_least_squares(
    ls: &LeastSquares,
    radii: &GroupRadii,
    config: &SolverConfig,
    warm_start: Option<ArrayView1<f64>>,
) -> Result<FitResult> {
    config.validate()?;
    let p = ls.p();
    if radii.p() != p {
        return Err(Error::invalid(format!(
            "radii cover p = {} but the design has {p} columns",
            radii.p()
        )));
    }
    let start = Instant::now();
    let step = config.step_scale / ls.sigma;

    let mut beta_prev = match warm_start {
        Some(w) if w.len() == p => w.to_owned(),
        Some(w) => {
            return Err(Error::invalid(format!(
                "warm start has length {}, expected {p}",
                w.len()
            )))
        }
        None => Array1::zeros(p),
    };
    let mut z = beta_prev.clone();
    let mut t = 1.0f64;
    let mut loss_trace = Vec::new();
    let mut active_final = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for m in 1..=config.max_iter {
        iterations = m;
        let grad = ls.gram.dot(&z) - &ls.xty;
        let h = &z - &(step * &grad);
        let out = prox_regularizer(h.as_slice().expect("contiguous"), radii, &config.projector)?;
        let beta = Array1::from(out.beta);
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iteration: m });
        }
        loss_trace.push(ls.loss(beta.view()));
        active_final = out.active;

        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let diff = &beta - &beta_prev;
        z = &beta + &(((t - 1.0) / t_next) * &diff);
        let change = diff.dot(&diff).sqrt();
        let scale = beta_prev.dot(&beta_prev).sqrt().max(1.0);
        beta_prev = beta;
        t = t_next;
        if change <= config.tol * scale {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        beta: beta_prev,
        iterations,
        converged,
        active_final,
        loss_trace,
        wall_time: start.elapsed().as_secs_f64(),
        sigma: ls.sigma,
    })
}
