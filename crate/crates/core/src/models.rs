//! SRIG, DSRIG and SGLIG: adaptive weights, `λ_max`, tuning grids and the map
//! from penalty parameters to the solver's dual radii.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Neighborhood, UndirectedGraph};
use crate::prox::GroupRadii;

pub const WEIGHT_FLOOR: f64 = 1e-2;
pub const WEIGHT_CAP: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Srig,
    Dsrig,
    Sglig,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Srig, ModelKind::Dsrig, ModelKind::Sglig];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Srig => "srig",
            ModelKind::Dsrig => "dsrig",
            ModelKind::Sglig => "sglig",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "srig" => Ok(ModelKind::Srig),
            "dsrig" => Ok(ModelKind::Dsrig),
            "sglig" => Ok(ModelKind::Sglig),
            other => Err(Error::invalid(format!("unknown model '{other}'"))),
        }
    }
}

/// Penalty parameters of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Srig { lambda: f64 },
    Dsrig { lambda: f64, xi: f64 },
    Sglig { lambda_star: f64, alpha: f64 },
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Srig { .. } => ModelKind::Srig,
            ModelParams::Dsrig { .. } => ModelKind::Dsrig,
            ModelParams::Sglig { .. } => ModelKind::Sglig,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ModelParams::Srig { lambda } => lambda >= 0.0 && lambda.is_finite(),
            ModelParams::Dsrig { lambda, xi } => {
                lambda >= 0.0 && lambda.is_finite() && xi >= 0.0 && xi.is_finite()
            }
            ModelParams::Sglig { lambda_star, alpha } => {
                lambda_star >= 0.0 && lambda_star.is_finite() && (0.0..=1.0).contains(&alpha)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid model parameters {self:?}")))
        }
    }
}

/// A fully specified model: parameters, per-group weights `τ_i` and group sizes `d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub params: ModelParams,
    pub weights: Vec<f64>,
    pub degrees: Vec<usize>,
}

impl ModelSpec {
    pub fn new(params: ModelParams, weights: Vec<f64>, degrees: Vec<usize>) -> Result<Self> {
        params.validate()?;
        if weights.len() != degrees.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} groups",
                weights.len(),
                degrees.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("weights must be finite and positive"));
        }
        Ok(Self {
            params,
            weights,
            degrees,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }
}

fn abs_covariances(x: &Array2<f64>, y: ArrayView1<f64>) -> Result<Array1<f64>> {
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::invalid(format!(
            "design has {n} rows but response has {}",
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::invalid("covariance needs at least two rows"));
    }
    let y_mean = y.sum() / n as f64;
    let yc = y.mapv(|v| v - y_mean);
    Ok(Array1::from_shape_fn(x.ncols(), |j| {
        let col = x.column(j);
        let mean = col.sum() / n as f64;
        let s: f64 = col.iter().zip(yc.iter()).map(|(a, b)| (a - mean) * b).sum();
        (s / (n as f64 - 1.0)).abs()
    }))
}

fn clamp_weight(w: f64) -> f64 {
    if w.is_nan() {
        WEIGHT_CAP
    } else {
        w.clamp(WEIGHT_FLOOR, WEIGHT_CAP)
    }
}

/// `τ_i = 1/|cov(X_i, y)|`, clamped to `[1e-2, 1e4]`.
pub fn srig_weights(x: &Array2<f64>, y: ArrayView1<f64>) -> Result<Vec<f64>> {
    Ok(abs_covariances(x, y)?.iter().map(|c| clamp_weight(1.0 / c)).collect())
}

/// `τ_i = √d_i / |cov(X_i, y)|`, clamped to `[1e-2, 1e4]`.
pub fn dsrig_weights(x: &Array2<f64>, y: ArrayView1<f64>, degrees: &[usize]) -> Result<Vec<f64>> {
    let cov = abs_covariances(x, y)?;
    if degrees.len() != cov.len() {
        return Err(Error::invalid("one degree per predictor is required"));
    }
    Ok(cov
        .iter()
        .zip(degrees)
        .map(|(c, &d)| clamp_weight((d as f64).sqrt() / c))
        .collect())
}

/// Weights a model kind uses by default.
pub fn default_weights(kind: ModelKind, x: &Array2<f64>, y: ArrayView1<f64>, graph: &UndirectedGraph) -> Result<Vec<f64>> {
    match kind {
        ModelKind::Srig | ModelKind::Sglig => srig_weights(x, y),
        ModelKind::Dsrig => dsrig_weights(x, y, &graph.degrees()),
    }
}

/// How penalty weights become dual radii: `radius = factor · weight / σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadiusMapping {
    /// Multiplier on every radius (2 by default).
    pub dual_radius_factor: f64,
}

impl Default for RadiusMapping {
    fn default() -> Self {
        Self {
            dual_radius_factor: 2.0,
        }
    }
}

impl RadiusMapping {
    pub fn without_factor() -> Self {
        Self {
            dual_radius_factor: 1.0,
        }
    }
}

/// Smallest SRIG `λ` whose fit is exactly zero:
/// `max_i ‖X_{N_i}ᵀy‖₂ / (n·τ_i·factor)`.
pub fn lambda_max(
    x: &Array2<f64>,
    y: ArrayView1<f64>,
    neighborhoods: &[Neighborhood],
    weights: &[f64],
    mapping: &RadiusMapping,
) -> Result<f64> {
    let n = x.nrows();
    if n != y.len() || n == 0 {
        return Err(Error::invalid("design and response sizes disagree"));
    }
    if neighborhoods.len() != weights.len() {
        return Err(Error::invalid("one weight per group is required"));
    }
    let c = x.t().dot(&y) / n as f64;
    let mut best = 0.0f64;
    for (nb, &w) in neighborhoods.iter().zip(weights) {
        let norm = nb.members.iter().map(|&j| c[j] * c[j]).sum::<f64>().sqrt();
        best = best.max(norm / (w * mapping.dual_radius_factor));
    }
    if best == 0.0 {
        log::warn!("lambda_max is zero: the response is orthogonal to every group");
    }
    Ok(best)
}

/// Sizes and ranges of the tuning grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub n_lambda: usize,
    /// λ grid size for DSRIG only; `n_lambda` when absent.
    pub dsrig_n_lambda: Option<usize>,
    pub n_xi: usize,
    pub n_alpha: usize,
    /// SGLIG uses `λ* = λ_max / c`.
    pub c: f64,
    pub xi_max: f64,
    pub lambda_min_ratio: f64,
    pub alpha_min: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_lambda: 50,
            dsrig_n_lambda: None,
            n_xi: 50,
            n_alpha: 50,
            c: 5.0,
            xi_max: 5.0,
            lambda_min_ratio: 0.01,
            alpha_min: 0.01,
        }
    }
}

/// One grid point and the earlier point whose fit seeds it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub params: ModelParams,
    pub warm_from: Option<usize>,
}

/// Grid points ordered from most to least shrinkage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub kind: ModelKind,
    pub lambda_max: f64,
    pub points: Vec<GridPoint>,
}

impl TuningGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// A grid of explicitly listed points, each fitted from zero.
    pub fn from_points(kind: ModelKind, lambda_max: f64, params: Vec<ModelParams>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::invalid("grid is empty"));
        }
        for p in &params {
            p.validate()?;
            if p.kind() != kind {
                return Err(Error::invalid("grid mixes model kinds"));
            }
        }
        Ok(Self {
            kind,
            lambda_max,
            points: params
                .into_iter()
                .map(|params| GridPoint {
                    params,
                    warm_from: None,
                })
                .collect(),
        })
    }
}

/// `n` log-spaced values from `hi` down to `lo`.
fn log_space_desc(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..n)
        .map(|k| {
            if k == 0 {
                hi
            } else if k == n - 1 {
                lo
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn build_grid(kind: ModelKind, lambda_max: f64, config: &GridConfig) -> Result<TuningGrid> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::invalid(format!("lambda_max must be positive, got {lambda_max}")));
    }
    let n_lambda = match kind {
        ModelKind::Dsrig => config.dsrig_n_lambda.unwrap_or(config.n_lambda),
        _ => config.n_lambda,
    };
    if n_lambda == 0 || config.n_xi == 0 || config.n_alpha == 0 {
        return Err(Error::invalid("grid sizes must be positive"));
    }
    if !(config.lambda_min_ratio > 0.0 && config.lambda_min_ratio <= 1.0)
        || !(config.alpha_min > 0.0 && config.alpha_min <= 1.0)
        || !(config.c > 0.0)
        || !(config.xi_max > 0.0)
    {
        return Err(Error::invalid("grid ranges are out of bounds"));
    }
    let lambdas = log_space_desc(config.lambda_min_ratio * lambda_max, lambda_max, n_lambda);
    let points = match kind {
        ModelKind::Srig => lambdas
            .iter()
            .enumerate()
            .map(|(k, &lambda)| GridPoint {
                params: ModelParams::Srig { lambda },
                warm_from: k.checked_sub(1),
            })
            .collect(),
        ModelKind::Dsrig => {
            let n_xi = config.n_xi;
            let xis: Vec<f64> = (0..n_xi)
                .map(|k| config.xi_max * (n_xi - k) as f64 / n_xi as f64)
                .collect();
            let mut pts = Vec::with_capacity(lambdas.len() * n_xi);
            for (li, &lambda) in lambdas.iter().enumerate() {
                for (xk, &xi) in xis.iter().enumerate() {
                    pts.push(GridPoint {
                        params: ModelParams::Dsrig { lambda, xi },
                        warm_from: li.checked_sub(1).map(|prev| prev * n_xi + xk),
                    });
                }
            }
            pts
        }
        ModelKind::Sglig => {
            let lambda_star = lambda_max / config.c;
            log_space_desc(config.alpha_min, 1.0, config.n_alpha)
                .into_iter()
                .enumerate()
                .map(|(k, alpha)| GridPoint {
                    params: ModelParams::Sglig { lambda_star, alpha },
                    warm_from: k.checked_sub(1),
                })
                .collect()
        }
    };
    Ok(TuningGrid {
        kind,
        lambda_max,
        points,
    })
}

/// Per-group ℓ2 and ℓ1 penalty weights `(w2_i, w∞_i)`.
pub fn penalty_weights(spec: &ModelSpec) -> (Vec<f64>, Vec<f64>) {
    let tau = &spec.weights;
    match spec.params {
        ModelParams::Srig { lambda } => (tau.iter().map(|t| lambda * t).collect(), vec![0.0; tau.len()]),
        ModelParams::Dsrig { lambda, xi } => (
            tau.iter().map(|t| lambda * t).collect(),
            vec![lambda * xi; tau.len()],
        ),
        ModelParams::Sglig { lambda_star, alpha } => {
            let l2 = lambda_star * alpha;
            let l1 = lambda_star * (1.0 - alpha);
            (
                tau.iter().map(|t| l2 * t).collect(),
                spec.degrees.iter().map(|&d| l1 * (d as f64).sqrt()).collect(),
            )
        }
    }
}

/// Dual radii for one model at step constant `sigma`.
///
/// A term with zero weight imposes no constraint (infinite radius) unless the
/// group carries no penalty at all, in which case both radii are zero.
pub fn radii_for(
    spec: &ModelSpec,
    neighborhoods: &[Neighborhood],
    p: usize,
    sigma: f64,
    mapping: &RadiusMapping,
) -> Result<GroupRadii> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("step constant must be positive, got {sigma}")));
    }
    if neighborhoods.len() != spec.weights.len() {
        return Err(Error::invalid(format!(
            "{} neighborhoods but {} weights",
            neighborhoods.len(),
            spec.weights.len()
        )));
    }
    let factor = mapping.dual_radius_factor;
    let radius = |w: f64| if w == 0.0 { f64::INFINITY } else { factor * w / sigma };
    let (w2, w1) = penalty_weights(spec);
    let mut tau_star = Vec::with_capacity(w2.len());
    let mut xi_star = Vec::with_capacity(w2.len());
    for (&a, &b) in w2.iter().zip(&w1) {
        if a == 0.0 && b == 0.0 {
            tau_star.push(0.0);
            xi_star.push(0.0);
        } else {
            tau_star.push(radius(a));
            xi_star.push(radius(b));
        }
    }
    GroupRadii::from_neighborhoods(neighborhoods, p, tau_star, xi_star)
}
