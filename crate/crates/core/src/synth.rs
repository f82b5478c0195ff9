//! Synthetic graph-structured regression problems.
//!
//! A problem is built as `Ω = B + δI`, with `B` drawn from one of five graph
//! scenarios and `δ` chosen so that `cond(B + δI)` equals `p`; `Ω` is then
//! rescaled to unit diagonal. The true coefficients follow the latent
//! decomposition `β = Ω·Σ_xy` with a cross-covariance vector that is nonzero
//! on a handful of randomly chosen nodes.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{graph_from_precision, UndirectedGraph};
use crate::numerics::{
    cholesky, extreme_eigs_sym, inverse_spd, SeededRng, DEFAULT_EIG_MAX_ITER, DEFAULT_EIG_TOL,
};

/// Precision entries at or below this magnitude are not edges.
pub const EDGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    TwoClass,
    Bipartite,
    Random,
    Blockwise,
    Band,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::TwoClass,
        ScenarioKind::Bipartite,
        ScenarioKind::Random,
        ScenarioKind::Blockwise,
        ScenarioKind::Band,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::TwoClass => "two_class",
            ScenarioKind::Bipartite => "bipartite",
            ScenarioKind::Random => "random",
            ScenarioKind::Blockwise => "blockwise",
            ScenarioKind::Band => "band",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s.replace('-', "_"))
            .ok_or_else(|| Error::invalid(format!("unknown scenario '{s}'")))
    }
}

/// Scenario-specific constants. Defaults reproduce the reference simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    /// Nonzero value placed on sampled edges of `B`.
    pub edge_weight: f64,
    /// Two-class: size of the highly connected first class.
    pub active_class_size: usize,
    /// Two-class: edge probability for any pair touching the active class.
    pub active_prob: f64,
    /// Two-class: edge probability inside the inactive class.
    pub inactive_prob: f64,
    /// Bipartite: size of the first vertex set `U`.
    pub bipartite_u_size: usize,
    pub bipartite_prob: f64,
    pub random_prob: f64,
    pub n_blocks: usize,
    pub block_size: usize,
    pub block_prob: f64,
    pub band_diag: f64,
    pub band_offdiag: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            edge_weight: 0.5,
            active_class_size: 20,
            active_prob: 0.1,
            inactive_prob: 0.05,
            bipartite_u_size: 20,
            bipartite_prob: 0.1,
            random_prob: 0.05,
            n_blocks: 3,
            block_size: 10,
            block_prob: 0.5,
            band_diag: 1.333,
            band_offdiag: -0.667,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub p: usize,
    #[serde(default)]
    pub params: ScenarioParams,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, p: usize, seed: u64) -> Self {
        Self {
            kind,
            p,
            params: ScenarioParams::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pr = &self.params;
        let probs = [
            pr.active_prob,
            pr.inactive_prob,
            pr.bipartite_prob,
            pr.random_prob,
            pr.block_prob,
        ];
        if probs.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::invalid("edge probabilities must lie in [0, 1]"));
        }
        if self.p < 2 {
            return Err(Error::invalid("scenario needs at least two predictors"));
        }
        let needed = match self.kind {
            ScenarioKind::TwoClass => pr.active_class_size + 1,
            ScenarioKind::Bipartite => pr.bipartite_u_size + 1,
            ScenarioKind::Blockwise => pr.n_blocks * pr.block_size,
            ScenarioKind::Random | ScenarioKind::Band => 2,
        };
        if self.p < needed {
            return Err(Error::invalid(format!(
                "{} scenario needs p >= {needed}, got {}",
                self.kind.name(),
                self.p
            )));
        }
        Ok(())
    }

    /// Probability of an edge between `i < j`, or `None` when the pair is
    /// structurally excluded.
    fn pair_prob(&self, i: usize, j: usize) -> Option<f64> {
        let pr = &self.params;
        match self.kind {
            ScenarioKind::TwoClass => {
                let k = pr.active_class_size;
                Some(if i < k || j < k {
                    pr.active_prob
                } else {
                    pr.inactive_prob
                })
            }
            ScenarioKind::Bipartite => {
                let u = pr.bipartite_u_size;
                ((i < u) != (j < u)).then_some(pr.bipartite_prob)
            }
            ScenarioKind::Random => Some(pr.random_prob),
            ScenarioKind::Blockwise => {
                let span = pr.n_blocks * pr.block_size;
                (j < span && i / pr.block_size == j / pr.block_size).then_some(pr.block_prob)
            }
            ScenarioKind::Band => None,
        }
    }
}

/// Samples the structural matrix `B` of a scenario. Random scenarios draw one
/// Bernoulli per eligible pair of the strict upper triangle and mirror it.
pub fn build_b(spec: &ScenarioSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    let p = spec.p;
    let mut b = Array2::zeros((p, p));
    if spec.kind == ScenarioKind::Band {
        for i in 0..p {
            b[[i, i]] = spec.params.band_diag;
            if i + 1 < p {
                b[[i, i + 1]] = spec.params.band_offdiag;
                b[[i + 1, i]] = spec.params.band_offdiag;
            }
        }
        return Ok(b);
    }
    let mut rng = SeededRng::split(spec.seed, 0);
    for i in 0..p {
        for j in i + 1..p {
            if let Some(prob) = spec.pair_prob(i, j) {
                if rng.bernoulli(prob) {
                    b[[i, j]] = spec.params.edge_weight;
                    b[[j, i]] = spec.params.edge_weight;
                }
            }
        }
    }
    Ok(b)
}

/// Closed-form diagonal shift giving `cond(B + δI) = target_cond`.
pub fn delta_for_condition(b: &Array2<f64>, target_cond: f64) -> Result<f64> {
    if !(target_cond > 1.0) {
        return Err(Error::invalid("target condition number must exceed 1"));
    }
    let (lo, hi) = extreme_eigs_sym(b, DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER, 0x5eed)?;
    delta_from_extremes(lo, hi, target_cond)
}

pub fn delta_from_extremes(lambda_min: f64, lambda_max: f64, target_cond: f64) -> Result<f64> {
    if !(target_cond > 1.0) {
        return Err(Error::invalid("target condition number must exceed 1"));
    }
    if lambda_max - lambda_min <= 1e-12 * lambda_max.abs().max(1.0) {
        return Err(Error::DegenerateSpectrum(lambda_max));
    }
    Ok((lambda_max - target_cond * lambda_min) / (target_cond - 1.0))
}

/// `D^{-1/2}·Ω·D^{-1/2}` with `D = diag(Ω)`.
pub fn standardize_unit_diagonal(omega: &Array2<f64>) -> Result<Array2<f64>> {
    let (r, c) = omega.dim();
    if r != c {
        return Err(Error::invalid("matrix must be square"));
    }
    let inv_sqrt: Vec<f64> = omega
        .diag()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d > 0.0 {
                Ok(1.0 / d.sqrt())
            } else {
                Err(Error::invalid(format!("diagonal entry {i} is not positive ({d})")))
            }
        })
        .collect::<Result<_>>()?;
    let mut out = omega.clone();
    for ((i, j), v) in out.indexed_iter_mut() {
        *v *= inv_sqrt[i] * inv_sqrt[j];
    }
    for i in 0..r {
        out[[i, i]] = 1.0;
    }
    Ok(out)
}

/// Ground truth for one simulated parent graph.
#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub spec: ScenarioSpec,
    pub b: Array2<f64>,
    pub delta: f64,
    /// Unit-diagonal precision matrix.
    pub omega: Array2<f64>,
    /// `Ω⁻¹`.
    pub sigma: Array2<f64>,
    pub graph: UndirectedGraph,
    /// Nodes with nonzero cross-covariance.
    pub signal_nodes: Vec<usize>,
    pub cross_cov: Array1<f64>,
    pub beta_true: Array1<f64>,
    /// Nodes with nonzero true coefficient.
    pub support: Vec<usize>,
}

impl SyntheticProblem {
    pub fn p(&self) -> usize {
        self.spec.p
    }
}

pub fn make_problem(spec: &ScenarioSpec, n_signal: usize, c_value: f64) -> Result<SyntheticProblem> {
    let b = build_b(spec)?;
    let delta = delta_for_condition(&b, spec.p as f64)?;
    let mut raw = b.clone();
    for i in 0..spec.p {
        raw[[i, i]] += delta;
    }
    let omega = standardize_unit_diagonal(&raw)?;
    problem_from_precision(spec.clone(), b, delta, omega, n_signal, c_value)
}

/// Completes a problem from an already calibrated precision matrix.
pub fn problem_from_precision(
    spec: ScenarioSpec,
    b: Array2<f64>,
    delta: f64,
    omega: Array2<f64>,
    n_signal: usize,
    c_value: f64,
) -> Result<SyntheticProblem> {
    let p = omega.nrows();
    if n_signal > p {
        return Err(Error::invalid("more signal nodes than predictors"));
    }
    let graph = graph_from_precision(&omega, EDGE_TOL)?;
    let sigma = inverse_spd(&omega)?;
    let mut rng = SeededRng::split(spec.seed, 1);
    let mut signal_nodes = rng.sample_distinct(p, n_signal);
    signal_nodes.sort_unstable();
    let mut cross_cov = Array1::zeros(p);
    for &i in &signal_nodes {
        cross_cov[i] = c_value;
    }
    let beta_true = omega.dot(&cross_cov);
    let support = beta_true
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > 1e-12)
        .map(|(i, _)| i)
        .collect();
    Ok(SyntheticProblem {
        spec,
        b,
        delta,
        omega,
        sigma,
        graph,
        signal_nodes,
        cross_cov,
        beta_true,
        support,
    })
}

/// Per-column centering and scaling fit on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    /// Columns whose training SD fell below `1e-12`; they are centered only.
    pub constant: Vec<bool>,
    pub y_mean: f64,
    pub y_scale: f64,
}

impl Standardization {
    /// Maps standardized-scale coefficients back to the original scale.
    pub fn coefficients_to_original(&self, beta: ArrayView1<f64>) -> Array1<f64> {
        Array1::from_shape_fn(beta.len(), |j| {
            if self.constant[j] {
                0.0
            } else {
                beta[j] * self.y_scale / self.x_scale[j]
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::invalid(format!(
                "design has {} rows but response has {}",
                x.nrows(),
                y.len()
            )));
        }
        Ok(Self {
            x,
            y,
            standardization: None,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Rows `idx` of the design and response.
    pub fn rows(&self, idx: &[usize]) -> (Array2<f64>, Array1<f64>) {
        (self.x.select(Axis(0), idx), self.y.select(Axis(0), idx))
    }
}

/// Draws `n` rows `x ~ MVN(0, Σ)` and `y = x·β + ε`, `ε ~ N(0, noise_sd²)`.
pub fn sample_dataset(problem: &SyntheticProblem, n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let l = cholesky(&problem.sigma)?;
    sample_with_factor(&l, problem.beta_true.view(), n, noise_sd, seed)
}

/// Same as [`sample_dataset`] given a precomputed Cholesky factor of `Σ`.
pub fn sample_with_factor(
    l: &Array2<f64>,
    beta: ArrayView1<f64>,
    n: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    let p = l.nrows();
    let mut rng = SeededRng::new(seed);
    let z = Array2::from_shape_fn((n, p), |_| rng.normal());
    let x = z.dot(&l.t());
    let noise = Array1::from_shape_fn(n, |_| rng.normal());
    let y = x.dot(&beta) + noise * noise_sd;
    Dataset::new(x, y)
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / count as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count as f64 - 1.0);
    (mean, var.sqrt())
}

/// Centers and scales every column of `x` and `y` with statistics from `train_rows`
/// (sample SD, denominator `n - 1`), then applies the map to all rows.
pub fn standardize(dataset: &Dataset, train_rows: &[usize]) -> Result<Dataset> {
    if train_rows.len() < 2 {
        return Err(Error::invalid("standardization needs at least two training rows"));
    }
    if let Some(&bad) = train_rows.iter().find(|&&r| r >= dataset.n()) {
        return Err(Error::invalid(format!("training row {bad} out of range")));
    }
    let m = train_rows.len();
    let p = dataset.p();
    let mut x = dataset.x.clone();
    let mut x_mean = Vec::with_capacity(p);
    let mut x_scale = Vec::with_capacity(p);
    let mut constant = Vec::with_capacity(p);
    for j in 0..p {
        let col = dataset.x.column(j);
        let (mu, sd) = mean_sd(train_rows.iter().map(|&r| col[r]), m);
        let flat = !(sd >= 1e-12);
        let scale = if flat { 1.0 } else { sd };
        x.column_mut(j).mapv_inplace(|v| (v - mu) / scale);
        x_mean.push(mu);
        x_scale.push(scale);
        constant.push(flat);
    }
    let (y_mean, y_sd) = mean_sd(train_rows.iter().map(|&r| dataset.y[r]), m);
    let y_scale = if y_sd >= 1e-12 { y_sd } else { 1.0 };
    let y = dataset.y.mapv(|v| (v - y_mean) / y_scale);
    Ok(Dataset {
        x,
        y,
        standardization: Some(Standardization {
            x_mean,
            x_scale,
            constant,
            y_mean,
            y_scale,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn band_matrix_p3() {
        let b = build_b(&ScenarioSpec::new(ScenarioKind::Band, 3, 0)).unwrap();
        let expected = array![
            [1.333, -0.667, 0.0],
            [-0.667, 1.333, -0.667],
            [0.0, -0.667, 1.333]
        ];
        assert_eq!(b, expected);
    }

    #[test]
    fn bipartite_has_no_within_u_entries() {
        let b = build_b(&ScenarioSpec::new(ScenarioKind::Bipartite, 100, 4)).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(b[[i, j]], 0.0);
            }
        }
        for i in 20..100 {
            for j in 20..100 {
                assert_eq!(b[[i, j]], 0.0);
            }
        }
    }

    #[test]
    fn random_edge_count_is_binomial() {
        // Binomial(4950, 0.05): mean 247.5, sd = sqrt(4950 * 0.05 * 0.95)
        let sd = (4950.0f64 * 0.05 * 0.95).sqrt();
        for seed in 0..5 {
            let b = build_b(&ScenarioSpec::new(ScenarioKind::Random, 100, seed)).unwrap();
            let edges = (0..100)
                .flat_map(|i| (i + 1..100).map(move |j| (i, j)))
                .filter(|&(i, j)| b[[i, j]] != 0.0)
                .count() as f64;
            assert!((edges - 247.5).abs() <= 3.0 * sd, "seed {seed}: {edges} edges");
        }
    }

    #[test]
    fn blockwise_needs_thirty_nodes() {
        let err = build_b(&ScenarioSpec::new(ScenarioKind::Blockwise, 29, 0)).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn delta_closed_form() {
        let delta = delta_from_extremes(-1.0, 3.0, 100.0).unwrap();
        assert_relative_eq!(delta, 103.0 / 99.0, max_relative = 1e-15);
        assert_relative_eq!((3.0 + delta) / (-1.0 + delta), 100.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let err = delta_for_condition(&Array2::zeros((4, 4)), 10.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum(_)));
    }

    #[test]
    fn band_delta_hits_target_condition() {
        let b = build_b(&ScenarioSpec::new(ScenarioKind::Band, 100, 0)).unwrap();
        let delta = delta_for_condition(&b, 100.0).unwrap();
        let mut shifted = b.clone();
        for i in 0..100 {
            shifted[[i, i]] += delta;
        }
        let (lo, hi) = extreme_eigs_sym(&shifted, 1e-10, 10_000, 77).unwrap();
        let cond = hi / lo;
        assert!((99.0..=101.0).contains(&cond), "cond = {cond}");
    }

    #[test]
    fn unit_diagonal_examples() {
        assert_eq!(
            standardize_unit_diagonal(&array![[4.0, 0.0], [0.0, 9.0]]).unwrap(),
            Array2::<f64>::eye(2)
        );
        assert_eq!(
            standardize_unit_diagonal(&array![[4.0, 2.0], [2.0, 4.0]]).unwrap(),
            array![[1.0, 0.5], [0.5, 1.0]]
        );
        assert_eq!(standardize_unit_diagonal(&Array2::eye(3)).unwrap(), Array2::<f64>::eye(3));
        assert!(standardize_unit_diagonal(&array![[0.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn identity_precision_gives_beta_equal_to_cross_cov() {
        let spec = ScenarioSpec::new(ScenarioKind::Random, 10, 2);
        let prob =
            problem_from_precision(spec, Array2::zeros((10, 10)), 0.0, Array2::eye(10), 4, 4.0)
                .unwrap();
        assert_eq!(prob.beta_true, prob.cross_cov);
        assert_eq!(prob.signal_nodes.len(), 4);
        assert!(prob.signal_nodes.iter().all(|&i| prob.beta_true[i] == 4.0));
    }

    #[test]
    fn beta_true_matches_direct_recomputation() {
        let prob = make_problem(&ScenarioSpec::new(ScenarioKind::TwoClass, 100, 11), 4, 4.0).unwrap();
        for j in 0..100 {
            let direct: f64 = (0..100).map(|i| prob.omega[[j, i]] * prob.cross_cov[i]).sum();
            assert!((direct - prob.beta_true[j]).abs() <= 1e-12);
        }
        assert_eq!(prob.cross_cov.iter().filter(|&&c| c != 0.0).count(), 4);
    }

    #[test]
    fn identity_covariance_sample_variance() {
        let spec = ScenarioSpec::new(ScenarioKind::Random, 3, 0);
        let prob =
            problem_from_precision(spec, Array2::zeros((3, 3)), 0.0, Array2::eye(3), 1, 4.0)
                .unwrap();
        let ds = sample_dataset(&prob, 10_000, 5.0, 21).unwrap();
        for j in 0..3 {
            let col = ds.x.column(j);
            let (_, sd) = mean_sd(col.iter().copied(), 10_000);
            assert!((0.95..=1.05).contains(&(sd * sd)));
        }
    }

    #[test]
    fn noiseless_response_is_exact() {
        let prob = make_problem(&ScenarioSpec::new(ScenarioKind::Band, 20, 0), 4, 4.0).unwrap();
        let ds = sample_dataset(&prob, 50, 0.0, 3).unwrap();
        let fitted = ds.x.dot(&prob.beta_true);
        assert_eq!(fitted, ds.y);
    }

    #[test]
    fn standardize_is_idempotent() {
        let prob = make_problem(&ScenarioSpec::new(ScenarioKind::Band, 10, 0), 4, 4.0).unwrap();
        let ds = sample_dataset(&prob, 60, 5.0, 3).unwrap();
        let rows: Vec<usize> = (0..60).collect();
        let once = standardize(&ds, &rows).unwrap();
        let twice = standardize(&once, &rows).unwrap();
        for (a, b) in once.x.iter().zip(twice.x.iter()) {
            assert!((a - b).abs() <= 1e-10);
        }
        for (a, b) in once.y.iter().zip(twice.y.iter()) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn standardize_uses_training_rows_only() {
        let prob = make_problem(&ScenarioSpec::new(ScenarioKind::Band, 5, 0), 2, 4.0).unwrap();
        let ds = sample_dataset(&prob, 40, 5.0, 8).unwrap();
        let train: Vec<usize> = (0..25).collect();
        let st = standardize(&ds, &train).unwrap();
        for j in 0..5 {
            let (mu, sd) = mean_sd(train.iter().map(|&r| st.x[[r, j]]), train.len());
            assert!(mu.abs() <= 1e-10 && (sd - 1.0).abs() <= 1e-10);
        }
        let (mu, sd) = mean_sd(train.iter().map(|&r| st.y[r]), train.len());
        assert!(mu.abs() <= 1e-10 && (sd - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn constant_column_is_centered_and_flagged() {
        let x = array![[1.0, 3.0], [2.0, 3.0], [4.0, 3.0]];
        let ds = Dataset::new(x, array![1.0, 2.0, 0.0]).unwrap();
        let st = standardize(&ds, &[0, 1, 2]).unwrap();
        let rec = st.standardization.unwrap();
        assert_eq!(rec.constant, vec![false, true]);
        assert!(st.x.column(1).iter().all(|&v| v == 0.0));
    }
}
