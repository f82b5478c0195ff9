//! Projections onto per-group ℓ2/ℓ∞ balls and the proximal operator built from them.
//!
//! The regularizer of every model in this crate is a latent overlapping-group
//! norm whose conjugate is the indicator of
//!
//! ```text
//! K = ∩_i { u : ‖u_{N_i}‖₂ ≤ τ*_i  and  ‖u_{N_i}‖∞ ≤ ξ*_i }
//! ```
//!
//! so its proximal operator is `h - P_K(h)` (Moreau decomposition). Only the
//! groups whose radii `h` violates or touches can change the projection, so the
//! projection is computed over that active set alone.
//!
//! Two projectors are available: cyclic composition of the closed-form
//! two-stage group projection (clip, then rescale), and a parallel Dykstra-like
//! scheme that converges to the exact Euclidean projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Neighborhood, UndirectedGraph};

/// Per-group radii of the dual set `K`. An infinite radius means the
/// corresponding constraint is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRadii {
    p: usize,
    groups: Vec<Vec<usize>>,
    tau_star: Vec<f64>,
    xi_star: Vec<f64>,
    covered: Vec<bool>,
}

impl GroupRadii {
    pub fn new(p: usize, groups: Vec<Vec<usize>>, tau_star: Vec<f64>, xi_star: Vec<f64>) -> Result<Self> {
        if groups.len() != tau_star.len() || groups.len() != xi_star.len() {
            return Err(Error::invalid(format!(
                "{} groups but {} ℓ2 radii and {} ℓ∞ radii",
                groups.len(),
                tau_star.len(),
                xi_star.len()
            )));
        }
        if tau_star.iter().chain(&xi_star).any(|r| !(*r >= 0.0)) {
            return Err(Error::invalid("radii must be nonnegative"));
        }
        let mut covered = vec![false; p];
        for g in &groups {
            for &j in g {
                if j >= p {
                    return Err(Error::invalid(format!("group member {j} out of range for p = {p}")));
                }
                covered[j] = true;
            }
        }
        Ok(Self {
            p,
            groups,
            tau_star,
            xi_star,
            covered,
        })
    }

    /// Groups are the closed neighborhoods of `graph`.
    pub fn from_neighborhoods(
        neighborhoods: &[Neighborhood],
        p: usize,
        tau_star: Vec<f64>,
        xi_star: Vec<f64>,
    ) -> Result<Self> {
        let groups = neighborhoods.iter().map(|n| n.members.clone()).collect();
        Self::new(p, groups, tau_star, xi_star)
    }

    /// Same radii `(tau, xi)` on every neighborhood of `graph`.
    pub fn uniform(graph: &UndirectedGraph, tau: f64, xi: f64) -> Result<Self> {
        let p = graph.p();
        Self::from_neighborhoods(&graph.neighborhoods(), p, vec![tau; p], vec![xi; p])
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn group(&self, i: usize) -> &[usize] {
        &self.groups[i]
    }

    pub fn tau_star(&self) -> &[f64] {
        &self.tau_star
    }

    pub fn xi_star(&self) -> &[f64] {
        &self.xi_star
    }

    /// Whether coordinate `j` belongs to at least one group. Uncovered
    /// coordinates are unpenalized.
    pub fn is_covered(&self, j: usize) -> bool {
        self.covered[j]
    }

    /// Largest violation of any listed group's two norm constraints.
    pub fn infeasibility(&self, x: &[f64], groups: &[usize]) -> f64 {
        groups
            .iter()
            .map(|&g| {
                let (l2, linf) = group_norms(x, &self.groups[g]);
                (l2 - self.tau_star[g]).max(linf - self.xi_star[g]).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMethod {
    /// Repeated cycles of the two-stage group projection.
    TwoStagePocs,
    /// Parallel Dykstra-like averaging with uniform weights.
    Dykstra,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectorKind {
    pub method: ProjectionMethod,
    /// Stop when successive iterates differ by less than this (Euclidean norm);
    /// Dykstra additionally needs every set projection within this of the average.
    pub tol: f64,
    pub max_iter: usize,
}

impl ProjectorKind {
    pub fn pocs() -> Self {
        Self {
            method: ProjectionMethod::TwoStagePocs,
            tol: 1e-8,
            max_iter: 200,
        }
    }

    pub fn dykstra() -> Self {
        Self {
            method: ProjectionMethod::Dykstra,
            tol: 1e-12,
            max_iter: 100_000,
        }
    }

    pub fn with_tol(mut self, tol: f64, max_iter: usize) -> Self {
        self.tol = tol;
        self.max_iter = max_iter;
        self
    }
}

impl Default for ProjectorKind {
    fn default() -> Self {
        Self::pocs()
    }
}

fn group_norms(x: &[f64], members: &[usize]) -> (f64, f64) {
    let mut sq = 0.0;
    let mut mx = 0.0f64;
    for &j in members {
        let v = x[j];
        sq += v * v;
        mx = mx.max(v.abs());
    }
    (sq.sqrt(), mx)
}

/// Coordinatewise clip to `[-xi, xi]`.
pub fn project_linf(v: &[f64], xi: f64) -> Vec<f64> {
    v.iter().map(|&x| x.clamp(-xi, xi)).collect()
}

/// Radial shrink onto the ℓ2 ball of radius `tau`.
pub fn project_l2(v: &[f64], tau: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    scale_into_l2(&mut out, tau);
    out
}

fn scale_into_l2(v: &mut [f64], tau: f64) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > tau {
        let s = tau / norm;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

/// Clip to the ℓ∞ ball, then shrink onto the ℓ2 ball. The result lies in the
/// intersection but is not always the nearest point of it.
pub fn project_group_two_stage(v: &[f64], tau: f64, xi: f64) -> Vec<f64> {
    let mut out = project_linf(v, xi);
    scale_into_l2(&mut out, tau);
    out
}

/// Exact Euclidean projection onto `{‖y‖₂ ≤ tau} ∩ {‖y‖∞ ≤ xi}`.
///
/// The minimizer has the form `y_j = clamp(s·v_j, -xi, xi)` for a scalar
/// `s ∈ (0, 1]`; `‖y(s)‖₂` is nondecreasing in `s`, so `s` is found by bisection.
pub fn project_box_ball_exact(v: &[f64], tau: f64, xi: f64) -> Vec<f64> {
    let clipped = project_linf(v, xi);
    let sq = |s: f64| -> f64 {
        v.iter()
            .map(|&x| {
                let c = (s * x).clamp(-xi, xi);
                c * c
            })
            .sum()
    };
    let tau2 = tau * tau;
    if sq(1.0) <= tau2 {
        return clipped;
    }
    if tau == 0.0 {
        return vec![0.0; v.len()];
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sq(mid) <= tau2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (lo * x).clamp(-xi, xi)).collect();
    // bisection lands on the feasible side up to rounding of the norm
    scale_into_l2(&mut out, tau);
    out
}

/// Groups whose restriction of `h` reaches either radius. A group whose
/// restriction is identically zero is never active.
pub fn active_groups(h: &[f64], radii: &GroupRadii) -> Vec<usize> {
    (0..radii.n_groups())
        .filter(|&g| {
            let (l2, linf) = group_norms(h, &radii.groups[g]);
            l2 > 0.0 && (l2 >= radii.tau_star[g] || linf >= radii.xi_star[g])
        })
        .collect()
}

fn pairwise_disjoint(radii: &GroupRadii, active: &[usize]) -> bool {
    let mut seen = vec![false; radii.p];
    for &g in active {
        for &j in &radii.groups[g] {
            if seen[j] {
                return false;
            }
            seen[j] = true;
        }
    }
    true
}

fn apply_two_stage_in_place(x: &mut [f64], members: &[usize], tau: f64, xi: f64) {
    let mut sq = 0.0;
    for &j in members {
        let c = x[j].clamp(-xi, xi);
        x[j] = c;
        sq += c * c;
    }
    let norm = sq.sqrt();
    if norm > tau {
        let s = tau / norm;
        for &j in members {
            x[j] *= s;
        }
    }
}

/// Point of `K` restricted to the `active` groups, near `h`. Coordinates outside
/// every active group are returned unchanged.
pub fn project_intersection(h: &[f64], radii: &GroupRadii, active: &[usize], projector: &ProjectorKind) -> Result<Vec<f64>> {
    if h.len() != radii.p {
        return Err(Error::invalid(format!(
            "vector has length {}, radii cover p = {}",
            h.len(),
            radii.p
        )));
    }
    if let Some(&g) = active.iter().find(|&&g| g >= radii.n_groups()) {
        return Err(Error::invalid(format!("active group {g} does not exist")));
    }
    if active.is_empty() {
        return Ok(h.to_vec());
    }
    match projector.method {
        ProjectionMethod::TwoStagePocs => pocs(h, radii, active, projector),
        ProjectionMethod::Dykstra => {
            if pairwise_disjoint(radii, active) {
                let mut x = h.to_vec();
                for &g in active {
                    let members = &radii.groups[g];
                    let sub: Vec<f64> = members.iter().map(|&j| h[j]).collect();
                    let y = project_box_ball_exact(&sub, radii.tau_star[g], radii.xi_star[g]);
                    for (&j, v) in members.iter().zip(y) {
                        x[j] = v;
                    }
                }
                Ok(x)
            } else {
                parallel_dykstra(h, radii, active, projector)
            }
        }
    }
}

fn pocs(h: &[f64], radii: &GroupRadii, active: &[usize], projector: &ProjectorKind) -> Result<Vec<f64>> {
    let mut x = h.to_vec();
    let one_pass = pairwise_disjoint(radii, active);
    let mut prev = x.clone();
    let mut change = f64::INFINITY;
    for _ in 0..projector.max_iter.max(1) {
        prev.copy_from_slice(&x);
        for &g in active {
            apply_two_stage_in_place(&mut x, &radii.groups[g], radii.tau_star[g], radii.xi_star[g]);
        }
        if one_pass {
            return Ok(x);
        }
        change = x
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if change < projector.tol {
            break;
        }
    }
    // each group step only shrinks magnitudes, so earlier groups stay feasible
    let infeasible = radii.infeasibility(&x, active);
    if infeasible > 1e-12 * (1.0 + h.iter().fold(0.0f64, |m, v| m.max(v.abs()))) || change >= projector.tol {
        return Err(Error::Convergence {
            what: "cyclic projection",
            iterations: projector.max_iter,
            residual: infeasible.max(change),
            last: x,
        });
    }
    Ok(x)
}

/// Parallel Dykstra-like iteration. Each set is one active group's
/// `ℓ2 ∩ ℓ∞` ball, projected exactly; auxiliary points agree with the
/// running average outside their group, so only group coordinates are stored.
fn parallel_dykstra(h: &[f64], radii: &GroupRadii, active: &[usize], projector: &ProjectorKind) -> Result<Vec<f64>> {
    let p = h.len();
    let m = active.len();
    let weight = 1.0 / m as f64;
    let mut count = vec![0usize; p];
    for &g in active {
        for &j in &radii.groups[g] {
            count[j] += 1;
        }
    }
    let mut x = h.to_vec();
    let mut z: Vec<Vec<f64>> = active
        .iter()
        .map(|&g| radii.groups[g].iter().map(|&j| h[j]).collect())
        .collect();
    let mut proj: Vec<Vec<f64>> = z.clone();
    let mut acc = vec![0.0; p];
    let mut change = f64::INFINITY;
    for _ in 0..projector.max_iter {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (k, &g) in active.iter().enumerate() {
            proj[k] = project_box_ball_exact(&z[k], radii.tau_star[g], radii.xi_star[g]);
            for (&j, &v) in radii.groups[g].iter().zip(&proj[k]) {
                acc[j] += v;
            }
        }
        let mut sq = 0.0;
        for j in 0..p {
            if count[j] == 0 {
                continue;
            }
            // sets not containing j contribute their (unchanged) copy of x_j
            let next = weight * (acc[j] + (m - count[j]) as f64 * x[j]);
            sq += (next - x[j]) * (next - x[j]);
            x[j] = next;
        }
        let mut spread = 0.0f64;
        for (k, &g) in active.iter().enumerate() {
            for (idx, &j) in radii.groups[g].iter().enumerate() {
                spread = spread.max((x[j] - proj[k][idx]).abs());
                z[k][idx] = x[j] + z[k][idx] - proj[k][idx];
            }
        }
        change = sq.sqrt().max(spread);
        if change < projector.tol {
            return Ok(x);
        }
    }
    let residual = radii.infeasibility(&x, active);
    Err(Error::Convergence {
        what: "parallel Dykstra projection",
        iterations: projector.max_iter,
        residual: residual.max(change),
        last: x,
    })
}

/// Output of the proximal step.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxOutput {
    pub beta: Vec<f64>,
    /// Dual point `h - beta`.
    pub projection: Vec<f64>,
    pub active: Vec<usize>,
}

/// `h - P_K(h)`, computed over the active groups of `h`. Coordinates covered by
/// no group are unpenalized: their dual component is zero and they pass through.
pub fn prox_regularizer(h: &[f64], radii: &GroupRadii, projector: &ProjectorKind) -> Result<ProxOutput> {
    let active = active_groups(h, radii);
    let mut projection = project_intersection(h, radii, &active, projector)?;
    for (j, v) in projection.iter_mut().enumerate() {
        if !radii.covered[j] {
            *v = 0.0;
        }
    }
    let beta = h.iter().zip(&projection).map(|(a, b)| a - b).collect();
    Ok(ProxOutput {
        beta,
        projection,
        active,
    })
}
