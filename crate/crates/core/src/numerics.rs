//! Dense linear-algebra kernels and the seeded random-number contract.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const DEFAULT_EIG_TOL: f64 = 1e-10;
pub const DEFAULT_EIG_MAX_ITER: usize = 10_000;

/// Deterministic random stream. Every stochastic routine takes an explicit
/// seed and builds one of these; independent sub-streams come from [`SeededRng::split`].
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
    normal: Normal,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            normal: Normal::standard(),
        }
    }

    /// Independent stream `stream` of the same seed.
    pub fn split(seed: u64, stream: u64) -> Self {
        let mut rng = Self::new(seed);
        rng.inner.set_stream(stream);
        rng
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate by inverting the normal CDF of a uniform draw.
    pub fn normal(&mut self) -> f64 {
        let u = self.uniform_open();
        self.normal.inverse_cdf(u)
    }

    pub fn bernoulli(&mut self, prob: f64) -> bool {
        self.uniform_open() < prob
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, uniformly, in draw order.
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut all: Vec<usize> = (0..n).collect();
        let k = k.min(n);
        for i in 0..k {
            let j = i + self.index(n - i);
            all.swap(i, j);
        }
        all.truncate(k);
        all
    }

    pub fn normal_vector(&mut self, len: usize) -> Array1<f64> {
        Array1::from_shape_fn(len, |_| self.normal())
    }
}

/// Largest eigenvalue estimate produced by power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub iterations: usize,
    /// `‖Mv - ρv‖ / ρ` at the returned unit vector `v`.
    pub residual: f64,
}

fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_square(m: &Array2<f64>) -> Result<usize> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::invalid(format!("expected a square matrix, got {r}x{c}")));
    }
    Ok(r)
}

/// Power iteration on a PSD matrix. The start vector is a seeded Gaussian
/// pushed through `M^(2^k)` (formed by repeated normalized squaring), which
/// collapses clustered spectra in a few dozen matrix products; plain power
/// steps with `M` then polish the estimate until the Rayleigh residual drops
/// below `tol`.
fn dominant_eig_psd(m: &Array2<f64>, tol: f64, max_iter: usize, seed: u64) -> Result<SpectralEstimate> {
    let p = check_square(m)?;
    if p == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let scale = frobenius(m);
    if !scale.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    if scale == 0.0 {
        return Ok(SpectralEstimate {
            value: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }

    let mut power = m / scale;
    let mut squarings = 0;
    for _ in 0..64 {
        let mut next = power.dot(&power);
        let norm = frobenius(&next);
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        next /= norm;
        let change = frobenius(&(&next - &power));
        power = next;
        squarings += 1;
        if change < 1e-14 {
            break;
        }
    }

    let mut rng = SeededRng::new(seed);
    let probe = rng.normal_vector(p);
    let mut v = power.dot(&probe);
    let mut norm = v.dot(&v).sqrt();
    if norm < 1e-300 {
        v = probe;
        norm = v.dot(&v).sqrt();
    }
    v /= norm;

    let mut residual = f64::INFINITY;
    for iter in 1..=max_iter {
        let w = m.dot(&v);
        let rho = v.dot(&w);
        let r = &w - &(rho * &v);
        let rnorm = r.dot(&r).sqrt();
        residual = if rho > 0.0 { rnorm / rho } else { rnorm };
        if residual <= tol {
            return Ok(SpectralEstimate {
                value: rho.max(0.0),
                iterations: squarings + iter,
                residual,
            });
        }
        let wn = w.dot(&w).sqrt();
        if wn == 0.0 {
            return Ok(SpectralEstimate {
                value: 0.0,
                iterations: squarings + iter,
                residual: 0.0,
            });
        }
        v = w / wn;
    }
    Err(Error::Convergence {
        what: "power iteration",
        iterations: squarings + max_iter,
        residual,
        last: v.to_vec(),
    })
}

/// Largest eigenvalue of a symmetric PSD matrix (its spectral norm).
pub fn spectral_norm_sym(m: &Array2<f64>, tol: f64, max_iter: usize, seed: u64) -> Result<SpectralEstimate> {
    dominant_eig_psd(m, tol, max_iter, seed)
}

/// `(λ_min, λ_max)` of a symmetric matrix.
///
/// `λ_max` comes from power iteration on `M + cI`, where `c` is the Gershgorin
/// bound that makes the shift PSD; `λ_min` from power iteration on `λ_max·I - M`.
pub fn extreme_eigs_sym(m: &Array2<f64>, tol: f64, max_iter: usize, seed: u64) -> Result<(f64, f64)> {
    let p = check_square(m)?;
    let shift = m
        .axis_iter(Axis(0))
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut shifted = m.clone();
    for i in 0..p {
        shifted[[i, i]] += shift;
    }
    let top = dominant_eig_psd(&shifted, tol, max_iter, seed)?;
    let lambda_max = top.value - shift;

    let mut flipped = -m;
    for i in 0..p {
        flipped[[i, i]] += lambda_max;
    }
    let spread = dominant_eig_psd(&flipped, tol, max_iter, seed.wrapping_add(1))?;
    let lambda_min = lambda_max - spread.value;
    Ok((lambda_min, lambda_max))
}

/// Lower-triangular `L` with `M = L·Lᵀ`.
pub fn cholesky(m: &Array2<f64>) -> Result<Array2<f64>> {
    let p = check_square(m)?;
    let mut l = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut diag = m[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: diag });
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in j + 1..p {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L·x = b` for lower-triangular `L`.
pub fn solve_lower(l: &Array2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let p = b.len();
    let mut x = Array1::zeros(p);
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solves `Lᵀ·x = b` for lower-triangular `L`.
pub fn solve_upper_transposed(l: &Array2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let p = b.len();
    let mut x = Array1::zeros(p);
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in i + 1..p {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

pub fn solve_spd(m: &Array2<f64>, b: ArrayView1<f64>) -> Result<Array1<f64>> {
    let p = check_square(m)?;
    if b.len() != p {
        return Err(Error::invalid(format!(
            "right-hand side has length {}, expected {p}",
            b.len()
        )));
    }
    let l = cholesky(m)?;
    let z = solve_lower(&l, b);
    Ok(solve_upper_transposed(&l, z.view()))
}

/// Inverse of an SPD matrix, column by column through its Cholesky factor.
pub fn inverse_spd(m: &Array2<f64>) -> Result<Array2<f64>> {
    let p = check_square(m)?;
    let l = cholesky(m)?;
    let mut inv = Array2::zeros((p, p));
    let mut e = Array1::zeros(p);
    for j in 0..p {
        e.fill(0.0);
        e[j] = 1.0;
        let z = solve_lower(&l, e.view());
        let col = solve_upper_transposed(&l, z.view());
        inv.column_mut(j).assign(&col);
    }
    // symmetrize away rounding
    let t = inv.t().to_owned();
    Ok((&inv + &t) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn spectral_norm_examples() {
        let s = spectral_norm_sym(&array![[2.0, 0.0], [0.0, 1.0]], 1e-10, 10_000, 1).unwrap();
        assert_relative_eq!(s.value, 2.0, max_relative = 1e-10);
        assert!(s.residual <= 1e-10);
        let s = spectral_norm_sym(&Array2::eye(5), 1e-10, 10_000, 1).unwrap();
        assert_relative_eq!(s.value, 1.0, max_relative = 1e-10);
        let s = spectral_norm_sym(&array![[2.0, 1.0], [1.0, 2.0]], 1e-10, 10_000, 1).unwrap();
        assert_relative_eq!(s.value, 3.0, max_relative = 1e-10);
    }

    #[test]
    fn spectral_norm_of_zero_matrix() {
        let s = spectral_norm_sym(&Array2::zeros((3, 3)), 1e-10, 10, 0).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn extreme_eig_examples() {
        let (lo, hi) = extreme_eigs_sym(&array![[3.0, 0.0], [0.0, -1.0]], 1e-10, 10_000, 3).unwrap();
        assert_relative_eq!(lo, -1.0, max_relative = 1e-9);
        assert_relative_eq!(hi, 3.0, max_relative = 1e-9);
        let (lo, hi) = extreme_eigs_sym(&Array2::eye(4), 1e-10, 10_000, 3).unwrap();
        assert_relative_eq!(lo, 1.0, max_relative = 1e-9);
        assert_relative_eq!(hi, 1.0, max_relative = 1e-9);
        let (lo, hi) = extreme_eigs_sym(&array![[0.0, 0.5], [0.5, 0.0]], 1e-10, 10_000, 3).unwrap();
        assert_relative_eq!(lo, -0.5, max_relative = 1e-9);
        assert_relative_eq!(hi, 0.5, max_relative = 1e-9);
    }

    #[test]
    fn extreme_eigs_of_long_band_matrix() {
        // tridiagonal Toeplitz: eigenvalues a + 2b cos(kπ/(p+1))
        let p = 100;
        let (a, b) = (1.333, -0.667);
        let mut m = Array2::zeros((p, p));
        for i in 0..p {
            m[[i, i]] = a;
            if i + 1 < p {
                m[[i, i + 1]] = b;
                m[[i + 1, i]] = b;
            }
        }
        let theta = std::f64::consts::PI / (p as f64 + 1.0);
        let expected_hi = a - 2.0 * b * theta.cos();
        let expected_lo = a + 2.0 * b * theta.cos();
        let (lo, hi) = extreme_eigs_sym(&m, 1e-10, 10_000, 9).unwrap();
        assert_relative_eq!(hi, expected_hi, max_relative = 1e-9);
        assert!((lo - expected_lo).abs() < 1e-9);
    }

    #[test]
    fn power_iteration_reports_non_convergence() {
        let m = array![[1.0, 0.0], [0.0, 0.5]];
        let res = spectral_norm_sym(&m, 1e-10, 0, 0);
        assert!(matches!(res, Err(Error::Convergence { .. })));
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&array![[4.0, 0.0], [0.0, 9.0]]).unwrap();
        assert_eq!(l, array![[2.0, 0.0], [0.0, 3.0]]);
        assert_eq!(cholesky(&Array2::eye(3)).unwrap(), Array2::<f64>::eye(3));
        let l = cholesky(&array![[4.0, 2.0], [2.0, 5.0]]).unwrap();
        assert_eq!(l, array![[2.0, 0.0], [1.0, 2.0]]);
    }

    #[test]
    fn cholesky_names_failing_pivot() {
        let err = cholesky(&array![[1.0, 2.0], [2.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { pivot: 1, .. }));
    }

    #[test]
    fn solve_spd_examples() {
        let x = solve_spd(&Array2::eye(3), array![1.0, 2.0, 3.0].view()).unwrap();
        assert_eq!(x, array![1.0, 2.0, 3.0]);
        let x = solve_spd(&array![[2.0, 0.0], [0.0, 4.0]], array![2.0, 8.0].view()).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 2.0, epsilon = 1e-14);
        let x = solve_spd(&array![[4.0, 2.0], [2.0, 5.0]], array![6.0, 7.0].view()).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn solve_spd_rejects_mismatched_rhs() {
        assert!(solve_spd(&Array2::eye(3), array![1.0].view()).is_err());
    }

    #[test]
    fn rng_is_deterministic_and_streams_differ() {
        let a: Vec<f64> = (0..5).map({
            let mut r = SeededRng::new(7);
            move |_| r.normal()
        }).collect();
        let b: Vec<f64> = (0..5).map({
            let mut r = SeededRng::new(7);
            move |_| r.normal()
        }).collect();
        assert_eq!(a, b);
        let mut s0 = SeededRng::split(7, 0);
        let mut s1 = SeededRng::split(7, 1);
        assert_ne!(s0.uniform_open(), s1.uniform_open());
    }

    #[test]
    fn sample_distinct_has_no_repeats() {
        let mut rng = SeededRng::new(3);
        let mut s = rng.sample_distinct(10, 4);
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|&i| i < 10));
    }
}
