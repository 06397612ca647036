//! p-variation of sampled paths, ergodic increment averages and the
//! deterministic limits of the generalized Volterra process.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Result, SsgmError};
use crate::gram::TimeGrid;
use crate::kernels::{f_squared_integral, weight_f, CExponent, GFunction, ProcessSpec};
use crate::quad::{self, QuadResult, DEFAULT_TOL};
use crate::rng::derive_seed;
use crate::samplers::{self, pairwise_sum};

/// Slope at or below which the p-variation is declared to vanish.
pub const VANISHING_SLOPE: f64 = -0.1;
/// Slope at or above which the p-variation is declared to diverge.
pub const DIVERGING_SLOPE: f64 = 0.1;
/// Inner resolution for integer-time Volterra paths.
pub const ERGODIC_INNER_STEPS: usize = 64;
/// Quadrature tolerance for the increment variance; the value itself can be
/// of order `1e-7`, far below the default absolute tolerance.
const INCREMENT_TOL: f64 = 1e-15;

/// `sum_k |z_{k+1} - z_k|^p` for a path sampled on `{k/n : k = 0..=n}`.
pub fn pvariation_sum(grid: &TimeGrid, path: &[f64], p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(SsgmError::domain("p", format!("must be >= 1, got {p}")));
    }
    let n = grid.len().saturating_sub(1);
    if n == 0 || !n.is_power_of_two() {
        return Err(SsgmError::domain("grid", format!("need {{k/n}} with n a power of two, got {} points", grid.len())));
    }
    if path.len() != grid.len() {
        return Err(SsgmError::domain(
            "path",
            format!("path has {} values for a grid of {}", path.len(), grid.len()),
        ));
    }
    let tol = 1e-12;
    let dyadic = grid
        .times()
        .iter()
        .enumerate()
        .all(|(k, &t)| (t - k as f64 / n as f64).abs() <= tol);
    if !dyadic {
        return Err(SsgmError::domain("grid", "times must be k/n on [0, 1]"));
    }
    let terms: Vec<f64> = path.windows(2).map(|w| (w[1] - w[0]).abs().powf(p)).collect();
    Ok(pairwise_sum(&terms))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum VariationVerdict {
    VanishingTo0,
    FiniteLimit(f64),
    Diverging,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NStat {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub spec: ProcessSpec,
    pub p: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub sums: Vec<NStat>,
    /// Slope of `ln E[S_n]` against `ln n` over the upper half of the n list.
    pub slope_estimate: f64,
    /// Self-similarity prediction `1 - pH`.
    pub theoretical_slope: f64,
    pub verdict: VariationVerdict,
    /// Variance of the limiting increment law, when it is known.
    pub sigma_j_sq: Option<f64>,
}

impl VariationReport {
    /// Header `n,mean_S_n,se_S_n` and one row per n.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,mean_S_n,se_S_n\n");
        for s in &self.sums {
            out.push_str(&format!(
                "{},{},{}\n",
                s.n,
                crate::format::sci17(s.mean),
                crate::format::sci17(s.se)
            ));
        }
        out
    }
}

fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = pairwise_sum(x) / n;
    if x.len() < 2 {
        return (mean, f64::NAN);
    }
    let sq: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
    (mean, (pairwise_sum(&sq) / (n - 1.0) / n).sqrt())
}

/// Known variance of the limiting unit increment: `R(1,1)` for stationary
/// increments (fBm, Brownian motion) and `\int_0^1 F^2` for the Volterra family.
fn limiting_increment_variance(spec: &ProcessSpec) -> Result<Option<f64>> {
    Ok(match *spec {
        ProcessSpec::FBm { .. } => Some(1.0),
        ProcessSpec::CanonicalMarkov { h, c: CExponent::Finite(c) } if h == 0.5 && c == -1.0 => Some(1.0),
        ProcessSpec::VolterraG { beta, g, .. } => Some(f_squared_integral(beta, g, DEFAULT_TOL)?),
        _ => None,
    })
}

/// Default dyadic sizes: up to `2^16` where paths cost `O(n)` (canonical and
/// white-noise time change), `2^12` for dense Cholesky and `2^10` for the
/// Volterra discretization, whose cost grows like `n^2` per path.
pub fn default_n_list(spec: &ProcessSpec) -> Vec<usize> {
    let (lo, hi) = match spec {
        ProcessSpec::CanonicalMarkov { .. } | ProcessSpec::WhiteNoise { .. } => (10, 16),
        ProcessSpec::VolterraG { .. } => (6, 10),
        _ => (8, 12),
    };
    (lo..=hi).map(|e| 1usize << e).collect()
}

/// Samples each `n` of `n_list` on `{k/n}` and classifies `E[S_n]` by the
/// log-log slope over the upper half of `n_list`.
///
/// Volterra paths use at least four inner cells per grid spacing; a single
/// cell biases the increments low by roughly 20%.
pub fn pvariation_trichotomy(
    spec: &ProcessSpec,
    p: f64,
    n_list: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<VariationReport> {
    spec.validate()?;
    if n_list.len() < 2 {
        return Err(SsgmError::domain("n_list", "need at least two values of n"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) || n_list.iter().any(|n| !n.is_power_of_two()) {
        return Err(SsgmError::domain("n_list", "must be increasing powers of two"));
    }
    if n_paths < 2 {
        return Err(SsgmError::domain("n_paths", "need at least 2 paths"));
    }
    let mut sums = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let grid = TimeGrid::dyadic_unit(n)?;
        let inner = match *spec {
            ProcessSpec::VolterraG { beta, g, .. } => {
                Some(samplers::calibrate_inner_steps(beta, g, samplers::DEFAULT_INNER_STEPS).max(4 * n))
            }
            _ => None,
        };
        let ens = samplers::sample(spec, &grid, n_paths, derive_seed(seed, n as u64), inner)?;
        let s: Vec<f64> = (0..n_paths)
            .into_par_iter()
            .map(|i| pvariation_sum(&grid, ens.path(i), p))
            .collect::<Result<Vec<_>>>()?;
        let (mean, se) = mean_se(&s);
        sums.push(NStat { n, mean, se });
    }
    let top = &sums[sums.len() / 2..];
    let top = if top.len() < 2 { &sums[sums.len() - 2..] } else { top };
    let x: Vec<f64> = top.iter().map(|s| (s.n as f64).ln()).collect();
    let y: Vec<f64> = top.iter().map(|s| s.mean.ln()).collect();
    let slope = ols_slope(&x, &y);
    let verdict = if slope <= VANISHING_SLOPE {
        VariationVerdict::VanishingTo0
    } else if slope >= DIVERGING_SLOPE {
        VariationVerdict::Diverging
    } else {
        VariationVerdict::FiniteLimit(sums.last().expect("non-empty").mean)
    };
    Ok(VariationReport {
        spec: *spec,
        p,
        n_paths,
        seed,
        sums,
        slope_estimate: slope,
        theoretical_slope: 1.0 - p * spec.hurst(),
        verdict,
        sigma_j_sq: limiting_increment_variance(spec)?,
    })
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum IncrementFn {
    AbsPow(f64),
    Square,
}

impl IncrementFn {
    fn apply(&self, x: f64) -> f64 {
        match *self {
            IncrementFn::AbsPow(p) => x.abs().powf(p),
            IncrementFn::Square => x * x,
        }
    }

    /// `E f(J)` for `J ~ N(0, sigma^2)`.
    pub fn gaussian_moment(&self, sigma_sq: f64) -> f64 {
        let p = match *self {
            IncrementFn::AbsPow(p) => p,
            IncrementFn::Square => 2.0,
        };
        sigma_sq.sqrt().powf(p) * 2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicReport {
    pub spec: ProcessSpec,
    pub f: IncrementFn,
    pub n: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Path-averaged `(1/n) sum_k f(Z_{k+1} - Z_k)`.
    pub average: f64,
    /// Standard error of `average` across paths.
    pub se: f64,
    /// `E f(J)` with `Var J = \int_0^1 F^2`.
    pub target: f64,
    pub sigma_j_sq: f64,
    /// `(1/n) sum_k E[(Z_{k+1} - Z_k)^2]` evaluated by quadrature, i.e. what
    /// the Monte Carlo average of squares estimates at this `n`.
    pub exact_mean_square: f64,
    pub inner_steps: usize,
    pub unproven_regime: bool,
}

/// Running average of `f(Z_{k+1} - Z_k)` over one long integer-time path
/// per sample, averaged over `n_paths` paths.
pub fn ergodic_average(spec: &ProcessSpec, f: IncrementFn, n: usize, n_paths: usize, seed: u64) -> Result<ErgodicReport> {
    let ProcessSpec::VolterraG { h, beta, g } = *spec else {
        return Err(SsgmError::domain("spec", "ergodic averages are defined for the volterra family"));
    };
    spec.validate()?;
    if n == 0 || n_paths < 2 {
        return Err(SsgmError::domain("n", "need n >= 1 and at least 2 paths"));
    }
    let grid = TimeGrid::new((0..=n).map(|k| k as f64).collect())?;
    let ens = samplers::sample_volterra_zg(h, beta, g, &grid, Some(ERGODIC_INNER_STEPS), n_paths, seed)?;
    let per_path: Vec<f64> = (0..n_paths)
        .map(|i| {
            let terms: Vec<f64> = ens.path(i).windows(2).map(|w| f.apply(w[1] - w[0])).collect();
            pairwise_sum(&terms) / n as f64
        })
        .collect();
    let (average, se) = mean_se(&per_path);
    let sigma_j_sq = f_squared_integral(beta, g, DEFAULT_TOL)?;
    let exact: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| increment_variance(h, beta, g, k as f64).map(|r| r.value.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(ErgodicReport {
        spec: *spec,
        f,
        n,
        n_paths,
        seed,
        average,
        se,
        target: f.gaussian_moment(sigma_j_sq),
        sigma_j_sq,
        exact_mean_square: pairwise_sum(&exact) / n as f64,
        inner_steps: ERGODIC_INNER_STEPS,
        unproven_regime: ens.unproven_regime,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementVariance {
    pub t: f64,
    /// `E[(Z_{t+1} - Z_t)^2]`.
    pub value: QuadResult,
    /// `\int_0^1 F(s)^2 ds`.
    pub limit: f64,
}

/// `E[(Z_{t+1} - Z_t)^2]` as the sum of
/// `\int_0^t [(t+1)^{H-1/2} F(s/(t+1)) - t^{H-1/2} F(s/t)]^2 ds` and
/// `\int_t^{t+1} (t+1)^{2H-1} F(s/(t+1))^2 ds`.
///
/// The first integral is evaluated as written (a square, so free of the
/// cancellation that plagues the expanded three-term form); `s = t x` and
/// `1 - x = w^{1/(beta+1)}` remove the endpoint power.
pub fn increment_variance(h: f64, beta: f64, g: GFunction, t: f64) -> Result<IncrementVariance> {
    ProcessSpec::VolterraG { h, beta, g }.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SsgmError::domain("t", format!("must be finite and >= 0, got {t}")));
    }
    let limit = f_squared_integral(beta, g, DEFAULT_TOL)?;
    let t1 = t + 1.0;
    // Second piece: (t+1)^{2H} \int_{t/(t+1)}^1 F(y)^2 dy, with 1 - y = w^{1/(2 beta + 1)}.
    let e2 = 2.0 * beta + 1.0;
    let w_max = (1.0 / t1).powf(e2);
    let tail = quad::integrate(
        |w: f64| {
            let y = w.powf(1.0 / e2);
            let gv = g.eval_complement(y);
            gv * gv / e2
        },
        0.0,
        w_max,
        INCREMENT_TOL,
    )?;
    let scale2 = t1.powf(2.0 * h);
    let mut value = scale2 * tail.value;
    let mut err = scale2 * tail.abs_error_estimate;
    if t > 0.0 {
        let rho = t / t1;
        let a1 = t1.powf(h - 0.5);
        let a0 = t.powf(h - 0.5);
        let e1 = beta + 1.0;
        let bracket = |w: f64| {
            let y = w.powf(1.0 / e1);
            let x = 1.0 - y;
            let d = a1 * weight_f(beta, g, rho * x) - a0 * y.powf(beta) * g.eval(x);
            d * d * y.powf(-beta) / e1
        };
        // Split where 1 - x = 1/t, the scale on which the two weights differ most.
        let w_split = (1.0 / t1).powf(e1);
        let lo = quad::integrate(bracket, 0.0, w_split, INCREMENT_TOL / t.max(1.0))?;
        let hi = quad::integrate(bracket, w_split, 1.0, INCREMENT_TOL / t.max(1.0))?;
        value += t * (lo.value + hi.value);
        err += t * (lo.abs_error_estimate + hi.abs_error_estimate);
    }
    Ok(IncrementVariance {
        t,
        value: QuadResult {
            value,
            abs_error_estimate: err,
        },
        limit,
    })
}

/// `t \int_0^1 F(s)[F(s) - F((1-1/t)s)] ds + (1/2) \int_0^1 F(s)^2 ds`.
pub fn int_limit_residual(beta: f64, g: GFunction, t: f64) -> Result<f64> {
    ProcessSpec::VolterraG { h: 0.25, beta, g }.validate()?;
    if !(t >= 2.0 && t.is_finite()) {
        return Err(SsgmError::domain("t", format!("must be >= 2, got {t}")));
    }
    let lambda = 1.0 - 1.0 / t;
    let e = beta + 1.0;
    let integrand = |w: f64| {
        let y = w.powf(1.0 / e);
        let x = 1.0 - y;
        let gx = g.eval(x);
        // F(s) = y^beta g(x); the Jacobian cancels y^beta.
        gx * (y.powf(beta) * gx - weight_f(beta, g, lambda * x)) / e
    };
    let split = (1.0 / t).powf(e);
    let lo = quad::integrate(integrand, 0.0, split, DEFAULT_TOL / t)?;
    let hi = quad::integrate(integrand, split, 1.0, DEFAULT_TOL / t)?;
    let limit = f_squared_integral(beta, g, DEFAULT_TOL)?;
    Ok(t * (lo.value + hi.value) + 0.5 * limit)
}
