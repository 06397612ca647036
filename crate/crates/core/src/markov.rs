//! Markov classification of covariance kernels.
//!
//! A centered Gaussian process is Markov iff `R(s,u) R(t,t) = R(s,t) R(t,u)`
//! for `s <= t <= u`. Self-similar Markov kernels are multiples of the
//! canonical family, so a kernel that passes the triple test is further
//! matched against `R(1,1) R_{H,c}` by a log-log fit of `R(t,1)`.

use argmin::core::{CostFunction, Error as ArgminError, Executor};
use argmin::solver::neldermead::NelderMead;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsgmError};
use crate::gram::TimeGrid;
use crate::kernels::{eval_l, CExponent, CovKernel, Family, Kernel, ProcessSpec};

/// Doob residual at or below which a kernel is declared Markov.
pub const MARKOV_THRESHOLD: f64 = 1e-8;
/// Doob residual above which a kernel is declared non-Markov.
pub const NOT_MARKOV_THRESHOLD: f64 = 1e-4;
/// Allowed excess of the fitted `c` over `-H` before the fit is rejected.
pub const C_SLACK: f64 = 1e-6;
/// Log-scale fit residual below which `R(t,1)` counts as a pure power.
pub const POWER_FIT_TOL: f64 = 1e-6;
/// Improvement factor that flags a second power in `R(t^alpha, t)`.
pub const TWO_POWER_FACTOR: f64 = 100.0;
/// One-term fits below this log residual are already exact.
const PROFILE_NOISE_FLOOR: f64 = 1e-10;
const RESIDUAL_FLOOR: f64 = 1e-300;

/// 20 geometric points in `[0.05, 5]`.
pub fn standard_grid() -> TimeGrid {
    TimeGrid::geometric(0.05, 5.0, 20).expect("constant grid is valid")
}

/// 20 geometric points in `[0.01, 1]` for the `R(t,1)` power fit.
pub fn fit_grid() -> TimeGrid {
    TimeGrid::geometric(0.01, 1.0, 20).expect("constant grid is valid")
}

/// 40 geometric points in `[1e2, 1e6]` for the `R(sqrt t, t)` profile.
pub fn profile_grid() -> Vec<f64> {
    geometric_values(1e2, 1e6, 40)
}

/// 31 geometric points in `[1e3, 1e6]` for the `l(u)` expansion.
pub fn asym_grid() -> Vec<f64> {
    geometric_values(1e3, 1e6, 31)
}

fn geometric_values(start: f64, stop: f64, n: usize) -> Vec<f64> {
    TimeGrid::geometric(start, stop, n)
        .expect("constant grid is valid")
        .times()
        .to_vec()
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RESIDUAL_FLOOR)
}

/// `R(s,u) R(t,t) - R(s,t) R(t,u)`.
pub fn doob_numerator<K: Kernel + ?Sized>(kernel: &K, s: f64, t: f64, u: f64) -> Result<f64> {
    Ok(kernel.eval(s, u)? * kernel.eval(t, t)? - kernel.eval(s, t)? * kernel.eval(t, u)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoobResidual {
    pub max: f64,
    pub mean: f64,
    /// Triple `(s, t, u)` attaining the maximum.
    pub worst: [f64; 3],
    pub triples: usize,
}

/// Relative Doob residual over all triples `s < t < u` of the grid.
///
/// Triples with a repeated time satisfy the identity trivially and are
/// left out so that they do not dilute the mean.
pub fn doob_residual<K: Kernel + ?Sized>(kernel: &K, grid: &TimeGrid) -> Result<DoobResidual> {
    let t = grid.times();
    let d = t.len();
    if d < 3 {
        return Err(SsgmError::domain("grid", format!("Doob test needs at least 3 times, got {d}")));
    }
    if !grid.all_positive() {
        return Err(SsgmError::domain("grid", "Doob test needs positive times"));
    }
    let mut r = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v = kernel.eval(t[i], t[j]).map_err(|e| SsgmError::Entry {
                i,
                j,
                source: Box::new(e),
            })?;
            r[i * d + j] = v;
            r[j * d + i] = v;
        }
    }
    let per_outer: Vec<(f64, [f64; 3], f64, usize)> = (0..d)
        .into_par_iter()
        .map(|i| {
            let mut max = 0.0;
            let mut worst = [t[i], t[i], t[i]];
            let mut sum = 0.0;
            let mut count = 0;
            for j in i + 1..d {
                for k in j + 1..d {
                    let lhs = r[i * d + k] * r[j * d + j];
                    let rhs = r[i * d + j] * r[j * d + k];
                    let res = relative_gap(lhs, rhs);
                    if res > max {
                        max = res;
                        worst = [t[i], t[j], t[k]];
                    }
                    sum += res;
                    count += 1;
                }
            }
            (max, worst, sum, count)
        })
        .collect();
    let mut out = DoobResidual {
        max: 0.0,
        mean: 0.0,
        worst: [t[0], t[1], t[2]],
        triples: 0,
    };
    let mut sum = 0.0;
    for (max, worst, s, n) in per_outer {
        if max > out.max {
            out.max = max;
            out.worst = worst;
        }
        sum += s;
        out.triples += n;
    }
    out.mean = sum / out.triples as f64;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalFit {
    #[serde(rename = "r11")]
    pub r11_hat: f64,
    #[serde(rename = "c")]
    pub c_hat: CExponent,
    /// Largest log-scale deviation of `R(t,1)` from the fitted power.
    #[serde(rename = "residual")]
    pub regression_residual: f64,
}

/// Least-squares fit of `ln R(t,1) = ln r11 - c ln t` on `t_grid`.
pub fn fit_canonical<K: Kernel + ?Sized>(kernel: &K, t_grid: &TimeGrid) -> Result<CanonicalFit> {
    let t = t_grid.times();
    if t.len() < 10 || t[0] <= 0.0 || t_grid.max() > 1.0 {
        return Err(SsgmError::domain("t_grid", "need at least 10 times in (0, 1]"));
    }
    let r11 = kernel.eval(1.0, 1.0)?;
    if !(r11 > 0.0) {
        return Err(SsgmError::domain("kernel", format!("R(1,1) = {r11} is not positive")));
    }
    let values = t.iter().map(|&s| kernel.eval(s, 1.0)).collect::<Result<Vec<_>>>()?;
    if let Some((s, v)) = t.iter().zip(&values).find(|(_, v)| **v < 0.0) {
        return Err(SsgmError::domain(
            "kernel",
            format!("R({s}, 1) = {v} is negative; a Markov kernel has R(., 1) >= 0"),
        ));
    }
    let below_one: Vec<f64> = t.iter().zip(&values).filter(|(s, _)| **s < 1.0).map(|(_, v)| *v).collect();
    if !below_one.is_empty() && below_one.iter().all(|v| v.abs() <= 1e-12 * r11) {
        return Ok(CanonicalFit {
            r11_hat: r11,
            c_hat: CExponent::NegInfinity,
            regression_residual: 0.0,
        });
    }
    if let Some(s) = t.iter().zip(&values).find(|(_, v)| **v == 0.0).map(|(s, _)| s) {
        return Err(SsgmError::domain(
            "kernel",
            format!("R({s}, 1) = 0 while R(., 1) is not identically zero; no power law fits"),
        ));
    }
    let x: Vec<f64> = t.iter().map(|s| s.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (intercept, slope) = linear_fit(&x, &y);
    let residual = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).abs())
        .fold(0.0, f64::max);
    Ok(CanonicalFit {
        r11_hat: intercept.exp(),
        c_hat: CExponent::Finite(-slope),
        regression_residual: residual,
    })
}

/// Ordinary least squares `y = a + b x`, returned as `(a, b)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// `max |g(x+y) - g(x) g(y)|` with `g(x) = R(e^{-x}, 1) / R(1,1)`.
pub fn multiplicative_check<K: Kernel + ?Sized>(kernel: &K, xs: &[f64], ys: &[f64]) -> Result<f64> {
    let r11 = kernel.eval(1.0, 1.0)?;
    if !(r11 > 0.0) {
        return Err(SsgmError::domain("kernel", format!("R(1,1) = {r11} is not positive")));
    }
    let g = |x: f64| -> Result<f64> {
        if x == 0.0 {
            return Ok(1.0);
        }
        Ok(kernel.eval((-x).exp(), 1.0)? / r11)
    };
    let mut worst: f64 = 0.0;
    for &x in xs {
        let gx = g(x)?;
        for &y in ys {
            worst = worst.max((g(x + y)? - gx * g(y)?).abs());
        }
    }
    Ok(worst)
}

/// Default `x` and `y` values for [`multiplicative_check`].
pub fn multiplicative_grid() -> Vec<f64> {
    (0..=12).map(|k| 0.25 * k as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationResult {
    pub grid: TimeGrid,
    pub g_values: Vec<f64>,
    pub f_values: Vec<f64>,
    /// `max |R(s,t) - G(s^t) F(s v t)| / |R(s,t)|` over grid pairs.
    pub max_residual: f64,
    /// Whether `G/F` is non-decreasing along the grid.
    pub ratio_nondecreasing: bool,
}

/// `R(s,t) = G(s ^ t) F(s v t)` with `F(t_j) = R(t_1, t_j)` and
/// `G(t_j) = R(t_j, t_j) / F(t_j)`.
pub fn gf_factorize<K: Kernel + ?Sized>(kernel: &K, grid: &TimeGrid) -> Result<FactorizationResult> {
    let t = grid.times();
    let d = t.len();
    if d < 2 {
        return Err(SsgmError::domain("grid", "factorization needs at least 2 times"));
    }
    let mut r = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v = kernel.eval(t[i], t[j])?;
            if !(v > 0.0) {
                return Err(SsgmError::domain(
                    "kernel",
                    format!("R({}, {}) = {v}; the G*F form needs a kernel without zeros", t[i], t[j]),
                ));
            }
            r[i * d + j] = v;
            r[j * d + i] = v;
        }
    }
    let f: Vec<f64> = (0..d).map(|j| r[j]).collect();
    let g: Vec<f64> = (0..d).map(|j| r[j * d + j] / f[j]).collect();
    let mut max_residual: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            let model = g[i] * f[j];
            max_residual = max_residual.max((r[i * d + j] - model).abs() / r[i * d + j]);
        }
    }
    let ratio: Vec<f64> = g.iter().zip(&f).map(|(a, b)| a / b).collect();
    let ratio_nondecreasing = ratio.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    Ok(FactorizationResult {
        grid: grid.clone(),
        g_values: g,
        f_values: f,
        max_residual,
        ratio_nondecreasing,
    })
}

/// Power-law diagnostics of a kernel profile or of an `l` expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymReport {
    pub family: String,
    /// Profile exponent: the report concerns `R(t^alpha, t)`.
    pub alpha: f64,
    /// Fitted constant term (zero when the model has none).
    pub constant: f64,
    /// Fitted coefficient of the leading power term.
    pub coefficient: Option<f64>,
    /// Fitted exponent of the leading power term.
    pub exponent: Option<f64>,
    /// Max log-scale residual of the one-term fit.
    pub fit_residual: f64,
    /// Max log-scale residual of the two-power fit (profile only).
    pub two_power_residual: Option<f64>,
    pub two_power_flag: bool,
    /// Closed-form prediction `(coefficient, exponent)`, when known.
    pub predicted: Option<(f64, f64)>,
    pub predicted_constant: Option<f64>,
    /// The power term is indistinguishable from rounding noise.
    pub below_noise: bool,
}

struct TwoPower<'a> {
    ln_t: &'a [f64],
    ln_r: &'a [f64],
}

impl TwoPower<'_> {
    /// Max log residual of the best `A t^p + B t^q` for fixed exponents,
    /// with `(A, B)` from weighted least squares on `model / R - 1`.
    fn residual(&self, p: f64, q: f64) -> f64 {
        let mut m = [[0.0; 2]; 2];
        let mut rhs = [0.0; 2];
        let cols = |lt: f64, lr: f64| [(p * lt - lr).exp(), (q * lt - lr).exp()];
        for (&lt, &lr) in self.ln_t.iter().zip(self.ln_r) {
            let c = cols(lt, lr);
            for a in 0..2 {
                rhs[a] += c[a];
                for b in 0..2 {
                    m[a][b] += c[a] * c[b];
                }
            }
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if !(det.abs() > 1e-300) {
            return f64::INFINITY;
        }
        let ca = (rhs[0] * m[1][1] - rhs[1] * m[0][1]) / det;
        let cb = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
        let mut worst: f64 = 0.0;
        for (&lt, &lr) in self.ln_t.iter().zip(self.ln_r) {
            let c = cols(lt, lr);
            let ratio = ca * c[0] + cb * c[1];
            if !(ratio > 0.0) {
                return f64::INFINITY;
            }
            worst = worst.max(ratio.ln().abs());
        }
        worst
    }
}

impl CostFunction for TwoPower<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, ArgminError> {
        let r = self.residual(x[0], x[1]);
        Ok(if r.is_finite() { r } else { 1e6 })
    }
}

fn best_two_power(ln_t: &[f64], ln_r: &[f64], slope: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for delta in [-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0] {
        let problem = TwoPower { ln_t, ln_r };
        let start = vec![
            vec![slope, slope + delta],
            vec![slope + 0.05, slope + delta],
            vec![slope, slope + delta + 0.05],
        ];
        let solver = NelderMead::new(start)
            .with_sd_tolerance(1e-15)
            .map_err(|e| SsgmError::Numerical(e.to_string()))?;
        let res = Executor::new(problem, solver)
            .configure(|s| s.max_iters(4000))
            .run()
            .map_err(|e| SsgmError::Numerical(format!("two-power fit failed: {e}")))?;
        best = best.min(res.state().get_best_cost());
    }
    Ok(best)
}

/// Fits `ln R(t^alpha, t)` against `ln t` with one power and with two
/// powers; a Markov kernel shows the single power `t^{2H + c(1-alpha)}`.
pub fn alpha_diag_profile<K: Kernel + ?Sized>(kernel: &K, alpha: f64, t_values: &[f64]) -> Result<AsymReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SsgmError::domain("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if t_values.len() < 5 || t_values.iter().any(|&t| !(t >= 1.0)) {
        return Err(SsgmError::domain("t_values", "need at least 5 times, all >= 1"));
    }
    let values = t_values
        .iter()
        .map(|&t| kernel.eval(t.powf(alpha), t))
        .collect::<Result<Vec<_>>>()?;
    if values.iter().all(|&v| v == 0.0) {
        return Err(SsgmError::domain("kernel", "R(t^alpha, t) vanishes identically (white-noise branch)"));
    }
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(SsgmError::domain("kernel", "profile R(t^alpha, t) must be positive"));
    }
    let ln_t: Vec<f64> = t_values.iter().map(|t| t.ln()).collect();
    let ln_r: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (a, b) = linear_fit(&ln_t, &ln_r);
    let one = ln_t
        .iter()
        .zip(&ln_r)
        .map(|(x, y)| (y - a - b * x).abs())
        .fold(0.0, f64::max);
    let (two, flag) = if one <= PROFILE_NOISE_FLOOR {
        (one, false)
    } else {
        let two = best_two_power(&ln_t, &ln_r, b)?;
        (two, one >= TWO_POWER_FACTOR * two)
    };
    Ok(AsymReport {
        family: kernel.label(),
        alpha,
        constant: 0.0,
        coefficient: Some(a.exp()),
        exponent: Some(b),
        fit_residual: one,
        two_power_residual: Some(two),
        two_power_flag: flag,
        predicted: None,
        predicted_constant: None,
        below_noise: false,
    })
}

/// [`alpha_diag_profile`] at `alpha = 1/2`.
pub fn sqrt_diag_profile<K: Kernel + ?Sized>(kernel: &K, t_values: &[f64]) -> Result<AsymReport> {
    alpha_diag_profile(kernel, 0.5, t_values)
}

/// Closed-form large-`u` behaviour `l(u) ~ constant + a u^e` of the l-form
/// families, as `(constant, (a, e))`.
pub fn predicted_expansion(spec: &ProcessSpec) -> Option<(f64, Option<(f64, f64)>)> {
    match *spec {
        ProcessSpec::RiemannLiouville { h } => Some((0.0, Some((4.0 * h / (2.0 * h + 1.0), h - 0.5)))),
        ProcessSpec::SubFBm { h } => {
            let r11 = 2.0 - 2f64.powf(2.0 * h - 1.0);
            Some((1.0 / r11, Some((h * (1.0 - 2.0 * h) / r11, 2.0 * h - 2.0))))
        }
        ProcessSpec::BiFBm { h_tilde, k_tilde } => {
            let scale = 2f64.powf(-k_tilde);
            let pair = if h_tilde < 0.5 {
                (scale * k_tilde, 2.0 * h_tilde * k_tilde - 2.0 * h_tilde)
            } else if h_tilde == 0.5 {
                (scale * 2.0 * k_tilde, k_tilde - 1.0)
            } else {
                (scale * 2.0 * h_tilde * k_tilde, 2.0 * h_tilde * k_tilde - 1.0)
            };
            Some((0.0, Some(pair)))
        }
        ProcessSpec::FBm { h } => {
            if h == 0.5 {
                Some((1.0, None))
            } else {
                Some((0.5, Some((h, 2.0 * h - 1.0))))
            }
        }
        _ => None,
    }
}

/// Estimates `l(u) ~ constant + a u^e` on a geometric `u` grid.
///
/// Consecutive differences `l(u_{k+1}) - l(u_k) = a u_k^e (r^e - 1)` cancel
/// the constant for every sign of `e`, so `e` and `a` come from a log-log
/// fit of the differences; the constant is the mean remainder.
pub fn asym_coeff_estimate(spec: &ProcessSpec, u_values: &[f64]) -> Result<AsymReport> {
    match spec.family() {
        Family::RiemannLiouville | Family::SubFBm | Family::BiFBm | Family::FBm => {}
        other => {
            return Err(SsgmError::domain(
                "family",
                format!("{} has no l-form expansion", other_name(other)),
            ))
        }
    }
    let n = u_values.len();
    if n < 4 {
        return Err(SsgmError::domain("u_values", "need at least 4 values"));
    }
    let ratio = u_values[1] / u_values[0];
    let geometric = u_values
        .windows(2)
        .all(|w| w[0] > 0.0 && ((w[1] / w[0]) / ratio - 1.0).abs() < 1e-9);
    if !geometric || !(ratio > 1.0) {
        return Err(SsgmError::domain("u_values", "must be increasing and geometric"));
    }
    let l = u_values.iter().map(|&u| eval_l(spec, u)).collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = l.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = l.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = 64.0 * f64::EPSILON * scale;
    let (predicted_constant, predicted) = match predicted_expansion(spec) {
        Some((c, p)) => (Some(c), p),
        None => (None, None),
    };
    let base = AsymReport {
        family: spec.to_string(),
        alpha: 0.5,
        constant: 0.0,
        coefficient: None,
        exponent: None,
        fit_residual: 0.0,
        two_power_residual: None,
        two_power_flag: false,
        predicted,
        predicted_constant,
        below_noise: false,
    };
    let same_sign = diffs.iter().all(|d| d.signum() == diffs[0].signum());
    if diffs.iter().any(|d| d.abs() <= noise) || !same_sign {
        return Ok(AsymReport {
            constant: l.iter().sum::<f64>() / n as f64,
            below_noise: true,
            ..base
        });
    }
    let x: Vec<f64> = u_values[..n - 1].iter().map(|u| u.ln()).collect();
    let y: Vec<f64> = diffs.iter().map(|d| d.abs().ln()).collect();
    let (intercept, e) = linear_fit(&x, &y);
    let fit_residual = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - intercept - e * xi).abs())
        .fold(0.0, f64::max);
    let a = diffs[0].signum() * intercept.exp() / (ratio.powf(e) - 1.0);
    let constant = u_values
        .iter()
        .zip(&l)
        .map(|(u, lv)| lv - a * u.powf(e))
        .sum::<f64>()
        / n as f64;
    Ok(AsymReport {
        constant,
        coefficient: Some(a),
        exponent: Some(e),
        fit_residual,
        ..base
    })
}

fn other_name(f: Family) -> &'static str {
    f.name()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarkovVerdict {
    MarkovCanonical,
    MarkovWhiteNoise,
    NotMarkov,
    /// `R(1,1) = 0`, or the rank-one process `t^H W(1)`.
    Degenerate,
    /// Doob residual between the two thresholds.
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationSummary {
    pub residual: Option<f64>,
    pub ratio_nondecreasing: Option<bool>,
    /// Why the factorization was not computed.
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    pub kernel: String,
    pub verdict: MarkovVerdict,
    pub doob: DoobResidual,
    pub fit: Option<CanonicalFit>,
    pub mult_residual: Option<f64>,
    pub factorization: FactorizationSummary,
    pub asym: Option<AsymReport>,
    pub thresholds: [f64; 2],
}

fn verdict_from(doob: f64, h: f64, fit: Option<&CanonicalFit>) -> MarkovVerdict {
    if doob > NOT_MARKOV_THRESHOLD {
        return MarkovVerdict::NotMarkov;
    }
    if doob > MARKOV_THRESHOLD {
        return MarkovVerdict::Indeterminate;
    }
    let Some(fit) = fit else {
        return MarkovVerdict::Indeterminate;
    };
    match fit.c_hat {
        CExponent::NegInfinity => MarkovVerdict::MarkovWhiteNoise,
        CExponent::Finite(c) => {
            if !(fit.regression_residual <= POWER_FIT_TOL) {
                // Doob holds but R(t,1) is not a power: not self-similar as declared.
                MarkovVerdict::Indeterminate
            } else if c > -h + C_SLACK {
                MarkovVerdict::NotMarkov
            } else if (c + h).abs() <= C_SLACK {
                MarkovVerdict::Degenerate
            } else {
                MarkovVerdict::MarkovCanonical
            }
        }
    }
}

/// Full classification of a kernel on `grid`.
pub fn markov_test(kernel: &CovKernel, grid: &TimeGrid) -> Result<MarkovReport> {
    let doob = doob_residual(kernel, grid)?;
    let r11 = kernel.eval(1.0, 1.0)?;
    if !(r11 > 0.0) {
        return Ok(MarkovReport {
            kernel: kernel.label(),
            verdict: MarkovVerdict::Degenerate,
            doob,
            fit: None,
            mult_residual: None,
            factorization: FactorizationSummary {
                residual: None,
                ratio_nondecreasing: None,
                skipped: Some("R(1,1) is not positive".into()),
            },
            asym: None,
            thresholds: [MARKOV_THRESHOLD, NOT_MARKOV_THRESHOLD],
        });
    }
    let fit = fit_canonical(kernel, &fit_grid()).ok();
    let grid_xy = multiplicative_grid();
    let mult = multiplicative_check(kernel, &grid_xy, &grid_xy)?;
    let factorization = match gf_factorize(kernel, grid) {
        Ok(f) => FactorizationSummary {
            residual: Some(f.max_residual),
            ratio_nondecreasing: Some(f.ratio_nondecreasing),
            skipped: None,
        },
        Err(e) => FactorizationSummary {
            residual: None,
            ratio_nondecreasing: None,
            skipped: Some(e.to_string()),
        },
    };
    let asym = sqrt_diag_profile(kernel, &profile_grid()).ok();
    let verdict = verdict_from(doob.max, kernel.h(), fit.as_ref());
    Ok(MarkovReport {
        kernel: kernel.label(),
        verdict,
        doob,
        fit,
        mult_residual: Some(mult),
        factorization,
        asym,
        thresholds: [MARKOV_THRESHOLD, NOT_MARKOV_THRESHOLD],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::GFunction;

    const FBM075_TRIPLE: f64 = -0.204_445_042_265_590_8;

    fn kern(spec: ProcessSpec) -> CovKernel {
        CovKernel::new(spec).unwrap()
    }

    #[test]
    fn canonical_passes_doob() {
        let r = doob_residual(&kern(ProcessSpec::canonical(0.7, -0.9)), &standard_grid()).unwrap();
        assert!(r.max <= 1e-12, "{r:?}");
        assert_eq!(r.triples, 20 * 19 * 18 / 6);
    }

    #[test]
    fn brownian_triple_is_exact() {
        let n = doob_numerator(&kern(ProcessSpec::brownian()), 1.0, 2.0, 3.0).unwrap();
        assert_eq!(n, 0.0);
    }

    #[test]
    fn fbm_triple_matches_oracle() {
        let n = doob_numerator(&kern(ProcessSpec::FBm { h: 0.75 }), 1.0, 2.0, 3.0).unwrap();
        assert!((n - FBM075_TRIPLE).abs() < 1e-12, "{n}");
    }

    #[test]
    fn fit_recovers_canonical_parameters() {
        let f = fit_canonical(&kern(ProcessSpec::canonical(0.6, -1.3)), &fit_grid()).unwrap();
        assert!((f.c_hat.to_f64() + 1.3).abs() < 1e-10);
        assert!((f.r11_hat - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fit_white_noise() {
        let f = fit_canonical(&kern(ProcessSpec::WhiteNoise { h: 0.4 }), &fit_grid()).unwrap();
        assert_eq!(f.c_hat, CExponent::NegInfinity);
    }

    #[test]
    fn fit_fbm_is_not_a_power() {
        let f = fit_canonical(&kern(ProcessSpec::FBm { h: 0.75 }), &fit_grid()).unwrap();
        assert!(f.regression_residual > 1e-3);
    }

    #[test]
    fn fit_needs_ten_points() {
        let g = TimeGrid::geometric(0.1, 1.0, 5).unwrap();
        assert!(fit_canonical(&kern(ProcessSpec::brownian()), &g).is_err());
    }

    #[test]
    fn multiplicative_canonical_and_sfbm() {
        let xs = multiplicative_grid();
        assert!(multiplicative_check(&kern(ProcessSpec::canonical(0.8, -2.0)), &xs, &xs).unwrap() <= 1e-12);
        assert!(multiplicative_check(&kern(ProcessSpec::SubFBm { h: 0.25 }), &xs, &xs).unwrap() > 1e-3);
        assert_eq!(multiplicative_check(&kern(ProcessSpec::SubFBm { h: 0.25 }), &[0.0], &xs).unwrap(), 0.0);
    }

    #[test]
    fn factorization_brownian() {
        let g = TimeGrid::new(vec![1.0, 2.0, 4.0]).unwrap();
        let f = gf_factorize(&kern(ProcessSpec::brownian()), &g).unwrap();
        assert_eq!(f.g_values, vec![1.0, 2.0, 4.0]);
        assert_eq!(f.f_values, vec![1.0, 1.0, 1.0]);
        assert_eq!(f.max_residual, 0.0);
        assert!(f.ratio_nondecreasing);
    }

    #[test]
    fn factorization_fbm_fails() {
        let g = TimeGrid::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(gf_factorize(&kern(ProcessSpec::FBm { h: 0.75 }), &g).unwrap().max_residual > 1e-3);
    }

    #[test]
    fn factorization_rejects_zeros() {
        assert!(gf_factorize(&kern(ProcessSpec::WhiteNoise { h: 0.5 }), &standard_grid()).is_err());
    }

    #[test]
    fn profile_single_power_for_canonical() {
        let r = sqrt_diag_profile(&kern(ProcessSpec::canonical(0.6, -1.3)), &profile_grid()).unwrap();
        assert!(!r.two_power_flag);
        assert!((r.exponent.unwrap() - (1.2 - 0.65)).abs() < 1e-10);
        assert!((r.coefficient.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn profile_flags_bifbm_and_fbm() {
        let grid = profile_grid();
        for spec in [ProcessSpec::BiFBm { h_tilde: 0.5, k_tilde: 0.5 }, ProcessSpec::FBm { h: 0.75 }] {
            let r = sqrt_diag_profile(&kern(spec), &grid).unwrap();
            assert!(r.two_power_flag, "{spec}: {r:?}");
        }
    }

    #[test]
    fn asym_rl_quarter() {
        let r = asym_coeff_estimate(&ProcessSpec::RiemannLiouville { h: 0.25 }, &asym_grid()).unwrap();
        assert!((r.exponent.unwrap() + 0.25).abs() < 0.02, "{r:?}");
        assert!((r.coefficient.unwrap() / (2.0 / 3.0) - 1.0).abs() < 0.01, "{r:?}");
    }

    #[test]
    fn asym_brownian_is_flat() {
        let r = asym_coeff_estimate(&ProcessSpec::FBm { h: 0.5 }, &asym_grid()).unwrap();
        assert!(r.below_noise);
        assert!((r.constant - 1.0).abs() < 1e-14);
    }

    #[test]
    fn asym_rejects_non_lform() {
        assert!(asym_coeff_estimate(&ProcessSpec::canonical(0.5, -1.0), &asym_grid()).is_err());
    }

    #[test]
    fn verdicts() {
        let g = standard_grid();
        let v = |s| markov_test(&kern(s), &g).unwrap().verdict;
        assert_eq!(v(ProcessSpec::canonical(0.7, -0.9)), MarkovVerdict::MarkovCanonical);
        assert_eq!(v(ProcessSpec::WhiteNoise { h: 0.3 }), MarkovVerdict::MarkovWhiteNoise);
        assert_eq!(v(ProcessSpec::canonical(0.7, -0.7)), MarkovVerdict::Degenerate);
        assert_eq!(v(ProcessSpec::SubFBm { h: 0.25 }), MarkovVerdict::NotMarkov);
        assert_eq!(v(ProcessSpec::brownian()), MarkovVerdict::MarkovCanonical);
    }

    #[test]
    fn volterra_brownian_is_markov() {
        let spec = ProcessSpec::VolterraG {
            h: 0.5,
            beta: 0.0,
            g: GFunction::Const(1.0),
        };
        let g = TimeGrid::geometric(0.1, 2.0, 6).unwrap();
        let r = markov_test(&kern(spec), &g).unwrap();
        assert_eq!(r.verdict, MarkovVerdict::MarkovCanonical, "{r:?}");
    }

    #[test]
    fn verdict_rejects_c_above_minus_h() {
        let fit = CanonicalFit {
            r11_hat: 1.0,
            c_hat: CExponent::Finite(-0.2),
            regression_residual: 0.0,
        };
        assert_eq!(verdict_from(0.0, 0.5, Some(&fit)), MarkovVerdict::NotMarkov);
        assert_eq!(verdict_from(1e-6, 0.5, Some(&fit)), MarkovVerdict::Indeterminate);
    }
}
