//! Covariance kernels of self-similar Gaussian processes.
//!
//! Closed forms for the canonical Markov family `R_{H,c}` and its white-noise
//! limit, fractional, sub-fractional and bi-fractional Brownian motion; the
//! Riemann-Liouville process and the generalized Volterra process are
//! evaluated by quadrature. All evaluators are pure.

mod spec;
mod volterra;

pub use spec::{CExponent, CValue, Family, GFunction, ProcessBlock, ProcessSpec};
pub use volterra::{isometry_residual, volterra_kernel, volterra_kernel_ln};

use statrs::function::gamma::gamma;

use crate::error::{Result, SsgmError};
use crate::quad::{self, DEFAULT_TOL};

/// Anything that evaluates a symmetric covariance-type function.
pub trait Kernel: Sync {
    fn eval(&self, s: f64, t: f64) -> Result<f64>;

    /// Short human-readable identifier.
    fn label(&self) -> String;

    /// Self-similarity exponent, when the kernel has one.
    fn hurst(&self) -> Option<f64> {
        None
    }
}

/// Evaluatable covariance `R(s,t)` of a [`ProcessSpec`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovKernel {
    spec: ProcessSpec,
    r11: f64,
    quad_tol: f64,
}

impl CovKernel {
    pub fn new(spec: ProcessSpec) -> Result<Self> {
        Self::with_tolerance(spec, DEFAULT_TOL)
    }

    /// Kernel whose quadrature-backed evaluations use absolute tolerance `tol`.
    pub fn with_tolerance(spec: ProcessSpec, tol: f64) -> Result<Self> {
        spec.validate()?;
        if !(tol > 0.0) {
            return Err(SsgmError::domain("tol", format!("must be positive, got {tol}")));
        }
        let mut k = CovKernel {
            spec,
            r11: 1.0,
            quad_tol: tol,
        };
        k.r11 = k.eval_unchecked(1.0, 1.0)?;
        Ok(k)
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn h(&self) -> f64 {
        self.spec.hurst()
    }

    /// `R(1,1)`.
    pub fn r11(&self) -> f64 {
        self.r11
    }

    fn eval_unchecked(&self, s: f64, t: f64) -> Result<f64> {
        match self.spec {
            ProcessSpec::CanonicalMarkov { h, c } => eval_canonical(h, c, s, t),
            ProcessSpec::WhiteNoise { h } => eval_canonical(h, CExponent::NegInfinity, s, t),
            ProcessSpec::FBm { h } => eval_fbm(h, s, t),
            ProcessSpec::SubFBm { h } => eval_subfbm(h, s, t),
            ProcessSpec::BiFBm { h_tilde, k_tilde } => eval_bifbm(h_tilde, k_tilde, s, t),
            ProcessSpec::RiemannLiouville { h } => eval_rl(h, s, t, self.quad_tol),
            ProcessSpec::VolterraG { h, beta, g } => eval_volterra_g(h, beta, g, s, t, self.quad_tol),
        }
    }
}

impl Kernel for CovKernel {
    fn eval(&self, s: f64, t: f64) -> Result<f64> {
        self.eval_unchecked(s, t)
    }

    fn label(&self) -> String {
        self.spec.to_string()
    }

    fn hurst(&self) -> Option<f64> {
        Some(self.spec.hurst())
    }
}

/// The two-exponent family `(s v t)^alpha / (s ^ t)^beta` (zero on the axes),
/// positive definite exactly when `alpha + beta <= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerRatioKernel {
    pub alpha: f64,
    pub beta: f64,
}

impl Kernel for PowerRatioKernel {
    fn eval(&self, s: f64, t: f64) -> Result<f64> {
        check_times(s, t)?;
        let (lo, hi) = order(s, t);
        if lo == 0.0 {
            return Ok(0.0);
        }
        Ok(hi.powf(self.alpha) / lo.powf(self.beta))
    }

    fn label(&self) -> String {
        format!("power:alpha={},beta={}", self.alpha, self.beta)
    }
}

#[inline]
fn order(s: f64, t: f64) -> (f64, f64) {
    if s <= t {
        (s, t)
    } else {
        (t, s)
    }
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if !(s >= 0.0 && t >= 0.0 && s.is_finite() && t.is_finite()) {
        return Err(SsgmError::domain(
            "time",
            format!("times must be finite and non-negative, got ({s}, {t})"),
        ));
    }
    Ok(())
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(SsgmError::domain("H", format!("must be positive, got {h}")));
    }
    Ok(())
}

/// `R_{H,c}(s,t) = (s v t)^{2H+c} (s ^ t)^{-c}`, zero on the axes; for
/// `c = -inf` the white-noise kernel `t^{2H} 1{s=t}`.
pub fn eval_canonical(h: f64, c: CExponent, s: f64, t: f64) -> Result<f64> {
    check_h(h)?;
    check_times(s, t)?;
    let (lo, hi) = order(s, t);
    match c {
        CExponent::NegInfinity => Ok(if s == t { hi.powf(2.0 * h) } else { 0.0 }),
        CExponent::Finite(c) => {
            if c > -h || !c.is_finite() {
                return Err(SsgmError::domain(
                    "c",
                    format!("canonical kernel needs c <= -H, got c = {c}, H = {h}"),
                ));
            }
            if lo == 0.0 {
                return Ok(0.0);
            }
            Ok(hi.powf(2.0 * h + c) * lo.powf(-c))
        }
    }
}

/// The canonical formula without the `c <= -H` restriction; only for
/// demonstrating that it fails to be a covariance when `c > -H`.
pub fn canonical_formula(h: f64, c: f64, s: f64, t: f64) -> f64 {
    let (lo, hi) = order(s, t);
    if lo == 0.0 {
        return 0.0;
    }
    hi.powf(2.0 * h + c) * lo.powf(-c)
}

/// Searches a geometric grid for a pair violating Cauchy-Schwarz,
/// `R(s,t)^2 > R(s,s) R(t,t)`, for the unrestricted canonical formula.
pub fn find_cauchy_schwarz_violation(h: f64, c: f64, grid: &[f64]) -> Option<(f64, f64)> {
    for (i, &s) in grid.iter().enumerate() {
        for &t in &grid[i + 1..] {
            let r = canonical_formula(h, c, s, t);
            let bound = canonical_formula(h, c, s, s) * canonical_formula(h, c, t, t);
            if r * r > bound * (1.0 + 1e-12) {
                return Some((s, t));
            }
        }
    }
    None
}

pub fn eval_fbm(h: f64, s: f64, t: f64) -> Result<f64> {
    check_unit_h(h)?;
    check_times(s, t)?;
    let (lo, hi) = order(s, t);
    if lo == 0.0 {
        return Ok(0.0);
    }
    let two_h = 2.0 * h;
    Ok(0.5 * (lo.powf(two_h) + hi.powf(two_h) - (hi - lo).powf(two_h)))
}

pub fn eval_subfbm(h: f64, s: f64, t: f64) -> Result<f64> {
    check_unit_h(h)?;
    check_times(s, t)?;
    let (lo, hi) = order(s, t);
    if lo == 0.0 {
        return Ok(0.0);
    }
    let two_h = 2.0 * h;
    Ok(lo.powf(two_h) + hi.powf(two_h)
        - 0.5 * ((lo + hi).powf(two_h) + (hi - lo).powf(two_h)))
}

pub fn eval_bifbm(h_tilde: f64, k_tilde: f64, s: f64, t: f64) -> Result<f64> {
    ProcessSpec::BiFBm { h_tilde, k_tilde }.validate()?;
    check_times(s, t)?;
    let (lo, hi) = order(s, t);
    if lo == 0.0 {
        return Ok(0.0);
    }
    let two_h = 2.0 * h_tilde;
    let sum = lo.powf(two_h) + hi.powf(two_h);
    Ok(2f64.powf(-k_tilde) * (sum.powf(k_tilde) - (hi - lo).powf(two_h * k_tilde)))
}

fn check_unit_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(SsgmError::domain("H", format!("must lie in (0, 1), got {h}")));
    }
    Ok(())
}

/// `\int_0^m (v (v + delta))^a dv` for `a > -1`, `delta >= 0`.
///
/// On `[0, min(delta, m)]` the substitution `v = L w^{1/(a+1)}` absorbs the
/// `v^a` endpoint singularity; the remainder `[delta, m]` is integrated in
/// `log v`, where the integrand is smooth.
pub(crate) fn power_product_integral(a: f64, m: f64, delta: f64, tol: f64) -> Result<f64> {
    if m <= 0.0 {
        return Ok(0.0);
    }
    if delta == 0.0 {
        return Ok(m.powf(2.0 * a + 1.0) / (2.0 * a + 1.0));
    }
    let ap1 = a + 1.0;
    let l = delta.min(m);
    let scale = l.powf(ap1) / ap1;
    let inv = 1.0 / ap1;
    let first = quad::integrate(
        |w: f64| scale * (l * w.powf(inv) + delta).powf(a),
        0.0,
        1.0,
        tol.max(f64::EPSILON * scale * (l + delta).powf(a).max(delta.powf(a))),
    )?;
    let mut total = first.value;
    if m > l {
        let (y0, y1) = (l.ln(), m.ln());
        let peak = m.powf(ap1) * (m + delta).powf(a).max(delta.powf(a));
        let second = quad::integrate(
            |y: f64| {
                let v = y.exp();
                v.powf(ap1) * (v + delta).powf(a)
            },
            y0,
            y1,
            tol.max(f64::EPSILON * peak * (y1 - y0)),
        )?;
        total += second.value;
    }
    Ok(total)
}

/// Riemann-Liouville covariance
/// `Gamma(H+1/2)^{-2} \int_0^{s^t} ((s-r)(t-r))^{H-1/2} dr`.
pub fn eval_rl(h: f64, s: f64, t: f64, tol: f64) -> Result<f64> {
    check_h(h)?;
    check_times(s, t)?;
    if !(tol > 0.0) {
        return Err(SsgmError::domain("tol", format!("must be positive, got {tol}")));
    }
    let (lo, hi) = order(s, t);
    if lo == 0.0 {
        return Ok(0.0);
    }
    let g = gamma(h + 0.5);
    let norm = 1.0 / (g * g);
    let integral = power_product_integral(h - 0.5, lo, hi - lo, tol / norm)?;
    Ok(norm * integral)
}

/// Covariance of `t^{H-1/2} \int_0^t F(s/t) dB_s` with `F(x) = (1-x)^beta g(x)`:
/// for `s <= t`, `(st)^{H-1/2} s \int_0^1 F(x) F(x s/t) dx`.
pub fn eval_volterra_g(h: f64, beta: f64, g: GFunction, s: f64, t: f64, tol: f64) -> Result<f64> {
    ProcessSpec::VolterraG { h, beta, g }.validate()?;
    check_times(s, t)?;
    let (lo, hi) = order(s, t);
    if lo == 0.0 {
        return Ok(0.0);
    }
    let rho = lo / hi;
    let prefactor = (lo * hi).powf(h - 0.5) * lo;
    let inner = weight_overlap(beta, g, rho, tol / prefactor.max(f64::MIN_POSITIVE))?;
    Ok(prefactor * inner)
}

/// `F(x) = (1-x)^beta g(x)`.
pub fn weight_f(beta: f64, g: GFunction, x: f64) -> f64 {
    if x >= 1.0 {
        return if beta > 0.0 {
            0.0
        } else if beta == 0.0 {
            g.eval_complement(0.0)
        } else {
            f64::INFINITY
        };
    }
    (1.0 - x).powf(beta) * g.eval(x)
}

/// `\int_0^1 F(x) F(rho x) dx`, with the `(1-x)` endpoint removed by the
/// substitution `1 - x = w^{1/(e+1)}` (`e = beta`, or `2 beta` when `rho = 1`).
pub(crate) fn weight_overlap(beta: f64, g: GFunction, rho: f64, tol: f64) -> Result<f64> {
    let tol = tol.max(1e-15);
    if rho >= 1.0 {
        let e = 2.0 * beta;
        let inv = 1.0 / (e + 1.0);
        let r = quad::integrate(
            |w: f64| {
                let y = w.powf(inv);
                let gv = g.eval_complement(y);
                gv * gv * inv
            },
            0.0,
            1.0,
            tol,
        )?;
        return Ok(r.value);
    }
    let inv = 1.0 / (beta + 1.0);
    let r = quad::integrate(
        |w: f64| {
            let y = w.powf(inv);
            let x = 1.0 - y;
            g.eval_complement(y) * weight_f(beta, g, rho * x) * inv
        },
        0.0,
        1.0,
        tol,
    )?;
    Ok(r.value)
}

/// `\int_0^1 F(s)^2 ds`, the variance of the Volterra process at time one.
pub fn f_squared_integral(beta: f64, g: GFunction, tol: f64) -> Result<f64> {
    ProcessSpec::VolterraG { h: 0.25, beta, g }.validate()?;
    weight_overlap(beta, g, 1.0, tol)
}

/// The normalized shape function `l` of an l-form kernel,
/// `R(s, s(1+u)) = R(1,1) s^{2H} l(u)` with `l(0) = 1`.
///
/// Closed forms are rewritten with `expm1`/`ln_1p` so that the decaying
/// terms stay accurate for large `u`.
pub fn eval_l(spec: &ProcessSpec, u: f64) -> Result<f64> {
    spec.validate()?;
    if !(u >= 0.0 && u.is_finite()) {
        return Err(SsgmError::domain("u", format!("must be finite and >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(1.0);
    }
    match *spec {
        ProcessSpec::FBm { h } => Ok(0.5 * (1.0 + forward_power_difference(2.0 * h, u))),
        ProcessSpec::SubFBm { h } => {
            let two_h = 2.0 * h;
            let r11 = 2.0 - 2f64.powf(two_h - 1.0);
            let second =
                forward_power_difference(two_h, u + 1.0) - forward_power_difference(two_h, u);
            Ok((1.0 - 0.5 * second) / r11)
        }
        ProcessSpec::BiFBm { h_tilde, k_tilde } => {
            let two_h = 2.0 * h_tilde;
            // (1 + (1+u)^{2Ht}) / u^{2Ht} - 1
            let excess = (two_h * (1.0 / u).ln_1p()).exp_m1() + u.powf(-two_h);
            Ok(2f64.powf(-k_tilde) * u.powf(two_h * k_tilde) * (k_tilde * excess.ln_1p()).exp_m1())
        }
        ProcessSpec::RiemannLiouville { h } => {
            Ok(2.0 * h * power_product_integral(h - 0.5, 1.0, u, DEFAULT_TOL * 1e-2)?)
        }
        other => Err(SsgmError::domain(
            "family",
            format!("{} is not an l-form kernel", other.family().name()),
        )),
    }
}

/// `(x+1)^p - x^p` without cancellation for large `x`.
fn forward_power_difference(p: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    x.powf(p) * (p * (1.0 / x).ln_1p()).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;

    const RL_L100_H025: f64 = 0.210_593_527_166_915_462_646_665_958_781;
    const RL_L05_H075: f64 = 1.207_836_866_915_259_232_192_429_860_18;
    const RL_COV_H025: f64 = 0.615_854_173_038_544_055_102_114_144_076;
    const RL_COV_H075: f64 = 0.699_000_806_835_236_044_807_220_267_146;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn canonical_brownian() {
        assert_eq!(eval_canonical(0.5, CExponent::Finite(-1.0), 2.0, 3.0).unwrap(), 2.0);
    }

    #[test]
    fn canonical_axis_is_zero() {
        assert_eq!(eval_canonical(0.8, CExponent::Finite(-2.0), 0.0, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn canonical_direct_substitution() {
        assert!((eval_canonical(1.0, CExponent::Finite(-2.0), 2.0, 3.0).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn canonical_white_noise_branch() {
        let v = eval_canonical(0.6, CExponent::NegInfinity, 2.0, 2.0).unwrap();
        assert!((v - 2f64.powf(1.2)).abs() < 1e-15);
        assert_eq!(eval_canonical(0.6, CExponent::NegInfinity, 1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn canonical_domain_errors() {
        assert!(eval_canonical(0.7, CExponent::Finite(-0.6), 1.0, 2.0).is_err());
        assert!(eval_canonical(0.0, CExponent::Finite(-1.0), 1.0, 2.0).is_err());
        assert!(eval_canonical(-0.1, CExponent::NegInfinity, 1.0, 2.0).is_err());
        assert!(eval_canonical(0.5, CExponent::Finite(-1.0), -1.0, 2.0).is_err());
    }

    #[test]
    fn fbm_half_is_brownian() {
        assert!((eval_fbm(0.5, 2.0, 3.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn subfbm_r11() {
        for h in [0.1, 0.25, 0.75, 0.9] {
            let v = eval_subfbm(h, 1.0, 1.0).unwrap();
            assert!((v - (2.0 - 2f64.powf(2.0 * h - 1.0))).abs() < 1e-14);
        }
    }

    #[test]
    fn bifbm_r11_is_one() {
        for (ht, kt) in [(0.25, 0.5), (0.5, 0.5), (0.75, 0.9)] {
            assert!((eval_bifbm(ht, kt, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bifbm_reduces_to_brownian() {
        for (s, t) in [(0.3, 2.0), (1.7, 0.4), (5.0, 5.0)] {
            assert!((eval_bifbm(0.5, 1.0, s, t).unwrap() - f64::min(s, t)).abs() < 1e-14);
        }
    }

    #[test]
    fn rl_brownian_case() {
        assert!((eval_rl(0.5, 2.0, 3.0, 1e-10).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(eval_rl(0.3, 0.0, 3.0, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn rl_diagonal_matches_closed_form() {
        let h = 0.25;
        let g = gamma(h + 0.5);
        let expected = 1.0 / (2.0 * h * g * g);
        assert!((eval_rl(h, 1.0, 1.0, 1e-10).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn rl_against_high_precision_oracle() {
        assert!((eval_rl(0.25, 0.7, 1.9, 1e-10).unwrap() - RL_COV_H025).abs() < 1e-10);
        assert!((eval_rl(0.75, 0.7, 1.9, 1e-10).unwrap() - RL_COV_H075).abs() < 1e-10);
    }

    #[test]
    fn l_at_zero_is_one() {
        for spec in [
            ProcessSpec::FBm { h: 0.3 },
            ProcessSpec::SubFBm { h: 0.3 },
            ProcessSpec::BiFBm { h_tilde: 0.4, k_tilde: 0.7 },
            ProcessSpec::RiemannLiouville { h: 0.3 },
        ] {
            assert_eq!(eval_l(&spec, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn subfbm_half_l_is_constant() {
        for u in [0.1, 1.0, 37.0, 1e5] {
            assert!((eval_l(&ProcessSpec::SubFBm { h: 0.5 }, u).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rl_l_against_oracle() {
        let l = eval_l(&ProcessSpec::RiemannLiouville { h: 0.25 }, 100.0).unwrap();
        assert!(rel(l, RL_L100_H025) < 1e-10, "{l}");
        let l = eval_l(&ProcessSpec::RiemannLiouville { h: 0.75 }, 0.5).unwrap();
        assert!(rel(l, RL_L05_H075) < 1e-10, "{l}");
    }

    #[test]
    fn rl_l_consistent_with_covariance() {
        let spec = ProcessSpec::RiemannLiouville { h: 0.25 };
        let k = CovKernel::new(spec).unwrap();
        let (s, u) = (1.3, 100.0);
        let lhs = k.eval(s, s * (1.0 + u)).unwrap();
        let rhs = k.r11() * s.powf(0.5) * eval_l(&spec, u).unwrap();
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn l_rejects_markov_families() {
        assert!(eval_l(&ProcessSpec::canonical(0.5, -1.0), 1.0).is_err());
    }

    #[test]
    fn volterra_g_brownian() {
        let k = CovKernel::new(ProcessSpec::VolterraG {
            h: 0.5,
            beta: 0.0,
            g: GFunction::Const(1.0),
        })
        .unwrap();
        assert!((k.eval(2.0, 3.0).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn volterra_g_variance_at_one() {
        // beta = 1: \int (1-x)^2 = 1/3; beta = 1/2, log g: \int y ln(y)^2 dy = 1/4.
        let k = CovKernel::new(ProcessSpec::VolterraG {
            h: 0.25,
            beta: 1.0,
            g: GFunction::Const(1.0),
        })
        .unwrap();
        assert!((k.r11() - 1.0 / 3.0).abs() < 1e-12);
        let v = f_squared_integral(0.5, GFunction::LogPow(1), 1e-12).unwrap();
        assert!((v - 0.25).abs() < 1e-10, "{v}");
    }

    #[test]
    fn cauchy_schwarz_fails_above_minus_h() {
        let grid: Vec<f64> = (0..20).map(|i| 0.1 * 1.3f64.powi(i)).collect();
        assert!(find_cauchy_schwarz_violation(0.6, -0.5, &grid).is_some());
        assert!(find_cauchy_schwarz_violation(0.6, -0.6, &grid).is_none());
        assert!(find_cauchy_schwarz_violation(0.6, -1.5, &grid).is_none());
    }

    #[test]
    fn power_ratio_on_axes() {
        let k = PowerRatioKernel { alpha: 0.3, beta: 0.1 };
        assert_eq!(k.eval(0.0, 2.0).unwrap(), 0.0);
        assert!((k.eval(1.0, 2.0).unwrap() - 2f64.powf(0.3)).abs() < 1e-15);
    }
}
