//! Volterra kernel of the canonical family and the isometry check
//! `R_{H,c}(s,t) = \int_0^{s^t} K(u,s) K(u,t) du`.

use super::{eval_canonical, CExponent};
use crate::error::{Result, SsgmError};
use crate::quad;

fn check(h: f64, c: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(SsgmError::domain("H", format!("must be positive, got {h}")));
    }
    if !(c < -h) || !c.is_finite() {
        return Err(SsgmError::domain(
            "c",
            format!("Volterra kernel needs finite c < -H, got c = {c}, H = {h}"),
        ));
    }
    Ok(())
}

/// `ln K_{H,c}(s,t)` written in terms of `ln s`, valid down to `s = 0`
/// (`ln s = -inf`) and free of underflow for tiny `s`.
pub fn volterra_kernel_ln(h: f64, c: f64, ln_s: f64, t: f64) -> f64 {
    let p = -2.0 * (c + h);
    let ln_t = t.ln();
    let e = -c - h - 0.5;
    let base = 0.5 * p.ln() + (h - 0.5) * ln_t;
    if e == 0.0 {
        base
    } else {
        base + e * (ln_s - ln_t)
    }
}

/// `K_{H,c}(s,t) = sqrt(-2(c+H)) t^{H-1/2} (s/t)^{-c-H-1/2}` for `0 <= s <= t`.
pub fn volterra_kernel(h: f64, c: f64, s: f64, t: f64) -> Result<f64> {
    check(h, c)?;
    if !(t > 0.0 && s >= 0.0 && t.is_finite()) {
        return Err(SsgmError::domain("time", format!("need 0 <= s <= t, t > 0; got ({s}, {t})")));
    }
    if s > t {
        return Err(SsgmError::domain("s", format!("kernel needs s <= t, got s = {s} > t = {t}")));
    }
    let p = -2.0 * (c + h);
    let e = -c - h - 0.5;
    Ok(p.sqrt() * t.powf(h - 0.5) * (s / t).powf(e))
}

/// `|\int_0^{s^t} K(u,s) K(u,t) du - R_{H,c}(s,t)|` by quadrature.
///
/// The substitution `u = (s^t) w^{1/p}`, `p = -2(c+H)`, maps the power-law
/// behaviour of the kernel product at `u = 0` onto a bounded integrand; the
/// kernel is evaluated in log space so that `w^{1/p}` cannot underflow.
pub fn isometry_residual(h: f64, c: f64, s: f64, t: f64, tol: f64) -> Result<f64> {
    check(h, c)?;
    if !(s > 0.0 && t > 0.0 && s.is_finite() && t.is_finite()) {
        return Err(SsgmError::domain("time", format!("need s, t > 0; got ({s}, {t})")));
    }
    let exact = eval_canonical(h, CExponent::Finite(c), s, t)?;
    let m = s.min(t);
    let p = -2.0 * (c + h);
    let ln_m = m.ln();
    let jac_const = (m / p).ln();
    let integrand = |w: f64| {
        let ln_w = w.ln();
        let ln_u = ln_m + ln_w / p;
        let ln_val = volterra_kernel_ln(h, c, ln_u, s)
            + volterra_kernel_ln(h, c, ln_u, t)
            + jac_const
            + (1.0 / p - 1.0) * ln_w;
        ln_val.exp()
    };
    let tol_eff = tol.max(1e-10 * exact.abs());
    let q = quad::integrate(integrand, 0.0, 1.0, tol_eff)?;
    Ok((q.value - exact).abs())
}
