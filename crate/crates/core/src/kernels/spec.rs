//! Process descriptions and their text encodings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SsgmError};

/// The exponent `c` of the canonical family: a finite real or `-inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CExponent {
    Finite(f64),
    NegInfinity,
}

impl CExponent {
    pub fn is_finite(&self) -> bool {
        matches!(self, CExponent::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            CExponent::Finite(c) => Some(c),
            CExponent::NegInfinity => None,
        }
    }

    /// Float view; `-inf` maps to `f64::NEG_INFINITY`. Only for display
    /// and serialization, never for arithmetic.
    pub fn to_f64(&self) -> f64 {
        match *self {
            CExponent::Finite(c) => c,
            CExponent::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn from_f64(c: f64) -> Result<Self> {
        if c == f64::NEG_INFINITY {
            Ok(CExponent::NegInfinity)
        } else if c.is_finite() {
            Ok(CExponent::Finite(c))
        } else {
            Err(SsgmError::domain("c", format!("{c} is not a valid exponent")))
        }
    }
}

impl fmt::Display for CExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CExponent::Finite(c) => write!(f, "{c}"),
            CExponent::NegInfinity => f.write_str("-inf"),
        }
    }
}

impl FromStr for CExponent {
    type Err = SsgmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-inf" | "-infinity" | "-Inf" => Ok(CExponent::NegInfinity),
            other => {
                let v: f64 = other
                    .parse()
                    .map_err(|_| SsgmError::Config(format!("cannot parse c = `{other}`")))?;
                CExponent::from_f64(v)
            }
        }
    }
}

impl Serialize for CExponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            CExponent::Finite(c) => s.serialize_f64(c),
            CExponent::NegInfinity => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for CExponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match CValue::deserialize(d)? {
            CValue::Number(x) => CExponent::from_f64(x),
            CValue::Text(t) => t.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Weight function `g` of the generalized Riemann-Liouville process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GFunction {
    /// `g(x) = a`.
    Const(f64),
    /// `g(x) = (log(1/(1-x)))^k`, so `g(0) = 0` for `k >= 1`.
    LogPow(u32),
}

impl GFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            GFunction::Const(a) => a,
            GFunction::LogPow(k) => (-(-x).ln_1p()).powi(k as i32),
        }
    }

    /// `g(1 - y)`, accurate for `y` close to zero.
    pub fn eval_complement(&self, y: f64) -> f64 {
        match *self {
            GFunction::Const(a) => a,
            GFunction::LogPow(k) => (-y.ln()).powi(k as i32),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            GFunction::Const(_) => 0.0,
            GFunction::LogPow(0) => 0.0,
            GFunction::LogPow(k) => {
                let y = 1.0 - x;
                k as f64 * (-(-x).ln_1p()).powi(k as i32 - 1) / y
            }
        }
    }

    /// Samples `(1-x)^eps |g(x)|` and `(1-x)^{1+eps} |g'(x)|` at
    /// `1 - x = 10^{-j}`, `j = 1..=300`, and returns the largest value seen
    /// together with whether both sequences are non-increasing over their
    /// last decade of samples.
    pub fn subpower_growth(&self, eps: f64) -> (f64, bool) {
        let mut sup: f64 = 0.0;
        let mut tail_ok = true;
        let mut prev: Option<(f64, f64)> = None;
        for j in 1..=300 {
            let y = 10f64.powi(-j);
            let gv = y.powf(eps) * self.eval_complement(y).abs();
            let dv = match *self {
                GFunction::Const(_) | GFunction::LogPow(0) => 0.0,
                GFunction::LogPow(k) => {
                    y.powf(eps) * k as f64 * (-y.ln()).powi(k as i32 - 1)
                }
            };
            if !(gv.is_finite() && dv.is_finite()) {
                return (f64::INFINITY, false);
            }
            sup = sup.max(gv).max(dv);
            if j > 290 {
                if let Some((pg, pd)) = prev {
                    tail_ok &= gv <= pg && dv <= pd;
                }
            }
            prev = Some((gv, dv));
        }
        (sup, tail_ok)
    }
}

impl fmt::Display for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GFunction::Const(a) => write!(f, "const({a})"),
            GFunction::LogPow(k) => write!(f, "logpow({k})"),
        }
    }
}

impl FromStr for GFunction {
    type Err = SsgmError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let inner = |prefix: &str| -> Option<&str> {
            s.strip_prefix(prefix).and_then(|r| r.strip_suffix(')'))
        };
        if let Some(a) = inner("const(") {
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| SsgmError::Config(format!("bad constant in `{s}`")))?;
            return Ok(GFunction::Const(a));
        }
        if let Some(k) = inner("logpow(") {
            let k: u32 = k
                .trim()
                .parse()
                .map_err(|_| SsgmError::Config(format!("bad power in `{s}`")))?;
            return Ok(GFunction::LogPow(k));
        }
        if let Ok(a) = s.parse::<f64>() {
            return Ok(GFunction::Const(a));
        }
        Err(SsgmError::Config(format!(
            "unknown g function `{s}` (expected const(a) or logpow(k))"
        )))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    CanonicalMarkov,
    WhiteNoise,
    FBm,
    SubFBm,
    BiFBm,
    RiemannLiouville,
    VolterraG,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::CanonicalMarkov => "canonical",
            Family::WhiteNoise => "white-noise",
            Family::FBm => "fbm",
            Family::SubFBm => "sfbm",
            Family::BiFBm => "bfbm",
            Family::RiemannLiouville => "rl",
            Family::VolterraG => "volterra",
        }
    }
}

impl FromStr for Family {
    type Err = SsgmError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "canonical" | "canonical-markov" => Family::CanonicalMarkov,
            "white-noise" | "whitenoise" | "wn" => Family::WhiteNoise,
            "fbm" => Family::FBm,
            "sfbm" | "subfbm" | "sub-fbm" => Family::SubFBm,
            "bfbm" | "bifbm" | "bi-fbm" => Family::BiFBm,
            "rl" | "riemann-liouville" => Family::RiemannLiouville,
            "volterra" | "volterra-g" | "zg" => Family::VolterraG,
            other => return Err(SsgmError::Config(format!("unknown family `{other}`"))),
        })
    }
}

/// A self-similar Gaussian process family with its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProcessSpec {
    CanonicalMarkov { h: f64, c: CExponent },
    WhiteNoise { h: f64 },
    FBm { h: f64 },
    SubFBm { h: f64 },
    /// Bi-fractional Brownian motion; the self-similarity exponent is
    /// `h_tilde * k_tilde`.
    BiFBm { h_tilde: f64, k_tilde: f64 },
    RiemannLiouville { h: f64 },
    /// `t^{H-1/2} \int_0^t (1-s/t)^beta g(s/t) dB_s`.
    VolterraG { h: f64, beta: f64, g: GFunction },
}

impl ProcessSpec {
    pub fn canonical(h: f64, c: f64) -> Self {
        ProcessSpec::CanonicalMarkov {
            h,
            c: CExponent::Finite(c),
        }
    }

    pub fn brownian() -> Self {
        ProcessSpec::canonical(0.5, -1.0)
    }

    pub fn family(&self) -> Family {
        match self {
            ProcessSpec::CanonicalMarkov { .. } => Family::CanonicalMarkov,
            ProcessSpec::WhiteNoise { .. } => Family::WhiteNoise,
            ProcessSpec::FBm { .. } => Family::FBm,
            ProcessSpec::SubFBm { .. } => Family::SubFBm,
            ProcessSpec::BiFBm { .. } => Family::BiFBm,
            ProcessSpec::RiemannLiouville { .. } => Family::RiemannLiouville,
            ProcessSpec::VolterraG { .. } => Family::VolterraG,
        }
    }

    /// Self-similarity exponent `H`.
    pub fn hurst(&self) -> f64 {
        match *self {
            ProcessSpec::CanonicalMarkov { h, .. }
            | ProcessSpec::WhiteNoise { h }
            | ProcessSpec::FBm { h }
            | ProcessSpec::SubFBm { h }
            | ProcessSpec::RiemannLiouville { h }
            | ProcessSpec::VolterraG { h, .. } => h,
            ProcessSpec::BiFBm { h_tilde, k_tilde } => h_tilde * k_tilde,
        }
    }

    /// `true` for the Volterra family only when `beta > 0` and
    /// `H in (0, 1/2)`, the regime where asymptotic stationarity of the
    /// increments is established.
    pub fn proven_regime(&self) -> bool {
        match *self {
            ProcessSpec::VolterraG { h, beta, .. } => beta > 0.0 && h > 0.0 && h < 0.5,
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hurst();
        if !(h > 0.0 && h.is_finite()) {
            return Err(SsgmError::domain("H", format!("must be positive, got {h}")));
        }
        match *self {
            ProcessSpec::CanonicalMarkov { h, c } => {
                if let CExponent::Finite(c) = c {
                    if c > -h {
                        return Err(SsgmError::domain(
                            "c",
                            format!("canonical kernel needs c <= -H, got c = {c}, H = {h}"),
                        ));
                    }
                }
            }
            ProcessSpec::FBm { h } | ProcessSpec::SubFBm { h } => {
                if h >= 1.0 {
                    return Err(SsgmError::domain("H", format!("must lie in (0, 1), got {h}")));
                }
            }
            ProcessSpec::BiFBm { h_tilde, k_tilde } => {
                if !(h_tilde > 0.0 && h_tilde < 1.0) {
                    return Err(SsgmError::domain(
                        "Htilde",
                        format!("must lie in (0, 1), got {h_tilde}"),
                    ));
                }
                if !(k_tilde > 0.0 && k_tilde <= 1.0) {
                    return Err(SsgmError::domain(
                        "Ktilde",
                        format!("must lie in (0, 1], got {k_tilde}"),
                    ));
                }
            }
            ProcessSpec::VolterraG { beta, g, .. } => {
                if !(beta > -0.5 && beta.is_finite()) {
                    return Err(SsgmError::domain(
                        "beta",
                        format!("must exceed -1/2, got {beta}"),
                    ));
                }
                if let GFunction::Const(a) = g {
                    if !a.is_finite() {
                        return Err(SsgmError::domain("g", "constant must be finite"));
                    }
                }
            }
            ProcessSpec::WhiteNoise { .. } | ProcessSpec::RiemannLiouville { .. } => {}
        }
        Ok(())
    }

    /// Named numeric parameters in a fixed order.
    fn params(&self) -> Vec<(&'static str, String)> {
        match *self {
            ProcessSpec::CanonicalMarkov { h, c } => vec![("H", fmt_f(h)), ("c", c.to_string())],
            ProcessSpec::WhiteNoise { h }
            | ProcessSpec::FBm { h }
            | ProcessSpec::SubFBm { h }
            | ProcessSpec::RiemannLiouville { h } => vec![("H", fmt_f(h))],
            ProcessSpec::BiFBm { h_tilde, k_tilde } => {
                vec![("Htilde", fmt_f(h_tilde)), ("Ktilde", fmt_f(k_tilde))]
            }
            ProcessSpec::VolterraG { h, beta, g } => vec![
                ("H", fmt_f(h)),
                ("beta", fmt_f(beta)),
                ("g", g.to_string()),
            ],
        }
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

/// Compact form `family:name=value,name=value`, e.g. `canonical:H=0.7,c=-inf`.
impl fmt::Display for ProcessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.family().name())?;
        let params = self.params();
        for (i, (k, v)) in params.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for ProcessSpec {
    type Err = SsgmError;

    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut block = ProcessBlock {
            family: family.trim().to_string(),
            ..Default::default()
        };
        // Parameter values may contain commas only inside g's parentheses.
        let mut depth = 0usize;
        let mut start = 0usize;
        let mut parts = Vec::new();
        for (i, ch) in rest.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth = depth.saturating_sub(1),
                ',' if depth == 0 => {
                    parts.push(&rest[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        parts.push(&rest[start..]);
        for part in parts.into_iter().filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| SsgmError::Config(format!("expected name=value, got `{part}`")))?;
            let v = v.trim();
            let num = || -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| SsgmError::Config(format!("cannot parse `{k}` = `{v}`")))
            };
            match k.trim() {
                "H" | "h" => block.h = Some(num()?),
                "c" => block.c = Some(CValue::Text(v.to_string())),
                "Htilde" | "htilde" => block.htilde = Some(num()?),
                "Ktilde" | "ktilde" => block.ktilde = Some(num()?),
                "beta" => block.beta = Some(num()?),
                "g" => block.g = Some(v.to_string()),
                other => {
                    return Err(SsgmError::Config(format!("unknown parameter `{other}`")));
                }
            }
        }
        ProcessSpec::try_from(block)
    }
}

/// `c` as written in a configuration file: a number or the text `-inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CValue {
    Number(f64),
    Text(String),
}

/// Flat, named-parameter form of [`ProcessSpec`] used in configuration files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessBlock {
    pub family: String,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<CValue>,
    #[serde(rename = "Htilde", default, skip_serializing_if = "Option::is_none")]
    pub htilde: Option<f64>,
    #[serde(rename = "Ktilde", default, skip_serializing_if = "Option::is_none")]
    pub ktilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
}

impl TryFrom<ProcessBlock> for ProcessSpec {
    type Error = SsgmError;

    fn try_from(b: ProcessBlock) -> Result<Self> {
        let family: Family = b.family.parse()?;
        let need = |v: Option<f64>, name: &str| -> Result<f64> {
            v.ok_or_else(|| {
                SsgmError::Config(format!("family `{}` needs parameter `{name}`", b.family))
            })
        };
        let given = [
            ("H", b.h.is_some()),
            ("c", b.c.is_some()),
            ("Htilde", b.htilde.is_some()),
            ("Ktilde", b.ktilde.is_some()),
            ("beta", b.beta.is_some()),
            ("g", b.g.is_some()),
        ];
        let allowed: &[&str] = match family {
            Family::CanonicalMarkov => &["H", "c"],
            Family::WhiteNoise | Family::FBm | Family::SubFBm | Family::RiemannLiouville => &["H"],
            Family::BiFBm => &["Htilde", "Ktilde"],
            Family::VolterraG => &["H", "beta", "g"],
        };
        if let Some((name, _)) = given.iter().find(|(n, set)| *set && !allowed.contains(n)) {
            return Err(SsgmError::Config(format!(
                "parameter `{name}` does not apply to family `{}`",
                b.family
            )));
        }
        let spec = match family {
            Family::CanonicalMarkov => {
                let c = match &b.c {
                    Some(CValue::Number(x)) => CExponent::from_f64(*x)?,
                    Some(CValue::Text(t)) => t.parse()?,
                    None => {
                        return Err(SsgmError::Config("canonical family needs `c`".into()));
                    }
                };
                ProcessSpec::CanonicalMarkov {
                    h: need(b.h, "H")?,
                    c,
                }
            }
            Family::WhiteNoise => ProcessSpec::WhiteNoise { h: need(b.h, "H")? },
            Family::FBm => ProcessSpec::FBm { h: need(b.h, "H")? },
            Family::SubFBm => ProcessSpec::SubFBm { h: need(b.h, "H")? },
            Family::RiemannLiouville => ProcessSpec::RiemannLiouville { h: need(b.h, "H")? },
            Family::BiFBm => ProcessSpec::BiFBm {
                h_tilde: need(b.htilde, "Htilde")?,
                k_tilde: need(b.ktilde, "Ktilde")?,
            },
            Family::VolterraG => ProcessSpec::VolterraG {
                h: need(b.h, "H")?,
                beta: need(b.beta, "beta")?,
                g: b.g.as_deref().unwrap_or("const(1)").parse()?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<&ProcessSpec> for ProcessBlock {
    fn from(spec: &ProcessSpec) -> Self {
        let mut b = ProcessBlock {
            family: spec.family().name().to_string(),
            ..Default::default()
        };
        match *spec {
            ProcessSpec::CanonicalMarkov { h, c } => {
                b.h = Some(h);
                b.c = Some(match c {
                    CExponent::Finite(x) => CValue::Number(x),
                    CExponent::NegInfinity => CValue::Text("-inf".into()),
                });
            }
            ProcessSpec::WhiteNoise { h }
            | ProcessSpec::FBm { h }
            | ProcessSpec::SubFBm { h }
            | ProcessSpec::RiemannLiouville { h } => b.h = Some(h),
            ProcessSpec::BiFBm { h_tilde, k_tilde } => {
                b.htilde = Some(h_tilde);
                b.ktilde = Some(k_tilde);
            }
            ProcessSpec::VolterraG { h, beta, g } => {
                b.h = Some(h);
                b.beta = Some(beta);
                b.g = Some(g.to_string());
            }
        }
        b
    }
}

impl Serialize for ProcessSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProcessBlock::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProcessSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let block = ProcessBlock::deserialize(d)?;
        ProcessSpec::try_from(block).map_err(serde::de::Error::custom)
    }
}
