//! Command-line front end: run configuration, subcommands and report output.
//!
//! Every subcommand reads an optional TOML [`RunConfig`]; command-line flags
//! override the file. JSON reports carry the schema version, CSV artifacts
//! use 17 significant digits and LF line endings.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Result, SsgmError};
use crate::gram::{build_gram, leading_minors, lindstrom_minor, minor_residual, psd_check, MinorQuery, PsdVerdict, TimeGrid, DEFAULT_PSD_TOL, MAX_DIRECT_MINOR};
use crate::kernels::{CovKernel, Kernel, ProcessBlock, ProcessSpec};
use crate::markov::{self, MarkovVerdict};
use crate::quad::DEFAULT_TOL;
use crate::samplers::{self, write_file};
use crate::variation::{self, IncrementFn, VariationVerdict};
use crate::REPORT_SCHEMA_VERSION;

/// Grid block: an explicit list or a geometric specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometric: Option<GeometricBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricBlock {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridBlock {
    pub fn to_grid(&self) -> Result<TimeGrid> {
        match (&self.times, &self.geometric) {
            (Some(t), None) => TimeGrid::new(t.clone()),
            (None, Some(g)) => TimeGrid::geometric(g.start, g.stop, g.points),
            _ => Err(SsgmError::Config(
                "grid block needs exactly one of `times` or `geometric`".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_steps: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Dyadic sizes, e.g. `[1024, 2048, 4096]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
}

/// Exponents of the power-ratio kernel `(s v t)^alpha / (s ^ t)^beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerBlock {
    pub alpha: f64,
    pub beta: f64,
}

/// Complete description of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variation: Option<VariationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SsgmError::Config(format!("invalid configuration: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SsgmError::Config(format!("cannot encode configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SsgmError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn spec(&self) -> Result<ProcessSpec> {
        let block = self
            .process
            .clone()
            .ok_or_else(|| SsgmError::Config("no process given (use --kernel or a [process] block)".into()))?;
        ProcessSpec::try_from(block)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        self.grid
            .as_ref()
            .ok_or_else(|| SsgmError::Config("no grid given (use --grid or a [grid] block)".into()))?
            .to_grid()
    }

    fn mc(&self) -> McBlock {
        self.mc.clone().unwrap_or_default()
    }

    fn seed(&self) -> Result<u64> {
        self.mc()
            .seed
            .ok_or_else(|| SsgmError::Config("a seed is mandatory for stochastic runs (use --seed)".into()))
    }

    fn quad_tol(&self) -> f64 {
        self.tolerances.as_ref().and_then(|t| t.quad).unwrap_or(DEFAULT_TOL)
    }

    fn psd_tol(&self) -> f64 {
        self.tolerances.as_ref().and_then(|t| t.psd).unwrap_or(DEFAULT_PSD_TOL)
    }

    fn kernel(&self) -> Result<CovKernel> {
        CovKernel::with_tolerance(self.spec()?, self.quad_tol())
    }

    fn csv_path(&self) -> Option<&Path> {
        self.output.as_ref().and_then(|o| o.csv.as_deref())
    }

    fn json_path(&self) -> Option<&Path> {
        self.output.as_ref().and_then(|o| o.json.as_deref())
    }
}

/// Parses `geom:start:stop:points`, `lin:start:stop:points`, `dyadic:n`,
/// `standard`, or an explicit comma-separated list.
pub fn parse_grid(text: &str) -> Result<GridBlock> {
    let bad = || SsgmError::Config(format!("cannot parse grid `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = text.trim().split(':').collect();
    let explicit = |times: Vec<f64>| GridBlock {
        times: Some(times),
        geometric: None,
    };
    match parts.as_slice() {
        ["standard"] => Ok(GridBlock {
            times: None,
            geometric: Some(GeometricBlock {
                start: 0.05,
                stop: 5.0,
                points: 20,
            }),
        }),
        ["geom", a, b, n] => Ok(GridBlock {
            times: None,
            geometric: Some(GeometricBlock {
                start: num(a)?,
                stop: num(b)?,
                points: n.trim().parse().map_err(|_| bad())?,
            }),
        }),
        ["lin", a, b, n] => {
            let g = TimeGrid::linear(num(a)?, num(b)?, n.trim().parse().map_err(|_| bad())?)?;
            Ok(explicit(g.times().to_vec()))
        }
        ["dyadic", n] => {
            let g = TimeGrid::dyadic_unit(n.trim().parse().map_err(|_| bad())?)?;
            Ok(explicit(g.times().to_vec()))
        }
        [list] => Ok(explicit(list.split(',').map(num).collect::<Result<Vec<_>>>()?)),
        _ => Err(bad()),
    }
}

fn parse_pow2(s: &str) -> Result<usize> {
    let s = s.trim();
    let v = match s.strip_prefix("2^") {
        Some(e) => {
            let e: u32 = e.parse().map_err(|_| SsgmError::Config(format!("bad exponent in `{s}`")))?;
            if e > 30 {
                return Err(SsgmError::Config(format!("`{s}` is too large")));
            }
            1usize << e
        }
        None => s.parse().map_err(|_| SsgmError::Config(format!("cannot parse n = `{s}`")))?,
    };
    Ok(v)
}

/// `2^a..2^b` (every power of two in between) or a comma-separated list.
pub fn parse_n_list(text: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (parse_pow2(a)?, parse_pow2(b)?);
        if !a.is_power_of_two() || !b.is_power_of_two() || b < a {
            return Err(SsgmError::Config(format!("bad n range `{text}`")));
        }
        let mut out = vec![];
        let mut n = a;
        while n <= b {
            out.push(n);
            n *= 2;
        }
        return Ok(out);
    }
    text.split(',').map(parse_pow2).collect()
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| SsgmError::Config(format!("cannot parse number `{s}`")))
        })
        .collect()
}

#[derive(Debug, Parser)]
#[command(name = "ssgm", version, about = "Self-similar Gaussian processes: kernels, Markov tests, sampling and variation")]
pub struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true, env = "SSGM_THREADS")]
    pub threads: Option<usize>,
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// Write the CSV artifact here.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ProcessArgs {
    /// Process, e.g. `canonical:H=0.7,c=-0.9` or `volterra:H=0.25,beta=1,g=const(1)`.
    #[arg(long, alias = "spec")]
    pub kernel: Option<String>,
    /// Grid: `geom:a:b:n`, `lin:a:b:n`, `dyadic:n`, `standard` or `t1,t2,...`.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct McArgs {
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub inner_steps: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a kernel on a grid and emit its Gram matrix.
    KernelEval(ProcessArgs),
    /// Positive-definiteness check, with closed-form minors for power kernels.
    Posdef {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
    },
    /// Classify a kernel as Markov or not.
    MarkovTest(ProcessArgs),
    /// Sample paths and compare their covariance with the kernel.
    Sample {
        #[command(flatten)]
        process: ProcessArgs,
        #[command(flatten)]
        mc: McArgs,
        /// Stem for the binary ensemble (`<stem>.bin` + `<stem>.json`).
        #[arg(long)]
        bin: Option<PathBuf>,
        /// Also run the self-similarity check at this scale.
        #[arg(long)]
        selfsim: Option<f64>,
    },
    /// p-variation trichotomy, ergodic averages and increment limits.
    Variation {
        #[command(flatten)]
        process: ProcessArgs,
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        p: Option<f64>,
        /// `2^10..2^16` or a list such as `1024,2048`; the default depends on the family.
        #[arg(long)]
        n: Option<String>,
        /// Integer horizon of an ergodic average of squared increments.
        #[arg(long)]
        ergodic: Option<usize>,
        /// Times at which to evaluate the increment variance and integral limit.
        #[arg(long)]
        limits: Option<String>,
    },
    /// Large-lag expansion of l-form kernels and the R(t^alpha, t) profile.
    Asym {
        #[command(flatten)]
        process: ProcessArgs,
        /// `u` values, as a grid spec.
        #[arg(long)]
        u_grid: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
    },
}

/// What a run produced: the summary line and the written artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: String,
    pub json: Option<Value>,
    pub csv: Option<String>,
}

fn apply_process(cfg: &mut RunConfig, p: &ProcessArgs) -> Result<()> {
    if let Some(k) = &p.kernel {
        let spec: ProcessSpec = k.parse()?;
        cfg.process = Some(ProcessBlock::from(&spec));
    }
    if let Some(g) = &p.grid {
        cfg.grid = Some(parse_grid(g)?);
    }
    Ok(())
}

fn apply_mc(cfg: &mut RunConfig, m: &McArgs) {
    let mut mc = cfg.mc();
    mc.n_paths = m.paths.or(mc.n_paths);
    mc.seed = m.seed.or(mc.seed);
    mc.inner_steps = m.inner_steps.or(mc.inner_steps);
    cfg.mc = Some(mc);
}

/// Merges the configuration file (if any) with the command-line flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut out = cfg.output.clone().unwrap_or_default();
    out.csv = cli.csv.clone().or(out.csv);
    out.json = cli.json.clone().or(out.json);
    cfg.output = Some(out);
    match &cli.command {
        Command::KernelEval(p) | Command::MarkovTest(p) => apply_process(&mut cfg, p)?,
        Command::Posdef { process, alpha, beta } => {
            apply_process(&mut cfg, process)?;
            match (alpha, beta) {
                (Some(a), Some(b)) => {
                    cfg.power = Some(PowerBlock { alpha: *a, beta: *b });
                }
                (None, None) => {}
                _ => return Err(SsgmError::Config("--alpha and --beta go together".into())),
            }
        }
        Command::Sample { process, mc, .. } => {
            apply_process(&mut cfg, process)?;
            apply_mc(&mut cfg, mc);
        }
        Command::Variation { process, mc, p, n, .. } => {
            apply_process(&mut cfg, process)?;
            apply_mc(&mut cfg, mc);
            let mut v = cfg.variation.clone().unwrap_or_default();
            v.p = p.or(v.p);
            if let Some(n) = n {
                v.n = Some(parse_n_list(n)?);
            }
            cfg.variation = Some(v);
        }
        Command::Asym { process, .. } => apply_process(&mut cfg, process)?,
    }
    Ok(cfg)
}

fn with_version(mut v: Value, command: &str) -> Value {
    if let Value::Object(map) = &mut v {
        map.insert("version".into(), json!(REPORT_SCHEMA_VERSION));
        map.insert("command".into(), json!(command));
    }
    v
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| SsgmError::Numerical(format!("cannot encode report: {e}")))
}

fn kernel_eval(cfg: &RunConfig) -> Result<Outcome> {
    let kernel = cfg.kernel()?;
    let grid = cfg.time_grid()?;
    let gram = build_gram(&kernel, &grid)?;
    let report = json!({
        "kernel": kernel.label(),
        "r11": kernel.r11(),
        "grid": grid.times(),
        "gram": gram.matrix.rows(),
    });
    Ok(Outcome {
        summary: format!("kernel-eval: {} on {} points, R(1,1) = {}", kernel.label(), grid.len(), kernel.r11()),
        json: Some(with_version(report, "kernel-eval")),
        csv: Some(gram.to_csv()),
    })
}

fn posdef(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.time_grid()?;
    let tol = cfg.psd_tol();
    let (label, gram, minors) = match &cfg.power {
        Some(pw) => {
            let q = MinorQuery::new(pw.alpha, pw.beta, grid.clone())?;
            let gram = q.gram();
            let closed = lindstrom_minor(&q)?;
            let residual = if grid.len() <= MAX_DIRECT_MINOR {
                Some(minor_residual(&q)?)
            } else {
                None
            };
            let label = q.kernel().label();
            (
                label,
                gram,
                Some(json!({"closed_form": closed, "direct_residual": residual})),
            )
        }
        None => {
            let kernel = cfg.kernel()?;
            (kernel.label(), build_gram(&kernel, &grid)?, None)
        }
    };
    let report = psd_check(&gram, tol);
    let mut v = to_value(&report)?;
    if let Value::Object(map) = &mut v {
        map.insert("kernel".into(), json!(label));
        map.insert("grid".into(), json!(grid.times()));
        map.insert("leading_minors".into(), json!(leading_minors(&gram)));
        if let Some(m) = minors {
            map.insert("minor".into(), m);
        }
    }
    let verdict = match report.verdict {
        PsdVerdict::Psd => "PSD".to_string(),
        PsdVerdict::NotPsd => format!(
            "NotPSD (witness value {:e})",
            report.witness_value.unwrap_or(f64::NAN)
        ),
    };
    Ok(Outcome {
        summary: format!("posdef: {label}: {verdict}"),
        json: Some(with_version(v, "posdef")),
        csv: Some(gram.to_csv()),
    })
}

fn markov_test(cfg: &RunConfig) -> Result<Outcome> {
    let kernel = cfg.kernel()?;
    let grid = match &cfg.grid {
        Some(g) => g.to_grid()?,
        None => markov::standard_grid(),
    };
    let report = markov::markov_test(&kernel, &grid)?;
    let mut v = to_value(&report)?;
    if let Value::Object(map) = &mut v {
        map.insert("seed".into(), json!("n/a"));
    }
    let verdict = match report.verdict {
        MarkovVerdict::MarkovCanonical => "MarkovCanonical",
        MarkovVerdict::MarkovWhiteNoise => "MarkovWhiteNoise",
        MarkovVerdict::NotMarkov => "NotMarkov",
        MarkovVerdict::Degenerate => "Degenerate",
        MarkovVerdict::Indeterminate => "Indeterminate",
    };
    Ok(Outcome {
        summary: format!(
            "markov-test: {}: {verdict} (doob max {:e})",
            kernel.label(),
            report.doob.max
        ),
        json: Some(with_version(v, "markov-test")),
        csv: None,
    })
}

fn sample(cfg: &RunConfig, bin: Option<&Path>, selfsim: Option<f64>) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let grid = cfg.time_grid()?;
    let mc = cfg.mc();
    let seed = cfg.seed()?;
    let n_paths = mc
        .n_paths
        .ok_or_else(|| SsgmError::Config("number of paths missing (use --paths)".into()))?;
    let ens = samplers::sample(&spec, &grid, n_paths, seed, mc.inner_steps)?;
    if let Some(stem) = bin {
        ens.write_binary(stem)?;
    }
    let mut report = json!({
        "kernel": spec.to_string(),
        "seed": seed,
        "n_paths": n_paths,
        "sampler": to_value(&ens.sidecar())?,
    });
    let mut summary = format!("sample: {spec}: {n_paths} paths on {} points", grid.len());
    if n_paths >= 2 {
        let emp = samplers::empirical_cov(&ens)?;
        let kernel = CovKernel::with_tolerance(spec, cfg.quad_tol())?;
        let cmp = samplers::compare_to_kernel(&emp, &kernel, 4.0)?;
        summary.push_str(&format!(", {}/{} entries beyond 4 SE", cmp.exceed, cmp.entries));
        report["covariance"] = to_value(&emp)?;
        report["comparison"] = to_value(&cmp)?;
    }
    if let Some(a) = selfsim {
        let rep = samplers::selfsim_check(&spec, a, &grid, n_paths, seed)?;
        summary.push_str(&format!(", self-similarity deviation {:.3}", rep.max_deviation));
        report["selfsim"] = to_value(&rep)?;
    }
    Ok(Outcome {
        summary,
        json: Some(with_version(report, "sample")),
        csv: Some(ens.to_csv()),
    })
}

fn variation_cmd(cfg: &RunConfig, ergodic: Option<usize>, limits: Option<&str>) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let seed = cfg.seed()?;
    let v = cfg.variation.clone().unwrap_or_default();
    let p = v.p.unwrap_or(2.0);
    let n_list = v.n.unwrap_or_else(|| variation::default_n_list(&spec));
    let n_paths = cfg.mc().n_paths.unwrap_or(64);
    let report = variation::pvariation_trichotomy(&spec, p, &n_list, n_paths, seed)?;
    let verdict = match report.verdict {
        VariationVerdict::VanishingTo0 => "VanishingTo0".to_string(),
        VariationVerdict::FiniteLimit(v) => format!("FiniteLimit({v:.6})"),
        VariationVerdict::Diverging => "Diverging".to_string(),
    };
    let mut summary = format!(
        "variation: {spec}, p = {p}: {verdict} (slope {:.4}, predicted {:.4})",
        report.slope_estimate, report.theoretical_slope
    );
    let mut out = to_value(&report)?;
    if let Some(n) = ergodic {
        let e = variation::ergodic_average(&spec, IncrementFn::Square, n, n_paths, seed)?;
        summary.push_str(&format!(", ergodic average {:.6} (target {:.6})", e.average, e.target));
        out["ergodic"] = to_value(&e)?;
    }
    if let Some(list) = limits {
        let ProcessSpec::VolterraG { h, beta, g } = spec else {
            return Err(SsgmError::Config("--limits needs a volterra process".into()));
        };
        let mut rows = vec![];
        for t in parse_list(list)? {
            let iv = variation::increment_variance(h, beta, g, t)?;
            let il = if t >= 2.0 {
                Some(variation::int_limit_residual(beta, g, t)?)
            } else {
                None
            };
            rows.push(json!({"t": t, "increment_variance": iv.value, "limit": iv.limit, "int_limit_residual": il}));
        }
        out["limits"] = json!(rows);
    }
    Ok(Outcome {
        summary,
        json: Some(with_version(out, "variation")),
        csv: Some(report.to_csv()),
    })
}

fn asym(cfg: &RunConfig, u_grid: Option<&str>, alpha: f64) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let kernel = cfg.kernel()?;
    let u = match u_grid {
        Some(g) => parse_grid(g)?.to_grid()?.times().to_vec(),
        None => markov::asym_grid(),
    };
    let expansion = markov::asym_coeff_estimate(&spec, &u).ok();
    let profile = markov::alpha_diag_profile(&kernel, alpha, &markov::profile_grid())?;
    let mut summary = format!(
        "asym: {spec}: profile exponent {:.6}, two-power flag {}",
        profile.exponent.unwrap_or(f64::NAN),
        profile.two_power_flag
    );
    if let Some(e) = &expansion {
        match (e.coefficient, e.exponent) {
            (Some(a), Some(x)) => summary.push_str(&format!(", l(u) ~ {:.6} + {a:.6} u^{x:.4}", e.constant)),
            _ => summary.push_str(&format!(", l(u) ~ {:.6}", e.constant)),
        }
    }
    let report = json!({
        "kernel": spec.to_string(),
        "expansion": to_value(&expansion)?,
        "profile": to_value(&profile)?,
    });
    Ok(Outcome {
        summary,
        json: Some(with_version(report, "asym")),
        csv: None,
    })
}

/// Runs a parsed command line and writes its artifacts.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = resolve(cli)?;
    let outcome = match &cli.command {
        Command::KernelEval(_) => kernel_eval(&cfg)?,
        Command::Posdef { .. } => posdef(&cfg)?,
        Command::MarkovTest(_) => markov_test(&cfg)?,
        Command::Sample { bin, selfsim, .. } => sample(&cfg, bin.as_deref(), *selfsim)?,
        Command::Variation { ergodic, limits, .. } => variation_cmd(&cfg, *ergodic, limits.as_deref())?,
        Command::Asym { u_grid, alpha, .. } => asym(&cfg, u_grid.as_deref(), *alpha)?,
    };
    if let (Some(path), Some(text)) = (cfg.csv_path(), &outcome.csv) {
        write_file(path, text.as_bytes())?;
    }
    if let (Some(path), Some(v)) = (cfg.json_path(), &outcome.json) {
        let mut text = serde_json::to_string_pretty(v)
            .map_err(|e| SsgmError::Numerical(format!("cannot encode report: {e}")))?;
        text.push('\n');
        write_file(path, text.as_bytes())?;
    }
    Ok(outcome)
}

/// Runs `cli` on a pool of the requested size.
pub fn run_with_threads(cli: &Cli) -> Result<Outcome> {
    match cli.threads {
        Some(0) => Err(SsgmError::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SsgmError::Config(format!("cannot start {n} threads: {e}")))?
            .install(|| run(cli)),
        None => run(cli),
    }
}

/// Entry point of the `ssgm` binary; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run_with_threads(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("ssgm").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("1,2,3").unwrap().to_grid().unwrap().times(), &[1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("standard").unwrap().to_grid().unwrap().len(), 20);
        assert_eq!(parse_grid("dyadic:4").unwrap().to_grid().unwrap().len(), 5);
        assert!(parse_grid("geom:1:2").is_err());
    }

    #[test]
    fn n_ranges() {
        assert_eq!(parse_n_list("2^10..2^12").unwrap(), vec![1024, 2048, 4096]);
        assert_eq!(parse_n_list("64,128").unwrap(), vec![64, 128]);
        assert!(parse_n_list("2^12..2^10").is_err());
    }

    #[test]
    fn markov_canonical_verdict() {
        let out = run(&cli(&["markov-test", "--kernel", "canonical:H=0.7,c=-0.9"])).unwrap();
        let v = out.json.unwrap();
        assert_eq!(v["verdict"], "MarkovCanonical");
        assert_eq!(v["version"], "1");
        assert_eq!(v["seed"], "n/a");
    }

    #[test]
    fn markov_sfbm_verdict() {
        let out = run(&cli(&["markov-test", "--kernel", "sfbm:H=0.25"])).unwrap();
        assert_eq!(out.json.unwrap()["verdict"], "NotMarkov");
    }

    #[test]
    fn posdef_power_witness() {
        let out = run(&cli(&["posdef", "--alpha", "0.3", "--beta", "0.1", "--grid", "1,2"])).unwrap();
        let v = out.json.unwrap();
        assert_eq!(v["verdict"], "NotPsd");
        assert!(v["witness_value"].as_f64().unwrap() < 0.0);
    }

    #[test]
    fn stochastic_runs_need_a_seed() {
        let e = run(&cli(&["sample", "--kernel", "fbm:H=0.3", "--grid", "1,2", "--paths", "4"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn invalid_parameters_exit_two() {
        let e = run(&cli(&["kernel-eval", "--kernel", "canonical:H=0.7,c=-0.5", "--grid", "1,2"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn config_round_trip() {
        let text = r#"
[process]
family = "canonical"
H = 0.7
c = -inf

[grid]
geometric = { start = 0.05, stop = 5.0, points = 20 }

[mc]
n_paths = 100
seed = 7
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.spec().unwrap().to_string(), "canonical:H=0.7,c=-inf");
        let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(RunConfig::from_toml("[mc]\nseeds = 3\n").is_err());
    }
}
