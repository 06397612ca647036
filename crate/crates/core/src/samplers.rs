//! Path samplers and empirical covariance estimation.
//!
//! Every sampler draws path `i` from the substream `(seed, i)` and consumes
//! normals in grid (or inner-cell) order, so ensembles are bitwise identical
//! whatever the number of worker threads.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsgmError};
use crate::format::csv_row;
use crate::gram::{build_gram, TimeGrid};
use crate::kernels::{weight_f, CExponent, CovKernel, GFunction, Kernel, ProcessSpec};
use crate::linalg::{cholesky_semidefinite, Matrix};
use crate::rng::{derive_seed, Substream};

/// Default number of inner cells per unit time for Volterra discretizations.
pub const DEFAULT_INNER_STEPS: usize = 256;
/// Smallest admissible inner resolution.
pub const MIN_INNER_STEPS: usize = 64;
const MAX_INNER_STEPS: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    TimeChange,
    Cholesky,
    VolterraDiscrete,
    WhiteNoise,
}

/// `n_paths x d` sample values plus everything needed to regenerate them.
#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble {
    pub spec: ProcessSpec,
    pub grid: TimeGrid,
    /// Row-major, one row per path.
    pub values: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Inner cells per unit time (Volterra schemes).
    pub inner_steps: Option<usize>,
    /// Diagonal jitter factor used by the Cholesky scheme.
    pub jitter: Option<f64>,
    /// Set when a Volterra process is sampled outside its proven regime.
    pub unproven_regime: bool,
}

impl PathEnsemble {
    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.path(i)[j]).collect()
    }

    /// Grid times as header, one path per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        csv_row(&mut out, self.grid.times().iter().copied());
        for i in 0..self.n_paths {
            csv_row(&mut out, self.path(i).iter().copied());
        }
        out
    }

    pub fn sidecar(&self) -> EnsembleSidecar {
        EnsembleSidecar {
            version: crate::REPORT_SCHEMA_VERSION.to_string(),
            spec: self.spec.to_string(),
            grid: self.grid.times().to_vec(),
            seed: self.seed,
            scheme: self.scheme,
            n_paths: self.n_paths,
            dim: self.dim(),
            layout: "column-major f64 little-endian".to_string(),
            inner_steps: self.inner_steps,
            jitter: self.jitter,
            unproven_regime: self.unproven_regime,
        }
    }

    /// Column-major little-endian `f64` matrix (`n_paths` rows, `d` columns).
    pub fn to_column_major_bytes(&self) -> Vec<u8> {
        let d = self.dim();
        let mut out = Vec::with_capacity(self.values.len() * 8);
        for j in 0..d {
            for i in 0..self.n_paths {
                out.extend_from_slice(&self.values[i * d + j].to_le_bytes());
            }
        }
        out
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn write_binary(&self, stem: &Path) -> Result<()> {
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        write_file(&bin, &self.to_column_major_bytes())?;
        let text = serde_json::to_string_pretty(&self.sidecar())
            .map_err(|e| SsgmError::Numerical(format!("cannot encode sidecar: {e}")))?;
        write_file(&json, text.as_bytes())
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| SsgmError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

/// JSON description stored next to a binary ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSidecar {
    pub version: String,
    pub spec: String,
    pub grid: Vec<f64>,
    pub seed: u64,
    pub scheme: Scheme,
    pub n_paths: usize,
    pub dim: usize,
    pub layout: String,
    pub inner_steps: Option<usize>,
    pub jitter: Option<f64>,
    pub unproven_regime: bool,
}

/// Reads back a binary ensemble written by [`PathEnsemble::write_binary`],
/// returning the sidecar and the row-major values.
pub fn read_binary(stem: &Path) -> Result<(EnsembleSidecar, Vec<f64>)> {
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    let io = |p: &Path| {
        let p = p.display().to_string();
        move |source| SsgmError::Io { path: p, source }
    };
    let text = std::fs::read_to_string(&json).map_err(io(&json))?;
    let side: EnsembleSidecar =
        serde_json::from_str(&text).map_err(|e| SsgmError::Config(format!("bad sidecar: {e}")))?;
    let bytes = std::fs::read(&bin).map_err(io(&bin))?;
    if bytes.len() != side.n_paths * side.dim * 8 {
        return Err(SsgmError::Config(format!(
            "binary holds {} bytes, sidecar promises {}x{} doubles",
            bytes.len(),
            side.n_paths,
            side.dim
        )));
    }
    let mut values = vec![0.0; side.n_paths * side.dim];
    for (k, chunk) in bytes.chunks_exact(8).enumerate() {
        let (j, i) = (k / side.n_paths, k % side.n_paths);
        values[i * side.dim + j] = f64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
    }
    Ok((side, values))
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        return Err(SsgmError::domain("n_paths", "must be positive"));
    }
    Ok(())
}

/// Runs `fill(path_index, row)` for every path in parallel.
fn fill_paths<F>(n_paths: usize, d: usize, fill: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let mut values = vec![0.0; n_paths * d];
    if d == 0 {
        return values;
    }
    values
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(i, row)| fill(i, row));
    values
}

/// `X_t = t^{2H+c} W(t^{-2H-2c})` with `W` drawn at the time-changed points
/// from independent Gaussian increments. For `c = -H` every time maps to
/// `W(1)`, giving the rank-one paths `t^H W(1)`.
pub fn sample_timechange(h: f64, c: f64, grid: &TimeGrid, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    let spec = ProcessSpec::canonical(h, c);
    spec.validate()?;
    check_paths(n_paths)?;
    let times = grid.times().to_vec();
    let tau_exp = -2.0 * h - 2.0 * c;
    let scale_exp = 2.0 * h + c;
    let taus: Vec<f64> = times
        .iter()
        .map(|&t| if t == 0.0 { 0.0 } else { t.powf(tau_exp) })
        .collect();
    let scales: Vec<f64> = times.iter().map(|&t| if t == 0.0 { 0.0 } else { t.powf(scale_exp) }).collect();
    let values = fill_paths(n_paths, times.len(), |i, row| {
        let mut rng = Substream::new(seed, i as u64);
        let mut w = 0.0;
        let mut tau_prev = 0.0;
        for (k, slot) in row.iter_mut().enumerate() {
            if times[k] == 0.0 {
                *slot = 0.0;
                continue;
            }
            let dv = taus[k] - tau_prev;
            if dv > 0.0 {
                w += dv.sqrt() * rng.normal();
                tau_prev = taus[k];
            }
            *slot = scales[k] * w;
        }
    });
    Ok(PathEnsemble {
        spec,
        grid: grid.clone(),
        values,
        n_paths,
        seed,
        scheme: Scheme::TimeChange,
        inner_steps: None,
        jitter: None,
        unproven_regime: false,
    })
}

/// Independent `N(0, t^{2H})` draws at each grid time.
pub fn sample_whitenoise(h: f64, grid: &TimeGrid, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    let spec = ProcessSpec::WhiteNoise { h };
    spec.validate()?;
    check_paths(n_paths)?;
    let sd: Vec<f64> = grid.times().iter().map(|&t| t.powf(h)).collect();
    let values = fill_paths(n_paths, sd.len(), |i, row| {
        let mut rng = Substream::new(seed, i as u64);
        for (slot, &s) in row.iter_mut().zip(&sd) {
            *slot = if s == 0.0 { 0.0 } else { s * rng.normal() };
        }
    });
    Ok(PathEnsemble {
        spec,
        grid: grid.clone(),
        values,
        n_paths,
        seed,
        scheme: Scheme::WhiteNoise,
        inner_steps: None,
        jitter: None,
        unproven_regime: false,
    })
}

/// Jitter factors tried in turn; the first is exact factorization.
const JITTER_LADDER: [f64; 8] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Factorizes `gram` as `L L^T`, adding `delta * (trace/d) I` with `delta`
/// escalating from 1e-12 to 1e-6 only if the exact factorization fails.
pub fn factorize_with_jitter(gram: &Matrix) -> Result<(Matrix, f64)> {
    let d = gram.dim();
    let mean_diag = if d > 0 { gram.trace() / d as f64 } else { 0.0 };
    let zero_tol = 8.0 * d.max(1) as f64 * f64::EPSILON * gram.max_abs_diag();
    let mut last_err = None;
    for &delta in &JITTER_LADDER {
        let mut m = gram.clone();
        if delta > 0.0 {
            for i in 0..d {
                m.set(i, i, m.get(i, i) + delta * mean_diag);
            }
        }
        match cholesky_semidefinite(&m, zero_tol) {
            Ok(l) => return Ok((l, delta)),
            Err(e) => last_err = Some(e),
        }
    }
    Err(SsgmError::Numerical(format!(
        "Cholesky failed after maximal jitter 1e-6 on a {d}x{d} Gram matrix (trace/d = {mean_diag:e}, min eigenvalue {:e}): {}",
        if d <= 512 { gram.min_eigenvalue() } else { f64::NAN },
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Generic Gaussian sampler: `X = L z` with `L L^T` the (jittered) Gram matrix.
pub fn sample_cholesky(kernel: &CovKernel, grid: &TimeGrid, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    check_paths(n_paths)?;
    let gram = build_gram(kernel, grid)?;
    let (l, jitter) = factorize_with_jitter(&gram.matrix)?;
    let d = grid.len();
    let zero_col: Vec<bool> = grid.times().iter().map(|&t| t == 0.0).collect();
    let values = fill_paths(n_paths, d, |i, row| {
        let mut rng = Substream::new(seed, i as u64);
        let z: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        for (r, slot) in row.iter_mut().enumerate() {
            *slot = if zero_col[r] {
                0.0
            } else {
                l.row(r)[..=r].iter().zip(&z).map(|(a, b)| a * b).sum()
            };
        }
    });
    Ok(PathEnsemble {
        spec: *kernel.spec(),
        grid: grid.clone(),
        values,
        n_paths,
        seed,
        scheme: Scheme::Cholesky,
        inner_steps: None,
        jitter: Some(jitter),
        unproven_regime: false,
    })
}

/// Inner cell boundaries: the uniform mesh of `steps` cells per unit time on
/// `[0, max t]`, merged with the grid times.
fn inner_mesh(grid: &TimeGrid, steps: usize) -> Vec<f64> {
    let t_max = grid.max();
    let n_uniform = (t_max * steps as f64).ceil() as usize;
    let h = 1.0 / steps as f64;
    let mut pts: Vec<f64> = (0..=n_uniform).map(|k| (k as f64 * h).min(t_max)).collect();
    pts.extend(grid.times().iter().copied());
    pts.sort_by(f64::total_cmp);
    let tol = 1e-12 * t_max.max(1.0);
    let mut mesh: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match mesh.last() {
            Some(&last) if (p - last).abs() <= tol => {
                // Prefer exact grid times over uniform points.
                if grid.times().binary_search_by(|x| x.total_cmp(&p)).is_ok() {
                    *mesh.last_mut().expect("non-empty") = p;
                }
            }
            _ => mesh.push(p),
        }
    }
    mesh
}

/// Index into `mesh` of every grid time.
fn grid_positions(mesh: &[f64], grid: &TimeGrid) -> Vec<usize> {
    let mut k = 0;
    grid.times()
        .iter()
        .map(|t| {
            while mesh[k] != *t {
                k += 1;
                assert!(k < mesh.len(), "grid times are part of the inner mesh");
            }
            k
        })
        .collect()
}

/// Shared Volterra engine: `X_t = sum_cells w(t, cell) xi_cell` with
/// `xi_cell ~ N(0, 1)` drawn per path in cell order and `w` supplied by
/// `weight(t, a, b)`, the coefficient of the standard normal for cell `[a,b]`.
fn volterra_engine<W>(grid: &TimeGrid, mesh: &[f64], n_paths: usize, seed: u64, weight: W) -> Vec<f64>
where
    W: Fn(f64, f64, f64) -> f64 + Sync,
{
    let n_cells = mesh.len() - 1;
    let d = grid.len();
    let noise: Vec<f64> = fill_paths(n_paths, n_cells, |i, row| {
        let mut rng = Substream::new(seed, i as u64);
        for slot in row.iter_mut() {
            *slot = rng.normal();
        }
    });
    let positions = grid_positions(mesh, grid);
    // One column (grid time) at a time: weights shared by all paths.
    let columns: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let t = grid.times()[j];
            let end = positions[j];
            let mut col = vec![0.0; n_paths];
            if t == 0.0 || end == 0 {
                return col;
            }
            let w: Vec<f64> = (0..end).map(|k| weight(t, mesh[k], mesh[k + 1])).collect();
            for (p, slot) in col.iter_mut().enumerate() {
                let xi = &noise[p * n_cells..p * n_cells + end];
                *slot = w.iter().zip(xi).map(|(a, b)| a * b).sum();
            }
            col
        })
        .collect();
    let mut values = vec![0.0; n_paths * d];
    for (j, col) in columns.into_iter().enumerate() {
        for (p, v) in col.into_iter().enumerate() {
            values[p * d + j] = v;
        }
    }
    values
}

/// `Var(Z_1)` of the midpoint discretization with `steps` cells.
fn discrete_unit_variance(beta: f64, g: GFunction, steps: usize) -> f64 {
    let h = 1.0 / steps as f64;
    (0..steps)
        .map(|k| {
            let f = weight_f(beta, g, (k as f64 + 0.5) * h);
            f * f * h
        })
        .sum()
}

/// Doubles `steps` until the midpoint estimate of `Var(Z_1)` changes by at
/// most 1% between consecutive resolutions.
pub fn calibrate_inner_steps(beta: f64, g: GFunction, start: usize) -> usize {
    let mut steps = start.max(MIN_INNER_STEPS);
    while steps < MAX_INNER_STEPS {
        let coarse = discrete_unit_variance(beta, g, steps);
        let fine = discrete_unit_variance(beta, g, 2 * steps);
        if (fine - coarse).abs() <= 0.01 * fine.abs() {
            break;
        }
        steps *= 2;
    }
    steps
}

/// Discretized `Z_t = t^{H-1/2} sum_k F(m_k/t) dB_k` over the cells of `[0, t]`,
/// with `F(x) = (1-x)^beta g(x)` evaluated at cell midpoints `m_k`.
///
/// `inner_steps = None` starts at 256 cells per unit time and doubles while
/// the `Var(Z_1)` discretization error estimate exceeds 1%.
pub fn sample_volterra_zg(
    h: f64,
    beta: f64,
    g: GFunction,
    grid: &TimeGrid,
    inner_steps: Option<usize>,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    let spec = ProcessSpec::VolterraG { h, beta, g };
    spec.validate()?;
    check_paths(n_paths)?;
    let steps = match inner_steps {
        Some(s) if s < MIN_INNER_STEPS => {
            return Err(SsgmError::domain(
                "inner_steps",
                format!("must be at least {MIN_INNER_STEPS}, got {s}"),
            ));
        }
        Some(s) => s,
        None => calibrate_inner_steps(beta, g, DEFAULT_INNER_STEPS),
    };
    let mesh = inner_mesh(grid, steps);
    let values = volterra_engine(grid, &mesh, n_paths, seed, |t, a, b| {
        let m = 0.5 * (a + b);
        t.powf(h - 0.5) * weight_f(beta, g, m / t) * (b - a).sqrt()
    });
    Ok(PathEnsemble {
        spec,
        grid: grid.clone(),
        values,
        n_paths,
        seed,
        scheme: Scheme::VolterraDiscrete,
        inner_steps: Some(steps),
        jitter: None,
        unproven_regime: !spec.proven_regime(),
    })
}

/// Volterra discretization of the canonical process with exact cell weights
/// `(1/sqrt(b-a)) \int_a^b K_{H,c}(u,t) du` (closed-form power integrals).
pub fn sample_volterra_canonical(
    h: f64,
    c: f64,
    grid: &TimeGrid,
    inner_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    let spec = ProcessSpec::canonical(h, c);
    spec.validate()?;
    if !(c < -h) {
        return Err(SsgmError::domain("c", "the Volterra representation needs c < -H"));
    }
    check_paths(n_paths)?;
    if inner_steps < MIN_INNER_STEPS {
        return Err(SsgmError::domain(
            "inner_steps",
            format!("must be at least {MIN_INNER_STEPS}, got {inner_steps}"),
        ));
    }
    let p = -2.0 * (c + h);
    let q = 0.5 * (p + 1.0); // antiderivative exponent of u^{(p-1)/2}
    let coef = p.sqrt();
    let mesh = inner_mesh(grid, inner_steps);
    let values = volterra_engine(grid, &mesh, n_paths, seed, |t, a, b| {
        // \int_a^b sqrt(p) t^{H-1/2} (u/t)^{(p-1)/2} du
        let scale = coef * t.powf(h - 0.5) * t.powf(-(p - 1.0) * 0.5);
        let integral = scale * (b.powf(q) - a.powf(q)) / q;
        integral / (b - a).sqrt()
    });
    Ok(PathEnsemble {
        spec,
        grid: grid.clone(),
        values,
        n_paths,
        seed,
        scheme: Scheme::VolterraDiscrete,
        inner_steps: Some(inner_steps),
        jitter: None,
        unproven_regime: false,
    })
}

/// Family-appropriate exact (or finely discretized) sampler.
pub fn sample(spec: &ProcessSpec, grid: &TimeGrid, n_paths: usize, seed: u64, inner_steps: Option<usize>) -> Result<PathEnsemble> {
    match *spec {
        ProcessSpec::CanonicalMarkov { h, c: CExponent::Finite(c) } => sample_timechange(h, c, grid, n_paths, seed),
        ProcessSpec::CanonicalMarkov { h, c: CExponent::NegInfinity } | ProcessSpec::WhiteNoise { h } => {
            let mut e = sample_whitenoise(h, grid, n_paths, seed)?;
            e.spec = *spec;
            Ok(e)
        }
        ProcessSpec::VolterraG { h, beta, g } => sample_volterra_zg(h, beta, g, grid, inner_steps, n_paths, seed),
        _ => sample_cholesky(&CovKernel::new(*spec)?, grid, n_paths, seed),
    }
}

/// Sample mean, unbiased covariance and delta-method standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCov {
    pub grid: TimeGrid,
    pub mean: Vec<f64>,
    /// Row-major `d x d`.
    pub cov: Vec<f64>,
    /// Row-major `d x d` standard errors of `cov`.
    pub se: Vec<f64>,
    pub n_paths: usize,
}

impl EmpiricalCov {
    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.dim() + j]
    }

    pub fn se(&self, i: usize, j: usize) -> f64 {
        self.se[i * self.dim() + j]
    }
}

/// Pairwise (tree) summation with a fixed split, independent of threading.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Unbiased sample covariance with standard errors
/// `sqrt((m_4 - c^2)/n)`, `m_4 = mean((x_i - mu_i)^2 (x_j - mu_j)^2)`.
pub fn empirical_cov(ens: &PathEnsemble) -> Result<EmpiricalCov> {
    let n = ens.n_paths;
    if n < 2 {
        return Err(SsgmError::domain("n_paths", "empirical covariance needs at least 2 paths"));
    }
    let d = ens.dim();
    let columns: Vec<Vec<f64>> = (0..d).map(|j| ens.column(j)).collect();
    let mean: Vec<f64> = columns.iter().map(|c| pairwise_sum(c) / n as f64).collect();
    let centered: Vec<Vec<f64>> = columns
        .iter()
        .zip(&mean)
        .map(|(c, m)| c.iter().map(|x| x - m).collect())
        .collect();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let stats: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let prod: Vec<f64> = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).collect();
            let s = pairwise_sum(&prod);
            let cov = s / (n as f64 - 1.0);
            let mean_prod = s / n as f64;
            let sq: Vec<f64> = prod.iter().map(|p| p * p).collect();
            let m4 = pairwise_sum(&sq) / n as f64;
            let se = ((m4 - mean_prod * mean_prod).max(0.0) / n as f64).sqrt();
            (cov, se)
        })
        .collect();
    let mut cov = vec![0.0; d * d];
    let mut se = vec![0.0; d * d];
    for (&(i, j), &(c, s)) in pairs.iter().zip(&stats) {
        cov[i * d + j] = c;
        cov[j * d + i] = c;
        se[i * d + j] = s;
        se[j * d + i] = s;
    }
    Ok(EmpiricalCov {
        grid: ens.grid.clone(),
        mean,
        cov,
        se,
        n_paths: n,
    })
}

/// Entrywise comparison of an empirical covariance against a kernel:
/// `|cov - R| / se` per entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovComparison {
    pub max_z: f64,
    /// Entries (upper triangle) beyond `threshold` standard errors.
    pub exceed: usize,
    pub entries: usize,
    pub threshold: f64,
}

pub fn compare_to_kernel<K: Kernel + ?Sized>(emp: &EmpiricalCov, kernel: &K, threshold: f64) -> Result<CovComparison> {
    let d = emp.dim();
    let t = emp.grid.times();
    let mut max_z: f64 = 0.0;
    let mut exceed = 0;
    let mut entries = 0;
    for i in 0..d {
        for j in i..d {
            let r = kernel.eval(t[i], t[j])?;
            let diff = (emp.cov(i, j) - r).abs();
            let se = emp.se(i, j);
            let z = if se > 0.0 {
                diff / se
            } else if diff <= 1e-12 * r.abs().max(1e-300) {
                0.0
            } else {
                f64::INFINITY
            };
            max_z = max_z.max(z);
            entries += 1;
            if z > threshold {
                exceed += 1;
            }
        }
    }
    Ok(CovComparison {
        max_z,
        exceed,
        entries,
        threshold,
    })
}

/// Result of sampling on `grid` and on `a * grid` independently.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfSimReport {
    pub a: f64,
    pub h: f64,
    /// `max |cov_a - a^{2H} cov| / (4 * combined se)`; at most 1 when every
    /// entry is within four standard errors.
    pub max_deviation: f64,
    /// Entries beyond four combined standard errors.
    pub exceed: usize,
    pub entries: usize,
}

pub fn selfsim_check(spec: &ProcessSpec, a: f64, grid: &TimeGrid, n_paths: usize, seed: u64) -> Result<SelfSimReport> {
    spec.validate()?;
    if n_paths < 2 {
        return Err(SsgmError::domain("n_paths", "need at least 2 paths"));
    }
    let scaled = grid.scaled(a)?;
    let base = empirical_cov(&sample(spec, grid, n_paths, seed, None)?)?;
    let other = empirical_cov(&sample(spec, &scaled, n_paths, derive_seed(seed, 0x5E1F), None)?)?;
    let h = spec.hurst();
    let factor = a.powf(2.0 * h);
    let d = grid.len();
    let mut max_dev: f64 = 0.0;
    let mut exceed = 0;
    let mut entries = 0;
    for i in 0..d {
        for j in i..d {
            let diff = (other.cov(i, j) - factor * base.cov(i, j)).abs();
            let se = (other.se(i, j).powi(2) + (factor * base.se(i, j)).powi(2)).sqrt();
            let dev = if se > 0.0 {
                diff / (4.0 * se)
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            entries += 1;
            if dev > 1.0 {
                exceed += 1;
            }
            max_dev = max_dev.max(dev);
        }
    }
    Ok(SelfSimReport {
        a,
        h,
        max_deviation: max_dev,
        exceed,
        entries,
    })
}
