//! Gram matrices, positive-semidefiniteness checks and closed-form principal
//! minors of the `(s v t)^alpha / (s ^ t)^beta` family.
//!
//! The closed form comes from the determinant identity for matrices
//! `f_i(x_i ^ x_j)` over a chain: the Möbius function of a chain is `1` on the
//! diagonal and `-1` one step below it, so the determinant collapses to
//! `prod_i (f_i(x_i) - f_i(x_{i-1}))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsgmError};
use crate::format::csv_row;
use crate::kernels::{Kernel, PowerRatioKernel};
use crate::linalg::{pivoted_ldl, Matrix};

/// Default PSD tolerance, relative to the largest diagonal entry.
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

/// Strictly increasing, non-negative sample times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(SsgmError::domain("grid", "needs at least one time"));
        }
        for (i, &t) in times.iter().enumerate() {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(SsgmError::domain(
                    "grid",
                    format!("time #{i} = {t} is not finite and non-negative"),
                ));
            }
            if i > 0 && t <= times[i - 1] {
                return Err(SsgmError::domain(
                    "grid",
                    format!("times must strictly increase (#{} = {}, #{i} = {t})", i - 1, times[i - 1]),
                ));
            }
        }
        Ok(TimeGrid { times })
    }

    /// `points` geometrically spaced times from `start` to `stop` inclusive.
    pub fn geometric(start: f64, stop: f64, points: usize) -> Result<Self> {
        if !(start > 0.0 && stop > start) || points < 2 {
            return Err(SsgmError::domain(
                "grid",
                format!("geometric grid needs 0 < start < stop and >= 2 points; got ({start}, {stop}, {points})"),
            ));
        }
        let ratio = (stop / start).ln() / (points - 1) as f64;
        let mut times: Vec<f64> = (0..points).map(|i| start * (ratio * i as f64).exp()).collect();
        times[points - 1] = stop;
        TimeGrid::new(times)
    }

    /// `points` equally spaced times from `start` to `stop` inclusive.
    pub fn linear(start: f64, stop: f64, points: usize) -> Result<Self> {
        if !(start >= 0.0 && stop > start) || points < 2 {
            return Err(SsgmError::domain(
                "grid",
                format!("linear grid needs 0 <= start < stop and >= 2 points; got ({start}, {stop}, {points})"),
            ));
        }
        let step = (stop - start) / (points - 1) as f64;
        let mut times: Vec<f64> = (0..points).map(|i| start + step * i as f64).collect();
        times[points - 1] = stop;
        TimeGrid::new(times)
    }

    /// `{k/n : k = 0..=n}`.
    pub fn dyadic_unit(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(SsgmError::domain("n", "must be positive"));
        }
        TimeGrid::new((0..=n).map(|k| k as f64 / n as f64).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max(&self) -> f64 {
        *self.times.last().expect("grid is non-empty")
    }

    pub fn all_positive(&self) -> bool {
        self.times[0] > 0.0
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(SsgmError::domain("a", format!("scale must be positive, got {a}")));
        }
        TimeGrid::new(self.times.iter().map(|t| a * t).collect())
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = SsgmError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        TimeGrid::new(v)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Self {
        g.times
    }
}

/// `entries[i][j] = R(t_i, t_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub grid: TimeGrid,
    pub matrix: Matrix,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    /// CSV with the grid times as header row followed by the matrix rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        csv_row(&mut out, self.grid.times().iter().copied());
        for i in 0..self.dim() {
            csv_row(&mut out, self.matrix.row(i).iter().copied());
        }
        out
    }
}

/// Evaluates the upper triangle (rows in parallel) and mirrors it.
pub fn build_gram<K: Kernel + ?Sized>(kernel: &K, grid: &TimeGrid) -> Result<GramMatrix> {
    let t = grid.times();
    let d = t.len();
    let rows: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| {
            (i..d)
                .map(|j| {
                    kernel.eval(t[i], t[j]).map_err(|e| SsgmError::Entry {
                        i,
                        j,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut m = Matrix::zeros(d);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            m.set(i, i + off, v);
            m.set(i + off, i, v);
        }
    }
    Ok(GramMatrix {
        grid: grid.clone(),
        matrix: m,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PsdVerdict {
    Psd,
    NotPsd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosDefReport {
    pub verdict: PsdVerdict,
    /// Smallest eigenvalue of the Gram matrix (symmetric eigensolver).
    pub min_eigenvalue_bound: f64,
    /// Coefficients `a` with `sum a_k a_l R(t_k, t_l) < 0`, when not PSD.
    pub witness: Option<Vec<f64>>,
    /// The quadratic form evaluated at the witness.
    pub witness_value: Option<f64>,
}

/// PSD iff pivoted `L D L^T` elimination never meets a pivot below
/// `-tol * max_diagonal`; otherwise a negative direction is returned.
pub fn psd_check(gram: &GramMatrix, tol: f64) -> PosDefReport {
    let scale = gram.matrix.max_abs_diag().max(f64::MIN_POSITIVE);
    let outcome = pivoted_ldl(&gram.matrix, tol * scale);
    let min_eig = if gram.dim() > 0 {
        gram.matrix.min_eigenvalue()
    } else {
        0.0
    };
    match outcome.witness {
        Some(a) => {
            let value = gram.matrix.quadratic_form(&a);
            PosDefReport {
                verdict: PsdVerdict::NotPsd,
                min_eigenvalue_bound: min_eig,
                witness: Some(a),
                witness_value: Some(value),
            }
        }
        None => PosDefReport {
            verdict: PsdVerdict::Psd,
            min_eigenvalue_bound: min_eig,
            witness: None,
            witness_value: None,
        },
    }
}

/// Parameters `(alpha, beta)` and a positive grid for the power-ratio family.
#[derive(Clone, Debug, PartialEq)]
pub struct MinorQuery {
    pub alpha: f64,
    pub beta: f64,
    pub grid: TimeGrid,
}

impl MinorQuery {
    pub fn new(alpha: f64, beta: f64, grid: TimeGrid) -> Result<Self> {
        if !grid.all_positive() {
            return Err(SsgmError::domain("grid", "minor queries need all times > 0"));
        }
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(SsgmError::domain("alpha/beta", "must be finite"));
        }
        Ok(MinorQuery { alpha, beta, grid })
    }

    pub fn kernel(&self) -> PowerRatioKernel {
        PowerRatioKernel {
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    pub fn gram(&self) -> GramMatrix {
        build_gram(&self.kernel(), &self.grid).expect("power-ratio kernel is total on positive grids")
    }
}

/// Closed-form determinant of the `(alpha, beta)` Gram matrix:
/// `t_d^{alpha-beta} prod_{i<d} (t_i^{alpha+beta} - t_{i+1}^{alpha+beta}) / t_i^{2 beta}`.
pub fn lindstrom_minor(q: &MinorQuery) -> Result<f64> {
    let t = q.grid.times();
    if let Some(bad) = t.iter().find(|&&x| x <= 0.0) {
        return Err(SsgmError::domain("grid", format!("time {bad} is not positive")));
    }
    let gamma = q.alpha + q.beta;
    let d = t.len();
    let mut det = t[d - 1].powf(q.alpha - q.beta);
    for i in 0..d - 1 {
        // t_i^g - t_{i+1}^g = -t_i^g expm1(g ln(t_{i+1}/t_i))
        let diff = -t[i].powf(gamma) * (gamma * (t[i + 1] / t[i]).ln()).exp_m1();
        det *= diff / t[i].powf(2.0 * q.beta);
    }
    Ok(det)
}

/// `prod_i sum_j f_i(x_j) mu(x_j, x_i)` for the chain `x_1 < ... < x_d`,
/// i.e. `f_1(x_1) prod_{i>1} (f_i(x_i) - f_i(x_{i-1}))`.
///
/// `values[i][j]` holds `f_i(x_j)` for `j <= i`.
pub fn chain_det(values: &[Vec<f64>], grid: &TimeGrid) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(SsgmError::domain(
            "values",
            format!("{} rows for a grid of {} points", values.len(), grid.len()),
        ));
    }
    let mut det = 1.0;
    for (i, row) in values.iter().enumerate() {
        if row.len() < i + 1 {
            return Err(SsgmError::domain(
                "values",
                format!("row {i} needs {} entries, has {}", i + 1, row.len()),
            ));
        }
        let term = if i == 0 { row[0] } else { row[i] - row[i - 1] };
        det *= term;
    }
    Ok(det)
}

/// Lower-triangular table `f_i(t_j) = (t_i/t_j)^{alpha+beta}` used to express
/// the power-ratio determinant through [`chain_det`].
pub fn power_ratio_chain_table(q: &MinorQuery) -> Vec<Vec<f64>> {
    let t = q.grid.times();
    let gamma = q.alpha + q.beta;
    (0..t.len())
        .map(|i| (0..=i).map(|j| (t[i] / t[j]).powf(gamma)).collect())
        .collect()
}

/// Maximum grid size for direct determinants.
pub const MAX_DIRECT_MINOR: usize = 12;

/// `|closed form - direct determinant|`, scaled by the product of the Gram
/// matrix row norms (Hadamard's bound on the determinant).
pub fn minor_residual(q: &MinorQuery) -> Result<f64> {
    if q.grid.len() > MAX_DIRECT_MINOR {
        return Err(SsgmError::domain(
            "grid",
            format!("direct determinants are limited to d <= {MAX_DIRECT_MINOR}"),
        ));
    }
    let gram = q.gram();
    let direct = gram.matrix.determinant();
    let closed = lindstrom_minor(q)?;
    let scale = gram.matrix.hadamard_bound();
    if scale == 0.0 {
        return Ok((closed - direct).abs());
    }
    Ok((closed - direct).abs() / scale)
}

/// Leading principal minors of a Gram matrix, computed directly.
pub fn leading_minors(gram: &GramMatrix) -> Vec<f64> {
    (1..=gram.dim())
        .map(|k| gram.matrix.leading(k).determinant())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{CExponent, CovKernel, ProcessSpec};

    fn grid(v: &[f64]) -> TimeGrid {
        TimeGrid::new(v.to_vec()).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![-1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0]).is_ok());
        let g = TimeGrid::geometric(0.05, 5.0, 20).unwrap();
        assert_eq!(g.len(), 20);
        assert_eq!(g.times()[19], 5.0);
    }

    #[test]
    fn brownian_gram() {
        let k = CovKernel::new(ProcessSpec::brownian()).unwrap();
        let g = build_gram(&k, &grid(&[1.0, 2.0])).unwrap();
        assert_eq!(g.matrix.rows(), vec![vec![1.0, 1.0], vec![1.0, 2.0]]);
    }

    #[test]
    fn white_noise_gram_is_diagonal() {
        let k = CovKernel::new(ProcessSpec::WhiteNoise { h: 0.5 }).unwrap();
        let g = build_gram(&k, &grid(&[1.0, 2.0, 3.0])).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { (i + 1) as f64 } else { 0.0 };
                assert!((g.get(i, j) - expected).abs() < 1e-15);
            }
        }
        assert_eq!(psd_check(&g, DEFAULT_PSD_TOL).verdict, PsdVerdict::Psd);
    }

    #[test]
    fn canonical_gram_direct_substitution() {
        let k = CovKernel::new(ProcessSpec::canonical(0.75, -1.0)).unwrap();
        let g = build_gram(&k, &grid(&[1.0, 4.0])).unwrap();
        let expected = [[1.0, 2.0], [2.0, 8.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((g.get(i, j) - expected[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn build_gram_reports_entry() {
        struct Failing;
        impl Kernel for Failing {
            fn eval(&self, s: f64, _t: f64) -> Result<f64> {
                if s > 1.5 {
                    Err(SsgmError::Numerical("boom".into()))
                } else {
                    Ok(1.0)
                }
            }
            fn label(&self) -> String {
                "failing".into()
            }
        }
        let err = build_gram(&Failing, &grid(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, SsgmError::Entry { i: 1, j: 1, .. }), "{err}");
    }

    #[test]
    fn psd_witness_for_positive_alpha_plus_beta() {
        let q = MinorQuery::new(0.3, 0.2, grid(&[1.0, 2.0])).unwrap();
        let g = q.gram();
        assert!((g.get(0, 1) - 2f64.powf(0.3)).abs() < 1e-15);
        assert!((g.get(1, 1) - 2f64.powf(0.1)).abs() < 1e-15);
        let rep = psd_check(&g, DEFAULT_PSD_TOL);
        assert_eq!(rep.verdict, PsdVerdict::NotPsd);
        assert!(rep.witness_value.unwrap() < 0.0);
        assert!(rep.min_eigenvalue_bound < 0.0);
    }

    #[test]
    fn lindstrom_brownian_pair() {
        let q = MinorQuery::new(0.0, -1.0, grid(&[1.0, 2.0])).unwrap();
        assert!((lindstrom_minor(&q).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lindstrom_zero_when_alpha_plus_beta_vanishes() {
        let q = MinorQuery::new(0.4, -0.4, grid(&[0.5, 1.0, 3.0])).unwrap();
        assert_eq!(lindstrom_minor(&q).unwrap(), 0.0);
    }

    #[test]
    fn lindstrom_three_point_oracle() {
        // Direct 3x3 determinant, evaluated at 30 digits.
        const DET3: f64 = 0.003_657_013_821_872_107_040_875_734_928_04;
        let q = MinorQuery::new(-1.0, 0.5, grid(&[1.0, 2.0, 3.0])).unwrap();
        let v = lindstrom_minor(&q).unwrap();
        assert!((v - DET3).abs() < 1e-17, "{v}");
        assert!((q.gram().matrix.determinant() - DET3).abs() < 1e-15);
    }

    #[test]
    fn lindstrom_single_point() {
        let q = MinorQuery::new(0.7, -0.2, grid(&[2.0])).unwrap();
        assert!((lindstrom_minor(&q).unwrap() - 2f64.powf(0.9)).abs() < 1e-15);
        assert_eq!(minor_residual(&q).unwrap(), 0.0);
    }

    #[test]
    fn minor_query_needs_positive_grid() {
        assert!(MinorQuery::new(0.0, -1.0, grid(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn chain_det_examples() {
        assert_eq!(chain_det(&[vec![7.0]], &grid(&[1.0])).unwrap(), 7.0);
        let values = vec![vec![1.0], vec![1.0, 2.0], vec![1.0, 2.0, 3.0]];
        assert_eq!(chain_det(&values, &grid(&[1.0, 2.0, 3.0])).unwrap(), 1.0);
        assert!(chain_det(&values, &grid(&[1.0, 2.0])).is_err());
        assert!(chain_det(&[vec![1.0], vec![1.0]], &grid(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn chain_det_reproduces_lindstrom() {
        let q = MinorQuery::new(-1.3, 0.4, grid(&[0.7, 1.0, 1.6, 2.9, 4.0])).unwrap();
        let prefactor: f64 = q.grid.times().iter().map(|t| t.powf(q.alpha - q.beta)).product();
        let via_chain = prefactor * chain_det(&power_ratio_chain_table(&q), &q.grid).unwrap();
        let closed = lindstrom_minor(&q).unwrap();
        assert!((via_chain - closed).abs() <= 1e-10 * closed.abs());
    }

    #[test]
    fn minor_residual_brownian() {
        let q = MinorQuery::new(0.0, -1.0, grid(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!(minor_residual(&q).unwrap() <= 1e-12);
    }

    #[test]
    fn minor_residual_geometric_eight() {
        let q = MinorQuery::new(-2.0, 1.0, TimeGrid::geometric(0.5, 4.0, 8).unwrap()).unwrap();
        assert!(minor_residual(&q).unwrap() <= 1e-8);
    }

    #[test]
    fn canonical_leading_minors_nonnegative() {
        for (h, c) in [(0.3, -0.3), (0.7, -1.2), (1.1, -4.0)] {
            let k = CovKernel::new(ProcessSpec::CanonicalMarkov {
                h,
                c: CExponent::Finite(c),
            })
            .unwrap();
            let g = build_gram(&k, &TimeGrid::geometric(0.2, 3.0, 8).unwrap()).unwrap();
            for (k, m) in leading_minors(&g).into_iter().enumerate() {
                assert!(m >= -1e-12, "H={h} c={c} minor {k} = {m}");
            }
        }
    }

    #[test]
    fn csv_layout() {
        let k = CovKernel::new(ProcessSpec::brownian()).unwrap();
        let csv = build_gram(&k, &grid(&[1.0, 2.0])).unwrap().to_csv();
        assert_eq!(
            csv,
            "1.0000000000000000e+00,2.0000000000000000e+00\n\
             1.0000000000000000e+00,1.0000000000000000e+00\n\
             1.0000000000000000e+00,2.0000000000000000e+00\n"
        );
    }
}
