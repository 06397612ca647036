//! Small dense linear algebra on row-major square matrices.

use crate::error::{Result, SsgmError};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(SsgmError::domain(
                    "matrix",
                    format!("row {i} has length {} but {n} rows were given", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).abs()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Leading principal submatrix of order `k`.
    pub fn leading(&self, k: usize) -> Matrix {
        let mut m = Matrix::zeros(k);
        for i in 0..k {
            for j in 0..k {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }

    /// `a^T M a`.
    pub fn quadratic_form(&self, a: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for j in 0..self.n {
                row += self.get(i, j) * a[j];
            }
            acc += a[i] * row;
        }
        acc
    }

    /// Product of Euclidean row norms, the Hadamard bound on `|det M|`.
    pub fn hadamard_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
            .product()
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det *= pivot;
            for i in k + 1..n {
                let factor = a[i * n + k] / pivot;
                if factor != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= factor * a[k * n + j];
                    }
                }
            }
        }
        det
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| {
            0.5 * (self.get(i, j) + self.get(j, i))
        });
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Lower-triangular factor `L` (row-major, full storage) with `M = L L^T`.
///
/// Pivots at or below `zero_tol` in magnitude are treated as exact zeros and
/// the corresponding column is left empty, which admits rank-deficient
/// positive semidefinite input. A pivot below `-zero_tol` is a failure.
pub fn cholesky_semidefinite(m: &Matrix, zero_tol: f64) -> Result<Matrix> {
    let n = m.dim();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let lj = &l.data[j * n..j * n + j];
        let s: f64 = lj.iter().map(|x| x * x).sum();
        let pivot = m.get(j, j) - s;
        if pivot < -zero_tol {
            return Err(SsgmError::Numerical(format!(
                "negative pivot {pivot:e} at index {j} of a {n}x{n} matrix"
            )));
        }
        if pivot <= zero_tol {
            continue;
        }
        let d = pivot.sqrt();
        l.data[j * n + j] = d;
        for i in j + 1..n {
            let (head, tail) = l.data.split_at(i * n);
            let li = &tail[..j];
            let lj = &head[j * n..j * n + j];
            let dot: f64 = li.iter().zip(lj).map(|(a, b)| a * b).sum();
            l.data[i * n + j] = (m.get(i, j) - dot) / d;
        }
    }
    Ok(l)
}

/// Outcome of symmetric diagonal pivoting.
#[derive(Clone, Debug)]
pub struct PivotedOutcome {
    /// Pivots in elimination order.
    pub pivots: Vec<f64>,
    /// `Some(a)` with `a^T M a < 0` when the factorization broke down.
    pub witness: Option<Vec<f64>>,
}

/// Pivoted `L D L^T` elimination (largest remaining diagonal first).
///
/// Stops at the first sign of indefiniteness, meaning a remaining diagonal
/// below `-tol` or a remaining 2x2 principal minor below `-tol^2`, and lifts
/// a negative direction of the Schur complement back to the original
/// coordinates as a witness.
pub fn pivoted_ldl(m: &Matrix, tol: f64) -> PivotedOutcome {
    let n = m.dim();
    let mut s = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    // Unit lower factor, row-major in permuted coordinates.
    let mut l = Matrix::zeros(n);
    let mut pivots = Vec::with_capacity(n);

    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if s.get(i, i) > s.get(p, p) {
                p = i;
            }
        }
        if p != k {
            swap_sym(&mut s, k, p);
            perm.swap(k, p);
            for j in 0..k {
                let tmp = l.get(k, j);
                l.set(k, j, l.get(p, j));
                l.set(p, j, tmp);
            }
        }
        let d = s.get(k, k);
        // Negative diagonal: the unit vector is a negative direction.
        if d < -tol {
            let mut z = vec![0.0; n - k];
            z[0] = 1.0;
            return finish(m, &l, &perm, k, z, pivots);
        }
        if d <= tol {
            // Remaining diagonal is numerically zero; any sizeable
            // off-diagonal entry makes a 2x2 minor negative.
            let mut worst = (0.0, k, k);
            for i in k..n {
                for j in i + 1..n {
                    let v = s.get(i, j).abs();
                    if v > worst.0 {
                        worst = (v, i, j);
                    }
                }
            }
            let (v, i, j) = worst;
            if v > tol.max(f64::MIN_POSITIVE) {
                let (aii, ajj, aij) = (s.get(i, i), s.get(j, j), s.get(i, j));
                let minor = aii * ajj - aij * aij;
                if minor < -tol * tol {
                    let z = negative_direction_2x2(aii, ajj, aij);
                    let mut full = vec![0.0; n - k];
                    full[i - k] = z.0;
                    full[j - k] = z.1;
                    return finish(m, &l, &perm, k, full, pivots);
                }
            }
            pivots.extend((k..n).map(|i| s.get(i, i)));
            return PivotedOutcome {
                pivots,
                witness: None,
            };
        }
        pivots.push(d);
        l.set(k, k, 1.0);
        for i in k + 1..n {
            l.set(i, k, s.get(i, k) / d);
        }
        for i in k + 1..n {
            let li = l.get(i, k);
            for j in k + 1..=i {
                let v = s.get(i, j) - li * d * l.get(j, k);
                s.set(i, j, v);
                s.set(j, i, v);
            }
        }
    }
    PivotedOutcome {
        pivots,
        witness: None,
    }
}

fn swap_sym(s: &mut Matrix, a: usize, b: usize) {
    let n = s.dim();
    for j in 0..n {
        let (x, y) = (s.get(a, j), s.get(b, j));
        s.set(a, j, y);
        s.set(b, j, x);
    }
    for i in 0..n {
        let (x, y) = (s.get(i, a), s.get(i, b));
        s.set(i, a, y);
        s.set(i, b, x);
    }
}

fn negative_direction_2x2(a: f64, b: f64, c: f64) -> (f64, f64) {
    // Eigenvector of [[a, c], [c, b]] for the smaller eigenvalue.
    let half_diff = 0.5 * (a - b);
    let lambda = 0.5 * (a + b) - (half_diff * half_diff + c * c).sqrt();
    if c.abs() > 0.0 {
        (c, lambda - a)
    } else if a < b {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    }
}

/// Lifts `z` (a direction in the Schur complement after `k` eliminations)
/// to `a` in the original coordinates with `a^T M a = z^T S z`.
fn finish(
    m: &Matrix,
    l: &Matrix,
    perm: &[usize],
    k: usize,
    z: Vec<f64>,
    pivots: Vec<f64>,
) -> PivotedOutcome {
    let n = m.dim();
    let mut y = vec![0.0; n];
    y[k..].copy_from_slice(&z);
    // Solve L11^T y1 = -L21^T z.
    for r in (0..k).rev() {
        let mut acc = 0.0;
        for i in r + 1..n {
            acc += l.get(i, r) * y[i];
        }
        y[r] = -acc;
    }
    let mut a = vec![0.0; n];
    for (pos, &orig) in perm.iter().enumerate() {
        a[orig] = y[pos];
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        a.iter_mut().for_each(|x| *x /= norm);
    }
    let witness = if m.quadratic_form(&a) < 0.0 {
        Some(a)
    } else {
        None
    };
    PivotedOutcome { pivots, witness }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn min_matrix(d: usize) -> Matrix {
        let rows: Vec<Vec<f64>> = (1..=d)
            .map(|i| (1..=d).map(|j| i.min(j) as f64).collect())
            .collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn determinant_of_min_matrix_is_one() {
        for d in 1..8 {
            assert!((min_matrix(d).determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn determinant_needs_pivoting() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(m.determinant(), -1.0);
    }

    #[test]
    fn cholesky_reproduces_matrix() {
        let m = min_matrix(5);
        let l = cholesky_semidefinite(&m, 1e-14).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let v: f64 = (0..5).map(|k| l.get(i, k) * l.get(j, k)).sum();
                assert!((v - m.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_accepts_rank_one() {
        let v = [1.0, 2.0, 3.0];
        let rows: Vec<Vec<f64>> = v.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let l = cholesky_semidefinite(&m, 1e-12).unwrap();
        assert_eq!(l.get(1, 1), 0.0);
        assert_eq!(l.get(2, 2), 0.0);
        assert!((l.get(2, 0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn pivoted_ldl_finds_witness_for_indefinite() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let out = pivoted_ldl(&m, 1e-12);
        let a = out.witness.expect("indefinite");
        assert!(m.quadratic_form(&a) < 0.0);
    }

    #[test]
    fn pivoted_ldl_zero_diagonal_offdiagonal_witness() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let a = pivoted_ldl(&m, 1e-12).witness.expect("indefinite");
        assert!(m.quadratic_form(&a) < 0.0);
    }

    #[test]
    fn pivoted_ldl_passes_semidefinite() {
        let out = pivoted_ldl(&min_matrix(6), 1e-12);
        assert!(out.witness.is_none());
        assert_eq!(out.pivots.len(), 6);
    }

    #[test]
    fn min_eigenvalue_of_diagonal() {
        let m = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -2.0]]).unwrap();
        assert!((m.min_eigenvalue() + 2.0).abs() < 1e-14);
    }
}
