use crate::error::{Error, Result};

/// Cholesky factor `L` of a symmetric positive-definite matrix, `A = L·Lᵀ`.
///
/// The lower triangle is stored packed by rows (row `i` starts at
/// `i(i+1)/2`), so appending a row for a new training point never moves the
/// existing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactor {
    n: usize,
    packed: Vec<f64>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Factor a dense row-major `n×n` symmetric matrix. Only the lower triangle is read.
pub fn spd_factor(matrix: &[f64], n: usize) -> Result<SpdFactor> {
    if matrix.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: matrix.len(),
        });
    }
    let mut factor = SpdFactor {
        n: 0,
        packed: Vec::with_capacity(row_start(n)),
    };
    for i in 0..n {
        factor.push_row(&matrix[i * n..i * n + i + 1])?;
    }
    Ok(factor)
}

/// Solve `A·x = rhs` given the factor of `A`.
pub fn spd_solve(factor: &SpdFactor, rhs: &[f64]) -> Result<Vec<f64>> {
    factor.solve(rhs)
}

impl SpdFactor {
    pub fn empty() -> Self {
        SpdFactor {
            n: 0,
            packed: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `L[i][j]` (zero above the diagonal).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.packed[row_start(i) + j]
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.packed[row_start(i)..row_start(i) + i + 1]
    }

    /// Extend the factor by one row/column. `row` holds `A[n][0..=n]`, i.e. the
    /// covariances with the existing points followed by the new diagonal entry.
    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        let n = self.n;
        if row.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                got: row.len(),
            });
        }
        let start = self.packed.len();
        for j in 0..n {
            let lj = self.row(j);
            let s = row[j] - dot(&self.packed[start..start + j], &lj[..j]);
            let v = s / lj[j];
            self.packed.push(v);
        }
        let diag = row[n];
        let pivot = diag
            - dot(
                &self.packed[start..start + n],
                &self.packed[start..start + n],
            );
        // Pivots at rounding level of the diagonal are treated as singular.
        if !(pivot > 4.0 * f64::EPSILON * diag.abs()) || !pivot.is_finite() {
            self.packed.truncate(start);
            return Err(Error::NotPositiveDefinite { row: n, pivot });
        }
        self.packed.push(pivot.sqrt());
        self.n += 1;
        Ok(())
    }

    /// Solve `L·y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let r = self.row(i);
            let s = b[i] - dot(&r[..i], &b[..i]);
            b[i] = s / r[i];
        }
    }

    /// Solve `L·y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check(b.len())?;
        let mut y = b.to_vec();
        self.solve_lower_in_place(&mut y);
        Ok(y)
    }

    /// Solve `Lᵀ·x = y` in place.
    pub fn solve_upper_in_place(&self, y: &mut [f64]) {
        for i in (0..self.n).rev() {
            let r = self.row(i);
            let xi = y[i] / r[i];
            y[i] = xi;
            for (yk, lik) in y[..i].iter_mut().zip(&r[..i]) {
                *yk -= lik * xi;
            }
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check(rhs.len())?;
        let mut x = rhs.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        Ok(x)
    }

    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.get(i, i).ln()).sum()
    }

    /// Dense row-major `A⁻¹`.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        // Columns of L⁻¹, then A⁻¹ = L⁻ᵀ L⁻¹.
        let mut linv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[c] = 1.0;
            self.solve_lower_in_place(&mut e);
            for r in c..n {
                linv[r * n + c] = e[r];
            }
        }
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k0 = i.max(j);
                let mut s = 0.0;
                for k in k0..n {
                    s += linv[k * n + i] * linv[k * n + j];
                }
                inv[i * n + j] = s;
                inv[j * n + i] = s;
            }
        }
        inv
    }

    /// Dense row-major `L·Lᵀ`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&self.row(i)[..=j], &self.row(j)[..=j]);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        a
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n {
            Err(Error::DimensionMismatch {
                expected: self.n,
                got: len,
            })
        } else {
            Ok(())
        }
    }
}
