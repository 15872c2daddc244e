//! Compressed sparse rows and a Jacobi-preconditioned biconjugate gradient
//! solver.

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().expect("previous entry") += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn mul_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.cols[k]] += self.vals[k] * x[i];
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map(|k| self.vals[k])
                    .unwrap_or(0.0)
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[i][self.cols[k]] = self.vals[k];
            }
        }
        d
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// ‖b − Ax‖ / ‖b‖ recomputed from the returned iterate.
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("biconjugate gradients broke down after {iterations} iterations (residual {residual:e})")]
    Breakdown { iterations: usize, residual: f64 },
    #[error("no convergence in {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("zero or non-finite diagonal entry in row {0}")]
    BadDiagonal(usize),
}

/// Preconditioned BiCG. Stops when `‖r‖/‖b‖ ≤ rtol`.
pub fn bicg(a: &CsrMatrix, b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> Result<SolveStats, SolveError> {
    let n = a.n();
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|d| *d == 0.0 || !d.is_finite()) {
        return Err(SolveError::BadDiagonal(i));
    }
    let inv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, relative_residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    a.mul(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut rt = r.clone();
    let (mut p, mut pt) = (vec![0.0; n], vec![0.0; n]);
    let (mut z, mut zt) = (vec![0.0; n], vec![0.0; n]);
    let (mut q, mut qt) = (vec![0.0; n], vec![0.0; n]);
    let mut rho_prev = 0.0;
    let mut res = norm(&r) / bnorm;
    let mut it = 0;
    let mut fresh = true;
    while res > rtol {
        if it >= max_iter {
            return Err(SolveError::MaxIterations { iterations: it, residual: res });
        }
        for i in 0..n {
            z[i] = inv[i] * r[i];
            zt[i] = inv[i] * rt[i];
        }
        let rho = dot(&z, &rt);
        if rho == 0.0 || !rho.is_finite() {
            return Err(SolveError::Breakdown { iterations: it, residual: res });
        }
        if fresh {
            p.copy_from_slice(&z);
            pt.copy_from_slice(&zt);
            fresh = false;
        } else {
            let beta = rho / rho_prev;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
                pt[i] = zt[i] + beta * pt[i];
            }
        }
        a.mul(&p, &mut q);
        a.mul_transpose(&pt, &mut qt);
        let denom = dot(&pt, &q);
        if denom == 0.0 || !denom.is_finite() {
            return Err(SolveError::Breakdown { iterations: it, residual: res });
        }
        let alpha = rho / denom;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
            rt[i] -= alpha * qt[i];
        }
        rho_prev = rho;
        it += 1;
        res = norm(&r) / bnorm;
        if res <= rtol {
            // the recursive residual can drift from the true one; confirm
            // and restart from the true residual if needed
            a.mul(x, &mut q);
            for i in 0..n {
                r[i] = b[i] - q[i];
            }
            res = norm(&r) / bnorm;
            if res > rtol {
                rt.copy_from_slice(&r);
                fresh = true;
            }
        }
    }
    Ok(SolveStats { iterations: it, relative_residual: res })
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}
