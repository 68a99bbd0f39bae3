//! Sparse complex linear algebra: CSR matrices and a preconditioned
//! BiCGStab solver.
//!
//! All discretized operators in the crate are assembled as complex CSR
//! matrices (real systems use complex entries with zero imaginary part) and
//! solved with BiCGStab under an ILU(0) preconditioner. The solver reports
//! the true relative residual, recomputed from the returned iterate rather
//! than the recurrence, so convergence claims are trustworthy.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;

use crate::error::MreptError;

/// Compressed-sparse-row matrix over complex numbers. Column indices within
/// each row are sorted and unique.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        n: usize,
        triplets: &[(usize, usize, Complex64)],
    ) -> Result<Self, MreptError> {
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(MreptError::InvalidConfig(format!(
                    "triplet ({r}, {c}) outside {n}x{n} matrix"
                )));
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(MreptError::InvalidConfig(format!(
                    "non-finite matrix entry {v} at ({r}, {c})"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, Complex64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            n,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[Complex64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// y = A x
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![Complex64::ZERO; self.n];
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            let mut acc = Complex64::ZERO;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
        y
    }

    /// Unconjugated transpose Aᵀ as a new CSR matrix.
    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for i in 0..self.n {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![Complex64::ZERO; self.nnz()];
        let mut next = counts;
        for r in 0..self.n {
            let (rc, rv) = self.row(r);
            for (&c, &v) in rc.iter().zip(rv) {
                let pos = next[c];
                cols[pos] = r;
                vals[pos] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Dense copy (row-major), intended for small test oracles.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut d = vec![vec![Complex64::ZERO; self.n]; self.n];
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                d[r][c] += v;
            }
        }
        d
    }

    /// Dump in Matrix Market coordinate format for external inspection.
    pub fn write_matrix_market(&self, path: &Path) -> Result<(), MreptError> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.17e} {:.17e}", r + 1, c + 1, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// ILU(0) factorization on the sparsity pattern of A. Stored in-place in a
/// CSR copy; L has unit diagonal.
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self, MreptError> {
        let n = a.n;
        let mut lu = a.clone();
        let mut diag = vec![usize::MAX; n];
        for r in 0..n {
            let (start, end) = (lu.row_ptr[r], lu.row_ptr[r + 1]);
            for p in start..end {
                if lu.cols[p] == r {
                    diag[r] = p;
                }
            }
            if diag[r] == usize::MAX {
                return Err(MreptError::InvalidConfig(format!(
                    "matrix row {r} has no diagonal entry; cannot factor"
                )));
            }
        }
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                let k = lu.cols[p];
                if k >= i {
                    break;
                }
                let ukk = lu.vals[diag[k]];
                if ukk.norm() == 0.0 {
                    return Err(MreptError::InvalidConfig(format!(
                        "zero pivot at row {k} during incomplete factorization"
                    )));
                }
                let lik = lu.vals[p] / ukk;
                lu.vals[p] = lik;
                // subtract lik * U(k, j) for j in this row's pattern, j > k
                let (krow_start, krow_end) = (lu.row_ptr[k], lu.row_ptr[k + 1]);
                let mut q = p + 1;
                for kp in krow_start..krow_end {
                    let j = lu.cols[kp];
                    if j <= k {
                        continue;
                    }
                    while q < end && lu.cols[q] < j {
                        q += 1;
                    }
                    if q < end && lu.cols[q] == j {
                        let ukj = lu.vals[kp];
                        lu.vals[q] -= lik * ukj;
                    }
                }
            }
        }
        Ok(Self { lu, diag })
    }

    /// Solve (LU) z = r.
    pub fn apply(&self, r: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.n;
        let mut z = r.to_vec();
        // forward: L z = r, unit diagonal
        for i in 0..n {
            let (start, _end) = (self.lu.row_ptr[i], self.lu.row_ptr[i + 1]);
            let mut acc = z[i];
            for p in start..self.diag[i] {
                acc -= self.lu.vals[p] * z[self.lu.cols[p]];
            }
            z[i] = acc;
        }
        // backward: U y = z
        for i in (0..n).rev() {
            let end = self.lu.row_ptr[i + 1];
            let mut acc = z[i];
            for p in self.diag[i] + 1..end {
                acc -= self.lu.vals[p] * z[self.lu.cols[p]];
            }
            z[i] = acc / self.lu.vals[self.diag[i]];
        }
        z
    }
}

/// Solver settings. `max_iter = None` defaults to 10 × n.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

/// Outcome of a successful solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    /// True relative residual ‖b - Ax‖ / ‖b‖ recomputed from the iterate.
    pub relative_residual: f64,
    pub wall_time_s: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solve A x = b with ILU(0)-preconditioned BiCGStab, starting from zero.
///
/// Returns the solution with a [`SolveReport`]; fails with
/// [`MreptError::NonConvergence`] if neither the true relative residual
/// ‖b − Ax‖/‖b‖ nor the normwise backward error ‖b − Ax‖/(‖A‖‖x‖ + ‖b‖)
/// reaches `tol` (with a 10× margin) within the iteration budget.
pub fn solve_bicgstab(
    a: &CsrMatrix,
    b: &[Complex64],
    config: &SolverConfig,
) -> Result<(Vec<Complex64>, SolveReport), MreptError> {
    assert_eq!(b.len(), a.n());
    let start = Instant::now();
    let n = a.n();
    let max_iter = config.max_iter.unwrap_or(10 * n);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            vec![Complex64::ZERO; n],
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                wall_time_s: start.elapsed().as_secs_f64(),
            },
        ));
    }
    let precond = Ilu0::new(a)?;
    let mut x = vec![Complex64::ZERO; n];
    let mut r = b.to_vec();
    let mut r_hat = r.clone();
    let mut rho = Complex64::ONE;
    let mut alpha = Complex64::ONE;
    let mut omega = Complex64::ONE;
    let mut v = vec![Complex64::ZERO; n];
    let mut p = vec![Complex64::ZERO; n];
    let mut iterations = 0usize;
    let breakdown_eps = 1e-300;

    // row norms differ by orders of magnitude when Dirichlet identity rows sit
    // next to 1/h²-scaled interior rows, which puts a floor of
    // ε·‖A‖·‖x‖/‖b‖ under the relative residual; accept the normwise backward
    // error ‖r‖/(‖A‖‖x‖ + ‖b‖) as the scale-independent alternative
    let anorm = (0..n)
        .map(|row| a.row(row).1.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);

    // when the recurrence claims convergence, verify against the true
    // residual and restart from it if the claim was optimistic
    let mut best_claim_rel = f64::INFINITY;
    let check_converged = |x: &[Complex64], r: &mut Vec<Complex64>| -> (bool, f64) {
        let ax = a.matvec(x);
        *r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let rnorm = norm(r);
        let rel = rnorm / bnorm;
        let backward = rnorm / (anorm * norm(x) + bnorm);
        (rel < config.tol || backward < config.tol, rel)
    };

    'outer: while iterations < max_iter {
        iterations += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new.norm() < breakdown_eps || omega.norm() < breakdown_eps {
            // breakdown: restart the shadow residual from the current one
            r_hat = r.clone();
            rho = Complex64::ONE;
            alpha = Complex64::ONE;
            omega = Complex64::ONE;
            v.iter_mut().for_each(|c| *c = Complex64::ZERO);
            p.iter_mut().for_each(|c| *c = Complex64::ZERO);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond.apply(&p);
        v = a.matvec(&p_hat);
        let denom = dot(&r_hat, &v);
        if denom.norm() < breakdown_eps {
            r_hat = r.clone();
            rho = Complex64::ONE;
            alpha = Complex64::ONE;
            omega = Complex64::ONE;
            continue;
        }
        alpha = rho / denom;
        let mut s = r.clone();
        axpy(&mut s, -alpha, &v);
        let claims_done = if norm(&s) / bnorm < config.tol {
            axpy(&mut x, alpha, &p_hat);
            true
        } else {
            let s_hat = precond.apply(&s);
            let t = a.matvec(&s_hat);
            let tt = dot(&t, &t);
            if tt.norm() < breakdown_eps {
                axpy(&mut x, alpha, &p_hat);
                true
            } else {
                omega = dot(&t, &s) / tt;
                axpy(&mut x, alpha, &p_hat);
                axpy(&mut x, omega, &s_hat);
                r = s;
                axpy(&mut r, -omega, &t);
                norm(&r) / bnorm < config.tol
            }
        };
        if claims_done {
            let rel = match check_converged(&x, &mut r) {
                (true, _) => break 'outer,
                (false, rel) => rel,
            };
            // stop once the true residual stops improving: it has hit its
            // rounding floor and the final check below decides the outcome
            if rel >= 0.9 * best_claim_rel {
                break 'outer;
            }
            best_claim_rel = rel;
            // optimistic recurrence: restart from the true residual
            r_hat = r.clone();
            rho = Complex64::ONE;
            alpha = Complex64::ONE;
            omega = Complex64::ONE;
            v.iter_mut().for_each(|c| *c = Complex64::ZERO);
            p.iter_mut().for_each(|c| *c = Complex64::ZERO);
        }
    }

    // trust only the recomputed residual
    let ax = a.matvec(&x);
    let true_res: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let rnorm = norm(&true_res);
    let rel = rnorm / bnorm;
    let backward = rnorm / (anorm * norm(&x) + bnorm);
    if !(rel <= config.tol * 10.0 || backward <= config.tol * 10.0) {
        return Err(MreptError::NonConvergence {
            iterations,
            residual: rel,
            tol: config.tol,
        });
    }
    Ok((
        x,
        SolveReport {
            iterations,
            relative_residual: rel,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    ))
}
