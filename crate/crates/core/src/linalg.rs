//! Self-contained sparse/banded/dense linear algebra for the solvers:
//! CSR assembly, banded LU (1D systems), Jacobi-preconditioned CG/BiCGStab
//! (2D systems), and dense Cholesky for the Gram solves behind dual norms.
//!
//! Every solve is validated post-hoc by its residual; solvers never return
//! silently inaccurate answers.

use crate::error::{Error, Result};

/// Row-compressed square sparse matrix. Rows sorted by column, duplicate
/// triplets summed at construction, all values finite.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub n: usize,
    vals: Vec<f64>,
    cols: Vec<usize>,
    row_ptr: Vec<usize>,
}

impl SparseMatrix {
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<SparseMatrix> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "triplet ({i},{j}) out of range for n={n}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite entry at ({i},{j})"
                )));
            }
            per_row[i].push((j, v));
        }
        let mut vals = Vec::with_capacity(triplets.len());
        let mut cols = Vec::with_capacity(triplets.len());
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseMatrix {
            n,
            vals,
            cols,
            row_ptr,
        })
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                s += v * x[j];
            }
            y[i] = s;
        }
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            if let Ok(k) = cols.binary_search(&i) {
                d[i] = vals[k];
            }
        }
        d
    }

    /// Max |i − j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for i in 0..self.n {
            for &j in self.row(i).0 {
                bw = bw.max(i.abs_diff(j));
            }
        }
        bw
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let (jc, jv) = self.row(j);
                let vt = match jc.binary_search(&i) {
                    Ok(k) => jv[k],
                    Err(_) => 0.0,
                };
                if (v - vt).abs() > tol * (1.0 + v.abs().max(vt.abs())) {
                    return false;
                }
            }
        }
        true
    }

    /// Dense copy for small cross-checks.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[i * self.n + j] = v;
            }
        }
        d
    }
}

fn residual_inf(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut ax = vec![0.0; a.n];
    a.matvec(x, &mut ax);
    ax.iter()
        .zip(b)
        .map(|(axi, bi)| (axi - bi).abs())
        .fold(0.0, f64::max)
}

fn inf(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Direct banded LU with partial pivoting (LAPACK band layout).
///
/// Post: ‖Ax−b‖∞ ≤ 1e-10·(‖A‖∞‖x‖∞ + ‖b‖∞); violations are reported as
/// non-convergence rather than returned silently.
pub fn solve_direct_banded(a: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    if rhs.len() != n {
        return Err(Error::InvalidInput("rhs length mismatch".into()));
    }
    let kl = a.bandwidth();
    let ku = kl;
    // LAPACK gb layout with kl extra rows for pivoting fill:
    // A[i][j] stored at ab[kl + ku + i - j][j]; fill stays within the
    // augmented band for interchanges limited to p ≤ j + kl.
    let nrows = 2 * kl + ku + 1;
    let mut ab = vec![0.0; nrows * n];
    let at = |r: usize, c: usize| r * n + c;
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            ab[at(kl + ku + i - j, j)] = v;
        }
    }
    let mut x = rhs.to_vec();

    // LU factorization with row interchanges confined to the band
    for j in 0..n {
        // pivot search in column j, rows j..=min(n-1, j+kl)
        let mmax = (j + kl).min(n - 1);
        let mut p = j;
        let mut pmax = ab[at(kl + ku, j)].abs();
        for i in (j + 1)..=mmax {
            let v = ab[at(kl + ku + i - j, j)].abs();
            if v > pmax {
                pmax = v;
                p = i;
            }
        }
        if pmax == 0.0 || !pmax.is_finite() {
            return Err(Error::SingularPivot { row: j });
        }
        let cmax = (j + kl + ku).min(n - 1);
        if p != j {
            for c in j..=cmax {
                ab.swap(at(kl + ku + j - c, c), at(kl + ku + p - c, c));
            }
            x.swap(j, p);
        }
        // eliminate below
        let pivval = ab[at(kl + ku, j)];
        for i in (j + 1)..=mmax {
            let l = ab[at(kl + ku + i - j, j)] / pivval;
            ab[at(kl + ku + i - j, j)] = l;
            if l != 0.0 {
                for c in (j + 1)..=cmax {
                    ab[at(kl + ku + i - c, c)] -= l * ab[at(kl + ku + j - c, c)];
                }
                x[i] -= l * x[j];
            }
        }
    }
    // back substitution
    for i in (0..n).rev() {
        let cmax = (i + kl + ku).min(n - 1);
        let mut s = x[i];
        for c in (i + 1)..=cmax {
            s -= ab[at(kl + ku + i - c, c)] * x[c];
        }
        x[i] = s / ab[at(kl + ku, i)];
    }

    let res = residual_inf(a, &x, rhs);
    let bound = 1e-10 * (a.inf_norm() * inf(&x) + inf(rhs));
    if res > bound.max(1e-300) {
        return Err(Error::NoConvergence {
            method: "banded-lu",
            iterations: 0,
            residual: res,
        });
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterMethod {
    Cg,
    BiCgStab,
}

#[derive(Debug, Clone, Copy)]
pub struct IterStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned CG / BiCGStab with relative-residual stopping rule.
///
/// CG refuses nonsymmetric input; both report breakdown or max_iter overrun
/// as a [`Error::NoConvergence`] carrying the last residual.
pub fn solve_iterative(
    a: &SparseMatrix,
    rhs: &[f64],
    method: IterMethod,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, IterStats)> {
    if rhs.len() != a.n {
        return Err(Error::InvalidInput("rhs length mismatch".into()));
    }
    match method {
        IterMethod::Cg => {
            if !a.is_symmetric(1e-12) {
                return Err(Error::InvalidInput(
                    "cg requires a symmetric positive definite matrix".into(),
                ));
            }
            cg(a, rhs, tol, max_iter)
        }
        IterMethod::BiCgStab => bicgstab(a, rhs, tol, max_iter),
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn jacobi_inv(a: &SparseMatrix) -> Vec<f64> {
    a.diagonal()
        .into_iter()
        .map(|d| if d.abs() > 1e-300 { 1.0 / d } else { 1.0 })
        .collect()
}

fn cg(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, IterStats)> {
    let n = a.n;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            IterStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let minv = jacobi_inv(a);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&minv).map(|(ri, mi)| ri * mi).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NoConvergence {
                method: "cg (matrix not positive definite)",
                iterations: it,
                residual: norm2(&r) / bnorm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / bnorm;
        if rel <= tol {
            return Ok((
                x,
                IterStats {
                    iterations: it + 1,
                    residual: rel,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * minv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        method: "cg",
        iterations: max_iter,
        residual: norm2(&r) / bnorm,
    })
}

fn bicgstab(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, IterStats)> {
    let n = a.n;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            IterStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let minv = jacobi_inv(a);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 0..max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            return Err(Error::NoConvergence {
                method: "bicgstab (rho breakdown)",
                iterations: it,
                residual: norm2(&r) / bnorm,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        for i in 0..n {
            phat[i] = p[i] * minv[i];
        }
        a.matvec(&phat, &mut v);
        let r0v = dot(&r0, &v);
        if r0v.abs() < 1e-300 {
            return Err(Error::NoConvergence {
                method: "bicgstab (alpha breakdown)",
                iterations: it,
                residual: norm2(&r) / bnorm,
            });
        }
        alpha = rho / r0v;
        // s = r - alpha v
        let mut s = r.clone();
        for i in 0..n {
            s[i] -= alpha * v[i];
        }
        if norm2(&s) / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            let rel = residual_rel(a, &x, b, bnorm);
            return Ok((
                x,
                IterStats {
                    iterations: it + 1,
                    residual: rel,
                },
            ));
        }
        for i in 0..n {
            shat[i] = s[i] * minv[i];
        }
        a.matvec(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt.abs() < 1e-300 {
            return Err(Error::NoConvergence {
                method: "bicgstab (omega breakdown)",
                iterations: it,
                residual: norm2(&s) / bnorm,
            });
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm2(&r) / bnorm;
        if rel <= tol {
            let true_rel = residual_rel(a, &x, b, bnorm);
            return Ok((
                x,
                IterStats {
                    iterations: it + 1,
                    residual: true_rel,
                },
            ));
        }
    }
    Err(Error::NoConvergence {
        method: "bicgstab",
        iterations: max_iter,
        residual: norm2(&r) / bnorm,
    })
}

fn residual_rel(a: &SparseMatrix, x: &[f64], b: &[f64], bnorm: f64) -> f64 {
    let mut ax = vec![0.0; a.n];
    a.matvec(x, &mut ax);
    let mut s = 0.0;
    for i in 0..a.n {
        let d = ax[i] - b[i];
        s += d * d;
    }
    s.sqrt() / bnorm
}

/// Size cap for dense factorizations (Gram solves in the norms module).
pub const DENSE_CAP: usize = 20_000;

/// Cached dense Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    pub n: usize,
    /// Lower factor, row-major.
    l: Vec<f64>,
}

/// Factor a dense SPD matrix (row-major). Fails on indefinite input or when
/// `n` exceeds [`DENSE_CAP`].
pub fn dense_cholesky(a: &[f64], n: usize) -> Result<DenseCholesky> {
    if a.len() != n * n {
        return Err(Error::InvalidInput("dense matrix size mismatch".into()));
    }
    if n > DENSE_CAP {
        return Err(Error::InvalidInput(format!(
            "dense solve of dimension {n} exceeds the cap {DENSE_CAP}"
        )));
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            // s -= Σ_k L[i,k] L[j,k]
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            for (x, y) in ri.iter().zip(rj) {
                s -= x * y;
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "matrix not positive definite (pivot {s:.3e} at row {i})"
                    )));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(DenseCholesky { n, l })
}

impl DenseCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// One-shot dense SPD solve with residual verification.
pub fn solve_dense_spd(a: &[f64], n: usize, rhs: &[f64]) -> Result<Vec<f64>> {
    let chol = dense_cholesky(a, n)?;
    let x = chol.solve(rhs);
    // post-hoc residual check
    let mut rmax = 0.0f64;
    let mut anorm = 0.0f64;
    for i in 0..n {
        let mut s = 0.0;
        let mut rownorm = 0.0;
        for j in 0..n {
            s += a[i * n + j] * x[j];
            rownorm += a[i * n + j].abs();
        }
        rmax = rmax.max((s - rhs[i]).abs());
        anorm = anorm.max(rownorm);
    }
    let bound = 1e-9 * (anorm * inf(&x) + inf(rhs));
    if rmax > bound.max(1e-300) {
        return Err(Error::NoConvergence {
            method: "dense-cholesky",
            iterations: 0,
            residual: rmax,
        });
    }
    Ok(x)
}
