//! Space-time corrector cell problems and homogenized coefficients.
//!
//! The corrector φ_e solves ∂_t φ = ∇·(a(e + ∇φ)) on the whole space; here
//! it is approximated on a periodic torus: exact space-time-periodic cell
//! solves for periodic fields, and periodized RVE solves for random fields.
//! The time-periodic state is found by straight fixed-point iteration (march
//! one period, feed the terminal slice back) — the period map is a
//! contraction for uniformly elliptic a. For fields whose a is
//! time-invariant a single steady solve replaces the marching.
//!
//! Homogenized coefficients are cell averages of the corrected quantities:
//!
//! ```text
//!   ā e_i = ⟨a(e_i + ∇φ_{e_i})⟩,   b̄ e_i = ⟨b(e_i + ∇φ_{e_i})⟩,   d̄ = ⟨d⟩,
//! ```
//!
//! with face-based averaging so that the discrete zero-mean-gradient
//! identity (telescoping over the torus) holds exactly.

use crate::error::{Error, Result};
use crate::fields::{
    derive_seed, sym_eig_range, CheckerboardSpec, CoefficientField, Mat2, SampleCoefficients,
};
use crate::linalg::{solve_iterative, IterMethod, SparseMatrix};

/// Homogenized coefficient record with Monte-Carlo uncertainty (zero for
/// deterministic periodic fields).
#[derive(Debug, Clone, serde::Serialize)]
pub struct HomogenizedCoefficients {
    pub dim: usize,
    pub a_bar: Mat2,
    pub b_bar: [f64; 2],
    pub d_bar: f64,
    pub stderr_a: Mat2,
    pub stderr_b: [f64; 2],
    pub stderr_d: f64,
    /// Frobenius norm of the antisymmetric part of ā (reported, not asserted).
    pub a_bar_antisym: f64,
    /// Ellipticity metadata inherited from the source field.
    pub lambda: f64,
    pub cap_lambda: f64,
}

impl HomogenizedCoefficients {
    /// Wrap explicit constants (used by tests and the constant-field path).
    pub fn constant(dim: usize, a: Mat2, b: [f64; 2], d: f64) -> Self {
        let (_, hi) = sym_eig_range(&a, dim);
        let bsq = b[..dim].iter().map(|v| v * v).sum::<f64>();
        HomogenizedCoefficients {
            dim,
            a_bar: a,
            b_bar: b,
            d_bar: d,
            stderr_a: [[0.0; 2]; 2],
            stderr_b: [0.0; 2],
            stderr_d: 0.0,
            a_bar_antisym: 0.0,
            lambda: hi.max(1.0),
            cap_lambda: bsq.max(d * d),
        }
    }

    /// Symmetric part of ā.
    pub fn a_bar_sym(&self) -> Mat2 {
        let a = &self.a_bar;
        [
            [a[0][0], 0.5 * (a[0][1] + a[1][0])],
            [0.5 * (a[0][1] + a[1][0]), a[1][1]],
        ]
    }
}

impl SampleCoefficients for HomogenizedCoefficients {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, _x: [f64; 2], _t: f64) -> crate::fields::CoeffSample {
        crate::fields::CoeffSample {
            a: self.a_bar,
            b: self.b_bar,
            d: self.d_bar,
        }
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn cap_lambda(&self) -> f64 {
        self.cap_lambda
    }

    fn a_time_invariant(&self) -> bool {
        true
    }
}

/// Uniform periodic lattice on the torus [0, period)^d × one time period.
/// Nodes wrap; there is no duplicated endpoint in space.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    pub dim: usize,
    pub nx: usize,
    pub h: f64,
    pub period: f64,
    /// Time steps per period (slices 0..=nt are stored).
    pub nt: usize,
    pub dt: f64,
    pub t_window: f64,
}

impl CellGrid {
    pub fn n_nodes(&self) -> usize {
        self.nx.pow(self.dim as u32)
    }

    pub fn node_multi(&self, node: usize) -> [usize; 2] {
        match self.dim {
            1 => [node, 0],
            _ => [node % self.nx, node / self.nx],
        }
    }

    pub fn node_index(&self, ij: [usize; 2]) -> usize {
        match self.dim {
            1 => ij[0] % self.nx,
            _ => (ij[0] % self.nx) + self.nx * (ij[1] % self.nx),
        }
    }

    pub fn node_coord(&self, node: usize) -> [f64; 2] {
        let ij = self.node_multi(node);
        [
            ij[0] as f64 * self.h,
            if self.dim == 2 {
                ij[1] as f64 * self.h
            } else {
                0.0
            },
        ]
    }

    /// Neighbor with per-axis offset, wrapped on the torus.
    pub fn shifted(&self, node: usize, axis: usize, by: i64) -> usize {
        let mut ij = self.node_multi(node);
        ij[axis] = ((ij[axis] as i64 + by).rem_euclid(self.nx as i64)) as usize;
        self.node_index(ij)
    }
}

/// One corrector cell problem: field periodic on a torus, one direction.
pub struct CellProblem<'a> {
    pub field: &'a CoefficientField,
    /// Usually a canonical basis vector; arbitrary directions are allowed
    /// (the problem is linear in e, which the tests exploit).
    pub direction: [f64; 2],
    pub cell_nx: usize,
    pub cell_nt: usize,
    pub period_l: f64,
}

impl<'a> CellProblem<'a> {
    /// Cell problem along coordinate axis `axis` at spatial resolution
    /// `cell_nx`. Time steps per period default to max(64, 2·cell_nx): the
    /// micro dynamics are O(1) per period, so time resolution is tied to
    /// spatial resolution rather than to dt ≤ c·h².
    pub fn along_axis(field: &'a CoefficientField, axis: usize, cell_nx: usize) -> Result<Self> {
        if axis >= field.dim {
            return Err(Error::InvalidInput(format!(
                "direction axis {axis} out of range for d={}",
                field.dim
            )));
        }
        let mut e = [0.0; 2];
        e[axis] = 1.0;
        Self::new(field, e, cell_nx)
    }

    pub fn new(field: &'a CoefficientField, direction: [f64; 2], cell_nx: usize) -> Result<Self> {
        let period = field.spatial_period().ok_or_else(|| {
            Error::InvalidInput(
                "cell problems need a periodic field; periodize random fields first".into(),
            )
        })?;
        if cell_nx < 8 {
            return Err(Error::InvalidInput("cell_nx must be ≥ 8".into()));
        }
        let cell_nt = if field.a_time_invariant() {
            1
        } else {
            64.max(2 * cell_nx)
        };
        Ok(CellProblem {
            field,
            direction,
            cell_nx,
            cell_nt,
            period_l: period,
        })
    }

    fn grid(&self) -> CellGrid {
        let t_window = self.field.time_period().unwrap_or(1.0);
        let nt = if self.field.a_time_invariant() {
            1
        } else {
            self.cell_nt
        };
        CellGrid {
            dim: self.field.dim,
            nx: self.cell_nx,
            h: self.period_l / self.cell_nx as f64,
            period: self.period_l,
            nt,
            dt: t_window / nt as f64,
            t_window,
        }
    }
}

/// Converged corrector: nodal slices over one time period, face gradients
/// and fluxes, fixed-point gap, and the (normalized-away) space-time mean.
#[derive(Debug, Clone)]
pub struct CorrectorSolution {
    pub grid: CellGrid,
    pub direction: [f64; 2],
    /// Slices 0..=nt, each of length nx^d; slice nt closes the period.
    pub phi: Vec<Vec<f64>>,
    /// Face gradients per axis and slice: entry (axis, level, node) is
    /// (φ(node+e_axis) − φ(node))/h at the face between them.
    pub grad_phi: Vec<Vec<Vec<f64>>>,
    /// Face fluxes of a(e + ∇φ): component `axis` sampled at the same faces.
    pub flux: Vec<Vec<Vec<f64>>>,
    /// Fixed-point gap ‖φ(·, end) − φ(·, start)‖_{L²} at convergence.
    pub residual: f64,
    /// |space-time mean of φ| after normalization.
    pub mean: f64,
    pub periods_used: usize,
}

fn cell_l2(grid: &CellGrid, v: &[f64]) -> f64 {
    let w = grid.h.powi(grid.dim as i32);
    (v.iter().map(|x| x * x).sum::<f64>() * w).sqrt()
}

/// Assemble the periodic operator A = −∇·(a∇·) on the torus at time t,
/// plus the rhs ∇·(a e) (face-based divergence of the slope flux).
fn assemble_cell(
    problem: &CellProblem,
    grid: &CellGrid,
    t: f64,
) -> Result<(SparseMatrix, Vec<f64>)> {
    let n = grid.n_nodes();
    let dim = grid.dim;
    let h = grid.h;
    let h2 = h * h;
    let e = problem.direction;
    let mut trips = Vec::with_capacity((2 * dim + 1) * n + 1);
    let mut rhs = vec![0.0; n];
    for node in 0..n {
        let y = grid.node_coord(node);
        let mut diag = 0.0;
        for axis in 0..dim {
            let mut ym = y;
            ym[axis] -= 0.5 * h;
            let mut yp = y;
            yp[axis] += 0.5 * h;
            let am = problem.field.sample(ym, t).a;
            let ap = problem.field.sample(yp, t).a;
            let (lo_m, hi_m) = sym_eig_range(&am, dim);
            let (lo_p, hi_p) = sym_eig_range(&ap, dim);
            let lam = problem.field.lambda;
            if lo_m.min(lo_p) < 1.0 - 1e-9 || hi_m.max(hi_p) > lam + 1e-9 {
                return Err(Error::CoefficientBound(
                    "cell face sample violates ellipticity".into(),
                ));
            }
            let west = grid.shifted(node, axis, -1);
            let east = grid.shifted(node, axis, 1);
            diag += (am[axis][axis] + ap[axis][axis]) / h2;
            trips.push((node, west, -am[axis][axis] / h2));
            trips.push((node, east, -ap[axis][axis] / h2));
            // rhs: [ (a e)_axis at +face − at −face ] / h
            let fp: f64 = (0..dim).map(|k| ap[axis][k] * e[k]).sum();
            let fm: f64 = (0..dim).map(|k| am[axis][k] * e[k]).sum();
            rhs[node] += (fp - fm) / h;
            // cross-derivative part of −∇·(a∇·) for full tensors (2D)
            if dim == 2 {
                let other = 1 - axis;
                let (ce, cw) = (ap[axis][other], am[axis][other]);
                if ce != 0.0 || cw != 0.0 {
                    let q = 1.0 / (4.0 * h2);
                    let mut put = |di: i64, dj: i64, v: f64| {
                        let mut m = grid.node_multi(node);
                        m[axis] = ((m[axis] as i64 + di).rem_euclid(grid.nx as i64)) as usize;
                        m[other] = ((m[other] as i64 + dj).rem_euclid(grid.nx as i64)) as usize;
                        trips.push((node, grid.node_index(m), v));
                    };
                    put(0, 1, (-ce + cw) * q);
                    put(0, -1, (ce - cw) * q);
                    put(1, 1, -ce * q);
                    put(1, -1, ce * q);
                    put(-1, 1, cw * q);
                    put(-1, -1, -cw * q);
                }
            }
        }
        trips.push((node, node, diag));
    }
    Ok((SparseMatrix::from_triplets(n, &trips)?, rhs))
}

/// One implicit-Euler step of the cell problem: (1/dt + A)φ⁺ = φ/dt + rhs.
fn cell_step(
    problem: &CellProblem,
    grid: &CellGrid,
    t_new: f64,
    current: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let n = grid.n_nodes();
    let (a, mut rhs) = assemble_cell(problem, grid, t_new)?;
    let inv_dt = 1.0 / grid.dt;
    let mut trips = vec![(0usize, 0usize, 0.0f64); 0];
    trips.reserve(n);
    for i in 0..n {
        trips.push((i, i, inv_dt));
        rhs[i] += inv_dt * current[i];
    }
    // merge A with the 1/dt diagonal
    let mut all: Vec<(usize, usize, f64)> = trips;
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            all.push((i, j, v));
        }
    }
    let sys = SparseMatrix::from_triplets(n, &all)?;
    let method = if sys.is_symmetric(1e-12) {
        IterMethod::Cg
    } else {
        IterMethod::BiCgStab
    };
    let (x, _) = solve_iterative(&sys, &rhs, method, tol, 100_000)?;
    Ok(x)
}

/// Steady corrector for time-invariant a: solve Aφ = rhs on the torus with
/// node 0 pinned to lift the constant-function null space.
fn cell_steady(problem: &CellProblem, grid: &CellGrid, tol: f64) -> Result<Vec<f64>> {
    let n = grid.n_nodes();
    let (a, rhs) = assemble_cell(problem, grid, 0.0)?;
    // pinned system over nodes 1..n
    let m = n - 1;
    let mut trips = Vec::new();
    let mut rhs_p = vec![0.0; m];
    for i in 1..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j >= 1 {
                trips.push((i - 1, j - 1, v));
            }
        }
        rhs_p[i - 1] = rhs[i];
    }
    let sys = SparseMatrix::from_triplets(m, &trips)?;
    let method = if sys.is_symmetric(1e-12) {
        IterMethod::Cg
    } else {
        IterMethod::BiCgStab
    };
    let (x, _) = solve_iterative(&sys, &rhs_p, method, tol, 200_000)?;
    let mut phi = vec![0.0; n];
    phi[1..].copy_from_slice(&x);
    Ok(phi)
}

/// Default fixed-point tolerance on the periodicity gap.
pub const DEFAULT_CELL_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_PERIODS: usize = 64;

/// Solve the cell problem: march ∂_t φ = ∇·(a(e+∇φ)) with periodic spatial
/// boundary over time periods until the period map closes to `tol`, then
/// normalize the space-time mean to zero and attach face gradients/fluxes.
pub fn solve_cell_problem(
    problem: &CellProblem,
    tol: f64,
    max_periods: usize,
) -> Result<CorrectorSolution> {
    let grid = problem.grid();
    let n = grid.n_nodes();
    let lin_tol = (tol * 1e-3).clamp(1e-13, 1e-10);

    let (slices, residual, periods_used) = if problem.field.a_time_invariant() {
        let phi = cell_steady(problem, &grid, lin_tol)?;
        (vec![phi.clone(), phi], 0.0, 1)
    } else {
        // burn in without storing slices
        let mut state = vec![0.0; n];
        let mut gap = f64::INFINITY;
        let mut periods = 0;
        while periods < max_periods {
            let start = state.clone();
            for step in 1..=grid.nt {
                let t = step as f64 * grid.dt;
                state = cell_step(problem, &grid, t, &state, lin_tol)?;
            }
            periods += 1;
            let diff: Vec<f64> = state.iter().zip(&start).map(|(a, b)| a - b).collect();
            gap = cell_l2(&grid, &diff);
            if gap <= tol {
                break;
            }
        }
        if gap > tol {
            return Err(Error::CellNotConverged {
                periods: max_periods,
                gap,
            });
        }
        // one more stored period for the output trajectory
        let mut slices = Vec::with_capacity(grid.nt + 1);
        slices.push(state.clone());
        for step in 1..=grid.nt {
            let t = step as f64 * grid.dt;
            state = cell_step(problem, &grid, t, &state, lin_tol)?;
            slices.push(state.clone());
        }
        (slices, gap, periods)
    };

    let mut solution = CorrectorSolution {
        grid,
        direction: problem.direction,
        phi: slices,
        grad_phi: Vec::new(),
        flux: Vec::new(),
        residual,
        mean: 0.0,
        periods_used,
    };
    solution.normalize_mean();
    solution.attach_faces(problem.field);
    Ok(solution)
}

impl CorrectorSolution {
    fn space_time_mean(&self) -> f64 {
        // trapezoid in time over the period, equal weights on torus nodes
        let grid = &self.grid;
        let n = grid.n_nodes() as f64;
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for (lev, slice) in self.phi.iter().enumerate() {
            let w = if lev == 0 || lev == grid.nt { 0.5 } else { 1.0 };
            acc += w * slice.iter().sum::<f64>() / n;
            wsum += w;
        }
        acc / wsum
    }

    fn normalize_mean(&mut self) {
        let m = self.space_time_mean();
        for slice in &mut self.phi {
            for v in slice {
                *v -= m;
            }
        }
        self.mean = self.space_time_mean().abs();
    }

    fn attach_faces(&mut self, field: &CoefficientField) {
        let grid = self.grid.clone();
        let dim = grid.dim;
        let n = grid.n_nodes();
        let h = grid.h;
        let e = self.direction;
        let mut grad = vec![Vec::with_capacity(self.phi.len()); dim];
        let mut flux = vec![Vec::with_capacity(self.phi.len()); dim];
        for (lev, slice) in self.phi.iter().enumerate() {
            let t = lev as f64 * grid.dt;
            for (axis, (g_ax, f_ax)) in grad.iter_mut().zip(flux.iter_mut()).enumerate() {
                let mut g = vec![0.0; n];
                let mut f = vec![0.0; n];
                for node in 0..n {
                    let up = grid.shifted(node, axis, 1);
                    g[node] = (slice[up] - slice[node]) / h;
                    // flux component `axis` at the face midpoint
                    let mut y = grid.node_coord(node);
                    y[axis] += 0.5 * h;
                    let a = field.sample(y, t).a;
                    // e + ∇φ at this face: exact in `axis`, other component
                    // averaged from the four surrounding faces
                    let mut corrected = [0.0; 2];
                    corrected[axis] = e[axis] + g[node];
                    if dim == 2 {
                        let other = 1 - axis;
                        let gm = (slice[grid.shifted(node, other, 1)]
                            - slice[grid.shifted(node, other, -1)]
                            + slice[grid.shifted(up, other, 1)]
                            - slice[grid.shifted(up, other, -1)])
                            / (4.0 * h);
                        corrected[other] = e[other] + gm;
                    }
                    f[node] = (0..dim).map(|k| a[axis][k] * corrected[k]).sum();
                }
                g_ax.push(g);
                f_ax.push(f);
            }
        }
        self.grad_phi = grad;
        self.flux = flux;
    }

    /// Time weights (trapezoid over the stored period).
    fn time_weights(&self) -> Vec<f64> {
        let nt = self.grid.nt;
        (0..=nt)
            .map(|lev| if lev == 0 || lev == nt { 0.5 } else { 1.0 })
            .map(|w| w / nt as f64)
            .collect()
    }

    /// Space-time average of a stored per-axis face quantity.
    fn face_average(&self, data: &[Vec<Vec<f64>>], axis: usize) -> f64 {
        let n = self.grid.n_nodes() as f64;
        let tw = self.time_weights();
        let mut acc = 0.0;
        for (lev, w) in tw.iter().enumerate() {
            acc += w * data[axis][lev].iter().sum::<f64>() / n;
        }
        acc
    }

    /// Cell average of the face gradient along `axis` (telescopes to 0).
    pub fn mean_grad(&self, axis: usize) -> f64 {
        self.face_average(&self.grad_phi, axis)
    }

    /// Cell average of the flux component along `axis`.
    pub fn mean_flux(&self, axis: usize) -> f64 {
        self.face_average(&self.flux, axis)
    }

    /// Space-time mean of φ² (for sublinearity and E-functional scaling).
    pub fn mean_sq(&self) -> f64 {
        let n = self.grid.n_nodes() as f64;
        let tw = self.time_weights();
        let mut acc = 0.0;
        for (lev, w) in tw.iter().enumerate() {
            acc += w * self.phi[lev].iter().map(|v| v * v).sum::<f64>() / n;
        }
        acc
    }

    /// Periodic evaluation of φ at microscopic coordinates (y, s):
    /// multilinear in space, linear in time, tiled over the torus.
    pub fn phi_at(&self, y: [f64; 2], s: f64) -> f64 {
        let (lev0, lev1, wt) = self.time_bracket(s);
        let v0 = self.interp_slice(&self.phi[lev0], y);
        let v1 = self.interp_slice(&self.phi[lev1], y);
        v0 + wt * (v1 - v0)
    }

    /// Periodic evaluation of (∇φ)_axis at (y, s) from the staggered face
    /// gradients (faces live at offset +h/2 along their axis).
    pub fn grad_at(&self, axis: usize, y: [f64; 2], s: f64) -> f64 {
        let (lev0, lev1, wt) = self.time_bracket(s);
        let mut ys = y;
        ys[axis] -= 0.5 * self.grid.h;
        let v0 = self.interp_slice(&self.grad_phi[axis][lev0], ys);
        let v1 = self.interp_slice(&self.grad_phi[axis][lev1], ys);
        v0 + wt * (v1 - v0)
    }

    fn time_bracket(&self, s: f64) -> (usize, usize, f64) {
        let grid = &self.grid;
        let sw = s.rem_euclid(grid.t_window);
        let pos = sw / grid.dt;
        let lev0 = (pos.floor() as usize).min(self.phi.len() - 2);
        (lev0, lev0 + 1, (pos - lev0 as f64).clamp(0.0, 1.0))
    }

    fn interp_slice(&self, slice: &[f64], y: [f64; 2]) -> f64 {
        let grid = &self.grid;
        let h = grid.h;
        let nx = grid.nx as i64;
        let fx = (y[0].rem_euclid(grid.period)) / h;
        let i0 = fx.floor() as i64;
        let wx = fx - i0 as f64;
        let wrap = |k: i64| k.rem_euclid(nx) as usize;
        match grid.dim {
            1 => {
                let a = slice[wrap(i0)];
                let b = slice[wrap(i0 + 1)];
                a + wx * (b - a)
            }
            _ => {
                let fy = (y[1].rem_euclid(grid.period)) / h;
                let j0 = fy.floor() as i64;
                let wy = fy - j0 as f64;
                let at = |i: i64, j: i64| slice[wrap(i) + grid.nx * wrap(j)];
                let v00 = at(i0, j0);
                let v10 = at(i0 + 1, j0);
                let v01 = at(i0, j0 + 1);
                let v11 = at(i0 + 1, j0 + 1);
                v00 * (1.0 - wx) * (1.0 - wy)
                    + v10 * wx * (1.0 - wy)
                    + v01 * (1.0 - wx) * wy
                    + v11 * wx * wy
            }
        }
    }
}

/// Corrector quality report: the mean-zero, zero-mean-gradient, and
/// sublinearity properties measured on the computed solution.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CorrectorDiagnostics {
    pub mean_abs: f64,
    pub grad_mean_abs: Vec<f64>,
    /// (r, g(r)) with g(r) = (1/(r²|Q_r|))∫_{Q_r}|φ|², tiled periodically.
    pub sublinearity: Vec<(f64, f64)>,
    /// Log-log slope of g(r) when ≥ 2 radii were probed.
    pub sublinearity_slope: Option<f64>,
}

/// Evaluate the three corrector properties on tiled cylinders Q_r.
pub fn corrector_diagnostics(
    solution: &CorrectorSolution,
    tile_radii: &[f64],
) -> CorrectorDiagnostics {
    let dim = solution.grid.dim;
    let grad_mean_abs = (0..dim).map(|a| solution.mean_grad(a).abs()).collect();
    let mut sublinearity = Vec::new();
    for &r in tile_radii {
        // lattice quadrature over Q_r = B_r × (0, r²], periodic tiling of φ
        let ns = if dim == 1 { 257 } else { 65 };
        let nt = 65;
        let mut acc = 0.0;
        let mut count = 0usize;
        for it in 0..nt {
            let s = (it as f64 + 0.5) / nt as f64 * r * r;
            for jy in 0..(if dim == 2 { ns } else { 1 }) {
                let y1 = if dim == 2 {
                    -r + (jy as f64 + 0.5) / ns as f64 * 2.0 * r
                } else {
                    0.0
                };
                for ix in 0..ns {
                    let y0 = -r + (ix as f64 + 0.5) / ns as f64 * 2.0 * r;
                    let inside = match dim {
                        1 => y0.abs() < r,
                        _ => (y0 * y0 + y1 * y1).sqrt() < r,
                    };
                    if inside {
                        let v = solution.phi_at([y0, y1], s);
                        acc += v * v;
                        count += 1;
                    }
                }
            }
        }
        let mean_sq = if count > 0 { acc / count as f64 } else { 0.0 };
        sublinearity.push((r, mean_sq / (r * r)));
    }
    let sublinearity_slope =
        if sublinearity.len() >= 2 && sublinearity.iter().all(|&(_, g)| g > 0.0) {
            let pts: Vec<(f64, f64)> = sublinearity
                .iter()
                .map(|&(r, g)| (r.ln(), g.ln()))
                .collect();
            Some(least_squares_slope(&pts))
        } else {
            None
        };
    CorrectorDiagnostics {
        mean_abs: solution.mean,
        grad_mean_abs,
        sublinearity,
        sublinearity_slope,
    }
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (sx, sy): (f64, f64) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = pts.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

/// Cell averages of corrected quantities for correctors along every axis.
///
/// `solutions[i]` must be the corrector for basis direction i. Face-based
/// averaging keeps ⟨∇φ⟩ = 0 exactly (periodic telescoping), so constant b
/// reproduces b̄ = b to round-off.
pub fn homogenized_coefficients(
    field: &CoefficientField,
    solutions: &[CorrectorSolution],
) -> Result<HomogenizedCoefficients> {
    let dim = field.dim;
    if solutions.len() != dim {
        return Err(Error::InvalidInput(format!(
            "need {dim} corrector solutions, got {}",
            solutions.len()
        )));
    }
    for (i, sol) in solutions.iter().enumerate() {
        let mut e = [0.0; 2];
        e[i] = 1.0;
        if (sol.direction[0] - e[0]).abs() > 1e-12 || (sol.direction[1] - e[1]).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "solution {i} is not the corrector for basis direction {i}"
            )));
        }
    }
    // b̄ and d̄ average the raw coefficients, which may oscillate in time
    // even when the corrector is steady (a time-invariant): sample them on
    // a midpoint time lattice dense enough for the field's own time cells,
    // with the corrector gradient interpolated at face midpoints (exact on
    // the faces, so the telescoping ⟨∇φ⟩ = 0 identity survives).
    let grid = &solutions[0].grid;
    let n_time = ((4.0 * grid.t_window).ceil() as usize).max(64);
    let mut a_bar = [[0.0; 2]; 2];
    let mut b_bar = [0.0; 2];
    for (i, sol) in solutions.iter().enumerate() {
        for axis in 0..dim {
            a_bar[axis][i] = sol.mean_flux(axis);
        }
        // b̄ e_i = ⟨ Σ_j b_j (δ_ij + ∂_j φ) ⟩ with b sampled at the faces
        let n = grid.n_nodes() as f64;
        let mut acc = 0.0;
        for kt in 0..n_time {
            let t = (kt as f64 + 0.5) / n_time as f64 * grid.t_window;
            let mut t_acc = 0.0;
            for axis in 0..dim {
                for node in 0..grid.n_nodes() {
                    let mut y = grid.node_coord(node);
                    y[axis] += 0.5 * grid.h;
                    let b = field.sample(y, t).b;
                    let e_comp = if axis == i { 1.0 } else { 0.0 };
                    t_acc += b[axis] * (e_comp + sol.grad_at(axis, y, t));
                }
            }
            acc += t_acc / (n * n_time as f64);
        }
        b_bar[i] = acc;
    }
    // d̄ = plain space-time average of d over the cell
    let n = grid.n_nodes() as f64;
    let mut d_bar = 0.0;
    for kt in 0..n_time {
        let t = (kt as f64 + 0.5) / n_time as f64 * grid.t_window;
        let mut t_acc = 0.0;
        for node in 0..grid.n_nodes() {
            t_acc += field.sample(grid.node_coord(node), t).d;
        }
        d_bar += t_acc / (n * n_time as f64);
    }

    let antisym = if dim == 2 {
        (0.5 * (a_bar[0][1] - a_bar[1][0])).abs() * 2.0
    } else {
        0.0
    };
    let coeffs = HomogenizedCoefficients {
        dim,
        a_bar,
        b_bar,
        d_bar,
        stderr_a: [[0.0; 2]; 2],
        stderr_b: [0.0; 2],
        stderr_d: 0.0,
        a_bar_antisym: antisym,
        lambda: field.lambda,
        cap_lambda: field.cap_lambda,
    };
    // ellipticity of the symmetric part within [1−0.02, λ+0.02]
    let (lo, hi) = sym_eig_range(&coeffs.a_bar_sym(), dim);
    if lo < 1.0 - 0.02 || hi > field.lambda + 0.02 {
        return Err(Error::UnderResolved(format!(
            "homogenized ā spectrum [{lo:.4}, {hi:.4}] outside [1, λ]±0.02; refine the cell"
        )));
    }
    if d_bar > 0.02 {
        return Err(Error::UnderResolved(format!(
            "homogenized d̄ = {d_bar} must be ≤ 0"
        )));
    }
    Ok(coeffs)
}

/// Solve all axis correctors for one field at the given cell resolution.
pub fn solve_all_correctors(
    field: &CoefficientField,
    cell_nx: usize,
    tol: f64,
    max_periods: usize,
) -> Result<Vec<CorrectorSolution>> {
    (0..field.dim)
        .map(|axis| {
            let prob = CellProblem::along_axis(field, axis, cell_nx)?;
            solve_cell_problem(&prob, tol, max_periods)
        })
        .collect()
}

/// Monte-Carlo estimate of the homogenized coefficients over RVE samples:
/// realize the checkerboard per derived seed, periodize on the L-torus
/// (time window L² for space-time boards), solve, and aggregate mean and
/// standard error per entry. Deterministic given `base_seed`.
pub fn rve_estimate(
    spec: &CheckerboardSpec,
    period_l: usize,
    n_samples: usize,
    base_seed: u64,
    cell_nx: usize,
) -> Result<HomogenizedCoefficients> {
    if period_l < 1 || n_samples < 1 {
        return Err(Error::InvalidInput("need L ≥ 1 and n_samples ≥ 1".into()));
    }
    let mut per_sample = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let run = || -> Result<HomogenizedCoefficients> {
            let field = spec
                .realize(derive_seed(base_seed, k as u64))?
                .periodized(period_l, period_l * period_l)?;
            let sols =
                solve_all_correctors(&field, cell_nx, DEFAULT_CELL_TOL, DEFAULT_MAX_PERIODS)?;
            homogenized_coefficients(&field, &sols)
        };
        per_sample.push(run().map_err(|e| Error::Sample {
            index: k,
            source: Box::new(e),
        })?);
    }
    Ok(aggregate(per_sample))
}

fn aggregate(samples: Vec<HomogenizedCoefficients>) -> HomogenizedCoefficients {
    let n = samples.len() as f64;
    let dim = samples[0].dim;
    let mut mean = samples[0].clone();
    mean.a_bar = [[0.0; 2]; 2];
    mean.b_bar = [0.0; 2];
    mean.d_bar = 0.0;
    for s in &samples {
        for i in 0..2 {
            for j in 0..2 {
                mean.a_bar[i][j] += s.a_bar[i][j] / n;
            }
            mean.b_bar[i] += s.b_bar[i] / n;
        }
        mean.d_bar += s.d_bar / n;
    }
    let se = |f: &dyn Fn(&HomogenizedCoefficients) -> f64, m: f64| -> f64 {
        if samples.len() < 2 {
            return 0.0;
        }
        let var: f64 = samples.iter().map(|s| (f(s) - m).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    for i in 0..2 {
        for j in 0..2 {
            mean.stderr_a[i][j] = se(&|s| s.a_bar[i][j], mean.a_bar[i][j]);
        }
        mean.stderr_b[i] = se(&|s| s.b_bar[i], mean.b_bar[i]);
    }
    mean.stderr_d = se(&|s| s.d_bar, mean.d_bar);
    mean.a_bar_antisym = if dim == 2 {
        (mean.a_bar[0][1] - mean.a_bar[1][0]).abs()
    } else {
        0.0
    };
    mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{identity, make_constant, make_laminate, make_periodic, scalar_mat};

    #[test]
    fn constant_field_corrector_vanishes() {
        let f = make_constant(1, scalar_mat(2.0), [0.0; 2], 0.0, 4.0, 1.0).unwrap();
        let prob = CellProblem::along_axis(&f, 0, 32).unwrap();
        let sol = solve_cell_problem(&prob, 1e-10, 10).unwrap();
        for slice in &sol.phi {
            for v in slice {
                assert!(v.abs() < 1e-10);
            }
        }
        // flux = a·e exactly
        assert!((sol.mean_flux(0) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn two_phase_harmonic_mean() {
        // half-half laminate {1,4} on the unit period: ā = 2/(1 + 1/4) = 1.6
        let f = make_laminate(1, &[1.0, 4.0], 0, [0.0; 2], 0.0, 4.0, 1.0).unwrap();
        let prob = CellProblem::along_axis(&f, 0, 512).unwrap();
        let sol = solve_cell_problem(&prob, 1e-10, 10).unwrap();
        let coeffs = homogenized_coefficients(&f, &[sol]).unwrap();
        assert!(
            (coeffs.a_bar[0][0] - 1.6).abs() < 0.016,
            "ā = {} vs harmonic mean 1.6",
            coeffs.a_bar[0][0]
        );
    }

    #[test]
    fn corrector_mean_and_grad_mean_vanish() {
        let f = make_laminate(1, &[1.0, 4.0], 0, [0.0; 2], 0.0, 4.0, 1.0).unwrap();
        let prob = CellProblem::along_axis(&f, 0, 256).unwrap();
        let sol = solve_cell_problem(&prob, 1e-10, 10).unwrap();
        assert!(sol.mean < 1e-10);
        assert!(sol.mean_grad(0).abs() < 1e-8, "⟨∇φ⟩ = {}", sol.mean_grad(0));
    }

    #[test]
    fn time_periodic_cell_converges_geometrically() {
        let f = make_periodic(
            1,
            scalar_mat(2.0),
            0.5,
            identity(),
            [0.0; 2],
            0.0,
            0.0,
            0.0,
            4.0,
            1.0,
        )
        .unwrap();
        let prob = CellProblem::along_axis(&f, 0, 64).unwrap();
        let sol = solve_cell_problem(&prob, 1e-9, 32).unwrap();
        assert!(sol.residual <= 1e-9);
        assert!(sol.periods_used <= 5, "needed {} periods", sol.periods_used);
        // the period actually closed up
        let first = &sol.phi[0];
        let last = &sol.phi[sol.grid.nt];
        let gap: f64 = first
            .iter()
            .zip(last)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(gap < 1e-6, "gap {gap}");
    }

    #[test]
    fn constant_coefficients_recovered_exactly() {
        let a0 = [[2.0, 0.3], [0.3, 1.8]];
        let b0 = [0.4, -0.2];
        let d0 = -0.5;
        let f = make_constant(2, a0, b0, d0, 4.0, 1.0).unwrap();
        let sols = solve_all_correctors(&f, 16, 1e-10, 10).unwrap();
        let c = homogenized_coefficients(&f, &sols).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((c.a_bar[i][j] - a0[i][j]).abs() < 1e-10);
            }
            assert!((c.b_bar[i] - b0[i]).abs() < 1e-10);
        }
        assert!((c.d_bar - d0).abs() < 1e-12);
    }

    #[test]
    fn constant_b_reproduced_for_varying_a() {
        // zero-mean-gradient identity forces b̄ = b for any a-field
        let b0 = [0.25, 0.0];
        let f = make_laminate(1, &[1.0, 4.0], 0, b0, -0.25, 4.0, 1.0).unwrap();
        let sols = solve_all_correctors(&f, 128, 1e-10, 10).unwrap();
        let c = homogenized_coefficients(&f, &sols).unwrap();
        assert!((c.b_bar[0] - b0[0]).abs() < 1e-6, "b̄ = {:?}", c.b_bar);
    }

    #[test]
    fn laminate_2d_harmonic_arithmetic() {
        let f = make_laminate(2, &[1.0, 4.0], 0, [0.0; 2], 0.0, 4.0, 1.0).unwrap();
        let sols = solve_all_correctors(&f, 256, 1e-10, 10).unwrap();
        let c = homogenized_coefficients(&f, &sols).unwrap();
        assert!(
            (c.a_bar[0][0] - 1.6).abs() < 0.048,
            "ā₁₁ = {}",
            c.a_bar[0][0]
        );
        assert!(
            (c.a_bar[1][1] - 2.5).abs() < 0.075,
            "ā₂₂ = {}",
            c.a_bar[1][1]
        );
        assert!(c.a_bar[0][1].abs() < 1e-8 && c.a_bar[1][0].abs() < 1e-8);
    }

    #[test]
    fn direction_linearity() {
        let f = make_periodic(
            2,
            scalar_mat(2.0),
            0.5,
            identity(),
            [0.0; 2],
            0.0,
            0.0,
            0.0,
            4.0,
            1.0,
        )
        .unwrap();
        let p1 = CellProblem::along_axis(&f, 0, 24).unwrap();
        let p2 = CellProblem::along_axis(&f, 1, 24).unwrap();
        let p12 = CellProblem::new(&f, [1.0, 1.0], 24).unwrap();
        let s1 = solve_cell_problem(&p1, 1e-10, 32).unwrap();
        let s2 = solve_cell_problem(&p2, 1e-10, 32).unwrap();
        let s12 = solve_cell_problem(&p12, 1e-10, 32).unwrap();
        for lev in 0..=s1.grid.nt {
            for node in 0..s1.grid.n_nodes() {
                let sum = s1.phi[lev][node] + s2.phi[lev][node];
                assert!(
                    (s12.phi[lev][node] - sum).abs() < 1e-6,
                    "linearity broke at ({node},{lev})"
                );
            }
        }
    }

    #[test]
    fn flux_compatibility_discrete_divergence() {
        // ∂_tφ − ∇·flux = 0 at torus nodes, to solver tolerance
        let f = make_periodic(
            1,
            scalar_mat(2.0),
            0.5,
            identity(),
            [0.0; 2],
            0.0,
            0.0,
            0.0,
            4.0,
            1.0,
        )
        .unwrap();
        let prob = CellProblem::along_axis(&f, 0, 64).unwrap();
        let sol = solve_cell_problem(&prob, 1e-10, 32).unwrap();
        let g = &sol.grid;
        for lev in 1..=g.nt {
            for node in 0..g.n_nodes() {
                let dphi_dt = (sol.phi[lev][node] - sol.phi[lev - 1][node]) / g.dt;
                let div: f64 = (0..g.dim)
                    .map(|ax| {
                        (sol.flux[ax][lev][node] - sol.flux[ax][lev][g.shifted(node, ax, -1)]) / g.h
                    })
                    .sum();
                assert!(
                    (dphi_dt - div).abs() < 1e-5,
                    "compatibility gap {} at ({node},{lev})",
                    dphi_dt - div
                );
            }
        }
    }

    #[test]
    fn sublinearity_slope_near_minus_two() {
        let f = make_laminate(1, &[1.0, 4.0], 0, [0.0; 2], 0.0, 4.0, 1.0).unwrap();
        let prob = CellProblem::along_axis(&f, 0, 256).unwrap();
        let sol = solve_cell_problem(&prob, 1e-10, 10).unwrap();
        let diag = corrector_diagnostics(&sol, &[2.0, 4.0, 8.0, 16.0]);
        let slope = diag.sublinearity_slope.unwrap();
        assert!((-2.3..=-1.7).contains(&slope), "slope {slope}");
        assert!(diag.grad_mean_abs[0] < 1e-8);
    }

    #[test]
    fn rve_single_value_palette_zero_spread() {
        let spec = CheckerboardSpec {
            dim: 1,
            a_values: vec![2.0],
            b_values: vec![[0.0; 2]],
            d_values: vec![-1.0],
            space_only: true,
            lambda: 4.0,
            cap_lambda: 1.0,
        };
        let est = rve_estimate(&spec, 4, 3, 99, 64).unwrap();
        assert!((est.a_bar[0][0] - 2.0).abs() < 1e-8);
        assert!(est.stderr_a[0][0] < 1e-12);
        assert!((est.d_bar - -1.0).abs() < 1e-12);
        assert!(est.stderr_d < 1e-12);
    }

    #[test]
    fn rve_two_phase_harmonic_band() {
        let spec = CheckerboardSpec {
            dim: 1,
            a_values: vec![1.0, 4.0],
            b_values: vec![[0.0; 2]],
            d_values: vec![0.0],
            space_only: true,
            lambda: 4.0,
            cap_lambda: 1.0,
        };
        let est = rve_estimate(&spec, 16, 32, 2024, 128).unwrap();
        assert!(
            (1.52..=1.68).contains(&est.a_bar[0][0]),
            "RVE ā = {} ± {}",
            est.a_bar[0][0],
            est.stderr_a[0][0]
        );
        assert!(est.stderr_a[0][0] > 0.0);
    }

    #[test]
    fn rve_spread_shrinks_with_l() {
        let spec = CheckerboardSpec {
            dim: 1,
            a_values: vec![1.0, 4.0],
            b_values: vec![[0.0; 2]],
            d_values: vec![0.0],
            space_only: true,
            lambda: 4.0,
            cap_lambda: 1.0,
        };
        let small = rve_estimate(&spec, 4, 16, 7, 64).unwrap();
        let large = rve_estimate(&spec, 16, 16, 7, 128).unwrap();
        assert!(
            large.stderr_a[0][0] < small.stderr_a[0][0],
            "stderr did not shrink: {} vs {}",
            large.stderr_a[0][0],
            small.stderr_a[0][0]
        );
    }
}
