//! Python bindings for the parhom toolkit: coefficient fields, the
//! Cauchy–Dirichlet solver, corrector/homogenization, the error functional,
//! and the config-driven pipelines. Structured reports cross the boundary
//! as JSON strings; numeric results as plain tuples and lists.

use parhom::corrector::{
    corrector_diagnostics, homogenized_coefficients, rve_estimate, solve_all_correctors,
    CorrectorSolution, DEFAULT_CELL_TOL, DEFAULT_MAX_PERIODS,
};
use parhom::fields::{CoefficientField, Mat2, SampleCoefficients};
use parhom::harness::BoundaryProfile;
use parhom::mesh::{build_grid, region_mask, CylinderRegion, DiscreteField};
use parhom::norms::lp_norm;
use parhom::solver::{solve_problem, CauchyDirichletProblem};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::sync::Arc;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_mat(rows: Vec<Vec<f64>>, dim: usize) -> PyResult<Mat2> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err(format!(
            "a must be {dim}×{dim} nested lists"
        )));
    }
    let mut m = [[0.0; 2]; 2];
    if dim == 1 {
        m[0][0] = rows[0][0];
        m[1][1] = 1.0;
    } else {
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = rows[i][j];
            }
        }
    }
    Ok(m)
}

fn to_vec2(v: Vec<f64>) -> PyResult<[f64; 2]> {
    match v.len() {
        0 => Ok([0.0; 2]),
        1 => Ok([v[0], 0.0]),
        2 => Ok([v[0], v[1]]),
        n => Err(PyValueError::new_err(format!(
            "vector has {n} components, expected ≤ 2"
        ))),
    }
}

/// A stationary ergodic coefficient field (a, b, d).
#[pyclass]
#[derive(Clone)]
struct Field {
    inner: CoefficientField,
}

#[pymethods]
impl Field {
    #[staticmethod]
    #[pyo3(signature = (dim, a, b, d, lam, cap_lambda))]
    fn constant(
        dim: usize,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        d: f64,
        lam: f64,
        cap_lambda: f64,
    ) -> PyResult<Field> {
        Ok(Field {
            inner: parhom::fields::make_constant(
                dim,
                to_mat(a, dim)?,
                to_vec2(b)?,
                d,
                lam,
                cap_lambda,
            )
            .map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (dim, a0, amp_a, b0, amp_b, d0, amp_d, lam, cap_lambda))]
    #[allow(clippy::too_many_arguments)]
    fn periodic(
        dim: usize,
        a0: f64,
        amp_a: f64,
        b0: Vec<f64>,
        amp_b: f64,
        d0: f64,
        amp_d: f64,
        lam: f64,
        cap_lambda: f64,
    ) -> PyResult<Field> {
        Ok(Field {
            inner: parhom::fields::make_periodic(
                dim,
                parhom::fields::scalar_mat(a0),
                amp_a,
                parhom::fields::identity(),
                to_vec2(b0)?,
                amp_b,
                d0,
                amp_d,
                lam,
                cap_lambda,
            )
            .map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (dim, a_values, b_values, d_values, seed, space_only, lam, cap_lambda))]
    #[allow(clippy::too_many_arguments)]
    fn checkerboard(
        dim: usize,
        a_values: Vec<f64>,
        b_values: Vec<Vec<f64>>,
        d_values: Vec<f64>,
        seed: u64,
        space_only: bool,
        lam: f64,
        cap_lambda: f64,
    ) -> PyResult<Field> {
        let b: PyResult<Vec<[f64; 2]>> = b_values.into_iter().map(to_vec2).collect();
        Ok(Field {
            inner: parhom::fields::make_checkerboard(
                dim, &a_values, &b?, &d_values, seed, space_only, lam, cap_lambda,
            )
            .map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (dim, values, axis, b, d, lam, cap_lambda))]
    fn laminate(
        dim: usize,
        values: Vec<f64>,
        axis: usize,
        b: Vec<f64>,
        d: f64,
        lam: f64,
        cap_lambda: f64,
    ) -> PyResult<Field> {
        Ok(Field {
            inner: parhom::fields::make_laminate(
                dim,
                &values,
                axis,
                to_vec2(b)?,
                d,
                lam,
                cap_lambda,
            )
            .map_err(err)?,
        })
    }

    /// Periodize a checkerboard on an L-torus (RVE realization).
    fn periodized(&self, l: usize, t: usize) -> PyResult<Field> {
        Ok(Field {
            inner: self.inner.periodized(l, t).map_err(err)?,
        })
    }

    /// Sample (a, b, d) at a microscopic point.
    fn sample(&self, y: Vec<f64>, s: f64) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, f64)> {
        let dim = self.inner.dim;
        let c = self.inner.sample(to_vec2(y)?, s);
        let a = (0..dim).map(|i| c.a[i][..dim].to_vec()).collect();
        Ok((a, c.b[..dim].to_vec(), c.d))
    }

    /// Structural-bound spot check; returns the report as JSON.
    fn validate(&self, n_samples: usize, seed: u64) -> PyResult<String> {
        let rep = parhom::fields::validate(&self.inner, n_samples, seed);
        serde_json::to_string(&rep).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn lambda(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn cap_lambda(&self) -> f64 {
        self.inner.cap_lambda
    }
}

/// Corrector solutions for every coordinate direction of a periodic field.
#[pyclass]
struct Corrector {
    field: CoefficientField,
    solutions: Vec<CorrectorSolution>,
}

#[pymethods]
impl Corrector {
    #[staticmethod]
    fn solve(field: &Field, cell_nx: usize) -> PyResult<Corrector> {
        let solutions =
            solve_all_correctors(&field.inner, cell_nx, DEFAULT_CELL_TOL, DEFAULT_MAX_PERIODS)
                .map_err(err)?;
        Ok(Corrector {
            field: field.inner.clone(),
            solutions,
        })
    }

    /// (ā rows, b̄, d̄) from cell averaging of the corrected quantities.
    fn homogenized(&self) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, f64)> {
        let c = homogenized_coefficients(&self.field, &self.solutions).map_err(err)?;
        let dim = c.dim;
        let a = (0..dim).map(|i| c.a_bar[i][..dim].to_vec()).collect();
        Ok((a, c.b_bar[..dim].to_vec(), c.d_bar))
    }

    /// Mean-zero / zero-mean-gradient / sublinearity report as JSON.
    fn diagnostics(&self, axis: usize, radii: Vec<f64>) -> PyResult<String> {
        let sol = self
            .solutions
            .get(axis)
            .ok_or_else(|| PyValueError::new_err("axis out of range"))?;
        serde_json::to_string(&corrector_diagnostics(sol, &radii)).map_err(err)
    }

    /// Periodic evaluation of φ_axis at microscopic coordinates.
    fn phi_at(&self, axis: usize, y: Vec<f64>, s: f64) -> PyResult<f64> {
        let sol = self
            .solutions
            .get(axis)
            .ok_or_else(|| PyValueError::new_err("axis out of range"))?;
        Ok(sol.phi_at(to_vec2(y)?, s))
    }

    /// Fixed-point residual of each direction's cell solve.
    fn residuals(&self) -> Vec<f64> {
        self.solutions.iter().map(|s| s.residual).collect()
    }
}

/// One solved space-time trajectory.
#[pyclass]
struct Solution {
    field: DiscreteField,
    max_residual: f64,
}

#[pymethods]
impl Solution {
    /// Nodal values as one list per time level.
    fn values(&self) -> Vec<Vec<f64>> {
        (0..self.field.grid.nt)
            .map(|lev| self.field.level(lev).to_vec())
            .collect()
    }

    fn value(&self, node: usize, level: usize) -> f64 {
        self.field.get(node, level)
    }

    /// (nx, nt, h, dt) of the underlying grid.
    fn grid(&self) -> (usize, usize, f64, f64) {
        let g = &self.field.grid;
        (g.nx, g.nt, g.h, g.dt)
    }

    /// Space-time L² norm over the whole cylinder.
    fn l2(&self) -> PyResult<f64> {
        let mask = region_mask(&self.field.grid, &CylinderRegion::full(&self.field.grid));
        lp_norm(&self.field, &mask, 2.0).map_err(err)
    }

    #[getter]
    fn max_residual(&self) -> f64 {
        self.max_residual
    }
}

/// Solve the Cauchy–Dirichlet problem for the ε-rescaled field on the unit
/// box × (0, 0.25). `profile_json` is a boundary-profile description, e.g.
/// `{"kind": "sine-sheet", "kx": 1, "amplitude": 1.0, "decay": 0.5}`.
#[pyfunction]
#[pyo3(signature = (field, epsilon, nx, nt, profile_json, lambda_shift = 0.0))]
fn solve(
    field: &Field,
    epsilon: f64,
    nx: usize,
    nt: usize,
    profile_json: &str,
    lambda_shift: f64,
) -> PyResult<Solution> {
    let profile: BoundaryProfile = serde_json::from_str(profile_json).map_err(err)?;
    let rescaled = parhom::fields::rescale(&field.inner, epsilon).map_err(err)?;
    let grid = Arc::new(build_grid(field.inner.dim, (0.0, 1.0), nx, (0.0, 0.25), nt).map_err(err)?);
    let data = profile.field(&grid);
    let problem = CauchyDirichletProblem::new(&rescaled, data).with_lambda_shift(lambda_shift);
    let result = solve_problem(&problem).map_err(err)?;
    Ok(Solution {
        field: result.solution,
        max_residual: result.max_residual,
    })
}

/// Oscillation error functional on the reference cell; returns
/// (five terms, total).
#[pyfunction]
fn error_functional(
    field: &Field,
    corrector: &Corrector,
    epsilon: f64,
) -> PyResult<(Vec<f64>, f64)> {
    let e = parhom::twoscale::error_functional(&field.inner, &corrector.solutions, epsilon)
        .map_err(err)?;
    Ok((e.terms.to_vec(), e.total))
}

/// Monte-Carlo RVE estimate of the homogenized coefficients for a
/// checkerboard spec given as JSON
/// (`{"dim":1,"a_values":[1,4],"b_values":[[0,0]],"d_values":[0],
///    "space_only":true,"lambda":4,"cap_lambda":1}`).
#[pyfunction]
fn rve_homogenize(
    spec_json: &str,
    l: usize,
    n_samples: usize,
    base_seed: u64,
    cell_nx: usize,
) -> PyResult<String> {
    #[derive(serde::Deserialize)]
    struct SpecIn {
        dim: usize,
        a_values: Vec<f64>,
        b_values: Vec<Vec<f64>>,
        d_values: Vec<f64>,
        space_only: bool,
        lambda: f64,
        cap_lambda: f64,
    }
    let s: SpecIn = serde_json::from_str(spec_json).map_err(err)?;
    let b: PyResult<Vec<[f64; 2]>> = s.b_values.into_iter().map(to_vec2).collect();
    let spec = parhom::fields::CheckerboardSpec {
        dim: s.dim,
        a_values: s.a_values,
        b_values: b?,
        d_values: s.d_values,
        space_only: s.space_only,
        lambda: s.lambda,
        cap_lambda: s.cap_lambda,
    };
    let est = rve_estimate(&spec, l, n_samples, base_seed, cell_nx).map_err(err)?;
    serde_json::to_string(&est).map_err(err)
}

/// Run the ε-sweep convergence pipeline from a TOML config string; returns
/// the full report as JSON (same payload as the CLI's convergence.json).
#[pyfunction]
#[pyo3(signature = (config_toml, jobs = 1))]
fn run_converge(config_toml: &str, jobs: usize) -> PyResult<String> {
    let config = parhom::config::RunConfig::from_toml(config_toml).map_err(err)?;
    let mut opts = config.study_options().map_err(err)?;
    opts.jobs = jobs;
    if config.field.is_random() {
        let spec = config.field.checkerboard_spec().map_err(err)?;
        let mc = config.ensemble_options().map_err(err)?;
        let mut report = parhom::harness::monte_carlo_ensemble(&spec, &opts, &mc).map_err(err)?;
        report.config_hash = config.hash();
        serde_json::to_string(&report).map_err(err)
    } else {
        let field = config.field.realize(config.seed).map_err(err)?;
        let mut report = parhom::harness::run_convergence_study(&field, &opts).map_err(err)?;
        report.config_hash = config.hash();
        report.seed = config.seed;
        serde_json::to_string(&report).map_err(err)
    }
}

/// Canonical hash of a TOML config (stable under key reordering).
#[pyfunction]
fn config_hash(config_toml: &str) -> PyResult<String> {
    Ok(parhom::config::RunConfig::from_toml(config_toml)
        .map_err(err)?
        .hash())
}

#[pymodule]
fn parhom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Field>()?;
    m.add_class::<Corrector>()?;
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(error_functional, m)?)?;
    m.add_function(wrap_pyfunction!(rve_homogenize, m)?)?;
    m.add_function(wrap_pyfunction!(run_converge, m)?)?;
    m.add_function(wrap_pyfunction!(config_hash, m)?)?;
    m.add("__version__", parhom::config::VERSION)?;
    Ok(())
}
