//! Command-line entry point: subcommand dispatch, configuration loading,
//! deterministic result serialization with provenance (config hash, seeds,
//! version). Wall-clock timings go to a separate sidecar so the CSV/JSON
//! outputs are byte-reproducible for identical (config, seed) runs.

use crate::config::{CoefficientsOutput, RunConfig, VERSION};
use crate::corrector::{
    corrector_diagnostics, rve_estimate, solve_all_correctors, DEFAULT_CELL_TOL,
    DEFAULT_MAX_PERIODS,
};
use crate::error::{Error, Result};
use crate::fields::derive_seed;
use crate::harness::{monte_carlo_ensemble, run_convergence_study, ConvergenceReport};
use crate::mesh::{build_grid, DiscreteField};
use crate::solver::{solve_problem, CauchyDirichletProblem};
use clap::{Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "parhom", version = VERSION, about = "Homogenization toolkit for parabolic equations with lower-order terms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "parhom.toml")]
    config: PathBuf,
    /// Concurrent solves.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Output format for tabular reports.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the Cauchy–Dirichlet problem on the configured grid and export
    /// the trajectory.
    Solve,
    /// Solve the corrector cell problems and report their quality measures.
    Corrector,
    /// Estimate homogenized coefficients (periodic cell or RVE averaging).
    Homogenize,
    /// Evaluate the oscillation error functional over the configured ε list.
    ErrorFunctional,
    /// Run the ε-sweep convergence study (ensemble for random fields).
    Converge,
    /// Probe the interior and global energy inequalities over an ensemble.
    DiagnoseCaccioppoli,
    /// Probe higher integrability of gradients over the configured δ list.
    DiagnoseMeyers,
    /// Check the structural bounds of the configured field by sampling.
    ValidateField,
}

/// Parse argv (without the program name) and run; returns the process exit
/// code: 0 success, 2 config error, 3 numeric failure, 4 io error.
pub fn dispatch<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let mut argv = vec!["parhom".to_string()];
    argv.extend(args);
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version as "errors" with success status
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let payload = serde_json::json!({
                "error": e.to_string(),
                "exit_code": e.exit_code(),
            });
            eprintln!("{payload}");
            e.exit_code()
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let hash = config.hash();
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Solve => cmd_solve(cli, &config, &hash),
        Command::Corrector => cmd_corrector(cli, &config, &hash),
        Command::Homogenize => cmd_homogenize(cli, &config, &hash),
        Command::ErrorFunctional => cmd_error_functional(cli, &config, &hash),
        Command::Converge => cmd_converge(cli, &config, &hash),
        Command::DiagnoseCaccioppoli => cmd_caccioppoli(cli, &config, &hash),
        Command::DiagnoseMeyers => cmd_meyers(cli, &config, &hash),
        Command::ValidateField => cmd_validate(cli, &config, &hash),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialization: {e}")))?;
    write_file(&path, text.as_bytes())?;
    Ok(path)
}

fn cmd_solve(cli: &Cli, config: &RunConfig, hash: &str) -> Result<()> {
    let field = config.field.realize(config.seed)?;
    let rescaled = crate::fields::rescale(&field, config.epsilon)?;
    let grid = Arc::new(build_grid(
        field.dim,
        (0.0, 1.0),
        config.grid.nx,
        (0.0, 0.25),
        config.grid.nt,
    )?);
    let data = config.profile_or_default().field(&grid);
    let problem =
        CauchyDirichletProblem::new(&rescaled, data).with_lambda_shift(config.lambda_shift);
    let result = solve_problem(&problem)?;

    // trajectory CSV: time, coordinates, value
    let mut csv = String::from("# config_hash=");
    csv.push_str(hash);
    csv.push('\n');
    csv.push_str(if grid.dim == 1 {
        "t,x,value\n"
    } else {
        "t,x,y,value\n"
    });
    for lev in 0..grid.nt {
        let t = grid.time(lev);
        for node in 0..grid.n_nodes() {
            let x = grid.node_coord(node);
            let v = result.solution.get(node, lev);
            if grid.dim == 1 {
                csv.push_str(&format!("{t},{},{v}\n", x[0]));
            } else {
                csv.push_str(&format!("{t},{},{},{v}\n", x[0], x[1]));
            }
        }
    }
    write_file(&cli.out.join("trajectory.csv"), csv.as_bytes())?;
    write_sidecar(
        &cli.out.join("trajectory.csv.header"),
        &[
            "t: time level",
            "x[,y]: node coordinates",
            "value: solution",
        ],
        hash,
    )?;
    let summary = serde_json::json!({
        "config_hash": hash,
        "seed": config.seed,
        "version": VERSION,
        "grid": { "nx": grid.nx, "nt": grid.nt },
        "epsilon": config.epsilon,
        "max_residual": result.max_residual,
        "parabolic_warning": grid.parabolic_warning,
    });
    write_json(&cli.out, "solve_summary", &summary)?;
    println!(
        "solve: wrote {} levels ({} nodes), hash {hash}",
        grid.nt,
        grid.n_nodes()
    );
    Ok(())
}

fn cmd_corrector(cli: &Cli, config: &RunConfig, hash: &str) -> Result<()> {
    let field = resolved_periodic_field(config)?;
    let cell_nx = config.study.as_ref().map(|s| s.cell_nx).unwrap_or(128);
    let sols = solve_all_correctors(&field, cell_nx, DEFAULT_CELL_TOL, DEFAULT_MAX_PERIODS)?;
    let mut reports = Vec::new();
    for (axis, sol) in sols.iter().enumerate() {
        let diag = corrector_diagnostics(sol, &[2.0, 4.0, 8.0, 16.0]);
        reports.push(serde_json::json!({
            "axis": axis,
            "residual": sol.residual,
            "periods_used": sol.periods_used,
            "diagnostics": diag,
        }));
        // nodal corrector export for plotting / downstream use
        let mut csv = format!("# config_hash={hash}\ns,y,phi\n");
        for (lev, slice) in sol.phi.iter().enumerate() {
            let s = lev as f64 * sol.grid.dt;
            for (node, v) in slice.iter().enumerate() {
                let y = sol.grid.node_coord(node);
                csv.push_str(&format!("{s},{},{v}\n", y[0]));
            }
        }
        write_file(
            &cli.out.join(format!("corrector_e{axis}.csv")),
            csv.as_bytes(),
        )?;
    }
    let payload = serde_json::json!({
        "config_hash": hash,
        "seed": config.seed,
        "version": VERSION,
        "correctors": reports,
    });
    write_json(&cli.out, "corrector", &payload)?;
    println!("corrector: {} direction(s) solved, hash {hash}", sols.len());
    Ok(())
}

/// A field suitable for cell problems: periodic kinds pass through, the
/// checkerboard is periodized on the configured RVE torus.
fn resolved_periodic_field(config: &RunConfig) -> Result<crate::fields::CoefficientField> {
    let field = config.field.realize(config.seed)?;
    if field.spatial_period().is_some() {
        return Ok(field);
    }
    let rve = config
        .rve
        .as_ref()
        .ok_or_else(|| Error::Config("random fields need an [rve] section".into()))?;
    let spec = config.field.checkerboard_spec()?;
    let time_period = if spec.space_only { 1 } else { rve.l * rve.l };
    field.periodized(rve.l, time_period)
}

fn cmd_homogenize(cli: &Cli, config: &RunConfig, hash: &str) -> Result<()> {
    let coefficients = if config.field.is_random() {
        let rve = config
            .rve
            .as_ref()
            .ok_or_else(|| Error::Config("checkerboard homogenization needs [rve]".into()))?;
        rve_estimate(
            &config.field.checkerboard_spec()?,
            rve.l,
            rve.n_samples,
            config.seed,
            rve.cell_nx,
        )?
    } else {
        let field = config.field.realize(config.seed)?;
        let cell_nx = config.study.as_ref().map(|s| s.cell_nx).unwrap_or(256);
        let sols = solve_all_correctors(&field, cell_nx, DEFAULT_CELL_TOL, DEFAULT_MAX_PERIODS)?;
        crate::corrector::homogenized_coefficients(&field, &sols)?
    };
    let out = CoefficientsOutput {
        config_hash: hash.to_string(),
        seed: config.seed,
        version: VERSION,
        coefficients,
    };
    write_json(&cli.out, "homogenized", &out)?;
    println!(
        "homogenize: ā₁₁ = {:.6} ± {:.2e}, d̄ = {:.6}, hash {hash}",
        out.coefficients.a_bar[0][0], out.coefficients.stderr_a[0][0], out.coefficients.d_bar
    );
    Ok(())
}

fn cmd_error_functional(cli: &Cli, config: &RunConfig, hash: &str) -> Result<()> {
    let field = resolved_periodic_field(config)?;
    let study = config
        .study
        .as_ref()
        .ok_or_else(|| Error::Config("error-functional needs [study] with epsilons".into()))?;
    let sols = solve_all_correctors(&field, study.cell_nx, DEFAULT_CELL_TOL, DEFAULT_MAX_PERIODS)?;
    let mut rows = Vec::new();
    for &eps in &study.epsilons {
        rows.push(crate::twoscale::error_functional(&field, &sols, eps)?);
    }
    let mut csv = format!(
        "# config_hash={hash}\nepsilon,term_phi_l2,term_grad_dual,term_flux_a,term_flux_b,term_d,total,coarse_nx,coarse_nt\n"
    );
    for e in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            e.epsilon,
            e.terms[0],
            e.terms[1],
            e.terms[2],
            e.terms[3],
            e.terms[4],
            e.total,
            e.coarse.0,
            e.coarse.1
        ));
    }
    write_file(&cli.out.join("error_functional.csv"), csv.as_bytes())?;
    write_sidecar(
        &cli.out.join("error_functional.csv.header"),
        &[
            "epsilon: scale parameter",
            "term_phi_l2: ε‖φ‖_L2 summed over directions",
            "term_grad_dual: ‖ε∇φ^ε‖₋₁",
            "term_flux_a: ‖a^ε(e+ε∇φ^ε)−āe‖₋₁",
            "term_flux_b: ‖b^ε(e+ε∇φ^ε)−b̄e‖₋₁",
            "term_d: ‖d^ε−d̄‖₋₁",
            "total: sum of the five terms",
            "coarse_nx/coarse_nt: dual-norm test-grid resolution",
        ],
        hash,
    )?;
    let payload = serde_json::json!({
        "config_hash": hash,
        "seed": config.seed,
        "version": VERSION,
        "rows": rows,
    });
    write_json(&cli.out, "error_functional", &payload)?;
    println!("error-functional: {} ε value(s), hash {hash}", rows.len());
    Ok(())
}

/// Deterministic CSV for a convergence report. Wall-clock runtimes are
/// deliberately not part of the table; they land in `timings.txt`.
pub fn emit_results(
    report: &ConvergenceReport,
    format: OutFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match format {
        OutFormat::Csv => {
            let mut csv = format!("# config_hash={}\n", report.config_hash);
            csv.push_str("epsilon,l2_error,dual_grad_error,e_total\n");
            for i in 0..report.epsilons.len() {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    report.epsilons[i],
                    report.l2_errors[i],
                    report.dual_grad_errors[i],
                    report.e_totals[i]
                ));
            }
            let path = dir.join("convergence.csv");
            write_file(&path, csv.as_bytes())?;
            write_sidecar(
                &dir.join("convergence.csv.header"),
                &[
                    "epsilon: scale parameter (decreasing)",
                    "l2_error: ‖p^ε−p₀‖_L2(V)",
                    "dual_grad_error: ‖∇p^ε−∇p₀‖ in the dual surrogate",
                    "e_total: error functional total on the reference cell",
                ],
                &report.config_hash,
            )?;
            written.push(path);
        }
        OutFormat::Json => {
            written.push(write_json(dir, "convergence", report)?);
        }
    }
    // volatile sidecar: wall-clock seconds, excluded from determinism
    let mut timings = String::from("# wall-clock seconds per epsilon (non-deterministic)\n");
    for (eps, rt) in report.epsilons.iter().zip(&report.runtimes) {
        timings.push_str(&format!("{eps} {rt:.3}\n"));
    }
    write_file(&dir.join("timings.txt"), timings.as_bytes())?;
    Ok(written)
}

fn write_sidecar(path: &Path, columns: &[&str], hash: &str) -> Result<()> {
    let mut text = format!("config_hash={hash}\ncolumns:\n");
    for c in columns {
        text.push_str("  ");
        text.push_str(c);
        text.push('\n');
    }
    write_file(path, text.as_bytes())
}

fn cmd_converge(cli: &Cli, config: &RunConfig, hash: &str) -> Result<()> {
    let mut opts = config.study_options()?;
    opts.jobs = cli.jobs;
    if config.field.is_random() {
        let spec = config.field.checkerboard_spec()?;
        let mc = config.ensemble_options()?;
        let mut report = monte_carlo_ensemble(&spec, &opts, &mc)?;
        report.config_hash = hash.to_string();
        for (_, sample) in &mut report.samples {
            sample.config_hash = hash.to_string();
        }
        write_json(&cli.out, "ensemble", &report)?;
        let mut csv =
            format!("# config_hash={hash}\nepsilon,median_l2,iqr_lo,iqr_hi,median_e_total\n");
        for i in 0..report.epsilons.len() {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                report.epsilons[i],
                report.median_l2[i],
                report.iqr_l2[i].0,
                report.iqr_l2[i].1,
                report.median_e_total[i]
            ));
        }
        write_file(&cli.out.join("ensemble.csv"), csv.as_bytes())?;
        println!(
            "converge (ensemble): {} samples, {} failures, hash {hash}",
            report.samples.len(),
            report.failures.len()
        );
    } else {
        let field = config.field.realize(config.seed)?;
        let mut report = run_convergence_study(&field, &opts)?;
        report.config_hash = hash.to_string();
        report.seed = config.seed;
        emit_results(&report, cli.format, &cli.out)?;
        // always keep the JSON (full report with provenance) as well
        if cli.format == OutFormat::Csv {
            emit_results(&report, OutFormat::Json, &cli.out)?;
        }
        if let Some((rate, r2)) = report.fitted_rate {
            println!("converge: fitted rate {rate:.3} (R² {r2:.3}), hash {hash}");
        } else {
            println!("converge: errors at floor (no rate fit), hash {hash}");
        }
    }
    Ok(())
}

fn cmd_caccioppoli(cli: &Cli, config: &RunConfig, hash: &str) -> Result<()> {
    let dim = config.field.dim();
    let grid = Arc::new(build_grid(
        dim,
        (0.0, 1.0),
        config.grid.nx,
        (0.0, 0.25),
        config.grid.nt,
    )?);
    let profile = config.profile_or_default();
    let lambda = config.field.cap_lambda();
    let diag = &config.diagnostics;
    let mut records = Vec::new();
    for k in 0..diag.n_samples {
        let seed = derive_seed(config.seed, k as u64);
        let field = config.field.realize(seed)?;
        let rescaled = crate::fields::rescale(&field, config.epsilon.min(0.25))?;
        let data = profile.field(&grid);
        let src = DiscreteField::from_fn(&grid, |_, _| 0.0);
        let problem = CauchyDirichletProblem::new(&rescaled, data)
            .with_source(src.clone())
            .with_lambda_shift(lambda);
        let solved = solve_problem(&problem)?;
        for &r in &diag.r_values {
            let center = [0.5; 2];
            let anchor = grid.t_lo;
            let rep = crate::diagnostics::caccioppoli_interior(
                &solved.solution,
                &src,
                &rescaled,
                lambda,
                r,
                center,
                anchor,
            )?;
            records.push(serde_json::json!({
                "probe": "caccioppoli-interior",
                "r": r,
                "seed": seed,
                "report": rep,
            }));
        }
        // global probe with zero boundary data and a bump source
        let zero = DiscreteField::zeros(&grid);
        let bump = DiscreteField::from_fn(&grid, |x, _| (-(x[0] - 0.5f64).powi(2) / 0.02).exp());
        let vproblem = CauchyDirichletProblem::new(&rescaled, zero)
            .with_source(bump.clone())
            .with_lambda_shift(lambda);
        let vsolved = solve_problem(&vproblem)?;
        let rep = crate::diagnostics::caccioppoli_global(
            &vsolved.solution,
            &bump,
            &rescaled,
            lambda,
            0.9,
            [0.5; 2],
            grid.t_lo,
        )?;
        records.push(serde_json::json!({
            "probe": "caccioppoli-global",
            "r": 0.9,
            "seed": seed,
            "report": rep,
        }));
    }
    let payload = serde_json::json!({
        "config_hash": hash,
        "seed": config.seed,
        "version": VERSION,
        "records": records,
    });
    write_json(&cli.out, "caccioppoli", &payload)?;
    println!(
        "diagnose-caccioppoli: {} record(s), hash {hash}",
        records.len()
    );
    Ok(())
}

fn cmd_meyers(cli: &Cli, config: &RunConfig, hash: &str) -> Result<()> {
    let dim = config.field.dim();
    let grid = Arc::new(build_grid(
        dim,
        (0.0, 1.0),
        config.grid.nx,
        (0.0, 0.25),
        config.grid.nt,
    )?);
    let profile = config.profile_or_default();
    let lambda = config.field.cap_lambda();
    let diag = &config.diagnostics;
    let mut records = Vec::new();
    for k in 0..diag.n_samples {
        let seed = derive_seed(config.seed, k as u64);
        let field = config.field.realize(seed)?;
        let rescaled = crate::fields::rescale(&field, config.epsilon.min(0.25))?;
        let data = profile.field(&grid);
        let rep =
            crate::diagnostics::meyers_probe(&rescaled, data, None, lambda, &diag.delta_list)?;
        records.push(serde_json::json!({
            "probe": "meyers",
            "seed": seed,
            "report": rep,
        }));
    }
    let payload = serde_json::json!({
        "config_hash": hash,
        "seed": config.seed,
        "version": VERSION,
        "records": records,
    });
    write_json(&cli.out, "meyers", &payload)?;
    println!("diagnose-meyers: {} record(s), hash {hash}", records.len());
    Ok(())
}

fn cmd_validate(cli: &Cli, config: &RunConfig, hash: &str) -> Result<()> {
    // construction enforces the structural bounds and names violations
    let field = config.field.realize(config.seed)?;
    let report = crate::fields::validate(&field, 20_000, derive_seed(config.seed, 1));
    let payload = serde_json::json!({
        "config_hash": hash,
        "seed": config.seed,
        "version": VERSION,
        "report": report,
    });
    write_json(&cli.out, "validate_field", &payload)?;
    if report.ok() {
        println!(
            "validate-field: ok (Rayleigh ∈ [{:.4}, {:.4}]), hash {hash}",
            report.rayleigh_min, report.rayleigh_max
        );
        Ok(())
    } else {
        Err(Error::CoefficientBound(report.violations.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_cfg(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("cfg.toml");
        std::fs::write(&p, text).unwrap();
        p
    }

    fn args(cfg: &Path, out: &Path, rest: &[&str]) -> Vec<String> {
        let mut v: Vec<String> = rest.iter().map(|s| s.to_string()).collect();
        v.push("--config".into());
        v.push(cfg.display().to_string());
        v.push("--out".into());
        v.push(out.display().to_string());
        v
    }

    #[test]
    fn unknown_subcommand_exits_2() {
        assert_eq!(dispatch(["frobnicate".to_string()]), 2);
    }

    #[test]
    fn missing_config_exits_2() {
        let dir = tempfile::tempdir().unwrap();
        let code = dispatch(args(
            &dir.path().join("nope.toml"),
            dir.path(),
            &["validate-field"],
        ));
        assert_eq!(code, 4); // io error reading the config file
    }

    #[test]
    fn validate_field_rejects_bad_d() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_cfg(
            dir.path(),
            r#"
[field]
kind = "constant"
dim = 1
a = [[1.0]]
d = 0.1
lambda = 4.0
cap_lambda = 1.0
"#,
        );
        let code = dispatch(args(&cfg, dir.path(), &["validate-field"]));
        assert_eq!(code, 3);
    }

    #[test]
    fn validate_field_ok() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_cfg(
            dir.path(),
            r#"
[field]
kind = "checkerboard"
dim = 1
a_values = [1.0, 4.0]
lambda = 4.0
cap_lambda = 1.0
"#,
        );
        let code = dispatch(args(&cfg, dir.path(), &["validate-field"]));
        assert_eq!(code, 0);
        assert!(dir.path().join("validate_field.json").exists());
    }

    #[test]
    fn emit_empty_report_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let report = ConvergenceReport {
            epsilons: vec![],
            l2_errors: vec![],
            dual_grad_errors: vec![],
            e_totals: vec![],
            e_terms: vec![],
            transform_residuals: vec![],
            transform_bounds: vec![],
            fitted_rate: None,
            dual_decay_ratio: 0.0,
            runtimes: vec![],
            coefficients: crate::corrector::HomogenizedCoefficients::constant(
                1,
                crate::fields::identity(),
                [0.0; 2],
                0.0,
            ),
            grid_nx: 0,
            grid_nt: 0,
            config_hash: "abc".into(),
            seed: 0,
        };
        emit_results(&report, OutFormat::Csv, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2); // hash comment + header row
        assert!(lines[1].starts_with("epsilon,"));
    }

    #[test]
    fn emit_same_report_twice_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let report = ConvergenceReport {
            epsilons: vec![0.25, 0.125],
            l2_errors: vec![0.1, 0.05],
            dual_grad_errors: vec![0.2, 0.1],
            e_totals: vec![0.3, 0.2],
            e_terms: vec![[0.1; 5], [0.05; 5]],
            transform_residuals: vec![1e-5, 1e-5],
            transform_bounds: vec![1e-4, 1e-4],
            fitted_rate: Some((1.0, 0.99)),
            dual_decay_ratio: 0.5,
            runtimes: vec![0.7, 1.3],
            coefficients: crate::corrector::HomogenizedCoefficients::constant(
                1,
                crate::fields::identity(),
                [0.0; 2],
                0.0,
            ),
            grid_nx: 65,
            grid_nt: 65,
            config_hash: "abc".into(),
            seed: 7,
        };
        let d1 = dir.path().join("a");
        let d2 = dir.path().join("b");
        emit_results(&report, OutFormat::Csv, &d1).unwrap();
        emit_results(&report, OutFormat::Csv, &d2).unwrap();
        emit_results(&report, OutFormat::Json, &d1).unwrap();
        emit_results(&report, OutFormat::Json, &d2).unwrap();
        for name in ["convergence.csv", "convergence.json"] {
            let a = std::fs::read(d1.join(name)).unwrap();
            let b = std::fs::read(d2.join(name)).unwrap();
            assert_eq!(a, b, "{name} not byte-identical");
        }
    }
}
