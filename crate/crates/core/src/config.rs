//! Declarative run configuration: one TOML file carries the field spec,
//! grid policy, data profile, sweep and probe parameters, and seeds.
//! Unknown keys are rejected, and the canonical config hash (over the
//! parsed structure, so key order in the file is immaterial) stamps every
//! emitted report.

use crate::corrector::HomogenizedCoefficients;
use crate::error::{Error, Result};
use crate::fields::{self, CheckerboardSpec, CoefficientField, Mat2};
use crate::harness::{BoundaryProfile, EnsembleOptions, StudyOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldConfig {
    /// Constant triple; `a` is given as d×d rows.
    Constant {
        dim: usize,
        a: Vec<Vec<f64>>,
        #[serde(default)]
        b: Vec<f64>,
        #[serde(default)]
        d: f64,
        lambda: f64,
        cap_lambda: f64,
    },
    /// a₀·I + amp_a·sin(2πy₁)cos(2πs)·I with analogous b/d oscillations.
    Periodic {
        dim: usize,
        a0: f64,
        #[serde(default)]
        amp_a: f64,
        #[serde(default)]
        b0: Vec<f64>,
        #[serde(default)]
        amp_b: f64,
        #[serde(default)]
        d0: f64,
        #[serde(default)]
        amp_d: f64,
        lambda: f64,
        cap_lambda: f64,
    },
    /// Seeded i.i.d. unit-cell palettes with a stationarity shift.
    Checkerboard {
        dim: usize,
        a_values: Vec<f64>,
        #[serde(default)]
        b_values: Vec<Vec<f64>>,
        #[serde(default)]
        d_values: Vec<f64>,
        #[serde(default)]
        space_only: bool,
        lambda: f64,
        cap_lambda: f64,
    },
    /// Deterministic equal-width isotropic bands along one axis.
    Laminate {
        dim: usize,
        values: Vec<f64>,
        #[serde(default)]
        axis: usize,
        #[serde(default)]
        b: Vec<f64>,
        #[serde(default)]
        d: f64,
        lambda: f64,
        cap_lambda: f64,
    },
}

fn to_vec2(v: &[f64], what: &str) -> Result<[f64; 2]> {
    match v.len() {
        0 => Ok([0.0; 2]),
        1 => Ok([v[0], 0.0]),
        2 => Ok([v[0], v[1]]),
        n => Err(Error::Config(format!(
            "{what} has {n} components, expected ≤ 2"
        ))),
    }
}

fn to_mat(rows: &[Vec<f64>], dim: usize) -> Result<Mat2> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Config(format!("matrix must be {dim}×{dim} rows")));
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

impl FieldConfig {
    pub fn dim(&self) -> usize {
        match self {
            FieldConfig::Constant { dim, .. }
            | FieldConfig::Periodic { dim, .. }
            | FieldConfig::Checkerboard { dim, .. }
            | FieldConfig::Laminate { dim, .. } => *dim,
        }
    }

    pub fn cap_lambda(&self) -> f64 {
        match self {
            FieldConfig::Constant { cap_lambda, .. }
            | FieldConfig::Periodic { cap_lambda, .. }
            | FieldConfig::Checkerboard { cap_lambda, .. }
            | FieldConfig::Laminate { cap_lambda, .. } => *cap_lambda,
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, FieldConfig::Checkerboard { .. })
    }

    /// Build the sampler; `seed` feeds the checkerboard realization.
    pub fn realize(&self, seed: u64) -> Result<CoefficientField> {
        match self {
            FieldConfig::Constant {
                dim,
                a,
                b,
                d,
                lambda,
                cap_lambda,
            } => fields::make_constant(
                *dim,
                to_mat(a, *dim)?,
                to_vec2(b, "b")?,
                *d,
                *lambda,
                *cap_lambda,
            ),
            FieldConfig::Periodic {
                dim,
                a0,
                amp_a,
                b0,
                amp_b,
                d0,
                amp_d,
                lambda,
                cap_lambda,
            } => fields::make_periodic(
                *dim,
                fields::scalar_mat(*a0),
                *amp_a,
                fields::identity(),
                to_vec2(b0, "b0")?,
                *amp_b,
                *d0,
                *amp_d,
                *lambda,
                *cap_lambda,
            ),
            FieldConfig::Checkerboard { .. } => self.checkerboard_spec()?.realize(seed),
            FieldConfig::Laminate {
                dim,
                values,
                axis,
                b,
                d,
                lambda,
                cap_lambda,
            } => fields::make_laminate(
                *dim,
                values,
                *axis,
                to_vec2(b, "b")?,
                *d,
                *lambda,
                *cap_lambda,
            ),
        }
    }

    pub fn checkerboard_spec(&self) -> Result<CheckerboardSpec> {
        match self {
            FieldConfig::Checkerboard {
                dim,
                a_values,
                b_values,
                d_values,
                space_only,
                lambda,
                cap_lambda,
            } => {
                let b: Result<Vec<[f64; 2]>> = b_values
                    .iter()
                    .map(|v| to_vec2(v, "b_values entry"))
                    .collect();
                let mut b = b?;
                if b.is_empty() {
                    b.push([0.0; 2]);
                }
                let mut d = d_values.clone();
                if d.is_empty() {
                    d.push(0.0);
                }
                Ok(CheckerboardSpec {
                    dim: *dim,
                    a_values: a_values.clone(),
                    b_values: b,
                    d_values: d,
                    space_only: *space_only,
                    lambda: *lambda,
                    cap_lambda: *cap_lambda,
                })
            }
            _ => Err(Error::Config("not a checkerboard field".into())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Explicit grid for the solve subcommand.
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_nt")]
    pub nt: usize,
    /// Sweep grid policy: fine cells per ε-period.
    #[serde(default = "default_cells")]
    pub cells_per_eps_space: usize,
    #[serde(default = "default_cells")]
    pub cells_per_eps_time: usize,
}

fn default_nx() -> usize {
    129
}
fn default_nt() -> usize {
    129
}
fn default_cells() -> usize {
    8
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nx: default_nx(),
            nt: default_nt(),
            cells_per_eps_space: default_cells(),
            cells_per_eps_time: default_cells(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub epsilons: Vec<f64>,
    /// Λ of the exponential transform; defaults to the field's Λ.
    pub lambda: Option<f64>,
    #[serde(default = "default_cell_nx")]
    pub cell_nx: usize,
}

fn default_cell_nx() -> usize {
    128
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RveConfig {
    pub l: usize,
    pub n_samples: usize,
    #[serde(default = "default_cell_nx")]
    pub cell_nx: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_radii")]
    pub r_values: Vec<f64>,
    #[serde(default = "default_probe_samples")]
    pub n_samples: usize,
    #[serde(default = "default_deltas")]
    pub delta_list: Vec<f64>,
}

fn default_radii() -> Vec<f64> {
    vec![0.0625, 0.125]
}
fn default_probe_samples() -> usize {
    20
}
fn default_deltas() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.5]
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            r_values: default_radii(),
            n_samples: default_probe_samples(),
            delta_list: default_deltas(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub field: FieldConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub profile: Option<BoundaryProfile>,
    pub study: Option<StudyConfig>,
    pub rve: Option<RveConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub seed: u64,
    /// Scale parameter for the plain solve subcommand (1 = unrescaled).
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Λ-shift for the plain solve subcommand.
    #[serde(default)]
    pub lambda_shift: f64,
}

fn default_epsilon() -> f64 {
    1.0
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Canonical hash over the parsed structure: insensitive to key order
    /// and formatting of the source file.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canon.as_bytes());
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn profile_or_default(&self) -> BoundaryProfile {
        self.profile.clone().unwrap_or(BoundaryProfile::SineSheet {
            kx: 1,
            ky: if self.field.dim() == 2 { 1 } else { 0 },
            amplitude: 1.0,
            decay: 0.5,
        })
    }

    pub fn study_options(&self) -> Result<StudyOptions> {
        let study = self
            .study
            .as_ref()
            .ok_or_else(|| Error::Config("missing [study] section".into()))?;
        if study.epsilons.is_empty() {
            return Err(Error::Config("[study] epsilons must be non-empty".into()));
        }
        let mut opts = StudyOptions::new(
            study.epsilons.clone(),
            self.profile_or_default(),
            study.lambda.unwrap_or(self.field.cap_lambda()),
        );
        opts.cells_per_eps_space = self.grid.cells_per_eps_space;
        opts.cells_per_eps_time = self.grid.cells_per_eps_time;
        opts.cell_nx = study.cell_nx;
        Ok(opts)
    }

    pub fn ensemble_options(&self) -> Result<EnsembleOptions> {
        let rve = self
            .rve
            .as_ref()
            .ok_or_else(|| Error::Config("checkerboard sweeps need an [rve] section".into()))?;
        Ok(EnsembleOptions {
            n_samples: rve.n_samples,
            base_seed: self.seed,
            rve_l: rve.l,
        })
    }
}

/// Coefficients serialized alongside run provenance.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientsOutput {
    pub config_hash: String,
    pub seed: u64,
    pub version: &'static str,
    pub coefficients: HomogenizedCoefficients,
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
