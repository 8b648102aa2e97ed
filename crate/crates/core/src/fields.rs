//! Construction, rescaling, and validation of the coefficient triple
//! (a, b, d) as stationary ergodic space-time fields.
//!
//! Structural bounds enforced at construction, for every point (y, s) and
//! unit ξ:
//!
//! ```text
//!   1 ≤ ξ·a(y,s)ξ ≤ λ,     sup |b|² ≤ Λ,     d ≤ 0 and sup d² ≤ Λ.
//! ```
//!
//! Samplers are pure functions of (point, seed, shift): repeated calls agree
//! bit-for-bit, evaluation order cannot change a field, and concurrent
//! sampling is safe. Randomness is counter-based (cell index + seed hashed),
//! and the random checkerboard draws a uniform shift in [0,1)^{d+1} per
//! instance so that its law is invariant under all space-time translations,
//! not just integer ones.

use crate::error::{Error, Result};

/// Small dense d×d symmetric matrix, d ∈ {1,2}; only the leading block is used.
pub type Mat2 = [[f64; 2]; 2];

pub fn identity() -> Mat2 {
    [[1.0, 0.0], [0.0, 1.0]]
}

pub fn scalar_mat(v: f64) -> Mat2 {
    [[v, 0.0], [0.0, v]]
}

pub fn mat_vec(m: &Mat2, v: [f64; 2], dim: usize) -> [f64; 2] {
    match dim {
        1 => [m[0][0] * v[0], 0.0],
        _ => [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ],
    }
}

/// Eigenvalue range of a symmetric 1×1 or 2×2 matrix (closed form).
pub fn sym_eig_range(m: &Mat2, dim: usize) -> (f64, f64) {
    if dim == 1 {
        return (m[0][0], m[0][0]);
    }
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    ((tr - disc) / 2.0, (tr + disc) / 2.0)
}

/// One sample of the coefficient triple at a space-time point.
#[derive(Debug, Clone, Copy)]
pub struct CoeffSample {
    pub a: Mat2,
    pub b: [f64; 2],
    pub d: f64,
}

/// Anything that can be sampled as a coefficient triple on physical
/// coordinates (x, t): base fields, their parabolic rescalings, and
/// constant homogenized coefficients.
pub trait SampleCoefficients: Sync {
    fn dim(&self) -> usize;
    fn sample(&self, x: [f64; 2], t: f64) -> CoeffSample;
    fn lambda(&self) -> f64;
    fn cap_lambda(&self) -> f64;
    /// True when a(·, t) does not depend on t (enables steady cell solves).
    fn a_time_invariant(&self) -> bool;
}

#[derive(Debug, Clone)]
enum FieldKind {
    Constant {
        a: Mat2,
        b: [f64; 2],
        d: f64,
    },
    /// a = a0 + amp_a·sin(2πy₁)cos(2πs)·M, plus analogous mean-zero
    /// oscillations on b (first component) and d. Period 1 in every
    /// coordinate.
    PeriodicAnalytic {
        a0: Mat2,
        amp_a: f64,
        m: Mat2,
        b0: [f64; 2],
        amp_b: f64,
        d0: f64,
        amp_d: f64,
    },
    /// Piecewise-constant on unit cells of ℝ^d×ℝ, values i.i.d. from finite
    /// palettes keyed by a counter-based hash of (cell index, seed).
    /// `a = v·I` with v from `a_values`. `torus` wraps cell indices to an
    /// (L-space, T-time) periodization.
    Checkerboard {
        a_values: Vec<f64>,
        b_values: Vec<[f64; 2]>,
        d_values: Vec<f64>,
        space_only: bool,
        torus: Option<(i64, i64)>,
    },
    /// Deterministic layers along one axis: m equal-width bands per unit
    /// period, a = v·I, b and d constant.
    Laminate {
        values: Vec<f64>,
        axis: usize,
        b: [f64; 2],
        d: f64,
    },
}

/// Sampler for (a, b, d) with ellipticity metadata and reproducible seeding.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub dim: usize,
    pub lambda: f64,
    pub cap_lambda: f64,
    pub seed: u64,
    /// Space-time offset applied before cell lookup ([y₁, y₂, s]).
    pub shift: [f64; 3],
    kind: FieldKind,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based cell hash: deterministic in (seed, stream, cell index).
fn hash_cell(seed: u64, stream: u64, cell: [i64; 3]) -> u64 {
    let mut h = splitmix64(seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F));
    for c in cell {
        h = splitmix64(h ^ (c as u64));
    }
    h
}

fn uniform01(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

const STREAM_A: u64 = 1;
const STREAM_B: u64 = 2;
const STREAM_D: u64 = 3;
const STREAM_SHIFT: u64 = 0xFEED;

fn check_a_bounds(a: &Mat2, dim: usize, lambda: f64) -> Result<()> {
    if (dim == 2 && (a[0][1] - a[1][0]).abs() > 1e-14) || !a[0][0].is_finite() {
        return Err(Error::CoefficientBound(
            "a must be symmetric and finite".into(),
        ));
    }
    let (lo, hi) = sym_eig_range(a, dim);
    if lo < 1.0 - 1e-12 {
        return Err(Error::CoefficientBound(format!(
            "ellipticity: min eigenvalue of a is {lo}, below the lower bound 1"
        )));
    }
    if hi > lambda + 1e-12 {
        return Err(Error::CoefficientBound(format!(
            "ellipticity: max eigenvalue of a is {hi}, above λ = {lambda}"
        )));
    }
    Ok(())
}

fn check_b_bounds(b: [f64; 2], dim: usize, cap: f64) -> Result<()> {
    let nsq = b[..dim].iter().map(|v| v * v).sum::<f64>();
    if nsq > cap + 1e-12 {
        return Err(Error::CoefficientBound(format!(
            "|b|² = {nsq} exceeds Λ = {cap}"
        )));
    }
    Ok(())
}

fn check_d_bounds(d: f64, cap: f64) -> Result<()> {
    if d > 1e-12 {
        return Err(Error::CoefficientBound(format!(
            "d = {d} violates the sign condition d ≤ 0"
        )));
    }
    if d * d > cap + 1e-12 {
        return Err(Error::CoefficientBound(format!(
            "d² = {} exceeds Λ = {cap}",
            d * d
        )));
    }
    Ok(())
}

/// Spatially constant field (a₀, b₀, d₀), validated against (λ, Λ).
pub fn make_constant(
    dim: usize,
    a0: Mat2,
    b0: [f64; 2],
    d0: f64,
    lambda: f64,
    cap_lambda: f64,
) -> Result<CoefficientField> {
    check_a_bounds(&a0, dim, lambda)?;
    check_b_bounds(b0, dim, cap_lambda)?;
    check_d_bounds(d0, cap_lambda)?;
    Ok(CoefficientField {
        dim,
        lambda,
        cap_lambda,
        seed: 0,
        shift: [0.0; 3],
        kind: FieldKind::Constant {
            a: a0,
            b: b0,
            d: d0,
        },
    })
}

/// Random checkerboard: i.i.d. palette draws on unit space-time cells, with
/// a seed-derived uniform shift in [0,1)^{d+1} applied before cell lookup.
///
/// `space_only` freezes the time dependence (one cell layer for all s).
pub fn make_checkerboard(
    dim: usize,
    a_values: &[f64],
    b_values: &[[f64; 2]],
    d_values: &[f64],
    seed: u64,
    space_only: bool,
    lambda: f64,
    cap_lambda: f64,
) -> Result<CoefficientField> {
    if a_values.is_empty() || b_values.is_empty() || d_values.is_empty() {
        return Err(Error::InvalidInput(
            "checkerboard palettes must be non-empty".into(),
        ));
    }
    for &v in a_values {
        check_a_bounds(&scalar_mat(v), dim, lambda)?;
    }
    for &b in b_values {
        check_b_bounds(b, dim, cap_lambda)?;
    }
    for &d in d_values {
        check_d_bounds(d, cap_lambda)?;
    }
    let mut shift = [0.0; 3];
    for (i, s) in shift.iter_mut().enumerate().take(dim + 1) {
        *s = uniform01(hash_cell(seed, STREAM_SHIFT, [i as i64, 0, 0]));
    }
    // index 2 is always the time slot
    if dim == 1 {
        shift[2] = shift[1];
        shift[1] = 0.0;
    }
    Ok(CoefficientField {
        dim,
        lambda,
        cap_lambda,
        seed,
        shift,
        kind: FieldKind::Checkerboard {
            a_values: a_values.to_vec(),
            b_values: b_values.to_vec(),
            d_values: d_values.to_vec(),
            space_only,
            torus: None,
        },
    })
}

/// Analytic space-time periodic field,
/// a(y,s) = a₀ + α·sin(2πy₁)·cos(2πs)·M, period 1 in every coordinate.
#[allow(clippy::too_many_arguments)]
pub fn make_periodic(
    dim: usize,
    a0: Mat2,
    amp_a: f64,
    m: Mat2,
    b0: [f64; 2],
    amp_b: f64,
    d0: f64,
    amp_d: f64,
    lambda: f64,
    cap_lambda: f64,
) -> Result<CoefficientField> {
    check_a_bounds(&a0, dim, lambda)?;
    // worst case over the oscillation: eig(a0) ∓ |α|·ρ(M)
    let (mlo, mhi) = sym_eig_range(&m, dim);
    let spec_m = mlo.abs().max(mhi.abs());
    let (alo, ahi) = sym_eig_range(&a0, dim);
    if alo - amp_a.abs() * spec_m < 1.0 - 1e-12 || ahi + amp_a.abs() * spec_m > lambda + 1e-12 {
        return Err(Error::CoefficientBound(format!(
            "ellipticity: amplitude {amp_a} drives the spectrum of a outside [1, {lambda}]"
        )));
    }
    let bmax = (b0[..dim].iter().map(|v| v * v).sum::<f64>()).sqrt() + amp_b.abs();
    if bmax * bmax > cap_lambda + 1e-12 {
        return Err(Error::CoefficientBound(format!(
            "|b|² can reach {} above Λ = {cap_lambda}",
            bmax * bmax
        )));
    }
    if d0 + amp_d.abs() > 1e-12 {
        return Err(Error::CoefficientBound(format!(
            "d can reach {} violating d ≤ 0",
            d0 + amp_d.abs()
        )));
    }
    let dmax = d0.abs() + amp_d.abs();
    if dmax * dmax > cap_lambda + 1e-12 {
        return Err(Error::CoefficientBound(format!(
            "d² can reach {} above Λ = {cap_lambda}",
            dmax * dmax
        )));
    }
    Ok(CoefficientField {
        dim,
        lambda,
        cap_lambda,
        seed: 0,
        shift: [0.0; 3],
        kind: FieldKind::PeriodicAnalytic {
            a0,
            amp_a,
            m,
            b0,
            amp_b,
            d0,
            amp_d,
        },
    })
}

/// Deterministic laminate: `values.len()` equal-width isotropic bands per
/// unit period along `axis`; b and d constant.
pub fn make_laminate(
    dim: usize,
    values: &[f64],
    axis: usize,
    b0: [f64; 2],
    d0: f64,
    lambda: f64,
    cap_lambda: f64,
) -> Result<CoefficientField> {
    if values.is_empty() {
        return Err(Error::InvalidInput(
            "laminate needs at least one band value".into(),
        ));
    }
    if axis >= dim {
        return Err(Error::InvalidInput(format!(
            "laminate axis {axis} out of range for d={dim}"
        )));
    }
    for &v in values {
        check_a_bounds(&scalar_mat(v), dim, lambda)?;
    }
    check_b_bounds(b0, dim, cap_lambda)?;
    check_d_bounds(d0, cap_lambda)?;
    Ok(CoefficientField {
        dim,
        lambda,
        cap_lambda,
        seed: 0,
        shift: [0.0; 3],
        kind: FieldKind::Laminate {
            values: values.to_vec(),
            axis,
            b: b0,
            d: d0,
        },
    })
}

impl CoefficientField {
    /// Override the stationarity shift (used by translation-covariance tests).
    pub fn with_shift(mut self, shift: [f64; 3]) -> Self {
        self.shift = shift;
        self
    }

    /// Periodize a checkerboard onto an L-torus (cell indices wrapped mod L
    /// in space and mod T in time), realizing one RVE sample.
    pub fn periodized(&self, period_l: usize, period_t: usize) -> Result<CoefficientField> {
        match &self.kind {
            FieldKind::Checkerboard {
                a_values,
                b_values,
                d_values,
                space_only,
                ..
            } => {
                let mut f = self.clone();
                f.kind = FieldKind::Checkerboard {
                    a_values: a_values.clone(),
                    b_values: b_values.clone(),
                    d_values: d_values.clone(),
                    space_only: *space_only,
                    torus: Some((period_l as i64, period_t as i64)),
                };
                Ok(f)
            }
            _ => Err(Error::InvalidInput(
                "only checkerboard fields need explicit periodization".into(),
            )),
        }
    }

    /// Spatial period of the sampler, if periodic.
    pub fn spatial_period(&self) -> Option<f64> {
        match &self.kind {
            FieldKind::Constant { .. } => Some(1.0),
            FieldKind::PeriodicAnalytic { .. } => Some(1.0),
            FieldKind::Laminate { .. } => Some(1.0),
            FieldKind::Checkerboard {
                torus: Some((l, _)),
                ..
            } => Some(*l as f64),
            FieldKind::Checkerboard { torus: None, .. } => None,
        }
    }

    /// Temporal period of the sampler, if periodic.
    pub fn time_period(&self) -> Option<f64> {
        match &self.kind {
            FieldKind::Constant { .. } => Some(1.0),
            FieldKind::PeriodicAnalytic { .. } => Some(1.0),
            FieldKind::Laminate { .. } => Some(1.0),
            FieldKind::Checkerboard {
                space_only: true,
                torus: Some(_),
                ..
            } => Some(1.0),
            FieldKind::Checkerboard {
                torus: Some((_, t)),
                ..
            } => Some(*t as f64),
            FieldKind::Checkerboard { torus: None, .. } => None,
        }
    }

    /// Construct without bound validation. Exists so `validate` has
    /// something to catch; not used by any construction path.
    pub fn constant_unchecked(
        dim: usize,
        a0: Mat2,
        b0: [f64; 2],
        d0: f64,
        lambda: f64,
        cap_lambda: f64,
    ) -> CoefficientField {
        CoefficientField {
            dim,
            lambda,
            cap_lambda,
            seed: 0,
            shift: [0.0; 3],
            kind: FieldKind::Constant {
                a: a0,
                b: b0,
                d: d0,
            },
        }
    }

    fn checkerboard_cell(&self, y: [f64; 2], s: f64) -> [i64; 3] {
        let FieldKind::Checkerboard {
            space_only, torus, ..
        } = &self.kind
        else {
            unreachable!()
        };
        let mut cell = [0i64; 3];
        for a in 0..self.dim {
            cell[a] = (y[a] + self.shift[a]).floor() as i64;
        }
        let mut ct = if *space_only {
            0
        } else {
            (s + self.shift[2]).floor() as i64
        };
        if let Some((l, t)) = torus {
            for c in cell.iter_mut().take(self.dim) {
                *c = c.rem_euclid(*l);
            }
            if !space_only {
                ct = ct.rem_euclid(*t);
            }
        }
        cell[2] = ct;
        cell
    }
}

impl SampleCoefficients for CoefficientField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn cap_lambda(&self) -> f64 {
        self.cap_lambda
    }

    fn a_time_invariant(&self) -> bool {
        match &self.kind {
            FieldKind::Constant { .. } => true,
            FieldKind::Laminate { .. } => true,
            FieldKind::PeriodicAnalytic { amp_a, .. } => *amp_a == 0.0,
            FieldKind::Checkerboard { space_only, .. } => *space_only,
        }
    }

    fn sample(&self, y: [f64; 2], s: f64) -> CoeffSample {
        match &self.kind {
            FieldKind::Constant { a, b, d } => CoeffSample {
                a: *a,
                b: *b,
                d: *d,
            },
            FieldKind::PeriodicAnalytic {
                a0,
                amp_a,
                m,
                b0,
                amp_b,
                d0,
                amp_d,
            } => {
                let two_pi = std::f64::consts::TAU;
                let osc_a = (two_pi * y[0]).sin() * (two_pi * s).cos();
                let osc_b = (two_pi * y[0]).cos() * (two_pi * s).sin();
                let osc_d = (two_pi * y[0]).sin() * (two_pi * s).sin();
                let mut a = *a0;
                for (row, mrow) in a.iter_mut().zip(m.iter()) {
                    for (v, mv) in row.iter_mut().zip(mrow.iter()) {
                        *v += amp_a * osc_a * mv;
                    }
                }
                let b = [b0[0] + amp_b * osc_b, b0[1]];
                CoeffSample {
                    a,
                    b,
                    d: d0 + amp_d * osc_d,
                }
            }
            FieldKind::Checkerboard {
                a_values,
                b_values,
                d_values,
                ..
            } => {
                let cell = self.checkerboard_cell(y, s);
                let pick = |stream: u64, len: usize| -> usize {
                    (hash_cell(self.seed, stream, cell) % len as u64) as usize
                };
                CoeffSample {
                    a: scalar_mat(a_values[pick(STREAM_A, a_values.len())]),
                    b: b_values[pick(STREAM_B, b_values.len())],
                    d: d_values[pick(STREAM_D, d_values.len())],
                }
            }
            FieldKind::Laminate { values, axis, b, d } => {
                let m = values.len() as f64;
                let frac = y[*axis].rem_euclid(1.0);
                let band = ((frac * m).floor() as usize).min(values.len() - 1);
                CoeffSample {
                    a: scalar_mat(values[band]),
                    b: *b,
                    d: *d,
                }
            }
        }
    }
}

/// Parabolic rescaling: sampler(x, t) = base(x/ε, t/ε²).
#[derive(Debug, Clone)]
pub struct RescaledField {
    pub base: CoefficientField,
    pub epsilon: f64,
}

/// Rescale a field by 0 < ε ≤ 1.
pub fn rescale(field: &CoefficientField, epsilon: f64) -> Result<RescaledField> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "ε must be in (0, 1], got {epsilon}"
        )));
    }
    Ok(RescaledField {
        base: field.clone(),
        epsilon,
    })
}

impl RescaledField {
    /// Compose rescalings: (F_ε₁)_ε₂ = F_{ε₁ε₂}.
    pub fn rescale(&self, epsilon: f64) -> Result<RescaledField> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "ε must be in (0, 1], got {epsilon}"
            )));
        }
        Ok(RescaledField {
            base: self.base.clone(),
            epsilon: self.epsilon * epsilon,
        })
    }
}

impl SampleCoefficients for RescaledField {
    fn dim(&self) -> usize {
        self.base.dim
    }

    fn lambda(&self) -> f64 {
        self.base.lambda
    }

    fn cap_lambda(&self) -> f64 {
        self.base.cap_lambda
    }

    fn a_time_invariant(&self) -> bool {
        self.base.a_time_invariant()
    }

    fn sample(&self, x: [f64; 2], t: f64) -> CoeffSample {
        let e = self.epsilon;
        self.base.sample([x[0] / e, x[1] / e], t / (e * e))
    }
}

/// Derive a per-sample seed from a base seed (counter-based, so sample
/// order and sharding cannot change the realizations).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    hash_cell(base, 0xC0FFEE, [index as i64, 0, 0])
}

/// Declarative checkerboard description, realizable per sample seed.
#[derive(Debug, Clone)]
pub struct CheckerboardSpec {
    pub dim: usize,
    pub a_values: Vec<f64>,
    pub b_values: Vec<[f64; 2]>,
    pub d_values: Vec<f64>,
    pub space_only: bool,
    pub lambda: f64,
    pub cap_lambda: f64,
}

impl CheckerboardSpec {
    pub fn realize(&self, seed: u64) -> Result<CoefficientField> {
        make_checkerboard(
            self.dim,
            &self.a_values,
            &self.b_values,
            &self.d_values,
            seed,
            self.space_only,
            self.lambda,
            self.cap_lambda,
        )
    }
}

/// Spot-check report from [`validate`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    pub n_samples: usize,
    pub rayleigh_min: f64,
    pub rayleigh_max: f64,
    pub max_b_sq: f64,
    pub max_d: f64,
    pub max_d_sq: f64,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sample the field at `n_samples` random space-time points and directions;
/// report Rayleigh-quotient range of a and the b/d bounds. Report-only.
pub fn validate(
    field: &dyn SampleCoefficients,
    n_samples: usize,
    rng_seed: u64,
) -> ValidationReport {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
    let dim = field.dim();
    let mut rep = ValidationReport {
        n_samples,
        rayleigh_min: f64::INFINITY,
        rayleigh_max: f64::NEG_INFINITY,
        max_b_sq: f64::NEG_INFINITY,
        max_d: f64::NEG_INFINITY,
        max_d_sq: f64::NEG_INFINITY,
        violations: Vec::new(),
    };
    for _ in 0..n_samples.max(1) {
        let y = [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)];
        let s: f64 = rng.gen_range(-50.0..50.0);
        let c = field.sample(y, s);
        // random direction on the unit sphere
        let mut xi: [f64; 2] = [
            rng.gen_range(-1.0..1.0),
            if dim == 2 {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            },
        ];
        let norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        if norm < 1e-12 {
            xi = [1.0, 0.0];
        } else {
            xi[0] /= norm;
            xi[1] /= norm;
        }
        let axi = mat_vec(&c.a, xi, dim);
        let quad = xi[0] * axi[0] + xi[1] * axi[1];
        rep.rayleigh_min = rep.rayleigh_min.min(quad);
        rep.rayleigh_max = rep.rayleigh_max.max(quad);
        let bsq = c.b[..dim].iter().map(|v| v * v).sum::<f64>();
        rep.max_b_sq = rep.max_b_sq.max(bsq);
        rep.max_d = rep.max_d.max(c.d);
        rep.max_d_sq = rep.max_d_sq.max(c.d * c.d);
    }
    let lam = field.lambda();
    let cap = field.cap_lambda();
    if rep.rayleigh_min < 1.0 - 1e-10 {
        rep.violations.push(format!(
            "ellipticity lower bound broken: ξ·aξ = {} < 1",
            rep.rayleigh_min
        ));
    }
    if rep.rayleigh_max > lam + 1e-10 {
        rep.violations.push(format!(
            "ellipticity upper bound broken: ξ·aξ = {} > λ = {lam}",
            rep.rayleigh_max
        ));
    }
    if rep.max_b_sq > cap + 1e-10 {
        rep.violations
            .push(format!("|b|² = {} exceeds Λ = {cap}", rep.max_b_sq));
    }
    if rep.max_d > 1e-10 {
        rep.violations
            .push(format!("sign condition d ≤ 0 broken: d = {}", rep.max_d));
    }
    if rep.max_d_sq > cap + 1e-10 {
        rep.violations
            .push(format!("d² = {} exceeds Λ = {cap}", rep.max_d_sq));
    }
    rep
}
