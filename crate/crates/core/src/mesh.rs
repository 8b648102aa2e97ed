//! Uniform space-time grids over parabolic cylinders, nodal field storage,
//! and region selection (balls B_r, cylinders Q_r = B_r × (0, r²], boundary
//! layers).
//!
//! Grids are node-centered with Dirichlet boundary nodes stored explicitly.
//! All grids and masks are immutable after construction and safe to share
//! across workers.

use crate::error::{Error, Result};
use std::sync::Arc;

/// Uniform discretization of a parabolic cylinder U × I, U = (lo, hi)^d.
///
/// `nx` nodes per spatial axis (spacing `h = (hi-lo)/(nx-1)`), `nt` time
/// levels (spacing `dt`). Spatial dimension d ∈ {1, 2}.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    pub dim: usize,
    pub box_lo: f64,
    pub box_hi: f64,
    pub nx: usize,
    pub h: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub nt: usize,
    pub dt: f64,
    /// Parabolic-resolution factor: the grid is flagged when dt > c_par·h².
    pub c_par: f64,
    /// Set when the dt ≤ c_par·h² resolution invariant failed at build time.
    pub parabolic_warning: bool,
}

/// Default parabolic-resolution factor (dt ≤ 0.5·h²). Implicit stepping is
/// unconditionally stable; this resolves t/ε² oscillations, not stability.
pub const DEFAULT_C_PAR: f64 = 0.5;

/// Build a grid, validating node counts and box/interval nondegeneracy.
///
/// Violating dt ≤ c_par·h² only sets `parabolic_warning`, never fails.
pub fn build_grid(
    dim: usize,
    spatial_box: (f64, f64),
    nx: usize,
    time_interval: (f64, f64),
    nt: usize,
) -> Result<SpaceTimeGrid> {
    build_grid_with(dim, spatial_box, nx, time_interval, nt, DEFAULT_C_PAR)
}

pub fn build_grid_with(
    dim: usize,
    spatial_box: (f64, f64),
    nx: usize,
    time_interval: (f64, f64),
    nt: usize,
    c_par: f64,
) -> Result<SpaceTimeGrid> {
    let (lo, hi) = spatial_box;
    let (t_lo, t_hi) = time_interval;
    if !(dim == 1 || dim == 2) {
        return Err(Error::InvalidGrid(format!(
            "spatial_dim must be 1 or 2, got {dim}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && t_lo.is_finite() && t_hi.is_finite()) {
        return Err(Error::InvalidGrid("non-finite box or time bounds".into()));
    }
    if hi <= lo {
        return Err(Error::InvalidGrid(format!(
            "degenerate spatial box ({lo}, {hi})"
        )));
    }
    if t_hi <= t_lo {
        return Err(Error::InvalidGrid(format!(
            "degenerate time interval ({t_lo}, {t_hi})"
        )));
    }
    if nx < 3 {
        return Err(Error::InvalidGrid(format!("nx must be ≥ 3, got {nx}")));
    }
    if nt < 2 {
        return Err(Error::InvalidGrid(format!("nt must be ≥ 2, got {nt}")));
    }
    let h = (hi - lo) / (nx - 1) as f64;
    let dt = (t_hi - t_lo) / (nt - 1) as f64;
    Ok(SpaceTimeGrid {
        dim,
        box_lo: lo,
        box_hi: hi,
        nx,
        h,
        t_lo,
        t_hi,
        nt,
        dt,
        c_par,
        parabolic_warning: dt > c_par * h * h,
    })
}

impl SpaceTimeGrid {
    /// Number of spatial nodes (nx^d).
    pub fn n_nodes(&self) -> usize {
        self.nx.pow(self.dim as u32)
    }

    /// Spatial coordinate of node index along one axis.
    pub fn axis_coord(&self, i: usize) -> f64 {
        self.box_lo + i as f64 * self.h
    }

    /// Time of level n.
    pub fn time(&self, n: usize) -> f64 {
        self.t_lo + n as f64 * self.dt
    }

    /// Decompose a flat node index into per-axis indices.
    pub fn node_multi(&self, node: usize) -> [usize; 2] {
        match self.dim {
            1 => [node, 0],
            _ => [node % self.nx, node / self.nx],
        }
    }

    /// Flat node index from per-axis indices.
    pub fn node_index(&self, ij: [usize; 2]) -> usize {
        match self.dim {
            1 => ij[0],
            _ => ij[0] + self.nx * ij[1],
        }
    }

    /// Spatial coordinates of a node (second entry is 0 in 1D).
    pub fn node_coord(&self, node: usize) -> [f64; 2] {
        let ij = self.node_multi(node);
        [
            self.axis_coord(ij[0]),
            if self.dim == 2 {
                self.axis_coord(ij[1])
            } else {
                0.0
            },
        ]
    }

    /// Nearest node to a spatial point (clamped to the box).
    pub fn nearest_node(&self, x: [f64; 2]) -> usize {
        let clamp = |v: f64| -> usize {
            let i = ((v - self.box_lo) / self.h).round();
            (i.max(0.0) as usize).min(self.nx - 1)
        };
        match self.dim {
            1 => clamp(x[0]),
            _ => self.node_index([clamp(x[0]), clamp(x[1])]),
        }
    }

    /// True for nodes on ∂U (any axis index at 0 or nx−1).
    pub fn is_boundary(&self, node: usize) -> bool {
        let ij = self.node_multi(node);
        (0..self.dim).any(|a| ij[a] == 0 || ij[a] == self.nx - 1)
    }

    /// Distance of a point to ∂U for the box domain.
    pub fn dist_to_boundary(&self, x: [f64; 2]) -> f64 {
        let mut d = f64::INFINITY;
        for a in 0..self.dim {
            d = d.min(x[a] - self.box_lo).min(self.box_hi - x[a]);
        }
        d
    }

    /// Grid volume element h^d·dt.
    pub fn cell_measure(&self) -> f64 {
        self.h.powi(self.dim as i32) * self.dt
    }
}

/// Nodal space-time trajectory on a grid: one value per (node, level).
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub grid: Arc<SpaceTimeGrid>,
    /// Flat storage, level-major: `values[level * n_nodes + node]`.
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(grid: &Arc<SpaceTimeGrid>) -> Self {
        DiscreteField {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.nt * grid.n_nodes()],
        }
    }

    /// Sample a space-time function at every node of every level.
    pub fn from_fn(grid: &Arc<SpaceTimeGrid>, f: impl Fn([f64; 2], f64) -> f64) -> Self {
        let n = grid.n_nodes();
        let mut values = Vec::with_capacity(grid.nt * n);
        for level in 0..grid.nt {
            let t = grid.time(level);
            for node in 0..n {
                values.push(f(grid.node_coord(node), t));
            }
        }
        DiscreteField {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn level(&self, n: usize) -> &[f64] {
        let nn = self.grid.n_nodes();
        &self.values[n * nn..(n + 1) * nn]
    }

    pub fn level_mut(&mut self, n: usize) -> &mut [f64] {
        let nn = self.grid.n_nodes();
        &mut self.values[n * nn..(n + 1) * nn]
    }

    pub fn get(&self, node: usize, level: usize) -> f64 {
        self.values[level * self.grid.n_nodes() + node]
    }

    pub fn set(&mut self, node: usize, level: usize, v: f64) {
        let nn = self.grid.n_nodes();
        self.values[level * nn + node] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Pointwise linear combination: self + c·other (grids must match).
    pub fn axpy(&mut self, c: f64, other: &DiscreteField) {
        assert_eq!(*self.grid, *other.grid, "grid mismatch in axpy");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// Pointwise difference as a new field.
    pub fn sub(&self, other: &DiscreteField) -> DiscreteField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }
}

/// Parabolic sub-cylinder selector.
///
/// `Interior` selects Q_r(center, anchor) = B_r(center) × (anchor, anchor+r²];
/// `FullDomain` selects every node at every level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionKind {
    Interior,
    FullDomain,
}

#[derive(Debug, Clone, Copy)]
pub struct CylinderRegion {
    pub center: [f64; 2],
    pub radius: f64,
    /// Start of the time window; I_r = (t_anchor, t_anchor + r²].
    pub t_anchor: f64,
    pub kind: RegionKind,
}

impl CylinderRegion {
    /// Q_r anchored at the initial time of `grid`.
    pub fn interior(center: [f64; 2], radius: f64, t_anchor: f64) -> Self {
        CylinderRegion {
            center,
            radius,
            t_anchor,
            kind: RegionKind::Interior,
        }
    }

    pub fn full(grid: &SpaceTimeGrid) -> Self {
        CylinderRegion {
            center: [0.5 * (grid.box_lo + grid.box_hi); 2],
            radius: f64::INFINITY,
            t_anchor: grid.t_lo,
            kind: RegionKind::FullDomain,
        }
    }

    /// Same center/anchor, doubled radius (the Caccioppoli partner Q_2r).
    pub fn doubled(&self) -> Self {
        CylinderRegion {
            radius: 2.0 * self.radius,
            ..*self
        }
    }
}

/// Grid points selected by a region. Spatial membership is level-independent,
/// so the mask is the product `spatial_nodes × levels`.
#[derive(Debug, Clone)]
pub struct RegionMask {
    pub spatial_nodes: Vec<usize>,
    /// Contiguous selected time levels (half-open).
    pub levels: std::ops::Range<usize>,
    membership: Vec<bool>,
}

impl RegionMask {
    pub fn is_empty(&self) -> bool {
        self.spatial_nodes.is_empty() || self.levels.is_empty()
    }

    pub fn len(&self) -> usize {
        self.spatial_nodes.len() * self.levels.len()
    }

    pub fn contains_node(&self, node: usize) -> bool {
        self.membership[node]
    }

    pub fn contains(&self, node: usize, level: usize) -> bool {
        self.levels.contains(&level) && self.membership[node]
    }

    /// Iterate all (node, level) pairs, level-major.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.levels
            .clone()
            .flat_map(move |lev| self.spatial_nodes.iter().map(move |&n| (n, lev)))
    }
}

/// Select exactly the grid points with |x−center| < r and t−anchor ∈ (0, r²].
///
/// An empty intersection gives an empty mask, not an error.
pub fn region_mask(grid: &SpaceTimeGrid, region: &CylinderRegion) -> RegionMask {
    let n = grid.n_nodes();
    match region.kind {
        RegionKind::FullDomain => RegionMask {
            spatial_nodes: (0..n).collect(),
            levels: 0..grid.nt,
            membership: vec![true; n],
        },
        RegionKind::Interior => {
            let mut spatial_nodes = Vec::new();
            let mut membership = vec![false; n];
            for node in 0..n {
                let x = grid.node_coord(node);
                let mut dsq = 0.0;
                for a in 0..grid.dim {
                    dsq += (x[a] - region.center[a]).powi(2);
                }
                if dsq.sqrt() < region.radius {
                    spatial_nodes.push(node);
                    membership[node] = true;
                }
            }
            let rsq = region.radius * region.radius;
            let mut first = grid.nt;
            let mut last = 0usize;
            for lev in 0..grid.nt {
                let t = grid.time(lev);
                if t > region.t_anchor && t - region.t_anchor <= rsq {
                    first = first.min(lev);
                    last = last.max(lev + 1);
                }
            }
            let levels = if first < last { first..last } else { 0..0 };
            RegionMask {
                spatial_nodes,
                levels,
                membership,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_spacing_1d() {
        let g = build_grid(1, (0.0, 1.0), 101, (0.0, 0.25), 2501).unwrap();
        assert!((g.h - 0.01).abs() < 1e-15);
        assert!((g.dt - 1e-4).abs() < 1e-18);
        // dt = 1e-4 exceeds 0.5·h² = 5e-5, so the resolution flag is set
        assert!(g.parabolic_warning);
    }

    #[test]
    fn grid_spacing_2d() {
        let g = build_grid(2, (0.0, 1.0), 33, (0.0, 0.25), 257).unwrap();
        assert!((g.h - 1.0 / 32.0).abs() < 1e-15);
        assert!((g.dt - 0.25 / 256.0).abs() < 1e-18);
        assert_eq!(g.n_nodes(), 33 * 33);
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(matches!(
            build_grid(1, (0.0, 0.0), 11, (0.0, 1.0), 11),
            Err(Error::InvalidGrid(_))
        ));
        assert!(build_grid(1, (0.0, f64::NAN), 11, (0.0, 1.0), 11).is_err());
        assert!(build_grid(1, (0.0, 1.0), 2, (0.0, 1.0), 11).is_err());
        assert!(build_grid(1, (0.0, 1.0), 11, (0.0, 1.0), 1).is_err());
    }

    #[test]
    fn parabolic_warning_flag() {
        // h = 0.1, dt = 0.01 > 0.5·h² = 0.005 → warn
        let g = build_grid(1, (0.0, 1.0), 11, (0.0, 0.1), 11).unwrap();
        assert!(g.parabolic_warning);
        // dt = 0.004 ≤ 0.005 → ok
        let g = build_grid(1, (0.0, 1.0), 11, (0.0, 0.04), 11).unwrap();
        assert!(!g.parabolic_warning);
    }

    #[test]
    fn covering_region_selects_interior_levels() {
        let g = build_grid(1, (0.0, 1.0), 11, (0.0, 0.25), 11).unwrap();
        // radius large: covers all space and the whole time window
        let r = CylinderRegion::interior([0.5, 0.0], 10.0, g.t_lo);
        let m = region_mask(&g, &r);
        assert_eq!(m.spatial_nodes.len(), 11);
        // t = 0 is excluded by the half-open window (0, r²]
        assert_eq!(m.levels, 1..11);
    }

    #[test]
    fn tiny_radius_region() {
        let g = build_grid(1, (0.0, 1.0), 11, (0.0, 0.25), 11).unwrap();
        // r < h/2 away from nodes → at most one spatial column; r² < dt → no level
        let r = CylinderRegion::interior([0.52, 0.0], 0.01, 0.0);
        let m = region_mask(&g, &r);
        assert!(m.is_empty());
    }

    /// Brute-force point-in-set oracle for the documented membership rule.
    fn oracle_mask(g: &SpaceTimeGrid, reg: &CylinderRegion) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for lev in 0..g.nt {
            for node in 0..g.n_nodes() {
                let x = g.node_coord(node);
                let t = g.time(lev);
                let mut dsq = 0.0;
                for a in 0..g.dim {
                    dsq += (x[a] - reg.center[a]).powi(2);
                }
                if dsq.sqrt() < reg.radius
                    && t > reg.t_anchor
                    && t - reg.t_anchor <= reg.radius * reg.radius
                {
                    out.push((node, lev));
                }
            }
        }
        out
    }

    #[test]
    fn mask_matches_brute_force_oracle() {
        let g = build_grid(1, (0.0, 1.0), 101, (0.0, 0.25), 2501).unwrap();
        let reg = CylinderRegion::interior([0.5, 0.0], 0.25, 0.0);
        let m = region_mask(&g, &reg);
        let mut got: Vec<(usize, usize)> = m.iter().collect();
        got.sort_by_key(|&(n, l)| (l, n));
        assert_eq!(got, oracle_mask(&g, &reg));
        assert!(!got.is_empty());
    }

    #[test]
    fn mask_matches_brute_force_oracle_2d() {
        let g = build_grid(2, (0.0, 1.0), 17, (0.0, 0.25), 33).unwrap();
        let reg = CylinderRegion::interior([0.4, 0.6], 0.3, 0.0625);
        let m = region_mask(&g, &reg);
        let mut got: Vec<(usize, usize)> = m.iter().collect();
        got.sort_by_key(|&(n, l)| (l, n));
        assert_eq!(got, oracle_mask(&g, &reg));
        assert!(!got.is_empty());
    }

    proptest! {
        #[test]
        fn mask_monotone_in_radius(r1 in 0.01f64..0.5, dr in 0.0f64..0.5, cx in 0.0f64..1.0) {
            let g = build_grid(1, (0.0, 1.0), 41, (0.0, 0.25), 41).unwrap();
            let small = CylinderRegion::interior([cx, 0.0], r1, 0.0);
            let big = CylinderRegion::interior([cx, 0.0], r1 + dr, 0.0);
            let ms = region_mask(&g, &small);
            let mb = region_mask(&g, &big);
            for (node, lev) in ms.iter() {
                prop_assert!(mb.contains(node, lev));
            }
        }

        #[test]
        fn node_coord_round_trip(node in 0usize..(17 * 17)) {
            let g = build_grid(2, (0.0, 1.0), 17, (0.0, 0.25), 5).unwrap();
            let x = g.node_coord(node);
            prop_assert_eq!(g.nearest_node(x), node);
        }
    }
}
