//! Uniform box grids on ℝⁿ and on half-space boxes, sampled functions with
//! `+∞` masks, finite-difference gradients, trapezoid and radial quadrature.

pub mod quad;

use crate::error::{Error, Result};
use quad::{integrate_nested, QuadResult, Tolerance};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

/// Full-space box or half-space box `[0, R₁] × Π[cᵢ − Rᵢ, cᵢ + Rᵢ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    Full,
    HalfSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    pub center: Vec<f64>,
    pub radius: Vec<f64>,
}

impl Domain {
    pub fn full(center: Vec<f64>, radius: Vec<f64>) -> Self {
        Domain { kind: DomainKind::Full, center, radius }
    }

    /// Centered cube `[-r, r]ⁿ`.
    pub fn cube(n: usize, r: f64) -> Self {
        Domain::full(vec![0.0; n], vec![r; n])
    }

    /// Half-space box; the first axis spans `[0, radius[0]]`, the others are
    /// centered at the origin.
    pub fn half_space(radius: Vec<f64>) -> Self {
        let n = radius.len();
        Domain { kind: DomainKind::HalfSpace, center: vec![0.0; n], radius }
    }

    pub fn dim(&self) -> usize {
        self.radius.len()
    }

    pub fn lower(&self, axis: usize) -> f64 {
        if axis == 0 && self.kind == DomainKind::HalfSpace {
            0.0
        } else {
            self.center[axis] - self.radius[axis]
        }
    }

    pub fn upper(&self, axis: usize) -> f64 {
        if axis == 0 && self.kind == DomainKind::HalfSpace {
            self.radius[0]
        } else {
            self.center[axis] + self.radius[axis]
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if self.center.len() != n {
            return Err(Error::InvalidGrid("center and radius lengths differ".into()));
        }
        if self.radius.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidGrid("radii must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Tensor grid with `counts[i]` equispaced nodes per axis, last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub domain: Domain,
    pub counts: Vec<usize>,
    pub spacing: Vec<f64>,
}

/// Builds a grid; every axis needs at least two nodes.
pub fn make_grid(domain: Domain, counts: &[usize]) -> Result<Grid> {
    domain.validate()?;
    if counts.len() != domain.dim() {
        return Err(Error::InvalidGrid("one count per axis required".into()));
    }
    if counts.iter().any(|&c| c < 2) {
        return Err(Error::InvalidGrid("at least two nodes per axis".into()));
    }
    let spacing = (0..domain.dim())
        .map(|i| (domain.upper(i) - domain.lower(i)) / (counts[i] - 1) as f64)
        .collect();
    Ok(Grid { domain, counts: counts.to_vec(), spacing })
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of node `k` along `axis`; the last node is the upper bound
    /// exactly.
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        if k + 1 == self.counts[axis] {
            self.domain.upper(axis)
        } else {
            self.domain.lower(axis) + k as f64 * self.spacing[axis]
        }
    }

    pub fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis]).map(|k| self.coord(axis, k)).collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let n = self.dim();
        let mut s = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.counts[i + 1];
        }
        s
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let n = self.dim();
        let mut idx = vec![0; n];
        for i in (0..n).rev() {
            idx[i] = flat % self.counts[i];
            flat /= self.counts[i];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &k)| self.coord(a, k))
            .collect()
    }

    /// Same domain with `(N + 1) / 2` nodes per axis; every coarse node is a
    /// fine node when `N` is odd.
    pub fn coarsened(&self) -> Result<Grid> {
        let counts: Vec<usize> = self.counts.iter().map(|&c| c.div_ceil(2)).collect();
        make_grid(self.domain.clone(), &counts)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }
}

/// Extended-real samples on a grid; `+∞` marks masked nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid("value count does not match grid".into()));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::NanSample(i));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn is_masked(&self, i: usize) -> bool {
        self.values[i] == f64::INFINITY
    }

    pub fn masked_count(&self) -> usize {
        self.values.iter().filter(|v| **v == f64::INFINITY).count()
    }

    /// Applies `f` to unmasked values; masks stay masked.
    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Result<GridFunction> {
        let values = self
            .values
            .par_iter()
            .map(|&v| if v == f64::INFINITY { v } else { f(v) })
            .collect();
        GridFunction::new(self.grid.clone(), values)
    }

    /// Applies `f(node, value)` to unmasked nodes.
    pub fn map_with_node<F: Fn(&[f64], f64) -> f64 + Sync>(&self, f: F) -> Result<GridFunction> {
        let values = (0..self.values.len())
            .into_par_iter()
            .map(|i| {
                let v = self.values[i];
                if v == f64::INFINITY {
                    v
                } else {
                    f(&self.grid.node(i), v)
                }
            })
            .collect();
        GridFunction::new(self.grid.clone(), values)
    }

    /// Restriction to the `u = 0` face of a half-space grid (a grid on the
    /// remaining axes). For `n = 1` the face is a single value.
    pub fn boundary_face(&self) -> Result<FaceValues> {
        if self.grid.domain.kind != DomainKind::HalfSpace {
            return Err(Error::InvalidInput("trace requires a half-space grid".into()));
        }
        let n = self.grid.dim();
        if n == 1 {
            return Ok(FaceValues::Point(self.values[0]));
        }
        let d = &self.grid.domain;
        let face_domain = Domain::full(d.center[1..].to_vec(), d.radius[1..].to_vec());
        let face = make_grid(face_domain, &self.grid.counts[1..])?;
        let m = face.len();
        GridFunction::new(face, self.values[..m].to_vec()).map(FaceValues::Grid)
    }
}

/// Values on the boundary face of a half-space grid.
#[derive(Debug, Clone, PartialEq)]
pub enum FaceValues {
    Point(f64),
    Grid(GridFunction),
}

/// Evaluates `f` at every node; `+∞` is kept as a mask, NaN is an error.
pub fn sample<F: Fn(&[f64]) -> f64 + Sync>(f: F, grid: &Grid) -> Result<GridFunction> {
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| f(&grid.node(i)))
        .collect();
    GridFunction::new(grid.clone(), values)
}

/// Finite-difference gradient: central in the interior, one-sided second
/// order on faces (first order when an axis has two nodes). Any stencil that
/// touches a mask yields a masked component.
pub fn gradient_fd(u: &GridFunction) -> Vec<GridFunction> {
    let g = &u.grid;
    let strides = g.strides();
    (0..g.dim())
        .map(|axis| {
            let s = strides[axis];
            let nk = g.counts[axis];
            let dx = g.spacing[axis];
            let values: Vec<f64> = (0..g.len())
                .into_par_iter()
                .map(|i| {
                    let k = (i / s) % nk;
                    let v = &u.values;
                    let d = if nk == 2 {
                        if k == 0 {
                            (v[i + s] - v[i]) / dx
                        } else {
                            (v[i] - v[i - s]) / dx
                        }
                    } else if k == 0 {
                        (-3.0 * v[i] + 4.0 * v[i + s] - v[i + 2 * s]) / (2.0 * dx)
                    } else if k + 1 == nk {
                        (3.0 * v[i] - 4.0 * v[i - s] + v[i - 2 * s]) / (2.0 * dx)
                    } else {
                        (v[i + s] - v[i - s]) / (2.0 * dx)
                    };
                    if d.is_finite() {
                        d
                    } else {
                        f64::INFINITY
                    }
                })
                .collect();
            GridFunction { grid: g.clone(), values }
        })
        .collect()
}

/// Trapezoid weight multipliers (1 or 1/2) along one axis.
fn axis_weights(n: usize) -> Vec<f64> {
    let mut w = vec![1.0; n];
    w[0] = 0.5;
    w[n - 1] = 0.5;
    w
}

/// Tensor trapezoid rule. Masked nodes contribute nothing: a cell enters the
/// sum only when all of its corners are unmasked, so unmasked nodes next to a
/// mask carry boundary weights.
pub fn integrate(u: &GridFunction) -> Result<f64> {
    let g = &u.grid;
    let n = g.dim();
    if u.masked_count() == u.values.len() {
        return Err(Error::AllMasked);
    }
    let total = if u.masked_count() == 0 {
        let ws: Vec<Vec<f64>> = g.counts.iter().map(|&c| axis_weights(c)).collect();
        let sum: f64 = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let idx = g.multi_index(i);
                let w: f64 = idx.iter().enumerate().map(|(a, &k)| ws[a][k]).product();
                w * u.values[i]
            })
            .sum();
        sum * g.cell_volume()
    } else {
        let strides = g.strides();
        let cells: Vec<usize> = g.counts.iter().map(|&c| c - 1).collect();
        let ncell: usize = cells.iter().product();
        let corners = 1usize << n;
        let sum: f64 = (0..ncell)
            .into_par_iter()
            .map(|c| {
                let mut rem = c;
                let mut base = 0;
                for a in (0..n).rev() {
                    base += (rem % cells[a]) * strides[a];
                    rem /= cells[a];
                }
                let mut acc = 0.0;
                for m in 0..corners {
                    let mut off = base;
                    for (a, s) in strides.iter().enumerate() {
                        if m >> a & 1 == 1 {
                            off += s;
                        }
                    }
                    let v = u.values[off];
                    if v == f64::INFINITY {
                        return 0.0;
                    }
                    acc += v;
                }
                acc
            })
            .sum();
        sum * g.cell_volume() / corners as f64
    };
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Overflow("trapezoid sum is not finite; domain truncation failed".into()))
    }
}

/// Trapezoid integral over the `u = 0` face of a half-space grid.
pub fn integrate_face(u: &GridFunction) -> Result<f64> {
    match u.boundary_face()? {
        FaceValues::Point(v) => Ok(v),
        FaceValues::Grid(f) => integrate(&f),
    }
}

/// Area of the unit sphere `S^{n-1}` in ℝⁿ.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// Region used by [`integrate_radial`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadialMode {
    /// `∫_{ℝⁿ} F(|x|) dx`.
    FullSpace,
    /// `∫_{ℝⁿ₊} F(|z + e|) dz` with `e = (1, 0, …, 0)`.
    ShiftedHalfSpace,
}

/// Local power-law exponent of `profile` between `r` and `2r`.
fn local_exponent<F: Fn(f64) -> f64>(profile: &F, r: f64) -> Option<f64> {
    let a = profile(r).abs();
    let b = profile(2.0 * r).abs();
    if a == 0.0 || b == 0.0 {
        return None;
    }
    Some((b / a).ln() / 2f64.ln())
}

/// Integral of a Euclidean-radial profile over ℝⁿ or the shifted half-space,
/// by adaptive Gauss–Kronrod quadrature. The tail and the origin are checked
/// for integrability first.
pub fn integrate_radial<F: Fn(f64) -> f64 + Sync>(
    profile: F,
    n: usize,
    mode: RadialMode,
    tol: Tolerance,
) -> Result<QuadResult> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let nf = n as f64;
    if let Some(e) = local_exponent(&profile, 1e6) {
        if e >= -nf - 1e-9 {
            return Err(Error::Divergent(format!(
                "profile decays like r^{e:.3}, not integrable against r^{}",
                n - 1
            )));
        }
    }
    match mode {
        RadialMode::FullSpace => {
            if let Some(e) = local_exponent(&profile, 1e-9) {
                if e <= -nf + 1e-9 {
                    return Err(Error::Divergent(format!(
                        "profile behaves like r^{e:.3} at the origin"
                    )));
                }
            }
            let r = quad::integrate_with_breaks(
                |r| profile(r) * r.powi(n as i32 - 1),
                0.0,
                f64::INFINITY,
                &[1.0],
                tol,
            );
            let s = sphere_area(n);
            Ok(QuadResult { value: s * r.value, error: s * r.error })
        }
        RadialMode::ShiftedHalfSpace => {
            if n == 1 {
                return Ok(quad::integrate(&profile, 1.0, f64::INFINITY, tol));
            }
            let s = sphere_area(n - 1);
            let lim = |k: usize, _o: &[f64]| if k == 0 { (1.0, f64::INFINITY) } else { (0.0, f64::INFINITY) };
            let f = |x: &[f64]| profile((x[0] * x[0] + x[1] * x[1]).sqrt()) * x[1].powi(n as i32 - 2);
            let r = integrate_nested(&f, 2, &lim, &[], tol);
            Ok(QuadResult { value: s * r.value, error: s * r.error })
        }
    }
}

/// Integral of `f` over the part of ℝⁿ (or ℝⁿ₊ for half-space boxes) lying
/// outside the grid box, by nested adaptive quadrature. The complement is
/// split into slabs: axes before `k` inside the box, axis `k` outside, later
/// axes unrestricted.
pub fn integrate_outside_box(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    domain: &Domain,
    tol: Tolerance,
) -> QuadResult {
    let n = domain.dim();
    let half = domain.kind == DomainKind::HalfSpace;
    let mut acc = QuadResult::zero();
    for k in 0..n {
        for side in 0..2 {
            if half && k == 0 && side == 0 {
                continue;
            }
            let lim = |axis: usize, _o: &[f64]| -> (f64, f64) {
                let free_lo = if half && axis == 0 { 0.0 } else { f64::NEG_INFINITY };
                if axis < k {
                    (domain.lower(axis), domain.upper(axis))
                } else if axis == k {
                    if side == 0 {
                        (free_lo, domain.lower(axis))
                    } else {
                        (domain.upper(axis), f64::INFINITY)
                    }
                } else {
                    (free_lo, f64::INFINITY)
                }
            };
            acc = acc + integrate_nested(f, n, &lim, &[], tol);
        }
    }
    acc
}
