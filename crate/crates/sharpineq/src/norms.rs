//! Weighted p-norms and their duals, analytic power potentials, and
//! Legendre conjugates (analytic, discrete, concave and half-space restricted).

use crate::error::{Error, Result};
use crate::grid::{make_grid, Domain, Grid, GridFunction};
use crate::optim::bisect;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

/// `‖x‖ = (Σ |wᵢ xᵢ|^r)^{1/r}` with `r ∈ [1, ∞]` and positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub exponent: f64,
    pub weights: Option<Vec<f64>>,
}

impl NormSpec {
    pub fn euclidean() -> Self {
        NormSpec { exponent: 2.0, weights: None }
    }

    pub fn lp(r: f64) -> Self {
        NormSpec { exponent: r, weights: None }
    }

    pub fn weighted(r: f64, weights: Vec<f64>) -> Self {
        NormSpec { exponent: r, weights: Some(weights) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent >= 1.0) {
            return Err(Error::InvalidInput(format!("norm exponent {} < 1", self.exponent)));
        }
        if let Some(w) = &self.weights {
            if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidInput("norm weights must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn is_euclidean(&self) -> bool {
        self.exponent == 2.0 && self.weights.is_none()
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        let r = self.exponent;
        if r == f64::INFINITY {
            return x
                .iter()
                .enumerate()
                .map(|(i, v)| (self.weight(i) * v).abs())
                .fold(0.0, f64::max);
        }
        if r == 2.0 {
            return x
                .iter()
                .enumerate()
                .map(|(i, v)| (self.weight(i) * v).powi(2))
                .sum::<f64>()
                .sqrt();
        }
        if r == 1.0 {
            return x.iter().enumerate().map(|(i, v)| (self.weight(i) * v).abs()).sum();
        }
        let m = x
            .iter()
            .enumerate()
            .map(|(i, v)| (self.weight(i) * v).abs())
            .fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        let s: f64 = x
            .iter()
            .enumerate()
            .map(|(i, v)| ((self.weight(i) * v).abs() / m).powf(r))
            .sum();
        m * s.powf(1.0 / r)
    }

    /// A (sub)gradient of the norm; zero at the origin.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let r = self.exponent;
        let nx = self.norm(x);
        out.iter_mut().for_each(|o| *o = 0.0);
        if nx == 0.0 {
            return;
        }
        if r == f64::INFINITY {
            let mut best = 0;
            let mut bv = -1.0;
            for (i, v) in x.iter().enumerate() {
                let a = (self.weight(i) * v).abs();
                if a > bv {
                    bv = a;
                    best = i;
                }
            }
            out[best] = self.weight(best) * x[best].signum();
            return;
        }
        if r == 1.0 {
            for (i, v) in x.iter().enumerate() {
                out[i] = if *v == 0.0 { 0.0 } else { self.weight(i) * v.signum() };
            }
            return;
        }
        for (i, v) in x.iter().enumerate() {
            let w = self.weight(i);
            out[i] = w * (w * v.abs() / nx).powf(r - 1.0) * v.signum();
        }
    }

    /// Dual norm `‖y‖_* = sup_{‖x‖≤1} x·y`: conjugate exponent, inverted weights.
    pub fn dual(&self) -> NormSpec {
        let r = self.exponent;
        let e = if r == 1.0 {
            f64::INFINITY
        } else if r == f64::INFINITY {
            1.0
        } else {
            r / (r - 1.0)
        };
        NormSpec {
            exponent: e,
            weights: self.weights.as_ref().map(|w| w.iter().map(|v| 1.0 / v).collect()),
        }
    }

    /// Lebesgue volume of the unit ball in ℝⁿ.
    pub fn unit_ball_volume(&self, n: usize) -> f64 {
        let wprod: f64 = (0..n).map(|i| 1.0 / self.weight(i)).product();
        let r = self.exponent;
        if r == f64::INFINITY {
            return 2f64.powi(n as i32) * wprod;
        }
        wprod * (2.0 * gamma(1.0 + 1.0 / r)).powi(n as i32) / gamma(1.0 + n as f64 / r)
    }

    /// A point of norm one on the first axis.
    pub fn unit_point(&self, n: usize) -> Vec<f64> {
        let mut u = vec![0.0; n];
        u[0] = 1.0 / self.weight(0);
        u
    }

    /// True when `Σ wᵢ^q |xᵢ|^q` equals `‖x‖^q` (the norm power separates).
    pub fn separable_power(&self, q: f64) -> bool {
        self.exponent == q
    }
}

/// Free-standing form of [`NormSpec::dual`].
pub fn dual_norm(n: &NormSpec) -> NormSpec {
    n.dual()
}

/// Base profile of a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// `scale·‖x+shift‖^q/q + offset`.
    Convex,
    /// `(scale/q)(1 − ‖x+shift‖^q)₊`, concave on its support.
    ConcaveCap,
}

/// Outer transform applied to the base profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    Identity,
    Power(f64),
    Exp(f64),
}

/// Where the function is defined: all of ℝⁿ or `{x₀ ≥ from}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Support {
    Full,
    HalfSpace { from: f64 },
}

/// Anything that can be evaluated with an exact gradient.
pub trait Field: Sync + Send {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// Analytic power-of-norm family with optional shift, outer transform and
/// half-space domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub norm: NormSpec,
    pub power: f64,
    pub scale: f64,
    pub offset: f64,
    pub shift: Option<Vec<f64>>,
    pub shape: Shape,
    pub transform: Transform,
    pub support: Support,
}

impl PotentialSpec {
    /// `scale·‖x‖^q/q + offset`.
    pub fn convex(norm: NormSpec, q: f64, scale: f64, offset: f64) -> Self {
        PotentialSpec {
            norm,
            power: q,
            scale,
            offset,
            shift: None,
            shape: Shape::Convex,
            transform: Transform::Identity,
            support: Support::Full,
        }
    }

    /// `(scale/q)(1 − ‖x‖^q)₊`.
    pub fn concave_cap(norm: NormSpec, q: f64, scale: f64) -> Self {
        PotentialSpec {
            shape: Shape::ConcaveCap,
            ..PotentialSpec::convex(norm, q, scale, 0.0)
        }
    }

    pub fn with_shift(mut self, shift: Vec<f64>) -> Self {
        self.shift = Some(shift);
        self
    }

    pub fn with_transform(mut self, t: Transform) -> Self {
        self.transform = t;
        self
    }

    pub fn on_half_space(mut self, from: f64) -> Self {
        self.support = Support::HalfSpace { from };
        self
    }

    /// Same family with a different offset.
    pub fn with_offset(mut self, c: f64) -> Self {
        self.offset = c;
        self
    }

    pub fn with_scale(mut self, s: f64) -> Self {
        self.scale = s;
        self
    }

    pub fn is_convex_potential(&self) -> bool {
        self.shape == Shape::Convex && self.transform == Transform::Identity
    }

    /// Depends on `x` only through `‖x‖` on all of ℝⁿ.
    pub fn is_radial(&self) -> bool {
        self.shift.as_ref().is_none_or(|s| s.iter().all(|v| *v == 0.0)) && self.support == Support::Full
    }

    fn outside(&self, x: &[f64]) -> bool {
        match self.support {
            Support::Full => false,
            Support::HalfSpace { from } => x[0] < from,
        }
    }

    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        match &self.shift {
            Some(s) => x.iter().zip(s).map(|(a, b)| a + b).collect(),
            None => x.to_vec(),
        }
    }

    /// Base profile as a function of the norm value `r`.
    pub fn base_of_radius(&self, r: f64) -> f64 {
        let q = self.power;
        match self.shape {
            Shape::Convex => self.scale * r.powf(q) / q + self.offset,
            Shape::ConcaveCap => (self.scale / q * (1.0 - r.powf(q))).max(0.0),
        }
    }

    fn base_derivative(&self, r: f64) -> f64 {
        let q = self.power;
        match self.shape {
            Shape::Convex => self.scale * r.powf(q - 1.0),
            Shape::ConcaveCap => {
                if r < 1.0 {
                    -self.scale * r.powf(q - 1.0)
                } else {
                    0.0
                }
            }
        }
    }

    fn apply(&self, b: f64) -> f64 {
        match self.transform {
            Transform::Identity => b,
            Transform::Power(e) => {
                if b == 0.0 && e > 0.0 {
                    0.0
                } else {
                    b.powf(e)
                }
            }
            Transform::Exp(k) => (k * b).exp(),
        }
    }

    fn apply_derivative(&self, b: f64) -> f64 {
        match self.transform {
            Transform::Identity => 1.0,
            Transform::Power(e) => {
                if b == 0.0 {
                    if e >= 1.0 {
                        if e == 1.0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        0.0
                    }
                } else {
                    e * b.powf(e - 1.0)
                }
            }
            Transform::Exp(k) => k * (k * b).exp(),
        }
    }

    /// Value as a function of the (shifted) norm value; used by radial pipelines.
    pub fn radial_value(&self, r: f64) -> f64 {
        self.apply(self.base_of_radius(r))
    }

    /// Derivative of [`Self::radial_value`] with respect to `r`.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        let b = self.base_of_radius(r);
        if self.shape == Shape::ConcaveCap && b == 0.0 {
            return 0.0;
        }
        self.apply_derivative(b) * self.base_derivative(r)
    }

    /// Value outside the domain: `+∞` for convex shapes, `0` for caps.
    fn outside_value(&self) -> f64 {
        match self.shape {
            Shape::Convex => f64::INFINITY,
            Shape::ConcaveCap => 0.0,
        }
    }
}

impl Field for PotentialSpec {
    fn value(&self, x: &[f64]) -> f64 {
        if self.outside(x) {
            return self.outside_value();
        }
        let y = self.shifted(x);
        self.radial_value(self.norm.norm(&y))
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        if self.outside(x) {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let y = self.shifted(x);
        let r = self.norm.norm(&y);
        let d = self.radial_derivative(r);
        self.norm.gradient(&y, out);
        out.iter_mut().for_each(|o| *o *= d);
    }
}

/// Exactness of a conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exactness {
    Exact,
    GridApproximate,
}

/// Closed-form conjugates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConjugateFormula {
    /// Another power potential (convex conjugate of a convex power potential).
    Power(PotentialSpec),
    /// Concave conjugate of `(c/q)(1 − ‖x‖^q)₊`: `−c^{1−p}‖y‖_*^p/p − c/q`
    /// when `‖y‖_* ≤ c`, `−‖y‖_*` otherwise.
    ConcaveTwoBranch { dual: NormSpec, c: f64, p: f64 },
}

impl ConjugateFormula {
    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            ConjugateFormula::Power(w) => w.value(y),
            ConjugateFormula::ConcaveTwoBranch { dual, c, p } => concave_two_branch(dual.norm(y), *c, *p),
        }
    }
}

/// Two-branch concave conjugate as a function of `‖y‖_*`.
pub fn concave_two_branch(ny: f64, c: f64, p: f64) -> f64 {
    let q = p / (p - 1.0);
    if ny <= c {
        -c.powf(1.0 - p) * ny.powf(p) / p - c / q
    } else {
        -ny
    }
}

/// A conjugate, analytic or sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConjugateResult {
    Analytic(ConjugateFormula),
    Grid {
        values: GridFunction,
        source_spacing: Vec<f64>,
        exactness: Exactness,
    },
}

impl ConjugateResult {
    pub fn exactness(&self) -> Exactness {
        match self {
            ConjugateResult::Analytic(_) => Exactness::Exact,
            ConjugateResult::Grid { exactness, .. } => *exactness,
        }
    }

    pub fn formula(&self) -> Option<&ConjugateFormula> {
        match self {
            ConjugateResult::Analytic(f) => Some(f),
            _ => None,
        }
    }
}

/// Conjugate exponent `p` with `1/p + 1/q = 1`.
pub fn conjugate_exponent(q: f64) -> f64 {
    q / (q - 1.0)
}

/// `(s‖x‖^q/q + C)* = s^{1−p}‖y‖_*^p/p − C`.
pub fn conjugate_analytic(w: &PotentialSpec) -> Result<ConjugateResult> {
    if !(w.power > 1.0) {
        return Err(Error::InvalidInput(format!("power q = {} must exceed 1", w.power)));
    }
    if w.shape != Shape::Convex {
        return Err(Error::InvalidInput("concave potential: use concave_conjugate".into()));
    }
    if w.transform != Transform::Identity || !w.is_radial() {
        return Err(Error::InvalidInput("analytic conjugate needs an unshifted full-space power potential".into()));
    }
    if !(w.scale > 0.0) {
        return Err(Error::InvalidInput("scale must be positive".into()));
    }
    let p = conjugate_exponent(w.power);
    Ok(ConjugateResult::Analytic(ConjugateFormula::Power(PotentialSpec::convex(
        w.norm.dual(),
        p,
        w.scale.powf(1.0 - p),
        -w.offset,
    ))))
}

/// Concave conjugate `W_*(y) = inf_{x∈Ω_W} {x·y − W(x)}` of a cap potential.
pub fn concave_conjugate(w: &PotentialSpec) -> Result<ConjugateResult> {
    if w.shape != Shape::ConcaveCap || w.transform != Transform::Identity || !w.is_radial() {
        return Err(Error::InvalidInput("concave conjugate needs an unshifted concave cap".into()));
    }
    if !(w.power > 1.0) {
        return Err(Error::InvalidInput(format!("power q = {} must exceed 1", w.power)));
    }
    Ok(ConjugateResult::Analytic(ConjugateFormula::ConcaveTwoBranch {
        dual: w.norm.dual(),
        c: w.scale,
        p: conjugate_exponent(w.power),
    }))
}

/// Concave conjugate of sampled data: infimum of `x·y − u(x)` over unmasked
/// nodes.
pub fn concave_conjugate_grid(u: &GridFunction, dual_grid: &Grid) -> Result<ConjugateResult> {
    if u.masked_count() == u.values.len() {
        return Err(Error::AllMasked);
    }
    let nodes: Vec<(Vec<f64>, f64)> = (0..u.values.len())
        .filter(|&i| !u.is_masked(i))
        .map(|i| (u.grid.node(i), u.values[i]))
        .collect();
    let values = (0..dual_grid.len())
        .into_par_iter()
        .map(|j| {
            let y = dual_grid.node(j);
            nodes
                .iter()
                .map(|(x, v)| x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() - v)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(ConjugateResult::Grid {
        values: GridFunction::new(dual_grid.clone(), values)?,
        source_spacing: u.grid.spacing.clone(),
        exactness: Exactness::GridApproximate,
    })
}

/// Max of `x_i·y + v_i` over the points of one line (brute force, smallest
/// index wins ties).
fn line_max_brute(xs: &[f64], vs: &[f64], y: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (x, v) in xs.iter().zip(vs) {
        if *v == f64::NEG_INFINITY {
            continue;
        }
        let c = x * y + v;
        if c > best {
            best = c;
        }
    }
    best
}

/// Line transform `y ↦ max_i (x_i·y + v_i)` through the upper convex hull of
/// the points `(x_i, v_i)`; the final value is the brute-force expression at
/// the hull vertices around the optimum.
fn line_transform(xs: &[f64], vs: &[f64], ys: &[f64]) -> Vec<f64> {
    let pts: Vec<usize> = (0..xs.len()).filter(|&i| vs[i] != f64::NEG_INFINITY).collect();
    if pts.is_empty() {
        return vec![f64::NEG_INFINITY; ys.len()];
    }
    let mut hull: Vec<usize> = Vec::with_capacity(pts.len());
    for &i in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Remove b when it lies strictly below the chord from a to i.
            let cross = (xs[b] - xs[a]) * (vs[i] - vs[a]) - (vs[b] - vs[a]) * (xs[i] - xs[a]);
            if cross > 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]));
    let mut out = vec![0.0; ys.len()];
    let mut k = 0usize;
    for &j in &order {
        let y = ys[j];
        while k + 1 < hull.len() && xs[hull[k + 1]] * y + vs[hull[k + 1]] >= xs[hull[k]] * y + vs[hull[k]] {
            k += 1;
        }
        let lo = k.saturating_sub(2);
        let hi = (k + 2).min(hull.len() - 1);
        let mut best_idx = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for &h in &hull[lo..=hi] {
            let c = xs[h] * y + vs[h];
            if c > best || (c == best && h < best_idx) {
                best = c;
                best_idx = h;
            }
        }
        out[j] = best;
    }
    out
}

/// Applies a line transform along `axis` of a row-major array.
fn transform_axis(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    xs: &[f64],
    ys: &[f64],
    brute: bool,
) -> (Vec<f64>, Vec<usize>) {
    let mut new_shape = shape.to_vec();
    new_shape[axis] = ys.len();
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let n_old = shape[axis];
    let n_new = ys.len();
    let lines: Vec<(usize, usize, Vec<f64>)> = (0..outer * inner)
        .into_par_iter()
        .map(|l| {
            let o = l / inner;
            let i = l % inner;
            let vs: Vec<f64> = (0..n_old).map(|k| data[(o * n_old + k) * inner + i]).collect();
            let res = if brute {
                ys.iter().map(|&y| line_max_brute(xs, &vs, y)).collect()
            } else {
                line_transform(xs, &vs, ys)
            };
            (o, i, res)
        })
        .collect();
    let mut out = vec![0.0; outer * n_new * inner];
    for (o, i, res) in lines {
        for (k, v) in res.into_iter().enumerate() {
            out[(o * n_new + k) * inner + i] = v;
        }
    }
    (out, new_shape)
}

fn conjugate_separable(u: &GridFunction, dual_grid: &Grid, brute: bool) -> Result<GridFunction> {
    let g = &u.grid;
    if dual_grid.dim() != g.dim() {
        return Err(Error::InvalidInput("dual grid dimension mismatch".into()));
    }
    if u.masked_count() == u.values.len() {
        return Err(Error::AllMasked);
    }
    let mut data: Vec<f64> = u
        .values
        .iter()
        .map(|&v| if v == f64::INFINITY { f64::NEG_INFINITY } else { -v })
        .collect();
    let mut shape = g.counts.clone();
    for axis in (0..g.dim()).rev() {
        let xs = g.axis_nodes(axis);
        let ys = dual_grid.axis_nodes(axis);
        let (d, s) = transform_axis(&data, &shape, axis, &xs, &ys, brute);
        data = d;
        shape = s;
    }
    GridFunction::new(dual_grid.clone(), data)
}

/// Discrete convex conjugate `u*(y) = max_x {x·y − u(x)}` over unmasked
/// nodes, computed axis by axis with a hull-based linear-time line transform.
/// Values are formed as `x₀y₀ + (x₁y₁ + (… + (x_{n−1}y_{n−1} − u)))`.
pub fn conjugate_discrete(u: &GridFunction, dual_grid: &Grid) -> Result<GridFunction> {
    conjugate_separable(u, dual_grid, false)
}

/// Brute-force scan over all source nodes for every dual node, with the
/// same association order as [`conjugate_discrete`]. Test oracle.
pub fn conjugate_brute_force(u: &GridFunction, dual_grid: &Grid) -> Result<GridFunction> {
    if u.masked_count() == u.values.len() {
        return Err(Error::AllMasked);
    }
    let n = u.grid.dim();
    let src: Vec<(Vec<f64>, f64)> = (0..u.values.len())
        .filter(|&i| !u.is_masked(i))
        .map(|i| (u.grid.node(i), u.values[i]))
        .collect();
    let values = (0..dual_grid.len())
        .into_par_iter()
        .map(|j| {
            let y = dual_grid.node(j);
            let mut best = f64::NEG_INFINITY;
            for (x, v) in &src {
                let mut acc = -v;
                for a in (0..n).rev() {
                    acc += x[a] * y[a];
                }
                if acc > best {
                    best = acc;
                }
            }
            best
        })
        .collect();
    GridFunction::new(dual_grid.clone(), values)
}

/// Per-axis line scans of [`conjugate_discrete`] done by brute force.
pub fn conjugate_separable_brute(u: &GridFunction, dual_grid: &Grid) -> Result<GridFunction> {
    conjugate_separable(u, dual_grid, true)
}

/// Dual grid `[−L, L]` per axis, `L` the largest finite slope of `u` along
/// that axis, with as many nodes as the source axis.
pub fn default_dual_grid(u: &GridFunction) -> Result<Grid> {
    let g = &u.grid;
    let strides = g.strides();
    let mut radius = Vec::with_capacity(g.dim());
    for axis in 0..g.dim() {
        let s = strides[axis];
        let mut l: f64 = 0.0;
        for i in 0..u.values.len() {
            let k = (i / s) % g.counts[axis];
            if k + 1 < g.counts[axis] {
                let d = (u.values[i + s] - u.values[i]) / g.spacing[axis];
                if d.is_finite() {
                    l = l.max(d.abs());
                }
            }
        }
        radius.push(if l > 0.0 { l } else { 1.0 });
    }
    make_grid(Domain::full(vec![0.0; g.dim()], radius), &g.counts)
}

/// Restricted conjugate `sup_{x₀ ≥ f} {x·y − W(x)}` of a convex power
/// potential defined on `{x₀ ≥ f}` (the shifted half-space).
pub fn conjugate_halfspace(w: &PotentialSpec, y: &[f64]) -> Result<f64> {
    if !(w.power > 1.0) {
        return Err(Error::InvalidInput("sub-linear potential: restricted sup is +∞".into()));
    }
    if !w.is_convex_potential() || w.shift.is_some() {
        return Err(Error::InvalidInput("restricted conjugate needs an unshifted convex power potential".into()));
    }
    let from = match w.support {
        Support::HalfSpace { from } => from,
        Support::Full => return Err(Error::InvalidInput("potential is not restricted to a half-space".into())),
    };
    let q = w.power;
    let p = conjugate_exponent(q);
    let s = w.scale;
    let nd = y.len();
    let full = s.powf(1.0 - p) * w.norm.dual().norm(y).powf(p) / p - w.offset;
    if w.norm.separable_power(q) {
        let wt = |i: usize| w.norm.weights.as_ref().map_or(1.0, |v| v[i]);
        let x0 = y[0].signum() * (y[0].abs() / (s * wt(0).powf(q))).powf(1.0 / (q - 1.0));
        if x0 >= from {
            return Ok(full);
        }
        let mut v = from * y[0] - s * (wt(0) * from).abs().powf(q) / q - w.offset;
        for (i, yi) in y.iter().enumerate().skip(1) {
            v += s.powf(1.0 - p) * (yi.abs() / wt(i)).powf(p) / p;
        }
        return Ok(v);
    }
    if !w.norm.is_euclidean() {
        return Err(Error::InvalidInput("restricted conjugate supports Euclidean or separable norms".into()));
    }
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if ny > 0.0 {
        let x0 = (ny / s).powf(1.0 / (q - 1.0)) * y[0] / ny;
        if x0 >= from {
            return Ok(full);
        }
    }
    let yp = if nd > 1 { y[1..].iter().map(|v| v * v).sum::<f64>().sqrt() } else { 0.0 };
    let obj = |t: f64| from * y[0] + t * yp - s * (from * from + t * t).powf(q / 2.0) / q - w.offset;
    if yp == 0.0 {
        return Ok(obj(0.0));
    }
    let dobj = |t: f64| yp - s * t * (from * from + t * t).powf(q / 2.0 - 1.0);
    let mut hi = 1.0;
    while dobj(hi) > 0.0 {
        hi *= 2.0;
    }
    let t = bisect(dobj, 0.0, hi, 1e-15).unwrap_or(0.0);
    Ok(obj(t))
}
