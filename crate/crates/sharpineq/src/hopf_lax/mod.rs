//! Hopf–Lax inf-convolution `Q_h^W g(x) = inf_y {g(y) + h W((x−y)/h)}`, the
//! concave sup-convolution, half-space variants, the derivative at `h = 0`
//! and admissibility checks.

mod admissible;
mod pointwise;

pub use admissible::{
    check_admissible, elementary_power_bound, envelope_check, envelope_points, AdmissibilityReport,
    AdmissibleFamily, EnvelopeReport,
};
pub use pointwise::{
    derivative_sweep, hj_derivative_at_zero, hopf_lax_integral, power_inf_convolution, q_pointwise,
    Datum, DerivativeSweep,
};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::norms::{Field, PotentialSpec, Shape, Support, Transform};
use rayon::prelude::*;

/// Algorithm used by [`inf_convolution_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Separable line passes when the kernel splits by axis and `n ≥ 2`,
    /// otherwise the direct scan.
    Auto,
    /// Direct scan over all source nodes for each target.
    Brute,
    /// Axis-by-axis line passes; requires a separable kernel.
    Separable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfLaxOptions {
    pub method: Method,
    /// Replace each line minimum by the vertex of the parabola through the
    /// discrete minimizer and its two neighbours.
    pub refine: bool,
}

impl Default for HopfLaxOptions {
    fn default() -> Self {
        HopfLaxOptions { method: Method::Auto, refine: false }
    }
}

/// Rejects kernels that are not superlinear power potentials.
pub(crate) fn validate_kernel(w: &PotentialSpec) -> Result<()> {
    w.norm.validate()?;
    if w.shape != Shape::Convex || w.transform != Transform::Identity {
        return Err(Error::Inadmissible("W must be a convex power potential".into()));
    }
    if !(w.power > 1.0) || !(w.scale > 0.0) {
        return Err(Error::Inadmissible(format!(
            "W is not superlinear (q = {}, scale = {})",
            w.power, w.scale
        )));
    }
    Ok(())
}

fn check_h(h: f64) -> Result<()> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("h = {h} must be finite and non-negative")));
    }
    Ok(())
}

fn identity_case(g: &GridFunction, out: &Grid) -> Result<GridFunction> {
    if &g.grid != out {
        return Err(Error::InvalidInput("h = 0 needs the output grid to equal the source grid".into()));
    }
    Ok(g.clone())
}

fn parabola_min(fm: f64, f0: f64, fp: f64) -> f64 {
    if !(fm.is_finite() && fp.is_finite()) {
        return f0;
    }
    let d2 = fp - 2.0 * f0 + fm;
    if d2 <= 0.0 {
        return f0;
    }
    let d1 = fp - fm;
    (f0 - d1 * d1 / (8.0 * d2)).min(f0)
}

/// Direct scan of `g(y) + kernel(x − y)` over unmasked sources, smallest flat
/// index on ties. Refinement applies on one-dimensional grids only.
fn scan(
    g: &GridFunction,
    kernel: &(dyn Fn(&[f64]) -> f64 + Sync),
    out: &Grid,
    refine: bool,
) -> Result<GridFunction> {
    let n = g.grid.dim();
    if out.dim() != n {
        return Err(Error::InvalidInput("output grid dimension mismatch".into()));
    }
    let src: Vec<usize> = (0..g.values.len()).filter(|&i| !g.is_masked(i)).collect();
    let coords: Vec<Vec<f64>> = src.iter().map(|&i| g.grid.node(i)).collect();
    let values: Vec<f64> = (0..out.len())
        .into_par_iter()
        .map(|t| {
            let x = out.node(t);
            let mut d = vec![0.0; n];
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for (k, y) in coords.iter().enumerate() {
                for a in 0..n {
                    d[a] = x[a] - y[a];
                }
                let v = g.values[src[k]] + kernel(&d);
                if v < best {
                    best = v;
                    arg = src[k];
                }
            }
            if refine && n == 1 && arg != usize::MAX && arg > 0 && arg + 1 < g.values.len() {
                let phi = |j: usize| {
                    let gv = g.values[j];
                    if gv == f64::INFINITY {
                        return f64::INFINITY;
                    }
                    gv + kernel(&[x[0] - g.grid.coord(0, j)])
                };
                best = parabola_min(phi(arg - 1), best, phi(arg + 1));
            }
            best
        })
        .collect();
    if values.iter().all(|v| *v == f64::INFINITY) {
        return Err(Error::AllMasked);
    }
    GridFunction::new(out.clone(), values)
}

/// Per-axis pieces of a kernel `h·W(z)` that splits as a sum over axes plus
/// a constant.
struct SplitKernel {
    axes: Vec<Box<dyn Fn(f64) -> f64 + Sync + Send>>,
    constant: f64,
}

fn split_kernel(w: &PotentialSpec, h: f64, n: usize) -> Option<SplitKernel> {
    if w.shape != Shape::Convex || w.transform != Transform::Identity || !w.norm.separable_power(w.power) {
        return None;
    }
    if w.norm.exponent == f64::INFINITY {
        return None;
    }
    let q = w.power;
    let s = w.scale;
    let axes = (0..n)
        .map(|i| {
            let wi = w.norm.weights.as_ref().map_or(1.0, |v| v[i]);
            let ti = w.shift.as_ref().map_or(0.0, |v| v[i]);
            let from = match w.support {
                Support::HalfSpace { from } if i == 0 => Some(from),
                _ => None,
            };
            Box::new(move |d: f64| {
                let z = d / h;
                if let Some(f) = from {
                    if z < f {
                        return f64::INFINITY;
                    }
                }
                h * s * (wi * (z + ti).abs()).powf(q) / q
            }) as Box<dyn Fn(f64) -> f64 + Sync + Send>
        })
        .collect();
    Some(SplitKernel { axes, constant: h * w.offset })
}

/// One line pass `out_j = min_i (k(x_j − y_i) + v_i)`.
fn line_pass(xs: &[f64], ys: &[f64], vs: &[f64], k: &(dyn Fn(f64) -> f64 + Sync + Send), refine: bool) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for (i, (&y, &v)) in ys.iter().zip(vs).enumerate() {
                if v == f64::INFINITY {
                    continue;
                }
                let c = k(x - y) + v;
                if c < best {
                    best = c;
                    arg = i;
                }
            }
            if refine && arg != usize::MAX && arg > 0 && arg + 1 < ys.len() {
                let phi = |i: usize| if vs[i] == f64::INFINITY { f64::INFINITY } else { k(x - ys[i]) + vs[i] };
                best = parabola_min(phi(arg - 1), best, phi(arg + 1));
            }
            best
        })
        .collect()
}

fn separable(g: &GridFunction, sk: &SplitKernel, out: &Grid, refine: bool) -> Result<GridFunction> {
    let n = g.grid.dim();
    if out.dim() != n {
        return Err(Error::InvalidInput("output grid dimension mismatch".into()));
    }
    let mut data = g.values.clone();
    let mut shape = g.grid.counts.clone();
    for axis in (0..n).rev() {
        let ys = g.grid.axis_nodes(axis);
        let xs = out.axis_nodes(axis);
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let n_old = shape[axis];
        let n_new = xs.len();
        let k = &sk.axes[axis];
        let lines: Vec<Vec<f64>> = (0..outer * inner)
            .into_par_iter()
            .map(|l| {
                let (o, i) = (l / inner, l % inner);
                let vs: Vec<f64> = (0..n_old).map(|j| data[(o * n_old + j) * inner + i]).collect();
                line_pass(&xs, &ys, &vs, k.as_ref(), refine)
            })
            .collect();
        let mut next = vec![0.0; outer * n_new * inner];
        for (l, res) in lines.into_iter().enumerate() {
            let (o, i) = (l / inner, l % inner);
            for (j, v) in res.into_iter().enumerate() {
                next[(o * n_new + j) * inner + i] = v;
            }
        }
        data = next;
        shape[axis] = n_new;
    }
    for v in data.iter_mut() {
        *v += sk.constant;
    }
    if data.iter().all(|v| *v == f64::INFINITY) {
        return Err(Error::AllMasked);
    }
    GridFunction::new(out.clone(), data)
}

/// Discrete `Q_h^W g` on `out`: infimum over unmasked source nodes, masked
/// where no source is admissible.
pub fn inf_convolution(g: &GridFunction, w: &PotentialSpec, h: f64, out: &Grid) -> Result<GridFunction> {
    inf_convolution_with(g, w, h, out, HopfLaxOptions::default())
}

pub fn inf_convolution_with(
    g: &GridFunction,
    w: &PotentialSpec,
    h: f64,
    out: &Grid,
    opts: HopfLaxOptions,
) -> Result<GridFunction> {
    check_h(h)?;
    validate_kernel(w)?;
    if h == 0.0 {
        return identity_case(g, out);
    }
    let n = g.grid.dim();
    let split = split_kernel(w, h, n);
    let use_split = match opts.method {
        Method::Brute => false,
        Method::Separable => {
            if split.is_none() {
                return Err(Error::InvalidInput("kernel does not split by axis".into()));
            }
            true
        }
        Method::Auto => n >= 2 && split.is_some(),
    };
    if use_split {
        return separable(g, split.as_ref().unwrap(), out, opts.refine);
    }
    let kernel = |d: &[f64]| {
        let z: Vec<f64> = d.iter().map(|v| v / h).collect();
        h * w.value(&z)
    };
    scan(g, &kernel, out, opts.refine)
}

/// Brute-force oracle for the separable passes: a full scan with the same
/// association `k₀ + (k₁ + (… + (k_{n−1} + g))) + h·C`.
pub fn inf_convolution_separable_brute(g: &GridFunction, w: &PotentialSpec, h: f64, out: &Grid) -> Result<GridFunction> {
    check_h(h)?;
    validate_kernel(w)?;
    if h == 0.0 {
        return identity_case(g, out);
    }
    let n = g.grid.dim();
    let sk = split_kernel(w, h, n).ok_or_else(|| Error::InvalidInput("kernel does not split by axis".into()))?;
    let src: Vec<usize> = (0..g.values.len()).filter(|&i| !g.is_masked(i)).collect();
    let coords: Vec<Vec<f64>> = src.iter().map(|&i| g.grid.node(i)).collect();
    let values: Vec<f64> = (0..out.len())
        .into_par_iter()
        .map(|t| {
            let x = out.node(t);
            let mut best = f64::INFINITY;
            for (k, y) in coords.iter().enumerate() {
                let mut acc = g.values[src[k]];
                for a in (0..n).rev() {
                    acc += sk.axes[a](x[a] - y[a]);
                }
                if acc < best {
                    best = acc;
                }
            }
            best + sk.constant
        })
        .collect();
    if values.iter().all(|v| *v == f64::INFINITY) {
        return Err(Error::AllMasked);
    }
    GridFunction::new(out.clone(), values)
}

/// Direct scan with an arbitrary kernel field: `inf_y {g(y) + h·K((x−y)/h)}`.
/// Used with a non-power kernel, for instance in the rescaled form
/// `h·Q_{1/h}^g(W)(x/h)`. The kernel must be superlinear; this is not checked.
pub fn inf_convolution_kernel(g: &GridFunction, kernel: &dyn Field, h: f64, out: &Grid) -> Result<GridFunction> {
    check_h(h)?;
    if h == 0.0 {
        return identity_case(g, out);
    }
    let k = |d: &[f64]| {
        let z: Vec<f64> = d.iter().map(|v| v / h).collect();
        h * kernel.value(&z)
    };
    scan(g, &k, out, false)
}

/// Half-space operator: sources in `ℝⁿ₊`, kernel argument in `{z₀ ≥ 1}`;
/// targets with first coordinate below `h` are masked.
pub fn inf_convolution_halfspace(g: &GridFunction, w: &PotentialSpec, h: f64, out: &Grid) -> Result<GridFunction> {
    inf_convolution_halfspace_with(g, w, h, out, HopfLaxOptions::default())
}

pub fn inf_convolution_halfspace_with(
    g: &GridFunction,
    w: &PotentialSpec,
    h: f64,
    out: &Grid,
    opts: HopfLaxOptions,
) -> Result<GridFunction> {
    check_h(h)?;
    validate_kernel(w)?;
    if h == 0.0 {
        return identity_case(g, out);
    }
    let mut wt = w.clone();
    if wt.support == Support::Full {
        wt.support = Support::HalfSpace { from: 1.0 };
    }
    let src = g.map_with_node(|y, v| if y[0] < 0.0 { f64::INFINITY } else { v })?;
    let q = inf_convolution_with(&src, &wt, h, out, opts)?;
    let masked = q.map_with_node(|x, v| if x[0] < h { f64::INFINITY } else { v })?;
    if masked.masked_count() == masked.values.len() {
        return Err(Error::AllMasked);
    }
    Ok(masked)
}

/// Discrete sup-convolution `R_h^W g(x) = sup {g(y) + h W((x−y)/h)}` over
/// source nodes with `g(y) > 0` and `W((x−y)/h) > 0`; zero where no pair
/// qualifies.
pub fn sup_convolution(g: &GridFunction, w: &PotentialSpec, h: f64, out: &Grid) -> Result<GridFunction> {
    check_h(h)?;
    if w.shape != Shape::ConcaveCap {
        return Err(Error::InvalidInput("sup-convolution needs a concave cap kernel".into()));
    }
    if g.masked_count() > 0 {
        return Err(Error::Divergent("unbounded sup: source has infinite values".into()));
    }
    if h == 0.0 {
        return identity_case(g, out);
    }
    let n = g.grid.dim();
    let src: Vec<usize> = (0..g.values.len()).filter(|&i| g.values[i] > 0.0).collect();
    let coords: Vec<Vec<f64>> = src.iter().map(|&i| g.grid.node(i)).collect();
    let values: Vec<f64> = (0..out.len())
        .into_par_iter()
        .map(|t| {
            let x = out.node(t);
            let mut z = vec![0.0; n];
            let mut best = f64::NEG_INFINITY;
            for (k, y) in coords.iter().enumerate() {
                for a in 0..n {
                    z[a] = (x[a] - y[a]) / h;
                }
                let wv = w.value(&z);
                if wv > 0.0 {
                    let v = g.values[src[k]] + h * wv;
                    if v > best {
                        best = v;
                    }
                }
            }
            if best == f64::NEG_INFINITY {
                0.0
            } else {
                best
            }
        })
        .collect();
    GridFunction::new(out.clone(), values)
}
