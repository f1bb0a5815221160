//! Semigroup integrals on grids: `∫ F(Q_h^W g)` and `∫ F(R_h^W g)`.

use super::perturb::PerturbedField;
use crate::error::{Error, Result};
use crate::functionals::FunctionalValue;
use crate::grid::quad::Tolerance;
use crate::grid::{self, integrate_outside_box, make_grid, sample, Domain, DomainKind, Grid, GridFunction};
use crate::hopf_lax::{
    inf_convolution_halfspace_with, inf_convolution_with, q_pointwise, sup_convolution, Datum, HopfLaxOptions, Method,
};
use crate::norms::{Field, PotentialSpec};

/// Box and node counts of a semigroup grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupGrid {
    pub n: usize,
    pub kind: DomainKind,
    /// Half-width of the box (length of the first axis on the half-space).
    pub radius: f64,
    /// Nodes per axis.
    pub nodes: usize,
    /// Nodes on the first axis, which is finer on the half-space.
    pub first_nodes: usize,
}

/// Cells per unit of `h` along the normal axis of the half-space.
const CELLS_PER_H: f64 = 8.0;

impl SemigroupGrid {
    /// Box of half-width at least `min_radius`. On the half-space, `h` is a
    /// node of this grid and of its stride-2 coarsening, and the normal axis
    /// has at least eight cells per `h`.
    pub fn fitted(n: usize, kind: DomainKind, nodes: usize, min_radius: f64, h: f64) -> Result<Self> {
        if nodes < 5 || nodes.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("need an odd node count ≥ 5, got {nodes}")));
        }
        let plain = SemigroupGrid { n, kind, radius: min_radius, nodes, first_nodes: nodes };
        if kind == DomainKind::Full || h == 0.0 {
            return Ok(plain);
        }
        let base_cells = (nodes - 1) as f64;
        let per_h = (h * base_cells / min_radius).max(CELLS_PER_H);
        let k = 2.0 * (per_h / 2.0).ceil();
        let dx = h / k;
        let mut cells = (min_radius / dx).ceil() as usize;
        cells += cells % 2;
        if cells > 8 * (nodes - 1) {
            return Err(Error::InvalidGrid(format!(
                "h = {h} is too small for {nodes} nodes; need h ≥ {:.4}",
                min_radius / base_cells
            )));
        }
        Ok(SemigroupGrid { radius: cells as f64 * dx, first_nodes: cells + 1, ..plain })
    }

    pub fn domain(&self) -> Domain {
        match self.kind {
            DomainKind::Full => Domain::cube(self.n, self.radius),
            DomainKind::HalfSpace => Domain::half_space(vec![self.radius; self.n]),
        }
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![self.nodes; self.n];
        c[0] = self.first_nodes;
        c
    }

    pub fn grid(&self) -> Result<Grid> {
        make_grid(self.domain(), &self.counts())
    }

    /// Same box with half the cells on every axis.
    pub fn coarse(&self) -> SemigroupGrid {
        SemigroupGrid { nodes: self.nodes.div_ceil(2), first_nodes: self.first_nodes.div_ceil(2), ..*self }
    }
}

/// Values of `u` on the stride-2 subgrid.
pub fn subsample(u: &GridFunction) -> Result<GridFunction> {
    let cg = u.grid.coarsened()?;
    let vals: Vec<f64> = (0..cg.len())
        .map(|i| {
            let idx: Vec<usize> = cg.multi_index(i).iter().map(|k| 2 * k).collect();
            u.values[u.grid.flat_index(&idx)]
        })
        .collect();
    GridFunction::new(cg, vals)
}

/// Trapezoid value with the fine-versus-stride-2 error estimate.
fn two_level(u: &GridFunction) -> Result<(f64, f64)> {
    let fine = grid::integrate(u)?;
    let coarse = grid::integrate(&subsample(u)?)?;
    Ok((fine, (fine - coarse).abs() / 3.0))
}

/// Applies `f` to the finite values and keeps masked nodes masked.
fn through(q: &GridFunction, f: &(dyn Fn(f64) -> f64 + Sync)) -> Result<GridFunction> {
    q.map(|v| if v == f64::INFINITY { f64::INFINITY } else { f(v) })
}

fn far_value(v: f64, f: &(dyn Fn(f64) -> f64 + Sync)) -> f64 {
    if v == f64::INFINITY {
        0.0
    } else {
        f(v)
    }
}

const OPTS: HopfLaxOptions = HopfLaxOptions { method: Method::Auto, refine: true };

/// Discrete `Q_h^W g` on the grid. On ℝⁿ with `h > 2`, `g` is sampled on a
/// box shrunk by `3/(1+h)`, which still holds the minimizers (they sit near
/// `x/(1+h)`) and keeps the features of `g` resolved.
pub fn semigroup_values(g: &dyn Field, kernel: &PotentialSpec, h: f64, sg: &SemigroupGrid) -> Result<GridFunction> {
    let grid = sg.grid()?;
    match sg.kind {
        DomainKind::Full => {
            let src = if h > 2.0 {
                make_grid(Domain::cube(sg.n, 3.0 * sg.radius / (1.0 + h)), &sg.counts())?
            } else {
                grid.clone()
            };
            let gs = sample(|x| g.value(x), &src)?;
            inf_convolution_with(&gs, kernel, h, &grid, OPTS)
        }
        DomainKind::HalfSpace => {
            let gs = sample(|x| g.value(x), &grid)?;
            inf_convolution_halfspace_with(&gs, kernel, h, &grid, OPTS)
        }
    }
}

/// `∫ F(Q_h^W g)` over ℝⁿ, or over `{x₀ ≥ h}` on the half-space. Inside the
/// box `Q` is computed on the grid; outside, by the closed form of the
/// far field of `g`, which agrees with `g` beyond its perturbation.
pub fn semigroup_integral(
    g: &PerturbedField,
    kernel: &PotentialSpec,
    h: f64,
    sg: &SemigroupGrid,
    integrand: &(dyn Fn(f64) -> f64 + Sync),
    tail_tol: f64,
) -> Result<FunctionalValue> {
    let far = g
        .far_field()
        .ok_or_else(|| Error::InvalidInput("semigroup tail needs a convex power datum".into()))?;
    let q = semigroup_values(g, kernel, h, sg)?;
    let (fine, err) = two_level(&through(&q, integrand)?)?;
    let kind = sg.kind;
    let outside = |x: &[f64]| {
        let v = q_pointwise(Datum::Potential(&far), kernel, h, x, kind).unwrap_or(f64::INFINITY);
        far_value(v, integrand)
    };
    let tail = integrate_outside_box(&outside, &sg.domain(), Tolerance::new(1e-15, tail_tol));
    let out = FunctionalValue { value: fine + tail.value, error: err, truncation: tail.error };
    if !out.value.is_finite() {
        return Err(Error::Divergent("semigroup integral is not finite".into()));
    }
    Ok(out)
}

/// `∫ F(R_h^W g)` for a compactly supported `g` and a cap `W`; the box must
/// contain `supp g + h·supp W`.
pub fn sup_semigroup_integral(
    g: &dyn Field,
    cap: &PotentialSpec,
    h: f64,
    sg: &SemigroupGrid,
    integrand: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<FunctionalValue> {
    let grid = sg.grid()?;
    let gs = sample(|x| g.value(x), &grid)?;
    let r = sup_convolution(&gs, cap, h, &grid)?;
    let (fine, err) = two_level(&r.map(integrand)?)?;
    Ok(FunctionalValue { value: fine, error: err, truncation: 0.0 })
}

/// `Λ(h) = ∫ Q_h^W(g)^{−n}` on ℝⁿ.
pub fn classic_lambda(g: &PerturbedField, w: &PotentialSpec, h: f64, sg: &SemigroupGrid) -> Result<FunctionalValue> {
    let nf = sg.n as f64;
    semigroup_integral(g, w, h, sg, &move |v: f64| v.powf(-nf), 1e-9)
}
