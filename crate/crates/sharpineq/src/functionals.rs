//! Integral functionals of analytic and sampled test functions: power
//! integrals, Dirichlet-type integrals `∫W*(∇g)g^{−a}`, entropies, boundary
//! traces, and normalization constants.
//!
//! Analytic integrands go through one of two pipelines. [`Pipeline::Adaptive`]
//! uses radial Gauss–Kronrod quadrature when the integrand has a known
//! symmetry and nested quadrature otherwise. [`Pipeline::Grid`] samples on a
//! box, applies the trapezoid rule, and adds the outside-the-box tail by
//! adaptive quadrature.

use crate::error::{Error, Result};
use crate::grid::quad::{integrate_nested, QuadResult, Tolerance};
use crate::grid::{
    self, gradient_fd, integrate_outside_box, integrate_radial, make_grid, sample, sphere_area, Domain, DomainKind,
    GridFunction, RadialMode,
};
use crate::norms::{
    concave_conjugate, conjugate_analytic, conjugate_halfspace, Field, NormSpec, PotentialSpec, Shape, Support,
};
use crate::optim::bisect;
use serde::{Deserialize, Serialize};

/// A computed integral with its quadrature error estimate and the error
/// attributed to domain truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub value: f64,
    pub error: f64,
    pub truncation: f64,
}

impl FunctionalValue {
    pub fn exact(value: f64) -> Self {
        FunctionalValue { value, error: 0.0, truncation: 0.0 }
    }

    /// Total error allowance.
    pub fn budget(&self) -> f64 {
        self.error + self.truncation
    }

    pub fn scaled(self, c: f64) -> Self {
        FunctionalValue {
            value: c * self.value,
            error: c.abs() * self.error,
            truncation: c.abs() * self.truncation,
        }
    }

    /// `self^e` with first-order error propagation.
    pub fn powf(self, e: f64) -> Self {
        let v = self.value.powf(e);
        let d = (e * self.value.powf(e - 1.0)).abs();
        FunctionalValue { value: v, error: d * self.error, truncation: d * self.truncation }
    }
}

impl std::ops::Add for FunctionalValue {
    type Output = FunctionalValue;
    fn add(self, o: FunctionalValue) -> FunctionalValue {
        FunctionalValue {
            value: self.value + o.value,
            error: self.error + o.error,
            truncation: self.truncation + o.truncation,
        }
    }
}

impl std::ops::Sub for FunctionalValue {
    type Output = FunctionalValue;
    fn sub(self, o: FunctionalValue) -> FunctionalValue {
        self + o.scaled(-1.0)
    }
}

/// Symmetry an integrand is known to have.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Symmetry {
    None,
    /// Depends on `x` only through `‖x‖` for the given norm.
    NormRadial(NormSpec),
    /// On the half-space, depends only on `|z + e|`.
    ShiftedEuclidean,
}

/// Integration domain of an analytic integrand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub n: usize,
    pub kind: DomainKind,
    pub symmetry: Symmetry,
    /// The integrand vanishes outside `[−R, R]ⁿ`.
    pub support_radius: Option<f64>,
}

impl Region {
    pub fn full(n: usize) -> Self {
        Region { n, kind: DomainKind::Full, symmetry: Symmetry::None, support_radius: None }
    }

    pub fn half_space(n: usize) -> Self {
        Region { kind: DomainKind::HalfSpace, ..Region::full(n) }
    }

    pub fn radial(n: usize, norm: NormSpec) -> Self {
        Region { symmetry: Symmetry::NormRadial(norm), ..Region::full(n) }
    }

    pub fn shifted_radial(n: usize) -> Self {
        Region { symmetry: Symmetry::ShiftedEuclidean, ..Region::half_space(n) }
    }

    pub fn with_support(mut self, r: f64) -> Self {
        self.support_radius = Some(r);
        self
    }

    /// Best region for integrands built from `f` alone.
    pub fn for_potential(f: &PotentialSpec, n: usize, kind: DomainKind) -> Self {
        let compact = (f.shape == Shape::ConcaveCap).then(|| {
            let w = f.norm.weights.as_ref().map_or(1.0, |v| v.iter().cloned().fold(f64::INFINITY, f64::min));
            let lp = if f.norm.exponent < 2.0 { 1.0 } else { (n as f64).powf(0.5 - 1.0 / f.norm.exponent).max(1.0) };
            lp / w + f.shift.as_ref().map_or(0.0, |s| s.iter().map(|v| v.abs()).fold(0.0, f64::max))
        });
        let base = match kind {
            DomainKind::Full if f.is_radial() => Region::radial(n, f.norm.clone()),
            DomainKind::HalfSpace if is_unit_shift(f) && f.norm.is_euclidean() && f.support == Support::Full => {
                Region::shifted_radial(n)
            }
            DomainKind::Full => Region::full(n),
            DomainKind::HalfSpace => Region::half_space(n),
        };
        Region { support_radius: compact.map(|r| r * 1.0000001), ..base }
    }
}

fn is_unit_shift(f: &PotentialSpec) -> bool {
    f.shift.as_ref().is_some_and(|s| s[0] == 1.0 && s[1..].iter().all(|v| *v == 0.0))
}

/// How analytic integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Pipeline {
    /// Radial or nested adaptive Gauss–Kronrod quadrature to relative `tol`.
    Adaptive { tol: f64 },
    /// Trapezoid rule on `nodes` points per axis over `[−R, R]ⁿ` (or
    /// `[0, R] × [−R, R]ⁿ⁻¹`), plus an adaptive tail.
    Grid { nodes: usize, radius: f64 },
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline::Adaptive { tol: 1e-10 }
    }
}

fn tolerance(rel: f64) -> Tolerance {
    Tolerance::new(1e-15, rel)
}

fn finite(v: FunctionalValue, what: &str) -> Result<FunctionalValue> {
    if v.value.is_finite() && v.error.is_finite() {
        Ok(v)
    } else {
        Err(Error::Divergent(format!("{what} is not finite")))
    }
}

/// Growth exponent of `|f|` along the first axis between `R` and `2R`.
fn far_exponent(f: &(dyn Fn(&[f64]) -> f64 + Sync), n: usize, kind: DomainKind, r: f64) -> Option<f64> {
    let mut x = vec![0.0; n];
    let axis = if kind == DomainKind::HalfSpace && n > 1 { 1 } else { 0 };
    x[axis] = r;
    let a = f(&x).abs();
    x[axis] = 2.0 * r;
    let b = f(&x).abs();
    (a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()).then(|| (b / a).ln() / 2f64.ln())
}

/// Integral of `f` over ℝⁿ or ℝⁿ₊.
pub fn integrate_over(f: &(dyn Fn(&[f64]) -> f64 + Sync), region: &Region, pipe: &Pipeline) -> Result<FunctionalValue> {
    let n = region.n;
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if region.support_radius.is_none() {
        if let Some(e) = far_exponent(f, n, region.kind, 1e6) {
            if e >= -(n as f64) - 1e-9 {
                return Err(Error::Divergent(format!("integrand decays like |x|^{e:.3}")));
            }
        }
    }
    let out = match *pipe {
        Pipeline::Adaptive { tol } => adaptive(f, region, tolerance(tol))?,
        Pipeline::Grid { nodes, radius } => on_grid(f, region, nodes, radius)?,
    };
    finite(out, "integral")
}

fn adaptive(f: &(dyn Fn(&[f64]) -> f64 + Sync), region: &Region, tol: Tolerance) -> Result<FunctionalValue> {
    let n = region.n;
    let q = match (&region.symmetry, region.kind) {
        (Symmetry::NormRadial(norm), DomainKind::Full) => {
            let u = norm.unit_point(n);
            let prof = |r: f64| {
                let x: Vec<f64> = u.iter().map(|v| v * r).collect();
                f(&x)
            };
            let ratio = n as f64 * norm.unit_ball_volume(n) / sphere_area(n);
            let r = integrate_radial(prof, n, RadialMode::FullSpace, tol)?;
            QuadResult { value: r.value * ratio, error: r.error * ratio }
        }
        (Symmetry::ShiftedEuclidean, DomainKind::HalfSpace) => {
            let prof = |r: f64| {
                let mut z = vec![0.0; n];
                z[0] = r - 1.0;
                f(&z)
            };
            integrate_radial(prof, n, RadialMode::ShiftedHalfSpace, tol)?
        }
        _ => {
            let half = region.kind == DomainKind::HalfSpace;
            let r = region.support_radius.unwrap_or(f64::INFINITY);
            let lim = |k: usize, _o: &[f64]| {
                let lo = if half && k == 0 { 0.0 } else { -r };
                (lo, r)
            };
            integrate_nested(f, n, &lim, &[-1.0, 0.0, 1.0], tol)
        }
    };
    Ok(FunctionalValue { value: q.value, error: q.error, truncation: 0.0 })
}

fn grid_domain(region: &Region, radius: f64) -> Domain {
    match region.kind {
        DomainKind::Full => Domain::cube(region.n, radius),
        DomainKind::HalfSpace => Domain::half_space(vec![radius; region.n]),
    }
}

fn on_grid(f: &(dyn Fn(&[f64]) -> f64 + Sync), region: &Region, nodes: usize, radius: f64) -> Result<FunctionalValue> {
    if nodes < 3 || nodes.is_multiple_of(2) {
        return Err(Error::InvalidGrid("grid pipeline needs an odd node count ≥ 3".into()));
    }
    let domain = grid_domain(region, radius);
    let g = make_grid(domain.clone(), &vec![nodes; region.n])?;
    let u = sample(f, &g)?;
    let fine = grid::integrate(&u)?;
    let coarse_grid = g.coarsened()?;
    let stride: usize = 2;
    let coarse_vals: Vec<f64> = (0..coarse_grid.len())
        .map(|i| {
            let idx: Vec<usize> = coarse_grid.multi_index(i).iter().map(|k| k * stride).collect();
            u.values[g.flat_index(&idx)]
        })
        .collect();
    let coarse = grid::integrate(&GridFunction::new(coarse_grid, coarse_vals)?)?;
    let tail = if region.support_radius.is_some_and(|r| r <= radius) {
        QuadResult::zero()
    } else {
        integrate_outside_box(f, &domain, Tolerance::new(1e-14, 1e-9))
    };
    Ok(FunctionalValue {
        value: fine + tail.value,
        error: (fine - coarse).abs() / 3.0,
        truncation: tail.error,
    })
}

/// `g^r` with the conventions `+∞^r = 0` and `0^r = 0` wherever that is the
/// limit.
fn masked_power(v: f64, r: f64) -> f64 {
    if r == 0.0 {
        return if v.is_finite() || v == f64::INFINITY { 1.0 } else { f64::NAN };
    }
    if v == f64::INFINITY {
        return if r < 0.0 { 0.0 } else { f64::INFINITY };
    }
    if v == 0.0 {
        return if r > 0.0 { 0.0 } else { f64::INFINITY };
    }
    v.powf(r)
}

/// `∫ g^r` over the region.
pub fn power_functional(g: &dyn Field, r: f64, region: &Region, pipe: &Pipeline) -> Result<FunctionalValue> {
    let f = |x: &[f64]| masked_power(g.value(x), r);
    integrate_over(&f, region, pipe)
}

/// `∫ u^r` of sampled data (masked nodes excluded).
pub fn power_functional_grid(u: &GridFunction, r: f64) -> Result<f64> {
    grid::integrate(&u.map(|v| masked_power(v, r))?)
}

/// A conjugate as a function of the gradient.
pub type ConjugateFn = Box<dyn Fn(&[f64]) -> f64 + Sync + Send>;

/// Conjugate used by [`dirichlet_functional`]: the Legendre transform of a
/// convex `W`, the concave transform of a cap, or on the half-space the
/// transform restricted to `{z₀ ≥ 1}`.
pub fn dirichlet_conjugate(w: &PotentialSpec, kind: DomainKind) -> Result<ConjugateFn> {
    match (kind, w.shape) {
        (DomainKind::HalfSpace, Shape::Convex) => {
            let wr = match w.support {
                Support::HalfSpace { .. } => w.clone(),
                Support::Full => w.clone().on_half_space(1.0),
            };
            conjugate_halfspace(&wr, &[0.0; 1])?;
            Ok(Box::new(move |y: &[f64]| conjugate_halfspace(&wr, y).unwrap_or(f64::INFINITY)))
        }
        (DomainKind::HalfSpace, Shape::ConcaveCap) => {
            Err(Error::InvalidInput("half-space functionals need a convex potential".into()))
        }
        (DomainKind::Full, Shape::Convex) => {
            let c = conjugate_analytic(w)?;
            let form = c.formula().cloned().expect("analytic conjugate");
            Ok(Box::new(move |y: &[f64]| form.eval(y)))
        }
        (DomainKind::Full, Shape::ConcaveCap) => {
            let c = concave_conjugate(w)?;
            let form = c.formula().cloned().expect("analytic conjugate");
            Ok(Box::new(move |y: &[f64]| form.eval(y)))
        }
    }
}

/// `∫ W°(∇g) g^{−a}`, where `W°` is chosen by [`dirichlet_conjugate`] and the
/// gradient is exact. Negative `a` gives the `g^{|a|}`-weighted form used for
/// concave potentials.
pub fn dirichlet_functional(
    g: &dyn Field,
    w: &PotentialSpec,
    a: f64,
    region: &Region,
    pipe: &Pipeline,
) -> Result<FunctionalValue> {
    let conj = dirichlet_conjugate(w, region.kind)?;
    let n = region.n;
    let f = |x: &[f64]| {
        let v = g.value(x);
        let weight = masked_power(v, -a);
        if weight == 0.0 {
            return 0.0;
        }
        let mut grad = vec![0.0; n];
        g.gradient(x, &mut grad);
        conj(&grad) * weight
    };
    integrate_over(&f, region, pipe).map_err(|e| match e {
        Error::Divergent(m) => Error::Divergent(format!("dirichlet integral: {m}")),
        other => other,
    })
}

/// `∫ W°(∇u) u^{−a}` of sampled data with finite-difference gradients.
pub fn dirichlet_functional_grid(u: &GridFunction, conj: &(dyn Fn(&[f64]) -> f64 + Sync), a: f64) -> Result<f64> {
    let grads = gradient_fd(u);
    let n = u.grid.dim();
    let vals: Vec<f64> = (0..u.values.len())
        .map(|i| {
            let weight = masked_power(u.values[i], -a);
            if u.is_masked(i) {
                return f64::INFINITY;
            }
            if weight == 0.0 {
                return 0.0;
            }
            let y: Vec<f64> = (0..n).map(|k| grads[k].values[i]).collect();
            conj(&y) * weight
        })
        .collect();
    let out = grid::integrate(&GridFunction::new(u.grid.clone(), vals)?)?;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::Divergent("conjugate is infinite on sampled gradients".into()))
    }
}

/// `Ent(f^p) = ∫ f^p log f^p − (∫ f^p) log ∫ f^p`, with `0 log 0 = 0`.
pub fn entropy_functional(f: &dyn Field, p: f64, region: &Region, pipe: &Pipeline) -> Result<FunctionalValue> {
    let mass = power_functional(f, p, region, pipe)?;
    if !(mass.value > 0.0) {
        return Err(Error::Normalization("zero total mass".into()));
    }
    let integrand = |x: &[f64]| {
        let v = f.value(x).max(0.0).powf(p);
        if v == 0.0 {
            0.0
        } else {
            v * v.ln()
        }
    };
    let ent = integrate_over(&integrand, region, pipe)?;
    let m = mass.value;
    let dm = (m.ln() + 1.0).abs();
    Ok(FunctionalValue {
        value: ent.value - m * m.ln(),
        error: ent.error + dm * mass.error,
        truncation: ent.truncation + dm * mass.truncation,
    })
}

/// Entropy of sampled data `u^p`.
pub fn entropy_functional_grid(u: &GridFunction, p: f64) -> Result<f64> {
    let m = power_functional_grid(u, p)?;
    if !(m > 0.0) {
        return Err(Error::Normalization("zero total mass".into()));
    }
    let e = grid::integrate(&u.map(|v| {
        let w = v.max(0.0).powf(p);
        if w == 0.0 {
            0.0
        } else {
            w * w.ln()
        }
    })?)?;
    Ok(e - m * m.ln())
}

/// `∫_{∂ℝⁿ₊} g^r`, the integral over the face `x₀ = 0`.
pub fn trace_functional(g: &dyn Field, r: f64, region: &Region, pipe: &Pipeline) -> Result<FunctionalValue> {
    if region.kind != DomainKind::HalfSpace {
        return Err(Error::InvalidInput("trace needs a half-space domain".into()));
    }
    let n = region.n;
    let lift = |y: &[f64]| {
        let mut x = vec![0.0; n];
        x[1..].copy_from_slice(y);
        masked_power(g.value(&x), r)
    };
    if n == 1 {
        return finite(FunctionalValue::exact(lift(&[])), "trace");
    }
    let face = Region {
        n: n - 1,
        kind: DomainKind::Full,
        symmetry: match region.symmetry {
            Symmetry::ShiftedEuclidean => Symmetry::NormRadial(NormSpec::euclidean()),
            _ => Symmetry::None,
        },
        support_radius: region.support_radius,
    };
    integrate_over(&lift, &face, pipe)
}

/// Face integral of sampled half-space data.
pub fn trace_functional_grid(u: &GridFunction, r: f64) -> Result<f64> {
    grid::integrate_face(&u.map(|v| masked_power(v, r))?)
}

/// Constraint fixing a normalization constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Target {
    /// `∫ W^{−a} = 1`.
    InvPower(f64),
    /// `∫ W^{a} = 1`.
    Power(f64),
    /// `∫ e^{−W} = 1`.
    NegExp,
}

/// Parameter solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreeParam {
    Offset,
    Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationProblem {
    pub family: PotentialSpec,
    pub free: FreeParam,
    pub target: Target,
    pub n: usize,
    pub kind: DomainKind,
}

impl NormalizationProblem {
    pub fn new(family: PotentialSpec, free: FreeParam, target: Target, n: usize) -> Self {
        NormalizationProblem { family, free, target, n, kind: DomainKind::Full }
    }

    pub fn on_half_space(mut self) -> Self {
        self.kind = DomainKind::HalfSpace;
        self
    }

    /// The family with the free parameter set to `c`.
    pub fn with_value(&self, c: f64) -> PotentialSpec {
        match self.free {
            FreeParam::Offset => self.family.clone().with_offset(c),
            FreeParam::Scale => self.family.clone().with_scale(c),
        }
    }

    /// The constrained integral at parameter value `c`.
    pub fn integral(&self, c: f64) -> Result<FunctionalValue> {
        let w = self.with_value(c);
        let region = Region::for_potential(&w, self.n, self.kind);
        let pipe = Pipeline::Adaptive { tol: 1e-14 };
        match self.target {
            Target::InvPower(a) => power_functional(&w, -a, &region, &pipe),
            Target::Power(a) => power_functional(&w, a, &region, &pipe),
            Target::NegExp => {
                let f = |x: &[f64]| (-w.value(x)).exp();
                integrate_over(&f, &region, &pipe)
            }
        }
    }
}

/// Solves for the free parameter by bisection (in log scale for scales) on
/// the monotone map `c ↦ integral − 1`.
pub fn normalize(problem: &NormalizationProblem) -> Result<f64> {
    let logscale = problem.free == FreeParam::Scale
        || matches!((problem.free, problem.target), (FreeParam::Offset, Target::InvPower(_) | Target::Power(_)));
    let to_c = |t: f64| if logscale { t.exp() } else { t };
    let resid = |t: f64| -> Result<f64> { Ok(problem.integral(to_c(t))?.value - 1.0) };
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut rlo = resid(lo)?;
    let mut rhi = resid(hi)?;
    let mut steps = 0;
    while rlo.signum() == rhi.signum() {
        steps += 1;
        if steps > 80 {
            return Err(Error::Normalization("could not bracket the normalization constant".into()));
        }
        // step toward the side whose residual is smaller in magnitude
        let w = hi - lo;
        if rlo.abs() < rhi.abs() {
            hi = lo;
            rhi = rlo;
            lo -= 2.0 * w;
            rlo = resid(lo)?;
        } else {
            lo = hi;
            rlo = rhi;
            hi += 2.0 * w;
            rhi = resid(hi)?;
        }
    }
    let mut err = None;
    let t = bisect(
        |t| match resid(t) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        1e-16,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let t = t.ok_or_else(|| Error::Normalization("bisection failed".into()))?;
    Ok(to_c(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::norms::Transform;
    use std::f64::consts::PI;

    fn quad(q: f64, c: f64) -> PotentialSpec {
        PotentialSpec::convex(NormSpec::euclidean(), q, 1.0, c)
    }

    #[test]
    fn normalize_one_dimensional_quadratic() {
        let p = NormalizationProblem::new(quad(2.0, 1.0), FreeParam::Offset, Target::InvPower(2.0), 1);
        let c = normalize(&p).unwrap();
        let want = (PI / 2f64.sqrt()).powf(2.0 / 3.0);
        assert!((c - want).abs() < 1e-12 * want, "{c} {want}");
        let r = p.integral(c).unwrap().value;
        assert!((r - 1.0).abs() <= 1e-12);
        // independent check by nested quadrature without the radial shortcut
        let w = quad(2.0, c);
        let v = power_functional(&w, -2.0, &Region::full(1), &Pipeline::Adaptive { tol: 1e-13 }).unwrap();
        assert!((v.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn normalize_gaussian() {
        for n in 1..=3 {
            let p = NormalizationProblem::new(quad(2.0, 0.0), FreeParam::Offset, Target::NegExp, n);
            let c = normalize(&p).unwrap();
            let want = n as f64 / 2.0 * (2.0 * PI).ln();
            assert!((c - want).abs() < 1e-11, "{n}: {c} {want}");
        }
    }

    #[test]
    fn normalize_concave_scale() {
        let cap = PotentialSpec::concave_cap(NormSpec::euclidean(), 2.0, 1.0);
        let p = NormalizationProblem::new(cap, FreeParam::Scale, Target::Power(2.0), 2);
        let c = normalize(&p).unwrap();
        // ∫_{B²} ((c/2)(1−r²))² = (c²/4)·2π·∫₀¹(1−r²)²r dr = c²π/12
        let want = (12.0 / PI).sqrt();
        assert!((c - want).abs() < 1e-10 * want);
        let w = p.with_value(c);
        let f = |x: &[f64]| w.value(x).powi(2);
        let disc = |k: usize, o: &[f64]| {
            let h = if k == 0 { 1.0 } else { (1.0 - o[0] * o[0]).max(0.0).sqrt() };
            (-h, h)
        };
        let brute = integrate_nested(&f, 2, &disc, &[], Tolerance::new(1e-15, 1e-13));
        assert!((brute.value - 1.0).abs() < 1e-10, "{}", brute.value);
    }

    #[test]
    fn power_examples() {
        let one = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 0.0, 1.0);
        let g = make_grid(Domain::full(vec![0.5, 0.5], vec![0.5, 0.5]), &[9, 9]).unwrap();
        let u = sample(|x| one.value(x), &g).unwrap();
        for r in [-2.0, 0.5, 3.0] {
            assert!((power_functional_grid(&u, r).unwrap() - 1.0).abs() < 1e-14);
        }
        let bump = quad(2.0, 1.0).with_scale(2.0);
        let v = power_functional(&bump, -3.0, &Region::radial(2, NormSpec::euclidean()), &Pipeline::default()).unwrap();
        assert!((v.value - PI / 2.0).abs() < 1e-10);
        let nested = power_functional(&bump, -3.0, &Region::full(2), &Pipeline::Adaptive { tol: 1e-10 }).unwrap();
        assert!((nested.value - PI / 2.0).abs() < 1e-8);
        let grid = power_functional(&bump, -3.0, &Region::full(2), &Pipeline::Grid { nodes: 257, radius: 8.0 }).unwrap();
        assert!((grid.value - PI / 2.0).abs() < 1e-4 && grid.budget() < 1e-3);
        let lam = 1.7;
        let scaled = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 2.0 * lam, lam);
        let v2 = power_functional(&scaled, -3.0, &Region::radial(2, NormSpec::euclidean()), &Pipeline::default()).unwrap();
        assert!((v2.value - lam.powf(-3.0) * v.value).abs() < 1e-10);
    }

    #[test]
    fn non_integrable_rejected() {
        let w = quad(2.0, 1.0);
        let e = power_functional(&w, -1.0, &Region::radial(2, NormSpec::euclidean()), &Pipeline::default());
        assert!(matches!(e, Err(Error::Divergent(_))));
        let e = power_functional(&w, -1.0, &Region::full(2), &Pipeline::default());
        assert!(matches!(e, Err(Error::Divergent(_))));
    }

    #[test]
    fn dirichlet_equality_pair() {
        // (a−1)∫W*(∇W)W^{−a} + (a−n)∫W^{1−a} = ∫W^{1−a} at g = W
        let p = NormalizationProblem::new(quad(2.0, 1.0), FreeParam::Offset, Target::InvPower(2.0), 1);
        let w = quad(2.0, normalize(&p).unwrap());
        let reg = Region::radial(1, NormSpec::euclidean());
        let d = dirichlet_functional(&w, &w, 2.0, &reg, &Pipeline::default()).unwrap();
        let s = power_functional(&w, -1.0, &reg, &Pipeline::default()).unwrap();
        assert!((d.value + (2.0 - 1.0) * s.value - s.value).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_constant_input() {
        let w = quad(2.0, 0.5);
        let g = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 0.0, 2.0);
        let g_box = Region::full(1).with_support(1.0);
        let v = dirichlet_functional(&g, &w, 2.0, &g_box, &Pipeline::default()).unwrap();
        // W*(0) = −0.5, ∫_{[−1,1]} 2^{−2} = 0.5
        assert!((v.value + 0.25).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_grid_matches_analytic() {
        let p = NormalizationProblem::new(quad(2.0, 1.0), FreeParam::Offset, Target::InvPower(2.0), 1);
        let w = quad(2.0, normalize(&p).unwrap());
        let g: Grid = make_grid(Domain::cube(1, 10.0), &[1025]).unwrap();
        let u = sample(|x| w.value(x), &g).unwrap();
        let conj = dirichlet_conjugate(&w, DomainKind::Full).unwrap();
        let fd = dirichlet_functional_grid(&u, &*conj, 2.0).unwrap();
        let exact = dirichlet_functional(&w, &w, 2.0, &Region::full(1).with_support(10.0), &Pipeline::default()).unwrap();
        assert!(((fd - exact.value) / exact.value).abs() < 1e-4, "{fd} {}", exact.value);
    }

    #[test]
    fn entropy_examples() {
        let uniform = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 0.0, 1.0);
        let e = entropy_functional(&uniform, 1.0, &Region::full(2).with_support(0.5), &Pipeline::default()).unwrap();
        assert!(e.value.abs() < 1e-13);
        for n in 1..=3 {
            let gauss = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.0, n as f64 / 2.0 * (2.0 * PI).ln())
                .with_transform(Transform::Exp(-1.0));
            let e = entropy_functional(&gauss, 1.0, &Region::radial(n, NormSpec::euclidean()), &Pipeline::default()).unwrap();
            let want = -(n as f64) / 2.0 * (2.0 * PI * std::f64::consts::E).ln();
            assert!((e.value - want).abs() < 1e-9, "{n}: {} {want}", e.value);
            // Ent(λf) = λ Ent(f) for a normalized f
            let lam: f64 = 2.5;
            let shifted = gauss.clone().with_offset(gauss.offset - lam.ln());
            let e2 = entropy_functional(&shifted, 1.0, &Region::radial(n, NormSpec::euclidean()), &Pipeline::default()).unwrap();
            assert!((e2.value - lam * e.value).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_examples() {
        let g = make_grid(Domain::half_space(vec![1.0, 0.5, 0.5]), &[5, 9, 9]).unwrap();
        let u = sample(|_| 1.0, &g).unwrap();
        assert!((trace_functional_grid(&u, -2.0).unwrap() - 1.0).abs() < 1e-14);
        // ‖z+e‖^{−α} on the face of ℝ³₊: ∫_{ℝ²}(1+|x|²)^{−α/2} = 2π/(α−2)
        let alpha = 4.0;
        let h = PotentialSpec::convex(NormSpec::euclidean(), 1.0, 1.0, 0.0)
            .with_shift(vec![1.0, 0.0, 0.0])
            .with_transform(Transform::Power(-alpha));
        let want = 2.0 * PI / (alpha - 2.0);
        let radial = trace_functional(&h, 1.0, &Region::shifted_radial(3), &Pipeline::default()).unwrap();
        let nested = trace_functional(&h, 1.0, &Region::half_space(3), &Pipeline::Adaptive { tol: 1e-9 }).unwrap();
        assert!((radial.value - want).abs() < 1e-10);
        assert!((nested.value - want).abs() < 1e-4 * want);
        assert!(trace_functional(&h, 1.0, &Region::full(3), &Pipeline::default()).is_err());
    }

    #[test]
    fn trace_is_boundary_derivative() {
        // d/dh ∫_{x₀≥h} g = −∫_{x₀=h} g
        let alpha = 5.0;
        let h = PotentialSpec::convex(NormSpec::euclidean(), 1.0, 1.0, 0.0)
            .with_shift(vec![1.0, 0.0])
            .with_transform(Transform::Power(-alpha));
        let vol = |s: f64| {
            let f = |x: &[f64]| h.value(&[x[0] + s, x[1]]);
            integrate_over(&f, &Region::half_space(2), &Pipeline::Adaptive { tol: 1e-12 }).unwrap().value
        };
        let d = 1e-4;
        let fd = (vol(d) - vol(-d)) / (2.0 * d);
        let tr = trace_functional(&h, 1.0, &Region::shifted_radial(2), &Pipeline::default()).unwrap();
        assert!((fd + tr.value).abs() < 1e-6 * tr.value, "{fd} {}", tr.value);
    }

    #[test]
    fn refinement_order() {
        let w = quad(2.0, 1.0).with_scale(2.0);
        let f = |x: &[f64]| w.value(x).powf(-3.0);
        let reg = Region::full(2);
        let exact = PI / 2.0;
        let e1 = (on_grid(&f, &reg, 65, 4.0).unwrap().value - exact).abs();
        let e2 = (on_grid(&f, &reg, 129, 4.0).unwrap().value - exact).abs();
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "{order}");
    }
}
