//! Pointwise evaluation of `Q_h^W g` by continuous minimization, the
//! integrals `h ↦ ∫ Q_h^{1−a}` and their derivative at zero.

use super::admissible::{check_admissible, AdmissibleFamily};
use super::{check_h, validate_kernel};
use crate::error::{Error, Result};
use crate::grid::quad::{integrate_nested, QuadResult, Tolerance};
use crate::grid::DomainKind;
use crate::norms::{conjugate_analytic, conjugate_halfspace, Field, PotentialSpec, Shape, Support, Transform};
use crate::optim::brent_min;

/// Initial datum `g`: an analytic power potential (enables closed forms) or
/// any field with exact gradients.
#[derive(Clone, Copy)]
pub enum Datum<'a> {
    Potential(&'a PotentialSpec),
    Field(&'a dyn Field),
}

impl<'a> Datum<'a> {
    pub fn field(&self) -> &'a dyn Field {
        match *self {
            Datum::Potential(p) => p,
            Datum::Field(f) => f,
        }
    }
}

/// Closed-form `Q_h^W g` for `g = α‖·‖^q/q + c_g`, `W = β‖·‖^q/q + c_W` with
/// the same norm and power: `κ‖x‖^q/q + c_g + h c_W`,
/// `κ = (α^{−1/(q−1)} + h β^{−1/(q−1)})^{1−q}`.
pub fn power_inf_convolution(g: &PotentialSpec, w: &PotentialSpec, h: f64) -> Result<PotentialSpec> {
    check_h(h)?;
    validate_kernel(w)?;
    let plain = |p: &PotentialSpec| p.is_convex_potential() && p.is_radial();
    if !plain(g) || !plain(w) || g.norm != w.norm || g.power != w.power {
        return Err(Error::InvalidInput("closed form needs unshifted potentials with one norm and power".into()));
    }
    if !(g.scale > 0.0) {
        return Err(Error::InvalidInput("datum scale must be positive".into()));
    }
    let e = 1.0 / (w.power - 1.0);
    let kappa = (g.scale.powf(-e) + h * w.scale.powf(-e)).powf(1.0 - w.power);
    Ok(PotentialSpec::convex(g.norm.clone(), g.power, kappa, g.offset + h * w.offset))
}

/// Minimizes a convex function over `[lo, hi]` (either end may be infinite)
/// by expanding a bracket around `guess` and refining with Brent.
fn min_on_interval<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, guess: f64, xtol: f64) -> (f64, f64) {
    if lo > hi {
        return (lo, f64::INFINITY);
    }
    if lo == hi {
        return (lo, f(lo));
    }
    let x0 = guess.clamp(lo, hi);
    let f0 = f(x0);
    let mut step = 0.5 * (1.0 + x0.abs());
    let mut a = lo;
    if !lo.is_finite() {
        a = x0 - step;
        while f(a) < f0 && a > -1e300 {
            step *= 2.0;
            a = x0 - step;
        }
    }
    step = 0.5 * (1.0 + x0.abs());
    let mut b = hi;
    if !hi.is_finite() {
        b = x0 + step;
        while f(b) < f0 && b < 1e300 {
            step *= 2.0;
            b = x0 + step;
        }
    }
    let (x, fx) = brent_min(&mut f, a, b, xtol);
    let (fa, fb) = (f(a), f(b));
    let mut best = (x, fx);
    if fa < best.1 {
        best = (a, fa);
    }
    if fb < best.1 {
        best = (b, fb);
    }
    if f0 < best.1 {
        best = (x0, f0);
    }
    best
}

fn separable_potential(p: &PotentialSpec) -> bool {
    p.shape == Shape::Convex
        && p.transform == Transform::Identity
        && p.norm.separable_power(p.power)
        && p.norm.exponent.is_finite()
}

fn half_from(p: &PotentialSpec) -> Option<f64> {
    match p.support {
        Support::HalfSpace { from } => Some(from),
        Support::Full => None,
    }
}

/// Sum of one-dimensional problems when both `g` and `W` split by axis.
fn q_separable(g: &PotentialSpec, w: &PotentialSpec, h: f64, x: &[f64], half: bool) -> f64 {
    let mut total = g.offset + h * w.offset;
    for (i, &xi) in x.iter().enumerate() {
        let wg = g.norm.weights.as_ref().map_or(1.0, |v| v[i]);
        let ww = w.norm.weights.as_ref().map_or(1.0, |v| v[i]);
        let (qg, qw) = (g.power, w.power);
        let alpha = g.scale * wg.powf(qg);
        let beta = w.scale * ww.powf(qw);
        let sg = g.shift.as_ref().map_or(0.0, |v| v[i]);
        let tw = w.shift.as_ref().map_or(0.0, |v| v[i]);
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        if i == 0 {
            if let Some(f) = half_from(g).or(if half { Some(0.0) } else { None }) {
                lo = f;
            }
            if let Some(f) = half_from(w).or(if half { Some(1.0) } else { None }) {
                hi = xi - h * f;
            }
        }
        if lo > hi {
            return f64::INFINITY;
        }
        let phi = |y: f64| {
            alpha * (y + sg).abs().powf(qg) / qg + h * beta * ((xi - y) / h + tw).abs().powf(qw) / qw
        };
        let big_x = xi + sg + h * tw;
        let best = if qg == qw {
            let q = qg;
            let e = 1.0 / (q - 1.0);
            let t = if alpha == 0.0 {
                1.0
            } else {
                let a_ = alpha.powf(-e);
                a_ / (a_ + h * beta.powf(-e))
            };
            let y = (t * big_x - sg).clamp(lo, hi);
            phi(y)
        } else {
            let guess = big_x / (1.0 + h) - sg;
            min_on_interval(phi, lo, hi, guess, 1e-13 * (1.0 + xi.abs())).1
        };
        total += best;
    }
    total
}

/// Continuous minimization over the kernel argument `z = (x − y)/h` for
/// general data, `n ≤ 2`.
fn q_general(g: &dyn Field, w: &PotentialSpec, h: f64, x: &[f64], half: bool) -> Result<f64> {
    let n = x.len();
    let wlo = half_from(w).or(if half { Some(1.0) } else { None }).unwrap_or(f64::NEG_INFINITY);
    let whi = if half { x[0] / h } else { f64::INFINITY };
    let guess: Vec<f64> = x.iter().map(|v| v / (1.0 + h)).collect();
    let xtol = 1e-12;
    match n {
        1 => {
            let phi = |z: f64| g.value(&[x[0] - h * z]) + h * w.value(&[z]);
            Ok(min_on_interval(phi, wlo, whi, guess[0], xtol).1)
        }
        2 => {
            let inner = |z0: f64| {
                let phi = |z1: f64| g.value(&[x[0] - h * z0, x[1] - h * z1]) + h * w.value(&[z0, z1]);
                min_on_interval(phi, f64::NEG_INFINITY, f64::INFINITY, guess[1], xtol).1
            };
            Ok(min_on_interval(inner, wlo, whi, guess[0], xtol).1)
        }
        _ => Err(Error::InvalidInput("pointwise evaluation of general data supports n ≤ 2".into())),
    }
}

/// `Q_h^W g(x)` by continuous minimization; closed forms per axis when both
/// `g` and `W` split by axis. On the half-space, `+∞` for `x₀ < h`.
pub fn q_pointwise(g: Datum<'_>, w: &PotentialSpec, h: f64, x: &[f64], kind: DomainKind) -> Result<f64> {
    check_h(h)?;
    validate_kernel(w)?;
    let half = kind == DomainKind::HalfSpace;
    if h == 0.0 {
        return Ok(g.field().value(x));
    }
    if half && x[0] < h {
        return Ok(f64::INFINITY);
    }
    if let Datum::Potential(p) = g {
        if separable_potential(p) && separable_potential(w) {
            return Ok(q_separable(p, w, h, x, half));
        }
    }
    q_general(g.field(), w, h, x, half)
}

fn region_limits(kind: DomainKind, start: f64) -> impl Fn(usize, &[f64]) -> (f64, f64) + Sync {
    move |k: usize, _o: &[f64]| {
        if k == 0 && kind == DomainKind::HalfSpace {
            (start, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    }
}

/// `∫ Q_h^W(g)^{1−a}` over ℝⁿ, or over `{x₀ ≥ h}` on the half-space.
pub fn hopf_lax_integral(
    g: Datum<'_>,
    w: &PotentialSpec,
    n: usize,
    a: f64,
    h: f64,
    kind: DomainKind,
    tol: Tolerance,
) -> Result<QuadResult> {
    check_h(h)?;
    validate_kernel(w)?;
    let probe = vec![1.0; n];
    q_pointwise(g, w, h, &probe, kind)?;
    let f = |x: &[f64]| {
        let q = q_pointwise(g, w, h, x, kind).unwrap_or(f64::INFINITY);
        q.powf(1.0 - a)
    };
    let lim = region_limits(kind, h);
    let r = integrate_nested(&f, n, &lim, &[0.0, h], tol);
    if !r.value.is_finite() {
        return Err(Error::Divergent("Hopf–Lax integral is not finite".into()));
    }
    Ok(r)
}

/// `d/dh|₀ ∫ Q_h^W(g)^{1−a}`: `(a−1)∫ W*(∇g) g^{−a}` on ℝⁿ; on the
/// half-space `−∫_{x₀=0} g^{1−a} + (a−1)∫ W*(∇g) g^{−a}` with the conjugate
/// taken over `{z₀ ≥ 1}`. Analytic data is checked for admissibility first.
pub fn hj_derivative_at_zero(
    g: Datum<'_>,
    w: &PotentialSpec,
    n: usize,
    a: f64,
    kind: DomainKind,
    tol: Tolerance,
) -> Result<QuadResult> {
    validate_kernel(w)?;
    if let Datum::Potential(p) = g {
        let rep = check_admissible(&AdmissibleFamily::from(p), &AdmissibleFamily::from(w), n, a, kind);
        if !rep.all() {
            return Err(Error::Inadmissible(format!("conditions failing: {}", rep.failed().join(", "))));
        }
    }
    let field = g.field();
    let half = kind == DomainKind::HalfSpace;
    let wh = if half {
        let mut c = w.clone();
        c.support = Support::HalfSpace { from: 1.0 };
        Some(c)
    } else {
        None
    };
    let full_conj = if half { None } else { Some(conjugate_analytic(w)?) };
    let wstar = |y: &[f64]| -> f64 {
        match (&wh, &full_conj) {
            (Some(c), _) => conjugate_halfspace(c, y).unwrap_or(f64::NAN),
            (None, Some(c)) => c.formula().map_or(f64::NAN, |f| f.eval(y)),
            _ => f64::NAN,
        }
    };
    let integrand = |x: &[f64]| {
        let mut grad = vec![0.0; x.len()];
        field.gradient(x, &mut grad);
        let gv = field.value(x);
        wstar(&grad) * gv.powf(-a)
    };
    let lim = region_limits(kind, 0.0);
    let bulk = integrate_nested(&integrand, n, &lim, &[0.0], tol);
    let mut out = QuadResult { value: (a - 1.0) * bulk.value, error: (a - 1.0).abs() * bulk.error };
    if half {
        let boundary = if n == 1 {
            let v = field.value(&[0.0]).powf(1.0 - a);
            QuadResult { value: v, error: 0.0 }
        } else {
            let b = |xp: &[f64]| {
                let mut x = vec![0.0];
                x.extend_from_slice(xp);
                field.value(&x).powf(1.0 - a)
            };
            let l = |_k: usize, _o: &[f64]| (f64::NEG_INFINITY, f64::INFINITY);
            integrate_nested(&b, n - 1, &l, &[0.0], tol)
        };
        out.value -= boundary.value;
        out.error += boundary.error;
    }
    if !out.value.is_finite() {
        return Err(Error::Divergent("derivative integrand is not integrable".into()));
    }
    Ok(out)
}

/// Difference quotients of `h ↦ ∫ Q_h^{1−a}` over an `h` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeSweep {
    pub hs: Vec<f64>,
    pub quotients: Vec<f64>,
    /// Linear extrapolation to `h = 0` from the two smallest `h`.
    pub richardson: f64,
    pub analytic: f64,
    pub analytic_error: f64,
}

pub fn derivative_sweep(
    g: Datum<'_>,
    w: &PotentialSpec,
    n: usize,
    a: f64,
    kind: DomainKind,
    hs: &[f64],
    tol: Tolerance,
) -> Result<DerivativeSweep> {
    if hs.len() < 2 {
        return Err(Error::InvalidInput("need at least two step sizes".into()));
    }
    let analytic = hj_derivative_at_zero(g, w, n, a, kind, tol)?;
    let i0 = hopf_lax_integral(g, w, n, a, 0.0, kind, tol)?.value;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(hs.len());
    for &h in hs {
        let ih = hopf_lax_integral(g, w, n, a, h, kind, tol)?.value;
        pairs.push((h, (ih - i0) / h));
    }
    let mut sorted = pairs.clone();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (h1, d1) = sorted[0];
    let (h2, d2) = sorted[1];
    let richardson = (h2 * d1 - h1 * d2) / (h2 - h1);
    Ok(DerivativeSweep {
        hs: pairs.iter().map(|p| p.0).collect(),
        quotients: pairs.iter().map(|p| p.1).collect(),
        richardson,
        analytic: analytic.value,
        analytic_error: analytic.error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::NormSpec;

    fn quad(c: f64) -> PotentialSpec {
        PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.0, c)
    }

    #[test]
    fn closed_form_semigroup() {
        let w = quad(0.4);
        let q = power_inf_convolution(&w, &w, 0.6).unwrap();
        for x in [-2.0, 0.0, 0.3, 5.0] {
            assert!((q.value(&[x]) - 1.6 * w.value(&[x / 1.6])).abs() < 1e-14);
        }
    }

    #[test]
    fn pointwise_matches_closed_form() {
        let w = PotentialSpec::convex(NormSpec::euclidean(), 3.0, 1.2, 0.3);
        let g = PotentialSpec::convex(NormSpec::euclidean(), 3.0, 0.7, 0.5);
        let h = 0.4;
        let c = power_inf_convolution(&g, &w, h).unwrap();
        let field: &dyn Field = &g;
        for x in [[0.3, -1.2], [2.0, 0.5], [0.0, 0.0]] {
            let v = q_pointwise(Datum::Field(field), &w, h, &x, DomainKind::Full).unwrap();
            assert!((v - c.value(&x)).abs() < 1e-10, "{v} {}", c.value(&x));
        }
    }

    #[test]
    fn separable_halfspace_closed_form() {
        let w = PotentialSpec::convex(NormSpec::lp(3.0), 3.0, 1.0, 0.0);
        let g = w.clone().with_shift(vec![1.0, 0.0]).on_half_space(0.0);
        let h = 0.3;
        for x in [[0.5, 0.2], [2.0, -1.0], [0.3, 0.0]] {
            let v = q_pointwise(Datum::Potential(&g), &w, h, &x, DomainKind::HalfSpace).unwrap();
            let e = (h + 1.0) * w.value(&[(x[0] + 1.0) / (h + 1.0), x[1] / (h + 1.0)]);
            assert!((v - e).abs() < 1e-13);
            let gen = q_pointwise(Datum::Field(&g), &w, h, &x, DomainKind::HalfSpace).unwrap();
            assert!((gen - e).abs() < 1e-9, "{gen} {e}");
        }
        assert_eq!(q_pointwise(Datum::Potential(&g), &w, h, &[0.1, 0.0], DomainKind::HalfSpace).unwrap(), f64::INFINITY);
    }

    #[test]
    fn kernel_derivative_is_minus_conjugate() {
        let w = quad(0.2);
        let g = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.7, 0.9);
        let ws = conjugate_analytic(&w).unwrap();
        let x = [0.8];
        let mut grad = [0.0];
        g.gradient(&x, &mut grad);
        let h = 1e-5;
        let d = (q_pointwise(Datum::Field(&g), &w, h, &x, DomainKind::Full).unwrap() - g.value(&x)) / h;
        assert!((d + ws.formula().unwrap().eval(&grad)).abs() < 1e-4);
    }

    #[test]
    fn full_space_derivative_matches_difference() {
        let w = quad(0.5);
        let tol = Tolerance::new(1e-13, 1e-11);
        let d = hj_derivative_at_zero(Datum::Potential(&w), &w, 1, 2.0, DomainKind::Full, tol).unwrap();
        assert!(d.value.abs() < 1e-10);
        let g = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.7, 0.9);
        let d = hj_derivative_at_zero(Datum::Potential(&g), &w, 1, 2.0, DomainKind::Full, tol).unwrap();
        let h = 1e-3;
        let i0 = hopf_lax_integral(Datum::Potential(&g), &w, 1, 2.0, 0.0, DomainKind::Full, tol).unwrap();
        let ih = hopf_lax_integral(Datum::Potential(&g), &w, 1, 2.0, h, DomainKind::Full, tol).unwrap();
        let fd = (ih.value - i0.value) / h;
        assert!(((fd - d.value) / d.value).abs() < 0.02, "{fd} {}", d.value);
    }

    #[test]
    fn halfspace_boundary_term() {
        let w = PotentialSpec::convex(NormSpec::lp(3.0), 3.0, 1.0, 0.0);
        let g = w.clone().with_scale(1.6).with_offset(0.2).with_shift(vec![1.0, 0.0]).on_half_space(0.0);
        let tol = Tolerance::new(1e-13, 1e-10);
        let sweep = derivative_sweep(Datum::Potential(&g), &w, 2, 3.0, DomainKind::HalfSpace, &[1e-2, 1e-3], tol).unwrap();
        assert!(((sweep.quotients[1] - sweep.analytic) / sweep.analytic).abs() < 0.02, "{sweep:?}");
        assert!(((sweep.richardson - sweep.analytic) / sweep.analytic).abs() < 1e-3);
    }

    #[test]
    fn inadmissible_pair_is_reported() {
        let w = quad(0.5);
        let g = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 0.0, 1.0);
        let err = hj_derivative_at_zero(Datum::Potential(&g), &w, 1, 2.0, DomainKind::Full, Tolerance::default());
        match err {
            Err(Error::Inadmissible(m)) => assert!(m.contains("C4")),
            other => panic!("{other:?}"),
        }
    }
}
