//! Growth conditions (C1)–(C4) for admissible couples and empirical
//! envelope fits for `Q_h g − g`.

use super::pointwise::{q_pointwise, Datum};
use crate::error::Result;
use crate::grid::DomainKind;
use crate::norms::{Field, PotentialSpec, Shape, Transform};
use serde::Serialize;

/// Power potential plus an optional `ε|x + shift|^γ` term.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleFamily {
    pub base: PotentialSpec,
    pub extra: Option<(f64, f64)>,
}

impl From<&PotentialSpec> for AdmissibleFamily {
    fn from(p: &PotentialSpec) -> Self {
        AdmissibleFamily { base: p.clone(), extra: None }
    }
}

impl AdmissibleFamily {
    pub fn with_extra(base: PotentialSpec, eps: f64, gamma: f64) -> Self {
        AdmissibleFamily { base, extra: Some((eps, gamma)) }
    }

    fn shifted_norm(&self, x: &[f64]) -> f64 {
        let s = self.base.shift.as_ref();
        x.iter()
            .enumerate()
            .map(|(i, v)| (v + s.map_or(0.0, |s| s[i])).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn convex_family(&self) -> bool {
        self.base.shape == Shape::Convex && self.base.transform == Transform::Identity
    }

    fn exponents(&self) -> Vec<f64> {
        let mut e = Vec::new();
        if self.base.scale > 0.0 {
            e.push(self.base.power);
        }
        if let Some((eps, g)) = self.extra {
            if eps > 0.0 {
                e.push(g);
            }
        }
        e
    }

    /// Growth exponent at infinity.
    fn growth_max(&self) -> f64 {
        self.exponents().into_iter().fold(0.0, f64::max)
    }

    /// Exponent governing the behaviour at the origin (`0` with a positive
    /// constant term).
    fn growth_min(&self) -> f64 {
        if self.base.offset > 0.0 {
            return 0.0;
        }
        self.exponents().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Infimum over ℝⁿ or ℝⁿ₊.
    fn infimum(&self, half: bool) -> f64 {
        let s0 = self.base.shift.as_ref().map_or(0.0, |s| s[0]);
        let r = if half { s0.max(0.0) } else { 0.0 };
        let w0 = self.base.norm.weights.as_ref().map_or(1.0, |w| w[0]);
        let mut v = self.base.offset + self.base.scale * (w0 * r).powf(self.base.power) / self.base.power;
        if let Some((eps, g)) = self.extra {
            v += eps * r.powf(g);
        }
        v
    }
}

impl Field for AdmissibleFamily {
    fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.base.value(x);
        if let Some((eps, g)) = self.extra {
            v += eps * self.shifted_norm(x).powf(g);
        }
        v
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.base.gradient(x, out);
        if let Some((eps, g)) = self.extra {
            let r = self.shifted_norm(x);
            if r > 0.0 {
                let s = self.base.shift.as_ref();
                let c = eps * g * r.powf(g - 2.0);
                for (i, o) in out.iter_mut().enumerate() {
                    *o += c * (x[i] + s.map_or(0.0, |s| s[i]));
                }
            }
        }
    }
}

/// Flags (C1)–(C4) with witness constants `W ≥ A|x|^γ`,
/// `|∇g| ≤ B(|x|^{γ−1} + 1)`, `g ≥ C(|x|^γ + 1)` fitted on a sample cloud.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
    /// `a ≥ n` (and `a > 1`; `n ≥ 2` on the half-space).
    pub range_ok: bool,
    pub gamma: f64,
    pub a_const: f64,
    pub b_const: f64,
    pub c_const: f64,
}

impl AdmissibilityReport {
    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3 && self.c4 && self.range_ok
    }

    pub fn failed(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.range_ok {
            v.push("range");
        }
        for (ok, name) in [(self.c1, "C1"), (self.c2, "C2"), (self.c3, "C3"), (self.c4, "C4")] {
            if !ok {
                v.push(name);
            }
        }
        v
    }
}

fn directions(n: usize, half: bool) -> Vec<Vec<f64>> {
    let mut d: Vec<Vec<f64>> = match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..32)
            .map(|k| {
                let t = std::f64::consts::TAU * (k as f64 + 0.5) / 32.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let m = 64;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    let mut v = vec![0.0; n];
                    v[0] = z;
                    v[1] = r * t.cos();
                    v[2] = r * t.sin();
                    v
                })
                .collect()
        }
    };
    if half {
        d.retain(|v| v[0] >= 0.0);
        if d.is_empty() {
            d.push({
                let mut v = vec![0.0; n];
                v[0] = 1.0;
                v
            });
        }
    }
    d
}

/// Deterministic sample cloud: rays times log-spaced radii in `[r_min, r_max]`,
/// restricted to `x₀ ≥ 0` on the half-space.
pub fn envelope_points(n: usize, kind: DomainKind, r_min: f64, r_max: f64, per_decade: usize) -> Vec<Vec<f64>> {
    let half = kind == DomainKind::HalfSpace;
    let dirs = directions(n, half);
    let steps = ((r_max / r_min).log10() * per_decade as f64).ceil() as usize;
    let mut pts = vec![vec![0.0; n]];
    for k in 0..=steps {
        let r = r_min * (r_max / r_min).powf(k as f64 / steps.max(1) as f64);
        for d in &dirs {
            pts.push(d.iter().map(|v| v * r).collect());
        }
    }
    pts
}

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Checks (C1)–(C4) for `(g, W)` in dimension `n` with exponent `a`. `γ` is
/// the growth exponent of `g` when it exceeds `max{n/(a−1), 1}`, else that of
/// `W`, else just above the threshold.
pub fn check_admissible(
    g: &AdmissibleFamily,
    w: &AdmissibleFamily,
    n: usize,
    a: f64,
    kind: DomainKind,
) -> AdmissibilityReport {
    let half = kind == DomainKind::HalfSpace;
    let range_ok = a >= n as f64 && a > 1.0 && (!half || n >= 2);
    let threshold = if a > 1.0 { (n as f64 / (a - 1.0)).max(1.0) } else { f64::INFINITY };
    let (mg, mw) = (g.growth_max(), w.growth_max());
    let gamma = if mg > threshold {
        mg
    } else if mw > threshold {
        mw
    } else if threshold.is_finite() {
        threshold * (1.0 + 1e-6)
    } else {
        f64::INFINITY
    };
    let c1 = gamma > threshold;
    let pts = envelope_points(n, kind, 1e-3, 1e3, 8);
    let mut e = vec![0.0; n];
    if half {
        e[0] = 1.0;
    }
    let mut a_const = f64::INFINITY;
    for p in &pts {
        let x: Vec<f64> = p.iter().zip(&e).map(|(u, v)| u + v).collect();
        let r = euclid(&x);
        if r > 0.0 {
            a_const = a_const.min(w.value(&x) / r.powf(gamma));
        }
    }
    let mut b_const: f64 = 0.0;
    let mut c_const = f64::INFINITY;
    let mut grad = vec![0.0; n];
    for x in &pts {
        let r = euclid(x);
        g.gradient(x, &mut grad);
        b_const = b_const.max(euclid(&grad) / (r.powf(gamma - 1.0) + 1.0));
        c_const = c_const.min(g.value(x) / (r.powf(gamma) + 1.0));
    }
    let c2 = w.convex_family()
        && mw >= gamma
        && (half || w.growth_min() <= gamma)
        && a_const > 0.0
        && a_const.is_finite();
    let c3 = g.convex_family() && mg <= gamma && b_const.is_finite();
    let c4 = g.convex_family() && mg >= gamma && g.infimum(half) > 0.0 && c_const > 0.0;
    AdmissibilityReport { c1, c2, c3, c4, range_ok, gamma, a_const, b_const, c_const }
}

/// `|α^{1−a} − β^{1−a}|` and its bound `(a−1)|α−β|(α^{−a} + β^{−a})`.
pub fn elementary_power_bound(alpha: f64, beta: f64, a: f64) -> (f64, f64) {
    let lhs = (alpha.powf(1.0 - a) - beta.powf(1.0 - a)).abs();
    let rhs = (a - 1.0) * (alpha - beta).abs() * (alpha.powf(-a) + beta.powf(-a));
    (lhs, rhs)
}

/// Fitted envelope constants for `Q_h g − g` over a sample cloud and an
/// `h` range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub gamma: f64,
    /// `g − Q_h g ≤ Ĉ₁ h (1 + |x|^γ)`.
    pub c1_hat: f64,
    /// `Q_h g − g ≤ Ĉ₂ h (|x|^{γ−1} + 1)`.
    pub c2_hat: f64,
    /// `|Q_h g^{1−a} − g^{1−a}|/h ≤ Ĉ₀ / (1 + |x|^{γ(a−1)})`.
    pub c0_hat: f64,
    /// Log–log slope of `max_x |Q_h g − g|/(1+|x|^γ)` against `h`.
    pub h_slope: f64,
    /// Log–log slope of `max |Q_h g − g|/h` against `|x|` between the two
    /// outermost radii.
    pub x_slope: f64,
    /// Largest `h` whose fitted constants stay within twice the smallest-`h` fit.
    pub h1_fitted: f64,
    pub holds: bool,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let (sx, sy) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - sx) * (y - sy)).sum();
    let var: f64 = xs.iter().map(|x| (x - sx) * (x - sx)).sum();
    cov / var
}

/// Fits the envelope constants for `(g, W)` over `hs` on the sample cloud
/// `|x| ∈ [0.1, 10]` and checks the predicted scalings.
pub fn envelope_check(
    g: &AdmissibleFamily,
    w: &PotentialSpec,
    n: usize,
    a: f64,
    kind: DomainKind,
    hs: &[f64],
) -> Result<EnvelopeReport> {
    let rep = check_admissible(g, &AdmissibleFamily::from(w), n, a, kind);
    let gamma = rep.gamma;
    let datum = if g.extra.is_none() { Datum::Potential(&g.base) } else { Datum::Field(g) };
    let pts = envelope_points(n, kind, 0.1, 10.0, 6);
    let mut hs_sorted = hs.to_vec();
    hs_sorted.sort_by(|x, y| x.total_cmp(y));
    let mut c1s = Vec::new();
    let mut c2s = Vec::new();
    let mut c0 = 0.0f64;
    let mut mags = Vec::new();
    let mut radial: Vec<(f64, f64)> = Vec::new();
    for (k, &h) in hs_sorted.iter().enumerate() {
        let (mut c1, mut c2, mut mag) = (0.0f64, 0.0f64, 0.0f64);
        for p in &pts {
            let mut x = p.clone();
            if kind == DomainKind::HalfSpace {
                x[0] += h;
            }
            let r = euclid(&x);
            let q = q_pointwise(datum, w, h, &x, kind)?;
            let gv = g.value(&x);
            let d = q - gv;
            c1 = c1.max(-d / (h * (1.0 + r.powf(gamma))));
            c2 = c2.max(d / (h * (r.powf(gamma - 1.0) + 1.0)));
            mag = mag.max(d.abs() / (1.0 + r.powf(gamma)));
            c0 = c0.max((q.powf(1.0 - a) - gv.powf(1.0 - a)).abs() / h * (1.0 + r.powf(gamma * (a - 1.0))));
            if k == 0 && r >= 1.0 {
                radial.push((r, d.abs() / h));
            }
        }
        c1s.push(c1);
        c2s.push(c2);
        mags.push(mag);
    }
    let h_slope = slope(
        &hs_sorted.iter().map(|h| h.ln()).collect::<Vec<_>>(),
        &mags.iter().map(|m| m.max(1e-300).ln()).collect::<Vec<_>>(),
    );
    let mut by_r: Vec<(f64, f64)> = Vec::new();
    for (r, v) in radial {
        match by_r.iter_mut().find(|(rr, _)| (rr.ln() - r.ln()).abs() < 1e-9) {
            Some(e) => e.1 = e.1.max(v),
            None => by_r.push((r, v)),
        }
    }
    by_r.sort_by(|x, y| x.0.total_cmp(&y.0));
    let x_slope = match by_r.len() {
        0 | 1 => 0.0,
        m => {
            let (r1, v1) = by_r[m - 2];
            let (r2, v2) = by_r[m - 1];
            (v2.max(1e-300) / v1.max(1e-300)).ln() / (r2 / r1).ln()
        }
    };
    let mut h1 = hs_sorted[0];
    for (k, &h) in hs_sorted.iter().enumerate() {
        if c1s[k] <= 2.0 * c1s[0] + 1e-12 && c2s[k] <= 2.0 * c2s[0] + 1e-12 {
            h1 = h;
        } else {
            break;
        }
    }
    let c1_hat = c1s.iter().cloned().fold(0.0, f64::max);
    let c2_hat = c2s.iter().cloned().fold(0.0, f64::max);
    let holds = c1_hat.is_finite()
        && c2_hat.is_finite()
        && c0.is_finite()
        && (h_slope - 1.0).abs() <= 0.1
        && x_slope <= gamma + 0.1;
    Ok(EnvelopeReport { gamma, c1_hat, c2_hat, c0_hat: c0, h_slope, x_slope, h1_fitted: h1, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::NormSpec;

    #[test]
    fn power_kernel_passes_with_gamma_q() {
        let w = PotentialSpec::convex(NormSpec::euclidean(), 3.0, 1.0, 0.0);
        let g = w.clone().with_shift(vec![1.0, 0.0]);
        let r = check_admissible(&(&g).into(), &(&w).into(), 2, 3.0, DomainKind::HalfSpace);
        assert!(r.all(), "{r:?}");
        assert_eq!(r.gamma, 3.0);
        assert!(r.a_const > 0.0 && r.c_const > 0.0);
    }

    #[test]
    fn low_power_fails_c2() {
        let w = PotentialSpec::convex(NormSpec::euclidean(), 1.25, 1.0, 0.0);
        let g = w.clone().with_shift(vec![1.0, 0.0]);
        let r = check_admissible(&(&g).into(), &(&w).into(), 2, 2.5, DomainKind::HalfSpace);
        assert!(r.c1);
        assert!(!r.c2);
    }

    #[test]
    fn perturbed_kernel_restores_all_four() {
        let (n, a, q) = (2, 2.5, 1.5);
        let gamma = 1.5 * (n as f64 / (a - 1.0));
        let w = AdmissibleFamily::with_extra(PotentialSpec::convex(NormSpec::euclidean(), q, 1.0, 0.0), 0.01, gamma);
        let g = AdmissibleFamily::with_extra(
            PotentialSpec::convex(NormSpec::euclidean(), q, 1.0, 0.0).with_shift(vec![1.0, 0.0]),
            0.01,
            gamma,
        );
        let r = check_admissible(&g, &w, n, a, DomainKind::HalfSpace);
        assert!(r.all(), "{r:?}");
    }

    #[test]
    fn constant_datum_fails_c4() {
        let w = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.0, 0.5);
        let g = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 0.0, 1.0);
        let r = check_admissible(&(&g).into(), &(&w).into(), 1, 2.0, DomainKind::Full);
        assert!(!r.c4);
        assert!(r.c3);
    }

    #[test]
    fn quadratic_envelope() {
        let w = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.0, 0.5);
        let g = AdmissibleFamily::from(&w);
        let rep = envelope_check(&g, &w, 1, 2.0, DomainKind::Full, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert!((rep.x_slope - 2.0).abs() < 0.1);
    }

    #[test]
    fn elementary_bound_examples() {
        for (x, y) in [(0.5, 2.0), (1.0, 1.0), (3.0, 0.1)] {
            let (l, r) = elementary_power_bound(x, y, 2.5);
            assert!(l <= r);
        }
    }
}
