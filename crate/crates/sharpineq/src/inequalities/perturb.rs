use crate::error::{Error, Result};
use crate::grid::DomainKind;
use crate::norms::{Field, PotentialSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// `c·exp(−|x−m|²/(2w²))·cos(k·(x−m))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
    pub freq: Vec<f64>,
    pub coef: f64,
}

/// Smooth bounded perturbation `σ = Σ bumps` with `Σ|c| ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub bumps: Vec<Bump>,
}

impl Perturbation {
    pub fn zero() -> Self {
        Perturbation { bumps: Vec::new() }
    }

    /// Two to four bumps with centers within radius 2 (first coordinate in
    /// `[0.2, 2]` on the half-space), widths in `[0.4, 1]` and frequencies
    /// below 2.
    pub fn random(n: usize, seed: u64, kind: DomainKind) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.gen_range(2..=4);
        let mut coefs: Vec<f64> = (0..count).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let total: f64 = coefs.iter().map(|c| c.abs()).sum();
        let budget = rng.gen_range(0.5..1.0);
        coefs.iter_mut().for_each(|c| *c *= budget / total);
        let bumps = coefs
            .into_iter()
            .map(|coef| {
                let center: Vec<f64> = (0..n)
                    .map(|k| {
                        if k == 0 && kind == DomainKind::HalfSpace {
                            rng.gen_range(0.2..2.0)
                        } else {
                            rng.gen_range(-1.5..1.5)
                        }
                    })
                    .collect();
                let width = rng.gen_range(0.4..1.0);
                let freq: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                Bump { center, width, freq, coef }
            })
            .collect();
        Perturbation { bumps }
    }

    /// Supremum bound `Σ|c|`.
    pub fn bound(&self) -> f64 {
        self.bumps.iter().map(|b| b.coef.abs()).sum()
    }

    /// Radius beyond which `|σ| ≤ 1e−15`.
    pub fn reach(&self) -> f64 {
        self.bumps
            .iter()
            .map(|b| {
                let c: f64 = b.center.iter().map(|v| v * v).sum::<f64>().sqrt();
                c + b.width * (2.0 * 35.0f64).sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let mut v = 0.0;
        let mut gbuf = grad;
        if let Some(g) = gbuf.as_deref_mut() {
            g.iter_mut().for_each(|o| *o = 0.0);
        }
        for b in &self.bumps {
            let mut r2 = 0.0;
            let mut phase = 0.0;
            for k in 0..x.len() {
                let d = x[k] - b.center[k];
                r2 += d * d;
                phase += b.freq[k] * d;
            }
            let w2 = b.width * b.width;
            let e = (-r2 / (2.0 * w2)).exp();
            let (s, c) = phase.sin_cos();
            v += b.coef * e * c;
            if let Some(g) = gbuf.as_deref_mut() {
                for k in 0..x.len() {
                    let d = x[k] - b.center[k];
                    g[k] += b.coef * e * (-d / w2 * c - b.freq[k] * s);
                }
            }
        }
        v
    }
}

/// `g = λ·base·(1 + εσ) + μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedField {
    pub base: PotentialSpec,
    pub eps: f64,
    pub sigma: Perturbation,
    pub scale: f64,
    pub shift: f64,
    pub seed: Option<u64>,
}

impl PerturbedField {
    /// The base itself.
    pub fn exact(base: PotentialSpec) -> Self {
        PerturbedField { base, eps: 0.0, sigma: Perturbation::zero(), scale: 1.0, shift: 0.0, seed: None }
    }

    pub fn with_scale(mut self, s: f64) -> Self {
        self.scale = s;
        self
    }

    pub fn with_added(mut self, m: f64) -> Self {
        self.shift = m;
        self
    }

    pub fn is_exact(&self) -> bool {
        self.eps == 0.0 || self.sigma.bumps.is_empty()
    }

    /// Certified `g ≥ (1 − ε Σ|c|)·λ·base + μ` factor.
    pub fn lower_factor(&self) -> f64 {
        1.0 - self.eps * self.sigma.bound()
    }

    /// Closed-form field that agrees with `g` outside [`Self::reach`]; only for
    /// convex potentials without an outer transform.
    pub fn far_field(&self) -> Option<PotentialSpec> {
        if !self.base.is_convex_potential() {
            return None;
        }
        let mut f = self.base.clone();
        f.scale *= self.scale;
        f.offset = f.offset * self.scale + self.shift;
        Some(f)
    }

    /// Radius beyond which the perturbation is negligible.
    pub fn reach(&self) -> f64 {
        if self.is_exact() {
            0.0
        } else {
            self.sigma.reach()
        }
    }

    /// The same field with a different base (used when the base is
    /// renormalized).
    pub fn rebased(&self, base: PotentialSpec) -> Self {
        PerturbedField { base, ..self.clone() }
    }
}

impl Field for PerturbedField {
    fn value(&self, x: &[f64]) -> f64 {
        let b = self.base.value(x);
        if self.is_exact() {
            return self.scale * b + self.shift;
        }
        if !b.is_finite() {
            return b;
        }
        self.scale * b * (1.0 + self.eps * self.sigma.eval(x, None)) + self.shift
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.base.gradient(x, out);
        if self.is_exact() {
            out.iter_mut().for_each(|o| *o *= self.scale);
            return;
        }
        let b = self.base.value(x);
        let mut gs = vec![0.0; x.len()];
        let s = self.sigma.eval(x, Some(&mut gs));
        let m = 1.0 + self.eps * s;
        for k in 0..x.len() {
            out[k] = self.scale * (out[k] * m + if b.is_finite() { b * self.eps * gs[k] } else { 0.0 });
        }
    }
}

/// `base·(1 + εσ)` on ℝⁿ with `σ` drawn from `seed`; positivity requires
/// `0 ≤ ε < 1` since `|σ| < 1`.
pub fn perturb_extremal(base: &PotentialSpec, n: usize, seed: u64, eps: f64) -> Result<PerturbedField> {
    perturb_on(base, n, seed, eps, DomainKind::Full)
}

pub fn perturb_on(base: &PotentialSpec, n: usize, seed: u64, eps: f64, kind: DomainKind) -> Result<PerturbedField> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Inadmissible(format!(
            "perturbation amplitude ε = {eps} must lie in [0, 1) to keep the function positive"
        )));
    }
    let sigma = if eps == 0.0 { Perturbation::zero() } else { Perturbation::random(n, seed, kind) };
    let f = PerturbedField { base: base.clone(), eps, sigma, scale: 1.0, shift: 0.0, seed: Some(seed) };
    if f.lower_factor() <= 0.0 {
        return Err(Error::Inadmissible("perturbation destroys positivity".into()));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::NormSpec;

    #[test]
    fn zero_amplitude_is_base() {
        let b = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.0, 0.5);
        let f = perturb_extremal(&b, 2, 3, 0.0).unwrap();
        let x = [0.3, -1.2];
        assert_eq!(f.value(&x), b.value(&x));
    }

    #[test]
    fn gradient_matches_differences() {
        let b = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.0, 0.5);
        let f = perturb_extremal(&b, 2, 11, 0.3).unwrap().with_scale(1.7).with_added(0.2);
        let x = [0.4, -0.7];
        let mut g = [0.0; 2];
        f.gradient(&x, &mut g);
        for k in 0..2 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-7, "{fd} {}", g[k]);
        }
    }

    #[test]
    fn amplitude_rejected() {
        let b = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.0, 0.5);
        assert!(perturb_extremal(&b, 1, 1, 1.0).is_err());
        assert!(perturb_extremal(&b, 1, 1, -0.1).is_err());
    }

    #[test]
    fn reproducible_and_bounded() {
        let a = Perturbation::random(3, 42, DomainKind::HalfSpace);
        assert_eq!(a, Perturbation::random(3, 42, DomainKind::HalfSpace));
        assert!(a.bound() <= 1.0);
        assert!(a.bumps.iter().all(|b| b.center[0] >= 0.2));
        let far = [a.reach() + 0.1, 0.0, 0.0];
        assert!(a.eval(&far, None).abs() < 1e-15);
    }
}
