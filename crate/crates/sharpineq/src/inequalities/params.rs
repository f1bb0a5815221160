use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dimension and exponents shared by the inequality families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub n: usize,
    pub a: f64,
    pub p: f64,
    /// Conjugate exponent, `1/p + 1/q = 1`.
    pub q: f64,
    /// Growth exponent of the potentials at infinity.
    pub gamma: f64,
}

impl ParamSet {
    pub fn new(n: usize, a: f64, p: f64) -> Self {
        let q = conjugate(p);
        ParamSet { n, a, p, q, gamma: q }
    }

    /// Same set, parametrized by `q`.
    pub fn from_q(n: usize, a: f64, q: f64) -> Self {
        ParamSet::new(n, a, conjugate(q))
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Sobolev exponent `np/(n−p)`.
    pub fn p_star(&self) -> f64 {
        let n = self.nf();
        n * self.p / (n - self.p)
    }

    /// Trace exponent `p(n−1)/(n−p)`.
    pub fn p_tilde(&self) -> f64 {
        let n = self.nf();
        self.p * (n - 1.0) / (n - self.p)
    }

    /// Upper bound on `p` for the convex regime; `None` when unbounded.
    pub fn p_bound(&self) -> Option<f64> {
        p_bound(self.n, self.a)
    }

    /// `1/p + 1/q − 1`.
    pub fn conjugate_defect(&self) -> f64 {
        1.0 / self.p + 1.0 / self.q - 1.0
    }

    pub fn validate_basic(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Inadmissible("n must be at least 1".into()));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::Inadmissible(format!("p = {} must exceed 1", self.p)));
        }
        if !self.a.is_finite() {
            return Err(Error::Inadmissible("a must be finite".into()));
        }
        Ok(())
    }

    /// Convex-regime admissibility of `(a, p)`.
    pub fn check_convex(&self) -> Result<()> {
        self.validate_basic()?;
        let v = param_region(self.n, self.a, self.p);
        if v.admissible {
            Ok(())
        } else {
            Err(Error::Inadmissible(v.reason))
        }
    }

    pub fn check_concave(&self) -> Result<()> {
        self.validate_basic()?;
        if !(self.a > 0.0) {
            return Err(Error::Inadmissible(format!("a = {} must be positive", self.a)));
        }
        Ok(())
    }
}

/// `p/(p−1)`; the map is an involution on `(1, ∞)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `n/(n+1−a)` for `a < n+1`.
pub fn p_bound(n: usize, a: f64) -> Option<f64> {
    let nf = n as f64;
    (a < nf + 1.0).then(|| nf / (nf + 1.0 - a))
}

/// Outcome of [`param_region`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub admissible: bool,
    /// Supremum of admissible `p` at this `a`; `None` means unbounded.
    pub p_bound: Option<f64>,
    pub reason: String,
}

/// Convex-regime region: `a ≥ n` (`a > 1` when `n = 1`), `p > 1`, and
/// `p < n/(n+1−a)` when `a < n+1`.
pub fn param_region(n: usize, a: f64, p: f64) -> RegionVerdict {
    let nf = n as f64;
    let bound = p_bound(n, a);
    let verdict = |ok: bool, reason: String| RegionVerdict { admissible: ok, p_bound: bound, reason };
    if n == 0 {
        return verdict(false, "n must be at least 1".into());
    }
    if !(p > 1.0) {
        return verdict(false, format!("p = {p} must exceed 1"));
    }
    if !(a >= nf) || (n == 1 && !(a > 1.0)) {
        return verdict(false, format!("a = {a} must be at least n = {n} (and exceed 1)"));
    }
    match bound {
        Some(b) if !(p < b) => verdict(false, format!("p = {p} must be below n/(n+1−a) = {b}")),
        _ => verdict(true, "admissible".into()),
    }
}

/// Points `(a, n/(n+1−a))` of the region boundary for `a ∈ [n, a_max]`,
/// `a_max < n+1`.
pub fn region_boundary(n: usize, a_max: f64, samples: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let hi = a_max.min(nf + 1.0);
    (0..samples)
        .map(|k| {
            let a = if samples == 1 { nf } else { nf + (hi - nf) * k as f64 / (samples - 1) as f64 };
            (a, p_bound(n, a).unwrap_or(f64::INFINITY))
        })
        .filter(|(_, p)| p.is_finite())
        .collect()
}

/// Which interpolation identity fixes `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaKind {
    GnPlus,
    GnMinus,
    GnConcave,
    GnTrace,
}

/// The three coefficients `(L, A, B)` of `L = θA + (1−θ)B`.
pub fn theta_coefficients(kind: ThetaKind, n: usize, p: f64, a: f64) -> (f64, f64, f64) {
    let nf = n as f64;
    match kind {
        ThetaKind::GnPlus => ((a - p) / a, (nf - p) / nf, (a - p) / (a - 1.0)),
        ThetaKind::GnMinus => ((p - a) / (a - 1.0), (p - nf) / nf, (p - a) / a),
        ThetaKind::GnConcave => ((a + p) / (a + 1.0), (nf - p) / nf, (a + p) / a),
        ThetaKind::GnTrace => ((nf - 1.0) / nf * (a - p) / (a - 1.0), (nf - p) / nf, (a - p) / (a - 1.0)),
    }
}

/// `|L − θA − (1−θ)B|`.
pub fn theta_residual(kind: ThetaKind, n: usize, p: f64, a: f64, theta: f64) -> f64 {
    let (l, x, y) = theta_coefficients(kind, n, p, a);
    (l - theta * x - (1.0 - theta) * y).abs()
}

/// Unique solution of the affine interpolation identity; `θ ∉ [0, 1]` means
/// the parameters are outside the family.
pub fn theta_solve(kind: ThetaKind, n: usize, p: f64, a: f64) -> Result<f64> {
    if n == 0 || !(p > 1.0) || !a.is_finite() {
        return Err(Error::Inadmissible(format!("bad parameters n = {n}, p = {p}, a = {a}")));
    }
    let nf = n as f64;
    if a == nf && matches!(kind, ThetaKind::GnPlus | ThetaKind::GnTrace) {
        return Ok(1.0);
    }
    let (l, x, y) = theta_coefficients(kind, n, p, a);
    let d = x - y;
    if d == 0.0 || !d.is_finite() {
        return Err(Error::Inadmissible("degenerate θ equation".into()));
    }
    let theta = (l - y) / d;
    if !(-1e-14..=1.0 + 1e-14).contains(&theta) {
        return Err(Error::Inadmissible(format!("θ = {theta} lies outside [0, 1]")));
    }
    Ok(theta.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_examples() {
        assert!((theta_solve(ThetaKind::GnPlus, 2, 2.0, 4.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(theta_solve(ThetaKind::GnPlus, 3, 2.0, 3.0).unwrap(), 1.0);
        assert_eq!(theta_solve(ThetaKind::GnTrace, 3, 2.0, 3.0).unwrap(), 1.0);
        let t = theta_solve(ThetaKind::GnMinus, 1, 3.0, 2.0).unwrap();
        assert!(theta_residual(ThetaKind::GnMinus, 1, 3.0, 2.0, t) < 1e-15);
        assert!(theta_solve(ThetaKind::GnPlus, 2, 3.0, 2.5).is_err());
    }

    #[test]
    fn region_examples() {
        assert!(param_region(4, 4.5, 3.0).admissible);
        assert_eq!(param_region(4, 4.5, 3.0).p_bound, Some(8.0));
        assert!(!param_region(4, 4.5, 8.0).admissible);
        assert!(param_region(3, 3.0, 2.9).admissible);
        assert!(!param_region(3, 3.0, 3.0).admissible);
        assert!(param_region(2, 3.0, 50.0).admissible);
        assert_eq!(param_region(2, 3.0, 50.0).p_bound, None);
        assert!(!param_region(2, 1.5, 1.2).admissible);
        assert!(!param_region(1, 1.0, 1.2).admissible);
        assert!(param_region(1, 1.5, 1.9).admissible);
    }

    #[test]
    fn boundary_matches_closed_form() {
        let pts = region_boundary(4, 4.99, 50);
        assert_eq!(pts.len(), 50);
        for (a, p) in pts {
            assert_eq!(p, 4.0 / (5.0 - a));
        }
    }

    #[test]
    fn conjugate_exponents() {
        let s = ParamSet::new(3, 3.0, 1.5);
        assert_eq!(s.q, 3.0);
        assert!(s.conjugate_defect().abs() < 1e-15);
        assert_eq!(ParamSet::from_q(3, 3.0, 3.0).p, 1.5);
        assert_eq!(ParamSet::new(3, 3.0, 2.0).p_star(), 6.0);
        assert_eq!(ParamSet::new(3, 3.0, 2.0).p_tilde(), 4.0);
    }
}
