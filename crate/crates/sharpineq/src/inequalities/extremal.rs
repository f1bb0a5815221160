use super::params::ParamSet;
use crate::error::{Error, Result};
use crate::norms::{NormSpec, PotentialSpec, Transform};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Families with a known extremal function and a sharp constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExtremalKind {
    Sobolev,
    GnPlus,
    GnMinus,
    GnConcave,
    SobolevTrace,
    GnTrace,
    LpLogSob,
}

impl ExtremalKind {
    pub const ALL: [ExtremalKind; 7] = [
        ExtremalKind::Sobolev,
        ExtremalKind::GnPlus,
        ExtremalKind::GnMinus,
        ExtremalKind::GnConcave,
        ExtremalKind::SobolevTrace,
        ExtremalKind::GnTrace,
        ExtremalKind::LpLogSob,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExtremalKind::Sobolev => "sobolev",
            ExtremalKind::GnPlus => "gn+",
            ExtremalKind::GnMinus => "gn-",
            ExtremalKind::GnConcave => "gn-concave",
            ExtremalKind::SobolevTrace => "sobolev-trace",
            ExtremalKind::GnTrace => "gn-trace",
            ExtremalKind::LpLogSob => "lp-logsob",
        }
    }

    /// Lives on the half-space.
    pub fn is_trace(&self) -> bool {
        matches!(self, ExtremalKind::SobolevTrace | ExtremalKind::GnTrace)
    }

    /// Parameter constraints of the family.
    pub fn check(&self, s: &ParamSet) -> Result<()> {
        s.validate_basic()?;
        let (n, a, p) = (s.nf(), s.a, s.p);
        let fail = |m: String| Err(Error::Inadmissible(m));
        match self {
            ExtremalKind::Sobolev => {
                if !(p < n) {
                    return fail(format!("Sobolev needs p ∈ (1, n), got p = {p}, n = {n}"));
                }
            }
            ExtremalKind::GnPlus => {
                if !(a > n) {
                    return fail(format!("gn+ needs a > n, got a = {a}, n = {n}"));
                }
                if !(p < a) {
                    return fail(format!("gn+ needs p < a, got p = {p}, a = {a}"));
                }
            }
            ExtremalKind::GnMinus => {
                if !(a > n) {
                    return fail(format!("gn- needs a > n, got a = {a}, n = {n}"));
                }
                if !(p > a) {
                    return fail(format!("gn- needs p > a, got p = {p}, a = {a}"));
                }
                s.check_convex()?;
            }
            ExtremalKind::GnConcave => s.check_concave()?,
            ExtremalKind::SobolevTrace => {
                if s.n < 2 || !(p < n) {
                    return fail(format!("trace Sobolev needs n ≥ 2 and p ∈ (1, n), got n = {n}, p = {p}"));
                }
            }
            ExtremalKind::GnTrace => {
                if s.n < 2 || !(p < n) || !(a >= n) {
                    return fail(format!("trace GN needs a ≥ n > p > 1, got a = {a}, n = {n}, p = {p}"));
                }
            }
            ExtremalKind::LpLogSob => {}
        }
        Ok(())
    }
}

impl fmt::Display for ExtremalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExtremalKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        let alias = match key.as_str() {
            "gn-plus" => "gn+",
            "gn-minus" => "gn-",
            other => other,
        };
        ExtremalKind::ALL
            .iter()
            .find(|k| k.name() == alias)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown constant kind '{s}'")))
    }
}

/// The first coordinate vector.
pub fn unit_e(n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    e
}

/// Extremal function of the family for the Euclidean norm.
pub fn extremal(kind: ExtremalKind, s: &ParamSet) -> Result<PotentialSpec> {
    extremal_with_norm(kind, s, &NormSpec::euclidean())
}

pub fn extremal_with_norm(kind: ExtremalKind, s: &ParamSet, norm: &NormSpec) -> Result<PotentialSpec> {
    kind.check(s)?;
    norm.validate()?;
    let (n, a, p, q) = (s.nf(), s.a, s.p, s.q);
    let one_plus = |e: f64| PotentialSpec::convex(norm.clone(), q, q, 1.0).with_transform(Transform::Power(e));
    let shifted = |e: f64| {
        PotentialSpec::convex(norm.clone(), 1.0, 1.0, 0.0)
            .with_shift(unit_e(s.n))
            .with_transform(Transform::Power(e))
    };
    Ok(match kind {
        ExtremalKind::Sobolev => one_plus((p - n) / p),
        ExtremalKind::GnPlus | ExtremalKind::GnMinus => one_plus((p - a) / p),
        ExtremalKind::GnConcave => {
            PotentialSpec::concave_cap(norm.clone(), q, q).with_transform(Transform::Power((a + p) / p))
        }
        ExtremalKind::SobolevTrace => shifted(-(n - p) / (p - 1.0)),
        ExtremalKind::GnTrace => shifted(-(a - p) / (p - 1.0)),
        ExtremalKind::LpLogSob => {
            PotentialSpec::convex(norm.clone(), q, 1.0 / p, 0.0).with_transform(Transform::Exp(-1.0))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::Field;

    #[test]
    fn sobolev_extremal_n3_p2() {
        let f = extremal(ExtremalKind::Sobolev, &ParamSet::new(3, 3.0, 2.0)).unwrap();
        for x in [[0.0, 0.0, 0.0], [1.0, 2.0, -0.5], [3.0, 0.0, 4.0]] {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            assert!((f.value(&x) - (1.0 + r2).powf(-0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn trace_and_concave_extremals() {
        let s = ParamSet::new(3, 4.0, 2.0);
        let t = extremal(ExtremalKind::SobolevTrace, &s).unwrap();
        let z = [0.5, 1.0, -2.0];
        let r = ((1.5f64).powi(2) + 1.0 + 4.0).sqrt();
        assert!((t.value(&z) - r.powf(-1.0)).abs() < 1e-15);
        let g = extremal(ExtremalKind::GnTrace, &s).unwrap();
        assert!((g.value(&z) - r.powf(-2.0)).abs() < 1e-15);
        let c = extremal(ExtremalKind::GnConcave, &ParamSet::new(2, 2.0, 2.0)).unwrap();
        let x = [0.3, 0.4];
        assert!((c.value(&x) - (1.0f64 - 0.25).powf(2.0)).abs() < 1e-15);
        assert_eq!(c.value(&[1.0, 1.0]), 0.0);
    }

    #[test]
    fn rejections() {
        assert!(extremal(ExtremalKind::Sobolev, &ParamSet::new(3, 3.0, 4.0)).is_err());
        assert!(extremal(ExtremalKind::GnPlus, &ParamSet::new(2, 2.0, 2.0)).is_err());
        assert!(extremal(ExtremalKind::GnMinus, &ParamSet::new(1, 2.0, 1.5)).is_err());
        assert!(extremal(ExtremalKind::GnTrace, &ParamSet::new(1, 2.0, 1.5)).is_err());
        assert_eq!("GN+".parse::<ExtremalKind>().unwrap(), ExtremalKind::GnPlus);
        assert!("gn*".parse::<ExtremalKind>().is_err());
    }
}
