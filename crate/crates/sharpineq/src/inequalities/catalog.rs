use super::params::ParamSet;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The inequalities that can be verified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InequalityId {
    #[serde(rename = "IC2")]
    Ic2,
    #[serde(rename = "CASE1")]
    Case1,
    #[serde(rename = "CASE2")]
    Case2,
    #[serde(rename = "BBL2-DYN")]
    Bbl2Dyn,
    #[serde(rename = "BBLPHI-DYN")]
    BblPhiDyn,
    #[serde(rename = "BBL-CONCAVE-DYN")]
    BblConcaveDyn,
    #[serde(rename = "GN1")]
    Gn1,
    #[serde(rename = "SOBOLEV")]
    Sobolev,
    #[serde(rename = "GN-PLUS")]
    GnPlus,
    #[serde(rename = "GN-MINUS")]
    GnMinus,
    #[serde(rename = "GN-CONCAVE")]
    GnConcave,
    #[serde(rename = "BBL-TRACE")]
    BblTrace,
    #[serde(rename = "IC-TRACE")]
    IcTrace,
    #[serde(rename = "SOBOLEV-TRACE")]
    SobolevTrace,
    #[serde(rename = "GN-TRACE")]
    GnTrace,
    #[serde(rename = "BBL-CLASSIC-DYN")]
    BblClassicDyn,
    #[serde(rename = "IC-NPLUS1")]
    IcNplus1,
    #[serde(rename = "PL-DYN")]
    PlDyn,
    #[serde(rename = "LOGSOB")]
    LogSob,
    #[serde(rename = "LP-LOGSOB")]
    LpLogSob,
    #[serde(rename = "LOGSOB-TRACE")]
    LogSobTrace,
}

use InequalityId::*;

impl InequalityId {
    pub const ALL: [InequalityId; 21] = [
        Ic2, Case1, Case2, Bbl2Dyn, BblPhiDyn, BblConcaveDyn, Gn1, Sobolev, GnPlus, GnMinus, GnConcave, BblTrace,
        IcTrace, SobolevTrace, GnTrace, BblClassicDyn, IcNplus1, PlDyn, LogSob, LpLogSob, LogSobTrace,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Ic2 => "IC2",
            Case1 => "CASE1",
            Case2 => "CASE2",
            Bbl2Dyn => "BBL2-DYN",
            BblPhiDyn => "BBLPHI-DYN",
            BblConcaveDyn => "BBL-CONCAVE-DYN",
            Gn1 => "GN1",
            Sobolev => "SOBOLEV",
            GnPlus => "GN-PLUS",
            GnMinus => "GN-MINUS",
            GnConcave => "GN-CONCAVE",
            BblTrace => "BBL-TRACE",
            IcTrace => "IC-TRACE",
            SobolevTrace => "SOBOLEV-TRACE",
            GnTrace => "GN-TRACE",
            BblClassicDyn => "BBL-CLASSIC-DYN",
            IcNplus1 => "IC-NPLUS1",
            PlDyn => "PL-DYN",
            LogSob => "LOGSOB",
            LpLogSob => "LP-LOGSOB",
            LogSobTrace => "LOGSOB-TRACE",
        }
    }

    /// One-line form of the inequality, `lhs ≥ rhs`.
    pub fn statement(&self) -> &'static str {
        match self {
            Ic2 => "∫W*(∇g)g^{−n} ≥ (1/(n−1))∫W^{1−n}",
            Case1 => "(a−1)∫W*(∇g)g^{−a} + (a−n)∫g^{1−a} ≥ ∫W^{1−a}",
            Case2 => "−∫W^{1+a} ≥ (a+1)∫W_*(∇g)g^a + (a+n)∫g^{1+a}",
            Bbl2Dyn => "(1+h)^{a−n}∫Q_h^W(g)^{1−a} ≥ ∫g^{1−a} + h∫W^{1−a}",
            BblPhiDyn => "(1+h)^{a−n}∫Φ(Q_h/(1+h))Q_h^{−a} ≥ (1/(1+h))∫Φ(g)g^{−a} + (h/(1+h))∫Φ(W)W^{−a}",
            BblConcaveDyn => "∫R_h^W(g)^{1+a} ≥ ∫g^{1+a} + h∫W^{1+a} + (n+a)h∫g^{1+a}",
            Gn1 => "((a−1)/p)∫‖∇g‖_*^p g^{−a} + (a−n)∫g^{1−a} ≥ (a−1)C + ∫W^{1−a}",
            Sobolev => "C_{n,p}‖∇f‖_p ≥ ‖f‖_{np/(n−p)}",
            GnPlus => "D⁺‖∇f‖_p^θ ‖f‖_{p(a−1)/(a−p)}^{1−θ} ≥ ‖f‖_{ap/(a−p)}",
            GnMinus => "D⁻‖∇f‖_p^θ ‖f‖_{ap/(a−p)}^{1−θ} ≥ ‖f‖_{p(a−1)/(a−p)}",
            GnConcave => "D‖∇f‖_p^θ ‖f‖_{ap/(a+p)}^{1−θ} ≥ ‖f‖_{p(a+1)/(a+p)}",
            BblTrace => "(1+h)^{a−n}∫_{u≥h}Q_h^W(g)^{1−a} ≥ ∫_{ℝⁿ₊}g^{1−a} + h∫_{ℝⁿ₊+e}W^{1−a}",
            IcTrace => "(a−1)∫W*(∇g)g^{−a} + (a−n)∫g^{1−a} ≥ ∫_{ℝⁿ₊+e}W^{1−a} + ∫_{∂ℝⁿ₊}g^{1−a}",
            SobolevTrace => "D_{n,p}‖∇f‖_p ≥ ‖f‖_{L^{p(n−1)/(n−p)}(∂ℝⁿ₊)}",
            GnTrace => "D‖∇f‖_p^θ ‖f‖_r^{1−θ} ≥ ‖f‖_{L^r(∂ℝⁿ₊)}, r = p(a−1)/(a−p)",
            BblClassicDyn => "∫Q_h^W(g)^{−n} ≥ 1",
            IcNplus1 => "∫W*(∇g·(∫g^{−n})^{1/n})g^{−(n+1)} ≥ 0",
            PlDyn => "∫e^{−Q_h^W(g)/(1+h)} ≥ (1+h)^n",
            LogSob => "∫(g + W*(∇g))e^{−g} ≥ n",
            LpLogSob => "(n/p)∫f^p log(𝓛_p∫‖∇f‖_*^p/∫f^p) ≥ Ent(f^p)",
            LogSobTrace => "(C/p)^{1−p}∫‖∇f‖_*^p − n∫f^p − ∫_{∂ℝⁿ₊}f^p ≥ Ent(f^p)",
        }
    }

    /// Verified through the Hopf–Lax or sup-convolution semigroup.
    pub fn is_dynamic(&self) -> bool {
        matches!(self, Bbl2Dyn | BblPhiDyn | BblConcaveDyn | BblTrace | BblClassicDyn | PlDyn)
    }

    pub fn uses_h(&self) -> bool {
        self.is_dynamic()
    }

    /// Posed on the half-space.
    pub fn is_trace(&self) -> bool {
        matches!(self, BblTrace | IcTrace | SobolevTrace | GnTrace | LogSobTrace)
    }

    /// The designated configuration is an equality case.
    pub fn has_equality_case(&self) -> bool {
        *self != BblConcaveDyn
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InequalityId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_uppercase().replace('_', "-");
        InequalityId::ALL
            .iter()
            .find(|i| i.name() == key)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown inequality '{s}'")))
    }
}

/// Outcome of a verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Equality,
    ViolatedWithinTolerance,
    Violated,
}

impl Verdict {
    /// Classifies an oriented gap against its budget.
    pub fn classify(gap: f64, budget: f64, equality_config: bool) -> Verdict {
        if !gap.is_finite() {
            return Verdict::Violated;
        }
        if equality_config && gap.abs() <= budget {
            Verdict::Equality
        } else if gap >= 0.0 {
            Verdict::Holds
        } else if gap >= -budget {
            Verdict::ViolatedWithinTolerance
        } else {
            Verdict::Violated
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Equality => "equality",
            Verdict::ViolatedWithinTolerance => "violated-within-tolerance",
            Verdict::Violated => "violated",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Test function handed to a verifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TestInput {
    /// The designated extremal configuration.
    Equality,
    /// The extremal multiplied by `1 + εσ`, `σ` drawn from `seed`, then
    /// renormalized.
    Perturbed { seed: u64, eps: f64 },
}

impl TestInput {
    pub fn seed(&self) -> Option<u64> {
        match *self {
            TestInput::Equality => None,
            TestInput::Perturbed { seed, .. } => Some(seed),
        }
    }
}

/// Discretization of a verification run. Each run is evaluated at this level
/// and at a coarser one; the difference enters the budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Resolution {
    /// `nodes` per axis (odd); the coarse level has `(nodes + 1)/2`.
    Grid { nodes: usize },
    /// Adaptive quadrature to relative `tol`; the coarse level uses `100·tol`.
    Adaptive { tol: f64 },
}

impl Resolution {
    /// Grid sizes used for baseline runs: 4097 in 1D, 513 per axis in 2D and
    /// above (where radial inputs switch to adaptive quadrature).
    pub fn baseline(n: usize) -> Resolution {
        Resolution::Grid { nodes: if n == 1 { 4097 } else { 513 } }
    }

    pub fn coarse(&self) -> Result<Resolution> {
        match *self {
            Resolution::Grid { nodes } => {
                if nodes < 5 || nodes % 2 == 0 {
                    return Err(Error::InvalidGrid(format!("need an odd node count ≥ 5, got {nodes}")));
                }
                Ok(Resolution::Grid { nodes: nodes.div_ceil(2) })
            }
            Resolution::Adaptive { tol } => {
                if !(tol > 0.0) {
                    return Err(Error::InvalidInput("tolerance must be positive".into()));
                }
                Ok(Resolution::Adaptive { tol: (tol * 100.0).min(1e-3) })
            }
        }
    }

    /// Twice as fine.
    pub fn refined(&self) -> Resolution {
        match *self {
            Resolution::Grid { nodes } => Resolution::Grid { nodes: 2 * nodes - 1 },
            Resolution::Adaptive { tol } => Resolution::Adaptive { tol: tol / 100.0 },
        }
    }
}

/// An inequality together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub id: InequalityId,
    pub params: ParamSet,
    /// Semigroup time for the dynamic forms.
    pub h: f64,
    /// Exponent of `Φ(x) = x^β`.
    pub beta: f64,
}

impl Case {
    pub fn new(id: InequalityId, params: ParamSet) -> Self {
        Case { id, params, h: 0.5, beta: 0.5 }
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_beta(mut self, b: f64) -> Self {
        self.beta = b;
        self
    }

    /// Configuration used for the sharpness check of each inequality.
    pub fn designated(id: InequalityId) -> Case {
        let p = |n, a, p| Case::new(id, ParamSet::new(n, a, p));
        match id {
            Case1 => p(1, 2.0, 2.0),
            Case2 => p(2, 2.0, 2.0),
            Ic2 => p(3, 3.0, 2.0),
            Bbl2Dyn => p(2, 2.0, 1.5),
            BblPhiDyn => p(1, 2.0, 2.0),
            BblConcaveDyn => p(1, 1.0, 2.0),
            Gn1 => p(2, 3.0, 2.0),
            Sobolev => p(3, 3.0, 2.0),
            GnPlus => p(1, 3.0, 2.0),
            GnMinus => p(1, 2.0, 3.0),
            GnConcave => p(2, 2.0, 2.0),
            BblTrace => p(2, 3.0, 2.0),
            IcTrace => p(2, 3.0, 2.0),
            SobolevTrace => p(3, 3.0, 2.0),
            GnTrace => p(3, 4.0, 2.0),
            BblClassicDyn => p(1, 1.5, 2.0),
            IcNplus1 => p(2, 3.0, 2.0),
            PlDyn => p(1, 2.0, 2.0),
            LogSob => p(2, 2.0, 2.0),
            LpLogSob => p(2, 2.0, 2.0),
            LogSobTrace => p(2, 2.0, 2.0),
        }
    }

    /// Lower-dimensional configuration used for randomized runs.
    pub fn randomized(id: InequalityId) -> Case {
        let p = |n, a, p| Case::new(id, ParamSet::new(n, a, p));
        match id {
            Case1 => p(2, 3.0, 2.0),
            Ic2 => p(2, 2.0, 1.5),
            Bbl2Dyn => p(1, 2.0, 2.0),
            Sobolev => p(2, 2.0, 1.5),
            GnPlus => p(2, 4.0, 2.0),
            SobolevTrace => p(2, 2.0, 1.5),
            GnTrace => p(2, 3.0, 1.5),
            _ => Case::designated(id),
        }
    }
}

/// A named constituent of `lhs` or `rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
    pub error: f64,
    pub truncation: f64,
}

/// Result of [`super::verify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub id: InequalityId,
    pub statement: String,
    pub params: ParamSet,
    pub h: Option<f64>,
    pub beta: Option<f64>,
    pub input: TestInput,
    pub resolution: Resolution,
    /// Description of the quadrature and semigroup discretization.
    pub pipeline: String,
    pub lhs: f64,
    pub lhs_error: f64,
    pub rhs: f64,
    pub rhs_error: f64,
    /// `lhs − rhs`; the inequality asserts `gap ≥ 0`.
    pub gap: f64,
    pub relative_gap: f64,
    /// Gap at the coarse level.
    pub coarse_gap: f64,
    pub budget: f64,
    pub verdict: Verdict,
    pub equality_config: bool,
    pub terms: Vec<Term>,
    pub notes: Vec<String>,
}

impl InequalityReport {
    /// Observed convergence order of the gap between the coarse and fine
    /// levels, when the equality gap is resolved above round-off.
    pub fn observed_order(&self) -> Option<f64> {
        let scale = self.lhs.abs().max(self.rhs.abs()).max(1e-300);
        let (f, c) = (self.gap.abs() / scale, self.coarse_gap.abs() / scale);
        if f < 1e-10 || c < 1e-10 || f >= c {
            return None;
        }
        Some((c / f).log2())
    }
}
