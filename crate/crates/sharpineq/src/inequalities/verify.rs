use super::catalog::{Case, InequalityId, InequalityReport, Resolution, Term, TestInput, Verdict};
use super::constants::{
    derived_constant, gradient_power_with, monomial, normalized_cap, normalized_convex, normalized_exp,
    normalized_trace_exp, normalized_trace_power,
};
use super::dynamic::{classic_lambda, semigroup_integral, sup_semigroup_integral, SemigroupGrid};
use super::extremal::{extremal, unit_e, ExtremalKind};
use super::params::{theta_solve, ParamSet, ThetaKind};
use super::perturb::{perturb_on, PerturbedField};
use crate::error::{Error, Result};
use crate::functionals::{
    dirichlet_conjugate, dirichlet_functional, entropy_functional, integrate_over, power_functional,
    trace_functional, FunctionalValue, Pipeline, Region, Symmetry,
};
use crate::grid::DomainKind;
use crate::norms::{Field, NormSpec, PotentialSpec, Transform};
use crate::transport::PhiSpec;
use InequalityId::*;

/// Box half-width for grid pipelines on unbounded domains.
const BOX: f64 = 16.0;

/// Constraint that fixes the free factor of a perturbed input.
#[derive(Debug, Clone, Copy)]
enum Norming {
    None,
    InvPower(f64),
    Power(f64),
    NegExp,
}

/// Everything that does not depend on the resolution.
struct Setup {
    case: Case,
    n: usize,
    kind: DomainKind,
    exact: bool,
    g: PerturbedField,
    /// Potential whose integrals appear in the statement.
    w: Option<PotentialSpec>,
    /// Kernel of the semigroup or of the Dirichlet form.
    kernel: Option<PotentialSpec>,
    constant: f64,
    theta: f64,
    /// Relative error carried by normalization and constants.
    side_err: f64,
    /// Grid box for the semigroup ids.
    box_radius: f64,
    notes: Vec<String>,
}

fn inadmissible<T>(m: String) -> Result<T> {
    Err(Error::Inadmissible(m))
}

fn region_of(g: &PerturbedField, n: usize, kind: DomainKind) -> Region {
    let natural = Region::for_potential(&g.base, n, kind);
    if g.is_exact() {
        natural
    } else {
        Region { symmetry: Symmetry::None, ..natural }
    }
}

fn precise_pipe(n: usize) -> Pipeline {
    Pipeline::Adaptive { tol: if n <= 2 { 1e-12 } else { 1e-9 } }
}

/// `λ·base(1 + εσ) + μ` meeting the constraint; returns the relative error
/// of the constraint integral.
fn build_input(
    base: &PotentialSpec,
    input: TestInput,
    n: usize,
    kind: DomainKind,
    norming: Norming,
) -> Result<(PerturbedField, f64)> {
    let (seed, eps) = match input {
        TestInput::Equality => return Ok((PerturbedField::exact(base.clone()), 0.0)),
        TestInput::Perturbed { seed, eps } => (seed, eps),
    };
    let raw = perturb_on(base, n, seed, eps, kind)?;
    let region = region_of(&raw, n, kind);
    let pipe = precise_pipe(n);
    let out = match norming {
        Norming::None => (raw, 0.0),
        Norming::InvPower(a) => {
            let i = power_functional(&raw, -a, &region, &pipe)?;
            (raw.with_scale(i.value.powf(1.0 / a)), i.budget() / i.value)
        }
        Norming::Power(a) => {
            let i = power_functional(&raw, a, &region, &pipe)?;
            (raw.with_scale(i.value.powf(-1.0 / a)), i.budget() / i.value)
        }
        Norming::NegExp => {
            let f = |x: &[f64]| (-raw.value(x)).exp();
            let i = integrate_over(&f, &region, &pipe)?;
            (raw.clone().with_added(i.value.ln()), i.budget() / i.value)
        }
    };
    Ok(out)
}

fn require_trace_dim(s: &ParamSet) -> Result<()> {
    if s.n < 2 {
        return inadmissible(format!("half-space inequalities need n ≥ 2, got n = {}", s.n));
    }
    Ok(())
}

/// Norm of the potentials: `ℓ_q` for semigroup ids in dimension ≥ 2 so that
/// `‖x‖_q^q` splits by axis, Euclidean otherwise.
fn norm_for(case: &Case) -> NormSpec {
    if case.id.is_dynamic() && case.params.n >= 2 && !case.id.is_trace() {
        NormSpec::lp(case.params.q)
    } else {
        NormSpec::euclidean()
    }
}

fn setup(case: &Case, input: TestInput) -> Result<Setup> {
    let mut case = *case;
    case.params.validate_basic()?;
    let id = case.id;
    if id.is_dynamic() && !(case.h >= 0.0 && case.h.is_finite()) {
        return inadmissible(format!("h = {} must be finite and nonnegative", case.h));
    }
    let mut notes = Vec::new();
    match id {
        Ic2 => {
            if case.params.n < 2 {
                return inadmissible("IC2 needs n ≥ 2".into());
            }
            case.params.a = case.params.nf();
            notes.push("a = n".into());
        }
        BblClassicDyn => {
            case.params.a = case.params.nf();
            notes.push("a = n".into());
        }
        IcNplus1 => {
            case.params.a = case.params.nf() + 1.0;
            notes.push("a = n + 1".into());
        }
        _ => {}
    }
    let s = case.params;
    let (n, a, p, q) = (s.n, s.a, s.p, s.q);
    let nf = s.nf();
    let kind = if id.is_trace() { DomainKind::HalfSpace } else { DomainKind::Full };
    let norm = norm_for(&case);
    let exact = matches!(input, TestInput::Equality);
    let mut st = Setup {
        case,
        n,
        kind,
        exact,
        g: PerturbedField::exact(PotentialSpec::convex(norm.clone(), q, 1.0, 1.0)),
        w: None,
        kernel: None,
        constant: 0.0,
        theta: 1.0,
        side_err: 0.0,
        box_radius: BOX,
        notes,
    };
    let take = |base: &PotentialSpec, norming: Norming, st: &mut Setup| -> Result<()> {
        let (g, e) = build_input(base, input, n, kind, norming)?;
        st.g = g;
        st.side_err += e;
        Ok(())
    };
    match id {
        Case1 | Ic2 | Gn1 | Bbl2Dyn | BblPhiDyn | BblClassicDyn => {
            if id != BblClassicDyn {
                s.check_convex()?;
            }
            if id == BblPhiDyn {
                PhiSpec::Power(case.beta).validate(a)?;
            }
            let w = normalized_convex(&norm, q, n, a)?;
            take(&w, Norming::InvPower(a), &mut st)?;
            st.constant = w.offset;
            st.kernel = Some(w.clone());
            st.w = Some(w);
        }
        IcNplus1 => {
            let w = normalized_convex(&norm, q, n, nf)?;
            take(&w, Norming::None, &mut st)?;
            let region = region_of(&st.g, n, kind);
            let i = power_functional(&st.g, -nf, &region, &precise_pipe(n))?;
            st.constant = i.value;
            st.side_err += i.budget() / i.value;
            st.kernel = Some(w.clone());
            st.w = Some(w);
        }
        Case2 | BblConcaveDyn => {
            s.check_concave()?;
            let w = normalized_cap(&norm, q, n, a)?;
            take(&w, Norming::Power(a), &mut st)?;
            st.kernel = Some(w.clone());
            st.w = Some(w);
        }
        PlDyn | LogSob => {
            let w = normalized_exp(&norm, q, n)?;
            take(&w, Norming::NegExp, &mut st)?;
            st.constant = w.offset;
            st.kernel = Some(w.clone());
            st.w = Some(w);
        }
        BblTrace | IcTrace => {
            require_trace_dim(&s)?;
            s.check_convex()?;
            if id == BblTrace && n >= 2 && q != 2.0 {
                return Err(Error::InvalidInput(
                    "the half-space semigroup grid splits by axis only for p = 2 when n ≥ 2".into(),
                ));
            }
            let ws = normalized_trace_power(q, n, a)?;
            take(&ws, Norming::InvPower(a), &mut st)?;
            st.constant = ws.scale;
            st.kernel = Some(PotentialSpec::convex(NormSpec::euclidean(), q, ws.scale, 0.0));
            st.w = Some(ws);
        }
        Sobolev | GnPlus | GnMinus | GnConcave | SobolevTrace | GnTrace | LpLogSob => {
            let kindx = match id {
                Sobolev => ExtremalKind::Sobolev,
                GnPlus => ExtremalKind::GnPlus,
                GnMinus => ExtremalKind::GnMinus,
                GnConcave => ExtremalKind::GnConcave,
                SobolevTrace => ExtremalKind::SobolevTrace,
                GnTrace => ExtremalKind::GnTrace,
                _ => ExtremalKind::LpLogSob,
            };
            if kindx.is_trace() {
                require_trace_dim(&s)?;
            }
            let f = extremal(kindx, &s)?;
            take(&f, Norming::None, &mut st)?;
            st.constant = derived_constant(kindx, &s, &NormSpec::euclidean())?;
            st.side_err += 1e-10;
            st.theta = match id {
                GnPlus => theta_solve(ThetaKind::GnPlus, n, p, a)?,
                GnMinus => theta_solve(ThetaKind::GnMinus, n, p, a)?,
                GnConcave => theta_solve(ThetaKind::GnConcave, n, p, a)?,
                GnTrace => theta_solve(ThetaKind::GnTrace, n, p, a)?,
                _ => 1.0,
            };
        }
        LogSobTrace => {
            require_trace_dim(&s)?;
            let c = normalized_trace_exp(q, n)?.scale;
            let f = PotentialSpec::convex(NormSpec::euclidean(), q, c / p, 0.0)
                .with_shift(unit_e(n))
                .with_transform(Transform::Exp(-1.0));
            take(&f, Norming::None, &mut st)?;
            st.constant = c;
        }
    }
    if id.is_dynamic() {
        if n > 2 {
            return Err(Error::InvalidInput("semigroup verifiers run on grids with n ≤ 2".into()));
        }
        let h = case.h;
        st.box_radius = match id {
            BblConcaveDyn => {
                let r = Region::for_potential(st.w.as_ref().unwrap(), n, kind).support_radius.unwrap_or(1.0);
                (1.0 + h) * r * 1.02
            }
            _ => BOX.max(1.1 * (1.0 + h) * st.g.reach()),
        };
    }
    Ok(st)
}

/// One evaluation of both sides at a given resolution.
struct Level<'a> {
    st: &'a Setup,
    res: Resolution,
    /// Grid of the semigroup ids; their other integrals use precise
    /// adaptive quadrature.
    sg: Option<SemigroupGrid>,
}

struct Sides {
    lhs: FunctionalValue,
    rhs: FunctionalValue,
    terms: Vec<(String, FunctionalValue)>,
}

impl Level<'_> {
    fn pipe(&self, region: &Region) -> Pipeline {
        if self.sg.is_some() {
            return Pipeline::Adaptive { tol: if self.st.n <= 2 { 1e-11 } else { 1e-9 } };
        }
        match self.res {
            Resolution::Adaptive { tol } => Pipeline::Adaptive { tol },
            Resolution::Grid { nodes } => {
                Pipeline::Grid { nodes, radius: region.support_radius.unwrap_or(self.st.box_radius) }
            }
        }
    }

    fn g_region(&self) -> Region {
        region_of(&self.st.g, self.st.n, self.st.kind)
    }

    fn w(&self) -> &PotentialSpec {
        self.st.w.as_ref().expect("potential")
    }

    fn kernel(&self) -> &PotentialSpec {
        self.st.kernel.as_ref().expect("kernel")
    }

    fn pow_g(&self, r: f64) -> Result<FunctionalValue> {
        let region = self.g_region();
        power_functional(&self.st.g, r, &region, &self.pipe(&region))
    }

    fn pow_w(&self, r: f64) -> Result<FunctionalValue> {
        let region = Region::for_potential(self.w(), self.st.n, self.st.kind);
        power_functional(self.w(), r, &region, &self.pipe(&region))
    }

    fn integral(&self, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<FunctionalValue> {
        let region = self.g_region();
        integrate_over(f, &region, &self.pipe(&region))
    }

    fn dirichlet(&self, a: f64) -> Result<FunctionalValue> {
        let region = self.g_region();
        dirichlet_functional(&self.st.g, self.kernel(), a, &region, &self.pipe(&region))
    }

    /// `∫ ‖∇g‖^p` with the Euclidean norm.
    fn grad(&self, p: f64) -> Result<FunctionalValue> {
        let region = self.g_region();
        gradient_power_with(&self.st.g, p, &NormSpec::euclidean(), &region, &self.pipe(&region))
    }

    fn trace(&self, r: f64) -> Result<FunctionalValue> {
        let region = self.g_region();
        trace_functional(&self.st.g, r, &region, &self.pipe(&region))
    }

    fn semigroup_grid(&self) -> Result<SemigroupGrid> {
        self.sg.ok_or_else(|| Error::InvalidInput("semigroup ids run on grids".into()))
    }

    fn q_integral(&self, f: &(dyn Fn(f64) -> f64 + Sync)) -> Result<FunctionalValue> {
        let tail_tol = if self.st.kind == DomainKind::HalfSpace { 1e-7 } else { 1e-9 };
        semigroup_integral(&self.st.g, self.kernel(), self.st.case.h, &self.semigroup_grid()?, f, tail_tol)
    }

    fn sides(&self) -> Result<Sides> {
        let st = self.st;
        let s = st.case.params;
        let (n, a, p) = (s.nf(), s.a, s.p);
        let h = st.case.h;
        let mut terms: Vec<(String, FunctionalValue)> = Vec::new();
        let mut t = |name: &str, v: FunctionalValue| {
            terms.push((name.to_string(), v));
            v
        };
        let (lhs, rhs) = match st.case.id {
            Case1 => {
                let d = t("dirichlet", self.dirichlet(a)?);
                let pg = t("int g^(1-a)", self.pow_g(1.0 - a)?);
                let pw = t("int W^(1-a)", self.pow_w(1.0 - a)?);
                (d.scaled(a - 1.0) + pg.scaled(a - n), pw)
            }
            Ic2 => {
                let d = t("dirichlet", self.dirichlet(n)?);
                let pw = t("int W^(1-n)", self.pow_w(1.0 - n)?);
                (d, pw.scaled(1.0 / (n - 1.0)))
            }
            Case2 => {
                let pw = t("int W^(1+a)", self.pow_w(1.0 + a)?);
                let d = t("dirichlet", self.dirichlet(-a)?);
                let pg = t("int g^(1+a)", self.pow_g(1.0 + a)?);
                (pw.scaled(-1.0), d.scaled(a + 1.0) + pg.scaled(a + n))
            }
            Gn1 => {
                let dual = self.kernel().norm.dual();
                let g = &st.g;
                let dim = st.n;
                let f = |x: &[f64]| {
                    let mut gr = vec![0.0; dim];
                    g.gradient(x, &mut gr);
                    dual.norm(&gr).powf(p) * g.value(x).powf(-a)
                };
                let gp = t("int |grad g|^p g^(-a)", self.integral(&f)?);
                let pg = t("int g^(1-a)", self.pow_g(1.0 - a)?);
                let pw = t("int W^(1-a)", self.pow_w(1.0 - a)?);
                let c = FunctionalValue::exact((a - 1.0) * st.constant);
                (gp.scaled((a - 1.0) / p) + pg.scaled(a - n), c + pw)
            }
            Sobolev => {
                let g = t("int |grad f|^p", self.grad(p)?);
                let ps = s.p_star();
                let m = t("int f^p*", self.pow_g(ps)?);
                (monomial(&[(g, 1.0 / p)]).scaled(st.constant), monomial(&[(m, 1.0 / ps)]))
            }
            GnPlus | GnMinus => {
                let th = st.theta;
                let r = p * (a - 1.0) / (a - p);
                let sx = a * p / (a - p);
                let (lo, hi) = if st.case.id == GnPlus { (r, sx) } else { (sx, r) };
                let g = t("int |grad f|^p", self.grad(p)?);
                let ml = t("int f^low", self.pow_g(lo)?);
                let mh = t("int f^high", self.pow_g(hi)?);
                let lhs = monomial(&[(g, th / p), (ml, (1.0 - th) / lo)]).scaled(st.constant);
                (lhs, monomial(&[(mh, 1.0 / hi)]))
            }
            GnConcave => {
                let th = st.theta;
                let e1 = p * (a + 1.0) / (a + p);
                let e2 = a * p / (a + p);
                let g = t("int |grad f|^p", self.grad(p)?);
                let m2 = t("int f^e2", self.pow_g(e2)?);
                let m1 = t("int f^e1", self.pow_g(e1)?);
                let lhs = monomial(&[(g, th / p), (m2, (1.0 - th) / e2)]).scaled(st.constant);
                (lhs, monomial(&[(m1, 1.0 / e1)]))
            }
            SobolevTrace => {
                let g = t("int |grad f|^p", self.grad(p)?);
                let pt = s.p_tilde();
                let tr = t("trace f^p~", self.trace(pt)?);
                (monomial(&[(g, 1.0 / p)]).scaled(st.constant), monomial(&[(tr, 1.0 / pt)]))
            }
            GnTrace => {
                let th = st.theta;
                let r = p * (a - 1.0) / (a - p);
                let g = t("int |grad f|^p", self.grad(p)?);
                let tr = t("trace f^r", self.trace(r)?);
                let mut parts = vec![(g, th / p)];
                if th < 1.0 {
                    parts.push((t("int f^r", self.pow_g(r)?), (1.0 - th) / r));
                }
                (monomial(&parts).scaled(st.constant), monomial(&[(tr, 1.0 / r)]))
            }
            IcTrace => {
                let d = t("dirichlet", self.dirichlet(a)?);
                let pg = t("int g^(1-a)", self.pow_g(1.0 - a)?);
                let pw = t("int W^(1-a)", self.pow_w(1.0 - a)?);
                let tr = t("trace g^(1-a)", self.trace(1.0 - a)?);
                (d.scaled(a - 1.0) + pg.scaled(a - n), pw + tr)
            }
            IcNplus1 => {
                let conj = dirichlet_conjugate(self.kernel(), DomainKind::Full)?;
                let factor = st.constant.powf(1.0 / n);
                let g = &st.g;
                let dim = st.n;
                let f = |x: &[f64]| {
                    let mut gr = vec![0.0; dim];
                    g.gradient(x, &mut gr);
                    gr.iter_mut().for_each(|v| *v *= factor);
                    conj(&gr) * g.value(x).powf(-(n + 1.0))
                };
                let v = t("int W*(c grad g) g^-(n+1)", self.integral(&f)?);
                t("int g^(-n)", FunctionalValue::exact(st.constant));
                (v, FunctionalValue::exact(0.0))
            }
            LogSob => {
                let conj = dirichlet_conjugate(self.kernel(), DomainKind::Full)?;
                let g = &st.g;
                let dim = st.n;
                let f = |x: &[f64]| {
                    let mut gr = vec![0.0; dim];
                    g.gradient(x, &mut gr);
                    let v = g.value(x);
                    (v + conj(&gr)) * (-v).exp()
                };
                let v = t("int (g + W*(grad g)) e^-g", self.integral(&f)?);
                (v, FunctionalValue::exact(n))
            }
            LpLogSob => {
                let region = self.g_region();
                let m = t("int f^p", self.pow_g(p)?);
                let g = t("int |grad f|^p", self.grad(p)?);
                let ent = t("Ent(f^p)", entropy_functional(&st.g, p, &region, &self.pipe(&region))?);
                let l = st.constant;
                let log = (l * g.value / m.value).ln();
                let dm = (n / p * (log - 1.0)).abs();
                let dg = n / p * m.value / g.value;
                let lhs = FunctionalValue {
                    value: n / p * m.value * log,
                    error: dm * m.error + dg * g.error,
                    truncation: dm * m.truncation + dg * g.truncation,
                };
                (lhs, ent)
            }
            LogSobTrace => {
                let region = self.g_region();
                let c = st.constant;
                let g = t("int |grad f|^p", self.grad(p)?);
                let m = t("int f^p", self.pow_g(p)?);
                let tr = t("trace f^p", self.trace(p)?);
                let ent = t("Ent(f^p)", entropy_functional(&st.g, p, &region, &self.pipe(&region))?);
                (g.scaled((c / p).powf(1.0 - p)) - m.scaled(n) - tr, ent)
            }
            Bbl2Dyn => {
                let e = 1.0 - a;
                let qi = t("int Q^(1-a)", self.q_integral(&move |v: f64| v.powf(e))?);
                let pg = t("int g^(1-a)", self.pow_g(e)?);
                let pw = t("int W^(1-a)", self.pow_w(e)?);
                (qi.scaled((1.0 + h).powf(a - n)), pg + pw.scaled(h))
            }
            BblPhiDyn => {
                let b = st.case.beta;
                let k = (1.0 + h).powf(-b);
                let qi = t("int phi(Q/(1+h)) Q^-a", self.q_integral(&move |v: f64| k * v.powf(b - a))?);
                let pg = t("int phi(g) g^-a", self.pow_g(b - a)?);
                let pw = t("int phi(W) W^-a", self.pow_w(b - a)?);
                (qi.scaled((1.0 + h).powf(a - n)), pg.scaled(1.0 / (1.0 + h)) + pw.scaled(h / (1.0 + h)))
            }
            BblClassicDyn => {
                let qi = classic_lambda(&st.g, self.kernel(), h, &self.semigroup_grid()?)?;
                let qi = t("int Q^-n", qi);
                (qi, FunctionalValue::exact(1.0))
            }
            PlDyn => {
                let qi = t("int e^(-Q/(1+h))", self.q_integral(&move |v: f64| (-v / (1.0 + h)).exp())?);
                (qi, FunctionalValue::exact((1.0 + h).powf(n)))
            }
            BblTrace => {
                let e = 1.0 - a;
                let qi = t("int_{u>=h} Q^(1-a)", self.q_integral(&move |v: f64| v.powf(e))?);
                let pg = t("int g^(1-a)", self.pow_g(e)?);
                let pw = t("int W^(1-a)", self.pow_w(e)?);
                (qi.scaled((1.0 + h).powf(a - n)), pg + pw.scaled(h))
            }
            BblConcaveDyn => {
                let e = 1.0 + a;
                let sg = self.semigroup_grid()?;
                let ri = t("int R^(1+a)", sup_semigroup_integral(&st.g, self.kernel(), h, &sg, &move |v: f64| v.powf(e))?);
                let pg = t("int g^(1+a)", self.pow_g(e)?);
                let pw = t("int W^(1+a)", self.pow_w(e)?);
                (ri, pg.scaled(1.0 + (n + a) * h) + pw.scaled(h))
            }
        };
        Ok(Sides { lhs, rhs, terms })
    }
}

/// Resolution actually used, with a description of the pipeline.
fn effective(st: &Setup, res: Resolution) -> Result<(Resolution, String)> {
    let id = st.case.id;
    if let Resolution::Grid { nodes } = res {
        if nodes < 5 || nodes % 2 == 0 {
            return Err(Error::InvalidGrid(format!("need an odd node count ≥ 5, got {nodes}")));
        }
    }
    if id.is_dynamic() {
        let res = match res {
            Resolution::Grid { .. } => res,
            Resolution::Adaptive { .. } => Resolution::baseline(st.n),
        };
        let Resolution::Grid { mut nodes } = res else { unreachable!() };
        let (what, tail) = if id == BblConcaveDyn {
            ("sup-convolution", "compact support")
        } else {
            ("Hopf–Lax", "closed-form far field")
        };
        if id == BblConcaveDyn && st.n >= 2 && nodes > 129 {
            nodes = 129;
        }
        let sg = SemigroupGrid::fitted(st.n, st.kind, nodes, st.box_radius, st.case.h)?;
        let counts: Vec<String> = sg.counts().iter().map(|c| c.to_string()).collect();
        let desc = format!(
            "{what} on {} nodes over a box of half-width {:.4}, trapezoid rule, {tail}; other integrals adaptive",
            counts.join("x"),
            sg.radius
        );
        return Ok((Resolution::Grid { nodes }, desc));
    }
    Ok(match res {
        Resolution::Grid { nodes } if st.n <= 2 => {
            (res, format!("trapezoid on {nodes}^{} nodes, half-width {BOX}, adaptive tail", st.n))
        }
        Resolution::Grid { .. } => {
            let tol = if st.exact { 1e-11 } else { 1e-8 };
            let how = if st.exact { "radial" } else { "nested" };
            (Resolution::Adaptive { tol }, format!("{how} adaptive quadrature, tol {tol:e}"))
        }
        Resolution::Adaptive { tol } => (res, format!("adaptive quadrature, tol {tol:e}")),
    })
}

/// Evaluates both sides of the inequality at `res` and at the next coarser
/// level, and classifies the gap against the combined error budget.
pub fn verify(case: &Case, input: TestInput, res: Resolution) -> Result<InequalityReport> {
    if let TestInput::Perturbed { eps, .. } = input {
        if !(0.0..1.0).contains(&eps) {
            return inadmissible(format!("perturbation amplitude ε = {eps} must lie in [0, 1)"));
        }
    }
    let st = setup(case, input)?;
    let (fine_res, pipeline) = effective(&st, res)?;
    let coarse_res = fine_res.coarse()?;
    let (fine_sg, coarse_sg) = match fine_res {
        Resolution::Grid { nodes } if case.id.is_dynamic() => {
            let sg = SemigroupGrid::fitted(st.n, st.kind, nodes, st.box_radius, st.case.h)?;
            (Some(sg), Some(sg.coarse()))
        }
        _ => (None, None),
    };
    let fine = Level { st: &st, res: fine_res, sg: fine_sg }.sides()?;
    let coarse = Level { st: &st, res: coarse_res, sg: coarse_sg }.sides()?;
    let gap = fine.lhs.value - fine.rhs.value;
    let coarse_gap = coarse.lhs.value - coarse.rhs.value;
    if !gap.is_finite() {
        return Err(Error::Divergent(format!("{} gap is not finite", case.id)));
    }
    let scale = fine
        .terms
        .iter()
        .map(|(_, v)| v.value.abs())
        .fold(fine.lhs.value.abs().max(fine.rhs.value.abs()), f64::max)
        .max(f64::MIN_POSITIVE);
    let a = st.case.params.a.abs().max(1.0);
    let budget = fine.lhs.budget()
        + fine.rhs.budget()
        + (gap - coarse_gap).abs()
        + 1e-12 * scale
        + st.side_err * a * scale;
    let equality_config = st.exact && case.id.has_equality_case();
    let id = case.id;
    Ok(InequalityReport {
        id,
        statement: id.statement().to_string(),
        params: st.case.params,
        h: id.uses_h().then_some(st.case.h),
        beta: (id == BblPhiDyn).then_some(st.case.beta),
        input,
        resolution: fine_res,
        pipeline,
        lhs: fine.lhs.value,
        lhs_error: fine.lhs.budget(),
        rhs: fine.rhs.value,
        rhs_error: fine.rhs.budget(),
        gap,
        relative_gap: gap / scale,
        coarse_gap,
        budget,
        verdict: Verdict::classify(gap, budget, equality_config),
        equality_config,
        terms: fine
            .terms
            .into_iter()
            .map(|(name, v)| Term { name, value: v.value, error: v.error, truncation: v.truncation })
            .collect(),
        notes: st.notes,
    })
}
