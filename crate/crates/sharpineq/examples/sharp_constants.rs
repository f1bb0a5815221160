//! Sharp constants of the Sobolev, Gagliardo–Nirenberg and trace families,
//! each cross-checked through an independent route, and the exponent θ.

use sharpineq::inequalities::{sharp_constant, theta_solve, ExtremalKind, ParamSet, ThetaKind};

fn main() -> sharpineq::Result<()> {
    let cases = [
        (ExtremalKind::Sobolev, ParamSet::new(3, 3.0, 2.0)),
        (ExtremalKind::Sobolev, ParamSet::new(4, 4.0, 1.5)),
        (ExtremalKind::GnPlus, ParamSet::new(2, 4.0, 2.0)),
        (ExtremalKind::GnMinus, ParamSet::new(1, 2.0, 3.0)),
        (ExtremalKind::SobolevTrace, ParamSet::new(3, 3.0, 2.0)),
        (ExtremalKind::GnTrace, ParamSet::new(3, 4.0, 2.0)),
    ];
    println!("{:<14} {:>3} {:>5} {:>5}  {:>18}  {:>9}  {:>8}", "kind", "n", "a", "p", "constant", "error", "agree");
    for (kind, s) in cases {
        let c = sharp_constant(kind, &s)?;
        println!(
            "{:<14} {:>3} {:>5} {:>5}  {:>18.14}  {:>9.1e}  {:>8.1e}",
            format!("{kind:?}"), s.n, s.a, s.p, c.value, c.error, c.agreement
        );
    }
    for (kind, n, p, a) in [(ThetaKind::GnPlus, 2, 2.0, 4.0), (ThetaKind::GnMinus, 1, 3.0, 2.0), (ThetaKind::GnTrace, 3, 2.0, 4.0)] {
        println!("theta {kind:?} (n={n}, p={p}, a={a}) = {:.15}", theta_solve(kind, n, p, a)?);
    }
    Ok(())
}
