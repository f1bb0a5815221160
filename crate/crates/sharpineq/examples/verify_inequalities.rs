//! Verifies a handful of inequalities at their equality configuration and
//! on seeded perturbations, printing gap, budget and verdict.

use sharpineq::inequalities::{verify, Case, InequalityId, Resolution, TestInput};

fn main() -> sharpineq::Result<()> {
    use InequalityId::*;
    let ids = [Case1, Gn1, Sobolev, GnMinus, IcTrace, LogSob, Bbl2Dyn, PlDyn];
    println!("{:<12} {:<14} {:>12} {:>10}  verdict", "id", "input", "gap", "budget");
    for id in ids {
        let case = Case::randomized(id);
        let res = match id {
            Bbl2Dyn | PlDyn => Resolution::baseline(case.params.n),
            _ => Resolution::Adaptive { tol: 1e-10 },
        };
        for input in [TestInput::Equality, TestInput::Perturbed { seed: 4, eps: 0.2 }] {
            let r = verify(&case, input, res)?;
            let label = match input {
                TestInput::Equality => "equality".to_string(),
                TestInput::Perturbed { seed, .. } => format!("seed {seed}"),
            };
            println!("{:<12} {:<14} {:>12.3e} {:>10.1e}  {:?}", id.to_string(), label, r.gap, r.budget, r.verdict);
        }
    }
    Ok(())
}
