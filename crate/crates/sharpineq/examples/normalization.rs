//! Normalizing a potential so that `∫ W^{−a} = 1`, then evaluating power
//! functionals on it with both pipelines, and an entropy.

use sharpineq::functionals::{
    entropy_functional, normalize, power_functional, FreeParam, NormalizationProblem, Pipeline, Region, Target,
};
use sharpineq::norms::{NormSpec, PotentialSpec};

fn main() -> sharpineq::Result<()> {
    let (n, a) = (2, 3.5);
    let family = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.0, 1.0);
    let problem = NormalizationProblem::new(family, FreeParam::Offset, Target::InvPower(a), n);
    let c = normalize(&problem)?;
    let w = problem.with_value(c);
    println!("offset {c:.12}");

    let region = Region::radial(n, NormSpec::euclidean());
    let pipe = Pipeline::Adaptive { tol: 1e-12 };
    for r in [-a, 1.0 - a, -5.0] {
        let v = power_functional(&w, r, &region, &pipe)?;
        println!("int W^{r:<5} = {:.12} ± {:.1e}", v.value, v.budget());
    }
    let grid = Pipeline::Grid { nodes: 513, radius: 40.0 };
    let v = power_functional(&w, -a, &Region::full(n), &grid)?;
    println!("grid pipeline: int W^-a = {:.10} ± {:.1e}", v.value, v.budget());

    let f = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.0, 0.0)
        .with_transform(sharpineq::norms::Transform::Exp(-0.5));
    let ent = entropy_functional(&f, 2.0, &region, &pipe)?;
    println!("Ent(f^2) for a Gaussian f: {:.10}", ent.value);
    Ok(())
}
