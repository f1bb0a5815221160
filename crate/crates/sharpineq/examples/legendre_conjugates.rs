//! Legendre transforms of power potentials: closed form, discrete transform
//! on a grid, and the transform restricted to a half-space.

use sharpineq::grid::{make_grid, sample, Domain};
use sharpineq::norms::{conjugate_analytic, conjugate_discrete, conjugate_halfspace, Field, NormSpec, PotentialSpec};

fn main() -> sharpineq::Result<()> {
    let w = PotentialSpec::convex(NormSpec::euclidean(), 3.0, 1.0, 0.0);
    let star = conjugate_analytic(&w)?;
    let formula = star.formula().expect("closed form");

    let src = make_grid(Domain::cube(1, 3.0), &[1025])?;
    let dual = make_grid(Domain::cube(1, 2.0), &[9])?;
    let discrete = conjugate_discrete(&sample(|x| w.value(x), &src)?, &dual)?;
    println!("{:>6}  {:>12}  {:>12}", "y", "closed form", "discrete");
    for (k, y) in dual.axis_nodes(0).iter().enumerate() {
        println!("{y:>6.2}  {:>12.8}  {:>12.8}", formula.eval(&[*y]), discrete.values[k]);
    }

    let w2 = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.0, 0.0);
    let full = conjugate_analytic(&w2)?;
    let half = w2.clone().on_half_space(1.0);
    for y in [[2.0, 0.5], [0.5, 1.0], [-1.0, 0.0]] {
        println!(
            "y = {y:?}: full-space {:.6}, over x0 >= 1 {:.6}",
            full.formula().unwrap().eval(&y),
            conjugate_halfspace(&half, &y)?
        );
    }
    Ok(())
}
