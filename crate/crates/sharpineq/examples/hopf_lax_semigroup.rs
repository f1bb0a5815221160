//! Hopf–Lax inf-convolution `Q_h^W g` on a grid, compared with the closed
//! form `(1+h) W(x/(1+h))` for `g = W`, plus the pointwise solver.

use sharpineq::grid::{make_grid, sample, Domain, DomainKind};
use sharpineq::hopf_lax::{inf_convolution_with, q_pointwise, Datum, HopfLaxOptions, Method};
use sharpineq::norms::{Field, NormSpec, PotentialSpec};

fn main() -> sharpineq::Result<()> {
    let w = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 1.0, 0.5);
    let grid = make_grid(Domain::cube(1, 4.0), &[401])?;
    let g = sample(|x| w.value(x), &grid)?;
    let opts = HopfLaxOptions { method: Method::Auto, refine: true };
    for h in [0.25, 1.0, 4.0] {
        let q = inf_convolution_with(&g, &w, h, &grid, opts)?;
        let err = (0..grid.len())
            .filter(|&i| grid.node(i)[0].abs() <= 2.0)
            .map(|i| (q.values[i] - (1.0 + h) * w.value(&[grid.node(i)[0] / (1.0 + h)])).abs())
            .fold(0.0, f64::max);
        println!("h = {h:<5} max error on |x| <= 2: {err:.2e}");
    }

    let g = PotentialSpec::convex(NormSpec::euclidean(), 4.0, 1.0, 1.0);
    for x in [0.0, 1.0, 2.5] {
        let v = q_pointwise(Datum::Potential(&g), &w, 0.5, &[x, 0.0], DomainKind::Full)?;
        println!("Q_0.5 g({x}, 0) = {v:.10}");
    }
    Ok(())
}
