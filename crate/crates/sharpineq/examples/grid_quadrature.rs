//! Samples a smooth function on a box, integrates it with the trapezoid rule
//! at three resolutions and differentiates it by finite differences.

use sharpineq::grid::{gradient_fd, integrate, make_grid, sample, Domain};

fn main() -> sharpineq::Result<()> {
    let f = |x: &[f64]| x[0].exp() * x[1].cos();
    let exact = (1f64.exp() - (-1f64).exp()) * 2.0 * 1f64.sin();
    println!("{:>6}  {:>20}  {:>10}", "nodes", "integral", "error");
    for nodes in [17, 33, 65] {
        let grid = make_grid(Domain::cube(2, 1.0), &[nodes, nodes])?;
        let u = sample(f, &grid)?;
        let v = integrate(&u)?;
        println!("{nodes:>6}  {v:>20.15}  {:>10.2e}", (v - exact).abs());
    }

    let grid = make_grid(Domain::cube(2, 1.0), &[65, 65])?;
    let u = sample(f, &grid)?;
    let d = gradient_fd(&u);
    let centre = grid.flat_index(&[32, 32]);
    println!("gradient at the origin: ({:.6}, {:.6})", d[0].values[centre], d[1].values[centre]);
    Ok(())
}
