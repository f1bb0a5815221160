//! One-dimensional optimal transport: the monotone map between two
//! densities, displacement interpolation, the determinant lemma and the
//! transport proof chain of the Φ-BBL inequality.

use sharpineq::functionals::{normalize, FreeParam, NormalizationProblem, Target};
use sharpineq::grid::{make_grid, Domain};
use sharpineq::hopf_lax::Datum;
use sharpineq::inequalities::normalized_convex;
use sharpineq::norms::{NormSpec, PotentialSpec};
use sharpineq::transport::{
    bbl_transport_check_1d, det_lemma_campaign, displacement_interpolation, monotone_map, ChainGrid, Density1D,
    PhiSpec,
};

fn gaussian(m: f64, s: f64) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
    move |x| (-(x - m) * (x - m) / (2.0 * s * s)).exp()
}

fn main() -> sharpineq::Result<()> {
    let mu = Density1D::from_fn_normalized(gaussian(0.0, 1.0), make_grid(Domain::cube(1, 8.0), &[2049])?)?;
    let nu = Density1D::from_fn_normalized(gaussian(1.0, 0.5), make_grid(Domain::cube(1, 12.0), &[2049])?)?;
    let map = monotone_map(&mu, &nu)?;
    let mid = map.values.len() / 2;
    println!("T(0) = {:.6} (expected 1), monotone: {}", map.values[mid], map.monotone);
    let pushed: f64 = mu.density.iter().zip(&map.values).map(|(d, t)| d * t).sum::<f64>() * mu.grid.spacing[0];
    println!("E_nu[x] = {:.8}, E_mu[T] = {pushed:.8}", nu.expect(|x| x));
    for t in [0.25, 0.5, 0.75] {
        let m = displacement_interpolation(&mu, &nu, t)?;
        println!("t = {t}: mean {:.6}, cell mass {:.12}", m.expect(|x| x), m.cell_mass());
    }

    let campaign = det_lemma_campaign(2000, 1, &[2, 3, 5], &|n| vec![1.0 / n as f64, -1.0])?;
    println!("determinant lemma: {} draws, {} violations, min slack {:.2e}", campaign.draws, campaign.violations, campaign.min_slack);

    let w = normalized_convex(&NormSpec::euclidean(), 2.0, 1, 4.0)?;
    let family = PotentialSpec::convex(NormSpec::euclidean(), 2.0, 3.0, 1.0).with_shift(vec![0.5]);
    let problem = NormalizationProblem::new(family, FreeParam::Offset, Target::InvPower(4.0), 1);
    let g = problem.with_value(normalize(&problem)?);
    let chain = bbl_transport_check_1d(Datum::Potential(&g), &w, 4.0, 0.5, PhiSpec::Power(0.5), ChainGrid::default())?;
    for (name, v) in &chain.slacks {
        println!("slack {name}: {v:.3e}");
    }
    Ok(())
}
