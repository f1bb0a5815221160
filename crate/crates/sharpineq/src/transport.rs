//! One-dimensional optimal transport: densities with CDFs, monotone
//! (quantile) maps, Monge–Ampère residuals, displacement interpolation,
//! the determinant lemma, and the transport chain for the 1D BBL inequality.

use crate::error::{Error, Result};
use crate::grid::quad::{integrate, Tolerance};
use crate::grid::{make_grid, Domain, Grid};
use crate::hopf_lax::{q_pointwise, Datum};
use crate::norms::{Field, PotentialSpec};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Probability density sampled on a 1D grid with its distribution function.
/// Masses are kept per cell so that both tails stay resolved; densities
/// built from a closure keep it for exact partial integrals.
#[derive(Clone)]
pub struct Density1D {
    pub grid: Grid,
    pub density: Vec<f64>,
    /// `F(xᵢ)`, from 0 to 1.
    pub cdf: Vec<f64>,
    /// `1 − F(xᵢ)` summed from the right.
    pub sf: Vec<f64>,
    cells: Vec<f64>,
    exact: Option<(DensityFn, f64)>,
}

impl std::fmt::Debug for Density1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Density1D")
            .field("grid", &self.grid)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

fn check_line(grid: &Grid) -> Result<()> {
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid("densities live on 1D grids".into()));
    }
    Ok(())
}

fn check_samples(v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidInput("density must be finite and non-negative".into()));
    }
    Ok(())
}

fn cell_tol() -> Tolerance {
    Tolerance::new(1e-300, 1e-13)
}

/// Hermite cubic for the mass of `[x_j, x_j + r·dx]` given the cell mass and
/// end densities, with Fritsch–Carlson limiting.
fn cell_partial(mass: f64, d0: f64, d1: f64, dx: f64, r: f64) -> f64 {
    if mass <= 0.0 {
        return 0.0;
    }
    let sec = mass / dx;
    let (mut m0, mut m1) = (d0, d1);
    let (a, b) = (m0 / sec, m1 / sec);
    let s = a * a + b * b;
    if s > 9.0 {
        let tau = 3.0 / s.sqrt();
        m0 = tau * a * sec;
        m1 = tau * b * sec;
    }
    let (r2, r3) = (r * r, r * r * r);
    (r3 - 2.0 * r2 + r) * dx * m0 + (-2.0 * r3 + 3.0 * r2) * mass + (r3 - r2) * dx * m1
}

impl Density1D {
    /// Trapezoid cell masses; the samples must integrate to 1 within 1e−10.
    pub fn from_values(grid: Grid, density: Vec<f64>) -> Result<Self> {
        let (grid, density, cells) = Self::trapezoid(grid, density)?;
        let mass: f64 = cells.iter().sum();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::Normalization(format!("density integrates to {mass}")));
        }
        Ok(Self::assemble(grid, density, cells, None, mass))
    }

    /// Like [`Self::from_values`] after rescaling to unit mass.
    pub fn normalized(grid: Grid, density: Vec<f64>) -> Result<Self> {
        let (grid, density, cells) = Self::trapezoid(grid, density)?;
        let mass: f64 = cells.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::Normalization("zero mass".into()));
        }
        Ok(Self::assemble(grid, density, cells, None, mass))
    }

    fn trapezoid(grid: Grid, density: Vec<f64>) -> Result<(Grid, Vec<f64>, Vec<f64>)> {
        check_line(&grid)?;
        if density.len() != grid.len() {
            return Err(Error::InvalidGrid("value count does not match grid".into()));
        }
        check_samples(&density)?;
        let dx = grid.spacing[0];
        let cells = density.windows(2).map(|w| 0.5 * dx * (w[0] + w[1])).collect();
        Ok((grid, density, cells))
    }

    /// Samples `f` and integrates each cell adaptively; the mass on the box
    /// must be 1 within 1e−10.
    pub fn from_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F, grid: Grid) -> Result<Self> {
        let (f, grid, density, cells) = Self::exact_cells(Arc::new(f), grid)?;
        let mass: f64 = cells.iter().sum();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::Normalization(format!("density integrates to {mass} on the box")));
        }
        Ok(Self::assemble(grid, density, cells, Some(f), mass))
    }

    /// Like [`Self::from_fn`], conditioned on the box.
    pub fn from_fn_normalized<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F, grid: Grid) -> Result<Self> {
        let (f, grid, density, cells) = Self::exact_cells(Arc::new(f), grid)?;
        let mass: f64 = cells.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::Normalization("zero mass on the box".into()));
        }
        Ok(Self::assemble(grid, density, cells, Some(f), mass))
    }

    #[allow(clippy::type_complexity)]
    fn exact_cells(f: DensityFn, grid: Grid) -> Result<(DensityFn, Grid, Vec<f64>, Vec<f64>)> {
        check_line(&grid)?;
        let nodes = grid.axis_nodes(0);
        let density: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
        check_samples(&density)?;
        let cells: Vec<f64> = (0..nodes.len() - 1)
            .into_par_iter()
            .map(|i| integrate(|x| f(x), nodes[i], nodes[i + 1], cell_tol()).value)
            .collect();
        Ok((f, grid, density, cells))
    }

    fn assemble(grid: Grid, mut density: Vec<f64>, mut cells: Vec<f64>, f: Option<DensityFn>, mass: f64) -> Self {
        density.iter_mut().for_each(|v| *v /= mass);
        cells.iter_mut().for_each(|v| *v /= mass);
        let n = density.len();
        let mut cdf = vec![0.0; n];
        let mut sf = vec![0.0; n];
        for i in 0..n - 1 {
            cdf[i + 1] = cdf[i] + cells[i];
        }
        for i in (0..n - 1).rev() {
            sf[i] = sf[i + 1] + cells[i];
        }
        cdf[n - 1] = 1.0;
        sf[0] = 1.0;
        Density1D { grid, density, cdf, sf, cells, exact: f.map(|f| (f, mass)) }
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.grid.axis_nodes(0)
    }

    /// Density at any point: the closure when present, else linear
    /// interpolation; zero off the box.
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, dx) = (self.grid.coord(0, 0), self.grid.spacing[0]);
        let n = self.density.len();
        let t = (x - lo) / dx;
        if t < -1e-12 || t > (n - 1) as f64 + 1e-12 {
            return 0.0;
        }
        if let Some((f, m)) = &self.exact {
            return f(x) / m;
        }
        let t = t.clamp(0.0, (n - 1) as f64);
        let j = (t.floor() as usize).min(n - 2);
        let r = t - j as f64;
        self.density[j] * (1.0 - r) + self.density[j + 1] * r
    }

    /// Trapezoid mass of the samples.
    pub fn mass(&self) -> f64 {
        let dx = self.grid.spacing[0];
        let n = self.density.len();
        dx * (self.density.iter().sum::<f64>() - 0.5 * (self.density[0] + self.density[n - 1]))
    }

    /// Total of the cell masses, which the CDF is built from.
    pub fn cell_mass(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// `∫ H dμ` by the trapezoid rule on the samples.
    pub fn expect<H: Fn(f64) -> f64>(&self, h: H) -> f64 {
        let dx = self.grid.spacing[0];
        let nodes = self.nodes();
        let n = nodes.len();
        let mut s = 0.0;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            s += w * h(nodes[i]) * self.density[i];
        }
        s * dx
    }

    fn cell_of(&self, y: f64) -> usize {
        let n = self.density.len();
        (((y - self.grid.coord(0, 0)) / self.grid.spacing[0]).floor().max(0.0) as usize).min(n - 2)
    }

    /// Mass of `[x_j, y]` inside cell `j`.
    fn partial(&self, j: usize, y: f64) -> f64 {
        let x0 = self.grid.coord(0, j);
        let dx = self.grid.spacing[0];
        if let Some((f, m)) = &self.exact {
            return integrate(|x| f(x), x0, y, cell_tol()).value / m;
        }
        cell_partial(self.cells[j], self.density[j], self.density[j + 1], dx, (y - x0) / dx)
    }

    /// `F(y)`: exact partial integral when a closure is kept, monotone cubic
    /// interpolation otherwise.
    pub fn cdf_at(&self, y: f64) -> f64 {
        let nodes = self.nodes();
        if y <= nodes[0] {
            return 0.0;
        }
        if y >= nodes[nodes.len() - 1] {
            return 1.0;
        }
        let j = self.cell_of(y);
        self.cdf[j] + self.partial(j, y)
    }

    /// Point of cell `j` whose partial mass equals `target`.
    fn solve_cell(&self, j: usize, target: f64) -> f64 {
        let x0 = self.grid.coord(0, j);
        let dx = self.grid.spacing[0];
        let (d0, d1, mass) = (self.density[j], self.density[j + 1], self.cells[j]);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if cell_partial(mass, d0, d1, dx, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut y = x0 + 0.5 * (lo + hi) * dx;
        if let Some((f, m)) = &self.exact {
            for _ in 0..8 {
                let fy = f(y) / m;
                if !(fy > 0.0) {
                    break;
                }
                let next = (y - (self.partial(j, y) - target) / fy).clamp(x0, x0 + dx);
                let done = (next - y).abs() <= 1e-16 * (1.0 + y.abs());
                y = next;
                if done {
                    break;
                }
            }
        }
        y
    }

    /// Quantile `F^{−1}(u)`.
    pub fn quantile(&self, u: f64) -> f64 {
        if u > 0.5 {
            return self.upper_quantile(1.0 - u);
        }
        let nodes = self.nodes();
        if u <= 0.0 {
            let j = self.cdf.iter().position(|&c| c > 0.0).unwrap_or(1);
            return nodes[j - 1];
        }
        let j = self.cdf.partition_point(|&c| c < u);
        if self.cdf[j] == u {
            return nodes[j];
        }
        self.solve_cell(j - 1, u - self.cdf[j - 1])
    }

    /// Point with upper-tail mass `v`, i.e. `F^{−1}(1 − v)` without the
    /// cancellation in `1 − v`.
    pub fn upper_quantile(&self, v: f64) -> f64 {
        let nodes = self.nodes();
        let n = nodes.len();
        if v <= 0.0 {
            let j = self.sf.iter().rposition(|&c| c > 0.0).unwrap_or(n - 2);
            return nodes[j + 1];
        }
        if v >= 1.0 {
            return self.quantile(0.0);
        }
        // sf is nonincreasing: first index with sf ≤ v
        let j = self.sf.partition_point(|&c| c > v);
        if self.sf[j] == v {
            return nodes[j];
        }
        self.solve_cell(j - 1, self.sf[j - 1] - v)
    }
}

/// Values of a monotone map at the source nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportMap1D {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub monotone: bool,
}

impl TransportMap1D {
    /// Central differences in the interior, one-sided at the ends.
    pub fn derivative(&self) -> Vec<f64> {
        let n = self.values.len();
        let dx = self.grid.spacing[0];
        (0..n)
            .map(|i| {
                if i == 0 {
                    (self.values[1] - self.values[0]) / dx
                } else if i == n - 1 {
                    (self.values[n - 1] - self.values[n - 2]) / dx
                } else {
                    (self.values[i + 1] - self.values[i - 1]) / (2.0 * dx)
                }
            })
            .collect()
    }
}

/// `T = F_ν^{−1} ∘ F_μ` at the nodes of `μ`.
pub fn monotone_map(mu: &Density1D, nu: &Density1D) -> Result<TransportMap1D> {
    if nu.cells.iter().filter(|&&m| m > 0.0).count() < 2 {
        return Err(Error::Transport("target measure is atomic on this grid".into()));
    }
    let values: Vec<f64> = (0..mu.cdf.len())
        .into_par_iter()
        .map(|i| if mu.cdf[i] <= 0.5 { nu.quantile(mu.cdf[i]) } else { nu.upper_quantile(mu.sf[i]) })
        .collect();
    let monotone = values.windows(2).all(|w| w[1] >= w[0]);
    Ok(TransportMap1D { grid: mu.grid.clone(), values, monotone })
}

/// `Σ w_i |f(x_i) − g(T(x_i)) T′(x_i)|` over interior nodes where `f > 0`,
/// `T′` by central differences.
pub fn monge_ampere_residual(mu: &Density1D, nu: &Density1D, t: &TransportMap1D) -> Result<f64> {
    let d = t.derivative();
    let n = t.values.len();
    let dx = mu.grid.spacing[0];
    let mut acc = 0.0;
    for i in 1..n - 1 {
        if mu.density[i] <= 0.0 {
            continue;
        }
        if !(d[i] > 0.0) {
            return Err(Error::Transport(format!("map is not increasing at node {i}")));
        }
        acc += dx * (mu.density[i] - nu.eval(t.values[i]) * d[i]).abs();
    }
    Ok(acc)
}

/// `μ_t = ((1−t)Id + tT)#μ` sampled on a uniform grid over the image, with
/// its CDF transported from `μ`.
pub fn displacement_interpolation(mu: &Density1D, nu: &Density1D, t: f64) -> Result<Density1D> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, 1]")));
    }
    let map = monotone_map(mu, nu)?;
    if t == 0.0 {
        return Ok(mu.clone());
    }
    let x = mu.nodes();
    let n = x.len();
    let s: Vec<f64> = (0..n).map(|i| (1.0 - t) * x[i] + t * map.values[i]).collect();
    let ds: Vec<f64> = map.derivative().iter().map(|d| (1.0 - t) + t * d).collect();
    let rho: Vec<f64> = (0..n).map(|i| if ds[i] > 0.0 { mu.density[i] / ds[i] } else { 0.0 }).collect();
    let (lo, hi) = (s[0], s[n - 1]);
    if !(hi > lo) {
        return Err(Error::Transport("interpolated measure collapses to a point".into()));
    }
    let grid = make_grid(Domain::full(vec![0.5 * (lo + hi)], vec![0.5 * (hi - lo)]), &[n])?;
    let z = grid.axis_nodes(0);
    let mut density = vec![0.0; n];
    let mut below = vec![0.0; n];
    let mut above = vec![0.0; n];
    let mut j = 0usize;
    for (k, &zk) in z.iter().enumerate() {
        while j + 2 < n && s[j + 1] <= zk {
            j += 1;
        }
        let w = s[j + 1] - s[j];
        let r = if w > 0.0 { ((zk - s[j]) / w).clamp(0.0, 1.0) } else { 0.0 };
        density[k] = rho[j] * (1.0 - r) + rho[j + 1] * r;
        let part = cell_partial(mu.cells[j], rho[j], rho[j + 1], w, r);
        below[k] = mu.cdf[j] + part;
        above[k] = mu.sf[j + 1] + (mu.cells[j] - part);
    }
    let cells: Vec<f64> = (0..n - 1)
        .map(|k| if below[k + 1] <= 0.5 { below[k + 1] - below[k] } else { above[k] - above[k + 1] }.max(0.0))
        .collect();
    let mass: f64 = cells.iter().sum();
    if (mass - 1.0).abs() > 1e-10 {
        return Err(Error::Transport(format!("interpolated measure has mass {mass}")));
    }
    Ok(Density1D::assemble(grid, density, cells, None, mass))
}

/// Slack of the determinant lemma: `1 − nk + k tr H − det^k H` for
/// `k ∈ (0, 1/n]`, and `det^k H − (1 − nk + k tr H)` for `k < 0`.
pub fn det_lemma_slack(h: &DMatrix<f64>, k: f64) -> Result<f64> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(Error::InvalidInput("square matrix required".into()));
    }
    let asym = (h - h.transpose()).abs().max();
    if asym > 1e-12 * h.abs().max().max(1.0) {
        return Err(Error::NotSpd);
    }
    let nf = n as f64;
    if !(k < 0.0 || (k > 0.0 && k <= 1.0 / nf + 1e-15)) {
        return Err(Error::InvalidInput(format!("k = {k} outside (0, 1/n] and (−∞, 0)")));
    }
    let eig = SymmetricEigen::new(h.clone());
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NotSpd);
    }
    let logdet: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
    let lhs = (k * logdet).exp();
    let rhs = 1.0 - nf * k + k * h.trace();
    Ok(if k > 0.0 { rhs - lhs } else { lhs - rhs })
}

/// True when the lemma holds with slack at least `−1e−12` (relative to the
/// magnitude of both sides).
pub fn det_lemma_check(h: &DMatrix<f64>, k: f64) -> Result<bool> {
    let s = det_lemma_slack(h, k)?;
    let scale = 1.0 + (k * h.trace()).abs();
    Ok(s >= -1e-12 * scale)
}

/// Random SPD matrix `Q diag(λ) Qᵀ` with log-uniform eigenvalues in
/// `[e^{−3}, e^{3}]` and a Haar-like orthogonal `Q`.
pub fn random_spd<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
    let q = a.qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| (rng.gen::<f64>() * 6.0 - 3.0).exp()));
    let h = &q * d * q.transpose();
    (&h + h.transpose()) * 0.5
}

/// Outcome of a determinant-lemma fuzzing campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetCampaign {
    pub draws: usize,
    pub violations: usize,
    pub min_slack: f64,
}

/// Fuzzes the lemma over `draws` random SPD matrices per `(n, k)` pair;
/// `k_of(n)` lists the exponents to try for dimension `n`. Each draw gets its
/// own stream of a seeded generator.
pub fn det_lemma_campaign(draws: usize, seed: u64, dims: &[usize], k_of: &(dyn Fn(usize) -> Vec<f64> + Sync)) -> Result<DetCampaign> {
    let results: Vec<Result<(usize, usize, f64)>> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(d as u64);
            let n = dims[d % dims.len()];
            let h = random_spd(n, &mut rng);
            let mut count = 0;
            let mut bad = 0;
            let mut min_s = f64::INFINITY;
            for k in k_of(n) {
                let s = det_lemma_slack(&h, k)?;
                count += 1;
                if !det_lemma_check(&h, k)? {
                    bad += 1;
                }
                min_s = min_s.min(s);
            }
            Ok((count, bad, min_s))
        })
        .collect();
    let mut out = DetCampaign { draws: 0, violations: 0, min_slack: f64::INFINITY };
    for r in results {
        let (c, b, m) = r?;
        out.draws += c;
        out.violations += b;
        out.min_slack = out.min_slack.min(m);
    }
    Ok(out)
}

/// `Φ` in the `Φ`-weighted BBL inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhiSpec {
    Identity,
    /// `x^β`, `β ∈ (0, 1]`.
    Power(f64),
}

impl PhiSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            PhiSpec::Identity => x,
            PhiSpec::Power(b) => x.powf(b),
        }
    }

    pub fn validate(&self, a: f64) -> Result<()> {
        match *self {
            PhiSpec::Identity => Ok(()),
            PhiSpec::Power(b) if b > 0.0 && b <= 1.0 && b < a => Ok(()),
            PhiSpec::Power(b) => Err(Error::InvalidInput(format!("Φ = x^{b} must have 0 < β ≤ 1 and β < a"))),
        }
    }
}

/// Step values `I₀ … I₅` of the transport proof and their consecutive slacks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportChain {
    pub steps: Vec<(String, f64)>,
    pub slacks: Vec<(String, f64)>,
    /// `I₀ − I₅`.
    pub gap: f64,
}

/// Settings for [`bbl_transport_check_1d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainGrid {
    pub half_width: f64,
    pub nodes: usize,
}

impl Default for ChainGrid {
    fn default() -> Self {
        ChainGrid { half_width: 100.0, nodes: 8193 }
    }
}

/// Rebuilds the transport proof of the 1D `Φ`-BBL inequality with the
/// quantile map in place of the Brenier map:
/// `I₀ = ∫Φ(H)H^{−a}`, `H = s Q_{t/s}^W(g)(·/s)`;
/// `I₁` after the change of variables `y = sx + tT(x)`;
/// `I₂` with `H(sx+tT) ≤ s g + t W(T)`;
/// `I₃` by concavity of `Φ`; `I₄` by the determinant inequality;
/// `I₅ = s∫Φ(g)g^{−a} + t∫Φ(W)W^{−a}` by the pushforward identity.
/// `T′` is replaced by the Monge–Ampère value `(W(T)/g)^a`.
pub fn bbl_transport_check_1d(
    g: Datum<'_>,
    w: &PotentialSpec,
    a: f64,
    s: f64,
    phi: PhiSpec,
    grid: ChainGrid,
) -> Result<TransportChain> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidInput(format!("s = {s} outside (0, 1]")));
    }
    phi.validate(a)?;
    let t = 1.0 - s;
    let gf = g.field();
    let tol = Tolerance::new(1e-14, 1e-12);
    let mg = integrate(|x| gf.value(&[x]).powf(-a), f64::NEG_INFINITY, f64::INFINITY, tol).value;
    let mw = integrate(|x| w.value(&[x]).powf(-a), f64::NEG_INFINITY, f64::INFINITY, tol).value;
    if (mg - 1.0).abs() > 1e-8 || (mw - 1.0).abs() > 1e-8 {
        return Err(Error::Normalization(format!("∫g^(−a) = {mg}, ∫W^(−a) = {mw}")));
    }
    let line = make_grid(Domain::cube(1, grid.half_width), &[grid.nodes])?;
    let x = line.axis_nodes(0);
    let n = x.len();
    let dx = line.spacing[0];
    let wts: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * dx } else { dx }).collect();
    let gv: Vec<f64> = x.iter().map(|&v| gf.value(&[v])).collect();
    let ww: Vec<f64> = x.iter().map(|&v| w.value(&[v])).collect();
    let tmap = if t == 0.0 {
        x.clone()
    } else {
        let gc: Arc<dyn Field> = match g {
            Datum::Potential(p) => Arc::new(p.clone()),
            Datum::Field(f) => Arc::new(FieldCopy::new(f, &x)),
        };
        let mu = Density1D::from_fn_normalized(move |y| gc.value(&[y]).powf(-a), line.clone())?;
        let wc = w.clone();
        let nu = Density1D::from_fn_normalized(move |y| wc.value(&[y]).powf(-a), line.clone())?;
        monotone_map(&mu, &nu)?.values
    };
    let wt: Vec<f64> = tmap.iter().map(|&y| w.value(&[y])).collect();
    let d: Vec<f64> = (0..n).map(|i| (wt[i] / gv[i]).powf(a)).collect();
    let hh = |y: f64| -> Result<f64> {
        if t == 0.0 {
            return Ok(gf.value(&[y]));
        }
        Ok(s * q_pointwise(g, w, t / s, &[y / s], crate::grid::DomainKind::Full)?)
    };
    let f = |v: f64| phi.eval(v) * v.powf(-a);
    let h0: Vec<f64> = x.par_iter().map(|&y| hh(y)).collect::<Result<_>>()?;
    let h1: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let b = s * gv[i] + t * wt[i];
            Ok(hh(s * x[i] + t * tmap[i])?.min(b))
        })
        .collect::<Result<_>>()?;
    let mut i = [0.0f64; 6];
    for k in 0..n {
        let b = s * gv[k] + t * wt[k];
        let mix = s * phi.eval(gv[k]) + t * phi.eval(wt[k]);
        let jac = s + t * d[k];
        i[0] += wts[k] * f(h0[k]);
        i[1] += wts[k] * f(h1[k]) * jac;
        i[2] += wts[k] * f(b) * jac;
        i[3] += wts[k] * mix * (s + t * d[k].powf(1.0 / a)).powf(-a) * jac * gv[k].powf(-a);
        i[4] += wts[k] * mix * gv[k].powf(-a);
        i[5] += wts[k] * (s * f(gv[k]) + t * f(ww[k]));
    }
    let names = ["I0", "I1", "I2", "I3", "I4", "I5"];
    let steps = names.iter().zip(i).map(|(nm, v)| (nm.to_string(), v)).collect();
    let slacks = (0..5).map(|k| (format!("{}-{}", names[k], names[k + 1]), i[k] - i[k + 1])).collect();
    Ok(TransportChain { steps, slacks, gap: i[0] - i[5] })
}

/// Owned snapshot of a borrowed field, tabulated for the density closure.
struct FieldCopy {
    x0: f64,
    dx: f64,
    vals: Vec<f64>,
    grads: Vec<f64>,
}

impl FieldCopy {
    fn new(f: &dyn Field, x: &[f64]) -> Self {
        let n = x.len();
        let dx = x[1] - x[0];
        let m = 8 * (n - 1) + 1;
        let fine: Vec<f64> = (0..m).map(|k| x[0] + k as f64 * dx / 8.0).collect();
        let vals = fine.iter().map(|&v| f.value(&[v])).collect();
        let grads = fine
            .iter()
            .map(|&v| {
                let mut g = [0.0];
                f.gradient(&[v], &mut g);
                g[0]
            })
            .collect();
        FieldCopy { x0: x[0], dx: dx / 8.0, vals, grads }
    }
}

impl Field for FieldCopy {
    fn value(&self, x: &[f64]) -> f64 {
        let m = self.vals.len();
        let t = ((x[0] - self.x0) / self.dx).clamp(0.0, (m - 1) as f64);
        let j = (t.floor() as usize).min(m - 2);
        let r = t - j as f64;
        let (t2, t3) = (r * r, r * r * r);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.vals[j]
            + (t3 - 2.0 * t2 + r) * self.dx * self.grads[j]
            + (-2.0 * t3 + 3.0 * t2) * self.vals[j + 1]
            + (t3 - t2) * self.dx * self.grads[j + 1]
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let h = 1e-6 * self.dx;
        out[0] = (self.value(&[x[0] + h]) - self.value(&[x[0] - h])) / (2.0 * h);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::NormSpec;
    use std::f64::consts::PI;

    fn line(lo: f64, hi: f64, n: usize) -> Grid {
        make_grid(Domain::full(vec![0.5 * (lo + hi)], vec![0.5 * (hi - lo)]), &[n]).unwrap()
    }

    fn gaussian(m: f64) -> impl Fn(f64) -> f64 + Send + Sync {
        move |x| (-(x - m) * (x - m) / 2.0).exp() / (2.0 * PI).sqrt()
    }

    fn trap(x: &[f64], v: &[f64]) -> f64 {
        let dx = x[1] - x[0];
        let n = v.len();
        dx * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1]))
    }

    #[test]
    fn identity_map_for_equal_measures() {
        let mu = Density1D::from_fn_normalized(gaussian(0.0), line(-10.0, 10.0, 1025)).unwrap();
        let t = monotone_map(&mu, &mu).unwrap();
        assert!(t.monotone);
        for (x, y) in mu.nodes().iter().zip(&t.values) {
            assert!((x - y).abs() < 1e-9, "{x} {y}");
        }
        let r = monge_ampere_residual(&mu, &mu, &t).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn uniform_stretch() {
        let mu = Density1D::from_fn(|_| 1.0, line(0.0, 1.0, 257)).unwrap();
        let nu = Density1D::from_fn(|_| 0.5, line(0.0, 2.0, 257)).unwrap();
        let t = monotone_map(&mu, &nu).unwrap();
        for (x, y) in mu.nodes().iter().zip(&t.values) {
            assert!((2.0 * x - y).abs() < 1e-12);
        }
        assert!(monge_ampere_residual(&mu, &nu, &t).unwrap() <= 1e-10);
        let half = displacement_interpolation(&mu, &nu, 0.5).unwrap();
        let z = half.nodes();
        assert!(z[0].abs() < 1e-14 && (z[z.len() - 1] - 1.5).abs() < 1e-12);
        for v in &half.density {
            assert!((v - 2.0 / 3.0).abs() < 1e-10);
        }
        assert!((half.mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_shift() {
        let g = line(-12.0, 12.0, 2049);
        let mu = Density1D::from_fn_normalized(gaussian(0.0), g.clone()).unwrap();
        let nu = Density1D::from_fn_normalized(gaussian(1.0), g).unwrap();
        let t = monotone_map(&mu, &nu).unwrap();
        assert!(t.monotone);
        for (x, y) in mu.nodes().iter().zip(&t.values) {
            if x.abs() < 5.0 {
                assert!((y - x - 1.0).abs() < 1e-6, "{x} {y}");
            }
        }
        assert!(monge_ampere_residual(&mu, &nu, &t).unwrap() <= 1e-3);
    }

    #[test]
    fn pushforward_moments() {
        let g = line(-12.0, 12.0, 2049);
        let mu = Density1D::from_fn_normalized(gaussian(0.0), g.clone()).unwrap();
        let nu = Density1D::from_fn_normalized(|x: f64| gaussian(0.0)((x - 0.5) / 1.5) / 1.5, g).unwrap();
        let t = monotone_map(&mu, &nu).unwrap();
        let x = mu.nodes();
        let hs: [fn(f64) -> f64; 4] = [|_| 1.0, |x| x, |x| x * x, f64::cos];
        for h in hs {
            let lhs: Vec<f64> = (0..x.len()).map(|i| h(t.values[i]) * mu.density[i]).collect();
            let want = nu.expect(h);
            assert!((trap(&x, &lhs) - want).abs() < 1e-6, "{} {}", trap(&x, &lhs), want);
        }
    }

    #[test]
    fn interpolation_endpoints_and_mass() {
        let g = line(-12.0, 12.0, 2049);
        let mu = Density1D::from_fn_normalized(gaussian(0.0), g.clone()).unwrap();
        let nu = Density1D::from_fn_normalized(gaussian(2.0), g).unwrap();
        let m0 = displacement_interpolation(&mu, &nu, 0.0).unwrap();
        assert_eq!(m0.density, mu.density);
        let m1 = displacement_interpolation(&mu, &nu, 1.0).unwrap();
        assert!((m1.expect(|x| x) - nu.expect(|x| x)).abs() < 1e-8);
        for k in 1..10 {
            let m = displacement_interpolation(&mu, &nu, k as f64 / 10.0).unwrap();
            assert!((m.mass() - 1.0).abs() < 1e-8);
            assert!((m.expect(|x| x) - 0.2 * k as f64).abs() < 1e-6);
        }
        assert!(displacement_interpolation(&mu, &nu, 1.5).is_err());
    }

    #[test]
    fn atomic_target_rejected() {
        let mu = Density1D::from_fn(|_| 1.0, line(0.0, 1.0, 65)).unwrap();
        let nu = Density1D::from_values(line(0.0, 1.0, 3), vec![0.0, 2.0, 0.0]);
        let nu = nu.unwrap();
        assert!(monotone_map(&mu, &nu).is_ok());
        let spike = Density1D::from_fn_normalized(|x: f64| if x < 1.0 / 64.0 { 1.0 } else { 0.0 }, line(0.0, 1.0, 65)).unwrap();
        assert!(matches!(monotone_map(&mu, &spike), Err(Error::Transport(_))));
    }

    #[test]
    fn normalization_enforced() {
        assert!(matches!(Density1D::from_fn(|_| 2.0, line(0.0, 1.0, 9)), Err(Error::Normalization(_))));
        assert!(Density1D::from_values(line(0.0, 1.0, 3), vec![1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn det_lemma_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        for k in [1.0 / 3.0, 0.1, -0.5, -3.0] {
            assert!(det_lemma_slack(&id, k).unwrap().abs() < 1e-15);
            assert!(det_lemma_check(&id, k).unwrap());
        }
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
        assert!((det_lemma_slack(&h, 0.5).unwrap() - 0.5).abs() < 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(det_lemma_check(&bad, 0.5), Err(Error::NotSpd));
        assert!(matches!(det_lemma_check(&id, 0.5), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn det_lemma_fuzz() {
        let c = det_lemma_campaign(10_000, 7, &[1, 2, 3, 4, 5, 6], &|n| vec![1.0 / n as f64, -1.0 / (n as f64 + 1.0)]).unwrap();
        assert_eq!(c.draws, 20_000);
        assert_eq!(c.violations, 0);
    }

    fn normalized_quadratic(scale: f64) -> PotentialSpec {
        // ∫(σx²/2 + c)^{-4} = c^{-7/2} √(2/σ) · 5π/16
        let k = (2.0 / scale).sqrt() * 5.0 * PI / 16.0;
        let c = k.powf(1.0 / 3.5);
        PotentialSpec::convex(NormSpec::euclidean(), 2.0, scale, c)
    }

    #[test]
    fn chain_equality_for_matching_pair() {
        let w = normalized_quadratic(2.0);
        for s in [0.3, 0.7] {
            let c = bbl_transport_check_1d(Datum::Potential(&w), &w, 4.0, s, PhiSpec::Power(0.5), ChainGrid::default()).unwrap();
            for (name, v) in &c.slacks {
                assert!(v.abs() <= 1e-6, "{name} {v}");
            }
        }
    }

    #[test]
    fn chain_slacks_nonnegative_for_perturbed_pair() {
        let w = normalized_quadratic(2.0);
        let g = normalized_quadratic(3.1).with_shift(vec![0.4]);
        for phi in [PhiSpec::Identity, PhiSpec::Power(0.5)] {
            let c = bbl_transport_check_1d(Datum::Potential(&g), &w, 4.0, 0.6, phi, ChainGrid::default()).unwrap();
            for (name, v) in &c.slacks {
                assert!(*v >= -1e-8, "{name} {v}");
            }
            assert!(c.gap > 1e-4);
        }
    }

    #[test]
    fn chain_degenerate_at_s_one() {
        let w = normalized_quadratic(2.0);
        let g = normalized_quadratic(3.1);
        let c = bbl_transport_check_1d(Datum::Potential(&g), &w, 4.0, 1.0, PhiSpec::Identity, ChainGrid::default()).unwrap();
        assert!(c.gap.abs() < 1e-12);
        let bad = w.clone().with_offset(w.offset * 1.1);
        assert!(matches!(
            bbl_transport_check_1d(Datum::Potential(&bad), &w, 4.0, 0.5, PhiSpec::Identity, ChainGrid::default()),
            Err(Error::Normalization(_))
        ));
    }
}
