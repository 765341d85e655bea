use serde::{Deserialize, Serialize};

use super::function::SampledFunction;
use super::phi::{besov_profile, phi_estimate, resolution_level, PhiOptions};
use crate::energy::{rescaled_energy, DiscreteFunction, Extender, ScalingFixedPoint};
use crate::geometry::spatial::PointGrid;
use crate::geometry::Fractal;
use crate::{Error, Result};

/// `u_hat_n(xi)`: mean of `u` over the level-`m` quadrature nodes of the
/// `(n+1)`-cells that contain `xi`, for every `xi` in `V_n`.
pub fn hat_u(
    fractal: &Fractal,
    u: &SampledFunction,
    n: usize,
    m: usize,
) -> Result<DiscreteFunction> {
    if m < n + 3 {
        return Err(Error::Resolution {
            level: m,
            radius: fractal.ratio().powi(n as i32 + 1),
        });
    }
    let nodes = u.node_values(fractal, m)?;
    let gn = fractal.graph(n)?;
    let child = fractal.graph(n + 1)?;
    let per_cell = fractal.n_maps().pow((m - n - 1) as u32);
    let cell_means: Vec<f64> = nodes
        .chunks(per_cell)
        .map(|c| c.iter().sum::<f64>() / per_cell as f64)
        .collect();
    let values = (0..gn.vertex_count())
        .map(|xi| {
            let cells = child.incidence(xi);
            cells.iter().map(|&c| cell_means[c]).sum::<f64>() / cells.len() as f64
        })
        .collect();
    DiscreteFunction::new(n, values)
}

/// `max |ext(a) - ext(b)|^p / (d(a, b)^{p sigma - alpha} E_n^sigma(u))` over
/// vertex pairs of `V_m` with `0 < d(a, b) < c rho`, where `u` is the
/// restriction of `ext` to `V_n`.
pub fn hoelder_check(
    fractal: &Fractal,
    fp: &ScalingFixedPoint,
    sigma: f64,
    ext: &DiscreteFunction,
    n: usize,
    c: f64,
) -> Result<f64> {
    let g = fractal.graph(ext.level)?;
    ext.check_on(&g)?;
    let gn = fractal.graph(n)?;
    let u = ext.restrict(n, &gn)?;
    let energy = rescaled_energy(fractal, &u, fp.p, sigma)?;
    if energy == 0.0 {
        if ext.range() == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Degenerate("boundary data has zero energy".into()));
    }
    let exponent = fp.p * sigma - fractal.alpha();
    let radius = c * fractal.ratio();
    let grid = PointGrid::new(g.points(), radius);
    let mut best: f64 = 0.0;
    for a in 0..g.vertex_count() {
        grid.for_each_within(g.points(), g.point(a), radius, |b, d| {
            if b > a && d > 0.0 {
                let q = (ext.values[a] - ext.values[b]).abs().powf(fp.p) / d.powf(exponent);
                best = best.max(q);
            }
        });
    }
    Ok(best / energy)
}

/// Smallest `n` allowed by `n > ln(c) / ln(rho) + 1`.
pub fn min_convergence_level(fractal: &Fractal, c: f64) -> usize {
    let bound = c.ln() / fractal.ratio().ln() + 1.0;
    (bound.floor() as i64 + 1).max(0) as usize
}

/// `H_p(u_hat_n)` tabulated on `V_level`, with `u_hat_n` computed from
/// quadrature level `n + 3`.
pub fn extend_hat(
    fractal: &Fractal,
    fp: &ScalingFixedPoint,
    u: &SampledFunction,
    n: usize,
    level: usize,
) -> Result<DiscreteFunction> {
    let hat = hat_u(fractal, u, n, n + 3)?;
    Extender::from_fixed_point(fractal, fp)?.extend(&hat, level)
}

/// `sup_{V_m} |H_p(u_hat_n) - u|`.
pub fn uniform_convergence_gap(
    fractal: &Fractal,
    fp: &ScalingFixedPoint,
    u: &SampledFunction,
    n: usize,
    m: usize,
    c: f64,
) -> Result<f64> {
    let n_min = min_convergence_level(fractal, c);
    if n < n_min {
        return Err(Error::InvalidArgument(format!(
            "level n = {n} must be at least {n_min}"
        )));
    }
    if m <= n {
        return Err(Error::InvalidArgument(format!(
            "probe level {m} must exceed n = {n}"
        )));
    }
    let approx = extend_hat(fractal, fp, u, n, m)?;
    let exact = u.vertex_values(fractal, m)?;
    Ok(approx
        .values
        .iter()
        .zip(&exact.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    /// `Phi_u(3 rho^n)`.
    pub phi_u: f64,
    /// `max_r Phi_{H_p(u_hat_n)}(r) / Phi_u(3 rho^n)` over the resolved grid.
    pub max_ratio: Option<f64>,
    /// `E_n^sigma(u_hat_n)`.
    pub energy: f64,
    /// `3^{p sigma + alpha} sup_r Phi_u(r)` over the resolved grid.
    pub energy_bound: f64,
    /// `energy / energy_bound`.
    pub energy_ratio: Option<f64>,
    pub degenerate: bool,
}

/// Compares `Phi` of `H_p(u_hat_n)` with `Phi_u(3 rho^n)` on `grid`, and
/// `E_n^sigma(u_hat_n)` with `3^{p sigma + alpha} [u]^p`.
pub fn thm_bridge_check(
    fractal: &Fractal,
    fp: &ScalingFixedPoint,
    u: &SampledFunction,
    n: usize,
    grid: &[f64],
    m_max: usize,
    opts: &PhiOptions,
) -> Result<BridgeReport> {
    let r_n = 3.0 * fractal.ratio().powi(n as i32);
    if r_n >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "3 rho^{n} = {r_n} is not below 1"
        )));
    }
    let m_n = resolution_level(fractal.ratio(), r_n);
    let phi_u = phi_estimate(fractal, u, r_n, m_n, opts, u64::MAX)?.value;
    let hat = hat_u(fractal, u, n, n + 3)?;
    let energy = rescaled_energy(fractal, &hat, opts.p, opts.sigma)?;
    let ext = Extender::from_fixed_point(fractal, fp)?.extend(&hat, m_max.max(n))?;
    let profile_ext = besov_profile(fractal, &SampledFunction::Table(ext), grid, m_max, opts)?;
    let profile_u = besov_profile(fractal, u, grid, m_max, opts)?;
    let sup_ext = profile_ext.resolved().map(|e| e.phi).fold(0.0, f64::max);
    let seminorm = profile_u.resolved().map(|e| e.phi).fold(0.0, f64::max);
    let energy_bound = 3f64.powf(opts.p * opts.sigma + fractal.alpha()) * seminorm;
    let degenerate = phi_u == 0.0;
    Ok(BridgeReport {
        phi_u,
        max_ratio: (!degenerate).then(|| sup_ext / phi_u),
        energy,
        energy_bound,
        energy_ratio: (energy_bound > 0.0).then(|| energy / energy_bound),
        degenerate,
    })
}

/// Least-squares slope of `ln(gap)` against `n`.
pub fn log_slope(levels: &[usize], gaps: &[f64]) -> f64 {
    let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_geometric_sequence() {
        let gaps: Vec<f64> = (2..6).map(|n| 0.6f64.powi(n)).collect();
        let s = log_slope(&[2, 3, 4, 5], &gaps);
        assert!((s - 0.6f64.ln()).abs() < 1e-12);
    }
}
