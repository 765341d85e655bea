use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::function::{node_rule, SampledFunction};
use crate::geometry::spatial::PointGrid;
use crate::geometry::{Fractal, Point};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Deterministic sum over all level-`m` quadrature nodes.
    CellQuadrature,
    /// Word-sampled nodes with a jackknife standard error.
    MonteCarlo,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::CellQuadrature => "cell",
            Estimator::MonteCarlo => "mc",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cell" | "cell-quadrature" => Ok(Estimator::CellQuadrature),
            "mc" | "monte-carlo" => Ok(Estimator::MonteCarlo),
            other => Err(Error::InvalidArgument(format!(
                "unknown estimator '{other}' (cell|mc)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PhiOptions {
    pub p: f64,
    pub sigma: f64,
    pub estimator: Estimator,
    /// Sample count for the Monte Carlo estimator.
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Smallest level with `ratio^m <= r / 4`.
pub fn resolution_level(ratio: f64, r: f64) -> usize {
    let mut m = 0;
    while ratio.powi(m as i32) > r / 4.0 * (1.0 + 1e-12) {
        m += 1;
    }
    m
}

/// `Phi_u^sigma(r) = r^{-p sigma} int (1 / mu(B(x, r))) int_{B(x, r)} |u(x) - u(y)|^p dmu(y) dmu(x)`
/// at quadrature level `m`. `stream` selects an independent random stream
/// for the Monte Carlo estimator.
pub fn phi_estimate(
    fractal: &Fractal,
    u: &SampledFunction,
    r: f64,
    m: usize,
    opts: &PhiOptions,
    stream: u64,
) -> Result<PhiEstimate> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "radius {r} must lie in (0, 1)"
        )));
    }
    if fractal.ratio().powi(m as i32) > r / 4.0 * (1.0 + 1e-12) {
        return Err(Error::Resolution {
            level: m,
            radius: r,
        });
    }
    let rule = node_rule(fractal, m)?;
    let values = u.node_values(fractal, m)?;
    let scale = r.powf(-opts.p * opts.sigma);
    match opts.estimator {
        Estimator::CellQuadrature => {
            let value = cell_mean(&rule.points, &values, r, opts.p);
            Ok(PhiEstimate {
                value: scale * value,
                stderr: 0.0,
            })
        }
        Estimator::MonteCarlo => {
            if opts.samples < 2 {
                return Err(Error::InvalidArgument(
                    "Monte Carlo needs at least 2 samples".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(stream);
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for _ in 0..opts.samples {
                *counts.entry(rng.gen_range(0..rule.len())).or_default() += 1;
            }
            let points: Vec<Point> = counts.keys().map(|&i| rule.points[i].clone()).collect();
            let vals: Vec<f64> = counts.keys().map(|&i| values[i]).collect();
            let mult: Vec<usize> = counts.values().copied().collect();
            let (mean, se) = sampled_mean(&points, &vals, &mult, r, opts.p);
            Ok(PhiEstimate {
                value: scale * mean,
                stderr: scale * se,
            })
        }
    }
}

/// Mean over nodes of the ball average of `|u(x) - u(y)|^p`; each ball
/// contains its own centre.
fn cell_mean(points: &[Point], values: &[f64], r: f64, p: f64) -> f64 {
    let grid = PointGrid::new(points, r);
    let terms: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let (mut sum, mut count) = (0.0, 0usize);
            grid.for_each_within(points, &points[i], r, |j, _| {
                sum += (values[i] - values[j]).abs().powf(p);
                count += 1;
            });
            sum / count as f64
        })
        .collect();
    terms.iter().sum::<f64>() / terms.len() as f64
}

/// Plug-in estimate over i.i.d. samples, excluding each sample from its own
/// ball, with the exact leave-one-out jackknife standard error. Samples are
/// grouped by node: `mult[x]` samples sit at `points[x]`.
fn sampled_mean(points: &[Point], values: &[f64], mult: &[usize], r: f64, p: f64) -> (f64, f64) {
    let n: usize = mult.iter().sum();
    let grid = PointGrid::new(points, r);
    let stats: Vec<(f64, usize)> = (0..points.len())
        .into_par_iter()
        .map(|x| {
            let (mut sum, mut count) = (0.0, 0usize);
            grid.for_each_within(points, &points[x], r, |v, _| {
                sum += mult[v] as f64 * (values[x] - values[v]).abs().powf(p);
                count += mult[v];
            });
            (sum, count - 1)
        })
        .collect();
    let ratio = |x: usize| stats[x].0 / stats[x].1 as f64;
    let active = |x: usize| stats[x].1 > 0;
    let (mut total, mut n_active) = (0.0, 0usize);
    for (x, &k) in mult.iter().enumerate() {
        if active(x) {
            total += k as f64 * ratio(x);
            n_active += k;
        }
    }
    let mean = total / n_active.max(1) as f64;

    // dropping one sample at y removes its own term and shrinks every ball
    // that contains y
    let leave_out: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|y| {
            let (mut sum, mut count) = (total, n_active);
            if active(y) {
                sum -= ratio(y);
                count -= 1;
            }
            grid.for_each_within(points, &points[y], r, |x, _| {
                let (s, c) = stats[x];
                let others = mult[x] - usize::from(x == y);
                if others == 0 {
                    return;
                }
                if c == 1 {
                    sum -= others as f64 * ratio(x);
                    count -= others;
                } else {
                    let a = (values[x] - values[y]).abs().powf(p);
                    sum += others as f64 * ((s - a) / (c - 1) as f64 - ratio(x));
                }
            });
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect();
    let jack_mean = (0..points.len())
        .map(|y| mult[y] as f64 * leave_out[y])
        .sum::<f64>()
        / n as f64;
    let var = (0..points.len())
        .map(|y| mult[y] as f64 * (leave_out[y] - jack_mean).powi(2))
        .sum::<f64>()
        * (n - 1) as f64
        / n as f64;
    (mean, var.sqrt())
}

/// One radius of a profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub r: f64,
    /// `NaN` when the radius needs a level beyond the cap.
    pub phi: f64,
    pub stderr: f64,
    pub m: usize,
    pub resolved: bool,
}

/// `Phi_u^sigma` on a decreasing radius grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSProfile {
    pub p: f64,
    pub sigma: f64,
    pub estimator: Estimator,
    pub entries: Vec<ProfileEntry>,
}

impl KSProfile {
    pub fn resolved(&self) -> impl Iterator<Item = &ProfileEntry> {
        self.entries.iter().filter(|e| e.resolved)
    }

    pub fn radii(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.r).collect()
    }
}

/// Radii `3 ratio^k`, `k = 1..=k_max`, that lie in `(0, 1)`.
pub fn default_grid(ratio: f64, k_max: usize) -> Vec<f64> {
    (1..=k_max)
        .map(|k| 3.0 * ratio.powi(k as i32))
        .filter(|&r| r < 1.0)
        .collect()
}

/// `n` log-spaced radii from `r_max` down to `r_min`.
pub fn log_grid(r_max: f64, r_min: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![r_max];
    }
    (0..n)
        .map(|i| (r_max.ln() + (r_min.ln() - r_max.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("radius grid is empty".into()));
    }
    if grid.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::InvalidArgument("radii must lie in (0, 1)".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "radius grid must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Profile with per-radius level `m = min(resolution_level(r), ...)`;
/// radii that would need `m > m_max` are kept and flagged unresolved.
pub fn besov_profile(
    fractal: &Fractal,
    u: &SampledFunction,
    grid: &[f64],
    m_max: usize,
    opts: &PhiOptions,
) -> Result<KSProfile> {
    check_grid(grid)?;
    let entries = grid
        .par_iter()
        .enumerate()
        .map(|(idx, &r)| {
            let m = resolution_level(fractal.ratio(), r);
            if m > m_max {
                return Ok(ProfileEntry {
                    r,
                    phi: f64::NAN,
                    stderr: f64::NAN,
                    m,
                    resolved: false,
                });
            }
            let est = phi_estimate(fractal, u, r, m, opts, idx as u64)?;
            Ok(ProfileEntry {
                r,
                phi: est.value,
                stderr: est.stderr,
                m,
                resolved: true,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KSProfile {
        p: opts.p,
        sigma: opts.sigma,
        estimator: opts.estimator,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_levels() {
        assert_eq!(resolution_level(0.5, 0.25), 4);
        assert_eq!(resolution_level(0.5, 0.75), 3);
        assert_eq!(resolution_level(1.0 / 3.0, 1.0 / 3.0), 3);
    }

    #[test]
    fn default_grid_skips_radii_at_least_one() {
        let g = default_grid(0.5, 4);
        assert_eq!(g, vec![0.75, 0.375, 0.1875]);
        let v = default_grid(1.0 / 3.0, 3);
        assert_eq!(v.len(), 2);
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn jackknife_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // 25 distinct sites, some sampled several times
        let sites: Vec<Point> = (0..25)
            .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        let site_values: Vec<f64> = (0..25).map(|_| rng.gen::<f64>()).collect();
        let mult: Vec<usize> = (0..25).map(|i| 1 + (i % 3)).collect();
        let picks: Vec<usize> = (0..25)
            .flat_map(|i| std::iter::repeat_n(i, mult[i]))
            .collect();
        let points: Vec<Point> = picks.iter().map(|&i| sites[i].clone()).collect();
        let values: Vec<f64> = picks.iter().map(|&i| site_values[i]).collect();
        let n = points.len();
        let (r, p) = (0.3, 1.7);
        let plain = |keep: &[usize]| -> f64 {
            let mut terms = Vec::new();
            for &i in keep {
                let (mut s, mut c) = (0.0, 0);
                for &j in keep {
                    if j != i && crate::geometry::distance(&points[i], &points[j]) < r {
                        s += (values[i] - values[j]).abs().powf(p);
                        c += 1;
                    }
                }
                if c > 0 {
                    terms.push(s / c as f64);
                }
            }
            terms.iter().sum::<f64>() / terms.len() as f64
        };
        let all: Vec<usize> = (0..n).collect();
        let loo: Vec<f64> = (0..n)
            .map(|k| plain(&all.iter().copied().filter(|&i| i != k).collect::<Vec<_>>()))
            .collect();
        let nf = n as f64;
        let jm = loo.iter().sum::<f64>() / nf;
        let se = (loo.iter().map(|v| (v - jm).powi(2)).sum::<f64>() * (nf - 1.0) / nf).sqrt();
        let (mean, got) = sampled_mean(&sites, &site_values, &mult, r, p);
        assert!((mean - plain(&all)).abs() < 1e-12);
        assert!((got - se).abs() < 1e-12 * se.max(1.0), "{got} vs {se}");
    }
}
