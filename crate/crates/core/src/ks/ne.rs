use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::function::SampledFunction;
use super::phi::{besov_profile, default_grid, KSProfile, PhiOptions};
use crate::energy::{DiscreteFunction, Extender, ScalingFixedPoint};
use crate::geometry::Fractal;
use crate::{Error, Result};

pub const DEFAULT_TAIL: usize = 3;

/// `sup Phi / min Phi` over the finest tail of the resolved grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeReport {
    pub sup_phi: f64,
    pub tail_min: f64,
    /// `None` when the profile vanishes identically.
    pub ratio: Option<f64>,
    pub degenerate: bool,
    /// Quadrature levels of the resolved entries.
    pub levels_compared: Vec<usize>,
}

pub fn ne_ratio(profile: &KSProfile, tail: usize) -> Result<NeReport> {
    let resolved: Vec<_> = profile.resolved().collect();
    if resolved.len() < 4 || resolved.len() < tail + 1 || tail == 0 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 and more than {tail} resolved radii, got {}",
            resolved.len()
        )));
    }
    let sup_phi = resolved.iter().map(|e| e.phi).fold(0.0, f64::max);
    let tail_min = resolved[resolved.len() - tail..]
        .iter()
        .map(|e| e.phi)
        .fold(f64::INFINITY, f64::min);
    let degenerate = sup_phi == 0.0;
    let ratio = if degenerate {
        None
    } else if tail_min == 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(sup_phi / tail_min)
    };
    Ok(NeReport {
        sup_phi,
        tail_min,
        ratio,
        degenerate,
        levels_compared: resolved.iter().map(|e| e.m).collect(),
    })
}

/// A named member of the standard test suite.
#[derive(Clone, Debug)]
pub struct SuiteFunction {
    pub name: String,
    pub function: SampledFunction,
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub random_extensions: usize,
    pub m_max: usize,
    pub seed: u64,
    pub phi: PhiOptions,
    pub tail: usize,
}

/// The constant function, the ambient coordinates, and `count` extensions
/// of random data on `V_1` tabulated on `V_level`.
pub fn standard_suite(
    fractal: &Fractal,
    fp: &ScalingFixedPoint,
    count: usize,
    level: usize,
    seed: u64,
) -> Result<Vec<SuiteFunction>> {
    let mut suite = vec![SuiteFunction {
        name: "constant".into(),
        function: SampledFunction::Constant(1.0),
    }];
    for d in 0..fractal.ifs().dimension {
        suite.push(SuiteFunction {
            name: format!("coordinate-{d}"),
            function: SampledFunction::Coordinate(d),
        });
    }
    let g1 = fractal.graph(1)?;
    let ext = Extender::from_fixed_point(fractal, fp)?;
    let tables = (0..count)
        .into_par_iter()
        .map(|i| {
            let values = random_values(g1.vertex_count(), seed, i as u64);
            let u = DiscreteFunction::new(1, values)?;
            ext.extend(&u, level.max(1))
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, t) in tables.into_iter().enumerate() {
        suite.push(SuiteFunction {
            name: format!("harmonic-{i:02}"),
            function: SampledFunction::Table(t),
        });
    }
    Ok(suite)
}

/// Uniform values in `[0, 1)` from stream `stream` of `seed`.
pub fn random_values(count: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count).map(|_| rng.gen::<f64>()).collect()
}

/// NE ratios at `m_max` and `m_max + 1` for one function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NeRow {
    pub function: String,
    /// Profile at `m_max`.
    pub profile: KSProfile,
    pub report: NeReport,
    pub refined: NeReport,
    /// `max(a, b) / min(a, b)` of the two ratios; `None` if either is undefined.
    pub drift: Option<f64>,
}

pub fn run_ne_suite(
    fractal: &Fractal,
    suite: &[SuiteFunction],
    opts: &SuiteOptions,
) -> Result<Vec<NeRow>> {
    let grid = default_grid(fractal.ratio(), opts.m_max + 1);
    suite
        .par_iter()
        .map(|f| {
            let coarse = besov_profile(fractal, &f.function, &grid, opts.m_max, &opts.phi)?;
            let fine = besov_profile(fractal, &f.function, &grid, opts.m_max + 1, &opts.phi)?;
            let report = ne_ratio(&coarse, opts.tail)?;
            let refined = ne_ratio(&fine, opts.tail)?;
            let drift = match (report.ratio, refined.ratio) {
                (Some(a), Some(b)) if a.is_finite() && b.is_finite() => Some(a.max(b) / a.min(b)),
                _ => None,
            };
            Ok(NeRow {
                function: f.name.clone(),
                profile: coarse,
                report,
                refined,
                drift,
            })
        })
        .collect()
}
