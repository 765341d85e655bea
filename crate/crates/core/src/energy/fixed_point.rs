use nalgebra::{DMatrix, DVector};

use super::form::{Basis, EnergyForm, FormFamily, FormKind};
use super::local::CellProblem;
use crate::geometry::Fractal;
use crate::{Error, Result};

/// Which form family the solver may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyChoice {
    /// Pairwise for `p = 2`; otherwise the first of pairwise, star, profile
    /// whose fit residual is within tolerance.
    Auto,
    Only(FormFamily),
}

#[derive(Clone, Debug)]
pub struct FixedPointOptions {
    pub family: FamilyChoice,
    pub max_iterations: usize,
    /// Stop when the normalized parameter change drops below this.
    pub tolerance: f64,
    /// Largest relative misfit accepted for pairwise and star fits.
    pub fit_tolerance: f64,
    /// Largest relative off-knot misfit accepted for the profile family.
    pub profile_tolerance: f64,
    pub profile_knots: usize,
    /// Initial basis weights; all ones by default.
    pub initial_weights: Option<Vec<f64>>,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            family: FamilyChoice::Auto,
            max_iterations: 500,
            tolerance: 1e-10,
            fit_tolerance: 1e-8,
            profile_tolerance: 1e-6,
            profile_knots: 513,
            initial_weights: None,
        }
    }
}

/// Solution `(s, E)` of `T E = s E`.
#[derive(Clone, Debug)]
pub struct ScalingFixedPoint {
    pub p: f64,
    pub s: f64,
    pub sigma_sharp: f64,
    pub form: EnergyForm,
    pub iterations: usize,
    /// Normalized parameter change of the last iteration.
    pub residual: f64,
    /// Relative misfit of the traced energy within the family.
    pub fit_residual: f64,
}

impl ScalingFixedPoint {
    pub fn family(&self) -> FormFamily {
        self.form.family()
    }

    /// `rho^{-(p sigma - alpha)}`, the per-level energy renormalization.
    pub fn level_factor(&self) -> f64 {
        1.0 / self.s
    }
}

/// `(log_rho s + alpha) / p`.
pub fn sigma_p_sharp(s: f64, ratio: f64, alpha: f64, p: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "scaling factor s = {s} must lie in (0, 1)"
        )));
    }
    let sigma = (s.ln() / ratio.ln() + alpha) / p;
    if sigma <= alpha / p {
        return Err(Error::InvalidArgument(format!(
            "sigma = {sigma} does not exceed alpha / p = {}",
            alpha / p
        )));
    }
    Ok(sigma)
}

/// Traced energy `T E(u) = min { sum_i E(v o F_i) : v = u on V_0 }`.
pub fn trace_energy(fractal: &Fractal, form: &EnergyForm, u: &[f64]) -> Result<f64> {
    let g1 = fractal.graph(1)?;
    Ok(CellProblem::new(form, &g1).solve(u)?.energy)
}

pub fn fixed_point_solve(
    fractal: &Fractal,
    p: f64,
    opts: &FixedPointOptions,
) -> Result<ScalingFixedPoint> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "exponent p = {p} must lie in (1, inf)"
        )));
    }
    match opts.family {
        FamilyChoice::Only(family) => solve_family(fractal, p, family, opts),
        FamilyChoice::Auto => {
            let mut candidates = vec![FormFamily::Pairwise];
            if p != 2.0 {
                candidates.push(FormFamily::Star);
                if profile_applicable(fractal) {
                    candidates.push(FormFamily::Profile);
                }
            }
            let mut last_err = None;
            for family in candidates {
                match solve_family(fractal, p, family, opts) {
                    Ok(fp) => return Ok(fp),
                    Err(e @ Error::ModelMismatch { .. }) => last_err = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last_err.expect("at least one family tried"))
        }
    }
}

fn profile_applicable(fractal: &Fractal) -> bool {
    fractal.boundary_len() == 3 && fractal.symmetry().is_full_symmetric_on_boundary()
}

fn solve_family(
    fractal: &Fractal,
    p: f64,
    family: FormFamily,
    opts: &FixedPointOptions,
) -> Result<ScalingFixedPoint> {
    let k = fractal.boundary_len();
    let initial = match family {
        FormFamily::Pairwise => {
            let classes = fractal.symmetry().pair_orbits();
            let w = opts
                .initial_weights
                .clone()
                .unwrap_or_else(|| vec![1.0; classes.len()]);
            EnergyForm::pairwise(p, classes, w, k)?
        }
        FormFamily::Star => {
            if !star_applicable(fractal) {
                return Err(Error::ModelMismatch {
                    family: family.to_string(),
                    residual: f64::INFINITY,
                });
            }
            let w = opts.initial_weights.as_ref().map_or(1.0, |w| w[0]);
            EnergyForm::star(p, w, k)?
        }
        FormFamily::Profile => {
            if !profile_applicable(fractal) {
                return Err(Error::InvalidArgument(
                    "the profile family needs a three-point boundary with full symmetry".into(),
                ));
            }
            let knots = profile_knots(opts.profile_knots);
            let values = knots.iter().map(|&t| pairwise_profile(t, p)).collect();
            EnergyForm::profile(p, knots, values)?
        }
    };
    match family {
        FormFamily::Profile => iterate_profile(fractal, initial, opts),
        _ => iterate_linear(fractal, initial, opts),
    }
}

/// The star basis needs `V_0` to be a single orbit under the group.
fn star_applicable(fractal: &Fractal) -> bool {
    let sym = fractal.symmetry();
    (0..fractal.boundary_len()).all(|i| (0..sym.order()).any(|g| sym.boundary_perm(g)[0] == i))
}

/// Graded knots on `[0, 1/2]`, denser near ties where the profile is least
/// smooth.
pub fn profile_knots(count: usize) -> Vec<f64> {
    let count = count.max(3);
    (0..count)
        .map(|j| {
            let s = j as f64 / (count - 1) as f64;
            0.5 * s * (2.0 - s)
        })
        .map(|t| 0.5 - t)
        .rev()
        .collect()
}

/// Profile of the unit all-pairs form, `2 (t^p + (1-t)^p + 1)`.
fn pairwise_profile(t: f64, p: f64) -> f64 {
    2.0 * (t.powf(p) + (1.0 - t).powf(p) + 1.0)
}

/// Boundary probes for the least-squares trace fit: indicators, sums of two
/// indicators, and a few generic configurations.
pub fn fit_probes(k: usize) -> Vec<Vec<f64>> {
    let mut probes = Vec::new();
    for x in 0..k {
        let mut u = vec![0.0; k];
        u[x] = 1.0;
        probes.push(u);
    }
    for x in 0..k {
        for y in x + 1..k {
            let mut u = vec![0.0; k];
            u[x] = 1.0;
            u[y] = 1.0;
            probes.push(u);
        }
    }
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    for j in 1..=4 {
        probes.push(
            (0..k)
                .map(|i| ((j * k + i + 1) as f64 * golden).fract())
                .collect(),
        );
    }
    probes
}

fn iterate_linear(
    fractal: &Fractal,
    initial: EnergyForm,
    opts: &FixedPointOptions,
) -> Result<ScalingFixedPoint> {
    let p = initial.p();
    let FormKind::Linear(lin) = initial.kind().clone() else {
        unreachable!("linear family")
    };
    let probes = fit_probes(fractal.boundary_len());
    let design = DMatrix::from_fn(probes.len(), lin.bases.len(), |r, c| {
        lin.bases[c].eval(&probes[r], p)
    });
    let svd = design.clone().svd(true, true);
    let canonical = initial.weights()[0];
    let mut form = initial;
    let mut residual = f64::INFINITY;
    let mut fit_residual = 0.0;
    let g1 = fractal.graph(1)?;
    for it in 1..=opts.max_iterations {
        let prob = CellProblem::new(&form, &g1);
        let traced = probes
            .iter()
            .map(|u| prob.solve(u).map(|sol| sol.energy))
            .collect::<Result<Vec<f64>>>()?;
        let b = DVector::from_vec(traced);
        let w = svd
            .solve(&b, 1e-14)
            .map_err(|e| Error::Degenerate(format!("trace fit failed: {e}")))?;
        fit_residual = (&design * &w - &b).norm() / b.norm();
        if w[0] <= 0.0 {
            return Err(Error::ModelMismatch {
                family: form.family().to_string(),
                residual: fit_residual,
            });
        }
        let s = w[0] / canonical;
        let next: Vec<f64> = w.iter().map(|v| (v / s).max(0.0)).collect();
        let old = form.weights();
        residual = next
            .iter()
            .zip(&old)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / canonical;
        form = form.with_weights(next)?;
        if fit_residual > opts.fit_tolerance && it >= 3 {
            return Err(Error::ModelMismatch {
                family: form.family().to_string(),
                residual: fit_residual,
            });
        }
        if residual < opts.tolerance {
            if fit_residual > opts.fit_tolerance {
                return Err(Error::ModelMismatch {
                    family: form.family().to_string(),
                    residual: fit_residual,
                });
            }
            return finish(fractal, form, s, it, residual, fit_residual);
        }
    }
    if fit_residual > opts.fit_tolerance {
        return Err(Error::ModelMismatch {
            family: form.family().to_string(),
            residual: fit_residual,
        });
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        residual,
    })
}

fn iterate_profile(
    fractal: &Fractal,
    initial: EnergyForm,
    opts: &FixedPointOptions,
) -> Result<ScalingFixedPoint> {
    let g1 = fractal.graph(1)?;
    let knots = match initial.kind() {
        FormKind::Profile(pf) => pf.knots().to_vec(),
        FormKind::Linear(_) => unreachable!("profile family"),
    };
    let anchor = initial.weights()[0];
    let mut form = initial;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let prob = CellProblem::new(&form, &g1);
        let traced = knots
            .iter()
            .map(|&t| prob.solve(&[0.0, t, 1.0]).map(|sol| sol.energy))
            .collect::<Result<Vec<f64>>>()?;
        let s = traced[0] / anchor;
        let next: Vec<f64> = traced.iter().map(|v| v / s).collect();
        residual = next
            .iter()
            .zip(form.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / anchor;
        form = form.with_weights(next)?;
        if residual < opts.tolerance {
            // misfit between knots
            let prob = CellProblem::new(&form, &g1);
            let mut fit_residual: f64 = 0.0;
            for w in knots.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                let u = [0.0, t, 1.0];
                let traced = prob.solve(&u)?.energy / s;
                let own = form.eval(&u);
                fit_residual = fit_residual.max((traced - own).abs() / own);
            }
            if fit_residual > opts.profile_tolerance {
                return Err(Error::ModelMismatch {
                    family: form.family().to_string(),
                    residual: fit_residual,
                });
            }
            return finish(fractal, form, s, it, residual, fit_residual);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        residual,
    })
}

fn finish(
    fractal: &Fractal,
    form: EnergyForm,
    s: f64,
    iterations: usize,
    residual: f64,
    fit_residual: f64,
) -> Result<ScalingFixedPoint> {
    let p = form.p();
    let sigma_sharp = sigma_p_sharp(s, fractal.ratio(), fractal.alpha(), p)?;
    Ok(ScalingFixedPoint {
        p,
        s,
        sigma_sharp,
        form,
        iterations,
        residual,
        fit_residual,
    })
}

/// Basis of a linear form, for reporting.
pub fn describe_bases(form: &EnergyForm) -> Vec<String> {
    match form.kind() {
        FormKind::Linear(lin) => lin
            .bases
            .iter()
            .map(|b| match b {
                Basis::Pairs(pairs) => format!("pairs{pairs:?}"),
                Basis::Star(m) => format!("star{m:?}"),
            })
            .collect(),
        FormKind::Profile(pf) => vec![format!("profile[{} knots]", pf.knots().len())],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knots_are_graded_and_span_half() {
        let k = profile_knots(9);
        assert_eq!(k[0], 0.0);
        assert!((k[8] - 0.5).abs() < 1e-15);
        assert!(k.windows(2).all(|w| w[0] < w[1]));
        assert!(k[1] - k[0] < k[8] - k[7]);
    }

    #[test]
    fn sigma_round_trip() {
        let (ratio, alpha, p) = (0.5, 3f64.ln() / 2f64.ln(), 2.5);
        let s = 0.41;
        let sigma = sigma_p_sharp(s, ratio, alpha, p).unwrap();
        let back = ratio.powf(p * sigma - alpha);
        assert!((back - s).abs() < 1e-15);
        assert!(sigma_p_sharp(1.2, ratio, alpha, p).is_err());
    }
}
