use super::fixed_point::ScalingFixedPoint;
use super::form::EnergyForm;
use super::function::DiscreteFunction;
use super::local::CellProblem;
use crate::geometry::{Fractal, LevelGraph};
use crate::{Error, Result};

/// `E_n^{(p)}(u)`: ordered sum of `|u(x) - u(y)|^p` over `x, y` in each
/// `n`-cell, so every unordered pair counts twice.
pub fn discrete_energy(graph: &LevelGraph, u: &DiscreteFunction, p: f64) -> Result<f64> {
    u.check_on(graph)?;
    let mut total = 0.0;
    for cell in graph.cells() {
        for (i, &x) in cell.iter().enumerate() {
            for &y in &cell[i + 1..] {
                total += 2.0 * (u.values[x] - u.values[y]).abs().powf(p);
            }
        }
    }
    Ok(total)
}

/// `rho^{-n (p sigma - alpha)} E_n^{(p)}(u)`.
pub fn rescaled_energy(fractal: &Fractal, u: &DiscreteFunction, p: f64, sigma: f64) -> Result<f64> {
    let g = fractal.graph(u.level)?;
    let e = discrete_energy(&g, u, p)?;
    let n = u.level as f64;
    Ok(fractal.ratio().powf(-n * (p * sigma - fractal.alpha())) * e)
}

/// `Lambda E(u) = s^{-1} sum_i E(u o F_i)` for `u` on `V_1`.
pub fn lambda_apply(
    fractal: &Fractal,
    form: &EnergyForm,
    s: f64,
    u: &DiscreteFunction,
) -> Result<f64> {
    if u.level != 1 {
        return Err(Error::LevelMismatch {
            expected: 1,
            actual: u.level,
        });
    }
    lambda_energy(fractal, form, s, u)
}

/// `Lambda^n E(u) = s^{-n} sum_{|w| = n} E(u o F_w)` for `u` on `V_n`.
pub fn lambda_energy(
    fractal: &Fractal,
    form: &EnergyForm,
    s: f64,
    u: &DiscreteFunction,
) -> Result<f64> {
    check_scale(s)?;
    let g = fractal.graph(u.level)?;
    u.check_on(&g)?;
    let mut buf = vec![0.0; g.boundary_len()];
    let mut total = 0.0;
    for cell in g.cells() {
        for (b, &v) in buf.iter_mut().zip(cell) {
            *b = u.values[v];
        }
        total += form.eval(&buf);
    }
    Ok(total * s.powi(-(u.level as i32)))
}

fn check_scale(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "scaling factor s = {s} must be positive"
        )))
    }
}

/// Level-by-level minimizing extension for a fixed form.
#[derive(Debug)]
pub struct Extender<'a> {
    fractal: &'a Fractal,
    form: EnergyForm,
    problem: CellProblem,
}

impl<'a> Extender<'a> {
    pub fn new(fractal: &'a Fractal, form: EnergyForm) -> Result<Self> {
        if form.boundary_len() != fractal.boundary_len() {
            return Err(Error::InvalidArgument(format!(
                "form is defined on {} points but V_0 has {}",
                form.boundary_len(),
                fractal.boundary_len()
            )));
        }
        let g1 = fractal.graph(1)?;
        let problem = CellProblem::new(&form, &g1);
        Ok(Extender {
            fractal,
            form,
            problem,
        })
    }

    pub fn from_fixed_point(fractal: &'a Fractal, fp: &ScalingFixedPoint) -> Result<Self> {
        Self::new(fractal, fp.form.clone())
    }

    pub fn form(&self) -> &EnergyForm {
        &self.form
    }

    /// Extends `u` from `V_{m-1}` to `V_m` by solving one cell problem per
    /// `(m-1)`-cell. New vertices of `V_m` lie in exactly one parent cell.
    pub fn trace_min(&self, u: &DiscreteFunction) -> Result<DiscreteFunction> {
        let parent = self.fractal.graph(u.level)?;
        u.check_on(&parent)?;
        let child = self.fractal.graph(u.level + 1)?;
        let g1 = self.fractal.graph(1)?;
        let n = self.fractal.n_maps();
        let k = self.fractal.boundary_len();
        let mut values = vec![f64::NAN; child.vertex_count()];
        values[..u.len()].copy_from_slice(&u.values);
        let mut boundary = vec![0.0; k];
        for (c, cell) in parent.cells().iter().enumerate() {
            for (b, &v) in boundary.iter_mut().zip(cell) {
                *b = u.values[v];
            }
            let sol = self.problem.solve(&boundary)?;
            for (i, local_cell) in g1.cells().iter().enumerate() {
                let global_cell = &child.cells()[c * n + i];
                for (&local, &global) in local_cell.iter().zip(global_cell) {
                    if local >= k {
                        values[global] = sol.values[local];
                    }
                }
            }
        }
        debug_assert!(values.iter().all(|v| v.is_finite()));
        DiscreteFunction::new(u.level + 1, values)
    }

    /// Applies `trace_min` until level `target`.
    pub fn extend(&self, u: &DiscreteFunction, target: usize) -> Result<DiscreteFunction> {
        if target < u.level {
            return Err(Error::LevelMismatch {
                expected: u.level,
                actual: target,
            });
        }
        let mut current = u.clone();
        while current.level < target {
            current = self.trace_min(&current)?;
        }
        Ok(current)
    }
}

/// Minimizer of `Lambda^m E` over functions on `V_m` that agree with
/// `boundary` on `V_{m-1}`.
pub fn trace_min(
    fractal: &Fractal,
    form: &EnergyForm,
    s: f64,
    boundary: &DiscreteFunction,
) -> Result<DiscreteFunction> {
    check_scale(s)?;
    Extender::new(fractal, form.clone())?.trace_min(boundary)
}

/// `H_p(u)` restricted to `V_target`.
pub fn p_harmonic_extension(
    fractal: &Fractal,
    fp: &ScalingFixedPoint,
    boundary: &DiscreteFunction,
    target: usize,
) -> Result<DiscreteFunction> {
    Extender::from_fixed_point(fractal, fp)?.extend(boundary, target)
}
