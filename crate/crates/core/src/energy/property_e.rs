use super::extension::rescaled_energy;
use super::fixed_point::ScalingFixedPoint;
use super::function::DiscreteFunction;
use crate::geometry::Fractal;
use crate::Result;

/// Rescaled energies of the restrictions of a function on `V_n`.
#[derive(Clone, Debug)]
pub struct PropertyEReport {
    /// `E_j^sigma(u|_{V_j})` for `j = 0..=n`.
    pub energies: Vec<f64>,
    /// `max_j E_j / E_n`, or 1 when every energy vanishes.
    pub ratio: f64,
    /// Smallest `C` with `E_0 <= C E_n`, or 1 when every energy vanishes.
    pub witness: f64,
}

pub fn property_e_report(
    fractal: &Fractal,
    u: &DiscreteFunction,
    fp: &ScalingFixedPoint,
    sigma: f64,
) -> Result<PropertyEReport> {
    let mut energies = Vec::with_capacity(u.level + 1);
    for j in 0..=u.level {
        let g = fractal.graph(j)?;
        let restricted = u.restrict(j, &g)?;
        energies.push(rescaled_energy(fractal, &restricted, fp.p, sigma)?);
    }
    let last = *energies.last().expect("level 0 always present");
    let max = energies.iter().copied().fold(0.0, f64::max);
    let (ratio, witness) = if max == 0.0 {
        (1.0, 1.0)
    } else {
        (max / last, energies[0] / last)
    };
    Ok(PropertyEReport {
        energies,
        ratio,
        witness,
    })
}
