use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::spline::ClampedSpline;
use crate::{Error, Result};

/// Families in which the renormalization fixed point is sought.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormFamily {
    /// `sum_c w_c sum_{(x,y) in c} |u(x) - u(y)|^p` over symmetry classes of
    /// boundary pairs, both orders counted.
    Pairwise,
    /// `w min_z sum_x |u(x) - z|^p`: a pairwise form with one hidden centre.
    Star,
    /// `R^p f(t)` for three-point boundaries with full symmetry, where
    /// `R = max - min`, `t = (mid - min) / R` and `f` is tabulated.
    Profile,
}

impl fmt::Display for FormFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FormFamily::Pairwise => "pairwise",
            FormFamily::Star => "star",
            FormFamily::Profile => "profile",
        };
        f.write_str(s)
    }
}

impl FromStr for FormFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairwise" => Ok(FormFamily::Pairwise),
            "star" => Ok(FormFamily::Star),
            "profile" => Ok(FormFamily::Profile),
            other => Err(Error::InvalidArgument(format!(
                "unknown form family '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    /// Unordered pairs of one symmetry class.
    Pairs(Vec<(usize, usize)>),
    /// Boundary indices joined to a common free centre.
    Star(Vec<usize>),
}

impl Basis {
    /// Unit-weight value of this basis term.
    pub fn eval(&self, u: &[f64], p: f64) -> f64 {
        match self {
            Basis::Pairs(pairs) => pairs
                .iter()
                .map(|&(x, y)| 2.0 * (u[x] - u[y]).abs().powf(p))
                .sum(),
            Basis::Star(members) => {
                let vals: Vec<f64> = members.iter().map(|&i| u[i]).collect();
                let z = star_centre(&vals, p);
                vals.iter().map(|v| (v - z).abs().powf(p)).sum()
            }
        }
    }
}

/// Minimizer of `sum_i |v_i - z|^p` (the p-mean), found by bisection on the
/// monotone derivative; exact mean for `p = 2`.
pub fn star_centre(values: &[f64], p: f64) -> f64 {
    if (p - 2.0).abs() < 1e-15 {
        return values.iter().sum::<f64>() / values.len() as f64;
    }
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slope = |z: f64| -> f64 {
        values
            .iter()
            .map(|v| {
                let d = z - v;
                d.signum() * d.abs().powf(p - 1.0)
            })
            .sum()
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Symmetric p-energy on functions on `V_0` that is a nonnegative
/// combination of basis terms.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearForm {
    pub bases: Vec<Basis>,
    pub weights: Vec<f64>,
}

/// Tabulated profile `f` on `[0, 1/2]` with `f(t) = f(1 - t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileForm {
    spline: ClampedSpline,
}

impl ProfileForm {
    /// Builds the profile from knot values. The end slopes make `R^p f(t)`
    /// continuously differentiable across ties (`f'(0) = -p f(0) / 2`) and
    /// across the reflection `t -> 1 - t` (`f'(1/2) = 0`).
    pub fn new(knots: Vec<f64>, values: Vec<f64>, p: f64) -> Self {
        let start = -0.5 * p * values[0];
        ProfileForm {
            spline: ClampedSpline::new(knots, values, start, 0.0),
        }
    }

    pub fn knots(&self) -> &[f64] {
        self.spline.knots()
    }

    pub fn values(&self) -> &[f64] {
        self.spline.values()
    }

    pub fn shape(&self, t: f64) -> (f64, f64) {
        if t <= 0.5 {
            self.spline.eval(t)
        } else {
            let (v, d) = self.spline.eval(1.0 - t);
            (v, -d)
        }
    }

    fn eval(&self, u: &[f64], p: f64) -> f64 {
        let (lo, mid, hi) = sorted3(u);
        let range = u[hi] - u[lo];
        if range <= 0.0 {
            return 0.0;
        }
        range.powf(p) * self.shape((u[mid] - u[lo]) / range).0
    }

    /// Gradient of `R^p f(t)` with respect to the three boundary values.
    pub(crate) fn gradient(&self, u: &[f64], p: f64) -> [f64; 3] {
        let (lo, mid, hi) = sorted3(u);
        let range = u[hi] - u[lo];
        let mut g = [0.0; 3];
        if range <= 0.0 {
            return g;
        }
        let t = (u[mid] - u[lo]) / range;
        let (f, df) = self.shape(t);
        let scale = range.powf(p - 1.0);
        g[lo] = scale * (-p * f - (1.0 - t) * df);
        g[mid] = scale * df;
        g[hi] = scale * (p * f - t * df);
        g
    }
}

fn sorted3(u: &[f64]) -> (usize, usize, usize) {
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| {
        u[a].partial_cmp(&u[b])
            .expect("finite values")
            .then(a.cmp(&b))
    });
    (idx[0], idx[1], idx[2])
}

#[derive(Clone, Debug, PartialEq)]
pub enum FormKind {
    Linear(LinearForm),
    Profile(ProfileForm),
}

/// A p-energy on functions on `V_0`.
///
/// Every form here is invariant under the symmetry group, satisfies
/// `E(u + c) = E(u)` and `E(lambda u) = |lambda|^p E(u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyForm {
    p: f64,
    boundary_len: usize,
    family: FormFamily,
    kind: FormKind,
}

impl EnergyForm {
    pub fn pairwise(
        p: f64,
        classes: Vec<Vec<(usize, usize)>>,
        weights: Vec<f64>,
        boundary_len: usize,
    ) -> Result<Self> {
        check_exponent(p)?;
        check_weights(&weights, classes.len())?;
        Ok(EnergyForm {
            p,
            boundary_len,
            family: FormFamily::Pairwise,
            kind: FormKind::Linear(LinearForm {
                bases: classes.into_iter().map(Basis::Pairs).collect(),
                weights,
            }),
        })
    }

    pub fn star(p: f64, weight: f64, boundary_len: usize) -> Result<Self> {
        check_exponent(p)?;
        check_weights(&[weight], 1)?;
        Ok(EnergyForm {
            p,
            boundary_len,
            family: FormFamily::Star,
            kind: FormKind::Linear(LinearForm {
                bases: vec![Basis::Star((0..boundary_len).collect())],
                weights: vec![weight],
            }),
        })
    }

    pub fn profile(p: f64, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_exponent(p)?;
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(Error::InvalidArgument(
                "profile needs matching knots and values".into(),
            ));
        }
        if knots[0] != 0.0 || (knots[knots.len() - 1] - 0.5).abs() > 1e-15 {
            return Err(Error::InvalidArgument(
                "profile knots must span [0, 1/2]".into(),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument(
                "profile values must be positive".into(),
            ));
        }
        Ok(EnergyForm {
            p,
            boundary_len: 3,
            family: FormFamily::Profile,
            kind: FormKind::Profile(ProfileForm::new(knots, values, p)),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn family(&self) -> FormFamily {
        self.family
    }

    pub fn boundary_len(&self) -> usize {
        self.boundary_len
    }

    pub fn kind(&self) -> &FormKind {
        &self.kind
    }

    /// Parameter vector: basis weights, or profile knot values.
    pub fn weights(&self) -> Vec<f64> {
        match &self.kind {
            FormKind::Linear(l) => l.weights.clone(),
            FormKind::Profile(pf) => pf.values().to_vec(),
        }
    }

    /// Same structure with a new parameter vector.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        match &self.kind {
            FormKind::Linear(l) => {
                check_weights(&weights, l.bases.len())?;
                Ok(EnergyForm {
                    kind: FormKind::Linear(LinearForm {
                        bases: l.bases.clone(),
                        weights,
                    }),
                    ..self.clone()
                })
            }
            FormKind::Profile(pf) => EnergyForm::profile(self.p, pf.knots().to_vec(), weights),
        }
    }

    /// Weight of the unordered pair `{x, y}` for pairwise forms.
    pub fn pair_weight(&self, x: usize, y: usize) -> Option<f64> {
        let key = (x.min(y), x.max(y));
        match &self.kind {
            FormKind::Linear(l) if self.family == FormFamily::Pairwise => {
                l.bases.iter().zip(&l.weights).find_map(|(b, &w)| match b {
                    Basis::Pairs(pairs) if pairs.contains(&key) => Some(w),
                    _ => None,
                })
            }
            _ => None,
        }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.boundary_len);
        match &self.kind {
            FormKind::Linear(l) => l
                .bases
                .iter()
                .zip(&l.weights)
                .filter(|(_, &w)| w != 0.0)
                .map(|(b, &w)| w * b.eval(u, self.p))
                .sum(),
            FormKind::Profile(pf) => pf.eval(u, self.p),
        }
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "exponent p = {p} must lie in (1, inf)"
        )))
    }
}

fn check_weights(weights: &[f64], expected: usize) -> Result<()> {
    if weights.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "expected {expected} weights, got {}",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::InvalidArgument(
            "weights must be nonnegative with at least one positive".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_triangle(p: f64) -> EnergyForm {
        EnergyForm::pairwise(p, vec![vec![(0, 1), (0, 2), (1, 2)]], vec![1.0], 3).unwrap()
    }

    #[test]
    fn ordered_pair_convention() {
        let e = unit_triangle(2.0);
        assert_eq!(e.eval(&[0.0, 1.0, 1.0]), 4.0);
        assert_eq!(e.pair_weight(2, 0), Some(1.0));
    }

    #[test]
    fn star_centre_is_mean_for_p2_and_balanced_otherwise() {
        assert_eq!(star_centre(&[0.0, 1.0, 5.0], 2.0), 2.0);
        let z = star_centre(&[1.0, 0.0, 0.0, 0.0], 1.5);
        // derivative of |1-z|^1.5 + 3|z|^1.5 vanishes at z = 1/10
        assert!((z - 0.1).abs() < 1e-14, "{z}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(EnergyForm::star(1.0, 1.0, 4).is_err());
        assert!(EnergyForm::star(2.0, 0.0, 4).is_err());
        assert!(EnergyForm::pairwise(2.0, vec![vec![(0, 1)]], vec![-1.0], 2).is_err());
    }

    #[test]
    fn profile_of_pairwise_shape_matches_pairwise() {
        let p = 3.0;
        let knots: Vec<f64> = (0..=400).map(|i| 0.5 * i as f64 / 400.0).collect();
        let values: Vec<f64> = knots
            .iter()
            .map(|t| 2.0 * (t.powf(p) + (1.0 - t).powf(p) + 1.0))
            .collect();
        let prof = EnergyForm::profile(p, knots, values).unwrap();
        let pair = unit_triangle(p);
        for u in [[0.3, -1.0, 0.9], [2.0, 2.0, 0.5], [0.0, 0.25, 1.0]] {
            let (a, b) = (prof.eval(&u), pair.eval(&u));
            assert!((a - b).abs() < 1e-9 * b, "{u:?}: {a} vs {b}");
        }
    }

    #[test]
    fn profile_gradient_matches_finite_differences() {
        let p = 1.5;
        let knots: Vec<f64> = (0..=100)
            .map(|i| 0.5 * (i as f64 / 100.0).powi(2))
            .collect();
        let values: Vec<f64> = knots
            .iter()
            .map(|t| 2.0 * (t.powf(p) + (1.0 - t).powf(p) + 1.0))
            .collect();
        let form = EnergyForm::profile(p, knots, values).unwrap();
        let FormKind::Profile(pf) = form.kind() else {
            unreachable!()
        };
        let u = [0.2, 0.9, -0.4];
        let g = pf.gradient(&u, p);
        for i in 0..3 {
            let h = 1e-6;
            let mut a = u;
            let mut b = u;
            a[i] += h;
            b[i] -= h;
            let fd = (form.eval(&a) - form.eval(&b)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "component {i}: {fd} vs {}", g[i]);
        }
    }

    proptest! {
        #[test]
        fn homogeneity_and_translation(
            u in proptest::collection::vec(-3.0f64..3.0, 4),
            lambda in -4.0f64..4.0,
            c in -10.0f64..10.0,
            p in 1.2f64..4.0,
        ) {
            let forms = [
                EnergyForm::star(p, 0.7, 4).unwrap(),
                EnergyForm::pairwise(p, vec![vec![(0, 1), (1, 2), (2, 3), (0, 3)], vec![(0, 2), (1, 3)]], vec![1.0, 0.4], 4).unwrap(),
            ];
            for e in &forms {
                let base = e.eval(&u);
                let moved: Vec<f64> = u.iter().map(|x| lambda * x + c).collect();
                let expect = lambda.abs().powf(p) * base;
                prop_assert!((e.eval(&moved) - expect).abs() <= 1e-9 * (1.0 + expect));
            }
        }
    }
}
