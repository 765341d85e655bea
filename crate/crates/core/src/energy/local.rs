use nalgebra::{DMatrix, DVector};

use super::form::{Basis, EnergyForm, FormKind, ProfileForm};
use crate::geometry::LevelGraph;
use crate::{Error, Result};

/// Relative subgradient tolerance for the cell problem.
pub const OPTIMALITY_TOL: f64 = 1e-10;
/// Floor on `|x_a - x_b|`, relative to the boundary range, in the weights.
pub const WEIGHT_FLOOR: f64 = 1e-12;
const STEP_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 400;
const MAX_SWEEPS: usize = 20_000;

#[derive(Clone, Debug)]
enum Term {
    Pair { a: usize, b: usize, c: f64 },
    Profile { v: [usize; 3] },
}

/// `min sum_i E(v o F_i)` over `v` on `V_1` with `v` fixed on `V_0`.
///
/// Unknowns are the vertices of `V_1 \ V_0` plus one hidden centre per star
/// term. Every basis is turned into pair terms `c |x_a - x_b|^p` over these
/// unknowns, except profile terms which stay three-point.
#[derive(Clone, Debug)]
pub struct CellProblem {
    p: f64,
    boundary_len: usize,
    n_vertices: usize,
    n_vars: usize,
    terms: Vec<Term>,
    // terms touching each variable
    touching: Vec<Vec<usize>>,
    profile: Option<ProfileForm>,
}

#[derive(Clone, Debug)]
pub struct CellSolution {
    /// Values on the vertex ids of `V_1`.
    pub values: Vec<f64>,
    /// `sum_i E(v o F_i)` at the minimizer.
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl CellProblem {
    pub fn new(form: &EnergyForm, level1: &LevelGraph) -> Self {
        let n_vertices = level1.vertex_count();
        let mut n_vars = n_vertices;
        let mut terms = Vec::new();
        let mut profile = None;
        for cell in level1.cells() {
            match form.kind() {
                FormKind::Linear(lin) => {
                    for (basis, &w) in lin.bases.iter().zip(&lin.weights) {
                        if w == 0.0 {
                            continue;
                        }
                        match basis {
                            Basis::Pairs(pairs) => {
                                for &(x, y) in pairs {
                                    terms.push(Term::Pair {
                                        a: cell[x],
                                        b: cell[y],
                                        c: 2.0 * w,
                                    });
                                }
                            }
                            Basis::Star(members) => {
                                let z = n_vars;
                                n_vars += 1;
                                for &x in members {
                                    terms.push(Term::Pair {
                                        a: cell[x],
                                        b: z,
                                        c: w,
                                    });
                                }
                            }
                        }
                    }
                }
                FormKind::Profile(pf) => {
                    profile = Some(pf.clone());
                    terms.push(Term::Profile {
                        v: [cell[0], cell[1], cell[2]],
                    });
                }
            }
        }
        let mut touching = vec![Vec::new(); n_vars];
        for (t, term) in terms.iter().enumerate() {
            match term {
                Term::Pair { a, b, .. } => {
                    touching[*a].push(t);
                    touching[*b].push(t);
                }
                Term::Profile { v } => {
                    for &x in v {
                        touching[x].push(t);
                    }
                }
            }
        }
        CellProblem {
            p: form.p(),
            boundary_len: level1.boundary_len(),
            n_vertices,
            n_vars,
            terms,
            touching,
            profile,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n_vertices
    }

    pub fn free_count(&self) -> usize {
        self.n_vars - self.boundary_len
    }

    fn term_value(&self, term: &Term, x: &[f64]) -> f64 {
        match term {
            Term::Pair { a, b, c } => c * (x[*a] - x[*b]).abs().powf(self.p),
            Term::Profile { v } => {
                let pf = self
                    .profile
                    .as_ref()
                    .expect("profile terms carry a profile");
                profile_value(pf, [x[v[0]], x[v[1]], x[v[2]]], self.p)
            }
        }
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| self.term_value(t, x)).sum()
    }

    fn profile_gradient(&self, v: &[usize; 3], x: &[f64]) -> [f64; 3] {
        let pf = self
            .profile
            .as_ref()
            .expect("profile terms carry a profile");
        pf.gradient(&[x[v[0]], x[v[1]], x[v[2]]], self.p)
    }

    /// Gradient over all variables, plus for each variable the width of the
    /// subdifferential contributed by pair terms with `|d| <= floor` and the
    /// spread caused by an uncertainty `eta` in the values.
    fn gradient(&self, x: &[f64], floor: f64, eta: f64) -> (Vec<f64>, Vec<f64>) {
        let p = self.p;
        let mut g = vec![0.0; self.n_vars];
        let mut slack = vec![0.0; self.n_vars];
        for term in &self.terms {
            match term {
                Term::Pair { a, b, c } => {
                    let d = x[*a] - x[*b];
                    if d.abs() <= floor {
                        let width = c * p * floor.powf(p - 1.0);
                        slack[*a] += width;
                        slack[*b] += width;
                    } else {
                        let m = d.abs().powf(p - 1.0);
                        let gd = c * p * m * d.signum();
                        g[*a] += gd;
                        g[*b] -= gd;
                        if eta > 0.0 {
                            let spread = c * p * ((d.abs() + eta).powf(p - 1.0) - m);
                            slack[*a] += spread;
                            slack[*b] += spread;
                        }
                    }
                }
                Term::Profile { v } => {
                    let gt = self.profile_gradient(v, x);
                    for k in 0..3 {
                        g[v[k]] += gt[k];
                    }
                }
            }
        }
        (g, slack)
    }

    /// Largest subgradient violation over the free variables.
    fn violation(&self, x: &[f64], floor: f64, eta: f64) -> f64 {
        let (g, slack) = self.gradient(x, floor, eta);
        (self.boundary_len..self.n_vars)
            .map(|i| (g[i].abs() - slack[i]).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Violation relative to the typical gradient size `p F / range`.
    fn residual(&self, x: &[f64], f: f64, range: f64, floor: f64, eta: f64) -> f64 {
        let scale = (self.p * f / range).max(f64::MIN_POSITIVE);
        self.violation(x, floor, eta) / scale
    }

    /// Hessian model restricted to the free variables. Pair terms use the
    /// Newton curvature `p (p-1) |d|^{p-2}` for `p >= 2` and the reweighted
    /// least-squares curvature `p |d|^{p-2}` (a majorizer) for `p < 2`.
    fn hessian(&self, x: &[f64], floor: f64, quadratic: bool) -> DMatrix<f64> {
        let k = self.boundary_len;
        let nf = self.n_vars - k;
        let p = self.p;
        let kappa = if p >= 2.0 { p * (p - 1.0) } else { p };
        let mut h = DMatrix::zeros(nf, nf);
        let add = |i: usize, j: usize, v: f64, h: &mut DMatrix<f64>| {
            if i >= k && j >= k {
                h[(i - k, j - k)] += v;
            }
        };
        for term in &self.terms {
            match term {
                Term::Pair { a, b, c } => {
                    let w = if quadratic {
                        2.0 * c
                    } else {
                        c * kappa * (x[*a] - x[*b]).abs().max(floor).powf(p - 2.0)
                    };
                    add(*a, *a, w, &mut h);
                    add(*b, *b, w, &mut h);
                    add(*a, *b, -w, &mut h);
                    add(*b, *a, -w, &mut h);
                }
                Term::Profile { v } => {
                    if quadratic {
                        for i in 0..3 {
                            for j in 0..3 {
                                let w = if i == j { 4.0 } else { -2.0 };
                                add(v[i], v[j], w, &mut h);
                            }
                        }
                        continue;
                    }
                    // central differences of the analytic gradient
                    let vals = [x[v[0]], x[v[1]], x[v[2]]];
                    let range = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                        - vals.iter().copied().fold(f64::INFINITY, f64::min);
                    let step = 1e-6 * range.max(floor);
                    let pf = self
                        .profile
                        .as_ref()
                        .expect("profile terms carry a profile");
                    let mut block = [[0.0; 3]; 3];
                    for j in 0..3 {
                        let mut hi = vals;
                        let mut lo = vals;
                        hi[j] += step;
                        lo[j] -= step;
                        let gh = pf.gradient(&hi, p);
                        let gl = pf.gradient(&lo, p);
                        for i in 0..3 {
                            block[i][j] = (gh[i] - gl[i]) / (2.0 * step);
                        }
                    }
                    for i in 0..3 {
                        for j in 0..3 {
                            add(v[i], v[j], 0.5 * (block[i][j] + block[j][i]), &mut h);
                        }
                    }
                }
            }
        }
        h
    }

    /// Solves the cell problem for boundary values on `V_0`.
    pub fn solve(&self, boundary: &[f64]) -> Result<CellSolution> {
        let k = self.boundary_len;
        assert_eq!(boundary.len(), k, "boundary length must match V_0");
        let lo = boundary.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = boundary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        let magnitude = lo.abs().max(hi.abs());
        if range <= 16.0 * f64::EPSILON * magnitude || range == 0.0 {
            let mean = (boundary.iter().sum::<f64>() / k as f64).clamp(lo, hi);
            let mut values = vec![mean; self.n_vertices];
            values[..k].copy_from_slice(boundary);
            return Ok(CellSolution {
                values,
                energy: 0.0,
                iterations: 0,
                residual: 0.0,
            });
        }
        // rounding of the values themselves
        let eta = 4.0 * f64::EPSILON * magnitude;
        let floor = (WEIGHT_FLOOR * range).max(eta);
        let mut x = vec![0.0; self.n_vars];
        x[..k].copy_from_slice(boundary);

        // start from the minimizer of the quadratic surrogate
        let mean = boundary.iter().sum::<f64>() / k as f64;
        for xi in &mut x[k..] {
            *xi = mean;
        }
        let nf = self.n_vars - k;
        if nf == 0 {
            let energy = self.objective(&x);
            return Ok(CellSolution {
                values: x,
                energy,
                iterations: 0,
                residual: 0.0,
            });
        }
        let h0 = self.hessian(&x, floor, true);
        let g0 = self.quadratic_gradient(&x);
        if let Some(step) = solve_spd(h0, &g0) {
            for i in 0..nf {
                x[k + i] = (x[k + i] - step[i]).clamp(lo, hi);
            }
        }

        let mut f = self.objective(&x);
        let mut iterations = 0;
        let mut stalled = false;
        while iterations < MAX_NEWTON {
            iterations += 1;
            let (g, _) = self.gradient(&x, 0.0, 0.0);
            let gf = DVector::from_iterator(nf, g[k..].iter().copied());
            let h = self.hessian(&x, floor, false);
            let Some(step) = solve_spd(h, &gf) else {
                stalled = true;
                break;
            };
            let slope = -gf.dot(&step);
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let mut trial = x.clone();
                for i in 0..nf {
                    trial[k + i] -= t * step[i];
                }
                let ft = self.objective(&trial);
                // near the optimum the decrease drops below the rounding of f
                if ft <= f + 1e-4 * t * slope.min(0.0) || (t == 1.0 && ft - f <= 1e-14 * f) {
                    accepted = Some((trial, ft));
                    break;
                }
                t *= 0.5;
            }
            let Some((trial, ft)) = accepted else {
                stalled = true;
                break;
            };
            let moved = step.amax() * t;
            x = trial;
            f = ft;
            // steps below the rounding of the values cannot improve anything
            if moved <= eta || self.residual(&x, f, range, floor, eta) <= 0.01 * OPTIMALITY_TOL {
                break;
            }
        }

        let mut residual = self.residual(&x, f, range, floor, eta);
        if stalled || residual > OPTIMALITY_TOL {
            let sweeps = self.coordinate_descent(&mut x, lo, hi, range);
            iterations += sweeps;
            f = self.objective(&x);
            residual = self.residual(&x, f, range, floor, eta);
            if residual > OPTIMALITY_TOL {
                return Err(Error::NonConvergence {
                    iterations,
                    residual,
                });
            }
        }
        let energy = self.objective(&x);
        x.truncate(self.n_vertices);
        Ok(CellSolution {
            values: x,
            energy,
            iterations,
            residual,
        })
    }

    fn quadratic_gradient(&self, x: &[f64]) -> DVector<f64> {
        let k = self.boundary_len;
        let mut g = vec![0.0; self.n_vars];
        for term in &self.terms {
            let pairs: Vec<(usize, usize, f64)> = match term {
                Term::Pair { a, b, c } => vec![(*a, *b, *c)],
                Term::Profile { v } => {
                    vec![(v[0], v[1], 1.0), (v[0], v[2], 1.0), (v[1], v[2], 1.0)]
                }
            };
            for (a, b, c) in pairs {
                let d = 2.0 * c * (x[a] - x[b]);
                g[a] += d;
                g[b] -= d;
            }
        }
        DVector::from_iterator(self.n_vars - k, g[k..].iter().copied())
    }

    fn partial(&self, x: &[f64], i: usize) -> f64 {
        let p = self.p;
        let mut g = 0.0;
        for &t in &self.touching[i] {
            match &self.terms[t] {
                Term::Pair { a, b, c } => {
                    let d = x[*a] - x[*b];
                    let gd = c * p * d.abs().powf(p - 1.0) * d.signum();
                    g += if *a == i { gd } else { -gd };
                }
                Term::Profile { v } => {
                    let gt = self.profile_gradient(v, x);
                    for k in 0..3 {
                        if v[k] == i {
                            g += gt[k];
                        }
                    }
                }
            }
        }
        g
    }

    /// Exact one-dimensional minimization in each free variable in turn, by
    /// bisection on the monotone partial derivative.
    fn coordinate_descent(&self, x: &mut [f64], lo: f64, hi: f64, range: f64) -> usize {
        for sweep in 1..=MAX_SWEEPS {
            let mut change: f64 = 0.0;
            for i in self.boundary_len..self.n_vars {
                let old = x[i];
                let (mut a, mut b) = (lo, hi);
                for _ in 0..64 {
                    let mid = 0.5 * (a + b);
                    x[i] = mid;
                    if self.partial(x, i) > 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                x[i] = 0.5 * (a + b);
                change = change.max((x[i] - old).abs());
            }
            if change <= STEP_TOL * range {
                return sweep;
            }
        }
        MAX_SWEEPS
    }
}

fn profile_value(pf: &ProfileForm, u: [f64; 3], p: f64) -> f64 {
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range <= 0.0 {
        return 0.0;
    }
    let mid = u[0] + u[1] + u[2] - lo - hi;
    range.powf(p) * pf.shape((mid - lo) / range).0
}

/// Solves `H s = g`, shifting the diagonal until the Cholesky factorization
/// succeeds.
fn solve_spd(h: DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let n = h.nrows();
    let diag_max = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max);
    let mut shift = 0.0;
    for _ in 0..40 {
        let mut m = h.clone();
        for i in 0..n {
            m[(i, i)] += shift;
        }
        if let Some(ch) = m.cholesky() {
            let s = ch.solve(g);
            if s.iter().all(|v| v.is_finite()) {
                return Some(s);
            }
        }
        shift = if shift == 0.0 {
            1e-12 * diag_max.max(f64::MIN_POSITIVE)
        } else {
            shift * 10.0
        };
    }
    None
}
