use std::fmt;
use std::sync::Arc;

use crate::energy::DiscreteFunction;
use crate::geometry::{quadrature_nodes, Fractal, QuadratureRule};
use crate::{Error, Result};

/// A function on the fractal that can be read at quadrature nodes and
/// vertices.
/// Shared closed-form function of the ambient coordinates.
pub type Closure = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum SampledFunction {
    /// Vertex values on `V_L`; readable at levels up to `L`.
    Table(DiscreteFunction),
    /// Restriction of the ambient coordinate with this index.
    Coordinate(usize),
    Constant(f64),
    /// Any closed-form expression of the ambient coordinates.
    Closure(Closure),
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampledFunction::Table(t) => write!(f, "Table(level {})", t.level),
            SampledFunction::Coordinate(i) => write!(f, "Coordinate({i})"),
            SampledFunction::Constant(c) => write!(f, "Constant({c})"),
            SampledFunction::Closure(_) => f.write_str("Closure"),
        }
    }
}

impl SampledFunction {
    pub fn closure(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        SampledFunction::Closure(Arc::new(f))
    }

    /// Finest level at which the function can be read, if limited.
    pub fn max_level(&self) -> Option<usize> {
        match self {
            SampledFunction::Table(t) => Some(t.level),
            _ => None,
        }
    }

    pub fn eval_point(&self, x: &[f64]) -> Option<f64> {
        match self {
            SampledFunction::Table(_) => None,
            SampledFunction::Coordinate(i) => Some(x[*i]),
            SampledFunction::Constant(c) => Some(*c),
            SampledFunction::Closure(f) => Some(f(x)),
        }
    }

    fn check_level(&self, level: usize) -> Result<()> {
        match self.max_level() {
            Some(l) if l < level => Err(Error::LevelMismatch {
                expected: level,
                actual: l,
            }),
            _ => Ok(()),
        }
    }

    /// Values at the level-`m` quadrature nodes `F_w(V_0[0])`, in word-index
    /// order. These nodes are the first vertex of each `m`-cell.
    pub fn node_values(&self, fractal: &Fractal, m: usize) -> Result<Vec<f64>> {
        self.check_level(m)?;
        match self {
            SampledFunction::Table(t) => {
                let g = fractal.graph(m)?;
                Ok(g.cells().iter().map(|c| t.values[c[0]]).collect())
            }
            _ => {
                let rule = node_rule(fractal, m)?;
                Ok(rule
                    .points
                    .iter()
                    .map(|x| self.eval_point(x).expect("closed form"))
                    .collect())
            }
        }
    }

    /// Values on `V_level`.
    pub fn vertex_values(&self, fractal: &Fractal, level: usize) -> Result<DiscreteFunction> {
        self.check_level(level)?;
        let g = fractal.graph(level)?;
        match self {
            SampledFunction::Table(t) => t.restrict(level, &g),
            _ => Ok(DiscreteFunction::from_fn(&g, |x| {
                self.eval_point(x).expect("closed form")
            })),
        }
    }

    /// `lambda u + c`.
    pub fn affine(&self, lambda: f64, c: f64) -> SampledFunction {
        match self {
            SampledFunction::Table(t) => SampledFunction::Table(t.map(|v| lambda * v + c)),
            SampledFunction::Constant(v) => SampledFunction::Constant(lambda * v + c),
            other => {
                let inner = other.clone();
                SampledFunction::closure(move |x| {
                    lambda * inner.eval_point(x).expect("closed form") + c
                })
            }
        }
    }
}

/// Quadrature rule anchored at the first point of `V_0`.
pub fn node_rule(fractal: &Fractal, m: usize) -> Result<QuadratureRule> {
    quadrature_nodes(fractal.ifs(), m, &fractal.boundary()[0])
}
