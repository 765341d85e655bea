use serde::{Deserialize, Serialize};

use crate::geometry::LevelGraph;
use crate::{Error, Result};

/// Real function on the vertex ids of `V_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFunction {
    pub level: usize,
    pub values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(level: usize, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite function value {v}"
            )));
        }
        Ok(DiscreteFunction { level, values })
    }

    pub fn constant(graph: &LevelGraph, c: f64) -> Self {
        DiscreteFunction {
            level: graph.level(),
            values: vec![c; graph.vertex_count()],
        }
    }

    /// Evaluates `f` at every vertex of `graph`.
    pub fn from_fn(graph: &LevelGraph, f: impl Fn(&[f64]) -> f64) -> Self {
        DiscreteFunction {
            level: graph.level(),
            values: graph.points().iter().map(|x| f(x)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks that the function lives on `graph`.
    pub fn check_on(&self, graph: &LevelGraph) -> Result<()> {
        if self.level != graph.level() {
            return Err(Error::LevelMismatch {
                expected: graph.level(),
                actual: self.level,
            });
        }
        if self.values.len() != graph.vertex_count() {
            return Err(Error::InvalidArgument(format!(
                "function has {} values but V_{} has {} vertices",
                self.values.len(),
                graph.level(),
                graph.vertex_count()
            )));
        }
        Ok(())
    }

    /// Restriction to `V_level` (a prefix of the vertex ids).
    pub fn restrict(&self, level: usize, graph: &LevelGraph) -> Result<Self> {
        if level > self.level {
            return Err(Error::LevelMismatch {
                expected: self.level,
                actual: level,
            });
        }
        if graph.level() != level {
            return Err(Error::LevelMismatch {
                expected: level,
                actual: graph.level(),
            });
        }
        Ok(DiscreteFunction {
            level,
            values: self.values[..graph.vertex_count()].to_vec(),
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DiscreteFunction {
            level: self.level,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}
