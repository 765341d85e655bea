//! Nested fractals from homogeneous IFS data: words, level graphs, the
//! reflection group, the self-similar measure and geometric diagnostics.

pub mod diagnostics;
pub mod fractal;
pub mod graph;
pub mod ifs;
pub mod quadrature;
pub mod spatial;
pub mod symmetry;
pub mod word;

pub use diagnostics::{alpha_regularity_constant, condition_h_constant, ConditionH};
pub use fractal::{essential_fixed_points, Fractal};
pub use graph::LevelGraph;
pub use ifs::{distance, IfsSpec, Point};
pub use quadrature::{quadrature_nodes, QuadratureRule};
pub use symmetry::SymmetryGroup;
pub use word::Word;
