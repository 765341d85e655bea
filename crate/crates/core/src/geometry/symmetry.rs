use std::collections::HashSet;

use super::graph::LevelGraph;
use super::ifs::{distance, Point};
use crate::{Error, Result};

pub const MAX_GROUP_ORDER: usize = 1024;
const MATCH_TOL: f64 = 1e-9;

/// Affine isometry `x -> A x + t` with `A` stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    dim: usize,
    linear: Vec<f64>,
    shift: Vec<f64>,
}

impl Isometry {
    pub fn identity(dim: usize) -> Self {
        let mut linear = vec![0.0; dim * dim];
        for i in 0..dim {
            linear[i * dim + i] = 1.0;
        }
        Isometry {
            dim,
            linear,
            shift: vec![0.0; dim],
        }
    }

    /// Reflection through the perpendicular bisector hyperplane of `x` and `y`.
    pub fn reflection(x: &[f64], y: &[f64]) -> Self {
        let dim = x.len();
        let len = distance(x, y);
        let normal: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b) / len).collect();
        let mid_dot: f64 = x
            .iter()
            .zip(y)
            .zip(&normal)
            .map(|((a, b), n)| 0.5 * (a + b) * n)
            .sum();
        let mut linear = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let delta = if i == j { 1.0 } else { 0.0 };
                linear[i * dim + j] = delta - 2.0 * normal[i] * normal[j];
            }
        }
        let shift = normal.iter().map(|n| 2.0 * mid_dot * n).collect();
        Isometry { dim, linear, shift }
    }

    pub fn apply(&self, x: &[f64]) -> Point {
        (0..self.dim)
            .map(|i| {
                let row = &self.linear[i * self.dim..(i + 1) * self.dim];
                row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.shift[i]
            })
            .collect()
    }

    /// `self o other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let d = self.dim;
        let mut linear = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                linear[i * d + j] = (0..d)
                    .map(|k| self.linear[i * d + k] * other.linear[k * d + j])
                    .sum();
            }
        }
        let shift = self.apply(&other.shift);
        Isometry {
            dim: d,
            linear,
            shift,
        }
    }

    fn approx_eq(&self, other: &Isometry) -> bool {
        self.linear
            .iter()
            .chain(&self.shift)
            .zip(other.linear.iter().chain(&other.shift))
            .all(|(a, b)| (a - b).abs() < MATCH_TOL)
    }
}

/// Group generated by the reflections `U_{xy}` over pairs of boundary
/// vertices, with its action on `V_0` precomputed.
#[derive(Clone, Debug)]
pub struct SymmetryGroup {
    elements: Vec<Isometry>,
    boundary_perms: Vec<Vec<usize>>,
}

impl SymmetryGroup {
    pub fn generate(boundary: &[Point]) -> Result<Self> {
        let dim = boundary[0].len();
        let mut generators = Vec::new();
        for i in 0..boundary.len() {
            for j in i + 1..boundary.len() {
                generators.push(Isometry::reflection(&boundary[i], &boundary[j]));
            }
        }
        let mut elements = vec![Isometry::identity(dim)];
        let mut next = 0;
        while next < elements.len() {
            let current = elements[next].clone();
            next += 1;
            for g in &generators {
                let candidate = g.compose(&current);
                if !elements.iter().any(|e| e.approx_eq(&candidate)) {
                    elements.push(candidate);
                    if elements.len() > MAX_GROUP_ORDER {
                        return Err(Error::InvalidFractal(format!(
                            "symmetry group exceeds {MAX_GROUP_ORDER} elements"
                        )));
                    }
                }
            }
        }
        let mut boundary_perms = Vec::with_capacity(elements.len());
        for e in &elements {
            let mut perm = Vec::with_capacity(boundary.len());
            for q in boundary {
                let image = e.apply(q);
                let target = boundary
                    .iter()
                    .position(|b| distance(b, &image) < MATCH_TOL)
                    .ok_or_else(|| {
                        Error::InvalidFractal("a reflection does not permute V_0".into())
                    })?;
                perm.push(target);
            }
            boundary_perms.push(perm);
        }
        Ok(SymmetryGroup {
            elements,
            boundary_perms,
        })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Isometry] {
        &self.elements
    }

    /// Image of `V_0` index `i` under element `g`.
    pub fn boundary_perm(&self, g: usize) -> &[usize] {
        &self.boundary_perms[g]
    }

    /// Permutation of the vertex ids of `graph` induced by element `g`.
    pub fn vertex_permutation(&self, g: usize, graph: &LevelGraph) -> Result<Vec<usize>> {
        graph
            .points()
            .iter()
            .map(|p| {
                graph.locate(&self.elements[g].apply(p)).ok_or_else(|| {
                    Error::InvalidFractal(format!(
                        "symmetry element {g} does not map V_{} into itself",
                        graph.level()
                    ))
                })
            })
            .collect()
    }

    /// Checks that every element maps cells of `graph` onto cells.
    pub fn verify_cells(&self, graph: &LevelGraph) -> Result<()> {
        let cell_sets: HashSet<Vec<usize>> = graph
            .cells()
            .iter()
            .map(|c| {
                let mut s = c.clone();
                s.sort_unstable();
                s
            })
            .collect();
        for g in 0..self.order() {
            let perm = self.vertex_permutation(g, graph)?;
            for cell in graph.cells() {
                let mut image: Vec<usize> = cell.iter().map(|&v| perm[v]).collect();
                image.sort_unstable();
                if !cell_sets.contains(&image) {
                    return Err(Error::InvalidFractal(format!(
                        "symmetry element {g} does not map {}-cells to {}-cells",
                        graph.level(),
                        graph.level()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Orbits of unordered `V_0` pairs under the group, each sorted, ordered
    /// by their smallest pair. The class containing `(0, 1)` comes first.
    pub fn pair_orbits(&self) -> Vec<Vec<(usize, usize)>> {
        let k = self.boundary_perms[0].len();
        let mut assigned = HashSet::new();
        let mut orbits = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                if assigned.contains(&(a, b)) {
                    continue;
                }
                let mut orbit: Vec<(usize, usize)> = self
                    .boundary_perms
                    .iter()
                    .map(|perm| {
                        let (x, y) = (perm[a], perm[b]);
                        (x.min(y), x.max(y))
                    })
                    .collect();
                orbit.sort_unstable();
                orbit.dedup();
                assigned.extend(orbit.iter().copied());
                orbits.push(orbit);
            }
        }
        orbits
    }

    /// Whether the group acts on `V_0` as the full symmetric group.
    pub fn is_full_symmetric_on_boundary(&self) -> bool {
        let k = self.boundary_perms[0].len();
        let distinct: HashSet<&Vec<usize>> = self.boundary_perms.iter().collect();
        distinct.len() == (1..=k).product::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_is_involution() {
        let r = Isometry::reflection(&[0.0, 0.0], &[1.0, 0.3]);
        let x = vec![0.2, -0.7];
        let back = r.apply(&r.apply(&x));
        assert!(distance(&x, &back) < 1e-14);
        assert!(distance(&r.apply(&[0.0, 0.0]), &[1.0, 0.3]) < 1e-14);
    }

    #[test]
    fn triangle_group_is_dihedral_of_order_six() {
        let h = 3f64.sqrt() / 2.0;
        let g = SymmetryGroup::generate(&[vec![0.0, 0.0], vec![0.5, h], vec![1.0, 0.0]]).unwrap();
        assert_eq!(g.order(), 6);
        assert!(g.is_full_symmetric_on_boundary());
        assert_eq!(g.pair_orbits().len(), 1);
    }

    #[test]
    fn square_group_has_two_pair_classes() {
        let s = 0.5f64.sqrt();
        let g = SymmetryGroup::generate(&[vec![0.0, 0.0], vec![0.0, s], vec![s, 0.0], vec![s, s]])
            .unwrap();
        assert_eq!(g.order(), 8);
        let orbits = g.pair_orbits();
        assert_eq!(orbits.len(), 2);
        assert_eq!(orbits[0].len(), 4);
        assert_eq!(orbits[1], vec![(0, 3), (1, 2)]);
    }
}
