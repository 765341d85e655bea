use std::sync::{Arc, RwLock};

use super::graph::LevelGraph;
use super::ifs::{distance, IfsSpec, Point};
use super::symmetry::SymmetryGroup;
use crate::{Error, Result};

const FIXED_POINT_TOL: f64 = 1e-9;

/// Essential fixed points of the IFS, sorted lexicographically.
///
/// The fixed point of `F_i` is its anchor `b_i`; it is essential when some
/// `F_k(b_i)` coincides with some `F_l(b_j)` for another anchor `b_j`.
pub fn essential_fixed_points(ifs: &IfsSpec) -> Result<Vec<Point>> {
    let n = ifs.n_maps();
    // images[i][k] = F_k(b_i)
    let images: Vec<Vec<Point>> = ifs
        .anchors
        .iter()
        .map(|b| (0..n).map(|k| ifs.apply(k, b)).collect())
        .collect();
    let mut essential = vec![false; n];
    for i in 0..n {
        for j in i + 1..n {
            let meets = images[i]
                .iter()
                .any(|x| images[j].iter().any(|y| distance(x, y) < FIXED_POINT_TOL));
            if meets {
                essential[i] = true;
                essential[j] = true;
            }
        }
    }
    let mut points: Vec<Point> = ifs
        .anchors
        .iter()
        .zip(&essential)
        .filter(|(_, &e)| e)
        .map(|(b, _)| b.clone())
        .collect();
    if points.len() < 2 {
        return Err(Error::InvalidFractal(format!(
            "{} essential fixed point(s) found, at least 2 are required",
            points.len()
        )));
    }
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    Ok(points)
}

/// A validated nested fractal with lazily built level graphs.
///
/// Construction checks the decidable axioms: at least two essential fixed
/// points, connectivity of the level-1 cell graph, and that the reflection
/// group maps cells to cells at levels 1 and 2.
#[derive(Debug)]
pub struct Fractal {
    ifs: IfsSpec,
    boundary: Vec<Point>,
    boundary_maps: Vec<usize>,
    g_min: f64,
    symmetry: SymmetryGroup,
    graphs: RwLock<Vec<Arc<LevelGraph>>>,
}

impl Fractal {
    pub fn new(ifs: IfsSpec) -> Result<Self> {
        let boundary = essential_fixed_points(&ifs)?;
        let boundary_maps = boundary
            .iter()
            .map(|q| {
                ifs.anchors
                    .iter()
                    .position(|b| distance(b, q) < FIXED_POINT_TOL)
                    .expect("boundary points are anchors")
            })
            .collect();
        let diam = pairwise_max(&boundary);
        if (diam - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidFractal(format!(
                "diameter of V_0 is {diam}, but the attractor has diameter 1"
            )));
        }

        let base_stub = LevelGraph::base(&ifs, &boundary, 1.0);
        let (_, candidates) = base_stub.child_candidates(&ifs, &boundary);
        let mut min_gap = f64::INFINITY;
        for i in 0..candidates.len() {
            for j in i + 1..candidates.len() {
                let d = distance(&candidates[i], &candidates[j]);
                if d > FIXED_POINT_TOL {
                    min_gap = min_gap.min(d);
                }
            }
        }
        let g_min = min_gap / ifs.ratio;

        let level0 = LevelGraph::base(&ifs, &boundary, g_min);
        let level1 = level0.refine(&ifs, &boundary, g_min)?;
        if !level1.cells_connected() {
            return Err(Error::InvalidFractal(
                "level-1 cells are not connected".into(),
            ));
        }
        let symmetry = SymmetryGroup::generate(&boundary)?;
        let level2 = level1.refine(&ifs, &boundary, g_min)?;
        symmetry.verify_cells(&level1)?;
        symmetry.verify_cells(&level2)?;

        Ok(Fractal {
            ifs,
            boundary,
            boundary_maps,
            g_min,
            symmetry,
            graphs: RwLock::new(vec![Arc::new(level0), Arc::new(level1), Arc::new(level2)]),
        })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        Self::new(IfsSpec::builtin(name)?)
    }

    pub fn ifs(&self) -> &IfsSpec {
        &self.ifs
    }

    pub fn name(&self) -> &str {
        &self.ifs.name
    }

    pub fn ratio(&self) -> f64 {
        self.ifs.ratio
    }

    pub fn n_maps(&self) -> usize {
        self.ifs.n_maps()
    }

    pub fn alpha(&self) -> f64 {
        self.ifs.alpha()
    }

    /// `V_0` in canonical order.
    pub fn boundary(&self) -> &[Point] {
        &self.boundary
    }

    pub fn boundary_len(&self) -> usize {
        self.boundary.len()
    }

    /// Index of the map whose fixed point is `V_0[i]`.
    pub fn boundary_map(&self, i: usize) -> usize {
        self.boundary_maps[i]
    }

    /// Minimal separation of distinct level-1 vertices, rescaled to level 0.
    pub fn vertex_gap(&self) -> f64 {
        self.g_min
    }

    pub fn symmetry(&self) -> &SymmetryGroup {
        &self.symmetry
    }

    /// Level graph `V_n`, built on first use and shared afterwards.
    pub fn graph(&self, n: usize) -> Result<Arc<LevelGraph>> {
        if let Some(g) = self.graphs.read().expect("graph cache poisoned").get(n) {
            return Ok(Arc::clone(g));
        }
        let mut graphs = self.graphs.write().expect("graph cache poisoned");
        while graphs.len() <= n {
            let next = graphs.last().expect("level 0 present").refine(
                &self.ifs,
                &self.boundary,
                self.g_min,
            )?;
            graphs.push(Arc::new(next));
        }
        Ok(Arc::clone(&graphs[n]))
    }
}

fn pairwise_max(points: &[Point]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            m = m.max(distance(&points[i], &points[j]));
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::word::Word;

    #[test]
    fn gasket_boundary_is_the_three_corners() {
        let sg = IfsSpec::sierpinski_gasket();
        let v0 = essential_fixed_points(&sg).unwrap();
        assert_eq!(v0.len(), 3);
        for b in &sg.anchors {
            assert!(v0.iter().any(|q| distance(q, b) < 1e-15));
        }
        assert!(v0.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn vicsek_boundary_excludes_center() {
        let v = IfsSpec::vicsek();
        let v0 = essential_fixed_points(&v).unwrap();
        assert_eq!(v0.len(), 4);
        let center = &v.anchors[4];
        assert!(v0.iter().all(|q| distance(q, center) > 0.1));
    }

    #[test]
    fn vicsek_essential_points_match_brute_force() {
        // independent check: an anchor is essential iff F_k(x) = F_l(y) for some other anchor
        let v = IfsSpec::vicsek();
        let n = v.n_maps();
        let mut brute = Vec::new();
        for a in 0..n {
            let mut hit = false;
            for b in 0..n {
                if a == b {
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        let x = v.cell_point(&Word::new(vec![k]), &v.anchors[a]);
                        let y = v.cell_point(&Word::new(vec![l]), &v.anchors[b]);
                        if distance(&x, &y) < 1e-12 {
                            hit = true;
                        }
                    }
                }
            }
            if hit {
                brute.push(v.anchors[a].clone());
            }
        }
        brute.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(brute, essential_fixed_points(&v).unwrap());
    }

    #[test]
    fn cantor_like_set_is_rejected() {
        let ifs = IfsSpec::new("cantor", 1, 1.0 / 3.0, vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(
            essential_fixed_points(&ifs),
            Err(Error::InvalidFractal(_))
        ));
        assert!(Fractal::new(ifs).is_err());
    }

    #[test]
    fn unit_interval_is_a_valid_nested_fractal() {
        let ifs = IfsSpec::new("interval", 1, 0.5, vec![vec![0.0], vec![1.0]]).unwrap();
        let f = Fractal::new(ifs).unwrap();
        assert_eq!(f.graph(3).unwrap().vertex_count(), 9);
    }

    #[test]
    fn gasket_vertex_counts() {
        let f = Fractal::builtin("sierpinski-gasket").unwrap();
        let g0 = f.graph(0).unwrap();
        assert_eq!((g0.vertex_count(), g0.cells().len()), (3, 1));
        let g1 = f.graph(1).unwrap();
        assert_eq!((g1.vertex_count(), g1.cells().len()), (6, 3));
        for n in 0..=5 {
            let expect = (3usize.pow(n as u32 + 1) + 3) / 2;
            assert_eq!(f.graph(n).unwrap().vertex_count(), expect, "level {n}");
        }
    }

    #[test]
    fn vicsek_level_one() {
        let f = Fractal::builtin("vicsek").unwrap();
        let g1 = f.graph(1).unwrap();
        assert_eq!(g1.vertex_count(), 16);
        assert_eq!(f.symmetry().order(), 8);
    }

    #[test]
    fn neighbor_cell_examples() {
        let sg = Fractal::builtin("sierpinski-gasket").unwrap();
        let g1 = sg.graph(1).unwrap();
        assert_eq!(
            g1.neighbor_cells(&Word::new(vec![0])),
            vec![Word::new(vec![1]), Word::new(vec![2])]
        );
        assert!(sg
            .graph(0)
            .unwrap()
            .neighbor_cells(&Word::empty())
            .is_empty());

        let v = Fractal::builtin("vicsek").unwrap();
        let g1 = v.graph(1).unwrap();
        for corner in 0..4 {
            assert_eq!(
                g1.neighbor_cells(&Word::new(vec![corner])),
                vec![Word::new(vec![4])]
            );
        }
        assert_eq!(g1.neighbor_cells(&Word::new(vec![4])).len(), 4);
    }
}
