use petgraph::unionfind::UnionFind;

use super::ifs::{distance, IfsSpec, Point};
use super::spatial::PointGrid;
use super::word::Word;
use crate::{Error, Result};

/// Upper bound on `N^n` for any level graph or quadrature rule.
pub const MAX_CELLS: u64 = 10_000_000;

/// Identified vertex set `V_n` with its cell structure.
///
/// Vertex ids are stable across levels: the vertices of `V_n` keep their ids
/// in `V_{n+1}` and new vertices are appended, so `V_0` occupies ids
/// `0..|V_0|` at every level.
#[derive(Clone, Debug)]
pub struct LevelGraph {
    level: usize,
    n_maps: usize,
    ratio: f64,
    eps: f64,
    points: Vec<Point>,
    cells: Vec<Vec<usize>>,
    offsets: Vec<Point>,
    incidence: Vec<Vec<usize>>,
    grid: PointGrid,
}

impl LevelGraph {
    pub(crate) fn base(ifs: &IfsSpec, boundary: &[Point], g_min: f64) -> Self {
        let k = boundary.len();
        let eps = g_min / 4.0;
        let points = boundary.to_vec();
        let grid = PointGrid::new(&points, 4.0 * eps);
        LevelGraph {
            level: 0,
            n_maps: ifs.n_maps(),
            ratio: ifs.ratio,
            eps,
            points,
            cells: vec![(0..k).collect()],
            offsets: vec![vec![0.0; ifs.dimension]],
            incidence: (0..k).map(|_| vec![0]).collect(),
            grid,
        }
    }

    /// Candidate vertex coordinates of every child cell, cell-major.
    pub(crate) fn child_candidates(
        &self,
        ifs: &IfsSpec,
        boundary: &[Point],
    ) -> (Vec<Point>, Vec<Point>) {
        let n = ifs.n_maps();
        let scale = self.ratio.powi(self.level as i32);
        let child_scale = scale * ifs.ratio;
        let mut offsets = Vec::with_capacity(self.offsets.len() * n);
        for t in &self.offsets {
            for b in &ifs.anchors {
                offsets.push(
                    t.iter()
                        .zip(b)
                        .map(|(ti, bi)| ti + scale * (1.0 - ifs.ratio) * bi)
                        .collect::<Point>(),
                );
            }
        }
        let mut candidates = Vec::with_capacity(offsets.len() * boundary.len());
        for t in &offsets {
            for q in boundary {
                candidates.push(
                    q.iter()
                        .zip(t)
                        .map(|(qi, ti)| child_scale * qi + ti)
                        .collect(),
                );
            }
        }
        (offsets, candidates)
    }

    pub(crate) fn refine(&self, ifs: &IfsSpec, boundary: &[Point], g_min: f64) -> Result<Self> {
        let level = self.level + 1;
        let n_cells = (ifs.n_maps() as u64).saturating_pow(level as u32);
        if n_cells > MAX_CELLS {
            return Err(Error::MemoryGuard {
                level,
                cells: n_cells,
                limit: MAX_CELLS,
            });
        }
        let k = boundary.len();
        let (offsets, candidates) = self.child_candidates(ifs, boundary);
        let eps = ifs.ratio.powi(level as i32) * g_min / 4.0;
        let band = 4.0 * eps;
        // genuine neighbours sit at exactly `band`; allow for rounding
        let probe = band * (1.0 - 1e-9);
        let grid = PointGrid::new(&candidates, band);

        let mut uf = UnionFind::<usize>::new(candidates.len());
        for (a, q) in candidates.iter().enumerate() {
            let mut failure = None;
            grid.for_each_within(&candidates, q, probe, |b, d| {
                if b <= a {
                    return;
                }
                if d < eps {
                    uf.union(a, b);
                } else if failure.is_none() {
                    failure = Some(d);
                }
            });
            if let Some(distance) = failure {
                return Err(Error::Precision {
                    level,
                    distance,
                    eps,
                    band,
                });
            }
        }

        let mut class_id = vec![usize::MAX; candidates.len()];
        let mut points = self.points.clone();
        for (v, p) in self.points.iter().enumerate() {
            let (c, _) = grid.nearest_within(&candidates, p, eps).ok_or_else(|| {
                Error::InvalidFractal(format!(
                    "vertex {v} of level {} does not reappear at level {level}",
                    self.level
                ))
            })?;
            let root = uf.find(c);
            if class_id[root] != usize::MAX {
                return Err(Error::Precision {
                    level,
                    distance: distance(p, &self.points[class_id[root]]),
                    eps,
                    band,
                });
            }
            class_id[root] = v;
        }
        let mut cells = Vec::with_capacity(offsets.len());
        for (c, chunk) in candidates.chunks(k).enumerate() {
            let mut cell = Vec::with_capacity(k);
            for (j, q) in chunk.iter().enumerate() {
                let root = uf.find(c * k + j);
                if class_id[root] == usize::MAX {
                    class_id[root] = points.len();
                    points.push(q.clone());
                }
                cell.push(class_id[root]);
            }
            let mut sorted = cell.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != k {
                return Err(Error::InvalidFractal(format!(
                    "cell {} at level {level} has coincident vertices",
                    Word::from_index(c, level, ifs.n_maps())
                )));
            }
            cells.push(cell);
        }
        let mut incidence = vec![Vec::new(); points.len()];
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                incidence[v].push(c);
            }
        }
        let grid = PointGrid::new(&points, band);
        Ok(LevelGraph {
            level,
            n_maps: ifs.n_maps(),
            ratio: ifs.ratio,
            eps,
            points,
            cells,
            offsets,
            incidence,
            grid,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n_maps(&self) -> usize {
        self.n_maps
    }

    pub fn vertex_count(&self) -> usize {
        self.points.len()
    }

    pub fn boundary_len(&self) -> usize {
        self.cells[0].len()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, v: usize) -> &[f64] {
        &self.points[v]
    }

    /// Vertex ids of `V_w = F_w(V_0)`, in `V_0` order, indexed by word index.
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, w: &Word) -> &[usize] {
        &self.cells[w.index(self.n_maps)]
    }

    /// Translation part of `F_w`, i.e. `F_w(x) = ratio^n x + offset`.
    pub fn cell_offset(&self, cell: usize) -> &[f64] {
        &self.offsets[cell]
    }

    pub fn incidence(&self, v: usize) -> &[usize] {
        &self.incidence[v]
    }

    pub fn identification_tolerance(&self) -> f64 {
        self.eps
    }

    /// Vertex id of the point within the identification tolerance of `q`.
    pub fn locate(&self, q: &[f64]) -> Option<usize> {
        self.grid
            .nearest_within(&self.points, q, self.eps)
            .map(|(v, _)| v)
    }

    /// Cells at this level that intersect `K_w`, excluding `w` itself.
    pub fn neighbor_cells(&self, w: &Word) -> Vec<Word> {
        assert_eq!(
            w.len(),
            self.level,
            "word length must match the graph level"
        );
        let idx = w.index(self.n_maps);
        let mut out: Vec<usize> = self.cells[idx]
            .iter()
            .flat_map(|&v| self.incidence[v].iter().copied())
            .filter(|&c| c != idx)
            .collect();
        out.sort_unstable();
        out.dedup();
        out.into_iter()
            .map(|c| Word::from_index(c, self.level, self.n_maps))
            .collect()
    }

    pub(crate) fn neighbor_cell_indices(&self, cell: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.cells[cell]
            .iter()
            .flat_map(|&v| self.incidence[v].iter().copied())
            .filter(|&c| c != cell)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether the cell adjacency graph is connected.
    pub fn cells_connected(&self) -> bool {
        let mut seen = vec![false; self.cells.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(c) = stack.pop() {
            for nb in self.neighbor_cell_indices(c) {
                if !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}
