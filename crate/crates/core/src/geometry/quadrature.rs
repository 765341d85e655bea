use super::graph::MAX_CELLS;
use super::ifs::{IfsSpec, Point};
use crate::{Error, Result};

/// Equal-weight cell quadrature: one node `F_w(q)` per word `w` of length
/// `level`, each carrying `N^{-level}`. Nodes are stored in word-index order.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub level: usize,
    pub weight: f64,
    pub points: Vec<Point>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Translation parts `t_w` of `F_w(x) = ratio^m x + t_w` for all `|w| = m`.
pub fn cell_offsets(ifs: &IfsSpec, m: usize) -> Result<Vec<Point>> {
    let cells = (ifs.n_maps() as u64).saturating_pow(m as u32);
    if cells > MAX_CELLS {
        return Err(Error::MemoryGuard {
            level: m,
            cells,
            limit: MAX_CELLS,
        });
    }
    let mut offsets = vec![vec![0.0; ifs.dimension]];
    let mut scale = 1.0;
    for _ in 0..m {
        let mut next = Vec::with_capacity(offsets.len() * ifs.n_maps());
        for t in &offsets {
            for b in &ifs.anchors {
                next.push(
                    t.iter()
                        .zip(b)
                        .map(|(ti, bi)| ti + scale * (1.0 - ifs.ratio) * bi)
                        .collect(),
                );
            }
        }
        offsets = next;
        scale *= ifs.ratio;
    }
    Ok(offsets)
}

pub fn quadrature_nodes(ifs: &IfsSpec, m: usize, anchor: &[f64]) -> Result<QuadratureRule> {
    let scale = ifs.ratio.powi(m as i32);
    let points = cell_offsets(ifs, m)?
        .into_iter()
        .map(|t| {
            t.iter()
                .zip(anchor)
                .map(|(ti, qi)| scale * qi + ti)
                .collect()
        })
        .collect::<Vec<Point>>();
    let weight = (ifs.n_maps() as f64).powi(-(m as i32));
    Ok(QuadratureRule {
        level: m,
        weight,
        points,
    })
}
