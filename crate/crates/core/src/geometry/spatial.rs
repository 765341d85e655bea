use std::collections::HashMap;

use super::ifs::distance;

/// Uniform-grid bucket index over a fixed point set.
///
/// Queries return exactly the points with `distance < radius`; the grid is
/// only a filter.
#[derive(Clone, Debug)]
pub struct PointGrid {
    cell: f64,
    dim: usize,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl PointGrid {
    pub fn new<P: AsRef<[f64]>>(points: &[P], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "grid cell must be positive");
        let dim = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(key(p.as_ref(), cell)).or_default().push(i);
        }
        PointGrid { cell, dim, buckets }
    }

    /// Calls `visit(index, distance)` for every indexed point strictly within
    /// `radius` of `q`, in unspecified order.
    pub fn for_each_within<P: AsRef<[f64]>>(
        &self,
        points: &[P],
        q: &[f64],
        radius: f64,
        mut visit: impl FnMut(usize, f64),
    ) {
        let reach = (radius / self.cell).ceil() as i64;
        let center = key(q, self.cell);
        let mut offset = vec![-reach; self.dim];
        let mut probe = center.clone();
        loop {
            for d in 0..self.dim {
                probe[d] = center[d] + offset[d];
            }
            if let Some(bucket) = self.buckets.get(&probe) {
                for &i in bucket {
                    let d = distance(points[i].as_ref(), q);
                    if d < radius {
                        visit(i, d);
                    }
                }
            }
            // odometer over the (2 reach + 1)^dim neighbouring buckets
            let mut d = 0;
            loop {
                if d == self.dim {
                    return;
                }
                offset[d] += 1;
                if offset[d] > reach {
                    offset[d] = -reach;
                    d += 1;
                } else {
                    break;
                }
            }
        }
    }

    pub fn within<P: AsRef<[f64]>>(
        &self,
        points: &[P],
        q: &[f64],
        radius: f64,
    ) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.for_each_within(points, q, radius, |i, d| out.push((i, d)));
        out.sort_by_key(|&(i, _)| i);
        out
    }

    pub fn nearest_within<P: AsRef<[f64]>>(
        &self,
        points: &[P],
        q: &[f64],
        radius: f64,
    ) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.for_each_within(points, q, radius, |i, d| match best {
            Some((_, bd)) if bd <= d => {}
            _ => best = Some((i, d)),
        });
        best
    }
}

fn key(p: &[f64], cell: f64) -> Vec<i64> {
    p.iter().map(|c| (c / cell).floor() as i64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_brute_force(
            pts in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60),
            qx in 0.0f64..1.0, qy in 0.0f64..1.0,
            r in 0.01f64..0.6,
            cell in 0.02f64..0.5,
        ) {
            let points: Vec<Vec<f64>> = pts.iter().map(|&(x, y)| vec![x, y]).collect();
            let grid = PointGrid::new(&points, cell);
            let q = vec![qx, qy];
            let got: Vec<usize> = grid.within(&points, &q, r).into_iter().map(|(i, _)| i).collect();
            let want: Vec<usize> = (0..points.len()).filter(|&i| distance(&points[i], &q) < r).collect();
            prop_assert_eq!(got, want);
        }
    }
}
