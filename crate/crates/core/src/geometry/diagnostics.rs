use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fractal::Fractal;
use super::ifs::IfsSpec;
use super::quadrature::quadrature_nodes;
use super::spatial::PointGrid;
use crate::Result;

/// Empirical Condition-(H) constant.
///
/// For each level `m`, `per_level[m-1]` is the smallest `d(x, y) / ratio^m`
/// over vertex pairs of `V_m` that neither share an `m`-cell nor lie in
/// neighbouring `m`-cells (`None` when no such pair exists). `c` is the
/// minimum over levels, so `d(x, y) < c ratio^m` forces the pair to be near.
#[derive(Clone, Debug)]
pub struct ConditionH {
    pub c: f64,
    pub per_level: Vec<Option<f64>>,
}

pub fn condition_h_constant(fractal: &Fractal, max_level: usize) -> Result<ConditionH> {
    let mut per_level = Vec::new();
    for m in 1..=max_level {
        let g = fractal.graph(m)?;
        let scale = fractal.ratio().powi(m as i32);
        let grid = PointGrid::new(g.points(), scale);
        let mut stamp = vec![usize::MAX; g.vertex_count()];
        let mut best = f64::INFINITY;
        for x in 0..g.vertex_count() {
            for &c in g.incidence(x) {
                for cell in std::iter::once(c).chain(g.neighbor_cell_indices(c)) {
                    for &v in &g.cells()[cell] {
                        stamp[v] = x;
                    }
                }
            }
            let mut radius = 0.5 * scale;
            loop {
                let mut found = f64::INFINITY;
                grid.for_each_within(g.points(), g.point(x), radius.min(best * scale), |y, d| {
                    if stamp[y] != x {
                        found = found.min(d);
                    }
                });
                if found.is_finite() {
                    best = best.min(found / scale);
                    break;
                }
                if radius > 2.0 || radius >= best * scale {
                    break;
                }
                radius *= 2.0;
            }
        }
        per_level.push(best.is_finite().then_some(best));
    }
    let c = per_level
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(ConditionH { c, per_level })
}

/// Empirical alpha-regularity band: over `samples` random centres (level-`m`
/// quadrature nodes) and radii `r` log-uniform in `[ratio^min_level, 1)`,
/// returns `C = max(max q, 1 / min q)` for `q = mu(B(x, r)) / r^alpha`, with
/// the ball mass taken from the level-`m` quadrature, `m` the smallest level
/// with `ratio^m <= ratio^min_level / 4`.
pub fn alpha_regularity_constant(
    ifs: &IfsSpec,
    samples: usize,
    min_level: usize,
    seed: u64,
) -> Result<f64> {
    let r_min = ifs.ratio.powi(min_level as i32);
    let mut m = min_level;
    while ifs.ratio.powi(m as i32) > r_min / 4.0 {
        m += 1;
    }
    let rule = quadrature_nodes(ifs, m, &ifs.anchors[0])?;
    let grid = PointGrid::new(&rule.points, r_min);
    let alpha = ifs.alpha();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..samples {
        let centre = rng.gen_range(0..rule.len());
        let r = (r_min.ln() * rng.gen::<f64>()).exp();
        let mut count = 0usize;
        grid.for_each_within(&rule.points, &rule.points[centre], r, |_, _| count += 1);
        let q = count as f64 * rule.weight / r.powf(alpha);
        lo = lo.min(q);
        hi = hi.max(q);
    }
    Ok(hi.max(1.0 / lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gasket_condition_h_is_positive() {
        let f = Fractal::builtin("sierpinski-gasket").unwrap();
        let h = condition_h_constant(&f, 5).unwrap();
        assert!(h.c > 0.0 && h.c.is_finite());
        // all three 1-cells meet, so level 1 has no far pairs
        assert_eq!(h.per_level[0], None);
    }

    #[test]
    fn condition_h_matches_brute_force_at_level_three() {
        let f = Fractal::builtin("vicsek").unwrap();
        let g = f.graph(3).unwrap();
        let scale = f.ratio().powi(3);
        let near = |x: usize, y: usize| {
            g.incidence(x).iter().any(|&a| {
                g.incidence(y)
                    .iter()
                    .any(|&b| a == b || g.neighbor_cell_indices(a).contains(&b))
            })
        };
        let mut best = f64::INFINITY;
        for x in 0..g.vertex_count() {
            for y in x + 1..g.vertex_count() {
                if !near(x, y) {
                    best = best.min(crate::geometry::distance(g.point(x), g.point(y)) / scale);
                }
            }
        }
        let h = condition_h_constant(&f, 3).unwrap();
        assert!((h.per_level[2].unwrap() - best).abs() < 1e-12);
    }

    #[test]
    fn alpha_regular_band() {
        for ifs in [IfsSpec::sierpinski_gasket(), IfsSpec::vicsek()] {
            let c = alpha_regularity_constant(&ifs, 200, 6, 7).unwrap();
            assert!((1.0..=100.0).contains(&c), "{} C = {c}", ifs.name);
        }
    }
}
