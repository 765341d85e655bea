use std::sync::OnceLock;

use ksnest::energy::*;
use ksnest::geometry::{Fractal, Word};
use ksnest::ks::*;
use ksnest::Error;
use proptest::prelude::*;

struct Gasket {
    fractal: Fractal,
    fp: ScalingFixedPoint,
    harmonic: SampledFunction,
}

fn gasket() -> &'static Gasket {
    static CELL: OnceLock<Gasket> = OnceLock::new();
    CELL.get_or_init(|| {
        let fractal = Fractal::builtin("sierpinski-gasket").unwrap();
        let fp = fixed_point_solve(&fractal, 2.0, &FixedPointOptions::default()).unwrap();
        let u0 = DiscreteFunction::new(0, vec![1.0, 0.0, 0.0]).unwrap();
        let table = p_harmonic_extension(&fractal, &fp, &u0, 8).unwrap();
        Gasket {
            fractal,
            fp,
            harmonic: SampledFunction::Table(table),
        }
    })
}

fn opts(estimator: Estimator, seed: u64) -> PhiOptions {
    PhiOptions {
        p: 2.0,
        sigma: gasket().fp.sigma_sharp,
        estimator,
        samples: 20_000,
        seed,
    }
}

#[test]
fn constants_have_zero_functional() {
    let g = gasket();
    let c = SampledFunction::Constant(2.5);
    for est in [Estimator::CellQuadrature, Estimator::MonteCarlo] {
        let e = phi_estimate(&g.fractal, &c, 0.25, 5, &opts(est, 1), 0).unwrap();
        assert_eq!(e.value, 0.0);
    }
    let grid = default_grid(g.fractal.ratio(), 6);
    let prof = besov_profile(
        &g.fractal,
        &c,
        &grid,
        6,
        &opts(Estimator::CellQuadrature, 0),
    )
    .unwrap();
    assert!(prof.resolved().all(|e| e.phi == 0.0));
    let rep = ne_ratio(&prof, DEFAULT_TAIL).unwrap();
    assert!(rep.degenerate && rep.ratio.is_none());
}

#[test]
fn coarse_levels_and_bad_radii_are_rejected() {
    let g = gasket();
    let o = opts(Estimator::CellQuadrature, 0);
    assert!(matches!(
        phi_estimate(&g.fractal, &g.harmonic, 0.25, 3, &o, 0),
        Err(Error::Resolution { .. })
    ));
    assert!(phi_estimate(&g.fractal, &g.harmonic, 1.0, 6, &o, 0).is_err());
    assert!(besov_profile(&g.fractal, &g.harmonic, &[0.1, 0.2], 6, &o).is_err());
}

#[test]
fn deterministic_estimates_settle_with_the_level() {
    let g = gasket();
    let o = opts(Estimator::CellQuadrature, 0);
    for r in [0.4, 0.25, 0.125] {
        let m = resolution_level(g.fractal.ratio(), r / 2.0);
        let a = phi_estimate(&g.fractal, &g.harmonic, r, m, &o, 0)
            .unwrap()
            .value;
        let b = phi_estimate(&g.fractal, &g.harmonic, r, m + 1, &o, 0)
            .unwrap()
            .value;
        assert!((a - b).abs() <= 0.1 * a.max(b), "r={r}: {a} vs {b}");
    }
}

#[test]
fn monte_carlo_agrees_with_cell_quadrature() {
    let g = gasket();
    let cell = phi_estimate(
        &g.fractal,
        &g.harmonic,
        0.25,
        6,
        &opts(Estimator::CellQuadrature, 0),
        0,
    )
    .unwrap()
    .value;
    for seed in 0..4 {
        let mc = phi_estimate(
            &g.fractal,
            &g.harmonic,
            0.25,
            6,
            &opts(Estimator::MonteCarlo, seed),
            0,
        )
        .unwrap();
        assert!(mc.stderr > 0.0);
        assert!(
            (mc.value - cell).abs() <= 3.0 * mc.stderr,
            "seed {seed}: {mc:?} vs {cell}"
        );
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    let g = gasket();
    let o = opts(Estimator::MonteCarlo, 9);
    let a = phi_estimate(&g.fractal, &g.harmonic, 0.2, 6, &o, 3).unwrap();
    let b = phi_estimate(&g.fractal, &g.harmonic, 0.2, 6, &o, 3).unwrap();
    assert_eq!(a, b);
    let c = phi_estimate(&g.fractal, &g.harmonic, 0.2, 6, &o, 4).unwrap();
    assert_ne!(a, c);
}

#[test]
fn profile_is_invariant_under_symmetries() {
    let g = gasket();
    let grid = default_grid(g.fractal.ratio(), 6);
    let o = opts(Estimator::CellQuadrature, 0);
    let u = SampledFunction::closure(|x| x[0] + 0.3 * x[1] * x[1]);
    let base = besov_profile(&g.fractal, &u, &grid, 6, &o).unwrap();
    for element in g.fractal.symmetry().elements() {
        let e = element.clone();
        let moved = SampledFunction::closure(move |x| {
            let y = e.apply(x);
            y[0] + 0.3 * y[1] * y[1]
        });
        let prof = besov_profile(&g.fractal, &moved, &grid, 6, &o).unwrap();
        for (a, b) in base.resolved().zip(prof.resolved()) {
            assert!(
                (a.phi - b.phi).abs() <= 0.05 * a.phi,
                "r={}: {} vs {}",
                a.r,
                a.phi,
                b.phi
            );
        }
    }
}

#[test]
fn hat_u_examples() {
    let g = gasket();
    let f = &g.fractal;
    let c = hat_u(f, &SampledFunction::Constant(-1.25), 2, 5).unwrap();
    assert!(c.values.iter().all(|&v| (v + 1.25).abs() < 1e-15));
    assert!(hat_u(f, &SampledFunction::Constant(0.0), 2, 4).is_err());

    // corner of V_0: mean first coordinate of the nodes of its 2-cell
    let m = 5;
    let i = f.boundary_map(0);
    let anchor = f.boundary()[0].clone();
    let count = f.n_maps().pow(m as u32 - 2);
    let want = (0..count)
        .map(|j| {
            let mut letters = vec![i, i];
            letters.extend(Word::from_index(j, m - 2, f.n_maps()).letters());
            f.ifs().cell_point(&Word::new(letters), &anchor)[0]
        })
        .sum::<f64>()
        / count as f64;
    let hat = hat_u(f, &SampledFunction::Coordinate(0), 1, m).unwrap();
    assert!(
        (hat.values[0] - want).abs() < 1e-14,
        "{} vs {want}",
        hat.values[0]
    );

    // contraction onto the value range
    let h = hat_u(f, &g.harmonic, 3, 6).unwrap();
    assert!(h.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn hat_u_is_linear() {
    let g = gasket();
    let f = &g.fractal;
    let a = hat_u(f, &g.harmonic, 2, 6).unwrap();
    let b = hat_u(f, &SampledFunction::Coordinate(1), 2, 6).unwrap();
    let table = g.harmonic.vertex_values(f, 6).unwrap();
    let y = SampledFunction::Coordinate(1).vertex_values(f, 6).unwrap();
    let mix = DiscreteFunction::new(
        6,
        table
            .values
            .iter()
            .zip(&y.values)
            .map(|(u, v)| 2.0 * u - 0.5 * v)
            .collect(),
    )
    .unwrap();
    let h = hat_u(f, &SampledFunction::Table(mix), 2, 6).unwrap();
    for k in 0..h.len() {
        assert!((h.values[k] - (2.0 * a.values[k] - 0.5 * b.values[k])).abs() < 1e-13);
    }
}

#[test]
fn hoelder_constant_examples() {
    let g = gasket();
    let f = &g.fractal;
    let c = 3f64.sqrt();
    let table = g.harmonic.vertex_values(f, 5).unwrap();
    let base = hoelder_check(f, &g.fp, g.fp.sigma_sharp, &table, 0, c).unwrap();
    assert!(base > 0.0 && base.is_finite());
    let moved = table.map(|v| -3.0 * v + 7.0);
    let other = hoelder_check(f, &g.fp, g.fp.sigma_sharp, &moved, 0, c).unwrap();
    assert!((other - base).abs() < 1e-9 * base);
    let flat = DiscreteFunction::constant(&f.graph(4).unwrap(), 1.0);
    assert_eq!(
        hoelder_check(f, &g.fp, g.fp.sigma_sharp, &flat, 0, c).unwrap(),
        0.0
    );
}

#[test]
fn uniform_gap_of_constants_vanishes() {
    let g = gasket();
    for n in 2..=4 {
        let gap = uniform_convergence_gap(
            &g.fractal,
            &g.fp,
            &SampledFunction::Constant(0.5),
            n,
            7,
            3f64.sqrt(),
        )
        .unwrap();
        assert!(gap < 1e-14);
    }
    let gaps: Vec<f64> = (2..=4)
        .map(|n| {
            uniform_convergence_gap(&g.fractal, &g.fp, &g.harmonic, n, 7, 3f64.sqrt()).unwrap()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn bridge_report_examples() {
    let g = gasket();
    let f = &g.fractal;
    let grid = default_grid(f.ratio(), 6);
    let o = opts(Estimator::CellQuadrature, 0);
    let flat =
        thm_bridge_check(f, &g.fp, &SampledFunction::Constant(1.0), 3, &grid, 6, &o).unwrap();
    assert!(flat.degenerate && flat.max_ratio.is_none());

    let rep = thm_bridge_check(f, &g.fp, &g.harmonic, 3, &grid, 6, &o).unwrap();
    let ratio = rep.max_ratio.unwrap();
    assert!(ratio.is_finite() && ratio > 0.0);
    let scaled =
        thm_bridge_check(f, &g.fp, &g.harmonic.affine(-2.0, 0.0), 3, &grid, 6, &o).unwrap();
    assert!((scaled.max_ratio.unwrap() - ratio).abs() < 1e-9 * ratio);
    let finer = thm_bridge_check(f, &g.fp, &g.harmonic, 3, &grid, 7, &o).unwrap();
    let r2 = finer.max_ratio.unwrap();
    assert!(r2.max(ratio) / r2.min(ratio) < 2.0);
}

#[test]
fn gasket_suite_has_finite_ratios() {
    let g = gasket();
    let suite = standard_suite(&g.fractal, &g.fp, 5, 7, 3).unwrap();
    let so = SuiteOptions {
        random_extensions: 5,
        m_max: 6,
        seed: 3,
        phi: opts(Estimator::CellQuadrature, 3),
        tail: DEFAULT_TAIL,
    };
    let rows = run_ne_suite(&g.fractal, &suite, &so).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows[0].report.degenerate);
    for row in &rows[1..] {
        let r = row.report.ratio.unwrap();
        assert!(r.is_finite() && r >= 1.0, "{}: {r}", row.function);
        assert!(row.drift.unwrap() < 2.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn functional_scales_and_ignores_shifts(
        lambda in -4.0f64..4.0,
        c in -10.0f64..10.0,
        r in 0.1f64..0.6,
        mc in any::<bool>(),
    ) {
        let g = gasket();
        let est = if mc { Estimator::MonteCarlo } else { Estimator::CellQuadrature };
        let mut o = opts(est, 5);
        o.samples = 2_000;
        let m = resolution_level(g.fractal.ratio(), r);
        let base = phi_estimate(&g.fractal, &g.harmonic, r, m, &o, 0).unwrap().value;
        let moved = phi_estimate(&g.fractal, &g.harmonic.affine(lambda, c), r, m, &o, 0).unwrap().value;
        let want = lambda * lambda * base;
        prop_assert!(base >= 0.0);
        prop_assert!((moved - want).abs() <= 1e-9 * want.max(1e-300), "{moved} vs {want}");
    }
}
