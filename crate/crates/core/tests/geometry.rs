use ksnest::geometry::{condition_h_constant, distance, Fractal, IfsSpec, Word};
use proptest::prelude::*;

fn builtins() -> Vec<Fractal> {
    vec![
        Fractal::builtin("sierpinski-gasket").unwrap(),
        Fractal::builtin("vicsek").unwrap(),
    ]
}

#[test]
fn level_graphs_are_nested_prefixes() {
    for f in builtins() {
        for n in 0..4 {
            let g = f.graph(n).unwrap();
            let h = f.graph(n + 1).unwrap();
            assert_eq!(g.cells().len(), f.n_maps().pow(n as u32));
            assert!(g.cells().iter().all(|c| c.len() == f.boundary_len()));
            // V_n reappears as the first |V_n| vertices of V_{n+1}
            for v in 0..g.vertex_count() {
                assert!(
                    distance(g.point(v), h.point(v)) < 1e-12,
                    "{} level {n}",
                    f.name()
                );
            }
        }
    }
}

#[test]
fn gasket_vertex_count_formula() {
    let f = Fractal::builtin("sierpinski-gasket").unwrap();
    for n in 0..=5 {
        let want = (3usize.pow(n as u32 + 1) + 3) / 2;
        assert_eq!(f.graph(n).unwrap().vertex_count(), want, "level {n}");
    }
}

#[test]
fn cells_meet_only_at_their_own_vertices() {
    for f in builtins() {
        for n in 1..=4 {
            let g = f.graph(n).unwrap();
            let gap = f.ratio().powi(n as i32) * f.vertex_gap();
            // distinct ids are geometrically separated
            for a in 0..g.vertex_count() {
                for b in a + 1..g.vertex_count() {
                    assert!(distance(g.point(a), g.point(b)) > 0.5 * gap);
                }
            }
            // every incidence entry lists a cell that really has the vertex
            for v in 0..g.vertex_count() {
                for &c in g.incidence(v) {
                    assert!(g.cells()[c].contains(&v));
                }
            }
            // a shared id between two cells is a boundary image of both
            for (i, ci) in g.cells().iter().enumerate() {
                for cj in &g.cells()[i + 1..] {
                    for v in ci.iter().filter(|v| cj.contains(v)) {
                        let wi = ci.iter().position(|x| x == v).unwrap();
                        let wj = cj.iter().position(|x| x == v).unwrap();
                        assert!(wi < f.boundary_len() && wj < f.boundary_len());
                    }
                }
            }
        }
    }
}

#[test]
fn cell_measures_sum_to_one() {
    for f in builtins() {
        for m in 0..=4 {
            let total: f64 = (0..f.n_maps().pow(m))
                .map(|i| {
                    f.ifs()
                        .cell_measure(&Word::from_index(i, m as usize, f.n_maps()))
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn symmetry_group_maps_cells_to_cells() {
    for f in builtins() {
        for n in 0..=3 {
            f.symmetry().verify_cells(&f.graph(n).unwrap()).unwrap();
        }
    }
    assert_eq!(builtins()[0].symmetry().order(), 6);
    assert_eq!(builtins()[1].symmetry().order(), 8);
}

#[test]
fn vicsek_corner_cell_touches_only_the_centre() {
    let f = Fractal::builtin("vicsek").unwrap();
    let g = f.graph(1).unwrap();
    let anchors = &f.ifs().anchors;
    let mean: Vec<f64> = (0..2)
        .map(|d| anchors.iter().map(|a| a[d]).sum::<f64>() / 5.0)
        .collect();
    let centre = anchors
        .iter()
        .position(|a| distance(a, &mean) < 1e-12)
        .unwrap();
    for i in (0..5).filter(|&i| i != centre) {
        assert_eq!(
            g.neighbor_cells(&Word::new(vec![i])),
            vec![Word::new(vec![centre])]
        );
    }
    assert!(f
        .graph(0)
        .unwrap()
        .neighbor_cells(&Word::empty())
        .is_empty());
}

#[test]
fn condition_h_constant_is_positive() {
    for f in builtins() {
        let h = condition_h_constant(&f, 4).unwrap();
        assert!(h.c > 0.0 && h.c.is_finite(), "{}: {h:?}", f.name());
    }
}

#[test]
fn config_file_builds_the_same_gasket() {
    let text = r#"
name = "triangle"
dimension = 2
ratio = 0.5
anchors = [[0.0, 0.0], [2.0, 0.0], [1.0, 1.7320508075688772]]
"#;
    let f = Fractal::new(IfsSpec::from_config_str(text).unwrap()).unwrap();
    let g = Fractal::builtin("sierpinski-gasket").unwrap();
    for n in 0..=3 {
        assert_eq!(
            f.graph(n).unwrap().vertex_count(),
            g.graph(n).unwrap().vertex_count()
        );
    }
    assert!((f.alpha() - g.alpha()).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cell_point_composes_maps(letters in proptest::collection::vec(0usize..5, 0..5), t in 0.0f64..1.0) {
        let ifs = IfsSpec::vicsek();
        let q = vec![t, 1.0 - t];
        let mut direct = q.clone();
        for &i in letters.iter().rev() {
            direct = ifs.apply(i, &direct);
        }
        let via = ifs.cell_point(&Word::new(letters.clone()), &q);
        prop_assert!(distance(&direct, &via) < 1e-13);
    }
}
