use palm_core::calibration::rescale_draws;
use palm_core::numerics::column_means;
use palm_core::sampler::equal_tailed_interval;
use palm_core::{
    cell_counts, GridPartition, IntegralConfig, LgcpParams, ModelSpec, ObjectiveOptions, PairIndex, PalmObjective,
    Point, PointPattern, ThomasParams, Window,
};
use proptest::prelude::*;

fn pattern_strategy(max: usize) -> impl Strategy<Value = PointPattern> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..max).prop_map(|v| {
        let pts = v.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        PointPattern::new(pts, Window::unit_square()).unwrap()
    })
}

proptest! {
    #[test]
    fn pair_index_matches_brute_force(p in pattern_strategy(80), r in 0.01f64..0.6) {
        let idx = PairIndex::build(&p, r).unwrap();
        let pts = p.points();
        let mut brute = Vec::new();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i != j && pts[i].distance(pts[j]) < r {
                    brute.push((i, j));
                }
            }
        }
        let mut got: Vec<(usize, usize)> = idx.iter().map(|(i, j, _)| (i, j)).collect();
        got.sort();
        prop_assert_eq!(got, brute);
        for (i, j, _) in idx.iter() {
            prop_assert!(idx.contains(j, i));
        }
    }

    #[test]
    fn pair_count_grows_with_radius(p in pattern_strategy(60), r in 0.01f64..0.4, extra in 0.0f64..0.3) {
        let small = PairIndex::build(&p, r).unwrap();
        let large = PairIndex::build(&p, r + extra).unwrap();
        prop_assert!(small.len() <= large.len());
        prop_assert_eq!(small.len() % 2, 0);
    }

    #[test]
    fn cell_counts_sum_to_pattern_size(p in pattern_strategy(120), nx in 1usize..20, ny in 1usize..20) {
        let grid = GridPartition::new(Window::unit_square(), nx, ny).unwrap();
        let counts = cell_counts(&p, &grid).unwrap();
        prop_assert_eq!(counts.len(), nx * ny);
        prop_assert_eq!(counts.iter().sum::<usize>(), p.len());
    }

    #[test]
    fn palm_objective_is_translation_invariant(
        p in pattern_strategy(50),
        dx in -5.0f64..5.0,
        dy in -5.0f64..5.0,
        thomas in any::<bool>(),
    ) {
        let model = if thomas {
            ModelSpec::Thomas(ThomasParams::new(10.0, 30.0, 0.0025).unwrap())
        } else {
            ModelSpec::Lgcp(LgcpParams::from_intensity(300.0, 1.0, 0.1).unwrap())
        };
        let cfg = IntegralConfig::radial(0.2);
        let opts = ObjectiveOptions::default();
        let a = PalmObjective::new(&p, &PairIndex::build(&p, 0.2).unwrap(), &cfg, None, &opts).unwrap();
        let q = p.translate(dx, dy);
        let b = PalmObjective::new(&q, &PairIndex::build(&q, 0.2).unwrap(), &cfg, None, &opts).unwrap();
        let (la, lb) = (a.log_palm(&model), b.log_palm(&model));
        prop_assert!((la - lb).abs() <= 1e-9 * (1.0 + la.abs()), "{} vs {}", la, lb);
    }

    #[test]
    fn intervals_nest_as_alpha_shrinks(
        xs in prop::collection::vec(-100.0f64..100.0, 5..200),
        a1 in 0.01f64..0.49,
        a2 in 0.01f64..0.49,
    ) {
        let (wide, narrow) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        let (lw, uw) = equal_tailed_interval(&xs, wide);
        let (ln, un) = equal_tailed_interval(&xs, narrow);
        prop_assert!(lw <= ln && un <= uw);
        prop_assert!(lw <= uw);
    }

    #[test]
    fn rescaling_keeps_means_and_scales_spread(
        rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2), 3..60),
        e0 in 0.2f64..5.0,
        e1 in 0.2f64..5.0,
    ) {
        let hat = column_means(&rows);
        let out = rescale_draws(&rows, &hat, &[e0, e1]).unwrap();
        let m = column_means(&out);
        for k in 0..2 {
            prop_assert!((m[k] - hat[k]).abs() <= 1e-9 * (1.0 + hat[k].abs()));
        }
        for (a, b) in rows.iter().zip(&out) {
            prop_assert!(((b[0] - hat[0]) - e0 * (a[0] - hat[0])).abs() < 1e-9);
            prop_assert!(((b[1] - hat[1]) - e1 * (a[1] - hat[1])).abs() < 1e-9);
        }
        prop_assert_eq!(rescale_draws(&rows, &hat, &[1.0, 1.0]).unwrap(), rows);
    }
}
