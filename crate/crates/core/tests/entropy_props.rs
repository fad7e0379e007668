use metric_entropy_lab::divergences::DiscreteMeasure;
use metric_entropy_lab::entropy::{
    covering_number_exact, entropy_profile, envelope_with_gamma, greedy_net, lemma1_check,
    packing_number_exact, small_ball, Centers, ProfileOptions, DEFAULT_EXACT_THRESHOLD,
};
use metric_entropy_lab::{Exec, Grid, MetricSpec, PointSet, SampledFunction};
use proptest::prelude::*;

fn metric_strategy() -> impl Strategy<Value = MetricSpec> {
    prop_oneof![
        Just(MetricSpec::Supremum),
        Just(MetricSpec::Lp { p: 1.0 }),
        Just(MetricSpec::Lp { p: 2.0 }),
        Just(MetricSpec::Lp { p: 3.0 }),
    ]
}

fn point_set(max: usize) -> impl Strategy<Value = PointSet> {
    (
        metric_strategy(),
        prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..=max),
    )
        .prop_map(|(metric, rows)| {
            let grid = Grid::uniform(3).unwrap();
            let curves = rows
                .into_iter()
                .map(|v| SampledFunction::new(grid.clone(), v).unwrap())
                .collect();
            PointSet::new(curves, metric).unwrap()
        })
}

const T: usize = DEFAULT_EXACT_THRESHOLD;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn covering_packing_sandwich(ps in point_set(10), delta in 0.05f64..4.0) {
        let n_int = covering_number_exact(&ps, delta, Centers::Intrinsic, T).unwrap();
        let d = packing_number_exact(&ps, delta, T).unwrap();
        let n_half = covering_number_exact(&ps, delta / 2.0, Centers::Intrinsic, T).unwrap();
        prop_assert!(n_int <= d, "N({delta}) = {n_int} > D = {d}");
        prop_assert!(d <= n_half, "D({delta}) = {d} > N(delta/2) = {n_half}");
    }

    #[test]
    fn ambient_intrinsic_sandwich(ps in point_set(8), delta in 0.05f64..4.0) {
        let amb = covering_number_exact(&ps, delta, Centers::Midpoints, T).unwrap();
        let int = covering_number_exact(&ps, delta, Centers::Intrinsic, T).unwrap();
        let amb_half = covering_number_exact(&ps, delta / 2.0, Centers::Midpoints, T).unwrap();
        prop_assert!(amb <= int);
        prop_assert!(int <= amb_half);
    }

    #[test]
    fn greedy_net_is_a_separated_cover(ps in point_set(10), delta in 0.05f64..4.0) {
        let net = greedy_net(&ps, delta).unwrap();
        for (a, &i) in net.iter().enumerate() {
            for &j in &net[a + 1..] {
                prop_assert!(ps.dist(i, j) >= delta);
            }
        }
        for x in 0..ps.len() {
            prop_assert!(net.iter().any(|&c| ps.dist(c, x) < delta));
        }
        let exact = covering_number_exact(&ps, delta, Centers::Intrinsic, T).unwrap();
        prop_assert!(net.len() >= exact);
    }

    #[test]
    fn profile_counts_do_not_increase_with_radius(ps in point_set(12), steps in 2usize..6) {
        let radii: Vec<f64> = (0..steps).map(|k| 3.0 * 0.6f64.powi(k as i32)).collect();
        for intrinsic in [true, false] {
            let opts = ProfileOptions { intrinsic, ..ProfileOptions::default() };
            let prof = entropy_profile(&ps, &radii, opts, Exec::Sequential).unwrap();
            prop_assert!(prof.counts().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn small_ball_mass_is_at_least_own_weight(
        vals in prop::collection::vec(-3.0f64..3.0, 2..20),
        h in 0.01f64..2.0,
    ) {
        let ps = PointSet::constants(&vals, MetricSpec::Supremum).unwrap();
        let p = DiscreteMeasure::uniform((0..vals.len()).collect()).unwrap();
        for x in 0..vals.len() {
            let psi = small_ball(&ps, &p, x, h).unwrap();
            prop_assert!(psi >= p.weight_of(x) && psi <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn lemma1_holds_whenever_certified(
        vals in prop::collection::vec(-3.0f64..3.0, 2..40),
        masses in prop::collection::vec(0.01f64..1.0, 40),
        h in 0.05f64..2.0,
        delta in 0.001f64..0.5,
    ) {
        let ps = PointSet::constants(&vals, MetricSpec::Supremum).unwrap();
        let p = DiscreteMeasure::from_masses((0..vals.len()).collect(), masses[..vals.len()].to_vec()).unwrap();
        let radii: Vec<f64> = (0..8).map(|k| 2.0 * 0.7f64.powi(k)).collect();
        let prof = entropy_profile(&ps, &radii, ProfileOptions::default(), Exec::Sequential).unwrap();
        let Ok(env) = envelope_with_gamma(&prof, (radii[7], radii[0]), 1.0) else {
            return Ok(());
        };
        if let Ok(rec) = lemma1_check(&ps, &p, h, delta, &env) {
            prop_assert!(rec.holds, "lhs {} > rhs {}", rec.lhs, rec.rhs);
        }
    }
}

#[test]
fn parallel_and_sequential_profiles_agree() {
    let grid = Grid::uniform(5).unwrap();
    let curves: Vec<SampledFunction> = (0..40)
        .map(|i| SampledFunction::from_fn(grid.clone(), |t| ((i as f64) * 0.37 + t).sin()).unwrap())
        .collect();
    let ps = PointSet::new(curves, MetricSpec::Supremum).unwrap();
    let radii = [1.0, 0.5, 0.25, 0.1];
    let a = entropy_profile(&ps, &radii, ProfileOptions::default(), Exec::Sequential).unwrap();
    let b = entropy_profile(
        &ps.clone(),
        &radii,
        ProfileOptions::default(),
        Exec::Parallel,
    )
    .unwrap();
    assert_eq!(a, b);
}
