use proptest::prelude::*;

use ldplab_core::catalog::{discrete_model, laplace_model};
use ldplab_core::concentration::{Concentration, MaxPlusDensity};
use ldplab_core::conjugate::{conjugate_rate, TestingFamily};
use ldplab_core::cvxint::{check_duality_bounds, check_integral_properties, convex_integral, RateField, RateProvenance};
use ldplab_core::entropy::{Asymptotics, EntropyRoute};
use ldplab_core::extgrid::ExtendedValue::{self, Finite, NegInf};
use ldplab_core::verify::{gartner_ellis_pipeline, PipelineConfig};
use ldplab_core::{GridFunction, GridSpace, PointSet, Regularity};

/// A multiple of 1/64 in `[-3, 3]` or, with probability about 1/6, `-inf`.
/// Dyadic values keep the floating-point identities exact.
fn ext_value() -> impl Strategy<Value = ExtendedValue> {
    prop_oneof![5 => (-192i64..=192).prop_map(|k| Finite(k as f64 / 64.0)), 1 => Just(NegInf)]
}

/// Grid size, a max-plus density with maximum 0, and a function.
fn instance() -> impl Strategy<Value = (usize, Vec<ExtendedValue>, Vec<ExtendedValue>)> {
    (2usize..=12).prop_flat_map(|n| {
        (
            Just(n),
            (prop::collection::vec(ext_value(), n), 0..n).prop_map(|(mut j, top)| {
                for v in j.iter_mut() {
                    if let Finite(x) = v {
                        *x = -x.abs();
                    }
                }
                j[top] = Finite(0.0);
                j
            }),
            prop::collection::vec(ext_value(), n),
        )
    })
}

fn density(space: &GridSpace, j: Vec<ExtendedValue>) -> MaxPlusDensity {
    MaxPlusDensity::new(GridFunction::new(space.clone(), j, Regularity::Measurable).unwrap()).unwrap()
}

fn rate_of(space: &GridSpace, j: &MaxPlusDensity) -> RateField {
    let values = j.density().values().iter().map(|v| v.scale(-1.0)).collect();
    RateField::new(space.clone(), values, RateProvenance::Analytic).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn convex_integral_is_max_of_sum((n, j, f) in instance()) {
        let space = GridSpace::interval(0.0, (n - 1) as f64, n).unwrap();
        let f = GridFunction::new(space.clone(), f, Regularity::Measurable).unwrap();
        let expected = j.iter().zip(f.values()).map(|(a, b)| a.checked_add(*b).unwrap()).max().unwrap();
        let jd = density(&space, j);
        prop_assert_eq!(convex_integral(&jd, &f).unwrap(), expected);
    }

    #[test]
    fn integral_properties_hold_exactly((n, j, _f) in instance(), seed in any::<u64>()) {
        let space = GridSpace::interval(0.0, (n - 1) as f64, n).unwrap();
        let jd = density(&space, j);
        let report = check_integral_properties(&jd, 20, seed, 0.0).unwrap();
        prop_assert!(report.maxitive);
        for (k, v) in &report.violations {
            prop_assert_eq!(*v, 0.0, "{} violated", k);
        }
        prop_assert!(report.pass);
    }

    #[test]
    fn duality_bounds_hold_over_all_subsets((n, j, _f) in instance(), seed in any::<u64>()) {
        let space = GridSpace::interval(0.0, (n - 1) as f64, n).unwrap();
        let jd = density(&space, j);
        let rate = rate_of(&space, &jd);
        let report = check_duality_bounds(&jd, &rate, 10, seed, 0.0).unwrap();
        prop_assert_eq!(report.mode.as_str(), "exhaustive");
        prop_assert!(report.pass, "{:?}", report.counterexample);
        prop_assert_eq!(report.lower.worst_set_violation, 0.0);
        prop_assert_eq!(report.upper.worst_function_violation, 0.0);
    }

    #[test]
    fn maxplus_set_function_is_maxitive((n, j, _f) in instance(), a in any::<u64>(), b in any::<u64>()) {
        let space = GridSpace::interval(0.0, (n - 1) as f64, n).unwrap();
        let jd = density(&space, j);
        let a = PointSet::from_bits(n, a & ((1 << n) - 1));
        let b = PointSet::from_bits(n, b & ((1 << n) - 1));
        prop_assert_eq!(jd.eval(&a.union(&b)), jd.eval(&a).max(jd.eval(&b)));
    }

    #[test]
    fn interior_and_closure_are_dual(n in 2usize..=40, bits in any::<u64>()) {
        let space = GridSpace::interval(-1.0, 1.0, n).unwrap();
        let s = PointSet::from_bits(n, bits & (u64::MAX >> (64 - n)));
        let int = s.interior(&space);
        let cl = s.closure(&space);
        prop_assert!(int.is_subset(&s));
        prop_assert!(s.is_subset(&cl));
        prop_assert_eq!(int.complement(), s.complement().closure(&space));
        prop_assert!(int.interior(&space).is_subset(&int));
        prop_assert_eq!(cl.complement().interior(&space).complement(), cl.closure(&space));
    }

    #[test]
    fn interior_and_closure_are_dual_in_two_dimensions(nx in 2usize..=6, ny in 2usize..=6, bits in any::<u64>()) {
        let space = GridSpace::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![nx, ny]).unwrap();
        let len = space.len();
        let s = PointSet::from_bits(len, bits & (u64::MAX >> (64 - len)));
        prop_assert_eq!(s.interior(&space).complement(), s.complement().closure(&space));
        prop_assert!(s.interior(&space).is_subset(&s));
    }
}

fn random_family(space: &GridSpace, values: &[Vec<f64>]) -> TestingFamily {
    let params = (0..values.len()).map(|k| vec![k as f64]).collect();
    TestingFamily::custom(space, params, values.to_vec(), "custom:random").unwrap()
}

fn finite_instance() -> impl Strategy<Value = (usize, Vec<f64>, Vec<Vec<f64>>)> {
    (3usize..=10).prop_flat_map(|n| {
        (
            Just(n),
            (prop::collection::vec(-3.0f64..0.0, n), 0..n).prop_map(|(mut j, top)| {
                j[top] = 0.0;
                j
            }),
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), 1..8),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugate_never_exceeds_the_true_rate((n, j, members) in finite_instance()) {
        let space = GridSpace::interval(0.0, 1.0, n).unwrap();
        let density = GridFunction::new(space.clone(), j.iter().copied().map(Finite).collect(), Regularity::Measurable).unwrap();
        let model = discrete_model(density, Asymptotics::default()).unwrap();
        let conj = conjugate_rate(&model, &random_family(&space, &members), EntropyRoute::Analytic).unwrap();
        for (i, v) in conj.values.iter().enumerate() {
            prop_assert!(v.to_f64() <= -j[i] + 1e-12, "point {}: {} > {}", i, v, -j[i]);
        }
    }

    #[test]
    fn conjugate_grows_with_the_family((n, j, members) in finite_instance(), extra in prop::collection::vec(-2.0f64..2.0, 10)) {
        let space = GridSpace::interval(0.0, 1.0, n).unwrap();
        let density = GridFunction::new(space.clone(), j.iter().copied().map(Finite).collect(), Regularity::Measurable).unwrap();
        let model = discrete_model(density, Asymptotics::default()).unwrap();
        let small = conjugate_rate(&model, &random_family(&space, &members), EntropyRoute::Analytic).unwrap();
        let mut bigger = members.clone();
        bigger.push(extra[..n].to_vec());
        let large = conjugate_rate(&model, &random_family(&space, &bigger), EntropyRoute::Analytic).unwrap();
        for (a, b) in small.values.iter().zip(&large.values) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn entropy_is_translation_invariant((n, j, members) in finite_instance(), c in -5.0f64..5.0, k in 1u32..300) {
        let space = GridSpace::interval(0.0, 1.0, n).unwrap();
        let density = GridFunction::new(space.clone(), j.iter().copied().map(Finite).collect(), Regularity::Measurable).unwrap();
        let model = discrete_model(density, Asymptotics::default()).unwrap();
        let f = GridFunction::new(space.clone(), members[0].iter().copied().map(Finite).collect(), Regularity::Continuous).unwrap();
        let a = model.entropy_at(&f.add_const(c), k).unwrap();
        let b = model.entropy_at(&f, k).unwrap().add_finite(c);
        prop_assert!(a.distance(b) <= 1e-8);
        prop_assert!(model.entropy_at(&GridFunction::constant(&space, c), k).unwrap().distance(Finite(c)) <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn exposing_family_always_certifies(scale in 0.5f64..1.5, shift in -0.5f64..0.5) {
        let space = GridSpace::interval(-3.0, 3.0, 241).unwrap();
        let model = laplace_model(&space, Asymptotics::default()).unwrap();
        let family = TestingFamily::inverted_v(&space, -3.0, 3.0, 0.025).unwrap().shifted(shift * scale);
        let out = gartner_ellis_pipeline(&model, &family, &PipelineConfig { function_count: 8, ..PipelineConfig::default() }).unwrap();
        prop_assert_eq!(out.report.summary.status.as_str(), "certified");
        prop_assert!(out.report.summary.ldp_pass && out.report.summary.lp_pass);
        prop_assert!(out.report.is_consistent());
    }
}
