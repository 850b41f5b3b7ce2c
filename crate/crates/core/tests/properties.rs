use std::sync::Arc;

use proptest::prelude::*;

use nonlocal_atlas::analyzer::{Analyzer, AnalyzerOptions};
use nonlocal_atlas::aux_solver::AuxProblem;
use nonlocal_atlas::bounds::BoundsContext;
use nonlocal_atlas::mesh::{Mesh, MeshSpec};
use nonlocal_atlas::model::{
    Coefficient, CoefficientKind, CoefficientRange, Nonlinearity, NonlinearityKind, NonlocalFunctional,
};
use nonlocal_atlas::qmap::{tabulate_q, QMap, SamplingSpec};

fn coarse() -> Arc<Mesh> {
    Arc::new(Mesh::new(&MeshSpec::interval(1.0, 128)).unwrap())
}

fn map(nl: NonlinearityKind, gamma: f64) -> QMap {
    let aux = AuxProblem::new(coarse(), Nonlinearity::new(nl).unwrap()).unwrap();
    QMap::new(aux, NonlocalFunctional::LpOfU { gamma })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn power_q_scales_homogeneously(p in 1.15f64..1.9, gamma in 0.5f64..3.0, s in 0.5f64..20.0, k in 1.1f64..4.0) {
        let m = map(NonlinearityKind::Power { p }, gamma);
        let q1 = m.eval(s).unwrap().0;
        let q2 = m.eval(k * s).unwrap().0;
        let expected = k.powf(gamma / (2.0 - p));
        prop_assert!((q2 / q1 / expected - 1.0).abs() < 1e-6, "{} vs {expected}", q2 / q1);
    }

    #[test]
    fn saturating_q_is_increasing(beta0 in 1.2f64..10.0, gamma in 0.5f64..3.0, u in 0.02f64..0.9, du in 0.01f64..0.5) {
        let m = map(NonlinearityKind::Saturating { beta0 }, gamma);
        let lambda1 = m.aux().lambda1();
        // admissible s lies in (λ₁/β₀, ∞)
        let s1 = lambda1 / beta0 * (1.0 + u * 4.0);
        let s2 = s1 * (1.0 + du);
        let q1 = m.eval(s1).unwrap().0;
        let q2 = m.eval(s2).unwrap().0;
        prop_assert!(q2 > q1, "Q({s1}) = {q1}, Q({s2}) = {q2}");
    }

    #[test]
    fn rational_q_is_increasing(theta0 in 0.1f64..1.0, ratio in 1.5f64..8.0, u in 0.05f64..0.9) {
        let beta0 = theta0 * ratio;
        let m = map(NonlinearityKind::Rational { theta0, beta0 }, 1.0);
        let r = m.s_range();
        let s1 = r.lo + u * (r.hi - r.lo);
        let s2 = s1 + 0.05 * (r.hi - s1);
        prop_assert!(m.eval(s2).unwrap().0 > m.eval(s1).unwrap().0);
    }

    #[test]
    fn saturating_q_stays_within_bounds(beta0 in 1.5f64..10.0, gamma in 1.0f64..3.0) {
        let m = map(NonlinearityKind::Saturating { beta0 }, gamma);
        let ctx = BoundsContext::new(m.aux().mesh(), m.functional()).unwrap();
        let spec = SamplingSpec { samples: 16, refine_rounds: 0, ..SamplingSpec::default() };
        let table = tabulate_q(&m, &spec).unwrap();
        let report = ctx.check_table(m.aux().nonlinearity(), &table, 1e-9);
        prop_assert!(report.checked > 0);
        prop_assert!(report.holds(), "{:?}", report.violations);
    }

    #[test]
    fn polynomial_zeros_are_the_distinct_positive_roots(
        roots in prop::collection::vec(0.1f64..10.0, 1..5),
        repeat in 0usize..4,
    ) {
        let mut all = roots.clone();
        all.push(roots[repeat % roots.len()]);
        all.push(-1.0);
        let coef = Coefficient::new(
            CoefficientKind::PolynomialBumps { roots: all, scale: 1.0 },
            &CoefficientRange::default(),
        ).unwrap();
        let mut expected: Vec<f64> = roots.clone();
        expected.push(0.0);
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        expected.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        prop_assert_eq!(coef.zeros().len(), expected.len());
        for (z, e) in coef.zeros().iter().zip(&expected) {
            prop_assert!((z - e).abs() <= 1e-12 * (1.0 + e));
        }
        for w in coef.zeros().windows(2) {
            prop_assert!(coef.eval(0.5 * (w[0] + w[1])) > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn fixed_points_below_threshold_reconstruct(beta0 in 1.5f64..6.0, frac in 0.2f64..0.9) {
        let m = map(NonlinearityKind::Saturating { beta0 }, 1.0);
        let coef = Coefficient::new(
            CoefficientKind::AbsSin,
            &CoefficientRange { k_max: Some(1), ..CoefficientRange::default() },
        ).unwrap();
        let an = Analyzer::new(m, coef, AnalyzerOptions::default()).unwrap();
        let th = an.thresholds(0).unwrap();
        let lambda = frac * th.lambda0.expect("finite threshold");
        let fps = an.find_fixed_points(0, lambda).unwrap();
        prop_assert!(fps.len() >= 2, "{} fixed points at {lambda}", fps.len());
        for fp in fps {
            let rec = an.reconstruct_solution(lambda, fp.alpha).unwrap();
            prop_assert!(rec.g_residual <= 1e-8 * (1.0 + rec.alpha), "{}", rec.g_residual);
            prop_assert!((rec.alpha - fp.alpha).abs() <= 1e-4 * (1.0 + fp.alpha));
        }
    }
}
