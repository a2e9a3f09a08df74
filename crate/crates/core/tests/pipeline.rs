use proptest::prelude::*;
use symlab_core::asymptotics::widom_psi;
use symlab_core::branches::{solve_branches, BranchContext};
use symlab_core::cubic::{cubic_build, cubic_z0, CubicParams};
use symlab_core::polyseq::eval_q;
use symlab_core::verify::{run_suite, Suite};
use symlab_core::{critical_structure, Complex64};

fn params() -> impl Strategy<Value = CubicParams> {
    (-3.0f64..-0.2, 0.1f64..0.9).prop_map(|(x1, t)| CubicParams { x1, x2: x1 * t })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cubic_family_branch_points_match(p in params()) {
        let c = cubic_build(p).unwrap();
        let cs = critical_structure(&c.sym).unwrap();
        for l in c.lambda {
            let hit = cs.lambda.iter().any(|m| (m - l).abs() < 1e-8 * (1.0 + l.abs()));
            prop_assert!(hit, "{l} not in {:?}", cs.lambda);
        }
    }

    #[test]
    fn cubic_z0_is_smallest_branch(p in params(), re in -20.0f64..20.0, im in 0.5f64..20.0) {
        let c = cubic_build(p).unwrap();
        let lam = Complex64::new(re, im);
        let want = solve_branches(&c.sym, lam).unwrap().z[0];
        let got = cubic_z0(p, lam).unwrap();
        prop_assert!((got - want).norm() < 1e-9 * want.norm());
    }

    #[test]
    fn widom_identity_across_family(p in params(), re in -10.0f64..10.0, im in 0.5f64..10.0, n in 0usize..15) {
        let c = cubic_build(p).unwrap();
        let lam = Complex64::new(re, im);
        let q = eval_q(&c.sym, n, lam);
        let w = widom_psi(&c.sym, n, 0, lam).unwrap();
        prop_assert!((w - q).norm() < 1e-8 * q.norm());
    }
}

#[test]
fn s1_is_a_probability_measure_across_family() {
    for (x1, x2) in [(-2.0, -1.0), (-1.0, -0.3), (-3.0, -2.5)] {
        let c = cubic_build(CubicParams { x1, x2 }).unwrap();
        let ctx = BranchContext::new(&c.sym).unwrap();
        assert!((ctx.s_measure(1).mass().unwrap() - 1.0).abs() < 1e-8);
        assert!((ctx.s_measure(2).mass().unwrap() - 0.5).abs() < 1e-5);
    }
}

#[test]
fn fast_suite_reports_every_check() {
    let c = cubic_build(CubicParams { x1: -2.0, x2: -1.0 }).unwrap();
    let rep = run_suite(&c.sym, Suite::Fast).unwrap();
    assert!(rep.passed);
    assert!(rep.checks.iter().all(|c| c.measured.is_finite()));
    assert!(rep.checks.len() >= 10);
}
