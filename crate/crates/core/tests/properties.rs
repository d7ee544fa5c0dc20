use std::sync::Arc;

use levy_malliavin::chaos_oracle::{permanent, s2_norm_formula};
use levy_malliavin::harness::{read_csv, write_csv, ResultRow};
use levy_malliavin::levy_model::{m_measure, mu_measure, JumpMeasure, LevyTriplet, Rect};
use levy_malliavin::path_sim::PathSampler;
use levy_malliavin::profile::{smoothstep5, Profile};
use levy_malliavin::denseness_lab::SmoothIndicator;
use proptest::prelude::*;

fn triplet() -> Arc<LevyTriplet> {
    Arc::new(LevyTriplet::new(0.3, 0.8, JumpMeasure::atoms([(1.0, 2.0), (-0.5, 1.0), (0.25, 0.5)]).unwrap()).unwrap())
}

proptest! {
    #[test]
    fn m_is_additive(t0 in 0.0..1.0f64, dt in 0.01..2.0f64, x0 in -2.0..0.0f64, dx in 0.01..3.0f64,
                     ts in 0.01..0.99f64, xs in 0.01..0.99f64) {
        let tr = triplet();
        let (t1, x1) = (t0 + dt, x0 + dx);
        let (tm, xm) = (t0 + ts * dt, x0 + xs * dx);
        let whole = m_measure(&tr, &Rect::new(t0, t1, x0, x1).unwrap()).unwrap();
        let by_time = m_measure(&tr, &Rect::new(t0, tm, x0, x1).unwrap()).unwrap()
            + m_measure(&tr, &Rect::new(tm, t1, x0, x1).unwrap()).unwrap();
        let by_size = m_measure(&tr, &Rect::new(t0, t1, x0, xm).unwrap()).unwrap()
            + m_measure(&tr, &Rect::new(t0, t1, xm, x1).unwrap()).unwrap();
        prop_assert!((whole - by_time).abs() <= 1e-12 * (1.0 + whole));
        prop_assert!((whole - by_size).abs() <= 1e-12 * (1.0 + whole));
        prop_assert!(whole >= 0.0);
    }

    #[test]
    fn mu_of_the_line_is_the_variance_rate(a in -10.0..-2.0f64, b in 2.0..10.0f64) {
        let tr = triplet();
        prop_assert!((mu_measure(&tr, a, b).unwrap() - tr.variance_rate()).abs() < 1e-12);
    }

    #[test]
    fn increments_telescope(seed in any::<u64>(), rep in 0u64..1000, s in 0.0..0.5f64, t in 0.5..1.0f64, u in 1.0..2.0f64) {
        let sampler = PathSampler::new(triplet(), 2.0, &[s, t, u]).unwrap();
        let p = sampler.sample(rep, seed);
        let whole = p.increment(s, u).unwrap();
        let parts = p.increment(s, t).unwrap() + p.increment(t, u).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + whole.abs()));
        let again = sampler.sample(rep, seed);
        prop_assert_eq!(p.jumps(), again.jumps());
        prop_assert_eq!(p.value_at(u).unwrap(), again.value_at(u).unwrap());
    }

    #[test]
    fn permanent_ignores_row_order(n in 1usize..6, vals in proptest::collection::vec(-2.0..2.0f64, 36), swap in 0usize..5) {
        let a: Vec<f64> = vals[..n * n].to_vec();
        let (i, j) = (swap % n, (swap + 1) % n);
        let mut b = a.clone();
        for c in 0..n {
            b.swap(i * n + c, j * n + c);
        }
        let (pa, pb) = (permanent(&a, n).unwrap(), permanent(&b, n).unwrap());
        prop_assert!((pa - pb).abs() <= 1e-10 * (1.0 + pa.abs()));
        let ones = permanent(&vec![1.0; n * n], n).unwrap();
        prop_assert_eq!(ones, (1..=n).product::<usize>() as f64);
    }

    #[test]
    fn s2_formula_is_bounded_and_decreasing(m in 1usize..5, n in 1usize..200, t in 0.1..3.0f64, c in 0.1..10.0f64) {
        let v = s2_norm_formula(m, n, t, c).unwrap();
        let next = s2_norm_formula(m, n + 1, t, c).unwrap();
        let top = c * t.powi(m as i32);
        prop_assert!(v >= 0.0 && v <= top * (1.0 + 1e-15));
        prop_assert!(next <= v * (1.0 + 1e-15));
    }

    #[test]
    fn smooth_indicator_is_sandwiched(a in -2.0..0.9f64, len in 0.2..2.0f64, delta in 0.01..0.5f64, x in -4.0..4.0f64) {
        let tr = triplet();
        let b = a + len;
        if let Ok(s) = SmoothIndicator::fit(&tr, a, b, delta) {
            let v = s.value(x);
            let (c0, c1) = s.inner();
            let (u0, u1) = s.outer();
            prop_assert!((0.0..=1.0).contains(&v));
            if c0 <= x && x <= c1 {
                prop_assert_eq!(v, 1.0);
            }
            if x <= u0 || x >= u1 {
                prop_assert_eq!(v, 0.0);
            }
            prop_assert!(s.slack() <= delta);
        }
    }

    #[test]
    fn smoothstep_is_monotone(s in -1.0..2.0f64, d in 0.0..1.0f64) {
        prop_assert!(smoothstep5(s) <= smoothstep5(s + d));
        prop_assert!((0.0..=1.0).contains(&smoothstep5(s)));
    }

    #[test]
    fn csv_round_trips(estimate in proptest::num::f64::NORMAL, stderr in 0.0..1e3f64,
                       target in proptest::option::of(proptest::num::f64::NORMAL), pass in any::<bool>(),
                       params in "[a-z=, \"0-9]{0,20}") {
        let row = ResultRow { experiment: "s2-norm".into(), params, estimate, stderr, target, pass, seconds: 1.5 };
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&row), &mut buf).unwrap();
        prop_assert_eq!(read_csv(buf.as_slice()).unwrap(), vec![row]);
    }
}
