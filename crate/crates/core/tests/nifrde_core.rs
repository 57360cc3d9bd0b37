use std::sync::Arc;

use nifrde::builtin::*;
use nifrde::error::Error;
use nifrde::nifrde_core::*;
use nifrde::special_functions::ml_one;

fn segment_endpoints(traj: &Trajectory<f64>) -> Vec<(SegmentKind, usize, f64, f64)> {
    traj.segments()
        .iter()
        .flat_map(|s| {
            [(s.kind, s.index, s.grid[0], s.values[0][0]), (s.kind, s.index, *s.grid.last().unwrap(), s.values.last().unwrap()[0])]
        })
        .collect()
}

#[test]
fn constant_flow_with_gains_is_exact() {
    let sched = linear_example_schedule::<f64>();
    let p = linear_example(0.5f64, 0.0, &[0.5, -0.25], sched.clone(), 2.0).unwrap();
    let traj = solve_nifrde(&p, 64).unwrap();
    for (kind, k, t, x) in traj.points().map(|(kind, k, t, x)| (kind, k, t, x[0])) {
        let expected = match (kind, k) {
            (SegmentKind::Flow, 0) => 2.0,
            (SegmentKind::Impulse, 1) | (SegmentKind::Flow, 1) => 1.0,
            _ => -0.25,
        };
        assert!((x - expected).abs() < 1e-10, "t={t}");
        // Impulse samples at t_k hold right limits; the closed form gives the left one there.
        let right_limit = kind == SegmentKind::Impulse && sched.t.contains(&t);
        if t > 0.0 && !right_limit {
            assert!((linear_example_exact(0.5, 0.0, &[0.5, -0.25], &sched, 2.0, t).unwrap() - x).abs() < 1e-10);
        }
    }
}

#[test]
fn decaying_flow_matches_product_formula() {
    let sched = linear_example_schedule::<f64>();
    let gains = [0.5, 0.5];
    let p = linear_example(0.5, -1.0, &gains, sched.clone(), 1.0).unwrap();
    let traj = solve_nifrde(&p, 1024).unwrap();
    for (kind, k, t, x) in segment_endpoints(&traj) {
        // Right limits at t_k come from the impulse formula.
        let exact = if kind == SegmentKind::Impulse && t == sched.t[k - 1] {
            gains[k - 1] * traj.left_limit(k).unwrap()[0]
        } else {
            linear_example_exact(0.5, -1.0, &gains, &sched, 1.0, t).unwrap()
        };
        assert!((x - exact).abs() <= 5e-3 * exact.abs(), "{kind} {k} t={t}: {x} vs {exact}");
    }
    let ll = traj.left_limit(1).unwrap()[0];
    let exact = ml_one(0.5, -1.0).unwrap();
    assert!((ll - exact).abs() <= 5e-3 * exact);
}

#[test]
fn symmetric_schedule_reproduces_product_with_impulse_lengths() {
    // With flow and impulse lengths equal, the factors E_q(A C_i^q), C_i = s_i - t_i,
    // coincide with the restart factors.
    let sched = ImpulseSchedule::new(vec![0.0, 2.0, 4.0], vec![1.0, 3.0], 5.0).unwrap();
    let (q, a, gains) = (0.5, -1.0, [0.5, 0.5]);
    let p = linear_example(q, a, &gains, sched.clone(), 1.0).unwrap();
    let traj = solve_nifrde(&p, 1024).unwrap();
    let e = |c: f64| ml_one(q, a * c.powf(q)).unwrap();
    let big_c = sched.t[0];
    for t in [2.5, 3.0, 3.5, 4.5, 5.0] {
        let k = if t <= 3.0 { 1 } else { 2 };
        let prod: f64 = (1..k).map(|i| gains[i - 1] * e(sched.s[i] - sched.t[i - 1])).product();
        let expected = if (3.0..=4.0).contains(&t) && t > 3.0 {
            e(big_c) * prod * gains[1]
        } else {
            e(big_c) * gains[k - 1] * prod * e(t - sched.s[k])
        };
        let x = traj.value_at(t).unwrap()[0];
        assert!((x - expected).abs() <= 5e-3 * expected.abs(), "t={t}: {x} vs {expected}");
    }
}

#[test]
fn zero_initial_state_stays_zero() {
    let p = example7(0.5, 0.0).unwrap();
    assert!(p.zero_is_equilibrium(16));
    let traj = solve_nifrde(&p, 32).unwrap();
    assert!(traj.points().all(|(_, _, _, x)| x[0] == 0.0));
    assert_eq!(traj.left_limit(1).unwrap(), vec![0.0]);
}

#[test]
fn continuity_at_restart_points() {
    let traj = solve_nifrde(&example5(0.5f64, -1.0, 1.0).unwrap(), 64).unwrap();
    let segs = traj.segments();
    assert_eq!(segs.len(), 5);
    for pair in segs.windows(2) {
        if pair[0].kind == SegmentKind::Impulse {
            assert_eq!(pair[0].values.last().unwrap(), &pair[1].values[0]);
            assert_eq!(pair[0].interval.1, pair[1].interval.0);
        }
    }
    let kinds: Vec<_> = segs.iter().map(|s| (s.kind, s.index)).collect();
    assert_eq!(
        kinds,
        vec![
            (SegmentKind::Flow, 0),
            (SegmentKind::Impulse, 1),
            (SegmentKind::Flow, 1),
            (SegmentKind::Impulse, 2),
            (SegmentKind::Flow, 2)
        ]
    );
}

#[test]
fn impulse_values_follow_the_map() {
    let p = example5(0.5f64, -1.0, 1.0).unwrap();
    let traj = solve_nifrde(&p, 64).unwrap();
    for seg in traj.segments().iter().filter(|s| s.kind == SegmentKind::Impulse) {
        let left = traj.left_limit(seg.index).unwrap();
        for (t, v) in seg.grid.iter().zip(&seg.values) {
            assert_eq!(v, &(p.phi[seg.index - 1])(*t, &left));
        }
        let n = (64.0 * (seg.interval.1 - seg.interval.0)).ceil() as usize + 1;
        assert_eq!(seg.grid.len(), n.max(2));
    }
}

#[test]
fn instantaneous_impulse_degenerates_to_a_point() {
    let sched = ImpulseSchedule::new(vec![0.0, 1.0], vec![1.0], 2.0).unwrap();
    let p = linear_example(0.5, -1.0, &[0.5], sched, 1.0).unwrap();
    let traj = solve_nifrde(&p, 128).unwrap();
    let imp = &traj.segments()[1];
    assert_eq!(imp.kind, SegmentKind::Impulse);
    assert_eq!(imp.grid, vec![1.0]);
    assert_eq!(imp.values[0][0], 0.5 * traj.left_limit(1).unwrap()[0]);
    assert_eq!(traj.locate_kind(1.0), Location::Flow(0));
}

trait LocateKind {
    fn locate_kind(&self, t: f64) -> Location;
}

impl LocateKind for Trajectory<f64> {
    fn locate_kind(&self, t: f64) -> Location {
        self.problem().locate(t).unwrap()
    }
}

#[test]
fn evaluation_at_impulse_start_returns_left_limit() {
    let sched = linear_example_schedule::<f64>();
    let p = linear_example(0.5, -1.0, &[0.5, 0.5], sched.clone(), 1.0).unwrap();
    let traj = solve_nifrde(&p, 128).unwrap();
    assert_eq!(traj.value_at(sched.t[0]).unwrap(), traj.left_limit(1).unwrap());
    assert!(matches!(traj.left_limit(0), Err(Error::Index { .. })));
    assert!(matches!(traj.left_limit(3), Err(Error::Index { .. })));
}

#[test]
fn start_in_a_later_flow_interval() {
    let p = example6(0.5, -0.5, 1.0).unwrap().with_initial(2.2, vec![0.8]).unwrap();
    let traj = solve_nifrde(&p, 64).unwrap();
    assert_eq!(traj.segments()[0].kind, SegmentKind::Flow);
    assert_eq!(traj.segments()[0].index, 1);
    assert_eq!(traj.segments()[0].values[0], vec![0.8]);
    assert!(traj.value_at(1.0).is_err());
    assert!(p.with_initial(1.7, vec![1.0]).is_err());
}

#[test]
fn refinement_converges() {
    let sched = linear_example_schedule::<f64>();
    let gains = [0.5, 0.5];
    let p = linear_example(0.5, -1.0, &gains, sched.clone(), 1.0).unwrap();
    let err = |spu: usize| {
        let traj = solve_nifrde(&p, spu).unwrap();
        let t = sched.horizon;
        (traj.value_at(t).unwrap()[0] - linear_example_exact(0.5, -1.0, &gains, &sched, 1.0, t).unwrap()).abs()
    };
    let (e1, e2) = (err(128), err(256));
    assert!(e2 < e1 && e1 / e2 >= 2f64.powf(1.5) * 0.7, "{e1} {e2}");
}

#[test]
fn divergence_names_the_segment() {
    let f: nifrde::frde_solver::VectorField<f64> = Arc::new(|_, x: &[f64]| vec![1e12 * x[0].powi(5)]);
    let sched = linear_example_schedule::<f64>();
    let p = NifrdeProblem::new(0.9, sched, f, constant_gain_impulses(&[1.0, 1.0]), 0.0, vec![1.0]).unwrap();
    match solve_nifrde(&p, 16) {
        Err(Error::NonFinite { segment: Some(0), .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn problem_validation() {
    let sched = linear_example_schedule::<f64>();
    assert!(linear_example(0.5, -1.0, &[0.5], sched.clone(), 1.0).is_err());
    assert!(linear_example(1.2, -1.0, &[0.5, 0.5], sched, 1.0).is_err());
    let bad = ImpulseSchedule::new(vec![0.0, 0.5], vec![1.0], 2.0);
    match bad {
        Err(Error::Schedule(v)) => assert!(v.to_string().contains("t_1 <= s_1")),
        other => panic!("{other:?}"),
    }
}
