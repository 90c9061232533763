mod common;

use std::f64::consts::FRAC_PI_2;

use common::bridge_11;
use girder_inspect::geometry::{Point3, RoutineKind};
use girder_inspect::gtsp::{plan_bridge, InspectionPlan, PlanLeg, SolverParams};
use girder_inspect::lidar::{simulate_scan, LidarSpec, Pose, ScanPlane};
use girder_inspect::perception::{LineEstimate, PerceptionConfig};
use girder_inspect::supervisor::{
    column_to_girder_count, detect_column_descent_end, detect_girder_to_column, Directive, PredicateKind,
    PredicateTracker, SupervisorConfig, SupervisorError, SupervisorState, TransitionPredicate,
};
use proptest::prelude::*;

fn vertical_lines(x: f64, z: f64) -> Vec<LineEstimate<f64>> {
    let spec = LidarSpec {
        range_noise_sigma: 0.0,
        ..LidarSpec::default()
    };
    let pose = Pose::new(Point3::new(x, -4.5, z), FRAC_PI_2);
    PerceptionConfig::default().lines(&simulate_scan(&bridge_11(), &pose, ScanPlane::Vertical, &spec, 0))
}

fn fires_after(p: &TransitionPredicate, mut check: impl FnMut(&mut PredicateTracker) -> bool, scans: usize) -> Option<usize> {
    let mut tr = PredicateTracker::new(p);
    (0..scans).find(|_| check(&mut tr))
}

#[test]
fn girder_to_column_fires_only_at_the_column() {
    let p = SupervisorConfig::default().girder_to_column;
    let perc = PerceptionConfig::default();
    let mid = vertical_lines(90.0, 17.5);
    let at_column = vertical_lines(80.0, 17.5);
    assert_eq!(fires_after(&p, |tr| detect_girder_to_column(tr, &mid, 15.0, 20.0, &p, &perc), 10), None);
    assert_eq!(
        fires_after(&p, |tr| detect_girder_to_column(tr, &at_column, 15.0, 20.0, &p, &perc), 10),
        Some(p.debounce_scans as usize - 1)
    );
}

#[test]
fn geometric_guard_blocks_the_start_column() {
    let p = SupervisorConfig::default().girder_to_column;
    let perc = PerceptionConfig::default();
    // Right after leaving column K the column is still below the UAV.
    let start = vertical_lines(99.5, 17.5);
    assert_eq!(fires_after(&p, |tr| detect_girder_to_column(tr, &start, 0.5, 20.0, &p, &perc), 10), None);
    let unguarded = TransitionPredicate {
        geometric_guard: None,
        ..p
    };
    assert!(fires_after(&unguarded, |tr| detect_girder_to_column(tr, &start, 0.5, 20.0, &unguarded, &perc), 10).is_some());
}

#[test]
fn descent_end_near_the_entry_height() {
    let p = SupervisorConfig::default().descent_end;
    let perc = PerceptionConfig::default();
    let high = vertical_lines(60.0, 9.0);
    let low = vertical_lines(60.0, 3.2);
    assert_eq!(fires_after(&p, |tr| detect_column_descent_end(tr, &high, 3.0, &p, &perc), 10), None);
    assert!(fires_after(&p, |tr| detect_column_descent_end(tr, &low, 3.0, &p, &perc), 10).is_some());
}

fn bridge_plan() -> InspectionPlan<f64> {
    plan_bridge(
        &bridge_11(),
        &SolverParams {
            iterations: 300,
            ..SolverParams::default()
        },
    )
    .unwrap()
}

fn supervisor(plan: InspectionPlan<f64>) -> Result<SupervisorState<f64>, SupervisorError> {
    SupervisorState::new(plan, &bridge_11(), SupervisorConfig::default(), PerceptionConfig::default(), 0.5)
}

#[test]
fn bridge_plan_is_supported() {
    let s = supervisor(bridge_plan()).unwrap();
    assert_eq!(s.current_predicate(), PredicateKind::ColumnToGirder);
    assert!(matches!(s.directive(), Directive::Fly { routine: RoutineKind::CU, surface: 'K' }));
}

#[test]
fn legs_without_a_rule_are_rejected() {
    let mut plan = bridge_plan();
    plan.legs[3].routine = RoutineKind::BR;
    match supervisor(plan) {
        Err(SupervisorError::PlanUnsupported { leg, .. }) => assert_eq!(leg, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn sideways_transfers_are_rejected() {
    let plan = bridge_plan();
    let mut legs = plan.legs.clone();
    // Jump straight from the first column to the third girder.
    legs.remove(1);
    let short = InspectionPlan {
        legs: vec![
            legs[0].clone(),
            PlanLeg {
                entry_position: Point3::new(60.0, 0.0, 17.5),
                ..legs[3].clone()
            },
        ],
        ..plan
    };
    assert!(matches!(supervisor(short), Err(SupervisorError::PlanUnsupported { leg: 1, .. })));
}

#[test]
fn empty_plan_is_complete() {
    let s = supervisor(InspectionPlan::empty()).unwrap();
    assert_eq!(s.directive(), Directive::Hover);
}

proptest! {
    #[test]
    fn debounce_needs_consecutive_scans(seq in prop::collection::vec(any::<bool>(), 1..60), n in 1u32..6) {
        let p = TransitionPredicate { debounce_scans: n, ..TransitionPredicate::default() };
        let mut tr = PredicateTracker::new(&p);
        for (i, &s) in seq.iter().enumerate() {
            let fired = tr.debounced(s, &p);
            let run = seq[..=i].iter().rev().take_while(|&&b| b).count();
            prop_assert_eq!(fired, run >= n as usize);
        }
    }

    #[test]
    fn steady_counts_never_fire(count in 0usize..200, scans in 1usize..80) {
        let p = TransitionPredicate::default();
        let mut tr = PredicateTracker::new(&p);
        for _ in 0..scans {
            prop_assert!(!column_to_girder_count(&mut tr, count, &p));
        }
    }

    #[test]
    fn jump_fires_after_debounce(base in 5usize..60, ratio in 2.0f64..6.0, lead in 1usize..15) {
        let p = TransitionPredicate::default();
        let mut tr = PredicateTracker::new(&p);
        for _ in 0..lead {
            prop_assert!(!column_to_girder_count(&mut tr, base, &p));
        }
        let high = (base as f64 * ratio).ceil() as usize;
        let fired: Vec<bool> = (0..p.debounce_scans).map(|_| column_to_girder_count(&mut tr, high, &p)).collect();
        prop_assert!(fired[..fired.len() - 1].iter().all(|f| !f));
        prop_assert!(fired[fired.len() - 1]);
    }
}
