use girder_inspect::control::{
    pid_step, routine_command, CommandStatus, ControlConfig, ControlStates, PidGains, PidState, RoutineDefaults,
    RoutineSpec,
};
use girder_inspect::geometry::RoutineKind;
use girder_inspect::perception::{LineEstimate, SurfaceEstimate};
use proptest::prelude::*;

fn estimate(standoff: f64, along: f64, heading: f64) -> SurfaceEstimate<f64> {
    SurfaceEstimate {
        standoff,
        along_offset: along,
        line: LineEstimate {
            theta: 90.0,
            rho: -standoff,
            extent: 4.0,
            inlier_count: 40,
            endpoints: [[standoff, -2.0], [standoff, 2.0]],
        },
        fresh: true,
        heading_error: Some(heading),
    }
}

fn routine() -> impl Strategy<Value = RoutineKind> {
    prop::sample::select(RoutineKind::ALL.to_vec())
}

#[test]
fn pure_proportional_step() {
    let g = PidGains {
        kp: 0.5,
        ki: 0.0,
        kd: 0.0,
        output_limit: 10.0,
        integral_limit: 1.0,
    };
    let (out, _) = pid_step(PidState::<f64>::default(), &g, 1.2, 0.05);
    assert!((out - 0.6).abs() < 1e-12);
}

#[test]
fn integral_accumulates_then_saturates() {
    let g = PidGains {
        kp: 0.0,
        ki: 0.5,
        kd: 0.0,
        output_limit: 10.0,
        integral_limit: 0.2,
    };
    let mut s = PidState::<f64>::default();
    let mut outs = Vec::new();
    for _ in 0..100 {
        let (o, n) = pid_step(s, &g, 1.0, 0.1);
        s = n;
        outs.push(o);
    }
    assert!((outs[0] - 0.05).abs() < 1e-12);
    assert!((outs[99] - 0.2).abs() < 1e-12);
}

#[test]
fn failsafe_after_missing_estimates() {
    let spec = RoutineSpec::new(RoutineKind::GL, &RoutineDefaults::default());
    let cfg = ControlConfig::default();
    let dt = 0.05;
    let mut st = ControlStates::default();
    let first = routine_command(&spec, Some(&estimate(5.0, 2.0, 0.0)), &mut st, &cfg, dt, 0.0);
    assert_eq!(first.status, CommandStatus::Fresh);
    let mut statuses = Vec::new();
    for k in 1..=6 {
        let c = routine_command::<f64>(&spec, None, &mut st, &cfg, dt, k as f64 * dt);
        statuses.push(c.status);
        if c.status == CommandStatus::Held {
            assert_eq!(c.v_body, first.v_body);
        }
    }
    assert_eq!(&statuses[..4], &[CommandStatus::Held; 4]);
    assert_eq!(statuses[5], CommandStatus::Failsafe);
}

proptest! {
    #[test]
    fn outputs_stay_within_limits(
        kind in routine(),
        standoff in 0.0f64..30.0,
        along in -10.0f64..10.0,
        heading in -1.5f64..1.5,
        steps in 1usize..40,
    ) {
        let d = RoutineDefaults::default();
        let spec = RoutineSpec::new(kind, &d);
        let cfg = ControlConfig::default();
        let mut st = ControlStates::default();
        for k in 0..steps {
            let c = routine_command(&spec, Some(&estimate(standoff, along, heading)), &mut st, &cfg, 0.05, k as f64 * 0.05);
            for axis in spec.regulated_axes {
                prop_assert!(c.v_body[axis.index()].abs() <= cfg.standoff.output_limit.max(cfg.along.output_limit) + 1e-12);
            }
            prop_assert!((c.v_body[spec.travel_axis.index()].abs() - d.nominal_speed).abs() < 1e-12);
            prop_assert!(c.yaw_rate.abs() <= cfg.yaw_rate_limit + 1e-12);
        }
    }

    #[test]
    fn standoff_error_drives_toward_setpoint(kind in prop::sample::select(vec![RoutineKind::GL, RoutineKind::GR, RoutineKind::CU, RoutineKind::CD]), err in 0.05f64..5.0) {
        let spec = RoutineSpec::new(kind, &RoutineDefaults::default());
        let cfg = ControlConfig::default();
        let fwd = spec.regulated_axes[0].index();
        let mut st = ControlStates::default();
        let far = routine_command(&spec, Some(&estimate(4.5 + err, spec.along_setpoint, 0.0)), &mut st, &cfg, 0.05, 0.0);
        let mut st = ControlStates::default();
        let near = routine_command(&spec, Some(&estimate(4.5 - err.min(4.0), spec.along_setpoint, 0.0)), &mut st, &cfg, 0.05, 0.0);
        prop_assert!(far.v_body[fwd] > 0.0);
        prop_assert!(near.v_body[fwd] < 0.0);
    }

    #[test]
    fn along_error_drives_toward_setpoint(err in 0.05f64..3.0) {
        let d = RoutineDefaults::default();
        let cfg = ControlConfig::default();
        // Too deep below the girder top: climb.
        let g = RoutineSpec::new(RoutineKind::GL, &d);
        let mut st = ControlStates::default();
        let c = routine_command(&g, Some(&estimate(4.5, 2.5 + err, 0.0)), &mut st, &cfg, 0.05, 0.0);
        prop_assert!(c.v_body[2] > 0.0);
        // Right of the column center: move left.
        let col = RoutineSpec::new(RoutineKind::CU, &d);
        let mut st = ControlStates::default();
        let c = routine_command(&col, Some(&estimate(4.5, err, 0.0)), &mut st, &cfg, 0.05, 0.0);
        prop_assert!(c.v_body[1] > 0.0);
    }

    #[test]
    fn commands_are_deterministic(kind in routine(), s in 1.0f64..10.0, a in -3.0f64..3.0) {
        let spec = RoutineSpec::new(kind, &RoutineDefaults::default());
        let cfg = ControlConfig::default();
        let run = || {
            let mut st = ControlStates::default();
            (0..10).map(|k| routine_command(&spec, Some(&estimate(s, a, 0.1)), &mut st, &cfg, 0.05, k as f64 * 0.05)).collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
    }
}
