//! Wall-relative velocity control: two PID loops on the regulated axes, a
//! constant speed on the travel axis and heading hold from the scan line.

use serde::{Deserialize, Serialize};

use crate::geometry::RoutineKind;
use crate::perception::SurfaceEstimate;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub output_limit: f64,
    pub integral_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        PidGains {
            kp: 0.8,
            ki: 0.05,
            kd: 0.1,
            output_limit: 1.5,
            integral_limit: 1.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<(), String> {
        if self.kp >= 0.0 && self.ki >= 0.0 && self.kd >= 0.0 && self.output_limit > 0.0 && self.integral_limit > 0.0 {
            Ok(())
        } else {
            Err("PID gains must be non-negative and limits positive".into())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState<T: Scalar = f64> {
    pub integral: T,
    pub prev_error: T,
    pub initialized: bool,
}

/// One PID update. The integral is clamped so that `ki * integral` stays
/// within `integral_limit`; the first call has no derivative term.
pub fn pid_step<T: Scalar>(state: PidState<T>, g: &PidGains, error: T, dt: T) -> (T, PidState<T>) {
    let (kp, ki, kd) = (T::lit(g.kp), T::lit(g.ki), T::lit(g.kd));
    let mut integral = state.integral + error * dt;
    if g.ki > 0.0 {
        let cap = T::lit(g.integral_limit) / ki;
        integral = integral.max(-cap).min(cap);
    }
    let derivative = if state.initialized {
        (error - state.prev_error) / dt
    } else {
        T::zero()
    };
    let limit = T::lit(g.output_limit);
    let out = (kp * error + ki * integral + kd * derivative).max(-limit).min(limit);
    (
        out,
        PidState {
            integral,
            prev_error: error,
            initialized: true,
        },
    )
}

/// Body frame axes: forward (sensor heading), left, up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyAxis {
    Forward,
    Left,
    Up,
}

impl BodyAxis {
    pub fn index(self) -> usize {
        match self {
            BodyAxis::Forward => 0,
            BodyAxis::Left => 1,
            BodyAxis::Up => 2,
        }
    }
}

/// Setpoints and speed shared by all routines of one kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoutineDefaults {
    pub standoff_setpoint: f64,
    pub girder_along_setpoint: f64,
    pub column_along_setpoint: f64,
    pub nominal_speed: f64,
}

impl Default for RoutineDefaults {
    fn default() -> Self {
        RoutineDefaults {
            standoff_setpoint: 4.5,
            girder_along_setpoint: 2.5,
            column_along_setpoint: 0.0,
            nominal_speed: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutineSpec {
    pub kind: RoutineKind,
    pub standoff_setpoint: f64,
    pub along_setpoint: f64,
    pub nominal_speed: f64,
    pub travel_axis: BodyAxis,
    /// Axes driven by the standoff and along loops.
    pub regulated_axes: [BodyAxis; 2],
}

impl RoutineSpec {
    pub fn new(kind: RoutineKind, d: &RoutineDefaults) -> Self {
        use BodyAxis::*;
        use RoutineKind::*;
        let (travel_axis, regulated_axes, along_setpoint) = match kind {
            GR | GL => (Left, [Forward, Up], d.girder_along_setpoint),
            CU | CD => (Up, [Forward, Left], d.column_along_setpoint),
            BR | BL => (Left, [Up, Forward], 0.0),
            TR | TL => (Left, [Up, Forward], 0.0),
        };
        RoutineSpec {
            kind,
            standoff_setpoint: d.standoff_setpoint,
            along_setpoint,
            nominal_speed: d.nominal_speed,
            travel_axis,
            regulated_axes,
        }
    }

    /// Sign of the nominal speed on the travel axis. Faces are seen head on,
    /// so increasing world x is body right.
    pub fn travel_sign(&self) -> f64 {
        use RoutineKind::*;
        match self.kind {
            GL | BL | TL | CU => 1.0,
            GR | BR | TR | CD => -1.0,
        }
    }

    /// Sign that turns a PID output into motion along the standoff axis.
    /// Faces lie ahead, or above for the underside, or below for the deck.
    fn standoff_sign(&self) -> f64 {
        match self.kind {
            RoutineKind::TR | RoutineKind::TL => 1.0,
            _ => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandStatus {
    Fresh,
    /// Last command repeated while the estimate is stale.
    Held,
    /// Estimate lost for too long: zero velocity.
    Failsafe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityCommand<T: Scalar = f64> {
    /// Forward, left, up in m/s.
    pub v_body: [T; 3],
    pub yaw_rate: T,
    pub timestamp: f64,
    pub status: CommandStatus,
}

impl<T: Scalar> VelocityCommand<T> {
    pub fn hover(timestamp: f64) -> Self {
        VelocityCommand {
            v_body: [T::zero(); 3],
            yaw_rate: T::zero(),
            timestamp,
            status: CommandStatus::Failsafe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub standoff: PidGains,
    pub along: PidGains,
    /// Yaw rate per radian of heading error, 1/s.
    pub yaw_gain: f64,
    pub yaw_rate_limit: f64,
    /// Control periods of estimate loss before hovering.
    pub failsafe_periods: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            standoff: PidGains::default(),
            along: PidGains::default(),
            yaw_gain: 0.5,
            yaw_rate_limit: 0.5,
            failsafe_periods: 5.0,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.standoff.validate()?;
        self.along.validate()?;
        if self.yaw_gain < 0.0 || self.yaw_rate_limit <= 0.0 || self.failsafe_periods <= 0.0 {
            return Err("yaw gain must be non-negative, yaw limit and failsafe periods positive".into());
        }
        Ok(())
    }
}

/// Loop memory for one routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlStates<T: Scalar = f64> {
    pub standoff: PidState<T>,
    pub along: PidState<T>,
    pub last: Option<VelocityCommand<T>>,
    pub last_fresh_at: Option<f64>,
}

impl<T: Scalar> Default for ControlStates<T> {
    fn default() -> Self {
        ControlStates {
            standoff: PidState::default(),
            along: PidState::default(),
            last: None,
            last_fresh_at: None,
        }
    }
}

/// Velocity command for `spec` at time `t` (seconds), with `dt` the control
/// period. A missing or stale estimate repeats the previous command until
/// `failsafe_periods` have passed without a fresh one, then hovers.
pub fn routine_command<T: Scalar>(
    spec: &RoutineSpec,
    est: Option<&SurfaceEstimate<T>>,
    states: &mut ControlStates<T>,
    cfg: &ControlConfig,
    dt: f64,
    t: f64,
) -> VelocityCommand<T> {
    let Some(est) = est.filter(|e| e.fresh) else {
        let since = states.last_fresh_at.map_or(f64::INFINITY, |f| t - f);
        let cmd = match states.last {
            Some(last) if since < cfg.failsafe_periods * dt - 1e-9 => VelocityCommand {
                timestamp: t,
                status: CommandStatus::Held,
                ..last
            },
            _ => VelocityCommand::hover(t),
        };
        states.last = Some(cmd);
        return cmd;
    };
    let dt_s = T::lit(dt);
    let (standoff_out, s1) = pid_step(
        states.standoff,
        &cfg.standoff,
        T::lit(spec.standoff_setpoint) - est.standoff,
        dt_s,
    );
    let (along_out, s2) = pid_step(states.along, &cfg.along, T::lit(spec.along_setpoint) - est.along_offset, dt_s);
    states.standoff = s1;
    states.along = s2;

    let mut v = [T::zero(); 3];
    v[spec.regulated_axes[0].index()] = T::lit(spec.standoff_sign()) * standoff_out;
    v[spec.regulated_axes[1].index()] = -along_out;
    v[spec.travel_axis.index()] = T::lit(spec.travel_sign() * spec.nominal_speed);
    let yaw_limit = T::lit(cfg.yaw_rate_limit);
    let yaw_rate = est
        .heading_error
        .map_or(T::zero(), |e| (T::lit(cfg.yaw_gain) * e).max(-yaw_limit).min(yaw_limit));
    let cmd = VelocityCommand {
        v_body: v,
        yaw_rate,
        timestamp: t,
        status: CommandStatus::Fresh,
    };
    states.last = Some(cmd);
    states.last_fresh_at = Some(t);
    cmd
}
