//! Closed-loop simulation: a first-order velocity plant flown by the
//! supervisor and routine controllers from simulated scans.

mod config;
mod export;

pub use config::{MissionConfig, SimConfig};
pub use export::{
    export_log, parse_trajectory_csv, read_events_csv, read_metrics, write_events_csv, write_scan_svg, write_svg,
    write_trajectory_csv, ExportPaths, CSV_HEADER,
};

use serde::{Deserialize, Serialize};

use crate::control::{routine_command, ControlStates, RoutineSpec, VelocityCommand};
use crate::geometry::{BridgeModel, Point3, RoutineKind, SurfaceKind, SurfacePolygon};
use crate::gtsp::InspectionPlan;
use crate::lidar::{simulate_scan, Pose, ScanPlane};
use crate::perception::SurfaceEstimate;
use crate::scalar::Scalar;
use crate::supervisor::{Directive, ScanPair, SupervisorError, SupervisorState, SwitchEvent};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid mission config: {0}")]
    Config(String),
    #[error(transparent)]
    Supervisor(#[from] SupervisorError),
    #[error("surface {0} is not in the bridge model")]
    UnknownSurface(char),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavState<T: Scalar = f64> {
    pub position: Point3<T>,
    pub velocity: Point3<T>,
    pub yaw: T,
}

impl<T: Scalar> UavState<T> {
    pub fn at_rest(position: Point3<T>, yaw: T) -> Self {
        UavState {
            position,
            velocity: Point3::zero(),
            yaw,
        }
    }

    pub fn pose(&self) -> Pose<T> {
        Pose::new(self.position, self.yaw)
    }
}

/// Wind velocity at time `t`.
pub fn wind_at<T: Scalar>(c: &SimConfig, t: f64) -> Point3<T> {
    let w = c.wind;
    let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let dir = if norm > 0.0 {
        [w[0] / norm, w[1] / norm, w[2] / norm]
    } else {
        [1.0, 0.0, 0.0]
    };
    let g = c.gust_amplitude * (std::f64::consts::TAU * t / c.gust_period).sin();
    Point3::new(T::lit(w[0] + g * dir[0]), T::lit(w[1] + g * dir[1]), T::lit(w[2] + g * dir[2]))
}

/// Body (forward, left, up) velocity in world coordinates.
pub fn body_to_world<T: Scalar>(v: [T; 3], yaw: T) -> Point3<T> {
    let (s, c) = yaw.sin_cos();
    Point3::new(c * v[0] - s * v[1], s * v[0] + c * v[1], v[2])
}

/// One Euler step of the velocity plant.
pub fn step_dynamics<T: Scalar>(s: &UavState<T>, cmd: &VelocityCommand<T>, c: &SimConfig, t: f64) -> UavState<T> {
    let dt = T::lit(c.dt);
    let target = body_to_world(cmd.v_body, s.yaw) + wind_at(c, t);
    let velocity = s.velocity + (target - s.velocity) * (dt / T::lit(c.velocity_time_constant));
    UavState {
        position: s.position + velocity * dt,
        velocity,
        yaw: s.yaw + cmd.yaw_rate * dt,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSample<T: Scalar = f64> {
    pub t: f64,
    pub state: UavState<T>,
    /// `None` while hovering.
    pub routine: Option<RoutineKind>,
    pub leg: usize,
    pub standoff_err: T,
    pub along_err: T,
    pub command: VelocityCommand<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegMetrics {
    pub leg: usize,
    pub surface: char,
    pub routine: RoutineKind,
    pub start: f64,
    pub end: f64,
    pub samples: usize,
    pub rms_standoff_err: f64,
    pub max_standoff_err: f64,
    pub rms_along_err: f64,
    pub max_along_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub completed: bool,
    pub mission_time: f64,
    pub switch_count: usize,
    pub timeout: Option<String>,
    pub legs: Vec<LegMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog<T: Scalar = f64> {
    pub samples: Vec<LogSample<T>>,
    pub events: Vec<SwitchEvent<T>>,
    pub metrics: Metrics,
}

/// Per-leg error statistics from `(t, standoff_err, along_err)` rows. A row
/// belongs to leg `k` when exactly `k` switch times are at or before it.
pub fn leg_metrics<T: Scalar>(rows: &[(f64, f64, f64)], switch_times: &[f64], plan: &InspectionPlan<T>) -> Vec<LegMetrics> {
    let reached = if plan.legs.is_empty() {
        0
    } else {
        (switch_times.len() + 1).min(plan.legs.len())
    };
    let mut out: Vec<LegMetrics> = plan.legs[..reached]
        .iter()
        .enumerate()
        .map(|(k, l)| LegMetrics {
            leg: k,
            surface: l.surface_id,
            routine: l.routine,
            start: if k == 0 { 0.0 } else { switch_times[k - 1] },
            end: switch_times.get(k).copied().unwrap_or(f64::NAN),
            samples: 0,
            rms_standoff_err: 0.0,
            max_standoff_err: 0.0,
            rms_along_err: 0.0,
            max_along_err: 0.0,
        })
        .collect();
    for &(t, s, a) in rows {
        let k = switch_times.iter().filter(|&&e| e <= t).count();
        let Some(m) = out.get_mut(k) else { continue };
        m.samples += 1;
        m.rms_standoff_err += s * s;
        m.rms_along_err += a * a;
        m.max_standoff_err = m.max_standoff_err.max(s.abs());
        m.max_along_err = m.max_along_err.max(a.abs());
        if k == switch_times.len() {
            m.end = t;
        }
    }
    for m in &mut out {
        if m.samples > 0 {
            m.rms_standoff_err = (m.rms_standoff_err / m.samples as f64).sqrt();
            m.rms_along_err = (m.rms_along_err / m.samples as f64).sqrt();
        }
        if m.end.is_nan() {
            m.end = m.start;
        }
    }
    out
}

impl<T: Scalar> TrajectoryLog<T> {
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        self.samples
            .iter()
            .map(|s| (s.t, s.standoff_err.as_f64(), s.along_err.as_f64()))
            .collect()
    }

    pub fn switch_times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.timestamp).collect()
    }
}

/// Outward unit normal and yaw that faces the surface.
fn facing_yaw<T: Scalar>(s: &SurfacePolygon<T>) -> T {
    let n = s.plane_normal;
    (-n.y).atan2(-n.x)
}

fn centroid<T: Scalar>(s: &SurfacePolygon<T>) -> Point3<T> {
    let sum = s.vertices.iter().fold(Point3::zero(), |a, v| a + *v);
    sum / T::lit(4.0)
}

/// True standoff and along errors of `p` against the tracked surface.
pub fn ground_truth_errors<T: Scalar>(s: &SurfacePolygon<T>, spec: &RoutineSpec, p: &Point3<T>) -> (T, T) {
    let standoff = s.plane_distance(p) - T::lit(spec.standoff_setpoint);
    let along = match s.kind {
        SurfaceKind::Column => {
            let facing = -s.plane_normal;
            let right = facing.cross(&Point3::new(T::zero(), T::zero(), T::one()));
            let norm = right.norm();
            if norm > T::zero() {
                (*p - centroid(s)).dot(&(right / norm))
            } else {
                T::zero()
            }
        }
        SurfaceKind::Girder => s.max_z() - p.z,
        _ => T::zero(),
    };
    (standoff, along - T::lit(spec.along_setpoint))
}

/// Pose standing off the first leg's entry node along the face normal.
pub fn start_state<T: Scalar>(
    m: &BridgeModel<T>,
    plan: &InspectionPlan<T>,
    cfg: &MissionConfig,
) -> Result<Option<UavState<T>>, SimError> {
    let Some(first) = plan.legs.first() else {
        return Ok(None);
    };
    let s = m.surface(first.surface_id).ok_or(SimError::UnknownSurface(first.surface_id))?;
    let p = first.entry_position + s.plane_normal * T::lit(cfg.routine.standoff_setpoint);
    Ok(Some(UavState::at_rest(p, facing_yaw(s))))
}

fn scan_seed(seed: u64, scan: u64, plane: ScanPlane) -> u64 {
    let lane = match plane {
        ScanPlane::Horizontal => 0,
        ScanPlane::Vertical => 1,
    };
    let mut z = seed ^ (scan << 1 | lane).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn take_scans<T: Scalar>(m: &BridgeModel<T>, s: &UavState<T>, cfg: &MissionConfig, n: u64, t: f64) -> ScanPair<T> {
    let pose = s.pose();
    let seed = cfg.sim.rng_seed;
    let mut h = simulate_scan(m, &pose, ScanPlane::Horizontal, &cfg.lidar, scan_seed(seed, n, ScanPlane::Horizontal));
    let mut v = simulate_scan(m, &pose, ScanPlane::Vertical, &cfg.lidar, scan_seed(seed, n, ScanPlane::Vertical));
    h.timestamp = t;
    v.timestamp = t;
    ScanPair::new(h, v, &cfg.perception)
}

fn estimate<T: Scalar>(spec: &RoutineSpec, scans: &ScanPair<T>, cfg: &MissionConfig) -> Option<SurfaceEstimate<T>> {
    match spec.kind.surface_kind() {
        SurfaceKind::Girder => cfg.perception.estimate_girder(&scans.vert_lines, &scans.horiz_lines),
        SurfaceKind::Column => {
            cfg.perception
                .estimate_column(&scans.horiz_lines, &scans.vert_lines, T::lit(spec.along_setpoint))
        }
        _ => None,
    }
}

struct Flight<T: Scalar> {
    spec: RoutineSpec,
    surface: char,
    states: ControlStates<T>,
}

/// Flies `plan` until the supervisor completes it or the duration limit
/// runs out. The returned log always carries metrics; a timeout names the
/// leg that was being flown.
pub fn run_mission<T: Scalar>(
    m: &BridgeModel<T>,
    plan: &InspectionPlan<T>,
    cfg: &MissionConfig,
) -> Result<TrajectoryLog<T>, SimError> {
    cfg.validate().map_err(SimError::Config)?;
    let mut sup = SupervisorState::new(
        plan.clone(),
        m,
        cfg.supervisor,
        cfg.perception,
        cfg.routine.nominal_speed,
    )?;
    let Some(mut state) = start_state(m, plan, cfg)? else {
        return Ok(TrajectoryLog {
            samples: Vec::new(),
            events: Vec::new(),
            metrics: Metrics {
                completed: true,
                mission_time: 0.0,
                switch_count: 0,
                timeout: None,
                legs: Vec::new(),
            },
        });
    };
    let dt = cfg.sim.dt;
    let period = cfg.lidar.period();
    let steps_per_scan = (period / dt).round() as u64;
    let max_steps = (cfg.sim.duration_limit / dt).ceil() as u64;
    let mut samples = Vec::with_capacity(max_steps.min(1 << 20) as usize);
    let mut events = Vec::new();
    let mut flight: Option<Flight<T>> = None;
    let mut cmd = VelocityCommand::hover(0.0);
    let mut last_surface = plan.legs[0].surface_id;
    let mut completed = false;
    let mut step = 0u64;
    while step <= max_steps {
        let t = step as f64 * dt;
        if step.is_multiple_of(steps_per_scan) {
            let scans = take_scans(m, &state, cfg, step / steps_per_scan, t);
            let (directive, event) = sup.step(&scans, t);
            events.extend(event);
            match directive {
                Directive::Hover => {
                    flight = None;
                    cmd = VelocityCommand::hover(t);
                }
                Directive::Fly { routine, surface } => {
                    if flight.as_ref().is_none_or(|f| f.spec.kind != routine || f.surface != surface) {
                        flight = Some(Flight {
                            spec: RoutineSpec::new(routine, &cfg.routine),
                            surface,
                            states: ControlStates::default(),
                        });
                    }
                    let f = flight.as_mut().expect("set above");
                    last_surface = surface;
                    let est = estimate(&f.spec, &scans, cfg);
                    cmd = routine_command(&f.spec, est.as_ref(), &mut f.states, &cfg.control, period, t);
                }
            }
        }
        let surface = m.surface(last_surface).ok_or(SimError::UnknownSurface(last_surface))?;
        let spec = flight
            .as_ref()
            .map_or_else(|| RoutineSpec::new(sup.mode, &cfg.routine), |f| f.spec);
        let (standoff_err, along_err) = ground_truth_errors(surface, &spec, &state.position);
        samples.push(LogSample {
            t,
            state,
            routine: flight.as_ref().map(|f| f.spec.kind),
            leg: sup.leg_index,
            standoff_err,
            along_err,
            command: cmd,
        });
        if sup.completed {
            completed = true;
            break;
        }
        state = step_dynamics(&state, &cmd, &cfg.sim, t);
        step += 1;
    }
    let timeout = (!completed).then(|| {
        let leg = &plan.legs[sup.leg_index];
        format!(
            "duration limit {} s reached on leg {} ({} on surface {})",
            cfg.sim.duration_limit, sup.leg_index, leg.routine, leg.surface_id
        )
    });
    let mut log = TrajectoryLog {
        samples,
        events,
        metrics: Metrics {
            completed,
            mission_time: 0.0,
            switch_count: 0,
            timeout,
            legs: Vec::new(),
        },
    };
    log.metrics.mission_time = log.samples.last().map_or(0.0, |s| s.t);
    log.metrics.switch_count = log.events.len();
    log.metrics.legs = leg_metrics(&log.rows(), &log.switch_times(), plan);
    Ok(log)
}

/// Flies a single routine against one surface for `duration` seconds, with
/// no supervisor. Errors in the log are ground truth.
pub fn run_routine<T: Scalar>(
    m: &BridgeModel<T>,
    surface: char,
    routine: RoutineKind,
    start: UavState<T>,
    cfg: &MissionConfig,
    duration: f64,
) -> Result<Vec<LogSample<T>>, SimError> {
    cfg.validate().map_err(SimError::Config)?;
    let s = m.surface(surface).ok_or(SimError::UnknownSurface(surface))?;
    let dt = cfg.sim.dt;
    let period = cfg.lidar.period();
    let steps_per_scan = (period / dt).round() as u64;
    let spec = RoutineSpec::new(routine, &cfg.routine);
    let mut states = ControlStates::default();
    let mut state = start;
    let mut cmd = VelocityCommand::hover(0.0);
    let mut out = Vec::new();
    let steps = (duration / dt).round() as u64;
    for step in 0..=steps {
        let t = step as f64 * dt;
        if step % steps_per_scan == 0 {
            let scans = take_scans(m, &state, cfg, step / steps_per_scan, t);
            let est = estimate(&spec, &scans, cfg);
            cmd = routine_command(&spec, est.as_ref(), &mut states, &cfg.control, period, t);
        }
        let (standoff_err, along_err) = ground_truth_errors(s, &spec, &state.position);
        out.push(LogSample {
            t,
            state,
            routine: Some(routine),
            leg: 0,
            standoff_err,
            along_err,
            command: cmd,
        });
        state = step_dynamics(&state, &cmd, &cfg.sim, t);
    }
    Ok(out)
}
