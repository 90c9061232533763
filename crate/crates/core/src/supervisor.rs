//! Mission sequencing: follows the plan leg by leg and switches routines
//! when scan features show the end of the current surface.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{BridgeModel, RoutineKind, SurfaceKind};
use crate::gtsp::InspectionPlan;
use crate::lidar::{Pose, Scan};
use crate::perception::{point_count_feature, BearingSector, LineEstimate, PerceptionConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SupervisorError {
    #[error("plan unsupported at leg {leg}: {reason}")]
    PlanUnsupported { leg: usize, reason: String },
    #[error("invalid predicate settings: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateKind {
    ColumnToGirder,
    GirderToColumn,
    DescentEnd,
}

impl PredicateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PredicateKind::ColumnToGirder => "column_to_girder",
            PredicateKind::GirderToColumn => "girder_to_column",
            PredicateKind::DescentEnd => "descent_end",
        }
    }
}

impl fmt::Display for PredicateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PredicateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Self::ColumnToGirder, Self::GirderToColumn, Self::DescentEnd]
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown trigger `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitionPredicate {
    /// Bearing interval in degrees, wrapping through 0 when start > end.
    pub sector_deg: [f64; 2],
    pub ratio_threshold: f64,
    pub debounce_scans: u32,
    /// Fraction of the leg length that must be flown (by dead reckoning)
    /// before the predicate may fire.
    pub geometric_guard: Option<f64>,
    pub baseline_window: usize,
    /// Meters; used by the descent end check.
    pub elevation_tolerance: f64,
}

impl Default for TransitionPredicate {
    fn default() -> Self {
        TransitionPredicate {
            sector_deg: [270.0, 90.0],
            ratio_threshold: 2.0,
            debounce_scans: 3,
            geometric_guard: None,
            baseline_window: 10,
            elevation_tolerance: 0.5,
        }
    }
}

impl TransitionPredicate {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.ratio_threshold > 1.0) {
            return Err("ratio_threshold must exceed 1".into());
        }
        if self.debounce_scans == 0 || self.baseline_window == 0 {
            return Err("debounce_scans and baseline_window must be at least 1".into());
        }
        if self.elevation_tolerance < 0.0 || self.geometric_guard.is_some_and(|g| !(0.0..=1.0).contains(&g)) {
            return Err("elevation_tolerance must be >= 0 and geometric_guard within [0, 1]".into());
        }
        Ok(())
    }

    pub fn sector(&self) -> BearingSector {
        BearingSector::from_degrees(self.sector_deg[0], self.sector_deg[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupervisorConfig {
    pub column_to_girder: TransitionPredicate,
    pub girder_to_column: TransitionPredicate,
    pub descent_end: TransitionPredicate,
    /// Transfers between legs shorter than this are flown by the next
    /// routine directly.
    pub approach_min_transfer: f64,
}

impl Default for SupervisorConfig {
    fn default() -> Self {
        SupervisorConfig {
            column_to_girder: TransitionPredicate::default(),
            girder_to_column: TransitionPredicate {
                geometric_guard: Some(0.5),
                ..TransitionPredicate::default()
            },
            descent_end: TransitionPredicate::default(),
            approach_min_transfer: 2.0,
        }
    }
}

impl SupervisorConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.column_to_girder.validate()?;
        self.girder_to_column.validate()?;
        self.descent_end.validate()?;
        if self.approach_min_transfer < 0.0 {
            return Err("approach_min_transfer must be non-negative".into());
        }
        Ok(())
    }
}

/// Median over the last `window` values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunningMedian {
    window: usize,
    values: VecDeque<usize>,
}

impl RunningMedian {
    pub fn new(window: usize) -> Self {
        RunningMedian {
            window,
            values: VecDeque::with_capacity(window),
        }
    }

    pub fn push(&mut self, v: usize) {
        if self.values.len() == self.window {
            self.values.pop_front();
        }
        self.values.push_back(v);
    }

    pub fn median(&self) -> Option<f64> {
        if self.values.is_empty() {
            return None;
        }
        let mut v: Vec<usize> = self.values.iter().copied().collect();
        v.sort_unstable();
        let n = v.len();
        Some(if n % 2 == 1 {
            v[n / 2] as f64
        } else {
            (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
        })
    }
}

/// Baseline and debounce memory of one predicate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredicateTracker {
    pub baseline: RunningMedian,
    pub debounce: u32,
}

impl PredicateTracker {
    pub fn new(p: &TransitionPredicate) -> Self {
        PredicateTracker {
            baseline: RunningMedian::new(p.baseline_window),
            debounce: 0,
        }
    }

    /// Counts a satisfying or failing scan; true once `debounce_scans`
    /// consecutive scans satisfied the condition.
    pub fn debounced(&mut self, satisfied: bool, p: &TransitionPredicate) -> bool {
        self.debounce = if satisfied { self.debounce + 1 } else { 0 };
        self.debounce >= p.debounce_scans
    }
}

/// Point count test on one scan's count. The baseline only absorbs scans
/// that do not satisfy the ratio. An empty baseline needs a strict increase.
pub fn column_to_girder_count(tr: &mut PredicateTracker, count: usize, p: &TransitionPredicate) -> bool {
    let c = count as f64;
    let satisfied = tr.baseline.median().is_some_and(|b| c > b && c >= p.ratio_threshold * b);
    if !satisfied {
        tr.baseline.push(count);
    }
    tr.debounced(satisfied, p)
}

pub fn detect_column_to_girder<T: Scalar>(tr: &mut PredicateTracker, horiz: &Scan<T>, p: &TransitionPredicate) -> bool {
    column_to_girder_count(tr, point_count_feature(horiz, &p.sector()), p)
}

/// Column face visible below the girder in the vertical scan, once enough
/// of the leg has been flown.
pub fn detect_girder_to_column<T: Scalar>(
    tr: &mut PredicateTracker,
    vert_lines: &[LineEstimate<T>],
    traveled: f64,
    leg_length: f64,
    p: &TransitionPredicate,
    perc: &PerceptionConfig,
) -> bool {
    let guard = p.geometric_guard.is_none_or(|g| traveled >= g * leg_length);
    tr.debounced(guard && perc.column_below_girder(vert_lines), p)
}

/// Height above the column base within tolerance of `target_height`.
pub fn detect_column_descent_end<T: Scalar>(
    tr: &mut PredicateTracker,
    vert_lines: &[LineEstimate<T>],
    target_height: f64,
    p: &TransitionPredicate,
    perc: &PerceptionConfig,
) -> bool {
    let near = perc
        .height_above_base(vert_lines)
        .is_some_and(|h| h.as_f64() - target_height <= p.elevation_tolerance);
    tr.debounced(near, p)
}

/// Both scans of one control tick with their extracted lines.
#[derive(Debug, Clone)]
pub struct ScanPair<T: Scalar = f64> {
    pub horiz: Scan<T>,
    pub vert: Scan<T>,
    pub horiz_lines: Vec<LineEstimate<T>>,
    pub vert_lines: Vec<LineEstimate<T>>,
}

impl<T: Scalar> ScanPair<T> {
    pub fn new(horiz: Scan<T>, vert: Scan<T>, perc: &PerceptionConfig) -> Self {
        let horiz_lines = perc.lines(&horiz);
        let vert_lines = perc.lines(&vert);
        ScanPair {
            horiz,
            vert,
            horiz_lines,
            vert_lines,
        }
    }
}

/// Hand-over from one leg to the next. Finishing the last leg completes the
/// mission without an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEvent<T: Scalar = f64> {
    pub from_leg: usize,
    pub to_leg: usize,
    pub trigger: PredicateKind,
    pub pose: Pose<T>,
    pub timestamp: f64,
}

/// Transfer flight between the previous leg's exit and a leg's entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approach {
    /// Climb along a column until the girder shows up.
    Climb,
    /// Descend along a column to the entry elevation.
    Descend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Approach(Approach),
    Leg,
}

/// What the vehicle should fly next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Directive {
    Fly { routine: RoutineKind, surface: char },
    Hover,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LegSetup {
    approach: Option<(Approach, char, f64)>,
    exit: PredicateKind,
    length: f64,
    exit_height: f64,
}

#[derive(Debug, Clone)]
pub struct SupervisorState<T: Scalar = f64> {
    pub plan: InspectionPlan<T>,
    pub leg_index: usize,
    pub mode: RoutineKind,
    pub phase: Phase,
    pub tracker: PredicateTracker,
    pub completed: bool,
    setups: Vec<LegSetup>,
    cfg: SupervisorConfig,
    perception: PerceptionConfig,
    nominal_speed: f64,
    phase_started: f64,
}

fn unsupported(leg: usize, reason: impl Into<String>) -> SupervisorError {
    SupervisorError::PlanUnsupported {
        leg,
        reason: reason.into(),
    }
}

impl<T: Scalar> SupervisorState<T> {
    /// Checks that every leg and every transfer in `plan` has a switching
    /// rule and prepares the state machine.
    pub fn new(
        plan: InspectionPlan<T>,
        m: &BridgeModel<T>,
        cfg: SupervisorConfig,
        perception: PerceptionConfig,
        nominal_speed: f64,
    ) -> Result<Self, SupervisorError> {
        cfg.validate().map_err(SupervisorError::InvalidConfig)?;
        let mut setups = Vec::with_capacity(plan.legs.len());
        for (i, leg) in plan.legs.iter().enumerate() {
            let surface = m
                .surface(leg.surface_id)
                .ok_or_else(|| unsupported(i, format!("surface {} not in bridge", leg.surface_id)))?;
            let base = surface.min_z().as_f64();
            let exit = match leg.routine {
                RoutineKind::CU => PredicateKind::ColumnToGirder,
                RoutineKind::CD => PredicateKind::DescentEnd,
                RoutineKind::GR | RoutineKind::GL => PredicateKind::GirderToColumn,
                other => return Err(unsupported(i, format!("no switching rule for {other} legs"))),
            };
            let approach = match i.checked_sub(1).map(|j| &plan.legs[j]) {
                None => None,
                Some(prev) => {
                    let d = leg.entry_position - prev.exit_position;
                    let (dz, dxy) = (d.z.as_f64(), (d.x * d.x + d.y * d.y).sqrt().as_f64());
                    if d.norm().as_f64() < cfg.approach_min_transfer {
                        None
                    } else if dxy >= cfg.approach_min_transfer || dz.abs() < dxy {
                        return Err(unsupported(i, "transfer is not a vertical move along a column"));
                    } else if dz > 0.0 {
                        let prev_surface = m.surface(prev.surface_id).expect("checked on previous leg");
                        if prev_surface.kind != SurfaceKind::Column || exit != PredicateKind::GirderToColumn {
                            return Err(unsupported(i, "climbing transfer must run from a column to a girder"));
                        }
                        Some((Approach::Climb, prev.surface_id, 0.0))
                    } else {
                        if surface.kind != SurfaceKind::Column {
                            return Err(unsupported(i, "descending transfer must end on a column"));
                        }
                        Some((Approach::Descend, leg.surface_id, leg.entry_position.z.as_f64() - base))
                    }
                }
            };
            setups.push(LegSetup {
                approach,
                exit,
                length: leg.entry_position.distance(&leg.exit_position).as_f64(),
                exit_height: leg.exit_position.z.as_f64() - base,
            });
        }
        let mut s = SupervisorState {
            leg_index: 0,
            mode: plan.legs.first().map_or(RoutineKind::GR, |l| l.routine),
            phase: Phase::Leg,
            tracker: PredicateTracker::default(),
            completed: plan.legs.is_empty(),
            plan,
            setups,
            cfg,
            perception,
            nominal_speed,
            phase_started: 0.0,
        };
        if !s.completed {
            s.begin_leg(0.0);
        }
        Ok(s)
    }

    fn predicate(&self, k: PredicateKind) -> &TransitionPredicate {
        match k {
            PredicateKind::ColumnToGirder => &self.cfg.column_to_girder,
            PredicateKind::GirderToColumn => &self.cfg.girder_to_column,
            PredicateKind::DescentEnd => &self.cfg.descent_end,
        }
    }

    fn begin_phase(&mut self, phase: Phase, t: f64) {
        self.phase = phase;
        self.phase_started = t;
        let k = self.current_predicate();
        self.tracker = PredicateTracker::new(self.predicate(k));
        self.mode = match self.directive() {
            Directive::Fly { routine, .. } => routine,
            Directive::Hover => self.mode,
        };
    }

    fn begin_leg(&mut self, t: f64) {
        let phase = match self.setups[self.leg_index].approach {
            Some((a, _, _)) => Phase::Approach(a),
            None => Phase::Leg,
        };
        self.begin_phase(phase, t);
    }

    /// Predicate that ends the current phase.
    pub fn current_predicate(&self) -> PredicateKind {
        match self.phase {
            Phase::Approach(Approach::Climb) => PredicateKind::ColumnToGirder,
            Phase::Approach(Approach::Descend) => PredicateKind::DescentEnd,
            Phase::Leg => self.setups[self.leg_index].exit,
        }
    }

    /// Routine and surface flown right now.
    pub fn directive(&self) -> Directive {
        if self.completed {
            return Directive::Hover;
        }
        let leg = &self.plan.legs[self.leg_index];
        match (self.phase, self.setups[self.leg_index].approach) {
            (Phase::Approach(Approach::Climb), Some((_, col, _))) => Directive::Fly {
                routine: RoutineKind::CU,
                surface: col,
            },
            (Phase::Approach(Approach::Descend), Some((_, col, _))) => Directive::Fly {
                routine: RoutineKind::CD,
                surface: col,
            },
            _ => Directive::Fly {
                routine: leg.routine,
                surface: leg.surface_id,
            },
        }
    }

    /// Evaluates the active predicate on one scan pair taken at `t`.
    pub fn step(&mut self, scans: &ScanPair<T>, t: f64) -> (Directive, Option<SwitchEvent<T>>) {
        if self.completed {
            return (Directive::Hover, None);
        }
        let kind = self.current_predicate();
        let p = *self.predicate(kind);
        let setup = self.setups[self.leg_index];
        let fired = match kind {
            PredicateKind::ColumnToGirder => detect_column_to_girder(&mut self.tracker, &scans.horiz, &p),
            PredicateKind::GirderToColumn => detect_girder_to_column(
                &mut self.tracker,
                &scans.vert_lines,
                self.nominal_speed * (t - self.phase_started),
                setup.length,
                &p,
                &self.perception,
            ),
            PredicateKind::DescentEnd => {
                let target = match (self.phase, setup.approach) {
                    (Phase::Approach(_), Some((_, _, h))) => h,
                    _ => setup.exit_height,
                };
                detect_column_descent_end(&mut self.tracker, &scans.vert_lines, target, &p, &self.perception)
            }
        };
        if !fired {
            return (self.directive(), None);
        }
        if matches!(self.phase, Phase::Approach(_)) {
            self.begin_phase(Phase::Leg, t);
            return (self.directive(), None);
        }
        self.leg_index += 1;
        if self.leg_index == self.plan.legs.len() {
            self.completed = true;
            return (Directive::Hover, None);
        }
        self.begin_leg(t);
        let event = SwitchEvent {
            from_leg: self.leg_index - 1,
            to_leg: self.leg_index,
            trigger: kind,
            pose: scans.horiz.pose,
            timestamp: t,
        };
        (self.directive(), Some(event))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(counts: &[usize]) -> Option<usize> {
        let p = TransitionPredicate::default();
        let mut tr = PredicateTracker::new(&p);
        counts
            .iter()
            .position(|&c| column_to_girder_count(&mut tr, c, &p))
    }

    #[test]
    fn count_predicate_traces() {
        assert_eq!(run(&[10, 10, 10, 25, 25, 25]), Some(5));
        assert_eq!(run(&[10; 20]), None);
        assert_eq!(run(&[10, 30, 10]), None);
        assert_eq!(run(&[10, 30, 30, 10, 30, 30]), None);
    }

    #[test]
    fn median_window() {
        let mut m = RunningMedian::new(3);
        assert_eq!(m.median(), None);
        for v in [1, 100, 3, 4] {
            m.push(v);
        }
        assert_eq!(m.median(), Some(4.0));
        m.push(5);
        assert_eq!(m.median(), Some(4.0));
        let mut e = RunningMedian::new(4);
        e.push(2);
        e.push(4);
        assert_eq!(e.median(), Some(3.0));
    }

    #[test]
    fn predicate_validation() {
        assert!(SupervisorConfig::default().validate().is_ok());
        let bad = TransitionPredicate {
            ratio_threshold: 1.0,
            ..TransitionPredicate::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn trigger_names_roundtrip() {
        for k in [
            PredicateKind::ColumnToGirder,
            PredicateKind::GirderToColumn,
            PredicateKind::DescentEnd,
        ] {
            assert_eq!(k.as_str().parse::<PredicateKind>().unwrap(), k);
        }
    }
}
