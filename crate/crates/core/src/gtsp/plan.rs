use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{build_instance, solve_heuristic, GtspInstance, PlanError, SolverParams, Tour};
use crate::geometry::{routine_for_leg, BridgeModel, Point3, RoutineKind};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanLeg<T: Scalar = f64> {
    pub surface_id: char,
    pub routine: RoutineKind,
    pub entry: usize,
    pub exit: usize,
    pub entry_position: Point3<T>,
    pub exit_position: Point3<T>,
}

/// Ordered surface legs ready for execution.
#[derive(Debug, Clone, PartialEq)]
pub struct InspectionPlan<T: Scalar = f64> {
    pub legs: Vec<PlanLeg<T>>,
    /// Entry and exit node ids interleaved.
    pub expanded_sequence: Vec<usize>,
    pub total_cost: T,
    pub solve_seconds: f64,
}

impl<T: Scalar> InspectionPlan<T> {
    pub fn routines(&self) -> Vec<RoutineKind> {
        self.legs.iter().map(|l| l.routine).collect()
    }

    /// An empty plan (nothing to fly).
    pub fn empty() -> Self {
        InspectionPlan {
            legs: Vec::new(),
            expanded_sequence: Vec::new(),
            total_cost: T::zero(),
            solve_seconds: 0.0,
        }
    }
}

/// Appends each entry node's partner after it: `[e1, x1, e2, x2, ...]`.
pub fn expand_sequence<T: Scalar>(t: &Tour<T>, inst: &GtspInstance<T>) -> Result<Vec<usize>, PlanError> {
    let mut out = Vec::with_capacity(2 * t.entries.len());
    for &entry in &t.entries {
        let i = inst
            .index_of(entry)
            .ok_or_else(|| PlanError::InvalidTour(format!("unknown node id {entry}")))?;
        out.push(entry);
        out.push(inst.nodes[i].partner_id);
    }
    Ok(out)
}

/// Turns a tour into surface legs with their routines.
pub fn expand_tour<T: Scalar>(
    t: &Tour<T>,
    inst: &GtspInstance<T>,
    m: &BridgeModel<T>,
) -> Result<InspectionPlan<T>, PlanError> {
    let expanded_sequence = expand_sequence(t, inst)?;
    let mut seen = vec![false; inst.cluster_count()];
    let mut legs = Vec::with_capacity(t.entries.len());
    for pair in expanded_sequence.chunks(2) {
        let ei = inst.index_of(pair[0]).expect("checked by expand_sequence");
        let xi = inst.partner(ei);
        let c = inst.cluster_of(ei);
        if std::mem::replace(&mut seen[c], true) {
            return Err(PlanError::InvalidTour(format!("cluster {} visited twice", inst.clusters[c].id)));
        }
        let surface_id = inst.clusters[c].id;
        let surface = m
            .surface(surface_id)
            .ok_or_else(|| PlanError::InvalidTour(format!("no surface {surface_id} in bridge model")))?;
        let (entry_position, exit_position) = (inst.nodes[ei].position, inst.nodes[xi].position);
        legs.push(PlanLeg {
            surface_id,
            routine: routine_for_leg(surface, &entry_position, &exit_position)?,
            entry: pair[0],
            exit: pair[1],
            entry_position,
            exit_position,
        });
    }
    Ok(InspectionPlan {
        legs,
        expanded_sequence,
        total_cost: t.total_cost,
        solve_seconds: 0.0,
    })
}

/// Full planning pipeline: instance, heuristic solve, expansion. Records the
/// wall time spent building and solving.
pub fn plan_bridge<T: Scalar>(m: &BridgeModel<T>, p: &SolverParams) -> Result<InspectionPlan<T>, PlanError> {
    let started = Instant::now();
    let inst = build_instance(m)?;
    let tour = solve_heuristic(&inst, p)?;
    let mut plan = expand_tour(&tour, &inst, m)?;
    plan.solve_seconds = started.elapsed().as_secs_f64();
    Ok(plan)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    total_cost: f64,
    solve_seconds: f64,
    expanded_sequence: Vec<usize>,
    #[serde(rename = "leg")]
    legs: Vec<RawLeg>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLeg {
    surface: String,
    routine: RoutineKind,
    entry: usize,
    exit: usize,
    entry_position: [f64; 3],
    exit_position: [f64; 3],
}

/// Plan file text (TOML): one `[[leg]]` table per surface in flight order.
pub fn write_plan<T: Scalar>(plan: &InspectionPlan<T>) -> String {
    let arr = |p: &Point3<T>| [p.x.as_f64(), p.y.as_f64(), p.z.as_f64()];
    let raw = RawPlan {
        total_cost: plan.total_cost.as_f64(),
        solve_seconds: plan.solve_seconds,
        expanded_sequence: plan.expanded_sequence.clone(),
        legs: plan
            .legs
            .iter()
            .map(|l| RawLeg {
                surface: l.surface_id.to_string(),
                routine: l.routine,
                entry: l.entry,
                exit: l.exit,
                entry_position: arr(&l.entry_position),
                exit_position: arr(&l.exit_position),
            })
            .collect(),
    };
    toml::to_string(&raw).expect("plan serializes")
}

/// Parses a plan file and checks it against the bridge it was made for.
pub fn read_plan<T: Scalar>(text: &str, m: &BridgeModel<T>) -> Result<InspectionPlan<T>, PlanError> {
    let raw: RawPlan = toml::from_str(text).map_err(|e| PlanError::PlanFormat(e.to_string()))?;
    let pt = |a: [f64; 3]| Point3::new(T::lit(a[0]), T::lit(a[1]), T::lit(a[2]));
    let mut legs = Vec::with_capacity(raw.legs.len());
    let mut seen = std::collections::BTreeSet::new();
    for l in raw.legs {
        let mut chars = l.surface.chars();
        let surface_id = match (chars.next(), chars.next()) {
            (Some(c), None) => c,
            _ => return Err(PlanError::PlanFormat(format!("bad surface id `{}`", l.surface))),
        };
        if !seen.insert(surface_id) {
            return Err(PlanError::PlanFormat(format!("surface {surface_id} appears twice")));
        }
        let surface = m
            .surface(surface_id)
            .ok_or_else(|| PlanError::PlanFormat(format!("surface {surface_id} not in bridge")))?;
        let (entry_position, exit_position) = (pt(l.entry_position), pt(l.exit_position));
        let routine = routine_for_leg(surface, &entry_position, &exit_position)?;
        if routine != l.routine {
            return Err(PlanError::PlanFormat(format!(
                "leg on {surface_id} says {} but its nodes give {routine}",
                l.routine
            )));
        }
        legs.push(PlanLeg {
            surface_id,
            routine,
            entry: l.entry,
            exit: l.exit,
            entry_position,
            exit_position,
        });
    }
    let expected: Vec<usize> = legs.iter().flat_map(|l| [l.entry, l.exit]).collect();
    if expected != raw.expanded_sequence {
        return Err(PlanError::PlanFormat("expanded_sequence does not match legs".into()));
    }
    Ok(InspectionPlan {
        legs,
        expanded_sequence: raw.expanded_sequence,
        total_cost: T::lit(raw.total_cost),
        solve_seconds: raw.solve_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_expansion() {
        let p = |x: f64| Point3::new(x, 0., 0.);
        let inst = GtspInstance::from_clusters(&[('A', [(1, p(0.)), (2, p(5.))])], 1.0, true).unwrap();
        let tour = Tour { entries: vec![1], total_cost: 0.0 };
        assert_eq!(expand_sequence(&tour, &inst).unwrap(), vec![1, 2]);
        let bad = Tour { entries: vec![9], total_cost: 0.0 };
        assert!(expand_sequence(&bad, &inst).is_err());
    }
}
