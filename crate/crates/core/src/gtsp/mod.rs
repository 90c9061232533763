//! Coverage planning as a Generalized TSP: one cluster per surface, two nodes
//! per cluster (the two traversal directions).
//!
//! Solvers:
//! * [`solve_heuristic`] – seeded large-neighborhood search with annealing.
//! * [`solve_exact`] – dynamic program over cluster subsets.
//! * [`noon_bean_transform`] + [`solve_atsp_exact`] – reduction to an
//!   asymmetric TSP, used as an independent optimality route.
//!
//! Ties between equal-cost tours are broken by the lexicographically smallest
//! sequence of entry node ids, so every solver reports the same tour.

mod atsp;
mod exact;
mod heuristic;
mod instance;
mod noon_bean;
mod plan;

pub use atsp::{atsp_cycle_cost, solve_atsp_exact, ATSP_MAX_NODES};
pub use exact::{solve_exact, EXACT_MAX_CLUSTERS};
pub use heuristic::{greedy_insertion, solve_heuristic, SolverParams};
pub use instance::{build_instance, prune_infeasible, Cluster, GtspInstance, GtspNode};
pub use noon_bean::{noon_bean_transform, solve_via_noon_bean, NoonBean};
pub use plan::{
    expand_sequence, expand_tour, plan_bridge, read_plan, write_plan, InspectionPlan, PlanLeg,
};

use thiserror::Error;

use crate::geometry::BridgeError;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("instance too small: {0} cluster(s), need at least 2")]
    InstanceTooSmall(usize),
    #[error("instance too large for exact search: {clusters} clusters (limit {limit})")]
    InstanceTooLarge { clusters: usize, limit: usize },
    #[error("infeasible coverage: no tour reaches cluster(s) {}", .0.iter().collect::<String>())]
    InfeasibleCoverage(Vec<char>),
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("invalid tour: {0}")]
    InvalidTour(String),
    #[error("invalid plan file: {0}")]
    PlanFormat(String),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
}

/// A solved visiting order: one entry node per cluster.
///
/// Closed tours start at the node of cluster 0; open paths start at the first
/// cluster flown.
#[derive(Debug, Clone, PartialEq)]
pub struct Tour<T: Scalar = f64> {
    pub entries: Vec<usize>,
    pub total_cost: T,
}

/// `true` when (cost_a, ids_a) should be preferred over (cost_b, ids_b).
pub(crate) fn prefer<T: Scalar>(cost_a: T, ids_a: &[usize], cost_b: T, ids_b: &[usize]) -> bool {
    if crate::scalar::approx_tie(cost_a, cost_b) {
        ids_a < ids_b
    } else {
        cost_a < cost_b
    }
}
