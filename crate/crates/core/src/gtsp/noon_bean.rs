use super::{solve_atsp_exact, GtspInstance, PlanError, Tour};
use crate::scalar::Scalar;

/// Asymmetric TSP produced by the Noon–Bean reduction.
///
/// ATSP node `k < instance.node_count()` is instance node `k`; open-path
/// instances get one extra depot node at the end, forming its own cluster.
#[derive(Debug, Clone)]
pub struct NoonBean<T: Scalar = f64> {
    pub size: usize,
    pub cost: Vec<Option<T>>,
    /// Offset added to every inter-cluster arc.
    pub big_m: T,
    /// Clusters in the reduction, depot included.
    pub cluster_count: usize,
    pub depot: Option<usize>,
    cluster_of: Vec<usize>,
}

impl<T: Scalar> NoonBean<T> {
    pub fn arc(&self, i: usize, j: usize) -> Option<T> {
        self.cost[i * self.size + j]
    }

    /// GTSP cost encoded by an ATSP tour cost.
    pub fn gtsp_cost(&self, atsp_cost: T) -> T {
        atsp_cost - T::lit(self.cluster_count as f64) * self.big_m
    }

    /// Reads the GTSP tour off an ATSP cycle: the first node visited in each
    /// cluster is that cluster's entry.
    pub fn map_tour(&self, inst: &GtspInstance<T>, cycle: &[usize]) -> Result<Tour<T>, PlanError> {
        let len = cycle.len();
        if len != self.size {
            return Err(PlanError::InvalidTour("cycle does not visit every node".into()));
        }
        let boundary = (0..len)
            .find(|&k| self.cluster_of[cycle[k]] != self.cluster_of[cycle[(k + len - 1) % len]])
            .unwrap_or(0);
        let mut entries: Vec<usize> = Vec::new();
        for k in 0..len {
            let cur = cycle[(boundary + k) % len];
            let prev = cycle[(boundary + k + len - 1) % len];
            if k == 0 || self.cluster_of[cur] != self.cluster_of[prev] {
                entries.push(cur);
            }
        }
        if entries.len() != self.cluster_count {
            return Err(PlanError::InvalidTour("cycle re-enters a cluster".into()));
        }
        let anchor = match self.depot {
            Some(d) => entries.iter().position(|&e| e == d).expect("depot is visited"),
            None => entries.iter().position(|&e| inst.cluster_of(e) == 0).expect("cluster 0 visited"),
        };
        entries.rotate_left(anchor);
        if self.depot.is_some() {
            entries.remove(0);
        }
        let total_cost = inst
            .sequence_cost(&entries)
            .ok_or_else(|| PlanError::InvalidTour("mapped tour uses an infeasible pair".into()))?;
        Ok(Tour {
            entries: entries.iter().map(|&i| inst.nodes[i].node_id).collect(),
            total_cost,
        })
    }
}

/// Noon–Bean reduction: each cluster becomes a zero-cost directed cycle, and
/// every feasible arc `u -> w` leaves from the cycle predecessor of `u` with
/// cost `c(u, w) + M`, where `M` exceeds the sum of all costs.
pub fn noon_bean_transform<T: Scalar>(inst: &GtspInstance<T>) -> NoonBean<T> {
    let n = inst.node_count();
    let depot = inst.open_path.then_some(n);
    let size = n + usize::from(inst.open_path);
    let big_m = inst.total_arc_cost() + T::one();
    let mut cluster_of: Vec<usize> = (0..n).map(|i| inst.cluster_of(i)).collect();
    if inst.open_path {
        cluster_of.push(inst.cluster_count());
    }
    let mut cost = vec![None; size * size];
    let mut set = |i: usize, j: usize, c: T| cost[i * size + j] = Some(c);
    for cluster in &inst.clusters {
        let [a, b] = cluster.nodes;
        set(a, b, T::zero());
        set(b, a, T::zero());
    }
    // Cycle predecessor of node u within its cluster.
    let pred = |u: usize| if u == n { n } else { inst.partner(u) };
    for (u, w) in inst.feasible_pairs() {
        set(pred(u), w, inst.cost(u, w).expect("feasible") + big_m);
    }
    if let Some(d) = depot {
        for v in 0..n {
            set(d, v, big_m);
            set(pred(v), d, big_m);
        }
    }
    NoonBean {
        size,
        cost,
        big_m,
        cluster_count: inst.cluster_count() + usize::from(inst.open_path),
        depot,
        cluster_of,
    }
}

/// Optimal tour through the reduction and an exact ATSP solve.
pub fn solve_via_noon_bean<T: Scalar>(inst: &GtspInstance<T>) -> Result<Tour<T>, PlanError> {
    let nb = noon_bean_transform(inst);
    let (cycle, _) = solve_atsp_exact(nb.size, |i, j| nb.arc(i, j))?;
    nb.map_tour(inst, &cycle)
}
