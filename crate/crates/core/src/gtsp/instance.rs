use std::collections::{BTreeSet, VecDeque};

use super::PlanError;
use crate::geometry::{BridgeModel, Point3};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct GtspNode<T: Scalar = f64> {
    pub node_id: usize,
    pub cluster_id: char,
    pub position: Point3<T>,
    pub partner_id: usize,
}

/// Two node indices (into [`GtspInstance::nodes`]) per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: char,
    pub nodes: [usize; 2],
}

/// Clustered directed graph. `cost[i * n + j]` is `Some` exactly on feasible pairs.
///
/// With `open_path` set, tours are open paths: equivalent to a virtual depot
/// cluster with zero-cost arcs to and from every node.
#[derive(Debug, Clone, PartialEq)]
pub struct GtspInstance<T: Scalar = f64> {
    pub nodes: Vec<GtspNode<T>>,
    pub clusters: Vec<Cluster>,
    cost: Vec<Option<T>>,
    cluster_of: Vec<usize>,
    pub open_path: bool,
}

impl<T: Scalar> GtspInstance<T> {
    /// Complete instance over `(cluster id, [(node id, position); 2])` groups.
    /// Every inter-cluster pair gets `C(A1,B1) = D(A1,A2) + D(A2,B1)`.
    pub fn from_clusters(
        groups: &[(char, [(usize, Point3<T>); 2])],
        distance_scale: T,
        open_path: bool,
    ) -> Result<Self, PlanError> {
        let mut nodes = Vec::with_capacity(2 * groups.len());
        let mut clusters = Vec::with_capacity(groups.len());
        let mut cluster_of = Vec::with_capacity(2 * groups.len());
        let mut ids = BTreeSet::new();
        let mut cids = BTreeSet::new();
        for (ci, (cid, pair)) in groups.iter().enumerate() {
            if !cids.insert(*cid) {
                return Err(PlanError::InvalidTour(format!("duplicate cluster {cid}")));
            }
            let base = nodes.len();
            for (k, (nid, pos)) in pair.iter().enumerate() {
                if !ids.insert(*nid) {
                    return Err(PlanError::InvalidTour(format!("duplicate node id {nid}")));
                }
                nodes.push(GtspNode {
                    node_id: *nid,
                    cluster_id: *cid,
                    position: *pos,
                    partner_id: pair[1 - k].0,
                });
                cluster_of.push(ci);
            }
            clusters.push(Cluster {
                id: *cid,
                nodes: [base, base + 1],
            });
        }
        let n = nodes.len();
        let dist = |i: usize, j: usize| nodes[i].position.distance(&nodes[j].position) * distance_scale;
        let mut cost = vec![None; n * n];
        for i in 0..n {
            let partner = i ^ 1;
            for j in 0..n {
                if cluster_of[i] != cluster_of[j] {
                    cost[i * n + j] = Some(dist(i, partner) + dist(partner, j));
                }
            }
        }
        Ok(GtspInstance {
            nodes,
            clusters,
            cost,
            cluster_of,
            open_path,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Cluster index of node index `i`.
    pub fn cluster_of(&self, i: usize) -> usize {
        self.cluster_of[i]
    }

    /// Index of the other node in the same cluster.
    pub fn partner(&self, i: usize) -> usize {
        i ^ 1
    }

    /// Directed cost between node indices, `None` when the pair is infeasible.
    pub fn cost(&self, i: usize, j: usize) -> Option<T> {
        self.cost[i * self.nodes.len() + j]
    }

    pub fn is_feasible(&self, i: usize, j: usize) -> bool {
        self.cost(i, j).is_some()
    }

    pub fn feasible_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.nodes.len();
        (0..n * n).filter(|k| self.cost[*k].is_some()).map(move |k| (k / n, k % n))
    }

    pub fn index_of(&self, node_id: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.node_id == node_id)
    }

    pub fn cluster_index(&self, id: char) -> Option<usize> {
        self.clusters.iter().position(|c| c.id == id)
    }

    /// Sum of all finite arc costs.
    pub fn total_arc_cost(&self) -> T {
        self.cost.iter().flatten().copied().sum()
    }

    /// Cost of visiting node indices in order; `None` if a leg is infeasible.
    /// Closed tours include the arc back to the first node.
    pub fn sequence_cost(&self, seq: &[usize]) -> Option<T> {
        let mut total = T::zero();
        for w in seq.windows(2) {
            total += self.cost(w[0], w[1])?;
        }
        if !self.open_path && seq.len() > 1 {
            total += self.cost(seq[seq.len() - 1], seq[0])?;
        }
        Some(total)
    }

    /// Keeps only inter-cluster pairs whose clusters satisfy `keep`, then
    /// checks that the cluster graph is still connected.
    pub fn restrict(&self, keep: impl Fn(char, char) -> bool) -> Result<Self, PlanError> {
        let mut out = self.clone();
        let n = self.nodes.len();
        for i in 0..n {
            for j in 0..n {
                let (ci, cj) = (self.cluster_of[i], self.cluster_of[j]);
                if ci == cj || !keep(self.clusters[ci].id, self.clusters[cj].id) {
                    out.cost[i * n + j] = None;
                }
            }
        }
        out.check_connected()?;
        Ok(out)
    }

    fn check_connected(&self) -> Result<(), PlanError> {
        let m = self.clusters.len();
        if m == 0 {
            return Ok(());
        }
        let mut adj = vec![BTreeSet::new(); m];
        for (i, j) in self.feasible_pairs() {
            let (a, b) = (self.cluster_of[i], self.cluster_of[j]);
            adj[a].insert(b);
            adj[b].insert(a);
        }
        let mut seen = vec![false; m];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(c) = queue.pop_front() {
            for &d in &adj[c] {
                if !seen[d] {
                    seen[d] = true;
                    queue.push_back(d);
                }
            }
        }
        if seen.iter().all(|s| *s) {
            return Ok(());
        }
        // Report the clusters outside the largest component.
        let mut comp = vec![usize::MAX; m];
        let mut sizes = Vec::new();
        for start in 0..m {
            if comp[start] != usize::MAX {
                continue;
            }
            let label = sizes.len();
            let mut size = 0;
            let mut queue = VecDeque::from([start]);
            comp[start] = label;
            while let Some(c) = queue.pop_front() {
                size += 1;
                for &d in &adj[c] {
                    if comp[d] == usize::MAX {
                        comp[d] = label;
                        queue.push_back(d);
                    }
                }
            }
            sizes.push(size);
        }
        let main = (0..sizes.len()).max_by_key(|&l| (sizes[l], usize::MAX - l)).unwrap_or(0);
        let isolated = (0..m)
            .filter(|&c| comp[c] != main)
            .map(|c| self.clusters[c].id)
            .collect();
        Err(PlanError::InfeasibleCoverage(isolated))
    }
}

/// One cluster per surface with node ids `2i + 1` (node_a) and `2i + 2`
/// (node_b) for the i-th surface, already pruned to the declared adjacency.
/// Instances are open paths.
pub fn build_instance<T: Scalar>(m: &BridgeModel<T>) -> Result<GtspInstance<T>, PlanError> {
    if m.surfaces.len() < 2 {
        return Err(PlanError::InstanceTooSmall(m.surfaces.len()));
    }
    let groups: Vec<_> = m
        .surfaces
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id, [(2 * i + 1, s.node_a), (2 * i + 2, s.node_b)]))
        .collect();
    let complete = GtspInstance::from_clusters(&groups, m.distance_scale, true)?;
    prune_infeasible(&complete, m)
}

/// Drops every pair whose clusters are not adjacent in `m`. Idempotent.
pub fn prune_infeasible<T: Scalar>(
    inst: &GtspInstance<T>,
    m: &BridgeModel<T>,
) -> Result<GtspInstance<T>, PlanError> {
    inst.restrict(|a, b| m.are_adjacent(a, b))
}
