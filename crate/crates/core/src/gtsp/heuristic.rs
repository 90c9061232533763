use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{prefer, GtspInstance, PlanError, Tour};
use crate::scalar::{approx_tie, Scalar};

/// Parameters of the large-neighborhood search.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub seed: u64,
    pub iterations: usize,
    /// Fraction of clusters removed per iteration, drawn from `[low, high]`.
    pub removal_fraction_range: (f64, f64),
    /// Initial annealing temperature as a fraction of the starting tour cost.
    pub initial_temperature: f64,
    /// Geometric cooling factor per iteration.
    pub cooling_rate: f64,
    pub restarts: usize,
    /// A restart stops after this many iterations without a new best tour.
    pub stall_iterations: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            seed: 1,
            iterations: 1500,
            removal_fraction_range: (0.1, 0.4),
            initial_temperature: 0.05,
            cooling_rate: 0.997,
            restarts: 4,
            stall_iterations: 300,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), PlanError> {
        let (low, high) = self.removal_fraction_range;
        let bad = |m: &str| Err(PlanError::InvalidParams(m.to_string()));
        if self.iterations < 1 {
            return bad("iterations must be at least 1");
        }
        if !(0.0 < low && low <= high && high < 1.0) {
            return bad("removal fractions must satisfy 0 < low <= high < 1");
        }
        if !(self.initial_temperature > 0.0) {
            return bad("initial temperature must be positive");
        }
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return bad("cooling rate must lie in (0, 1)");
        }
        if self.stall_iterations < 1 {
            return bad("stall_iterations must be at least 1");
        }
        if self.restarts < 1 {
            return bad("restarts must be at least 1");
        }
        Ok(())
    }
}

/// Arc costs with infeasible pairs replaced by a penalty larger than any
/// feasible tour, so the search can pass through infeasible tours.
struct Penalized<'a, T: Scalar> {
    inst: &'a GtspInstance<T>,
    penalty: T,
}

impl<'a, T: Scalar> Penalized<'a, T> {
    fn new(inst: &'a GtspInstance<T>) -> Self {
        Penalized {
            inst,
            penalty: inst.total_arc_cost() + T::one(),
        }
    }

    fn arc(&self, a: usize, b: usize) -> T {
        self.inst.cost(a, b).unwrap_or(self.penalty)
    }

    fn cost(&self, seq: &[usize]) -> T {
        let mut total: T = seq.windows(2).map(|w| self.arc(w[0], w[1])).sum();
        if !self.inst.open_path && seq.len() > 1 {
            total += self.arc(seq[seq.len() - 1], seq[0]);
        }
        total
    }

    fn ids(&self, seq: &[usize]) -> Vec<usize> {
        seq.iter().map(|&i| self.inst.nodes[i].node_id).collect()
    }

    /// Cheapest (delta, position, node) for inserting `cluster` into `seq`.
    fn best_insertion(&self, seq: &[usize], cluster: usize) -> (T, usize, usize) {
        let open = self.inst.open_path;
        let mut best: Option<(T, usize, usize)> = None;
        for &v in &self.inst.clusters[cluster].nodes {
            let vid = self.inst.nodes[v].node_id;
            let slots = if open || seq.is_empty() { seq.len() + 1 } else { seq.len() };
            for pos in 0..slots {
                let delta = if seq.is_empty() {
                    T::zero()
                } else if open {
                    if pos == 0 {
                        self.arc(v, seq[0])
                    } else if pos == seq.len() {
                        self.arc(seq[pos - 1], v)
                    } else {
                        self.arc(seq[pos - 1], v) + self.arc(v, seq[pos]) - self.arc(seq[pos - 1], seq[pos])
                    }
                } else if seq.len() == 1 {
                    self.arc(seq[0], v) + self.arc(v, seq[0])
                } else {
                    let prev = seq[(pos + seq.len() - 1) % seq.len()];
                    let next = seq[pos];
                    self.arc(prev, v) + self.arc(v, next) - self.arc(prev, next)
                };
                let better = match best {
                    None => true,
                    Some((d, _, bv)) => {
                        delta < d && !approx_tie(delta, d)
                            || approx_tie(delta, d) && vid < self.inst.nodes[bv].node_id
                    }
                };
                if better {
                    best = Some((delta, pos, v));
                }
            }
        }
        best.expect("clusters have two nodes")
    }

    /// Repeatedly inserts the globally cheapest pending cluster.
    fn insert_greedy(&self, seq: &mut Vec<usize>, mut pending: Vec<usize>) {
        while !pending.is_empty() {
            let (k, (_, pos, v)) = pending
                .iter()
                .enumerate()
                .map(|(k, &c)| (k, self.best_insertion(seq, c)))
                .reduce(|a, b| {
                    let (da, db) = ((a.1).0, (b.1).0);
                    if db < da && !approx_tie(da, db) {
                        b
                    } else {
                        a
                    }
                })
                .expect("pending is non-empty");
            pending.swap_remove(k);
            seq.insert(pos, v);
        }
    }

    fn insert_in_order(&self, seq: &mut Vec<usize>, pending: &[usize]) {
        for &c in pending {
            let (_, pos, v) = self.best_insertion(seq, c);
            seq.insert(pos, v);
        }
    }

    /// Best node choice for a fixed cluster order (lexicographic on ties).
    /// Closed tours are rotated to start with cluster 0.
    fn reoptimize_nodes(&self, seq: &[usize]) -> Vec<usize> {
        let inst = self.inst;
        let mut order: Vec<usize> = seq.iter().map(|&v| inst.cluster_of(v)).collect();
        if order.is_empty() {
            return Vec::new();
        }
        if !inst.open_path {
            let r = order.iter().position(|&c| c == 0).unwrap_or(0);
            order.rotate_left(r);
        }
        let starts: Vec<Option<usize>> = if inst.open_path {
            vec![None]
        } else {
            inst.clusters[order[0]].nodes.iter().map(|&s| Some(s)).collect()
        };
        let mut best: Option<(T, Vec<usize>)> = None;
        for start in starts {
            let path = self.layered_path(&order, start);
            let c = self.cost(&path);
            let replace = match &best {
                None => true,
                Some((bc, bp)) => prefer(c, &self.ids(&path), *bc, &self.ids(bp)),
            };
            if replace {
                best = Some((c, path));
            }
        }
        best.map(|b| b.1).unwrap_or_default()
    }

    /// First-improvement descent that moves single clusters to other positions,
    /// choosing nodes optimally for each trial order.
    fn relocate_descent(&self, seq: Vec<usize>) -> Vec<usize> {
        let inst = self.inst;
        let mut best = seq;
        let mut best_cost = self.cost(&best);
        let m = best.len();
        let mut improved = m > 2;
        while improved {
            improved = false;
            'outer: for from in 0..m {
                for to in 0..m {
                    if to == from {
                        continue;
                    }
                    let mut order: Vec<usize> = best.iter().map(|&v| inst.cluster_of(v)).collect();
                    let c = order.remove(from);
                    order.insert(to, c);
                    let nodes: Vec<usize> = order.iter().map(|&c| inst.clusters[c].nodes[0]).collect();
                    let cand = self.reoptimize_nodes(&nodes);
                    let cost = self.cost(&cand);
                    if cost < best_cost && !approx_tie(cost, best_cost) {
                        best = cand;
                        best_cost = cost;
                        improved = true;
                        break 'outer;
                    }
                }
            }
        }
        best
    }

    /// Shortest layered path; `start` pins the first node and closes the cycle on it.
    fn layered_path(&self, order: &[usize], start: Option<usize>) -> Vec<usize> {
        let inst = self.inst;
        let m = order.len();
        // togo[k][j]: best cost from node j of layer k to the end.
        let mut togo = vec![[T::zero(); 2]; m];
        if let Some(s) = start {
            for j in 0..2 {
                let v = inst.clusters[order[m - 1]].nodes[j];
                togo[m - 1][j] = if m == 1 { T::zero() } else { self.arc(v, s) };
            }
        }
        for k in (0..m.saturating_sub(1)).rev() {
            for j in 0..2 {
                let v = inst.clusters[order[k]].nodes[j];
                let nexts = inst.clusters[order[k + 1]].nodes;
                togo[k][j] = (0..2)
                    .map(|i| self.arc(v, nexts[i]) + togo[k + 1][i])
                    .fold(T::infinity(), T::min);
            }
        }
        let pick = |cands: &mut dyn Iterator<Item = (usize, T)>| -> usize {
            let cands: Vec<(usize, T)> = cands.collect();
            let best = cands.iter().map(|c| c.1).fold(T::infinity(), T::min);
            cands
                .iter()
                .filter(|c| approx_tie(c.1, best))
                .min_by_key(|c| inst.nodes[c.0].node_id)
                .expect("non-empty layer")
                .0
        };
        let first_nodes = inst.clusters[order[0]].nodes;
        let mut path = Vec::with_capacity(m);
        let mut cur = match start {
            Some(s) => s,
            None => pick(&mut (0..2).map(|j| (first_nodes[j], togo[0][j]))),
        };
        path.push(cur);
        for k in 1..m {
            let layer = inst.clusters[order[k]].nodes;
            let prev = cur;
            cur = pick(&mut (0..2).map(|j| (layer[j], self.arc(prev, layer[j]) + togo[k][j])));
            path.push(cur);
        }
        path
    }
}

/// Cheapest-insertion construction: node sequence and its penalized cost.
/// The cost is `None` when the construction uses an infeasible pair.
pub fn greedy_insertion<T: Scalar>(inst: &GtspInstance<T>) -> (Vec<usize>, Option<T>) {
    let pen = Penalized::new(inst);
    let mut seq = Vec::new();
    pen.insert_greedy(&mut seq, (0..inst.cluster_count()).collect());
    let cost = inst.sequence_cost(&seq);
    (pen.ids(&seq), cost)
}

fn search<T: Scalar>(pen: &Penalized<'_, T>, p: &SolverParams, restart: usize) -> (T, Vec<usize>) {
    let inst = pen.inst;
    let m = inst.cluster_count();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut cur = Vec::new();
    pen.insert_greedy(&mut cur, (0..m).collect());
    cur = pen.relocate_descent(pen.reoptimize_nodes(&cur));
    let mut cur_cost = pen.cost(&cur);
    let mut best = (cur_cost, cur.clone());
    if m < 2 {
        return best;
    }
    let mut temperature = T::lit(p.initial_temperature) * cur_cost.max(T::epsilon());
    let cooling = T::lit(p.cooling_rate);
    let (low, high) = p.removal_fraction_range;
    let k_min = ((low * m as f64).ceil() as usize).clamp(1, m - 1);
    let k_max = ((high * m as f64).ceil() as usize).clamp(k_min, m - 1);
    let mut since_best = 0;
    for _ in 0..p.iterations {
        if since_best >= p.stall_iterations {
            break;
        }
        since_best += 1;
        let mut cand = cur.clone();
        let k = rng.random_range(k_min..=k_max);
        let removed: Vec<usize> = if rng.random_bool(0.5) {
            let mut picks: Vec<usize> = (0..cand.len()).collect();
            picks.shuffle(&mut rng);
            picks.truncate(k);
            picks.sort_unstable_by(|a, b| b.cmp(a));
            picks.into_iter().map(|i| inst.cluster_of(cand.remove(i))).collect()
        } else {
            let start = rng.random_range(0..cand.len());
            let mut out = Vec::with_capacity(k);
            for _ in 0..k {
                let i = start.min(cand.len() - 1);
                out.push(inst.cluster_of(cand.remove(i)));
            }
            out
        };
        if rng.random_bool(0.5) {
            pen.insert_greedy(&mut cand, removed);
        } else {
            let mut removed = removed;
            removed.shuffle(&mut rng);
            pen.insert_in_order(&mut cand, &removed);
        }
        cand = pen.relocate_descent(pen.reoptimize_nodes(&cand));
        let c = pen.cost(&cand);
        let accept = c < cur_cost || {
            let x = ((cur_cost - c) / temperature).as_f64();
            rng.random::<f64>() < x.exp()
        };
        if accept {
            if prefer(c, &pen.ids(&cand), best.0, &pen.ids(&best.1)) {
                best = (c, cand.clone());
                since_best = 0;
            }
            cur = cand;
            cur_cost = c;
        }
        temperature *= cooling;
    }
    best
}

/// Seeded large-neighborhood search. Restarts run in parallel and are merged
/// by cost, then by lexicographic entry order, so the result depends only on
/// the instance and `p`.
pub fn solve_heuristic<T: Scalar>(inst: &GtspInstance<T>, p: &SolverParams) -> Result<Tour<T>, PlanError> {
    p.validate()?;
    if inst.cluster_count() == 0 {
        return Err(PlanError::InstanceTooSmall(0));
    }
    let pen = Penalized::new(inst);
    let runs: Vec<(T, Vec<usize>)> = (0..p.restarts)
        .into_par_iter()
        .map(|r| search(&pen, p, r))
        .collect();
    let mut best: Option<(T, Vec<usize>)> = None;
    let consider = |best: &mut Option<(T, Vec<usize>)>, cand: (T, Vec<usize>)| {
        let replace = match best {
            None => true,
            Some((c, s)) => prefer(cand.0, &pen.ids(&cand.1), *c, &pen.ids(s)),
        };
        if replace {
            *best = Some(cand);
        }
    };
    for run in runs {
        consider(&mut best, run);
    }
    let (_, seq) = best.clone().expect("at least one restart");
    let mut reversed = seq;
    reversed.reverse();
    let reversed = pen.reoptimize_nodes(&reversed);
    consider(&mut best, (pen.cost(&reversed), reversed));
    let (_, seq) = best.expect("at least one restart");
    let total_cost = inst.sequence_cost(&seq).ok_or_else(|| {
        PlanError::InfeasibleCoverage(inst.clusters.iter().map(|c| c.id).collect())
    })?;
    Ok(Tour {
        entries: pen.ids(&seq),
        total_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;

    fn two_cluster() -> GtspInstance<f64> {
        let p = |x: f64, z: f64| Point3::new(x, 0.0, z);
        GtspInstance::from_clusters(
            &[('A', [(1, p(0., 0.)), (2, p(10., 0.))]), ('B', [(3, p(12., 1.)), (4, p(20., 3.))])],
            1.0,
            true,
        )
        .unwrap()
    }

    #[test]
    fn params_are_validated() {
        let mut p = SolverParams::default();
        assert!(p.validate().is_ok());
        p.removal_fraction_range = (0.5, 0.2);
        assert!(p.validate().is_err());
        p = SolverParams { cooling_rate: 1.0, ..Default::default() };
        assert!(p.validate().is_err());
        p = SolverParams { iterations: 0, ..Default::default() };
        assert!(matches!(p.validate(), Err(PlanError::InvalidParams(_))));
    }

    #[test]
    fn two_clusters_pick_cheapest_combination() {
        let inst = two_cluster();
        // Open path: the four one-arc options are 1->3, 1->4, 2->3, 2->4 and
        // the reverse directions 3->1, 3->2, 4->1, 4->2.
        let mut best = f64::INFINITY;
        for i in 0..4 {
            for j in 0..4 {
                if let Some(c) = inst.cost(i, j) {
                    best = best.min(c);
                }
            }
        }
        let tour = solve_heuristic(&inst, &SolverParams::default()).unwrap();
        assert!((tour.total_cost - best).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let inst = two_cluster();
        let p = SolverParams { seed: 7, ..Default::default() };
        assert_eq!(solve_heuristic(&inst, &p).unwrap(), solve_heuristic(&inst, &p).unwrap());
    }
}
