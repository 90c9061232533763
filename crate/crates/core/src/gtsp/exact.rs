use super::{GtspInstance, PlanError, Tour};
use crate::scalar::{approx_tie, Scalar};

/// Largest instance accepted by [`solve_exact`].
pub const EXACT_MAX_CLUSTERS: usize = 16;

/// Globally optimal tour by dynamic programming over visited-cluster subsets.
/// Among optimal tours the lexicographically smallest entry sequence wins.
pub fn solve_exact<T: Scalar>(inst: &GtspInstance<T>) -> Result<Tour<T>, PlanError> {
    let m = inst.cluster_count();
    if m == 0 {
        return Err(PlanError::InstanceTooSmall(0));
    }
    if m > EXACT_MAX_CLUSTERS {
        return Err(PlanError::InstanceTooLarge {
            clusters: m,
            limit: EXACT_MAX_CLUSTERS,
        });
    }
    let starts: Vec<Option<usize>> = if inst.open_path {
        vec![None]
    } else {
        inst.clusters[0].nodes.iter().map(|&s| Some(s)).collect()
    };
    let mut best: Option<(T, Vec<usize>)> = None;
    for start in starts {
        let dp = CostToGo::new(inst, start);
        if let Some(seq) = dp.reconstruct() {
            let cost = inst.sequence_cost(&seq).expect("reconstructed tour is feasible");
            let ids: Vec<usize> = seq.iter().map(|&i| inst.nodes[i].node_id).collect();
            let replace = match &best {
                None => true,
                Some((c, b)) => super::prefer(cost, &ids, *c, b),
            };
            if replace {
                best = Some((cost, ids));
            }
        }
    }
    let (total_cost, entries) =
        best.ok_or_else(|| PlanError::InfeasibleCoverage(inst.clusters.iter().map(|c| c.id).collect()))?;
    Ok(Tour { entries, total_cost })
}

/// `value[set * n + v]`: cheapest completion after visiting the clusters in
/// `set`, currently at node `v`.
struct CostToGo<'a, T: Scalar> {
    inst: &'a GtspInstance<T>,
    start: Option<usize>,
    value: Vec<T>,
}

impl<'a, T: Scalar> CostToGo<'a, T> {
    fn new(inst: &'a GtspInstance<T>, start: Option<usize>) -> Self {
        let m = inst.cluster_count();
        let n = inst.node_count();
        let full = (1usize << m) - 1;
        let mut value = vec![T::infinity(); (full + 1) * n];
        for v in 0..n {
            value[full * n + v] = match start {
                None => T::zero(),
                Some(s) if m == 1 => {
                    if v == s {
                        T::zero()
                    } else {
                        T::infinity()
                    }
                }
                Some(s) => inst.cost(v, s).unwrap_or(T::infinity()),
            };
        }
        for set in (1..full).rev() {
            if start.is_some() && set & 1 == 0 {
                continue;
            }
            for v in 0..n {
                if set & (1 << inst.cluster_of(v)) == 0 {
                    continue;
                }
                let mut best = T::infinity();
                for u in 0..n {
                    let cu = inst.cluster_of(u);
                    if set & (1 << cu) != 0 {
                        continue;
                    }
                    if let Some(c) = inst.cost(v, u) {
                        let rest = value[(set | 1 << cu) * n + u];
                        if c + rest < best {
                            best = c + rest;
                        }
                    }
                }
                value[set * n + v] = best;
            }
        }
        CostToGo { inst, start, value }
    }

    fn reconstruct(&self) -> Option<Vec<usize>> {
        let inst = self.inst;
        let n = inst.node_count();
        let m = inst.cluster_count();
        let pick = |cands: Vec<(usize, T)>| -> Option<usize> {
            let best = cands.iter().map(|c| c.1).fold(T::infinity(), T::min);
            if !best.is_finite() {
                return None;
            }
            cands
                .into_iter()
                .filter(|c| approx_tie(c.1, best))
                .min_by_key(|c| inst.nodes[c.0].node_id)
                .map(|c| c.0)
        };
        let first = match self.start {
            Some(s) => {
                if !self.value[(1 << inst.cluster_of(s)) * n + s].is_finite() {
                    return None;
                }
                s
            }
            None => pick(
                (0..n)
                    .map(|v| (v, self.value[(1 << inst.cluster_of(v)) * n + v]))
                    .collect(),
            )?,
        };
        let mut set = 1usize << inst.cluster_of(first);
        let mut seq = vec![first];
        let mut cur = first;
        for _ in 1..m {
            let cands = (0..n)
                .filter(|&u| set & (1 << inst.cluster_of(u)) == 0)
                .filter_map(|u| {
                    let c = inst.cost(cur, u)?;
                    Some((u, c + self.value[(set | 1 << inst.cluster_of(u)) * n + u]))
                })
                .collect();
            cur = pick(cands)?;
            set |= 1 << inst.cluster_of(cur);
            seq.push(cur);
        }
        Some(seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;

    #[test]
    fn guard_rejects_large_instances() {
        let groups: Vec<_> = (0..17)
            .map(|i| {
                let x = i as f64 * 3.0;
                (
                    char::from(b'a' + i as u8),
                    [(2 * i + 1, Point3::new(x, 0., 0.)), (2 * i + 2, Point3::new(x + 1., 0., 0.))],
                )
            })
            .collect();
        let inst = GtspInstance::from_clusters(&groups, 1.0, true).unwrap();
        assert_eq!(
            solve_exact(&inst).unwrap_err(),
            PlanError::InstanceTooLarge { clusters: 17, limit: 16 }
        );
    }

    #[test]
    fn forced_chain_order() {
        let p = |x: f64| Point3::new(x, 0., 0.);
        let groups = [
            ('A', [(1, p(0.)), (2, p(1.))]),
            ('B', [(3, p(2.)), (4, p(3.))]),
            ('C', [(5, p(4.)), (6, p(5.))]),
        ];
        let inst = GtspInstance::from_clusters(&groups, 1.0, true)
            .unwrap()
            .restrict(|a, b| (a as i32 - b as i32).abs() == 1)
            .unwrap();
        let tour = solve_exact(&inst).unwrap();
        // Forward A,B,C from node 1 costs 1+1 + 1+1 = 4; nothing beats it.
        assert_eq!(tour.entries, vec![1, 3, 5]);
        assert_eq!(tour.total_cost, 4.0);
    }

    #[test]
    fn infeasible_closed_chain() {
        let p = |x: f64| Point3::new(x, 0., 0.);
        let groups = [
            ('A', [(1, p(0.)), (2, p(1.))]),
            ('B', [(3, p(2.)), (4, p(3.))]),
            ('C', [(5, p(4.)), (6, p(5.))]),
        ];
        let inst = GtspInstance::from_clusters(&groups, 1.0, false)
            .unwrap()
            .restrict(|a, b| (a as i32 - b as i32).abs() == 1)
            .unwrap();
        assert!(matches!(solve_exact(&inst), Err(PlanError::InfeasibleCoverage(_))));
    }
}
