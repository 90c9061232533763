use super::PlanError;
use crate::scalar::Scalar;

/// Largest asymmetric TSP accepted by [`solve_atsp_exact`].
pub const ATSP_MAX_NODES: usize = 22;

/// Cost of the cycle through `order` (closing back to the first node).
pub fn atsp_cycle_cost<T: Scalar>(cost: impl Fn(usize, usize) -> Option<T>, order: &[usize]) -> Option<T> {
    let mut total = T::zero();
    for k in 0..order.len() {
        total += cost(order[k], order[(k + 1) % order.len()])?;
    }
    Some(total)
}

/// Optimal Hamiltonian cycle over `n` nodes (Held–Karp), starting at node 0.
/// `cost` returns `None` for missing arcs.
pub fn solve_atsp_exact<T: Scalar>(
    n: usize,
    cost: impl Fn(usize, usize) -> Option<T>,
) -> Result<(Vec<usize>, T), PlanError> {
    if n > ATSP_MAX_NODES {
        return Err(PlanError::InstanceTooLarge {
            clusters: n,
            limit: ATSP_MAX_NODES,
        });
    }
    if n == 0 {
        return Err(PlanError::InstanceTooSmall(0));
    }
    if n == 1 {
        return Ok((vec![0], T::zero()));
    }
    // best[set][v]: cheapest path from 0 through `set` (over nodes 1..n) ending at v.
    let rest = n - 1;
    let size = 1usize << rest;
    let mut best = vec![T::infinity(); size * rest];
    let mut parent = vec![usize::MAX; size * rest];
    for v in 0..rest {
        if let Some(c) = cost(0, v + 1) {
            best[(1 << v) * rest + v] = c;
        }
    }
    for set in 1..size {
        for v in 0..rest {
            if set & (1 << v) == 0 {
                continue;
            }
            let here = best[set * rest + v];
            if !here.is_finite() {
                continue;
            }
            for u in 0..rest {
                if set & (1 << u) != 0 {
                    continue;
                }
                if let Some(c) = cost(v + 1, u + 1) {
                    let idx = (set | 1 << u) * rest + u;
                    if here + c < best[idx] {
                        best[idx] = here + c;
                        parent[idx] = v;
                    }
                }
            }
        }
    }
    let full = size - 1;
    let (mut last, total) = (0..rest)
        .filter_map(|v| Some((v, best[full * rest + v] + cost(v + 1, 0)?)))
        .fold((usize::MAX, T::infinity()), |a, b| if b.1 < a.1 { b } else { a });
    if last == usize::MAX || !total.is_finite() {
        return Err(PlanError::InvalidTour("asymmetric TSP has no Hamiltonian cycle".into()));
    }
    let mut order = Vec::with_capacity(n);
    let mut set = full;
    while last != usize::MAX {
        order.push(last + 1);
        let p = parent[set * rest + last];
        set &= !(1 << last);
        last = p;
    }
    order.push(0);
    order.reverse();
    Ok((order, total))
}
