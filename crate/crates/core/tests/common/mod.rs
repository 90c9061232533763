#![allow(dead_code)]

use std::path::PathBuf;

use girder_inspect::geometry::{load_bridge, Point3};
use girder_inspect::gtsp::GtspInstance;
use girder_inspect::Bridge;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn bridge_11() -> Bridge {
    load_bridge(&std::fs::read_to_string(data_path("bridge_11.toml")).unwrap()).unwrap()
}

pub fn cluster_char(i: usize) -> char {
    (b'A' + i as u8) as char
}

/// Random instance: `k` clusters of two nodes in a 100 m cube, each
/// cluster pair kept with probability `density` (as a symmetric pair).
pub fn random_instance(seed: u64, k: usize, density: f64, open_path: bool) -> GtspInstance<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pt = || Point3::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0), rng.random_range(0.0..30.0));
    let groups: Vec<_> = (0..k)
        .map(|i| (cluster_char(i), [(2 * i + 1, pt()), (2 * i + 2, pt())]))
        .collect();
    let full = GtspInstance::from_clusters(&groups, 1.0, open_path).unwrap();
    let mut keep = vec![vec![false; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let on = rng.random_bool(density);
            keep[i][j] = on;
            keep[j][i] = on;
        }
    }
    full.restrict(|a, b| keep[(a as u8 - b'A') as usize][(b as u8 - b'A') as usize])
        .unwrap_or(full)
}

/// Plain Euclidean distance, computed without the library.
pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Exhaustive GTSP optimum over cluster orders and node choices, with arc
/// costs recomputed from node positions. Returns `None` when no feasible
/// tour exists.
pub fn brute_force_gtsp(inst: &GtspInstance<f64>) -> Option<f64> {
    let k = inst.cluster_count();
    let pos: Vec<[f64; 3]> = inst.nodes.iter().map(|n| n.position.to_array()).collect();
    let arc = |i: usize, j: usize| {
        inst.is_feasible(i, j)
            .then(|| dist(pos[i], pos[inst.partner(i)]) + dist(pos[inst.partner(i)], pos[j]))
    };
    let mut order: Vec<usize> = (0..k).collect();
    let mut best: Option<f64> = None;
    permute(&mut order, 0, &mut |ord| {
        'mask: for mask in 0..(1u32 << k) {
            let seq: Vec<usize> = ord
                .iter()
                .enumerate()
                .map(|(p, &c)| inst.clusters[c].nodes[((mask >> p) & 1) as usize])
                .collect();
            let mut total = 0.0;
            for w in seq.windows(2) {
                match arc(w[0], w[1]) {
                    Some(c) => total += c,
                    None => continue 'mask,
                }
            }
            if !inst.open_path {
                match arc(seq[k - 1], seq[0]) {
                    Some(c) => total += c,
                    None => continue 'mask,
                }
            }
            if best.is_none_or(|b| total < b) {
                best = Some(total);
            }
        }
    });
    best
}

pub fn permute(v: &mut Vec<usize>, i: usize, f: &mut dyn FnMut(&[usize])) {
    if i == v.len() {
        f(v);
        return;
    }
    for j in i..v.len() {
        v.swap(i, j);
        permute(v, i + 1, f);
        v.swap(i, j);
    }
}

/// Depth-first search over all Hamiltonian cycles from node 0, pruned by
/// the best cost found so far.
pub fn brute_force_atsp(n: usize, arc: &dyn Fn(usize, usize) -> Option<f64>) -> Option<f64> {
    fn go(
        n: usize,
        arc: &dyn Fn(usize, usize) -> Option<f64>,
        at: usize,
        used: &mut Vec<bool>,
        depth: usize,
        cost: f64,
        best: &mut Option<f64>,
    ) {
        if best.is_some_and(|b| cost >= b) {
            return;
        }
        if depth == n {
            if let Some(c) = arc(at, 0) {
                let total = cost + c;
                if best.is_none_or(|b| total < b) {
                    *best = Some(total);
                }
            }
            return;
        }
        for next in 1..n {
            if used[next] {
                continue;
            }
            if let Some(c) = arc(at, next) {
                used[next] = true;
                go(n, arc, next, used, depth + 1, cost + c, best);
                used[next] = false;
            }
        }
    }
    let mut used = vec![false; n];
    used[0] = true;
    let mut best = None;
    go(n, arc, 0, &mut used, 1, 0.0, &mut best);
    best
}
