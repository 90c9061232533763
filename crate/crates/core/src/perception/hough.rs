use serde::{Deserialize, Serialize};

use super::LineEstimate;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoughParams {
    pub theta_bins: usize,
    pub rho_bin_width: f64,
    pub inlier_distance: f64,
    pub min_inliers: usize,
    pub nms_theta_window: usize,
    pub nms_rho_window: usize,
    /// Largest gap between neighbouring inliers along a line; wider gaps
    /// split the line into separate segments.
    pub max_gap: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        HoughParams {
            theta_bins: 180,
            rho_bin_width: 0.05,
            inlier_distance: 0.10,
            min_inliers: 8,
            nms_theta_window: 5,
            nms_rho_window: 5,
            max_gap: 2.0,
        }
    }
}

impl HoughParams {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.theta_bins > 0
            && self.rho_bin_width > 0.0
            && self.inlier_distance > 0.0
            && self.min_inliers > 0
            && self.nms_theta_window > 0
            && self.nms_rho_window > 0
            && self.max_gap > 0.0;
        if ok {
            Ok(())
        } else {
            Err("hough parameters must all be positive".into())
        }
    }

    /// Width of one theta bin in degrees.
    pub fn theta_step_deg(&self) -> f64 {
        180.0 / self.theta_bins as f64
    }
}

/// Unit normal of a line with inclination `alpha` (radians).
fn normal<T: Scalar>(alpha: T) -> [T; 2] {
    let (s, c) = alpha.sin_cos();
    [-s, c]
}

struct Accumulator {
    theta_bins: usize,
    rho_bins: usize,
    votes: Vec<u32>,
}

impl Accumulator {
    fn at(&self, k: usize, r: usize) -> u32 {
        self.votes[k * self.rho_bins + r]
    }

    /// Neighbour in theta, wrapping 180° onto 0° with the rho sign flipped.
    fn neighbour(&self, k: usize, r: usize, dk: isize, dr: isize) -> Option<(usize, usize)> {
        let n = self.theta_bins as isize;
        let mut kk = k as isize + dk;
        let mut rr = r as isize + dr;
        if kk < 0 || kk >= n {
            kk = kk.rem_euclid(n);
            rr = self.rho_bins as isize - 1 - rr;
        }
        (rr >= 0 && rr < self.rho_bins as isize).then_some((kk as usize, rr as usize))
    }

    /// Local maxima at or above `min_votes`, strongest first. Plateaus keep
    /// their first cell in (theta, rho) index order.
    fn peaks(&self, p: &HoughParams) -> Vec<(u32, usize, usize)> {
        let (wt, wr) = (p.nms_theta_window as isize, p.nms_rho_window as isize);
        let mut out = Vec::new();
        for k in 0..self.theta_bins {
            for r in 0..self.rho_bins {
                let v = self.at(k, r);
                if (v as usize) < p.min_inliers {
                    continue;
                }
                let mut is_peak = true;
                'scan: for dk in -wt..=wt {
                    for dr in -wr..=wr {
                        if dk == 0 && dr == 0 {
                            continue;
                        }
                        let Some((kk, rr)) = self.neighbour(k, r, dk, dr) else {
                            continue;
                        };
                        let w = self.at(kk, rr);
                        let earlier = (kk, rr) < (k, r);
                        if w > v || (w == v && earlier) {
                            is_peak = false;
                            break 'scan;
                        }
                    }
                }
                if is_peak {
                    out.push((v, k, r));
                }
            }
        }
        out.sort_by(|a, b| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        out
    }
}

/// Total least squares line through `pts`, as (inclination, rho).
fn fit_line<T: Scalar>(pts: &[[T; 2]]) -> (T, T) {
    let n = T::lit(pts.len() as f64);
    let cx = pts.iter().map(|p| p[0]).sum::<T>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<T>() / n;
    let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
    for p in pts {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let alpha = wrap_inclination(T::lit(0.5) * (T::lit(2.0) * sxy).atan2(sxx - syy));
    let nrm = normal(alpha);
    (alpha, cx * nrm[0] + cy * nrm[1])
}

fn wrap_inclination<T: Scalar>(a: T) -> T {
    let pi = T::lit(std::f64::consts::PI);
    let mut a = a % pi;
    if a < T::zero() {
        a += pi;
    }
    if a >= pi {
        a -= pi;
    }
    a
}

fn build_estimate<T: Scalar>(alpha: T, rho: T, inliers: &[[T; 2]]) -> LineEstimate<T> {
    let nrm = normal(alpha);
    let dir = [nrm[1], -nrm[0]];
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    for p in inliers {
        let t = p[0] * dir[0] + p[1] * dir[1];
        lo = lo.min(t);
        hi = hi.max(t);
    }
    let foot = |t: T| [nrm[0] * rho + dir[0] * t, nrm[1] * rho + dir[1] * t];
    LineEstimate {
        theta: alpha.to_degrees(),
        rho,
        extent: hi - lo,
        inlier_count: inliers.len(),
        endpoints: [foot(lo), foot(hi)],
    }
}

/// Splits inliers into runs along the line direction wherever neighbours
/// are more than `max_gap` apart.
fn split_runs<T: Scalar>(idx: &[usize], points: &[[T; 2]], alpha: T, max_gap: T) -> Vec<Vec<usize>> {
    let (s, c) = alpha.sin_cos();
    let mut order: Vec<(T, usize)> = idx.iter().map(|&i| (points[i][0] * c + points[i][1] * s, i)).collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    let mut runs: Vec<Vec<usize>> = Vec::new();
    let mut prev: Option<T> = None;
    for (t, i) in order {
        match (prev, runs.last_mut()) {
            (Some(q), Some(run)) if t - q <= max_gap => run.push(i),
            _ => runs.push(vec![i]),
        }
        prev = Some(t);
    }
    runs
}

/// Extracts lines by accumulator voting, non-maximum suppression and a
/// total least squares refit on each peak's inliers.
///
/// Each point supports at most one returned line; peaks are claimed
/// strongest first and split at gaps wider than `max_gap`. Output is sorted
/// by decreasing inlier count.
pub fn hough_lines<T: Scalar>(points: &[[T; 2]], p: &HoughParams) -> Vec<LineEstimate<T>> {
    if points.len() < p.min_inliers {
        return Vec::new();
    }
    let max_r = points
        .iter()
        .map(|q| (q[0] * q[0] + q[1] * q[1]).sqrt())
        .fold(T::zero(), T::max)
        .as_f64();
    let w = p.rho_bin_width;
    let half = (max_r / w).ceil() as usize + 1;
    let rho_bins = 2 * half + 1;
    let mut acc = Accumulator {
        theta_bins: p.theta_bins,
        rho_bins,
        votes: vec![0; p.theta_bins * rho_bins],
    };
    let trig: Vec<(f64, f64)> = (0..p.theta_bins)
        .map(|k| (k as f64 * std::f64::consts::PI / p.theta_bins as f64).sin_cos())
        .collect();
    let rho_index = |rho: f64| ((rho / w).round() as isize + half as isize) as usize;
    for q in points {
        let (x, y) = (q[0].as_f64(), q[1].as_f64());
        for (k, &(s, c)) in trig.iter().enumerate() {
            acc.votes[k * rho_bins + rho_index(-x * s + y * c)] += 1;
        }
    }

    let tol = T::lit(p.inlier_distance);
    let mut claimed = vec![false; points.len()];
    let mut lines = Vec::new();
    let gather = |alpha: T, rho: T, claimed: &[bool]| -> Vec<usize> {
        let nrm = normal(alpha);
        (0..points.len())
            .filter(|&i| !claimed[i] && (points[i][0] * nrm[0] + points[i][1] * nrm[1] - rho).abs() <= tol)
            .collect()
    };
    for (_, k, r) in acc.peaks(p) {
        let alpha = T::lit(k as f64 * std::f64::consts::PI / p.theta_bins as f64);
        let rho = T::lit((r as f64 - half as f64) * w);
        let first = gather(alpha, rho, &claimed);
        if first.len() < p.min_inliers {
            continue;
        }
        let pts: Vec<[T; 2]> = first.iter().map(|&i| points[i]).collect();
        let (alpha, rho) = fit_line(&pts);
        let idx = gather(alpha, rho, &claimed);
        if idx.len() < p.min_inliers {
            continue;
        }
        for run in split_runs(&idx, points, alpha, T::lit(p.max_gap)) {
            if run.len() < p.min_inliers {
                continue;
            }
            for &i in &run {
                claimed[i] = true;
            }
            let pts: Vec<[T; 2]> = run.iter().map(|&i| points[i]).collect();
            let (alpha, rho) = fit_line(&pts);
            lines.push(build_estimate(alpha, rho, &pts));
        }
    }
    lines.sort_by_key(|l| std::cmp::Reverse(l.inlier_count));
    lines
}
