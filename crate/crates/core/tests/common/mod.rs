//! Reference implementations used as independent oracles by the
//! integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Random graph on `k` links: each pair conflicts with probability `p`.
/// Returns 1-based pairs.
pub fn random_pairs<R: Rng>(rng: &mut R, k: usize, p: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for a in 1..=k {
        for b in a + 1..=k {
            if rng.random_bool(p) {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

/// Every subset of links with no conflicting pair, by filtering all `2^k`
/// subsets against the raw pair list.
pub fn brute_force_schedules(k: usize, pairs: &[(usize, usize)]) -> Vec<u32> {
    (0u32..1 << k)
        .filter(|&m| {
            pairs
                .iter()
                .all(|&(a, b)| m & (1 << (a - 1)) == 0 || m & (1 << (b - 1)) == 0)
        })
        .collect()
}

/// Stationary law of the link-activity process: link `k` switches on at rate
/// `on[k]` when no conflicting link is active, and off at rate `off[k]`.
/// Solved as a dense linear system.
pub fn activity_stationary(masks: &[u32], on: &[f64], off: &[f64]) -> Vec<f64> {
    let n = masks.len();
    let index = |m: u32| masks.iter().position(|&x| x == m);
    let mut q = DMatrix::<f64>::zeros(n, n);
    for (i, &m) in masks.iter().enumerate() {
        for k in 0..on.len() {
            let bit = 1u32 << k;
            let (target, rate) = if m & bit != 0 {
                (m & !bit, off[k])
            } else {
                (m | bit, on[k])
            };
            if rate == 0.0 {
                continue;
            }
            if let Some(j) = index(target) {
                q[(i, j)] += rate;
                q[(i, i)] -= rate;
            }
        }
    }
    // pi Q = 0 with the last balance equation replaced by normalization.
    let mut a = q.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = a.lu().solve(&rhs).expect("activity chain is irreducible on its support");
    pi.iter().copied().collect()
}

/// Throughput of link 1 on the 3-link line under standard CSMA with common
/// `alpha`, given `x_1 > 0`.
pub fn line3_phi1(alpha: f64, x2: u64, x3: u64) -> f64 {
    let a = alpha;
    if x2 == 0 {
        a / (1.0 + a)
    } else if x3 == 0 {
        a / (1.0 + 2.0 * a)
    } else {
        (a + a * a) / (1.0 + 3.0 * a + a * a)
    }
}

/// Throughput of link 2 on the 3-link line under standard CSMA, given `x_2 > 0`.
pub fn line3_phi2(alpha: f64, x1: u64, x3: u64) -> f64 {
    let a = alpha;
    match (x1 > 0, x3 > 0) {
        (false, false) => a / (1.0 + a),
        (true, true) => a / (1.0 + 3.0 * a + a * a),
        _ => a / (1.0 + 2.0 * a),
    }
}

/// Limit throughputs on the 3-link line as `alpha -> infinity`.
pub fn line3_limit(x: [u64; 3]) -> [f64; 3] {
    let b = x.map(|v| v > 0);
    match b {
        [true, _, true] => [1.0, 0.0, 1.0],
        [true, true, false] => [0.5, 0.5, 0.0],
        [false, true, true] => [0.0, 0.5, 0.5],
        [true, false, false] => [1.0, 0.0, 0.0],
        [false, false, true] => [0.0, 0.0, 1.0],
        [false, true, false] => [0.0, 1.0, 0.0],
        [false, false, false] => [0.0, 0.0, 0.0],
    }
}

/// Mean flow throughput of a single flow-aware link. The number of flows is
/// negative binomial with shape `1 + 1/alpha`, so `E[x] = (1 + 1/alpha) rho / (1 - rho)`.
pub fn single_link_gamma(rho: f64, alpha: f64) -> f64 {
    alpha * (1.0 - rho) / (1.0 + alpha)
}
