//! Matched wrap-around distance and resolution.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Largest set size handled by exhaustive permutation search.
pub const BRUTE_FORCE_MAX: usize = 8;

/// Circular distance on `[0, 1)`.
pub fn wrap_distance(a: f64, b: f64) -> f64 {
    let d = libm::fabs(a - b);
    let d = d - libm::floor(d);
    d.min(1.0 - d)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchReport {
    pub md: f64,
    /// `permutation[k]` is the index of the estimate matched to truth `k`.
    pub permutation: Vec<usize>,
    /// Wrap-around error of each true frequency under the permutation.
    pub per_freq_errors: Vec<f64>,
}

fn cost_matrix(est: &[f64], truth: &[f64]) -> Vec<Vec<f64>> {
    truth.iter().map(|&t| est.iter().map(|&e| wrap_distance(e, t)).collect()).collect()
}

fn report(cost: &[Vec<f64>], permutation: Vec<usize>) -> MatchReport {
    let per_freq_errors: Vec<f64> = permutation.iter().enumerate().map(|(k, &j)| cost[k][j]).collect();
    let md = per_freq_errors.iter().copied().fold(0.0, f64::max);
    MatchReport {
        md,
        permutation,
        per_freq_errors,
    }
}

/// `min_ψ max_k` wrap-around error. Ties resolve to the lexicographically
/// smallest permutation.
pub fn matched_distance(est: &[f64], truth: &[f64]) -> Result<MatchReport> {
    if est.len() != truth.len() {
        return Err(Error::CardinalityMismatch(est.len(), truth.len()));
    }
    if truth.len() <= BRUTE_FORCE_MAX {
        matched_distance_brute_force(est, truth)
    } else {
        matched_distance_bottleneck(est, truth)
    }
}

/// Exhaustive search in lexicographic order, keeping the first optimum.
pub fn matched_distance_brute_force(est: &[f64], truth: &[f64]) -> Result<MatchReport> {
    if est.len() != truth.len() {
        return Err(Error::CardinalityMismatch(est.len(), truth.len()));
    }
    let k = truth.len();
    let cost = cost_matrix(est, truth);
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_val = f64::INFINITY;
    loop {
        let val = perm.iter().enumerate().map(|(t, &e)| cost[t][e]).fold(0.0, f64::max);
        if val < best_val {
            best_val = val;
            best.clone_from(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(report(&cost, best))
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Exact bottleneck assignment: binary search over the sorted distinct costs
/// with a bipartite perfect-matching test, then the lexicographically
/// smallest permutation within the optimal threshold.
pub fn matched_distance_bottleneck(est: &[f64], truth: &[f64]) -> Result<MatchReport> {
    if est.len() != truth.len() {
        return Err(Error::CardinalityMismatch(est.len(), truth.len()));
    }
    let k = truth.len();
    let cost = cost_matrix(est, truth);
    if k == 0 {
        return Ok(report(&cost, Vec::new()));
    }
    let mut values: Vec<f64> = cost.iter().flatten().copied().collect();
    values.sort_by(|a, b| a.total_cmp(b));
    values.dedup();
    let (mut lo, mut hi) = (0, values.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(&cost, values[mid], &[]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let threshold = values[lo];
    let mut fixed: Vec<usize> = Vec::with_capacity(k);
    for t in 0..k {
        let mut chosen = None;
        for e in 0..k {
            if fixed.contains(&e) || cost[t][e] > threshold {
                continue;
            }
            fixed.push(e);
            if has_perfect_matching(&cost, threshold, &fixed) {
                chosen = Some(e);
                break;
            }
            fixed.pop();
        }
        if chosen.is_none() {
            return Err(Error::CardinalityMismatch(est.len(), truth.len()));
        }
    }
    Ok(report(&cost, fixed))
}

/// Kuhn's augmenting-path matching on edges `cost ≤ threshold`, with truth
/// rows `0..prefix.len()` already assigned to `prefix`.
fn has_perfect_matching(cost: &[Vec<f64>], threshold: f64, prefix: &[usize]) -> bool {
    let k = cost.len();
    let mut owner: Vec<Option<usize>> = vec![None; k];
    for (t, &e) in prefix.iter().enumerate() {
        if cost[t][e] > threshold {
            return false;
        }
        owner[e] = Some(t);
    }
    for t in prefix.len()..k {
        let mut seen = vec![false; k];
        if !augment(cost, threshold, t, prefix.len(), &mut owner, &mut seen) {
            return false;
        }
    }
    true
}

fn augment(cost: &[Vec<f64>], threshold: f64, t: usize, frozen: usize, owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for e in 0..cost.len() {
        if seen[e] || cost[t][e] > threshold {
            continue;
        }
        seen[e] = true;
        match owner[e] {
            Some(o) if o < frozen => continue,
            Some(o) => {
                if augment(cost, threshold, o, frozen, owner, seen) {
                    owner[e] = Some(t);
                    return true;
                }
            }
            None => {
                owner[e] = Some(t);
                return true;
            }
        }
    }
    false
}

/// Smallest pairwise wrap-around distance.
pub fn min_separation(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(Error::SingleFrequency);
    }
    let mut best = f64::INFINITY;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            best = best.min(wrap_distance(t[i], t[j]));
        }
    }
    Ok(best)
}

/// True when the matched distance is strictly below half the minimum
/// separation of `truth`.
pub fn resolution_achieved(est: &[f64], truth: &[f64]) -> Result<bool> {
    let delta = min_separation(truth)?;
    Ok(matched_distance(est, truth)?.md < delta / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::TestRng;

    #[test]
    fn identical_sets_any_order() {
        let r = matched_distance(&[0.8, 0.1, 0.5], &[0.1, 0.5, 0.8]).unwrap();
        assert_eq!(r.md, 0.0);
        assert_eq!(r.permutation, vec![1, 2, 0]);
    }

    #[test]
    fn wrap_example() {
        let r = matched_distance(&[0.02], &[0.95]).unwrap();
        assert!((r.md - 0.07).abs() < 1e-12);
    }

    #[test]
    fn three_tone_example() {
        let r = matched_distance(&[0.12, 0.49, 0.81], &[0.1, 0.5, 0.8]).unwrap();
        assert!((r.md - 0.02).abs() < 1e-12);
    }

    #[test]
    fn cardinality_checked() {
        assert!(matches!(matched_distance(&[0.1], &[0.1, 0.2]), Err(Error::CardinalityMismatch(1, 2))));
    }

    #[test]
    fn separations() {
        assert!((min_separation(&[0.1, 0.5, 0.8]).unwrap() - 0.3).abs() < 1e-12);
        assert!((min_separation(&[0.0, 0.9]).unwrap() - 0.1).abs() < 1e-12);
        assert!((min_separation(&[0.1, 0.77, 0.8]).unwrap() - 0.03).abs() < 1e-12);
        assert!(matches!(min_separation(&[0.4]), Err(Error::SingleFrequency)));
    }

    #[test]
    fn resolution_boundary_is_strict() {
        assert!(resolution_achieved(&[0.1, 0.5, 0.8], &[0.1, 0.5, 0.8]).unwrap());
        // Δ = 0.25, md = 0.125 exactly
        assert!(!resolution_achieved(&[0.125, 0.25], &[0.0, 0.25]).unwrap());
    }

    #[test]
    fn bottleneck_agrees_with_brute_force() {
        let mut rng = TestRng::new(4);
        for _ in 0..300 {
            let k = 1 + (rng.uniform() * 7.0) as usize;
            let truth: Vec<f64> = (0..k).map(|_| rng.uniform()).collect();
            let est: Vec<f64> = (0..k).map(|_| rng.uniform()).collect();
            let a = matched_distance_brute_force(&est, &truth).unwrap();
            let b = matched_distance_bottleneck(&est, &truth).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bottleneck_ties_pick_smallest_permutation() {
        // every assignment costs the same
        let truth = [0.0, 0.5];
        let est = [0.25, 0.75];
        let r = matched_distance_bottleneck(&est, &truth).unwrap();
        assert_eq!(r.permutation, vec![0, 1]);
        assert_eq!(r, matched_distance_brute_force(&est, &truth).unwrap());
    }
}
