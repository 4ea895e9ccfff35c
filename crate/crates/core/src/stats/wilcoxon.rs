use statrs::distribution::{ContinuousCDF, Normal};

use super::StatsError;

/// Largest per-sample size for which the exact permutation distribution is
/// used.
pub const DEFAULT_EXACT_MAX_N: usize = 10;

/// Midranks of the pooled sample, doubled so they stay integral.
fn doubled_ranks(pooled: &[f64]) -> (Vec<u64>, f64) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1, doubled midrank = i + j + 2
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    (ranks, tie_term)
}

/// Two-sided Wilcoxon rank-sum p-value.
///
/// When both samples have at most `exact_max_n` values the p-value is the
/// share of all equally likely rank assignments whose rank sum is at least
/// as far from its expectation as the observed one; otherwise the normal
/// approximation with tie and continuity corrections is used.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64], exact_max_n: usize) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_term) = doubled_ranks(&pooled);
    let n1 = a.len();
    let n = pooled.len();
    if tie_term == ((n * n * n - n) as f64) {
        return Ok(1.0);
    }
    let observed: u64 = ranks[..n1].iter().sum();
    // Doubled expectation n1 (n + 1).
    let expected = (n1 * (n + 1)) as f64;
    let distance = (observed as f64 - expected).abs();

    if a.len() <= exact_max_n && b.len() <= exact_max_n {
        let max_sum: usize = ranks.iter().sum::<u64>() as usize;
        // ways[k][s]: subsets of size k with doubled rank sum s
        let mut ways = vec![vec![0f64; max_sum + 1]; n1 + 1];
        ways[0][0] = 1.0;
        for &r in &ranks {
            let r = r as usize;
            for k in (1..=n1).rev() {
                for s in (r..=max_sum).rev() {
                    ways[k][s] += ways[k - 1][s - r];
                }
            }
        }
        let total: f64 = ways[n1].iter().sum();
        let extreme: f64 = ways[n1]
            .iter()
            .enumerate()
            .filter(|(s, _)| (*s as f64 - expected).abs() >= distance - 1e-9)
            .map(|(_, w)| w)
            .sum();
        return Ok((extreme / total).min(1.0));
    }

    let (n1f, n2f, nf) = (n1 as f64, b.len() as f64, n as f64);
    let var = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    let z = ((distance / 2.0 - 0.5).max(0.0)) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok((2.0 * (1.0 - normal.cdf(z))).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutation_oracle(a: &[f64], b: &[f64]) -> f64 {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let rank = |v: f64| {
            let below = pooled.iter().filter(|&&x| x < v).count() as f64;
            let equal = pooled.iter().filter(|&&x| x == v).count() as f64;
            below + (equal + 1.0) / 2.0
        };
        let ranks: Vec<f64> = pooled.iter().map(|&v| rank(v)).collect();
        let n = pooled.len() as f64;
        let e = a.len() as f64 * (n + 1.0) / 2.0;
        let obs = (ranks[..a.len()].iter().sum::<f64>() - e).abs();
        let mut hits = 0usize;
        let mut total = 0usize;
        for combo in (0..pooled.len()).combinations(a.len()) {
            total += 1;
            let w: f64 = combo.iter().map(|&i| ranks[i]).sum();
            if (w - e).abs() >= obs - 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / total as f64
    }

    #[test]
    fn identical_samples() {
        assert_eq!(wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 10).unwrap(), 1.0);
        assert_eq!(wilcoxon_rank_sum(&[4.0; 3], &[4.0; 12], 10).unwrap(), 1.0);
    }

    #[test]
    fn fully_separated_triples() {
        let p = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[101.0, 102.0, 103.0], 10).unwrap();
        assert!((p - 0.1).abs() < 1e-12);
    }

    #[test]
    fn shifted_normals_are_significant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        let a: Vec<f64> = (0..60).map(|_| rng.sample(normal)).collect();
        let b: Vec<f64> = (0..60).map(|_| rng.sample(normal) + 1.5).collect();
        let p = wilcoxon_rank_sum(&a, &b, 10).unwrap();
        assert!(p < 0.01, "p = {p}");
        // Approximation agrees with the exact test in direction at n = 10.
        let pe = wilcoxon_rank_sum(&a[..10], &b[..10], 10).unwrap();
        let pa = wilcoxon_rank_sum(&a[..10], &b[..10], 0).unwrap();
        assert!((pe - pa).abs() < 0.02, "{pe} vs {pa}");
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(wilcoxon_rank_sum(&[], &[1.0], 10), Err(StatsError::Empty));
    }

    proptest! {
        #[test]
        fn exact_matches_permutations(
            a in prop::collection::vec(0u8..6, 1..=7),
            b in prop::collection::vec(0u8..6, 1..=7),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let p = wilcoxon_rank_sum(&a, &b, 10).unwrap();
            let pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
            if pooled.iter().all(|&v| v == pooled[0]) {
                prop_assert_eq!(p, 1.0);
            } else {
                prop_assert!((p - permutation_oracle(&a, &b)).abs() < 1e-12);
            }
            prop_assert!((p - wilcoxon_rank_sum(&b, &a, 10).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn approximation_is_symmetric(
            a in prop::collection::vec(0.0f64..1.0, 11..40),
            b in prop::collection::vec(0.0f64..1.0, 11..40),
        ) {
            let p = wilcoxon_rank_sum(&a, &b, 10).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!((p - wilcoxon_rank_sum(&b, &a, 10).unwrap()).abs() < 1e-12);
        }
    }
}
