//! Coalition planning for the kernel explainer.
//!
//! When every interior coalition (neither empty nor full) fits in the
//! budget, the plan enumerates them all with their kernel weights and the
//! resulting attribution is exact. Otherwise coalitions are sampled in
//! complement pairs: pair counts per size stratum follow the kernel mass of
//! the strata (largest-remainder apportionment), and each sampled row takes
//! its stratum's mass divided by the number of rows drawn in that stratum.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Coalition, ShapError};

pub(crate) struct CoalitionPlan {
    pub coalitions: Vec<Coalition>,
    pub weights: Vec<f64>,
    pub exact: bool,
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Total kernel weight of all coalitions of size `s`, up to the common
/// normalization: `binom(m, s) * pi(m, s) = (m - 1) / (s * (m - s))`.
fn size_mass(m: usize, s: usize) -> f64 {
    (m - 1) as f64 / (s * (m - s)) as f64
}

pub(crate) fn plan_coalitions(
    m: usize,
    budget: usize,
    seed: u64,
) -> Result<CoalitionPlan, ShapError> {
    debug_assert!(m >= 1);
    let interior = if m < 63 { (1u64 << m) - 2 } else { u64::MAX };
    if interior <= budget as u64 {
        let mut coalitions = Vec::with_capacity(interior as usize);
        let mut weights = Vec::with_capacity(interior as usize);
        let full = (1u64 << m) - 1;
        for bits in 1..full {
            let c = Coalition::from_bits(bits, m);
            let s = c.size();
            weights.push((m - 1) as f64 / (binomial(m, s) * (s * (m - s)) as f64));
            coalitions.push(c);
        }
        return Ok(CoalitionPlan {
            coalitions,
            weights,
            exact: true,
        });
    }

    let min_budget = 2 * m + 2;
    if budget < min_budget {
        return Err(ShapError::BudgetTooSmall {
            budget,
            min: min_budget,
        });
    }

    // Pair strata: s paired with m - s, s = 1 ..= m / 2. For even m the
    // middle stratum pairs masks of the same size.
    let n_strata = m / 2;
    let npairs = budget / 2;
    let pair_mass: Vec<f64> = (1..=n_strata)
        .map(|s| {
            if s * 2 == m {
                size_mass(m, s)
            } else {
                size_mass(m, s) + size_mass(m, m - s)
            }
        })
        .collect();
    let total_mass: f64 = pair_mass.iter().sum();

    // Largest-remainder apportionment of pairs over strata.
    let mut counts = vec![0usize; n_strata];
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(n_strata);
    let mut assigned = 0usize;
    for (i, mass) in pair_mass.iter().enumerate() {
        let quota = npairs as f64 * mass / total_mass;
        counts[i] = quota.floor() as usize;
        assigned += counts[i];
        remainders.push((quota - quota.floor(), i));
    }
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut rest = npairs - assigned;
    for (_, i) in remainders.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[*i] += 1;
        rest -= 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..m).collect();
    let mut coalitions = Vec::with_capacity(npairs * 2);
    let mut rows_of_size = vec![0usize; m + 1];
    for (stratum, &count) in counts.iter().enumerate() {
        let s = stratum + 1;
        for _ in 0..count {
            for i in 0..s {
                let j = rng.gen_range(i..m);
                indices.swap(i, j);
            }
            let mut mask = vec![false; m];
            for &idx in &indices[..s] {
                mask[idx] = true;
            }
            let coalition = Coalition::new(mask);
            let complement = coalition.complement();
            rows_of_size[coalition.size()] += 1;
            rows_of_size[complement.size()] += 1;
            coalitions.push(coalition);
            coalitions.push(complement);
        }
    }

    let distinct: std::collections::BTreeSet<&Vec<bool>> =
        coalitions.iter().map(|c| &c.mask).collect();
    if distinct.len() < m {
        return Err(ShapError::SingularSystem);
    }

    let weights = coalitions
        .iter()
        .map(|c| size_mass(m, c.size()) / rows_of_size[c.size()] as f64)
        .collect();
    Ok(CoalitionPlan {
        coalitions,
        weights,
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_matches_known_values() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(10, 3), 120.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(3, 5), 0.0);
    }

    #[test]
    fn interior_coalitions_within_budget_enumerate_exactly() {
        let plan = plan_coalitions(4, 14, 0).unwrap();
        assert!(plan.exact);
        assert_eq!(plan.coalitions.len(), 14);
        // Every interior mask exactly once.
        let distinct: std::collections::BTreeSet<_> =
            plan.coalitions.iter().map(|c| c.mask.clone()).collect();
        assert_eq!(distinct.len(), 14);
        assert!(plan.coalitions.iter().all(|c| {
            let s = c.size();
            s >= 1 && s <= 3
        }));
    }

    #[test]
    fn enumeration_weights_are_the_kernel_weights() {
        let plan = plan_coalitions(4, 100, 0).unwrap();
        for (c, w) in plan.coalitions.iter().zip(&plan.weights) {
            let expected = match c.size() {
                1 | 3 => 0.25,
                2 => 0.125,
                _ => unreachable!(),
            };
            assert!((w - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_plans_pair_complements() {
        let plan = plan_coalitions(10, 40, 7).unwrap();
        assert!(!plan.exact);
        assert_eq!(plan.coalitions.len(), 40);
        for pair in plan.coalitions.chunks(2) {
            let joined: Vec<bool> = pair[0]
                .mask
                .iter()
                .zip(&pair[1].mask)
                .map(|(a, b)| a ^ b)
                .collect();
            assert!(joined.iter().all(|&v| v), "pair is not complementary");
        }
    }

    #[test]
    fn sampled_weights_preserve_stratum_masses() {
        let m = 10;
        let plan = plan_coalitions(m, 60, 3).unwrap();
        let mut by_size = vec![0.0; m + 1];
        for (c, w) in plan.coalitions.iter().zip(&plan.weights) {
            by_size[c.size()] += w;
        }
        for s in 1..m {
            if by_size[s] > 0.0 {
                assert!(
                    (by_size[s] - size_mass(m, s)).abs() < 1e-12,
                    "stratum {s} mass off: {}",
                    by_size[s]
                );
            }
        }
    }

    #[test]
    fn tight_budgets_are_rejected_when_sampling() {
        assert!(matches!(
            plan_coalitions(20, 30, 0),
            Err(ShapError::BudgetTooSmall { min: 42, .. })
        ));
    }

    #[test]
    fn plans_are_deterministic_in_the_seed() {
        let a = plan_coalitions(12, 64, 5).unwrap();
        let b = plan_coalitions(12, 64, 5).unwrap();
        assert_eq!(a.coalitions, b.coalitions);
        assert_eq!(a.weights, b.weights);
        let c = plan_coalitions(12, 64, 6).unwrap();
        assert_ne!(a.coalitions, c.coalitions);
    }
}
