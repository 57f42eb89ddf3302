use serde::{Deserialize, Serialize};

use crate::cost::CostTable;
use crate::error::{Error, Result};
use crate::flow::FlowDistribution;

/// How fractional shifts become whole users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundingPolicy {
    /// Floor every shift, then move the rounded sum of the remainders one
    /// user at a time from the options with the largest remainders.
    #[default]
    LargestRemainder,
    /// Floor every shift and drop the remainders.
    Floor,
}

impl std::str::FromStr for RoundingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "largest-remainder" => Ok(Self::LargestRemainder),
            "floor" => Ok(Self::Floor),
            _ => Err(Error::Config(format!("unknown rounding policy {s}"))),
        }
    }
}

/// `(mean - min) / mean` over all options of an OD.
pub fn od_relative_gap(costs: &[f64]) -> Result<f64> {
    if costs.is_empty() {
        return Err(Error::Internal("OD without options".into()));
    }
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    if costs.iter().all(|&c| c == min) {
        return Ok(0.0);
    }
    let mean = costs.iter().sum::<f64>() / costs.len() as f64;
    if mean <= 0.0 {
        return Err(Error::DegenerateCost {
            od: String::new(),
            mean,
        });
    }
    Ok((mean - min) / mean)
}

/// Each non-optimal option's share of the summed non-optimal cost. Optimal
/// options (cost equal to the minimum) get zero.
pub fn option_ratios(costs: &[f64], best: usize) -> Vec<f64> {
    ratios(costs, best, |_| true)
}

/// Like [`option_ratios`] but only options holding users take part.
pub fn option_ratios_over(costs: &[f64], best: usize, counts: &[u64]) -> Vec<f64> {
    ratios(costs, best, |i| counts[i] > 0)
}

fn ratios(costs: &[f64], best: usize, include: impl Fn(usize) -> bool) -> Vec<f64> {
    let min = costs[best];
    let pick = |i: usize| i != best && costs[i] > min && include(i);
    let total: f64 = (0..costs.len()).filter(|&i| pick(i)).map(|i| costs[i]).sum();
    (0..costs.len())
        .map(|i| if pick(i) && total > 0.0 { costs[i] / total } else { 0.0 })
        .collect()
}

/// All demand of each OD on its current best option.
pub fn all_or_nothing(q: &FlowDistribution, table: &CostTable) -> FlowDistribution {
    let rows = q
        .counts()
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let mut v = vec![0; row.len()];
            v[table.best[k]] = row.iter().sum();
            v
        })
        .collect();
    FlowDistribution::from_rows(rows)
}

/// Step sizes `sigma = theta * partial * phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepComponents {
    pub theta: f64,
    pub partial: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
}

impl StepComponents {
    pub fn new(theta: f64, partial: Vec<f64>, phi: Vec<Vec<f64>>) -> Self {
        let sigma = partial
            .iter()
            .zip(&phi)
            .map(|(&p, row)| row.iter().map(|&f| (theta * p * f).clamp(0.0, 1.0)).collect())
            .collect();
        Self {
            theta,
            partial,
            phi,
            sigma,
        }
    }
}

/// Moves `sigma[i] * q[i]` users from every option `i != best` to `best`.
pub fn shift_od(q: &[u64], best: usize, sigma: &[f64], policy: RoundingPolicy) -> Vec<u64> {
    let mut out = q.to_vec();
    let mut remainders: Vec<(usize, f64)> = Vec::new();
    let mut moved_total = 0;
    let mut remainder_sum = 0.0;
    for i in 0..q.len() {
        if i == best || q[i] == 0 || sigma[i] <= 0.0 {
            continue;
        }
        let s = sigma[i].min(1.0) * q[i] as f64;
        let whole = ((s + 1e-9).floor() as u64).min(q[i]);
        out[i] -= whole;
        moved_total += whole;
        let frac = (s - whole as f64).max(0.0);
        if frac > 0.0 && out[i] > 0 {
            remainders.push((i, frac));
            remainder_sum += frac;
        }
    }
    if policy == RoundingPolicy::LargestRemainder {
        let extra = (remainder_sum + 0.5 + 1e-9).floor() as usize;
        remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(i, _) in remainders.iter().take(extra) {
            out[i] -= 1;
            moved_total += 1;
        }
    }
    out[best] += moved_total;
    out
}

/// Applies [`shift_od`] to every OD. The result keeps every OD's demand.
pub fn shift_flows(
    q: &FlowDistribution,
    best: &[usize],
    sigma: &[Vec<f64>],
    policy: RoundingPolicy,
) -> Result<FlowDistribution> {
    let rows: Vec<Vec<u64>> = q
        .counts()
        .iter()
        .enumerate()
        .map(|(k, row)| shift_od(row, best[k], &sigma[k], policy))
        .collect();
    for (a, b) in q.counts().iter().zip(&rows) {
        if a.iter().sum::<u64>() != b.iter().sum::<u64>() {
            return Err(Error::Internal("flow shift broke conservation".into()));
        }
    }
    Ok(FlowDistribution::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 0.005
    }

    #[test]
    fn worked_example_partials() {
        assert!(close(od_relative_gap(&[10.0, 20.0, 15.0]).unwrap(), 0.33));
        assert!(close(od_relative_gap(&[50.0, 60.0, 40.0]).unwrap(), 0.20));
        assert_eq!(od_relative_gap(&[7.0, 7.0]).unwrap(), 0.0);
        assert_eq!(od_relative_gap(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn worked_example_ratios() {
        let phi = option_ratios(&[10.0, 20.0, 15.0], 0);
        assert!(close(phi[1], 0.57) && close(phi[2], 0.43));
        assert_eq!(phi[0], 0.0);
        let phi = option_ratios(&[50.0, 60.0, 40.0], 2);
        assert!(close(phi[0], 0.45) && close(phi[1], 0.55));
        assert_eq!(option_ratios(&[3.0, 9.0], 0), vec![0.0, 1.0]);
    }

    #[test]
    fn ratios_over_used_options() {
        let phi = option_ratios_over(&[10.0, 20.0, 15.0], 0, &[5, 0, 5]);
        assert_eq!(phi, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn optimal_ties_are_not_shifted() {
        assert_eq!(option_ratios(&[5.0, 5.0, 10.0], 0), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn hand_shift() {
        let s = StepComponents::new(0.5, vec![1.0], vec![vec![0.0, 0.6, 0.4]]);
        assert_eq!(
            shift_od(&[100, 60, 40], 0, &s.sigma[0], RoundingPolicy::LargestRemainder),
            vec![126, 42, 32]
        );
    }

    #[test]
    fn zero_and_full_steps() {
        let q = [10, 7, 3, 0];
        assert_eq!(shift_od(&q, 1, &[0.0; 4], RoundingPolicy::LargestRemainder), q.to_vec());
        assert_eq!(
            shift_od(&q, 1, &[1.0, 0.0, 1.0, 1.0], RoundingPolicy::LargestRemainder),
            vec![0, 20, 0, 0]
        );
    }

    #[test]
    fn remainders_go_to_largest_fractions() {
        // 0.3 * 5 = 1.5, 0.3 * 3 = 0.9; floors move 1 and 0, remainders 0.5
        // and 0.9 round to 1 more user taken from the second option.
        let out = shift_od(&[0, 5, 3], 0, &[0.0, 0.3, 0.3], RoundingPolicy::LargestRemainder);
        assert_eq!(out, vec![2, 4, 3 - 1]);
        let out = shift_od(&[0, 5, 3], 0, &[0.0, 0.3, 0.3], RoundingPolicy::Floor);
        assert_eq!(out, vec![1, 4, 3]);
    }

    proptest! {
        #[test]
        fn shift_conserves(
            q in prop::collection::vec(0u64..500, 1..12),
            sig in prop::collection::vec(0.0f64..=1.0, 12),
            best_seed in 0usize..100,
            floor in any::<bool>(),
        ) {
            let best = best_seed % q.len();
            let policy = if floor { RoundingPolicy::Floor } else { RoundingPolicy::LargestRemainder };
            let out = shift_od(&q, best, &sig[..q.len()], policy);
            prop_assert_eq!(out.iter().sum::<u64>(), q.iter().sum::<u64>());
            for i in 0..q.len() {
                if i != best {
                    prop_assert!(out[i] <= q[i]);
                    let exact = sig[i] * q[i] as f64;
                    prop_assert!(((q[i] - out[i]) as f64 - exact).abs() < 1.0 + 1e-6);
                }
            }
            prop_assert!(out[best] >= q[best]);
        }

        #[test]
        fn sigma_is_product(theta in 0.0f64..=1.0, costs in prop::collection::vec(1.0f64..1e5, 2..8)) {
            let best = costs.iter().enumerate().fold(0, |b, (i, &c)| if c < costs[b] { i } else { b });
            let p = od_relative_gap(&costs).unwrap();
            let phi = option_ratios(&costs, best);
            let s = StepComponents::new(theta, vec![p], vec![phi.clone()]);
            prop_assert_eq!(s.sigma[0][best], 0.0);
            for i in 0..costs.len() {
                prop_assert_eq!(s.sigma[0][i], theta * p * phi[i]);
            }
            if phi.iter().any(|&f| f > 0.0) {
                prop_assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
