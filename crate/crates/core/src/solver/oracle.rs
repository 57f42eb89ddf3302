use rayon::prelude::*;

use crate::cost::{CostWeights, Evaluator};
use crate::error::{Error, Result};
use crate::flow::FlowDistribution;
use crate::network::Network;

/// Largest number of distributions the oracle will enumerate.
pub const ORACLE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub min_zeta: f64,
    /// Every distribution attaining the minimum, in enumeration order.
    pub minimizers: Vec<FlowDistribution>,
    pub enumerated: usize,
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.checked_mul(n - i)? / (i + 1);
    }
    Some(r)
}

/// Number of integer distributions of the network's demand over its options,
/// saturating at `u128::MAX`.
pub fn distribution_count(network: &Network) -> u128 {
    let mut total: u128 = 1;
    for (k, od) in network.ods.iter().enumerate() {
        let n = network.options(k).len() as u128;
        let c = binomial(od.demand as u128 + n - 1, n - 1).unwrap_or(u128::MAX);
        total = total.saturating_mul(c);
    }
    total
}

fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    fn rec(left: u64, parts: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in (0..=left).rev() {
            cur.push(x);
            rec(left - x, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Exhaustively evaluates every distribution and returns the minimum gap.
pub fn brute_force_oracle(network: &Network, weights: CostWeights) -> Result<OracleResult> {
    let count = distribution_count(network);
    if count > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            count,
            limit: ORACLE_LIMIT,
        });
    }
    let ev = Evaluator::new(network, weights)?;
    let per_od: Vec<Vec<Vec<u64>>> = network
        .ods
        .iter()
        .enumerate()
        .map(|(k, od)| compositions(od.demand, network.options(k).len()))
        .collect();
    let count = count as usize;

    let decode = |mut idx: usize| {
        let rows = per_od
            .iter()
            .map(|c| {
                let r = c[idx % c.len()].clone();
                idx /= c.len();
                r
            })
            .collect();
        FlowDistribution::from_rows(rows)
    };

    let gaps: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| ev.gap(&decode(i)))
        .collect::<Result<_>>()?;
    let min_zeta = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * min_zeta.abs().max(1.0);
    let minimizers = gaps
        .iter()
        .enumerate()
        .filter(|(_, &z)| z <= min_zeta + tol)
        .map(|(i, _)| decode(i))
        .collect();
    Ok(OracleResult {
        min_zeta,
        minimizers,
        enumerated: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(2, 2).len(), 3);
        assert_eq!(compositions(6, 3).len(), binomial(8, 2).unwrap() as usize);
        assert_eq!(compositions(0, 4), vec![vec![0; 4]]);
        for c in compositions(5, 3) {
            assert_eq!(c.iter().sum::<u64>(), 5);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(40, 20), Some(137_846_528_820));
        assert_eq!(binomial(7, 0), Some(1));
    }
}
