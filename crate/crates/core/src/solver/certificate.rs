use rayon::prelude::*;

use super::strictly_less;
use crate::cost::{CostWeights, Evaluation, Evaluator};
use crate::error::Result;
use crate::flow::FlowDistribution;
use crate::network::Network;

/// Moving one user of `od` from option `from` to option `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub od: usize,
    pub from: usize,
    pub to: usize,
    pub zeta_before: f64,
    pub zeta_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub passed: bool,
    pub zeta: f64,
    pub moves_checked: usize,
    /// The move with the lowest resulting gap among those that lower it.
    pub witness: Option<Move>,
    /// Every move that lowers the gap, lowest resulting gap first.
    pub improving: Vec<Move>,
}

/// Checks that no single user can lower the system gap by moving from a used
/// non-optimal option to their OD's optimal option.
pub fn single_user_swap_certificate(
    network: &Network,
    q: &FlowDistribution,
    weights: CostWeights,
) -> Result<Certificate> {
    let ev = Evaluator::new(network, weights)?;
    let base = ev.evaluate(q)?;
    certify(&ev, q, &base)
}

pub(crate) fn certify(ev: &Evaluator<'_>, q: &FlowDistribution, base: &Evaluation) -> Result<Certificate> {
    let table = &base.table;
    let moves: Vec<(usize, usize, usize)> = (0..q.od_count())
        .flat_map(|k| {
            let best = table.best[k];
            let min = table.min_costs[k];
            q.od(k)
                .iter()
                .enumerate()
                .filter(move |&(i, &n)| n > 0 && i != best && table.option_costs[k][i] > min)
                .map(move |(i, _)| (k, i, best))
                .collect::<Vec<_>>()
        })
        .collect();

    let results: Vec<Result<Move>> = moves
        .par_iter()
        .map(|&(k, from, to)| {
            let mut moved = q.clone();
            moved.move_users(k, from, to, 1)?;
            Ok(Move {
                od: k,
                from,
                to,
                zeta_before: base.zeta,
                zeta_after: ev.gap(&moved)?,
            })
        })
        .collect();

    let mut improving = Vec::new();
    for m in results {
        let m = m?;
        if strictly_less(m.zeta_after, base.zeta) {
            improving.push(m);
        }
    }
    improving.sort_by(|a, b| a.zeta_after.total_cmp(&b.zeta_after));
    Ok(Certificate {
        passed: improving.is_empty(),
        zeta: base.zeta,
        moves_checked: moves.len(),
        witness: improving.first().copied(),
        improving,
    })
}
