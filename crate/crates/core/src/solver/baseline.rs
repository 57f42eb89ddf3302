//! Reconstructed baselines.
//!
//! Both move users from each option toward the OD's current best option,
//! integerized with the configured rounding policy. MSA moves the fraction
//! `1 / (n + 1)` of every other option on day `n`, starting at `n = 1`. The
//! day-to-day learner moves `lambda * (C - C*) / C` of each costlier option.

use super::certificate::certify;
use super::step::shift_flows;
use super::{Recorder, SolverConfig, SolverKind, SolverReport, Stage, Termination};
use crate::cost::{CostTable, CostWeights, Evaluator};
use crate::error::Result;
use crate::flow::FlowDistribution;
use crate::network::Network;

pub fn msa(
    network: &Network,
    q0: &FlowDistribution,
    weights: CostWeights,
    config: &SolverConfig,
) -> Result<SolverReport> {
    run(network, q0, weights, config, SolverKind::Msa, |n, q, table| {
        let step = 1.0 / (n as f64 + 1.0);
        sigma_where(q, table, |k, i| if i != table.best[k] { step } else { 0.0 })
    })
}

pub fn dtd_learning(
    network: &Network,
    q0: &FlowDistribution,
    weights: CostWeights,
    config: &SolverConfig,
) -> Result<SolverReport> {
    let lambda = config.learning_rate;
    run(network, q0, weights, config, SolverKind::Dtd, |_, q, table| {
        sigma_where(q, table, |k, i| {
            let c = table.option_costs[k][i];
            let min = table.min_costs[k];
            if c > min && c > 0.0 {
                lambda * (c - min) / c
            } else {
                0.0
            }
        })
    })
}

fn sigma_where(
    q: &FlowDistribution,
    _table: &CostTable,
    f: impl Fn(usize, usize) -> f64,
) -> Vec<Vec<f64>> {
    q.counts()
        .iter()
        .enumerate()
        .map(|(k, row)| (0..row.len()).map(|i| f(k, i)).collect())
        .collect()
}

fn run(
    network: &Network,
    q0: &FlowDistribution,
    weights: CostWeights,
    config: &SolverConfig,
    kind: SolverKind,
    step: impl Fn(usize, &FlowDistribution, &CostTable) -> Vec<Vec<f64>>,
) -> Result<SolverReport> {
    config.validate()?;
    q0.validate(network)?;
    let ev = Evaluator::new(network, weights)?;
    let mut rec = Recorder::new(network);
    let mut q = q0.clone();
    let mut cur = ev.evaluate(&q)?;
    let mut evaluations = 1;
    rec.push(Stage::Initial, &q, &cur, None, true);
    let stage = if kind == SolverKind::Msa { Stage::Outer } else { Stage::Day };
    let mut termination = Termination::Budget;

    for n in 1..=config.max_iterations {
        if cur.zeta == 0.0 {
            termination = Termination::Converged;
            break;
        }
        let sigma = step(n, &q, &cur.table);
        q = shift_flows(&q, &cur.table.best, &sigma, config.rounding)?;
        cur = ev.evaluate(&q)?;
        evaluations += 1;
        rec.push(stage, &q, &cur, None, true);
    }
    if cur.zeta == 0.0 {
        termination = Termination::Converged;
    }

    let certificate = if config.certify {
        let c = certify(&ev, &q, &cur)?;
        evaluations += c.moves_checked;
        Some(c)
    } else {
        None
    };
    Ok(rec.finish(kind, q, &cur, termination, certificate, evaluations))
}
