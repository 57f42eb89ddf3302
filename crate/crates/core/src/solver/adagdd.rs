use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::certificate::certify;
use super::golden::golden_section_theta;
use super::step::{od_relative_gap, option_ratios_over, shift_flows, shift_od};
use super::{strictly_less, Recorder, SolverConfig, SolverKind, SolverReport, Stage, Termination};
use crate::cost::{CostWeights, Evaluation, Evaluator};
use crate::error::{Error, Result};
use crate::flow::FlowDistribution;
use crate::network::Network;

/// Adaptive gap-based descent.
///
/// The outer loop shifts every OD at once toward its best option with step
/// `theta * partial_k * phi_k(t)`, `theta` chosen by golden-section search,
/// and stops at the first step that does not lower the gap. The inner loop
/// then draws one OD at a time, shifts it with `partial_k = 1`, and keeps any
/// step that does not raise the gap. After `patience` draws without a strict
/// improvement the single-user-swap certificate runs: if it finds an
/// improving move the move is applied and the draws resume, otherwise the
/// solver stops.
pub fn adagdd(
    network: &Network,
    q0: &FlowDistribution,
    weights: CostWeights,
    config: &SolverConfig,
) -> Result<SolverReport> {
    config.validate()?;
    q0.validate(network)?;
    let ev = Evaluator::new(network, weights)?;
    let count = AtomicUsize::new(0);
    let eval = |q: &FlowDistribution| -> Result<Evaluation> {
        count.fetch_add(1, Ordering::Relaxed);
        ev.evaluate(q)
    };
    let mut rec = Recorder::new(network);
    let k_count = network.ods.len();

    let mut q = q0.clone();
    let mut cur = eval(&q)?;
    rec.push(Stage::Initial, &q, &cur, None, true);
    let mut termination = None;

    for _ in 0..config.max_iterations {
        if cur.zeta == 0.0 {
            termination = Some(Termination::Converged);
            break;
        }
        let table = &cur.table;
        let partial = (0..k_count)
            .map(|k| {
                od_relative_gap(&table.option_costs[k]).map_err(|e| match e {
                    Error::DegenerateCost { mean, .. } => Error::DegenerateCost {
                        od: network.ods[k].id.clone(),
                        mean,
                    },
                    e => e,
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let phi: Vec<Vec<f64>> = (0..k_count)
            .map(|k| option_ratios_over(&table.option_costs[k], table.best[k], q.od(k)))
            .collect();
        let candidate = |theta: f64| {
            let sigma: Vec<Vec<f64>> = partial
                .iter()
                .zip(&phi)
                .map(|(&p, row)| row.iter().map(|&f| (theta * p * f).clamp(0.0, 1.0)).collect())
                .collect();
            shift_flows(&q, &table.best, &sigma, config.rounding)
        };
        let g = golden_section_theta(
            |t| Ok(eval(&candidate(t)?)?.zeta),
            config.golden_tolerance,
            config.golden_max_evaluations,
        )?;
        let q_new = candidate(g.theta)?;
        if q_new == q {
            rec.push(Stage::Outer, &q, &cur, Some(g.theta), false);
            break;
        }
        let new = eval(&q_new)?;
        let accepted = new.zeta <= cur.zeta;
        rec.push(Stage::Outer, &q_new, &new, Some(g.theta), accepted);
        if !accepted {
            break;
        }
        q = q_new;
        cur = new;
    }

    let patience = config.patience(k_count);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut stale = 0;
    let mut inner = 0;
    let mut certificate = None;
    while termination.is_none() {
        if cur.zeta == 0.0 {
            termination = Some(Termination::Converged);
            break;
        }
        if inner >= config.inner_max_iterations {
            termination = Some(Termination::Budget);
            break;
        }
        inner += 1;
        if stale >= patience {
            let cert = certify(&ev, &q, &cur)?;
            count.fetch_add(cert.moves_checked, Ordering::Relaxed);
            match cert.witness {
                None => {
                    certificate = Some(cert);
                    termination = Some(Termination::Patience);
                }
                Some(w) => {
                    q.move_users(w.od, w.from, w.to, 1)?;
                    cur = eval(&q)?;
                    for m in &cert.improving[1..] {
                        let mut tried = q.clone();
                        tried.move_users(m.od, m.from, m.to, 1)?;
                        let new = eval(&tried)?;
                        if strictly_less(new.zeta, cur.zeta) {
                            q = tried;
                            cur = new;
                        }
                    }
                    rec.push(Stage::Swap, &q, &cur, None, true);
                    stale = 0;
                }
            }
            continue;
        }

        let k = rng.gen_range(0..k_count);
        let table = &cur.table;
        let best = table.best[k];
        let phi = option_ratios_over(&table.option_costs[k], best, q.od(k));
        if phi.iter().all(|&f| f == 0.0) {
            stale += 1;
            continue;
        }
        let candidate = |theta: f64| {
            let sigma: Vec<f64> = phi.iter().map(|&f| (theta * f).clamp(0.0, 1.0)).collect();
            let mut out = q.clone();
            let row = shift_od(q.od(k), best, &sigma, config.rounding);
            out.od_mut(k).copy_from_slice(&row);
            out
        };
        let g = golden_section_theta(
            |t| Ok(eval(&candidate(t))?.zeta),
            config.golden_tolerance,
            config.golden_max_evaluations,
        )?;
        let q_new = candidate(g.theta);
        if q_new == q {
            stale += 1;
            continue;
        }
        let new = eval(&q_new)?;
        let accepted = new.zeta <= cur.zeta;
        rec.push(Stage::Inner, &q_new, &new, Some(g.theta), accepted);
        if accepted && strictly_less(new.zeta, cur.zeta) {
            stale = 0;
        } else {
            stale += 1;
        }
        if accepted {
            q = q_new;
            cur = new;
        }
    }

    if certificate.is_none() && config.certify {
        let cert = certify(&ev, &q, &cur)?;
        count.fetch_add(cert.moves_checked, Ordering::Relaxed);
        certificate = Some(cert);
    }
    let termination = termination.unwrap_or(Termination::Budget);
    let evaluations = count.load(Ordering::Relaxed);
    Ok(rec.finish(SolverKind::Adagdd, q, &cur, termination, certificate, evaluations))
}
