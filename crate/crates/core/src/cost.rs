//! Generalized travel costs, option averages, the system gap and the system
//! relative gap.
//!
//! A user on option `t` arriving at `a` after `v` seconds in vehicles has
//! waited `w = a - v - t` seconds on platforms. Their cost is
//! `alpha * w + beta * early + gamma * late`, where early and late measure the
//! distance from the desired arrival time. With integer weights every cost is
//! an integer, so sums stay exact in `f64` for any realistic instance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowDistribution;
use crate::loading::{free_flow_probe, simulate_with, LoadingResult, Probe, SimulationOptions};
use crate::network::{Network, Time};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    /// Per second of platform waiting.
    pub alpha: f64,
    /// Per second of early arrival.
    pub beta: f64,
    /// Per second of late arrival.
    pub gamma: f64,
}

impl CostWeights {
    pub const SYNTHETIC: Self = Self {
        alpha: 10.0,
        beta: 1.0,
        gamma: 10.0,
    };
    pub const MTR: Self = Self {
        alpha: 18.0,
        beta: 5.0,
        gamma: 12.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("weight {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            alpha: self.alpha * factor,
            beta: self.beta * factor,
            gamma: self.gamma * factor,
        }
    }
}

impl Default for CostWeights {
    fn default() -> Self {
        Self::SYNTHETIC
    }
}

/// Cost of one user departing on option `option_time` and arriving at
/// `arrival` after `in_vehicle` seconds on board.
pub fn individual_cost(
    arrival: Time,
    option_time: Time,
    in_vehicle: Time,
    weights: &CostWeights,
    desired_arrival: Time,
) -> Result<f64> {
    let wait = arrival - in_vehicle - option_time;
    if wait < 0 {
        return Err(Error::NegativeWait {
            wait,
            arrival,
            departure: option_time,
            in_vehicle,
        });
    }
    let early = (desired_arrival - arrival).max(0);
    let late = (arrival - desired_arrival).max(0);
    Ok(weights.alpha * wait as f64 + weights.beta * early as f64 + weights.gamma * late as f64)
}

/// Mean of the individual costs of an option's users, or its free-flow cost
/// when nobody chose it.
pub fn option_average_cost(costs: &[f64], free_flow: f64) -> f64 {
    if costs.is_empty() {
        free_flow
    } else {
        costs.iter().sum::<f64>() / costs.len() as f64
    }
}

/// Option costs of a distribution together with each OD's optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    /// `option_costs[od][option]`, average cost `C_k(t, r)`.
    pub option_costs: Vec<Vec<f64>>,
    /// Minimum over each OD's options, `C_k*`.
    pub min_costs: Vec<f64>,
    /// Index of the best option: the first minimum in option order, so the
    /// earliest departure and then the lowest route win ties.
    pub best: Vec<usize>,
    /// Users per OD left stranded by the loading.
    pub stranded: Vec<u64>,
}

impl CostTable {
    pub fn from_option_costs(option_costs: Vec<Vec<f64>>) -> Self {
        let mut min_costs = Vec::with_capacity(option_costs.len());
        let mut best = Vec::with_capacity(option_costs.len());
        for row in &option_costs {
            let (i, c) = row
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc });
            best.push(i);
            min_costs.push(c);
        }
        let stranded = vec![0; option_costs.len()];
        Self {
            option_costs,
            min_costs,
            best,
            stranded,
        }
    }

    pub fn od_count(&self) -> usize {
        self.option_costs.len()
    }
}

/// `sum_k sum_t (C_k(t) - C_k*) q_k(t)`.
pub fn system_gap(q: &FlowDistribution, table: &CostTable) -> f64 {
    (0..q.od_count()).map(|k| od_gap(q, table, k)).sum()
}

pub fn od_gap(q: &FlowDistribution, table: &CostTable, k: usize) -> f64 {
    let min = table.min_costs[k];
    q.od(k)
        .iter()
        .zip(&table.option_costs[k])
        .filter(|(&n, _)| n > 0)
        .map(|(&n, &c)| (c - min) * n as f64)
        .sum()
}

/// Total experienced cost `sum q C`.
pub fn total_cost(q: &FlowDistribution, table: &CostTable) -> f64 {
    (0..q.od_count())
        .map(|k| {
            q.od(k)
                .iter()
                .zip(&table.option_costs[k])
                .map(|(&n, &c)| c * n as f64)
                .sum::<f64>()
        })
        .sum()
}

/// Cost if every user paid their OD's minimum, `sum q C_k*`.
pub fn ideal_cost(q: &FlowDistribution, table: &CostTable) -> f64 {
    (0..q.od_count())
        .map(|k| table.min_costs[k] * q.od(k).iter().sum::<u64>() as f64)
        .sum()
}

/// System relative gap `zeta / sum q C_k*`. Zero for an empty network.
pub fn srg(q: &FlowDistribution, table: &CostTable, network: &Network) -> Result<f64> {
    for k in 0..q.od_count() {
        let demand: u64 = q.od(k).iter().sum();
        if demand > 0 && table.min_costs[k] <= 0.0 {
            return Err(Error::UndefinedSrg {
                od: network.ods[k].id.clone(),
                min_cost: table.min_costs[k],
            });
        }
    }
    let denominator = ideal_cost(q, table);
    if denominator == 0.0 {
        return Ok(0.0);
    }
    Ok(system_gap(q, table) / denominator)
}

/// Gap and costs of one distribution.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub table: CostTable,
    pub zeta: f64,
}

/// Turns distributions into costs for a fixed network and weights.
///
/// Free-flow option costs and the stranding penalty are computed once. The
/// penalty is ten times the largest finite free-flow option cost.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    network: &'a Network,
    weights: CostWeights,
    free_flow: Vec<Vec<f64>>,
    penalty: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(network: &'a Network, weights: CostWeights) -> Result<Self> {
        weights.validate()?;
        let mut probes = Vec::with_capacity(network.ods.len());
        let mut max_finite: f64 = 0.0;
        for (k, od) in network.ods.iter().enumerate() {
            let mut row = Vec::with_capacity(network.options(k).len());
            for (i, opt) in network.options(k).iter().enumerate() {
                let cost = match free_flow_probe(network, k, i) {
                    Probe::Completed { arrival, .. } => {
                        let c = individual_cost(
                            arrival,
                            opt.time,
                            od.routes[opt.route].in_vehicle,
                            &weights,
                            od.desired_arrival,
                        )?;
                        max_finite = max_finite.max(c);
                        Some(c)
                    }
                    Probe::Stranded => None,
                };
                row.push(cost);
            }
            probes.push(row);
        }
        let penalty = if max_finite > 0.0 {
            10.0 * max_finite
        } else {
            10.0 * (weights.alpha + weights.beta + weights.gamma) * 86_400.0
        };
        let free_flow = probes
            .into_iter()
            .map(|row| row.into_iter().map(|c| c.unwrap_or(penalty)).collect())
            .collect();
        Ok(Self {
            network,
            weights,
            free_flow,
            penalty,
        })
    }

    pub fn network(&self) -> &'a Network {
        self.network
    }

    pub fn weights(&self) -> CostWeights {
        self.weights
    }

    /// Cost charged to each stranded user.
    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    /// `C_k^0(t, r)`, the stranding penalty when the probe cannot finish.
    pub fn free_flow_costs(&self) -> &[Vec<f64>] {
        &self.free_flow
    }

    pub fn evaluate(&self, q: &FlowDistribution) -> Result<Evaluation> {
        let result = simulate_with(self.network, q, SimulationOptions { record_flows: false })?;
        let table = self.cost_table(q, &result)?;
        let zeta = system_gap(q, &table);
        Ok(Evaluation { table, zeta })
    }

    pub fn gap(&self, q: &FlowDistribution) -> Result<f64> {
        Ok(self.evaluate(q)?.zeta)
    }

    /// Option average costs of `q` given its loading.
    pub fn cost_table(&self, q: &FlowDistribution, result: &LoadingResult) -> Result<CostTable> {
        let net = self.network;
        let mut sums: Vec<Vec<f64>> = q.counts().iter().map(|r| vec![0.0; r.len()]).collect();
        for a in &result.arrivals {
            let od = &net.ods[a.od];
            let opt = net.options(a.od)[a.option];
            let c = individual_cost(
                a.time,
                opt.time,
                od.routes[opt.route].in_vehicle,
                &self.weights,
                od.desired_arrival,
            )?;
            sums[a.od][a.option] += c * a.count as f64;
        }
        let mut stranded = vec![0; q.od_count()];
        for s in &result.stranded {
            sums[s.od][s.option] += self.penalty * s.count as f64;
            stranded[s.od] += s.count;
        }
        let option_costs = sums
            .into_iter()
            .enumerate()
            .map(|(k, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(i, sum)| {
                        let n = q.get(k, i);
                        if n == 0 {
                            self.free_flow[k][i]
                        } else {
                            sum / n as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let mut table = CostTable::from_option_costs(option_costs);
        table.stranded = stranded;
        Ok(table)
    }

    /// Individual costs of every user of one option in user-index order.
    pub fn individual_costs(
        &self,
        result: &LoadingResult,
        od: usize,
        option: usize,
    ) -> Result<Vec<f64>> {
        let net = self.network;
        let o = &net.ods[od];
        let opt = net.options(od)[option];
        let mut users: Vec<(u64, u64, f64)> = Vec::new();
        for a in result.arrivals.iter().filter(|a| a.od == od && a.option == option) {
            let c = individual_cost(
                a.time,
                opt.time,
                o.routes[opt.route].in_vehicle,
                &self.weights,
                o.desired_arrival,
            )?;
            users.push((a.user_start, a.count, c));
        }
        for s in result.stranded.iter().filter(|s| s.od == od && s.option == option) {
            users.push((s.user_start, s.count, self.penalty));
        }
        users.sort_by_key(|u| u.0);
        Ok(users
            .into_iter()
            .flat_map(|(_, n, c)| std::iter::repeat_n(c, n as usize))
            .collect())
    }
}
