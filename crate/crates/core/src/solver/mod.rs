//! Equilibrium solvers: AdaGDD, the MSA and day-to-day learning baselines,
//! the single-user-swap certificate and a brute-force oracle.

mod adagdd;
mod baseline;
mod certificate;
mod golden;
mod oracle;
mod step;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowDistribution;

pub use adagdd::adagdd;
pub use baseline::{dtd_learning, msa};
pub use certificate::{single_user_swap_certificate, Certificate, Move};
pub use golden::{golden_section_theta, GoldenResult};
pub use oracle::{brute_force_oracle, distribution_count, OracleResult, ORACLE_LIMIT};
pub use step::{
    all_or_nothing, od_relative_gap, option_ratios, option_ratios_over, shift_flows, shift_od,
    RoundingPolicy, StepComponents,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Adagdd,
    Msa,
    Dtd,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Adagdd, SolverKind::Msa, SolverKind::Dtd];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Adagdd => "adagdd",
            SolverKind::Msa => "msa",
            SolverKind::Dtd => "dtd",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adagdd" => Ok(SolverKind::Adagdd),
            "msa" => Ok(SolverKind::Msa),
            "dtd" => Ok(SolverKind::Dtd),
            _ => Err(Error::Config(format!("unknown solver {s}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Outer iterations for AdaGDD, days for the baselines.
    pub max_iterations: usize,
    /// Consecutive non-improving inner draws before stopping. Defaults to
    /// five times the number of ODs.
    pub inner_patience: Option<usize>,
    /// Hard cap on inner iterations.
    pub inner_max_iterations: usize,
    pub golden_tolerance: f64,
    pub golden_max_evaluations: usize,
    pub rounding: RoundingPolicy,
    /// Day-to-day learning rate.
    pub learning_rate: f64,
    pub seed: u64,
    /// Run the certificate on the final solution of every solver.
    pub certify: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            inner_patience: None,
            inner_max_iterations: 100_000,
            golden_tolerance: 0.01,
            golden_max_evaluations: 20,
            rounding: RoundingPolicy::LargestRemainder,
            learning_rate: 0.5,
            seed: 0,
            certify: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.max_iterations < 1 {
            return bad("max_iterations must be >= 1");
        }
        if self.inner_patience == Some(0) {
            return bad("inner_patience must be >= 1");
        }
        if self.inner_max_iterations < 1 {
            return bad("inner_max_iterations must be >= 1");
        }
        if !(self.golden_tolerance > 0.0 && self.golden_tolerance.is_finite()) {
            return bad("golden_tolerance must be > 0");
        }
        if self.golden_max_evaluations < 1 {
            return bad("golden_max_evaluations must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        Ok(())
    }

    pub fn patience(&self, od_count: usize) -> usize {
        self.inner_patience.unwrap_or(5 * od_count.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// The gap reached zero.
    Converged,
    /// Inner patience ran out and the certificate passed.
    Patience,
    /// An iteration budget ran out.
    Budget,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::Patience => "patience",
            Termination::Budget => "budget",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Initial,
    Outer,
    Inner,
    /// A single-user move taken from a failed certificate.
    Swap,
    Day,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Initial => "initial",
            Stage::Outer => "outer",
            Stage::Inner => "inner",
            Stage::Swap => "swap",
            Stage::Day => "day",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub stage: Stage,
    /// Gap of the candidate produced by this iteration.
    pub zeta: f64,
    pub srg: Option<f64>,
    pub theta: Option<f64>,
    pub accepted: bool,
    /// Wall time since the solver started.
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub solver: SolverKind,
    pub final_q: FlowDistribution,
    pub zeta: f64,
    pub srg: Option<f64>,
    pub trace: Vec<TraceRow>,
    pub termination: Termination,
    pub certificate: Option<Certificate>,
    pub evaluations: usize,
    pub elapsed: Duration,
}

impl SolverReport {
    /// Gaps of the initial and all accepted iterations, in order.
    pub fn accepted_gaps(&self) -> Vec<f64> {
        self.trace
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.zeta)
            .collect()
    }
}

/// True when `a` is strictly below `b` beyond float noise.
pub(crate) fn strictly_less(a: f64, b: f64) -> bool {
    a < b - 1e-9 * b.abs().max(1.0)
}

pub(crate) struct Recorder<'a> {
    network: &'a crate::network::Network,
    start: std::time::Instant,
    trace: Vec<TraceRow>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(network: &'a crate::network::Network) -> Self {
        Self {
            network,
            start: std::time::Instant::now(),
            trace: Vec::new(),
        }
    }

    pub(crate) fn push(
        &mut self,
        stage: Stage,
        q: &FlowDistribution,
        eval: &crate::cost::Evaluation,
        theta: Option<f64>,
        accepted: bool,
    ) {
        self.trace.push(TraceRow {
            iteration: self.trace.len(),
            stage,
            zeta: eval.zeta,
            srg: crate::cost::srg(q, &eval.table, self.network).ok(),
            theta,
            accepted,
            elapsed: self.start.elapsed(),
        });
    }

    pub(crate) fn finish(
        self,
        solver: SolverKind,
        q: FlowDistribution,
        eval: &crate::cost::Evaluation,
        termination: Termination,
        certificate: Option<Certificate>,
        evaluations: usize,
    ) -> SolverReport {
        SolverReport {
            solver,
            srg: crate::cost::srg(&q, &eval.table, self.network).ok(),
            zeta: eval.zeta,
            final_q: q,
            trace: self.trace,
            termination,
            certificate,
            evaluations,
            elapsed: self.start.elapsed(),
        }
    }
}
