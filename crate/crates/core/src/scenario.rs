//! Scenario files, initial distributions and demand scaling.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::CostWeights;
use crate::error::{Error, Result};
use crate::flow::FlowDistribution;
use crate::network::{Network, Time};
use crate::report::ReportKind;
use crate::solver::{self, SolverConfig, SolverKind, SolverReport};

pub const SCHEMA_VERSION: u32 = 1;

/// The five starting distributions used for sensitivity runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialSetting {
    /// Full demand on the preferred departure.
    Default,
    /// Demand spread over every option from the earliest option to the
    /// uniform window end.
    Uniform,
    Earliest,
    Latest,
    /// Half on the preferred departure, half on the earliest; an odd user goes
    /// to the preferred one.
    DefaultEarliest,
}

impl InitialSetting {
    pub const ALL: [InitialSetting; 5] = [
        InitialSetting::Default,
        InitialSetting::Uniform,
        InitialSetting::Earliest,
        InitialSetting::Latest,
        InitialSetting::DefaultEarliest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InitialSetting::Default => "default",
            InitialSetting::Uniform => "uniform",
            InitialSetting::Earliest => "earliest",
            InitialSetting::Latest => "latest",
            InitialSetting::DefaultEarliest => "default-earliest",
        }
    }
}

impl fmt::Display for InitialSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitialSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown initial setting {s}")))
    }
}

/// Options of the first route of OD `k`, in time order.
fn first_route_options(network: &Network, k: usize) -> Vec<(usize, Time)> {
    network
        .options(k)
        .iter()
        .enumerate()
        .filter(|(_, o)| o.route == 0)
        .map(|(i, o)| (i, o.time))
        .collect()
}

fn option_at(network: &Network, k: usize, time: Time, what: &str) -> Result<usize> {
    first_route_options(network, k)
        .into_iter()
        .find(|&(_, t)| t == time)
        .map(|(i, _)| i)
        .ok_or_else(|| {
            Error::Config(format!(
                "{what} time {time} is not a departure option of OD {}",
                network.ods[k].id
            ))
        })
}

/// Builds a starting distribution. Every setting uses the OD's first route.
pub fn generate_initial(setting: InitialSetting, network: &Network) -> Result<FlowDistribution> {
    let mut q = FlowDistribution::zeros(network);
    let window = &network.initial_window;
    for (k, od) in network.ods.iter().enumerate() {
        let opts = first_route_options(network, k);
        let first = opts.first().map(|o| o.1).unwrap_or_default();
        let last = opts.last().map(|o| o.1).unwrap_or_default();
        let earliest = window.earliest.unwrap_or(first);
        let latest = window.latest.unwrap_or(last);
        let demand = od.demand;
        match setting {
            InitialSetting::Default => {
                let i = option_at(network, k, od.preferred_departure, "preferred")?;
                q.set(k, i, demand);
            }
            InitialSetting::Earliest => {
                let i = option_at(network, k, earliest, "earliest")?;
                q.set(k, i, demand);
            }
            InitialSetting::Latest => {
                let i = option_at(network, k, latest, "latest")?;
                q.set(k, i, demand);
            }
            InitialSetting::DefaultEarliest => {
                let d = option_at(network, k, od.preferred_departure, "preferred")?;
                let e = option_at(network, k, earliest, "earliest")?;
                q.set(k, d, demand.div_ceil(2));
                q.set(k, e, q.get(k, e) + demand / 2);
            }
            InitialSetting::Uniform => {
                let end = window.uniform_end.unwrap_or(latest);
                let bins: Vec<usize> = opts
                    .iter()
                    .filter(|&&(_, t)| t >= earliest && t <= end)
                    .map(|&(i, _)| i)
                    .collect();
                if bins.is_empty() {
                    return Err(Error::Config(format!(
                        "OD {} has no options between {earliest} and {end}",
                        od.id
                    )));
                }
                let per = demand.div_ceil(bins.len() as u64);
                let mut left = demand;
                for i in bins {
                    let n = per.min(left);
                    q.set(k, i, n);
                    left -= n;
                }
            }
        }
    }
    q.validate(network)?;
    Ok(q)
}

/// Replaces every OD demand `Q` by `round(factor * Q)`.
pub fn scale_demand(network: &Network, factor: f64) -> Result<Network> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::Config(format!("demand scale must be positive, got {factor}")));
    }
    let demands: Vec<u64> = network
        .ods
        .iter()
        .map(|od| (factor * od.demand as f64).round() as u64)
        .collect();
    network.with_demands(&demands)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Setting(InitialSetting),
    File { file: PathBuf },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Setting(InitialSetting::Default)
    }
}

fn default_scale() -> f64 {
    1.0
}

fn default_reports() -> Vec<ReportKind> {
    ReportKind::ALL.to_vec()
}

/// A scenario file.
///
/// `network` is a path relative to the scenario file or `builtin:<name>` for
/// a bundled network (see [`crate::fixtures`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub network: String,
    #[serde(default)]
    pub weights: CostWeights,
    #[serde(default = "default_solver")]
    pub solver: SolverKind,
    #[serde(default)]
    pub config: SolverConfig,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default = "default_scale")]
    pub demand_scale: f64,
    #[serde(default = "default_reports")]
    pub reports: Vec<ReportKind>,
    /// Overrides `config.seed` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_solver() -> SolverKind {
    SolverKind::Adagdd
}

impl Scenario {
    pub fn new(network: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            network: network.into(),
            weights: CostWeights::default(),
            solver: SolverKind::Adagdd,
            config: SolverConfig::default(),
            initial: InitialSpec::default(),
            demand_scale: 1.0,
            reports: default_reports(),
            seed: None,
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut s = Self::from_json(&text)?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.demand_scale > 0.0 && self.demand_scale.is_finite()) {
            return Err(Error::Config("demand_scale must be positive".into()));
        }
        self.weights.validate()?;
        self.effective_config().validate()
    }

    pub fn effective_config(&self) -> SolverConfig {
        let mut c = self.config.clone();
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        c
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// The network with the demand scale applied.
    pub fn load_network(&self) -> Result<Network> {
        let net = match self.network.strip_prefix("builtin:") {
            Some(name) => crate::fixtures::load(name)?,
            None => {
                let path = self.resolve(Path::new(&self.network));
                if !path.exists() {
                    return Err(Error::Config(format!("network file {} not found", path.display())));
                }
                Network::from_path(path)?
            }
        };
        if self.demand_scale == 1.0 {
            Ok(net)
        } else {
            scale_demand(&net, self.demand_scale)
        }
    }

    pub fn initial_distribution(&self, network: &Network) -> Result<FlowDistribution> {
        match &self.initial {
            InitialSpec::Setting(s) => generate_initial(*s, network),
            InitialSpec::File { file } => {
                let path = self.resolve(file);
                let f = std::fs::File::open(&path).map_err(|e| {
                    Error::Config(format!("cannot open initial file {}: {e}", path.display()))
                })?;
                FlowDistribution::read_csv(network, f)
            }
        }
    }

    /// Loads the network, builds the initial distribution and runs the solver.
    pub fn run(&self) -> Result<ScenarioRun> {
        self.validate()?;
        let network = self.load_network()?;
        let initial = self.initial_distribution(&network)?;
        let report = run_solver(self.solver, &network, &initial, self.weights, &self.effective_config())?;
        Ok(ScenarioRun {
            scenario: self.clone(),
            network,
            initial,
            report,
        })
    }
}

pub fn run_solver(
    kind: SolverKind,
    network: &Network,
    q0: &FlowDistribution,
    weights: CostWeights,
    config: &SolverConfig,
) -> Result<SolverReport> {
    match kind {
        SolverKind::Adagdd => solver::adagdd(network, q0, weights, config),
        SolverKind::Msa => solver::msa(network, q0, weights, config),
        SolverKind::Dtd => solver::dtd_learning(network, q0, weights, config),
    }
}

/// Everything a finished scenario produced.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub scenario: Scenario,
    pub network: Network,
    pub initial: FlowDistribution,
    pub report: SolverReport,
}
