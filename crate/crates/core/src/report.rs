//! Report files for a finished scenario.
//!
//! Everything except `timing.json` depends only on the scenario, so two runs
//! with the same seed write byte-identical files. CSVs use a header row,
//! commas, dot decimals and LF line endings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cost::{ideal_cost, od_gap, total_cost, Evaluator};
use crate::error::Result;
use crate::flow::FlowDistribution;
use crate::loading::{simulate, write_trace_csv};
use crate::network::{format_clock, Network, Time};
use crate::scenario::ScenarioRun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Convergence,
    OdCosts,
    SystemCost,
    Heatmap,
    QFinal,
}

impl ReportKind {
    pub const ALL: [ReportKind; 5] = [
        ReportKind::Convergence,
        ReportKind::OdCosts,
        ReportKind::SystemCost,
        ReportKind::Heatmap,
        ReportKind::QFinal,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            ReportKind::Convergence => "convergence.csv",
            ReportKind::OdCosts => "od_costs.csv",
            ReportKind::SystemCost => "system_cost.csv",
            ReportKind::Heatmap => "heatmap.csv",
            ReportKind::QFinal => "q_final.csv",
        }
    }
}

pub const HEATMAP_START: Time = 21_000;
pub const HEATMAP_BIN: Time = 1_200;
pub const HEATMAP_BINS: usize = 13;

/// Demand over offered capacity per origin station and departure-time bin.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapTable {
    pub stations: Vec<usize>,
    /// Bin start times; bin `b` covers `[bins[b], bins[b] + HEATMAP_BIN)`.
    pub bins: Vec<Time>,
    /// `None` when no capacity departs in the bin.
    pub cells: Vec<Vec<Option<f64>>>,
}

pub fn heatmap(network: &Network, q: &FlowDistribution) -> HeatmapTable {
    let bins: Vec<Time> = (0..HEATMAP_BINS)
        .map(|b| HEATMAP_START + b as Time * HEATMAP_BIN)
        .collect();
    let bin_of = |t: Time| {
        let off = t - HEATMAP_START;
        (off >= 0 && off < HEATMAP_BIN * HEATMAP_BINS as Time).then(|| (off / HEATMAP_BIN) as usize)
    };
    let mut stations: Vec<usize> = network.ods.iter().map(|od| od.origin).collect();
    stations.sort_unstable();
    stations.dedup();

    let cells = stations
        .iter()
        .map(|&s| {
            let mut demand = vec![0u64; HEATMAP_BINS];
            let mut lines: Vec<usize> = Vec::new();
            for (k, od) in network.ods.iter().enumerate().filter(|(_, od)| od.origin == s) {
                for r in &od.routes {
                    lines.push(r.legs[0].line);
                }
                for (i, opt) in network.options(k).iter().enumerate() {
                    if let Some(b) = bin_of(opt.time) {
                        demand[b] += q.get(k, i);
                    }
                }
            }
            lines.sort_unstable();
            lines.dedup();
            let mut capacity = vec![0u64; HEATMAP_BINS];
            for &l in &lines {
                let pos = network.lines[l].position(s).expect("first leg boards at origin");
                for run in &network.runs[l] {
                    if let Some(b) = bin_of(run.departures[pos]) {
                        capacity[b] += run.capacity;
                    }
                }
            }
            demand
                .iter()
                .zip(&capacity)
                .map(|(&d, &c)| (c > 0).then(|| d as f64 / c as f64))
                .collect()
        })
        .collect();
    HeatmapTable {
        stations,
        bins,
        cells,
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?)))
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: &'a crate::scenario::Scenario,
    network: &'a str,
    seed: u64,
    ods: usize,
    total_demand: u64,
    solver: String,
    termination: String,
    iterations: usize,
    evaluations: usize,
    zeta: f64,
    srg: Option<f64>,
    certificate_passed: Option<bool>,
    files: Vec<&'static str>,
}

#[derive(Serialize)]
struct Timing {
    total_seconds: f64,
    iterations: Vec<f64>,
}

/// Writes the selected reports plus `manifest.json` and `timing.json` into
/// `dir`, returning the written paths. With `trace`, also writes the
/// per-station loading records of the final distribution to `trace.csv`.
pub fn emit_reports(run: &ScenarioRun, dir: &Path, trace: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let net = &run.network;
    let rep = &run.report;
    let q = &rep.final_q;
    let ev = Evaluator::new(net, run.scenario.weights)?;
    let loading = simulate(net, q)?;
    let table = ev.cost_table(q, &loading)?;
    let mut written = Vec::new();
    let mut files = Vec::new();

    for &kind in &run.scenario.reports {
        if files.contains(&kind.file_name()) {
            continue;
        }
        let path = dir.join(kind.file_name());
        match kind {
            ReportKind::Convergence => {
                let mut w = csv_writer(&path)?;
                w.write_record(["iteration", "loop", "zeta", "srg", "theta", "accepted"])?;
                for r in &rep.trace {
                    w.write_record([
                        r.iteration.to_string(),
                        r.stage.to_string(),
                        num(r.zeta),
                        opt(r.srg),
                        opt(r.theta),
                        r.accepted.to_string(),
                    ])?;
                }
                w.flush()?;
            }
            ReportKind::OdCosts => {
                let mut w = csv_writer(&path)?;
                w.write_record(["od", "origin", "destination", "demand", "mean_cost", "min_cost", "gap", "stranded"])?;
                for (k, od) in net.ods.iter().enumerate() {
                    let demand = od.demand;
                    let sum: f64 = q
                        .od(k)
                        .iter()
                        .zip(&table.option_costs[k])
                        .map(|(&n, &c)| n as f64 * c)
                        .sum();
                    let mean = if demand > 0 { sum / demand as f64 } else { 0.0 };
                    w.write_record([
                        od.id.clone(),
                        net.stations[od.origin].id.clone(),
                        net.stations[od.destination].id.clone(),
                        demand.to_string(),
                        num(mean),
                        num(table.min_costs[k]),
                        num(od_gap(q, &table, k)),
                        table.stranded[k].to_string(),
                    ])?;
                }
                w.flush()?;
            }
            ReportKind::SystemCost => {
                let mut w = csv_writer(&path)?;
                w.write_record(["demand", "total_cost", "ideal_cost", "zeta", "srg", "mean_cost", "stranded"])?;
                let demand = q.total();
                let total = total_cost(q, &table);
                w.write_record([
                    demand.to_string(),
                    num(total),
                    num(ideal_cost(q, &table)),
                    num(rep.zeta),
                    opt(rep.srg),
                    num(if demand > 0 { total / demand as f64 } else { 0.0 }),
                    table.stranded.iter().sum::<u64>().to_string(),
                ])?;
                w.flush()?;
            }
            ReportKind::Heatmap => {
                let h = heatmap(net, q);
                let mut w = csv_writer(&path)?;
                let mut header = vec!["station".to_string()];
                header.extend(h.bins.iter().map(|&t| format_clock(t)));
                w.write_record(&header)?;
                for (s, row) in h.stations.iter().zip(&h.cells) {
                    let mut rec = vec![net.stations[*s].id.clone()];
                    rec.extend(row.iter().map(|c| opt(*c)));
                    w.write_record(&rec)?;
                }
                w.flush()?;
            }
            ReportKind::QFinal => {
                q.write_csv(net, BufWriter::new(File::create(&path)?))?;
            }
        }
        files.push(kind.file_name());
        written.push(path);
    }

    if trace {
        let path = dir.join("trace.csv");
        write_trace_csv(net, &loading, BufWriter::new(File::create(&path)?))?;
        files.push("trace.csv");
        written.push(path);
    }

    let config = run.scenario.effective_config();
    let manifest = Manifest {
        tool: "dtue",
        version: env!("CARGO_PKG_VERSION"),
        scenario: &run.scenario,
        network: &net.name,
        seed: config.seed,
        ods: net.ods.len(),
        total_demand: net.total_demand(),
        solver: rep.solver.to_string(),
        termination: rep.termination.to_string(),
        iterations: rep.trace.len().saturating_sub(1),
        evaluations: rep.evaluations,
        zeta: rep.zeta,
        srg: rep.srg,
        certificate_passed: rep.certificate.as_ref().map(|c| c.passed),
        files,
    };
    let path = dir.join("manifest.json");
    let mut f = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    f.flush()?;
    written.push(path);

    let timing = Timing {
        total_seconds: rep.elapsed.as_secs_f64(),
        iterations: rep.trace.iter().map(|r| r.elapsed.as_secs_f64()).collect(),
    };
    let path = dir.join("timing.json");
    let mut f = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut f, &timing)?;
    f.write_all(b"\n")?;
    f.flush()?;
    written.push(path);

    Ok(written)
}
