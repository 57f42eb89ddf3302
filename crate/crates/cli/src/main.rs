//! `dtue`: run equilibrium scenarios, enumerate tiny instances, certify
//! distributions.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dtue_core::report::emit_reports;
use dtue_core::scenario::{InitialSpec, Scenario};
use dtue_core::solver::{brute_force_oracle, single_user_swap_certificate, SolverKind};
use dtue_core::{FlowDistribution, InitialSetting};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "dtue", version, about = "Departure-time user equilibrium for scheduled transit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one or more scenarios and write reports.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Overrides the solver of every scenario.
        #[arg(long)]
        solver: Option<SolverKind>,
        /// Initial setting id or a Q file (`.csv`).
        #[arg(long)]
        initial: Option<String>,
        /// Multiplies every OD demand.
        #[arg(long)]
        demand_scale: Option<f64>,
        /// Seed of the inner-loop OD draws.
        #[arg(long)]
        seed: Option<u64>,
        /// Reports go to `<out>/<scenario file stem>/`.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write per-station loading records of the final distribution.
        #[arg(long)]
        trace: bool,
        /// Scenarios solved at the same time.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Enumerate every distribution of a tiny scenario and report the minimum gap.
    Oracle {
        scenario: PathBuf,
        /// Write each minimizer as a Q file into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that no single user can lower the gap of a distribution.
    Certify { scenario: PathBuf, q: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            scenarios,
            solver,
            initial,
            demand_scale,
            seed,
            out,
            trace,
            jobs,
        } => {
            if jobs == 0 {
                bail!("--jobs must be at least 1");
            }
            let mut loaded = Vec::new();
            for path in &scenarios {
                let mut s = Scenario::from_path(path)
                    .with_context(|| format!("loading scenario {}", path.display()))?;
                if let Some(k) = solver {
                    s.solver = k;
                }
                if let Some(i) = &initial {
                    s.initial = parse_initial(i)?;
                }
                if let Some(f) = demand_scale {
                    s.demand_scale = f;
                }
                if seed.is_some() {
                    s.seed = seed;
                }
                s.validate()
                    .with_context(|| format!("scenario {}", path.display()))?;
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "scenario".into());
                loaded.push((path.clone(), out.join(stem), s));
            }
            let results: Vec<Result<String>> = if jobs == 1 {
                loaded.iter().map(|(p, dir, s)| solve(p, dir, s, trace)).collect()
            } else {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build()?
                    .install(|| loaded.par_iter().map(|(p, dir, s)| solve(p, dir, s, trace)).collect())
            };
            let mut failed = false;
            for r in results {
                match r {
                    Ok(line) => println!("{line}"),
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        failed = true;
                    }
                }
            }
            Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::Oracle { scenario, out } => {
            let s = Scenario::from_path(&scenario)?;
            let net = s.load_network()?;
            let r = brute_force_oracle(&net, s.weights)?;
            println!(
                "{}: enumerated {} distributions, minimum gap {}, {} minimizer(s)",
                net.name,
                r.enumerated,
                r.min_zeta,
                r.minimizers.len()
            );
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                for (i, q) in r.minimizers.iter().enumerate() {
                    let path = dir.join(format!("minimizer_{}.csv", i + 1));
                    q.write_csv(&net, BufWriter::new(File::create(&path)?))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Certify { scenario, q } => {
            let s = Scenario::from_path(&scenario)?;
            let net = s.load_network()?;
            let f = File::open(&q).with_context(|| format!("opening {}", q.display()))?;
            let dist = FlowDistribution::read_csv(&net, f)?;
            let c = single_user_swap_certificate(&net, &dist, s.weights)?;
            match c.witness {
                None => {
                    println!("pass: gap {}, {} single-user moves checked", c.zeta, c.moves_checked);
                    Ok(ExitCode::SUCCESS)
                }
                Some(w) => {
                    let od = &net.ods[w.od];
                    let from = net.options(w.od)[w.from];
                    let to = net.options(w.od)[w.to];
                    println!(
                        "fail: moving one user of {} from {} ({}) to {} ({}) lowers the gap from {} to {}",
                        od.id,
                        dtue_core::network::format_clock(from.time),
                        od.routes[from.route].id,
                        dtue_core::network::format_clock(to.time),
                        od.routes[to.route].id,
                        w.zeta_before,
                        w.zeta_after
                    );
                    Ok(ExitCode::from(1))
                }
            }
        }
    }
}

fn parse_initial(s: &str) -> Result<InitialSpec> {
    if s.ends_with(".csv") {
        let path = std::env::current_dir()?.join(s);
        return Ok(InitialSpec::File { file: path });
    }
    Ok(InitialSpec::Setting(s.parse::<InitialSetting>()?))
}

fn solve(path: &Path, dir: &Path, s: &Scenario, trace: bool) -> Result<String> {
    let run = s
        .run()
        .with_context(|| format!("solving {}", path.display()))?;
    emit_reports(&run, dir, trace).with_context(|| format!("writing reports to {}", dir.display()))?;
    let r = &run.report;
    let srg = r.srg.map(|x| format!("{x:.4}")).unwrap_or_else(|| "undefined".into());
    let cert = match &r.certificate {
        Some(c) if c.passed => "certificate pass",
        Some(_) => "certificate fail",
        None => "not certified",
    };
    Ok(format!(
        "{}: {} SRG {srg}, gap {}, {} ({} iterations, {cert}) -> {}",
        path.display(),
        r.solver,
        r.zeta,
        r.termination,
        r.trace.len().saturating_sub(1),
        dir.display()
    ))
}
