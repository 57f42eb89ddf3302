#![allow(dead_code)]

use std::collections::BTreeSet;

use dtue_core::network::{
    LegDescription, LineDescription, NetworkDescription, OdDescription, RouteDescription,
    StationDescription, StationKind,
};
use std::collections::BTreeMap;

use dtue_core::loading::{FlowRecord, LoadingResult};
use dtue_core::solver::distribution_count;
use dtue_core::{FlowDistribution, Network};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Shape {
    pub max_lines: usize,
    pub max_ods: usize,
    pub max_demand: u64,
    pub max_runs: usize,
    pub max_capacity: u64,
}

pub const SMALL: Shape = Shape {
    max_lines: 4,
    max_ods: 6,
    max_demand: 500,
    max_runs: 8,
    max_capacity: 60,
};

type Path = Vec<(usize, usize, usize)>;

/// A random network with up to `shape.max_lines` lines over a pool of
/// stations, with direct and one-transfer routes.
pub fn random_network(seed: u64, shape: &Shape) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(n) = try_network(&mut rng, shape) {
            return n;
        }
    }
}

fn try_network(rng: &mut ChaCha8Rng, shape: &Shape) -> Option<Network> {
    let pool = 7;
    let line_count = rng.gen_range(1..=shape.max_lines);
    let mut lines: Vec<Vec<usize>> = Vec::new();
    for _ in 0..line_count {
        let len = rng.gen_range(2..=4);
        let mut s: Vec<usize> = (0..pool).collect();
        s.shuffle(rng);
        s.truncate(len);
        lines.push(s);
    }

    // Direct paths and one-transfer paths as (line, board, alight) legs.
    let mut paths: Vec<Path> = Vec::new();
    for (l, st) in lines.iter().enumerate() {
        for i in 0..st.len() {
            for j in i + 1..st.len() {
                paths.push(vec![(l, st[i], st[j])]);
            }
        }
    }
    for (a, sa) in lines.iter().enumerate() {
        for (b, sb) in lines.iter().enumerate() {
            if a == b {
                continue;
            }
            for i in 0..sa.len() {
                for p in i + 1..sa.len() {
                    let Some(q) = sb.iter().position(|&s| s == sa[p]) else {
                        continue;
                    };
                    for &dest in &sb[q + 1..] {
                        if dest != sa[i] {
                            paths.push(vec![(a, sa[i], sa[p]), (b, sa[p], dest)]);
                        }
                    }
                }
            }
        }
    }
    if paths.is_empty() {
        return None;
    }

    let od_count = rng.gen_range(1..=shape.max_ods);
    let mut ods: Vec<(usize, usize, Vec<Path>)> = Vec::new();
    let mut seen = BTreeSet::new();
    for _ in 0..od_count * 3 {
        if ods.len() == od_count {
            break;
        }
        let p = paths.choose(rng).unwrap();
        let (o, d) = (p[0].1, p[p.len() - 1].2);
        if !seen.insert((o, d)) {
            continue;
        }
        let mut routes: Vec<Path> = paths
            .iter()
            .filter(|x| x[0].1 == o && x[x.len() - 1].2 == d)
            .cloned()
            .collect();
        routes.shuffle(rng);
        routes.truncate(rng.gen_range(1..=2));
        ods.push((o, d, routes));
    }

    let mut kinds = vec![BTreeSet::new(); pool];
    for (o, d, routes) in &ods {
        kinds[*o].insert(StationKind::Origin);
        kinds[*d].insert(StationKind::Destination);
        for r in routes {
            for leg in &r[1..] {
                kinds[leg.1].insert(StationKind::Transfer);
            }
        }
    }
    let used: BTreeSet<usize> = lines.iter().flatten().copied().collect();
    let stations = used
        .iter()
        .map(|&s| StationDescription {
            id: format!("S{s}"),
            name: None,
            kinds: if kinds[s].is_empty() {
                vec![StationKind::Intermediate]
            } else {
                kinds[s].iter().copied().collect()
            },
        })
        .collect();

    let line_desc = lines
        .iter()
        .enumerate()
        .map(|(l, st)| {
            let runs = rng.gen_range(2..=shape.max_runs);
            let mut overrides = std::collections::BTreeMap::new();
            if rng.gen_bool(0.3) {
                overrides.insert(rng.gen_range(0..runs), rng.gen_range(1..=shape.max_capacity));
            }
            LineDescription {
                id: format!("L{l}"),
                stations: st.iter().map(|s| format!("S{s}")).collect(),
                headway: rng.gen_range(1..=10) * 60,
                first_departure: 28_800 + rng.gen_range(0..10) * 60,
                run_count: runs,
                capacity: rng.gen_range(1..=shape.max_capacity),
                segment_times: (1..st.len()).map(|_| rng.gen_range(1..=10) * 60).collect(),
                dwell_times: if rng.gen_bool(0.5) {
                    Vec::new()
                } else {
                    (0..st.len()).map(|_| rng.gen_range(0..=1) * 30).collect()
                },
                capacity_overrides: overrides,
            }
        })
        .collect();

    let per_od = (shape.max_demand / od_count as u64).max(1);
    let od_demand: Vec<OdDescription> = ods
        .iter()
        .map(|(o, d, _)| OdDescription {
            id: format!("{o}-{d}"),
            origin: format!("S{o}"),
            destination: format!("S{d}"),
            demand: rng.gen_range(0..=per_od),
            preferred_departure: 0,
            desired_arrival: 30_000 + rng.gen_range(0..20) * 60,
        })
        .collect();
    let routes = ods
        .iter()
        .flat_map(|(o, d, rs)| {
            rs.iter().enumerate().map(move |(i, r)| RouteDescription {
                od: format!("{o}-{d}"),
                id: format!("r{i}"),
                legs: r
                    .iter()
                    .map(|&(l, b, a)| LegDescription {
                        line: format!("L{l}"),
                        board: format!("S{b}"),
                        alight: format!("S{a}"),
                    })
                    .collect(),
            })
        })
        .collect();

    let mut desc = NetworkDescription {
        name: "random".into(),
        stations,
        lines: line_desc,
        od_demand,
        routes,
        initial_settings: None,
    };
    let net = Network::new(desc.clone()).ok()?;
    for (k, od) in desc.od_demand.iter_mut().enumerate() {
        let opts: Vec<_> = net.options(k).iter().filter(|o| o.route == 0).collect();
        od.preferred_departure = opts[rng.gen_range(0..opts.len())].time;
    }
    Network::new(desc).ok()
}

/// Spreads each OD's demand over its options at random.
pub fn random_distribution(network: &Network, seed: u64) -> FlowDistribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = network
        .ods
        .iter()
        .enumerate()
        .map(|(k, od)| {
            let n = network.options(k).len();
            let mut row = vec![0u64; n];
            for _ in 0..od.demand {
                row[rng.gen_range(0..n)] += 1;
            }
            row
        })
        .collect();
    FlowDistribution::from_counts(network, rows).unwrap()
}

/// The same network with every run's capacity raised out of reach.
pub fn uncapacitated(network: &Network) -> Network {
    let mut d = network.description().clone();
    for l in &mut d.lines {
        l.capacity = 1_000_000_000;
        l.capacity_overrides.clear();
    }
    Network::new(d).unwrap()
}

fn od_sum(v: &[(usize, u64)]) -> u64 {
    v.iter().map(|(_, n)| n).sum()
}

fn od_map(v: &[(usize, u64)]) -> BTreeMap<usize, u64> {
    v.iter().copied().filter(|&(_, n)| n > 0).collect()
}

/// Every violated loading identity, as messages.
pub fn violations(net: &Network, q: &dtue_core::FlowDistribution, res: &LoadingResult) -> Vec<String> {
    let mut bad = Vec::new();
    let mut check = |ok: bool, msg: String| {
        if !ok {
            bad.push(msg);
        }
    };

    let mut idx = 0;
    for (li, line) in net.lines.iter().enumerate() {
        let n = line.stations.len();
        let recs: &[FlowRecord] = &res.records[idx..idx + line.run_count * n];
        idx += line.run_count * n;
        for (run, chunk) in recs.chunks(n).enumerate() {
            let cap = net.runs[li][run].capacity;
            for (pos, r) in chunk.iter().enumerate() {
                let at = format!("line {} run {run} pos {pos}", line.id);
                check(r.capacity == cap, format!("{at}: capacity"));
                check(r.waiting == r.carried_over + r.new_arrivals, format!("{at}: g = h_prev + new"));
                check(r.residual == cap.saturating_sub(r.load_before), format!("{at}: x = cap - y"));
                check(r.boarded == r.waiting.min(r.residual), format!("{at}: f = min(g, x)"));
                check(r.denied == r.waiting - r.boarded, format!("{at}: h = g - f"));
                check(r.departing_load == r.load_before + r.boarded, format!("{at}: z = y + f"));
                check(r.departing_load <= cap, format!("{at}: hard capacity"));
                check(od_sum(&r.boarded_by_od) == r.boarded, format!("{at}: sum f^k"));
                check(od_sum(&r.denied_by_od) == r.denied, format!("{at}: sum h^k"));
                check(od_sum(&r.alighting_by_od) == r.alighting, format!("{at}: sum m^k"));
                check(od_sum(&r.new_arrivals_by_od) == r.new_arrivals, format!("{at}: sum new^k"));
                check(od_sum(&r.carried_by_od) == r.carried_over, format!("{at}: sum carried^k"));
                if pos == 0 {
                    check(r.alighting == 0 && r.load_before == 0, format!("{at}: empty at first station"));
                    check(r.departing_load == r.boarded, format!("{at}: z = f at the first station"));
                } else {
                    let prev = &chunk[pos - 1];
                    check(
                        r.load_before + r.alighting == prev.departing_load,
                        format!("{at}: y = z_prev - m"),
                    );
                }
                if pos == n - 1 {
                    check(r.load_before == 0, format!("{at}: train empties at the terminus"));
                    check(r.waiting == 0, format!("{at}: nobody boards at the terminus"));
                }
                if run > 0 {
                    let before = &recs[(run - 1) * n + pos];
                    check(r.carried_over == before.denied, format!("{at}: carried = h of previous run"));
                    check(
                        od_map(&r.carried_by_od) == od_map(&before.denied_by_od),
                        format!("{at}: carried^k = h^k of previous run"),
                    );
                } else {
                    check(r.carried_over == 0, format!("{at}: nothing carried into the first run"));
                }
            }
        }
        for pos in 0..n {
            let mut arrived = 0;
            let mut boarded = 0;
            for run in 0..line.run_count {
                let r = &recs[run * n + pos];
                arrived += r.new_arrivals;
                boarded += r.boarded;
                check(boarded <= arrived, format!("line {} pos {pos}: cumulative boarding", line.id));
            }
            let left = recs[(line.run_count - 1) * n + pos].denied;
            check(arrived - boarded == left, format!("line {} pos {pos}: leftover", line.id));
            let stranded: u64 = res
                .stranded
                .iter()
                .filter(|s| s.line == li && s.station == line.stations[pos])
                .map(|s| s.count)
                .sum();
            check(stranded >= left, format!("line {} pos {pos}: denied users stranded", line.id));
        }
    }
    let boarded: u64 = res.records.iter().map(|r| r.boarded).sum();
    let alighted: u64 = res.records.iter().map(|r| r.alighting).sum();
    check(boarded == alighted, "every boarded user alights".into());

    let flows = res.arrival_flows(net);
    for (k, od) in net.ods.iter().enumerate() {
        let m: u64 = flows
            .iter()
            .filter(|((d, kk, _), _)| *kk == k && *d == od.destination)
            .map(|(_, n)| n)
            .sum();
        let s = res.stranded_count(k);
        check(m + s == q.od(k).iter().sum::<u64>(), format!("OD {}: sum m = Q - stranded", od.id));
        let at_dest: u64 = res
            .records
            .iter()
            .filter(|r| r.station == od.destination)
            .flat_map(|r| r.alighting_by_od.iter())
            .filter(|(kk, _)| *kk == k)
            .map(|(_, n)| n)
            .sum();
        check(at_dest == m, format!("OD {}: alighting at destination", od.id));
    }
    bad
}

pub const TINY: Shape = Shape {
    max_lines: 2,
    max_ods: 2,
    max_demand: 8,
    max_runs: 4,
    max_capacity: 3,
};

/// Seeded tiny networks that the oracle can enumerate, skipping trivial ones.
pub fn oracle_instances(count: usize) -> Vec<(u64, Network)> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        let net = random_network(seed, &TINY);
        let n = distribution_count(&net);
        if net.total_demand() >= 3 && (20..=200_000).contains(&n) {
            out.push((seed, net));
        }
        seed += 1;
    }
    out
}
