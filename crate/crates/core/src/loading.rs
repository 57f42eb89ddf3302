//! Event-driven network loading under hard capacity and first-come-first-serve
//! boarding.
//!
//! Every run arrival and departure at a station is an event. Events are
//! processed in time order with arrivals ahead of departures in the same
//! second, so a transfer onto a run leaving at the exact arrival second
//! succeeds. At an arrival, users whose leg ends at the station alight: they
//! either reach their destination or join the platform queue for the next
//! leg's line. At a departure the train takes waiting users in queue order
//! until it is full; everyone else stays on the platform for the next run,
//! keeping their place in the queue.
//!
//! Platform queues are ordered by platform-arrival time, then OD index,
//! route index, option departure time and user index. Origin users join the
//! queue at the departure time of the run they chose. Users are tracked as
//! contiguous index ranges within their option, so a waiting group may split
//! when only part of it fits.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;

use crate::error::Result;
use crate::flow::FlowDistribution;
use crate::network::{EventKind, Network, RunId, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationOptions {
    /// Collect per-(run, station) flow records. Solvers only need arrivals.
    pub record_flows: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { record_flows: true }
    }
}

/// Users `user_start..user_start + count` of option `option` of OD `od`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrivalSegment {
    pub od: usize,
    pub option: usize,
    pub user_start: u64,
    pub count: u64,
    pub time: Time,
    /// The run that delivered them to the destination.
    pub run: RunId,
}

/// Users left waiting on a platform after the last run of the line departed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrandedSegment {
    pub od: usize,
    pub option: usize,
    pub user_start: u64,
    pub count: u64,
    pub station: usize,
    pub line: usize,
}

/// Flows for one run at one station.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowRecord {
    pub run: RunId,
    pub pos: usize,
    pub station: usize,
    /// Alighting users (`m`).
    pub alighting: u64,
    /// Load after alighting, before boarding (`y`).
    pub load_before: u64,
    /// Residual capacity offered to the platform (`x`).
    pub residual: u64,
    /// Users waiting for this run (`g`).
    pub waiting: u64,
    /// Users who boarded (`f`).
    pub boarded: u64,
    /// Users denied boarding (`h`).
    pub denied: u64,
    /// Load when leaving the station (`z`).
    pub departing_load: u64,
    /// Of `waiting`, users already denied by the previous run.
    pub carried_over: u64,
    /// Of `waiting`, users who reached the platform since the previous run.
    pub new_arrivals: u64,
    pub capacity: u64,
    pub boarded_by_od: Vec<(usize, u64)>,
    pub denied_by_od: Vec<(usize, u64)>,
    pub alighting_by_od: Vec<(usize, u64)>,
    pub new_arrivals_by_od: Vec<(usize, u64)>,
    pub carried_by_od: Vec<(usize, u64)>,
}

#[derive(Debug, Clone, Default)]
pub struct LoadingResult {
    pub arrivals: Vec<ArrivalSegment>,
    pub stranded: Vec<StrandedSegment>,
    /// One record per (line, run, station position), in that order. Empty
    /// unless recording was requested.
    pub records: Vec<FlowRecord>,
}

impl LoadingResult {
    /// Arrival flows `m_d^k` keyed by (destination station, OD, run).
    pub fn arrival_flows(&self, network: &Network) -> BTreeMap<(usize, usize, RunId), u64> {
        let mut m = BTreeMap::new();
        for a in &self.arrivals {
            *m.entry((network.ods[a.od].destination, a.od, a.run))
                .or_insert(0) += a.count;
        }
        m
    }

    pub fn arrived(&self, od: usize) -> u64 {
        self.arrivals.iter().filter(|a| a.od == od).map(|a| a.count).sum()
    }

    pub fn stranded_count(&self, od: usize) -> u64 {
        self.stranded.iter().filter(|s| s.od == od).map(|s| s.count).sum()
    }

    /// Arrival time of one user, `None` if stranded or not present.
    pub fn arrival_time(&self, od: usize, option: usize, user: u64) -> Option<Time> {
        self.arrivals
            .iter()
            .find(|a| {
                a.od == od && a.option == option && user >= a.user_start && user < a.user_start + a.count
            })
            .map(|a| a.time)
    }

    /// The run a user boarded on the first leg of their route.
    pub fn record(&self, network: &Network, run: RunId, pos: usize) -> Option<&FlowRecord> {
        let idx = record_index(network, run, pos);
        self.records.get(idx)
    }
}

fn record_index(network: &Network, run: RunId, pos: usize) -> usize {
    let mut base = 0;
    for (li, line) in network.lines.iter().enumerate() {
        if li == run.line {
            return base + run.index * line.stations.len() + pos;
        }
        base += line.run_count * line.stations.len();
    }
    usize::MAX
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Waiting {
    // Ordering fields first.
    time: Time,
    od: u32,
    route: u32,
    option_time: Time,
    user_start: u64,
    // Payload.
    option: u32,
    count: u64,
    leg: u32,
}

#[derive(Debug, Clone, Copy)]
struct OnBoard {
    od: u32,
    route: u32,
    option: u32,
    option_time: Time,
    user_start: u64,
    count: u64,
    leg: u32,
    alight_pos: u32,
}

#[derive(Default)]
struct Queue {
    heap: BinaryHeap<Reverse<Waiting>>,
    last_departure: Option<Time>,
    last_denied: u64,
}

fn add(v: &mut Vec<(usize, u64)>, k: usize, n: u64) {
    match v.iter_mut().find(|(o, _)| *o == k) {
        Some((_, c)) => *c += n,
        None => v.push((k, n)),
    }
}

/// Runs the network loading with flow records.
pub fn simulate(network: &Network, q: &FlowDistribution) -> Result<LoadingResult> {
    simulate_with(network, q, SimulationOptions::default())
}

pub fn simulate_with(
    network: &Network,
    q: &FlowDistribution,
    opts: SimulationOptions,
) -> Result<LoadingResult> {
    q.validate(network)?;

    let mut queues: Vec<Vec<Queue>> = network
        .lines
        .iter()
        .map(|l| (0..l.stations.len()).map(|_| Queue::default()).collect())
        .collect();
    let mut trains: Vec<Vec<(Vec<OnBoard>, u64)>> = network
        .lines
        .iter()
        .map(|l| vec![(Vec::new(), 0); l.run_count])
        .collect();

    let mut records: Vec<FlowRecord> = Vec::new();
    if opts.record_flows {
        for (li, line) in network.lines.iter().enumerate() {
            for run in &network.runs[li] {
                for (pos, &station) in line.stations.iter().enumerate() {
                    records.push(FlowRecord {
                        run: run.id,
                        pos,
                        station,
                        capacity: run.capacity,
                        ..Default::default()
                    });
                }
            }
        }
    }
    let mut record_base = Vec::with_capacity(network.lines.len());
    let mut base = 0;
    for line in &network.lines {
        record_base.push(base);
        base += line.run_count * line.stations.len();
    }

    for (k, row) in q.counts().iter().enumerate() {
        for (i, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let opt = network.options(k)[i];
            let first = network.ods[k].routes[opt.route].legs[0];
            queues[first.line][first.board_pos].heap.push(Reverse(Waiting {
                time: opt.time,
                od: k as u32,
                route: opt.route as u32,
                option_time: opt.time,
                user_start: 0,
                option: i as u32,
                count,
                leg: 0,
            }));
        }
    }

    let mut arrivals = Vec::new();
    let mut eligible: Vec<Waiting> = Vec::new();

    for ev in network.events() {
        let line = &network.lines[ev.line];
        let rec_idx = record_base[ev.line] + ev.run * line.stations.len() + ev.pos;
        match ev.kind {
            EventKind::Arrival => {
                let (groups, load) = &mut trains[ev.line][ev.run];
                let mut alighting = 0;
                let mut i = 0;
                while i < groups.len() {
                    if groups[i].alight_pos as usize != ev.pos {
                        i += 1;
                        continue;
                    }
                    let g = groups.swap_remove(i);
                    alighting += g.count;
                    if opts.record_flows {
                        add(&mut records[rec_idx].alighting_by_od, g.od as usize, g.count);
                    }
                    let legs = &network.ods[g.od as usize].routes[g.route as usize].legs;
                    let next_leg = g.leg as usize + 1;
                    if let Some(next) = legs.get(next_leg) {
                        queues[next.line][next.board_pos].heap.push(Reverse(Waiting {
                            time: ev.time,
                            od: g.od,
                            route: g.route,
                            option_time: g.option_time,
                            user_start: g.user_start,
                            option: g.option,
                            count: g.count,
                            leg: next_leg as u32,
                        }));
                    } else {
                        arrivals.push(ArrivalSegment {
                            od: g.od as usize,
                            option: g.option as usize,
                            user_start: g.user_start,
                            count: g.count,
                            time: ev.time,
                            run: RunId {
                                line: ev.line,
                                index: ev.run,
                            },
                        });
                    }
                }
                *load -= alighting;
                if opts.record_flows {
                    let r = &mut records[rec_idx];
                    r.alighting = alighting;
                    r.load_before = *load;
                    r.residual = network.runs[ev.line][ev.run].capacity.saturating_sub(*load);
                }
            }
            EventKind::Departure => {
                let capacity = network.runs[ev.line][ev.run].capacity;
                let (groups, load) = &mut trains[ev.line][ev.run];
                let queue = &mut queues[ev.line][ev.pos];
                let y = *load;
                let x = capacity.saturating_sub(y);

                eligible.clear();
                while let Some(Reverse(top)) = queue.heap.peek() {
                    if top.time > ev.time {
                        break;
                    }
                    eligible.push(queue.heap.pop().unwrap().0);
                }

                let mut remaining = x;
                let mut waiting = 0;
                let mut boarded = 0;
                let mut carried = 0;
                let record = opts.record_flows;
                for w in eligible.iter_mut() {
                    waiting += w.count;
                    let is_new = queue.last_departure.is_none_or(|t| w.time > t);
                    if !is_new {
                        carried += w.count;
                    }
                    if record {
                        let r = &mut records[rec_idx];
                        if is_new {
                            add(&mut r.new_arrivals_by_od, w.od as usize, w.count);
                        } else {
                            add(&mut r.carried_by_od, w.od as usize, w.count);
                        }
                    }
                    if remaining == 0 {
                        continue;
                    }
                    let take = remaining.min(w.count);
                    remaining -= take;
                    boarded += take;
                    let leg = network.ods[w.od as usize].routes[w.route as usize].legs[w.leg as usize];
                    groups.push(OnBoard {
                        od: w.od,
                        route: w.route,
                        option: w.option,
                        option_time: w.option_time,
                        user_start: w.user_start,
                        count: take,
                        leg: w.leg,
                        alight_pos: leg.alight_pos as u32,
                    });
                    if record {
                        add(&mut records[rec_idx].boarded_by_od, w.od as usize, take);
                    }
                    w.user_start += take;
                    w.count -= take;
                }
                let denied = waiting - boarded;
                for w in eligible.drain(..) {
                    if w.count > 0 {
                        if record {
                            add(&mut records[rec_idx].denied_by_od, w.od as usize, w.count);
                        }
                        queue.heap.push(Reverse(w));
                    }
                }
                queue.last_departure = Some(ev.time);
                queue.last_denied = denied;
                *load = y + boarded;

                if record {
                    let r = &mut records[rec_idx];
                    r.load_before = y;
                    r.residual = x;
                    r.waiting = waiting;
                    r.boarded = boarded;
                    r.denied = denied;
                    r.departing_load = y + boarded;
                    r.carried_over = carried;
                    r.new_arrivals = waiting - carried;
                }
            }
        }
    }

    let mut stranded = Vec::new();
    for (li, line) in network.lines.iter().enumerate() {
        for (pos, queue) in queues[li].iter_mut().enumerate() {
            let mut rest: Vec<Waiting> = queue.heap.drain().map(|r| r.0).collect();
            rest.sort();
            for w in rest {
                stranded.push(StrandedSegment {
                    od: w.od as usize,
                    option: w.option as usize,
                    user_start: w.user_start,
                    count: w.count,
                    station: line.stations[pos],
                    line: li,
                });
            }
        }
    }

    if opts.record_flows {
        for r in &mut records {
            for v in [
                &mut r.boarded_by_od,
                &mut r.denied_by_od,
                &mut r.alighting_by_od,
                &mut r.new_arrivals_by_od,
                &mut r.carried_by_od,
            ] {
                v.sort_unstable();
            }
        }
    }

    Ok(LoadingResult {
        arrivals,
        stranded,
        records,
    })
}

/// Outcome of sending a single user through an empty network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    Completed { wait: Time, arrival: Time },
    Stranded,
}

/// Traverses the route of an option assuming unlimited capacity: the user
/// boards the option's run, then the earliest connecting run at each transfer.
pub fn free_flow_probe(network: &Network, od: usize, option: usize) -> Probe {
    let opt = network.options(od)[option];
    let legs = &network.ods[od].routes[opt.route].legs;
    let mut run = opt.run;
    let mut wait = 0;
    for (i, leg) in legs.iter().enumerate() {
        let arrive = network.runs[leg.line][run].arrivals[leg.alight_pos];
        match legs.get(i + 1) {
            None => return Probe::Completed { wait, arrival: arrive },
            Some(next) => match network.next_departure(next.line, next.board_pos, arrive) {
                Some(j) => {
                    wait += network.runs[next.line][j].departures[next.board_pos] - arrive;
                    run = j;
                }
                None => return Probe::Stranded,
            },
        }
    }
    unreachable!("routes have at least one leg")
}

/// Writes `run,station,time,g,f,h,z,m,x,y` per flow record.
pub fn write_trace_csv<W: Write>(network: &Network, result: &LoadingResult, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(["run", "station", "time", "g", "f", "h", "z", "m", "x", "y"])?;
    for r in &result.records {
        let run = network.run(r.run);
        let time = if r.pos + 1 < run.departures.len() {
            run.departures[r.pos]
        } else {
            run.arrivals[r.pos]
        };
        w.write_record([
            network.run_label(r.run),
            network.stations[r.station].id.clone(),
            time.to_string(),
            r.waiting.to_string(),
            r.boarded.to_string(),
            r.denied.to_string(),
            r.departing_load.to_string(),
            r.alighting.to_string(),
            r.residual.to_string(),
            r.load_before.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{
        LegDescription, LineDescription, NetworkDescription, OdDescription, RouteDescription,
        StationDescription, StationKind,
    };

    fn single_line(capacity: u64, runs: usize, demand: u64) -> Network {
        use StationKind::*;
        Network::new(NetworkDescription {
            name: "single".into(),
            stations: vec![
                StationDescription { id: "O".into(), name: None, kinds: vec![Origin] },
                StationDescription { id: "D".into(), name: None, kinds: vec![Destination] },
            ],
            lines: vec![LineDescription {
                id: "L".into(),
                stations: vec!["O".into(), "D".into()],
                headway: 300,
                first_departure: 18000,
                run_count: runs,
                capacity,
                segment_times: vec![1200],
                dwell_times: vec![],
                capacity_overrides: Default::default(),
            }],
            od_demand: vec![OdDescription {
                id: "O-D".into(),
                origin: "O".into(),
                destination: "D".into(),
                demand,
                preferred_departure: 18000,
                desired_arrival: 32400,
            }],
            routes: vec![RouteDescription {
                od: "O-D".into(),
                id: "r".into(),
                legs: vec![LegDescription { line: "L".into(), board: "O".into(), alight: "D".into() }],
            }],
            initial_settings: None,
        })
        .unwrap()
    }

    #[test]
    fn fcfs_queue_hand_enumerated() {
        // Demand 5 on the first run, capacity 2, three runs: boards 2, 2, 1.
        let net = single_line(2, 3, 5);
        let mut q = FlowDistribution::zeros(&net);
        q.set(0, 0, 5);
        let res = simulate(&net, &q).unwrap();
        let origin: Vec<_> = (0..3)
            .map(|j| res.record(&net, RunId { line: 0, index: j }, 0).unwrap().clone())
            .collect();
        assert_eq!(origin.iter().map(|r| r.boarded).collect::<Vec<_>>(), vec![2, 2, 1]);
        assert_eq!(origin.iter().map(|r| r.denied).collect::<Vec<_>>(), vec![3, 1, 0]);
        assert_eq!(origin[1].carried_over, 3);
        assert_eq!(origin[1].new_arrivals, 0);
        // Lower user indices board first.
        assert_eq!(res.arrival_time(0, 0, 0), Some(19200));
        assert_eq!(res.arrival_time(0, 0, 1), Some(19200));
        assert_eq!(res.arrival_time(0, 0, 2), Some(19500));
        assert_eq!(res.arrival_time(0, 0, 4), Some(19800));
        assert!(res.stranded.is_empty());
    }

    #[test]
    fn zero_demand_is_inert() {
        let net = single_line(2, 3, 0);
        let res = simulate(&net, &FlowDistribution::zeros(&net)).unwrap();
        assert!(res.arrivals.is_empty());
        assert!(res.stranded.is_empty());
        assert!(res
            .records
            .iter()
            .all(|r| r.waiting == 0 && r.boarded == 0 && r.alighting == 0 && r.departing_load == 0));
    }

    #[test]
    fn users_past_the_last_run_are_stranded() {
        let net = single_line(2, 2, 5);
        let mut q = FlowDistribution::zeros(&net);
        q.set(0, 1, 5);
        let res = simulate(&net, &q).unwrap();
        assert_eq!(res.arrived(0), 2);
        assert_eq!(res.stranded_count(0), 3);
        assert_eq!(res.stranded[0].user_start, 2);
    }

    #[test]
    fn rejects_mismatched_distribution() {
        let net = single_line(2, 3, 5);
        assert!(simulate(&net, &FlowDistribution::zeros(&net)).is_err());
    }

    #[test]
    fn direct_probe_has_no_wait() {
        let net = single_line(2, 3, 5);
        assert_eq!(
            free_flow_probe(&net, 0, 1),
            Probe::Completed { wait: 0, arrival: 19500 }
        );
    }
}
