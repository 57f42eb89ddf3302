//! Schedule-based multi-line network: stations, lines, timetabled runs, OD
//! demand with fixed route sets, and the quantities derived from the
//! timetable (departure-time options, transfer connections, in-vehicle times).
//!
//! A [`Network`] is built from a [`NetworkDescription`] (the JSON file
//! format) and is immutable afterwards, so it can be shared freely between
//! concurrent simulations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seconds since midnight.
pub type Time = i64;

/// Formats seconds-since-midnight as `HH:MM:SS`.
pub fn format_clock(t: Time) -> String {
    let sign = if t < 0 { "-" } else { "" };
    let t = t.abs();
    format!("{sign}{:02}:{:02}:{:02}", t / 3600, (t / 60) % 60, t % 60)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationKind {
    Origin,
    Transfer,
    Destination,
    Intermediate,
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDescription {
    #[serde(default)]
    pub name: String,
    pub stations: Vec<StationDescription>,
    pub lines: Vec<LineDescription>,
    pub od_demand: Vec<OdDescription>,
    pub routes: Vec<RouteDescription>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_settings: Option<InitialWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationDescription {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kinds: Vec<StationKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineDescription {
    pub id: String,
    pub stations: Vec<String>,
    pub headway: Time,
    pub first_departure: Time,
    pub run_count: usize,
    pub capacity: u64,
    pub segment_times: Vec<Time>,
    /// Empty means zero dwell everywhere.
    #[serde(default)]
    pub dwell_times: Vec<Time>,
    /// Per-run capacity exceptions keyed by run index.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub capacity_overrides: BTreeMap<usize, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdDescription {
    pub id: String,
    pub origin: String,
    pub destination: String,
    pub demand: u64,
    pub preferred_departure: Time,
    pub desired_arrival: Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteDescription {
    pub od: String,
    pub id: String,
    pub legs: Vec<LegDescription>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegDescription {
    pub line: String,
    pub board: String,
    pub alight: String,
}

/// Bounds used when generating initial flow distributions. Any bound left out
/// defaults to the first or last option of the OD.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialWindow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub earliest: Option<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latest: Option<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_end: Option<Time>,
}

// ---------------------------------------------------------------------------
// Validated model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Station {
    pub id: String,
    pub name: Option<String>,
    pub kinds: BTreeSet<StationKind>,
    /// Lines serving this station, by index.
    pub lines: Vec<usize>,
}

impl Station {
    pub fn is(&self, kind: StationKind) -> bool {
        self.kinds.contains(&kind)
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.id)
    }
}

#[derive(Debug, Clone)]
pub struct Line {
    pub id: String,
    pub stations: Vec<usize>,
    pub headway: Time,
    pub first_departure: Time,
    pub run_count: usize,
    pub capacity: u64,
    pub segment_times: Vec<Time>,
    pub dwell_times: Vec<Time>,
    pub capacity_overrides: BTreeMap<usize, u64>,
    /// Arrival time at each station relative to the departure from the first.
    pub arrival_offsets: Vec<Time>,
    /// Departure time from each station relative to the departure from the first.
    pub departure_offsets: Vec<Time>,
}

impl Line {
    pub fn position(&self, station: usize) -> Option<usize> {
        self.stations.iter().position(|&s| s == station)
    }

    pub fn run_capacity(&self, run: usize) -> u64 {
        self.capacity_overrides
            .get(&run)
            .copied()
            .unwrap_or(self.capacity)
    }

    /// Expands headway, first departure and run count into explicit runs.
    pub fn build_runs(&self, line_index: usize) -> Vec<TrainRun> {
        (0..self.run_count)
            .map(|j| {
                let start = self.first_departure + j as Time * self.headway;
                TrainRun {
                    id: RunId {
                        line: line_index,
                        index: j,
                    },
                    arrivals: self.arrival_offsets.iter().map(|o| start + o).collect(),
                    departures: self.departure_offsets.iter().map(|o| start + o).collect(),
                    capacity: self.run_capacity(j),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunId {
    pub line: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainRun {
    pub id: RunId,
    /// Per station position along the line.
    pub arrivals: Vec<Time>,
    pub departures: Vec<Time>,
    pub capacity: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Leg {
    pub line: usize,
    pub board: usize,
    pub alight: usize,
    pub board_pos: usize,
    pub alight_pos: usize,
}

#[derive(Debug, Clone)]
pub struct Route {
    pub id: String,
    pub legs: Vec<Leg>,
    /// Scheduled on-board time summed over legs; identical for every run
    /// because all runs of a line share the same offsets.
    pub in_vehicle: Time,
}

#[derive(Debug, Clone)]
pub struct OdPair {
    pub id: String,
    pub origin: usize,
    pub destination: usize,
    pub demand: u64,
    pub preferred_departure: Time,
    pub desired_arrival: Time,
    pub routes: Vec<Route>,
}

/// A departure-time option: route plus the run of the route's first line,
/// identified by its departure time at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OptionKey {
    pub time: Time,
    pub route: usize,
    pub run: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Arrival,
    Departure,
}

/// A run arriving at or departing from the station at `pos` on its line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub time: Time,
    pub kind: EventKind,
    pub line: usize,
    pub run: usize,
    pub pos: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferConnection {
    pub station: usize,
    pub arriving: RunId,
    /// The earliest run of the next leg's line departing at or after the
    /// arrival; `None` when the arriving users would be stranded.
    pub departing: Option<RunId>,
    pub od: usize,
    pub route: usize,
    /// Index of the leg being left.
    pub leg: usize,
}

impl TransferConnection {
    pub fn indicator(&self) -> bool {
        self.departing.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    pub name: String,
    pub stations: Vec<Station>,
    pub lines: Vec<Line>,
    pub runs: Vec<Vec<TrainRun>>,
    pub ods: Vec<OdPair>,
    pub initial_window: InitialWindow,
    options: Vec<Vec<OptionKey>>,
    events: Vec<Event>,
    description: NetworkDescription,
}

impl Network {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let description: NetworkDescription = serde_json::from_str(text)?;
        Self::new(description)
    }

    pub fn new(description: NetworkDescription) -> Result<Self> {
        let d = &description;
        let mut station_index = HashMap::new();
        let mut stations = Vec::with_capacity(d.stations.len());
        for (i, s) in d.stations.iter().enumerate() {
            if s.id.is_empty() {
                return Err(Error::InvalidNetwork("empty station id".into()));
            }
            if station_index.insert(s.id.as_str(), i).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate station id {}", s.id)));
            }
            stations.push(Station {
                id: s.id.clone(),
                name: s.name.clone(),
                kinds: s.kinds.iter().copied().collect(),
                lines: Vec::new(),
            });
        }
        let lookup_station = |id: &str| -> Result<usize> {
            station_index
                .get(id)
                .copied()
                .ok_or_else(|| Error::InvalidNetwork(format!("unknown station {id}")))
        };

        let mut line_index = HashMap::new();
        let mut lines = Vec::with_capacity(d.lines.len());
        for (li, l) in d.lines.iter().enumerate() {
            if line_index.insert(l.id.as_str(), li).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate line id {}", l.id)));
            }
            let seq = l
                .stations
                .iter()
                .map(|s| lookup_station(s))
                .collect::<Result<Vec<_>>>()?;
            let line = validate_line(l, seq)?;
            for &s in &line.stations {
                stations[s].lines.push(li);
            }
            lines.push(line);
        }
        for s in &stations {
            if s.is(StationKind::Transfer) && s.lines.len() < 2 {
                return Err(Error::InvalidNetwork(format!(
                    "transfer station {} is served by {} line(s)",
                    s.id,
                    s.lines.len()
                )));
            }
        }

        let runs: Vec<Vec<TrainRun>> = lines
            .iter()
            .enumerate()
            .map(|(i, l)| l.build_runs(i))
            .collect();

        let mut od_index = HashMap::new();
        let mut ods = Vec::with_capacity(d.od_demand.len());
        for (k, od) in d.od_demand.iter().enumerate() {
            if od_index.insert(od.id.as_str(), k).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate OD id {}", od.id)));
            }
            let origin = lookup_station(&od.origin)?;
            let destination = lookup_station(&od.destination)?;
            if origin == destination {
                return Err(Error::InvalidNetwork(format!(
                    "OD {} has identical origin and destination",
                    od.id
                )));
            }
            if !stations[origin].is(StationKind::Origin) {
                return Err(Error::InvalidNetwork(format!(
                    "OD {} origin {} is not an origin station",
                    od.id, od.origin
                )));
            }
            if !stations[destination].is(StationKind::Destination) {
                return Err(Error::InvalidNetwork(format!(
                    "OD {} destination {} is not a destination station",
                    od.id, od.destination
                )));
            }
            ods.push(OdPair {
                id: od.id.clone(),
                origin,
                destination,
                demand: od.demand,
                preferred_departure: od.preferred_departure,
                desired_arrival: od.desired_arrival,
                routes: Vec::new(),
            });
        }

        for r in &d.routes {
            let k = *od_index.get(r.od.as_str()).ok_or_else(|| {
                Error::InvalidNetwork(format!("route {} references unknown OD {}", r.id, r.od))
            })?;
            let route = validate_route(r, &ods[k], &stations, &lines, &line_index, &station_index)?;
            if ods[k].routes.iter().any(|x| x.id == route.id) {
                return Err(Error::InvalidRoute {
                    od: r.od.clone(),
                    route: r.id.clone(),
                    reason: "duplicate route id".into(),
                });
            }
            ods[k].routes.push(route);
        }
        if let Some(od) = ods.iter().find(|od| od.routes.is_empty()) {
            return Err(Error::InvalidNetwork(format!("OD {} has no routes", od.id)));
        }

        let options = ods
            .iter()
            .map(|od| {
                let mut opts: Vec<OptionKey> = od
                    .routes
                    .iter()
                    .enumerate()
                    .flat_map(|(ri, route)| {
                        let first = route.legs[0];
                        runs[first.line].iter().map(move |run| OptionKey {
                            time: run.departures[first.board_pos],
                            route: ri,
                            run: run.id.index,
                        })
                    })
                    .collect();
                opts.sort();
                opts
            })
            .collect();

        let mut events = Vec::new();
        for (li, line) in lines.iter().enumerate() {
            let last = line.stations.len() - 1;
            for run in &runs[li] {
                for pos in 0..=last {
                    if pos > 0 {
                        events.push(Event {
                            time: run.arrivals[pos],
                            kind: EventKind::Arrival,
                            line: li,
                            run: run.id.index,
                            pos,
                        });
                    }
                    if pos < last {
                        events.push(Event {
                            time: run.departures[pos],
                            kind: EventKind::Departure,
                            line: li,
                            run: run.id.index,
                            pos,
                        });
                    }
                }
            }
        }
        events.sort();

        Ok(Network {
            name: d.name.clone(),
            stations,
            lines,
            runs,
            ods,
            initial_window: d.initial_settings.unwrap_or_default(),
            options,
            events,
            description,
        })
    }

    pub fn description(&self) -> &NetworkDescription {
        &self.description
    }

    /// Departure-time options of OD `od`, sorted by (time, route, run).
    pub fn options(&self, od: usize) -> &[OptionKey] {
        &self.options[od]
    }

    pub fn option_index(&self, od: usize, route: usize, time: Time) -> Option<usize> {
        self.options[od]
            .iter()
            .position(|o| o.route == route && o.time == time)
    }

    pub fn route_index(&self, od: usize, route_id: &str) -> Option<usize> {
        self.ods[od].routes.iter().position(|r| r.id == route_id)
    }

    pub fn od_index(&self, id: &str) -> Option<usize> {
        self.ods.iter().position(|od| od.id == id)
    }

    pub fn station_index(&self, id: &str) -> Option<usize> {
        self.stations.iter().position(|s| s.id == id)
    }

    /// Events in processing order: time, then arrivals before departures.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn run(&self, id: RunId) -> &TrainRun {
        &self.runs[id.line][id.index]
    }

    pub fn run_label(&self, id: RunId) -> String {
        format!("{}:{}", self.lines[id.line].id, id.index)
    }

    pub fn total_demand(&self) -> u64 {
        self.ods.iter().map(|od| od.demand).sum()
    }

    /// Earliest run of `line` departing the station at `pos` no earlier
    /// than `time` (boundary inclusive).
    pub fn next_departure(&self, line: usize, pos: usize, time: Time) -> Option<usize> {
        let runs = &self.runs[line];
        let j = runs.partition_point(|r| r.departures[pos] < time);
        (j < runs.len()).then_some(j)
    }

    /// Returns a copy of this network with every OD demand replaced.
    pub fn with_demands(&self, demands: &[u64]) -> Result<Network> {
        if demands.len() != self.ods.len() {
            return Err(Error::InvalidNetwork(format!(
                "expected {} demands, got {}",
                self.ods.len(),
                demands.len()
            )));
        }
        let mut d = self.description.clone();
        for (od, &q) in d.od_demand.iter_mut().zip(demands) {
            od.demand = q;
        }
        Network::new(d)
    }

    /// Scheduled on-board time of a route when boarding `run` on its first
    /// leg, following the earliest connections. Fails if the route cannot be
    /// completed from that run.
    pub fn in_vehicle_time(&self, od: usize, route: usize, run: usize) -> Result<Time> {
        let r = &self.ods[od].routes[route];
        let mut current = run;
        let mut total = 0;
        for (i, leg) in r.legs.iter().enumerate() {
            let t = &self.runs[leg.line][current];
            total += t.arrivals[leg.alight_pos] - t.departures[leg.board_pos];
            if let Some(next) = r.legs.get(i + 1) {
                let arrive = t.arrivals[leg.alight_pos];
                current = self
                    .next_departure(next.line, next.board_pos, arrive)
                    .ok_or_else(|| Error::NoPath {
                        od: self.ods[od].id.clone(),
                        route: r.id.clone(),
                        run,
                    })?;
            }
        }
        Ok(total)
    }

    /// Idempotent re-validation: rebuilding from the stored description
    /// yields the same network.
    pub fn validate(&self) -> Result<Network> {
        Network::new(self.description.clone())
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} stations, {} lines, {} runs, {} ODs, demand {})",
            if self.name.is_empty() { "network" } else { &self.name },
            self.stations.len(),
            self.lines.len(),
            self.runs.iter().map(Vec::len).sum::<usize>(),
            self.ods.len(),
            self.total_demand()
        )
    }
}

fn schedule_error(line: &str, reason: impl Into<String>) -> Error {
    Error::ScheduleInconsistent {
        line: line.to_string(),
        reason: reason.into(),
    }
}

fn validate_line(l: &LineDescription, seq: Vec<usize>) -> Result<Line> {
    let n = seq.len();
    if n < 2 {
        return Err(schedule_error(&l.id, "needs at least two stations"));
    }
    let distinct: BTreeSet<_> = seq.iter().collect();
    if distinct.len() != n {
        return Err(schedule_error(&l.id, "station sequence repeats a station"));
    }
    if l.capacity < 1 {
        return Err(schedule_error(&l.id, "capacity must be at least 1"));
    }
    if l.headway < 1 {
        return Err(schedule_error(&l.id, "headway must be at least 1 s"));
    }
    if l.run_count < 1 {
        return Err(schedule_error(&l.id, "run count must be positive"));
    }
    if l.segment_times.len() != n - 1 {
        return Err(schedule_error(
            &l.id,
            format!("expected {} segment times, got {}", n - 1, l.segment_times.len()),
        ));
    }
    if l.segment_times.iter().any(|&s| s < 1) {
        return Err(schedule_error(&l.id, "segment times must be at least 1 s"));
    }
    let dwell = if l.dwell_times.is_empty() {
        vec![0; n]
    } else {
        l.dwell_times.clone()
    };
    if dwell.len() != n {
        return Err(schedule_error(
            &l.id,
            format!("expected {n} dwell times, got {}", dwell.len()),
        ));
    }
    if dwell.iter().any(|&w| w < 0) {
        return Err(schedule_error(&l.id, "dwell times must be non-negative"));
    }
    // A run still at the platform when its successor arrives would overlap it.
    if let Some(pos) = dwell.iter().position(|&w| w >= l.headway) {
        return Err(schedule_error(
            &l.id,
            format!(
                "dwell {} s at position {pos} is not shorter than the headway {} s; consecutive runs overlap",
                dwell[pos], l.headway
            ),
        ));
    }
    for (&run, &cap) in &l.capacity_overrides {
        if run >= l.run_count {
            return Err(schedule_error(
                &l.id,
                format!("capacity override for nonexistent run {run}"),
            ));
        }
        if cap < 1 {
            return Err(schedule_error(&l.id, "capacity override must be at least 1"));
        }
    }

    let mut arrival_offsets = vec![0; n];
    let mut departure_offsets = vec![0; n];
    arrival_offsets[0] = -dwell[0];
    for p in 1..n {
        arrival_offsets[p] = departure_offsets[p - 1] + l.segment_times[p - 1];
        departure_offsets[p] = arrival_offsets[p] + dwell[p];
    }

    Ok(Line {
        id: l.id.clone(),
        stations: seq,
        headway: l.headway,
        first_departure: l.first_departure,
        run_count: l.run_count,
        capacity: l.capacity,
        segment_times: l.segment_times.clone(),
        dwell_times: dwell,
        capacity_overrides: l.capacity_overrides.clone(),
        arrival_offsets,
        departure_offsets,
    })
}

fn validate_route(
    r: &RouteDescription,
    od: &OdPair,
    stations: &[Station],
    lines: &[Line],
    line_index: &HashMap<&str, usize>,
    station_index: &HashMap<&str, usize>,
) -> Result<Route> {
    let fail = |reason: String| Error::InvalidRoute {
        od: r.od.clone(),
        route: r.id.clone(),
        reason,
    };
    if r.legs.is_empty() {
        return Err(fail("route has no legs".into()));
    }
    let mut legs = Vec::with_capacity(r.legs.len());
    for leg in &r.legs {
        let li = *line_index
            .get(leg.line.as_str())
            .ok_or_else(|| fail(format!("unknown line {}", leg.line)))?;
        let board = *station_index
            .get(leg.board.as_str())
            .ok_or_else(|| fail(format!("unknown station {}", leg.board)))?;
        let alight = *station_index
            .get(leg.alight.as_str())
            .ok_or_else(|| fail(format!("unknown station {}", leg.alight)))?;
        let line = &lines[li];
        let board_pos = line
            .position(board)
            .ok_or_else(|| fail(format!("line {} does not serve {}", line.id, leg.board)))?;
        let alight_pos = line
            .position(alight)
            .ok_or_else(|| fail(format!("line {} does not serve {}", line.id, leg.alight)))?;
        if board_pos >= alight_pos {
            return Err(fail(format!(
                "line {} reaches {} before {}",
                line.id, leg.alight, leg.board
            )));
        }
        legs.push(Leg {
            line: li,
            board,
            alight,
            board_pos,
            alight_pos,
        });
    }
    if legs[0].board != od.origin {
        return Err(fail("first leg does not board at the OD origin".into()));
    }
    if legs[legs.len() - 1].alight != od.destination {
        return Err(fail("last leg does not alight at the OD destination".into()));
    }
    for pair in legs.windows(2) {
        if pair[0].alight != pair[1].board {
            return Err(fail(format!(
                "leg alights at {} but next leg boards at {}",
                stations[pair[0].alight].id, stations[pair[1].board].id
            )));
        }
        if !stations[pair[0].alight].is(StationKind::Transfer) {
            return Err(fail(format!(
                "{} is not a transfer station",
                stations[pair[0].alight].id
            )));
        }
    }
    let in_vehicle = legs
        .iter()
        .map(|leg| {
            let line = &lines[leg.line];
            line.arrival_offsets[leg.alight_pos] - line.departure_offsets[leg.board_pos]
        })
        .sum();
    Ok(Route {
        id: r.id.clone(),
        legs,
        in_vehicle,
    })
}

/// Validates every line of a description and emits its runs.
pub fn build_timetable(description: &NetworkDescription) -> Result<Vec<TrainRun>> {
    let index: HashMap<&str, usize> = description
        .stations
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let mut out = Vec::new();
    for (li, l) in description.lines.iter().enumerate() {
        let seq = l
            .stations
            .iter()
            .map(|s| {
                index
                    .get(s.as_str())
                    .copied()
                    .ok_or_else(|| Error::InvalidNetwork(format!("unknown station {s}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(validate_line(l, seq)?.build_runs(li));
    }
    Ok(out)
}

/// For every (OD, route, transfer point, arriving run) the earliest feasible
/// departing run of the next leg's line.
pub fn derive_transfer_connections(network: &Network) -> Vec<TransferConnection> {
    let mut out = Vec::new();
    for (k, od) in network.ods.iter().enumerate() {
        for (ri, route) in od.routes.iter().enumerate() {
            for (i, pair) in route.legs.windows(2).enumerate() {
                let (from, to) = (pair[0], pair[1]);
                for run in &network.runs[from.line] {
                    let arrive = run.arrivals[from.alight_pos];
                    let departing = network
                        .next_departure(to.line, to.board_pos, arrive)
                        .map(|index| RunId {
                            line: to.line,
                            index,
                        });
                    out.push(TransferConnection {
                        station: from.alight,
                        arriving: run.id,
                        departing,
                        od: k,
                        route: ri,
                        leg: i,
                    });
                }
            }
        }
    }
    out
}
