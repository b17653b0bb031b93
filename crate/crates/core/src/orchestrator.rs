//! End-to-end scenario runner.
//!
//! `store` encodes a payload, writes the strand at a photochemical write
//! station and moves it to its parking spot. `fetch` routes the strand to
//! its station, records its translocation, decodes the trace and returns
//! the strand to its spot. `erase` destroys the strand and frees the spot.
//!
//! Strands are written as runs of identical bases, one run per payload
//! symbol, each run at least one channel window long so the segment-level
//! decoder can read it. Spots are dealt round-robin to stations; each
//! station serves its own commands first-in first-out, and stations run
//! independently.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chip::{compute_route, layout_report, ChipLayout, RouteDirection};
use crate::codec::{decode_block, encode_bytes, Base, BaseSequence};
use crate::decoder::{decode_segmented_event, detect_events, symbol_error_rate, DetectorParams};
use crate::error::{Error, Result};
use crate::readout::{channel_window, synthesize_trace, AcquisitionParams, CurrentTrace, PoreModel, ScheduledEvent};
use crate::rng;
use crate::transport::{access_time, FieldParams, FluidParams, ParticleModel, TransportMode};
use crate::write::{PhotochemicalStation, StationConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum Command {
    Store { address: u64, payload: Vec<u8> },
    Fetch { address: u64 },
    Erase { address: u64 },
}

impl Command {
    pub fn address(&self) -> u64 {
        match self {
            Command::Store { address, .. } | Command::Fetch { address } | Command::Erase { address } => *address,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Command::Store { .. } => "store",
            Command::Fetch { .. } => "fetch",
            Command::Erase { .. } => "erase",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub station_overhead_s: f64,
    /// Bases per payload symbol; defaults to twice the channel window.
    pub run_length: Option<usize>,
    /// Open-pore time recorded before each strand, µs. Defaults to one
    /// baseline window.
    pub lead_open_us: Option<f64>,
    pub layout: ChipLayout,
    pub pore: PoreModel,
    pub acquisition: AcquisitionParams,
    pub detector: DetectorParams,
    pub transport: TransportMode,
    pub fluid: FluidParams,
    pub particle: ParticleModel,
    pub field: FieldParams,
    pub write: StationConfig,
    #[serde(skip)]
    pub workload: Vec<Command>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            seed: 0,
            station_overhead_s: 0.0,
            run_length: None,
            lead_open_us: None,
            layout: ChipLayout::default(),
            pore: PoreModel::default(),
            acquisition: AcquisitionParams::default(),
            detector: DetectorParams::default(),
            transport: TransportMode::default(),
            fluid: FluidParams::default(),
            particle: ParticleModel::default(),
            field: FieldParams::default(),
            write: StationConfig::default(),
            workload: Vec::new(),
        }
    }
}

impl Scenario {
    pub fn run_length(&self) -> usize {
        self.run_length.unwrap_or(2 * channel_window(&self.pore))
    }

    fn lead_open_us(&self) -> f64 {
        self.lead_open_us
            .unwrap_or(self.detector.baseline_window as f64 * self.acquisition.sample_interval_us)
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate_addressable()?;
        self.pore.validate()?;
        self.acquisition.validate()?;
        self.detector.validate()?;
        let window = channel_window(&self.pore);
        if self.run_length() < window {
            return Err(Error::Scenario(format!(
                "run_length {} is shorter than the {window}-base channel window",
                self.run_length()
            )));
        }
        if self.station_overhead_s < 0.0 {
            return Err(Error::Scenario("station_overhead_s must be non-negative".into()));
        }
        Ok(())
    }

    /// Parses a scenario file: TOML settings, then a `[commands]` line
    /// followed by one command per line.
    ///
    /// ```text
    /// seed = 7
    /// [layout]
    /// spot_count = 16
    /// [commands]
    /// store 3 hex:1b2c
    /// store 4 text:hello world
    /// store 5 random:250
    /// fetch 3
    /// erase 3
    /// ```
    pub fn parse(text: &str) -> Result<Scenario> {
        let (settings, commands) = split_commands(text);
        let mut scenario: Scenario = crate::config::parse_kv(settings)?;
        for (n, line) in commands.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let index = scenario.workload.len() as u64;
            let cmd = parse_command(line, scenario.seed, index)
                .map_err(|e| Error::Scenario(format!("command line {}: {e}", n + 1)))?;
            scenario.workload.push(cmd);
        }
        Ok(scenario)
    }
}

fn split_commands(text: &str) -> (&str, &str) {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim() == "[commands]" {
            return (&text[..offset], &text[offset + line.len()..]);
        }
        offset += line.len();
    }
    (text, "")
}

fn parse_command(line: &str, seed: u64, index: u64) -> std::result::Result<Command, String> {
    let mut parts = line.splitn(3, char::is_whitespace);
    let op = parts.next().unwrap_or_default();
    let address: u64 = parts
        .next()
        .ok_or("missing address")?
        .parse()
        .map_err(|e| format!("bad address: {e}"))?;
    match op {
        "fetch" => Ok(Command::Fetch { address }),
        "erase" => Ok(Command::Erase { address }),
        "store" => {
            let spec = parts.next().ok_or("missing payload")?.trim_start();
            let payload = if let Some(h) = spec.strip_prefix("hex:") {
                parse_hex(h.trim())?
            } else if let Some(t) = spec.strip_prefix("text:") {
                t.as_bytes().to_vec()
            } else if let Some(n) = spec.strip_prefix("random:") {
                let n: usize = n.trim().parse().map_err(|e| format!("bad random length: {e}"))?;
                let mut r = rng::stream(rng::derive_seed(seed, index), 0);
                (0..n).map(|_| r.random()).collect()
            } else {
                return Err(format!("unknown payload form {spec:?}"));
            };
            Ok(Command::Store { address, payload })
        }
        other => Err(format!("unknown command {other:?}")),
    }
}

fn parse_hex(s: &str) -> std::result::Result<Vec<u8>, String> {
    if !s.is_ascii() || !s.len().is_multiple_of(2) {
        return Err("hex payload needs an even number of ASCII digits".into());
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(|e| format!("bad hex: {e}")))
        .collect()
}

/// Repeats every base `run_length` times.
pub fn expand_runs(symbols: &BaseSequence, run_length: usize) -> BaseSequence {
    symbols.iter().flat_map(|b| std::iter::repeat_n(b, run_length)).collect()
}

/// Aggregate throughput of several stations serving disjoint spots.
pub fn parallel_station_rate(station_count: u32, per_station_rate: f64) -> Result<f64> {
    if station_count == 0 {
        return Err(Error::Domain("at least one station is required".into()));
    }
    Ok(f64::from(station_count) * per_station_rate)
}

/// Read rate of one station when every base takes the shortest calibrated
/// dwell, bits/s.
pub fn dwell_limited_rate(pore: &PoreModel) -> f64 {
    let fastest_us = Base::ALL
        .iter()
        .flat_map(|&b| crate::readout::TranslocationDirection::BOTH.map(|d| pore.dwell_us(b, d)))
        .fold(f64::INFINITY, f64::min);
    2.0 / (fastest_us * 1e-6)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandReport {
    pub index: usize,
    pub kind: String,
    pub address: u64,
    pub station: u32,
    pub latency_s: Option<f64>,
    pub access_time_s: Option<f64>,
    pub readout_s: Option<f64>,
    pub payload_ok: Option<bool>,
    pub symbol_error_rate: Option<f64>,
    pub error: Option<String>,
}

impl CommandReport {
    fn new(index: usize, cmd: &Command, station: u32) -> Self {
        CommandReport {
            index,
            kind: cmd.kind().to_string(),
            address: cmd.address(),
            station,
            latency_s: None,
            access_time_s: None,
            readout_s: None,
            payload_ok: None,
            symbol_error_rate: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityFigures {
    pub areal_bytes_per_cm2: f64,
    pub volumetric_bytes_per_cm3: f64,
    /// Two bits per base, the ceiling for per-base encodings.
    pub bits_per_base_ceiling: f64,
    /// What the run-length segment encoding achieves.
    pub bits_per_base_segmented: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub commands: Vec<CommandReport>,
    pub payload_checks_passed: usize,
    pub payload_checks_failed: usize,
    pub makespan_s: f64,
    /// Fetched payload bits over the makespan.
    pub aggregate_data_rate_bps: f64,
    /// Dwell-limited per-base read rate of one station.
    pub per_station_rate_bps: f64,
    pub station_ceiling_bps: f64,
    /// Per-station rate once each symbol costs a full run.
    pub segmented_rate_bps: f64,
    /// Only order-of-magnitude agreement with "a few megabits per second"
    /// is meaningful.
    pub rate_within_order_of_magnitude_of_megabit: bool,
    /// Fraction of the makespan each station spends reading.
    pub station_utilization: Vec<f64>,
    pub density: DensityFigures,
}

impl RunReport {
    pub fn all_payloads_ok(&self) -> bool {
        self.payload_checks_failed == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub parallel: bool,
    pub keep_traces: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: RunReport,
    /// Fetch traces keyed by command index, when requested.
    pub traces: Vec<(usize, CurrentTrace)>,
}

struct Parked {
    payload: Vec<u8>,
    symbols: BaseSequence,
    strand: BaseSequence,
}

struct StationOutcome {
    reports: Vec<CommandReport>,
    traces: Vec<(usize, CurrentTrace)>,
    clock_s: f64,
    readout_s: f64,
    fetched_bits: f64,
}

pub fn run(scenario: &Scenario) -> Result<RunReport> {
    Ok(run_with(scenario, RunOptions::default())?.report)
}

pub fn run_with(scenario: &Scenario, options: RunOptions) -> Result<RunOutput> {
    scenario.validate()?;
    let layout = &scenario.layout;
    let stations = layout.station_count;

    let mut queues: Vec<Vec<(usize, &Command)>> = vec![Vec::new(); stations as usize];
    for (i, cmd) in scenario.workload.iter().enumerate() {
        queues[layout.station_for(cmd.address()) as usize].push((i, cmd));
    }
    let work = |(station, queue): (usize, &Vec<(usize, &Command)>)| {
        run_station(scenario, station as u32, queue, options.keep_traces)
    };
    let outcomes: Vec<StationOutcome> = if options.parallel {
        queues.par_iter().enumerate().map(work).collect()
    } else {
        queues.iter().enumerate().map(work).collect()
    };

    let makespan_s = outcomes.iter().map(|o| o.clock_s).fold(0.0, f64::max);
    let fetched_bits: f64 = outcomes.iter().map(|o| o.fetched_bits).sum();
    let station_utilization = outcomes
        .iter()
        .map(|o| if makespan_s > 0.0 { o.readout_s / makespan_s } else { 0.0 })
        .collect();
    let mut commands: Vec<CommandReport> = Vec::new();
    let mut traces = Vec::new();
    for o in outcomes {
        commands.extend(o.reports);
        traces.extend(o.traces);
    }
    commands.sort_by_key(|c| c.index);
    traces.sort_by_key(|t| t.0);

    let per_station = dwell_limited_rate(&scenario.pore);
    let run_length = scenario.run_length();
    let layout_figures = layout_report(layout)?;
    let report = RunReport {
        payload_checks_passed: commands.iter().filter(|c| c.payload_ok == Some(true)).count(),
        payload_checks_failed: commands.iter().filter(|c| c.payload_ok == Some(false)).count(),
        commands,
        makespan_s,
        aggregate_data_rate_bps: if makespan_s > 0.0 { fetched_bits / makespan_s } else { 0.0 },
        per_station_rate_bps: per_station,
        station_ceiling_bps: parallel_station_rate(stations, per_station)?,
        segmented_rate_bps: per_station / run_length as f64,
        rate_within_order_of_magnitude_of_megabit: (1e5..=1e7).contains(&per_station),
        station_utilization,
        density: DensityFigures {
            areal_bytes_per_cm2: layout_figures.areal_density_bytes_per_cm2,
            volumetric_bytes_per_cm3: layout_figures.volumetric_density_bytes_per_cm3,
            bits_per_base_ceiling: 2.0,
            bits_per_base_segmented: 2.0 / run_length as f64,
        },
    };
    Ok(RunOutput { report, traces })
}

fn run_station(scenario: &Scenario, station: u32, queue: &[(usize, &Command)], keep_traces: bool) -> StationOutcome {
    let mut parked: HashMap<u64, Parked> = HashMap::new();
    let mut out = StationOutcome { reports: Vec::new(), traces: Vec::new(), clock_s: 0.0, readout_s: 0.0, fetched_bits: 0.0 };
    for &(index, cmd) in queue {
        let mut report = CommandReport::new(index, cmd, station);
        match execute(scenario, index, cmd, &mut parked) {
            Ok(done) => {
                out.clock_s += done.latency_s;
                out.readout_s += done.readout_s.unwrap_or(0.0);
                if let Some(bits) = done.fetched_bits {
                    out.fetched_bits += bits;
                }
                report.latency_s = Some(done.latency_s);
                report.access_time_s = Some(done.access_s);
                report.readout_s = done.readout_s;
                report.payload_ok = done.payload_ok;
                report.symbol_error_rate = done.ser;
                if keep_traces {
                    if let Some(t) = done.trace {
                        out.traces.push((index, t));
                    }
                }
            }
            Err(e) => report.error = Some(e.to_string()),
        }
        out.reports.push(report);
    }
    out
}

struct Executed {
    latency_s: f64,
    access_s: f64,
    readout_s: Option<f64>,
    payload_ok: Option<bool>,
    ser: Option<f64>,
    fetched_bits: Option<f64>,
    trace: Option<CurrentTrace>,
}

fn transit_s(scenario: &Scenario, address: u64, direction: RouteDirection) -> Result<f64> {
    let route = compute_route(&scenario.layout, address, direction)?;
    let switching = route.valve_commands.len() as f64 * scenario.layout.valve_switch_latency_s;
    let travel = access_time(scenario.layout.transport_path_m(), &scenario.particle, &scenario.transport, &scenario.field)?;
    Ok(switching + travel)
}

fn execute(scenario: &Scenario, index: usize, cmd: &Command, parked: &mut HashMap<u64, Parked>) -> Result<Executed> {
    let overhead = scenario.station_overhead_s;
    match cmd {
        Command::Store { address, payload } => {
            let to_spot = transit_s(scenario, *address, RouteDirection::ToSpot)?;
            if parked.contains_key(address) {
                return Err(Error::Scenario(format!("spot {address} is occupied; erase it first")));
            }
            let symbols = encode_bytes(payload);
            let strand = expand_runs(&symbols, scenario.run_length());
            let config = StationConfig { seed: rng::derive_seed(scenario.write.seed, index as u64), ..scenario.write.clone() };
            let mut writer = PhotochemicalStation::new(BaseSequence::default(), config);
            writer.write_sequence(&strand)?;
            let write_s = writer.elapsed_s();
            let strand = writer.strand().clone();
            parked.insert(*address, Parked { payload: payload.clone(), symbols, strand });
            Ok(Executed {
                latency_s: write_s + to_spot + overhead,
                access_s: to_spot,
                readout_s: None,
                payload_ok: None,
                ser: None,
                fetched_bits: None,
                trace: None,
            })
        }
        Command::Fetch { address } => {
            let to_station = transit_s(scenario, *address, RouteDirection::ToStation)?;
            let back = transit_s(scenario, *address, RouteDirection::ToSpot)?;
            let spot = parked
                .get(address)
                .ok_or_else(|| Error::Scenario(format!("fetch of empty spot {address}")))?;
            let acq = AcquisitionParams {
                rng_seed: rng::derive_seed(scenario.seed, index as u64),
                trailing_open_us: scenario.lead_open_us(),
                ..scenario.acquisition.clone()
            };
            let events = if spot.strand.is_empty() {
                Vec::new()
            } else {
                vec![ScheduledEvent::new(spot.strand.clone(), None, scenario.lead_open_us())]
            };
            let trace = synthesize_trace(&events, &scenario.pore, &acq)?;
            let (decoded, readout_s) = read_back(scenario, &trace, spot.symbols.len())?;
            let payload_ok = decoded.as_ref().is_some_and(|(_, bytes)| bytes == &spot.payload);
            let ser = decoded.as_ref().map_or(1.0, |(syms, _)| symbol_error_rate(syms, &spot.symbols));
            Ok(Executed {
                latency_s: to_station + readout_s + overhead + back,
                access_s: to_station,
                readout_s: Some(readout_s),
                payload_ok: Some(payload_ok),
                ser: Some(if spot.symbols.is_empty() && decoded.is_some() { 0.0 } else { ser }),
                fetched_bits: Some(8.0 * spot.payload.len() as f64),
                trace: Some(trace),
            })
        }
        Command::Erase { address } => {
            let to_station = transit_s(scenario, *address, RouteDirection::ToStation)?;
            if parked.remove(address).is_none() {
                return Err(Error::Scenario(format!("erase of empty spot {address}")));
            }
            Ok(Executed {
                latency_s: to_station + overhead,
                access_s: to_station,
                readout_s: None,
                payload_ok: None,
                ser: None,
                fetched_bits: None,
                trace: None,
            })
        }
    }
}

/// Detects and decodes the strand in a fetch trace. Returns the decoded
/// symbols and payload (if decodable) and the measured readout time.
#[allow(clippy::type_complexity)]
fn read_back(
    scenario: &Scenario,
    trace: &CurrentTrace,
    expected_symbols: usize,
) -> Result<(Option<(BaseSequence, Vec<u8>)>, f64)> {
    let events = detect_events(trace, &scenario.detector)?;
    match events.as_slice() {
        [] if expected_symbols == 0 => Ok((Some((BaseSequence::default(), Vec::new())), 0.0)),
        [event] => {
            let d = decode_segmented_event(trace, event, &scenario.pore, scenario.run_length(), &Base::ALL, Some(expected_symbols))?;
            let bytes = decode_block(&d.bases).ok().map(|b| b.payload);
            Ok((bytes.map(|b| (d.bases, b)), event.duration_us() * 1e-6))
        }
        many => {
            let readout = many.iter().map(|e| e.duration_us() * 1e-6).sum();
            Ok((None, readout))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> Scenario {
        Scenario { acquisition: AcquisitionParams::noise_free(), ..Default::default() }
    }

    #[test]
    fn empty_workload() {
        let r = run(&quiet()).unwrap();
        assert!(r.commands.is_empty());
        assert_eq!(r.makespan_s, 0.0);
        assert!(r.station_utilization.iter().all(|&u| u == 0.0));
        assert_eq!(r.aggregate_data_rate_bps, 0.0);
    }

    #[test]
    fn store_fetch_round_trip() {
        let mut s = quiet();
        s.workload = vec![
            Command::Store { address: 5, payload: b"molecular".to_vec() },
            Command::Fetch { address: 5 },
        ];
        let r = run(&s).unwrap();
        assert_eq!(r.payload_checks_passed, 1, "{:?}", r.commands);
        assert_eq!(r.commands[1].symbol_error_rate, Some(0.0));
    }

    #[test]
    fn per_command_errors_do_not_abort() {
        let mut s = quiet();
        s.workload = vec![
            Command::Fetch { address: 3 },
            Command::Store { address: 99, payload: vec![1] },
            Command::Erase { address: 2 },
            Command::Store { address: 1, payload: vec![0xAB] },
            Command::Store { address: 1, payload: vec![0xAB] },
            Command::Fetch { address: 1 },
        ];
        let r = run(&s).unwrap();
        assert!(r.commands[0].error.as_deref().unwrap().contains("empty spot"));
        assert!(r.commands[1].error.as_deref().unwrap().contains("out of range"));
        assert!(r.commands[2].error.is_some());
        assert!(r.commands[3].error.is_none());
        assert!(r.commands[4].error.as_deref().unwrap().contains("occupied"));
        assert_eq!(r.commands[5].payload_ok, Some(true));
    }

    #[test]
    fn erase_frees_spot() {
        let mut s = quiet();
        s.workload = vec![
            Command::Store { address: 0, payload: vec![1, 2] },
            Command::Erase { address: 0 },
            Command::Fetch { address: 0 },
            Command::Store { address: 0, payload: vec![3] },
            Command::Fetch { address: 0 },
        ];
        let r = run(&s).unwrap();
        assert!(r.commands[2].error.is_some());
        assert_eq!(r.commands[4].payload_ok, Some(true));
    }

    #[test]
    fn empty_payload_round_trips() {
        let mut s = quiet();
        s.workload = vec![Command::Store { address: 2, payload: vec![] }, Command::Fetch { address: 2 }];
        let r = run(&s).unwrap();
        assert_eq!(r.commands[1].payload_ok, Some(true));
    }

    #[test]
    fn station_rates() {
        let per = dwell_limited_rate(&PoreModel::default());
        assert!((per - 2.0 / 1.5e-6).abs() < 1e-6);
        assert!((parallel_station_rate(1, 1.33e6).unwrap() - 1.33e6).abs() < 1e-9);
        assert!((parallel_station_rate(8, 1.33e6).unwrap() - 10.64e6).abs() < 1e-6);
        assert!(parallel_station_rate(0, 1.33e6).is_err());
    }

    #[test]
    fn scenario_file_parses() {
        let text = "seed = 9\nstation_overhead_s = 0.5\n[layout]\nspot_count = 32\nstation_count = 2\n[acquisition]\nnoise_coefficient = 0.0\n[commands]\nstore 3 hex:1b2C\nstore 4 text:hi there\nstore 5 random:8\nfetch 3\nerase 3\n";
        let s = Scenario::parse(text).unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.layout.spot_count, 32);
        assert_eq!(s.acquisition.noise_coefficient, 0.0);
        assert_eq!(s.workload[0], Command::Store { address: 3, payload: vec![0x1b, 0x2c] });
        assert_eq!(s.workload[1], Command::Store { address: 4, payload: b"hi there".to_vec() });
        match &s.workload[2] {
            Command::Store { payload, .. } => assert_eq!(payload.len(), 8),
            other => panic!("{other:?}"),
        }
        assert_eq!(s.workload[4], Command::Erase { address: 3 });
        assert_eq!(Scenario::parse(text).unwrap(), s);
        assert!(Scenario::parse("[commands]\nstore 1 hex:abc\n").is_err());
        assert!(Scenario::parse("[commands]\nmove 1\n").is_err());
        assert!(Scenario::parse("nonsense = 1\n").is_err());
    }
}
