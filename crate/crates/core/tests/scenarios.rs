use rand::Rng;

use molstore_core::chip::ChipLayout;
use molstore_core::codec::encode_bytes;
use molstore_core::orchestrator::{expand_runs, run, run_with, Command, RunOptions, Scenario};
use molstore_core::readout::AcquisitionParams;
use molstore_core::rng;
use molstore_core::transport::TransportMode;

fn random_payload(seed: u64, len: usize) -> Vec<u8> {
    let mut r = rng::stream(seed, 0);
    (0..len).map(|_| r.random()).collect()
}

#[test]
fn fetch_latency_is_sum_of_module_latencies() {
    let payload = random_payload(1, 1700);
    let mut scenario = Scenario {
        layout: ChipLayout::with_spots(16, 1.0),
        acquisition: AcquisitionParams::noise_free(),
        station_overhead_s: 0.25,
        ..Default::default()
    };
    scenario.workload = vec![Command::Store { address: 9, payload: payload.clone() }, Command::Fetch { address: 9 }];
    let out = run_with(&scenario, RunOptions { parallel: false, keep_traces: true }).unwrap();
    let fetch = &out.report.commands[1];
    assert_eq!(fetch.payload_ok, Some(true));

    // 1 cm at 10 m/s.
    let access_s = 1e-3;
    let strand = expand_runs(&encode_bytes(&payload), scenario.run_length());
    let direction = out.traces[0].1.annotations[0].direction;
    let readout_s = scenario.pore.translocation_time_us(&strand, direction) * 1e-6;
    let expected = 2.0 * access_s + readout_s + 0.25;
    let dt_s = scenario.acquisition.sample_interval_us * 1e-6;
    let latency = fetch.latency_s.unwrap();
    assert!((latency - expected).abs() <= dt_s, "{latency} vs {expected}");
    assert!(strand.len() > 390_000, "segmented block of {} bases", strand.len());
}

#[test]
fn gel_transport_slows_access() {
    let mut scenario = Scenario { acquisition: AcquisitionParams::noise_free(), ..Default::default() };
    scenario.workload = vec![Command::Store { address: 0, payload: vec![7] }, Command::Fetch { address: 0 }];
    let fast = run(&scenario).unwrap().commands[1].access_time_s.unwrap();
    scenario.transport = TransportMode::empirical_gel(1e3);
    let slow = run(&scenario).unwrap().commands[1].access_time_s.unwrap();
    assert!((fast - 1e-3).abs() < 1e-12);
    assert!((slow - 1.0).abs() < 1e-9);
}

fn busy_scenario() -> Scenario {
    let mut scenario = Scenario {
        seed: 42,
        layout: ChipLayout { station_count: 4, ..ChipLayout::with_spots(32, 1.0) },
        ..Default::default()
    };
    for a in 0..12u64 {
        scenario.workload.push(Command::Store { address: a, payload: random_payload(a, 24) });
    }
    for a in (0..12u64).rev() {
        scenario.workload.push(Command::Fetch { address: a });
    }
    scenario.workload.push(Command::Erase { address: 3 });
    scenario.workload.push(Command::Fetch { address: 3 });
    scenario
}

#[test]
fn reports_are_deterministic() {
    let s = busy_scenario();
    assert_eq!(run(&s).unwrap(), run(&s).unwrap());
}

#[test]
fn parallel_stations_match_serial_run() {
    let s = busy_scenario();
    let serial = run_with(&s, RunOptions { parallel: false, keep_traces: true }).unwrap();
    let parallel = run_with(&s, RunOptions { parallel: true, keep_traces: true }).unwrap();
    assert_eq!(serial, parallel);
}

#[test]
fn rate_stays_under_station_ceiling() {
    let r = run(&busy_scenario()).unwrap();
    assert!(r.aggregate_data_rate_bps > 0.0);
    assert!(r.aggregate_data_rate_bps <= r.station_ceiling_bps);
    assert!((r.station_ceiling_bps - 4.0 * r.per_station_rate_bps).abs() < 1e-6);
    assert!(r.station_utilization.iter().all(|&u| (0.0..=1.0).contains(&u)));
    assert_eq!(r.station_utilization.len(), 4);
    assert!(r.commands.last().unwrap().error.is_some());
    assert_eq!(r.density.bits_per_base_ceiling, 2.0);
}

#[test]
fn noise_free_payloads_round_trip() {
    let mut scenario = Scenario {
        layout: ChipLayout { station_count: 2, ..ChipLayout::with_spots(16, 1.0) },
        acquisition: AcquisitionParams::noise_free(),
        ..Default::default()
    };
    for a in 0..16u64 {
        scenario.workload.push(Command::Store { address: a, payload: random_payload(100 + a, a as usize * 3) });
        scenario.workload.push(Command::Fetch { address: a });
    }
    let r = run(&scenario).unwrap();
    assert_eq!(r.payload_checks_passed, 16);
    assert!(r.all_payloads_ok());
}
