use rand::seq::IndexedRandom;
use rand::Rng;

use molstore_core::codec::{Base, BaseSequence};
use molstore_core::decoder::{decode_segmented_event, detect_events, symbol_error_rate, DetectorParams};
use molstore_core::filter::BesselLowpass;
use molstore_core::orchestrator::expand_runs;
use molstore_core::readout::{
    bessel_lowpass, channel_window, synthesize_trace, AcquisitionParams, CurrentTrace, PoreModel, ScheduledEvent,
};
use molstore_core::rng;

/// Unit-step response of the analog 4-pole Bessel low-pass with its −3 dB
/// point at `fc`, integrated with RK4 in controllable canonical form.
fn analog_step_response(fc: f64, dt: f64, n: usize) -> Vec<f64> {
    // −3 dB frequency of 105 / (s⁴ + 10 s³ + 45 s² + 105 s + 105), rad/s.
    let w3 = 2.113_917_674;
    let scale = 2.0 * std::f64::consts::PI * fc / w3;
    // Time in prototype units: τ = scale · t.
    let h = dt * scale;
    let a = [105.0, 105.0, 45.0, 10.0];
    // x0' = x1, x1' = x2, x2' = x3, x3' = 105·u − Σ aᵢ xᵢ with u = 1.
    let deriv = |x: &[f64; 4]| {
        [x[1], x[2], x[3], 105.0 - (a[0] * x[0] + a[1] * x[1] + a[2] * x[2] + a[3] * x[3])]
    };
    let mut x = [0.0; 4];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(x[0]);
        let k1 = deriv(&x);
        let x2: [f64; 4] = std::array::from_fn(|i| x[i] + 0.5 * h * k1[i]);
        let k2 = deriv(&x2);
        let x3: [f64; 4] = std::array::from_fn(|i| x[i] + 0.5 * h * k2[i]);
        let k3 = deriv(&x3);
        let x4: [f64; 4] = std::array::from_fn(|i| x[i] + h * k3[i]);
        let k4 = deriv(&x4);
        for i in 0..4 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    out
}

#[test]
fn bessel_step_matches_analog_response() {
    let (fc, fs) = (5e3, 1e6);
    let filter = BesselLowpass::design(fc, fs).unwrap();
    let lead = 100;
    let n = 2000;
    let mut input = vec![0.0; lead];
    input.extend(std::iter::repeat_n(1.0, n));
    let digital = filter.apply(&input);
    let analog = analog_step_response(fc, 1.0 / fs, n);
    // The bilinear step lands half a sample ahead of the analog one.
    let worst = (0..n - 1)
        .map(|i| (digital[lead + i] - 0.5 * (analog[i] + analog[i + 1])).abs())
        .fold(0.0, f64::max);
    assert!(worst < 2e-3, "max deviation {worst}");
    let peak = digital.iter().cloned().fold(f64::MIN, f64::max);
    assert!(peak < 1.01, "overshoot {peak}");
    assert!((digital.last().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn wider_bandwidth_keeps_more_noise() {
    let mut r = rng::stream(3, 0);
    let noise: Vec<f64> = (0..50_000).map(|_| r.random::<f64>() - 0.5).collect();
    let trace = CurrentTrace::new(noise, 1.0);
    let var = |t: &CurrentTrace| {
        let x = &t.samples[1000..];
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
    };
    let wide = var(&bessel_lowpass(&trace, 100.0).unwrap());
    let narrow = var(&bessel_lowpass(&trace, 5.0).unwrap());
    assert!(wide > 5.0 * narrow, "{wide} vs {narrow}");
}

#[test]
fn duration_is_sum_of_dwells() {
    let pore = PoreModel::default();
    let acq = AcquisitionParams { trailing_open_us: 5000.0, ..AcquisitionParams::noise_free() };
    let mut r = rng::stream(8, 0);
    for _ in 0..50 {
        let n = r.random_range(30..300);
        let seq: BaseSequence = (0..n).map(|_| *Base::ALL.choose(&mut r).unwrap()).collect();
        let trace = synthesize_trace(&[ScheduledEvent::new(seq.clone(), None, 700.0)], &pore, &acq).unwrap();
        let ann = &trace.annotations[0];
        let expected = pore.translocation_time_us(&seq, ann.direction);
        let events = detect_events(&trace, &DetectorParams::default()).unwrap();
        assert_eq!(events.len(), 1);
        assert!((events[0].duration_us() - expected).abs() <= acq.sample_interval_us);
    }
}

#[test]
fn detection_recall_and_precision() {
    let pore = PoreModel::default();
    let mut r = rng::stream(21, 0);
    let mut start = 2000.0;
    let mut events = Vec::new();
    for _ in 0..100 {
        let base = *Base::ALL.choose(&mut r).unwrap();
        let seq = BaseSequence::homopolymer(base, r.random_range(30..200));
        let span = 200.0 * 5.4;
        events.push(ScheduledEvent::new(seq, None, start));
        start += span + r.random_range(500.0..1500.0);
    }
    let acq = AcquisitionParams { rng_seed: 4, ..Default::default() };
    let trace = synthesize_trace(&events, &pore, &acq).unwrap();
    let found = detect_events(&trace, &DetectorParams::default()).unwrap();
    let overlaps = |s: f64, e: f64, a: f64, b: f64| s < b && a < e;
    let hits = trace
        .annotations
        .iter()
        .filter(|a| found.iter().any(|f| overlaps(f.start, f.end, a.start_s, a.end_s)))
        .count();
    let true_pos = found
        .iter()
        .filter(|f| trace.annotations.iter().any(|a| overlaps(f.start, f.end, a.start_s, a.end_s)))
        .count();
    let recall = hits as f64 / trace.annotations.len() as f64;
    let precision = true_pos as f64 / found.len() as f64;
    assert!(recall >= 0.99 && precision >= 0.99, "recall {recall} precision {precision}");
}

#[test]
fn segment_decoding_error_rate_at_default_noise() {
    let pore = PoreModel::default();
    let run = 2 * channel_window(&pore);
    let mut r = rng::stream(12, 0);
    let (mut errors, mut total) = (0.0, 0usize);
    for i in 0..1000u64 {
        let symbols: BaseSequence = (0..6).map(|_| *Base::ALL.choose(&mut r).unwrap()).collect();
        let strand = expand_runs(&symbols, run);
        let acq = AcquisitionParams { rng_seed: i, trailing_open_us: 5000.0, ..Default::default() };
        let trace = synthesize_trace(&[ScheduledEvent::new(strand, None, 1000.0)], &pore, &acq).unwrap();
        let events = detect_events(&trace, &DetectorParams::default()).unwrap();
        let decoded = match events.as_slice() {
            [e] => decode_segmented_event(&trace, e, &pore, run, &Base::ALL, Some(symbols.len())).unwrap().bases,
            _ => BaseSequence::default(),
        };
        errors += symbol_error_rate(&decoded, &symbols) * symbols.len() as f64;
        total += symbols.len();
    }
    let ser = errors / total as f64;
    assert!(ser <= 0.01, "symbol error rate {ser}");
}

#[test]
fn traces_are_bit_identical_per_seed() {
    let pore = PoreModel::default();
    let seq = BaseSequence::homopolymer(Base::G, 90);
    let acq = AcquisitionParams { rng_seed: 55, ..Default::default() };
    let a = synthesize_trace(&[ScheduledEvent::new(seq.clone(), None, 300.0)], &pore, &acq).unwrap();
    let b = synthesize_trace(&[ScheduledEvent::new(seq, None, 300.0)], &pore, &acq).unwrap();
    assert_eq!(a, b);
}
