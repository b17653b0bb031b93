//! Ionic-current traces for strands translocating through an
//! α-hemolysin-like pore.
//!
//! While a strand is in the pore the current is the mean residual current
//! of the bases currently inside the channel (at most one channel window).
//! Bases advance one at a time; each step lasts the dwell time of the base
//! that just entered. Outside events the pore passes the open current.
//! Synthesized traces add white Gaussian noise whose standard deviation is
//! proportional to the bilayer area and may then pass through the Bessel
//! low-pass filter.

use std::io;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::codec::{Base, BaseSequence};
use crate::error::{Error, Result};
use crate::filter::BesselLowpass;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslocationDirection {
    /// 5' end enters first.
    FiveToThree,
    /// 3' end enters first.
    ThreeToFive,
}

impl TranslocationDirection {
    pub const BOTH: [TranslocationDirection; 2] =
        [TranslocationDirection::FiveToThree, TranslocationDirection::ThreeToFive];
}

/// Pore geometry and per-base calibration.
///
/// A and C residuals and dwell times are measured values. The G and T
/// defaults sit at one and two thirds of the way from A to C; they exist so
/// that all four symbols have distinct levels and are flagged as
/// non-measured in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoreModel {
    pub channel_length_nm: f64,
    pub base_pitch_nm: f64,
    pub open_current_pa: f64,
    pub applied_bias_mv: f64,
    pub residual_a_pa: f64,
    pub residual_c_pa: f64,
    pub residual_g_pa: f64,
    pub residual_t_pa: f64,
    pub dwell_a_5to3_us: f64,
    pub dwell_a_3to5_us: f64,
    pub dwell_c_5to3_us: f64,
    pub dwell_c_3to5_us: f64,
    pub dwell_g_5to3_us: f64,
    pub dwell_g_3to5_us: f64,
    pub dwell_t_5to3_us: f64,
    pub dwell_t_3to5_us: f64,
}

impl Default for PoreModel {
    fn default() -> Self {
        PoreModel {
            channel_length_nm: 10.0,
            base_pitch_nm: 0.34,
            open_current_pa: 120.0,
            applied_bias_mv: 120.0,
            residual_a_pa: 20.0,
            residual_c_pa: 40.0,
            residual_g_pa: 20.0 + 20.0 / 3.0,
            residual_t_pa: 20.0 + 40.0 / 3.0,
            dwell_a_5to3_us: 3.3,
            dwell_a_3to5_us: 5.4,
            dwell_c_5to3_us: 1.5,
            dwell_c_3to5_us: 1.5,
            dwell_g_5to3_us: 2.7,
            dwell_g_3to5_us: 4.1,
            dwell_t_5to3_us: 2.1,
            dwell_t_3to5_us: 2.8,
        }
    }
}

impl PoreModel {
    pub fn residual(&self, base: Base) -> f64 {
        match base {
            Base::A => self.residual_a_pa,
            Base::C => self.residual_c_pa,
            Base::G => self.residual_g_pa,
            Base::T => self.residual_t_pa,
        }
    }

    pub fn dwell_us(&self, base: Base, dir: TranslocationDirection) -> f64 {
        use TranslocationDirection::*;
        match (base, dir) {
            (Base::A, FiveToThree) => self.dwell_a_5to3_us,
            (Base::A, ThreeToFive) => self.dwell_a_3to5_us,
            (Base::C, FiveToThree) => self.dwell_c_5to3_us,
            (Base::C, ThreeToFive) => self.dwell_c_3to5_us,
            (Base::G, FiveToThree) => self.dwell_g_5to3_us,
            (Base::G, ThreeToFive) => self.dwell_g_3to5_us,
            (Base::T, FiveToThree) => self.dwell_t_5to3_us,
            (Base::T, ThreeToFive) => self.dwell_t_3to5_us,
        }
    }

    /// Whether the base's calibration comes from recorded translocations.
    pub fn is_measured(base: Base) -> bool {
        matches!(base, Base::A | Base::C)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.channel_length_nm > 0.0 && self.base_pitch_nm > 0.0) {
            return Err(Error::Config("channel length and base pitch must be positive".into()));
        }
        for b in Base::ALL {
            let r = self.residual(b);
            if !(r > 0.0 && r < self.open_current_pa) {
                return Err(Error::Config(format!(
                    "residual for {b} ({r} pA) must lie strictly between 0 and the open current"
                )));
            }
            for d in TranslocationDirection::BOTH {
                if !(self.dwell_us(b, d) > 0.0) {
                    return Err(Error::Config(format!("dwell for {b} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// Sum of per-base dwell times for a strand, µs.
    pub fn translocation_time_us(&self, seq: &BaseSequence, dir: TranslocationDirection) -> f64 {
        seq.iter().map(|b| self.dwell_us(b, dir)).sum()
    }
}

/// Number of bases inside the channel at once.
pub fn channel_window(pore: &PoreModel) -> usize {
    ((pore.channel_length_nm / pore.base_pitch_nm).round() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolvability {
    Resolvable,
    Unresolvable,
}

/// Whether homopolymer segments of this length produce their own plateau.
pub fn resolvability(segment_length: usize, pore: &PoreModel) -> Resolvability {
    if segment_length < channel_window(pore) {
        Resolvability::Unresolvable
    } else {
        Resolvability::Resolvable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileStep {
    pub start_us: f64,
    pub end_us: f64,
    pub current_pa: f64,
}

/// Piecewise-constant blockade current, times relative to event start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockadeProfile {
    pub steps: Vec<ProfileStep>,
    pub open_current_pa: f64,
}

impl BlockadeProfile {
    pub fn duration_us(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.end_us)
    }

    /// Current at `t_us` after event start; open current outside the event.
    pub fn current_at(&self, t_us: f64) -> f64 {
        if t_us < 0.0 || t_us >= self.duration_us() {
            return self.open_current_pa;
        }
        let i = self.steps.partition_point(|s| s.end_us <= t_us);
        self.steps[i].current_pa
    }
}

/// Order in which the bases of `seq` (written 5'→3') enter the pore.
pub fn entry_order(seq: &BaseSequence, dir: TranslocationDirection) -> Vec<Base> {
    match dir {
        TranslocationDirection::FiveToThree => seq.bases().to_vec(),
        TranslocationDirection::ThreeToFive => seq.bases().iter().rev().copied().collect(),
    }
}

pub fn ideal_blockade_profile(seq: &BaseSequence, pore: &PoreModel, dir: TranslocationDirection) -> BlockadeProfile {
    let window = channel_window(pore);
    let order = entry_order(seq, dir);
    let mut counts = [0usize; 4];
    let mut steps: Vec<ProfileStep> = Vec::new();
    let mut t = 0.0;
    for (k, &base) in order.iter().enumerate() {
        counts[base.bits() as usize] += 1;
        if k >= window {
            counts[order[k - window].bits() as usize] -= 1;
        }
        let current = window_mean(&counts, pore);
        let end = t + pore.dwell_us(base, dir);
        match steps.last_mut() {
            Some(last) if last.current_pa == current => last.end_us = end,
            _ => steps.push(ProfileStep { start_us: t, end_us: end, current_pa: current }),
        }
        t = end;
    }
    BlockadeProfile { steps, open_current_pa: pore.open_current_pa }
}

fn window_mean(counts: &[usize; 4], pore: &PoreModel) -> f64 {
    let occupied: Vec<Base> = Base::ALL.into_iter().filter(|b| counts[b.bits() as usize] > 0).collect();
    if let [only] = occupied.as_slice() {
        return pore.residual(*only);
    }
    let total: usize = counts.iter().sum();
    let weighted: f64 = Base::ALL.iter().map(|&b| counts[b.bits() as usize] as f64 * pore.residual(b)).sum();
    weighted / total as f64
}

/// Recording settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionParams {
    pub sample_interval_us: f64,
    /// Low-pass bandwidth; `None` leaves the trace unfiltered.
    pub filter_bandwidth_khz: Option<f64>,
    pub bilayer_area_um2: f64,
    /// Noise standard deviation per µm² of bilayer, pA/µm².
    pub noise_coefficient: f64,
    pub rng_seed: u64,
    /// Open-pore time recorded after the last event, µs.
    pub trailing_open_us: f64,
}

/// Area of the bilayer painted across a 40 µm aperture.
pub const DEFAULT_BILAYER_AREA_UM2: f64 = std::f64::consts::PI * 20.0 * 20.0;

/// Noise coefficient giving ≈5 pA of white noise on the default bilayer.
pub const DEFAULT_NOISE_COEFFICIENT: f64 = 4.0e-3;

/// Bandwidth settings of the recording amplifier, kHz.
pub const STANDARD_BANDWIDTHS_KHZ: [f64; 3] = [5.0, 20.0, 100.0];

impl Default for AcquisitionParams {
    fn default() -> Self {
        AcquisitionParams {
            sample_interval_us: 5.0,
            filter_bandwidth_khz: Some(100.0),
            bilayer_area_um2: DEFAULT_BILAYER_AREA_UM2,
            noise_coefficient: DEFAULT_NOISE_COEFFICIENT,
            rng_seed: 0,
            trailing_open_us: 1000.0,
        }
    }
}

impl AcquisitionParams {
    pub fn noise_free() -> Self {
        AcquisitionParams { noise_coefficient: 0.0, filter_bandwidth_khz: None, ..Default::default() }
    }

    pub fn noise_sigma_pa(&self) -> f64 {
        self.noise_coefficient * self.bilayer_area_um2
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_interval_us > 0.0) {
            return Err(Error::Config("sample_interval_us must be positive".into()));
        }
        if self.noise_coefficient < 0.0 || self.bilayer_area_um2 < 0.0 {
            return Err(Error::Config("noise coefficient and bilayer area must be non-negative".into()));
        }
        if let Some(bw) = self.filter_bandwidth_khz {
            if !(bw > 0.0) {
                return Err(Error::Config("filter bandwidth must be positive".into()));
            }
        }
        Ok(())
    }

    /// Internal oversampling factor so the analog-style filter runs well
    /// below its own Nyquist rate before the trace is decimated to the
    /// acquisition interval.
    fn oversampling(&self) -> usize {
        match self.filter_bandwidth_khz {
            None => 1,
            Some(bw) => {
                let fs_khz = 1.0e3 / self.sample_interval_us;
                ((4.0 * bw / fs_khz).ceil() as usize).max(1)
            }
        }
    }
}

/// Ground truth for one synthesized event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAnnotation {
    pub sequence_id: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub direction: TranslocationDirection,
    pub base_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentTrace {
    /// pA
    pub samples: Vec<f64>,
    pub sample_interval_us: f64,
    #[serde(default)]
    pub annotations: Vec<EventAnnotation>,
}

impl CurrentTrace {
    pub fn new(samples: Vec<f64>, sample_interval_us: f64) -> Self {
        CurrentTrace { samples, sample_interval_us, annotations: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_s(&self, index: usize) -> f64 {
        index as f64 * self.sample_interval_us * 1e-6
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io_err = |e: csv::Error| Error::Config(format!("writing trace: {e}"));
        out.write_record(["time_s", "current_pA"]).map_err(io_err)?;
        for (i, s) in self.samples.iter().enumerate() {
            out.write_record([format!("{:.9}", self.time_s(i)), format!("{s}")]).map_err(io_err)?;
        }
        out.flush().map_err(|e| Error::Config(format!("writing trace: {e}")))
    }

    /// Reads a `time_s,current_pA` CSV. The sample interval is taken from
    /// the first two timestamps.
    pub fn read_csv<R: io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let bad = |msg: String| Error::Config(format!("reading trace: {msg}"));
        let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        if headers.len() != 2 || &headers[0] != "time_s" || &headers[1] != "current_pA" {
            return Err(bad(format!("expected header time_s,current_pA, got {headers:?}")));
        }
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let t: f64 = rec[0].trim().parse().map_err(|_| bad(format!("bad time {:?}", &rec[0])))?;
            let c: f64 = rec[1].trim().parse().map_err(|_| bad(format!("bad current {:?}", &rec[1])))?;
            if !c.is_finite() {
                return Err(bad("non-finite current".into()));
            }
            times.push(t);
            samples.push(c);
        }
        let dt_us = if times.len() >= 2 { (times[1] - times[0]) * 1e6 } else { 5.0 };
        if !(dt_us > 0.0) {
            return Err(bad("timestamps must increase".into()));
        }
        Ok(CurrentTrace::new(samples, dt_us))
    }

    pub fn save(&self, csv_path: &Path) -> Result<()> {
        let f = std::fs::File::create(csv_path).map_err(|e| Error::Config(format!("{}: {e}", csv_path.display())))?;
        self.write_csv(io::BufWriter::new(f))
    }
}

/// A strand scheduled to translocate at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledEvent {
    pub sequence: BaseSequence,
    /// Drawn 50/50 from the event's random stream when unset.
    pub direction: Option<TranslocationDirection>,
    pub start_us: f64,
}

impl ScheduledEvent {
    pub fn new(sequence: BaseSequence, direction: Option<TranslocationDirection>, start_us: f64) -> Self {
        ScheduledEvent { sequence, direction, start_us }
    }
}

/// Random stream reserved for trace noise; events use `1 + index`.
const NOISE_STREAM: u64 = 0;

pub fn synthesize_trace(events: &[ScheduledEvent], pore: &PoreModel, acq: &AcquisitionParams) -> Result<CurrentTrace> {
    pore.validate()?;
    acq.validate()?;

    let mut placed: Vec<(f64, BlockadeProfile, EventAnnotation)> = Vec::with_capacity(events.len());
    for (i, ev) in events.iter().enumerate() {
        if ev.start_us < 0.0 || !ev.start_us.is_finite() {
            return Err(Error::Scheduling(format!("event {i} starts at {} µs", ev.start_us)));
        }
        let direction = ev.direction.unwrap_or_else(|| {
            let mut r = rng::stream(acq.rng_seed, 1 + i as u64);
            if r.random_bool(0.5) {
                TranslocationDirection::FiveToThree
            } else {
                TranslocationDirection::ThreeToFive
            }
        });
        let profile = ideal_blockade_profile(&ev.sequence, pore, direction);
        let ann = EventAnnotation {
            sequence_id: i,
            start_s: ev.start_us * 1e-6,
            end_s: (ev.start_us + profile.duration_us()) * 1e-6,
            direction,
            base_count: ev.sequence.len(),
        };
        placed.push((ev.start_us, profile, ann));
    }
    placed.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in placed.windows(2) {
        let prev_end = pair[0].0 + pair[0].1.duration_us();
        if pair[1].0 < prev_end {
            return Err(Error::Scheduling(format!(
                "event {} starts at {} µs before event {} ends at {} µs",
                pair[1].2.sequence_id, pair[1].0, pair[0].2.sequence_id, prev_end
            )));
        }
    }

    let last_end = placed.iter().map(|(s, p, _)| s + p.duration_us()).fold(0.0, f64::max);
    let total_us = last_end + acq.trailing_open_us;
    let n_out = (total_us / acq.sample_interval_us).ceil() as usize;
    let k = acq.oversampling();
    let dt = acq.sample_interval_us / k as f64;
    let n_int = n_out * k;

    let mut samples = vec![pore.open_current_pa; n_int];
    for (start, profile, _) in &placed {
        let first = (start / dt).ceil() as usize;
        let last = (((start + profile.duration_us()) / dt).ceil() as usize).min(n_int);
        let first = first.min(last);
        for (j, s) in (first..).zip(&mut samples[first..last]) {
            *s = profile.current_at(j as f64 * dt - start);
        }
    }

    let sigma = acq.noise_sigma_pa();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
        let mut r = rng::stream(acq.rng_seed, NOISE_STREAM);
        for s in samples.iter_mut() {
            *s += normal.sample(&mut r);
        }
    }

    if let Some(bw) = acq.filter_bandwidth_khz {
        let filter = BesselLowpass::design(bw * 1e3, 1e6 / dt)?;
        filter.apply_in_place(&mut samples);
    }

    let samples = if k == 1 { samples } else { samples.into_iter().step_by(k).collect() };
    let mut annotations: Vec<EventAnnotation> = placed.into_iter().map(|(_, _, a)| a).collect();
    annotations.sort_by_key(|a| a.sequence_id);
    Ok(CurrentTrace { samples, sample_interval_us: acq.sample_interval_us, annotations })
}

/// Low-pass filters a recorded trace at the trace's own sampling rate.
pub fn bessel_lowpass(trace: &CurrentTrace, bandwidth_khz: f64) -> Result<CurrentTrace> {
    let filter = BesselLowpass::design(bandwidth_khz * 1e3, 1e6 / trace.sample_interval_us)?;
    Ok(CurrentTrace {
        samples: filter.apply(&trace.samples),
        sample_interval_us: trace.sample_interval_us,
        annotations: trace.annotations.clone(),
    })
}

/// Pore parameters plus flags for calibration values that are not measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoreReport {
    pub pore: PoreModel,
    pub channel_window: usize,
    pub unmeasured_bases: Vec<Base>,
}

pub fn pore_report(pore: &PoreModel) -> PoreReport {
    PoreReport {
        pore: pore.clone(),
        channel_window: channel_window(pore),
        unmeasured_bases: Base::ALL.into_iter().filter(|&b| !PoreModel::is_measured(b)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TranslocationDirection::*;

    fn seq(s: &str) -> BaseSequence {
        s.parse().unwrap()
    }

    fn alternating_20a_20c() -> BaseSequence {
        let mut s = BaseSequence::default();
        for _ in 0..3 {
            s.extend_from(&BaseSequence::homopolymer(Base::A, 20));
            s.extend_from(&BaseSequence::homopolymer(Base::C, 20));
        }
        s
    }

    #[test]
    fn channel_windows() {
        assert_eq!(channel_window(&PoreModel::default()), 29);
        let one = PoreModel { channel_length_nm: 0.34, ..Default::default() };
        assert_eq!(channel_window(&one), 1);
        let long = PoreModel { channel_length_nm: 20.0, ..Default::default() };
        assert_eq!(channel_window(&long), 59);
    }

    #[test]
    fn resolvability_boundary() {
        let p = PoreModel::default();
        assert_eq!(resolvability(20, &p), Resolvability::Unresolvable);
        assert_eq!(resolvability(120, &p), Resolvability::Resolvable);
        assert_eq!(resolvability(29, &p), Resolvability::Resolvable);
        assert_eq!(resolvability(28, &p), Resolvability::Unresolvable);
    }

    #[test]
    fn homopolymer_profiles() {
        let p = PoreModel::default();
        let a = ideal_blockade_profile(&BaseSequence::homopolymer(Base::A, 120), &p, FiveToThree);
        assert_eq!(a.steps.len(), 1);
        assert_eq!(a.steps[0].current_pa, 20.0);
        assert!((a.duration_us() - 396.0).abs() < 1e-9);
        let a_slow = ideal_blockade_profile(&BaseSequence::homopolymer(Base::A, 120), &p, ThreeToFive);
        assert!((a_slow.duration_us() - 648.0).abs() < 1e-9);
        let c = ideal_blockade_profile(&BaseSequence::homopolymer(Base::C, 120), &p, FiveToThree);
        assert_eq!(c.steps[0].current_pa, 40.0);
        assert!((c.duration_us() - 120.0 * 1.5).abs() < 1e-9);
        let single = ideal_blockade_profile(&seq("A"), &p, FiveToThree);
        assert_eq!(single.steps, vec![ProfileStep { start_us: 0.0, end_us: 3.3, current_pa: 20.0 }]);
        assert_eq!(single.current_at(-1.0), 120.0);
        assert_eq!(single.current_at(3.3), 120.0);
    }

    #[test]
    fn window_mixing_matches_bruteforce() {
        // Oracle: for every base index, average the residuals of the last
        // `window` entered bases directly.
        let p = PoreModel::default();
        let s = seq("ACGTTGCAAACCCGGGTTTACGTACGATCGATCGATCGGGGGCCCCCAAAAATTTTTACGT");
        for dir in TranslocationDirection::BOTH {
            let prof = ideal_blockade_profile(&s, &p, dir);
            let order = entry_order(&s, dir);
            let w = channel_window(&p);
            let mut t = 0.0;
            for k in 0..order.len() {
                let lo = k.saturating_sub(w - 1);
                let mean: f64 = order[lo..=k].iter().map(|&b| p.residual(b)).sum::<f64>() / (k - lo + 1) as f64;
                let dwell = p.dwell_us(order[k], dir);
                let got = prof.current_at(t + dwell / 2.0);
                assert!((got - mean).abs() < 1e-9, "k={k} got {got} want {mean}");
                t += dwell;
            }
            assert!((prof.duration_us() - p.translocation_time_us(&s, dir)).abs() < 1e-9);
        }
    }

    #[test]
    fn alternating_segments_mix_near_35pa() {
        let p = PoreModel::default();
        for dir in TranslocationDirection::BOTH {
            let prof = ideal_blockade_profile(&alternating_20a_20c(), &p, dir);
            let mid = prof.current_at(prof.duration_us() / 2.0);
            assert!((mid - 35.0).abs() <= 0.25 * 35.0, "{dir:?}: {mid}");
        }
    }

    #[test]
    fn noise_off_matches_ideal_samples() {
        let p = PoreModel::default();
        let acq = AcquisitionParams::noise_free();
        let s = alternating_20a_20c();
        let ev = ScheduledEvent::new(s.clone(), Some(ThreeToFive), 250.0);
        let tr = synthesize_trace(&[ev], &p, &acq).unwrap();
        let prof = ideal_blockade_profile(&s, &p, ThreeToFive);
        for (i, &x) in tr.samples.iter().enumerate() {
            let t = i as f64 * acq.sample_interval_us;
            assert_eq!(x, prof.current_at(t - 250.0), "sample {i}");
        }
        assert_eq!(tr.annotations.len(), 1);
        assert!((tr.annotations[0].end_s - tr.annotations[0].start_s - 414e-6).abs() < 1e-9);
    }

    #[test]
    fn overlapping_events_rejected() {
        let p = PoreModel::default();
        let acq = AcquisitionParams::noise_free();
        let a = ScheduledEvent::new(BaseSequence::homopolymer(Base::A, 120), Some(FiveToThree), 0.0);
        let b = ScheduledEvent::new(BaseSequence::homopolymer(Base::C, 10), Some(FiveToThree), 100.0);
        assert!(matches!(synthesize_trace(&[a, b], &p, &acq), Err(Error::Scheduling(_))));
    }

    #[test]
    fn deterministic_given_seed() {
        let p = PoreModel::default();
        let acq = AcquisitionParams { rng_seed: 99, ..Default::default() };
        let evs: Vec<_> = (0..5)
            .map(|i| ScheduledEvent::new(BaseSequence::homopolymer(Base::A, 50), None, 1000.0 * i as f64))
            .collect();
        let a = synthesize_trace(&evs, &p, &acq).unwrap();
        let b = synthesize_trace(&evs, &p, &acq).unwrap();
        assert_eq!(a, b);
        let other = synthesize_trace(&evs, &p, &AcquisitionParams { rng_seed: 100, ..acq }).unwrap();
        assert_ne!(a.samples, other.samples);
    }

    #[test]
    fn bessel_lowpass_requires_sub_nyquist() {
        let tr = CurrentTrace::new(vec![1.0; 100], 5.0);
        assert!(bessel_lowpass(&tr, 100.0).is_err());
        let out = bessel_lowpass(&tr, 20.0).unwrap();
        assert!(out.samples.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn csv_round_trip() {
        let tr = CurrentTrace::new(vec![120.0, 119.5, 20.25], 5.0);
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time_s,current_pA\n"));
        let back = CurrentTrace::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples, tr.samples);
        assert!((back.sample_interval_us - 5.0).abs() < 1e-6);
        assert!(CurrentTrace::read_csv("t,c\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn invalid_residual_rejected() {
        let p = PoreModel { residual_a_pa: 130.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn report_flags_unmeasured() {
        let r = pore_report(&PoreModel::default());
        assert_eq!(r.unmeasured_bases, vec![Base::G, Base::T]);
        assert_eq!(r.channel_window, 29);
    }
}
