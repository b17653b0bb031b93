//! Blockade-event detection and segment-level decoding.
//!
//! Events are maximal runs of samples below a fraction of a rolling-median
//! open-pore baseline. Each event is summarized by its depth and duration
//! and matched against the pore calibration. There is no per-base calling:
//! a pore window spans ~30 bases, so decoding works on homopolymer segments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::{Base, BaseSequence};
use crate::error::{Error, Result};
use crate::readout::{channel_window, CurrentTrace, PoreModel, TranslocationDirection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    /// Samples below `threshold_fraction × baseline` count as blocked.
    pub threshold_fraction: f64,
    pub min_duration_us: f64,
    /// Samples in the rolling-median baseline window.
    pub baseline_window: usize,
    /// Currents below this are never taken as open-pore baseline, pA.
    pub baseline_floor_pa: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams { threshold_fraction: 0.5, min_duration_us: 10.0, baseline_window: 1000, baseline_floor_pa: 60.0 }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction < 1.0) {
            return Err(Error::Config("threshold_fraction must lie in (0, 1)".into()));
        }
        if self.baseline_window == 0 {
            return Err(Error::Config("baseline_window must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockadeEvent {
    /// s
    pub start: f64,
    /// s
    pub end: f64,
    pub mean_blocked_current: f64,
    pub baseline: f64,
    /// `1 − blocked / baseline`, clamped to [0, 1].
    pub depth_fraction: f64,
    /// `None` until classified, or when no calibration band matches.
    pub classified_base: Option<Base>,
    pub estimated_base_count: Option<u64>,
    /// Index range of the event's samples in the source trace.
    pub first_sample: usize,
    pub last_sample: usize,
}

impl BlockadeEvent {
    pub fn duration_us(&self) -> f64 {
        (self.end - self.start) * 1e6
    }

    /// Event summary from its depth and duration alone.
    pub fn synthetic(mean_blocked_current: f64, duration_us: f64, baseline: f64) -> Self {
        BlockadeEvent {
            start: 0.0,
            end: duration_us * 1e-6,
            mean_blocked_current,
            baseline,
            depth_fraction: (1.0 - mean_blocked_current / baseline).clamp(0.0, 1.0),
            classified_base: None,
            estimated_base_count: None,
            first_sample: 0,
            last_sample: 0,
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Rolling-median baseline over samples not flagged as blocked, evaluated
/// on a coarse grid and held between grid points.
fn rolling_baseline(samples: &[f64], blocked: &[bool], window: usize, fallback: f64) -> Vec<f64> {
    let n = samples.len();
    let stride = (window / 8).max(1);
    let half = window / 2;
    let mut out = vec![fallback; n];
    let mut prev = fallback;
    let mut buf = Vec::with_capacity(window);
    let mut start = 0;
    while start < n {
        let centre = (start + stride / 2).min(n - 1);
        let lo = centre.saturating_sub(half);
        let hi = (centre + half).min(n);
        buf.clear();
        buf.extend((lo..hi).filter(|&i| !blocked[i]).map(|i| samples[i]));
        if !buf.is_empty() {
            prev = median(&mut buf);
        }
        let end = (start + stride).min(n);
        out[start..end].fill(prev);
        start = end;
    }
    out
}

pub fn detect_events(trace: &CurrentTrace, params: &DetectorParams) -> Result<Vec<BlockadeEvent>> {
    params.validate()?;
    if trace.len() < params.baseline_window {
        return Err(Error::Config(format!(
            "trace has {} samples, fewer than the {}-sample baseline window",
            trace.len(),
            params.baseline_window
        )));
    }
    let x = &trace.samples;
    let mut open: Vec<f64> = x.iter().copied().filter(|&v| v >= params.baseline_floor_pa).collect();
    if open.is_empty() {
        return Err(Error::Baseline);
    }
    let global = median(&mut open);

    let first_pass: Vec<bool> = x.iter().map(|&v| v < params.threshold_fraction * global).collect();
    let baseline = rolling_baseline(x, &first_pass, params.baseline_window, global);
    let blocked: Vec<bool> = x.iter().zip(&baseline).map(|(&v, &b)| v < params.threshold_fraction * b).collect();

    let dt_s = trace.sample_interval_us * 1e-6;
    let mut events = Vec::new();
    let mut i = 0;
    while i < x.len() {
        if !blocked[i] {
            i += 1;
            continue;
        }
        let first = i;
        while i < x.len() && blocked[i] {
            i += 1;
        }
        let last = i - 1;
        let count = last - first + 1;
        if (count as f64) * trace.sample_interval_us < params.min_duration_us {
            continue;
        }
        let trim = count / 10;
        let core = &x[first + trim..=last - trim];
        let mean = core.iter().sum::<f64>() / core.len() as f64;
        let base = baseline[first];
        events.push(BlockadeEvent {
            start: first as f64 * dt_s,
            end: (last + 1) as f64 * dt_s,
            mean_blocked_current: mean,
            baseline: base,
            depth_fraction: (1.0 - mean / base).clamp(0.0, 1.0),
            classified_base: None,
            estimated_base_count: None,
            first_sample: first,
            last_sample: last,
        });
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierParams {
    /// Relative band around each calibrated residual current.
    pub residual_tolerance: f64,
    /// Relative band around each calibrated dwell time.
    pub dwell_tolerance: f64,
    /// Expected strand length; enables the dwell check when set.
    pub length_prior: Option<usize>,
    pub candidates: Vec<Base>,
    /// Classifications below this confidence are not trusted.
    pub confidence_threshold: f64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            residual_tolerance: 0.3,
            dwell_tolerance: 0.4,
            length_prior: None,
            candidates: Base::ALL.to_vec(),
            confidence_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub base: Option<Base>,
    /// Margin between the two nearest calibrated levels, in [0, 1]:
    /// `(d₂ − d₁) / (d₂ + d₁)` with `dᵢ` the distance to the i-th nearest.
    pub confidence: f64,
}

impl Classification {
    pub fn is_confident(&self, params: &ClassifierParams) -> bool {
        self.base.is_some() && self.confidence >= params.confidence_threshold
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b
}

/// Nearest calibrated homopolymer for an event, or `None` when the event
/// falls outside every tolerance band.
pub fn classify_homopolymer(event: &BlockadeEvent, pore: &PoreModel, params: &ClassifierParams) -> Classification {
    let current = event.mean_blocked_current;
    let mut best: Option<(Base, f64)> = None;
    for &b in &params.candidates {
        let r_err = relative(current, pore.residual(b));
        if r_err > params.residual_tolerance {
            continue;
        }
        let mut score = r_err;
        if let Some(len) = params.length_prior.filter(|&l| l > 0) {
            let implied = event.duration_us() / len as f64;
            let d_err = TranslocationDirection::BOTH
                .iter()
                .map(|&d| relative(implied, pore.dwell_us(b, d)))
                .fold(f64::INFINITY, f64::min);
            if d_err > params.dwell_tolerance {
                continue;
            }
            score += d_err;
        }
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((b, score));
        }
    }
    let Some((base, _)) = best else {
        return Classification { base: None, confidence: 0.0 };
    };
    let mut distances: Vec<f64> = params.candidates.iter().map(|&b| (current - pore.residual(b)).abs()).collect();
    distances.sort_by(f64::total_cmp);
    let confidence = match distances.as_slice() {
        [_] => 1.0,
        [d1, d2, ..] if d1 + d2 > 0.0 => (d2 - d1) / (d2 + d1),
        _ => 0.0,
    };
    Classification { base: Some(base), confidence }
}

pub fn estimate_base_count(event: &BlockadeEvent, base: Base, pore: &PoreModel, dir: TranslocationDirection) -> u64 {
    (event.duration_us() / pore.dwell_us(base, dir)).round() as u64
}

/// Picks the translocation direction for a classified event. With a length
/// prior the direction whose base count lies closest to a multiple of the
/// prior wins; otherwise the faster direction.
pub fn resolve_direction(
    event: &BlockadeEvent,
    base: Base,
    pore: &PoreModel,
    length_prior: Option<usize>,
) -> TranslocationDirection {
    let [fwd, rev] = TranslocationDirection::BOTH;
    let faster = if pore.dwell_us(base, fwd) <= pore.dwell_us(base, rev) { fwd } else { rev };
    let Some(prior) = length_prior.filter(|&p| p > 0) else {
        return faster;
    };
    let miss = |d: TranslocationDirection| {
        let count = event.duration_us() / pore.dwell_us(base, d);
        let multiple = (count / prior as f64).round().max(1.0) * prior as f64;
        (count - multiple).abs() / prior as f64
    };
    let (m_fwd, m_rev) = (miss(fwd), miss(rev));
    if (m_fwd - m_rev).abs() < 1e-12 {
        faster
    } else if m_fwd < m_rev {
        fwd
    } else {
        rev
    }
}

/// Classifies an event and fills in its base and length estimates.
pub fn annotate_event(event: &mut BlockadeEvent, pore: &PoreModel, params: &ClassifierParams) -> Classification {
    let c = classify_homopolymer(event, pore, params);
    event.classified_base = c.base;
    event.estimated_base_count = c.base.map(|b| {
        let dir = resolve_direction(event, b, pore, params.length_prior);
        estimate_base_count(event, b, pore, dir)
    });
    c
}

/// Fraction of mismatched positions; surplus length on either side counts
/// as errors.
pub fn symbol_error_rate(decoded: &BaseSequence, truth: &BaseSequence) -> f64 {
    let longest = decoded.len().max(truth.len());
    if longest == 0 {
        return 0.0;
    }
    let mismatched = decoded.iter().zip(truth.iter()).filter(|(a, b)| a != b).count();
    (mismatched + decoded.len().abs_diff(truth.len())) as f64 / longest as f64
}

/// Result of reading a strand made of equal-length homopolymer runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDecode {
    /// One base per run, in 5'→3' order.
    pub bases: BaseSequence,
    pub direction: TranslocationDirection,
    /// Root-mean-square deviation of the event samples from the predicted
    /// profile, pA.
    pub level_misfit: f64,
    /// Relative mismatch between predicted and measured event duration.
    pub timing_misfit: f64,
}

/// A decoded run in the search lattice.
struct Node {
    base: Base,
    parent: Option<usize>,
    runs: usize,
    t_us: f64,
    sse: f64,
}

/// Reads back a strand built from runs of `run_length` identical bases.
///
/// Runs must be at least one channel window long, so the channel only
/// ever holds bases from two neighbouring runs and every run ends on a
/// plateau. A hypothesis predicts the current sample by sample, ramp
/// included, and is scored by its squared error against the trace.
/// Hypotheses are extended in time order; two that end on the same sample
/// with the same last base have explained the same samples and only the
/// better one is kept. Finished hypotheses from both directions are
/// compared over the same stretch of samples, with open current predicted
/// after each one ends.
///
/// A slow read of a short strand can mimic a fast read of a longer one, so
/// when the number of runs is known, passing it as `expected_runs` makes
/// hypotheses of that length win over all others.
pub fn decode_segmented_event(
    trace: &CurrentTrace,
    event: &BlockadeEvent,
    pore: &PoreModel,
    run_length: usize,
    candidates: &[Base],
    expected_runs: Option<usize>,
) -> Result<SegmentDecode> {
    let window = channel_window(pore);
    if run_length < window {
        return Err(Error::Config(format!(
            "run length {run_length} is shorter than the {window}-base channel window"
        )));
    }
    if candidates.is_empty() {
        return Err(Error::Config("no candidate bases".into()));
    }
    let dt = trace.sample_interval_us;
    let start_us = event.start * 1e6;
    let end_us = event.end * 1e6;
    let x = &trace.samples;
    let first_index = |t_us: f64| ((t_us / dt) - 1e-9).ceil().max(0.0) as usize;

    let run_sse = |t_us: f64, prev: Option<Base>, b: Base, dwell: f64, span: f64| -> f64 {
        let level = pore.residual(b);
        let prev = prev.map(|p| pore.residual(p));
        let (lo, hi) = (first_index(t_us), first_index(t_us + span).min(x.len()));
        let mut sse = 0.0;
        for (i, v) in (lo..).zip(&x[lo.min(hi)..hi]) {
            let k = ((i as f64 * dt - t_us) / dwell).floor().max(0.0) as usize;
            let predicted = match prev {
                Some(p) => {
                    let entered = (k + 1).min(window) as f64;
                    (entered * level + (window as f64 - entered) * p) / window as f64
                }
                None => level,
            };
            sse += (v - predicted).powi(2);
        }
        sse
    };

    let mut finals: Vec<(TranslocationDirection, usize)> = Vec::new();
    let mut nodes: Vec<Node> = Vec::new();
    for dir in TranslocationDirection::BOTH {
        let min_run_us = candidates
            .iter()
            .map(|&b| pore.dwell_us(b, dir))
            .fold(f64::INFINITY, f64::min)
            * run_length as f64;
        let stop_us = end_us - 0.5 * min_run_us;
        // Best node ending on each (sample bin, last base).
        let mut best: BTreeMap<(i64, u8), usize> = BTreeMap::new();
        let seed = |nodes: &mut Vec<Node>, best: &mut BTreeMap<(i64, u8), usize>, node: Node| {
            let key = ((node.t_us / dt).round() as i64, node.base.bits());
            match best.get(&key) {
                Some(&k) if nodes[k].sse <= node.sse => {}
                _ => {
                    nodes.push(node);
                    best.insert(key, nodes.len() - 1);
                }
            }
        };
        for &b in candidates {
            let dwell = pore.dwell_us(b, dir);
            let span = run_length as f64 * dwell;
            let sse = run_sse(start_us, None, b, dwell, span);
            seed(&mut nodes, &mut best, Node { base: b, parent: None, runs: 1, t_us: start_us + span, sse });
        }
        while let Some((_, idx)) = best.pop_first() {
            let (t, last, runs, sse) = (nodes[idx].t_us, nodes[idx].base, nodes[idx].runs, nodes[idx].sse);
            if t >= stop_us || expected_runs.is_some_and(|n| runs >= n) {
                finals.push((dir, idx));
                continue;
            }
            for &b in candidates {
                let dwell = pore.dwell_us(b, dir);
                let span = run_length as f64 * dwell;
                let added = run_sse(t, Some(last), b, dwell, span);
                seed(
                    &mut nodes,
                    &mut best,
                    Node { base: b, parent: Some(idx), runs: runs + 1, t_us: t + span, sse: sse + added },
                );
            }
        }
    }

    let horizon = finals.iter().map(|&(_, i)| nodes[i].t_us).fold(end_us, f64::max);
    let hi = first_index(horizon).min(x.len());
    let total = |i: usize| {
        let n = &nodes[i];
        let tail: f64 = x[first_index(n.t_us).min(hi)..hi].iter().map(|v| (v - event.baseline).powi(2)).sum();
        n.sse + tail
    };
    let rank = |i: usize| (expected_runs.is_some_and(|n| nodes[i].runs != n), total(i));
    let &(dir, best) = finals
        .iter()
        .min_by(|a, b| {
            let (ra, rb) = (rank(a.1), rank(b.1));
            ra.0.cmp(&rb.0).then(ra.1.total_cmp(&rb.1))
        })
        .ok_or_else(|| Error::Domain("event too short to decode".into()))?;

    let mut bases = Vec::with_capacity(nodes[best].runs);
    let mut cursor = Some(best);
    while let Some(i) = cursor {
        bases.push(nodes[i].base);
        cursor = nodes[i].parent;
    }
    // Collected last run first, i.e. in reverse entry order.
    if dir == TranslocationDirection::FiveToThree {
        bases.reverse();
    }
    let span_samples = hi.saturating_sub(first_index(start_us)).max(1);
    let level_misfit = (total(best) / span_samples as f64).sqrt();
    let timing_misfit = (nodes[best].t_us - end_us).abs() / (end_us - start_us).max(dt);
    Ok(SegmentDecode { bases: BaseSequence::new(bases), direction: dir, level_misfit, timing_misfit })
}
