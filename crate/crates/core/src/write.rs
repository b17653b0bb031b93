//! Write stations.
//!
//! Two mechanisms are simulated. The photochemical station grows an
//! anchored strand one base at a time: a laser removes the blocking group
//! from the strand end, the strand visits one of four gated reservoirs of
//! blocked bases and picks up exactly one base, which leaves the end
//! blocked again. The activator scheme instead pulls a precursor strand of
//! identical active molecules, separated by inert spacers, under a write
//! head that switches selected molecules to an excited state.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{Base, BaseSequence};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateState {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "action", content = "base")]
pub enum StationAction {
    /// Laser pulse in the main chamber removes the end's blocking group.
    Deblock,
    OpenGate(Base),
    /// Strand enters the reservoir and picks up one blocked base.
    Attach(Base),
    CloseGate(Base),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub enum ProtocolViolation {
    #[error("attach attempted while the strand end is blocked")]
    AttachWhileBlocked,
    #[error("attach of {0} through a closed gate")]
    GateClosed(Base),
    #[error("gate {requested} opened while gate {open} is open")]
    SecondGateOpen { open: Base, requested: Base },
    #[error("gate {0} is already open")]
    GateAlreadyOpen(Base),
    #[error("gate {0} is already closed")]
    GateAlreadyClosed(Base),
    #[error("attach of {0} kept failing")]
    AttachRetriesExhausted(Base),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionOutcome {
    Done,
    AttachFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    #[serde(flatten)]
    pub action: StationAction,
    pub outcome: ActionOutcome,
    /// Station clock after the action, s.
    pub elapsed_s: f64,
}

/// Per-action durations for throughput what-ifs; all zero by default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionDurations {
    pub deblock_s: f64,
    pub gate_s: f64,
    pub attach_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationConfig {
    pub durations: ActionDurations,
    pub attach_failure_probability: f64,
    pub max_attach_attempts: u32,
    pub seed: u64,
}

impl Default for StationConfig {
    fn default() -> Self {
        StationConfig { durations: ActionDurations::default(), attach_failure_probability: 0.0, max_attach_attempts: 16, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct PhotochemicalStation {
    strand: BaseSequence,
    blocked: bool,
    gates: [GateState; 4],
    log: Vec<LogEntry>,
    clock_s: f64,
    config: StationConfig,
    rng: ChaCha8Rng,
}

impl PhotochemicalStation {
    /// Station holding an anchored precursor whose end starts blocked.
    pub fn new(precursor: BaseSequence, config: StationConfig) -> Self {
        let rng = rng::stream(config.seed, 0);
        PhotochemicalStation {
            strand: precursor,
            blocked: true,
            gates: [GateState::Closed; 4],
            log: Vec::new(),
            clock_s: 0.0,
            config,
            rng,
        }
    }

    pub fn strand(&self) -> &BaseSequence {
        &self.strand
    }

    pub fn is_blocked(&self) -> bool {
        self.blocked
    }

    pub fn gate(&self, base: Base) -> GateState {
        self.gates[base.bits() as usize]
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn elapsed_s(&self) -> f64 {
        self.clock_s
    }

    pub fn open_gate(&self) -> Option<Base> {
        Base::ALL.into_iter().find(|&b| self.gate(b) == GateState::Open)
    }

    /// At most one gate open. The blocked flag and strand length are kept
    /// consistent by construction.
    pub fn invariants_hold(&self) -> bool {
        self.gates.iter().filter(|&&g| g == GateState::Open).count() <= 1
    }

    /// Applies one action. Illegal actions leave the station untouched.
    pub fn apply(&mut self, action: StationAction) -> std::result::Result<ActionOutcome, ProtocolViolation> {
        let d = self.config.durations;
        let (outcome, duration) = match action {
            StationAction::Deblock => {
                self.blocked = false;
                (ActionOutcome::Done, d.deblock_s)
            }
            StationAction::OpenGate(b) => {
                match self.open_gate() {
                    Some(open) if open == b => return Err(ProtocolViolation::GateAlreadyOpen(b)),
                    Some(open) => return Err(ProtocolViolation::SecondGateOpen { open, requested: b }),
                    None => {}
                }
                self.gates[b.bits() as usize] = GateState::Open;
                (ActionOutcome::Done, d.gate_s)
            }
            StationAction::CloseGate(b) => {
                if self.gate(b) == GateState::Closed {
                    return Err(ProtocolViolation::GateAlreadyClosed(b));
                }
                self.gates[b.bits() as usize] = GateState::Closed;
                (ActionOutcome::Done, d.gate_s)
            }
            StationAction::Attach(b) => {
                if self.blocked {
                    return Err(ProtocolViolation::AttachWhileBlocked);
                }
                if self.gate(b) == GateState::Closed {
                    return Err(ProtocolViolation::GateClosed(b));
                }
                let p = self.config.attach_failure_probability;
                if p > 0.0 && self.rng.random_bool(p.min(1.0)) {
                    (ActionOutcome::AttachFailed, d.attach_s)
                } else {
                    self.strand.push(b);
                    self.blocked = true;
                    (ActionOutcome::Done, d.attach_s)
                }
            }
        };
        self.clock_s += duration;
        self.log.push(LogEntry { seq: self.log.len() as u64, action, outcome, elapsed_s: self.clock_s });
        Ok(outcome)
    }

    /// Appends `target` to the strand, one deblock / open / attach / close
    /// cycle per base. Returns the log entries written by this call.
    pub fn write_sequence(&mut self, target: &BaseSequence) -> Result<&[LogEntry]> {
        let first = self.log.len();
        for b in target.iter() {
            self.apply(StationAction::Deblock)?;
            self.apply(StationAction::OpenGate(b))?;
            let mut attempts = 0;
            while self.apply(StationAction::Attach(b))? == ActionOutcome::AttachFailed {
                attempts += 1;
                if attempts >= self.config.max_attach_attempts {
                    self.apply(StationAction::CloseGate(b))?;
                    return Err(ProtocolViolation::AttachRetriesExhausted(b).into());
                }
            }
            self.apply(StationAction::CloseGate(b))?;
        }
        Ok(&self.log[first..])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivatorKind {
    FarFieldOptical,
    NearFieldOptical,
    ElectricTip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivatorModel {
    pub kind: ActivatorKind,
    pub wavelength_nm: Option<f64>,
    /// Diameter of the region the write head exposes.
    pub spot_size_nm: Option<f64>,
}

impl ActivatorModel {
    pub fn far_field(wavelength_nm: f64) -> Self {
        ActivatorModel { kind: ActivatorKind::FarFieldOptical, wavelength_nm: Some(wavelength_nm), spot_size_nm: None }
    }

    pub fn near_field(spot_size_nm: f64) -> Self {
        ActivatorModel { kind: ActivatorKind::NearFieldOptical, wavelength_nm: None, spot_size_nm: Some(spot_size_nm) }
    }

    pub fn electric_tip(spot_size_nm: f64) -> Self {
        ActivatorModel { kind: ActivatorKind::ElectricTip, wavelength_nm: None, spot_size_nm: Some(spot_size_nm) }
    }

    /// Exposed diameter. A far-field optical spot defaults to half the
    /// wavelength.
    pub fn spot_nm(&self) -> Result<f64> {
        let spot = match (self.spot_size_nm, self.kind, self.wavelength_nm) {
            (Some(s), _, _) => s,
            (None, ActivatorKind::FarFieldOptical, Some(w)) => w / 2.0,
            _ => return Err(Error::Config(format!("{:?} activator needs a spot size", self.kind))),
        };
        if !(spot > 0.0) {
            return Err(Error::Config("activator spot size must be positive".into()));
        }
        Ok(spot)
    }
}

/// Shortest spacer that keeps neighbouring active molecules out of the
/// write head's exposed spot.
pub fn min_spacer_length(activator: &ActivatorModel, active_molecule_nm: f64) -> Result<f64> {
    Ok(activator.spot_nm()?.max(active_molecule_nm))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecursorStrand {
    /// Per-site state: 0 is ground, `1..levels` are excited states.
    pub sites: Vec<u8>,
    pub levels: u8,
    pub spacer_length_nm: f64,
    pub active_molecule_nm: f64,
    pub erasable: bool,
    /// Set once a full write pass has covered every site.
    pub written: bool,
}

impl PrecursorStrand {
    pub fn new(site_count: usize, spacer_length_nm: f64) -> Self {
        PrecursorStrand {
            sites: vec![0; site_count],
            levels: 2,
            spacer_length_nm,
            active_molecule_nm: 1.0,
            erasable: false,
            written: false,
        }
    }

    pub fn with_levels(mut self, levels: u8) -> Self {
        self.levels = levels;
        self
    }

    pub fn erasable(mut self, erasable: bool) -> Self {
        self.erasable = erasable;
        self
    }

    pub fn excited_count(&self) -> usize {
        self.sites.iter().filter(|&&s| s != 0).count()
    }

    /// Total strand length including spacers between sites.
    pub fn length_nm(&self) -> f64 {
        let n = self.sites.len() as f64;
        n * self.active_molecule_nm + (n - 1.0).max(0.0) * self.spacer_length_nm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "step")]
pub enum ActivatorStep {
    /// Nano-actuator pulls site `site` under the head.
    Pull { seq: u64, site: usize, position_nm: f64 },
    Energize { seq: u64, site: usize, level: u8 },
}

/// Writes `symbols` onto the strand, one site per symbol.
pub fn activate_pattern(
    strand: &PrecursorStrand,
    symbols: &[u8],
    activator: &ActivatorModel,
) -> Result<(PrecursorStrand, Vec<ActivatorStep>)> {
    if symbols.len() != strand.sites.len() {
        return Err(Error::Domain(format!(
            "pattern has {} symbols for {} sites",
            symbols.len(),
            strand.sites.len()
        )));
    }
    if strand.levels < 2 {
        return Err(Error::Config("active molecules need at least two states".into()));
    }
    if let Some(&bad) = symbols.iter().find(|&&s| s >= strand.levels) {
        return Err(Error::Domain(format!("symbol {bad} exceeds {}-state molecules", strand.levels)));
    }
    let required = min_spacer_length(activator, strand.active_molecule_nm)?;
    if strand.spacer_length_nm < required {
        return Err(Error::Adjacency { spacer_nm: strand.spacer_length_nm, required_nm: required });
    }
    if !strand.erasable {
        if let Some(i) = (0..symbols.len()).find(|&i| strand.sites[i] != 0 && strand.sites[i] != symbols[i]) {
            return Err(Error::Capability(format!("site {i} is already excited on a write-once strand")));
        }
    }

    let mut out = strand.clone();
    let mut log = Vec::with_capacity(2 * symbols.len());
    let pitch = strand.active_molecule_nm + strand.spacer_length_nm;
    for (i, &s) in symbols.iter().enumerate() {
        log.push(ActivatorStep::Pull { seq: log.len() as u64, site: i, position_nm: i as f64 * pitch });
        if s != 0 {
            log.push(ActivatorStep::Energize { seq: log.len() as u64, site: i, level: s });
        }
        out.sites[i] = s;
    }
    out.written = true;
    Ok((out, log))
}

/// Removes the spacers, leaving the site states in strand order.
pub fn splice(strand: &PrecursorStrand) -> Result<Vec<u8>> {
    if !strand.written && !strand.sites.is_empty() {
        return Err(Error::WriteIncomplete);
    }
    Ok(strand.sites.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EraseMode {
    DestroyAndRewrite,
    ReverseExcitation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisposalRecord {
    pub site_count: usize,
    pub excited_sites: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EraseOutcome {
    /// Strand destroyed; its parking spot is free for a fresh precursor.
    Disposed(DisposalRecord),
    Reset(PrecursorStrand),
}

pub fn erase_block(mode: EraseMode, strand: PrecursorStrand) -> Result<EraseOutcome> {
    match mode {
        EraseMode::DestroyAndRewrite => Ok(EraseOutcome::Disposed(DisposalRecord {
            site_count: strand.sites.len(),
            excited_sites: strand.excited_count(),
        })),
        EraseMode::ReverseExcitation => {
            if !strand.erasable {
                return Err(Error::Capability("excitation cannot be reversed on a write-once strand".into()));
            }
            let mut s = strand;
            s.sites.fill(0);
            s.written = false;
            Ok(EraseOutcome::Reset(s))
        }
    }
}

/// Bases as activator symbols: two binary sites per base, high bit first.
pub fn bases_to_bits(seq: &BaseSequence) -> Vec<u8> {
    seq.iter().flat_map(|b| [b.bits() >> 1, b.bits() & 1]).collect()
}

impl fmt::Display for StationAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StationAction::Deblock => write!(f, "deblock"),
            StationAction::OpenGate(b) => write!(f, "open-gate({b})"),
            StationAction::Attach(b) => write!(f, "attach({b})"),
            StationAction::CloseGate(b) => write!(f, "close-gate({b})"),
        }
    }
}
