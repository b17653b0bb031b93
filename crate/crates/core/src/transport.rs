//! Electrophoretic transport of a data block between a parking spot and a
//! station, modeled as a charged sphere under Stokes drag, plus the
//! laser-driven micro-pump and chamber-volume figures.
//!
//! All operations return unrounded SI values. The access-time report carries
//! the order-of-magnitude figures quoted for the original chip next to the
//! computed ones.

use serde::{Deserialize, Serialize};

use crate::codec::block_bit_capacity;
use crate::error::{Error, Result};

/// Reynolds number above which the Stokes-drag result is flagged.
pub const STOKES_REYNOLDS_LIMIT: f64 = 10.0;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidParams {
    /// kg/m³
    pub density: f64,
    /// N·s/m²
    pub viscosity: f64,
    /// °C, informational only.
    pub temperature_c: f64,
}

impl Default for FluidParams {
    fn default() -> Self {
        FluidParams { density: 1.0e3, viscosity: 1.0e-3, temperature_c: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleModel {
    /// Sphere radius, m.
    pub radius: f64,
    /// Transit speed, m/s.
    pub speed: f64,
    /// Charge carried per base, C.
    pub charge_per_base: f64,
}

impl Default for ParticleModel {
    fn default() -> Self {
        ParticleModel { radius: 5.0e-7, speed: 10.0, charge_per_base: 4.0e-19 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldParams {
    /// V
    pub applied_voltage: f64,
    /// m
    pub electrode_gap: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        FieldParams { applied_voltage: 10.0, electrode_gap: 1.0e-2 }
    }
}

impl FieldParams {
    /// Field strength, V/m.
    pub fn field(&self) -> f64 {
        self.applied_voltage / self.electrode_gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportKind {
    IdealizedSphere,
    EmpiricalGel,
    /// Charge-neutralized strand carried in a lipid vesicle; only a
    /// user-supplied mobility is modeled.
    Vesicle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportMode {
    pub mode: TransportKind,
    /// Multiplier on the idealized transit time in gel mode.
    pub empirical_slowdown: f64,
    /// m²/(V·s), required in vesicle mode.
    pub vesicle_mobility: Option<f64>,
}

impl Default for TransportMode {
    fn default() -> Self {
        TransportMode { mode: TransportKind::IdealizedSphere, empirical_slowdown: 1.0e3, vesicle_mobility: None }
    }
}

impl TransportMode {
    pub fn idealized() -> Self {
        TransportMode::default()
    }

    pub fn empirical_gel(slowdown: f64) -> Self {
        TransportMode { mode: TransportKind::EmpiricalGel, empirical_slowdown: slowdown, vesicle_mobility: None }
    }

    pub fn vesicle(mobility: Option<f64>) -> Self {
        TransportMode { mode: TransportKind::Vesicle, empirical_slowdown: 1.0, vesicle_mobility: mobility }
    }
}

pub fn reynolds_number(fluid: &FluidParams, particle: &ParticleModel) -> f64 {
    2.0 * fluid.density * particle.speed * particle.radius / fluid.viscosity
}

/// Drag force with a flag for leaving the laminar regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragForce {
    /// N
    pub force: f64,
    pub reynolds: f64,
    /// Set when the Reynolds number exceeds [`STOKES_REYNOLDS_LIMIT`].
    pub outside_stokes_regime: bool,
}

pub fn stokes_drag(fluid: &FluidParams, particle: &ParticleModel) -> DragForce {
    let reynolds = reynolds_number(fluid, particle);
    DragForce {
        force: 6.0 * std::f64::consts::PI * fluid.viscosity * particle.radius * particle.speed,
        reynolds,
        outside_stokes_regime: reynolds > STOKES_REYNOLDS_LIMIT,
    }
}

/// Charge needed for the field to balance the drag force.
pub fn required_charge(drag: f64, field: &FieldParams) -> Result<f64> {
    let e = field.field();
    if !(e > 0.0) {
        return Err(Error::ZeroField);
    }
    Ok(drag / e)
}

pub fn bases_for_charge(charge: f64, charge_per_base: f64) -> Result<f64> {
    if !(charge_per_base > 0.0) {
        return Err(Error::Domain("charge_per_base must be positive".into()));
    }
    Ok(charge / charge_per_base)
}

/// Spot-to-station transit time, s.
pub fn access_time(path_length: f64, particle: &ParticleModel, mode: &TransportMode, field: &FieldParams) -> Result<f64> {
    if path_length < 0.0 {
        return Err(Error::Domain("path length must be non-negative".into()));
    }
    match mode.mode {
        TransportKind::IdealizedSphere | TransportKind::EmpiricalGel => {
            if !(particle.speed > 0.0) {
                return Err(Error::Domain("particle speed must be positive".into()));
            }
            let ideal = path_length / particle.speed;
            if mode.mode == TransportKind::IdealizedSphere {
                Ok(ideal)
            } else {
                if mode.empirical_slowdown < 1.0 {
                    return Err(Error::Config("empirical_slowdown must be >= 1".into()));
                }
                Ok(mode.empirical_slowdown * ideal)
            }
        }
        TransportKind::Vesicle => {
            let mobility = mode
                .vesicle_mobility
                .ok_or_else(|| Error::Config("vesicle mode needs vesicle_mobility".into()))?;
            let drift = mobility * field.field();
            if !(drift > 0.0) {
                return Err(Error::Config("vesicle drift speed must be positive".into()));
            }
            Ok(path_length / drift)
        }
    }
}

/// Measured operating range of the laser-driven micro-pump.
pub const PUMP_POWER_RANGE_MW: (f64, f64) = (3.0, 9.0);
pub const PUMP_FREQUENCY_RANGE_HZ: (f64, f64) = (0.8, 5.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpRotation {
    pub frequency_hz: f64,
    /// True when the power lies outside the measured range.
    pub extrapolated: bool,
}

/// Rotation frequency from laser power, linear through the two measured
/// endpoints.
pub fn pump_rotation_frequency(power_mw: f64) -> Result<PumpRotation> {
    if power_mw < 0.0 || !power_mw.is_finite() {
        return Err(Error::Domain(format!("laser power {power_mw} mW")));
    }
    let (p0, p1) = PUMP_POWER_RANGE_MW;
    let (f0, f1) = PUMP_FREQUENCY_RANGE_HZ;
    // Endpoints are returned verbatim so they match exactly.
    let frequency_hz = if power_mw == p0 {
        f0
    } else if power_mw == p1 {
        f1
    } else {
        f0 + (f1 - f0) * (power_mw - p0) / (p1 - p0)
    };
    Ok(PumpRotation { frequency_hz, extrapolated: !(p0..=p1).contains(&power_mw) })
}

/// Volume of a cubic chamber, nL.
pub fn chamber_volume(side_um: f64) -> Result<f64> {
    if side_um < 0.0 {
        return Err(Error::Domain("chamber side must be non-negative".into()));
    }
    // 1 nL = 1e6 µm³
    Ok(side_um.powi(3) / 1.0e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    /// Figure quoted for the reference chip, where one exists.
    pub reference: Option<f64>,
}

impl Quantity {
    fn new(value: f64, reference: Option<f64>) -> Self {
        Quantity { value, reference }
    }
}

/// The full drag → charge → bases → capacity → transit-time chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessTimeReport {
    pub fluid: FluidParams,
    pub particle: ParticleModel,
    pub field_params: FieldParams,
    pub reynolds_number: Quantity,
    pub drag_force_n: Quantity,
    pub outside_stokes_regime: bool,
    pub field_v_per_m: Quantity,
    pub required_charge_c: Quantity,
    pub electrons_per_base: f64,
    pub bases: Quantity,
    pub block_bits: Quantity,
    /// Decimal megabytes (1e6 bytes).
    pub block_megabytes: Quantity,
    pub path_length_m: f64,
    pub access_time_idealized_s: Quantity,
    pub access_time_empirical_gel_s: Quantity,
    pub empirical_slowdown: f64,
}

pub fn access_time_report(
    fluid: &FluidParams,
    particle: &ParticleModel,
    field: &FieldParams,
    path_length: f64,
    gel_slowdown: f64,
) -> Result<AccessTimeReport> {
    let reynolds = reynolds_number(fluid, particle);
    let drag = stokes_drag(fluid, particle);
    let charge = required_charge(drag.force, field)?;
    let bases = bases_for_charge(charge, particle.charge_per_base)?;
    let bits = block_bit_capacity(bases.round() as u64) as f64;
    let ideal = access_time(path_length, particle, &TransportMode::idealized(), field)?;
    let gel = access_time(path_length, particle, &TransportMode::empirical_gel(gel_slowdown), field)?;
    Ok(AccessTimeReport {
        fluid: *fluid,
        particle: *particle,
        field_params: *field,
        reynolds_number: Quantity::new(reynolds, Some(10.0)),
        drag_force_n: Quantity::new(drag.force, Some(1.0e-7)),
        outside_stokes_regime: drag.outside_stokes_regime,
        field_v_per_m: Quantity::new(field.field(), Some(1.0e3)),
        required_charge_c: Quantity::new(charge, Some(1.0e-10)),
        electrons_per_base: particle.charge_per_base / ELEMENTARY_CHARGE,
        bases: Quantity::new(bases, Some(2.5e8)),
        block_bits: Quantity::new(bits, Some(block_bit_capacity(250_000_000) as f64)),
        block_megabytes: Quantity::new(bits / 8.0 / 1.0e6, Some(60.0)),
        path_length_m: path_length,
        access_time_idealized_s: Quantity::new(ideal, Some(1.0e-3)),
        access_time_empirical_gel_s: Quantity::new(gel, Some(1.0)),
        empirical_slowdown: gel_slowdown,
    })
}
