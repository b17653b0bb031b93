//! Chip surface: parking spots, the binary valve tree, address lines and
//! storage-density arithmetic.
//!
//! The valve tree is a complete binary tree with the read/write station at
//! the root. Every valve at depth `d` hangs off address line `d`, and line 0
//! (nearest the station) carries the most significant address bit. A relaxed
//! valve sits on outlet 1, an energized one on outlet 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UM_PER_CM: f64 = 1.0e4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChipLayout {
    pub spot_count: u64,
    pub spot_pitch_um: f64,
    pub chip_side_cm: f64,
    pub layer_thickness_um: f64,
    pub block_bytes: u64,
    pub station_count: u32,
    /// Per-valve switching latency; valves are instantaneous by default.
    pub valve_switch_latency_s: f64,
}

impl Default for ChipLayout {
    fn default() -> Self {
        ChipLayout {
            spot_count: 16,
            spot_pitch_um: 10.0,
            chip_side_cm: 1.0,
            layer_thickness_um: 10.0,
            block_bytes: 1_000_000,
            station_count: 1,
            valve_switch_latency_s: 0.0,
        }
    }
}

impl ChipLayout {
    /// Layout with the given spot count and chip side, other fields default.
    pub fn with_spots(spot_count: u64, chip_side_cm: f64) -> Self {
        ChipLayout { spot_count, chip_side_cm, ..Default::default() }
    }

    /// Geometric checks. Routing additionally needs a power-of-two spot
    /// count; see [`ChipLayout::validate_addressable`].
    pub fn validate(&self) -> Result<()> {
        if self.spot_count == 0 {
            return Err(Error::InvalidLayout("spot_count must be at least 1".into()));
        }
        if !(self.spot_pitch_um > 0.0 && self.chip_side_cm > 0.0 && self.layer_thickness_um > 0.0) {
            return Err(Error::InvalidLayout(
                "pitch, chip side and layer thickness must be positive".into(),
            ));
        }
        if self.station_count == 0 {
            return Err(Error::InvalidLayout("station_count must be at least 1".into()));
        }
        // Small relative slack so that exactly-filled chips (1e6 spots of
        // 10 µm on 1 cm²) pass despite rounding.
        if self.footprint_area_cm2() > self.chip_area_cm2() * (1.0 + 1e-9) {
            return Err(Error::InvalidLayout(format!(
                "{} spots at {} µm pitch do not fit on a {} cm chip",
                self.spot_count, self.spot_pitch_um, self.chip_side_cm
            )));
        }
        Ok(())
    }

    pub fn validate_addressable(&self) -> Result<()> {
        self.validate()?;
        self.address_lines().map(|_| ())
    }

    pub fn chip_area_cm2(&self) -> f64 {
        self.chip_side_cm * self.chip_side_cm
    }

    /// Area covered by the spots themselves.
    pub fn footprint_area_cm2(&self) -> f64 {
        let pitch_cm = self.spot_pitch_um / UM_PER_CM;
        self.spot_count as f64 * pitch_cm * pitch_cm
    }

    pub fn total_bytes(&self) -> f64 {
        self.spot_count as f64 * self.block_bytes as f64
    }

    /// Transport path between a spot and the station, taken as one chip side.
    pub fn transport_path_m(&self) -> f64 {
        self.chip_side_cm / 100.0
    }

    /// Station serving a spot; spots are dealt round-robin.
    pub fn station_for(&self, address: u64) -> u32 {
        (address % u64::from(self.station_count)) as u32
    }

    pub fn address_lines(&self) -> Result<u32> {
        address_line_count(self.spot_count)
    }
}

pub fn address_line_count(spot_count: u64) -> Result<u32> {
    if spot_count == 0 || !spot_count.is_power_of_two() {
        return Err(Error::InvalidLayout(format!(
            "spot_count {spot_count} is not a power of two"
        )));
    }
    Ok(spot_count.trailing_zeros())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValveCommand {
    Relaxed,
    Energized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValvePosition {
    Outlet1,
    Outlet2,
}

impl ValveCommand {
    /// Spring-return valve: relaxed rests on outlet 1.
    pub fn position(self) -> ValvePosition {
        match self {
            ValveCommand::Relaxed => ValvePosition::Outlet1,
            ValveCommand::Energized => ValvePosition::Outlet2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ValveState {
    /// Address line (tree depth) driving this valve.
    pub valve_id: u32,
    pub position: ValvePosition,
    pub command: ValveCommand,
}

impl ValveState {
    pub fn new(valve_id: u32, command: ValveCommand) -> Self {
        ValveState { valve_id, position: command.position(), command }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteDirection {
    ToStation,
    ToSpot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub spot_address: u64,
    pub valve_commands: Vec<ValveState>,
    pub direction: RouteDirection,
}

impl Route {
    pub fn commands(&self) -> impl Iterator<Item = ValveCommand> + '_ {
        self.valve_commands.iter().map(|v| v.command)
    }
}

pub fn compute_route(layout: &ChipLayout, spot_address: u64, direction: RouteDirection) -> Result<Route> {
    let lines = address_line_count(layout.spot_count)?;
    if spot_address >= layout.spot_count {
        return Err(Error::Addressing { address: spot_address, spot_count: layout.spot_count });
    }
    let valve_commands = (0..lines)
        .map(|line| {
            let bit = (spot_address >> (lines - 1 - line)) & 1;
            let cmd = if bit == 1 { ValveCommand::Energized } else { ValveCommand::Relaxed };
            ValveState::new(line, cmd)
        })
        .collect();
    Ok(Route { spot_address, valve_commands, direction })
}

/// Bank of address-line drivers for one valve tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValveBank {
    lines: Vec<ValveCommand>,
}

impl ValveBank {
    pub fn new(line_count: u32) -> Self {
        ValveBank { lines: vec![ValveCommand::Relaxed; line_count as usize] }
    }

    pub fn apply(&mut self, route: &Route) -> Result<()> {
        if route.valve_commands.len() != self.lines.len() {
            return Err(Error::InvalidLayout(format!(
                "route drives {} lines, bank has {}",
                route.valve_commands.len(),
                self.lines.len()
            )));
        }
        for v in &route.valve_commands {
            self.lines[v.valve_id as usize] = v.command;
        }
        Ok(())
    }

    /// Drops every command signal; springs return all valves to outlet 1.
    pub fn clear(&mut self) {
        self.lines.fill(ValveCommand::Relaxed);
    }

    pub fn line(&self, line: u32) -> ValveCommand {
        self.lines[line as usize]
    }

    /// Follows the canals from the station down to the spot the current
    /// valve positions connect to.
    pub fn trace_from_station(&self) -> u64 {
        self.lines.iter().fold(0u64, |node, cmd| {
            let outlet = match cmd.position() {
                ValvePosition::Outlet1 => 0,
                ValvePosition::Outlet2 => 1,
            };
            (node << 1) | outlet
        })
    }
}

/// Stored bytes per cm² of chip surface.
pub fn areal_density(layout: &ChipLayout) -> f64 {
    layout.total_bytes() / layout.chip_area_cm2()
}

/// Stored bytes per cm³ when layouts are stacked in layers.
pub fn volumetric_density(layout: &ChipLayout) -> f64 {
    areal_density(layout) * layers_per_cm(layout)
}

pub fn layers_per_cm(layout: &ChipLayout) -> f64 {
    UM_PER_CM / layout.layer_thickness_um
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutReport {
    pub spot_count: u64,
    /// `None` when the spot count is not a power of two.
    pub address_lines: Option<u32>,
    pub station_count: u32,
    pub chip_area_cm2: f64,
    pub footprint_area_cm2: f64,
    pub total_bytes: f64,
    pub areal_density_bytes_per_cm2: f64,
    pub areal_density_tb_per_cm2: f64,
    pub layers_per_cm: f64,
    pub volumetric_density_bytes_per_cm3: f64,
    pub volumetric_density_pb_per_cm3: f64,
}

pub fn layout_report(layout: &ChipLayout) -> Result<LayoutReport> {
    layout.validate()?;
    let areal = areal_density(layout);
    let volumetric = volumetric_density(layout);
    Ok(LayoutReport {
        spot_count: layout.spot_count,
        address_lines: layout.address_lines().ok(),
        station_count: layout.station_count,
        chip_area_cm2: layout.chip_area_cm2(),
        footprint_area_cm2: layout.footprint_area_cm2(),
        total_bytes: layout.total_bytes(),
        areal_density_bytes_per_cm2: areal,
        areal_density_tb_per_cm2: areal / 1e12,
        layers_per_cm: layers_per_cm(layout),
        volumetric_density_bytes_per_cm3: volumetric,
        volumetric_density_pb_per_cm3: volumetric / 1e15,
    })
}
