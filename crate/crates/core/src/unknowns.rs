//! Deterministic ordering of the global unknown vector and of the residual
//! rows.
//!
//! Block order: electrical (|V| then phase angles), gas (nodal pressures
//! then pipe flows), heat hydraulics (same layout), heat thermal (nodal
//! temperatures then pipe outlet temperatures). Fixed boundary quantities
//! (slack voltage, reference pressures, fixed supply temperatures) never
//! appear. Residual rows use the same partitioning: active-power mismatches
//! pair with the magnitude positions, reactive with the angle positions, and
//! so on, which keeps every diagonal block square.

use std::ops::Range;

use crate::graph::{ElectricalNodeKind, HydraulicNodeKind, MultiEnergyNetwork};

/// The eight state quantities, in global block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    VoltageMagnitude,
    VoltageAngle,
    GasPressure,
    GasFlow,
    HeatPressure,
    HeatFlow,
    NodeTemperature,
    OutletTemperature,
}

/// One unknown: a quantity attached to a node or edge of its layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnknownKey {
    pub quantity: Quantity,
    /// Node index for nodal quantities, pipe/edge index otherwise.
    pub index: usize,
}

/// Half-open index ranges of the four diagonal blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainSpans {
    pub electrical: Range<usize>,
    pub gas: Range<usize>,
    pub heat_hydraulic: Range<usize>,
    pub heat_thermal: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct UnknownMap {
    vm: Vec<Option<usize>>,
    va: Vec<Option<usize>>,
    gas_pressure: Vec<Option<usize>>,
    gas_flow: Vec<usize>,
    heat_pressure: Vec<Option<usize>>,
    heat_flow: Vec<usize>,
    node_temperature: Vec<Option<usize>>,
    outlet_temperature: Vec<usize>,
    keys: Vec<UnknownKey>,
    spans: DomainSpans,
    n_electrical_free: usize,
    n_gas_free: usize,
    n_heat_free: usize,
    n_thermal_free: usize,
}

/// Builds the bijective map from (quantity, node-or-edge) to global vector
/// position for the given network.
pub fn ordered_unknowns(network: &MultiEnergyNetwork) -> UnknownMap {
    let mut keys = Vec::new();
    let mut pos = 0usize;

    // electrical block: magnitudes of PQ nodes, then angles of non-slack nodes
    let elec_start = pos;
    let n_elec = network.electrical.nodes.len();
    let mut vm = vec![None; n_elec];
    let mut va = vec![None; n_elec];
    let mut n_electrical_free = 0;
    for (i, node) in network.electrical.nodes.iter().enumerate() {
        if node.kind != ElectricalNodeKind::Slack {
            vm[i] = Some(pos);
            keys.push(UnknownKey { quantity: Quantity::VoltageMagnitude, index: i });
            pos += 1;
            n_electrical_free += 1;
        }
    }
    for (i, node) in network.electrical.nodes.iter().enumerate() {
        if node.kind != ElectricalNodeKind::Slack {
            va[i] = Some(pos);
            keys.push(UnknownKey { quantity: Quantity::VoltageAngle, index: i });
            pos += 1;
        }
    }
    let elec_end = pos;

    // gas block: non-reference pressures, then all pipe flows
    let gas_start = pos;
    let n_gas = network.gas.nodes.len();
    let mut gas_pressure = vec![None; n_gas];
    let mut n_gas_free = 0;
    for (i, node) in network.gas.nodes.iter().enumerate() {
        if node.kind != HydraulicNodeKind::Reference {
            gas_pressure[i] = Some(pos);
            keys.push(UnknownKey { quantity: Quantity::GasPressure, index: i });
            pos += 1;
            n_gas_free += 1;
        }
    }
    let mut gas_flow = Vec::with_capacity(network.gas.pipes.len());
    for b in 0..network.gas.pipes.len() {
        gas_flow.push(pos);
        keys.push(UnknownKey { quantity: Quantity::GasFlow, index: b });
        pos += 1;
    }
    let gas_end = pos;

    // heat hydraulic block
    let heat_start = pos;
    let n_heat = network.heat.hydraulic.nodes.len();
    let mut heat_pressure = vec![None; n_heat];
    let mut n_heat_free = 0;
    for (i, node) in network.heat.hydraulic.nodes.iter().enumerate() {
        if node.kind != HydraulicNodeKind::Reference {
            heat_pressure[i] = Some(pos);
            keys.push(UnknownKey { quantity: Quantity::HeatPressure, index: i });
            pos += 1;
            n_heat_free += 1;
        }
    }
    let mut heat_flow = Vec::with_capacity(network.heat.hydraulic.pipes.len());
    for b in 0..network.heat.hydraulic.pipes.len() {
        heat_flow.push(pos);
        keys.push(UnknownKey { quantity: Quantity::HeatFlow, index: b });
        pos += 1;
    }
    let heat_end = pos;

    // heat thermal block: free nodal temperatures, then pipe outlet temperatures
    let thermal_start = pos;
    let mut node_temperature = vec![None; n_heat];
    let mut n_thermal_free = 0;
    for i in 0..n_heat {
        let fixed = network
            .heat
            .node_thermal
            .get(i)
            .is_some_and(|t| t.temperature_fixed_k.is_some());
        if !fixed {
            node_temperature[i] = Some(pos);
            keys.push(UnknownKey { quantity: Quantity::NodeTemperature, index: i });
            pos += 1;
            n_thermal_free += 1;
        }
    }
    let mut outlet_temperature = Vec::with_capacity(network.heat.hydraulic.pipes.len());
    for b in 0..network.heat.hydraulic.pipes.len() {
        outlet_temperature.push(pos);
        keys.push(UnknownKey { quantity: Quantity::OutletTemperature, index: b });
        pos += 1;
    }
    let thermal_end = pos;

    UnknownMap {
        vm,
        va,
        gas_pressure,
        gas_flow,
        heat_pressure,
        heat_flow,
        node_temperature,
        outlet_temperature,
        keys,
        spans: DomainSpans {
            electrical: elec_start..elec_end,
            gas: gas_start..gas_end,
            heat_hydraulic: heat_start..heat_end,
            heat_thermal: thermal_start..thermal_end,
        },
        n_electrical_free,
        n_gas_free,
        n_heat_free,
        n_thermal_free,
    }
}

impl UnknownMap {
    pub fn total(&self) -> usize {
        self.keys.len()
    }

    pub fn spans(&self) -> &DomainSpans {
        &self.spans
    }

    pub fn keys(&self) -> &[UnknownKey] {
        &self.keys
    }

    /// Inverse lookup; `None` for fixed quantities and out-of-range indices.
    pub fn position(&self, key: UnknownKey) -> Option<usize> {
        let slot = |v: &Vec<Option<usize>>| v.get(key.index).copied().flatten();
        let direct = |v: &Vec<usize>| v.get(key.index).copied();
        match key.quantity {
            Quantity::VoltageMagnitude => slot(&self.vm),
            Quantity::VoltageAngle => slot(&self.va),
            Quantity::GasPressure => slot(&self.gas_pressure),
            Quantity::GasFlow => direct(&self.gas_flow),
            Quantity::HeatPressure => slot(&self.heat_pressure),
            Quantity::HeatFlow => direct(&self.heat_flow),
            Quantity::NodeTemperature => slot(&self.node_temperature),
            Quantity::OutletTemperature => direct(&self.outlet_temperature),
        }
    }

    pub fn col_vm(&self, node: usize) -> Option<usize> {
        self.vm[node]
    }
    pub fn col_va(&self, node: usize) -> Option<usize> {
        self.va[node]
    }
    pub fn col_gas_pressure(&self, node: usize) -> Option<usize> {
        self.gas_pressure[node]
    }
    pub fn col_gas_flow(&self, pipe: usize) -> usize {
        self.gas_flow[pipe]
    }
    pub fn col_heat_pressure(&self, node: usize) -> Option<usize> {
        self.heat_pressure[node]
    }
    pub fn col_heat_flow(&self, pipe: usize) -> usize {
        self.heat_flow[pipe]
    }
    pub fn col_node_temperature(&self, node: usize) -> Option<usize> {
        self.node_temperature[node]
    }
    pub fn col_outlet_temperature(&self, pipe: usize) -> usize {
        self.outlet_temperature[pipe]
    }

    // Residual rows reuse the column ranks: the active-power row of a node
    // sits where its magnitude column sits, the reactive row is shifted by
    // the count of free electrical nodes, and likewise for the other blocks.

    pub fn row_active_power(&self, node: usize) -> Option<usize> {
        self.vm[node]
    }
    pub fn row_reactive_power(&self, node: usize) -> Option<usize> {
        self.vm[node].map(|p| p + self.n_electrical_free)
    }
    pub fn row_gas_continuity(&self, node: usize) -> Option<usize> {
        self.gas_pressure[node]
    }
    pub fn row_gas_pressure_balance(&self, pipe: usize) -> usize {
        self.spans.gas.start + self.n_gas_free + pipe
    }
    pub fn row_heat_continuity(&self, node: usize) -> Option<usize> {
        self.heat_pressure[node]
    }
    pub fn row_heat_pressure_balance(&self, pipe: usize) -> usize {
        self.spans.heat_hydraulic.start + self.n_heat_free + pipe
    }
    pub fn row_thermal_node(&self, node: usize) -> Option<usize> {
        self.node_temperature[node]
    }
    pub fn row_thermal_pipe(&self, pipe: usize) -> usize {
        self.spans.heat_thermal.start + self.n_thermal_free + pipe
    }
}
