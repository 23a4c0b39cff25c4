//! Coupling layer: duplicated nodes, inter-layer device edges and the
//! conversion balances that translate device operation into per-layer
//! injections.
//!
//! Devices enter the solver through the right-hand side only. Their
//! injections depend on exogenous inputs (setpoints, ambient temperature),
//! never on the iterate, which keeps the Jacobian block-diagonal.

use crate::error::{Error, Result};
use crate::graph::{Carrier, MultiEnergyNetwork};

/// A physical node replicated into the coupling layer so that a device edge
/// can connect two carriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CouplingNode {
    pub carrier: Carrier,
    /// Index of the mirrored node within its carrier layer.
    pub node: usize,
}

/// Conversion direction of a device. The (input, output) carriers are fixed
/// per kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceKind {
    /// Gas turbine / CHP unit operated for electricity.
    GasToElectric,
    /// Electrolyzer feeding synthetic gas into the gas layer.
    ElectricToGas,
    /// Gas boiler serving the heat layer.
    GasBoiler,
    /// Electric heat pump serving the heat layer.
    HeatPump,
}

impl DeviceKind {
    pub fn carriers(&self) -> (Carrier, Carrier) {
        match self {
            DeviceKind::GasToElectric => (Carrier::Gas, Carrier::Electricity),
            DeviceKind::ElectricToGas => (Carrier::Electricity, Carrier::Gas),
            DeviceKind::GasBoiler => (Carrier::Gas, Carrier::Heat),
            DeviceKind::HeatPump => (Carrier::Electricity, Carrier::Heat),
        }
    }
}

/// Coefficient-of-performance model for heat pumps.
#[derive(Debug, Clone, PartialEq)]
pub enum CopModel {
    /// (source temperature K, COP) pairs, sorted by temperature. Linear
    /// interpolation inside the table, constant extrapolation outside.
    Table { points: Vec<(f64, f64)> },
    /// Fraction of the Carnot limit against a fixed sink temperature,
    /// clamped to [cop_min, cop_max].
    CarnotFraction {
        quality: f64,
        t_sink_k: f64,
        cop_min: f64,
        cop_max: f64,
    },
}

/// Evaluates a COP model at the given source temperature. A source at or
/// above the Carnot sink returns the clamp maximum rather than an error.
pub fn cop_evaluate(model: &CopModel, t_source_k: f64) -> f64 {
    match model {
        CopModel::Table { points } => {
            if points.is_empty() {
                return 1.0;
            }
            if t_source_k <= points[0].0 {
                return points[0].1;
            }
            if t_source_k >= points[points.len() - 1].0 {
                return points[points.len() - 1].1;
            }
            for window in points.windows(2) {
                let (t0, c0) = window[0];
                let (t1, c1) = window[1];
                if t_source_k <= t1 {
                    let alpha = (t_source_k - t0) / (t1 - t0);
                    return c0 + alpha * (c1 - c0);
                }
            }
            points[points.len() - 1].1
        }
        CopModel::CarnotFraction {
            quality,
            t_sink_k,
            cop_min,
            cop_max,
        } => {
            if t_source_k >= *t_sink_k {
                return *cop_max;
            }
            let cop = quality * t_sink_k / (t_sink_k - t_source_k);
            cop.clamp(*cop_min, *cop_max)
        }
    }
}

/// Output-per-input model of a device.
#[derive(Debug, Clone, PartialEq)]
pub enum Conversion {
    /// Fixed efficiency in (0, 1].
    Efficiency(f64),
    /// Temperature-dependent COP (heat pumps).
    Cop(CopModel),
}

impl Conversion {
    pub fn factor(&self, t_source_k: f64) -> f64 {
        match self {
            Conversion::Efficiency(eta) => *eta,
            Conversion::Cop(model) => cop_evaluate(model, t_source_k),
        }
    }
}

/// Directed inter-layer edge between two duplicated coupling nodes.
#[derive(Debug, Clone)]
pub struct CouplingDevice {
    pub name: String,
    pub kind: DeviceKind,
    /// Index into the coupling layer's duplicated nodes (consumption side).
    pub input_node: usize,
    /// Index into the coupling layer's duplicated nodes (production side).
    pub output_node: usize,
    pub conversion: Conversion,
    /// Maximum output power, watts.
    pub rating_w: f64,
    /// Normalized setpoint profile column, if operated from a time series.
    pub profile: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CouplingLayer {
    pub nodes: Vec<CouplingNode>,
    pub devices: Vec<CouplingDevice>,
    /// Superior heating value used to map gas-side powers onto mass flow,
    /// J/kg. Default corresponds to 11.06 kWh/kg.
    pub gas_heating_value_j_per_kg: f64,
}

pub const DEFAULT_GAS_HEATING_VALUE_J_PER_KG: f64 = 11.06 * 3.6e6;

impl Default for CouplingLayer {
    fn default() -> Self {
        CouplingLayer {
            nodes: Vec::new(),
            devices: Vec::new(),
            gas_heating_value_j_per_kg: DEFAULT_GAS_HEATING_VALUE_J_PER_KG,
        }
    }
}

impl CouplingLayer {
    /// Returns the index of the duplicated node for (carrier, node), adding
    /// it if not present yet.
    pub fn duplicate_node(&mut self, carrier: Carrier, node: usize) -> usize {
        if let Some(pos) = self
            .nodes
            .iter()
            .position(|c| c.carrier == carrier && c.node == node)
        {
            return pos;
        }
        self.nodes.push(CouplingNode { carrier, node });
        self.nodes.len() - 1
    }
}

/// Consumption and production of one device evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceBalance {
    pub input_w: f64,
    pub output_w: f64,
}

/// Evaluates a device at the given input power: the input-side injection is
/// the negated input, the output side produces `factor * input`. Errors when
/// the implied output exceeds the rating.
pub fn device_balance(
    device: &CouplingDevice,
    input_power_w: f64,
    ambient_k: f64,
) -> Result<DeviceBalance> {
    let factor = device.conversion.factor(ambient_k);
    let output_w = factor * input_power_w;
    if output_w > device.rating_w * (1.0 + 1e-9) {
        return Err(Error::DeviceOverloaded(
            device.name.clone(),
            output_w,
            device.rating_w,
        ));
    }
    Ok(DeviceBalance {
        input_w: input_power_w,
        output_w,
    })
}

/// Exogenous per-timestep inputs driving the coupling layer.
#[derive(Debug, Clone)]
pub struct ExogenousInputs {
    pub ambient_k: f64,
    /// Normalized output setpoint per device, clamped to [0, 1].
    pub setpoints: Vec<f64>,
}

impl ExogenousInputs {
    pub fn full_output(network: &MultiEnergyNetwork, ambient_k: f64) -> Self {
        ExogenousInputs {
            ambient_k,
            setpoints: vec![1.0; network.coupling.devices.len()],
        }
    }
}

/// Per-layer injection deltas keyed by physical node index.
///
/// Sign conventions match the per-layer load conventions: electrical values
/// are net injections (consumption negative), gas values are net extraction
/// mass flows (consumption positive), heat values are net heat demand
/// (consumption positive).
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionDeltas {
    pub electrical_p_w: Vec<f64>,
    pub gas_kg_per_s: Vec<f64>,
    pub heat_w: Vec<f64>,
}

impl InjectionDeltas {
    pub fn zeros(network: &MultiEnergyNetwork) -> Self {
        InjectionDeltas {
            electrical_p_w: vec![0.0; network.electrical.nodes.len()],
            gas_kg_per_s: vec![0.0; network.gas.nodes.len()],
            heat_w: vec![0.0; network.heat.hydraulic.nodes.len()],
        }
    }
}

/// Evaluates every device for one timestep and accumulates the resulting
/// injections onto the physical layers. Heat-demand-driven devices (boiler,
/// heat pump) are evaluated first, then electricity-driven, then gas-driven;
/// the order is deterministic and, since injections superpose, the result is
/// idempotent for fixed inputs.
pub fn apply_coupling(
    network: &MultiEnergyNetwork,
    inputs: &ExogenousInputs,
) -> Result<InjectionDeltas> {
    let coupling = &network.coupling;
    if inputs.setpoints.len() != coupling.devices.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} device setpoints for {} devices",
            inputs.setpoints.len(),
            coupling.devices.len()
        )));
    }
    let mut deltas = InjectionDeltas::zeros(network);

    let order_class = |kind: DeviceKind| match kind {
        DeviceKind::GasBoiler | DeviceKind::HeatPump => 0,
        DeviceKind::ElectricToGas => 1,
        DeviceKind::GasToElectric => 2,
    };
    let mut order: Vec<usize> = (0..coupling.devices.len()).collect();
    order.sort_by_key(|&i| (order_class(coupling.devices[i].kind), i));

    for device_idx in order {
        let device = &coupling.devices[device_idx];
        let setpoint = inputs.setpoints[device_idx].clamp(0.0, 1.0);
        let factor = device.conversion.factor(inputs.ambient_k);
        let input_w = setpoint * device.rating_w / factor;
        let balance = device_balance(device, input_w, inputs.ambient_k)?;

        let resolve = |cnode: usize| -> Result<&CouplingNode> {
            coupling
                .nodes
                .get(cnode)
                .ok_or_else(|| Error::UnresolvedCouplingNode(device.name.clone()))
        };
        let input = *resolve(device.input_node)?;
        let output = *resolve(device.output_node)?;

        add_injection(network, &mut deltas, input, -balance.input_w, device)?;
        add_injection(network, &mut deltas, output, balance.output_w, device)?;
    }
    Ok(deltas)
}

fn add_injection(
    network: &MultiEnergyNetwork,
    deltas: &mut InjectionDeltas,
    at: CouplingNode,
    power_w: f64,
    device: &CouplingDevice,
) -> Result<()> {
    let unresolved = || Error::UnresolvedCouplingNode(device.name.clone());
    match at.carrier {
        Carrier::Electricity => {
            let slot = deltas
                .electrical_p_w
                .get_mut(at.node)
                .ok_or_else(unresolved)?;
            *slot += power_w;
        }
        Carrier::Gas => {
            let slot = deltas.gas_kg_per_s.get_mut(at.node).ok_or_else(unresolved)?;
            // extraction positive, so an injected power reduces extraction
            *slot -= power_w / network.coupling.gas_heating_value_j_per_kg;
        }
        Carrier::Heat => {
            let slot = deltas.heat_w.get_mut(at.node).ok_or_else(unresolved)?;
            *slot -= power_w;
        }
    }
    Ok(())
}
