//! District-heating thermal kernel: along-pipe cooling, nodal mixing
//! balances and their derivatives.
//!
//! Flows enter these equations as fixed parameters of the current iterate,
//! so every residual here is exactly linear in the temperatures. Pipe inlet
//! sides are re-resolved from the flow signs on every call, which keeps the
//! upwinding consistent across flow reversals.

use crate::error::{Error, Result};
use crate::graph::{connected_components, HeatLayer, HydraulicNodeKind};
use crate::hydraulics::{FluidModel, HydraulicState};

/// Flows below this magnitude (kg/s) are treated as stagnant.
pub const FLOW_EPS_KG_PER_S: f64 = 1e-12;

/// Fallback supply temperature when a component has no fixed-temperature
/// node (kelvin, 80 degC).
pub const DEFAULT_SUPPLY_K: f64 = 353.15;

/// Lumped-return conversion between nodal heat demand and the mass flow
/// drawn from the supply network.
#[derive(Debug, Clone, Copy)]
pub struct HeatLoadConversion {
    pub return_temperature_k: f64,
}

impl Default for HeatLoadConversion {
    fn default() -> Self {
        // 50 degC lumped return
        HeatLoadConversion {
            return_temperature_k: 323.15,
        }
    }
}

/// Temperature iterate: mixed nodal temperatures and per-pipe outlet
/// temperatures, kelvin. Fixed supply nodes keep their boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    pub node_temp_k: Vec<f64>,
    pub outlet_temp_k: Vec<f64>,
}

impl ThermalState {
    /// Every temperature at the component supply setpoint.
    pub fn at_supply(heat: &HeatLayer) -> Self {
        let supply = component_supply_temperatures(heat);
        let outlet = heat
            .hydraulic
            .pipes
            .iter()
            .map(|p| supply[p.from])
            .collect();
        ThermalState {
            node_temp_k: supply,
            outlet_temp_k: outlet,
        }
    }
}

/// For every node, the fixed supply temperature of its connected component
/// (falling back to the default when a component has none).
pub fn component_supply_temperatures(heat: &HeatLayer) -> Vec<f64> {
    let n = heat.hydraulic.nodes.len();
    let (component, n_components) = connected_components(
        n,
        heat.hydraulic.pipes.iter().map(|p| (p.from, p.to)),
    );
    let mut supply = vec![DEFAULT_SUPPLY_K; n_components];
    for (i, thermal) in heat.node_thermal.iter().enumerate() {
        if let Some(t) = thermal.temperature_fixed_k {
            supply[component[i]] = t;
        }
    }
    (0..n).map(|i| supply[component[i]]).collect()
}

/// Mass drawn from the supply network per node for the given heat demands,
/// using the lumped-return closure at the component supply setpoint.
pub fn heat_mass_extraction(
    heat: &HeatLayer,
    heat_demand_w: &[f64],
    conversion: &HeatLoadConversion,
    fluid: &FluidModel,
) -> Vec<f64> {
    let supply = component_supply_temperatures(heat);
    let c_p = fluid.c_p_j_per_kg_k();
    heat_demand_w
        .iter()
        .zip(&supply)
        .map(|(&q, &t_sup)| {
            let dt = (t_sup - conversion.return_temperature_k).max(1.0);
            q / (c_p * dt)
        })
        .collect()
}

/// Outlet temperature of a pipe segment under the exponential cooling model.
/// Zero flow returns the ambient floor; the solver instead ties stagnant
/// pipes to their upstream node so that a lossless dead network stays at the
/// supply temperature.
pub fn pipe_outlet_temperature(
    mdot_kg_per_s: f64,
    t_in_k: f64,
    pipe: &crate::graph::Pipe,
    thermal: &crate::graph::PipeThermal,
    fluid: &FluidModel,
) -> f64 {
    if mdot_kg_per_s.abs() < FLOW_EPS_KG_PER_S {
        return thermal.ambient_k;
    }
    let c_p = fluid.c_p_j_per_kg_k();
    let exponent = thermal.u_w_per_m2_k * std::f64::consts::PI * pipe.diameter_m * pipe.length_m
        / (mdot_kg_per_s.abs() * c_p);
    thermal.ambient_k + (t_in_k - thermal.ambient_k) * (-exponent).exp()
}

#[derive(Debug, Clone)]
pub struct ThermalMismatch {
    /// Nodal energy residual, watts. Fixed-temperature rows are reported but
    /// excluded from the solve.
    pub node_w: Vec<f64>,
    /// Per-pipe energy residual, watts.
    pub pipe_w: Vec<f64>,
}

/// Advective structure of the heat layer at the current flows.
struct Advection {
    /// (pipe, |mdot|) flowing into each node.
    inflow: Vec<Vec<(usize, f64)>>,
    /// Sum of |mdot| leaving each node through pipes.
    outflow_sum: Vec<f64>,
    /// Inlet node per pipe after upwinding (from-node for stagnant pipes).
    inlet: Vec<usize>,
    /// |mdot| per pipe.
    magnitude: Vec<f64>,
}

fn advection(heat: &HeatLayer, hyd: &HydraulicState) -> Advection {
    let n = heat.hydraulic.nodes.len();
    let mut inflow = vec![Vec::new(); n];
    let mut outflow_sum = vec![0.0; n];
    let mut inlet = Vec::with_capacity(heat.hydraulic.pipes.len());
    let mut magnitude = Vec::with_capacity(heat.hydraulic.pipes.len());
    for (b, pipe) in heat.hydraulic.pipes.iter().enumerate() {
        let flow = hyd.pipe_flow_kg_per_s[b];
        let m = flow.abs();
        magnitude.push(m);
        let (upwind, downwind) = if flow >= 0.0 {
            (pipe.from, pipe.to)
        } else {
            (pipe.to, pipe.from)
        };
        inlet.push(upwind);
        if m >= FLOW_EPS_KG_PER_S {
            inflow[downwind].push((b, m));
            outflow_sum[upwind] += m;
        }
    }
    Advection {
        inflow,
        outflow_sum,
        inlet,
        magnitude,
    }
}

/// Energy residuals at fixed flows.
///
/// Mixing nodes balance inflowing pipe enthalpy against the outgoing streams
/// (pipes and the load draw) taken at the node temperature; stagnant nodes
/// and pipes are pinned to their component supply and upstream temperatures
/// respectively, which keeps the block nonsingular without disturbing the
/// uniform-temperature boundary state.
pub fn thermal_mismatch(
    hyd: &HydraulicState,
    th: &ThermalState,
    heat: &HeatLayer,
    fluid: &FluidModel,
    load_extraction_kg_per_s: &[f64],
) -> Result<ThermalMismatch> {
    let n = heat.hydraulic.nodes.len();
    let n_pipes = heat.hydraulic.pipes.len();
    if th.node_temp_k.len() != n
        || th.outlet_temp_k.len() != n_pipes
        || hyd.pipe_flow_kg_per_s.len() != n_pipes
        || load_extraction_kg_per_s.len() != n
    {
        return Err(Error::DimensionMismatch(
            "thermal state sizes do not match the heat layer".into(),
        ));
    }
    let c_p = fluid.c_p_j_per_kg_k();
    let adv = advection(heat, hyd);
    let supply = component_supply_temperatures(heat);

    let mut node_w = vec![0.0; n];
    for node in 0..n {
        let inflow_sum: f64 = adv.inflow[node].iter().map(|&(_, m)| m).sum();
        let weight = inflow_sum.max(adv.outflow_sum[node] + load_extraction_kg_per_s[node]);
        if weight < FLOW_EPS_KG_PER_S {
            node_w[node] = c_p * (supply[node] - th.node_temp_k[node]);
            continue;
        }
        let mut incoming = 0.0;
        for &(pipe, m) in &adv.inflow[node] {
            incoming += m * c_p * th.outlet_temp_k[pipe];
        }
        node_w[node] = incoming - weight * c_p * th.node_temp_k[node];
    }

    let mut pipe_w = vec![0.0; n_pipes];
    for (b, pipe) in heat.hydraulic.pipes.iter().enumerate() {
        let t_in = th.node_temp_k[adv.inlet[b]];
        let t_out = th.outlet_temp_k[b];
        let m = adv.magnitude[b];
        if m < FLOW_EPS_KG_PER_S {
            pipe_w[b] = c_p * (th.node_temp_k[pipe.from] - t_out);
            continue;
        }
        let thermal = &heat.pipe_thermal[b];
        let exponent = thermal.u_w_per_m2_k
            * std::f64::consts::PI
            * pipe.diameter_m
            * pipe.length_m
            / (m * c_p);
        let decay = (-exponent).exp();
        pipe_w[b] =
            m * c_p * (decay * t_in + (1.0 - decay) * thermal.ambient_k - t_out);
    }

    Ok(ThermalMismatch { node_w, pipe_w })
}

/// One nodal row of the thermal Jacobian: the self coefficient plus the
/// inflow-pipe outlet coefficients.
#[derive(Debug, Clone)]
pub struct ThermalNodeRow {
    pub d_node_temp: f64,
    /// (pipe index, d residual / d outlet temperature).
    pub d_inflow_outlets: Vec<(usize, f64)>,
}

/// One pipe row: inlet-node and own-outlet coefficients.
#[derive(Debug, Clone, Copy)]
pub struct ThermalPipeRow {
    pub inlet_node: usize,
    pub d_inlet_temp: f64,
    pub d_outlet_temp: f64,
}

#[derive(Debug, Clone)]
pub struct ThermalJacobian {
    pub node_rows: Vec<ThermalNodeRow>,
    pub pipe_rows: Vec<ThermalPipeRow>,
}

/// Analytic derivatives of `thermal_mismatch` with respect to the
/// temperatures. Constant per hydraulic state: the residuals are linear.
pub fn thermal_jacobian(
    hyd: &HydraulicState,
    heat: &HeatLayer,
    fluid: &FluidModel,
    load_extraction_kg_per_s: &[f64],
) -> Result<ThermalJacobian> {
    let n = heat.hydraulic.nodes.len();
    if hyd.pipe_flow_kg_per_s.len() != heat.hydraulic.pipes.len()
        || load_extraction_kg_per_s.len() != n
    {
        return Err(Error::DimensionMismatch(
            "hydraulic state sizes do not match the heat layer".into(),
        ));
    }
    let c_p = fluid.c_p_j_per_kg_k();
    let adv = advection(heat, hyd);

    let mut node_rows = Vec::with_capacity(n);
    for node in 0..n {
        let inflow_sum: f64 = adv.inflow[node].iter().map(|&(_, m)| m).sum();
        let weight = inflow_sum.max(adv.outflow_sum[node] + load_extraction_kg_per_s[node]);
        if weight < FLOW_EPS_KG_PER_S {
            node_rows.push(ThermalNodeRow {
                d_node_temp: -c_p,
                d_inflow_outlets: Vec::new(),
            });
            continue;
        }
        node_rows.push(ThermalNodeRow {
            d_node_temp: -weight * c_p,
            d_inflow_outlets: adv.inflow[node]
                .iter()
                .map(|&(pipe, m)| (pipe, m * c_p))
                .collect(),
        });
    }

    let mut pipe_rows = Vec::with_capacity(heat.hydraulic.pipes.len());
    for (b, pipe) in heat.hydraulic.pipes.iter().enumerate() {
        let m = adv.magnitude[b];
        if m < FLOW_EPS_KG_PER_S {
            pipe_rows.push(ThermalPipeRow {
                inlet_node: pipe.from,
                d_inlet_temp: c_p,
                d_outlet_temp: -c_p,
            });
            continue;
        }
        let thermal = &heat.pipe_thermal[b];
        let exponent = thermal.u_w_per_m2_k
            * std::f64::consts::PI
            * pipe.diameter_m
            * pipe.length_m
            / (m * c_p);
        pipe_rows.push(ThermalPipeRow {
            inlet_node: adv.inlet[b],
            d_inlet_temp: m * c_p * (-exponent).exp(),
            d_outlet_temp: -m * c_p,
        });
    }

    Ok(ThermalJacobian {
        node_rows,
        pipe_rows,
    })
}

/// Network-level heat accounting at a converged state, all watts and all
/// measured against the lumped return temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatEnergyBalance {
    /// Power injected by the fixed-temperature source nodes.
    pub source_w: f64,
    /// Power actually delivered to the load draws.
    pub delivered_w: f64,
    /// Along-pipe losses to the surroundings.
    pub losses_w: f64,
}

pub fn heat_energy_balance(
    hyd: &HydraulicState,
    th: &ThermalState,
    heat: &HeatLayer,
    fluid: &FluidModel,
    load_extraction_kg_per_s: &[f64],
    conversion: &HeatLoadConversion,
) -> HeatEnergyBalance {
    let c_p = fluid.c_p_j_per_kg_k();
    let t_ret = conversion.return_temperature_k;
    let adv = advection(heat, hyd);

    // net enthalpy pushed into the pipe network by the fixed-temperature
    // sources; loads sitting directly on a source node never transit the
    // network and are excluded on both sides of the balance
    let mut source_w = 0.0;
    for (i, node) in heat.hydraulic.nodes.iter().enumerate() {
        if node.kind == HydraulicNodeKind::Reference {
            let mut inflow_enthalpy = 0.0;
            for &(pipe, m) in &adv.inflow[i] {
                inflow_enthalpy += m * c_p * (th.outlet_temp_k[pipe] - t_ret);
            }
            source_w += adv.outflow_sum[i] * c_p * (th.node_temp_k[i] - t_ret) - inflow_enthalpy;
        }
    }

    let delivered_w = load_extraction_kg_per_s
        .iter()
        .enumerate()
        .filter(|(i, _)| heat.hydraulic.nodes[*i].kind != HydraulicNodeKind::Reference)
        .map(|(i, &m)| m * c_p * (th.node_temp_k[i] - t_ret))
        .sum();

    let losses_w = heat
        .hydraulic
        .pipes
        .iter()
        .enumerate()
        .map(|(b, _)| {
            let m = adv.magnitude[b];
            if m < FLOW_EPS_KG_PER_S {
                0.0
            } else {
                m * c_p * (th.node_temp_k[adv.inlet[b]] - th.outlet_temp_k[b])
            }
        })
        .sum();

    HeatEnergyBalance {
        source_w,
        delivered_w,
        losses_w,
    }
}
