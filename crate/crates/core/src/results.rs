//! Per-branch and per-node result extraction from a converged state:
//! line/transformer loadings, pipe pressure drops and temperature spreads,
//! plus the snapshot aggregates the time-series reports are built from.

use num_complex::Complex64;

use crate::graph::{HydraulicLayer, MultiEnergyNetwork};
use crate::hydraulics::{FluidModel, HydraulicState};
use crate::solver::{NetworkState, PhysicsConfig};
use crate::thermal::FLOW_EPS_KG_PER_S;

#[derive(Debug, Clone, PartialEq)]
pub struct ElectricalBranchResult {
    pub name: String,
    pub from: String,
    pub to: String,
    /// Current magnitude on the from side, amperes.
    pub current_a: f64,
    /// Percent of the thermal rating (lines) or of the rated power
    /// (transformers).
    pub loading_percent: f64,
    /// Series loss, watts.
    pub loss_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipeBranchResult {
    pub name: String,
    pub from: String,
    pub to: String,
    pub mdot_kg_per_s: f64,
    pub velocity_m_per_s: f64,
    /// p_from - p_to, pascal.
    pub dp_pa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatPipeResult {
    pub hydraulic: PipeBranchResult,
    pub t_in_k: f64,
    pub t_out_k: f64,
    pub loss_w: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BranchResults {
    pub electrical: Vec<ElectricalBranchResult>,
    pub gas: Vec<PipeBranchResult>,
    pub heat: Vec<HeatPipeResult>,
}

/// Extracts per-branch quantities from a state.
pub fn branch_results(
    network: &MultiEnergyNetwork,
    state: &NetworkState,
    physics: &PhysicsConfig,
) -> BranchResults {
    let mut electrical = Vec::with_capacity(network.electrical.edges.len());
    let base_va = network.electrical.base_mva * 1e6;
    for edge in &network.electrical.edges {
        let v_from = state.electrical.voltage(edge.from);
        let v_to = state.electrical.voltage(edge.to);
        let (current_pu, loading_percent, loss_pu) = match &edge.transformer {
            None => {
                let z_ohm = Complex64::new(
                    edge.r_ohm_per_km * edge.length_km,
                    edge.x_ohm_per_km * edge.length_km,
                );
                let v_base = network.electrical.nodes[edge.from].base_voltage_v;
                let z_base = (v_base / 1e3) * (v_base / 1e3) / network.electrical.base_mva;
                let y_series = z_base / z_ohm;
                let current = (v_from - v_to) * y_series;
                let r_pu = z_ohm.re / z_base;
                let loss = current.norm_sqr() * r_pu;
                let i_base_a = base_va / (3f64.sqrt() * v_base);
                let i_a = current.norm() * i_base_a;
                let loading = if edge.rating_a > 0.0 {
                    100.0 * i_a / edge.rating_a
                } else {
                    0.0
                };
                (current.norm(), loading, loss)
            }
            Some(t) => {
                let z_pu = Complex64::new(0.0, t.v_sc_percent / 100.0)
                    * (network.electrical.base_mva / t.rated_mva);
                let y_series = 1.0 / z_pu;
                let ratio = t.ratio;
                let current_from = v_from * y_series / (ratio * ratio) - v_to * y_series / ratio;
                let s_through = (v_from * current_from.conj()).norm() * network.electrical.base_mva;
                let loading = 100.0 * s_through / t.rated_mva;
                (current_from.norm(), loading, 0.0)
            }
        };
        let v_base = network.electrical.nodes[edge.from].base_voltage_v;
        electrical.push(ElectricalBranchResult {
            name: edge.name.clone(),
            from: network.electrical.nodes[edge.from].name.clone(),
            to: network.electrical.nodes[edge.to].name.clone(),
            current_a: current_pu * base_va / (3f64.sqrt() * v_base),
            loading_percent,
            loss_w: loss_pu * base_va,
        });
    }

    let gas = pipe_results(&network.gas, &state.gas, &physics.gas_fluid);

    let heat_ps = pipe_results(
        &network.heat.hydraulic,
        &state.heat_hydraulic,
        &physics.heat_fluid,
    );
    let c_p = physics.heat_fluid.c_p_j_per_kg_k();
    let heat = heat_ps_with_temps(network, state, heat_ps, c_p);

    BranchResults {
        electrical,
        gas,
        heat,
    }
}

fn heat_ps_with_temps(
    network: &MultiEnergyNetwork,
    state: &NetworkState,
    hydraulic: Vec<PipeBranchResult>,
    c_p: f64,
) -> Vec<HeatPipeResult> {
    network
        .heat
        .hydraulic
        .pipes
        .iter()
        .enumerate()
        .zip(hydraulic)
        .map(|((b, pipe), hyd)| {
            let flow = state.heat_hydraulic.pipe_flow_kg_per_s[b];
            let inlet = if flow >= 0.0 { pipe.from } else { pipe.to };
            let t_in = state.thermal.node_temp_k[inlet];
            let t_out = state.thermal.outlet_temp_k[b];
            let loss_w = if flow.abs() < FLOW_EPS_KG_PER_S {
                0.0
            } else {
                flow.abs() * c_p * (t_in - t_out)
            };
            HeatPipeResult {
                hydraulic: hyd,
                t_in_k: t_in,
                t_out_k: t_out,
                loss_w,
            }
        })
        .collect()
}

fn pipe_results(
    layer: &HydraulicLayer,
    state: &HydraulicState,
    fluid: &FluidModel,
) -> Vec<PipeBranchResult> {
    layer
        .pipes
        .iter()
        .enumerate()
        .map(|(b, pipe)| {
            let mdot = state.pipe_flow_kg_per_s[b];
            let p_from = state.node_pressure_pa[pipe.from];
            let p_to = state.node_pressure_pa[pipe.to];
            let density = fluid
                .density(0.5 * (p_from + p_to))
                .unwrap_or(f64::NAN);
            PipeBranchResult {
                name: pipe.name.clone(),
                from: layer.nodes[pipe.from].name.clone(),
                to: layer.nodes[pipe.to].name.clone(),
                mdot_kg_per_s: mdot,
                velocity_m_per_s: mdot.abs() / (density * pipe.area_m2()),
                dp_pa: p_from - p_to,
            }
        })
        .collect()
}

/// Aggregates of one snapshot, the raw material of the series reports.
/// `None` where a layer is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSummary {
    pub min_vm_pu: Option<f64>,
    pub max_loading_percent: Option<f64>,
    pub min_gas_pressure_pa: Option<f64>,
    pub min_heat_pressure_pa: Option<f64>,
    pub min_node_temp_k: Option<f64>,
}

pub fn summarize(state: &NetworkState, branch: &BranchResults) -> SnapshotSummary {
    let min = |values: &mut dyn Iterator<Item = f64>| values.fold(None, |acc: Option<f64>, v| {
        Some(match acc {
            Some(a) => a.min(v),
            None => v,
        })
    });
    let max = |values: &mut dyn Iterator<Item = f64>| values.fold(None, |acc: Option<f64>, v| {
        Some(match acc {
            Some(a) => a.max(v),
            None => v,
        })
    });
    SnapshotSummary {
        min_vm_pu: min(&mut state.electrical.vm_pu.iter().copied()),
        max_loading_percent: max(&mut branch.electrical.iter().map(|e| e.loading_percent)),
        min_gas_pressure_pa: min(&mut state.gas.node_pressure_pa.iter().copied()),
        min_heat_pressure_pa: min(&mut state.heat_hydraulic.node_pressure_pa.iter().copied()),
        min_node_temp_k: min(&mut state.thermal.node_temp_k.iter().copied()),
    }
}
