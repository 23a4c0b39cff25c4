//! Shared network builders and independent reference models for the
//! integration and acceptance suites.
//!
//! The physics helpers here deliberately do not call into the crate: the
//! friction factor is solved by bisection (the crate iterates a fixed
//! point), pressures are propagated by per-edge back-substitution and
//! temperatures by a downstream march, so they stay valid as oracles.

#![allow(dead_code)]

use menflow::coupling::{Conversion, CopModel, CouplingDevice, DeviceKind};
use menflow::graph::*;
use menflow::hydraulics::{FluidKind, FluidModel, GRAVITY_M_PER_S2};

pub fn electrical_node(name: &str, kind: ElectricalNodeKind, base_v: f64) -> ElectricalNode {
    ElectricalNode {
        name: name.into(),
        kind,
        base_voltage_v: base_v,
        p_load_w: 0.0,
        q_load_var: 0.0,
        profile: None,
    }
}

pub fn line(name: &str, from: usize, to: usize, r: f64, x: f64, km: f64) -> ElectricalEdge {
    ElectricalEdge {
        name: name.into(),
        from,
        to,
        r_ohm_per_km: r,
        x_ohm_per_km: x,
        length_km: km,
        rating_a: 200.0,
        transformer: None,
    }
}

pub fn hydraulic_node(name: &str, kind: HydraulicNodeKind, pressure: f64) -> HydraulicNode {
    HydraulicNode {
        name: name.into(),
        kind,
        pressure_pa: pressure,
        demand_kg_per_s: 0.0,
        height_m: 0.0,
        fluid_temperature_k: 283.15,
        profile: None,
    }
}

pub fn pipe(name: &str, from: usize, to: usize, d: f64, l: f64) -> Pipe {
    Pipe {
        name: name.into(),
        from,
        to,
        diameter_m: d,
        length_m: l,
        roughness_m: 0.1e-3,
        zeta: 0.0,
        flow_hint_kg_per_s: None,
    }
}

/// Two-bus electrical network on a 1 ohm base: slack plus one PQ bus.
pub fn two_bus_network(r_pu: f64, x_pu: f64, p_load_w: f64, q_load_var: f64) -> MultiEnergyNetwork {
    let mut network = MultiEnergyNetwork::default();
    network.electrical = ElectricalLayer {
        nodes: vec![
            electrical_node("slack", ElectricalNodeKind::Slack, 1000.0),
            {
                let mut n = electrical_node("load", ElectricalNodeKind::Pq, 1000.0);
                n.p_load_w = p_load_w;
                n.q_load_var = q_load_var;
                n
            },
        ],
        edges: vec![line("l1", 0, 1, r_pu, x_pu, 1.0)],
        base_mva: 1.0,
    };
    network
}

/// Radial gas tree: reference plus a chain/star of demand nodes.
/// `edges` is (from, to, diameter, length); demands are per-node kg/s.
pub fn gas_tree(
    demands: &[f64],
    edges: &[(usize, usize, f64, f64)],
    reference_pa: f64,
    heights: Option<&[f64]>,
) -> MultiEnergyNetwork {
    let mut network = MultiEnergyNetwork::default();
    let mut nodes: Vec<HydraulicNode> = demands
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let kind = if i == 0 {
                HydraulicNodeKind::Reference
            } else {
                HydraulicNodeKind::Demand
            };
            let mut n = hydraulic_node(&format!("g{i}"), kind, reference_pa);
            n.demand_kg_per_s = d;
            n
        })
        .collect();
    if let Some(h) = heights {
        for (node, &height) in nodes.iter_mut().zip(h) {
            node.height_m = height;
        }
    }
    network.gas = HydraulicLayer {
        nodes,
        pipes: edges
            .iter()
            .enumerate()
            .map(|(i, &(f, t, d, l))| pipe(&format!("p{i}"), f, t, d, l))
            .collect(),
    };
    network
}

/// Heat feeder: supply node 0 plus demand nodes, exponential-loss pipes.
pub fn heat_feeder(
    heat_demand_w: &[f64],
    edges: &[(usize, usize, f64, f64)],
    u_value: f64,
    supply_k: f64,
) -> MultiEnergyNetwork {
    let mut network = MultiEnergyNetwork::default();
    let n = heat_demand_w.len();
    network.heat = HeatLayer {
        hydraulic: HydraulicLayer {
            nodes: (0..n)
                .map(|i| {
                    hydraulic_node(
                        &format!("h{i}"),
                        if i == 0 {
                            HydraulicNodeKind::Reference
                        } else {
                            HydraulicNodeKind::Demand
                        },
                        3.0e5,
                    )
                })
                .collect(),
            pipes: edges
                .iter()
                .enumerate()
                .map(|(i, &(f, t, d, l))| pipe(&format!("hp{i}"), f, t, d, l))
                .collect(),
        },
        node_thermal: (0..n)
            .map(|i| ThermalNode {
                temperature_fixed_k: (i == 0).then_some(supply_k),
                heat_demand_w: heat_demand_w[i],
                profile: None,
            })
            .collect(),
        pipe_thermal: edges
            .iter()
            .map(|_| PipeThermal {
                u_w_per_m2_k: u_value,
                ambient_k: 283.15,
            })
            .collect(),
    };
    network
}

/// Small tri-domain network with the three case-study device kinds.
pub fn tri_domain_network(with_devices: bool) -> MultiEnergyNetwork {
    let mut network = MultiEnergyNetwork::default();

    network.electrical = ElectricalLayer {
        nodes: vec![
            electrical_node("e0", ElectricalNodeKind::Slack, 400.0),
            electrical_node("e1", ElectricalNodeKind::Pq, 400.0),
            electrical_node("e2", ElectricalNodeKind::Pq, 400.0),
            electrical_node("e3", ElectricalNodeKind::Pq, 400.0),
            electrical_node("e4", ElectricalNodeKind::Pq, 400.0),
        ],
        edges: vec![
            line("el0", 0, 1, 0.642, 0.083, 0.05),
            line("el1", 1, 2, 0.642, 0.083, 0.04),
            line("el2", 1, 3, 0.208, 0.080, 0.06),
            line("el3", 3, 4, 0.208, 0.080, 0.05),
        ],
        base_mva: 1.0,
    };
    network.electrical.nodes[2].p_load_w = 12e3;
    network.electrical.nodes[2].q_load_var = 4e3;
    network.electrical.nodes[4].p_load_w = 20e3;
    network.electrical.nodes[4].q_load_var = 7e3;

    network.gas = HydraulicLayer {
        nodes: vec![
            hydraulic_node("g0", HydraulicNodeKind::Reference, 1.05e5),
            hydraulic_node("g1", HydraulicNodeKind::Demand, 1.05e5),
            hydraulic_node("g2", HydraulicNodeKind::Demand, 1.05e5),
            hydraulic_node("g3", HydraulicNodeKind::Demand, 1.05e5),
        ],
        pipes: vec![
            pipe("gp0", 0, 1, 0.147, 200.0),
            pipe("gp1", 1, 2, 0.08, 150.0),
            pipe("gp2", 1, 3, 0.05, 100.0),
        ],
    };
    network.gas.nodes[2].demand_kg_per_s = 0.004;
    network.gas.nodes[3].demand_kg_per_s = 0.002;

    let heat = heat_feeder(
        &[0.0, 30e3, 45e3, 20e3],
        &[(0, 1, 0.10, 250.0), (1, 2, 0.08, 180.0), (1, 3, 0.065, 120.0)],
        0.8,
        353.15,
    );
    network.heat = heat.heat;

    if with_devices {
        let gt_gas = network.coupling.duplicate_node(Carrier::Gas, 1);
        let gt_el = network.coupling.duplicate_node(Carrier::Electricity, 1);
        let boiler_gas = network.coupling.duplicate_node(Carrier::Gas, 2);
        let boiler_heat = network.coupling.duplicate_node(Carrier::Heat, 2);
        let hp_el = network.coupling.duplicate_node(Carrier::Electricity, 3);
        let hp_heat = network.coupling.duplicate_node(Carrier::Heat, 3);
        network.coupling.devices = vec![
            CouplingDevice {
                name: "gas-turbine".into(),
                kind: DeviceKind::GasToElectric,
                input_node: gt_gas,
                output_node: gt_el,
                conversion: Conversion::Efficiency(0.5),
                rating_w: 60e3,
                profile: None,
            },
            CouplingDevice {
                name: "boiler".into(),
                kind: DeviceKind::GasBoiler,
                input_node: boiler_gas,
                output_node: boiler_heat,
                conversion: Conversion::Efficiency(0.977),
                rating_w: 73e3,
                profile: None,
            },
            CouplingDevice {
                name: "heat-pump".into(),
                kind: DeviceKind::HeatPump,
                input_node: hp_el,
                output_node: hp_heat,
                conversion: Conversion::Cop(CopModel::Table {
                    points: vec![(263.15, 2.2), (283.15, 3.4), (293.15, 4.0)],
                }),
                rating_w: 76.7e3,
                profile: None,
            },
        ];
    }

    network
}

// ---------------------------------------------------------------------------
// independent reference models
// ---------------------------------------------------------------------------

/// Closed-form two-bus solution via the quadratic voltage equation.
/// Returns (vm2, va2) for a slack at 1<0 and a PQ injection s2 (per unit).
pub fn two_bus_closed_form(z: num_complex::Complex64, s2: num_complex::Complex64) -> (f64, f64) {
    let w = z * s2.conj();
    let b = w.im;
    let discriminant = 1.0 - 4.0 * (b * b - w.re);
    assert!(discriminant > 0.0, "two-bus case outside the solvable region");
    let a = 0.5 * (1.0 + discriminant.sqrt());
    let v2 = num_complex::Complex64::new(a, b);
    (v2.norm(), v2.arg())
}

/// Friction factor by bisection on 1/sqrt(lambda) in the Colebrook-White
/// relation; laminar and blended branches mirror the published correlations.
pub fn oracle_friction(re: f64, k: f64, d: f64) -> f64 {
    assert!(re >= 0.0);
    if re == 0.0 {
        return 64.0 / 2300.0;
    }
    if re < 2300.0 {
        return 64.0 / re;
    }
    let turbulent = |re: f64| {
        let rel = k / (3.7 * d);
        let f = |x: f64| x + 2.0 * (rel + 2.51 * x / re).log10();
        let (mut lo, mut hi) = (1.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        1.0 / (x * x)
    };
    if re > 4000.0 {
        turbulent(re)
    } else {
        let lam = 64.0 / 2300.0;
        let turb = turbulent(4000.0);
        lam + (re - 2300.0) / 1700.0 * (turb - lam)
    }
}

pub fn oracle_density(fluid: &FluidModel, pressure: f64) -> f64 {
    match fluid.kind {
        FluidKind::IdealGas {
            molar_mass_kg_per_mol,
            temperature_k,
        } => pressure * molar_mass_kg_per_mol / (8.314462618 * temperature_k),
        FluidKind::IncompressibleLiquid {
            density_kg_per_m3, ..
        } => density_kg_per_m3,
    }
}

/// Downstream pressure of one pipe by fixed-point iteration of the pressure
/// balance (density at the mean pressure).
pub fn oracle_edge_pressure(
    p_from: f64,
    mdot: f64,
    pipe: &Pipe,
    fluid: &FluidModel,
    h_from: f64,
    h_to: f64,
) -> f64 {
    let area = std::f64::consts::PI * pipe.diameter_m * pipe.diameter_m / 4.0;
    let re = mdot.abs() * pipe.diameter_m / (fluid.viscosity_pa_s * area);
    let lambda = oracle_friction(re, pipe.roughness_m, pipe.diameter_m);
    let mut p_to = p_from;
    for _ in 0..200 {
        let rho = oracle_density(fluid, 0.5 * (p_from + p_to));
        let v = mdot.abs() / (rho * area);
        let loss = rho * v * v / 2.0 * (lambda * pipe.length_m / pipe.diameter_m + pipe.zeta);
        let signed = if mdot >= 0.0 { loss } else { -loss };
        let next = p_from - signed + rho * GRAVITY_M_PER_S2 * (h_to - h_from);
        if (next - p_to).abs() < 1e-13 * p_from.abs().max(1.0) {
            return next;
        }
        p_to = next;
    }
    p_to
}

/// Analytic tree solve: flows from subtree demand sums, pressures by
/// back-substitution from the reference node. Only valid for tree layers.
/// Returns (node pressures, pipe flows).
pub fn oracle_tree_solution(
    layer: &HydraulicLayer,
    extraction: &[f64],
    fluid: &FluidModel,
) -> (Vec<f64>, Vec<f64>) {
    let n = layer.nodes.len();
    assert_eq!(layer.pipes.len() + 1, n, "oracle expects a single tree");
    let reference = layer
        .nodes
        .iter()
        .position(|nd| nd.kind == HydraulicNodeKind::Reference)
        .expect("tree needs a reference node");

    // adjacency
    let mut adjacent: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (b, p) in layer.pipes.iter().enumerate() {
        adjacent[p.from].push((b, p.to));
        adjacent[p.to].push((b, p.from));
    }

    // DFS order from the reference
    let mut order = Vec::new();
    let mut parent_edge: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut stack = vec![reference];
    let mut seen = vec![false; n];
    seen[reference] = true;
    while let Some(node) = stack.pop() {
        order.push(node);
        for &(b, other) in &adjacent[node] {
            if !seen[other] {
                seen[other] = true;
                parent_edge[other] = Some((b, node));
                stack.push(other);
            }
        }
    }

    // subtree sums -> flows
    let mut subtree = extraction.to_vec();
    let mut flows = vec![0.0; layer.pipes.len()];
    for &node in order.iter().rev() {
        if let Some((b, parent)) = parent_edge[node] {
            subtree[parent] += subtree[node];
            flows[b] = if layer.pipes[b].from == parent {
                subtree[node]
            } else {
                -subtree[node]
            };
        }
    }

    // pressures by back-substitution
    let mut pressure = vec![0.0; n];
    pressure[reference] = layer.nodes[reference].pressure_pa;
    for &node in &order {
        if let Some((b, parent)) = parent_edge[node] {
            let p = &layer.pipes[b];
            let (mdot, h_from, h_to, p_from) = if p.from == parent {
                (
                    flows[b],
                    layer.nodes[parent].height_m,
                    layer.nodes[node].height_m,
                    pressure[parent],
                )
            } else {
                // pipe oriented child -> parent: propagate against it
                (
                    -flows[b],
                    layer.nodes[parent].height_m,
                    layer.nodes[node].height_m,
                    pressure[parent],
                )
            };
            pressure[node] = oracle_edge_pressure(p_from, mdot, p, fluid, h_from, h_to);
        }
    }
    (pressure, flows)
}

/// Downstream temperature march for acyclic flow patterns. Returns
/// (node temperatures, pipe outlet temperatures).
pub fn oracle_thermal_march(
    heat: &HeatLayer,
    flows: &[f64],
    c_p: f64,
    supply_k: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = heat.hydraulic.nodes.len();
    let n_pipes = heat.hydraulic.pipes.len();
    let mut node_temp = vec![f64::NAN; n];
    let mut outlet = vec![f64::NAN; n_pipes];

    for (i, t) in heat.node_thermal.iter().enumerate() {
        if let Some(fixed) = t.temperature_fixed_k {
            node_temp[i] = fixed;
        }
    }

    // iterate until all temperatures resolve (acyclic flows terminate)
    for _ in 0..n + n_pipes + 1 {
        let mut progress = false;
        for (b, p) in heat.hydraulic.pipes.iter().enumerate() {
            if !outlet[b].is_nan() {
                continue;
            }
            let (inlet, m) = if flows[b] >= 0.0 {
                (p.from, flows[b])
            } else {
                (p.to, -flows[b])
            };
            if m.abs() < 1e-12 {
                continue;
            }
            if node_temp[inlet].is_nan() {
                continue;
            }
            let th = &heat.pipe_thermal[b];
            let beta = th.u_w_per_m2_k * std::f64::consts::PI * p.diameter_m * p.length_m
                / (m * c_p);
            outlet[b] = th.ambient_k + (node_temp[inlet] - th.ambient_k) * (-beta).exp();
            progress = true;
        }
        for node in 0..n {
            if !node_temp[node].is_nan() {
                continue;
            }
            let mut weighted = 0.0;
            let mut total = 0.0;
            let mut ready = true;
            for (b, p) in heat.hydraulic.pipes.iter().enumerate() {
                let into = (flows[b] > 1e-12 && p.to == node) || (flows[b] < -1e-12 && p.from == node);
                if into {
                    if outlet[b].is_nan() {
                        ready = false;
                        break;
                    }
                    weighted += flows[b].abs() * outlet[b];
                    total += flows[b].abs();
                }
            }
            if ready && total > 1e-12 {
                node_temp[node] = weighted / total;
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }

    // stagnant leftovers sit at the supply temperature
    for t in node_temp.iter_mut() {
        if t.is_nan() {
            *t = supply_k;
        }
    }
    for (b, o) in outlet.iter_mut().enumerate() {
        if o.is_nan() {
            let from = heat.hydraulic.pipes[b].from;
            *o = node_temp[from];
        }
    }
    (node_temp, outlet)
}
