//! Structural validation of a parsed network.
//!
//! Every problem is collected as a report entry rather than an early error;
//! an empty report means the network has the shape the solver requires.

use std::collections::HashSet;

use crate::coupling::{Conversion, CopModel, DeviceKind};
use crate::graph::{
    connected_components, Carrier, ElectricalNodeKind, HydraulicLayer, HydraulicNodeKind,
    MultiEnergyNetwork,
};

/// One validation finding. `Display` renders the conventional
/// "layer X: problem" form used in reports and CLI output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub layer: Option<Carrier>,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.layer {
            Some(layer) => write!(f, "layer {}: {}", layer, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, layer: Option<Carrier>, message: impl Into<String>) {
        self.violations.push(Violation {
            layer,
            message: message.into(),
        });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "network is valid");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks ids, edge endpoints, reference-node placement, connectivity and
/// the per-type attribute invariants. Idempotent and side-effect free.
pub fn validate_topology(network: &MultiEnergyNetwork) -> ValidationReport {
    let mut report = ValidationReport::default();

    validate_electrical(network, &mut report);
    validate_hydraulic(&network.gas, Carrier::Gas, &mut report);
    validate_hydraulic(&network.heat.hydraulic, Carrier::Heat, &mut report);
    validate_thermal(network, &mut report);
    validate_coupling(network, &mut report);

    report
}

fn check_unique_names<'a>(
    names: impl Iterator<Item = &'a str>,
    entity: &str,
    layer: Carrier,
    report: &mut ValidationReport,
) {
    let mut seen = HashSet::new();
    for name in names {
        if !seen.insert(name) {
            report.push(Some(layer), format!("duplicate {entity} id '{name}'"));
        }
    }
}

fn validate_electrical(network: &MultiEnergyNetwork, report: &mut ValidationReport) {
    let layer = &network.electrical;
    let carrier = Carrier::Electricity;
    let n = layer.nodes.len();
    if n == 0 && layer.edges.is_empty() {
        return;
    }

    check_unique_names(layer.nodes.iter().map(|x| x.name.as_str()), "node", carrier, report);
    check_unique_names(layer.edges.iter().map(|x| x.name.as_str()), "edge", carrier, report);

    if layer.base_mva <= 0.0 {
        report.push(Some(carrier), "base power must be positive");
    }
    for node in &layer.nodes {
        if node.base_voltage_v <= 0.0 {
            report.push(
                Some(carrier),
                format!("node '{}': base voltage must be positive", node.name),
            );
        }
    }

    for edge in &layer.edges {
        if edge.from >= n || edge.to >= n {
            report.push(
                Some(carrier),
                format!("edge '{}': dangling endpoint", edge.name),
            );
            continue;
        }
        if edge.from == edge.to {
            report.push(
                Some(carrier),
                format!("edge '{}': endpoints identical", edge.name),
            );
        }
        match &edge.transformer {
            Some(t) => {
                if t.rated_mva <= 0.0 || t.v_sc_percent <= 0.0 || t.ratio <= 0.0 {
                    report.push(
                        Some(carrier),
                        format!("transformer '{}': invalid rating parameters", edge.name),
                    );
                }
            }
            None => {
                if edge.length_km <= 0.0 {
                    report.push(
                        Some(carrier),
                        format!("edge '{}': length must be positive", edge.name),
                    );
                }
                if edge.r_ohm_per_km < 0.0 {
                    report.push(
                        Some(carrier),
                        format!("edge '{}': negative resistance", edge.name),
                    );
                }
                if edge.r_ohm_per_km <= 0.0 && edge.x_ohm_per_km == 0.0 {
                    report.push(
                        Some(carrier),
                        format!("edge '{}': zero impedance", edge.name),
                    );
                }
            }
        }
    }

    if n == 0 {
        return;
    }
    let (component, n_components) = connected_components(
        n,
        layer
            .edges
            .iter()
            .filter(|e| e.from < n && e.to < n)
            .map(|e| (e.from, e.to)),
    );
    check_references(
        carrier,
        &component,
        n_components,
        layer
            .nodes
            .iter()
            .map(|x| (x.name.as_str(), x.kind == ElectricalNodeKind::Slack)),
        report,
    );
    check_isolated(
        carrier,
        layer.nodes.iter().map(|x| x.name.as_str()),
        layer.edges.iter().flat_map(|e| [e.from, e.to]),
        n,
        report,
    );
}

fn validate_hydraulic(layer: &HydraulicLayer, carrier: Carrier, report: &mut ValidationReport) {
    let n = layer.nodes.len();
    check_unique_names(layer.nodes.iter().map(|x| x.name.as_str()), "node", carrier, report);
    check_unique_names(layer.pipes.iter().map(|x| x.name.as_str()), "pipe", carrier, report);

    for pipe in &layer.pipes {
        if pipe.from >= n || pipe.to >= n {
            report.push(
                Some(carrier),
                format!("pipe '{}': dangling endpoint", pipe.name),
            );
            continue;
        }
        if pipe.from == pipe.to {
            report.push(
                Some(carrier),
                format!("pipe '{}': endpoints identical", pipe.name),
            );
        }
        if pipe.diameter_m <= 0.0 {
            report.push(
                Some(carrier),
                format!("pipe '{}': diameter must be positive", pipe.name),
            );
        }
        if pipe.length_m <= 0.0 {
            report.push(
                Some(carrier),
                format!("pipe '{}': length must be positive", pipe.name),
            );
        }
        if pipe.roughness_m < 0.0 {
            report.push(
                Some(carrier),
                format!("pipe '{}': negative roughness", pipe.name),
            );
        }
        if pipe.zeta < 0.0 {
            report.push(
                Some(carrier),
                format!("pipe '{}': negative local loss coefficient", pipe.name),
            );
        }
    }

    if n == 0 {
        return;
    }
    let (component, n_components) = connected_components(
        n,
        layer
            .pipes
            .iter()
            .filter(|p| p.from < n && p.to < n)
            .map(|p| (p.from, p.to)),
    );
    check_references(
        carrier,
        &component,
        n_components,
        layer
            .nodes
            .iter()
            .map(|x| (x.name.as_str(), x.kind == HydraulicNodeKind::Reference)),
        report,
    );
    check_isolated(
        carrier,
        layer.nodes.iter().map(|x| x.name.as_str()),
        layer.pipes.iter().flat_map(|p| [p.from, p.to]),
        n,
        report,
    );
}

/// Exactly one reference node per connected component. A layer without any
/// reference is reported once; a component missing (or doubling) its
/// reference is reported per component.
fn check_references<'a>(
    carrier: Carrier,
    component: &[usize],
    n_components: usize,
    nodes: impl Iterator<Item = (&'a str, bool)>,
    report: &mut ValidationReport,
) {
    let mut refs_per_component = vec![0usize; n_components];
    let mut any = false;
    for (idx, (_, is_ref)) in nodes.enumerate() {
        if is_ref {
            refs_per_component[component[idx]] += 1;
            any = true;
        }
    }
    if !any {
        report.push(Some(carrier), "no reference node");
        return;
    }
    for (c, &count) in refs_per_component.iter().enumerate() {
        if count == 0 {
            report.push(Some(carrier), format!("component {c}: no reference node"));
        } else if count > 1 {
            report.push(
                Some(carrier),
                format!("component {c}: {count} reference nodes, expected one"),
            );
        }
    }
}

fn check_isolated<'a>(
    carrier: Carrier,
    names: impl Iterator<Item = &'a str>,
    endpoints: impl Iterator<Item = usize>,
    n: usize,
    report: &mut ValidationReport,
) {
    let mut degree = vec![0usize; n];
    for e in endpoints {
        if e < n {
            degree[e] += 1;
        }
    }
    for (idx, name) in names.enumerate() {
        if degree[idx] == 0 && n > 1 {
            report.push(Some(carrier), format!("disconnected node '{name}'"));
        }
    }
}

fn validate_thermal(network: &MultiEnergyNetwork, report: &mut ValidationReport) {
    let heat = &network.heat;
    let carrier = Carrier::Heat;
    let n = heat.hydraulic.nodes.len();

    if heat.node_thermal.len() != n {
        report.push(
            Some(carrier),
            format!(
                "thermal node attributes count {} does not match node count {n}",
                heat.node_thermal.len()
            ),
        );
        return;
    }
    if heat.pipe_thermal.len() != heat.hydraulic.pipes.len() {
        report.push(
            Some(carrier),
            format!(
                "thermal pipe attributes count {} does not match pipe count {}",
                heat.pipe_thermal.len(),
                heat.hydraulic.pipes.len()
            ),
        );
        return;
    }

    for (node, thermal) in heat.hydraulic.nodes.iter().zip(&heat.node_thermal) {
        if let Some(t) = thermal.temperature_fixed_k {
            if t <= 0.0 {
                report.push(
                    Some(carrier),
                    format!("node '{}': non-physical fixed temperature", node.name),
                );
            }
        }
        if thermal.heat_demand_w < 0.0 {
            report.push(
                Some(carrier),
                format!("node '{}': negative heat demand", node.name),
            );
        }
    }
    for (pipe, thermal) in heat.hydraulic.pipes.iter().zip(&heat.pipe_thermal) {
        if thermal.u_w_per_m2_k < 0.0 {
            report.push(
                Some(carrier),
                format!("pipe '{}': negative heat transfer coefficient", pipe.name),
            );
        }
    }

    if n == 0 {
        return;
    }
    // Exactly one fixed-temperature supply node per component; it must be the
    // component's pressure reference so the boundary state is well posed.
    let (component, n_components) = connected_components(
        n,
        heat.hydraulic
            .pipes
            .iter()
            .filter(|p| p.from < n && p.to < n)
            .map(|p| (p.from, p.to)),
    );
    let mut fixed_per_component = vec![0usize; n_components];
    let mut any = false;
    for (idx, thermal) in heat.node_thermal.iter().enumerate() {
        if thermal.temperature_fixed_k.is_some() {
            fixed_per_component[component[idx]] += 1;
            any = true;
            if heat.hydraulic.nodes[idx].kind != HydraulicNodeKind::Reference {
                report.push(
                    Some(carrier),
                    format!(
                        "node '{}': fixed supply temperature on a non-reference node",
                        heat.hydraulic.nodes[idx].name
                    ),
                );
            }
        }
    }
    if !any {
        report.push(Some(carrier), "no fixed-temperature supply node");
        return;
    }
    for (c, &count) in fixed_per_component.iter().enumerate() {
        if count == 0 {
            report.push(
                Some(carrier),
                format!("component {c}: no fixed-temperature supply node"),
            );
        } else if count > 1 {
            report.push(
                Some(carrier),
                format!("component {c}: {count} fixed-temperature nodes, expected one"),
            );
        }
    }
}

fn validate_coupling(network: &MultiEnergyNetwork, report: &mut ValidationReport) {
    let coupling = &network.coupling;

    check_unique_names(
        coupling.devices.iter().map(|d| d.name.as_str()),
        "device",
        Carrier::Electricity,
        report,
    );

    for (idx, cnode) in coupling.nodes.iter().enumerate() {
        let in_range = match cnode.carrier {
            Carrier::Electricity => cnode.node < network.electrical.nodes.len(),
            Carrier::Gas => cnode.node < network.gas.nodes.len(),
            Carrier::Heat => cnode.node < network.heat.hydraulic.nodes.len(),
        };
        if !in_range {
            report.push(
                None,
                format!("coupling edge: unknown endpoint (coupling node {idx}, {} layer)", cnode.carrier),
            );
        }
    }

    for device in &coupling.devices {
        let n_cnodes = coupling.nodes.len();
        if device.input_node >= n_cnodes || device.output_node >= n_cnodes {
            report.push(
                None,
                format!("coupling edge: unknown endpoint (device '{}')", device.name),
            );
            continue;
        }
        let input = &coupling.nodes[device.input_node];
        let output = &coupling.nodes[device.output_node];
        let (want_in, want_out) = device.kind.carriers();
        if input.carrier != want_in || output.carrier != want_out {
            report.push(
                None,
                format!(
                    "device '{}': {:?} must connect {} to {}, found {} to {}",
                    device.name, device.kind, want_in, want_out, input.carrier, output.carrier
                ),
            );
        }
        if device.rating_w <= 0.0 {
            report.push(
                None,
                format!("device '{}': rating must be positive", device.name),
            );
        }
        match &device.conversion {
            Conversion::Efficiency(eta) => {
                if !(*eta > 0.0 && *eta <= 1.0) {
                    report.push(
                        None,
                        format!("device '{}': efficiency must be in (0, 1]", device.name),
                    );
                }
                if device.kind == DeviceKind::HeatPump {
                    report.push(
                        None,
                        format!("device '{}': heat pump requires a COP model", device.name),
                    );
                }
            }
            Conversion::Cop(model) => {
                if device.kind != DeviceKind::HeatPump {
                    report.push(
                        None,
                        format!("device '{}': COP model only valid for heat pumps", device.name),
                    );
                }
                match model {
                    CopModel::Table { points } => {
                        if points.is_empty() {
                            report.push(
                                None,
                                format!("device '{}': empty COP table", device.name),
                            );
                        }
                        let sorted = points.windows(2).all(|w| w[0].0 < w[1].0);
                        let monotone = points.windows(2).all(|w| w[0].1 <= w[1].1);
                        if !sorted || !monotone {
                            report.push(
                                None,
                                format!(
                                    "device '{}': COP table must be monotone in source temperature",
                                    device.name
                                ),
                            );
                        }
                        if points.iter().any(|&(_, cop)| cop < 1.0) {
                            report.push(
                                None,
                                format!("device '{}': COP below 1", device.name),
                            );
                        }
                    }
                    CopModel::CarnotFraction { quality, t_sink_k, cop_min, cop_max } => {
                        if !(*quality > 0.0 && *quality <= 1.0) {
                            report.push(
                                None,
                                format!("device '{}': quality must be in (0, 1]", device.name),
                            );
                        }
                        if *t_sink_k <= 0.0 || cop_min > cop_max || *cop_min < 1.0 {
                            report.push(
                                None,
                                format!("device '{}': invalid COP clamp", device.name),
                            );
                        }
                    }
                }
            }
        }
    }
}
