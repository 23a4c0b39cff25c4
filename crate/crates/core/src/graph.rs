//! Multi-layer network data model: carrier layers, their nodes and edges,
//! and the topology queries used by the residual and Jacobian kernels.
//!
//! Storage is index based. Kernels address nodes and edges by their position
//! in the layer vectors; string names exist for I/O and reporting only.

/// Energy carrier of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Carrier {
    Electricity,
    Gas,
    Heat,
}

impl std::fmt::Display for Carrier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Carrier::Electricity => write!(f, "Electricity"),
            Carrier::Gas => write!(f, "Gas"),
            Carrier::Heat => write!(f, "Heat"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElectricalNodeKind {
    /// Reference bus with fixed voltage magnitude and angle.
    Slack,
    /// Bus with fixed active/reactive power injection.
    Pq,
}

/// Electrical bus. Loads are stored as consumption (positive = demand).
#[derive(Debug, Clone)]
pub struct ElectricalNode {
    pub name: String,
    pub kind: ElectricalNodeKind,
    /// Line-to-line base voltage of the node's zone, volts.
    pub base_voltage_v: f64,
    pub p_load_w: f64,
    pub q_load_var: f64,
    /// Optional profile column scaling the load over time.
    pub profile: Option<String>,
}

/// Two-winding transformer parameters carried by an electrical edge.
/// The `from` side of the edge is the high-voltage side.
#[derive(Debug, Clone, Copy)]
pub struct TransformerParams {
    pub rated_mva: f64,
    /// Short-circuit voltage, percent of rated.
    pub v_sc_percent: f64,
    /// Off-nominal tap ratio (1.0 = nominal).
    pub ratio: f64,
}

/// Electrical branch: line/cable, or transformer when `transformer` is set
/// (in which case the per-km impedance fields are ignored).
#[derive(Debug, Clone)]
pub struct ElectricalEdge {
    pub name: String,
    pub from: usize,
    pub to: usize,
    pub r_ohm_per_km: f64,
    pub x_ohm_per_km: f64,
    pub length_km: f64,
    /// Thermal current rating, amperes.
    pub rating_a: f64,
    pub transformer: Option<TransformerParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HydraulicNodeKind {
    /// Fixed-pressure supply node.
    Reference,
    /// Node with fixed mass-flow extraction.
    Demand,
}

/// Junction shared by the gas and heat layers.
#[derive(Debug, Clone)]
pub struct HydraulicNode {
    pub name: String,
    pub kind: HydraulicNodeKind,
    /// Pressure setpoint (reference nodes) or nominal pressure, pascal.
    pub pressure_pa: f64,
    /// Mass extracted from the network at this node, kg/s (demand positive).
    pub demand_kg_per_s: f64,
    pub height_m: f64,
    pub fluid_temperature_k: f64,
    pub profile: Option<String>,
}

/// Pipe shared by the gas and heat layers. All geometry in SI units;
/// the file format's km/mm are converted on load.
#[derive(Debug, Clone)]
pub struct Pipe {
    pub name: String,
    pub from: usize,
    pub to: usize,
    pub diameter_m: f64,
    pub length_m: f64,
    pub roughness_m: f64,
    /// Local loss coefficient for valves and fittings.
    pub zeta: f64,
    /// Optional starting-flow hint overriding the spanning-tree
    /// initialization.
    pub flow_hint_kg_per_s: Option<f64>,
}

impl Pipe {
    /// Cross-sectional flow area, m^2.
    pub fn area_m2(&self) -> f64 {
        std::f64::consts::PI * self.diameter_m * self.diameter_m / 4.0
    }
}

/// Thermal attributes of a heat-layer node.
#[derive(Debug, Clone)]
pub struct ThermalNode {
    /// Fixed supply temperature, kelvin. Set on the component's source node.
    pub temperature_fixed_k: Option<f64>,
    /// Heat extracted by the consumer at this node, watts.
    pub heat_demand_w: f64,
    pub profile: Option<String>,
}

/// Thermal attributes of a heat-layer pipe.
#[derive(Debug, Clone)]
pub struct PipeThermal {
    /// Heat transfer coefficient to the surroundings, W/(m^2 K).
    pub u_w_per_m2_k: f64,
    pub ambient_k: f64,
}

#[derive(Debug, Clone)]
pub struct ElectricalLayer {
    pub nodes: Vec<ElectricalNode>,
    pub edges: Vec<ElectricalEdge>,
    /// Per-unit power base, MVA.
    pub base_mva: f64,
}

impl Default for ElectricalLayer {
    fn default() -> Self {
        ElectricalLayer {
            nodes: Vec::new(),
            edges: Vec::new(),
            base_mva: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct HydraulicLayer {
    pub nodes: Vec<HydraulicNode>,
    pub pipes: Vec<Pipe>,
}

/// Heat layer: hydraulics identical to the gas layer plus thermal
/// attributes, stored in vectors parallel to `hydraulic.nodes` / `.pipes`.
#[derive(Debug, Clone, Default)]
pub struct HeatLayer {
    pub hydraulic: HydraulicLayer,
    pub node_thermal: Vec<ThermalNode>,
    pub pipe_thermal: Vec<PipeThermal>,
}

/// The full multi-layer network: three carrier layers plus the coupling
/// layer of conversion devices. Immutable once validated; safe to share
/// across parallel solves.
#[derive(Debug, Clone, Default)]
pub struct MultiEnergyNetwork {
    pub electrical: ElectricalLayer,
    pub gas: HydraulicLayer,
    pub heat: HeatLayer,
    pub coupling: crate::coupling::CouplingLayer,
}

/// Signed node-edge incidence: entry (n, b) is +1 if edge b leaves node n,
/// -1 if it enters, 0 otherwise. Stored as endpoint lists; every column has
/// exactly one +1 and one -1, so column sums are zero by construction.
#[derive(Debug, Clone)]
pub struct IncidenceMatrix {
    pub n_nodes: usize,
    from: Vec<usize>,
    to: Vec<usize>,
}

impl IncidenceMatrix {
    pub fn new(n_nodes: usize, endpoints: impl Iterator<Item = (usize, usize)>) -> Self {
        let (from, to): (Vec<_>, Vec<_>) = endpoints.unzip();
        IncidenceMatrix { n_nodes, from, to }
    }

    pub fn n_edges(&self) -> usize {
        self.from.len()
    }

    pub fn entry(&self, node: usize, edge: usize) -> f64 {
        if self.from[edge] == node {
            1.0
        } else if self.to[edge] == node {
            -1.0
        } else {
            0.0
        }
    }

    /// Nonzero entries of column `edge` as (node, sign) pairs.
    pub fn column(&self, edge: usize) -> [(usize, f64); 2] {
        [(self.from[edge], 1.0), (self.to[edge], -1.0)]
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_nodes, self.n_edges());
        for b in 0..self.n_edges() {
            m[(self.from[b], b)] = 1.0;
            m[(self.to[b], b)] = -1.0;
        }
        m
    }
}

pub fn incidence_matrix(layer: &HydraulicLayer) -> IncidenceMatrix {
    IncidenceMatrix::new(layer.nodes.len(), layer.pipes.iter().map(|p| (p.from, p.to)))
}

pub fn electrical_incidence(layer: &ElectricalLayer) -> IncidenceMatrix {
    IncidenceMatrix::new(layer.nodes.len(), layer.edges.iter().map(|e| (e.from, e.to)))
}

/// Connected components over `n_nodes` nodes and undirected `edges`.
/// Returns (component id per node, component count). Ids are assigned in
/// first-seen node order, so the labelling is deterministic.
pub fn connected_components(
    n_nodes: usize,
    edges: impl Iterator<Item = (usize, usize)>,
) -> (Vec<usize>, usize) {
    let mut adjacency = vec![Vec::new(); n_nodes];
    for (a, b) in edges {
        if a < n_nodes && b < n_nodes {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }
    let mut component = vec![usize::MAX; n_nodes];
    let mut count = 0;
    for start in 0..n_nodes {
        if component[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        component[start] = count;
        while let Some(node) = stack.pop() {
            for &next in &adjacency[node] {
                if component[next] == usize::MAX {
                    component[next] = count;
                    stack.push(next);
                }
            }
        }
        count += 1;
    }
    (component, count)
}

/// Incidence lists for a hydraulic layer: for each node, the incident pipes
/// with their orientation sign (+1 when the pipe leaves the node).
pub fn node_pipe_incidence(layer: &HydraulicLayer) -> Vec<Vec<(usize, f64)>> {
    let mut incident = vec![Vec::new(); layer.nodes.len()];
    for (b, pipe) in layer.pipes.iter().enumerate() {
        incident[pipe.from].push((b, 1.0));
        incident[pipe.to].push((b, -1.0));
    }
    incident
}

/// BFS spanning forest rooted at the given nodes. Returns for each node the
/// (parent node, connecting pipe) pair, or `None` for roots and unreachable
/// nodes. Traversal order is by ascending pipe index, so the forest is
/// deterministic.
pub fn spanning_forest(
    layer: &HydraulicLayer,
    roots: impl Iterator<Item = usize>,
) -> Vec<Option<(usize, usize)>> {
    let incident = node_pipe_incidence(layer);
    let mut parent = vec![None; layer.nodes.len()];
    let mut visited = vec![false; layer.nodes.len()];
    let mut queue = std::collections::VecDeque::new();
    for root in roots {
        visited[root] = true;
        queue.push_back(root);
    }
    while let Some(node) = queue.pop_front() {
        for &(pipe, _sign) in &incident[node] {
            let other = if layer.pipes[pipe].from == node {
                layer.pipes[pipe].to
            } else {
                layer.pipes[pipe].from
            };
            if !visited[other] {
                visited[other] = true;
                parent[other] = Some((node, pipe));
                queue.push_back(other);
            }
        }
    }
    parent
}
