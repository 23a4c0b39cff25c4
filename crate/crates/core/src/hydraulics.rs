//! Hydraulic kernel shared by the gas and heat layers: fluid models,
//! friction factor, per-pipe pressure balance, continuity/pressure residuals
//! and their (frozen-friction) derivatives.

use crate::error::{Error, Result};
use crate::graph::{
    connected_components, node_pipe_incidence, spanning_forest, HydraulicLayer,
    HydraulicNodeKind, Pipe,
};

pub const GRAVITY_M_PER_S2: f64 = 9.80665;
pub const GAS_CONSTANT_J_PER_MOL_K: f64 = 8.314462618;

/// Reynolds number below which flow is treated as laminar.
pub const LAMINAR_RE_LIMIT: f64 = 2300.0;
/// Reynolds number above which flow is fully turbulent; in between the
/// friction factor blends linearly.
pub const TURBULENT_RE_LIMIT: f64 = 4000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluidKind {
    /// Isothermal ideal gas; density follows the local mean pressure.
    IdealGas {
        molar_mass_kg_per_mol: f64,
        temperature_k: f64,
    },
    /// Constant-property liquid (heat-network water).
    IncompressibleLiquid {
        density_kg_per_m3: f64,
        c_p_j_per_kg_k: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidModel {
    pub kind: FluidKind,
    pub viscosity_pa_s: f64,
}

impl FluidModel {
    /// Natural-gas-like ideal gas at 10 degC.
    pub fn natural_gas() -> Self {
        FluidModel {
            kind: FluidKind::IdealGas {
                molar_mass_kg_per_mol: 0.0166,
                temperature_k: 283.15,
            },
            viscosity_pa_s: 1.1e-5,
        }
    }

    /// District-heating water near 80 degC.
    pub fn hot_water() -> Self {
        FluidModel {
            kind: FluidKind::IncompressibleLiquid {
                density_kg_per_m3: 977.0,
                c_p_j_per_kg_k: 4182.0,
            },
            viscosity_pa_s: 3.55e-4,
        }
    }

    /// Density at the given pressure. Ideal-gas densities require a strictly
    /// positive pressure.
    pub fn density(&self, pressure_pa: f64) -> Result<f64> {
        match self.kind {
            FluidKind::IdealGas {
                molar_mass_kg_per_mol,
                temperature_k,
            } => {
                if pressure_pa <= 0.0 {
                    return Err(Error::PressureOutOfDomain(pressure_pa));
                }
                Ok(pressure_pa * molar_mass_kg_per_mol
                    / (GAS_CONSTANT_J_PER_MOL_K * temperature_k))
            }
            FluidKind::IncompressibleLiquid {
                density_kg_per_m3, ..
            } => Ok(density_kg_per_m3),
        }
    }

    pub fn c_p_j_per_kg_k(&self) -> f64 {
        match self.kind {
            FluidKind::IncompressibleLiquid { c_p_j_per_kg_k, .. } => c_p_j_per_kg_k,
            // gas thermal balances are out of scope; a placeholder keeps the
            // signature total
            FluidKind::IdealGas { .. } => 2200.0,
        }
    }

    fn is_compressible(&self) -> bool {
        matches!(self.kind, FluidKind::IdealGas { .. })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FrictionOptions {
    /// Cap applied to the laminar 64/Re branch as Re approaches zero.
    pub lambda_max: f64,
}

impl Default for FrictionOptions {
    fn default() -> Self {
        FrictionOptions { lambda_max: 1e6 }
    }
}

/// Darcy friction factor. Laminar 64/Re below Re = 2300, Colebrook-White
/// (solved to 1e-12 from a Swamee-Jain seed) above Re = 4000, linear blend in
/// between. At Re = 0 the laminar value at the transition threshold is
/// returned; the caller's v^2 factor removes any effect on the residual.
pub fn friction_factor(
    reynolds: f64,
    roughness_m: f64,
    diameter_m: f64,
    options: &FrictionOptions,
) -> Result<f64> {
    if reynolds < 0.0 {
        return Err(Error::NegativeReynolds(reynolds));
    }
    if reynolds == 0.0 {
        return Ok((64.0 / LAMINAR_RE_LIMIT).min(options.lambda_max));
    }
    let relative = roughness_m / diameter_m;
    if reynolds < LAMINAR_RE_LIMIT {
        Ok((64.0 / reynolds).min(options.lambda_max))
    } else if reynolds > TURBULENT_RE_LIMIT {
        Ok(colebrook_white(reynolds, relative))
    } else {
        let laminar = 64.0 / LAMINAR_RE_LIMIT;
        let turbulent = colebrook_white(TURBULENT_RE_LIMIT, relative);
        let alpha = (reynolds - LAMINAR_RE_LIMIT) / (TURBULENT_RE_LIMIT - LAMINAR_RE_LIMIT);
        Ok(laminar + alpha * (turbulent - laminar))
    }
}

fn colebrook_white(reynolds: f64, relative_roughness: f64) -> f64 {
    // Swamee-Jain explicit approximation as the initial guess
    let seed = 0.25
        / (relative_roughness / 3.7 + 5.74 / reynolds.powf(0.9))
            .log10()
            .powi(2);
    let mut lambda = seed;
    for _ in 0..100 {
        let x = 1.0 / lambda.sqrt();
        let x_next = -2.0 * (relative_roughness / 3.7 + 2.51 * x / reynolds).log10();
        let next = 1.0 / (x_next * x_next);
        if (next - lambda).abs() < 1e-12 {
            return next;
        }
        lambda = next;
    }
    lambda
}

pub fn reynolds_number(mdot_kg_per_s: f64, pipe: &Pipe, fluid: &FluidModel) -> f64 {
    // rho*v*d/mu with v = |mdot|/(rho*A); the density cancels
    mdot_kg_per_s.abs() * pipe.diameter_m / (fluid.viscosity_pa_s * pipe.area_m2())
}

/// Residual of the per-pipe pressure balance, pascal:
/// (p_from - p_to) - [sign(mdot) * (rho v^2 / 2)(lambda l/d + zeta) - rho g dh]
/// with dh = h_to - h_from and the density evaluated at the mean pressure.
#[allow(clippy::too_many_arguments)]
pub fn pipe_pressure_balance(
    mdot_kg_per_s: f64,
    pipe: &Pipe,
    fluid: &FluidModel,
    p_from_pa: f64,
    p_to_pa: f64,
    h_from_m: f64,
    h_to_m: f64,
    options: &FrictionOptions,
) -> Result<f64> {
    let terms = pipe_balance_terms(mdot_kg_per_s, pipe, fluid, p_from_pa, p_to_pa, options, None)?;
    Ok((p_from_pa - p_to_pa) - terms.friction_pa
        + terms.density * GRAVITY_M_PER_S2 * (h_to_m - h_from_m))
}

struct BalanceTerms {
    density: f64,
    /// Signed friction loss, pascal.
    friction_pa: f64,
    /// lambda*l/d + zeta with the friction factor used.
    loss_coefficient: f64,
}

fn pipe_balance_terms(
    mdot: f64,
    pipe: &Pipe,
    fluid: &FluidModel,
    p_from: f64,
    p_to: f64,
    options: &FrictionOptions,
    frozen_lambda: Option<f64>,
) -> Result<BalanceTerms> {
    if fluid.is_compressible() && (p_from <= 0.0 || p_to <= 0.0) {
        return Err(Error::PressureOutOfDomain(p_from.min(p_to)));
    }
    let density = fluid.density(0.5 * (p_from + p_to))?;
    let area = pipe.area_m2();
    let velocity = mdot.abs() / (density * area);
    let lambda = match frozen_lambda {
        Some(l) => l,
        None => friction_factor(
            reynolds_number(mdot, pipe, fluid),
            pipe.roughness_m,
            pipe.diameter_m,
            options,
        )?,
    };
    let loss_coefficient = lambda * pipe.length_m / pipe.diameter_m + pipe.zeta;
    let magnitude = density * velocity * velocity / 2.0 * loss_coefficient;
    let friction_pa = if mdot >= 0.0 { magnitude } else { -magnitude };
    Ok(BalanceTerms {
        density,
        friction_pa,
        loss_coefficient,
    })
}

/// Hydraulic iterate of one layer: nodal pressures and signed pipe mass
/// flows (positive along the pipe's from -> to orientation).
#[derive(Debug, Clone, PartialEq)]
pub struct HydraulicState {
    pub node_pressure_pa: Vec<f64>,
    pub pipe_flow_kg_per_s: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HydraulicMismatch {
    /// Continuity residual per node, kg/s. Reference-node entries carry the
    /// component supply balance and are excluded from the solve.
    pub node_kg_per_s: Vec<f64>,
    /// Pressure-balance residual per pipe, pascal.
    pub pipe_pa: Vec<f64>,
}

/// Continuity and pressure residuals of a hydraulic layer.
///
/// `extraction_kg_per_s` is the net mass leaving the network per node
/// (demand minus injection). When `frozen_lambda` is given, per-pipe
/// friction factors are pinned to those values instead of being recomputed
/// from the state; the solver's finite-difference check uses this to probe
/// exactly the linearization the Jacobian implements.
pub fn hydraulic_mismatch(
    state: &HydraulicState,
    layer: &HydraulicLayer,
    fluid: &FluidModel,
    extraction_kg_per_s: &[f64],
    options: &FrictionOptions,
    frozen_lambda: Option<&[f64]>,
) -> Result<HydraulicMismatch> {
    let n = layer.nodes.len();
    if state.node_pressure_pa.len() != n
        || state.pipe_flow_kg_per_s.len() != layer.pipes.len()
        || extraction_kg_per_s.len() != n
    {
        return Err(Error::DimensionMismatch(
            "hydraulic state/extraction sizes do not match the layer".into(),
        ));
    }
    let mut node = extraction_kg_per_s.to_vec();
    for (b, pipe) in layer.pipes.iter().enumerate() {
        let flow = state.pipe_flow_kg_per_s[b];
        node[pipe.from] += flow;
        node[pipe.to] -= flow;
    }

    let mut edge = Vec::with_capacity(layer.pipes.len());
    for (b, pipe) in layer.pipes.iter().enumerate() {
        let p_from = state.node_pressure_pa[pipe.from];
        let p_to = state.node_pressure_pa[pipe.to];
        let terms = pipe_balance_terms(
            state.pipe_flow_kg_per_s[b],
            pipe,
            fluid,
            p_from,
            p_to,
            options,
            frozen_lambda.map(|l| l[b]),
        )?;
        let dh = layer.nodes[pipe.to].height_m - layer.nodes[pipe.from].height_m;
        edge.push((p_from - p_to) - terms.friction_pa + terms.density * GRAVITY_M_PER_S2 * dh);
    }
    Ok(HydraulicMismatch {
        node_kg_per_s: node,
        pipe_pa: edge,
    })
}

/// Derivatives of one pipe's pressure-balance residual.
#[derive(Debug, Clone, Copy)]
pub struct PipeDerivatives {
    pub d_p_from: f64,
    pub d_p_to: f64,
    pub d_flow: f64,
    /// Friction factor at the linearization point (frozen in `d_flow`).
    pub lambda: f64,
}

/// Analytic derivatives of the pressure-balance rows. Continuity rows are
/// plain incidence entries and are assembled directly from the layer. The
/// friction factor is held constant with respect to the flow; the v^2
/// sensitivity and, for ideal gas, the mean-pressure density sensitivity are
/// included.
pub fn hydraulic_jacobian(
    state: &HydraulicState,
    layer: &HydraulicLayer,
    fluid: &FluidModel,
    options: &FrictionOptions,
) -> Result<Vec<PipeDerivatives>> {
    let mut derivatives = Vec::with_capacity(layer.pipes.len());
    for (b, pipe) in layer.pipes.iter().enumerate() {
        let mdot = state.pipe_flow_kg_per_s[b];
        let p_from = state.node_pressure_pa[pipe.from];
        let p_to = state.node_pressure_pa[pipe.to];
        let terms = pipe_balance_terms(mdot, pipe, fluid, p_from, p_to, options, None)?;
        let area = pipe.area_m2();

        // d/dmdot of sign * rho v^2/2 * (lambda l/d + zeta), lambda frozen
        let d_friction_d_flow =
            mdot.abs() * terms.loss_coefficient / (terms.density * area * area);
        let mut d_p_from = 1.0;
        let mut d_p_to = -1.0;
        if fluid.is_compressible() {
            let mean = 0.5 * (p_from + p_to);
            let d_rho_d_side = terms.density / (2.0 * mean);
            let dh = layer.nodes[pipe.to].height_m - layer.nodes[pipe.from].height_m;
            // friction scales as 1/rho at fixed mdot; elevation scales as rho
            let d_residual_d_rho =
                terms.friction_pa / terms.density + GRAVITY_M_PER_S2 * dh;
            d_p_from += d_residual_d_rho * d_rho_d_side;
            d_p_to += d_residual_d_rho * d_rho_d_side;
        }
        derivatives.push(PipeDerivatives {
            d_p_from,
            d_p_to,
            d_flow: -d_friction_d_flow,
            lambda: lambda_of(mdot, pipe, fluid, options)?,
        });
    }
    Ok(derivatives)
}

fn lambda_of(mdot: f64, pipe: &Pipe, fluid: &FluidModel, options: &FrictionOptions) -> Result<f64> {
    friction_factor(
        reynolds_number(mdot, pipe, fluid),
        pipe.roughness_m,
        pipe.diameter_m,
        options,
    )
}

/// Friction factors of every pipe at the given state, for frozen-lambda
/// residual probes.
pub fn friction_factors(
    state: &HydraulicState,
    layer: &HydraulicLayer,
    fluid: &FluidModel,
    options: &FrictionOptions,
) -> Result<Vec<f64>> {
    layer
        .pipes
        .iter()
        .enumerate()
        .map(|(b, pipe)| lambda_of(state.pipe_flow_kg_per_s[b], pipe, fluid, options))
        .collect()
}

/// Starting iterate: pipe flows from a spanning-tree distribution of the
/// nodal extractions (zero chord flows on loops), pressures uniform at each
/// component's reference pressure. An all-zero flow start would leave the
/// frozen-friction pressure rows without any flow sensitivity.
pub fn initial_hydraulic_state(
    layer: &HydraulicLayer,
    extraction_kg_per_s: &[f64],
) -> HydraulicState {
    let n = layer.nodes.len();
    let (component, n_components) =
        connected_components(n, layer.pipes.iter().map(|p| (p.from, p.to)));

    let mut reference_of_component = vec![None; n_components];
    for (i, node) in layer.nodes.iter().enumerate() {
        if node.kind == HydraulicNodeKind::Reference
            && reference_of_component[component[i]].is_none()
        {
            reference_of_component[component[i]] = Some(i);
        }
    }
    let roots: Vec<usize> = reference_of_component.iter().flatten().copied().collect();

    let parent = spanning_forest(layer, roots.iter().copied());

    // accumulate subtree extractions from the leaves upward
    let order = bfs_order(layer, &roots);
    let mut subtree: Vec<f64> = extraction_kg_per_s.to_vec();
    let mut flows = vec![0.0; layer.pipes.len()];
    for &node in order.iter().rev() {
        if let Some((parent_node, pipe_idx)) = parent[node] {
            let amount = subtree[node];
            subtree[parent_node] += amount;
            flows[pipe_idx] = if layer.pipes[pipe_idx].from == parent_node {
                amount
            } else {
                -amount
            };
        }
    }
    for (b, pipe) in layer.pipes.iter().enumerate() {
        if let Some(hint) = pipe.flow_hint_kg_per_s {
            flows[b] = hint;
        }
    }

    let mut pressures = vec![0.0; n];
    for (i, node) in layer.nodes.iter().enumerate() {
        let reference = reference_of_component[component[i]];
        pressures[i] = match reference {
            Some(r) => layer.nodes[r].pressure_pa,
            None => node.pressure_pa,
        };
    }

    HydraulicState {
        node_pressure_pa: pressures,
        pipe_flow_kg_per_s: flows,
    }
}

fn bfs_order(layer: &HydraulicLayer, roots: &[usize]) -> Vec<usize> {
    let incident = node_pipe_incidence(layer);
    let mut visited = vec![false; layer.nodes.len()];
    let mut order = Vec::with_capacity(layer.nodes.len());
    let mut queue = std::collections::VecDeque::new();
    for &root in roots {
        if !visited[root] {
            visited[root] = true;
            queue.push_back(root);
        }
    }
    while let Some(node) = queue.pop_front() {
        order.push(node);
        for &(pipe, _) in &incident[node] {
            let other = if layer.pipes[pipe].from == node {
                layer.pipes[pipe].to
            } else {
                layer.pipes[pipe].from
            };
            if !visited[other] {
                visited[other] = true;
                queue.push_back(other);
            }
        }
    }
    order
}
