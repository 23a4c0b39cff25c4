//! Block Newton-Raphson driver: global assembly of the four domain
//! residual/Jacobian blocks, damped iteration, convergence control and the
//! finite-difference verification oracle.
//!
//! Sign bookkeeping: the assembled matrix holds residual derivatives for
//! every domain. The electrical kernel returns the conventional power-flow
//! Jacobian (derivatives of the calculated injections), which is the
//! negated residual derivative, so its entries flip sign on insertion. The
//! update solves `J * dx = -r` and steps `x += alpha * dx`.

use nalgebra::{DMatrix, DVector};

use crate::coupling::{apply_coupling, ExogenousInputs};
use crate::electrical::{
    build_admittance, electrical_jacobian, electrical_mismatch, AdmittanceMatrix,
    ElectricalState,
};
use crate::error::{Error, Result};
use crate::graph::MultiEnergyNetwork;
use crate::hydraulics::{
    friction_factors, hydraulic_jacobian, hydraulic_mismatch, initial_hydraulic_state,
    FluidModel, FrictionOptions, HydraulicState,
};
use crate::linsolve::{solve as linear_solve, BlockMatrix, LinearPath};
use crate::results::{branch_results, BranchResults};
use crate::thermal::{
    heat_mass_extraction, thermal_jacobian, thermal_mismatch, HeatLoadConversion, ThermalState,
};
use crate::unknowns::{ordered_unknowns, Quantity, UnknownMap};
use crate::validate::validate_topology;

/// Fluid and closure parameters of the hydraulic/thermal models.
#[derive(Debug, Clone)]
pub struct PhysicsConfig {
    pub gas_fluid: FluidModel,
    pub heat_fluid: FluidModel,
    pub heat_conversion: HeatLoadConversion,
    pub friction: FrictionOptions,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            gas_fluid: FluidModel::natural_gas(),
            heat_fluid: FluidModel::hot_water(),
            heat_conversion: HeatLoadConversion::default(),
            friction: FrictionOptions::default(),
        }
    }
}

/// Per-domain convergence thresholds.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Electrical mismatch, per-unit power.
    pub electric_pu: f64,
    /// Nodal continuity, kg/s (gas and heat hydraulics).
    pub gas_mdot_kg_per_s: f64,
    /// Pipe pressure balance, pascal (gas and heat hydraulics).
    pub gas_pressure_pa: f64,
    /// Thermal balances, watts.
    pub heat_w: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            electric_pu: 1e-8,
            gas_mdot_kg_per_s: 1e-8,
            gas_pressure_pa: 1e-4,
            heat_w: 1e-6,
        }
    }
}

/// Backtracking step control.
#[derive(Debug, Clone, Copy)]
pub struct Damping {
    pub enabled: bool,
    pub initial_step: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
}

impl Default for Damping {
    fn default() -> Self {
        Damping {
            enabled: true,
            initial_step: 1.0,
            backtrack_factor: 0.5,
            max_backtracks: 6,
        }
    }
}

/// Per-quantity column scaling factors conditioning the mixed-unit matrix.
/// Pressures are scaled to bar-sized columns by default.
#[derive(Debug, Clone, Copy)]
pub struct ColumnScaling {
    pub voltage_pu: f64,
    pub angle_rad: f64,
    pub pressure_pa: f64,
    pub flow_kg_per_s: f64,
    pub temperature_k: f64,
}

impl Default for ColumnScaling {
    fn default() -> Self {
        ColumnScaling {
            voltage_pu: 1.0,
            angle_rad: 1.0,
            pressure_pa: 1e5,
            flow_kg_per_s: 1.0,
            temperature_k: 10.0,
        }
    }
}

impl ColumnScaling {
    pub fn unit() -> Self {
        ColumnScaling {
            voltage_pu: 1.0,
            angle_rad: 1.0,
            pressure_pa: 1.0,
            flow_kg_per_s: 1.0,
            temperature_k: 1.0,
        }
    }

    fn of(&self, quantity: Quantity) -> f64 {
        match quantity {
            Quantity::VoltageMagnitude => self.voltage_pu,
            Quantity::VoltageAngle => self.angle_rad,
            Quantity::GasPressure | Quantity::HeatPressure => self.pressure_pa,
            Quantity::GasFlow | Quantity::HeatFlow => self.flow_kg_per_s,
            Quantity::NodeTemperature | Quantity::OutletTemperature => self.temperature_k,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tolerances: Tolerances,
    pub max_iterations: usize,
    pub damping: Damping,
    pub scaling: ColumnScaling,
    pub linear_path: LinearPath,
    pub physics: PhysicsConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerances: Tolerances::default(),
            max_iterations: 30,
            damping: Damping::default(),
            scaling: ColumnScaling::default(),
            linear_path: LinearPath::default(),
            physics: PhysicsConfig::default(),
        }
    }
}

/// Full iterate of the coupled system, fixed boundary entries included.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub electrical: ElectricalState,
    pub gas: HydraulicState,
    pub heat_hydraulic: HydraulicState,
    pub thermal: ThermalState,
}

/// Scheduled consumption per node for one timestep (consumption positive).
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledLoads {
    pub electrical_p_w: Vec<f64>,
    pub electrical_q_var: Vec<f64>,
    pub gas_kg_per_s: Vec<f64>,
    pub heat_w: Vec<f64>,
}

impl ScheduledLoads {
    /// The loads stored on the network itself.
    pub fn nominal(network: &MultiEnergyNetwork) -> Self {
        ScheduledLoads {
            electrical_p_w: network.electrical.nodes.iter().map(|n| n.p_load_w).collect(),
            electrical_q_var: network
                .electrical
                .nodes
                .iter()
                .map(|n| n.q_load_var)
                .collect(),
            gas_kg_per_s: network.gas.nodes.iter().map(|n| n.demand_kg_per_s).collect(),
            heat_w: network
                .heat
                .node_thermal
                .iter()
                .map(|t| t.heat_demand_w)
                .collect(),
        }
    }

    pub fn zero(network: &MultiEnergyNetwork) -> Self {
        ScheduledLoads {
            electrical_p_w: vec![0.0; network.electrical.nodes.len()],
            electrical_q_var: vec![0.0; network.electrical.nodes.len()],
            gas_kg_per_s: vec![0.0; network.gas.nodes.len()],
            heat_w: vec![0.0; network.heat.hydraulic.nodes.len()],
        }
    }
}

/// Loads and coupling injections folded into per-domain boundary data.
#[derive(Debug, Clone)]
pub struct Boundary {
    pub p_scheduled_pu: Vec<f64>,
    pub q_scheduled_pu: Vec<f64>,
    pub gas_extraction_kg_per_s: Vec<f64>,
    pub heat_demand_w: Vec<f64>,
    pub heat_extraction_kg_per_s: Vec<f64>,
}

/// Combines scheduled loads with the coupling-device injections. Device
/// injections are recomputed from exogenous inputs once per timestep; they
/// do not depend on the iterate.
pub fn effective_boundary(
    network: &MultiEnergyNetwork,
    loads: &ScheduledLoads,
    exogenous: &ExogenousInputs,
    physics: &PhysicsConfig,
) -> Result<Boundary> {
    let deltas = apply_coupling(network, exogenous)?;
    let base_w = network.electrical.base_mva * 1e6;
    let p_scheduled_pu = loads
        .electrical_p_w
        .iter()
        .zip(&deltas.electrical_p_w)
        .map(|(load, delta)| (-load + delta) / base_w)
        .collect();
    let q_scheduled_pu = loads
        .electrical_q_var
        .iter()
        .map(|load| -load / base_w)
        .collect();
    let gas_extraction_kg_per_s = loads
        .gas_kg_per_s
        .iter()
        .zip(&deltas.gas_kg_per_s)
        .map(|(load, delta)| load + delta)
        .collect();
    let heat_demand_w: Vec<f64> = loads
        .heat_w
        .iter()
        .zip(&deltas.heat_w)
        .map(|(load, delta)| load + delta)
        .collect();
    let heat_extraction_kg_per_s = heat_mass_extraction(
        &network.heat,
        &heat_demand_w,
        &physics.heat_conversion,
        &physics.heat_fluid,
    );
    Ok(Boundary {
        p_scheduled_pu,
        q_scheduled_pu,
        gas_extraction_kg_per_s,
        heat_demand_w,
        heat_extraction_kg_per_s,
    })
}

/// Cold-start iterate: flat electrical start, spanning-tree hydraulics,
/// temperatures at the supply setpoint.
pub fn initial_state(network: &MultiEnergyNetwork, boundary: &Boundary) -> NetworkState {
    NetworkState {
        electrical: ElectricalState::flat(network.electrical.nodes.len()),
        gas: initial_hydraulic_state(&network.gas, &boundary.gas_extraction_kg_per_s),
        heat_hydraulic: initial_hydraulic_state(
            &network.heat.hydraulic,
            &boundary.heat_extraction_kg_per_s,
        ),
        thermal: ThermalState::at_supply(&network.heat),
    }
}

/// Copies the free quantities of `state` into a global vector.
pub fn gather(map: &UnknownMap, state: &NetworkState) -> DVector<f64> {
    let mut x = DVector::zeros(map.total());
    for (pos, key) in map.keys().iter().enumerate() {
        x[pos] = match key.quantity {
            Quantity::VoltageMagnitude => state.electrical.vm_pu[key.index],
            Quantity::VoltageAngle => state.electrical.va_rad[key.index],
            Quantity::GasPressure => state.gas.node_pressure_pa[key.index],
            Quantity::GasFlow => state.gas.pipe_flow_kg_per_s[key.index],
            Quantity::HeatPressure => state.heat_hydraulic.node_pressure_pa[key.index],
            Quantity::HeatFlow => state.heat_hydraulic.pipe_flow_kg_per_s[key.index],
            Quantity::NodeTemperature => state.thermal.node_temp_k[key.index],
            Quantity::OutletTemperature => state.thermal.outlet_temp_k[key.index],
        };
    }
    x
}

/// Writes a global vector back into the free quantities of `state`.
pub fn scatter(map: &UnknownMap, x: &DVector<f64>, state: &mut NetworkState) {
    for (pos, key) in map.keys().iter().enumerate() {
        let value = x[pos];
        match key.quantity {
            Quantity::VoltageMagnitude => state.electrical.vm_pu[key.index] = value,
            Quantity::VoltageAngle => state.electrical.va_rad[key.index] = value,
            Quantity::GasPressure => state.gas.node_pressure_pa[key.index] = value,
            Quantity::GasFlow => state.gas.pipe_flow_kg_per_s[key.index] = value,
            Quantity::HeatPressure => state.heat_hydraulic.node_pressure_pa[key.index] = value,
            Quantity::HeatFlow => state.heat_hydraulic.pipe_flow_kg_per_s[key.index] = value,
            Quantity::NodeTemperature => state.thermal.node_temp_k[key.index] = value,
            Quantity::OutletTemperature => state.thermal.outlet_temp_k[key.index] = value,
        }
    }
}

/// Residual norms per domain, infinity norm over the free rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualNorms {
    pub electric_pu: f64,
    pub gas_mdot_kg_per_s: f64,
    pub gas_pressure_pa: f64,
    pub heat_mdot_kg_per_s: f64,
    pub heat_pressure_pa: f64,
    pub thermal_w: f64,
}

impl ResidualNorms {
    pub fn converged(&self, tol: &Tolerances) -> bool {
        self.electric_pu <= tol.electric_pu
            && self.gas_mdot_kg_per_s <= tol.gas_mdot_kg_per_s
            && self.gas_pressure_pa <= tol.gas_pressure_pa
            && self.heat_mdot_kg_per_s <= tol.gas_mdot_kg_per_s
            && self.heat_pressure_pa <= tol.gas_pressure_pa
            && self.thermal_w <= tol.heat_w
    }

    /// Dimensionless merit: the worst norm-to-tolerance ratio. Used by the
    /// backtracking line search.
    pub fn merit(&self, tol: &Tolerances) -> f64 {
        [
            self.electric_pu / tol.electric_pu,
            self.gas_mdot_kg_per_s / tol.gas_mdot_kg_per_s,
            self.gas_pressure_pa / tol.gas_pressure_pa,
            self.heat_mdot_kg_per_s / tol.gas_mdot_kg_per_s,
            self.heat_pressure_pa / tol.gas_pressure_pa,
            self.thermal_w / tol.heat_w,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Residual vector plus its per-domain norms.
pub struct ResidualEvaluation {
    pub residual: DVector<f64>,
    pub norms: ResidualNorms,
}

/// Quantities pinned at the linearization state for finite-difference
/// probes: the hydraulic friction factors (held constant in the analytic
/// derivatives) and the heat-pipe flows seen by the thermal rows (flows are
/// parameters of the thermal block, matching its structural zeros against
/// the hydraulic columns).
#[derive(Debug, Clone)]
pub struct FrozenLinearization {
    pub gas_lambda: Vec<f64>,
    pub heat_lambda: Vec<f64>,
    pub thermal_flow_kg_per_s: Vec<f64>,
}

fn max_abs(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Assembles the residual vector. With `frozen` set, the hydraulic friction
/// factors are pinned, which makes the residual the exact function the
/// analytic Jacobian linearizes.
pub fn assemble_residual(
    network: &MultiEnergyNetwork,
    map: &UnknownMap,
    state: &NetworkState,
    boundary: &Boundary,
    admittance: &AdmittanceMatrix,
    physics: &PhysicsConfig,
    frozen: Option<&FrozenLinearization>,
) -> Result<ResidualEvaluation> {
    let mut residual = DVector::zeros(map.total());

    let (dp, dq) = electrical_mismatch(
        &state.electrical,
        admittance,
        &boundary.p_scheduled_pu,
        &boundary.q_scheduled_pu,
    );
    let mut electric_norm = 0.0f64;
    for i in 0..network.electrical.nodes.len() {
        if let Some(row) = map.row_active_power(i) {
            residual[row] = dp[i];
            electric_norm = electric_norm.max(dp[i].abs());
        }
        if let Some(row) = map.row_reactive_power(i) {
            residual[row] = dq[i];
            electric_norm = electric_norm.max(dq[i].abs());
        }
    }

    let gas = hydraulic_mismatch(
        &state.gas,
        &network.gas,
        &physics.gas_fluid,
        &boundary.gas_extraction_kg_per_s,
        &physics.friction,
        frozen.map(|f| f.gas_lambda.as_slice()),
    )?;
    let mut gas_mdot_norm = 0.0f64;
    for n in 0..network.gas.nodes.len() {
        if let Some(row) = map.row_gas_continuity(n) {
            residual[row] = gas.node_kg_per_s[n];
            gas_mdot_norm = gas_mdot_norm.max(gas.node_kg_per_s[n].abs());
        }
    }
    for b in 0..network.gas.pipes.len() {
        residual[map.row_gas_pressure_balance(b)] = gas.pipe_pa[b];
    }
    let gas_pa_norm = max_abs(gas.pipe_pa.iter().copied());

    let heat = hydraulic_mismatch(
        &state.heat_hydraulic,
        &network.heat.hydraulic,
        &physics.heat_fluid,
        &boundary.heat_extraction_kg_per_s,
        &physics.friction,
        frozen.map(|f| f.heat_lambda.as_slice()),
    )?;
    let mut heat_mdot_norm = 0.0f64;
    for n in 0..network.heat.hydraulic.nodes.len() {
        if let Some(row) = map.row_heat_continuity(n) {
            residual[row] = heat.node_kg_per_s[n];
            heat_mdot_norm = heat_mdot_norm.max(heat.node_kg_per_s[n].abs());
        }
    }
    for b in 0..network.heat.hydraulic.pipes.len() {
        residual[map.row_heat_pressure_balance(b)] = heat.pipe_pa[b];
    }
    let heat_pa_norm = max_abs(heat.pipe_pa.iter().copied());

    // thermal rows see the linearization flows when probing, matching the
    // block-diagonal structure where flows are parameters of this block
    let thermal_hydraulics = match frozen {
        Some(f) => HydraulicState {
            node_pressure_pa: state.heat_hydraulic.node_pressure_pa.clone(),
            pipe_flow_kg_per_s: f.thermal_flow_kg_per_s.clone(),
        },
        None => state.heat_hydraulic.clone(),
    };
    let thermal = thermal_mismatch(
        &thermal_hydraulics,
        &state.thermal,
        &network.heat,
        &physics.heat_fluid,
        &boundary.heat_extraction_kg_per_s,
    )?;
    let mut thermal_norm = 0.0f64;
    for n in 0..network.heat.hydraulic.nodes.len() {
        if let Some(row) = map.row_thermal_node(n) {
            residual[row] = thermal.node_w[n];
            thermal_norm = thermal_norm.max(thermal.node_w[n].abs());
        }
    }
    for b in 0..network.heat.hydraulic.pipes.len() {
        residual[map.row_thermal_pipe(b)] = thermal.pipe_w[b];
        thermal_norm = thermal_norm.max(thermal.pipe_w[b].abs());
    }

    Ok(ResidualEvaluation {
        residual,
        norms: ResidualNorms {
            electric_pu: electric_norm,
            gas_mdot_kg_per_s: gas_mdot_norm,
            gas_pressure_pa: gas_pa_norm,
            heat_mdot_kg_per_s: heat_mdot_norm,
            heat_pressure_pa: heat_pa_norm,
            thermal_w: thermal_norm,
        },
    })
}

/// Assembles the block Jacobian (residual-derivative convention, unscaled)
/// and the residual vector.
pub fn assemble(
    network: &MultiEnergyNetwork,
    map: &UnknownMap,
    state: &NetworkState,
    boundary: &Boundary,
    admittance: &AdmittanceMatrix,
    physics: &PhysicsConfig,
) -> Result<(BlockMatrix, ResidualEvaluation)> {
    let evaluation = assemble_residual(network, map, state, boundary, admittance, physics, None)?;
    let mut matrix = BlockMatrix::new(map.total(), map.spans().clone());

    // electrical block: kernel returns d(calculated)/dx, residual is
    // scheduled - calculated, so entries are negated
    for entry in electrical_jacobian(&state.electrical, admittance) {
        let row_p = map.row_active_power(entry.row_node);
        let row_q = map.row_reactive_power(entry.row_node);
        let col_vm = map.col_vm(entry.col_node);
        let col_va = map.col_va(entry.col_node);
        if let Some(row) = row_p {
            if let Some(col) = col_vm {
                matrix.push(row, col, -entry.dp_dvm);
            }
            if let Some(col) = col_va {
                matrix.push(row, col, -entry.dp_dva);
            }
        }
        if let Some(row) = row_q {
            if let Some(col) = col_vm {
                matrix.push(row, col, -entry.dq_dvm);
            }
            if let Some(col) = col_va {
                matrix.push(row, col, -entry.dq_dva);
            }
        }
    }

    // gas block: continuity rows carry incidence entries, pressure rows the
    // per-pipe derivatives
    let gas_derivs = hydraulic_jacobian(&state.gas, &network.gas, &physics.gas_fluid, &physics.friction)?;
    for (b, pipe) in network.gas.pipes.iter().enumerate() {
        let col_flow = map.col_gas_flow(b);
        if let Some(row) = map.row_gas_continuity(pipe.from) {
            matrix.push(row, col_flow, 1.0);
        }
        if let Some(row) = map.row_gas_continuity(pipe.to) {
            matrix.push(row, col_flow, -1.0);
        }
        let row = map.row_gas_pressure_balance(b);
        if let Some(col) = map.col_gas_pressure(pipe.from) {
            matrix.push(row, col, gas_derivs[b].d_p_from);
        }
        if let Some(col) = map.col_gas_pressure(pipe.to) {
            matrix.push(row, col, gas_derivs[b].d_p_to);
        }
        matrix.push(row, col_flow, gas_derivs[b].d_flow);
    }

    let heat_derivs = hydraulic_jacobian(
        &state.heat_hydraulic,
        &network.heat.hydraulic,
        &physics.heat_fluid,
        &physics.friction,
    )?;
    for (b, pipe) in network.heat.hydraulic.pipes.iter().enumerate() {
        let col_flow = map.col_heat_flow(b);
        if let Some(row) = map.row_heat_continuity(pipe.from) {
            matrix.push(row, col_flow, 1.0);
        }
        if let Some(row) = map.row_heat_continuity(pipe.to) {
            matrix.push(row, col_flow, -1.0);
        }
        let row = map.row_heat_pressure_balance(b);
        if let Some(col) = map.col_heat_pressure(pipe.from) {
            matrix.push(row, col, heat_derivs[b].d_p_from);
        }
        if let Some(col) = map.col_heat_pressure(pipe.to) {
            matrix.push(row, col, heat_derivs[b].d_p_to);
        }
        matrix.push(row, col_flow, heat_derivs[b].d_flow);
    }

    // thermal block
    let thermal = thermal_jacobian(
        &state.heat_hydraulic,
        &network.heat,
        &physics.heat_fluid,
        &boundary.heat_extraction_kg_per_s,
    )?;
    for (n, node_row) in thermal.node_rows.iter().enumerate() {
        let Some(row) = map.row_thermal_node(n) else {
            continue;
        };
        let col = map
            .col_node_temperature(n)
            .expect("free thermal row implies a free column");
        matrix.push(row, col, node_row.d_node_temp);
        for &(pipe, coefficient) in &node_row.d_inflow_outlets {
            matrix.push(row, map.col_outlet_temperature(pipe), coefficient);
        }
    }
    for (b, pipe_row) in thermal.pipe_rows.iter().enumerate() {
        let row = map.row_thermal_pipe(b);
        if let Some(col) = map.col_node_temperature(pipe_row.inlet_node) {
            matrix.push(row, col, pipe_row.d_inlet_temp);
        }
        matrix.push(row, map.col_outlet_temperature(b), pipe_row.d_outlet_temp);
    }

    Ok((matrix, evaluation))
}

/// Convergence and result record of one solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    /// Number of residual evaluations, the final (converged) check included.
    pub iterations: usize,
    pub residual_history: Vec<ResidualNorms>,
    pub final_state: NetworkState,
    pub branch_results: BranchResults,
}

/// Runs the damped Newton-Raphson iteration on the coupled system.
///
/// Coupling injections are evaluated once from the exogenous inputs; the
/// iteration then updates all four domains simultaneously from one block
/// factorization per step. Non-convergence is reported in the result record,
/// not as an error; a singular Jacobian is an error naming the offending
/// block.
pub fn nr_solve(
    network: &MultiEnergyNetwork,
    loads: &ScheduledLoads,
    exogenous: &ExogenousInputs,
    options: &SolveOptions,
    warm_start: Option<&NetworkState>,
) -> Result<SolveReport> {
    let validation = validate_topology(network);
    if !validation.is_ok() {
        return Err(Error::InvalidNetwork(validation));
    }
    let map = ordered_unknowns(network);
    let admittance = build_admittance(&network.electrical)?;
    let boundary = effective_boundary(network, loads, exogenous, &options.physics)?;

    let mut state = match warm_start {
        Some(start) => start.clone(),
        None => initial_state(network, &boundary),
    };

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = options.max_iterations;

    for iteration in 1..=options.max_iterations {
        let (matrix, evaluation) =
            assemble(network, &map, &state, &boundary, &admittance, &options.physics)?;
        history.push(evaluation.norms);
        if evaluation.norms.converged(&options.tolerances) {
            converged = true;
            iterations = iteration;
            break;
        }
        if iteration == options.max_iterations {
            iterations = iteration;
            break;
        }

        // scaled Newton step: solve (J S) y = -r, dx = S y
        let mut rhs: Vec<f64> = (-&evaluation.residual).iter().copied().collect();
        let mut scaled = BlockMatrix::new(matrix.n, matrix.spans.clone());
        for &(r, c, v) in matrix.entries() {
            scaled.push(r, c, v * options.scaling.of(map.keys()[c].quantity));
        }
        linear_solve(&scaled, &mut rhs, options.linear_path)?;
        let mut delta = DVector::from_vec(rhs);
        for (pos, key) in map.keys().iter().enumerate() {
            delta[pos] *= options.scaling.of(key.quantity);
        }

        let x0 = gather(&map, &state);
        let mut alpha = options.damping.initial_step;
        if options.damping.enabled {
            let merit0 = evaluation.norms.merit(&options.tolerances);
            let mut backtracks = 0;
            loop {
                let mut trial = state.clone();
                scatter(&map, &(&x0 + alpha * &delta), &mut trial);
                let trial_merit = assemble_residual(
                    network,
                    &map,
                    &trial,
                    &boundary,
                    &admittance,
                    &options.physics,
                    None,
                )
                .map(|e| e.norms.merit(&options.tolerances));
                match trial_merit {
                    Ok(m) if m < merit0 => break,
                    _ if backtracks >= options.damping.max_backtracks => break,
                    _ => {
                        alpha *= options.damping.backtrack_factor;
                        backtracks += 1;
                    }
                }
            }
        }
        scatter(&map, &(&x0 + alpha * &delta), &mut state);
    }

    let branch = branch_results(network, &state, &options.physics);
    Ok(SolveReport {
        converged,
        iterations,
        residual_history: history,
        final_state: state,
        branch_results: branch,
    })
}

/// Central-difference Jacobian of an arbitrary residual function, with the
/// per-column step scaled by the quantity magnitude.
pub fn finite_difference_jacobian<F>(
    mut residual_function: F,
    x0: &DVector<f64>,
    relative_step: f64,
    characteristic: &[f64],
) -> Result<DMatrix<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = x0.len();
    let m = residual_function(x0)?.len();
    let mut jacobian = DMatrix::zeros(m, n);
    let mut x = x0.clone();
    for col in 0..n {
        let scale = characteristic.get(col).copied().unwrap_or(1.0);
        let h = relative_step * x0[col].abs().max(scale);
        x[col] = x0[col] + h;
        let plus = residual_function(&x)?;
        x[col] = x0[col] - h;
        let minus = residual_function(&x)?;
        x[col] = x0[col];
        let inv = 0.5 / h;
        for row in 0..m {
            jacobian[(row, col)] = (plus[row] - minus[row]) * inv;
        }
    }
    Ok(jacobian)
}

/// Residual closure over the global unknown vector with the hydraulic
/// friction factors pinned at `state` (the exact function the analytic
/// Jacobian linearizes). For probing the assembled blocks.
pub fn frozen_residual_function<'a>(
    network: &'a MultiEnergyNetwork,
    map: &'a UnknownMap,
    state: &'a NetworkState,
    boundary: &'a Boundary,
    admittance: &'a AdmittanceMatrix,
    physics: &'a PhysicsConfig,
) -> Result<impl FnMut(&DVector<f64>) -> Result<DVector<f64>> + 'a> {
    let frozen = FrozenLinearization {
        gas_lambda: friction_factors(
            &state.gas,
            &network.gas,
            &physics.gas_fluid,
            &physics.friction,
        )?,
        heat_lambda: friction_factors(
            &state.heat_hydraulic,
            &network.heat.hydraulic,
            &physics.heat_fluid,
            &physics.friction,
        )?,
        thermal_flow_kg_per_s: state.heat_hydraulic.pipe_flow_kg_per_s.clone(),
    };
    let template = state.clone();
    Ok(move |x: &DVector<f64>| {
        let mut probe = template.clone();
        scatter(map, x, &mut probe);
        let evaluation = assemble_residual(
            network,
            map,
            &probe,
            boundary,
            admittance,
            physics,
            Some(&frozen),
        )?;
        Ok(evaluation.residual)
    })
}

/// Characteristic magnitudes per unknown for finite-difference steps.
pub fn characteristic_scales(map: &UnknownMap) -> Vec<f64> {
    map.keys()
        .iter()
        .map(|key| match key.quantity {
            Quantity::VoltageMagnitude => 1.0,
            Quantity::VoltageAngle => 1.0,
            Quantity::GasPressure | Quantity::HeatPressure => 1e5,
            Quantity::GasFlow | Quantity::HeatFlow => 1.0,
            Quantity::NodeTemperature | Quantity::OutletTemperature => 100.0,
        })
        .collect()
}
