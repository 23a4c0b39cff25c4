//! Coupled steady-state flow analysis for electricity, gas and
//! district-heating distribution networks.
//!
//! The three carriers are modeled as layers of one multi-layer graph with a
//! coupling layer of conversion devices (gas turbines, electrolyzers, gas
//! boilers, heat pumps). The solver assembles the per-domain residuals and
//! Jacobians into one block-diagonal system and drives it with a damped
//! Newton-Raphson iteration, so electrical voltages, gas and heat pressures
//! and flows, and network temperatures converge together.

pub mod coupling;
pub mod electrical;
pub mod error;
pub mod graph;
pub mod hydraulics;
pub mod io;
pub mod linsolve;
pub mod results;
pub mod solver;
pub mod thermal;
pub mod unknowns;
pub mod validate;

pub use coupling::{
    apply_coupling, cop_evaluate, device_balance, Conversion, CopModel, CouplingDevice,
    CouplingLayer, CouplingNode, DeviceKind, ExogenousInputs, InjectionDeltas,
};
pub use error::{Error, Result};
pub use graph::{
    Carrier, ElectricalEdge, ElectricalLayer, ElectricalNode, ElectricalNodeKind, HeatLayer,
    HydraulicLayer, HydraulicNode, HydraulicNodeKind, IncidenceMatrix, MultiEnergyNetwork, Pipe,
    PipeThermal, ThermalNode, TransformerParams,
};
pub use linsolve::{Block, BlockMatrix, LinearPath};
pub use results::{branch_results, summarize, BranchResults, SnapshotSummary};
pub use solver::{
    assemble, effective_boundary, finite_difference_jacobian, initial_state, nr_solve,
    ColumnScaling, Damping, NetworkState, PhysicsConfig, ResidualNorms, ScheduledLoads,
    SolveOptions, SolveReport, Tolerances,
};
pub use unknowns::{ordered_unknowns, DomainSpans, Quantity, UnknownKey, UnknownMap};
pub use validate::{validate_topology, ValidationReport, Violation};
