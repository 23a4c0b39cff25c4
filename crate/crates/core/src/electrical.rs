//! AC power-flow kernel: per-unit nodal admittance, complex power
//! injections, mismatches and the polar-form Jacobian.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{ElectricalLayer, ElectricalNodeKind};

/// Per-unit nodal admittance with the structural nonzero pattern kept for
/// sparse Jacobian assembly.
#[derive(Debug, Clone)]
pub struct AdmittanceMatrix {
    y: DMatrix<Complex64>,
    /// For each row, the sorted column indices with a structural entry
    /// (diagonal included).
    pattern: Vec<Vec<usize>>,
}

impl AdmittanceMatrix {
    pub fn dimension(&self) -> usize {
        self.y.nrows()
    }

    pub fn get(&self, i: usize, k: usize) -> Complex64 {
        self.y[(i, k)]
    }

    pub fn row_pattern(&self, i: usize) -> &[usize] {
        &self.pattern[i]
    }

    pub fn to_dense(&self) -> &DMatrix<Complex64> {
        &self.y
    }
}

/// Voltage iterate: per-unit magnitudes and angles in radians for every
/// node, slack entries held at their boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectricalState {
    pub vm_pu: Vec<f64>,
    pub va_rad: Vec<f64>,
}

impl ElectricalState {
    /// Flat start: 1 p.u. everywhere, zero angles.
    pub fn flat(n_nodes: usize) -> Self {
        ElectricalState {
            vm_pu: vec![1.0; n_nodes],
            va_rad: vec![0.0; n_nodes],
        }
    }

    pub fn voltage(&self, node: usize) -> Complex64 {
        Complex64::from_polar(self.vm_pu[node], self.va_rad[node])
    }
}

/// Builds the per-unit nodal admittance matrix. Lines use the impedance base
/// of their zone (from-node base voltage, layer MVA base); transformer edges
/// contribute their short-circuit impedance rescaled from the unit rating to
/// the system base, stamped with the off-nominal ratio on the from (HV)
/// side.
pub fn build_admittance(layer: &ElectricalLayer) -> Result<AdmittanceMatrix> {
    let n = layer.nodes.len();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));

    for edge in &layer.edges {
        match &edge.transformer {
            None => {
                let z_ohm = Complex64::new(
                    edge.r_ohm_per_km * edge.length_km,
                    edge.x_ohm_per_km * edge.length_km,
                );
                if z_ohm.norm() == 0.0 {
                    return Err(Error::SingularBranch(edge.name.clone()));
                }
                let v_from = layer.nodes[edge.from].base_voltage_v;
                let v_to = layer.nodes[edge.to].base_voltage_v;
                if (v_from - v_to).abs() > 1e-9 * v_from {
                    return Err(Error::DimensionMismatch(format!(
                        "line '{}' spans different voltage zones",
                        edge.name
                    )));
                }
                let v_base_kv = v_from / 1e3;
                let z_base = v_base_kv * v_base_kv / layer.base_mva;
                let y_series = z_base / z_ohm;
                y[(edge.from, edge.from)] += y_series;
                y[(edge.to, edge.to)] += y_series;
                y[(edge.from, edge.to)] -= y_series;
                y[(edge.to, edge.from)] -= y_series;
            }
            Some(t) => {
                if t.v_sc_percent <= 0.0 || t.rated_mva <= 0.0 {
                    return Err(Error::SingularBranch(edge.name.clone()));
                }
                let z_pu = Complex64::new(0.0, t.v_sc_percent / 100.0)
                    * (layer.base_mva / t.rated_mva);
                let y_series = 1.0 / z_pu;
                let ratio = t.ratio;
                y[(edge.from, edge.from)] += y_series / (ratio * ratio);
                y[(edge.to, edge.to)] += y_series;
                y[(edge.from, edge.to)] -= y_series / ratio;
                y[(edge.to, edge.from)] -= y_series / ratio;
            }
        }
    }

    let mut pattern = vec![Vec::new(); n];
    for i in 0..n {
        pattern[i].push(i);
    }
    for edge in &layer.edges {
        pattern[edge.from].push(edge.to);
        pattern[edge.to].push(edge.from);
    }
    for row in &mut pattern {
        row.sort_unstable();
        row.dedup();
    }

    Ok(AdmittanceMatrix { y, pattern })
}

/// Complex nodal injections S_i = V_i * conj(sum_k Y_ik V_k).
pub fn power_injections(state: &ElectricalState, y: &AdmittanceMatrix) -> Vec<Complex64> {
    let n = y.dimension();
    let mut injections = Vec::with_capacity(n);
    for i in 0..n {
        let mut current = Complex64::new(0.0, 0.0);
        for &k in y.row_pattern(i) {
            current += y.get(i, k) * state.voltage(k);
        }
        injections.push(state.voltage(i) * current.conj());
    }
    injections
}

/// Active/reactive mismatches for every node: scheduled minus calculated.
/// Slack rows are reported too (they carry the balance) but are excluded
/// from the solve by the row map.
pub fn electrical_mismatch(
    state: &ElectricalState,
    y: &AdmittanceMatrix,
    p_scheduled_pu: &[f64],
    q_scheduled_pu: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let injections = power_injections(state, y);
    let dp = injections
        .iter()
        .zip(p_scheduled_pu)
        .map(|(s, sched)| sched - s.re)
        .collect();
    let dq = injections
        .iter()
        .zip(q_scheduled_pu)
        .map(|(s, sched)| sched - s.im)
        .collect();
    (dp, dq)
}

/// One structurally-nonzero entry of the electrical Jacobian, carrying the
/// four partial derivatives of the calculated injections (the conventional
/// power-flow Jacobian; the residual derivative is its negation).
#[derive(Debug, Clone, Copy)]
pub struct JacobianEntry {
    pub row_node: usize,
    pub col_node: usize,
    pub dp_dvm: f64,
    pub dp_dva: f64,
    pub dq_dvm: f64,
    pub dq_dva: f64,
}

/// Analytic partial derivatives of the calculated injections with respect to
/// voltage magnitudes and angles, emitted per structurally-nonzero node
/// pair. Restriction to the free rows/columns happens during assembly.
pub fn electrical_jacobian(
    state: &ElectricalState,
    y: &AdmittanceMatrix,
) -> Vec<JacobianEntry> {
    let injections = power_injections(state, y);
    let mut entries = Vec::new();
    for i in 0..y.dimension() {
        let vm_i = state.vm_pu[i];
        let p_i = injections[i].re;
        let q_i = injections[i].im;
        for &k in y.row_pattern(i) {
            let y_ik = y.get(i, k);
            let (g, b) = (y_ik.re, y_ik.im);
            let entry = if i == k {
                JacobianEntry {
                    row_node: i,
                    col_node: i,
                    dp_dvm: p_i / vm_i + g * vm_i,
                    dp_dva: -q_i - b * vm_i * vm_i,
                    dq_dvm: q_i / vm_i - b * vm_i,
                    dq_dva: p_i - g * vm_i * vm_i,
                }
            } else {
                let vm_k = state.vm_pu[k];
                let theta = state.va_rad[i] - state.va_rad[k];
                let (sin_t, cos_t) = theta.sin_cos();
                JacobianEntry {
                    row_node: i,
                    col_node: k,
                    dp_dvm: vm_i * (g * cos_t + b * sin_t),
                    dp_dva: vm_i * vm_k * (g * sin_t - b * cos_t),
                    dq_dvm: vm_i * (g * sin_t - b * cos_t),
                    dq_dva: -vm_i * vm_k * (g * cos_t + b * sin_t),
                }
            };
            entries.push(entry);
        }
    }
    entries
}

/// Derives reactive power from active power at a fixed inductive power
/// factor.
pub fn reactive_from_power_factor(p_w: f64, cos_phi: f64) -> f64 {
    let tan_phi = (1.0 - cos_phi * cos_phi).sqrt() / cos_phi;
    p_w * tan_phi
}

/// Scheduled per-unit injections from consumption-positive loads in watts.
pub fn scheduled_injections_pu(
    layer: &ElectricalLayer,
    p_load_w: &[f64],
    q_load_var: &[f64],
    p_extra_injection_w: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let base_w = layer.base_mva * 1e6;
    let p = p_load_w
        .iter()
        .zip(p_extra_injection_w)
        .map(|(load, extra)| (-load + extra) / base_w)
        .collect();
    let q = q_load_var.iter().map(|load| -load / base_w).collect();
    (p, q)
}

/// Indices of the slack nodes of a layer.
pub fn slack_nodes(layer: &ElectricalLayer) -> Vec<usize> {
    layer
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.kind == ElectricalNodeKind::Slack)
        .map(|(i, _)| i)
        .collect()
}
