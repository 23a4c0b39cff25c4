//! Result exports: per-node and per-edge snapshot tables, time-series
//! tables and JSON summaries. Column order is fixed and all numbers use the
//! shortest round-trip representation, so identical runs produce identical
//! bytes.

use std::path::Path;

use chrono::NaiveDateTime;
use serde::Serialize;

use super::IoResult;
use crate::graph::{HydraulicNodeKind, MultiEnergyNetwork};
use crate::results::summarize;
use crate::solver::SolveReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// One generic table: header plus string-rendered rows.
struct Table {
    name: &'static str,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn write(&self, dir: &Path, format: OutputFormat) -> IoResult<()> {
        let path = dir.join(format!("{}.{}", self.name, format.extension()));
        let mut out = String::new();
        match format {
            OutputFormat::Csv => {
                out.push_str(&self.header.join(","));
                out.push('\n');
                for row in &self.rows {
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
            OutputFormat::Json => {
                let objects: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let map: serde_json::Map<String, serde_json::Value> = self
                            .header
                            .iter()
                            .zip(row)
                            .map(|(k, v)| {
                                let value = v
                                    .parse::<f64>()
                                    .map(|x| {
                                        serde_json::Number::from_f64(x)
                                            .map(serde_json::Value::Number)
                                            .unwrap_or(serde_json::Value::Null)
                                    })
                                    .unwrap_or_else(|_| serde_json::Value::String(v.clone()));
                                ((*k).to_string(), value)
                            })
                            .collect();
                        serde_json::Value::Object(map)
                    })
                    .collect();
                out = serde_json::to_string_pretty(&objects).expect("table serialization");
                out.push('\n');
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Writes the per-node and per-edge tables of one converged snapshot plus a
/// `summary.json`.
pub fn write_snapshot(
    dir: &Path,
    network: &MultiEnergyNetwork,
    report: &SolveReport,
    format: OutputFormat,
) -> IoResult<()> {
    std::fs::create_dir_all(dir)?;
    let state = &report.final_state;
    let branch = &report.branch_results;

    let electrical_nodes = Table {
        name: "electrical_nodes",
        header: vec!["id", "vm_pu", "va_degree", "p_load_kw"],
        rows: network
            .electrical
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| {
                vec![
                    node.name.clone(),
                    fmt(state.electrical.vm_pu[i]),
                    fmt(state.electrical.va_rad[i].to_degrees()),
                    fmt(node.p_load_w / 1e3),
                ]
            })
            .collect(),
    };

    let electrical_branches = Table {
        name: "electrical_branches",
        header: vec!["id", "from", "to", "current_a", "loading_percent", "loss_kw"],
        rows: branch
            .electrical
            .iter()
            .map(|b| {
                vec![
                    b.name.clone(),
                    b.from.clone(),
                    b.to.clone(),
                    fmt(b.current_a),
                    fmt(b.loading_percent),
                    fmt(b.loss_w / 1e3),
                ]
            })
            .collect(),
    };

    // pressure drop relative to the component's reference node
    let gas_reference_pa = reference_pressures(network);
    let gas_nodes = Table {
        name: "gas_nodes",
        header: vec!["id", "p_bar", "drop_vs_reference_percent"],
        rows: network
            .gas
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let p = state.gas.node_pressure_pa[i];
                let reference = gas_reference_pa[i];
                vec![
                    node.name.clone(),
                    fmt(p / 1e5),
                    fmt(100.0 * (reference - p) / reference),
                ]
            })
            .collect(),
    };

    let gas_pipes = Table {
        name: "gas_pipes",
        header: vec!["id", "from", "to", "mdot_kg_per_s", "velocity_m_per_s", "dp_bar"],
        rows: branch
            .gas
            .iter()
            .map(|b| {
                vec![
                    b.name.clone(),
                    b.from.clone(),
                    b.to.clone(),
                    fmt(b.mdot_kg_per_s),
                    fmt(b.velocity_m_per_s),
                    fmt(b.dp_pa / 1e5),
                ]
            })
            .collect(),
    };

    let heat_nodes = Table {
        name: "heat_nodes",
        header: vec!["id", "p_bar", "t_c"],
        rows: network
            .heat
            .hydraulic
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| {
                vec![
                    node.name.clone(),
                    fmt(state.heat_hydraulic.node_pressure_pa[i] / 1e5),
                    fmt(state.thermal.node_temp_k[i] - 273.15),
                ]
            })
            .collect(),
    };

    let heat_pipes = Table {
        name: "heat_pipes",
        header: vec![
            "id",
            "from",
            "to",
            "mdot_kg_per_s",
            "t_in_c",
            "t_out_c",
            "dt_k",
            "loss_kw",
        ],
        rows: branch
            .heat
            .iter()
            .map(|b| {
                vec![
                    b.hydraulic.name.clone(),
                    b.hydraulic.from.clone(),
                    b.hydraulic.to.clone(),
                    fmt(b.hydraulic.mdot_kg_per_s),
                    fmt(b.t_in_k - 273.15),
                    fmt(b.t_out_k - 273.15),
                    fmt(b.t_in_k - b.t_out_k),
                    fmt(b.loss_w / 1e3),
                ]
            })
            .collect(),
    };

    for table in [
        &electrical_nodes,
        &electrical_branches,
        &gas_nodes,
        &gas_pipes,
        &heat_nodes,
        &heat_pipes,
    ] {
        table.write(dir, format)?;
    }

    let summary = summarize(state, branch);
    let norms = report.residual_history.last();
    let json = serde_json::json!({
        "converged": report.converged,
        "iterations": report.iterations,
        "final_norms": norms.map(|n| serde_json::json!({
            "electric_pu": n.electric_pu,
            "gas_mdot_kg_per_s": n.gas_mdot_kg_per_s,
            "gas_pressure_pa": n.gas_pressure_pa,
            "heat_mdot_kg_per_s": n.heat_mdot_kg_per_s,
            "heat_pressure_pa": n.heat_pressure_pa,
            "thermal_w": n.thermal_w,
        })),
        "min_vm_pu": summary.min_vm_pu,
        "max_loading_percent": summary.max_loading_percent,
        "min_gas_pressure_bar": summary.min_gas_pressure_pa.map(|p| p / 1e5),
        "min_heat_pressure_bar": summary.min_heat_pressure_pa.map(|p| p / 1e5),
        "min_temperature_c": summary.min_node_temp_k.map(|t| t - 273.15),
    });
    let mut text = serde_json::to_string_pretty(&json).expect("summary serialization");
    text.push('\n');
    std::fs::write(dir.join("summary.json"), text)?;
    Ok(())
}

fn reference_pressures(network: &MultiEnergyNetwork) -> Vec<f64> {
    let n = network.gas.nodes.len();
    let (component, n_components) = crate::graph::connected_components(
        n,
        network.gas.pipes.iter().map(|p| (p.from, p.to)),
    );
    let mut reference = vec![f64::NAN; n_components];
    for (i, node) in network.gas.nodes.iter().enumerate() {
        if node.kind == HydraulicNodeKind::Reference && reference[component[i]].is_nan() {
            reference[component[i]] = node.pressure_pa;
        }
    }
    (0..n)
        .map(|i| {
            let r = reference[component[i]];
            if r.is_nan() {
                network.gas.nodes[i].pressure_pa
            } else {
                r
            }
        })
        .collect()
}

/// One row of the time-series output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRow {
    pub timestamp: NaiveDateTime,
    pub converged: bool,
    pub iterations: usize,
    pub min_vm_pu: Option<f64>,
    pub max_loading_percent: Option<f64>,
    pub min_gas_pressure_bar: Option<f64>,
    pub min_supply_temp_c: Option<f64>,
}

/// Aggregate of a series run; the worst case is the step with the lowest
/// minimum voltage (ties resolve to the earliest step).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub steps: usize,
    pub converged_steps: usize,
    pub mean_iterations: f64,
    pub worst_case_timestamp: Option<NaiveDateTime>,
    pub min_vm_pu: Option<f64>,
    pub max_loading_percent: Option<f64>,
    pub min_gas_pressure_bar: Option<f64>,
    pub min_supply_temp_c: Option<f64>,
}

pub fn summarize_series(rows: &[SeriesRow]) -> SeriesSummary {
    let converged_steps = rows.iter().filter(|r| r.converged).count();
    let mean_iterations = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.iterations as f64).sum::<f64>() / rows.len() as f64
    };
    let mut worst: Option<&SeriesRow> = None;
    for row in rows {
        if let Some(vm) = row.min_vm_pu {
            let better = match worst.and_then(|w| w.min_vm_pu) {
                Some(current) => vm < current,
                None => true,
            };
            if better {
                worst = Some(row);
            }
        }
    }
    let fold_min = |f: fn(&SeriesRow) -> Option<f64>| {
        rows.iter()
            .filter_map(f)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    };
    let fold_max = |f: fn(&SeriesRow) -> Option<f64>| {
        rows.iter()
            .filter_map(f)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    };
    SeriesSummary {
        steps: rows.len(),
        converged_steps,
        mean_iterations,
        worst_case_timestamp: worst.map(|r| r.timestamp),
        min_vm_pu: fold_min(|r| r.min_vm_pu),
        max_loading_percent: fold_max(|r| r.max_loading_percent),
        min_gas_pressure_bar: fold_min(|r| r.min_gas_pressure_bar),
        min_supply_temp_c: fold_min(|r| r.min_supply_temp_c),
    }
}

/// Writes `series.{csv,json}` plus `series_summary.json`.
pub fn write_series(dir: &Path, rows: &[SeriesRow], format: OutputFormat) -> IoResult<()> {
    std::fs::create_dir_all(dir)?;
    let table = Table {
        name: "series",
        header: vec![
            "timestamp",
            "converged",
            "iterations",
            "min_vm_pu",
            "max_loading_percent",
            "min_gas_pressure_bar",
            "min_supply_temp_c",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
                    r.converged.to_string(),
                    r.iterations.to_string(),
                    r.min_vm_pu.map(fmt).unwrap_or_default(),
                    r.max_loading_percent.map(fmt).unwrap_or_default(),
                    r.min_gas_pressure_bar.map(fmt).unwrap_or_default(),
                    r.min_supply_temp_c.map(fmt).unwrap_or_default(),
                ]
            })
            .collect(),
    };
    table.write(dir, format)?;

    let summary = summarize_series(rows);
    let mut text = serde_json::to_string_pretty(&summary).expect("series summary");
    text.push('\n');
    std::fs::write(dir.join("series_summary.json"), text)?;
    Ok(())
}
