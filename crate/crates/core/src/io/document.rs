//! The network definition file: serde schema, unit conversion and
//! cross-reference resolution into the in-memory model.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IoError, IoResult};
use crate::coupling::{Conversion, CopModel, CouplingDevice, DeviceKind};
use crate::electrical::reactive_from_power_factor;
use crate::graph::*;
use crate::hydraulics::{FluidKind, FluidModel};
use crate::solver::PhysicsConfig;
use crate::thermal::HeatLoadConversion;
use crate::validate::validate_topology;

pub const SCHEMA_VERSION: u32 = 1;

/// Power factor applied when a load carries no reactive component.
pub const DEFAULT_COS_PHI: f64 = 0.93;

const CELSIUS_OFFSET: f64 = 273.15;

fn one() -> f64 {
    1.0
}
fn default_base_mva() -> f64 {
    1.0
}
fn default_k_mm() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct NetworkDocument {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physics: Option<PhysicsDocument>,
    #[serde(default)]
    pub electricity: ElectricityDocument,
    #[serde(default)]
    pub gas: HydraulicDocument,
    #[serde(default)]
    pub heat: HydraulicDocument,
    #[serde(default)]
    pub couplings: Vec<CouplingDocument>,
}

/// Optional fluid/closure overrides carried by the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PhysicsDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gas_molar_mass_kg_per_mol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gas_temperature_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gas_viscosity_pa_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub water_density_kg_per_m3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub water_c_p_j_per_kg_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub water_viscosity_pa_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_temperature_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gas_heating_value_kwh_per_kg: Option<f64>,
}

impl PhysicsDocument {
    pub fn to_config(&self) -> PhysicsConfig {
        let defaults = PhysicsConfig::default();
        let (default_molar, default_t) = match defaults.gas_fluid.kind {
            FluidKind::IdealGas {
                molar_mass_kg_per_mol,
                temperature_k,
            } => (molar_mass_kg_per_mol, temperature_k),
            _ => unreachable!(),
        };
        let (default_rho, default_cp) = match defaults.heat_fluid.kind {
            FluidKind::IncompressibleLiquid {
                density_kg_per_m3,
                c_p_j_per_kg_k,
            } => (density_kg_per_m3, c_p_j_per_kg_k),
            _ => unreachable!(),
        };
        PhysicsConfig {
            gas_fluid: FluidModel {
                kind: FluidKind::IdealGas {
                    molar_mass_kg_per_mol: self
                        .gas_molar_mass_kg_per_mol
                        .unwrap_or(default_molar),
                    temperature_k: self
                        .gas_temperature_c
                        .map(|c| c + CELSIUS_OFFSET)
                        .unwrap_or(default_t),
                },
                viscosity_pa_s: self
                    .gas_viscosity_pa_s
                    .unwrap_or(defaults.gas_fluid.viscosity_pa_s),
            },
            heat_fluid: FluidModel {
                kind: FluidKind::IncompressibleLiquid {
                    density_kg_per_m3: self.water_density_kg_per_m3.unwrap_or(default_rho),
                    c_p_j_per_kg_k: self.water_c_p_j_per_kg_k.unwrap_or(default_cp),
                },
                viscosity_pa_s: self
                    .water_viscosity_pa_s
                    .unwrap_or(defaults.heat_fluid.viscosity_pa_s),
            },
            heat_conversion: HeatLoadConversion {
                return_temperature_k: self
                    .return_temperature_c
                    .map(|c| c + CELSIUS_OFFSET)
                    .unwrap_or(defaults.heat_conversion.return_temperature_k),
            },
            friction: defaults.friction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricityDocument {
    #[serde(default = "default_base_mva")]
    pub base_mva: f64,
    #[serde(default)]
    pub nodes: Vec<ElectricalNodeDoc>,
    #[serde(default)]
    pub edges: Vec<ElectricalEdgeDoc>,
    #[serde(default)]
    pub transformers: Vec<TransformerDoc>,
}

impl Default for ElectricityDocument {
    fn default() -> Self {
        ElectricityDocument {
            base_mva: 1.0,
            nodes: Vec::new(),
            edges: Vec::new(),
            transformers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElectricalKindDoc {
    Slack,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricalNodeDoc {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: ElectricalKindDoc,
    pub vn_kv: f64,
    #[serde(default)]
    pub p_load_kw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_load_kvar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricalEdgeDoc {
    pub id: String,
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_type: Option<String>,
    pub r_ohm_per_km: f64,
    pub x_ohm_per_km: f64,
    pub length_km: f64,
    #[serde(default)]
    pub max_i_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerDoc {
    pub id: String,
    pub hv_node: String,
    pub lv_node: String,
    pub rated_mva: f64,
    pub v_sc_percent: f64,
    #[serde(default = "one")]
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct HydraulicDocument {
    #[serde(default)]
    pub nodes: Vec<HydraulicNodeDoc>,
    #[serde(default)]
    pub pipes: Vec<PipeDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HydraulicKindDoc {
    /// Fixed-pressure node (heat files may spell it `supply`).
    Reference,
    #[serde(alias = "source")]
    Supply,
    Demand,
}

impl HydraulicKindDoc {
    fn is_reference(self) -> bool {
        matches!(self, HydraulicKindDoc::Reference | HydraulicKindDoc::Supply)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydraulicNodeDoc {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: HydraulicKindDoc,
    pub pn_bar: f64,
    #[serde(default)]
    pub mdot_kg_per_s: f64,
    #[serde(default)]
    pub height_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tfluid_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    /// Heat layer only: consumer heat demand.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub heat_demand_kw: f64,
    /// Heat layer only: fixed supply temperature of the source node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supply_temp_c: Option<f64>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipeDoc {
    pub id: String,
    pub from: String,
    pub to: String,
    pub diameter_m: f64,
    pub length_km: f64,
    #[serde(default = "default_k_mm")]
    pub k_mm: f64,
    #[serde(default)]
    pub zeta: f64,
    /// Optional starting-flow hint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mdot_kg_per_s: Option<f64>,
    /// Heat layer only.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub u_w_per_m2k: f64,
    /// Heat layer only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient_c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingKindDoc {
    #[serde(rename = "g2e")]
    GasToElectric,
    #[serde(rename = "e2g")]
    ElectricToGas,
    #[serde(rename = "g2h")]
    GasBoiler,
    #[serde(rename = "e2h")]
    HeatPump,
}

impl CouplingKindDoc {
    fn device_kind(self) -> DeviceKind {
        match self {
            CouplingKindDoc::GasToElectric => DeviceKind::GasToElectric,
            CouplingKindDoc::ElectricToGas => DeviceKind::ElectricToGas,
            CouplingKindDoc::GasBoiler => DeviceKind::GasBoiler,
            CouplingKindDoc::HeatPump => DeviceKind::HeatPump,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarnotDoc {
    pub quality: f64,
    pub t_sink_c: f64,
    #[serde(default = "one")]
    pub cop_min: f64,
    #[serde(default = "default_cop_max")]
    pub cop_max: f64,
}

fn default_cop_max() -> f64 {
    8.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingDocument {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: CouplingKindDoc,
    pub input_node: String,
    pub output_node: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
    /// Heat pump COP over source temperature in degC.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cop_table_c: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cop_carnot: Option<CarnotDoc>,
    pub rating_kw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
}

/// A parsed, validated network with its source document retained for
/// lossless re-serialization.
#[derive(Debug, Clone)]
pub struct LoadedNetwork {
    pub network: MultiEnergyNetwork,
    pub physics: PhysicsConfig,
    pub document: NetworkDocument,
    /// Forward-compatibility notes (unknown fields), not errors.
    pub warnings: Vec<String>,
}

pub fn load_network(path: &Path) -> IoResult<LoadedNetwork> {
    let text = std::fs::read_to_string(path)?;
    load_network_str(&text)
}

pub fn load_network_str(text: &str) -> IoResult<LoadedNetwork> {
    let mut deserializer = serde_json::Deserializer::from_str(text);
    let mut warnings = Vec::new();
    let document: NetworkDocument =
        serde_ignored::deserialize(&mut deserializer, |path| {
            warnings.push(format!("unknown field `{path}`"));
        })
        .map_err(|e| IoError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;

    if document.schema_version != SCHEMA_VERSION {
        return Err(IoError::Document(vec![format!(
            "unsupported schema_version {} (expected {})",
            document.schema_version, SCHEMA_VERSION
        )]));
    }

    let (network, physics) = build_network(&document)?;
    let report = validate_topology(&network);
    if !report.is_ok() {
        return Err(IoError::Invalid(report));
    }
    Ok(LoadedNetwork {
        network,
        physics,
        document,
        warnings,
    })
}

pub fn save_network(document: &NetworkDocument, path: &Path) -> IoResult<()> {
    let mut text = serde_json::to_string_pretty(document).expect("document serialization");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn build_network(document: &NetworkDocument) -> IoResult<(MultiEnergyNetwork, PhysicsConfig)> {
    let mut errors = Vec::new();
    let mut network = MultiEnergyNetwork::default();
    let physics = document
        .physics
        .clone()
        .unwrap_or_default()
        .to_config();

    // electricity
    let elec = &document.electricity;
    network.electrical.base_mva = elec.base_mva;
    let mut elec_ids = HashMap::new();
    for (i, node) in elec.nodes.iter().enumerate() {
        if elec_ids.insert(node.id.clone(), i).is_some() {
            errors.push(format!("electricity: duplicate node id '{}'", node.id));
        }
        let p_load_w = node.p_load_kw * 1e3;
        let q_load_var = match node.q_load_kvar {
            Some(kvar) => kvar * 1e3,
            None => reactive_from_power_factor(p_load_w, DEFAULT_COS_PHI),
        };
        network.electrical.nodes.push(ElectricalNode {
            name: node.id.clone(),
            kind: match node.kind {
                ElectricalKindDoc::Slack => ElectricalNodeKind::Slack,
                ElectricalKindDoc::Pq => ElectricalNodeKind::Pq,
            },
            base_voltage_v: node.vn_kv * 1e3,
            p_load_w,
            q_load_var,
            profile: node.profile.clone(),
        });
    }
    let resolve_elec = |id: &str, context: &str, errors: &mut Vec<String>| -> usize {
        match elec_ids.get(id) {
            Some(&i) => i,
            None => {
                errors.push(format!("{context}: unknown electricity node '{id}'"));
                usize::MAX
            }
        }
    };
    for edge in &elec.edges {
        let from = resolve_elec(&edge.from, &format!("edge '{}'", edge.id), &mut errors);
        let to = resolve_elec(&edge.to, &format!("edge '{}'", edge.id), &mut errors);
        network.electrical.edges.push(ElectricalEdge {
            name: edge.id.clone(),
            from,
            to,
            r_ohm_per_km: edge.r_ohm_per_km,
            x_ohm_per_km: edge.x_ohm_per_km,
            length_km: edge.length_km,
            rating_a: edge.max_i_a,
            transformer: None,
        });
    }
    for trafo in &elec.transformers {
        let from = resolve_elec(&trafo.hv_node, &format!("transformer '{}'", trafo.id), &mut errors);
        let to = resolve_elec(&trafo.lv_node, &format!("transformer '{}'", trafo.id), &mut errors);
        network.electrical.edges.push(ElectricalEdge {
            name: trafo.id.clone(),
            from,
            to,
            r_ohm_per_km: 0.0,
            x_ohm_per_km: 0.0,
            length_km: 0.0,
            rating_a: 0.0,
            transformer: Some(TransformerParams {
                rated_mva: trafo.rated_mva,
                v_sc_percent: trafo.v_sc_percent,
                ratio: trafo.ratio,
            }),
        });
    }

    // gas
    let (gas_layer, gas_ids) = build_hydraulic(&document.gas, "gas", &mut errors);
    network.gas = gas_layer;

    // heat: hydraulics plus the thermal attribute vectors
    let (heat_layer, heat_ids) = build_hydraulic(&document.heat, "heat", &mut errors);
    network.heat.hydraulic = heat_layer;
    for node in &document.heat.nodes {
        let fixed = if node.kind.is_reference() {
            Some(
                node.supply_temp_c
                    .or(node.tfluid_c)
                    .map(|c| c + CELSIUS_OFFSET)
                    .unwrap_or(crate::thermal::DEFAULT_SUPPLY_K),
            )
        } else {
            None
        };
        network.heat.node_thermal.push(ThermalNode {
            temperature_fixed_k: fixed,
            heat_demand_w: node.heat_demand_kw * 1e3,
            profile: node.profile.clone(),
        });
    }
    for pipe in &document.heat.pipes {
        network.heat.pipe_thermal.push(PipeThermal {
            u_w_per_m2_k: pipe.u_w_per_m2k,
            ambient_k: pipe
                .ambient_c
                .map(|c| c + CELSIUS_OFFSET)
                .unwrap_or(283.15),
        });
    }

    // couplings through duplicated nodes
    if let Some(doc) = &document.physics {
        if let Some(kwh_per_kg) = doc.gas_heating_value_kwh_per_kg {
            network.coupling.gas_heating_value_j_per_kg = kwh_per_kg * 3.6e6;
        }
    }
    for device in &document.couplings {
        let kind = device.kind.device_kind();
        let (input_carrier, output_carrier) = kind.carriers();
        let mut resolve = |carrier: Carrier, id: &str| -> usize {
            let index = match carrier {
                Carrier::Electricity => elec_ids.get(id).copied(),
                Carrier::Gas => gas_ids.get(id).copied(),
                Carrier::Heat => heat_ids.get(id).copied(),
            };
            match index {
                Some(i) => network.coupling.duplicate_node(carrier, i),
                None => {
                    errors.push(format!(
                        "coupling '{}': unknown {carrier} node '{id}'",
                        device.id
                    ));
                    usize::MAX
                }
            }
        };
        let input_node = resolve(input_carrier, &device.input_node);
        let output_node = resolve(output_carrier, &device.output_node);

        let conversion = match (kind, &device.efficiency, &device.cop_table_c, &device.cop_carnot)
        {
            (DeviceKind::HeatPump, _, Some(table), None) => Conversion::Cop(CopModel::Table {
                points: table
                    .iter()
                    .map(|&(c, cop)| (c + CELSIUS_OFFSET, cop))
                    .collect(),
            }),
            (DeviceKind::HeatPump, _, None, Some(carnot)) => {
                Conversion::Cop(CopModel::CarnotFraction {
                    quality: carnot.quality,
                    t_sink_k: carnot.t_sink_c + CELSIUS_OFFSET,
                    cop_min: carnot.cop_min,
                    cop_max: carnot.cop_max,
                })
            }
            (DeviceKind::HeatPump, _, _, _) => {
                errors.push(format!(
                    "coupling '{}': heat pump needs exactly one of cop_table_c / cop_carnot",
                    device.id
                ));
                Conversion::Efficiency(1.0)
            }
            (_, Some(eta), None, None) => Conversion::Efficiency(*eta),
            _ => {
                errors.push(format!(
                    "coupling '{}': efficiency required (and COP models not allowed)",
                    device.id
                ));
                Conversion::Efficiency(1.0)
            }
        };

        network.coupling.devices.push(CouplingDevice {
            name: device.id.clone(),
            kind,
            input_node,
            output_node,
            conversion,
            rating_w: device.rating_kw * 1e3,
            profile: device.profile.clone(),
        });
    }

    if !errors.is_empty() {
        return Err(IoError::Document(errors));
    }
    Ok((network, physics))
}

fn build_hydraulic(
    document: &HydraulicDocument,
    layer_name: &str,
    errors: &mut Vec<String>,
) -> (HydraulicLayer, HashMap<String, usize>) {
    let mut layer = HydraulicLayer::default();
    let mut ids = HashMap::new();
    for (i, node) in document.nodes.iter().enumerate() {
        if ids.insert(node.id.clone(), i).is_some() {
            errors.push(format!("{layer_name}: duplicate node id '{}'", node.id));
        }
        layer.nodes.push(HydraulicNode {
            name: node.id.clone(),
            kind: if node.kind.is_reference() {
                HydraulicNodeKind::Reference
            } else {
                HydraulicNodeKind::Demand
            },
            pressure_pa: node.pn_bar * 1e5,
            demand_kg_per_s: node.mdot_kg_per_s,
            height_m: node.height_m,
            fluid_temperature_k: node
                .tfluid_c
                .map(|c| c + CELSIUS_OFFSET)
                .unwrap_or(283.15),
            profile: node.profile.clone(),
        });
    }
    for pipe in &document.pipes {
        let mut resolve = |id: &str| match ids.get(id) {
            Some(&i) => i,
            None => {
                errors.push(format!(
                    "{layer_name}: pipe '{}' references unknown node '{id}'",
                    pipe.id
                ));
                usize::MAX
            }
        };
        let from = resolve(&pipe.from);
        let to = resolve(&pipe.to);
        layer.pipes.push(Pipe {
            name: pipe.id.clone(),
            from,
            to,
            diameter_m: pipe.diameter_m,
            length_m: pipe.length_km * 1e3,
            roughness_m: pipe.k_mm * 1e-3,
            zeta: pipe.zeta,
            flow_hint_kg_per_s: pipe.mdot_kg_per_s,
        });
    }
    (layer, ids)
}
