//! Deterministic synthetic networks and profiles for tests, benchmarks and
//! demonstration runs.
//!
//! The large scale mirrors a realistic mixed-voltage distribution area:
//! radial 0.4 kV feeders under three 20 kV transformers, a gas tree from one
//! fixed-pressure feed with polyethylene pipe diameters from house
//! connections up to the main, and a district-heating system sized for
//! roughly 9 kg/s at 80 degC supply. Element counts at this scale are fixed
//! (295/291/187 electricity, 236/235/123 gas, 132/106/25 heat); with 132
//! heat nodes on 106 pipes the heat layer is necessarily a forest, so it is
//! generated as one large island plus two-node satellite systems, each with
//! its own supply node.

use chrono::NaiveDateTime;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::document::*;
use super::profiles::ProfileSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureScale {
    /// 5/4/4-node tri-domain network for unit tests.
    Small,
    /// Full distribution-area scale.
    Table1,
}

impl std::str::FromStr for FixtureScale {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(FixtureScale::Small),
            "table1" => Ok(FixtureScale::Table1),
            other => Err(format!("unknown scale '{other}' (small, table1)")),
        }
    }
}

/// Builds the synthetic network document. Pure function of (seed, scale).
pub fn generate_fixture(seed: u64, scale: FixtureScale) -> NetworkDocument {
    match scale {
        FixtureScale::Small => small_fixture(),
        FixtureScale::Table1 => table1_fixture(seed),
    }
}

fn round(v: f64, digits: i32) -> f64 {
    let f = 10f64.powi(digits);
    (v * f).round() / f
}

fn small_fixture() -> NetworkDocument {
    let mut doc = NetworkDocument {
        schema_version: SCHEMA_VERSION,
        ..NetworkDocument::default()
    };

    doc.electricity.base_mva = 1.0;
    let enode = |id: &str, kind, p_kw: f64, profile: Option<&str>| ElectricalNodeDoc {
        id: id.into(),
        kind,
        vn_kv: 0.4,
        p_load_kw: p_kw,
        q_load_kvar: None,
        profile: profile.map(Into::into),
    };
    doc.electricity.nodes = vec![
        enode("e0", ElectricalKindDoc::Slack, 0.0, None),
        enode("e1", ElectricalKindDoc::Pq, 0.0, None),
        enode("e2", ElectricalKindDoc::Pq, 12.0, Some("household")),
        enode("e3", ElectricalKindDoc::Pq, 0.0, None),
        enode("e4", ElectricalKindDoc::Pq, 16.0, Some("commercial")),
    ];
    let eline = |id: &str, from: &str, to: &str, heavy: bool, km: f64| ElectricalEdgeDoc {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        std_type: Some(if heavy { "NAYY 4x150 SE" } else { "NAYY 4x50 SE" }.into()),
        r_ohm_per_km: if heavy { 0.208 } else { 0.642 },
        x_ohm_per_km: if heavy { 0.08 } else { 0.083 },
        length_km: km,
        max_i_a: if heavy { 270.0 } else { 142.0 },
    };
    doc.electricity.edges = vec![
        eline("el0", "e0", "e1", true, 0.05),
        eline("el1", "e1", "e2", false, 0.04),
        eline("el2", "e1", "e3", true, 0.06),
        eline("el3", "e3", "e4", false, 0.05),
    ];

    let gnode = |id: &str, kind, mdot: f64, profile: Option<&str>| HydraulicNodeDoc {
        id: id.into(),
        kind,
        pn_bar: 1.05,
        mdot_kg_per_s: mdot,
        height_m: 0.0,
        tfluid_c: Some(10.0),
        profile: profile.map(Into::into),
        heat_demand_kw: 0.0,
        supply_temp_c: None,
    };
    doc.gas.nodes = vec![
        gnode("g0", HydraulicKindDoc::Reference, 0.0, None),
        gnode("g1", HydraulicKindDoc::Demand, 0.0, None),
        gnode("g2", HydraulicKindDoc::Demand, 0.004, Some("gas_standard")),
        gnode("g3", HydraulicKindDoc::Demand, 0.002, Some("gas_standard")),
    ];
    let gpipe = |id: &str, from: &str, to: &str, d: f64, km: f64| PipeDoc {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        diameter_m: d,
        length_km: km,
        k_mm: 0.1,
        zeta: 0.0,
        mdot_kg_per_s: None,
        u_w_per_m2k: 0.0,
        ambient_c: None,
    };
    doc.gas.pipes = vec![
        gpipe("gp0", "g0", "g1", 0.147, 0.2),
        gpipe("gp1", "g1", "g2", 0.08, 0.15),
        gpipe("gp2", "g1", "g3", 0.05, 0.1),
    ];

    let hnode = |id: &str, kind, demand_kw: f64| HydraulicNodeDoc {
        id: id.into(),
        kind,
        pn_bar: 3.0,
        mdot_kg_per_s: 0.0,
        height_m: 0.0,
        tfluid_c: Some(80.0),
        profile: (demand_kw > 0.0).then(|| "heat_standard".into()),
        heat_demand_kw: demand_kw,
        supply_temp_c: matches!(kind, HydraulicKindDoc::Supply).then_some(80.0),
    };
    doc.heat.nodes = vec![
        hnode("h0", HydraulicKindDoc::Supply, 0.0),
        hnode("h1", HydraulicKindDoc::Demand, 30.0),
        hnode("h2", HydraulicKindDoc::Demand, 45.0),
        hnode("h3", HydraulicKindDoc::Demand, 20.0),
    ];
    let hpipe = |id: &str, from: &str, to: &str, d: f64, km: f64, u: f64| PipeDoc {
        u_w_per_m2k: u,
        ambient_c: Some(10.0),
        ..gpipe(id, from, to, d, km)
    };
    doc.heat.pipes = vec![
        hpipe("hp0", "h0", "h1", 0.1, 0.25, 0.8),
        hpipe("hp1", "h1", "h2", 0.08, 0.18, 0.8),
        hpipe("hp2", "h1", "h3", 0.065, 0.12, 0.8),
    ];

    doc.couplings = vec![
        CouplingDocument {
            id: "gas-turbine".into(),
            kind: CouplingKindDoc::GasToElectric,
            input_node: "g1".into(),
            output_node: "e1".into(),
            efficiency: Some(0.5),
            cop_table_c: None,
            cop_carnot: None,
            rating_kw: 60.0,
            profile: Some("device_g2e".into()),
        },
        CouplingDocument {
            id: "gas-boiler".into(),
            kind: CouplingKindDoc::GasBoiler,
            input_node: "g2".into(),
            output_node: "h2".into(),
            efficiency: Some(0.977),
            cop_table_c: None,
            cop_carnot: None,
            rating_kw: 73.0,
            profile: Some("device_g2h".into()),
        },
        CouplingDocument {
            id: "heat-pump".into(),
            kind: CouplingKindDoc::HeatPump,
            input_node: "e3".into(),
            output_node: "h3".into(),
            efficiency: None,
            cop_table_c: Some(vec![(-20.0, 2.0), (0.0, 3.0), (10.0, 3.4), (20.0, 4.0)]),
            cop_carnot: None,
            rating_kw: 76.7,
            profile: Some("device_e2h".into()),
        },
    ];

    doc
}

// line parameters of the standard cable types used below
const MV_CABLE: (&str, f64, f64, f64) = ("NA2XS2Y 1x185 RM/25", 0.161, 0.117, 362.0);
const LV_TRUNK: (&str, f64, f64, f64) = ("NAYY 4x150 SE", 0.208, 0.08, 270.0);
const LV_LATERAL: (&str, f64, f64, f64) = ("NAYY 4x50 SE", 0.642, 0.083, 142.0);

fn table1_fixture(seed: u64) -> NetworkDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc = NetworkDocument {
        schema_version: SCHEMA_VERSION,
        ..NetworkDocument::default()
    };

    // ---------------- electricity: 295 nodes, 291 lines, 3 transformers,
    // 187 loads ----------------
    doc.electricity.base_mva = 1.0;
    doc.electricity.nodes.push(ElectricalNodeDoc {
        id: "mv0".into(),
        kind: ElectricalKindDoc::Slack,
        vn_kv: 20.0,
        p_load_kw: 0.0,
        q_load_kvar: None,
        profile: None,
    });
    for k in 1..=3 {
        doc.electricity.nodes.push(ElectricalNodeDoc {
            id: format!("mv{k}"),
            kind: ElectricalKindDoc::Pq,
            vn_kv: 20.0,
            p_load_kw: 0.0,
            q_load_kvar: None,
            profile: None,
        });
    }
    let mv_lengths = [1.2, 0.9, 1.1];
    for k in 1..=3usize {
        let (std_type, r, x, rating) = MV_CABLE;
        doc.electricity.edges.push(ElectricalEdgeDoc {
            id: format!("mv-line{k}"),
            from: format!("mv{}", k - 1),
            to: format!("mv{k}"),
            std_type: Some(std_type.into()),
            r_ohm_per_km: r,
            x_ohm_per_km: x,
            length_km: mv_lengths[k - 1],
            max_i_a: rating,
        });
    }
    let trafo_mva = [0.63, 0.4, 0.25];
    for k in 1..=3usize {
        doc.electricity.transformers.push(TransformerDoc {
            id: format!("trafo{k}"),
            hv_node: format!("mv{k}"),
            lv_node: format!("lv{k}-000"),
            rated_mva: trafo_mva[k - 1],
            v_sc_percent: 6.0,
            ratio: 1.0,
        });
    }
    // three LV subtrees: busbar + 4 feeders x (12 trunk + 12 lateral nodes)
    let mut lv_load_candidates = Vec::new();
    for k in 1..=3usize {
        doc.electricity.nodes.push(ElectricalNodeDoc {
            id: format!("lv{k}-000"),
            kind: ElectricalKindDoc::Pq,
            vn_kv: 0.4,
            p_load_kw: 0.0,
            q_load_kvar: None,
            profile: None,
        });
        let mut next = 1usize;
        for feeder in 0..4 {
            let mut previous_trunk = format!("lv{k}-000");
            for _segment in 0..12 {
                let trunk_id = format!("lv{k}-{next:03}");
                next += 1;
                let lateral_id = format!("lv{k}-{next:03}");
                next += 1;
                for id in [&trunk_id, &lateral_id] {
                    doc.electricity.nodes.push(ElectricalNodeDoc {
                        id: id.clone(),
                        kind: ElectricalKindDoc::Pq,
                        vn_kv: 0.4,
                        p_load_kw: 0.0,
                        q_load_kvar: None,
                        profile: None,
                    });
                }
                let (std_type, r, x, rating) = LV_TRUNK;
                doc.electricity.edges.push(ElectricalEdgeDoc {
                    id: format!("l-{trunk_id}"),
                    from: previous_trunk.clone(),
                    to: trunk_id.clone(),
                    std_type: Some(std_type.into()),
                    r_ohm_per_km: r,
                    x_ohm_per_km: x,
                    length_km: round(0.03 + 0.015 * rng.random::<f64>(), 4),
                    max_i_a: rating,
                });
                let (std_type, r, x, rating) = LV_LATERAL;
                doc.electricity.edges.push(ElectricalEdgeDoc {
                    id: format!("l-{lateral_id}"),
                    from: trunk_id.clone(),
                    to: lateral_id.clone(),
                    std_type: Some(std_type.into()),
                    r_ohm_per_km: r,
                    x_ohm_per_km: x,
                    length_km: round(0.015 + 0.02 * rng.random::<f64>(), 4),
                    max_i_a: rating,
                });
                lv_load_candidates.push(trunk_id.clone());
                lv_load_candidates.push(lateral_id.clone());
                previous_trunk = trunk_id;
            }
            let _ = feeder;
        }
    }
    // place 187 loads on a deterministic shuffle of the candidates
    shuffle(&mut lv_load_candidates, &mut rng);
    let loaded: std::collections::HashSet<String> =
        lv_load_candidates.iter().take(187).cloned().collect();
    for node in doc.electricity.nodes.iter_mut() {
        if loaded.contains(&node.id) {
            node.p_load_kw = round(0.9 + 0.9 * rng.random::<f64>(), 3);
            node.profile = Some(
                if rng.random::<f64>() < 0.7 {
                    "household"
                } else {
                    "commercial"
                }
                .into(),
            );
        }
    }

    // ---------------- gas: 236 nodes, 235 pipes, 123 loads ----------------
    let gas_node = |id: String, kind, height: f64| HydraulicNodeDoc {
        id,
        kind,
        pn_bar: 1.05,
        mdot_kg_per_s: 0.0,
        height_m: round(height, 2),
        tfluid_c: Some(10.0),
        profile: None,
        heat_demand_kw: 0.0,
        supply_temp_c: None,
    };
    let gas_pipe = |id: String, from: String, to: String, d: f64, km: f64| PipeDoc {
        id,
        from,
        to,
        diameter_m: d,
        length_km: km,
        k_mm: 0.1,
        zeta: 0.0,
        mdot_kg_per_s: None,
        u_w_per_m2k: 0.0,
        ambient_c: None,
    };
    doc.gas.nodes.push(gas_node(
        "gas0".into(),
        HydraulicKindDoc::Reference,
        0.0,
    ));
    // trunk chain of 30
    for i in 1..=30usize {
        let height = 2.0 * (i as f64 * 0.35).sin() + rng.random::<f64>();
        doc.gas.nodes.push(gas_node(
            format!("gas-t{i:02}"),
            HydraulicKindDoc::Demand,
            height,
        ));
        doc.gas.pipes.push(gas_pipe(
            format!("gp-t{i:02}"),
            if i == 1 {
                "gas0".into()
            } else {
                format!("gas-t{:02}", i - 1)
            },
            format!("gas-t{i:02}"),
            0.147,
            round(0.03 + 0.02 * rng.random::<f64>(), 4),
        ));
    }
    // six branch mains of 12 nodes each
    let mut branch_nodes = Vec::new();
    for b in 0..6usize {
        let root = format!("gas-t{:02}", 5 + b * 5);
        let mut previous = root;
        for i in 0..12usize {
            let id = format!("gas-b{b}{i:02}");
            let height = 2.0 * ((b * 12 + i) as f64 * 0.22).sin() + rng.random::<f64>();
            doc.gas.nodes.push(gas_node(id.clone(), HydraulicKindDoc::Demand, height));
            doc.gas.pipes.push(gas_pipe(
                format!("gp-b{b}{i:02}"),
                previous.clone(),
                id.clone(),
                0.08,
                round(0.025 + 0.02 * rng.random::<f64>(), 4),
            ));
            branch_nodes.push(id.clone());
            previous = id;
        }
    }
    // house connections: 236 - 1 - 30 - 72 = 133
    for i in 0..133usize {
        let id = format!("gas-h{i:03}");
        let parent = branch_nodes[i % branch_nodes.len()].clone();
        doc.gas.nodes.push(gas_node(
            id.clone(),
            HydraulicKindDoc::Demand,
            rng.random::<f64>() * 2.0,
        ));
        doc.gas.pipes.push(gas_pipe(
            format!("gp-h{i:03}"),
            parent,
            id.clone(),
            0.05,
            round(0.008 + 0.01 * rng.random::<f64>(), 4),
        ));
    }
    // 123 loaded houses
    let mut houses: Vec<usize> = (0..133).collect();
    shuffle(&mut houses, &mut rng);
    let loaded_houses: std::collections::HashSet<usize> =
        houses.into_iter().take(123).collect();
    for node in doc.gas.nodes.iter_mut() {
        if let Some(rest) = node.id.strip_prefix("gas-h") {
            let index: usize = rest.parse().unwrap();
            if loaded_houses.contains(&index) {
                node.mdot_kg_per_s = round(2e-4 + 2e-4 * rng.random::<f64>(), 7);
                node.profile = Some("gas_standard".into());
            }
        }
    }

    // ---------------- heat: 132 nodes, 106 pipes, 25 loads ----------------
    // one main island (82 nodes, 81 pipes, 20 loads) plus 25 two-node
    // satellites (5 loaded)
    let heat_node = |id: String, kind, demand_kw: f64| HydraulicNodeDoc {
        id,
        kind,
        pn_bar: 3.0,
        mdot_kg_per_s: 0.0,
        height_m: 0.0,
        tfluid_c: Some(80.0),
        profile: (demand_kw > 0.0).then(|| "heat_standard".into()),
        heat_demand_kw: demand_kw,
        supply_temp_c: matches!(kind, HydraulicKindDoc::Supply).then_some(80.0),
    };
    let heat_pipe = |id: String, from: String, to: String, d: f64, km: f64, u: f64| PipeDoc {
        id,
        from,
        to,
        diameter_m: d,
        length_km: km,
        k_mm: 0.1,
        zeta: 0.0,
        mdot_kg_per_s: None,
        u_w_per_m2k: u,
        ambient_c: Some(10.0),
    };
    doc.heat
        .nodes
        .push(heat_node("heat0".into(), HydraulicKindDoc::Supply, 0.0));
    // trunk chain of 25
    for i in 1..=25usize {
        doc.heat.nodes.push(heat_node(
            format!("heat-t{i:02}"),
            HydraulicKindDoc::Demand,
            0.0,
        ));
        doc.heat.pipes.push(heat_pipe(
            format!("hp-t{i:02}"),
            if i == 1 {
                "heat0".into()
            } else {
                format!("heat-t{:02}", i - 1)
            },
            format!("heat-t{i:02}"),
            0.15,
            round(0.04 + 0.02 * rng.random::<f64>(), 4),
            0.6,
        ));
    }
    // six branches of 6 nodes
    let mut heat_branch_nodes = Vec::new();
    for b in 0..6usize {
        let mut previous = format!("heat-t{:02}", 4 + b * 4);
        for i in 0..6usize {
            let id = format!("heat-b{b}{i}");
            doc.heat
                .nodes
                .push(heat_node(id.clone(), HydraulicKindDoc::Demand, 0.0));
            doc.heat.pipes.push(heat_pipe(
                format!("hp-b{b}{i}"),
                previous.clone(),
                id.clone(),
                0.08,
                round(0.03 + 0.015 * rng.random::<f64>(), 4),
                0.8,
            ));
            heat_branch_nodes.push(id.clone());
            previous = id;
        }
    }
    // 20 loaded consumer stubs on the main island
    for i in 0..20usize {
        let id = format!("heat-c{i:02}");
        let parent = heat_branch_nodes[(i * 7) % heat_branch_nodes.len()].clone();
        let demand = round(45.0 + 25.0 * rng.random::<f64>(), 2);
        doc.heat.nodes.push(heat_node(id.clone(), HydraulicKindDoc::Demand, demand));
        doc.heat.pipes.push(heat_pipe(
            format!("hp-c{i:02}"),
            parent,
            id.clone(),
            0.05,
            round(0.01 + 0.008 * rng.random::<f64>(), 4),
            1.0,
        ));
    }
    // 25 satellites: supply + one consumer node each, 5 of them loaded
    for s in 0..25usize {
        let supply = format!("heat-s{s:02}a");
        let consumer = format!("heat-s{s:02}b");
        let demand = if s < 5 {
            round(30.0 + 30.0 * rng.random::<f64>(), 2)
        } else {
            0.0
        };
        doc.heat
            .nodes
            .push(heat_node(supply.clone(), HydraulicKindDoc::Supply, 0.0));
        doc.heat.nodes.push(heat_node(consumer.clone(), HydraulicKindDoc::Demand, demand));
        doc.heat.pipes.push(heat_pipe(
            format!("hp-s{s:02}"),
            supply,
            consumer,
            0.065,
            round(0.02 + 0.015 * rng.random::<f64>(), 4),
            0.8,
        ));
    }

    // ---------------- couplings: the three interface units ----------------
    doc.couplings = vec![
        CouplingDocument {
            id: "gas-turbine".into(),
            kind: CouplingKindDoc::GasToElectric,
            input_node: "gas-t10".into(),
            output_node: "lv1-000".into(),
            efficiency: Some(0.5),
            cop_table_c: None,
            cop_carnot: None,
            rating_kw: 60.0,
            profile: Some("device_g2e".into()),
        },
        CouplingDocument {
            id: "gas-boiler".into(),
            kind: CouplingKindDoc::GasBoiler,
            input_node: "gas-t15".into(),
            output_node: "heat-t12".into(),
            efficiency: Some(0.977),
            cop_table_c: None,
            cop_carnot: None,
            rating_kw: 73.0,
            profile: Some("device_g2h".into()),
        },
        CouplingDocument {
            id: "heat-pump".into(),
            kind: CouplingKindDoc::HeatPump,
            input_node: "lv2-000".into(),
            output_node: "heat-b30".into(),
            efficiency: None,
            cop_table_c: Some(vec![(-20.0, 2.0), (0.0, 3.0), (10.0, 3.4), (20.0, 4.0)]),
            cop_carnot: None,
            rating_kw: 76.7,
            profile: Some("device_e2h".into()),
        },
    ];

    doc
}

/// Fisher-Yates with the fixture's seeded generator.
fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// Synthetic winter-week profiles: household/commercial electric loads,
/// heating-season gas and heat demand, device setpoints and an ambient
/// temperature series. 15-minute steps starting 2021-01-18T00:00:00.
pub fn generate_profiles(seed: u64, steps: usize) -> ProfileSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let start = NaiveDateTime::parse_from_str("2021-01-18T00:00:00", "%Y-%m-%dT%H:%M:%S")
        .expect("fixed profile start");
    let timestamps: Vec<NaiveDateTime> = (0..steps)
        .map(|i| start + chrono::Duration::minutes(15 * i as i64))
        .collect();

    let mut household = Vec::with_capacity(steps);
    let mut commercial = Vec::with_capacity(steps);
    let mut gas_standard = Vec::with_capacity(steps);
    let mut heat_standard = Vec::with_capacity(steps);
    let mut device_g2e = Vec::with_capacity(steps);
    let mut device_g2h = Vec::with_capacity(steps);
    let mut device_e2h = Vec::with_capacity(steps);
    let mut ambient = Vec::with_capacity(steps);

    let tau = std::f64::consts::TAU;
    for step in 0..steps {
        let hour = (step % 96) as f64 / 4.0;
        let day = (step / 96) as f64;
        let weekend = matches!((step / 96) % 7, 5 | 6);
        let mut noise = || -> f64 { rng.random::<f64>() - 0.5 };

        // warmest mid-afternoon, coldest small hours; weekly dip on day 4
        let temp_c = -3.0 + 4.2 * (tau * (hour - 14.0) / 24.0).cos()
            - 1.8 * (tau * (day - 4.0) / 7.0).cos()
            + 0.6 * noise();
        ambient.push(round(temp_c + 273.15, 2));

        let morning = peak(hour, 7.5, 1.8);
        let evening = peak(hour, 18.5, 2.4);
        let workday = if weekend { 0.25 } else { smooth_window(hour, 8.0, 18.0) };

        let mut hh = 0.18 + 0.22 * morning + 0.42 * evening + 0.05 * noise();
        if weekend {
            hh += 0.12 * smooth_window(hour, 10.0, 16.0);
        }
        household.push(clamp01(hh));
        commercial.push(clamp01(0.12 + 0.68 * workday + 0.05 * noise()));

        let cold = ((8.0 - temp_c) / 18.0).clamp(0.0, 1.0);
        let heating = 0.18 + 0.55 * cold + 0.2 * morning + 0.04 * noise();
        heat_standard.push(clamp01(heating));
        gas_standard.push(clamp01(0.15 + 0.55 * cold + 0.18 * morning + 0.05 * noise()));

        device_g2e.push(clamp01(0.2 + 0.55 * evening + 0.05 * noise()));
        device_g2h.push(clamp01(0.75 * heating + 0.04 * noise()));
        device_e2h.push(clamp01(0.12 + 0.68 * heating + 0.04 * noise()));
    }

    let columns = vec![
        ("household".to_string(), household),
        ("commercial".to_string(), commercial),
        ("gas_standard".to_string(), gas_standard),
        ("heat_standard".to_string(), heat_standard),
        ("device_g2e".to_string(), device_g2e),
        ("device_g2h".to_string(), device_g2h),
        ("device_e2h".to_string(), device_e2h),
        ("t_ambient_k".to_string(), ambient),
    ];
    ProfileSet::new(timestamps, columns).expect("fixture profiles are well formed")
}

fn clamp01(v: f64) -> f64 {
    round(v.clamp(0.0, 1.0), 4)
}

/// Gaussian-ish bump centered at `center` hours with the given width.
fn peak(hour: f64, center: f64, width: f64) -> f64 {
    let d = (hour - center) / width;
    (-d * d).exp()
}

fn smooth_window(hour: f64, from: f64, to: f64) -> f64 {
    if hour >= from && hour <= to {
        1.0
    } else {
        let d = if hour < from { from - hour } else { hour - to };
        (-d * d / 2.0).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_scale_counts() {
        let doc = generate_fixture(1, FixtureScale::Small);
        assert_eq!(doc.electricity.nodes.len(), 5);
        assert_eq!(doc.gas.nodes.len(), 4);
        assert_eq!(doc.heat.nodes.len(), 4);
        assert_eq!(doc.couplings.len(), 3);
    }

    #[test]
    fn table1_counts_are_exact() {
        let doc = generate_fixture(42, FixtureScale::Table1);
        assert_eq!(doc.electricity.nodes.len(), 295);
        assert_eq!(doc.electricity.edges.len(), 291);
        assert_eq!(doc.electricity.transformers.len(), 3);
        assert_eq!(
            doc.electricity.nodes.iter().filter(|n| n.p_load_kw > 0.0).count(),
            187
        );
        assert_eq!(doc.gas.nodes.len(), 236);
        assert_eq!(doc.gas.pipes.len(), 235);
        assert_eq!(
            doc.gas.nodes.iter().filter(|n| n.mdot_kg_per_s > 0.0).count(),
            123
        );
        assert_eq!(doc.heat.nodes.len(), 132);
        assert_eq!(doc.heat.pipes.len(), 106);
        assert_eq!(
            doc.heat.nodes.iter().filter(|n| n.heat_demand_kw > 0.0).count(),
            25
        );
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = serde_json::to_string(&generate_fixture(7, FixtureScale::Table1)).unwrap();
        let b = serde_json::to_string(&generate_fixture(7, FixtureScale::Table1)).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&generate_fixture(8, FixtureScale::Table1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn profiles_are_deterministic_and_bounded() {
        let a = generate_profiles(3, 672);
        let b = generate_profiles(3, 672);
        assert_eq!(a, b);
        assert_eq!(a.len(), 672);
        for name in ["household", "commercial", "gas_standard", "heat_standard"] {
            let column = a.column(name).unwrap();
            assert!(column.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        let ambient = a.column("t_ambient_k").unwrap();
        assert!(ambient.iter().all(|&v| (250.0..290.0).contains(&v)));
    }
}
