//! Bundled reference case: the IEEE one-area Reliability Test System in
//! MATPOWER layout, plus the stressed planning setup built on it (scaled
//! loads and generation, derated lines, ten load-wind scenarios, seven
//! candidate corridors and ten phase-shifter candidates).

use crate::ingest::{apply_modifiers, assemble_study, parse_matpower, ProspectiveLineSpec, PstSpec};
use crate::model::{CfSource, Economics, PlanningStudy, WindFarm};
use crate::scenarios::scenarios_from_table;

/// MATPOWER-style text of the 24-bus reliability test system.
pub const RTS24_MATPOWER: &str = include_str!("cases/rts24.m");

/// Ten representative (load level, wind capacity factor, hours) operating
/// points for an annual study; hours sum to 8760.
pub const RTS24_SCENARIOS: [(f64, f64, f64); 10] = [
    (0.8307, 0.4287, 355.0),
    (0.5456, 0.7280, 742.0),
    (0.5220, 0.0946, 1323.0),
    (0.6999, 0.7739, 553.0),
    (0.7301, 0.1523, 927.0),
    (0.5224, 0.5454, 780.0),
    (0.6496, 0.3616, 1057.0),
    (0.4999, 0.3577, 900.0),
    (0.5556, 0.2185, 1328.0),
    (0.6713, 0.5659, 795.0),
];

/// Candidate corridors: (from, to, reactance p.u., rating MVA, cost M$).
pub const RTS24_PROSPECTIVE: [(u32, u32, f64, f64, f64); 7] = [
    (1, 2, 0.0139, 105.0, 3.9094),
    (2, 6, 0.1920, 105.0, 54.0000),
    (6, 10, 0.0605, 105.0, 17.0156),
    (7, 8, 0.0614, 105.0, 17.2688),
    (8, 9, 0.1651, 105.0, 46.4344),
    (8, 10, 0.1651, 105.0, 46.4344),
    (9, 12, 0.0839, 240.0, 132.4737),
];

/// Existing corridors carrying a phase-shifter candidate.
pub const RTS24_PST_LINES: [(u32, u32); 10] = [
    (1, 2),
    (1, 5),
    (2, 4),
    (2, 6),
    (3, 9),
    (4, 9),
    (5, 10),
    (6, 10),
    (8, 9),
    (8, 10),
];

/// Shift range of every candidate phase shifter: +/- 5 degrees.
pub const RTS24_PST_RANGE_RAD: f64 = 5.0 * std::f64::consts::PI / 180.0;

/// Published optimal line sets for the reference budget cases.
pub const CASE2_LINES: &[(u32, u32)] = &[(6, 10), (7, 8), (8, 9), (8, 10), (9, 12)];
pub const CASE3_LINES: &[(u32, u32)] = &[(6, 10), (8, 9), (8, 10), (9, 12)];
pub const CASE4_LINES: &[(u32, u32)] = &[(1, 2), (2, 6), (8, 9), (8, 10)];

/// Capital cost of a candidate corridor, M$.
pub fn rts24_line_cost(line: (u32, u32)) -> f64 {
    RTS24_PROSPECTIVE
        .iter()
        .find(|&&(f, t, ..)| (f, t) == line)
        .map(|&(.., c)| c)
        .unwrap_or_else(|| panic!("{}-{} is not a candidate corridor", line.0, line.1))
}

pub fn rts24_economics() -> Economics {
    Economics {
        interest_rate: 0.05,
        line_lifetime: 20.0,
        pst_lifetime: 15.0,
        pst_unit_cost: 100.0,
    }
}

/// The stressed 24-bus planning study: peak loads and generator limits at
/// 1.5x the base case, line ratings at 60%, two 1200 MW wind farms at buses
/// 10 and 14 (the bus-10 farm runs at 90% of the shared capacity-factor
/// profile), ten scenarios, and the candidate lists above.
pub fn rts24_study(pst_budget: f64, line_budget: f64) -> PlanningStudy {
    let base = parse_matpower(RTS24_MATPOWER).expect("bundled case parses");
    let case = apply_modifiers(&base, 1.5, 1.5, 0.6);

    let scenarios = scenarios_from_table(&RTS24_SCENARIOS);

    let prospective: Vec<ProspectiveLineSpec> = RTS24_PROSPECTIVE
        .iter()
        .map(|&(from, to, reactance, rating, invest_cost)| ProspectiveLineSpec {
            from,
            to,
            reactance,
            rating,
            invest_cost,
        })
        .collect();

    let psts: Vec<PstSpec> = RTS24_PST_LINES
        .iter()
        .map(|&(from, to)| {
            let id = case
                .branches
                .iter()
                .position(|b| b.from == from && b.to == to)
                .map(|i| i as u32 + 1)
                .unwrap_or_else(|| panic!("no existing branch {from}-{to}"));
            PstSpec {
                branch: id,
                angle_min: -RTS24_PST_RANGE_RAD,
                angle_max: RTS24_PST_RANGE_RAD,
                invest_cost: None,
            }
        })
        .collect();

    let wind_farms = vec![
        WindFarm {
            id: 1,
            bus: 10,
            capacity: 1200.0,
            cf_source: CfSource::Profile {
                profile: 0,
                multiplier: 0.9,
            },
        },
        WindFarm {
            id: 2,
            bus: 14,
            capacity: 1200.0,
            cf_source: CfSource::Profile {
                profile: 0,
                multiplier: 1.0,
            },
        },
    ];

    assemble_study(
        &case,
        scenarios,
        &prospective,
        &psts,
        wind_farms,
        pst_budget,
        line_budget,
        rts24_economics(),
        1e5,
    )
    .expect("bundled study validates")
}
