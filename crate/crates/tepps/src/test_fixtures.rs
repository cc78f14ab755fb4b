//! Small hand-built studies shared by unit tests.

use crate::model::*;

/// Three buses in a line (1 -ref- 2 - 3), cheap generation at bus 1, dear
/// generation at bus 3, a congested 2-3 link, one candidate line 1-3 that
/// closes a loop, and a phase-shifter candidate on 1-2. One scenario with a
/// small wind farm at bus 2.
pub fn three_bus_study() -> PlanningStudy {
    PlanningStudy {
        network: NetworkCase {
            buses: vec![
                Bus { id: 1, is_reference: true },
                Bus { id: 2, is_reference: false },
                Bus { id: 3, is_reference: false },
            ],
            generators: vec![
                Generator { id: 1, bus: 1, marginal_cost: 10.0, p_min: 0.0, p_max: 100.0 },
                Generator { id: 2, bus: 3, marginal_cost: 30.0, p_min: 0.0, p_max: 100.0 },
            ],
            wind_farms: vec![WindFarm {
                id: 1,
                bus: 2,
                capacity: 20.0,
                cf_source: CfSource::Profile { profile: 0, multiplier: 0.9 },
            }],
            loads: vec![LoadPoint { id: 1, bus: 3, peak_demand: 80.0 }],
            branches: vec![
                Branch {
                    id: 1,
                    from_bus: 1,
                    to_bus: 2,
                    reactance: 0.10,
                    rating: 100.0,
                    kind: BranchKind::Existing,
                    pst_candidate: Some(PstCandidate {
                        angle_min: -0.1,
                        angle_max: 0.1,
                        invest_cost: 2.0,
                    }),
                },
                Branch {
                    id: 2,
                    from_bus: 2,
                    to_bus: 3,
                    reactance: 0.15,
                    rating: 30.0,
                    kind: BranchKind::Existing,
                    pst_candidate: None,
                },
                Branch {
                    id: 3,
                    from_bus: 1,
                    to_bus: 3,
                    reactance: 0.20,
                    rating: 60.0,
                    kind: BranchKind::Prospective { invest_cost: 50.0 },
                    pst_candidate: None,
                },
            ],
        },
        scenarios: vec![Scenario {
            index: 0,
            load_level: 1.0,
            wind_cf: vec![0.5],
            hours: 8760.0,
        }],
        pst_budget: 10.0,
        line_budget: 100.0,
        economics: Economics {
            interest_rate: 0.05,
            line_lifetime: 20.0,
            pst_lifetime: 15.0,
            pst_unit_cost: 100.0,
        },
        mva_base: 100.0,
        dual_big_m: 1e5,
    }
}
