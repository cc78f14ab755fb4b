//! Shared fixtures for the integration and acceptance suites: five
//! hand-built planning studies of increasing richness and a deterministic
//! generator of randomized small studies.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tepps::model::*;

pub fn economics() -> Economics {
    Economics {
        interest_rate: 0.05,
        line_lifetime: 20.0,
        pst_lifetime: 15.0,
        pst_unit_cost: 100.0,
    }
}

fn study(
    network: NetworkCase,
    scenarios: Vec<Scenario>,
    pst_budget: f64,
    line_budget: f64,
) -> PlanningStudy {
    let study = PlanningStudy {
        network,
        scenarios,
        pst_budget,
        line_budget,
        economics: economics(),
        mva_base: 100.0,
        dual_big_m: 1e5,
    };
    assert_eq!(validate_study(&study), Vec::new(), "fixture must validate");
    study
}

fn bus(id: u32, is_reference: bool) -> Bus {
    Bus { id, is_reference }
}

fn gen(id: u32, bus: u32, cost: f64, p_max: f64) -> Generator {
    Generator {
        id,
        bus,
        marginal_cost: cost,
        p_min: 0.0,
        p_max,
    }
}

fn load(id: u32, bus: u32, peak: f64) -> LoadPoint {
    LoadPoint {
        id,
        bus,
        peak_demand: peak,
    }
}

fn line(id: u32, from: u32, to: u32, x: f64, rating: f64) -> Branch {
    Branch {
        id,
        from_bus: from,
        to_bus: to,
        reactance: x,
        rating,
        kind: BranchKind::Existing,
        pst_candidate: None,
    }
}

fn candidate(id: u32, from: u32, to: u32, x: f64, rating: f64, cost: f64) -> Branch {
    Branch {
        id,
        from_bus: from,
        to_bus: to,
        reactance: x,
        rating,
        kind: BranchKind::Prospective { invest_cost: cost },
        pst_candidate: None,
    }
}

fn with_pst(mut branch: Branch, range: f64, cost: f64) -> Branch {
    branch.pst_candidate = Some(PstCandidate {
        angle_min: -range,
        angle_max: range,
        invest_cost: cost,
    });
    branch
}

/// Congested radial link plus a candidate second circuit; one scenario,
/// one phase-shifter candidate that only matters once the loop closes.
pub fn fixture_radial_reinforcement() -> PlanningStudy {
    study(
        NetworkCase {
            buses: vec![bus(1, true), bus(2, false), bus(3, false)],
            generators: vec![gen(1, 1, 10.0, 100.0), gen(2, 3, 30.0, 100.0)],
            wind_farms: vec![WindFarm {
                id: 1,
                bus: 2,
                capacity: 20.0,
                cf_source: CfSource::Profile {
                    profile: 0,
                    multiplier: 0.9,
                },
            }],
            loads: vec![load(1, 3, 80.0)],
            branches: vec![
                with_pst(line(1, 1, 2, 0.10, 100.0), 0.1, 2.0),
                line(2, 2, 3, 0.15, 30.0),
                candidate(3, 1, 3, 0.20, 60.0, 50.0),
            ],
        },
        vec![Scenario {
            index: 0,
            load_level: 1.0,
            wind_cf: vec![0.5],
            hours: 8760.0,
        }],
        10.0,
        100.0,
    )
}

/// Two buses, two scenarios, a single candidate second circuit across the
/// only corridor.
pub fn fixture_two_bus() -> PlanningStudy {
    study(
        NetworkCase {
            buses: vec![bus(1, true), bus(2, false)],
            generators: vec![gen(1, 1, 8.0, 200.0), gen(2, 2, 40.0, 100.0)],
            wind_farms: vec![],
            loads: vec![load(1, 2, 100.0)],
            branches: vec![
                line(1, 1, 2, 0.10, 60.0),
                candidate(2, 1, 2, 0.10, 60.0, 30.0),
            ],
        },
        vec![
            Scenario {
                index: 0,
                load_level: 1.0,
                wind_cf: vec![],
                hours: 1000.0,
            },
            Scenario {
                index: 1,
                load_level: 0.5,
                wind_cf: vec![],
                hours: 7760.0,
            },
        ],
        0.0,
        100.0,
    )
}

/// Triangle with a weak, rating-limited direct path: a phase shifter on
/// the direct line redirects loop flow and unlocks cheap delivery.
pub fn fixture_loop_pst() -> PlanningStudy {
    study(
        NetworkCase {
            buses: vec![bus(1, true), bus(2, false), bus(3, false)],
            generators: vec![gen(1, 1, 10.0, 300.0), gen(2, 3, 30.0, 200.0)],
            wind_farms: vec![],
            loads: vec![load(1, 3, 100.0)],
            branches: vec![
                line(1, 1, 2, 0.10, 40.0),
                line(2, 2, 3, 0.10, 40.0),
                with_pst(line(3, 1, 3, 0.30, 50.0), 0.3, 5.0),
            ],
        },
        vec![
            Scenario {
                index: 0,
                load_level: 1.0,
                wind_cf: vec![],
                hours: 3000.0,
            },
            Scenario {
                index: 1,
                load_level: 0.7,
                wind_cf: vec![],
                hours: 5760.0,
            },
        ],
        10.0,
        0.0,
    )
}

/// Four buses with wind, one phase-shifter candidate and two candidate
/// lines (three binaries).
pub fn fixture_four_bus_wind() -> PlanningStudy {
    study(
        NetworkCase {
            buses: vec![bus(1, true), bus(2, false), bus(3, false), bus(4, false)],
            generators: vec![
                gen(1, 1, 7.0, 250.0),
                gen(2, 3, 32.0, 150.0),
                gen(3, 4, 24.0, 120.0),
            ],
            wind_farms: vec![WindFarm {
                id: 1,
                bus: 2,
                capacity: 120.0,
                cf_source: CfSource::Profile {
                    profile: 0,
                    multiplier: 1.0,
                },
            }],
            loads: vec![load(1, 3, 140.0), load(2, 4, 70.0)],
            branches: vec![
                with_pst(line(1, 1, 2, 0.08, 90.0), 0.2, 8.0),
                line(2, 2, 3, 0.12, 60.0),
                line(3, 1, 4, 0.10, 50.0),
                line(4, 3, 4, 0.15, 40.0),
                candidate(5, 1, 3, 0.20, 80.0, 45.0),
                candidate(6, 2, 4, 0.18, 50.0, 28.0),
            ],
        },
        vec![
            Scenario {
                index: 0,
                load_level: 1.0,
                wind_cf: vec![0.3],
                hours: 2000.0,
            },
            Scenario {
                index: 1,
                load_level: 0.65,
                wind_cf: vec![0.85],
                hours: 6760.0,
            },
        ],
        8.0,
        75.0,
    )
}

/// Five buses on a ring, two phase-shifter candidates and two candidate
/// lines under tight budgets (four binaries, three scenarios).
pub fn fixture_five_bus_ring() -> PlanningStudy {
    study(
        NetworkCase {
            buses: vec![
                bus(1, true),
                bus(2, false),
                bus(3, false),
                bus(4, false),
                bus(5, false),
            ],
            generators: vec![
                gen(1, 1, 6.0, 400.0),
                gen(2, 3, 35.0, 200.0),
                gen(3, 5, 28.0, 150.0),
            ],
            wind_farms: vec![
                WindFarm {
                    id: 1,
                    bus: 2,
                    capacity: 80.0,
                    cf_source: CfSource::Profile {
                        profile: 0,
                        multiplier: 1.0,
                    },
                },
                WindFarm {
                    id: 2,
                    bus: 4,
                    capacity: 50.0,
                    cf_source: CfSource::Profile {
                        profile: 0,
                        multiplier: 0.8,
                    },
                },
            ],
            loads: vec![load(1, 3, 150.0), load(2, 5, 100.0)],
            branches: vec![
                with_pst(line(1, 1, 2, 0.10, 80.0), 0.25, 4.0),
                line(2, 2, 3, 0.12, 70.0),
                line(3, 3, 4, 0.10, 70.0),
                with_pst(line(4, 4, 5, 0.15, 60.0), 0.25, 3.0),
                line(5, 5, 1, 0.10, 80.0),
                candidate(6, 1, 3, 0.20, 80.0, 40.0),
                candidate(7, 2, 5, 0.18, 60.0, 25.0),
            ],
        },
        vec![
            Scenario {
                index: 0,
                load_level: 1.0,
                wind_cf: vec![0.25],
                hours: 1200.0,
            },
            Scenario {
                index: 1,
                load_level: 0.75,
                wind_cf: vec![0.7],
                hours: 4000.0,
            },
            Scenario {
                index: 2,
                load_level: 0.55,
                wind_cf: vec![0.45],
                hours: 3560.0,
            },
        ],
        4.5,
        45.0,
    )
}

pub fn equivalence_fixtures() -> Vec<(&'static str, PlanningStudy)> {
    vec![
        ("radial_reinforcement", fixture_radial_reinforcement()),
        ("two_bus", fixture_two_bus()),
        ("loop_pst", fixture_loop_pst()),
        ("four_bus_wind", fixture_four_bus_wind()),
        ("five_bus_ring", fixture_five_bus_ring()),
    ]
}

/// Deterministic randomized small study: 2-4 buses, 1-3 scenarios, at most
/// 4 binaries. Every bus can be served (a slack generator at the reference
/// covers total demand), so the no-build plan stays feasible.
pub fn random_study(seed: u64) -> PlanningStudy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_bus = rng.gen_range(2..=4u32);
    let buses: Vec<Bus> = (1..=n_bus).map(|i| bus(i, i == 1)).collect();

    let mut loads = Vec::new();
    let mut total_load = 0.0;
    for i in 2..=n_bus {
        if rng.gen_bool(0.8) {
            let peak = rng.gen_range(20.0..90.0f64).round();
            total_load += peak;
            loads.push(load(loads.len() as u32 + 1, i, peak));
        }
    }
    if loads.is_empty() {
        total_load = 50.0;
        loads.push(load(1, n_bus, 50.0));
    }

    let mut generators = vec![gen(1, 1, rng.gen_range(5.0..12.0), total_load * 1.6)];
    for i in 2..=n_bus {
        if rng.gen_bool(0.7) {
            generators.push(gen(
                generators.len() as u32 + 1,
                i,
                rng.gen_range(15.0..55.0),
                rng.gen_range(30.0..120.0),
            ));
        }
    }

    let mut wind_farms = Vec::new();
    if rng.gen_bool(0.5) {
        wind_farms.push(WindFarm {
            id: 1,
            bus: rng.gen_range(1..=n_bus),
            capacity: rng.gen_range(20.0..70.0),
            cf_source: CfSource::Profile {
                profile: 0,
                multiplier: rng.gen_range(0.7..1.0),
            },
        });
    }

    // Spanning tree plus an optional chord; ratings sized so the slack
    // generator alone can always serve every bus (radially well below the
    // tree capacity), keeping every binary assignment feasible.
    let mut branches = Vec::new();
    for i in 2..=n_bus {
        let parent = rng.gen_range(1..i);
        branches.push(line(
            branches.len() as u32 + 1,
            parent,
            i,
            rng.gen_range(0.05..0.3),
            total_load * rng.gen_range(0.9..1.8),
        ));
    }
    if n_bus >= 3 && rng.gen_bool(0.6) {
        let a = rng.gen_range(1..=n_bus - 2);
        let b = rng.gen_range(a + 2..=n_bus);
        if !branches
            .iter()
            .any(|l| (l.from_bus, l.to_bus) == (a, b))
        {
            branches.push(line(
                branches.len() as u32 + 1,
                a,
                b,
                rng.gen_range(0.05..0.3),
                rng.gen_range(0.3..1.0) * total_load,
            ));
        }
    }
    // Congest one tree branch to make reinforcement interesting.
    if let Some(first) = branches.first_mut() {
        first.rating = (total_load * rng.gen_range(0.35..0.7)).max(10.0);
    }

    // Candidates: at most 4 binaries in total.
    let n_pst = rng.gen_range(0..=2usize).min(branches.len());
    for p in 0..n_pst {
        let range = rng.gen_range(0.08..0.3);
        let cost = rng.gen_range(1.0..8.0);
        let target = &mut branches[p];
        target.pst_candidate = Some(PstCandidate {
            angle_min: -range,
            angle_max: range,
            invest_cost: cost,
        });
    }
    let n_lines = rng.gen_range(0..=(4 - n_pst).min(2));
    for _ in 0..n_lines {
        let from = rng.gen_range(1..n_bus);
        let to = rng.gen_range(from + 1..=n_bus);
        branches.push(candidate(
            branches.len() as u32 + 1,
            from,
            to,
            rng.gen_range(0.05..0.3),
            rng.gen_range(0.4..1.2) * total_load,
            rng.gen_range(5.0..70.0),
        ));
    }

    let n_scen = rng.gen_range(1..=3usize);
    let mut hours_left = 8760.0;
    let scenarios: Vec<Scenario> = (0..n_scen)
        .map(|t| {
            let hours = if t + 1 == n_scen {
                hours_left
            } else {
                let h = (hours_left * rng.gen_range(0.2..0.5f64)).round();
                hours_left -= h;
                h
            };
            Scenario {
                index: t,
                load_level: rng.gen_range(0.5..1.0),
                wind_cf: vec![rng.gen_range(0.0..1.0)],
                hours,
            }
        })
        .collect();

    let pst_total: f64 = branches
        .iter()
        .filter_map(|b| b.pst_candidate.as_ref().map(|p| p.invest_cost))
        .sum();
    let line_total: f64 = branches
        .iter()
        .filter_map(|b| match b.kind {
            BranchKind::Prospective { invest_cost } => Some(invest_cost),
            BranchKind::Existing => None,
        })
        .sum();
    let pst_budget = match rng.gen_range(0..3) {
        0 => 0.0,
        1 => pst_total * rng.gen_range(0.4..0.9),
        _ => f64::INFINITY,
    };
    let line_budget = match rng.gen_range(0..3) {
        0 => 0.0,
        1 => line_total * rng.gen_range(0.4..0.9),
        _ => f64::INFINITY,
    };

    let out = PlanningStudy {
        network: NetworkCase {
            buses,
            generators,
            wind_farms,
            loads,
            branches,
        },
        scenarios,
        pst_budget,
        line_budget,
        economics: economics(),
        mva_base: 100.0,
        dual_big_m: 1e5,
    };
    assert_eq!(validate_study(&out), Vec::new(), "generated study (seed {seed})");
    out
}
