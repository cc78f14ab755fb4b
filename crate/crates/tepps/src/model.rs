//! Domain types shared by every other module: network elements, scenarios,
//! economics, plans and result records.
//!
//! Conventions: power in MW on the study MVA base, reactances in per-unit,
//! angles in radians, money in M$, energy in MWh. All types are immutable
//! after construction and safe to share across threads.

use serde::{Deserialize, Serialize};

/// Identifier of a bus as given by the input data (not an array index).
pub type BusId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub is_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: u32,
    pub bus: BusId,
    /// Marginal production cost in $/MWh.
    pub marginal_cost: f64,
    pub p_min: f64,
    pub p_max: f64,
}

/// How a wind farm's per-scenario capacity factor is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CfSource {
    /// One capacity factor per scenario, given directly.
    PerScenario(Vec<f64>),
    /// Derived from a shared scenario profile: `multiplier` times the
    /// scenario's base capacity factor at `profile` index, clamped to [0, 1].
    Profile { profile: usize, multiplier: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindFarm {
    pub id: u32,
    pub bus: BusId,
    /// Installed capacity in MW.
    pub capacity: f64,
    pub cf_source: CfSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadPoint {
    pub id: u32,
    pub bus: BusId,
    /// Demand at peak (load level 1.0), MW.
    pub peak_demand: f64,
}

/// Whether a branch exists today or is a candidate for construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BranchKind {
    Existing,
    /// Candidate line; `invest_cost` is the total capital cost in M$.
    Prospective { invest_cost: f64 },
}

/// Option to install a phase shifter on an existing branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PstCandidate {
    /// Minimum shift angle, rad (negative).
    pub angle_min: f64,
    /// Maximum shift angle, rad (positive).
    pub angle_max: f64,
    /// Total capital cost in M$.
    pub invest_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: u32,
    pub from_bus: BusId,
    pub to_bus: BusId,
    /// Series reactance, per-unit on the study MVA base.
    pub reactance: f64,
    /// Thermal limit in MVA, constant across scenarios.
    pub rating: f64,
    pub kind: BranchKind,
    /// Only allowed on existing branches.
    pub pst_candidate: Option<PstCandidate>,
}

impl Branch {
    pub fn is_existing(&self) -> bool {
        matches!(self.kind, BranchKind::Existing)
    }

    pub fn is_prospective(&self) -> bool {
        !self.is_existing()
    }

    /// Susceptance 1/x in per-unit.
    pub fn susceptance(&self) -> f64 {
        1.0 / self.reactance
    }
}

/// One operating point: system load level, base capacity factors per wind
/// profile, and the number of hours it represents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub index: usize,
    /// Multiplier applied to every load's peak demand.
    pub load_level: f64,
    /// Base capacity factor per wind profile (farms map onto these via
    /// [`CfSource`]).
    pub wind_cf: Vec<f64>,
    /// Operating hours represented by this scenario.
    pub hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Economics {
    /// Yearly interest rate (e.g. 0.05).
    pub interest_rate: f64,
    /// Lifetime of a new line, years.
    pub line_lifetime: f64,
    /// Lifetime of a phase shifter, years.
    pub pst_lifetime: f64,
    /// Phase shifter cost per kVA of line rating, $/kVA.
    pub pst_unit_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub wind_farms: Vec<WindFarm>,
    pub loads: Vec<LoadPoint>,
    pub branches: Vec<Branch>,
}

impl NetworkCase {
    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn reference_bus(&self) -> Option<&Bus> {
        self.buses.iter().find(|b| b.is_reference)
    }

    /// Branches carrying a phase-shifter candidate, in input order.
    pub fn pst_candidates(&self) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(|b| b.pst_candidate.is_some())
    }

    /// Prospective branches, in input order.
    pub fn prospective_branches(&self) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(|b| b.is_prospective())
    }
}

/// The full planning problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningStudy {
    pub network: NetworkCase,
    pub scenarios: Vec<Scenario>,
    /// Budget for phase shifter investment, M$ (may be infinite).
    pub pst_budget: f64,
    /// Budget for line investment, M$ (may be infinite).
    pub line_budget: f64,
    pub economics: Economics,
    /// MVA base for per-unit conversion.
    pub mva_base: f64,
    /// Upper bound placed on dual multipliers that enter bilinear products
    /// in the single-level reformulation.
    pub dual_big_m: f64,
}

impl PlanningStudy {
    /// Effective capacity factor of `farm` in scenario `t`, clamped to [0, 1].
    pub fn wind_cf(&self, farm: &WindFarm, t: usize) -> f64 {
        let cf = match &farm.cf_source {
            CfSource::PerScenario(v) => v[t],
            CfSource::Profile {
                profile,
                multiplier,
            } => multiplier * self.scenarios[t].wind_cf[*profile],
        };
        cf.clamp(0.0, 1.0)
    }

    /// Available wind power of `farm` in scenario `t`, MW.
    pub fn wind_available(&self, farm: &WindFarm, t: usize) -> f64 {
        farm.capacity * self.wind_cf(farm, t)
    }

    /// Demand of load point `load` in scenario `t`, MW.
    pub fn scenario_demand(&self, load: &LoadPoint, t: usize) -> f64 {
        load.peak_demand * self.scenarios[t].load_level
    }

    /// Total demand in scenario `t`, MW.
    pub fn total_demand(&self, t: usize) -> f64 {
        self.network
            .loads
            .iter()
            .map(|l| self.scenario_demand(l, t))
            .sum()
    }
}

/// Investment decision: which phase shifters and which lines to build.
/// Entries align with the network's PST candidates and prospective branches
/// in input order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub pst_built: Vec<bool>,
    pub lines_built: Vec<bool>,
}

impl Plan {
    pub fn empty(n_pst: usize, n_lines: usize) -> Self {
        Self {
            pst_built: vec![false; n_pst],
            lines_built: vec![false; n_lines],
        }
    }

    pub fn none_built(&self) -> bool {
        !self.pst_built.iter().any(|&b| b) && !self.lines_built.iter().any(|&b| b)
    }
}

/// Market-clearing outcome for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDispatch {
    pub scenario: usize,
    /// Generator outputs, MW, aligned with network.generators.
    pub generation: Vec<f64>,
    /// Wind outputs, MW, aligned with network.wind_farms.
    pub wind: Vec<f64>,
    /// Branch flows, MW, aligned with network.branches.
    pub flows: Vec<f64>,
    /// Bus angles, rad, aligned with network.buses.
    pub angles: Vec<f64>,
    /// Shift variables of the linearized PST model, rad, aligned with the
    /// PST candidate list.
    pub pst_shift: Vec<f64>,
    /// Recovered PST angles (equal to the shift where the PST is built,
    /// zero otherwise), rad.
    pub pst_angle: Vec<f64>,
    /// Locational marginal prices, $/MWh, aligned with network.buses.
    pub lmp: Vec<f64>,
}

pub type DispatchResult = Vec<ScenarioDispatch>;

/// Everything reported for a solved plan (one Table-style results row plus
/// the per-scenario detail).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub plan: Plan,
    /// Annualized line investment, M$.
    pub line_investment: f64,
    /// Annualized phase shifter investment, M$.
    pub pst_investment: f64,
    /// Total consumer payment over the horizon, M$.
    pub consumer_payment: f64,
    /// line_investment + pst_investment + consumer_payment, M$.
    pub objective: f64,
    /// Curtailed wind energy per farm, MWh.
    pub curtailment: Vec<f64>,
    /// Share of demand energy covered by wind, percent.
    pub penetration: f64,
    pub dispatch: DispatchResult,
}

/// A broken invariant found by [`validate_study`]. Violations are data, not
/// failures: callers decide whether to abort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

fn check(violations: &mut Vec<Violation>, ok: bool, entity: impl Into<String>, rule: &str) {
    if !ok {
        violations.push(Violation {
            entity: entity.into(),
            rule: rule.to_string(),
        });
    }
}

/// Check every structural invariant of a study. Returns an empty list iff
/// the study is well formed.
pub fn validate_study(study: &PlanningStudy) -> Vec<Violation> {
    let mut v = Vec::new();
    let net = &study.network;

    let n_ref = net.buses.iter().filter(|b| b.is_reference).count();
    check(&mut v, n_ref != 0, "network", "missing reference bus");
    check(&mut v, n_ref <= 1, "network", "multiple reference buses");
    for (i, bus) in net.buses.iter().enumerate() {
        let dup = net.buses[..i].iter().any(|b| b.id == bus.id);
        check(&mut v, !dup, format!("bus {}", bus.id), "duplicate bus id");
    }

    let bus_exists = |id: BusId| net.buses.iter().any(|b| b.id == id);

    for g in &net.generators {
        let e = format!("generator {}", g.id);
        check(&mut v, bus_exists(g.bus), e.clone(), "references unknown bus");
        check(&mut v, g.p_min >= 0.0, e.clone(), "p_min negative");
        check(&mut v, g.p_min <= g.p_max, e, "p_min exceeds p_max");
    }

    for w in &net.wind_farms {
        let e = format!("wind farm {}", w.id);
        check(&mut v, bus_exists(w.bus), e.clone(), "references unknown bus");
        check(&mut v, w.capacity > 0.0, e.clone(), "capacity not positive");
        match &w.cf_source {
            CfSource::PerScenario(cfs) => {
                check(
                    &mut v,
                    cfs.len() == study.scenarios.len(),
                    e.clone(),
                    "capacity factor count differs from scenario count",
                );
                check(
                    &mut v,
                    cfs.iter().all(|&c| (0.0..=1.0).contains(&c)),
                    e,
                    "capacity factor outside [0, 1]",
                );
            }
            CfSource::Profile {
                profile,
                multiplier,
            } => {
                check(&mut v, *multiplier > 0.0, e.clone(), "multiplier not positive");
                let n_profiles = study.scenarios.first().map_or(0, |s| s.wind_cf.len());
                check(&mut v, *profile < n_profiles, e, "references unknown wind profile");
            }
        }
    }

    for l in &net.loads {
        let e = format!("load {}", l.id);
        check(&mut v, bus_exists(l.bus), e.clone(), "references unknown bus");
        check(&mut v, l.peak_demand >= 0.0, e, "peak demand negative");
    }

    for (i, b) in net.branches.iter().enumerate() {
        let e = format!("branch {}", b.id);
        let dup = net.branches[..i].iter().any(|o| o.id == b.id);
        check(&mut v, !dup, e.clone(), "duplicate branch id");
        check(&mut v, bus_exists(b.from_bus), e.clone(), "from bus unknown");
        check(&mut v, bus_exists(b.to_bus), e.clone(), "to bus unknown");
        check(&mut v, b.from_bus != b.to_bus, e.clone(), "self loop");
        check(&mut v, b.reactance > 0.0, e.clone(), "reactance not positive");
        check(&mut v, b.rating > 0.0, e.clone(), "rating not positive");
        if let BranchKind::Prospective { invest_cost } = b.kind {
            check(&mut v, invest_cost >= 0.0, e.clone(), "negative investment cost");
        }
        if let Some(pst) = &b.pst_candidate {
            check(&mut v, b.is_existing(), e.clone(), "PST on non-existing branch");
            check(
                &mut v,
                pst.angle_min < 0.0 && pst.angle_max > 0.0,
                e.clone(),
                "PST angle range must straddle zero",
            );
            check(&mut v, pst.invest_cost >= 0.0, e, "negative PST cost");
        }
    }

    let n_profiles = study.scenarios.first().map_or(0, |s| s.wind_cf.len());
    for s in &study.scenarios {
        let e = format!("scenario {}", s.index);
        check(&mut v, s.hours > 0.0, e.clone(), "hours not positive");
        check(&mut v, s.load_level >= 0.0, e.clone(), "negative load level");
        check(
            &mut v,
            s.wind_cf.iter().all(|&c| (0.0..=1.0).contains(&c)),
            e.clone(),
            "capacity factor outside [0, 1]",
        );
        check(
            &mut v,
            s.wind_cf.len() == n_profiles,
            e,
            "wind profile count differs between scenarios",
        );
    }

    check(&mut v, study.pst_budget >= 0.0, "study", "PST budget negative");
    check(&mut v, study.line_budget >= 0.0, "study", "line budget negative");
    check(&mut v, study.mva_base > 0.0, "study", "MVA base not positive");
    check(&mut v, study.dual_big_m > 0.0, "study", "dual bound not positive");
    let ec = &study.economics;
    check(&mut v, ec.interest_rate >= 0.0, "economics", "negative interest rate");
    check(&mut v, ec.line_lifetime >= 1.0, "economics", "line lifetime below one year");
    check(&mut v, ec.pst_lifetime >= 1.0, "economics", "PST lifetime below one year");
    check(&mut v, ec.pst_unit_cost >= 0.0, "economics", "negative PST unit cost");

    v
}
