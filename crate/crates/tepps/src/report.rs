//! Result serialization: a results-table row, per-scenario price and
//! dispatch tables, CSV/JSON writers and the price-comparison table used
//! for plotting.

use crate::model::{BusId, PlanReport, PlanningStudy};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Deterministic solver statistics attached to a report. Wall time is
/// carried for display but never serialized, so written reports stay
/// byte-identical across runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub lp_iterations: usize,
    pub gap: f64,
    #[serde(skip)]
    pub wall_seconds: Option<f64>,
}

/// One results row in the shape of the case-study tables: investments,
/// payment, objective, curtailment, penetration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// Built corridors as "from-to" labels.
    pub lines_built: Vec<String>,
    /// Phase shifter locations as "from-to" labels.
    pub pst_locations: Vec<String>,
    pub line_investment: f64,
    pub pst_investment: f64,
    pub consumer_payment: f64,
    pub objective: f64,
    /// Curtailed energy per wind farm, MWh.
    pub curtailment_mwh: Vec<f64>,
    /// The same in 1e6 MWh, the display unit of the case-study tables.
    pub curtailment_twh_scale: Vec<f64>,
    pub penetration_percent: f64,
    pub stats: SolveStats,
}

/// Rectangular table keyed by row labels and scenario columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTable {
    pub rows: Vec<String>,
    pub scenarios: Vec<usize>,
    /// values[row][scenario column]
    pub values: Vec<Vec<f64>>,
}

impl ScenarioTable {
    fn rectangular(&self) -> bool {
        self.values.len() == self.rows.len()
            && self.values.iter().all(|r| r.len() == self.scenarios.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub summary: SummaryRow,
    /// Locational prices, $/MWh: one row per bus.
    pub lmp: ScenarioTable,
    /// Generator output, MW: one row per generator.
    pub generation: ScenarioTable,
    /// Wind output, MW: one row per farm.
    pub wind: ScenarioTable,
    /// Branch flow, MW: one row per branch (built or not).
    pub flows: ScenarioTable,
    /// Phase shifter angles, rad: one row per candidate.
    pub pst_angles: ScenarioTable,
}

/// Assemble the report bundle for a solved plan.
pub fn build_report(
    study: &PlanningStudy,
    report: &PlanReport,
    stats: SolveStats,
) -> Result<ReportBundle> {
    let net = &study.network;
    let scenarios: Vec<usize> = report.dispatch.iter().map(|d| d.scenario).collect();

    let lines_built: Vec<String> = net
        .prospective_branches()
        .zip(&report.plan.lines_built)
        .filter(|(_, &b)| b)
        .map(|(br, _)| format!("{}-{}", br.from_bus, br.to_bus))
        .collect();
    let pst_locations: Vec<String> = net
        .pst_candidates()
        .zip(&report.plan.pst_built)
        .filter(|(_, &b)| b)
        .map(|(br, _)| format!("{}-{}", br.from_bus, br.to_bus))
        .collect();

    let table = |rows: Vec<String>, get: &dyn Fn(usize, usize) -> f64| -> ScenarioTable {
        let values = (0..rows.len())
            .map(|r| (0..scenarios.len()).map(|t| get(r, t)).collect())
            .collect();
        ScenarioTable {
            rows,
            scenarios: scenarios.clone(),
            values,
        }
    };

    let bundle = ReportBundle {
        schema_version: REPORT_SCHEMA_VERSION,
        summary: SummaryRow {
            lines_built,
            pst_locations,
            line_investment: report.line_investment,
            pst_investment: report.pst_investment,
            consumer_payment: report.consumer_payment,
            objective: report.objective,
            curtailment_mwh: report.curtailment.clone(),
            curtailment_twh_scale: report.curtailment.iter().map(|c| c / 1e6).collect(),
            penetration_percent: report.penetration,
            stats,
        },
        lmp: table(
            net.buses.iter().map(|b| format!("bus{}", b.id)).collect(),
            &|r, t| report.dispatch[t].lmp[r],
        ),
        generation: table(
            net.generators.iter().map(|g| format!("gen{}", g.id)).collect(),
            &|r, t| report.dispatch[t].generation[r],
        ),
        wind: table(
            net.wind_farms.iter().map(|w| format!("wind{}", w.id)).collect(),
            &|r, t| report.dispatch[t].wind[r],
        ),
        flows: table(
            net.branches
                .iter()
                .map(|b| format!("branch{}_{}-{}", b.id, b.from_bus, b.to_bus))
                .collect(),
            &|r, t| report.dispatch[t].flows[r],
        ),
        pst_angles: table(
            net.pst_candidates()
                .map(|b| format!("pst_{}-{}", b.from_bus, b.to_bus))
                .collect(),
            &|r, t| report.dispatch[t].pst_angle[r],
        ),
    };

    for (name, t) in [
        ("lmp", &bundle.lmp),
        ("generation", &bundle.generation),
        ("wind", &bundle.wind),
        ("flows", &bundle.flows),
        ("pst_angles", &bundle.pst_angles),
    ] {
        if !t.rectangular() {
            return Err(Error::Report(format!("{name} table is not rectangular")));
        }
        if t.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Report(format!("{name} table has non-finite values")));
        }
    }
    for v in [
        bundle.summary.line_investment,
        bundle.summary.pst_investment,
        bundle.summary.consumer_payment,
        bundle.summary.objective,
        bundle.summary.penetration_percent,
    ] {
        if !v.is_finite() {
            return Err(Error::Report("summary has non-finite values".into()));
        }
    }
    Ok(bundle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

fn csv_number(v: f64) -> String {
    format!("{v}")
}

fn write_scenario_table<W: Write>(out: &mut W, name: &str, t: &ScenarioTable) -> Result<()> {
    writeln!(out, "# {name}")?;
    let header: Vec<String> = std::iter::once("row".to_string())
        .chain(t.scenarios.iter().map(|s| format!("s{s}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (label, row) in t.rows.iter().zip(&t.values) {
        let cells: Vec<String> = std::iter::once(label.clone())
            .chain(row.iter().map(|&v| csv_number(v)))
            .collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Serialize a bundle. JSON mirrors the structure; CSV writes one section
/// per table with a `#`-prefixed section header. Output is deterministic
/// for identical bundles.
pub fn write_report<W: Write>(bundle: &ReportBundle, format: ReportFormat, out: &mut W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let text =
                serde_json::to_string_pretty(bundle).map_err(|e| Error::Report(e.to_string()))?;
            out.write_all(text.as_bytes())?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            let s = &bundle.summary;
            writeln!(out, "# summary")?;
            writeln!(
                out,
                "lines_built,pst_locations,line_investment,pst_investment,consumer_payment,objective,penetration_percent,nodes,lp_iterations,gap"
            )?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                s.lines_built.join(";"),
                s.pst_locations.join(";"),
                csv_number(s.line_investment),
                csv_number(s.pst_investment),
                csv_number(s.consumer_payment),
                csv_number(s.objective),
                csv_number(s.penetration_percent),
                s.stats.nodes,
                s.stats.lp_iterations,
                csv_number(s.stats.gap),
            )?;
            writeln!(out, "# curtailment")?;
            writeln!(out, "farm,mwh,twh_scale")?;
            for (i, (mwh, scaled)) in s
                .curtailment_mwh
                .iter()
                .zip(&s.curtailment_twh_scale)
                .enumerate()
            {
                writeln!(out, "{},{},{}", i, csv_number(*mwh), csv_number(*scaled))?;
            }
            write_scenario_table(out, "lmp", &bundle.lmp)?;
            write_scenario_table(out, "generation", &bundle.generation)?;
            write_scenario_table(out, "wind", &bundle.wind)?;
            write_scenario_table(out, "flows", &bundle.flows)?;
            write_scenario_table(out, "pst_angles", &bundle.pst_angles)?;
        }
    }
    Ok(())
}

pub fn read_report<R: std::io::Read>(mut input: R) -> Result<ReportBundle> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    serde_json::from_str(&text).map_err(|e| Error::Report(e.to_string()))
}

/// Price comparison row: one bus in one scenario under two plans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmpComparisonRow {
    pub bus: String,
    pub scenario: usize,
    pub lmp_a: f64,
    pub lmp_b: f64,
    pub delta: f64,
}

/// Pair up locational prices from two bundles for the selected scenarios
/// (plot-ready long format).
pub fn lmp_comparison(
    a: &ReportBundle,
    b: &ReportBundle,
    scenarios: &[usize],
) -> Result<Vec<LmpComparisonRow>> {
    if a.lmp.rows != b.lmp.rows {
        return Err(Error::Report("bundles cover different bus sets".into()));
    }
    let mut out = Vec::new();
    for &s in scenarios {
        let col_a = a
            .lmp
            .scenarios
            .iter()
            .position(|&t| t == s)
            .ok_or_else(|| Error::Report(format!("scenario {s} not in first bundle")))?;
        let col_b = b
            .lmp
            .scenarios
            .iter()
            .position(|&t| t == s)
            .ok_or_else(|| Error::Report(format!("scenario {s} not in second bundle")))?;
        for (r, bus) in a.lmp.rows.iter().enumerate() {
            let lmp_a = a.lmp.values[r][col_a];
            let lmp_b = b.lmp.values[r][col_b];
            out.push(LmpComparisonRow {
                bus: bus.clone(),
                scenario: s,
                lmp_a,
                lmp_b,
                delta: lmp_b - lmp_a,
            });
        }
    }
    Ok(out)
}

/// Budget-sweep result row: optimal objective and payment at one budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub pst_budget: f64,
    pub objective: f64,
    pub consumer_payment: f64,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: &mut W) -> Result<()> {
    writeln!(out, "pst_budget,objective,consumer_payment")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{}",
            csv_number(r.pst_budget),
            csv_number(r.objective),
            csv_number(r.consumer_payment)
        )?;
    }
    Ok(())
}

// Keep BusId referenced for the doc contract of lmp labels.
#[allow(dead_code)]
fn bus_label(id: BusId) -> String {
    format!("bus{id}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Plan;
    use crate::solver::evaluate_plan;
    use crate::test_fixtures::three_bus_study;

    fn fixture_bundle() -> (PlanningStudy, ReportBundle) {
        let study = three_bus_study();
        let report = evaluate_plan(&study, &Plan::empty(1, 1)).unwrap();
        let bundle = build_report(&study, &report, SolveStats::default()).unwrap();
        (study, bundle)
    }

    #[test]
    fn summary_decomposes_objective() {
        let (_, bundle) = fixture_bundle();
        let s = &bundle.summary;
        assert!(
            (s.objective - (s.line_investment + s.pst_investment + s.consumer_payment)).abs()
                < 1e-9
        );
        assert!(s.lines_built.is_empty());
    }

    #[test]
    fn json_round_trip() {
        let (_, bundle) = fixture_bundle();
        let mut buf = Vec::new();
        write_report(&bundle, ReportFormat::Json, &mut buf).unwrap();
        let back = read_report(buf.as_slice()).unwrap();
        assert_eq!(back, bundle);
    }

    #[test]
    fn csv_lmp_table_shape() {
        let (study, bundle) = fixture_bundle();
        let mut buf = Vec::new();
        write_report(&bundle, ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lmp_section: Vec<&str> = text
            .split("# lmp\n")
            .nth(1)
            .unwrap()
            .lines()
            .take_while(|l| !l.starts_with('#'))
            .collect();
        // Header plus one row per bus.
        assert_eq!(lmp_section.len(), 1 + study.network.buses.len());
        let header_cols = lmp_section[0].split(',').count();
        assert_eq!(header_cols, 1 + study.scenarios.len());
    }

    #[test]
    fn deterministic_bytes() {
        let (_, bundle) = fixture_bundle();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_report(&bundle, ReportFormat::Csv, &mut a).unwrap();
        write_report(&bundle, ReportFormat::Csv, &mut b).unwrap();
        assert_eq!(a, b);
        // Wall time never reaches the serialized form.
        let mut with_time = bundle.clone();
        with_time.summary.stats.wall_seconds = Some(1.23);
        let mut c = Vec::new();
        write_report(&with_time, ReportFormat::Json, &mut c).unwrap();
        let mut d = Vec::new();
        write_report(&bundle, ReportFormat::Json, &mut d).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn comparison_with_itself_is_zero() {
        let (_, bundle) = fixture_bundle();
        let rows = lmp_comparison(&bundle, &bundle, &[0]).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.delta == 0.0));
    }

    #[test]
    fn comparison_rejects_unknown_scenario_and_bus_mismatch() {
        let (_, bundle) = fixture_bundle();
        assert!(lmp_comparison(&bundle, &bundle, &[7]).is_err());
        let mut other = bundle.clone();
        other.lmp.rows[0] = "bus99".into();
        assert!(lmp_comparison(&bundle, &other, &[0]).is_err());
    }

    use crate::model::PlanningStudy;
}
