//! Case ingestion: a MATPOWER-style case parser (DC-relevant columns only),
//! the load/generation/rating modifiers used to stress a base case, study
//! assembly from parsed data plus candidate lists, and the native JSON
//! study format.

use crate::costs::pst_capital_cost;
use crate::model::{
    validate_study, Branch, BranchKind, Bus, Economics, Generator, LoadPoint, NetworkCase, Plan,
    PlanningStudy, PstCandidate, Scenario, WindFarm,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Native study format version accepted by [`read_study`].
pub const STUDY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawBus {
    pub id: u32,
    /// 1 = load bus, 2 = generator bus, 3 = reference.
    pub bus_type: i32,
    /// Active power demand, MW.
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGenerator {
    pub bus: u32,
    pub p_min: f64,
    pub p_max: f64,
    /// Marginal cost derived from the polynomial cost row, $/MWh.
    pub marginal_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawBranch {
    pub from: u32,
    pub to: u32,
    /// Per-unit reactance.
    pub reactance: f64,
    /// Thermal rating, MVA.
    pub rating: f64,
}

/// The DC-relevant subset of a MATPOWER case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCaseFile {
    pub mva_base: f64,
    pub buses: Vec<RawBus>,
    pub generators: Vec<RawGenerator>,
    pub branches: Vec<RawBranch>,
    /// Non-fatal notes: ignored sections, skipped rows.
    pub warnings: Vec<String>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Numeric matrix block of a case file, with source line numbers.
struct MatrixBlock {
    rows: Vec<(usize, Vec<f64>)>,
}

fn parse_numeric_row(line_no: usize, line: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let body = match line.find('%') {
        Some(p) => &line[..p],
        None => line,
    };
    for token in body.split(|c: char| c.is_whitespace() || c == ';' || c == ',') {
        if token.is_empty() || token == "]" {
            continue;
        }
        let col = line.find(token).map(|p| p + 1).unwrap_or(0);
        let v: f64 = token.parse().map_err(|_| {
            parse_err(line_no, format!("malformed numeric token '{token}' at column {col}"))
        })?;
        values.push(v);
    }
    Ok(values)
}

/// Parse the text of a MATPOWER case. Only the bus, gen, branch and gencost
/// matrices plus `baseMVA` are interpreted; other assignments are recorded
/// as warnings.
pub fn parse_matpower(text: &str) -> Result<RawCaseFile> {
    let mut mva_base = None;
    let mut warnings = Vec::new();
    let mut bus_block: Option<MatrixBlock> = None;
    let mut gen_block: Option<MatrixBlock> = None;
    let mut branch_block: Option<MatrixBlock> = None;
    let mut gencost_block: Option<MatrixBlock> = None;

    let mut lines = text.lines().enumerate().peekable();
    while let Some((idx, raw)) = lines.next() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') || line.starts_with("function") {
            continue;
        }
        let Some(eq) = line.find('=') else { continue };
        let key = line[..eq].trim();
        let rest = line[eq + 1..].trim();

        if key == "mpc.baseMVA" {
            let value = rest.trim_end_matches(';').trim();
            mva_base = Some(value.parse::<f64>().map_err(|_| {
                parse_err(line_no, format!("malformed numeric token '{value}'"))
            })?);
            continue;
        }
        if key == "mpc.version" {
            continue;
        }
        if !rest.starts_with('[') {
            warnings.push(format!("ignored assignment '{key}' (line {line_no})"));
            continue;
        }

        // Collect the matrix body until the closing bracket.
        let mut rows = Vec::new();
        let first = rest.trim_start_matches('[').trim();
        let mut closed = first.contains(']');
        let first_body = first.split(']').next().unwrap_or("");
        if !first_body.trim().is_empty() {
            let vals = parse_numeric_row(line_no, first_body)?;
            if !vals.is_empty() {
                rows.push((line_no, vals));
            }
        }
        while !closed {
            let Some((jdx, body_raw)) = lines.next() else {
                return Err(parse_err(line_no, format!("unterminated matrix '{key}'")));
            };
            let body_no = jdx + 1;
            let body = body_raw.trim();
            if body.is_empty() || body.starts_with('%') {
                continue;
            }
            let data = if let Some(p) = body.find(']') {
                closed = true;
                &body[..p]
            } else {
                body
            };
            if data.trim().is_empty() {
                continue;
            }
            let vals = parse_numeric_row(body_no, data)?;
            if !vals.is_empty() {
                rows.push((body_no, vals));
            }
        }
        let block = MatrixBlock { rows };
        match key {
            "mpc.bus" => bus_block = Some(block),
            "mpc.gen" => gen_block = Some(block),
            "mpc.branch" => branch_block = Some(block),
            "mpc.gencost" => gencost_block = Some(block),
            other => warnings.push(format!("ignored section '{other}' (line {line_no})")),
        }
    }

    let bus_block = bus_block.ok_or_else(|| Error::MissingSection("mpc.bus".into()))?;
    let gen_block = gen_block.ok_or_else(|| Error::MissingSection("mpc.gen".into()))?;
    let branch_block = branch_block.ok_or_else(|| Error::MissingSection("mpc.branch".into()))?;
    let gencost_block =
        gencost_block.ok_or_else(|| Error::MissingSection("mpc.gencost".into()))?;

    let mut buses = Vec::new();
    for (line_no, row) in &bus_block.rows {
        if row.len() < 3 {
            return Err(parse_err(*line_no, "bus row needs at least 3 columns"));
        }
        buses.push(RawBus {
            id: row[0] as u32,
            bus_type: row[1] as i32,
            load: row[2],
        });
    }

    if gencost_block.rows.len() < gen_block.rows.len() {
        return Err(parse_err(
            gencost_block.rows.last().map(|r| r.0).unwrap_or(0),
            format!(
                "gencost has {} rows for {} generators",
                gencost_block.rows.len(),
                gen_block.rows.len()
            ),
        ));
    }
    if gencost_block.rows.len() > gen_block.rows.len() {
        warnings.push(format!(
            "gencost has {} rows; using the first {} (active-power costs)",
            gencost_block.rows.len(),
            gen_block.rows.len()
        ));
    }

    let mut generators = Vec::new();
    let mut skipped_gens = 0usize;
    for ((line_no, row), (cost_line, cost_row)) in
        gen_block.rows.iter().zip(&gencost_block.rows)
    {
        if row.len() < 10 {
            return Err(parse_err(*line_no, "gen row needs at least 10 columns"));
        }
        let (bus, status, p_max, p_min) = (row[0] as u32, row[7] as i32, row[8], row[9]);
        if status == 0 || p_max <= 0.0 {
            // Out-of-service units and reactive-only devices play no role
            // in a DC dispatch.
            skipped_gens += 1;
            continue;
        }
        generators.push(RawGenerator {
            bus,
            p_min,
            p_max,
            marginal_cost: marginal_cost_from_row(*cost_line, cost_row, p_max)?,
        });
    }
    if skipped_gens > 0 {
        warnings.push(format!(
            "skipped {skipped_gens} out-of-service or reactive-only generator rows"
        ));
    }

    let mut branches = Vec::new();
    let mut skipped_branches = 0usize;
    for (line_no, row) in &branch_block.rows {
        if row.len() < 6 {
            return Err(parse_err(*line_no, "branch row needs at least 6 columns"));
        }
        if row.len() >= 11 && row[10] as i32 == 0 {
            skipped_branches += 1;
            continue;
        }
        branches.push(RawBranch {
            from: row[0] as u32,
            to: row[1] as u32,
            reactance: row[3],
            rating: row[5],
        });
    }
    if skipped_branches > 0 {
        warnings.push(format!("skipped {skipped_branches} out-of-service branches"));
    }

    for b in &branches {
        for end in [b.from, b.to] {
            if !buses.iter().any(|x| x.id == end) {
                return Err(Error::Schema(format!(
                    "branch {}-{} references unknown bus {end}",
                    b.from, b.to
                )));
            }
        }
    }
    for g in &generators {
        if !buses.iter().any(|x| x.id == g.bus) {
            return Err(Error::Schema(format!(
                "generator references unknown bus {}",
                g.bus
            )));
        }
    }

    Ok(RawCaseFile {
        mva_base: mva_base.unwrap_or_else(|| {
            warnings.push("baseMVA missing; defaulting to 100".into());
            100.0
        }),
        buses,
        generators,
        branches,
        warnings,
    })
}

/// Marginal cost from a polynomial gencost row: the linear coefficient when
/// present, otherwise the marginal cost of the quadratic term evaluated at
/// half of maximum output.
fn marginal_cost_from_row(line_no: usize, row: &[f64], p_max: f64) -> Result<f64> {
    if row.len() < 4 {
        return Err(parse_err(line_no, "gencost row needs at least 4 columns"));
    }
    let model = row[0] as i32;
    if model != 2 {
        return Err(parse_err(
            line_no,
            format!("unsupported gencost model {model} (only polynomial model 2)"),
        ));
    }
    let ncost = row[3] as usize;
    if row.len() < 4 + ncost {
        return Err(parse_err(line_no, "gencost row shorter than its ncost"));
    }
    let coeffs = &row[4..4 + ncost]; // descending powers, constant last
    let linear = if ncost >= 2 { coeffs[ncost - 2] } else { 0.0 };
    let quadratic = if ncost >= 3 { coeffs[ncost - 3] } else { 0.0 };
    Ok(if linear != 0.0 {
        linear
    } else if quadratic != 0.0 {
        // d/dP (c2 P^2) at P = p_max / 2
        quadratic * p_max
    } else {
        0.0
    })
}

/// Scale loads, generator limits and branch ratings. Factors must be
/// positive; everything else is left untouched.
pub fn apply_modifiers(
    case: &RawCaseFile,
    load_scale: f64,
    gen_scale: f64,
    thermal_derate: f64,
) -> RawCaseFile {
    assert!(load_scale > 0.0 && gen_scale > 0.0 && thermal_derate > 0.0);
    let mut out = case.clone();
    for b in &mut out.buses {
        b.load *= load_scale;
    }
    for g in &mut out.generators {
        g.p_min *= gen_scale;
        g.p_max *= gen_scale;
    }
    for b in &mut out.branches {
        b.rating *= thermal_derate;
    }
    out
}

/// Render a RawCaseFile back into MATPOWER-style text (round-trip support
/// for the supported subset).
pub fn print_matpower(case: &RawCaseFile) -> String {
    let mut s = String::new();
    s.push_str("function mpc = case\nmpc.version = '2';\n");
    s.push_str(&format!("mpc.baseMVA = {};\n", fmt_f64(case.mva_base)));
    s.push_str("mpc.bus = [\n");
    for b in &case.buses {
        s.push_str(&format!(
            "\t{}\t{}\t{}\t0\t0\t0\t1\t1\t0\t0\t1\t1.05\t0.95;\n",
            b.id,
            b.bus_type,
            fmt_f64(b.load)
        ));
    }
    s.push_str("];\nmpc.gen = [\n");
    for g in &case.generators {
        s.push_str(&format!(
            "\t{}\t0\t0\t0\t0\t1\t100\t1\t{}\t{};\n",
            g.bus,
            fmt_f64(g.p_max),
            fmt_f64(g.p_min)
        ));
    }
    s.push_str("];\nmpc.branch = [\n");
    for b in &case.branches {
        s.push_str(&format!(
            "\t{}\t{}\t0\t{}\t0\t{}\t0\t0\t0\t0\t1\t-360\t360;\n",
            b.from,
            b.to,
            fmt_f64(b.reactance),
            fmt_f64(b.rating)
        ));
    }
    s.push_str("];\nmpc.gencost = [\n");
    for g in &case.generators {
        s.push_str(&format!("\t2\t0\t0\t3\t0\t{}\t0;\n", fmt_f64(g.marginal_cost)));
    }
    s.push_str("];\n");
    s
}

fn fmt_f64(v: f64) -> String {
    // Shortest representation that round-trips exactly.
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

/// A prospective line to add to the case at assembly time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProspectiveLineSpec {
    pub from: u32,
    pub to: u32,
    pub reactance: f64,
    pub rating: f64,
    pub invest_cost: f64,
}

/// A phase-shifter candidate attached to an existing branch. A missing cost
/// is derived from the branch rating and the PST unit cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PstSpec {
    pub branch: u32,
    pub angle_min: f64,
    pub angle_max: f64,
    pub invest_cost: Option<f64>,
}

/// Combine a parsed case with scenarios and candidate lists into a
/// validated study.
#[allow(clippy::too_many_arguments)]
pub fn assemble_study(
    case: &RawCaseFile,
    scenarios: Vec<Scenario>,
    prospective_lines: &[ProspectiveLineSpec],
    pst_candidates: &[PstSpec],
    wind_farms: Vec<WindFarm>,
    pst_budget: f64,
    line_budget: f64,
    economics: Economics,
    dual_big_m: f64,
) -> Result<PlanningStudy> {
    let buses: Vec<Bus> = case
        .buses
        .iter()
        .map(|b| Bus {
            id: b.id,
            is_reference: b.bus_type == 3,
        })
        .collect();

    let loads: Vec<LoadPoint> = case
        .buses
        .iter()
        .filter(|b| b.load != 0.0)
        .enumerate()
        .map(|(i, b)| LoadPoint {
            id: i as u32 + 1,
            bus: b.id,
            peak_demand: b.load,
        })
        .collect();

    let generators: Vec<Generator> = case
        .generators
        .iter()
        .enumerate()
        .map(|(i, g)| Generator {
            id: i as u32 + 1,
            bus: g.bus,
            marginal_cost: g.marginal_cost,
            p_min: g.p_min,
            p_max: g.p_max,
        })
        .collect();

    let mut branches: Vec<Branch> = case
        .branches
        .iter()
        .enumerate()
        .map(|(i, b)| Branch {
            id: i as u32 + 1,
            from_bus: b.from,
            to_bus: b.to,
            reactance: b.reactance,
            rating: b.rating,
            kind: BranchKind::Existing,
            pst_candidate: None,
        })
        .collect();

    for spec in pst_candidates {
        let branch = branches
            .iter_mut()
            .find(|b| b.id == spec.branch)
            .ok_or_else(|| {
                Error::Schema(format!("PST candidate references unknown branch {}", spec.branch))
            })?;
        let cost = spec
            .invest_cost
            .unwrap_or_else(|| pst_capital_cost(branch.rating, economics.pst_unit_cost));
        branch.pst_candidate = Some(PstCandidate {
            angle_min: spec.angle_min,
            angle_max: spec.angle_max,
            invest_cost: cost,
        });
    }

    let next_id = branches.len() as u32 + 1;
    for (i, spec) in prospective_lines.iter().enumerate() {
        branches.push(Branch {
            id: next_id + i as u32,
            from_bus: spec.from,
            to_bus: spec.to,
            reactance: spec.reactance,
            rating: spec.rating,
            kind: BranchKind::Prospective {
                invest_cost: spec.invest_cost,
            },
            pst_candidate: None,
        });
    }

    let study = PlanningStudy {
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
        economics,
        mva_base: case.mva_base,
        dual_big_m,
    };

    let violations = validate_study(&study);
    if violations.is_empty() {
        Ok(study)
    } else {
        Err(Error::Validation(violations))
    }
}

/// Budgets may be unlimited; JSON has no infinity literal, so those
/// serialize as the string "unlimited".
mod budget_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("unlimited")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if t == "unlimited" => Ok(f64::INFINITY),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "budget must be a number or \"unlimited\", got \"{t}\""
            ))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkDocument {
    schema_version: u32,
    mva_base: f64,
    buses: Vec<RawBus>,
    generators: Vec<RawGenerator>,
    branches: Vec<RawBranch>,
}

/// Serialize an ingested network (the output of `parse_matpower` plus
/// modifiers) to JSON.
pub fn write_network<W: Write>(case: &RawCaseFile, mut out: W) -> Result<()> {
    let doc = NetworkDocument {
        schema_version: STUDY_SCHEMA_VERSION,
        mva_base: case.mva_base,
        buses: case.buses.clone(),
        generators: case.generators.clone(),
        branches: case.branches.clone(),
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Schema(e.to_string()))?;
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_network<R: Read>(mut input: R) -> Result<RawCaseFile> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let doc: NetworkDocument =
        serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?;
    if doc.schema_version != STUDY_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: doc.schema_version,
            expected: STUDY_SCHEMA_VERSION,
        });
    }
    Ok(RawCaseFile {
        mva_base: doc.mva_base,
        buses: doc.buses,
        generators: doc.generators,
        branches: doc.branches,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct StudyDocument {
    schema_version: u32,
    network: NetworkCase,
    scenarios: Vec<Scenario>,
    #[serde(with = "budget_serde")]
    pst_budget: f64,
    #[serde(with = "budget_serde")]
    line_budget: f64,
    economics: Economics,
    mva_base: f64,
    dual_big_m: f64,
}

/// Serialize a study to the native JSON format.
pub fn write_study<W: Write>(study: &PlanningStudy, mut out: W) -> Result<()> {
    let doc = StudyDocument {
        schema_version: STUDY_SCHEMA_VERSION,
        network: study.network.clone(),
        scenarios: study.scenarios.clone(),
        pst_budget: study.pst_budget,
        line_budget: study.line_budget,
        economics: study.economics.clone(),
        mva_base: study.mva_base,
        dual_big_m: study.dual_big_m,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Schema(e.to_string()))?;
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Read and validate a study from the native JSON format.
pub fn read_study<R: Read>(mut input: R) -> Result<PlanningStudy> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    // Surface a version mismatch before the full parse so the error names
    // the actual problem rather than a missing field.
    let probe: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?;
    match probe.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v as u32 == STUDY_SCHEMA_VERSION => {}
        Some(v) => {
            return Err(Error::SchemaVersion {
                found: v as u32,
                expected: STUDY_SCHEMA_VERSION,
            })
        }
        None => return Err(Error::Schema("missing field 'schema_version'".into())),
    }
    let doc: StudyDocument =
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{e}")))?;
    let study = PlanningStudy {
        network: doc.network,
        scenarios: doc.scenarios,
        pst_budget: doc.pst_budget,
        line_budget: doc.line_budget,
        economics: doc.economics,
        mva_base: doc.mva_base,
        dual_big_m: doc.dual_big_m,
    };
    let violations = validate_study(&study);
    if violations.is_empty() {
        Ok(study)
    } else {
        Err(Error::Validation(violations))
    }
}

/// Read/write a plan (investment decision vector) as JSON.
pub fn write_plan<W: Write>(plan: &Plan, mut out: W) -> Result<()> {
    let text = serde_json::to_string_pretty(plan).map_err(|e| Error::Schema(e.to_string()))?;
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_plan<R: Read>(mut input: R) -> Result<Plan> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))
}
