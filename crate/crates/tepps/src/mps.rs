//! MPS export of the embedded problems, plus the reader used to verify
//! round trips and to cross-check external solver results.
//!
//! Fixed format mangles names longer than eight characters into generated
//! ids; free format keeps full names. Values carry twelve significant
//! digits.

use crate::solver::{LpProblem, MilpProblem, SparseMatrix};
use crate::{Error, Result};
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpsFormat {
    Fixed,
    Free,
}

fn fmt_value(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    // Round to 12 significant digits, then print the shortest form that
    // parses back to the rounded value.
    let rounded: f64 = format!("{v:.11e}").parse().unwrap();
    format!("{rounded}")
}

/// Mangle names for fixed-format MPS: keep names of at most eight
/// characters, replace longer ones with generated ids. Collisions between
/// kept and generated names are an error.
fn mangle(names: &[String], prefix: char) -> Result<Vec<String>> {
    let out: Vec<String> = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            if n.len() <= 8 {
                n.clone()
            } else {
                format!("{prefix}{:07}", i + 1)
            }
        })
        .collect();
    let mut seen: HashMap<&str, Vec<&str>> = HashMap::new();
    for (mangled, original) in out.iter().zip(names) {
        seen.entry(mangled.as_str()).or_default().push(original);
    }
    let mut collisions: Vec<String> = seen
        .iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|(k, v)| format!("{k} <- {}", v.join(", ")))
        .collect();
    if collisions.is_empty() {
        Ok(out)
    } else {
        collisions.sort();
        Err(Error::Report(format!(
            "name collisions after mangling: {}",
            collisions.join("; ")
        )))
    }
}

/// Write a problem in MPS form. Binary columns are wrapped in
/// INTORG/INTEND markers and their unit bounds restated in BOUNDS.
pub fn write_mps<W: Write>(milp: &MilpProblem, format: MpsFormat, out: &mut W) -> Result<()> {
    milp.check_shape().map_err(Error::Report)?;
    let lp = &milp.lp;

    let (col_names, ineq_names, eq_names) = match format {
        MpsFormat::Fixed => (
            mangle(&milp.var_names, 'C')?,
            mangle(&milp.ineq_names, 'R')?,
            mangle(&milp.eq_names, 'E')?,
        ),
        MpsFormat::Free => (
            milp.var_names.clone(),
            milp.ineq_names.clone(),
            milp.eq_names.clone(),
        ),
    };
    {
        // Row and column namespaces must stay disjoint after mangling too.
        let mut all: Vec<&str> = col_names
            .iter()
            .chain(&ineq_names)
            .chain(&eq_names)
            .map(|s| s.as_str())
            .collect();
        all.push("COST");
        all.sort_unstable();
        for w in all.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Report(format!(
                    "name collisions after mangling: {}",
                    w[0]
                )));
            }
        }
    }

    // Pad to the classic field width but always keep one separating
    // space, since twelve-digit values and free-form names can overflow.
    let pad = |s: &str, width: usize| -> String {
        if s.len() >= width {
            format!("{s} ")
        } else {
            format!("{s:<width$}")
        }
    };
    let field = |name: &str| -> String {
        match format {
            MpsFormat::Fixed => format!("{name:<8}"),
            MpsFormat::Free => name.to_string(),
        }
    };

    writeln!(out, "NAME          TEPPS")?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N  COST")?;
    for n in &ineq_names {
        writeln!(out, " L  {}", field(n))?;
    }
    for n in &eq_names {
        writeln!(out, " E  {}", field(n))?;
    }

    writeln!(out, "COLUMNS")?;
    // Column entries grouped per column: objective first, then rows in
    // emission order.
    let mut entries: Vec<Vec<(String, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (j, &c) in lp.cost.iter().enumerate() {
        if c != 0.0 {
            entries[j].push(("COST".to_string(), c));
        }
    }
    for (i, row) in lp.a_ineq.rows().enumerate() {
        for &(j, v) in row {
            entries[j].push((ineq_names[i].clone(), v));
        }
    }
    for (i, row) in lp.a_eq.rows().enumerate() {
        for &(j, v) in row {
            entries[j].push((eq_names[i].clone(), v));
        }
    }
    let is_binary = {
        let mut b = vec![false; lp.num_vars()];
        for &j in &milp.binaries {
            b[j] = true;
        }
        b
    };
    let mut integer_open = false;
    let mut marker_count = 0usize;
    for j in 0..lp.num_vars() {
        if is_binary[j] != integer_open {
            let kind = if is_binary[j] { "'INTORG'" } else { "'INTEND'" };
            marker_count += 1;
            writeln!(
                out,
                "    {:<10}{:<22}{}",
                format!("MARK{marker_count:04}"),
                "'MARKER'",
                kind
            )?;
            integer_open = is_binary[j];
        }
        for chunk in entries[j].chunks(2) {
            let mut line = format!("    {}", pad(&field(&col_names[j]), 10));
            for (row, v) in chunk {
                line.push_str(&pad(&field(row), 10));
                line.push_str(&pad(&fmt_value(*v), 14));
            }
            writeln!(out, "{}", line.trim_end())?;
        }
        if entries[j].is_empty() {
            // Column with no coefficients still needs to exist.
            writeln!(
                out,
                "    {}{}0",
                pad(&field(&col_names[j]), 10),
                pad("COST", 10)
            )?;
        }
    }
    if integer_open {
        marker_count += 1;
        writeln!(
            out,
            "    {:<10}{:<22}{}",
            format!("MARK{marker_count:04}"),
            "'MARKER'",
            "'INTEND'"
        )?;
    }

    writeln!(out, "RHS")?;
    let mut rhs_entries: Vec<(String, f64)> = Vec::new();
    for (i, &b) in lp.b_ineq.iter().enumerate() {
        if b != 0.0 {
            rhs_entries.push((ineq_names[i].clone(), b));
        }
    }
    for (i, &b) in lp.b_eq.iter().enumerate() {
        if b != 0.0 {
            rhs_entries.push((eq_names[i].clone(), b));
        }
    }
    for chunk in rhs_entries.chunks(2) {
        let mut line = format!("    {}", pad("RHS", 10));
        for (row, v) in chunk {
            line.push_str(&pad(&field(row), 10));
            line.push_str(&pad(&fmt_value(*v), 14));
        }
        writeln!(out, "{}", line.trim_end())?;
    }

    writeln!(out, "BOUNDS")?;
    for j in 0..lp.num_vars() {
        let (lo, up) = (lp.lower[j], lp.upper[j]);
        let name = field(&col_names[j]);
        if is_binary[j] {
            writeln!(out, " BV {}{}", pad("BND", 10), name.trim_end())?;
            continue;
        }
        let bound_line = |kind: &str, value: Option<f64>| -> String {
            let mut l = format!(" {kind} {}{}", pad("BND", 10), pad(&name, 10));
            if let Some(v) = value {
                l.push_str(&fmt_value(v));
            }
            l.trim_end().to_string()
        };
        match (lo.is_finite(), up.is_finite()) {
            (false, false) => writeln!(out, "{}", bound_line("FR", None))?,
            (true, true) if lo == up => writeln!(out, "{}", bound_line("FX", Some(lo)))?,
            (true, true) => {
                if lo != 0.0 {
                    writeln!(out, "{}", bound_line("LO", Some(lo)))?;
                }
                writeln!(out, "{}", bound_line("UP", Some(up)))?;
            }
            (true, false) => {
                if lo != 0.0 {
                    writeln!(out, "{}", bound_line("LO", Some(lo)))?;
                }
            }
            (false, true) => {
                writeln!(out, "{}", bound_line("MI", None))?;
                writeln!(out, "{}", bound_line("UP", Some(up)))?;
            }
        }
    }
    writeln!(out, "ENDATA")?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Objective,
    Le,
    Ge,
    Eq,
}

/// Parse MPS text (fixed or free layout; sections are recognized by
/// whitespace-separated tokens). Used by the round-trip tests and the
/// cross-solver checks.
pub fn parse_mps<R: Read>(input: R) -> Result<MilpProblem> {
    let reader = BufReader::new(input);
    let mut section = String::new();

    let mut row_kinds: Vec<RowKind> = Vec::new();
    let mut row_names: Vec<String> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut objective_row: Option<String> = None;

    let mut col_names: Vec<String> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut col_entries: Vec<Vec<(usize, f64)>> = Vec::new(); // per column: (row, value)
    let mut col_cost: Vec<f64> = Vec::new();
    let mut binaries: Vec<usize> = Vec::new();
    let mut integer_mode = false;

    let mut rhs: HashMap<usize, f64> = HashMap::new();
    let mut bounds: Vec<(String, String, Option<f64>)> = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim_end();
        if text.is_empty() || text.starts_with('*') {
            continue;
        }
        let starts_flush = !text.starts_with(' ') && !text.starts_with('\t');
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if starts_flush {
            section = tokens[0].to_uppercase();
            if section == "ENDATA" {
                break;
            }
            continue;
        }
        let err = |msg: &str| Error::Parse {
            line: lineno + 1,
            message: msg.to_string(),
        };
        match section.as_str() {
            "ROWS" => {
                if tokens.len() < 2 {
                    return Err(err("row line needs a type and a name"));
                }
                let kind = match tokens[0].to_uppercase().as_str() {
                    "N" => RowKind::Objective,
                    "L" => RowKind::Le,
                    "G" => RowKind::Ge,
                    "E" => RowKind::Eq,
                    other => return Err(err(&format!("unknown row type '{other}'"))),
                };
                let name = tokens[1].to_string();
                if kind == RowKind::Objective {
                    if objective_row.is_none() {
                        objective_row = Some(name);
                    }
                    continue;
                }
                row_index.insert(name.clone(), row_names.len());
                row_names.push(name);
                row_kinds.push(kind);
            }
            "COLUMNS" => {
                if tokens.len() >= 3 && tokens[1] == "'MARKER'" {
                    match tokens[2] {
                        "'INTORG'" => integer_mode = true,
                        "'INTEND'" => integer_mode = false,
                        other => return Err(err(&format!("unknown marker '{other}'"))),
                    }
                    continue;
                }
                if tokens.len() < 3 || tokens.len() % 2 == 0 {
                    return Err(err("column line needs name plus (row, value) pairs"));
                }
                let col = *col_index.entry(tokens[0].to_string()).or_insert_with(|| {
                    col_names.push(tokens[0].to_string());
                    col_entries.push(Vec::new());
                    col_cost.push(0.0);
                    if integer_mode {
                        binaries.push(col_names.len() - 1);
                    }
                    col_names.len() - 1
                });
                for pair in tokens[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| err(&format!("bad value '{}'", pair[1])))?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        col_cost[col] += value;
                    } else {
                        let row = *row_index
                            .get(pair[0])
                            .ok_or_else(|| err(&format!("unknown row '{}'", pair[0])))?;
                        col_entries[col].push((row, value));
                    }
                }
            }
            "RHS" => {
                if tokens.len() < 3 || tokens.len() % 2 == 0 {
                    return Err(err("rhs line needs a set name plus (row, value) pairs"));
                }
                for pair in tokens[1..].chunks(2) {
                    if Some(pair[0]) == objective_row.as_deref() {
                        continue; // objective offset unsupported, ignore zero
                    }
                    let row = *row_index
                        .get(pair[0])
                        .ok_or_else(|| err(&format!("unknown row '{}'", pair[0])))?;
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| err(&format!("bad value '{}'", pair[1])))?;
                    rhs.insert(row, value);
                }
            }
            "RANGES" => {
                return Err(err("RANGES section is not supported"));
            }
            "BOUNDS" => {
                if tokens.len() < 3 {
                    return Err(err("bound line needs type, set and column"));
                }
                let value = if tokens.len() >= 4 {
                    Some(
                        tokens[3]
                            .parse()
                            .map_err(|_| err(&format!("bad value '{}'", tokens[3])))?,
                    )
                } else {
                    None
                };
                bounds.push((tokens[0].to_uppercase(), tokens[2].to_string(), value));
            }
            other => {
                return Err(err(&format!("line outside a known section ('{other}')")));
            }
        }
    }

    let n = col_names.len();
    // Split rows into <= and = systems, negating >= rows.
    let ineq_rows: Vec<usize> = (0..row_names.len())
        .filter(|&r| row_kinds[r] != RowKind::Eq)
        .collect();
    let eq_rows: Vec<usize> = (0..row_names.len())
        .filter(|&r| row_kinds[r] == RowKind::Eq)
        .collect();
    let mut ineq_pos: HashMap<usize, usize> = HashMap::new();
    for (i, &r) in ineq_rows.iter().enumerate() {
        ineq_pos.insert(r, i);
    }
    let mut eq_pos: HashMap<usize, usize> = HashMap::new();
    for (i, &r) in eq_rows.iter().enumerate() {
        eq_pos.insert(r, i);
    }

    let mut ineq_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ineq_rows.len()];
    let mut eq_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); eq_rows.len()];
    for (col, entries) in col_entries.iter().enumerate() {
        for &(row, v) in entries {
            match row_kinds[row] {
                RowKind::Le => ineq_entries[ineq_pos[&row]].push((col, v)),
                RowKind::Ge => ineq_entries[ineq_pos[&row]].push((col, -v)),
                RowKind::Eq => eq_entries[eq_pos[&row]].push((col, v)),
                RowKind::Objective => unreachable!(),
            }
        }
    }
    let mut a_ineq = SparseMatrix::new(n);
    let mut b_ineq = Vec::new();
    for (i, &r) in ineq_rows.iter().enumerate() {
        a_ineq.push_row(&ineq_entries[i]);
        let b = rhs.get(&r).copied().unwrap_or(0.0);
        b_ineq.push(if row_kinds[r] == RowKind::Ge { -b } else { b });
    }
    let mut a_eq = SparseMatrix::new(n);
    let mut b_eq = Vec::new();
    for (i, &r) in eq_rows.iter().enumerate() {
        a_eq.push_row(&eq_entries[i]);
        b_eq.push(rhs.get(&r).copied().unwrap_or(0.0));
    }

    // Default bounds [0, inf); binaries default to [0, 1].
    let mut lower = vec![0.0; n];
    let mut upper = vec![f64::INFINITY; n];
    for &b in &binaries {
        upper[b] = 1.0;
    }
    for (kind, col, value) in bounds {
        let j = *col_index
            .get(&col)
            .ok_or_else(|| Error::Schema(format!("bound on unknown column '{col}'")))?;
        match kind.as_str() {
            "UP" => upper[j] = value.ok_or_else(|| Error::Schema("UP needs a value".into()))?,
            "LO" => lower[j] = value.ok_or_else(|| Error::Schema("LO needs a value".into()))?,
            "FX" => {
                let v = value.ok_or_else(|| Error::Schema("FX needs a value".into()))?;
                lower[j] = v;
                upper[j] = v;
            }
            "FR" => {
                lower[j] = f64::NEG_INFINITY;
                upper[j] = f64::INFINITY;
            }
            "MI" => lower[j] = f64::NEG_INFINITY,
            "PL" => upper[j] = f64::INFINITY,
            "BV" => {
                lower[j] = 0.0;
                upper[j] = 1.0;
                if !binaries.contains(&j) {
                    binaries.push(j);
                }
            }
            other => return Err(Error::Schema(format!("unsupported bound type '{other}'"))),
        }
    }

    let milp = MilpProblem {
        lp: LpProblem {
            cost: col_cost,
            a_ineq,
            b_ineq,
            a_eq,
            b_eq,
            lower,
            upper,
        },
        binaries,
        var_names: col_names,
        ineq_names: ineq_rows.iter().map(|&r| row_names[r].clone()).collect(),
        eq_names: eq_rows.iter().map(|&r| row_names[r].clone()).collect(),
        mipgap: 0.001,
    };
    milp.check_shape().map_err(Error::Schema)?;
    Ok(milp)
}
