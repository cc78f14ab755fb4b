//! Command line front end: case ingestion, scenario reduction, planning,
//! oracle verification and plan evaluation as reproducible batch runs.
//!
//! Exit codes: 0 success, 2 parse error, 3 validation error, 4 enumeration
//! guard, 5 infeasible plan, 1 anything else. Set TEPPS_LOG=debug for
//! solver chatter (stderr only; files and stdout stay deterministic).

use clap::{Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;
use tepps::formulation::{extract_solution, solve_single_level};
use tepps::ingest;
use tepps::model::PlanningStudy;
use tepps::mps::{write_mps, MpsFormat};
use tepps::report::{
    build_report, write_report, write_sweep_csv, ReportFormat, SolveStats, SweepRow,
};
use tepps::scenarios::{ingest_profile, kmeans_reduce, ProfileKind};
use tepps::solver::{enumerate_oracle, evaluate_plan, SolveError};

#[derive(Parser)]
#[command(name = "tepps", version, about = "Transmission expansion planning with phase shifting transformers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a MATPOWER-style case, apply stress factors, write network JSON.
    Ingest {
        /// Path to the case file (.m).
        case: PathBuf,
        /// Multiply every bus load.
        #[arg(long, default_value_t = 1.0)]
        scale_load: f64,
        /// Multiply every generator limit.
        #[arg(long, default_value_t = 1.0)]
        scale_gen: f64,
        /// Multiply every branch rating.
        #[arg(long, default_value_t = 1.0)]
        derate: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reduce hourly load/wind profiles to k weighted scenarios.
    Reduce {
        /// CSV with a load column (normalized by its maximum).
        #[arg(long)]
        load: PathBuf,
        /// CSV with a capacity-factor column.
        #[arg(long)]
        wind: PathBuf,
        /// Column name in both files.
        #[arg(long, default_value = "value")]
        column: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the single-level planning model for a study.
    Plan {
        #[arg(long)]
        study: PathBuf,
        /// Relative optimality gap (defaults to 0.001).
        #[arg(long)]
        mipgap: Option<f64>,
        /// Override the study's dual-multiplier bound.
        #[arg(long)]
        dual_big_m: Option<f64>,
        /// Where the report goes; the plan lands next to it as <out>.plan.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
        /// Also export the model in MPS form.
        #[arg(long)]
        export_mps: Option<PathBuf>,
        /// Use free-format MPS instead of fixed.
        #[arg(long, default_value_t = false)]
        free_mps: bool,
        /// Comma-separated budgets: re-solve per budget and write a CSV of
        /// (budget, objective, payment) instead of a single report.
        #[arg(long)]
        pst_budget_sweep: Option<String>,
    },
    /// Exhaustively enumerate budget-feasible plans (verification).
    Oracle {
        #[arg(long)]
        study: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Evaluate a fixed plan against a study.
    Evaluate {
        #[arg(long)]
        study: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("TEPPS_LOG"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}

fn exit_code(err: &tepps::Error) -> i32 {
    use tepps::Error::*;
    match err {
        Parse { .. } | MissingSection(_) | Csv(_) => 2,
        Validation(_) | Schema(_) | SchemaVersion { .. } => 3,
        Solve(SolveError::EnumerationGuard(..)) => 4,
        Solve(SolveError::InfeasiblePlan { .. }) | Solve(SolveError::MilpInfeasible) => 5,
        Io(e) if e.kind() == std::io::ErrorKind::NotFound => 2,
        _ => 1,
    }
}

fn open_in(path: &Path) -> tepps::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn open_out(path: &Path) -> tepps::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn read_study_file(path: &Path) -> tepps::Result<PlanningStudy> {
    ingest::read_study(open_in(path)?)
}

fn run(cli: Cli) -> tepps::Result<()> {
    match cli.command {
        Command::Ingest {
            case,
            scale_load,
            scale_gen,
            derate,
            out,
        } => {
            let text = std::fs::read_to_string(&case)?;
            let parsed = ingest::parse_matpower(&text)?;
            for w in &parsed.warnings {
                log::warn!("{w}");
            }
            let modified = ingest::apply_modifiers(&parsed, scale_load, scale_gen, derate);
            ingest::write_network(&modified, open_out(&out)?)?;
            println!(
                "network: {} buses, {} generators, {} branches (baseMVA {})",
                modified.buses.len(),
                modified.generators.len(),
                modified.branches.len(),
                modified.mva_base
            );
            Ok(())
        }
        Command::Reduce {
            load,
            wind,
            column,
            k,
            seed,
            out,
        } => {
            let load_series = ingest_profile(open_in(&load)?, &column, ProfileKind::Load)?;
            let wind_series =
                ingest_profile(open_in(&wind)?, &column, ProfileKind::CapacityFactor)?;
            let scenarios = kmeans_reduce(&load_series, &wind_series, k, seed)?;
            let mut writer = open_out(&out)?;
            let text = serde_json::to_string_pretty(&scenarios)
                .map_err(|e| tepps::Error::Schema(e.to_string()))?;
            writer.write_all(text.as_bytes())?;
            writer.write_all(b"\n")?;
            let sizes: Vec<String> = scenarios
                .iter()
                .map(|s| format!("{}", s.hours))
                .collect();
            println!("{} scenarios; hours: {}", scenarios.len(), sizes.join(","));
            Ok(())
        }
        Command::Plan {
            study,
            mipgap,
            dual_big_m,
            out,
            format,
            export_mps,
            free_mps,
            pst_budget_sweep,
        } => {
            let mut study = read_study_file(&study)?;
            if let Some(bound) = dual_big_m {
                study.dual_big_m = bound;
            }
            let gap = mipgap.unwrap_or(0.001);

            if let Some(list) = pst_budget_sweep {
                let budgets: Vec<f64> = list
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| tepps::Error::Schema(format!("bad budget '{s}'")))
                    })
                    .collect::<tepps::Result<_>>()?;
                let mut rows = Vec::new();
                for budget in budgets {
                    let mut case = study.clone();
                    case.pst_budget = budget;
                    let solved = solve_single_level(&case, gap, 3)?;
                    let (plan, _) = extract_solution(&solved.model, &case, &solved.solution)?;
                    let report = evaluate_plan(&case, &plan)?;
                    println!(
                        "budget {budget}: objective {} payment {}",
                        solved.solution.objective, report.consumer_payment
                    );
                    rows.push(SweepRow {
                        pst_budget: budget,
                        objective: solved.solution.objective,
                        consumer_payment: report.consumer_payment,
                    });
                }
                write_sweep_csv(&rows, &mut open_out(&out)?)?;
                return Ok(());
            }

            let started = Instant::now();
            let solved = solve_single_level(&study, gap, 3)?;
            let wall = started.elapsed().as_secs_f64();
            log::info!(
                "solved in {wall:.3}s: {} nodes, {} LP iterations, gap {:.2e}",
                solved.solution.nodes,
                solved.solution.lp_iterations,
                solved.solution.gap
            );
            if let Some(mps_path) = export_mps {
                let fmt = if free_mps { MpsFormat::Free } else { MpsFormat::Fixed };
                write_mps(&solved.model.problem, fmt, &mut open_out(&mps_path)?)?;
            }
            if !solved.audit.passed() {
                return Err(tepps::Error::Report(format!(
                    "optimality audit failed after {} escalations: {:?}",
                    solved.escalations, solved.audit
                )));
            }
            let (plan, _) = extract_solution(&solved.model, &study, &solved.solution)?;
            let report = evaluate_plan(&study, &plan)?;
            let stats = SolveStats {
                nodes: solved.solution.nodes,
                lp_iterations: solved.solution.lp_iterations,
                gap: solved.solution.gap,
                wall_seconds: Some(wall),
            };
            eprintln!("solve time: {wall:.3}s");
            let bundle = build_report(&study, &report, stats)?;
            write_bundle(&bundle, format, &out)?;
            ingest::write_plan(&plan, open_out(&plan_path(&out))?)?;
            println!(
                "objective {} = lines {} + psts {} + payment {}",
                report.objective,
                report.line_investment,
                report.pst_investment,
                report.consumer_payment
            );
            Ok(())
        }
        Command::Oracle { study, out, format } => {
            let study = read_study_file(&study)?;
            let outcome = enumerate_oracle(&study)?;
            let bundle = build_report(&study, &outcome.report, SolveStats::default())?;
            write_bundle(&bundle, format, &out)?;
            ingest::write_plan(&outcome.plan, open_out(&plan_path(&out))?)?;
            println!(
                "oracle objective {} over {} evaluated plans",
                outcome.objective, outcome.evaluated
            );
            Ok(())
        }
        Command::Evaluate {
            study,
            plan,
            out,
            format,
        } => {
            let study = read_study_file(&study)?;
            let plan = ingest::read_plan(open_in(&plan)?)?;
            let report = evaluate_plan(&study, &plan)?;
            let bundle = build_report(&study, &report, SolveStats::default())?;
            write_bundle(&bundle, format, &out)?;
            println!(
                "objective {} payment {} penetration {}",
                report.objective, report.consumer_payment, report.penetration
            );
            Ok(())
        }
    }
}

fn plan_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "plan".into());
    out.with_file_name(format!("{stem}.plan.json"))
}

fn write_bundle(
    bundle: &tepps::report::ReportBundle,
    format: OutputFormat,
    out: &Path,
) -> tepps::Result<()> {
    let fmt = match format {
        OutputFormat::Json => ReportFormat::Json,
        OutputFormat::Csv => ReportFormat::Csv,
    };
    write_report(bundle, fmt, &mut open_out(out)?)
}
