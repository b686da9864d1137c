use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use plstatic::analyzer::STEP_CAP;
use plstatic::global::{run_analysis, Caps, GLOBAL_CAP};
use plstatic::reader::{parse_program, Dialect};
use plstatic::report::{collect_diagnostics, compute_stats, exit_code, render_report, stats_for_path, Format};
use plstatic::specdb::load_builtin_db;

/// Static type analysis of Prolog programs annotated with plspec conditions.
#[derive(Debug, Parser)]
#[command(name = "plstatic", version)]
struct Cli {
    /// Prolog files or directories (searched recursively for `.pl` files).
    #[arg(required = true)]
    paths: Vec<PathBuf>,

    #[arg(long, default_value_t = Dialect::Swipl)]
    dialect: Dialect,

    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Extra annotation files, read as user annotations.
    #[arg(long = "annotations", value_name = "FILE")]
    annotation_files: Vec<PathBuf>,

    #[arg(long, env = "PLSTATIC_MAX_GLOBAL_ITERS", default_value_t = GLOBAL_CAP)]
    max_global_iters: usize,

    #[arg(long, env = "PLSTATIC_MAX_LOCAL_STEPS", default_value_t = STEP_CAP)]
    max_local_steps: usize,

    /// Print variable and unknown-call statistics, one row per path.
    #[arg(long)]
    stats: bool,

    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("plstatic: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, String> {
    let program = parse_program(&cli.paths, cli.dialect);
    let mut db = load_builtin_db(cli.dialect).map_err(|e| e.to_string())?;
    db.load_annotation_files(&cli.annotation_files).map_err(|e| e.to_string())?;
    db.load_program(&program);
    let caps = Caps {
        global_iters: cli.max_global_iters.max(1),
        local_steps: cli.max_local_steps.max(1),
    };
    let analysis = run_analysis(&program, db, caps);
    log::info!(
        "{} clauses, {} global iterations{}",
        analysis.results.len(),
        analysis.iterations,
        if analysis.converged { "" } else { " (not converged)" }
    );
    let diags = collect_diagnostics(&program, &analysis);

    let defs = &analysis.db.typedefs;
    let total = compute_stats(&analysis.results, defs);
    let names: Vec<String> = cli.paths.iter().map(|p| p.display().to_string()).collect();
    let mut rows = Vec::new();
    if cli.stats && cli.paths.len() > 1 {
        for (p, name) in cli.paths.iter().zip(&names) {
            rows.push((Some(name.as_str()), stats_for_path(&analysis.results, p, defs)));
        }
    }
    if cli.stats || cli.format == Format::Json {
        rows.push((None, total));
    }

    let report = render_report(&diags, &rows, cli.format, &analysis.db);
    if cli.format == Format::Annotations {
        for d in &diags {
            eprintln!("{d}");
        }
    }
    match &cli.output {
        Some(path) => std::fs::write(path, report).map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(report.as_bytes()).map_err(|e| format!("cannot write report: {e}"))?;
        }
    }
    if !program.errors.is_empty() {
        return Ok(2);
    }
    Ok(exit_code(&diags) as u8)
}
