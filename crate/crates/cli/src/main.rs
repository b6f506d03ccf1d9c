use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use proxlab::analysis::{default_window, fit_linear_rate, fit_power_rate};
use proxlab::experiment::{self, OUTPUT_ENV};
use proxlab::suite::{run_suite, SuiteOptions};

const EXIT_VALIDATION: u8 = 1;
const EXIT_ACCEPTANCE: u8 = 2;

#[derive(Parser)]
#[command(name = "proxlab", version, about = "Inexact first-order methods: experiments and rate checks")]
#[command(after_help = format!("Output root without an explicit output_dir: ${OUTPUT_ENV} (default ./proxlab-out)."))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Run the grid described by a config's `sweep` section.
    Sweep { config: PathBuf },
    /// Run the built-in acceptance matrix.
    Verify {
        /// Print the matrix as JSON.
        #[arg(long)]
        json: bool,
        /// Scale the proximal-gradient step to `s/L` (mutation testing).
        #[arg(long, default_value_t = 1.0)]
        step_scale: f64,
    },
    /// Summarize a trace.csv in the terminal.
    Show { trace: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run { config } => run(&config),
        Command::Sweep { config } => sweep(&config),
        Command::Verify { json, step_scale } => return verify(json, step_scale),
        Command::Show { trace } => show(&trace),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn run(config: &Path) -> Result<(), String> {
    let report = experiment::run(config).map_err(|e| e.to_string())?;
    let s = &report.summary;
    println!("wrote {}", report.output_dir.display());
    println!(
        "{} on {}: {} iterations, final objective {}, final gap {}{}",
        s.method,
        s.problem.kind.as_str(),
        s.iterations,
        opt(s.final_objective),
        opt(s.final_gap),
        if s.diverged { " (diverged)" } else { "" }
    );
    let r = &report.rate_report;
    let condition = serde_json::to_value(r.condition).ok();
    let condition = condition.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
    match (r.classification, r.rate_preserved) {
        (Some(v), Some(kept)) => println!(
            "rate vs table: {}; error condition {condition}; rate preserved: {kept}",
            v.as_str()
        ),
        _ => println!("rate: no classification; error condition {condition}"),
    }
    Ok(())
}

fn sweep(config: &Path) -> Result<(), String> {
    let report = experiment::sweep(config).map_err(|e| e.to_string())?;
    println!("wrote {} ({} cells)", report.output_dir.display(), report.cells.len());
    print!("{}", report.to_csv());
    Ok(())
}

fn verify(json: bool, step_scale: f64) -> ExitCode {
    if !(step_scale > 0.0) || !step_scale.is_finite() {
        eprintln!("error: --step-scale must be positive");
        return ExitCode::from(EXIT_VALIDATION);
    }
    let report = run_suite(SuiteOptions { step_scale });
    if json {
        match serde_json::to_string_pretty(&report) {
            Ok(s) => println!("{s}"),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_VALIDATION);
            }
        }
    } else {
        print!("{}", report.to_table());
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        for c in report.failing() {
            eprintln!("failing cell {}: {} ({})", c.id, c.status.as_str(), c.detail);
        }
        ExitCode::from(EXIT_ACCEPTANCE)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "n/a".into())
}

fn show(path: &Path) -> Result<(), String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let (Some(k_col), Some(obj_col)) = (column("k"), column("objective")) else {
        return Err(format!("{}: not a trace.csv (needs k and objective columns)", path.display()));
    };
    let gap_col = column("gap_vs_pstar");
    let mut ks = Vec::new();
    let mut objectives = Vec::new();
    let mut gaps = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let parse = |i: usize| -> Result<Option<f64>, String> {
            let cell = record.get(i).unwrap_or("");
            if cell.is_empty() {
                return Ok(None);
            }
            cell.parse::<f64>()
                .map(Some)
                .map_err(|_| format!("{}:{}: bad number '{cell}'", path.display(), line + 2))
        };
        ks.push(parse(k_col)?.unwrap_or(f64::NAN));
        objectives.push(parse(obj_col)?.unwrap_or(f64::NAN));
        if let Some(g) = gap_col {
            if let Some(v) = parse(g)? {
                gaps.push(v);
            }
        }
    }
    if objectives.is_empty() {
        return Err(format!("{}: no records", path.display()));
    }
    let last = objectives.len() - 1;
    println!("{}", path.display());
    println!("  iterations       {}", ks[last]);
    println!("  first objective  {:.6e}", objectives[0]);
    println!("  final objective  {:.6e}", objectives[last]);
    let best = objectives.iter().copied().fold(f64::INFINITY, f64::min);
    println!("  best objective   {best:.6e}");
    if gaps.len() == objectives.len() {
        println!("  final gap        {:.6e}", gaps[last]);
        let mut best_gaps = gaps.clone();
        for i in 1..best_gaps.len() {
            best_gaps[i] = best_gaps[i].min(best_gaps[i - 1]);
        }
        match default_window(&best_gaps) {
            Some(w) => {
                if let Ok(e) = fit_power_rate(&best_gaps, w) {
                    println!(
                        "  power fit        exponent {:.4} (r² {:.4}, k {}..={})",
                        e.exponent().unwrap_or(f64::NAN),
                        e.r_squared,
                        w.start,
                        w.end
                    );
                }
                if let Ok(e) = fit_linear_rate(&best_gaps, w) {
                    if let Some(r) = e.ratio() {
                        println!("  linear fit       ratio {r:.4} (r² {:.4})", e.r_squared);
                    }
                }
            }
            None => println!("  rate fit         gap at the numerical floor"),
        }
    } else {
        println!("  gap              n/a (no reference optimum in trace)");
    }
    Ok(())
}
