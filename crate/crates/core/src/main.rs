//! Command-line front end: model analysis, trajectory simulation, group
//! divisibility queries and the gallery of ready-made instances.
//!
//! Exit codes: 0 for a determinate verdict, 3 when the analysis reaches no
//! verdict, 1 for input or schema errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semiconv::analysis::VerdictEngine;
use semiconv::model::{self, GroupClassSpec, ModelFile};
use semiconv::report::{AnalysisReport, Conclusion};

#[derive(Parser)]
#[command(
    name = "semiconv",
    about = "Convergence analysis for positive operator semigroups on finite lattice models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a model file and emit the verdict report
    Analyze(AnalyzeArgs),
    /// Simulate the net on a probe vector and emit a trajectory CSV
    Simulate(SimulateArgs),
    /// Decide divisibility of a rational group class given as JSON
    Divisibility(DivisibilityArgs),
    /// Write a ready-made gallery model file
    Gallery(GalleryArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// model file path
    path: PathBuf,
    /// write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = ["json", "text"], default_value = "text")]
    format: String,
    /// residual tolerance of the simulation cross-check
    #[arg(long)]
    tol: Option<f64>,
    /// net horizon (round-robin steps or largest continuous time)
    #[arg(long)]
    horizon: Option<usize>,
    /// search depth over sums of generators
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    path: PathBuf,
    /// probe vector: `e<i>`, `ones` or `uniform`
    #[arg(long, default_value = "e0")]
    probe: String,
    #[arg(long)]
    horizon: Option<usize>,
    /// write the CSV here instead of stdout
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DivisibilityArgs {
    /// group class as JSON, e.g. {"type":"prime-localized","primes":[2]}
    group: String,
    #[arg(long, value_parser = ["json", "text"], default_value = "text")]
    format: String,
}

#[derive(Args)]
struct GalleryArgs {
    /// one of: irreducible-ctmc, dyadic-counterexample, jump-flow, gaussian,
    /// am-space-dual
    name: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// write every gallery model into a directory
    #[arg(long)]
    all: bool,
    #[arg(long, default_value = ".")]
    dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Simulate(args) => simulate(args),
        Command::Divisibility(args) => divisibility(args),
        Command::Gallery(args) => gallery(args),
    }
}

fn load_model(path: &PathBuf) -> Result<ModelFile, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    ModelFile::from_json(&text).map_err(|e| e.to_string())
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode, String> {
    let model = load_model(&args.path)?;
    let mut built = model.build().map_err(|e| e.to_string())?;
    if let Some(tol) = args.tol {
        built.options.tol = tol;
    }
    if let Some(h) = args.horizon {
        built.options.horizon = h;
    }
    if let Some(d) = args.depth {
        built.options.depth = d;
    }
    let engine = VerdictEngine::new(built.options.clone());
    let report = engine.run(&built.representation).map_err(|e| e.to_string())?;

    let rendered = match args.format.as_str() {
        "json" => report.to_canonical_json(),
        _ => render_text(&report),
    };
    match &args.output {
        Some(path) => {
            // stored reports are always canonical JSON; text is for stdout
            let payload =
                if args.format == "json" { rendered } else { report.to_canonical_json() };
            fs::write(path, payload).map_err(|e| format!("cannot write report: {e}"))?;
            if args.format == "text" {
                println!("{}", render_text(&report));
            }
        }
        None => print!("{rendered}"),
    }
    Ok(match report.conclusion {
        Conclusion::NoVerdict => ExitCode::from(3),
        _ => ExitCode::SUCCESS,
    })
}

fn render_text(report: &AnalysisReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "space: {} atoms, p = {}, {}\n",
        report.space.dimension,
        report.space.exponent,
        if report.space.pure_atomic { "pure atomic" } else { "grid model" }
    ));
    out.push_str("hypotheses:\n");
    for h in &report.hypotheses {
        out.push_str(&format!("  {:<28} {:?}\n", h.name, h.status));
    }
    out.push_str("verdicts:\n");
    for v in &report.verdicts {
        let tag = if v.applicable { v.conclusion.as_str() } else { "not applicable" };
        out.push_str(&format!("  {:<32} {tag}\n", v.rule));
    }
    if !report.eigenvalues.is_empty() {
        let nontrivial = report.eigenvalues.iter().filter(|e| !e.trivial).count();
        out.push_str(&format!(
            "unimodular eigenvalue tuples: {} ({} nontrivial)\n",
            report.eigenvalues.len(),
            nontrivial
        ));
    }
    if let Some(sim) = &report.simulation {
        out.push_str(&format!(
            "simulation: {} probes, residual {:.3e}{}, cross-check {}\n",
            sim.probes,
            sim.achieved_residual,
            sim.time_to_tolerance
                .map(|t| format!(" at t = {t}"))
                .unwrap_or_default(),
            sim.cross_check
        ));
    }
    out.push_str(&format!("conclusion: {}\n", report.conclusion.as_str()));
    out
}

fn simulate(args: SimulateArgs) -> Result<ExitCode, String> {
    let model = load_model(&args.path)?;
    let built = model.build().map_err(|e| e.to_string())?;
    let horizon = args.horizon.unwrap_or(built.options.horizon);
    let csv = model::simulate_csv(&built, &args.probe, horizon).map_err(|e| e.to_string())?;
    match &args.csv {
        Some(path) => fs::write(path, csv).map_err(|e| format!("cannot write CSV: {e}"))?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn divisibility(args: DivisibilityArgs) -> Result<ExitCode, String> {
    let spec: GroupClassSpec =
        serde_json::from_str(&args.group).map_err(|e| format!("malformed group JSON: {e}"))?;
    let class = spec.to_class().map_err(|e| e.to_string())?;
    let payload = model::divisibility_report(&class);
    if args.format == "json" {
        println!("{}", semiconv::report::canonical_json(&payload));
        return Ok(ExitCode::SUCCESS);
    }
    if payload["divisible"].as_bool() == Some(true) {
        println!("divisible");
    } else {
        let witness = payload["witness_prime"].as_u64().unwrap_or(0);
        let mut line = format!("not divisible; witness {witness}");
        if let Some(g) = payload["cyclic_generator"].as_str() {
            line.push_str(&format!("; cyclic generator {g}"));
        }
        let table: Vec<String> = payload["quotient_table"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|row| {
                format!("{} -> {}", row["element"].as_str().unwrap_or("?"), row["image"])
            })
            .collect();
        if !table.is_empty() {
            line.push_str(&format!("; quotient map mod {witness}: {}", table.join(", ")));
        }
        println!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}

fn gallery(args: GalleryArgs) -> Result<ExitCode, String> {
    if args.all {
        for name in model::GALLERY_NAMES {
            let file = model::gallery(name).map_err(|e| e.to_string())?;
            let path = args.dir.join(format!("{name}.json"));
            fs::write(&path, file.to_json())
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            println!("wrote {}", path.display());
        }
        return Ok(ExitCode::SUCCESS);
    }
    let Some(name) = &args.name else {
        return Err("gallery needs a name or --all".into());
    };
    let file = model::gallery(name).map_err(|e| e.to_string())?;
    match &args.output {
        Some(path) => {
            fs::write(path, file.to_json())
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        }
        None => print!("{}", file.to_json()),
    }
    Ok(ExitCode::SUCCESS)
}
