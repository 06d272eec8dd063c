//! `cosserat-shell`: validate, evaluate, solve and compare shell scenarios.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 non-convergence, 3 input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cosserat_shell::constitutive::Faults;
use cosserat_shell::io::{read_field_file, write_field_file};
use cosserat_shell::koiter::{amplitude_study, KlFixture, TrigDisplacement};
use cosserat_shell::scenario::{ChartSpec, Scenario};
use cosserat_shell::solver::{energy_report, solve, SolveError, SolveOptions, Solution};
use cosserat_shell::validation::{run_all, ValidationOptions};
use cosserat_shell::{MidsurfaceConfiguration, ShearVariant};

const EXIT_VALIDATION: u8 = 1;
const EXIT_NON_CONVERGENCE: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "cosserat-shell", version, about = "Nonlinear 6-parameter Cosserat shells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// scenario file (JSON)
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// configuration field CSV (idx,u,v,mx,my,mz,qw,qx,qy,qz)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// override the transverse-shear coefficient of the scenario
    #[arg(long, global = true)]
    variant: Option<Variant>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// seed of the validation suites
    #[arg(long, global = true, default_value_t = ValidationOptions::default().seed)]
    seed: u64,
    /// output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// deliberately corrupt the production energy path (mutation testing)
    #[arg(long, global = true, hide = true)]
    inject_fault: Option<Fault>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every invariant suite with a fixed seed.
    Validate,
    /// Energy of a configuration (the reference one without --config).
    Energy,
    /// Minimize the total energy and write the solution field and report.
    Solve,
    /// Compare the Cosserat energy with Koiter's under the Kirchhoff-Love constraint.
    KoiterCompare,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Variant {
    Harmonic,
    Arithmetic,
}

impl From<Variant> for ShearVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Harmonic => ShearVariant::Harmonic,
            Variant::Arithmetic => ShearVariant::Arithmetic,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fault {
    FlipCouplingSign,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure { code: EXIT_INPUT, message: e.to_string() }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Validate => validate(cli),
        Command::Energy => energy(cli),
        Command::Solve => solve_cmd(cli),
        Command::KoiterCompare => koiter_compare(cli),
    }
}

fn load_scenario(cli: &Cli) -> Result<Scenario, Failure> {
    let path = cli.scenario.as_ref().ok_or_else(|| input("--scenario is required"))?;
    let mut s = Scenario::load(path).map_err(input)?;
    if let Some(v) = cli.variant {
        s.variant = v.into();
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(input("--threads must be at least 1"));
        }
        s.solver.threads = Some(t);
    }
    Ok(s)
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn write_out(dir: &Path, file: &str, text: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
    let path = dir.join(file);
    fs::write(&path, text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn validate(cli: &Cli) -> Result<u8, Failure> {
    let material = match &cli.scenario {
        Some(_) => Some(load_scenario(cli)?.material),
        None => None,
    };
    let faults = Faults { flip_coupling_sign: matches!(cli.inject_fault, Some(Fault::FlipCouplingSign)) };
    let report = run_all(&ValidationOptions { seed: cli.seed, material, faults });
    print!("{}", report.table());
    let passed = report.passed();
    println!("{}", if passed { "all suites passed" } else { "validation FAILED" });
    if let Some(dir) = &cli.out {
        write_out(dir, "validation.json", &serde_json::to_string_pretty(&report).expect("serializable"))?;
    }
    Ok(if passed { 0 } else { EXIT_VALIDATION })
}

fn energy(cli: &Cli) -> Result<u8, Failure> {
    let scenario = load_scenario(cli)?;
    let built = scenario.build().map_err(input)?;
    let p = &built.problem;
    let config = match &cli.config {
        Some(path) => read_field_file(path, &p.geom.grid).map_err(input)?,
        None => MidsurfaceConfiguration::reference(&p.geom),
    };
    let ev = energy_report(p, &config).map_err(input)?;
    let b = ev.breakdown;
    let report = json!({
        "scenario": scenario.name,
        "variant": scenario.variant,
        "nodes": p.geom.grid.len(),
        "total_energy": ev.energy,
        "stored_energy": b.total,
        "external_work": ev.external_work,
        "breakdown": {
            "h_terms": b.leading,
            "h3_terms": b.higher_order,
            "curvature": b.curvature,
            "transverse_shear": b.transverse_shear,
        },
    });
    print_json(&report);
    if let Some(dir) = &cli.out {
        write_out(dir, "energy.json", &serde_json::to_string_pretty(&report).expect("serializable"))?;
    }
    Ok(0)
}

fn solve_cmd(cli: &Cli) -> Result<u8, Failure> {
    let scenario = load_scenario(cli)?;
    let built = scenario.build().map_err(input)?;
    let p = &built.problem;
    let initial = match &cli.config {
        Some(path) => Some(read_field_file(path, &p.geom.grid).map_err(input)?),
        None => None,
    };
    let options: SolveOptions = scenario.solver;
    let (solution, code): (Solution, u8) = match solve(p, initial, &options) {
        Ok(s) => (s, 0),
        Err(SolveError::NonConvergence(s)) => (*s, EXIT_NON_CONVERGENCE),
        Err(e) => return Err(input(e)),
    };
    for w in &solution.report.warnings {
        eprintln!("warning: {w}");
    }
    let report = json!({ "scenario": scenario.name, "variant": scenario.variant, "report": solution.report });
    print_json(&report);
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
        write_field_file(&dir.join("field.csv"), &solution.config).map_err(input)?;
        write_out(dir, "report.json", &serde_json::to_string_pretty(&report).expect("serializable"))?;
    }
    Ok(code)
}

fn koiter_compare(cli: &Cli) -> Result<u8, Failure> {
    let scenario = load_scenario(cli)?;
    let name = match scenario.chart {
        ChartSpec::Plate { .. } => "plate",
        ChartSpec::Cylinder { .. } => "cylinder",
        ChartSpec::SphereCap { .. } => "sphere-cap",
        ChartSpec::Sampled { .. } => {
            return Err(input("koiter-compare needs an analytic chart; sampled surfaces have no Kirchhoff-Love fixture"))
        }
    };
    let fixture =
        KlFixture { name: name.into(), chart: scenario.chart().map_err(input)?, displacement: TrigDisplacement::standard() };
    let k = &scenario.koiter;
    let study = amplitude_study(&fixture, &k.amplitudes, k.points_per_direction, &scenario.material).map_err(input)?;
    let report = json!({ "scenario": scenario.name, "study": study });
    print_json(&report);
    if let Some(dir) = &cli.out {
        write_out(dir, "koiter.json", &serde_json::to_string_pretty(&report).expect("serializable"))?;
    }
    Ok(0)
}
