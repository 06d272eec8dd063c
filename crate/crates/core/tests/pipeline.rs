//! End-to-end checks: scenario files, solver, field and surface files.

use std::path::PathBuf;

use cosserat_shell::geometry::SampledSurface;
use cosserat_shell::io::{read_field_file, write_field_file, write_surface};
use cosserat_shell::scenario::{ChartSpec, LoadSpecFile, Scenario};
use cosserat_shell::solver::{energy_report, solve, total_energy, SolveOptions};
use cosserat_shell::{ParameterDomain, Parametrization};

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn bundled(name: &str) -> Scenario {
    Scenario::load(&scenario_dir().join(name)).expect("bundled scenario")
}

fn tight() -> SolveOptions {
    SolveOptions { tol: Some(1e-13), max_iter: 20_000, ..SolveOptions::default() }
}

#[test]
fn every_bundled_scenario_loads_builds_and_round_trips() {
    let mut count = 0;
    for entry in std::fs::read_dir(scenario_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let s = Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        s.build().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let back = Scenario::from_json(&s.to_json(), "round trip").unwrap();
        assert_eq!(back, s, "{}", path.display());
        count += 1;
    }
    assert!(count >= 5);
}

/// Small loads: linear response, so stored energy is half the work of the loads.
#[test]
fn clapeyron_balance_at_small_load() {
    let mut s = bundled("clamped-plate.json").with_grid(9, 9);
    s.loads = LoadSpecFile::Uniform { force: [0.0, 0.0, 1e-4], couple: [0.0; 3] };
    let p = s.build().unwrap().problem;
    let sol = solve(&p, None, &tight()).unwrap();
    let ev = energy_report(&p, &sol.config).unwrap();
    let stored = ev.breakdown.total;
    let work = ev.external_work;
    assert!(work > 0.0);
    let rel = (stored - 0.5 * work).abs() / stored;
    assert!(rel < 1e-3, "stored {stored:e}, work {work:e}, rel {rel:e}");
}

#[test]
fn clamped_plate_solution_is_mirror_symmetric() {
    let s = bundled("clamped-plate.json").with_grid(11, 11);
    let p = s.build().unwrap().problem;
    let opts = SolveOptions { tol: Some(1e-11), ..tight() };
    let sol = solve(&p, None, &opts).unwrap();
    let grid = p.geom.grid;
    let n = grid.n_u;
    let disp: Vec<_> = sol.config.positions.iter().zip(&p.geom.positions).map(|(m, y)| m - y).collect();
    let scale = disp.iter().map(|d| d.norm()).fold(0.0, f64::max);
    assert!(scale > 0.0);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let a = disp[grid.index(i, j)];
            let b = disp[grid.index(n - 1 - i, j)];
            // reflection x -> 1 - x flips the x component
            worst = worst.max((a.x + b.x).abs()).max((a.y - b.y).abs()).max((a.z - b.z).abs());
            let c = disp[grid.index(j, i)];
            worst = worst.max((a.x - c.y).abs()).max((a.z - c.z).abs());
        }
    }
    assert!(worst < 1e-6 * scale, "asymmetry {worst:e} vs {scale:e}");
}

/// A sampled copy of the cylinder on the same lattice must give the same problem.
#[test]
fn sampled_cylinder_matches_analytic_chart() {
    let analytic = bundled("cylinder.json").with_grid(9, 9);
    let chart = analytic.chart().unwrap();
    let ChartSpec::Cylinder { domain, .. } = analytic.chart.clone() else { panic!("cylinder expected") };
    let (n_u, n_v) = (analytic.grid.n_u, analytic.grid.n_v);
    let mut points = Vec::new();
    for j in 0..n_v {
        for i in 0..n_u {
            let u = domain.u.0 + (domain.u.1 - domain.u.0) * i as f64 / (n_u - 1) as f64;
            let v = domain.v.0 + (domain.v.1 - domain.v.0) * j as f64 / (n_v - 1) as f64;
            points.push(chart.position(u, v).unwrap());
        }
    }
    let surface = SampledSurface::new(n_u, n_v, ParameterDomain::new(domain.u, domain.v).unwrap(), points).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cylinder.csv");
    write_surface(std::fs::File::create(&csv).unwrap(), &surface).unwrap();
    let mut sampled = analytic.clone();
    sampled.chart = ChartSpec::Sampled { path: csv };

    let a = analytic.build().unwrap().problem;
    let b = sampled.build().unwrap().problem;
    let opts = SolveOptions::default();
    let ea = solve(&a, None, &opts).unwrap().report.final_energy;
    let eb = solve(&b, None, &opts).unwrap().report.final_energy;
    assert!((ea - eb).abs() <= 1e-9 * ea.abs(), "{ea:e} vs {eb:e}");
}

#[test]
fn solution_field_survives_a_file_round_trip() {
    let s = bundled("cylinder.json").with_grid(9, 9);
    let p = s.build().unwrap().problem;
    let sol = solve(&p, None, &SolveOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.csv");
    write_field_file(&path, &sol.config).unwrap();
    let back = read_field_file(&path, &p.geom.grid).unwrap();
    assert_eq!(back.positions, sol.config.positions);
    assert_eq!(total_energy(&p, &back).unwrap(), total_energy(&p, &sol.config).unwrap());

    // warm start from the converged field needs no further iterations
    let again = solve(&p, Some(back), &SolveOptions::default()).unwrap();
    assert_eq!(again.report.iterations, 0);
}

#[test]
fn unloaded_scenario_stays_in_the_reference_configuration() {
    let p = bundled("clamped-plate-unloaded.json").build().unwrap().problem;
    let sol = solve(&p, None, &SolveOptions::default()).unwrap();
    assert_eq!(sol.report.final_energy, 0.0);
    assert_eq!(sol.config.positions, p.geom.positions);
}
