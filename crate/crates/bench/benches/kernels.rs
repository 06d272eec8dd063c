use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use cosserat_shell::constitutive::{stress_resultants, w_shell};
use cosserat_shell::kinematics::shell_strains;
use cosserat_shell::solver::{energy_gradient, solve, total_energy, SolveOptions};
use cosserat_shell_bench::{deformed_cylinder, loaded_plate};

fn pointwise(c: &mut Criterion) {
    let (p, config) = deformed_cylinder(9);
    let strains = shell_strains(&p.geom, &config).unwrap();
    let k = p.geom.grid.index(4, 4);
    let (s, frame) = (strains[k], &p.geom.frames[k]);
    c.bench_function("w_shell", |b| {
        b.iter(|| w_shell(black_box(&s.e), black_box(&s.k), frame, &p.material, p.variant).unwrap())
    });
    c.bench_function("stress_resultants", |b| {
        b.iter(|| stress_resultants(black_box(&s.e), black_box(&s.k), frame, &p.material, p.variant).unwrap())
    });
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for n in [17, 33] {
        let (p, config) = deformed_cylinder(n);
        group.bench_with_input(BenchmarkId::new("shell_strains", n), &n, |b, _| {
            b.iter(|| shell_strains(&p.geom, black_box(&config)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("total_energy", n), &n, |b, _| {
            b.iter(|| total_energy(&p, black_box(&config)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("energy_gradient", n), &n, |b, _| {
            b.iter(|| energy_gradient(&p, black_box(&config)).unwrap())
        });
    }
    group.finish();
}

fn solver(c: &mut Criterion) {
    let p = loaded_plate(9);
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    group.bench_function("clamped_plate_9", |b| b.iter(|| solve(&p, None, &SolveOptions::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, pointwise, assembly, solver);
criterion_main!(benches);
