use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use dampwave::functionals::compute_g;
use dampwave::hypergeom::hyp2f1_value;
use dampwave::wavesolver::{run_level, step, RadialField};
use dampwave::{HypergeomParams, ModelParams, ProblemClass, SolverSettings, TestFunctionFamily};

fn model() -> ModelParams {
    ModelParams::bump(ProblemClass::new(2, 0.5, 2.5).unwrap(), 1.0, 0.5, 1.0, 1.0)
}

fn hypergeometric(c: &mut Criterion) {
    let p = HypergeomParams::new(0.6, 0.5, 1.0);
    c.bench_function("hyp2f1 z=0.3", |b| b.iter(|| hyp2f1_value(&p, black_box(0.3)).unwrap()));
    c.bench_function("hyp2f1 z=0.9", |b| b.iter(|| hyp2f1_value(&p, black_box(0.9)).unwrap()));
}

fn solver(c: &mut Criterion) {
    let mp = model();
    let st = SolverSettings {
        t_max: 2.0,
        snapshot_every: 1,
        ..Default::default()
    };
    let grid = st.grid_for(&mp);
    let run = run_level(&mp, grid, &st, None, None).unwrap();
    let pad = |v: &[f64]| {
        let mut out = v.to_vec();
        out.resize(grid.n_points, 0.0);
        out
    };
    let s = &run.snapshots;
    let field = RadialField {
        t: s[1].t,
        dt: s[1].t - s[0].t,
        values: pad(&s[1].values),
        prev_values: pad(&s[0].values),
    };
    c.bench_function("leapfrog step", |b| {
        b.iter(|| step(black_box(&field), &mp, &grid, field.dt).unwrap())
    });
    let short = SolverSettings {
        t_max: 1.0,
        ..Default::default()
    };
    c.bench_function("run_level T=1", |b| {
        b.iter(|| run_level(&mp, short.grid_for(&mp), &short, None, None).unwrap())
    });
    let fam = TestFunctionFamily::new(1.2, 0.5, 2).unwrap();
    c.bench_function("compute_g", |b| {
        b.iter(|| compute_g(&run.snapshots, grid.dr, &fam, 2.5).unwrap())
    });
}

criterion_group!(benches, hypergeometric, solver);
criterion_main!(benches);
