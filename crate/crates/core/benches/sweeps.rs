use bpsim::dynamics::{encircle_batch, transition_edge_sweep, Direction, ParameterTrajectory, SimConfig};
use bpsim::model::{bistable_map, fold_points, BranchLabel};
use bpsim::params::{hz, HYSTERESIS_DELTA_G};
use bpsim::{Execution, SystemParams};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn map(c: &mut Criterion) {
    let p = SystemParams::fig23();
    let dg = linspace(hz(-80e3), hz(10e3), 64);
    let ds = linspace(hz(-60e3), hz(60e3), 64);
    let mut g = c.benchmark_group("bistable_map_64x64");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| bistable_map(&p, &dg, &ds, exec)));
    }
    g.finish();
}

fn encircle(c: &mut Criterion) {
    let p = SystemParams::fig23().with_delta_g(HYSTERESIS_DELTA_G);
    let traj = ParameterTrajectory::bp_loop(HYSTERESIS_DELTA_G, hz(60e3), hz(30e3), 1e-4, Direction::Clockwise).unwrap();
    let cfgs: Vec<SimConfig> = (0..8).map(|s| SimConfig::for_params(&p).with_seed(s)).collect();
    let mut g = c.benchmark_group("encircle_8_seeds");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| encircle_batch(&p, &traj, BranchLabel::Upper, &cfgs, exec))
        });
    }
    g.finish();
}

fn edge(c: &mut Criterion) {
    let p = SystemParams::fig23().with_delta_g(HYSTERESIS_DELTA_G);
    let w = fold_points(&p).unwrap().width();
    let d = 1e-4 * w;
    let steps: Vec<f64> = [0.1, 0.2, 0.4, 0.8].iter().map(|f| d + f * w).collect();
    let mut cfg = SimConfig::for_params(&p).noiseless();
    cfg.duration = 0.01;
    let mut g = c.benchmark_group("transition_edge_4_steps");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| transition_edge_sweep(&p, d, &steps, &cfg, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, map, encircle, edge);
criterion_main!(benches);
