use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use csmd::harness::config::ConfigFile;
use csmd::harness::{run_experiment, Executor};

const CONFIG: &str = r#"
[[experiment]]
id = "bench"
problem = "flat_power8_d8"
replications = 64
t_grid = { list = [256, 1024] }
noise = { generator = "gaussian", sigma = 2.8284271247461903 }
schedule = { rule = "convex_anytime", eta = 1.0 }
"#;

fn replications(c: &mut Criterion) {
    let cfg = ConfigFile::parse(CONFIG).unwrap().experiment.remove(0);
    let mut group = c.benchmark_group("replications");
    group.sample_size(20);
    // at least two workers so the pool path runs even on one core
    let workers = std::thread::available_parallelism().map_or(2, |n| n.get().max(2));
    for (name, exec) in [("sequential", Executor::sequential()), ("parallel", Executor::new(workers))] {
        group.bench_with_input(BenchmarkId::new(name, exec.jobs()), &exec, |b, exec| {
            b.iter(|| run_experiment(&cfg, 1, 7, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, replications);
criterion_main!(benches);
