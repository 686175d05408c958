use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use horton::par::{map_replicates, map_replicates_sequential};
use horton::stats::Generator;
use horton::tree::assign_horton_strahler;

fn counts(g: Generator, n: usize, r: u64) -> Vec<u64> {
    let tree = g.replicate(n, 7, r).unwrap();
    assign_horton_strahler(&tree).unwrap().branch_counts
}

fn replicates(c: &mut Criterion) {
    let mut group = c.benchmark_group("branch_counts_64_reps");
    group.sample_size(10);
    for (name, g) in [("kingman", Generator::Kingman), ("whitenoise", "whitenoise".parse().unwrap())] {
        for n in [1 << 10, 1 << 14] {
            group.bench_with_input(BenchmarkId::new(format!("{name}/parallel"), n), &n, |b, &n| {
                b.iter(|| map_replicates(64, |r| counts(g, n, r)))
            });
            group.bench_with_input(BenchmarkId::new(format!("{name}/sequential"), n), &n, |b, &n| {
                b.iter(|| map_replicates_sequential(64, |r| counts(g, n, r)))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, replicates);
criterion_main!(benches);
