//! Training, pool prediction and one experiment step, timed on a one-thread
//! pool and on the default pool. Built without the `parallel` feature only
//! the sequential fallback is timed.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mdal::active_loop::{run_with, CommitteeSetting, ExperimentData, RunSpec, StepBudget};
use mdal::corpus::{generate_synthetic, split_pool_dev, MentionLevel, SynthSpec};
use mdal::features::FeatureView;
use mdal::maxent::TrainConfig;
use mdal::scoring::{Metric, ScoringPolicy};

fn corpora() -> (mdal::corpus::Corpus, mdal::corpus::Corpus) {
    let spec = SynthSpec {
        sentences: 1500,
        docs: 40,
        ..SynthSpec::default()
    };
    let c = generate_synthetic(&spec, 7)
        .unwrap()
        .retain_levels(&[MentionLevel::Nam, MentionLevel::Nom]);
    split_pool_dev(&c, 0.27, 0).unwrap()
}

type Runner = Box<dyn Fn(&mut (dyn FnMut() + Send))>;

fn modes() -> Vec<(&'static str, Runner)> {
    #[cfg(feature = "parallel")]
    {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let all = rayon::ThreadPoolBuilder::new().build().unwrap();
        vec![
            ("sequential", Box::new(move |f: &mut (dyn FnMut() + Send)| one.install(f))),
            ("parallel", Box::new(move |f: &mut (dyn FnMut() + Send)| all.install(f))),
        ]
    }
    #[cfg(not(feature = "parallel"))]
    {
        vec![("sequential", Box::new(|f: &mut (dyn FnMut() + Send)| f()))]
    }
}

fn bench(c: &mut Criterion) {
    let (pool, dev) = corpora();
    let data = ExperimentData::new(&pool, &dev).unwrap();
    let cfg = TrainConfig::default();
    let ids: Vec<usize> = pool.sentences().iter().map(|s| s.id).collect();
    let model = data.train(FeatureView::Full, &ids, &cfg).unwrap();

    let mut group = c.benchmark_group("mdal");
    group.sample_size(10);
    for (name, run) in modes() {
        group.bench_function(BenchmarkId::new("train_full_pool", name), |b| {
            b.iter(|| run(&mut || {
                black_box(data.train(FeatureView::Full, &ids, &cfg).unwrap());
            }))
        });
        group.bench_function(BenchmarkId::new("predict_pool", name), |b| {
            b.iter(|| run(&mut || {
                black_box(data.predict_pool(&model, &ids));
            }))
        });
        let spec = RunSpec {
            setting: CommitteeSetting::FeatureDifferent,
            policy: ScoringPolicy::new(Metric::ConfSum),
            budget: StepBudget {
                seed_words: 2000,
                step_words: 2000,
                num_steps: 1,
            },
            train: cfg,
            seed: 1,
        };
        group.bench_function(BenchmarkId::new("experiment_step", name), |b| {
            b.iter(|| run(&mut || {
                black_box(run_with(&data, &spec).unwrap());
            }))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
