//! Sequential against rayon on the data-parallel paths: loading a dataset
//! and ranking candidates for every example.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use light_core::agents::{IrRanker, TfIdf};
use light_core::data::load_dataset;
use light_core::episode::{make_examples, ExampleOptions, TaskKind};
use light_core::eval::{eval_speech, speech_pool};
use light_core::exec::Exec;
use light_core::fixtures::dataset_dir;
use light_core::synth::synthetic_corpus;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn load(c: &mut Criterion) {
    let manifest = dataset_dir().join("manifest.json");
    let mut g = c.benchmark_group("load_dataset");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| load_dataset(&manifest, exec).unwrap()));
    }
    g.finish();
}

fn rank(c: &mut Criterion) {
    let corpus = synthetic_corpus(3, 400);
    let examples = make_examples(&corpus, TaskKind::Speech, ExampleOptions::default());
    let pool = speech_pool(&examples);
    let ranker = IrRanker::new(TfIdf::fit(pool.iter().map(String::as_str)).unwrap());
    let mut g = c.benchmark_group("eval_speech_ir");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, examples.len()), &exec, |b, &exec| {
            b.iter(|| eval_speech(&ranker, &examples, &pool, 0, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, load, rank);
criterion_main!(benches);
