//! Sequential vs. parallel execution of ingest, indexing and query batches on
//! a synthetic dialogue. Build with `--no-default-features` to confirm both
//! modes collapse to the same sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use memir::compiler::{compile, CompileProviders};
use memir::harness::eval::standard_variants;
use memir::harness::synthetic::{generate_history, sample_queries};
use memir::harness::PipelineProfile;
use memir::providers::{HashingEmbedder, ProviderSet};
use memir::retrieval::build_indexes;
use memir::{Engine, ExecMode, MemoryStore};

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn compile_store(turns: usize, mode: ExecMode) -> MemoryStore {
    let p = PipelineProfile::locomo_default();
    let providers = ProviderSet::reference(p.retrieval.dense_dim);
    let cp = CompileProviders { cue_extractor: providers.cue_extractor.as_ref(), claim_writer: providers.claim_writer.as_ref() };
    compile(&generate_history(turns, 1), cp, &p.compile, mode).expect("compile").0
}

fn ingest(c: &mut Criterion) {
    let mut g = c.benchmark_group("ingest");
    g.sample_size(10);
    for turns in [500, 2000] {
        for (name, mode) in MODES {
            g.bench_with_input(BenchmarkId::new(name, turns), &turns, |b, &t| b.iter(|| compile_store(t, mode)));
        }
    }
    g.finish();
}

fn index(c: &mut Criterion) {
    let store = compile_store(2000, ExecMode::Parallel);
    let p = PipelineProfile::locomo_default();
    let emb = HashingEmbedder::new(p.retrieval.dense_dim);
    let mut g = c.benchmark_group("build_indexes");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_function(name, |b| b.iter(|| build_indexes(&store, &emb, &p.retrieval, mode).expect("indexes")));
    }
    g.finish();
}

fn queries(c: &mut Criterion) {
    let store = compile_store(2000, ExecMode::Parallel);
    let p = PipelineProfile::locomo_default();
    let qs = sample_queries(16, 1);
    let mut g = c.benchmark_group("query_batch_16");
    g.sample_size(10);
    for (name, mode) in MODES {
        let engine = Engine::new(&store, ProviderSet::reference(p.retrieval.dense_dim), p.engine_config(mode)).expect("engine");
        g.bench_function(name, |b| {
            b.iter(|| qs.iter().map(|q| engine.query(q).expect("query").interface.records.len()).sum::<usize>())
        });
    }
    g.finish();
}

fn eval_suite(c: &mut Criterion) {
    let store = compile_store(500, ExecMode::Parallel);
    let p = PipelineProfile::locomo_default();
    let qs: Vec<memir::harness::EvalQuery> = sample_queries(24, 2)
        .into_iter()
        .enumerate()
        .map(|(i, q)| memir::harness::EvalQuery { id: format!("q{i:02}"), question: q, gold_claim_ids: vec![], category: String::new() })
        .collect();
    let variants = standard_variants();
    let mut g = c.benchmark_group("eval_5_variants");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| memir::harness::evaluate(&store, &qs, &p, &variants, || ProviderSet::reference(1024), mode).expect("eval"))
        });
    }
    g.finish();
}

criterion_group!(benches, ingest, index, queries, eval_suite);
criterion_main!(benches);
