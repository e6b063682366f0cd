use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use factful_core::curation::{dedup_facts, run_pipeline, AnnotatedToken, CandidateFact, CurationConfig, ExternalAnnotations, Role};
use factful_core::engine::{Engine, EngineConfig};
use factful_core::sim::{run_ab, UserModel};
use factful_core::{fixtures, CuratedFact, Entity, Exec, FeatureLabels};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn random_facts(n: usize, dim: usize) -> Vec<CuratedFact> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..n)
        .map(|i| CuratedFact {
            id: format!("f{i:05}"),
            text: "a synthetic fact".into(),
            entity: Entity::ingredient("salt"),
            source_url: "https://example.org".into(),
            provider: "example.org".into(),
            labels: FeatureLabels::all(true),
            score: rng.random(),
            embedding: Some((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()),
            linked_step_ids: vec![],
            overall_interesting: None,
        })
        .collect()
}

fn dedup(c: &mut Criterion) {
    let mut g = c.benchmark_group("dedup");
    for n in [500, 2000] {
        let facts = random_facts(n, 64);
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &facts, |b, f| {
                b.iter(|| dedup_facts(black_box(f), 0.85, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let corpus = fixtures::corpus();
    let entities: Vec<Entity> = corpus
        .tasks
        .iter()
        .flat_map(|t| t.steps.iter().flat_map(|s| s.entities.clone()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let candidates: Vec<CandidateFact> = (0..4000)
        .map(|i| {
            let e = &entities[i % entities.len()];
            let text = format!("{} is used in many recipes around the world.", e.name);
            let mut toks: Vec<AnnotatedToken> =
                e.name.split(' ').map(|w| AnnotatedToken::new(w, Role::Subject)).collect();
            toks.extend("is used in many recipes around the world".split(' ').map(|w| AnnotatedToken::new(w, Role::Other)));
            CandidateFact {
                id: format!("c{i}"),
                raw_text: text,
                source_url: "https://example.org".into(),
                provider: "example.org".into(),
                token_annotations: Some(vec![toks]),
                embedding: Some((0..32).map(|_| rng.random_range(-1.0..1.0)).collect()),
                sentence_embeddings: None,
                annotator_labels: Some(FeatureLabels::all(true)),
                overall_interesting: None,
            }
        })
        .collect();
    let ext = ExternalAnnotations::default();
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = CurationConfig {
            domain_lexicon: vec!["recipes".into(), "used".into()],
            exec,
            ..CurationConfig::default()
        };
        g.bench_function(name, |b| {
            b.iter(|| run_pipeline(black_box(&candidates), &cfg, &corpus.tasks, &ext, false).unwrap())
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let engine = Engine::new(
        Arc::new(fixtures::corpus()),
        Arc::new(fixtures::fact_index()),
        EngineConfig::default(),
    )
    .unwrap();
    let model = UserModel::reference();
    let mut g = c.benchmark_group("run_ab_500");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| run_ab(&model, &engine, 500, 42, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, dedup, pipeline, simulation);
criterion_main!(benches);
