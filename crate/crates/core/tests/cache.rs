mod common;

use std::sync::Arc;

use autodse::eval::{CachedEvaluator, ResultStore};
use autodse::explore::{explore_bottleneck, Budget};
use common::*;

#[test]
fn warm_cache_replays_the_same_search_without_backend_calls() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.jsonl");
    let (ds, m) = mock(seeded_kernel(4));
    let backend = Arc::new(m);

    let cold = CachedEvaluator::new(backend.clone(), Arc::new(ResultStore::open(&path).unwrap()));
    let first = explore_bottleneck(&ds, &cold, Budget::evals(150)).unwrap();
    assert!(cold.backend_calls() > 0);

    let warm = CachedEvaluator::new(backend, Arc::new(ResultStore::open(&path).unwrap()));
    let second = explore_bottleneck(&ds, &warm, Budget::evals(150)).unwrap();
    assert_eq!(warm.backend_calls(), 0);
    assert_eq!(first.trace, second.trace);
    assert_eq!(first.best_config, second.best_config);
}

#[test]
fn torn_tail_is_dropped_and_reevaluated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.jsonl");
    let (ds, m) = mock(trap_kernel());
    let backend = Arc::new(m);
    let cold = CachedEvaluator::new(backend.clone(), Arc::new(ResultStore::open(&path).unwrap()));
    let first = explore_bottleneck(&ds, &cold, Budget::unlimited()).unwrap();
    let stored = cold.store().len();
    drop(cold);

    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() - 10]).unwrap();
    let store = ResultStore::open(&path).unwrap();
    assert_eq!(store.len(), stored - 1);

    let warm = CachedEvaluator::new(backend, Arc::new(store));
    let second = explore_bottleneck(&ds, &warm, Budget::unlimited()).unwrap();
    assert_eq!(warm.backend_calls(), 1);
    assert_eq!(first.best_config, second.best_config);
}
