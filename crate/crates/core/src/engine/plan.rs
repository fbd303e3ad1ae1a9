//! Lineage nodes and the executable operators behind them.

use std::any::Any;
use std::collections::HashMap;
use std::marker::PhantomData;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::hash::{route, FnvHashMap, ShuffleKey};
use super::Data;
use crate::error::{Error, Result};

static NEXT_NODE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Source,
    Map,
    FlatMap,
    MapToPairs,
    ReduceByKey,
    Filter,
}

/// One node of a collection's lineage DAG.
///
/// Nodes are immutable and shared by every collection derived from them.
#[derive(Debug)]
pub struct PlanNode {
    id: u64,
    kind: NodeKind,
    partitions: usize,
    parents: Vec<Arc<PlanNode>>,
}

impl PlanNode {
    pub(crate) fn new(kind: NodeKind, partitions: usize, parents: Vec<Arc<PlanNode>>) -> Arc<Self> {
        debug_assert!(kind != NodeKind::Source || parents.is_empty());
        Arc::new(PlanNode {
            id: NEXT_NODE_ID.fetch_add(1, Ordering::Relaxed),
            kind,
            partitions,
            parents,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn partition_count(&self) -> usize {
        self.partitions
    }

    pub fn parents(&self) -> &[Arc<PlanNode>] {
        &self.parents
    }

    /// Node kinds from this node back to its source(s), depth first.
    pub fn lineage(&self) -> Vec<NodeKind> {
        let mut out = vec![self.kind];
        for p in &self.parents {
            out.extend(p.lineage());
        }
        out
    }
}

/// State scoped to a single action: materialized shuffle outputs.
#[derive(Default)]
pub(crate) struct Job {
    shuffles: Mutex<HashMap<u64, Arc<dyn Any + Send + Sync>>>,
}

impl Job {
    fn get(&self, id: u64) -> Option<Arc<dyn Any + Send + Sync>> {
        self.shuffles.lock().unwrap().get(&id).cloned()
    }

    fn put(&self, id: u64, v: Arc<dyn Any + Send + Sync>) {
        self.shuffles.lock().unwrap().insert(id, v);
    }
}

pub(crate) trait Exec<T>: Send + Sync {
    /// Materializes every shuffle this node depends on.
    fn prepare(&self, job: &Job) -> Result<()>;
    fn compute(&self, partition: usize, job: &Job) -> Result<Vec<T>>;
}

/// Runs `f`, turning a panic into an operator error for `partition`.
pub(crate) fn guarded<R>(partition: usize, f: impl FnOnce() -> Result<R>) -> Result<R> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(payload) => {
            let msg = if let Some(s) = payload.downcast_ref::<&str>() {
                (*s).to_string()
            } else if let Some(s) = payload.downcast_ref::<String>() {
                s.clone()
            } else {
                "operator panicked".to_string()
            };
            Err(Error::Operator {
                partition,
                record: None,
                source: msg.into(),
            })
        }
    }
}

pub(crate) struct SourceExec<T> {
    parts: Vec<Vec<T>>,
}

impl<T> SourceExec<T> {
    pub(crate) fn new(parts: Vec<Vec<T>>) -> Self {
        SourceExec { parts }
    }
}

impl<T: Data> Exec<T> for SourceExec<T> {
    fn prepare(&self, _job: &Job) -> Result<()> {
        Ok(())
    }

    fn compute(&self, partition: usize, _job: &Job) -> Result<Vec<T>> {
        Ok(self.parts[partition].clone())
    }
}

/// Partition-local operator: output partition `i` depends only on input
/// partition `i`.
pub(crate) struct NarrowExec<I, O, F> {
    parent: Arc<dyn Exec<I>>,
    f: F,
    _types: PhantomData<fn(I) -> O>,
}

impl<I, O, F> NarrowExec<I, O, F> {
    pub(crate) fn new(parent: Arc<dyn Exec<I>>, f: F) -> Self {
        NarrowExec {
            parent,
            f,
            _types: PhantomData,
        }
    }
}

impl<I, O, F> Exec<O> for NarrowExec<I, O, F>
where
    I: Data,
    O: Data,
    F: Fn(usize, Vec<I>) -> Result<Vec<O>> + Send + Sync,
{
    fn prepare(&self, job: &Job) -> Result<()> {
        self.parent.prepare(job)
    }

    fn compute(&self, partition: usize, job: &Job) -> Result<Vec<O>> {
        let input = self.parent.compute(partition, job)?;
        (self.f)(partition, input)
    }
}

/// Map-side combined values of one upstream partition for one reducer. The
/// slot is `None` only while a value is being folded.
type Combined<K, V> = FnvHashMap<K, Option<V>>;

/// Per reduce-partition inboxes, one combined map per upstream partition.
struct ShuffleOutput<K, V> {
    inboxes: Vec<Mutex<Vec<Combined<K, V>>>>,
}

/// Hash shuffle with map-side combining.
pub(crate) struct ShuffleExec<K, V, C> {
    id: u64,
    parent: Arc<dyn Exec<(K, V)>>,
    parent_partitions: usize,
    partitions: usize,
    combine: C,
}

impl<K, V, C> ShuffleExec<K, V, C> {
    pub(crate) fn new(
        id: u64,
        parent: Arc<dyn Exec<(K, V)>>,
        parent_partitions: usize,
        partitions: usize,
        combine: C,
    ) -> Self {
        ShuffleExec {
            id,
            parent,
            parent_partitions,
            partitions,
            combine,
        }
    }
}

// Values are held as `Option` so a slot can be moved out, combined, and
// refilled without a second lookup.
fn fold_into<K, V, C>(map: &mut FnvHashMap<K, Option<V>>, k: K, v: V, combine: &C)
where
    K: std::hash::Hash + Eq,
    C: Fn(V, V) -> V,
{
    let slot = map.entry(k).or_insert(None);
    *slot = Some(match slot.take() {
        Some(prev) => combine(prev, v),
        None => v,
    });
}

impl<K, V, C> Exec<(K, V)> for ShuffleExec<K, V, C>
where
    K: Data + ShuffleKey,
    V: Data,
    C: Fn(V, V) -> V + Send + Sync,
{
    fn prepare(&self, job: &Job) -> Result<()> {
        self.parent.prepare(job)?;
        if job.get(self.id).is_some() {
            return Ok(());
        }
        let n = self.partitions;
        let buckets: Vec<Result<Vec<Combined<K, V>>>> = (0..self.parent_partitions)
            .into_par_iter()
            .map(|p| {
                guarded(p, || {
                    let records = self.parent.compute(p, job)?;
                    let mut out: Vec<FnvHashMap<K, Option<V>>> = (0..n).map(|_| FnvHashMap::default()).collect();
                    let mut scratch = Vec::new();
                    for (k, v) in records {
                        let r = route(&k, n, &mut scratch);
                        fold_into(&mut out[r], k, v, &self.combine);
                    }
                    Ok(out)
                })
            })
            .collect();

        let mut inboxes: Vec<Vec<FnvHashMap<K, Option<V>>>> = (0..n).map(|_| Vec::with_capacity(buckets.len())).collect();
        for b in buckets {
            for (r, map) in b?.into_iter().enumerate() {
                inboxes[r].push(map);
            }
        }
        let output = ShuffleOutput {
            inboxes: inboxes.into_iter().map(Mutex::new).collect(),
        };
        job.put(self.id, Arc::new(output));
        Ok(())
    }

    fn compute(&self, partition: usize, job: &Job) -> Result<Vec<(K, V)>> {
        let any = job
            .get(self.id)
            .expect("shuffle output is materialized in prepare()");
        let output = any
            .downcast_ref::<ShuffleOutput<K, V>>()
            .expect("shuffle output type");
        let maps = std::mem::take(&mut *output.inboxes[partition].lock().unwrap());
        let mut maps = maps.into_iter();
        let mut merged = maps.next().unwrap_or_default();
        for m in maps {
            for (k, v) in m {
                let v = v.expect("slot refilled after combine");
                fold_into(&mut merged, k, v, &self.combine);
            }
        }
        Ok(merged
            .into_iter()
            .map(|(k, v)| (k, v.expect("slot refilled after combine")))
            .collect())
    }
}
