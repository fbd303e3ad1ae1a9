//! Lazy, immutable, partitioned record collections.
//!
//! Transformations build a lineage of [`PlanNode`]s and never touch records.
//! Actions prepare any shuffles the plan needs, then compute every partition
//! of the final stage on the context's worker pool and assemble the result
//! on the calling thread.

mod context;
pub mod hash;
mod plan;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use context::JobContext;
pub use hash::ShuffleKey;
pub use plan::{NodeKind, PlanNode};

use crate::error::{Error, OperatorError, Result};
use crate::sink::{Document, DocumentSink};
use plan::{guarded, Exec, Job, NarrowExec, ShuffleExec};

/// Anything that can live in a collection.
pub trait Data: Clone + Send + Sync + 'static {}
impl<T: Clone + Send + Sync + 'static> Data for T {}

pub struct RecordCollection<T> {
    ctx: JobContext,
    node: Arc<PlanNode>,
    exec: Arc<dyn Exec<T>>,
}

impl<T> Clone for RecordCollection<T> {
    fn clone(&self) -> Self {
        RecordCollection {
            ctx: self.ctx.clone(),
            node: self.node.clone(),
            exec: self.exec.clone(),
        }
    }
}

impl<T> std::fmt::Debug for RecordCollection<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RecordCollection")
            .field("partitions", &self.node.partition_count())
            .field("lineage", &self.node.lineage())
            .finish()
    }
}

/// Result of [`RecordCollection::write_to_sink`].
#[derive(Debug, Clone, PartialEq)]
pub struct WriteReport {
    pub document_count: u64,
    pub part_files: Vec<String>,
    /// Plan execution, sink excluded.
    pub compute_duration: Duration,
    /// Sink I/O only.
    pub write_duration: Duration,
}

impl<T: Data> RecordCollection<T> {
    pub(crate) fn from_parts(ctx: JobContext, node: Arc<PlanNode>, exec: Arc<dyn Exec<T>>) -> Self {
        RecordCollection { ctx, node, exec }
    }

    pub fn context(&self) -> &JobContext {
        &self.ctx
    }

    pub fn plan(&self) -> &Arc<PlanNode> {
        &self.node
    }

    pub fn partition_count(&self) -> usize {
        self.node.partition_count()
    }

    fn narrow<O, F>(&self, kind: NodeKind, f: F) -> RecordCollection<O>
    where
        O: Data,
        F: Fn(usize, Vec<T>) -> Result<Vec<O>> + Send + Sync + 'static,
    {
        let node = PlanNode::new(kind, self.partition_count(), vec![self.node.clone()]);
        RecordCollection {
            ctx: self.ctx.clone(),
            node,
            exec: Arc::new(NarrowExec::new(self.exec.clone(), f)),
        }
    }

    pub fn map<U, F>(&self, f: F) -> RecordCollection<U>
    where
        U: Data,
        F: Fn(T) -> U + Send + Sync + 'static,
    {
        self.narrow(NodeKind::Map, move |_, v| Ok(v.into_iter().map(&f).collect()))
    }

    /// Like [`map`](Self::map), but `f` may fail. Failures surface at action
    /// time carrying the partition index and the record's ordinal within it.
    pub fn try_map<U, E, F>(&self, f: F) -> RecordCollection<U>
    where
        U: Data,
        E: Into<OperatorError>,
        F: Fn(T) -> std::result::Result<U, E> + Send + Sync + 'static,
    {
        self.narrow(NodeKind::Map, move |partition, v| {
            v.into_iter()
                .enumerate()
                .map(|(i, x)| {
                    f(x).map_err(|e| Error::Operator {
                        partition,
                        record: Some(i),
                        source: e.into(),
                    })
                })
                .collect()
        })
    }

    pub fn flat_map<U, I, F>(&self, f: F) -> RecordCollection<U>
    where
        U: Data,
        I: IntoIterator<Item = U>,
        F: Fn(T) -> I + Send + Sync + 'static,
    {
        self.narrow(NodeKind::FlatMap, move |_, v| Ok(v.into_iter().flat_map(&f).collect()))
    }

    /// Fallible [`flat_map`](Self::flat_map).
    pub fn try_flat_map<U, I, E, F>(&self, f: F) -> RecordCollection<U>
    where
        U: Data,
        I: IntoIterator<Item = U>,
        E: Into<OperatorError>,
        F: Fn(T) -> std::result::Result<I, E> + Send + Sync + 'static,
    {
        self.narrow(NodeKind::FlatMap, move |partition, v| {
            let mut out = Vec::with_capacity(v.len());
            for (i, x) in v.into_iter().enumerate() {
                let items = f(x).map_err(|e| Error::Operator {
                    partition,
                    record: Some(i),
                    source: e.into(),
                })?;
                out.extend(items);
            }
            Ok(out)
        })
    }

    pub fn filter<F>(&self, f: F) -> RecordCollection<T>
    where
        F: Fn(&T) -> bool + Send + Sync + 'static,
    {
        self.narrow(NodeKind::Filter, move |_, v| Ok(v.into_iter().filter(|x| f(x)).collect()))
    }

    pub fn map_to_pairs<K, V, F>(&self, f: F) -> RecordCollection<(K, V)>
    where
        K: Data + ShuffleKey,
        V: Data,
        F: Fn(T) -> (K, V) + Send + Sync + 'static,
    {
        self.narrow(NodeKind::MapToPairs, move |_, v| Ok(v.into_iter().map(&f).collect()))
    }

    fn run_job(&self) -> Result<Vec<Vec<T>>> {
        let job = Job::default();
        let exec = &self.exec;
        self.ctx.install(|| {
            exec.prepare(&job)?;
            (0..self.partition_count())
                .into_par_iter()
                .map(|p| guarded(p, || exec.compute(p, &job)))
                .collect::<Vec<_>>()
                .into_iter()
                .collect()
        })
    }

    /// Executes the plan and returns each partition's records.
    pub fn collect_partitions(&self) -> Result<Vec<Vec<T>>> {
        self.run_job()
    }

    /// Executes the plan; records come back in partition-index order.
    ///
    /// The whole result is held in memory.
    pub fn collect(&self) -> Result<Vec<T>> {
        Ok(self.run_job()?.into_iter().flatten().collect())
    }

    pub fn count(&self) -> Result<u64> {
        let job = Job::default();
        let exec = &self.exec;
        self.ctx.install(|| {
            exec.prepare(&job)?;
            (0..self.partition_count())
                .into_par_iter()
                .map(|p| guarded(p, || exec.compute(p, &job)).map(|v| v.len() as u64))
                .collect::<Vec<_>>()
                .into_iter()
                .sum()
        })
    }
}

impl<K, V> RecordCollection<(K, V)>
where
    K: Data + ShuffleKey,
    V: Data,
{
    /// Folds all values of each key with `combine`, routing key `k` to
    /// partition `fnv1a64(canonical(k)) mod partitions`.
    ///
    /// `combine` must be associative and commutative. Order of pairs inside
    /// an output partition is unspecified but reproducible.
    pub fn reduce_by_key<C>(&self, combine: C, partitions: usize) -> Result<RecordCollection<(K, V)>>
    where
        C: Fn(V, V) -> V + Send + Sync + 'static,
    {
        if partitions == 0 {
            return Err(Error::InvalidArgument("partitions must be >= 1".into()));
        }
        let node = PlanNode::new(NodeKind::ReduceByKey, partitions, vec![self.node.clone()]);
        let exec = ShuffleExec::new(
            node.id(),
            self.exec.clone(),
            self.partition_count(),
            partitions,
            combine,
        );
        Ok(RecordCollection {
            ctx: self.ctx.clone(),
            node,
            exec: Arc::new(exec),
        })
    }
}

impl RecordCollection<Document> {
    /// Executes the plan and persists partition `i` as part `i`.
    pub fn write_to_sink(&self, sink: &DocumentSink) -> Result<WriteReport> {
        self.write_to_sink_from(sink, 0)
    }

    /// Same as [`write_to_sink`](Self::write_to_sink), numbering parts from
    /// `first_part`. Used when one collection is written in several rounds.
    pub fn write_to_sink_from(&self, sink: &DocumentSink, first_part: usize) -> Result<WriteReport> {
        let started = Instant::now();
        let parts = self.run_job()?;
        let compute_duration = started.elapsed();

        let started = Instant::now();
        let written: Vec<Result<String>> = self.ctx.install(|| {
            parts
                .par_iter()
                .enumerate()
                .map(|(i, docs)| sink.write_partition(first_part + i, docs))
                .collect()
        });
        let part_files = written.into_iter().collect::<Result<Vec<_>>>()?;
        let write_duration = started.elapsed();

        Ok(WriteReport {
            document_count: parts.iter().map(|p| p.len() as u64).sum(),
            part_files,
            compute_duration,
            write_duration,
        })
    }
}
