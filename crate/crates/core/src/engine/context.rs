use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::{ThreadPool, ThreadPoolBuilder};

use super::plan::{NodeKind, PlanNode, SourceExec};
use super::{Data, RecordCollection};
use crate::error::{Error, Result};

/// Owns the worker pool that executes partitions.
///
/// Cloning is cheap and shares the pool. The time spent bringing the pool up
/// is measured once and reported as [`JobContext::startup_duration`].
#[derive(Clone)]
pub struct JobContext {
    inner: Arc<ContextInner>,
}

struct ContextInner {
    pool: ThreadPool,
    worker_count: usize,
    default_partition_count: usize,
    startup: Duration,
}

impl JobContext {
    /// Context with `worker_count` workers and as many default partitions.
    pub fn new(worker_count: usize) -> Result<Self> {
        Self::with_partitions(worker_count, worker_count)
    }

    pub fn with_partitions(worker_count: usize, default_partition_count: usize) -> Result<Self> {
        if worker_count == 0 {
            return Err(Error::InvalidArgument("worker_count must be >= 1".into()));
        }
        if default_partition_count == 0 {
            return Err(Error::InvalidArgument(
                "default_partition_count must be >= 1".into(),
            ));
        }
        let started = Instant::now();
        let pool = ThreadPoolBuilder::new()
            .num_threads(worker_count)
            .thread_name(|i| format!("minireduce-worker-{i}"))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
        // Every worker must be up before the startup span closes.
        pool.broadcast(|_| ());
        let startup = started.elapsed();
        Ok(JobContext {
            inner: Arc::new(ContextInner {
                pool,
                worker_count,
                default_partition_count,
                startup,
            }),
        })
    }

    pub fn worker_count(&self) -> usize {
        self.inner.worker_count
    }

    pub fn default_partition_count(&self) -> usize {
        self.inner.default_partition_count
    }

    pub fn startup_duration(&self) -> Duration {
        self.inner.startup
    }

    pub(crate) fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.inner.pool.install(f)
    }

    /// Distributes `items` over exactly `partitions` contiguous partitions.
    ///
    /// The first `len % partitions` partitions receive one extra record, and
    /// concatenating partitions in index order gives back `items`.
    pub fn parallelize<T: Data>(&self, items: Vec<T>, partitions: usize) -> Result<RecordCollection<T>> {
        if partitions == 0 {
            return Err(Error::InvalidArgument("partitions must be >= 1".into()));
        }
        let parts = split_even(items, partitions);
        let node = PlanNode::new(NodeKind::Source, partitions, Vec::new());
        Ok(RecordCollection::from_parts(
            self.clone(),
            node,
            Arc::new(SourceExec::new(parts)),
        ))
    }

    /// One record per line of a UTF-8 text file, terminators stripped.
    pub fn read_text_lines(&self, path: impl AsRef<Path>, partitions: usize) -> Result<RecordCollection<String>> {
        let path = path.as_ref();
        if partitions == 0 {
            return Err(Error::InvalidArgument("partitions must be >= 1".into()));
        }
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8(bytes).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            offset: e.utf8_error().valid_up_to() as u64,
        })?;
        let lines: Vec<String> = text.lines().map(str::to_owned).collect();
        self.parallelize(lines, partitions)
    }
}

impl std::fmt::Debug for JobContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JobContext")
            .field("worker_count", &self.inner.worker_count)
            .field("default_partition_count", &self.inner.default_partition_count)
            .field("startup", &self.inner.startup)
            .finish()
    }
}

pub(crate) fn split_even<T>(items: Vec<T>, partitions: usize) -> Vec<Vec<T>> {
    let base = items.len() / partitions;
    let extra = items.len() % partitions;
    let mut iter = items.into_iter();
    (0..partitions)
        .map(|i| {
            let n = base + usize::from(i < extra);
            iter.by_ref().take(n).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_rule() {
        let parts = split_even(vec!['a', 'b', 'c', 'd', 'e'], 2);
        assert_eq!(parts, vec![vec!['a', 'b', 'c'], vec!['d', 'e']]);
        let parts = split_even(Vec::<u8>::new(), 3);
        assert_eq!(parts, vec![Vec::<u8>::new(), vec![], vec![]]);
        let parts = split_even(vec![1, 2], 4);
        assert_eq!(parts, vec![vec![1], vec![2], vec![], vec![]]);
    }

    #[test]
    fn rejects_zero_workers() {
        assert!(matches!(JobContext::new(0), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            JobContext::with_partitions(2, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn startup_is_fixed() {
        let ctx = JobContext::new(2).unwrap();
        let a = ctx.startup_duration();
        let _ = ctx.parallelize(vec![1, 2, 3], 2).unwrap().count().unwrap();
        assert_eq!(a, ctx.startup_duration());
    }
}
