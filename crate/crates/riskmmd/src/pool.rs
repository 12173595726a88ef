//! Work pool with in-order delivery.

use std::collections::BTreeMap;
use std::sync::mpsc;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Worker count: the explicit value, else all available cores.
pub fn resolve_threads(threads: Option<usize>) -> usize {
    threads
        .filter(|t| *t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `work` over `items` on `threads` workers and hands each result to
/// `sink` in item order, as soon as all earlier results are in.
///
/// Results do not depend on the thread count, only on the items. A `sink`
/// error stops delivery; cells already running still finish.
pub fn run_ordered<T, R, W, S>(threads: usize, items: &[T], work: W, mut sink: S) -> Result<()>
where
    T: Sync,
    R: Send,
    W: Fn(&T) -> R + Sync,
    S: FnMut(usize, R) -> Result<()>,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Pool(e.to_string()))?;
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel();
        let work = &work;
        scope.spawn(move || {
            pool.install(|| {
                items
                    .par_iter()
                    .enumerate()
                    .for_each_with(tx, |tx, (i, item)| {
                        // a closed channel means the sink gave up
                        let _ = tx.send((i, work(item)));
                    })
            })
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (i, r) in rx {
            pending.insert(i, r);
            while let Some(r) = pending.remove(&next) {
                sink(next, r)?;
                next += 1;
            }
        }
        Ok(())
    })
}
