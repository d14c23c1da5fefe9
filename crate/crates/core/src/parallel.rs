//! Worker-count switch for the block-parallel stages.
//!
//! Tasks always write to disjoint, pre-ordered output slots, so results are
//! bitwise identical for every thread count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use rayon::ThreadPool;

/// 0 means "all available cores" (rayon's global pool).
static THREADS: AtomicUsize = AtomicUsize::new(0);
static POOL: Mutex<Option<(usize, Arc<ThreadPool>)>> = Mutex::new(None);

/// Sets the worker count used by block-parallel stages. `1` forces
/// single-threaded execution, `0` uses every available core.
pub fn set_threads(n: usize) {
    THREADS.store(n, Ordering::SeqCst);
}

/// Configured worker count (0 = all cores).
pub fn threads() -> usize {
    THREADS.load(Ordering::SeqCst)
}

/// Number of workers a parallel stage will actually use.
pub fn effective_threads() -> usize {
    match threads() {
        0 => rayon::current_num_threads(),
        n => n,
    }
}

/// Runs `f` with the worker count set to `n`, restoring the previous value.
pub fn with_threads<R>(n: usize, f: impl FnOnce() -> R) -> R {
    let previous = THREADS.swap(n, Ordering::SeqCst);
    let out = f();
    THREADS.store(previous, Ordering::SeqCst);
    out
}

fn pool(n: usize) -> Option<Arc<ThreadPool>> {
    let mut guard = POOL.lock().unwrap_or_else(|e| e.into_inner());
    match guard.as_ref() {
        Some((size, pool)) if *size == n => Some(Arc::clone(pool)),
        _ => {
            let pool = Arc::new(rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()?);
            *guard = Some((n, Arc::clone(&pool)));
            Some(pool)
        }
    }
}

/// Maps `f` over `items`, in parallel unless single-threaded mode is set.
/// Output order always matches input order.
pub(crate) fn map_tasks<I, R, F>(items: &[I], f: F) -> Vec<R>
where
    I: Sync,
    R: Send,
    F: Fn(&I) -> R + Sync + Send,
{
    if items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match threads() {
        1 => items.iter().map(f).collect(),
        0 => items.par_iter().map(f).collect(),
        n => match pool(n) {
            Some(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            None => items.iter().map(f).collect(),
        },
    }
}
