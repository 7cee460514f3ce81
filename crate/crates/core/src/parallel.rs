//! Trial-parallel execution with a scheduling-independent contract: work is
//! identified by trial index, results are collected into index order, and the
//! reduction the caller performs over the returned vector is therefore
//! independent of the worker count.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "MPSPECTRA_THREADS";

/// Worker count: `MPSPECTRA_THREADS` if set (must parse as a positive
/// integer), otherwise the machine's available parallelism.
pub fn configured_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(text) => match text.parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {text:?}"
            ))),
        },
        Err(std::env::VarError::NotPresent) => Ok(std::thread::available_parallelism()
            .map(usize::from)
            .unwrap_or(1)),
        Err(e) => Err(Error::Config(format!("{THREADS_ENV}: {e}"))),
    }
}

/// Runs `f(0), ..., f(count-1)` across `threads` workers and returns the
/// results ordered by index. The first error in index order wins.
pub fn map_ordered_with_threads<T, F>(count: u64, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    assert!(threads > 0);
    let slots: Mutex<Vec<Option<Result<T>>>> =
        Mutex::new((0..count).map(|_| None).collect());
    let next = AtomicU64::new(0);
    let workers = threads.min(count.max(1) as usize);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let out = f(i);
                slots.lock().expect("worker panicked").as_mut_slice()[i as usize] = Some(out);
            });
        }
    });
    let slots = slots.into_inner().expect("worker panicked");
    let mut results = Vec::with_capacity(count as usize);
    for (i, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(Ok(v)) => results.push(v),
            Some(Err(e)) => return Err(e),
            None => panic!("trial {i} was never executed"),
        }
    }
    Ok(results)
}

/// [`map_ordered_with_threads`] with the configured worker count.
pub fn map_ordered<T, F>(count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    map_ordered_with_threads(count, configured_threads()?, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_are_in_index_order() {
        for threads in [1, 2, 4] {
            let out = map_ordered_with_threads(37, threads, |i| Ok(i * i)).unwrap();
            assert_eq!(out, (0..37).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn first_error_in_index_order_wins() {
        let out = map_ordered_with_threads::<u64, _>(16, 4, |i| {
            if i % 5 == 3 {
                Err(Error::Domain(format!("trial {i}")))
            } else {
                Ok(i)
            }
        });
        match out {
            Err(Error::Domain(msg)) => assert_eq!(msg, "trial 3"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_count_is_fine() {
        let out = map_ordered_with_threads(0, 2, |_| Ok(())).unwrap();
        assert!(out.is_empty());
    }
}
