//! Runs independent work items on a pool of scoped threads. Importance
//! sampling streams carry their own seed-derived generators, so results
//! depend on the stream count and seed but not on the thread count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ccm_core::{Result, VolumeEstimate, VolumePlan};

/// `f(0), ..., f(count - 1)` computed on up to `jobs` threads, returned in
/// index order.
pub fn parallel_map<T, F>(count: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let jobs = jobs.clamp(1, count.max(1));
    if jobs == 1 {
        return (0..count).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let value = f(i);
                slots.lock().expect("no worker panicked while holding the lock")[i] = Some(value);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked while holding the lock")
        .into_iter()
        .map(|v| v.expect("every index was processed"))
        .collect()
}

pub fn run_plan(plan: VolumePlan, jobs: usize) -> Result<VolumeEstimate> {
    match plan {
        VolumePlan::Ready(v) => Ok(v),
        VolumePlan::Sample(job) => {
            let streams = job.config().workers as usize;
            let parts = parallel_map(streams, jobs, |w| job.run_worker(w as u32));
            job.finish(&parts)
        }
    }
}
