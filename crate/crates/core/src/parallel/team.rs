//! A fixed team of worker threads executing barrier-separated phases.
//!
//! [`WorkerTeam::run`] hands one closure to every worker (the calling thread
//! acts as worker 0) and returns only once all of them are done, so each
//! call is one phase followed by a full synchronization point. Dispatch
//! performs no heap allocation.

use std::any::Any;
use std::panic::{self, AssertUnwindSafe};
use std::sync::{Arc, Barrier, Mutex};
use std::thread::{self, JoinHandle};

type Job = &'static (dyn Fn(usize) + Sync);

struct Shared {
    job: Mutex<Option<Job>>,
    start: Barrier,
    finish: Barrier,
    panic: Mutex<Option<Box<dyn Any + Send>>>,
}

pub struct WorkerTeam {
    size: usize,
    shared: Arc<Shared>,
    handles: Vec<JoinHandle<()>>,
    dispatch: Mutex<()>,
}

impl WorkerTeam {
    /// Spawns `size - 1` threads; `size` must be at least 1.
    pub fn new(size: usize) -> Self {
        assert!(size >= 1, "a team needs at least one worker");
        let shared = Arc::new(Shared {
            job: Mutex::new(None),
            start: Barrier::new(size),
            finish: Barrier::new(size),
            panic: Mutex::new(None),
        });
        let handles = (1..size)
            .map(|id| {
                let shared = Arc::clone(&shared);
                thread::Builder::new()
                    .name(format!("sparse-asm-{id}"))
                    .spawn(move || worker_loop(id, &shared))
                    .expect("failed to spawn worker thread")
            })
            .collect();
        Self {
            size,
            shared,
            handles,
            dispatch: Mutex::new(()),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Runs `f(k)` for every worker `k` in `0..size` and waits for all.
    ///
    /// A panic in any worker is re-raised here after the phase completes.
    pub fn run<F>(&self, f: F)
    where
        F: Fn(usize) + Sync,
    {
        if self.size == 1 {
            f(0);
            return;
        }
        let _busy = self.dispatch.lock().unwrap_or_else(|e| e.into_inner());
        let job: &(dyn Fn(usize) + Sync) = &f;
        // SAFETY: the erased reference is only dereferenced by workers between
        // the `start` and `finish` barriers below, and it is cleared before
        // this frame (which owns `f`) returns.
        let job: Job = unsafe { std::mem::transmute::<&(dyn Fn(usize) + Sync), Job>(job) };
        *self.shared.job.lock().unwrap() = Some(job);
        self.shared.start.wait();
        let own = panic::catch_unwind(AssertUnwindSafe(|| f(0)));
        self.shared.finish.wait();
        *self.shared.job.lock().unwrap() = None;

        if let Err(payload) = own {
            panic::resume_unwind(payload);
        }
        let worker_panic = self.shared.panic.lock().unwrap().take();
        if let Some(payload) = worker_panic {
            panic::resume_unwind(payload);
        }
    }
}

fn worker_loop(id: usize, shared: &Shared) {
    loop {
        shared.start.wait();
        let job = *shared.job.lock().unwrap();
        let Some(job) = job else { return };
        if let Err(payload) = panic::catch_unwind(AssertUnwindSafe(|| job(id))) {
            shared.panic.lock().unwrap().get_or_insert(payload);
        }
        shared.finish.wait();
    }
}

impl Drop for WorkerTeam {
    fn drop(&mut self) {
        if self.size > 1 {
            *self.shared.job.lock().unwrap_or_else(|e| e.into_inner()) = None;
            self.shared.start.wait();
            for h in self.handles.drain(..) {
                let _ = h.join();
            }
        }
    }
}

impl std::fmt::Debug for WorkerTeam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerTeam").field("size", &self.size).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn every_worker_runs_once_per_phase() {
        let team = WorkerTeam::new(4);
        let hits: Vec<AtomicUsize> = (0..4).map(|_| AtomicUsize::new(0)).collect();
        for _ in 0..50 {
            team.run(|k| {
                hits[k].fetch_add(1, Ordering::Relaxed);
            });
        }
        assert!(hits.iter().all(|h| h.load(Ordering::Relaxed) == 50));
    }

    #[test]
    fn phases_are_ordered() {
        let team = WorkerTeam::new(3);
        let mut data = vec![0usize; 3];
        for round in 1..=10 {
            let prev: Vec<usize> = data.clone();
            let out: Vec<Mutex<usize>> = (0..3).map(|_| Mutex::new(0)).collect();
            team.run(|k| *out[k].lock().unwrap() = prev.iter().sum::<usize>() + k);
            data = out.into_iter().map(|m| m.into_inner().unwrap()).collect();
            assert!(data.iter().all(|&v| v >= round - 1));
        }
    }

    #[test]
    fn worker_panic_propagates() {
        let team = WorkerTeam::new(3);
        let r = panic::catch_unwind(AssertUnwindSafe(|| {
            team.run(|k| {
                if k == 2 {
                    panic!("boom");
                }
            })
        }));
        assert!(r.is_err());
        // team stays usable
        let n = AtomicUsize::new(0);
        team.run(|_| {
            n.fetch_add(1, Ordering::Relaxed);
        });
        assert_eq!(n.load(Ordering::Relaxed), 3);
    }

    #[test]
    fn single_worker_runs_inline() {
        let team = WorkerTeam::new(1);
        let caller = thread::current().id();
        team.run(|k| {
            assert_eq!(k, 0);
            assert_eq!(thread::current().id(), caller);
        });
    }
}
