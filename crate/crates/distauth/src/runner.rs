//! Parallel trial execution.
//!
//! Trials are cut into fixed-size blocks that workers claim from a shared
//! counter. Each block yields integer H1 counts, and counts are summed per
//! (SNR point, occupant), so the result never depends on the worker count
//! or on scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use distauth_core::channel::Occupant;
use distauth_core::simkit::{DetectionCurve, Simulator};
use distauth_core::Result;

const BLOCK: u64 = 256;

struct Job {
    snr_idx: usize,
    occupant: Occupant,
    start: u64,
    end: u64,
}

fn jobs(points: usize, trials: u64) -> Vec<Job> {
    let mut out = Vec::new();
    for snr_idx in 0..points {
        for occupant in [Occupant::Eve, Occupant::Alice] {
            let mut start = 0;
            while start < trials {
                let end = (start + BLOCK).min(trials);
                out.push(Job {
                    snr_idx,
                    occupant,
                    start,
                    end,
                });
                start = end;
            }
        }
    }
    out
}

/// Estimates every curve of the simulator's scenario on `workers` threads.
/// Either all curves are returned or the first failing block's error.
pub fn estimate_parallel(sim: &Simulator, workers: usize) -> Result<Vec<DetectionCurve>> {
    let points = sim.scenario().snr_grid_db.len();
    let jobs = jobs(points, sim.scenario().trials);
    let results: Mutex<Vec<Option<Result<Vec<u64>>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = workers.clamp(1, jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = sim.count_h1(job.snr_idx, job.occupant, job.start..job.end);
                let failed = r.is_err();
                results.lock().expect("result table poisoned")[i] = Some(r);
                if failed {
                    next.store(jobs.len(), Ordering::Relaxed);
                    break;
                }
            });
        }
    });

    let n_curves = sim.curves().len();
    let mut det = vec![vec![0u64; n_curves]; points];
    let mut fa = vec![vec![0u64; n_curves]; points];
    for (job, r) in jobs.iter().zip(results.into_inner().expect("result table poisoned")) {
        let Some(r) = r else { continue };
        let counts = r?;
        let table = match job.occupant {
            Occupant::Eve => &mut det,
            Occupant::Alice => &mut fa,
        };
        for (acc, c) in table[job.snr_idx].iter_mut().zip(counts) {
            *acc += c;
        }
    }
    Ok(sim.assemble(&det, &fa))
}
