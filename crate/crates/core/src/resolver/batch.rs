//! Concurrent batch resolution with a bounded worker window and a shared
//! query budget.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::{
    resolve_domain_outcome, Answer, Backend, NsRecordSet, QueryError, RecordType, ResolutionStatus, ResolverPolicy,
};
use crate::domain::DomainName;

/// Spaces queries at least `1 / rate` apart across all threads, so that at
/// most `rate * T + 1` queries start within any run of length `T`.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(queries_per_second: f64) -> Self {
        RateLimiter { interval: Duration::from_secs_f64(1.0 / queries_per_second), next_slot: Mutex::new(None) }
    }

    /// Blocks until the caller may issue one query.
    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next_slot.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            *next = Some(slot + self.interval);
            slot - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

struct Throttled {
    inner: Arc<dyn Backend>,
    limiter: Arc<RateLimiter>,
}

impl Backend for Throttled {
    fn query(&self, name: &str, rtype: RecordType, timeout: Duration) -> Result<Answer, QueryError> {
        self.limiter.acquire();
        self.inner.query(name, rtype, timeout)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Progress {
    pub total: usize,
    pub done: usize,
    pub ok: usize,
    pub failed: usize,
}

pub trait ProgressSink: Send {
    fn update(&mut self, progress: &Progress);
}

impl<F: FnMut(&Progress) + Send> ProgressSink for F {
    fn update(&mut self, progress: &Progress) {
        self(progress)
    }
}

/// One finished domain with its position in the input list.
#[derive(Debug, Clone)]
pub struct BatchItem {
    pub index: usize,
    pub records: NsRecordSet,
}

/// The batch stopped because no upstream answered for a sustained streak.
/// `completed` lists every domain already handed to the consumer, which is
/// the checkpoint a resumed run can skip.
#[derive(Debug, Clone, Error)]
#[error("resolution aborted after {} of {} domains: {reason}", completed.len(), completed.len() + pending)]
pub struct BatchAborted {
    pub completed: Vec<DomainName>,
    pub pending: usize,
    pub reason: String,
}

struct Message {
    index: usize,
    records: NsRecordSet,
    unreachable: bool,
}

pub struct BatchStream<'a> {
    domains: Arc<Vec<DomainName>>,
    rx: Option<Receiver<Message>>,
    workers: Vec<JoinHandle<()>>,
    stop: Arc<AtomicBool>,
    sink: Box<dyn ProgressSink + 'a>,
    progress: Progress,
    completed: Vec<DomainName>,
    streak: usize,
    streak_started: Option<Instant>,
    abort_after_domains: usize,
    abort_after: Duration,
    finished: bool,
}

/// Resolves every domain, at most `policy.max_in_flight` at a time and at no
/// more than `policy.queries_per_second` queries overall.
///
/// Items arrive in completion order and carry their input index. Each input
/// domain yields exactly one item unless the batch aborts, in which case the
/// stream ends with a single `Err(BatchAborted)`.
pub fn resolve_batch<'a>(
    domains: Vec<DomainName>,
    policy: &ResolverPolicy,
    backend: Arc<dyn Backend>,
    sink: impl ProgressSink + 'a,
) -> BatchStream<'a> {
    let domains = Arc::new(domains);
    let total = domains.len();
    let (tx, rx) = mpsc::channel();
    let stop = Arc::new(AtomicBool::new(false));
    let next = Arc::new(AtomicUsize::new(0));
    let backend: Arc<dyn Backend> =
        Arc::new(Throttled { inner: backend, limiter: Arc::new(RateLimiter::new(policy.queries_per_second)) });

    let workers = (0..policy.max_in_flight.max(1).min(total))
        .map(|_| {
            let (domains, tx, stop, next, backend) =
                (Arc::clone(&domains), tx.clone(), Arc::clone(&stop), Arc::clone(&next), Arc::clone(&backend));
            let policy = policy.clone();
            std::thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    let index = next.fetch_add(1, Ordering::Relaxed);
                    let Some(domain) = domains.get(index) else { break };
                    let outcome = resolve_domain_outcome(domain, &policy, backend.as_ref());
                    let msg = Message { index, records: outcome.records, unreachable: outcome.unreachable };
                    if tx.send(msg).is_err() {
                        break;
                    }
                }
            })
        })
        .collect();

    BatchStream {
        domains,
        rx: Some(rx),
        workers,
        stop,
        sink: Box::new(sink),
        progress: Progress { total, ..Progress::default() },
        completed: Vec::new(),
        streak: 0,
        streak_started: None,
        abort_after_domains: policy.abort_after_domains.max(1),
        abort_after: policy.abort_after,
        finished: false,
    }
}

impl BatchStream<'_> {
    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        self.rx = None;
        for handle in self.workers.drain(..) {
            let _ = handle.join();
        }
    }

    /// Drains the stream into input order.
    pub fn collect_ordered(mut self) -> Result<Vec<NsRecordSet>, BatchAborted> {
        let mut slots: Vec<Option<NsRecordSet>> = vec![None; self.domains.len()];
        for item in &mut self {
            let item = item?;
            slots[item.index] = Some(item.records);
        }
        Ok(slots.into_iter().flatten().collect())
    }
}

impl Iterator for BatchStream<'_> {
    type Item = Result<BatchItem, BatchAborted>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        let Some(msg) = self.rx.as_ref().and_then(|rx| rx.recv().ok()) else {
            self.finished = true;
            self.shutdown();
            return None;
        };

        if msg.unreachable {
            self.streak += 1;
            let started = *self.streak_started.get_or_insert_with(Instant::now);
            if self.streak >= self.abort_after_domains || started.elapsed() >= self.abort_after {
                self.finished = true;
                self.shutdown();
                let reason = format!(
                    "{} consecutive domains found no reachable upstream ({})",
                    self.streak,
                    msg.records.error_detail.as_deref().unwrap_or("unreachable")
                );
                return Some(Err(BatchAborted {
                    pending: self.domains.len() - self.completed.len(),
                    completed: std::mem::take(&mut self.completed),
                    reason,
                }));
            }
        } else {
            self.streak = 0;
            self.streak_started = None;
        }

        self.completed.push(msg.records.domain.clone());
        self.progress.done += 1;
        if msg.records.status == ResolutionStatus::Ok {
            self.progress.ok += 1;
        } else {
            self.progress.failed += 1;
        }
        self.sink.update(&self.progress);
        Some(Ok(BatchItem { index: msg.index, records: msg.records }))
    }
}

impl Drop for BatchStream<'_> {
    fn drop(&mut self) {
        self.shutdown();
    }
}
