//! One replication of the threshold autoscaling policy.
//!
//! Every job, busy server and instance in setup carries its own exponential
//! clock; the future event list is a binary heap. Timers that become moot
//! (a deadline of a job that entered service, a cancelled setup) stay in the
//! heap and are discarded when they surface.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::params::ModelParams;

/// Events as they appear in a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Arrive,
    Block,
    ServeStart,
    Depart,
    Abandon,
    SetupStart,
    SetupDone,
    SetupCancel,
    PowerDown,
}

impl TraceEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceEvent::Arrive => "arrive",
            TraceEvent::Block => "block",
            TraceEvent::ServeStart => "serve_start",
            TraceEvent::Depart => "depart",
            TraceEvent::Abandon => "abandon",
            TraceEvent::SetupStart => "setup_start",
            TraceEvent::SetupDone => "setup_done",
            TraceEvent::SetupCancel => "setup_cancel",
            TraceEvent::PowerDown => "power_down",
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// System state right after an event was applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub event: TraceEvent,
    /// Active instances (the level).
    pub active: usize,
    pub in_setup: usize,
    pub jobs: usize,
    pub busy: usize,
}

pub trait Tracer {
    fn record(&mut self, snap: &Snapshot);
}

/// Discards everything.
impl Tracer for () {
    #[inline]
    fn record(&mut self, _: &Snapshot) {}
}

impl<F: FnMut(&Snapshot)> Tracer for F {
    fn record(&mut self, snap: &Snapshot) {
        self(snap)
    }
}

/// Raw accumulators of one replication over the measurement window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReplicationStats {
    pub measured_time: f64,
    pub area_jobs: f64,
    pub area_waiting: f64,
    pub area_instances: f64,
    /// Arrivals after warmup, including blocked ones.
    pub arrivals: u64,
    pub blocked: u64,
    pub abandoned: u64,
    pub served: u64,
    /// Jobs that arrived after warmup and are still present at the horizon.
    pub in_system: u64,
    pub wait_sum: f64,
    pub wait_count: u64,
}

impl ReplicationStats {
    pub fn mean_jobs(&self) -> f64 {
        self.area_jobs / self.measured_time
    }

    pub fn mean_waiting(&self) -> f64 {
        self.area_waiting / self.measured_time
    }

    pub fn mean_instances(&self) -> f64 {
        self.area_instances / self.measured_time
    }

    pub fn blocking(&self) -> f64 {
        ratio(self.blocked, self.arrivals)
    }

    pub fn dropping(&self) -> f64 {
        ratio(self.abandoned, self.arrivals - self.blocked)
    }

    /// `E[L] / (lambda (1 - P_b)) - 1/mu` from the measured quantities.
    pub fn queue_wait_little(&self, m: &ModelParams) -> f64 {
        let accepted = m.lambda * (1.0 - self.blocking());
        if accepted > 0.0 {
            self.mean_jobs() / accepted - 1.0 / m.mu
        } else {
            0.0
        }
    }

    /// Mean wait of jobs that started service.
    pub fn queue_wait_direct(&self) -> f64 {
        if self.wait_count == 0 {
            0.0
        } else {
            self.wait_sum / self.wait_count as f64
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Priority at equal timestamps; lower fires first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Departure,
    Abandon,
    SetupDone,
    Arrival,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Arrival,
    Departure { arrived: f64 },
    Abandon { job: u64 },
    SetupDone { setup: u64 },
}

impl Event {
    fn class(&self) -> Class {
        match self {
            Event::Arrival => Class::Arrival,
            Event::Departure { .. } => Class::Departure,
            Event::Abandon { .. } => Class::Abandon,
            Event::SetupDone { .. } => Class::SetupDone,
        }
    }
}

struct Scheduled {
    time: f64,
    class: Class,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.class.cmp(&self.class))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Waiting {
    id: u64,
    arrived: f64,
}

/// Random stream of replication `rep` under `master_seed`. Streams are
/// independent of each other and of the order in which they are run.
pub fn replication_rng(master_seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(rep);
    rng
}

struct Engine<'a, T: Tracer> {
    m: &'a ModelParams,
    warmup: f64,
    horizon: f64,
    rng: ChaCha8Rng,
    tracer: &'a mut T,

    now: f64,
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    next_id: u64,

    jobs: usize,
    busy: usize,
    active: usize,
    queue: VecDeque<Waiting>,
    /// Instances in setup, most recent last.
    setups: Vec<u64>,

    stats: ReplicationStats,
}

impl<'a, T: Tracer> Engine<'a, T> {
    fn exp(&mut self, rate: f64) -> f64 {
        let e: f64 = self.rng.sample(Exp1);
        e / rate
    }

    fn schedule(&mut self, delay: f64, event: Event) {
        self.seq += 1;
        self.heap.push(Scheduled {
            time: self.now + delay,
            class: event.class(),
            seq: self.seq,
            event,
        });
    }

    fn fresh_id(&mut self) -> u64 {
        self.next_id += 1;
        self.next_id
    }

    fn trace(&mut self, event: TraceEvent) {
        let snap = Snapshot {
            time: self.now,
            event,
            active: self.active,
            in_setup: self.setups.len(),
            jobs: self.jobs,
            busy: self.busy,
        };
        debug_assert!(snap.active <= self.m.k);
        debug_assert!(snap.in_setup <= self.m.k - snap.active);
        debug_assert_eq!(snap.busy, snap.jobs.min(self.m.n0 + snap.active));
        self.tracer.record(&snap);
    }

    fn capacity(&self) -> usize {
        self.m.n0 + self.active
    }

    fn advance(&mut self, to: f64) {
        let lo = self.now.max(self.warmup);
        let hi = to.min(self.horizon);
        if hi > lo {
            let dt = hi - lo;
            self.stats.area_jobs += dt * self.jobs as f64;
            self.stats.area_waiting += dt * self.queue.len() as f64;
            self.stats.area_instances += dt * (self.active + self.setups.len()) as f64;
        }
        self.now = to;
    }

    fn start_service(&mut self, arrived: f64) {
        self.busy += 1;
        if arrived >= self.warmup {
            self.stats.wait_sum += self.now - arrived;
            self.stats.wait_count += 1;
        }
        let d = self.exp(self.m.mu);
        self.schedule(d, Event::Departure { arrived });
    }

    /// Brings the number of setups to `min(jobs - servers, k - active)`,
    /// cancelling the newest setups first.
    fn retarget_setups(&mut self) {
        let target = self
            .jobs
            .saturating_sub(self.capacity())
            .min(self.m.k - self.active);
        while self.setups.len() > target {
            self.setups.pop();
            self.trace(TraceEvent::SetupCancel);
        }
        while self.setups.len() < target {
            let id = self.fresh_id();
            self.setups.push(id);
            let d = self.exp(self.m.alpha);
            self.schedule(d, Event::SetupDone { setup: id });
            self.trace(TraceEvent::SetupStart);
        }
    }

    fn on_arrival(&mut self) {
        let d = self.exp(self.m.lambda);
        self.schedule(d, Event::Arrival);
        let counted = self.now >= self.warmup;
        if counted {
            self.stats.arrivals += 1;
        }
        if self.jobs == self.m.capacity {
            if counted {
                self.stats.blocked += 1;
            }
            self.trace(TraceEvent::Block);
            return;
        }
        self.jobs += 1;
        if counted {
            self.stats.in_system += 1;
        }
        if self.busy < self.capacity() {
            self.start_service(self.now);
            self.trace(TraceEvent::Arrive);
            self.trace(TraceEvent::ServeStart);
        } else {
            self.trace(TraceEvent::Arrive);
            let id = self.fresh_id();
            self.queue.push_back(Waiting {
                id,
                arrived: self.now,
            });
            if self.m.theta > 0.0 {
                let d = self.exp(self.m.theta);
                self.schedule(d, Event::Abandon { job: id });
            }
        }
        self.retarget_setups();
    }

    fn on_departure(&mut self, arrived: f64) {
        self.jobs -= 1;
        self.busy -= 1;
        if arrived >= self.warmup {
            self.stats.served += 1;
            self.stats.in_system -= 1;
        }
        if let Some(next) = self.queue.pop_front() {
            self.start_service(next.arrived);
            self.trace(TraceEvent::Depart);
            self.trace(TraceEvent::ServeStart);
        } else {
            self.trace(TraceEvent::Depart);
        }
        if self.active > 0 && self.jobs < self.capacity() {
            self.active -= 1;
            self.trace(TraceEvent::PowerDown);
        }
        self.retarget_setups();
    }

    fn on_abandon(&mut self, job: u64) {
        let Some(pos) = self.queue.iter().position(|w| w.id == job) else {
            return;
        };
        let w = self.queue.remove(pos).expect("position is valid");
        self.jobs -= 1;
        if w.arrived >= self.warmup {
            self.stats.abandoned += 1;
            self.stats.in_system -= 1;
        }
        self.trace(TraceEvent::Abandon);
        self.retarget_setups();
    }

    fn on_setup_done(&mut self, setup: u64) {
        let Some(pos) = self.setups.iter().position(|&s| s == setup) else {
            return;
        };
        self.setups.remove(pos);
        self.active += 1;
        // setups only run while jobs wait, so the new instance has work
        let next = self.queue.pop_front();
        if let Some(w) = &next {
            self.start_service(w.arrived);
        }
        self.trace(TraceEvent::SetupDone);
        if next.is_some() {
            self.trace(TraceEvent::ServeStart);
        }
        self.retarget_setups();
    }

    fn run(mut self) -> ReplicationStats {
        if self.m.lambda > 0.0 {
            let d = self.exp(self.m.lambda);
            self.schedule(d, Event::Arrival);
        }
        while let Some(next) = self.heap.pop() {
            if next.time > self.horizon {
                break;
            }
            self.advance(next.time);
            match next.event {
                Event::Arrival => self.on_arrival(),
                Event::Departure { arrived } => self.on_departure(arrived),
                Event::Abandon { job } => self.on_abandon(job),
                Event::SetupDone { setup } => self.on_setup_done(setup),
            }
        }
        self.advance(self.horizon);
        self.stats.measured_time = self.horizon - self.warmup;
        self.stats
    }
}

/// Runs one replication. Parameters are assumed validated.
pub fn run_replication<T: Tracer>(
    m: &ModelParams,
    warmup: f64,
    horizon: f64,
    rng: ChaCha8Rng,
    tracer: &mut T,
) -> ReplicationStats {
    Engine {
        m,
        warmup,
        horizon,
        rng,
        tracer,
        now: 0.0,
        heap: BinaryHeap::new(),
        seq: 0,
        next_id: 0,
        jobs: 0,
        busy: 0,
        active: 0,
        queue: VecDeque::new(),
        setups: Vec::new(),
        stats: ReplicationStats::default(),
    }
    .run()
}
