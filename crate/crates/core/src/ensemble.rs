//! Label bookkeeping shared by both jump engines.
//!
//! Every ensemble member owns a ChaCha8 stream selected by its index, so a
//! run is reproducible from `(seed, member)` alone and independent of how the
//! members are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Members simulated per work item.
pub(crate) const CHUNK: usize = 256;

pub fn member_rng(seed: u64, member: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member as u64);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnsembleConfig {
    pub trajectories: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEvent {
    pub trajectory: usize,
    /// Grid step at whose start the jump was drawn; the new label holds from `step + 1`.
    pub step: usize,
    pub t: f64,
    pub from: usize,
    pub to: usize,
    pub channel: usize,
}

/// Label occupation counts at every grid step plus the jump log.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    members: usize,
    labels: usize,
    t0: f64,
    dt: f64,
    counts: Vec<u32>,
    events: Vec<JumpEvent>,
}

impl Ensemble {
    pub(crate) fn new(
        members: usize,
        labels: usize,
        t0: f64,
        dt: f64,
        counts: Vec<u32>,
        mut events: Vec<JumpEvent>,
    ) -> Self {
        debug_assert_eq!(counts.len() % labels, 0);
        events.sort_by_key(|e| (e.trajectory, e.step));
        Ensemble {
            members,
            labels,
            t0,
            dt,
            counts,
            events,
        }
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    /// Number of grid steps recorded.
    pub fn len(&self) -> usize {
        self.counts.len() / self.labels
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn count(&self, n: usize, label: usize) -> u32 {
        self.counts[n * self.labels + label]
    }

    /// `w_m(t) = #(m)/M`.
    pub fn weight(&self, n: usize, label: usize) -> f64 {
        self.count(n, label) as f64 / self.members as f64
    }

    pub fn events(&self) -> &[JumpEvent] {
        &self.events
    }

    /// Time of each member's first jump, `None` if it never jumped.
    pub fn first_jump_times(&self) -> Vec<Option<f64>> {
        let mut first = vec![None; self.members];
        for e in &self.events {
            first[e.trajectory].get_or_insert(e.t);
        }
        first
    }
}

/// Per-step label counts accumulated by one work item.
pub(crate) struct Tally {
    pub labels: usize,
    pub counts: Vec<u32>,
    pub events: Vec<JumpEvent>,
}

impl Tally {
    pub fn new(steps: usize, labels: usize) -> Self {
        Tally {
            labels,
            counts: vec![0; steps * labels],
            events: Vec::new(),
        }
    }

    pub fn record(&mut self, n: usize, label: usize) {
        self.counts[n * self.labels + label] += 1;
    }

    /// Fold tallies in the order given; integer sums make the result order-independent anyway.
    pub fn merge(parts: Vec<Tally>, steps: usize, labels: usize) -> Tally {
        let mut total = Tally::new(steps, labels);
        for part in parts {
            for (acc, c) in total.counts.iter_mut().zip(&part.counts) {
                *acc += c;
            }
            total.events.extend(part.events);
        }
        total
    }
}

/// Run `f` over member chunks, in parallel when enabled, returning results in chunk order.
pub(crate) fn map_chunks<T: Send>(
    members: usize,
    f: impl Fn(std::ops::Range<usize>) -> T + Sync + Send,
) -> Vec<T> {
    let ranges: Vec<_> = (0..members)
        .step_by(CHUNK)
        .map(|lo| lo..(lo + CHUNK).min(members))
        .collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ranges.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ranges.into_iter().map(f).collect()
    }
}
