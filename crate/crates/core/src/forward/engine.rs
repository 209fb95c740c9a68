//! Competing exponential clocks for the particle process.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Exp1;

use crate::math;
use crate::measure::{self, EventKind};
use crate::model::ModelSpec;

/// One exponential clock. Independent channels (`y == 0`) tick at a rate
/// proportional to the number of individuals (pairs, for coalescence) at the
/// source; coordinated channels tick at the Poissonized atom rate and draw a
/// binomial number of participants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub kind: EventKind,
    pub source: usize,
    pub target: usize,
    pub y: f64,
    /// Mass at zero for independent channels, clock rate for coordinated ones.
    pub weight: f64,
    /// Mass of the underlying atom.
    pub mass: f64,
}

impl Channel {
    pub fn is_independent(&self) -> bool {
        self.y == 0.0
    }

    /// Clock rate when the source holds `n` individuals. Coordinated clocks are
    /// switched off while no draw could change the state.
    pub fn rate(&self, n: u64) -> f64 {
        if self.is_independent() {
            match self.kind {
                EventKind::Coalescence => math::pairs(n) * self.weight,
                _ => n as f64 * self.weight,
            }
        } else if n >= self.kind.min_participants() {
            self.weight
        } else {
            0.0
        }
    }
}

/// Binary tree of partial sums over channel rates. Every update recomputes the
/// ancestors from their children, so rounding never accumulates.
#[derive(Debug, Clone)]
pub(crate) struct SumTree {
    size: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub(crate) fn new(n: usize) -> Self {
        let size = n.max(1).next_power_of_two();
        SumTree {
            size,
            nodes: vec![0.0; 2 * size],
        }
    }

    pub(crate) fn set(&mut self, i: usize, value: f64) {
        let mut k = self.size + i;
        self.nodes[k] = value;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    pub(crate) fn total(&self) -> f64 {
        self.nodes[1]
    }

    /// Leaf whose cumulative interval contains `target`, never a zero leaf.
    pub(crate) fn find(&self, mut target: f64) -> usize {
        let mut k = 1;
        while k < self.size {
            let left = self.nodes[2 * k];
            let right = self.nodes[2 * k + 1];
            if (target < left && left > 0.0) || right <= 0.0 {
                k *= 2;
            } else {
                target -= left;
                k = 2 * k + 1;
            }
        }
        k - self.size
    }
}

/// Channels derived once from a model; shared read-only by all replicas.
#[derive(Debug, Clone)]
pub struct ForwardEngine {
    n_vertices: usize,
    channels: Vec<Channel>,
    by_source: Vec<Vec<usize>>,
    spec: ModelSpec,
}

/// What one call to [`Replica::advance`] did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Advance {
    Event(EventRecord),
    /// The next event would fall after the horizon; time now equals it.
    Horizon,
    /// Total rate is zero; nothing will ever happen again.
    Quiescent,
}

/// One realized jump (or logged no-op).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    /// True for the per-individual transitions coming from atoms at zero.
    pub independent: bool,
    pub source: usize,
    pub target: usize,
    pub y: f64,
    pub participants: u64,
}

impl EventRecord {
    /// Whether the event changed the state.
    pub fn is_effective(&self) -> bool {
        self.participants >= self.kind.min_participants()
    }

    /// Applies the event to `state`.
    pub fn apply(&self, state: &mut [u64]) {
        let i = self.participants;
        match self.kind {
            EventKind::Death => state[self.source] -= i,
            EventKind::Migration => {
                state[self.source] -= i;
                state[self.target] += i;
            }
            EventKind::Reproduction => state[self.target] += i,
            EventKind::Coalescence => {
                if i >= 2 {
                    state[self.source] -= i - 1;
                }
            }
        }
    }

    /// Net change of `|z|`.
    pub fn population_change(&self) -> i64 {
        let i = self.participants as i64;
        match self.kind {
            EventKind::Death => -i,
            EventKind::Migration => 0,
            EventKind::Reproduction => i,
            EventKind::Coalescence => -(i - 1).max(0),
        }
    }
}

impl ForwardEngine {
    pub fn new(spec: &ModelSpec) -> Self {
        let n = spec.n_vertices();
        let mut channels = Vec::new();
        for (kind, source, target, m) in spec.channels() {
            let at_zero = m.mass_at_zero();
            if at_zero > 0.0 {
                channels.push(Channel {
                    kind,
                    source,
                    target,
                    y: 0.0,
                    weight: at_zero,
                    mass: at_zero,
                });
            }
            for atom in m.positive_atoms() {
                let rate = measure::event_rate(*atom, kind).expect("positive atom");
                if rate > 0.0 {
                    channels.push(Channel {
                        kind,
                        source,
                        target,
                        y: atom.y,
                        weight: rate,
                        mass: atom.mass,
                    });
                }
            }
        }
        let mut by_source = vec![Vec::new(); n];
        for (c, ch) in channels.iter().enumerate() {
            by_source[ch.source].push(c);
        }
        ForwardEngine {
            n_vertices: n,
            channels,
            by_source,
            spec: spec.clone(),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Total rate of state-changing events out of `z` (no-op draws excluded).
    pub fn effective_out_rate(&self, z: &[u64]) -> f64 {
        self.channels
            .iter()
            .map(|ch| {
                let n = z[ch.source];
                if ch.is_independent() {
                    ch.rate(n)
                } else {
                    measure::effective_rate(measure::Atom::new(ch.y, ch.mass), ch.kind, n)
                }
            })
            .sum()
    }

    pub fn replica(&self, z0: &[u64]) -> Replica<'_> {
        assert_eq!(
            z0.len(),
            self.n_vertices,
            "state length must match the vertex count"
        );
        let mut tree = SumTree::new(self.channels.len());
        for (c, ch) in self.channels.iter().enumerate() {
            tree.set(c, ch.rate(z0[ch.source]));
        }
        Replica {
            engine: self,
            state: z0.to_vec(),
            population: z0.iter().sum(),
            time: 0.0,
            events: 0,
            tree,
        }
    }
}

/// Mutable state of one realization.
#[derive(Debug, Clone)]
pub struct Replica<'a> {
    engine: &'a ForwardEngine,
    state: Vec<u64>,
    population: u64,
    time: f64,
    events: u64,
    tree: SumTree,
}

impl Replica<'_> {
    pub fn state(&self) -> &[u64] {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    /// Draws the next event; if it falls after `horizon` the clock stops at
    /// `horizon` instead (memorylessness makes this exact).
    pub fn advance<R: Rng + ?Sized>(&mut self, horizon: f64, rng: &mut R) -> Advance {
        let total = self.tree.total();
        if !(total > 0.0) {
            return Advance::Quiescent;
        }
        let wait: f64 = rng.sample::<f64, _>(Exp1) / total;
        if self.time + wait > horizon {
            self.time = horizon;
            return Advance::Horizon;
        }
        self.time += wait;
        let c = self.tree.find(rng.random::<f64>() * total);
        Advance::Event(self.fire(c, rng))
    }

    fn fire<R: Rng + ?Sized>(&mut self, c: usize, rng: &mut R) -> EventRecord {
        let ch = self.engine.channels[c];
        let n = self.state[ch.source];
        let participants = if ch.is_independent() {
            match ch.kind {
                EventKind::Coalescence => 2,
                _ => 1,
            }
        } else {
            measure::participation_count(n, ch.y, rng)
        };
        let record = EventRecord {
            time: self.time,
            kind: ch.kind,
            independent: ch.is_independent(),
            source: ch.source,
            target: ch.target,
            y: ch.y,
            participants,
        };
        self.events += 1;
        if record.is_effective() {
            record.apply(&mut self.state);
            self.population = (self.population as i64 + record.population_change()) as u64;
            self.refresh(ch.source);
            if ch.target != ch.source
                && ch.kind != EventKind::Death
                && ch.kind != EventKind::Coalescence
            {
                self.refresh(ch.target);
            }
        }
        record
    }

    fn refresh(&mut self, v: usize) {
        let n = self.state[v];
        for &c in &self.engine.by_source[v] {
            self.tree.set(c, self.engine.channels[c].rate(n));
        }
    }
}
