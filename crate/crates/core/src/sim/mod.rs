//! Deterministic discrete-event execution of the asynchronous block
//! projected-gradient method.
//!
//! Each tick runs three phases in a fixed order: agents scheduled to compute
//! update their own block, links scheduled to transmit enqueue the sender's
//! current block, then every message due is delivered, overwriting the
//! receiver's copy. Randomness comes from one master seed split into
//! per-agent and per-link substreams.

mod concurrent;
mod cycle;
mod model;
mod trace;

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand_chacha::ChaCha8Rng;

pub use concurrent::{run_concurrent, ConcurrentOutcome};
pub use cycle::CycleTracker;
pub use model::{stream_id, AsynchronyModel, DelayDistribution};
pub use trace::{verify_contraction_envelope, EnvelopeCheck, EnvelopeViolation, RunMetadata, RunSummary, RunTrace, TraceRow, CSV_HEADER};

use crate::error::{Error, Result};
use crate::linalg::{block_distance, BlockVector};
use crate::model::{QuadraticProgram, Regularization};
use crate::select::BlockRates;
use model::{link_stream, update_stream, BernoulliClock};

/// Relative slack allowed when comparing errors against the envelope.
pub const ENVELOPE_TOLERANCE: f64 = 1e-9;
/// Errors at or below `ROUNDOFF_FLOOR · (1 + ‖x*‖_{2,p})` are treated as
/// round-off by the online envelope counter; the envelope itself keeps
/// shrinking below what double precision can resolve.
pub const ROUNDOFF_FLOOR: f64 = 1e3 * f64::EPSILON;

/// A block value in flight from `from` to `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub payload: Vec<f64>,
    /// Tick of the sender's update that produced `payload`; `None` if the
    /// sender had not updated yet.
    pub computed_at: Option<u64>,
    pub deliver_at: u64,
}

#[derive(Debug)]
struct Pending {
    seq: u64,
    msg: Message,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.msg.deliver_at, self.seq).cmp(&(other.msg.deliver_at, other.seq))
    }
}

/// Agent `i`'s local copy of the whole state and its parameters.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: usize,
    pub copy: Vec<f64>,
    pub gamma: f64,
    pub alpha: f64,
    pub last_self_update: Option<u64>,
}

/// Counters accumulated over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EventCounts {
    pub updates: u64,
    pub messages_sent: u64,
    pub messages_delivered: u64,
    pub messages_discarded: u64,
}

/// Run setup. Defaults: no regularization, optimal stepsizes, `x0 = Π_X[0]`,
/// every tick recorded.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    qp: &'a QuadraticProgram,
    model: AsynchronyModel,
    reg: Regularization,
    gammas: Option<Vec<f64>>,
    x0: Option<BlockVector>,
    record_every: u64,
    fixed_point: Option<BlockVector>,
    reference: Option<BlockVector>,
}

impl<'a> Simulation<'a> {
    pub fn new(qp: &'a QuadraticProgram, model: AsynchronyModel) -> Self {
        Simulation {
            qp,
            model,
            reg: Regularization::zero(qp.num_blocks()),
            gammas: None,
            x0: None,
            record_every: 1,
            fixed_point: None,
            reference: None,
        }
    }

    pub fn regularization(mut self, reg: Regularization) -> Self {
        self.reg = reg;
        self
    }

    pub fn stepsizes(mut self, gammas: Vec<f64>) -> Self {
        self.gammas = Some(gammas);
        self
    }

    /// Stepsizes and regularizations from a selection result.
    pub fn rates(self, rates: &BlockRates) -> Self {
        self.regularization(rates.regularization()).stepsizes(rates.gammas())
    }

    pub fn initial_state(mut self, x0: BlockVector) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn record_every(mut self, every: u64) -> Self {
        self.record_every = every;
        self
    }

    /// Minimizer of the (regularized) problem the run converges to, if
    /// already known.
    pub fn fixed_point(mut self, x: BlockVector) -> Self {
        self.fixed_point = Some(x);
        self
    }

    /// Point the system state is additionally measured against; defaults to
    /// the unregularized minimizer.
    pub fn reference(mut self, x: BlockVector) -> Self {
        self.reference = Some(x);
        self
    }

    fn minimizer(&self, reg: Option<&Regularization>) -> Result<BlockVector> {
        if self.qp.is_unconstrained() {
            self.qp.exact_unconstrained_minimizer(reg)
        } else {
            self.qp.centralized_minimizer(reg)
        }
    }

    pub fn world(&self) -> Result<World<'a>> {
        self.model.check()?;
        let qp = self.qp;
        if self.reg.num_blocks() != qp.num_blocks() {
            return Err(Error::DimensionMismatch { expected: qp.num_blocks(), actual: self.reg.num_blocks() });
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        let rates = match &self.gammas {
            Some(g) => BlockRates::with_stepsizes(qp, g, Some(&self.reg))?,
            None => BlockRates::for_regularization(qp, &self.reg)?,
        };
        let x0 = match &self.x0 {
            Some(x) => x.clone(),
            None => qp.project(&BlockVector::zeros(qp.partition())),
        };
        if x0.partition() != qp.partition() {
            return Err(Error::InvalidPartition("initial state partition differs from the problem's".into()));
        }
        if !qp.contains(&x0, 1e-12) {
            return Err(Error::param("x0", "initial state must lie in the constraint set"));
        }
        let fixed = match &self.fixed_point {
            Some(x) => x.clone(),
            None => self.minimizer(Some(&self.reg))?,
        };
        let reference = match &self.reference {
            Some(x) => x.clone(),
            None if self.reg.is_zero() => fixed.clone(),
            None => self.minimizer(None)?,
        };
        Ok(World::new(qp, self.model.clone(), self.reg.clone(), rates, x0, fixed, reference, self.record_every))
    }

    /// Runs `model.max_ticks` ticks and records the trajectory.
    pub fn run(&self) -> Result<RunTrace> {
        let mut world = self.world()?;
        Ok(world.run_to_end())
    }
}

/// Full simulator state between ticks.
#[derive(Debug)]
pub struct World<'a> {
    qp: &'a QuadraticProgram,
    model: AsynchronyModel,
    reg: Regularization,
    rates: BlockRates,
    n: usize,
    tick: u64,
    agents: Vec<AgentState>,
    /// `held_at[i*n + j]`: `computed_at` of the block-`j` value agent `i` holds.
    held_at: Vec<Option<u64>>,
    update_rngs: Vec<ChaCha8Rng>,
    update_clocks: Vec<BernoulliClock>,
    update_queue: BinaryHeap<Reverse<(u64, usize)>>,
    link_rngs: Vec<ChaCha8Rng>,
    link_clocks: Vec<BernoulliClock>,
    link_queue: BinaryHeap<Reverse<(u64, usize, usize)>>,
    in_flight: BinaryHeap<Reverse<Pending>>,
    seq: u64,
    tracker: CycleTracker,
    counts: EventCounts,
    fixed_point: BlockVector,
    reference: BlockVector,
    /// `dist[i*n + j] = ‖x_i^[j] − x*^[j]‖₂`.
    dist: Vec<f64>,
    /// Upper bound on each agent's error; exact unless `stale`.
    agent_max: Vec<f64>,
    stale: Vec<bool>,
    d_o: f64,
    envelope: f64,
    floor: f64,
    violations: u64,
    first_violation: Option<EnvelopeViolation>,
    record_every: u64,
    rows: Vec<TraceRow>,
}

impl<'a> World<'a> {
    #[allow(clippy::too_many_arguments)]
    fn new(
        qp: &'a QuadraticProgram,
        model: AsynchronyModel,
        reg: Regularization,
        rates: BlockRates,
        x0: BlockVector,
        fixed_point: BlockVector,
        reference: BlockVector,
        record_every: u64,
    ) -> Self {
        let n = qp.num_blocks();
        let agents: Vec<AgentState> = (0..n)
            .map(|i| AgentState {
                id: i,
                copy: x0.as_slice().to_vec(),
                gamma: rates.blocks[i].gamma,
                alpha: reg.alpha(i),
                last_self_update: None,
            })
            .collect();
        let mut update_rngs: Vec<ChaCha8Rng> = (0..n).map(|i| update_stream(model.seed, i)).collect();
        let update_clocks: Vec<BernoulliClock> =
            update_rngs.iter_mut().map(|rng| BernoulliClock::new(model.p_update, 0, rng)).collect();
        let update_queue = update_clocks.iter().enumerate().map(|(i, c)| Reverse((c.next(), i))).collect();
        let mut link_rngs = Vec::with_capacity(n * n);
        let mut link_clocks = Vec::with_capacity(n * n);
        let mut link_queue = BinaryHeap::new();
        for j in 0..n {
            for i in 0..n {
                let mut rng = link_stream(model.seed, j, i);
                let clock = BernoulliClock::new(model.p_transmit, 0, &mut rng);
                if i != j {
                    link_queue.push(Reverse((clock.next(), j, i)));
                }
                link_rngs.push(rng);
                link_clocks.push(clock);
            }
        }
        let p = qp.partition();
        let dist: Vec<f64> = (0..n * n)
            .map(|k| {
                let j = k % n;
                block_distance(&x0.as_slice()[p.range(j)], fixed_point.block(j))
            })
            .collect();
        let agent_max: Vec<f64> = (0..n).map(|i| dist[i * n..(i + 1) * n].iter().copied().fold(0.0, f64::max)).collect();
        let d_o = agent_max.iter().copied().fold(0.0, f64::max);
        let floor = ROUNDOFF_FLOOR * (1.0 + fixed_point.block_max_norm());
        let mut world = World {
            qp,
            model,
            reg,
            rates,
            n,
            tick: 0,
            agents,
            held_at: vec![None; n * n],
            update_rngs,
            update_clocks,
            update_queue,
            link_rngs,
            link_clocks,
            link_queue,
            in_flight: BinaryHeap::new(),
            seq: 0,
            tracker: CycleTracker::new(n),
            counts: EventCounts::default(),
            fixed_point,
            reference,
            dist,
            agent_max,
            stale: vec![false; n],
            d_o,
            envelope: d_o,
            floor,
            violations: 0,
            first_violation: None,
            record_every,
            rows: Vec::new(),
        };
        world.record();
        world
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn cycles(&self) -> u64 {
        self.tracker.cycles()
    }

    pub fn agent(&self, i: usize) -> &AgentState {
        &self.agents[i]
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn rates(&self) -> &BlockRates {
        &self.rates
    }

    pub fn counts(&self) -> EventCounts {
        self.counts
    }

    /// Largest initial block-max distance of any local copy to the fixed point.
    pub fn d_o(&self) -> f64 {
        self.d_o
    }

    /// `q^{c(k)} · D_o`.
    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    pub fn fixed_point(&self) -> &BlockVector {
        &self.fixed_point
    }

    /// Blocks as held by their owners: `(x_1^[1], …, x_N^[N])`.
    pub fn system_state(&self) -> Vec<f64> {
        let p = self.qp.partition();
        (0..self.n).flat_map(|i| self.agents[i].copy[p.range(i)].iter().copied()).collect()
    }

    /// `‖x_i − x*‖_{2,p}` for agent `i`'s local copy.
    pub fn agent_error(&mut self, i: usize) -> f64 {
        if self.stale[i] {
            self.agent_max[i] = self.dist[i * self.n..(i + 1) * self.n].iter().copied().fold(0.0, f64::max);
            self.stale[i] = false;
        }
        self.agent_max[i]
    }

    pub fn max_error(&mut self) -> f64 {
        (0..self.n).map(|i| self.agent_error(i)).fold(0.0, f64::max)
    }

    fn refresh(&mut self, i: usize, j: usize) {
        let p = self.qp.partition();
        let d = block_distance(&self.agents[i].copy[p.range(j)], self.fixed_point.block(j));
        let slot = i * self.n + j;
        let old = std::mem::replace(&mut self.dist[slot], d);
        if d >= self.agent_max[i] {
            self.agent_max[i] = d;
            self.stale[i] = false;
        } else if old == self.agent_max[i] {
            self.stale[i] = true;
        }
    }

    /// Advances one tick: updates, then sends, then deliveries.
    pub fn step(&mut self) {
        let k = self.tick + 1;
        let p = self.qp.partition().clone();

        let mut due = Vec::new();
        while let Some(&Reverse((t, i))) = self.update_queue.peek() {
            if t != k {
                break;
            }
            self.update_queue.pop();
            due.push(i);
        }
        for &i in &due {
            let agent = &mut self.agents[i];
            let g = self.qp.gradient_block_unchecked(&agent.copy, i, agent.alpha);
            let block = &mut agent.copy[p.range(i)];
            for (x, gk) in block.iter_mut().zip(&g) {
                *x -= agent.gamma * gk;
            }
            self.qp.constraint(i).project_in_place(block);
            agent.last_self_update = Some(k);
            self.held_at[i * self.n + i] = Some(k);
            self.tracker.record_update(i, k);
            self.counts.updates += 1;
            self.refresh(i, i);
            self.update_clocks[i].advance(&mut self.update_rngs[i]);
            self.update_queue.push(Reverse((self.update_clocks[i].next(), i)));
        }

        while let Some(&Reverse((t, j, i))) = self.link_queue.peek() {
            if t != k {
                break;
            }
            self.link_queue.pop();
            let link = j * self.n + i;
            let delay = self.model.delay.sample(&mut self.link_rngs[link]);
            let msg = Message {
                from: j,
                to: i,
                payload: self.agents[j].copy[p.range(j)].to_vec(),
                computed_at: self.agents[j].last_self_update,
                deliver_at: k + 1 + delay,
            };
            self.in_flight.push(Reverse(Pending { seq: self.seq, msg }));
            self.seq += 1;
            self.counts.messages_sent += 1;
            self.link_clocks[link].advance(&mut self.link_rngs[link]);
            self.link_queue.push(Reverse((self.link_clocks[link].next(), j, i)));
        }

        while self.in_flight.peek().is_some_and(|Reverse(m)| m.msg.deliver_at <= k + 1) {
            let Reverse(Pending { msg, .. }) = self.in_flight.pop().expect("peeked");
            let slot = msg.to * self.n + msg.from;
            if self.model.discard_stale && msg.computed_at < self.held_at[slot] {
                self.counts.messages_discarded += 1;
                continue;
            }
            self.agents[msg.to].copy[p.range(msg.from)].copy_from_slice(&msg.payload);
            self.held_at[slot] = msg.computed_at;
            self.tracker.record_delivery(msg.from, msg.to, msg.computed_at);
            self.counts.messages_delivered += 1;
            self.refresh(msg.to, msg.from);
        }

        if self.tracker.end_tick() {
            self.envelope = self.d_o * self.rates.q.powi(self.tracker.cycles().min(i32::MAX as u64) as i32);
        }
        self.tick = k;
        self.check_envelope();
        if k.is_multiple_of(self.record_every) || k == self.model.max_ticks {
            self.record();
        }
    }

    fn check_envelope(&mut self) {
        let limit = (self.envelope * (1.0 + ENVELOPE_TOLERANCE)).max(self.floor);
        for i in 0..self.n {
            // the cached value never underestimates, so only recompute when it exceeds
            if self.agent_max[i] > limit && self.agent_error(i) > limit {
                self.violations += 1;
                if self.first_violation.is_none() {
                    self.first_violation = Some(EnvelopeViolation {
                        tick: self.tick,
                        cycles: self.cycles(),
                        agent: i,
                        error: self.agent_max[i],
                        envelope: self.envelope,
                    });
                }
            }
        }
    }

    fn record(&mut self) {
        let agent_errors: Vec<f64> = (0..self.n).map(|i| self.agent_error(i)).collect();
        let max_block_error = agent_errors.iter().copied().fold(0.0, f64::max);
        let objective = self.qp.objective(&self.agents[0].copy, None).expect("sized copy");
        let state = self.system_state();
        self.rows.push(TraceRow {
            tick: self.tick,
            cycles: self.cycles(),
            max_block_error,
            objective,
            envelope: self.envelope,
            state_error: block_distance_p(&state, self.fixed_point.as_slice(), self.qp),
            reference_error: block_distance_p(&state, self.reference.as_slice(), self.qp),
            agent_errors,
        });
    }

    /// Runs the remaining ticks and returns the trace.
    pub fn run_to_end(&mut self) -> RunTrace {
        while self.tick < self.model.max_ticks {
            self.step();
        }
        self.finish()
    }

    fn finish(&mut self) -> RunTrace {
        let last = self.rows.last().expect("initial row").clone();
        RunTrace {
            metadata: RunMetadata {
                seed: self.model.seed,
                num_agents: self.n,
                dim: self.qp.dim(),
                model: self.model.clone(),
                record_every: self.record_every,
                q: self.rates.q,
                d_o: self.d_o,
                roundoff_floor: self.floor,
                gammas: self.rates.gammas(),
                alphas: self.reg.alphas().to_vec(),
                stepsizes_valid: self.rates.stepsizes_valid(),
            },
            summary: RunSummary {
                ticks: self.tick,
                cycles: self.cycles(),
                counts: self.counts,
                envelope_violations: self.violations,
                first_violation: self.first_violation,
                final_max_block_error: last.max_block_error,
                final_state_error: last.state_error,
                final_reference_error: last.reference_error,
            },
            rows: std::mem::take(&mut self.rows),
            final_state: self.system_state(),
        }
    }
}

fn block_distance_p(a: &[f64], b: &[f64], qp: &QuadraticProgram) -> f64 {
    let p = qp.partition();
    (0..p.num_blocks()).map(|i| block_distance(&a[p.range(i)], &b[p.range(i)])).fold(0.0, f64::max)
}
