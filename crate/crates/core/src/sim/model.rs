use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extra ticks a message spends in flight beyond the minimum of one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DelayDistribution {
    #[default]
    Zero,
    Fixed { ticks: u64 },
    /// Number of failures before the first success of a `p`-coin.
    Geometric { p: f64 },
    /// Uniform on `0..=max`.
    Uniform { max: u64 },
}

impl DelayDistribution {
    fn check(&self) -> Result<()> {
        match *self {
            DelayDistribution::Geometric { p } if !(p > 0.0 && p <= 1.0) => {
                Err(Error::param("delay", format!("geometric p = {p} must lie in (0, 1]")))
            }
            _ => Ok(()),
        }
    }

    /// Whether two messages on the same link can arrive out of send order.
    pub fn preserves_order(&self) -> bool {
        matches!(self, DelayDistribution::Zero | DelayDistribution::Fixed { .. })
    }

    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match *self {
            DelayDistribution::Zero => 0,
            DelayDistribution::Fixed { ticks } => ticks,
            DelayDistribution::Geometric { p } => Geometric::new(p).expect("checked").sample(rng),
            DelayDistribution::Uniform { max } => rng.random_range(0..=max),
        }
    }
}

/// Stochastic schedule: Bernoulli computation per agent per tick, Bernoulli
/// transmission per ordered pair per tick, and random message delays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsynchronyModel {
    pub p_update: f64,
    pub p_transmit: f64,
    pub delay: DelayDistribution,
    pub seed: u64,
    pub max_ticks: u64,
    /// Drop a delivery whose value is older than the one already held.
    /// Delays that reorder messages need this for the envelope to hold.
    pub discard_stale: bool,
}

impl Default for AsynchronyModel {
    fn default() -> Self {
        AsynchronyModel {
            p_update: 0.1,
            p_transmit: 0.01,
            delay: DelayDistribution::Zero,
            seed: 0,
            max_ticks: 10_000,
            discard_stale: false,
        }
    }
}

impl AsynchronyModel {
    /// Every agent computes and every link transmits on every tick, with no delay.
    pub fn synchronous(max_ticks: u64) -> Self {
        AsynchronyModel { p_update: 1.0, p_transmit: 1.0, max_ticks, ..Default::default() }
    }

    pub fn check(&self) -> Result<()> {
        for (name, p) in [("p_update", self.p_update), ("p_transmit", self.p_transmit)] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::param(name, format!("{p} must lie in (0, 1]")));
            }
        }
        self.delay.check()
    }

    /// First `count` ticks at which `agent` computes an update.
    pub fn update_ticks(&self, agent: usize, count: usize) -> Result<Vec<u64>> {
        self.check()?;
        let mut rng = update_stream(self.seed, agent);
        Ok(clock_ticks(self.p_update, count, &mut rng))
    }

    /// First `count` ticks at which link `from → to` transmits.
    pub fn transmit_ticks(&self, from: usize, to: usize, count: usize) -> Result<Vec<u64>> {
        self.check()?;
        let mut rng = link_stream(self.seed, from, to);
        let mut clock = BernoulliClock::new(self.p_transmit, 0, &mut rng);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(clock.next());
            // each transmission also draws its delay from the link stream
            self.delay.sample(&mut rng);
            clock.advance(&mut rng);
        }
        Ok(out)
    }
}

fn clock_ticks(p: f64, count: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut clock = BernoulliClock::new(p, 0, rng);
    (0..count)
        .map(|_| {
            let t = clock.next();
            clock.advance(rng);
            t
        })
        .collect()
}

const KIND_UPDATE: u64 = 1;
const KIND_LINK: u64 = 2;
const KIND_CONCURRENT: u64 = 3;

/// Stream id for a substream: an 8-bit kind and two 28-bit indices, so a
/// given agent or link always draws from the same stream whatever `N` is.
pub fn stream_id(kind: u64, a: usize, b: usize) -> u64 {
    debug_assert!(a < 1 << 28 && b < 1 << 28);
    kind << 56 | (a as u64) << 28 | b as u64
}

pub(crate) fn substream(seed: u64, kind: u64, a: usize, b: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(kind, a, b));
    rng
}

pub(crate) fn update_stream(seed: u64, agent: usize) -> ChaCha8Rng {
    substream(seed, KIND_UPDATE, agent, 0)
}

pub(crate) fn link_stream(seed: u64, from: usize, to: usize) -> ChaCha8Rng {
    substream(seed, KIND_LINK, from, to)
}

pub(crate) fn concurrent_stream(seed: u64, agent: usize) -> ChaCha8Rng {
    substream(seed, KIND_CONCURRENT, agent, 0)
}

/// Ticks of a Bernoulli(p) process, drawn as geometric gaps.
#[derive(Debug, Clone)]
pub(crate) struct BernoulliClock {
    gap: Geometric,
    next: u64,
}

impl BernoulliClock {
    /// First event strictly after tick `start`.
    pub(crate) fn new(p: f64, start: u64, rng: &mut ChaCha8Rng) -> Self {
        let gap = Geometric::new(p).expect("checked probability");
        let next = start.saturating_add(1).saturating_add(gap.sample(rng));
        BernoulliClock { gap, next }
    }

    pub(crate) fn next(&self) -> u64 {
        self.next
    }

    pub(crate) fn advance(&mut self, rng: &mut ChaCha8Rng) {
        self.next = self.next.saturating_add(1).saturating_add(self.gap.sample(rng));
    }
}
