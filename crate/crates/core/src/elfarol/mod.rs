//! El Farol style market simulator.
//!
//! `N` agents each hold `s` strategies: lookup tables from the last `m`
//! price-change outcomes to an action (trade or hold). Each step every agent
//! follows its best-scoring strategy; the price changes when more than `L`
//! agents trade. Trading is the correct call when demand stays within the
//! offer, and every strategy is scored +1 or -1 against that call. One step
//! stands for one second, so the steps at which the price changed form an
//! event series like the market data.

mod sweep;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EventSeries;

pub use sweep::{best_by_kl, grid, sweep, window_kl, SweepResult, KL_WINDOW};

pub const DEFAULT_BURN_IN: u64 = 1000;
pub const MAX_MEMORY: u32 = 16;
pub const DEFAULT_PAIR_SIDE: &str = "ELFAROL";

fn default_burn_in() -> u64 {
    DEFAULT_BURN_IN
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameConfig {
    pub n_agents: usize,
    pub memory: u32,
    pub n_strategies: usize,
    pub offer_size: usize,
    pub n_steps: u64,
    /// Steps run before recording starts.
    #[serde(default = "default_burn_in")]
    pub burn_in: u64,
    pub seed: u64,
}

impl GameConfig {
    pub fn new(n_agents: usize, memory: u32, n_strategies: usize, offer_size: usize, n_steps: u64, seed: u64) -> Self {
        GameConfig {
            n_agents,
            memory,
            n_strategies,
            offer_size,
            n_steps,
            burn_in: DEFAULT_BURN_IN,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::Config("n_agents must be at least 1".into()));
        }
        if !(1..=MAX_MEMORY).contains(&self.memory) {
            return Err(Error::Config(format!(
                "memory must be between 1 and {MAX_MEMORY}, got {}",
                self.memory
            )));
        }
        if self.n_strategies == 0 {
            return Err(Error::Config("n_strategies must be at least 1".into()));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        Ok(())
    }

    /// With `L >= N` demand can never exceed the offer.
    pub fn price_can_change(&self) -> bool {
        self.offer_size < self.n_agents
    }
}

/// Action table over all `2^m` histories plus a running score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    /// Bit `h` set means "trade" on history `h`.
    pub table: Vec<u64>,
    pub score: i64,
}

impl Strategy {
    fn random(memory: u32, rng: &mut ChaCha8Rng) -> Self {
        let entries = 1usize << memory;
        let mut table: Vec<u64> = (0..entries.div_ceil(64)).map(|_| rng.random()).collect();
        if entries < 64 {
            table[0] &= (1u64 << entries) - 1;
        }
        Strategy { table, score: 0 }
    }

    #[inline]
    pub fn trades(&self, history: u32) -> bool {
        let h = history as usize;
        (self.table[h >> 6] >> (h & 63)) & 1 == 1
    }

    pub fn n_entries(&self, memory: u32) -> usize {
        1 << memory
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub price_changed: bool,
    pub demand: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub config: GameConfig,
    /// The last `m` outcomes, oldest in the highest bit and newest in bit 0
    /// (1 = price changed).
    pub history: u32,
    pub agents: Vec<Vec<Strategy>>,
    /// Recorded steps taken so far.
    pub step: u64,
    /// Recorded steps at which the price changed.
    pub event_log: Vec<u64>,
    rng: ChaCha8Rng,
    best: Vec<usize>,
}

/// Fresh game: random strategy tables (fair coin per entry, repetitions
/// allowed), zero scores and a random initial history. No burn-in is run.
pub fn init_game(config: &GameConfig) -> Result<GameState> {
    config.validate()?;
    if !config.price_can_change() {
        log::warn!(
            "offer size L = {} >= N = {}: the price can never change",
            config.offer_size,
            config.n_agents
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let agents = (0..config.n_agents)
        .map(|_| {
            (0..config.n_strategies)
                .map(|_| Strategy::random(config.memory, &mut rng))
                .collect()
        })
        .collect();
    let history = rng.random::<u32>() & history_mask(config.memory);
    Ok(GameState {
        config: config.clone(),
        history,
        agents,
        step: 0,
        event_log: Vec::new(),
        rng,
        best: Vec::with_capacity(config.n_strategies),
    })
}

fn history_mask(memory: u32) -> u32 {
    ((1u64 << memory) - 1) as u32
}

impl GameState {
    /// Advance one step.
    pub fn step(&mut self) -> StepOutcome {
        let h = self.history;
        let mut demand = 0usize;
        for strategies in &self.agents {
            let top = strategies.iter().map(|s| s.score).max().expect("s >= 1");
            self.best.clear();
            self.best
                .extend(strategies.iter().enumerate().filter(|(_, s)| s.score == top).map(|(i, _)| i));
            let chosen = if self.best.len() == 1 {
                self.best[0]
            } else {
                self.best[self.rng.random_range(0..self.best.len())]
            };
            if strategies[chosen].trades(h) {
                demand += 1;
            }
        }
        debug_assert!(demand <= self.config.n_agents);

        let price_changed = demand > self.config.offer_size;
        let trade_was_right = !price_changed;
        for strategies in &mut self.agents {
            for s in strategies {
                s.score += if s.trades(h) == trade_was_right { 1 } else { -1 };
            }
        }
        self.history = ((h << 1) | price_changed as u32) & history_mask(self.config.memory);
        if price_changed {
            self.event_log.push(self.step);
        }
        self.step += 1;
        StepOutcome {
            price_changed,
            demand,
        }
    }

    /// Run `steps` steps and then discard everything recorded, so the next
    /// step is recorded as step 0.
    pub fn burn_in(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
        self.step = 0;
        self.event_log.clear();
    }
}

/// Play `burn_in + n_steps` steps and return the recorded price changes as
/// an event series whose session spans the recorded steps.
pub fn run_game(config: &GameConfig) -> Result<EventSeries> {
    let mut state = init_game(config)?;
    state.burn_in(config.burn_in);
    for _ in 0..config.n_steps {
        state.step();
    }
    EventSeries::new(DEFAULT_PAIR_SIDE, None, state.event_log, config.n_steps)
}
