//! Slow drift of the channel splitting probabilities.
//!
//! Drift advances on a coarse tick (about 1 ms of pulses) and is driven by
//! its own seeded stream, so pulse chunks stay reproducible independently
//! of how the caller batches them.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    None,
    OuWalk,
    Sinusoid,
}

/// Drift model settings. `amplitude` bounds the relative deviation of each
/// channel weight; drifted weights are renormalized to a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftConfig {
    pub mode: DriftMode,
    /// Seconds; OU relaxation time or sinusoid period.
    pub correlation_time: f64,
    /// Relative deviation bound, in `[0, 0.5)`.
    pub amplitude: f64,
}

impl DriftConfig {
    pub fn none() -> Self {
        Self {
            mode: DriftMode::None,
            correlation_time: 10.0,
            amplitude: 0.0,
        }
    }

    /// Slow Ornstein-Uhlenbeck walk: 10 s relaxation, 5% relative amplitude.
    pub fn slow_walk() -> Self {
        Self {
            mode: DriftMode::OuWalk,
            correlation_time: 10.0,
            amplitude: 0.05,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..0.5).contains(&self.amplitude) {
            return Err(format!(
                "drift amplitude must lie in [0, 0.5), got {}",
                self.amplitude
            ));
        }
        if self.mode != DriftMode::None && !(self.correlation_time > 0.0) {
            return Err(format!(
                "drift correlation_time must be positive, got {}",
                self.correlation_time
            ));
        }
        Ok(())
    }
}

/// Sequentially evolving drift state; ticks are visited in order.
pub(crate) struct DriftState {
    config: DriftConfig,
    base: [f64; 4],
    tick_seconds: f64,
    rng: ChaCha12Rng,
    /// OU per-tick decay and innovation scale.
    decay: f64,
    step_sd: f64,
    deviation: [f64; 4],
    current_tick: u64,
    current_probs: [f64; 4],
    current_cumulative: [f64; 4],
}

impl DriftState {
    pub fn new(config: DriftConfig, base: [f64; 4], tick_seconds: f64, seed: u64) -> Self {
        let decay = (-tick_seconds / config.correlation_time).exp();
        let step_sd = (config.amplitude / 2.0) * (1.0 - decay * decay).sqrt();
        let mut state = Self {
            config,
            base,
            tick_seconds,
            rng: ChaCha12Rng::seed_from_u64(seed),
            decay,
            step_sd,
            deviation: [0.0; 4],
            current_tick: 0,
            current_probs: base,
            current_cumulative: [0.0; 4],
        };
        state.refresh_probs(0);
        state
    }

    /// Channel probabilities at `tick`; requires non-decreasing tick access.
    pub fn probs_at(&mut self, tick: u64) -> [f64; 4] {
        self.advance_to(tick);
        self.current_probs
    }

    /// Cumulative channel probabilities at `tick`, for inverse sampling.
    pub fn cumulative_at(&mut self, tick: u64) -> [f64; 4] {
        self.advance_to(tick);
        self.current_cumulative
    }

    fn advance_to(&mut self, tick: u64) {
        debug_assert!(tick >= self.current_tick, "drift ticks must be monotone");
        while self.current_tick < tick {
            self.current_tick += 1;
            if self.config.mode == DriftMode::OuWalk {
                for d in &mut self.deviation {
                    let noise: f64 = StandardNormal.sample(&mut self.rng);
                    *d = (*d * self.decay + self.step_sd * noise)
                        .clamp(-self.config.amplitude, self.config.amplitude);
                }
            }
            self.refresh_probs(self.current_tick);
        }
    }

    fn refresh_probs(&mut self, tick: u64) {
        let deviation = match self.config.mode {
            DriftMode::None => [0.0; 4],
            DriftMode::OuWalk => self.deviation,
            DriftMode::Sinusoid => {
                let t = tick as f64 * self.tick_seconds;
                let phase = 2.0 * std::f64::consts::PI * t / self.config.correlation_time;
                let mut d = [0.0; 4];
                for (i, v) in d.iter_mut().enumerate() {
                    *v = self.config.amplitude
                        * (phase + i as f64 * std::f64::consts::FRAC_PI_2).sin();
                }
                d
            }
        };
        let mut weights = [0.0; 4];
        for i in 0..4 {
            weights[i] = self.base[i] * (1.0 + deviation[i]);
        }
        let total: f64 = weights.iter().sum();
        let mut cumulative = 0.0;
        for i in 0..4 {
            self.current_probs[i] = weights[i] / total;
            cumulative += self.current_probs[i];
            self.current_cumulative[i] = cumulative;
        }
        // Guard against roundoff leaving the last sampling edge below 1.
        self.current_cumulative[3] = 1.0;
    }
}
