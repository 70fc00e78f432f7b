//! Monte-Carlo model of the two multiplexed single-photon arrangements:
//! four detectors behind a splitter tree (spatial) or one detector with
//! four delayed time bins (temporal).
//!
//! Per pulse: photon number is Poisson in the source mean, each photon is
//! routed by the (possibly drifting) channel probabilities and survives
//! detection with the configured efficiency, and every channel window can
//! fire a dark count. The temporal scheme additionally suppresses clicks
//! landing inside the detector dead time. Generation is chunked with
//! per-chunk derived seeds, so a stream is bit-reproducible regardless of
//! how it is batched out.

mod drift;

pub use drift::{DriftConfig, DriftMode};

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::photon_stats::PhotonStatsError;
use crate::sequence_codec::ProbVector;
use crate::NoiseModel;

use drift::DriftState;

/// Pulses generated per reproducibility chunk.
pub const CHUNK_PULSES: u64 = 1 << 16;

/// Channel count both arrangements multiplex over.
pub const CHANNELS: usize = 4;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    PhotonStats(#[from] PhotonStatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Spatial,
    Temporal,
}

/// Full source/detector arrangement for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Pulses per second.
    pub pulse_rate: f64,
    /// Nominal splitting probabilities over the four channels.
    pub channel_probs: ProbVector<f64>,
    pub noise: NoiseModel,
    /// Seconds the single detector stays blind after a click (temporal).
    pub dead_time: f64,
    /// Seconds between consecutive time bins (temporal); must exceed the
    /// dead time, and all four bins must fit inside one pulse period.
    pub bin_spacing: f64,
    pub drift: DriftConfig,
    pub seed: u64,
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.noise.validate()?;
        if self.noise.channels != CHANNELS {
            return Err(SimError::InvalidConfig(format!(
                "simulation multiplexes over {CHANNELS} channels, model has {}",
                self.noise.channels
            )));
        }
        if !(self.pulse_rate > 0.0) || !self.pulse_rate.is_finite() {
            return Err(SimError::InvalidConfig(format!(
                "pulse_rate must be positive, got {}",
                self.pulse_rate
            )));
        }
        self.drift.validate().map_err(SimError::InvalidConfig)?;
        if self.scheme == Scheme::Temporal {
            if !(self.dead_time >= 0.0) {
                return Err(SimError::InvalidConfig(format!(
                    "dead_time must be non-negative, got {}",
                    self.dead_time
                )));
            }
            if !(self.bin_spacing > self.dead_time) {
                return Err(SimError::InvalidConfig(format!(
                    "bin_spacing {} must exceed dead_time {}",
                    self.bin_spacing, self.dead_time
                )));
            }
            if !(CHANNELS as f64 * self.bin_spacing < 1.0 / self.pulse_rate) {
                return Err(SimError::InvalidConfig(format!(
                    "{CHANNELS} bins of {} s do not fit in the {} s pulse period",
                    self.bin_spacing,
                    1.0 / self.pulse_rate
                )));
            }
        }
        Ok(())
    }
}

/// One pulse's detector outcome. `photons` is the simulation's ground-truth
/// emitted photon number; it is not part of the persisted record format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionRecord {
    pub pulse_index: u64,
    /// Click mask, bit `c` set when channel/bin `c` fired.
    pub mask: u8,
    pub photons: u32,
}

impl DetectionRecord {
    pub fn clicked(&self, channel: usize) -> bool {
        self.mask >> channel & 1 == 1
    }

    pub fn click_count(&self) -> u32 {
        self.mask.count_ones()
    }

    /// Pulse emission time in seconds.
    pub fn timestamp(&self, pulse_rate: f64) -> f64 {
        self.pulse_index as f64 / pulse_rate
    }
}

/// A post-selected single-click outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClickEvent {
    pub pulse_index: u64,
    pub channel: usize,
}

impl ClickEvent {
    pub fn timestamp(&self, pulse_rate: f64) -> f64 {
        self.pulse_index as f64 / pulse_rate
    }
}

const PULSE_STREAM: u64 = 0;
const DRIFT_STREAM: u64 = 1;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed derivation for independent substreams.
fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let salted = base ^ mix64(stream.wrapping_add(0x9E37_79B9_7F4A_7C15));
    mix64(mix64(salted) ^ index)
}

/// Stateful pulse generator; successive [`Simulator::take_records`] calls
/// continue the same deterministic stream.
pub struct Simulator {
    config: SchemeConfig,
    poisson: Option<Poisson<f64>>,
    drift: DriftState,
    tick_pulses: u64,
    buffer: VecDeque<DetectionRecord>,
    next_chunk: u64,
    last_click_time: Option<f64>,
}

impl Simulator {
    pub fn new(config: SchemeConfig) -> Result<Self, SimError> {
        config.validate()?;
        let poisson = if config.noise.mu > 0.0 {
            Some(
                Poisson::new(config.noise.mu)
                    .map_err(|e| SimError::InvalidConfig(format!("poisson: {e}")))?,
            )
        } else {
            None
        };
        // Drift advances roughly every millisecond of pulses.
        let tick_pulses = ((config.pulse_rate / 1000.0).round() as u64).max(1);
        let drift = DriftState::new(
            config.drift,
            config.channel_probs.probs(),
            tick_pulses as f64 / config.pulse_rate,
            derive_seed(config.seed, DRIFT_STREAM, 0),
        );
        Ok(Self {
            config,
            poisson,
            drift,
            tick_pulses,
            buffer: VecDeque::new(),
            next_chunk: 0,
            last_click_time: None,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    /// Next `n` pulses of the stream, in pulse order.
    pub fn take_records(&mut self, n: u64) -> Vec<DetectionRecord> {
        let mut out = Vec::with_capacity(n as usize);
        while (out.len() as u64) < n {
            if self.buffer.is_empty() {
                self.generate_chunk();
            }
            let mut record = self.buffer.pop_front().expect("chunk is never empty");
            if self.config.scheme == Scheme::Temporal {
                record.mask = self.suppress_dead_time(record.pulse_index, record.mask);
            }
            out.push(record);
        }
        out
    }

    fn generate_chunk(&mut self) {
        let chunk = self.next_chunk;
        self.next_chunk += 1;
        let start = chunk * CHUNK_PULSES;
        let mut rng =
            ChaCha12Rng::seed_from_u64(derive_seed(self.config.seed, PULSE_STREAM, chunk));
        let eta = self.config.noise.eta;
        let dark = self.config.noise.dark_prob;
        for offset in 0..CHUNK_PULSES {
            let pulse_index = start + offset;
            let cumulative = self.drift.cumulative_at(pulse_index / self.tick_pulses);
            let photons = match &self.poisson {
                Some(dist) => dist.sample(&mut rng) as u32,
                None => 0,
            };
            let mut mask = 0u8;
            for _ in 0..photons {
                let u: f64 = rng.random();
                let mut channel = CHANNELS - 1;
                for (c, &edge) in cumulative.iter().enumerate() {
                    if u < edge {
                        channel = c;
                        break;
                    }
                }
                if rng.random::<f64>() < eta {
                    mask |= 1 << channel;
                }
            }
            if dark > 0.0 {
                for channel in 0..CHANNELS {
                    if rng.random::<f64>() < dark {
                        mask |= 1 << channel;
                    }
                }
            }
            self.buffer.push_back(DetectionRecord {
                pulse_index,
                mask,
                photons,
            });
        }
    }

    /// Non-paralyzable dead time on the single temporal detector: a click is
    /// dropped when it lands within `dead_time` of the last kept click, and
    /// dropped clicks do not extend the blind window.
    fn suppress_dead_time(&mut self, pulse_index: u64, mask: u8) -> u8 {
        if mask == 0 {
            return 0;
        }
        let base = pulse_index as f64 / self.config.pulse_rate;
        let mut kept = 0u8;
        for bin in 0..CHANNELS {
            if mask >> bin & 1 == 0 {
                continue;
            }
            let t = base + bin as f64 * self.config.bin_spacing;
            let blocked = self
                .last_click_time
                .map(|last| t - last < self.config.dead_time)
                .unwrap_or(false);
            if !blocked {
                kept |= 1 << bin;
                self.last_click_time = Some(t);
            }
        }
        kept
    }
}

/// Convenience wrapper materializing `n_pulses` records.
pub fn simulate(config: &SchemeConfig, n_pulses: u64) -> Result<Vec<DetectionRecord>, SimError> {
    let mut sim = Simulator::new(config.clone())?;
    Ok(sim.take_records(n_pulses))
}

/// Keeps the exactly-one-click records as events and histograms all records
/// by click multiplicity `k = 0..=4`.
pub fn post_select<I>(records: I) -> (Vec<ClickEvent>, [u64; 5])
where
    I: IntoIterator<Item = DetectionRecord>,
{
    let mut events = Vec::new();
    let mut histogram = [0u64; 5];
    for record in records {
        let k = record.click_count() as usize;
        histogram[k] += 1;
        if k == 1 {
            events.push(ClickEvent {
                pulse_index: record.pulse_index,
                channel: record.mask.trailing_zeros() as usize,
            });
        }
    }
    (events, histogram)
}

/// Outcome of the per-interval relative-frequency check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub accepted: bool,
    pub frequencies: [f64; 4],
    pub events: u64,
    pub reason: Option<String>,
}

/// Accepts a control interval iff every channel's relative click frequency
/// lies inside `[lo, hi]`, bounds inclusive. An empty interval is rejected.
pub fn balance_gate(events: &[ClickEvent], lo: f64, hi: f64) -> GateReport {
    if events.is_empty() {
        return GateReport {
            accepted: false,
            frequencies: [0.0; 4],
            events: 0,
            reason: Some("no events".into()),
        };
    }
    let mut counts = [0u64; 4];
    for event in events {
        counts[event.channel] += 1;
    }
    let total = events.len() as f64;
    let frequencies = counts.map(|c| c as f64 / total);
    let accepted = frequencies.iter().all(|&f| f >= lo && f <= hi);
    GateReport {
        accepted,
        frequencies,
        events: events.len() as u64,
        reason: (!accepted).then(|| {
            format!(
                "channel frequencies {frequencies:?} outside [{lo}, {hi}]"
            )
        }),
    }
}

/// Normalized rate trace: partitions `[0, duration)` into windows of
/// `interval` seconds, averages the event counts over consecutive blocks of
/// `group` windows, and divides by the mean count over all complete
/// windows. Incomplete trailing windows and groups are dropped.
pub fn stability_trace<I>(times: I, duration: f64, interval: f64, group: usize) -> Vec<f64>
where
    I: IntoIterator<Item = f64>,
{
    assert!(interval > 0.0, "interval must be positive");
    assert!(group >= 1, "group must be at least 1");
    let windows = (duration / interval + 1e-9).floor() as usize;
    if windows == 0 {
        return Vec::new();
    }
    let mut counts = vec![0u64; windows];
    for t in times {
        let w = (t / interval).floor();
        if w >= 0.0 && (w as usize) < windows {
            counts[w as usize] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Vec::new();
    }
    let grand_mean = total as f64 / windows as f64;
    counts
        .chunks_exact(group)
        .map(|block| {
            let block_mean = block.iter().sum::<u64>() as f64 / group as f64;
            block_mean / grand_mean
        })
        .collect()
}

/// Event timestamps in seconds from pulse indices. Bin offsets inside a
/// pulse period are far below any trace resolution and are ignored.
pub fn click_times<'a>(
    events: &'a [ClickEvent],
    pulse_rate: f64,
) -> impl Iterator<Item = f64> + 'a {
    events.iter().map(move |e| e.timestamp(pulse_rate))
}
