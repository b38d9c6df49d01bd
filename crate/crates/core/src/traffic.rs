//! Gaming traffic generator.
//!
//! Packet sizes follow a largest-extreme-value (Gumbel-max) law whose
//! location and scale are moment-matched to a target mean and standard
//! deviation. Each communication round draws from its own random stream.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::output::fmt_float;
use crate::rng::{self, SimRng};
use crate::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Attempts before a model producing only non-positive sizes is rejected.
pub const MAX_REDRAWS: usize = 100;

pub const DEFAULT_MEAN_BYTES: f64 = 45.0;
pub const DEFAULT_STD_BYTES: f64 = 5.7;

/// `(location, scale)` of the Gumbel-max law with the given moments.
pub fn derive_params(mean: f64, std: f64) -> Result<(f64, f64)> {
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::InvalidTraffic(format!("std must be positive, got {std}")));
    }
    if !mean.is_finite() {
        return Err(Error::InvalidTraffic(format!("mean must be finite, got {mean}")));
    }
    let scale = std * 6f64.sqrt() / PI;
    Ok((mean - scale * EULER_GAMMA, scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrafficModel {
    pub mean_bytes: f64,
    pub std_bytes: f64,
    location: f64,
    scale: f64,
}

impl TrafficModel {
    pub fn new(mean_bytes: f64, std_bytes: f64) -> Result<Self> {
        let (location, scale) = derive_params(mean_bytes, std_bytes)?;
        Ok(Self {
            mean_bytes,
            std_bytes,
            location,
            scale,
        })
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Inverse CDF `location - scale ln(-ln u)`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.location - self.scale * (-u.ln()).ln()
    }

    /// Draws one strictly positive packet size.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        for _ in 0..MAX_REDRAWS {
            let u: f64 = rng.random();
            if u <= 0.0 {
                continue;
            }
            let x = self.quantile(u);
            if x > 0.0 && x.is_finite() {
                return Ok(x);
            }
        }
        Err(Error::DegenerateModel(MAX_REDRAWS))
    }
}

impl Default for TrafficModel {
    fn default() -> Self {
        Self::new(DEFAULT_MEAN_BYTES, DEFAULT_STD_BYTES).expect("defaults are valid")
    }
}

pub fn sample_packet_size<R: Rng + ?Sized>(model: &TrafficModel, rng: &mut R) -> Result<f64> {
    model.sample(rng)
}

/// Packets per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadKind {
    Constant {
        packets: usize,
    },
    /// `base + round(amplitude * max(0, sin(pi r / period)))`: bursts last
    /// `period` rounds and alternate with quiet windows of equal length.
    Bursty {
        base: usize,
        amplitude: f64,
        period: usize,
    },
}

impl Default for LoadKind {
    fn default() -> Self {
        LoadKind::Bursty {
            base: 5,
            amplitude: 60.0,
            period: 90,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadProfile {
    pub kind: LoadKind,
    pub rounds: usize,
}

impl Default for LoadProfile {
    fn default() -> Self {
        Self {
            kind: LoadKind::default(),
            rounds: 100,
        }
    }
}

impl LoadProfile {
    pub fn new(kind: LoadKind, rounds: usize) -> Result<Self> {
        let profile = Self { kind, rounds };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if let LoadKind::Bursty { amplitude, period, .. } = self.kind {
            if !(amplitude >= 0.0) || !amplitude.is_finite() {
                return Err(Error::InvalidTraffic(format!("burst amplitude {amplitude} must be >= 0")));
            }
            if period < 1 {
                return Err(Error::InvalidTraffic("burst period must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Packet count of round `round` (1-based).
    pub fn packets_in_round(&self, round: usize) -> usize {
        match self.kind {
            LoadKind::Constant { packets } => packets,
            LoadKind::Bursty {
                base,
                amplitude,
                period,
            } => {
                let phase = PI * round as f64 / period as f64;
                base + (amplitude * phase.sin().max(0.0)).round() as usize
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundLoad {
    pub round_index: usize,
    pub packet_sizes: Vec<f64>,
}

/// Random stream dedicated to round `round`.
pub fn round_rng(seed: u64, round: usize) -> SimRng {
    rng::stream(seed, round as u64)
}

/// Traffic for a single round, identical to that round of [`generate_rounds`].
pub fn generate_round(model: &TrafficModel, profile: &LoadProfile, seed: u64, round: usize) -> Result<RoundLoad> {
    let mut r = round_rng(seed, round);
    let n = profile.packets_in_round(round);
    let packet_sizes = (0..n).map(|_| model.sample(&mut r)).collect::<Result<Vec<_>>>()?;
    Ok(RoundLoad {
        round_index: round,
        packet_sizes,
    })
}

/// Rounds `1..=profile.rounds`.
pub fn generate_rounds(model: &TrafficModel, profile: &LoadProfile, seed: u64) -> Result<Vec<RoundLoad>> {
    profile.validate()?;
    (1..=profile.rounds)
        .map(|r| generate_round(model, profile, seed, r))
        .collect()
}

/// Writes `round,packet_index,bytes` rows.
pub fn write_csv<W: Write>(rounds: &[RoundLoad], mut out: W) -> std::io::Result<()> {
    writeln!(out, "round,packet_index,bytes")?;
    for load in rounds {
        for (i, bytes) in load.packet_sizes.iter().enumerate() {
            writeln!(out, "{},{},{}", load.round_index, i, fmt_float(*bytes))?;
        }
    }
    Ok(())
}
