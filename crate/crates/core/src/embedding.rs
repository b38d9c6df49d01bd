//! Quantum feature maps from classical samples to qudit states.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::qudit::{check_dim, QuditState};
use crate::{Error, Result};

/// A classical feature vector with an opaque source label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalSample {
    features: Vec<f64>,
    source_id: String,
}

impl ClassicalSample {
    pub fn new(features: Vec<f64>, source_id: impl Into<String>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::NonEmbeddable("empty feature vector".into()));
        }
        if let Some(bad) = features.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonEmbeddable(format!("non-finite feature {bad}")));
        }
        Ok(Self {
            features,
            source_id: source_id.into(),
        })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    /// Zero-pad to `d` and normalize.
    #[default]
    Amplitude,
    /// Hyperspherical angles `theta_j = pi * sigmoid(f_j)`.
    Angle,
}

/// The feature map `x -> U(x)|0_d>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingMap {
    kind: EmbeddingKind,
    target_dim: usize,
}

impl EmbeddingMap {
    pub fn new(kind: EmbeddingKind, target_dim: usize) -> Result<Self> {
        check_dim(target_dim)?;
        Ok(Self { kind, target_dim })
    }

    pub fn amplitude(target_dim: usize) -> Result<Self> {
        Self::new(EmbeddingKind::Amplitude, target_dim)
    }

    pub fn angle(target_dim: usize) -> Result<Self> {
        Self::new(EmbeddingKind::Angle, target_dim)
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    /// Largest feature length the map accepts.
    pub fn capacity(&self) -> usize {
        match self.kind {
            EmbeddingKind::Amplitude => self.target_dim,
            EmbeddingKind::Angle => self.target_dim - 1,
        }
    }

    /// Embeds one sample.
    pub fn embed(&self, x: &ClassicalSample) -> Result<QuditState> {
        let f = x.features();
        if f.len() > self.capacity() {
            return Err(Error::DimensionOverflow {
                len: f.len(),
                capacity: self.capacity(),
            });
        }
        match self.kind {
            EmbeddingKind::Amplitude => self.amplitude_embed(f),
            EmbeddingKind::Angle => Ok(self.angle_embed(f)),
        }
    }

    fn amplitude_embed(&self, f: &[f64]) -> Result<QuditState> {
        if f.iter().all(|&v| v == 0.0) {
            return Err(Error::NonEmbeddable("all-zero feature vector".into()));
        }
        let mut padded = vec![0.0; self.target_dim];
        padded[..f.len()].copy_from_slice(f);
        QuditState::from_real(&padded)
    }

    // a_0 = cos t1, a_k = sin t1 ... sin tk cos t(k+1), a_(d-1) = sin t1 ... sin t(d-1);
    // unused angles are 0, which zeroes every coordinate after the last feature.
    fn angle_embed(&self, f: &[f64]) -> QuditState {
        let d = self.target_dim;
        let mut thetas = vec![0.0; d - 1];
        for (t, &x) in thetas.iter_mut().zip(f) {
            *t = PI * sigmoid(x);
        }
        let mut amps = Vec::with_capacity(d);
        let mut sin_prod = 1.0;
        for &t in &thetas {
            amps.push(sin_prod * t.cos());
            sin_prod *= t.sin();
        }
        amps.push(sin_prod);
        // unit norm by construction; renormalize only to absorb rounding
        QuditState::from_real(&amps).expect("hyperspherical coordinates have unit norm")
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Indexed store of embedded states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumMemory {
    dim: usize,
    states: Vec<QuditState>,
    ids: Vec<String>,
}

impl QuantumMemory {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            states: Vec::new(),
            ids: Vec::new(),
        })
    }

    /// Builds a memory from states, labelling them by position.
    pub fn from_states(dim: usize, states: Vec<QuditState>) -> Result<Self> {
        let mut mem = Self::new(dim)?;
        for (i, s) in states.into_iter().enumerate() {
            mem.push(s, i.to_string())?;
        }
        Ok(mem)
    }

    pub fn push(&mut self, state: QuditState, id: impl Into<String>) -> Result<()> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch(state.dim(), self.dim));
        }
        self.states.push(state);
        self.ids.push(id.into());
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored states `X`.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[QuditState] {
        &self.states
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// Embeds every sample in order. Errors name the offending sample index.
pub fn embed_dataset(xs: &[ClassicalSample], map: &EmbeddingMap) -> Result<QuantumMemory> {
    let mut mem = QuantumMemory::new(map.target_dim())?;
    for (index, x) in xs.iter().enumerate() {
        let state = map.embed(x).map_err(|e| Error::Sample {
            index,
            source: Box::new(e),
        })?;
        mem.push(state, x.source_id())?;
    }
    Ok(mem)
}
