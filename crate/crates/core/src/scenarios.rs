//! Travel-time scenarios: truncated-normal multipliers on nominal arc times,
//! assembled into uniform sample-average scenario sets.
//!
//! Every scenario draws from its own ChaCha8 stream keyed by the user seed
//! and a purpose tag, so the set does not depend on how many workers
//! generate it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Matrix, PdpNetwork};

/// Recorded in every scenario set so a replay can use the same generator.
pub const RNG_ALGORITHM: &str =
    "chacha8(key=seed_le||tag, stream=index); rand_distr::Normal; redraw while <= 0";

pub const DEFAULT_MEAN: f64 = 1.0;
pub const DEFAULT_VARIANCE: f64 = 0.25;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario configuration: {0}")]
    InvalidConfig(String),
    #[error("scenario {scenario}, arc {arc}: multiplier {value} is not positive")]
    InvalidMultiplier {
        scenario: usize,
        arc: usize,
        value: f64,
    },
    #[error("scenario probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),
    #[error("scenario set is empty")]
    Empty,
    #[error("scenario set shape mismatch: {0}")]
    Shape(String),
    #[error("malformed scenario document: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Purpose of a random stream. Distinct tags give disjoint key spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Scenario,
    Evaluation,
}

impl StreamTag {
    fn bytes(self) -> [u8; 8] {
        match self {
            StreamTag::Scenario => *b"scenario",
            StreamTag::Evaluation => *b"eval\0\0\0\0",
        }
    }
}

/// Independent generator for `(seed, tag, index)`.
pub fn stream_rng(seed: u64, tag: StreamTag, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
    pub count: usize,
}

impl ScenarioConfig {
    /// Multiplier distribution N(1, 0.25) truncated to positive values.
    pub fn new(seed: u64, count: usize) -> Self {
        Self {
            mean: DEFAULT_MEAN,
            variance: DEFAULT_VARIANCE,
            seed,
            count,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.variance > 0.0) || !self.variance.is_finite() {
            return Err(ScenarioError::InvalidConfig(format!(
                "variance must be positive, got {}",
                self.variance
            )));
        }
        if !self.mean.is_finite() {
            return Err(ScenarioError::InvalidConfig("mean must be finite".into()));
        }
        if self.count == 0 {
            return Err(ScenarioError::InvalidConfig(
                "count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<MultiplierSampler, ScenarioError> {
        self.validate()?;
        MultiplierSampler::new(self.mean, self.variance)
    }
}

/// Normal multiplier redrawn until strictly positive.
#[derive(Debug, Clone, Copy)]
pub struct MultiplierSampler {
    normal: Normal<f64>,
}

impl Default for MultiplierSampler {
    fn default() -> Self {
        Self::new(DEFAULT_MEAN, DEFAULT_VARIANCE).expect("default parameters are valid")
    }
}

impl MultiplierSampler {
    pub fn new(mean: f64, variance: f64) -> Result<Self, ScenarioError> {
        let normal = Normal::new(mean, variance.sqrt())
            .map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
        Ok(Self { normal })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_counted(rng).0
    }

    /// Returns the accepted draw and the number of discarded raw draws.
    pub fn sample_counted<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u32) {
        let mut rejected = 0;
        loop {
            let x = self.normal.sample(rng);
            if x > 0.0 {
                return (x, rejected);
            }
            rejected += 1;
        }
    }
}

/// One draw from the default multiplier distribution.
pub fn sample_multiplier<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    MultiplierSampler::default().sample(rng)
}

/// Number of unordered node pairs `{i, j}`, `i < j`.
pub fn pair_count(nodes: usize) -> usize {
    nodes * nodes.saturating_sub(1) / 2
}

/// Position of the unordered pair `{i, j}` in row-major upper-triangle order.
#[inline]
pub fn pair_index(nodes: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j);
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    lo * nodes - lo * (lo + 1) / 2 + (hi - lo - 1)
}

/// One multiplier per unordered network pair, drawn in pair order.
pub fn sample_pair_multipliers<R: Rng + ?Sized>(
    nodes: usize,
    sampler: &MultiplierSampler,
    rng: &mut R,
) -> Vec<f64> {
    (0..pair_count(nodes))
        .map(|_| sampler.sample(rng))
        .collect()
}

/// Realized travel times: multiplier times nominal, symmetric, zero diagonal.
pub fn realize(nominal: &Matrix, multipliers: &[f64]) -> Matrix {
    let nodes = nominal.size();
    let mut out = Matrix::zeros(nodes);
    for i in 0..nodes {
        for j in i + 1..nodes {
            let v = multipliers[pair_index(nodes, i, j)] * nominal.get(i, j);
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: ScenarioConfig,
    pub rng: String,
    /// Set when the set was derived from another one, e.g. `"supremum"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived: Option<String>,
}

/// A finite set of travel-time scenarios over a network's nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    nodes: usize,
    multipliers: Vec<Vec<f64>>,
    probabilities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

impl ScenarioSet {
    /// Uniform probabilities over the given multiplier rows.
    pub fn uniform(nodes: usize, multipliers: Vec<Vec<f64>>) -> Result<Self, ScenarioError> {
        let p = 1.0 / multipliers.len().max(1) as f64;
        let probabilities = vec![p; multipliers.len()];
        Self::from_parts(nodes, multipliers, probabilities, None)
    }

    pub fn from_parts(
        nodes: usize,
        multipliers: Vec<Vec<f64>>,
        probabilities: Vec<f64>,
        provenance: Option<Provenance>,
    ) -> Result<Self, ScenarioError> {
        let set = Self {
            nodes,
            multipliers,
            probabilities,
            provenance,
        };
        set.validate()?;
        Ok(set)
    }

    /// The nominal travel times as a single certain scenario.
    pub fn nominal(network: &PdpNetwork) -> Self {
        let nodes = network.node_count();
        Self {
            nodes,
            multipliers: vec![vec![1.0; pair_count(nodes)]],
            probabilities: vec![1.0],
            provenance: None,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.multipliers.is_empty() {
            return Err(ScenarioError::Empty);
        }
        if self.probabilities.len() != self.multipliers.len() {
            return Err(ScenarioError::Shape(format!(
                "{} probability entries for {} scenarios",
                self.probabilities.len(),
                self.multipliers.len()
            )));
        }
        let pairs = pair_count(self.nodes);
        for (s, row) in self.multipliers.iter().enumerate() {
            if row.len() != pairs {
                return Err(ScenarioError::Shape(format!(
                    "scenario {s} has {} arcs, expected {pairs}",
                    row.len()
                )));
            }
            if let Some((arc, &value)) = row
                .iter()
                .enumerate()
                .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
            {
                return Err(ScenarioError::InvalidMultiplier {
                    scenario: s,
                    arc,
                    value,
                });
            }
        }
        if let Some((s, &p)) = self
            .probabilities
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p >= 0.0))
        {
            return Err(ScenarioError::Shape(format!(
                "scenario {s} has invalid probability {p}"
            )));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ScenarioError::ProbabilitySum(total));
        }
        Ok(())
    }

    /// Fails unless the set was sampled for a network of this size.
    pub fn check_network(&self, network: &PdpNetwork) -> Result<(), ScenarioError> {
        if self.nodes != network.node_count() {
            return Err(ScenarioError::Shape(format!(
                "scenario set covers {} nodes, network has {}",
                self.nodes,
                network.node_count()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.multipliers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multipliers.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn multipliers(&self, scenario: usize) -> &[f64] {
        &self.multipliers[scenario]
    }

    pub fn multiplier(&self, scenario: usize, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        self.multipliers[scenario][pair_index(self.nodes, i, j)]
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Realized travel-time matrix of scenario `scenario`.
    pub fn travel_times(&self, network: &PdpNetwork, scenario: usize) -> Matrix {
        realize(network.time_matrix(), &self.multipliers[scenario])
    }

    pub fn all_travel_times(&self, network: &PdpNetwork) -> Vec<Matrix> {
        (0..self.len())
            .map(|s| self.travel_times(network, s))
            .collect()
    }

    /// Element-wise worst case over all scenarios, with probability one.
    ///
    /// Nominal times are fixed per arc, so the largest multiplier gives the
    /// largest realized time.
    pub fn supremum_scenario(&self) -> ScenarioSet {
        let mut sup = self.multipliers[0].clone();
        for row in &self.multipliers[1..] {
            for (s, &v) in sup.iter_mut().zip(row) {
                *s = s.max(v);
            }
        }
        let provenance = self.provenance.clone().map(|mut p| {
            p.derived = Some("supremum".into());
            p
        });
        ScenarioSet {
            nodes: self.nodes,
            multipliers: vec![sup],
            probabilities: vec![1.0],
            provenance,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let set: ScenarioSet = serde_json::from_str(text)?;
        set.validate()?;
        Ok(set)
    }
}

/// Samples `config.count` scenarios with uniform probability.
pub fn generate_scenarios(
    network: &PdpNetwork,
    config: &ScenarioConfig,
) -> Result<ScenarioSet, ScenarioError> {
    let sampler = config.sampler()?;
    let nodes = network.node_count();
    let multipliers: Vec<Vec<f64>> = (0..config.count)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(config.seed, StreamTag::Scenario, s as u64);
            sample_pair_multipliers(nodes, &sampler, &mut rng)
        })
        .collect();
    let p = 1.0 / config.count as f64;
    ScenarioSet::from_parts(
        nodes,
        multipliers,
        vec![p; config.count],
        Some(Provenance {
            config: *config,
            rng: RNG_ALGORITHM.into(),
            derived: None,
        }),
    )
}
