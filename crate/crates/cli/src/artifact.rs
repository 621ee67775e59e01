//! JSON artifacts. Each one carries the manifest of the run that wrote it.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use plroute::evaluator::EvaluationReport;
use plroute::scenarios::ScenarioSet;
use plroute::solver::SolutionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Det,
    Sto,
    AlphaZeroFast,
}

/// Everything needed to rerun the command that produced an artifact.
/// Thread counts and timings are left out on purpose: they do not affect
/// results and would break byte-for-byte reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub instance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenarios: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export_lp: Option<String>,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, instance: &Path, out: &Option<std::path::PathBuf>) -> Self {
        Self {
            command: command.into(),
            instance: instance.display().to_string(),
            mode: None,
            alpha: None,
            scenarios: None,
            scenario_seed: None,
            scenario_file: None,
            plan: None,
            evaluation_seed: None,
            trials: None,
            out: out.as_ref().map(|p| p.display().to_string()),
            export_lp: None,
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionArtifact {
    pub manifest: RunManifest,
    pub solution: SolutionRecord,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScenarioArtifact {
    pub manifest: RunManifest,
    pub scenarios: ScenarioSet,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluationArtifact {
    pub manifest: RunManifest,
    pub report: EvaluationReport,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn read(path: &Path) -> Result<serde_json::Value> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))
}

/// Accepts a `sample` artifact or a bare scenario set.
pub fn read_scenarios(path: &Path) -> Result<ScenarioSet> {
    let mut doc = read(path)?;
    let body = match doc.get_mut("scenarios") {
        Some(inner) if inner.is_object() => inner.take(),
        _ => doc,
    };
    let set: ScenarioSet = serde_json::from_value(body)
        .with_context(|| format!("{} is not a scenario set", path.display()))?;
    set.validate()
        .with_context(|| format!("{} holds an invalid scenario set", path.display()))?;
    Ok(set)
}

/// Accepts a `solve` artifact or a bare solution record.
pub fn read_plan(path: &Path) -> Result<SolutionRecord> {
    let mut doc = read(path)?;
    let body = match doc.get_mut("solution") {
        Some(inner) => inner.take(),
        None => doc,
    };
    serde_json::from_value(body).with_context(|| format!("{} is not a solution", path.display()))
}
