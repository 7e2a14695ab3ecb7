//! Pipeline configuration file (TOML). Relative paths resolve against the
//! directory containing the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use eerd_core::forge::Split;
use eerd_core::oracle::MatchMode;
use eerd_core::refine::{AuditConfig, PolishConfig, SimulatedBaseModel};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum JudgeMode {
    /// Rule-based diagnostics and edits; no model calls during refinement.
    #[default]
    Oracle,
    /// Guide-model audit, polish and judging.
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectedSourceKind {
    #[default]
    ModelEndpoint,
    InitialTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaEntry {
    pub name: String,
    pub schema: PathBuf,
    pub rubrics: PathBuf,
    #[serde(default = "train")]
    pub split: Split,
}

fn train() -> Split {
    Split::Train
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    pub one: usize,
    pub two: usize,
    pub three: usize,
    pub balance_window: usize,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            one: 50,
            two: 50,
            three: 50,
            balance_window: 0,
        }
    }
}

impl PlanConfig {
    pub fn total(&self) -> usize {
        self.one + self.two + self.three
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolishSection {
    pub enabled: bool,
    pub max_iterations: usize,
}

impl Default for PolishSection {
    fn default() -> Self {
        PolishSection {
            enabled: true,
            max_iterations: PolishConfig::default().max_iterations,
        }
    }
}

impl PolishSection {
    pub fn config(&self) -> Option<PolishConfig> {
        self.enabled.then_some(PolishConfig {
            max_iterations: self.max_iterations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub schemas: Vec<SchemaEntry>,
    #[serde(default)]
    pub plan: PlanConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub polish: PolishSection,
    #[serde(default)]
    pub judge_mode: JudgeMode,
    #[serde(default)]
    pub match_mode: MatchMode,
    #[serde(default)]
    pub rejected_source: RejectedSourceKind,
    /// Fixes the rule-based editor applies per audit call.
    #[serde(default = "one")]
    pub fixes_per_call: usize,
    /// Offline base model used when no base endpoint is configured.
    #[serde(default)]
    pub simulation: SimulatedBaseModel,
    #[serde(default)]
    pub jobs: usize,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn one() -> usize {
    1
}

impl PipelineConfig {
    /// Reads, resolves paths and validates. Every failure is a config error.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.output_dir);
        for s in &mut cfg.schemas {
            resolve(&mut s.schema);
            resolve(&mut s.rubrics);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schemas.is_empty() {
            return Err(CliError::Config("no schemas configured".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for s in &self.schemas {
            if !names.insert(s.name.as_str()) {
                return Err(CliError::Config(format!("schema `{}` is listed twice", s.name)));
            }
            if s.name.is_empty() || s.name.contains(['/', '\\']) {
                return Err(CliError::Config(format!("schema name `{}` is not a plain file stem", s.name)));
            }
            for p in [&s.schema, &s.rubrics] {
                if !p.is_file() {
                    return Err(CliError::Config(format!("file not found: {}", p.display())));
                }
            }
        }
        if self.plan.total() == 0 {
            return Err(CliError::Config("plan requests zero variants".into()));
        }
        if self.fixes_per_call == 0 {
            return Err(CliError::Config("fixes_per_call must be at least 1".into()));
        }
        self.audit.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.polish.enabled && self.polish.max_iterations == 0 {
            return Err(CliError::Config("polish.max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    /// Stable digest of the effective configuration. The output directory
    /// and job count are left out since neither changes any artifact.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let obj = v.as_object_mut().expect("struct");
        obj.remove("output_dir");
        obj.remove("jobs");
        let json = serde_json::to_vec(&v).expect("value serializes");
        eerd_core::forge::sha256_hex(&json)
    }
}
