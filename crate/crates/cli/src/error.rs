use std::process::ExitCode;

use eerd_core::export::ExportError;
use eerd_core::oracle::JudgeError;
use eerd_core::refine::{PortError, RefineError};
use eerd_gateway::GatewayError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("pipeline failure: {0}")]
    Pipeline(String),
    #[error("gateway failure: {0}")]
    Gateway(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Pipeline(_) => 1,
            CliError::Config(_) => 2,
            CliError::Gateway(_) => 3,
        })
    }

    pub fn pipeline(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Pipeline(format!("{context}: {e}"))
    }
}

fn is_gateway_port(e: &PortError) -> bool {
    matches!(e, PortError::Gateway(_) | PortError::Judge(JudgeError::Gateway(_)))
}

/// Classifies a refinement failure for variant `id`.
pub fn from_refine(id: u64, e: RefineError) -> CliError {
    let gateway = match &e {
        RefineError::Editor { source, .. } | RefineError::Scorer { source, .. } => is_gateway_port(source),
        RefineError::Config(_) => return CliError::Config(e.to_string()),
    };
    if gateway {
        CliError::Gateway(format!("variant {id}: {e}"))
    } else {
        CliError::Pipeline(format!("variant {id}: {e}"))
    }
}

pub fn from_export(e: ExportError) -> CliError {
    match e {
        ExportError::Gateway(g) => CliError::Gateway(g.to_string()),
        other => CliError::Pipeline(other.to_string()),
    }
}

pub fn from_gateway(context: impl std::fmt::Display, e: GatewayError) -> CliError {
    match e {
        GatewayError::Config(_) => CliError::Config(format!("{context}: {e}")),
        other => CliError::Gateway(format!("{context}: {other}")),
    }
}

pub fn from_judge(id: u64, e: JudgeError) -> CliError {
    match e {
        JudgeError::Gateway(g) => CliError::Gateway(format!("variant {id}: {g}")),
        other => CliError::Pipeline(format!("variant {id}: {other}")),
    }
}
