use std::fmt;

use serde::Serialize;

use crate::spacefile::SpaceFileError;

/// Pipeline stage an error is attributed to. Each stage has its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Io,
    Space,
    Solver,
    Capacity,
    Fine,
    Cartan,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Io => 3,
            Stage::Space => 4,
            Stage::Solver => 5,
            Stage::Capacity => 6,
            Stage::Fine => 7,
            Stage::Cartan => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Io => "io",
            Stage::Space => "space",
            Stage::Solver => "solver",
            Stage::Capacity => "capacity",
            Stage::Fine => "fine",
            Stage::Cartan => "cartan",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Invalid configuration; `path` is the dotted key path, e.g. `problem.p`.
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("[{stage}] {source}")]
    Module { stage: Stage, source: finelab_core::Error },
    #[error("{}", space_file_message(.0))]
    SpaceFile(#[from] SpaceFileError),
}

fn space_file_message(e: &SpaceFileError) -> String {
    match e {
        SpaceFileError::Io { .. } => e.to_string(),
        _ => format!("[space] {e}"),
    }
}

impl RunError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        RunError::Config { path: path.into(), message: message.into() }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        RunError::Io { path: path.display().to_string(), source }
    }

    /// Tags a core error with the stage that raised it. Failures of the
    /// minimizer itself are reported as solver errors whatever the stage.
    pub fn module(stage: Stage, source: finelab_core::Error) -> Self {
        use finelab_core::Error as E;
        let stage = match source {
            E::MaxIterations { .. } | E::Infeasible(_) | E::EmptyComplement | E::InfiniteEnergyInput { .. } => {
                Stage::Solver
            }
            _ => stage,
        };
        RunError::Module { stage, source }
    }

    pub fn stage(&self) -> Stage {
        match self {
            RunError::Config { .. } => Stage::Config,
            RunError::Io { .. } => Stage::Io,
            RunError::Module { stage, .. } => *stage,
            RunError::SpaceFile(SpaceFileError::Io { .. }) => Stage::Io,
            RunError::SpaceFile(_) => Stage::Space,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.stage().exit_code()
    }
}

/// Shorthand for `map_err(|e| RunError::module(stage, e))`.
pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, RunError>;
}

impl<T> AtStage<T> for finelab_core::Result<T> {
    fn at(self, stage: Stage) -> Result<T, RunError> {
        self.map_err(|e| RunError::module(stage, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let all = [Stage::Config, Stage::Io, Stage::Space, Stage::Solver, Stage::Capacity, Stage::Fine, Stage::Cartan];
        let mut codes: Vec<i32> = all.iter().map(|s| s.exit_code()).collect();
        codes.sort_unstable();
        codes.dedup();
        assert_eq!(codes.len(), all.len());
        assert!(codes.iter().all(|&c| c > 1));
    }

    #[test]
    fn solver_failures_keep_their_class() {
        let e = RunError::module(Stage::Fine, finelab_core::Error::MaxIterations { iterations: 3, residual: 1.0 });
        assert_eq!(e.stage(), Stage::Solver);
        let e = RunError::module(Stage::Fine, finelab_core::Error::ScaleUnderflow);
        assert_eq!(e.exit_code(), 7);
    }
}
