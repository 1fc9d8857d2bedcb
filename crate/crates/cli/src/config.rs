//! The run configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swdtau::classify::{CiMethod, ClassifierKind};
use swdtau::{DetectorConfig, SynthConfig};

use crate::error::CliError;

/// Classifier selection, including the `all` pseudo-kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindChoice {
    Lda,
    Qda,
    Svm,
    #[default]
    All,
}

impl KindChoice {
    pub fn kinds(self) -> Vec<ClassifierKind> {
        match self {
            KindChoice::Lda => vec![ClassifierKind::Lda],
            KindChoice::Qda => vec![ClassifierKind::Qda],
            KindChoice::Svm => vec![ClassifierKind::LinearSvm],
            KindChoice::All => ClassifierKind::ALL.to_vec(),
        }
    }
}

impl std::str::FromStr for KindChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lda" => Ok(KindChoice::Lda),
            "qda" => Ok(KindChoice::Qda),
            "svm" => Ok(KindChoice::Svm),
            "all" => Ok(KindChoice::All),
            other => Err(format!(
                "unknown classifier kind {other:?}; expected lda, qda, svm or all"
            )),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub kind: KindChoice,
    pub ci_method: CiMethod,
}

/// Input and output locations. Unset paths resolve inside the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub recording: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub scan_report: Option<PathBuf>,
    pub features: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub sizes: Vec<usize>,
    pub seed: u64,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            sizes: vec![64, 256, 1024, 4096],
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub detector: DetectorConfig,
    pub synth: SynthConfig,
    pub classifier: ClassifierSection,
    pub paths: PathsSection,
    pub bench: BenchSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| e.context(&path.display().to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.detector
            .validate()
            .map_err(|e| CliError::config(format!("detector: {e}")))?;
        self.synth
            .validate()
            .map_err(|e| CliError::config(format!("synth: {e}")))?;
        Ok(())
    }
}
