//! End-to-end run: frequency table, extraction, expert modification,
//! parameter removal and evaluation, with every intermediate artifact
//! written to an output directory.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bpa::{BpaError, BpaSet};
use crate::eval::{evaluate_set, render_table, EvaluationReport};
use crate::expert::{modify, ExpertBpaTable, ModificationMode};
use crate::extraction::{build_frequency_table, extract_table, ExtractionError, ExtractionMethod};
use crate::frame::{Frame, FrameError};
use crate::ingest::{self, load_param_list, parse_cases, write_file, CaseRecord, IngestError, ReferenceIntervals};
use crate::prune::{prune_group, ParameterGroup, ParameterGroups, PruneResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Frequency,
    Extract,
    Modify,
    Prune,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Frequency => "frequency",
            Stage::Extract => "extract",
            Stage::Modify => "modify",
            Stage::Prune => "prune",
            Stage::Evaluate => "evaluate",
        })
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Bpa(#[from] BpaError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
#[error("{stage} stage: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: StageError,
}

fn at<E: Into<StageError>>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError {
        stage,
        source: e.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpertMode {
    #[default]
    None,
    Part,
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source", content = "path")]
pub enum DropSource {
    #[default]
    None,
    File(PathBuf),
    AutoPrune,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// `1`, `2a`, `2b`, `3` or `3/<variant>`.
    pub method: String,
    pub expert_mode: ExpertMode,
    pub drop: DropSource,
    pub threshold: f64,
    pub min_pairs: usize,
    pub min_support: u64,
    /// Parameter-to-group file for automatic pruning; without it every
    /// parameter is treated as biochemical.
    pub groups: Option<PathBuf>,
    /// Frame order; derived from the training outcomes when absent.
    pub frame: Option<Vec<String>>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            method: "2a".into(),
            expert_mode: ExpertMode::None,
            drop: DropSource::None,
            threshold: 0.5,
            min_pairs: 10,
            min_support: 1,
            groups: None,
            frame: None,
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<ExtractionMethod, StageError> {
        let method: ExtractionMethod = self.method.parse()?;
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(StageError::Config(format!(
                "threshold {} outside (0, 1]",
                self.threshold
            )));
        }
        if self.min_pairs < 2 {
            return Err(StageError::Config("min_pairs must be at least 2".into()));
        }
        if self.min_support < 1 {
            return Err(StageError::Config("min_support must be at least 1".into()));
        }
        Ok(method)
    }
}

/// Outcome labels in natural order: numerically when every label is an
/// integer, lexicographically otherwise.
pub fn natural_frame(cases: &[CaseRecord]) -> Result<Frame, FrameError> {
    let labels: BTreeSet<&str> = cases.iter().map(|c| c.outcome.as_str()).collect();
    let mut labels: Vec<&str> = labels.into_iter().collect();
    if labels.iter().all(|l| l.parse::<i64>().is_ok()) {
        labels.sort_by_key(|l| l.parse::<i64>().expect("checked integer"));
    }
    Frame::new(labels)
}

pub fn load_frame(path: &Path) -> Result<Frame, StageError> {
    let text = ingest::read_to_string(path)?;
    Ok(Frame::new(
        text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned),
    )?)
}

/// Prunes each group separately and merges the removal lists.
pub fn auto_prune(
    cases: &[CaseRecord],
    groups: &ParameterGroups,
    threshold: f64,
    min_pairs: usize,
) -> Vec<PruneResult> {
    [ParameterGroup::Biochemical, ParameterGroup::Hematologic]
        .into_iter()
        .filter_map(|g| {
            let params = groups.members(g);
            (!params.is_empty()).then(|| prune_group(cases, &params, g, threshold, min_pairs))
        })
        .collect()
}

pub struct PipelineInputs<'a> {
    pub train: &'a Path,
    pub test: &'a Path,
    pub intervals: &'a Path,
    pub expert: Option<&'a Path>,
    pub out_dir: &'a Path,
}

/// Runs every stage and returns the evaluation report. Artifacts written to
/// `out_dir`: `config.json`, `frequency_table.json`, `bpa_extracted.json`,
/// `bpa_modified.json` (expert mode only), `bpa_final.json`,
/// `prune_<group>.json` (auto-prune only), `drop_params.txt`, `report.json`
/// and `report.txt`.
pub fn run_pipeline(config: &PipelineConfig, inputs: &PipelineInputs<'_>) -> Result<EvaluationReport, PipelineError> {
    let method = config.validate().map_err(at(Stage::Load))?;
    let out = inputs.out_dir;
    std::fs::create_dir_all(out)
        .map_err(|source| IngestError::Io {
            path: out.to_owned(),
            source,
        })
        .map_err(at(Stage::Load))?;
    let config_json = serde_json::to_string_pretty(config).expect("config serializes") + "\n";
    write_file(&out.join("config.json"), config_json.as_bytes()).map_err(at(Stage::Load))?;

    let train = parse_cases(inputs.train).map_err(at(Stage::Load))?;
    let test = parse_cases(inputs.test).map_err(at(Stage::Load))?;
    let intervals = ReferenceIntervals::load(inputs.intervals).map_err(at(Stage::Load))?;
    let frame = match &config.frame {
        Some(labels) => Frame::new(labels.iter().cloned()),
        None => natural_frame(&train),
    }
    .map_err(at(Stage::Load))?;

    let table = build_frequency_table(&train, &intervals, &frame)
        .map_err(at(Stage::Frequency))?
        .with_min_support(config.min_support);
    write_file(&out.join("frequency_table.json"), table.to_json().as_bytes()).map_err(at(Stage::Frequency))?;

    let extracted: BpaSet<f64> = extract_table(&table, method).map_err(at(Stage::Extract))?;
    extracted
        .save(&out.join("bpa_extracted.json"))
        .map_err(at(Stage::Extract))?;

    let mode = match config.expert_mode {
        ExpertMode::None => None,
        ExpertMode::Part => Some(ModificationMode::Part),
        ExpertMode::All => Some(ModificationMode::All),
    };
    let bpa = match (mode, inputs.expert) {
        (Some(mode), Some(path)) => {
            let expert = ExpertBpaTable::load(path).map_err(at(Stage::Modify))?;
            let modified = modify(&extracted, &expert, mode).map_err(at(Stage::Modify))?;
            modified
                .save(&out.join("bpa_modified.json"))
                .map_err(at(Stage::Modify))?;
            modified
        }
        (Some(_), None) => {
            return Err(at(Stage::Modify)(StageError::Config(
                "expert mode set without an expert file".into(),
            )));
        }
        (None, _) => extracted,
    };
    bpa.save(&out.join("bpa_final.json")).map_err(at(Stage::Modify))?;

    let drop: BTreeSet<String> = match &config.drop {
        DropSource::None => BTreeSet::new(),
        DropSource::File(path) => load_param_list(path).map_err(at(Stage::Prune))?,
        DropSource::AutoPrune => {
            let groups = match &config.groups {
                Some(path) => ParameterGroups::load(path).map_err(at(Stage::Prune))?,
                None => {
                    let mut g = ParameterGroups::new();
                    let seen: HashSet<&str> = intervals.parameters().collect();
                    for p in seen {
                        g.insert(p, ParameterGroup::Biochemical);
                    }
                    g
                }
            };
            let results = auto_prune(&train, &groups, config.threshold, config.min_pairs);
            for r in &results {
                write_file(&out.join(format!("prune_{}.json", r.group)), r.to_json().as_bytes())
                    .map_err(at(Stage::Prune))?;
            }
            results.iter().flat_map(|r| r.removed_all.iter().cloned()).collect()
        }
    };
    let drop_text: String = drop.iter().map(|p| format!("{p}\n")).collect();
    write_file(&out.join("drop_params.txt"), drop_text.as_bytes()).map_err(at(Stage::Prune))?;

    let report = evaluate_set(&test, &bpa, &intervals, &drop);
    write_file(&out.join("report.json"), report.to_json().as_bytes()).map_err(at(Stage::Evaluate))?;
    let label = format!("Method {}", report.method);
    write_file(&out.join("report.txt"), render_table(&[(&label, &report)]).as_bytes()).map_err(at(Stage::Evaluate))?;
    Ok(report)
}
