//! Pipeline configuration: a TOML file whose every top-level key can be
//! overridden by a flag of the same name.

use std::path::{Path, PathBuf};

use clap::Args;
use egolink_core::aggregation::Replay;
use egolink_core::ego::{DegreeClassScheme, SplitProportions};
use egolink_core::features::{
    catalogue_with_windows, parse_duration, Calendar, ScoreId, ScoringConfig,
};
use egolink_core::synth::SynthConfig;
use egolink_core::{DegreeClass, ObservationWindow};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, IoContext, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub workspace: PathBuf,
    pub window_start: Option<i64>,
    pub window_end: Option<i64>,
    pub strict: bool,
    pub seed: u64,
    pub min_class_size: usize,
    pub pooled_from: usize,
    pub learning: f64,
    pub validation: f64,
    pub test: f64,
    /// Explicit score list; the standard catalogue over `d_grid` when absent.
    pub scores: Option<Vec<String>>,
    pub d_grid: Vec<String>,
    pub tz: String,
    pub f_min: f64,
    pub aggregators: Vec<String>,
    pub g_grid: Vec<usize>,
    pub replay: String,
    /// Degree classes to process; all when empty.
    pub classes: Vec<String>,
    /// Cap on egos per class and split set.
    pub sample: Option<usize>,
    /// File of ego ids to keep (one per line).
    pub egos: Option<PathBuf>,
    /// Report directory; `<workspace>/reports` when absent.
    pub output: Option<PathBuf>,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let split = SplitProportions::default();
        Self {
            input: None,
            workspace: PathBuf::from("egolink-work"),
            window_start: None,
            window_end: None,
            strict: false,
            seed: 0,
            min_class_size: 5,
            pooled_from: DegreeClassScheme::default().pooled_from,
            learning: split.learning,
            validation: split.validation,
            test: split.test,
            scores: None,
            d_grid: ["1h", "3h", "24h", "168h"].map(String::from).to_vec(),
            tz: "UTC".into(),
            f_min: egolink_core::features::DEFAULT_FANO_FLOOR,
            aggregators: vec!["borda".into(), "medrank".into()],
            g_grid: egolink_core::aggregation::DEFAULT_G_GRID.to_vec(),
            replay: Replay::default().to_string(),
            classes: Vec::new(),
            sample: None,
            egos: None,
            output: None,
            synth: SynthConfig::default(),
        }
    }
}

/// One flag per top-level config key.
#[derive(Debug, Clone, Default, Args)]
pub struct KeyFlags {
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub workspace: Option<PathBuf>,
    #[arg(long = "window_start", visible_alias = "window-start", value_name = "UNIX_SECONDS")]
    pub window_start: Option<i64>,
    #[arg(long = "window_end", visible_alias = "window-end", value_name = "UNIX_SECONDS")]
    pub window_end: Option<i64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub strict: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "min_class_size", visible_alias = "min-class-size")]
    pub min_class_size: Option<usize>,
    #[arg(long = "pooled_from", visible_alias = "pooled-from")]
    pub pooled_from: Option<usize>,
    #[arg(long)]
    pub learning: Option<f64>,
    #[arg(long)]
    pub validation: Option<f64>,
    #[arg(long)]
    pub test: Option<f64>,
    #[arg(long, value_delimiter = ',', value_name = "IDS")]
    pub scores: Option<Vec<String>>,
    #[arg(long = "d_grid", visible_alias = "d-grid", value_delimiter = ',', value_name = "DURATIONS")]
    pub d_grid: Option<Vec<String>>,
    #[arg(long)]
    pub tz: Option<String>,
    #[arg(long = "f_min", visible_alias = "f-min")]
    pub f_min: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub aggregators: Option<Vec<String>>,
    #[arg(long = "g_grid", visible_alias = "g-grid", value_delimiter = ',')]
    pub g_grid: Option<Vec<usize>>,
    #[arg(long, value_name = "stepwise|proportional")]
    pub replay: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub egos: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,
}

fn toml_value<T: Serialize>(value: &T) -> Result<toml::Value> {
    toml::Value::try_from(value).map_err(|e| CliError::internal(format!("flag encoding: {e}")))
}

impl KeyFlags {
    fn into_table(self) -> Result<toml::Table> {
        let mut table = toml::Table::new();
        macro_rules! put {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    table.insert(stringify!($field).to_string(), toml_value(v)?);
                })*
            };
        }
        put!(
            input, workspace, window_start, window_end, strict, seed, min_class_size,
            pooled_from, learning, validation, test, scores, d_grid, tz, f_min, aggregators,
            g_grid, replay, classes, sample, egos, output
        );
        Ok(table)
    }
}

/// Parses `key=value` where the value is read as TOML, falling back to a
/// bare string. Dotted keys address nested tables (`synth.p_in=0.5`).
fn apply_set(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got `{assignment}`")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut cursor = table;
    for part in &parts[..parts.len() - 1] {
        cursor = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::usage(format!("`{part}` in `{key}` is not a table")))?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

const PATH_KEYS: [&str; 4] = ["input", "workspace", "egos", "output"];

/// Loads the config file (if any), then layers `--set` assignments and named
/// flags on top. Relative paths in the file resolve against its directory.
pub fn load(file: Option<&Path>, flags: KeyFlags, sets: &[String]) -> Result<PipelineConfig> {
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).at(path)?;
            let mut table: toml::Table = toml::from_str(&text)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new(""));
            for key in PATH_KEYS {
                if let Some(toml::Value::String(p)) = table.get_mut(key) {
                    if Path::new(p.as_str()).is_relative() {
                        *p = base.join(p.as_str()).to_string_lossy().into_owned();
                    }
                }
            }
            table
        }
        None => toml::Table::new(),
    };
    for assignment in sets {
        apply_set(&mut table, assignment)?;
    }
    for (key, value) in flags.into_table()? {
        table.insert(key, value);
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::usage(format!("config: {}", e.message())))
}

/// Aggregators computed by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    Borda,
    Medrank,
}

impl Aggregator {
    pub fn name(self) -> &'static str {
        match self {
            Aggregator::Borda => "borda",
            Aggregator::Medrank => "medrank",
        }
    }
}

/// Validated, typed view of a [`PipelineConfig`].
#[derive(Debug, Clone)]
pub struct Settings {
    pub raw: PipelineConfig,
    pub window: ObservationWindow,
    pub proportions: SplitProportions,
    pub scheme: DegreeClassScheme,
    pub scores: Vec<ScoreId>,
    pub scoring: ScoringConfig,
    pub aggregators: Vec<Aggregator>,
    pub replay: Replay,
    pub classes: Vec<DegreeClass>,
}

impl Settings {
    pub fn new(raw: PipelineConfig) -> Result<Self> {
        let window = match (raw.window_start, raw.window_end) {
            (None, None) => ObservationWindow::unbounded(),
            (start, end) => ObservationWindow::new(
                start.unwrap_or(i64::MIN),
                end.unwrap_or(i64::MAX),
            )
            .map_err(CliError::usage)?,
        };
        let proportions = SplitProportions {
            learning: raw.learning,
            validation: raw.validation,
            test: raw.test,
        };
        proportions.validate().map_err(CliError::usage)?;
        if raw.pooled_from < 3 {
            return Err(CliError::usage("pooled_from must be at least 3"));
        }
        let scheme = DegreeClassScheme {
            pooled_from: raw.pooled_from,
        };
        let scores = match &raw.scores {
            Some(list) => {
                let ids = list
                    .iter()
                    .map(|s| s.trim().parse::<ScoreId>().map_err(CliError::usage))
                    .collect::<Result<Vec<_>>>()?;
                let mut seen = std::collections::HashSet::new();
                if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
                    return Err(CliError::usage(format!("score `{dup}` listed twice")));
                }
                ids
            }
            None => {
                let windows = raw
                    .d_grid
                    .iter()
                    .map(|d| parse_duration(d).map_err(CliError::usage))
                    .collect::<Result<Vec<_>>>()?;
                catalogue_with_windows(&windows)
            }
        };
        if scores.is_empty() {
            return Err(CliError::usage("no scores selected"));
        }
        if !(raw.f_min > 0.0 && raw.f_min.is_finite()) {
            return Err(CliError::usage("f_min must be positive"));
        }
        let calendar: Calendar = raw.tz.parse().map_err(CliError::usage)?;
        let aggregators = raw
            .aggregators
            .iter()
            .map(|a| match a.as_str() {
                "borda" => Ok(Aggregator::Borda),
                "medrank" => Ok(Aggregator::Medrank),
                other => Err(CliError::usage(format!("unknown aggregator `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if raw.g_grid.is_empty() || raw.g_grid.contains(&0) {
            return Err(CliError::usage("g_grid must be non-empty with positive entries"));
        }
        let replay = raw.replay.parse().map_err(CliError::usage)?;
        let classes = raw
            .classes
            .iter()
            .map(|c| c.parse::<DegreeClass>().map_err(CliError::usage))
            .collect::<Result<Vec<_>>>()?;
        if raw.sample == Some(0) {
            return Err(CliError::usage("sample must be positive"));
        }
        Ok(Self {
            window,
            proportions,
            scheme,
            scoring: ScoringConfig {
                scores: scores.clone(),
                fano_floor: raw.f_min,
                calendar,
            },
            scores,
            aggregators,
            replay,
            classes,
            raw,
        })
    }

    pub fn workspace(&self) -> &Path {
        &self.raw.workspace
    }

    pub fn output_dir(&self) -> PathBuf {
        self.raw
            .output
            .clone()
            .unwrap_or_else(|| self.raw.workspace.join("reports"))
    }

    pub fn wants_class(&self, class: DegreeClass) -> bool {
        self.classes.is_empty() || self.classes.contains(&class)
    }
}
