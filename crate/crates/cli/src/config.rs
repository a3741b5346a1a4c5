//! Run configuration: TOML schema, parsing with line-referenced errors and
//! emission back to TOML.

use std::ops::Range;
use std::path::{Path, PathBuf};

use gasplant_core::oracle::{JumpDependence, PathConfig, StartState};
use gasplant_core::{CopulaSpec, GridSpec, ModelSpec, PlantSpec, Solver};
use serde::{Deserialize, Serialize};
use toml_edit::{ImDocument, Item, Table, TableLike, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Solve,
    Validate,
    Simulate,
}

/// Monte Carlo settings for `simulate` mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    /// Euler step, hours.
    pub step: f64,
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub jump_dependence: JumpDependence,
    pub starts: Vec<StartState>,
    /// Directory of a previous `solve` run; the output directory when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_dir: Option<PathBuf>,
}

impl SimulationSpec {
    pub fn path_config(&self) -> PathConfig {
        PathConfig {
            step: self.step,
            paths: self.paths,
            seed: self.seed,
            jump_dependence: self.jump_dependence,
        }
    }
}

/// Slice coordinates for the emitted plot scripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotSlices {
    pub s_g: Vec<f64>,
    pub s_e: Vec<f64>,
    pub l: Vec<f64>,
}

impl Default for PlotSlices {
    fn default() -> Self {
        Self {
            s_g: vec![0.0, 10.0, 14.0, 20.0],
            s_e: vec![0.0, 60.0, 150.0],
            l: vec![20.0, 300.0, 320.0, 420.0, 600.0],
        }
    }
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default)]
    pub emit_plots: bool,
    /// Times to maturity to record, hours. Only `τ = T` when empty.
    #[serde(default)]
    pub snapshots: Vec<f64>,
    pub model: ModelSpec,
    #[serde(default)]
    pub plant: PlantSpec,
    #[serde(default)]
    pub copula: CopulaSpec,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
    #[serde(default)]
    pub plots: PlotSlices,
}

impl RunConfig {
    /// Snapshot times with the default applied.
    pub fn snapshot_times(&self) -> Vec<f64> {
        if self.snapshots.is_empty() {
            vec![self.model.horizon]
        } else {
            self.snapshots.clone()
        }
    }

    /// Checks every invariant. The error carries the dotted path of the
    /// offending field.
    pub fn validate(&self) -> gasplant_core::Result<()> {
        self.model.validate()?;
        self.plant.validate("plant")?;
        self.copula.validate("copula")?;
        self.grid.validate("grid")?;
        // cross-checks between the parts, e.g. a fixed gas axis with gas dynamics
        Solver::new(&self.model, &self.plant, &self.copula, &self.grid)?;
        let horizon = self.model.horizon;
        for (k, &tau) in self.snapshots.iter().enumerate() {
            if !(0.0..=horizon).contains(&tau) {
                return Err(gasplant_core::Error::InvalidParameter {
                    field: format!("snapshots[{k}]"),
                    reason: format!("{tau} lies outside [0, {horizon}]"),
                });
            }
        }
        if let Some(sim) = &self.simulation {
            let invalid = |field: String, reason: &str| gasplant_core::Error::InvalidParameter {
                field,
                reason: reason.into(),
            };
            if !(sim.step.is_finite() && sim.step > 0.0) {
                return Err(invalid("simulation.step".into(), "must be > 0"));
            }
            if sim.paths == 0 {
                return Err(invalid("simulation.paths".into(), "must be >= 1"));
            }
            for (k, s) in sim.starts.iter().enumerate() {
                if s.regime >= self.model.n_regimes() {
                    return Err(invalid(format!("simulation.starts[{k}].regime"), "no such regime"));
                }
                if !(self.plant.l_min..=self.plant.l_max).contains(&s.l) {
                    return Err(invalid(format!("simulation.starts[{k}].l"), "outside the temperature range"));
                }
                if !(s.s_e.is_finite() && s.s_g.is_finite()) {
                    return Err(invalid(format!("simulation.starts[{k}]"), "prices must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Parses and validates a configuration. `origin` names the source in
/// error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config {
        origin: origin.into(),
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    cfg.validate().map_err(|e| config_error(origin, Some(text), e))?;
    Ok(cfg)
}

/// Wraps a validation failure. Stability violations stay numerical errors;
/// everything else becomes a configuration error, located in `text` when
/// the failing field is known.
pub fn config_error(origin: &str, text: Option<&str>, e: gasplant_core::Error) -> CliError {
    use gasplant_core::Error as E;
    match e {
        E::Unstable { .. } | E::Cfl { .. } | E::NonFinite { .. } => CliError::Core(e),
        _ => {
            let line = match (&e, text) {
                (E::InvalidParameter { field, .. }, Some(t)) => locate(t, field),
                _ => None,
            };
            CliError::Config {
                origin: origin.into(),
                line,
                message: e.to_string(),
            }
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    parse_config(&text, &path.display().to_string())
}

/// TOML text that parses back to the same configuration.
pub fn emit_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configuration serializes to TOML")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

enum Node<'a> {
    Item(&'a Item),
    Table(&'a Table),
    Value(&'a Value),
}

impl<'a> Node<'a> {
    fn table_like(&self) -> Option<&'a dyn TableLike> {
        match *self {
            Node::Item(i) => i.as_table_like(),
            Node::Table(t) => Some(t),
            Node::Value(v) => v.as_inline_table().map(|t| t as &dyn TableLike),
        }
    }

    fn index(&self, k: usize) -> Option<(Node<'a>, Option<Range<usize>>)> {
        let item = match *self {
            Node::Item(i) => i,
            Node::Value(v) => {
                let x = v.as_array()?.get(k)?;
                return Some((Node::Value(x), x.span()));
            }
            Node::Table(_) => return None,
        };
        match item {
            Item::ArrayOfTables(a) => {
                let t = a.get(k)?;
                Some((Node::Table(t), t.span()))
            }
            Item::Value(v) => Node::Value(v).index(k),
            _ => None,
        }
    }
}

/// Line of the deepest existing element along a dotted field path such as
/// `model.regimes[1].jump_e.intensity`.
pub fn locate(text: &str, path: &str) -> Option<usize> {
    let doc = ImDocument::parse(text).ok()?;
    let mut node = Node::Item(doc.as_item());
    let mut best: Option<Range<usize>> = None;
    for seg in path.split('.') {
        let (name, index) = match seg.split_once('[') {
            Some((n, rest)) => (n, rest.trim_end_matches(']').parse::<usize>().ok()),
            None => (seg, None),
        };
        let Some((key, item)) = node.table_like().and_then(|t| t.get_key_value(name)) else {
            break;
        };
        if let Some(s) = key.span() {
            best = Some(s);
        }
        node = Node::Item(item);
        if let Some(k) = index {
            let Some((next, span)) = node.index(k) else {
                break;
            };
            if let Some(s) = span {
                best = Some(s);
            }
            node = next;
        }
    }
    best.map(|s| line_of(text, s.start))
}
