use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::predicate::SuccessPredicate;
use crate::assets;
use crate::grid::{deserialize_state, serialize_state, Layout, StateTextError, WorldState};
use crate::policy::{PolicyError, PolicySpec, ScriptedKind};

pub const DEFAULT_ROLLOUTS_PER_VARIANT: u32 = 50;
pub const SCENARIO_EXTENSION: &str = "scenario";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    /// State robustness: an unusual state, partner-independent success.
    SR,
    /// Agent robustness: the partner behaves unusually.
    AR,
    /// Agent robustness that needs memory of the partner's past behavior.
    AMR,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::SR, Category::AR, Category::AMR];

    pub fn name(self) -> &'static str {
        match self {
            Category::SR => "SR",
            Category::AR => "AR",
            Category::AMR => "AMR",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Category, String> {
        match s {
            "SR" => Ok(Category::SR),
            "AR" => Ok(Category::AR),
            "AMR" => Ok(Category::AMR),
            _ => Err(format!("unknown category {s:?}, expected SR, AR or AMR")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{source_name}: {message}")]
    Schema {
        source_name: String,
        message: String,
    },
    #[error("{source_name}: variant {variant}: {error}")]
    InvalidStateSnapshot {
        source_name: String,
        variant: usize,
        error: StateTextError,
    },
    #[error("{source_name}: unknown partner {spec:?}: {error}")]
    UnknownPartnerKind {
        source_name: String,
        spec: String,
        error: PolicyError,
    },
    #[error("scenario id {0:?} already exists")]
    DuplicateId(String),
    #[error("{path}: {error}")]
    Io {
        path: PathBuf,
        error: std::io::Error,
    },
}

fn schema(source_name: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema {
        source_name: source_name.to_string(),
        message: message.into(),
    }
}

/// One robustness unit test: a setup with one or more initial states, a
/// scripted or modelled partner and a success predicate for the tested agent.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: String,
    pub description: String,
    pub layout: Layout,
    pub category: Category,
    pub tested_agent_index: usize,
    pub partner: PolicySpec,
    pub predicate: SuccessPredicate,
    pub horizon: u32,
    pub rollouts_per_variant: u32,
    pub variants: Vec<WorldState>,
    /// Whether the file embeds its layout grid rather than naming a bundled
    /// layout.
    embedded_grid: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    description: String,
    layout: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<String>,
    category: String,
    tested_agent_index: usize,
    partner: String,
    horizon: u32,
    #[serde(default = "default_rollouts")]
    rollouts_per_variant: u32,
    predicate: SuccessPredicate,
    #[serde(default)]
    variants: Vec<VariantFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariantFile {
    state: String,
}

fn default_rollouts() -> u32 {
    DEFAULT_ROLLOUTS_PER_VARIANT
}

impl Scenario {
    /// Build and validate a scenario.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: &str,
        layout: Layout,
        category: Category,
        tested_agent_index: usize,
        partner: PolicySpec,
        predicate: SuccessPredicate,
        horizon: u32,
        variants: Vec<WorldState>,
    ) -> Result<Scenario, ScenarioError> {
        let embedded_grid = assets::layout(layout.name()).is_none_or(|b| b != layout);
        let s = Scenario {
            id: id.to_string(),
            description: String::new(),
            layout,
            category,
            tested_agent_index,
            partner,
            predicate,
            horizon,
            rollouts_per_variant: DEFAULT_ROLLOUTS_PER_VARIANT,
            variants,
            embedded_grid,
        };
        s.validate(id)?;
        Ok(s)
    }

    /// Parse scenario text. `source_name` labels errors.
    pub fn parse(text: &str, source_name: &str) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| schema(source_name, e.message().to_string()))?;
        let layout = match &file.grid {
            Some(grid) => {
                Layout::parse(&file.layout, grid).map_err(|e| schema(source_name, e.to_string()))?
            }
            None => assets::resolve_layout(&file.layout)
                .map_err(|e| schema(source_name, e.to_string()))?,
        };
        let category = file
            .category
            .parse()
            .map_err(|m: String| schema(source_name, m))?;
        let partner = PolicySpec::parse(&file.partner).map_err(|error| {
            ScenarioError::UnknownPartnerKind {
                source_name: source_name.to_string(),
                spec: file.partner.clone(),
                error,
            }
        })?;
        let mut variants = Vec::with_capacity(file.variants.len());
        for (i, v) in file.variants.iter().enumerate() {
            let state = deserialize_state(&v.state, &layout).map_err(|error| {
                ScenarioError::InvalidStateSnapshot {
                    source_name: source_name.to_string(),
                    variant: i,
                    error,
                }
            })?;
            variants.push(state);
        }
        let s = Scenario {
            id: file.id,
            description: file.description,
            layout,
            category,
            tested_agent_index: file.tested_agent_index,
            partner,
            predicate: file.predicate,
            horizon: file.horizon,
            rollouts_per_variant: file.rollouts_per_variant,
            variants,
            embedded_grid: file.grid.is_some(),
        };
        s.validate(source_name)?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|error| ScenarioError::Io {
            path: path.to_path_buf(),
            error,
        })?;
        Scenario::parse(&text, &path.display().to_string())
    }

    fn validate(&self, source_name: &str) -> Result<(), ScenarioError> {
        let err = |m: String| schema(source_name, m);
        if self.id.is_empty()
            || !self
                .id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(err(format!(
                "id {:?} must be non-empty and use only letters, digits, '-' and '_'",
                self.id
            )));
        }
        if self.tested_agent_index > 1 {
            return Err(err("tested_agent_index must be 0 or 1".into()));
        }
        if self.horizon == 0 {
            return Err(err("horizon must be positive".into()));
        }
        if self.rollouts_per_variant == 0 {
            return Err(err("rollouts_per_variant must be positive".into()));
        }
        if self.variants.is_empty() {
            return Err(err("scenario has no variants".into()));
        }
        if self.predicate.ticks() > self.horizon {
            return Err(err(format!(
                "predicate budget of {} ticks exceeds the horizon of {}",
                self.predicate.ticks(),
                self.horizon
            )));
        }
        self.predicate.check_layout(&self.layout).map_err(&err)?;
        for (i, v) in self.variants.iter().enumerate() {
            v.validate(&self.layout)
                .map_err(|e| ScenarioError::InvalidStateSnapshot {
                    source_name: source_name.to_string(),
                    variant: i,
                    error: e.into(),
                })?;
            self.predicate
                .check_start(v, self.tested_agent_index)
                .map_err(|m| err(format!("variant {i}: {m}")))?;
        }
        if !self.partner.is_external() {
            self.partner.check(&self.layout).map_err(|error| {
                ScenarioError::UnknownPartnerKind {
                    source_name: source_name.to_string(),
                    spec: self.partner.to_string(),
                    error,
                }
            })?;
        }
        Ok(())
    }

    /// Non-fatal consistency notes.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let history_dependent = matches!(
            self.partner,
            PolicySpec::Scripted(ScriptedKind::StationaryAfter(t) | ScriptedKind::RandomAfter(t)) if t > 0
        );
        if self.category == Category::AMR && !history_dependent {
            out.push(format!(
                "{}: AMR scenario with partner {} whose behavior does not change over time; memory is not actually required",
                self.id, self.partner
            ));
        }
        out
    }

    /// Canonical scenario text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let q = |s: &str| toml::Value::String(s.to_string()).to_string();
        let _ = writeln!(out, "id = {}", q(&self.id));
        if !self.description.is_empty() {
            let _ = writeln!(out, "description = {}", q(&self.description));
        }
        let _ = writeln!(out, "layout = {}", q(self.layout.name()));
        if self.embedded_grid {
            let _ = writeln!(out, "grid = '''\n{}'''", self.layout.to_text());
        }
        let _ = writeln!(out, "category = {}", q(self.category.name()));
        let _ = writeln!(out, "tested_agent_index = {}", self.tested_agent_index);
        let _ = writeln!(out, "partner = {}", q(&self.partner.to_string()));
        let _ = writeln!(out, "horizon = {}", self.horizon);
        let _ = writeln!(out, "rollouts_per_variant = {}", self.rollouts_per_variant);
        out.push_str("\n[predicate]\n");
        out.push_str(&toml::to_string(&self.predicate).expect("predicate serializes"));
        for v in &self.variants {
            let _ = write!(
                out,
                "\n[[variants]]\nstate = '''\n{}'''\n",
                serialize_state(v)
            );
        }
        out
    }
}

/// Load every `.scenario` file in `dir`, sorted by id. Ids must be unique.
pub fn load_suite(dir: &Path) -> Result<Vec<Scenario>, ScenarioError> {
    let io = |error| ScenarioError::Io {
        path: dir.to_path_buf(),
        error,
    };
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().is_some_and(|e| e == SCENARIO_EXTENSION) {
            paths.push(path);
        }
    }
    let mut suite = paths
        .iter()
        .map(|p| Scenario::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    sort_and_check(&mut suite)?;
    Ok(suite)
}

/// The suite shipped with the library.
pub fn bundled_suite() -> Vec<Scenario> {
    let mut suite: Vec<Scenario> = assets::suite_files()
        .iter()
        .map(|(name, text)| Scenario::parse(text, name).expect("bundled scenario is valid"))
        .collect();
    sort_and_check(&mut suite).expect("bundled ids are unique");
    suite
}

fn sort_and_check(suite: &mut [Scenario]) -> Result<(), ScenarioError> {
    suite.sort_by(|a, b| a.id.cmp(&b.id));
    for w in suite.windows(2) {
        if w[0].id == w[1].id {
            return Err(ScenarioError::DuplicateId(w[0].id.clone()));
        }
    }
    Ok(())
}

/// Write a new scenario file `<dir>/<id>.scenario` with `state` as its only
/// variant and return its path.
#[allow(clippy::too_many_arguments)]
pub fn capture_scenario(
    dir: &Path,
    layout: &Layout,
    state: &WorldState,
    category: Category,
    tested_agent_index: usize,
    partner: PolicySpec,
    predicate: SuccessPredicate,
    horizon: u32,
    id: &str,
) -> Result<PathBuf, ScenarioError> {
    let mut snapshot = state.clone();
    snapshot.tick = 0;
    let scenario = Scenario::new(
        id,
        layout.clone(),
        category,
        tested_agent_index,
        partner,
        predicate,
        horizon,
        vec![snapshot],
    )?;
    let path = dir.join(format!("{id}.{SCENARIO_EXTENSION}"));
    let io = |error| ScenarioError::Io {
        path: path.clone(),
        error,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let taken = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok())
        .filter(|e| {
            e.path()
                .extension()
                .is_some_and(|x| x == SCENARIO_EXTENSION)
        })
        .any(|e| Scenario::load(&e.path()).is_ok_and(|s| s.id == id));
    if taken || path.exists() {
        return Err(ScenarioError::DuplicateId(id.to_string()));
    }
    std::fs::write(&path, scenario.to_text()).map_err(io)?;
    Ok(path)
}

/// Add `state` as a further variant of the scenario file at `path`.
pub fn append_variant(path: &Path, state: &WorldState) -> Result<(), ScenarioError> {
    let mut scenario = Scenario::load(path)?;
    let mut snapshot = state.clone();
    snapshot.tick = 0;
    scenario.variants.push(snapshot);
    scenario.validate(&path.display().to_string())?;
    std::fs::write(path, scenario.to_text()).map_err(|error| ScenarioError::Io {
        path: path.to_path_buf(),
        error,
    })
}
