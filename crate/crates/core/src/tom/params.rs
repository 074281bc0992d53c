use std::fmt::Write as _;

use thiserror::Error;

use crate::assets;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("line {line}: unknown parameter {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing parameter {0}")]
    Missing(&'static str),
    #[error("no preset {0:?}")]
    UnknownPreset(String),
    #[error("no mle_like preset for layout {0:?}")]
    UnknownLayout(String),
}

/// Behavioral knobs of the Theory-of-Mind agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToMParams {
    /// Probability of planning greedily instead of jointly.
    pub prob_greedy: f64,
    /// Number of tasks considered by joint planning (1..=4).
    pub lookahead_horizon: usize,
    /// Probability of crossing the partner's perceived task off the list.
    pub prob_obs: f64,
    /// Per-tick probability of keeping the current goal.
    pub retain_goals: f64,
    pub prob_pausing: f64,
    /// Probability of pausing to think after finishing a sub-task (0..=0.4).
    pub thinking_prob: f64,
    /// Probability of stepping aside after bumping into the partner.
    pub compliance: f64,
    /// Probability of planning paths around the partner's predicted route.
    pub path_teamwork: f64,
    /// Boltzmann inverse temperature (0..=20).
    pub rationality_coefficient: f64,
    pub prob_random_action: f64,
}

const KEYS: [&str; 10] = [
    "prob_greedy",
    "lookahead_horizon",
    "prob_obs",
    "retain_goals",
    "prob_pausing",
    "thinking_prob",
    "compliance",
    "path_teamwork",
    "rationality_coefficient",
    "prob_random_action",
];

impl ToMParams {
    /// Build and range-check.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        prob_greedy: f64,
        lookahead_horizon: usize,
        prob_obs: f64,
        retain_goals: f64,
        prob_pausing: f64,
        thinking_prob: f64,
        compliance: f64,
        path_teamwork: f64,
        rationality_coefficient: f64,
        prob_random_action: f64,
    ) -> Result<ToMParams, ParamError> {
        let p = ToMParams {
            prob_greedy,
            lookahead_horizon,
            prob_obs,
            retain_goals,
            prob_pausing,
            thinking_prob,
            compliance,
            path_teamwork,
            rationality_coefficient,
            prob_random_action,
        };
        p.validate()?;
        Ok(p)
    }

    fn fields(&self) -> [(&'static str, f64, f64, f64); 10] {
        [
            ("prob_greedy", self.prob_greedy, 0.0, 1.0),
            ("lookahead_horizon", self.lookahead_horizon as f64, 1.0, 4.0),
            ("prob_obs", self.prob_obs, 0.0, 1.0),
            ("retain_goals", self.retain_goals, 0.0, 1.0),
            ("prob_pausing", self.prob_pausing, 0.0, 1.0),
            ("thinking_prob", self.thinking_prob, 0.0, 0.4),
            ("compliance", self.compliance, 0.0, 1.0),
            ("path_teamwork", self.path_teamwork, 0.0, 1.0),
            (
                "rationality_coefficient",
                self.rationality_coefficient,
                0.0,
                20.0,
            ),
            ("prob_random_action", self.prob_random_action, 0.0, 1.0),
        ]
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, value, min, max) in self.fields() {
            if !(value >= min && value <= max) {
                return Err(ParamError::OutOfRange {
                    name,
                    value,
                    min,
                    max,
                });
            }
        }
        Ok(())
    }

    /// The most capable setting: joint planning over four tasks, full
    /// partner modelling, no noise.
    pub fn max_capability() -> ToMParams {
        ToMParams {
            prob_greedy: 0.0,
            lookahead_horizon: 4,
            prob_obs: 1.0,
            retain_goals: 0.8,
            prob_pausing: 0.0,
            thinking_prob: 0.0,
            compliance: 1.0,
            path_teamwork: 1.0,
            rationality_coefficient: 20.0,
            prob_random_action: 0.0,
        }
    }

    /// Human-plausible parameters for `layout`, from the bundled presets.
    /// These are hand reconstructions, not fitted values.
    pub fn mle_like(layout: &str) -> Result<ToMParams, ParamError> {
        let text = assets::mle_like_preset(layout)
            .ok_or_else(|| ParamError::UnknownLayout(layout.to_string()))?;
        ToMParams::parse(text)
    }

    /// One of the hand-diversified validation partners `V1`..`V10`.
    pub fn validation(name: &str) -> Result<ToMParams, ParamError> {
        let text = assets::validation_preset(name)
            .ok_or_else(|| ParamError::UnknownPreset(name.to_string()))?;
        ToMParams::parse(text)
    }

    /// Resolve a preset name: `max_capability`, `mle_like` (needs a layout),
    /// `mle_like:<layout>`, `V1`..`V10`.
    pub fn preset(name: &str, layout: Option<&str>) -> Result<ToMParams, ParamError> {
        match name {
            "max_capability" => Ok(ToMParams::max_capability()),
            "mle_like" => match layout {
                Some(l) => ToMParams::mle_like(l),
                None => Err(ParamError::UnknownPreset(name.to_string())),
            },
            _ => {
                if let Some(l) = name.strip_prefix("mle_like:") {
                    ToMParams::mle_like(l)
                } else {
                    ToMParams::validation(name)
                }
            }
        }
    }

    /// Parse `key = value` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<ToMParams, ParamError> {
        let mut values: [Option<f64>; 10] = [None; 10];
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .or_else(|| content.split_once(char::is_whitespace))
                .ok_or_else(|| ParamError::Syntax {
                    line,
                    message: format!("expected `key = value`, got {content:?}"),
                })?;
            let key = key.trim();
            let slot =
                KEYS.iter()
                    .position(|k| *k == key)
                    .ok_or_else(|| ParamError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })?;
            let value: f64 = value.trim().parse().map_err(|_| ParamError::Syntax {
                line,
                message: format!("bad number {:?}", value.trim()),
            })?;
            values[slot] = Some(value);
        }
        let get = |i: usize| values[i].ok_or(ParamError::Missing(KEYS[i]));
        let horizon = get(1)?;
        if horizon.fract() != 0.0 || !(1.0..=4.0).contains(&horizon) {
            return Err(ParamError::OutOfRange {
                name: "lookahead_horizon",
                value: horizon,
                min: 1.0,
                max: 4.0,
            });
        }
        ToMParams::new(
            get(0)?,
            horizon as usize,
            get(2)?,
            get(3)?,
            get(4)?,
            get(5)?,
            get(6)?,
            get(7)?,
            get(8)?,
            get(9)?,
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, value, _, _) in self.fields() {
            let _ = writeln!(out, "{name} = {value}");
        }
        out
    }
}
