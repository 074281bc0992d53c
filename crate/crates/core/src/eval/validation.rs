use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::episode_return;
use super::pool::{sample_start, StartStatePool};
use crate::grid::{Layout, WorldState, DEFAULT_HORIZON};
use crate::parallel::map_ordered;
use crate::policy::{Policy, PolicySpec, Population, ReplaySource};
use crate::rollout::{run_episode, slot_seed};
use crate::seed;

pub const DEFAULT_EPISODES_PER_MEMBER: u32 = 5;
pub const VALIDATION_FORMAT: u32 = 1;
const REPLAY_MEMBERS: usize = 10;
const TOM_MEMBERS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub episodes_per_member: u32,
    pub horizon: u32,
    /// Discount in (0, 1]; 1 reports the plain sum of rewards.
    pub gamma: f64,
    #[serde(with = "seed_text")]
    pub seed: u64,
    /// Episodes start from states drawn from a start pool instead of the
    /// layout's initial state.
    pub diverse_starts: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            episodes_per_member: DEFAULT_EPISODES_PER_MEMBER,
            horizon: DEFAULT_HORIZON,
            gamma: 1.0,
            seed: 0,
            diverse_starts: false,
        }
    }
}

mod seed_text {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(seed)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation config: {0}")]
    Config(String),
    #[error("episode {episode} with partner {member}: {message}")]
    Policy {
        member: String,
        episode: u32,
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberResult {
    pub member: String,
    pub mean: f64,
    pub returns: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub format: u32,
    pub tested: String,
    pub layout: String,
    pub config: EvalConfig,
    /// Mean return over every episode.
    pub mean: f64,
    /// Sample standard deviation of the episode returns over the square root
    /// of their count; absent with fewer than two episodes.
    pub standard_error: Option<f64>,
    pub episodes: u32,
    pub members: Vec<MemberResult>,
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<ValidationReport, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "tested: {}   layout: {}   seed: {}\n\n",
            self.tested, self.layout, self.config.seed
        );
        let width = self
            .members
            .iter()
            .map(|m| m.member.len())
            .max()
            .unwrap_or(6)
            .max(6);
        out.push_str(&format!("{:<width$} {:>8}\n", "member", "mean"));
        for m in &self.members {
            out.push_str(&format!("{:<width$} {:>8.2}\n", m.member, m.mean));
        }
        let se = self
            .standard_error
            .map_or("n/a".to_string(), |s| format!("{s:.2}"));
        out.push_str(&format!(
            "\nvalidation reward: {:.2} +- {se} over {} episodes\n",
            self.mean, self.episodes
        ));
        out
    }
}

/// The standard held-out population for `layout`: ten replays of bundled
/// trajectories recorded on it and the ten hand-diversified ToM presets.
pub fn default_population(layout: &Layout) -> Result<Population, EvalError> {
    let prefix = format!("{}_", layout.name());
    let replays: Vec<PolicySpec> = crate::assets::trajectory_files()
        .iter()
        .filter(|(n, _)| {
            n.strip_prefix(&prefix)
                .is_some_and(|rest| rest.chars().all(|c| c.is_ascii_digit()))
        })
        .take(REPLAY_MEMBERS)
        .map(|(n, _)| PolicySpec::Replay(ReplaySource::Bundled(n.to_string())))
        .collect();
    if replays.len() < REPLAY_MEMBERS {
        return Err(EvalError::Config(format!(
            "layout {} has {} bundled trajectories, {REPLAY_MEMBERS} needed",
            layout.name(),
            replays.len()
        )));
    }
    let mut members = replays;
    members.extend((1..=TOM_MEMBERS).map(|i| PolicySpec::Tom(format!("V{i}"))));
    Population::uniform(members).map_err(|e| EvalError::Config(e.to_string()))
}

/// Seed of episode `episode` against member `member`.
pub fn episode_seed(base: u64, member: usize, episode: u32) -> u64 {
    seed::derive(base, &[member as u64, episode as u64])
}

/// Play `tested` with every member of `population` for
/// `episodes_per_member` episodes each. The tested agent takes slot 0 in
/// even episodes and slot 1 in odd ones.
pub fn validation_reward(
    tested: &PolicySpec,
    population: &Population,
    layout: &Layout,
    config: &EvalConfig,
    starts: Option<&StartStatePool>,
    parallelism: usize,
) -> Result<ValidationReport, EvalError> {
    if !(config.gamma > 0.0 && config.gamma <= 1.0) {
        return Err(EvalError::Config(format!(
            "gamma {} is outside (0, 1]",
            config.gamma
        )));
    }
    if config.episodes_per_member == 0 || config.horizon == 0 {
        return Err(EvalError::Config(
            "episodes and horizon must be positive".into(),
        ));
    }
    match (config.diverse_starts, starts) {
        (true, None) => return Err(EvalError::Config("diverse starts need a start pool".into())),
        (false, Some(_)) => {
            return Err(EvalError::Config(
                "start pool given without diverse starts".into(),
            ))
        }
        (_, Some(p)) if p.layout_name() != layout.name() => {
            return Err(EvalError::Config(format!(
                "start pool is for {}, not {}",
                p.layout_name(),
                layout.name()
            )))
        }
        _ => {}
    }

    let jobs: Vec<(usize, u32)> = (0..population.len())
        .flat_map(|m| (0..config.episodes_per_member).map(move |e| (m, e)))
        .collect();
    let run = |&(m, e): &(usize, u32)| -> Result<f64, EvalError> {
        let member = &population.members()[m];
        let child = episode_seed(config.seed, m, e);
        let fail = |message: String| EvalError::Policy {
            member: member.to_string(),
            episode: e,
            message,
        };
        let start = match starts {
            Some(pool) => sample_start(pool, &mut ChaCha8Rng::seed_from_u64(slot_seed(child, 2))),
            None => WorldState::initial(layout),
        };
        let me = (e % 2) as usize;
        let mine = tested
            .build(layout, slot_seed(child, 0))
            .map_err(|x| fail(format!("tested policy: {x}")))?;
        let theirs = member
            .build(layout, slot_seed(child, 1))
            .map_err(|x| fail(format!("partner: {x}")))?;
        let mut policies: [Box<dyn Policy>; 2] = if me == 0 {
            [mine, theirs]
        } else {
            [theirs, mine]
        };
        let episode = run_episode(layout, start, &mut policies, config.horizon, |_, _, _| {
            false
        })
        .map_err(|f| {
            let who = if f.agent == me {
                "tested policy"
            } else {
                "partner"
            };
            fail(format!("{who} at tick {}: {}", f.tick, f.error))
        })?;
        Ok(episode_return(&episode.rewards, config.gamma))
    };
    let returns = map_ordered(&jobs, parallelism, run)
        .into_iter()
        .collect::<Result<Vec<f64>, _>>()?;

    let per = config.episodes_per_member as usize;
    let members: Vec<MemberResult> = population
        .members()
        .iter()
        .zip(returns.chunks(per))
        .map(|(spec, r)| MemberResult {
            member: spec.to_string(),
            mean: r.iter().sum::<f64>() / r.len() as f64,
            returns: r.to_vec(),
        })
        .collect();
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let standard_error = (returns.len() > 1).then(|| {
        let var = returns.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    });
    Ok(ValidationReport {
        format: VALIDATION_FORMAT,
        tested: tested.to_string(),
        layout: layout.name().to_string(),
        config: config.clone(),
        mean,
        standard_error,
        episodes: returns.len() as u32,
        members,
    })
}
