//! One live game: a human in one slot, a built-in or external agent in the
//! other, driven by commands from socket clients.

use std::collections::VecDeque;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use coopkitchen::grid::{
    deserialize_state, serialize_state, step_unchecked, Action, Event, History, Layout, WorldState,
};
use coopkitchen::harness::{capture_scenario, Category, SuccessPredicate};
use coopkitchen::policy::{Policy, PolicySpec};
use coopkitchen::rollout::slot_seed;

/// Records sent to clients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMsg {
    /// Sent once on connect.
    Layout {
        name: String,
        grid: String,
        human_slot: usize,
        agent: String,
        tick_rate: f64,
    },
    State {
        seq: u64,
        tick: u32,
        /// Canonical state text.
        state: String,
        last_events: Vec<Event>,
        /// Reward earned on the last tick.
        reward: u32,
        reward_total: u32,
        paused: bool,
    },
    Captured {
        id: String,
        path: String,
    },
    Error {
        message: String,
    },
}

/// Commands accepted from clients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMsg {
    Act {
        action: String,
    },
    Pause,
    Resume,
    Step {
        #[serde(default = "one")]
        n: u32,
    },
    SetState {
        state: String,
    },
    Capture {
        id: String,
        category: String,
        predicate: SuccessPredicate,
        partner: String,
        #[serde(default)]
        horizon: Option<u32>,
    },
}

fn one() -> u32 {
    1
}

/// Largest `n` a single step command may ask for.
pub const MAX_STEP: u32 = 10_000;

pub struct Session {
    layout: Layout,
    human_slot: usize,
    agent_spec: PolicySpec,
    agent_seed: u64,
    agent: Box<dyn Policy>,
    state: WorldState,
    transcript: History,
    paused: bool,
    queued: VecDeque<Action>,
    seq: u64,
    reward_total: u32,
    capture_dir: PathBuf,
    tick_rate: f64,
}

impl Session {
    pub fn new(
        layout: Layout,
        agent_spec: PolicySpec,
        human_slot: usize,
        seed: u64,
        capture_dir: PathBuf,
        tick_rate: f64,
    ) -> Result<Session, coopkitchen::policy::PolicyError> {
        let agent_seed = slot_seed(seed, 1 - human_slot);
        let agent = agent_spec.build(&layout, agent_seed)?;
        let state = WorldState::initial(&layout);
        Ok(Session {
            layout,
            human_slot,
            agent_spec,
            agent_seed,
            agent,
            state,
            transcript: History::new(),
            paused: false,
            queued: VecDeque::new(),
            seq: 0,
            reward_total: 0,
            capture_dir,
            tick_rate,
        })
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn transcript(&self) -> &History {
        &self.transcript
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn tick_rate(&self) -> f64 {
        self.tick_rate
    }

    pub fn layout_msg(&self) -> ServerMsg {
        ServerMsg::Layout {
            name: self.layout.name().to_string(),
            grid: self.layout.to_text(),
            human_slot: self.human_slot,
            agent: self.agent_spec.to_string(),
            tick_rate: self.tick_rate,
        }
    }

    /// The current state as a record, without advancing anything.
    pub fn snapshot(&mut self) -> ServerMsg {
        self.state_msg(Vec::new(), 0)
    }

    fn state_msg(&mut self, last_events: Vec<Event>, reward: u32) -> ServerMsg {
        self.seq += 1;
        ServerMsg::State {
            seq: self.seq,
            tick: self.state.tick,
            state: serialize_state(&self.state),
            last_events,
            reward,
            reward_total: self.reward_total,
            paused: self.paused,
        }
    }

    /// Advance one tick. The human plays its oldest queued action, or Stay.
    /// An agent failure pauses the session.
    pub fn tick(&mut self) -> Vec<ServerMsg> {
        let human = self.queued.pop_front().unwrap_or(Action::Stay);
        let agent_slot = 1 - self.human_slot;
        let mine = match self
            .agent
            .act(&self.transcript, &self.layout, &self.state, agent_slot)
        {
            Ok(a) => a,
            Err(e) => {
                self.paused = true;
                return vec![ServerMsg::Error {
                    message: format!("agent failed, session paused: {e}"),
                }];
            }
        };
        let mut joint = [Action::Stay; 2];
        joint[self.human_slot] = human;
        joint[agent_slot] = mine;
        let out = step_unchecked(&self.layout, &self.state, joint);
        self.transcript.push(self.state.clone(), joint);
        self.state = out.next_state;
        self.reward_total += out.reward;
        vec![self.state_msg(out.events, out.reward)]
    }

    fn error(message: impl Into<String>) -> Vec<ServerMsg> {
        vec![ServerMsg::Error {
            message: message.into(),
        }]
    }

    /// Parse and apply one client text record.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMsg> {
        match serde_json::from_str::<ClientMsg>(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => Session::error(format!("malformed message: {e}")),
        }
    }

    pub fn handle(&mut self, msg: ClientMsg) -> Vec<ServerMsg> {
        match msg {
            ClientMsg::Act { action } => match action.parse::<Action>() {
                Ok(a) => {
                    self.queued.push_back(a);
                    Vec::new()
                }
                Err(e) => Session::error(e.to_string()),
            },
            ClientMsg::Pause => {
                self.paused = true;
                vec![self.snapshot()]
            }
            ClientMsg::Resume => {
                self.paused = false;
                vec![self.snapshot()]
            }
            ClientMsg::Step { n } => {
                if !self.paused {
                    return Session::error("step is only allowed while paused");
                }
                if n == 0 || n > MAX_STEP {
                    return Session::error(format!("step count must be 1..={MAX_STEP}"));
                }
                let mut out = Vec::new();
                for _ in 0..n {
                    let msgs = self.tick();
                    let failed = msgs.iter().any(|m| matches!(m, ServerMsg::Error { .. }));
                    out.extend(msgs);
                    if failed {
                        break;
                    }
                }
                out
            }
            ClientMsg::SetState { state } => match deserialize_state(&state, &self.layout) {
                Ok(s) => match self.agent_spec.build(&self.layout, self.agent_seed) {
                    Ok(agent) => {
                        self.agent = agent;
                        self.state = s;
                        self.transcript = History::new();
                        self.queued.clear();
                        vec![self.snapshot()]
                    }
                    Err(e) => Session::error(format!("could not restart agent: {e}")),
                },
                Err(e) => Session::error(format!("invalid state: {e}")),
            },
            ClientMsg::Capture {
                id,
                category,
                predicate,
                partner,
                horizon,
            } => {
                if !self.paused {
                    return Session::error("pause the session before capturing");
                }
                let category: Category = match category.parse() {
                    Ok(c) => c,
                    Err(e) => return Session::error(e.to_string()),
                };
                let partner = match PolicySpec::parse(&partner) {
                    Ok(p) => p,
                    Err(e) => return Session::error(e.to_string()),
                };
                let horizon = horizon.unwrap_or(predicate.ticks());
                match capture_scenario(
                    &self.capture_dir,
                    &self.layout,
                    &self.state,
                    category,
                    1 - self.human_slot,
                    partner,
                    predicate,
                    horizon,
                    &id,
                ) {
                    Ok(path) => vec![ServerMsg::Captured {
                        id,
                        path: path.display().to_string(),
                    }],
                    Err(e) => Session::error(e.to_string()),
                }
            }
        }
    }
}
