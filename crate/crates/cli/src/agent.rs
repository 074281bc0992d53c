//! The built-in ToM agent behind the line-delimited subprocess protocol, so
//! `external:` policies can be checked against the in-process agent.

use std::io::{BufRead, Write};

use coopkitchen::grid::{deserialize_state, Action, History, Layout, WorldState};
use coopkitchen::policy::{FromAgent, Policy, PolicySpec, ToAgent};

#[derive(Debug, thiserror::Error)]
pub enum BridgeError {
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("{0}")]
    Policy(#[from] coopkitchen::policy::PolicyError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

struct Game {
    layout: Layout,
    agent: usize,
    policy: Box<dyn Policy>,
    history: History,
    last: Option<WorldState>,
}

fn reply<W: Write>(out: &mut W, msg: &FromAgent) -> Result<(), BridgeError> {
    let mut line = serde_json::to_string(msg).expect("messages serialize");
    line.push('\n');
    out.write_all(line.as_bytes())?;
    out.flush()?;
    Ok(())
}

/// Answer protocol messages until end of input. Several games may follow one
/// another; each `hello` starts a fresh policy seeded from the message.
pub fn run<R: BufRead, W: Write>(
    spec: &PolicySpec,
    input: R,
    mut out: W,
) -> Result<(), BridgeError> {
    let mut game: Option<Game> = None;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let msg: ToAgent = serde_json::from_str(&line)
            .map_err(|e| BridgeError::Protocol(format!("{e}: {line}")))?;
        match msg {
            ToAgent::Hello {
                layout,
                grid,
                agent_index,
                seed,
            } => {
                let layout = Layout::parse(&layout, &grid)
                    .map_err(|e| BridgeError::Protocol(e.to_string()))?;
                if agent_index > 1 {
                    return Err(BridgeError::Protocol(format!("agent index {agent_index}")));
                }
                let policy = spec.build(&layout, seed)?;
                game = Some(Game {
                    layout,
                    agent: agent_index,
                    policy,
                    history: History::new(),
                    last: None,
                });
                reply(&mut out, &FromAgent::Ready)?;
            }
            ToAgent::Obs {
                state,
                last_joint_action,
                ..
            } => {
                let g = game
                    .as_mut()
                    .ok_or_else(|| BridgeError::Protocol("obs before hello".into()))?;
                let state = deserialize_state(&state, &g.layout)
                    .map_err(|e| BridgeError::Protocol(e.to_string()))?;
                if let (Some(prev), Some([a, b])) = (g.last.take(), last_joint_action) {
                    let parse = |s: &str| {
                        s.parse::<Action>()
                            .map_err(|e| BridgeError::Protocol(e.to_string()))
                    };
                    g.history.push(prev, [parse(&a)?, parse(&b)?]);
                }
                let action = g.policy.act(&g.history, &g.layout, &state, g.agent)?;
                g.last = Some(state);
                reply(
                    &mut out,
                    &FromAgent::Act {
                        action: action.wire_name().to_string(),
                    },
                )?;
            }
            ToAgent::End { reward } => {
                if let Some(mut g) = game.take() {
                    g.policy.end(reward);
                }
            }
        }
    }
    Ok(())
}
