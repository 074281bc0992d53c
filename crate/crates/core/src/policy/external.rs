use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Policy, PolicyError};
use crate::grid::{serialize_state, Action, History, Layout, WorldState};

pub const DEFAULT_TIMEOUT_MS: u64 = 1000;

/// Messages sent to the subprocess, one JSON object per line.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ToAgent {
    Hello {
        layout: String,
        /// The layout in its ASCII form.
        grid: String,
        agent_index: usize,
        seed: u64,
    },
    Obs {
        tick: u32,
        state: String,
        last_joint_action: Option<[String; 2]>,
    },
    End {
        reward: u32,
    },
}

/// Messages read from the subprocess.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FromAgent {
    Ready,
    Act { action: String },
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

/// A policy living in a subprocess that speaks line-delimited JSON on its
/// standard streams. The process is started on the first action.
pub struct ExternalPolicy {
    command: String,
    seed: u64,
    timeout: Duration,
    session: Option<Session>,
}

impl ExternalPolicy {
    pub fn new(command: String, seed: u64, timeout_ms: u64) -> ExternalPolicy {
        ExternalPolicy {
            command,
            seed,
            timeout: Duration::from_millis(timeout_ms),
            session: None,
        }
    }

    fn start(&mut self, layout: &Layout, agent: usize) -> Result<(), PolicyError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        self.session = Some(Session {
            child,
            stdin,
            lines: rx,
        });
        self.send(&ToAgent::Hello {
            layout: layout.name().to_string(),
            grid: layout.to_text(),
            agent_index: agent,
            seed: self.seed,
        })?;
        match self.recv()? {
            FromAgent::Ready => Ok(()),
            other => Err(PolicyError::ExternalProtocol(format!(
                "expected ready, got {other:?}"
            ))),
        }
    }

    fn send(&mut self, msg: &ToAgent) -> Result<(), PolicyError> {
        let session = self.session.as_mut().expect("session started");
        let mut line = serde_json::to_string(msg).expect("messages serialize");
        line.push('\n');
        session
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| session.stdin.flush())
            .map_err(|e| PolicyError::ExternalProtocol(format!("write failed: {e}")))
    }

    fn recv(&mut self) -> Result<FromAgent, PolicyError> {
        let session = self.session.as_mut().expect("session started");
        loop {
            let line = match session.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => {
                    return Err(PolicyError::ExternalProtocol(format!("read failed: {e}")))
                }
                Err(RecvTimeoutError::Timeout) => {
                    return Err(PolicyError::ExternalTimeout(self.timeout.as_millis() as u64))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(PolicyError::ExternalProtocol(
                        "process closed its output".into(),
                    ))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            return serde_json::from_str(&line)
                .map_err(|e| PolicyError::ExternalProtocol(format!("bad message {line:?}: {e}")));
        }
    }
}

impl Policy for ExternalPolicy {
    fn act(
        &mut self,
        history: &History,
        layout: &Layout,
        state: &WorldState,
        agent: usize,
    ) -> Result<Action, PolicyError> {
        if self.session.is_none() {
            self.start(layout, agent)?;
        }
        let last = history
            .last()
            .map(|(_, j)| [j[0].wire_name().to_string(), j[1].wire_name().to_string()]);
        self.send(&ToAgent::Obs {
            tick: history.len() as u32,
            state: serialize_state(state),
            last_joint_action: last,
        })?;
        match self.recv()? {
            FromAgent::Act { action } => action
                .parse()
                .map_err(|_| PolicyError::ExternalProtocol(format!("unknown action {action:?}"))),
            other => Err(PolicyError::ExternalProtocol(format!(
                "expected act, got {other:?}"
            ))),
        }
    }

    fn end(&mut self, total_reward: u32) {
        if self.session.is_some() {
            let _ = self.send(&ToAgent::End {
                reward: total_reward,
            });
        }
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        if let Some(mut s) = self.session.take() {
            drop(s.stdin);
            // Give a well-behaved agent a moment to exit on EOF.
            for _ in 0..20 {
                if let Ok(Some(_)) = s.child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(5));
            }
            let _ = s.child.kill();
            let _ = s.child.wait();
        }
    }
}
