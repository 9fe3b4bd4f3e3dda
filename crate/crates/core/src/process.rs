//! File-based request/response protocol for external model processes.
//!
//! The pipeline writes a JSON request to a temporary file, runs
//! `program [args...] <request_path> <response_path>`, waits for exit code 0
//! within the deadline, and parses the JSON left at `response_path`.

use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("failed to launch `{program}`: {source}")]
    Launch {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("process exceeded its {0:?} deadline")]
    Timeout(Duration),
    #[error("protocol error: {0}")]
    Protocol(String),
}

fn default_timeout_ms() -> u64 {
    600_000
}

fn default_in_flight() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub program: PathBuf,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Concurrent invocations allowed through one runner.
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

impl ProcessConfig {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ProcessConfig {
            program: program.into(),
            args: Vec::new(),
            timeout_ms: default_timeout_ms(),
            max_in_flight: default_in_flight(),
        }
    }
}

/// Counting gate limiting concurrent external processes.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct ProcessRunner {
    config: ProcessConfig,
    gate: Gate,
}

impl ProcessRunner {
    pub fn new(config: ProcessConfig) -> Self {
        let slots = config.max_in_flight.max(1);
        ProcessRunner {
            config,
            gate: Gate {
                free: Mutex::new(slots),
                cv: Condvar::new(),
            },
        }
    }

    pub fn config(&self) -> &ProcessConfig {
        &self.config
    }

    pub fn call<Req: Serialize, Resp: DeserializeOwned>(&self, request: &Req) -> Result<Resp, ProcessError> {
        let _slot = self.gate.acquire();
        let dir = tempfile::tempdir().map_err(|e| self.launch_error(e))?;
        let req_path = dir.path().join("request.json");
        let resp_path = dir.path().join("response.json");
        let body = serde_json::to_vec(request).map_err(|e| ProcessError::Protocol(e.to_string()))?;
        std::fs::write(&req_path, body).map_err(|e| self.launch_error(e))?;

        let mut child = Command::new(&self.config.program)
            .args(&self.config.args)
            .arg(&req_path)
            .arg(&resp_path)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| self.launch_error(e))?;

        let timeout = Duration::from_millis(self.config.timeout_ms);
        let deadline = Instant::now() + timeout;
        let status = loop {
            match child.try_wait().map_err(|e| self.launch_error(e))? {
                Some(status) => break status,
                None if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(ProcessError::Timeout(timeout));
                }
                None => std::thread::sleep(Duration::from_millis(5)),
            }
        };
        if !status.success() {
            return Err(ProcessError::Protocol(format!("process exited with {status}")));
        }
        let text = std::fs::read(&resp_path)
            .map_err(|e| ProcessError::Protocol(format!("no response file: {e}")))?;
        serde_json::from_slice(&text).map_err(|e| ProcessError::Protocol(format!("malformed response: {e}")))
    }

    fn launch_error(&self, source: std::io::Error) -> ProcessError {
        ProcessError::Launch {
            program: self.config.program.display().to_string(),
            source,
        }
    }
}
