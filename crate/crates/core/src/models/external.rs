//! External simulation codes as models.
//!
//! Each evaluation launches the command once, writes a single line
//! `{"params":{"name":value,...}}` to its standard input and closes it, then
//! expects one line `{"qoi":value}` on standard output and a zero exit.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_timeout() -> f64 {
    60.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalModel {
    /// Program and arguments.
    pub command: Vec<String>,
    /// Names under which the row values are sent, in row order.
    pub params: Vec<String>,
    /// Seconds before the child is killed.
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub working_dir: Option<PathBuf>,
}

#[derive(Deserialize)]
struct Reply {
    qoi: f64,
}

fn tail(s: &str) -> &str {
    let s = s.trim_end();
    let cut = s.len().saturating_sub(400);
    // stay on a char boundary
    let cut = (cut..=s.len()).find(|&i| s.is_char_boundary(i)).unwrap_or(s.len());
    &s[cut..]
}

impl ExternalModel {
    pub fn new(command: Vec<String>, params: Vec<String>) -> Self {
        Self {
            command,
            params,
            timeout_secs: default_timeout(),
            working_dir: None,
        }
    }

    pub fn request(&self, row: &[f64]) -> Result<String> {
        if row.len() != self.params.len() {
            return Err(Error::Shape { expected: self.params.len(), got: row.len() });
        }
        let params: serde_json::Map<String, serde_json::Value> =
            self.params.iter().cloned().zip(row.iter().map(|&v| serde_json::json!(v))).collect();
        Ok(serde_json::json!({ "params": params }).to_string())
    }

    pub fn evaluate(&self, row: &[f64]) -> Result<f64> {
        let line = self.request(row)?;
        let fail = |msg: String| Error::eval(format!("external model `{}`", self.command.join(" ")), msg);
        let (program, args) = self.command.split_first().ok_or_else(|| fail("empty command".into()))?;
        let mut cmd = Command::new(program);
        cmd.args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
        if let Some(dir) = &self.working_dir {
            cmd.current_dir(dir);
        }
        let mut child = cmd.spawn().map_err(|e| fail(format!("cannot launch: {e}")))?;

        let mut stdin = child.stdin.take().expect("piped");
        let mut out = child.stdout.take().expect("piped");
        let mut err = child.stderr.take().expect("piped");
        let writer = thread::spawn(move || stdin.write_all(format!("{line}\n").as_bytes()));
        let reader = thread::spawn(move || {
            let mut s = String::new();
            out.read_to_string(&mut s).map(|_| s)
        });
        let err_reader = thread::spawn(move || {
            let mut s = String::new();
            let _ = err.read_to_string(&mut s);
            s
        });

        let deadline = Instant::now() + Duration::from_secs_f64(self.timeout_secs.max(0.0));
        let status = loop {
            if let Some(status) = child.try_wait().map_err(|e| fail(e.to_string()))? {
                break status;
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Err(fail(format!("timed out after {} s", self.timeout_secs)));
            }
            thread::sleep(Duration::from_millis(2));
        };
        // a child that exits without reading its input breaks the pipe; the
        // exit status and reply decide the outcome
        let _ = writer.join();
        let stdout = reader.join().expect("reader thread").map_err(|e| fail(e.to_string()))?;
        let stderr = err_reader.join().expect("stderr thread");
        if !status.success() {
            return Err(fail(format!("exited with {status}; stderr: {}", tail(&stderr))));
        }
        let reply = stdout
            .lines()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| fail(format!("no reply; stderr: {}", tail(&stderr))))?;
        let value = serde_json::from_str::<Reply>(reply)
            .map_err(|e| fail(format!("malformed reply `{}`: {e}", tail(reply))))?
            .qoi;
        if !value.is_finite() {
            return Err(fail(format!("non-finite QOI {value}")));
        }
        Ok(value)
    }
}
