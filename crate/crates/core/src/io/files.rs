//! Output files: atomic writes, the run manifest, ledger CSV and trajectory
//! snapshots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::movements::{Ledger, Trajectory};

/// Writes through a temporary sibling and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Flat `key=value` record of one CLI run, written before any result with
/// `status=running` and rewritten on completion.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
    outputs: Vec<String>,
}

impl RunManifest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing an earlier value in place.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\n', "\\n");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Records an output file by its name relative to the output directory.
    pub fn add_output(&mut self, name: &str) {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={v}");
        }
        let _ = writeln!(s, "outputs={}", self.outputs.join(","));
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Self::new();
        for (i, line) in text.lines().enumerate() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("manifest line {} has no `=`", i + 1)))?;
            if k == "outputs" {
                m.outputs = v.split(',').filter(|o| !o.is_empty()).map(str::to_string).collect();
            } else {
                m.entries.push((k.to_string(), v.to_string()));
            }
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Ledger as CSV with header `n,t,energy,step_dist,slope,phi_residual,newton_iters`;
/// slope columns are empty when no slope was evaluated.
pub fn ledger_csv(ledger: &Ledger) -> String {
    let mut s = String::from("n,t,energy,step_dist,slope,phi_residual,newton_iters\n");
    for r in &ledger.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.n,
            r.t,
            r.energy,
            r.step_dist,
            opt(r.slope),
            opt(r.phi_residual),
            r.newton_iters
        );
    }
    s
}

const SNAPSHOT_MAGIC: &str = "ribbonflow-snapshot 1";

/// States of a run in a text format that reloads bitwise: every value is
/// written in the shortest form that parses back to the same `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Model label with mesh dimensions and field names, e.g.
    /// `ribbon n1d=16 fields=xi1,xi2,w,theta`.
    pub model: String,
    pub tau: f64,
    pub horizon: f64,
    pub states: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn of(model: &str, traj: &Trajectory) -> Self {
        Self {
            model: model.to_string(),
            tau: traj.tau,
            horizon: traj.horizon,
            states: traj.states.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let ndof = self.states.first().map_or(0, Vec::len);
        let mut s = String::new();
        let _ = writeln!(s, "{SNAPSHOT_MAGIC}");
        let _ = writeln!(s, "model={}", self.model);
        let _ = writeln!(s, "tau={}", self.tau);
        let _ = writeln!(s, "horizon={}", self.horizon);
        let _ = writeln!(s, "ndof={ndof}");
        let _ = writeln!(s, "states={}", self.states.len());
        for state in &self.states {
            let mut line = String::with_capacity(24 * state.len());
            for (i, v) in state.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{v}");
            }
            s.push_str(&line);
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Format(format!("snapshot: {what}"));
        let mut lines = text.lines();
        if lines.next() != Some(SNAPSHOT_MAGIC) {
            return Err(bad("missing header line"));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing `{key}`")))?;
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| bad(&format!("expected `{key}=`, found `{line}`")))
        };
        let num = |key: &str, v: String| -> Result<f64> {
            v.parse().map_err(|_| bad(&format!("`{key}` is not a number")))
        };
        let count = |key: &str, v: String| -> Result<usize> {
            v.parse().map_err(|_| bad(&format!("`{key}` is not a count")))
        };
        let model = field("model")?;
        let tau = num("tau", field("tau")?)?;
        let horizon = num("horizon", field("horizon")?)?;
        let ndof = count("ndof", field("ndof")?)?;
        let n = count("states", field("states")?)?;
        let states = lines
            .by_ref()
            .take(n)
            .enumerate()
            .map(|(k, line)| {
                let v: Vec<f64> = line
                    .split(' ')
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse().map_err(|_| bad(&format!("state {k}: `{t}` is not a number"))))
                    .collect::<Result<_>>()?;
                if v.len() != ndof {
                    return Err(bad(&format!("state {k} has {} values, expected {ndof}", v.len())));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        if states.len() != n {
            return Err(bad(&format!("{} states, header says {n}", states.len())));
        }
        Ok(Self {
            model,
            tau,
            horizon,
            states,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}
