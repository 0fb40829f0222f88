use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::Value;

use ifnetlab::regimes::{Verdict, REPORT_SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Negative,
    Inconclusive,
    InputError,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Negative => 1,
            Status::Inconclusive => 2,
            Status::InputError => 3,
        }
    }

    pub fn of_verdict(v: Verdict) -> Status {
        match v {
            Verdict::Holds => Status::Success,
            Verdict::Fails => Status::Negative,
            Verdict::Inconclusive => Status::Inconclusive,
        }
    }

    pub fn of_bool(ok: bool) -> Status {
        if ok {
            Status::Success
        } else {
            Status::Negative
        }
    }
}

/// Destination of reports. Without a directory only stdout is written.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    /// Creates the output directory up front so a bad path fails before any work.
    pub fn prepare(dir: Option<&Path>) -> Result<Sink> {
        if let Some(d) = dir {
            fs::create_dir_all(d).with_context(|| format!("cannot create output directory {}", d.display()))?;
        }
        Ok(Sink { dir: dir.map(Path::to_path_buf) })
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    }

    /// Writes `report` as `<name>.json` and echoes it to stdout.
    pub fn report(&self, name: &str, mut report: Value) -> Result<()> {
        if let Value::Object(map) = &mut report {
            map.insert("schema_version".into(), REPORT_SCHEMA_VERSION.into());
        }
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        self.write(&format!("{name}.json"), text.as_bytes())?;
        print!("{text}");
        Ok(())
    }
}
