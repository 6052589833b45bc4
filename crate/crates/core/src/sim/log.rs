//! JSON-lines episode log: a header object, then one `StepOutcome` per line.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::session::StepOutcome;
use crate::error::{Error, Result};

pub const STEP_LOG_SCHEMA: &str = "ecoabr.step-log";
pub const STEP_LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLogHeader {
    pub schema: String,
    pub version: u32,
    pub controller: String,
    pub trace: String,
    pub title: String,
}

impl StepLogHeader {
    pub fn new(controller: &str, trace: &str, title: &str) -> Self {
        Self {
            schema: STEP_LOG_SCHEMA.into(),
            version: STEP_LOG_VERSION,
            controller: controller.into(),
            trace: trace.into(),
            title: title.into(),
        }
    }
}

pub fn write_step_log<W: Write>(
    mut out: W,
    header: &StepLogHeader,
    outcomes: &[StepOutcome],
) -> Result<()> {
    let io = |e| Error::io("<step log>", e);
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n").map_err(io)?;
    for o in outcomes {
        serde_json::to_writer(&mut out, o)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn save_step_log(
    path: impl AsRef<Path>,
    header: &StepLogHeader,
    outcomes: &[StepOutcome],
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_step_log(std::io::BufWriter::new(file), header, outcomes)
}

pub fn load_step_log(path: impl AsRef<Path>) -> Result<(StepLogHeader, Vec<StepOutcome>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = std::io::BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or(Error::Empty("step log"))?
        .map_err(|e| Error::io(path, e))?;
    let header: StepLogHeader = serde_json::from_str(&first)?;
    if header.schema != STEP_LOG_SCHEMA || header.version != STEP_LOG_VERSION {
        return Err(Error::validation(format!(
            "unsupported step log {} v{}",
            header.schema, header.version
        )));
    }
    let mut outcomes = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        outcomes.push(serde_json::from_str(&line)?);
    }
    Ok((header, outcomes))
}
