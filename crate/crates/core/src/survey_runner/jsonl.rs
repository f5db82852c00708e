//! Responses file: one `SimulatedResponse` JSON object per LF-terminated
//! line, sorted by (role_id, question_id), no timestamps.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use parking_lot::Mutex;

use super::{PollError, SimulatedResponse};

/// Sorted, deduplicated JSONL; later records win on duplicate keys.
pub fn render_jsonl(responses: &[SimulatedResponse]) -> String {
    let mut by_key = BTreeMap::new();
    for r in responses {
        by_key.insert(r.key(), r);
    }
    let mut out = String::new();
    for r in by_key.values() {
        out.push_str(&serde_json::to_string(r).expect("response serializes"));
        out.push('\n');
    }
    out
}

/// Writes the final sorted file via a sibling temp file and rename.
pub fn write_responses(path: &Path, responses: &[SimulatedResponse]) -> Result<(), PollError> {
    let tmp = path.with_extension("jsonl.tmp");
    std::fs::write(&tmp, render_jsonl(responses))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a responses file. A malformed final line without a trailing
/// newline is treated as a write cut short and dropped; any other malformed
/// line is an error.
pub fn read_responses(path: &Path) -> Result<Vec<SimulatedResponse>, PollError> {
    let text = std::fs::read_to_string(path)?;
    let ends_clean = text.is_empty() || text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<SimulatedResponse>(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() && !ends_clean => break,
            Err(e) => {
                return Err(PollError::MalformedResponses {
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// Append-only log of responses as they complete, flushed per line, so an
/// interrupted poll can be resumed.
pub struct ResponseJournal {
    writer: Mutex<BufWriter<File>>,
}

impl ResponseJournal {
    pub fn append_to(path: &Path) -> Result<Self, PollError> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .read(true)
            .open(path)?;
        // a truncated last line must not swallow the next record
        let len = file.metadata()?.len();
        if len > 0 {
            use std::io::{Read, Seek, SeekFrom};
            let mut last = [0u8; 1];
            file.seek(SeekFrom::Start(len - 1))?;
            file.read_exact(&mut last)?;
            if last[0] != b'\n' {
                file.write_all(b"\n")?;
            }
        }
        Ok(Self {
            writer: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn record(&self, response: &SimulatedResponse) -> std::io::Result<()> {
        let mut w = self.writer.lock();
        serde_json::to_writer(&mut *w, response)?;
        w.write_all(b"\n")?;
        w.flush()
    }
}
