//! Line-delimited JSON messages exchanged with DSKY consoles.
//!
//! ```text
//! -> {"type":"key","key":"V"}
//! -> {"type":"control","action":"pause"}
//! <- {"type":"dsky","prog":"00","verb":"16","noun":"36","r1":"+00012",
//!     "r2":"+37000","r3":"","lamps":{"COMP-ACTY":true,...},"cycle":1234}
//! <- {"type":"error","code":"BadMessage","detail":"..."}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlAction {
    Pause,
    Resume,
    Step,
    Restart,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Inbound {
    Key { key: String },
    Control { action: ControlAction },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DskySnapshot {
    pub prog: String,
    pub verb: String,
    pub noun: String,
    pub r1: String,
    pub r2: String,
    pub r3: String,
    pub lamps: BTreeMap<String, bool>,
    pub cycle: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Outbound {
    Dsky(DskySnapshot),
    Error { code: String, detail: String },
}

impl Outbound {
    pub fn error(code: &str, detail: impl Into<String>) -> Outbound {
        Outbound::Error {
            code: code.to_string(),
            detail: detail.into(),
        }
    }

    /// One JSON line, newline excluded.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("protocol messages always serialize")
    }
}

/// Parses one inbound line; errors carry a protocol error reply.
pub fn parse_inbound(line: &str) -> Result<Inbound, Outbound> {
    serde_json::from_str(line).map_err(|e| Outbound::error("BadMessage", e.to_string()))
}
