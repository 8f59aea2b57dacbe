//! Channel assignments and restart layout, loaded from a small text manifest.
//!
//! ```text
//! DSALMOUT  11          ; channel name -> octal id
//! PROTECT   1300 1377   ; erasable kept across restarts
//! PHASETAB  1340 10     ; phase table base and group count
//! ALARMCODE 1337        ; where alarm codes are stored
//! ```

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use thiserror::Error;

use crate::channels::CHANNEL_COUNT;

/// The manifest shipped with the emulator.
pub const DEFAULT_MANIFEST: &str = include_str!("../data/default.manifest");

/// Highest unswitched erasable address; layout entries must sit below it.
const ERASABLE_LIMIT: u16 = 0o1377;

/// Channel names every manifest must define.
pub const REQUIRED_CHANNELS: [&str; 5] =
    ["DSALMOUT", "DSKYDISP", "DSKYKEY", "DSKYLAMP", "SUPERBNK"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("manifest line {line}: {message}")]
pub struct ManifestError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseTableLayout {
    pub base: u16,
    pub groups: u16,
}

impl PhaseTableLayout {
    /// Address of the phase word of `group`; the resume address follows it.
    pub fn phase_addr(&self, group: u16) -> u16 {
        self.base + 2 * group
    }

    pub fn range(&self) -> RangeInclusive<u16> {
        self.base..=self.base + 2 * self.groups - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    channels: BTreeMap<String, u16>,
    protected: Vec<RangeInclusive<u16>>,
    phase_table: PhaseTableLayout,
    alarm_code: u16,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest::parse(DEFAULT_MANIFEST).expect("shipped manifest is valid")
    }
}

fn octal(token: &str, line: usize) -> Result<u16, ManifestError> {
    u16::from_str_radix(token, 8).map_err(|_| ManifestError {
        line,
        message: format!("expected an octal number, found {token:?}"),
    })
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest, ManifestError> {
        let mut channels = BTreeMap::new();
        let mut protected = Vec::new();
        let mut phase_table = None;
        let mut alarm_code = None;

        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split(';').next().unwrap_or("");
            let fields: Vec<&str> = content.split_whitespace().collect();
            let err = |message: String| ManifestError { line, message };
            match fields.as_slice() {
                [] => {}
                ["PROTECT", lo, hi] => {
                    let (lo, hi) = (octal(lo, line)?, octal(hi, line)?);
                    if lo > hi || hi > ERASABLE_LIMIT {
                        return Err(err(format!("bad protected range {lo:o}-{hi:o}")));
                    }
                    protected.push(lo..=hi);
                }
                ["PHASETAB", base, groups] => {
                    let layout = PhaseTableLayout {
                        base: octal(base, line)?,
                        groups: octal(groups, line)?,
                    };
                    if layout.groups == 0 || *layout.range().end() > ERASABLE_LIMIT {
                        return Err(err("phase table does not fit in erasable".into()));
                    }
                    phase_table = Some((layout, line));
                }
                ["ALARMCODE", addr] => alarm_code = Some((octal(addr, line)?, line)),
                [name, id] => {
                    let id = octal(id, line)?;
                    if id as usize >= CHANNEL_COUNT {
                        return Err(err(format!("channel {id:o} out of range")));
                    }
                    if channels.insert(name.to_string(), id).is_some() {
                        return Err(err(format!("channel {name} defined twice")));
                    }
                }
                _ => return Err(err(format!("unrecognized entry {:?}", content.trim()))),
            }
        }

        let end = text.lines().count();
        let missing = |what: &str| ManifestError {
            line: end,
            message: format!("missing {what}"),
        };
        for name in REQUIRED_CHANNELS {
            if !channels.contains_key(name) {
                return Err(missing(name));
            }
        }
        let (phase_table, phase_line) = phase_table.ok_or_else(|| missing("PHASETAB"))?;
        let (alarm_code, alarm_line) = alarm_code.ok_or_else(|| missing("ALARMCODE"))?;
        let is_protected = |a: u16| protected.iter().any(|r| r.contains(&a));
        if !phase_table.range().all(is_protected) {
            return Err(ManifestError {
                line: phase_line,
                message: "phase table must lie inside a PROTECT range".into(),
            });
        }
        if !is_protected(alarm_code) {
            return Err(ManifestError {
                line: alarm_line,
                message: "alarm code word must lie inside a PROTECT range".into(),
            });
        }
        Ok(Manifest {
            channels,
            protected,
            phase_table,
            alarm_code,
        })
    }

    pub fn channel(&self, name: &str) -> Option<u16> {
        self.channels.get(name).copied()
    }

    pub fn channels(&self) -> impl Iterator<Item = (&str, u16)> {
        self.channels.iter().map(|(n, &id)| (n.as_str(), id))
    }

    fn required(&self, name: &str) -> u16 {
        self.channels[name]
    }

    pub fn dsalmout(&self) -> u16 {
        self.required("DSALMOUT")
    }

    pub fn superbank(&self) -> u16 {
        self.required("SUPERBNK")
    }

    pub fn dsky_keys(&self) -> u16 {
        self.required("DSKYKEY")
    }

    pub fn dsky_lamps(&self) -> u16 {
        self.required("DSKYLAMP")
    }

    pub fn dsky_display(&self) -> u16 {
        self.required("DSKYDISP")
    }

    pub fn protected(&self) -> &[RangeInclusive<u16>] {
        &self.protected
    }

    /// True if the unswitched erasable address survives a restart.
    pub fn is_protected(&self, addr: u16) -> bool {
        self.protected.iter().any(|r| r.contains(&addr))
    }

    pub fn phase_table(&self) -> PhaseTableLayout {
        self.phase_table
    }

    pub fn alarm_code(&self) -> u16 {
        self.alarm_code
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_manifest() {
        let m = Manifest::default();
        assert_eq!(m.dsalmout(), 0o11);
        assert_eq!(m.superbank(), 0o7);
        assert_eq!(m.phase_table().phase_addr(1), 0o1342);
        assert!(m.is_protected(0o1337));
        assert!(!m.is_protected(0o1277));
    }

    #[test]
    fn missing_required_channel() {
        let text = DEFAULT_MANIFEST.replace("DSALMOUT  11", "");
        assert!(Manifest::parse(&text)
            .unwrap_err()
            .message
            .contains("DSALMOUT"));
    }

    #[test]
    fn phase_table_outside_protection() {
        let text = DEFAULT_MANIFEST.replace("PHASETAB  1340 10", "PHASETAB  1200 10");
        assert!(Manifest::parse(&text).is_err());
    }

    #[test]
    fn bad_numbers() {
        let err = Manifest::parse("DSALMOUT 9").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(Manifest::parse("FOO 1000").is_err());
    }
}
