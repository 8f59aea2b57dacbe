//! Core rope weave plans.
//!
//! A plan records, for every sense line (one stored value) and every core in a
//! core group, whether the line threads through the core (a 1) or is routed
//! around it (a 0). Cores are numbered from the most significant bit, so core
//! 0 of a 4-core group carries bit 3 and the plan reads left to right the way
//! a value is written in binary.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::image::{RopeImage, BANK_WORDS};
use super::RopeError;
use crate::word::Word;

/// Maximum number of lines a single core can be threaded by.
pub const MAX_LINES_PER_CORE: usize = 24;

/// Width of a rope-image core group: the full stored word, parity included.
pub const WORD_CORES: usize = 16;

/// Core groups needed to hold one 1024-word bank at 24 lines per group.
pub const GROUPS_PER_BANK: usize = BANK_WORDS.div_ceil(MAX_LINES_PER_CORE);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pass {
    Through,
    Around,
}

impl fmt::Display for Pass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pass::Through => "through",
            Pass::Around => "around",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeavePlan {
    cores: usize,
    pass: Vec<Vec<Pass>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    line: usize,
    core: usize,
    pass: Pass,
}

/// Builds the plan threading each value's 1-bits through its cores.
pub fn weave(words: &[u32], cores: usize) -> Result<WeavePlan, RopeError> {
    if cores == 0 || cores > 32 {
        return Err(RopeError::WidthMismatch {
            line: 0,
            value: 0,
            cores,
        });
    }
    if words.len() > MAX_LINES_PER_CORE {
        return Err(RopeError::TooManyLines { lines: words.len() });
    }
    let pass = words
        .iter()
        .enumerate()
        .map(|(line, &value)| {
            if cores < 32 && value >> cores != 0 {
                return Err(RopeError::WidthMismatch { line, value, cores });
            }
            Ok((0..cores)
                .map(|core| {
                    if value >> (cores - 1 - core) & 1 == 1 {
                        Pass::Through
                    } else {
                        Pass::Around
                    }
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;
    Ok(WeavePlan { cores, pass })
}

/// Senses every line: a core threaded by the line reads as 1.
pub fn readout(plan: &WeavePlan) -> Vec<u32> {
    plan.pass
        .iter()
        .map(|row| {
            row.iter()
                .fold(0u32, |acc, p| (acc << 1) | u32::from(*p == Pass::Through))
        })
        .collect()
}

impl WeavePlan {
    pub fn cores(&self) -> usize {
        self.cores
    }

    pub fn lines(&self) -> usize {
        self.pass.len()
    }

    pub fn pass(&self, line: usize, core: usize) -> Pass {
        self.pass[line][core]
    }

    /// Number of lines threaded through `core`.
    pub fn through_count(&self, core: usize) -> usize {
        self.pass
            .iter()
            .filter(|row| row[core] == Pass::Through)
            .count()
    }

    /// Writes `line,core,pass` rows, line-major.
    pub fn to_csv(&self) -> String {
        let mut out = csv::Writer::from_writer(Vec::new());
        for (line, row) in self.pass.iter().enumerate() {
            for (core, &pass) in row.iter().enumerate() {
                out.serialize(CsvRow { line, core, pass })
                    .expect("in-memory write");
            }
        }
        String::from_utf8(out.into_inner().expect("in-memory flush")).expect("ascii csv")
    }

    /// Parses a plan from CSV. Every (line, core) cell must appear exactly once.
    pub fn from_csv(text: &str) -> Result<WeavePlan, RopeError> {
        let rows = read_rows(text)?;
        let lines = rows.iter().map(|r| r.line + 1).max().unwrap_or(0);
        let cores = rows.iter().map(|r| r.core + 1).max().unwrap_or(0);
        if lines > MAX_LINES_PER_CORE {
            return Err(RopeError::TooManyLines { lines });
        }
        let mut cells = vec![vec![None; cores]; lines];
        for row in rows {
            if cells[row.line][row.core].replace(row.pass).is_some() {
                return Err(RopeError::Csv(format!(
                    "duplicate cell {},{}",
                    row.line, row.core
                )));
            }
        }
        let pass = cells
            .into_iter()
            .enumerate()
            .map(|(line, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(core, p)| {
                        p.ok_or_else(|| RopeError::Csv(format!("missing cell {line},{core}")))
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        Ok(WeavePlan { cores, pass })
    }
}

fn read_rows(text: &str) -> Result<Vec<CsvRow>, RopeError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| RopeError::Csv(e.to_string())))
        .collect()
}

/// Global core id of `bit_core` in the group holding `offset` of `bank`.
fn rope_core_id(bank: u8, offset: usize, bit_core: usize) -> usize {
    (bank as usize * GROUPS_PER_BANK + offset / MAX_LINES_PER_CORE) * WORD_CORES + bit_core
}

/// Weaves a whole rope image, one plan per 24-word core group.
///
/// Returns `(bank, group, plan)` triples in address order.
pub fn weave_image(image: &RopeImage) -> Vec<(u8, usize, WeavePlan)> {
    let mut plans = Vec::new();
    for (bank, words) in image.banks() {
        for (group, chunk) in words.chunks(MAX_LINES_PER_CORE).enumerate() {
            let values: Vec<u32> = chunk.iter().map(|w| u32::from(w.raw())).collect();
            let plan = weave(&values, WORD_CORES).expect("24 lines of 16-bit words always fit");
            plans.push((bank, group, plan));
        }
    }
    plans
}

/// Exports a rope image as weave CSV.
///
/// Line ids are global word indices (`bank * 1024 + offset`). Core ids are
/// global too: each 24-line group owns its own 16 cores, numbered
/// consecutively across banks.
pub fn rope_to_csv(image: &RopeImage) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    for (bank, group, plan) in weave_image(image) {
        for line in 0..plan.lines() {
            let offset = group * MAX_LINES_PER_CORE + line;
            for core in 0..plan.cores() {
                out.serialize(CsvRow {
                    line: bank as usize * BANK_WORDS + offset,
                    core: rope_core_id(bank, offset, core),
                    pass: plan.pass(line, core),
                })
                .expect("in-memory write");
            }
        }
    }
    String::from_utf8(out.into_inner().expect("in-memory flush")).expect("ascii csv")
}

/// Rebuilds a rope image from weave CSV produced by [`rope_to_csv`].
pub fn rope_from_csv(text: &str) -> Result<RopeImage, RopeError> {
    use std::collections::BTreeMap;

    // bank -> (raw words, cells seen)
    let mut banks: BTreeMap<u8, (Vec<u16>, Vec<u16>)> = BTreeMap::new();
    for row in read_rows(text)? {
        let bank = row.line / BANK_WORDS;
        let offset = row.line % BANK_WORDS;
        if bank >= super::image::MAX_BANKS {
            return Err(RopeError::Csv(format!(
                "line {} is beyond the last bank",
                row.line
            )));
        }
        let bank = bank as u8;
        let bit_core = row.core % WORD_CORES;
        if rope_core_id(bank, offset, bit_core) != row.core {
            return Err(RopeError::Csv(format!(
                "core {} is not in the group of line {}",
                row.core, row.line
            )));
        }
        let (words, seen) = banks
            .entry(bank)
            .or_insert_with(|| (vec![0; BANK_WORDS], vec![0; BANK_WORDS]));
        let bit = 1u16 << (WORD_CORES - 1 - bit_core);
        if seen[offset] & bit != 0 {
            return Err(RopeError::Csv(format!(
                "duplicate cell {},{}",
                row.line, row.core
            )));
        }
        seen[offset] |= bit;
        if row.pass == Pass::Through {
            words[offset] |= bit;
        }
    }
    let mut image = RopeImage::new();
    for (bank, (words, seen)) in banks {
        if let Some(offset) = seen.iter().position(|&s| s != 0xFFFF) {
            return Err(RopeError::Csv(format!(
                "bank {bank:o} word {offset:o} is incompletely woven"
            )));
        }
        image.insert_bank(bank, words.into_iter().map(Word::from_raw).collect())?;
    }
    image.validate()?;
    Ok(image)
}
