//! Core rope and core memory models plus the `.rope` container.

pub mod image;
pub mod mcm;
pub mod weave;

use thiserror::Error;

pub use image::{banks_from_image, image_from_banks, RopeImage, BANK_WORDS, MAX_BANKS};
pub use mcm::{mcm_read, mcm_write, CoreStack, McmGrid};
pub use weave::{readout, rope_from_csv, rope_to_csv, weave, Pass, WeavePlan, MAX_LINES_PER_CORE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RopeError {
    #[error("bad rope image: {0}")]
    BadImage(String),
    #[error("corrupt word {raw:#08o} in bank {bank:o} at offset {offset:04o}")]
    CorruptWord { bank: u8, offset: u16, raw: u16 },
    #[error("{lines} lines exceed the 24-line limit of a core group")]
    TooManyLines { lines: usize },
    #[error("line {line}: value {value:#o} does not fit in {cores} cores")]
    WidthMismatch {
        line: usize,
        value: u32,
        cores: usize,
    },
    #[error("core ({row}, {col}) is outside the grid")]
    OutOfGrid { row: usize, col: usize },
    #[error("weave csv: {0}")]
    Csv(String),
}
