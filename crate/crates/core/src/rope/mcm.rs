//! Magnetic core memory.
//!
//! Each core sits at the crossing of one row and one column select wire.
//! Sensing a core drives it to zero, and the value it held is written straight
//! back, so every read costs one rewrite cycle while leaving the stored bit
//! unchanged.

use super::RopeError;
use crate::word::Word;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McmGrid {
    rows: usize,
    cols: usize,
    polarity: Vec<bool>,
    rewrite_cycles: u64,
}

impl McmGrid {
    /// A grid with every core magnetized to zero.
    pub fn new(rows: usize, cols: usize) -> McmGrid {
        McmGrid {
            rows,
            cols,
            polarity: vec![false; rows * cols],
            rewrite_cycles: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rewrite_cycles(&self) -> u64 {
        self.rewrite_cycles
    }

    fn index(&self, row: usize, col: usize) -> Result<usize, RopeError> {
        if row >= self.rows || col >= self.cols {
            return Err(RopeError::OutOfGrid { row, col });
        }
        Ok(row * self.cols + col)
    }

    pub fn read(&mut self, row: usize, col: usize) -> Result<bool, RopeError> {
        let i = self.index(row, col)?;
        let sensed = std::mem::replace(&mut self.polarity[i], false);
        self.polarity[i] = sensed;
        self.rewrite_cycles += 1;
        Ok(sensed)
    }

    pub fn write(&mut self, row: usize, col: usize, bit: bool) -> Result<(), RopeError> {
        let i = self.index(row, col)?;
        self.polarity[i] = bit;
        Ok(())
    }
}

pub fn mcm_read(grid: &mut McmGrid, row: usize, col: usize) -> Result<bool, RopeError> {
    grid.read(row, col)
}

pub fn mcm_write(grid: &mut McmGrid, row: usize, col: usize, bit: bool) -> Result<(), RopeError> {
    grid.write(row, col, bit)
}

/// A word-organized core stack: one bit plane per stored bit, all planes
/// selected by the same row and column for a given word address.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreStack {
    cols: usize,
    words: usize,
    planes: Vec<McmGrid>,
}

impl CoreStack {
    /// A stack of 16 planes laid out `rows x cols`.
    pub fn new(rows: usize, cols: usize) -> CoreStack {
        CoreStack {
            cols,
            words: rows * cols,
            planes: (0..16).map(|_| McmGrid::new(rows, cols)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.words
    }

    pub fn is_empty(&self) -> bool {
        self.words == 0
    }

    pub fn planes(&self) -> &[McmGrid] {
        &self.planes
    }

    fn select(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }

    /// Reads the stored 16 bits of word `index`; bit 0 comes from plane 0.
    pub fn read_word(&mut self, index: usize) -> Result<Word, RopeError> {
        let (row, col) = self.select(index);
        let mut raw = 0u16;
        for (bit, plane) in self.planes.iter_mut().enumerate() {
            raw |= u16::from(plane.read(row, col)?) << bit;
        }
        Ok(Word::from_raw(raw))
    }

    pub fn write_word(&mut self, index: usize, word: Word) -> Result<(), RopeError> {
        let (row, col) = self.select(index);
        for (bit, plane) in self.planes.iter_mut().enumerate() {
            plane.write(row, col, word.raw() >> bit & 1 == 1)?;
        }
        Ok(())
    }

    /// Reads every stored bit without counting rewrite cycles.
    pub fn peek_word(&self, index: usize) -> Word {
        let (row, col) = self.select(index);
        let raw = self
            .planes
            .iter()
            .enumerate()
            .fold(0u16, |acc, (bit, plane)| {
                acc | u16::from(plane.polarity[row * plane.cols + col]) << bit
            });
        Word::from_raw(raw)
    }
}
