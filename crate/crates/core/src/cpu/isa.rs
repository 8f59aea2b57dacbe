//! Instruction encoding.
//!
//! A 15-bit instruction word holds a 3-bit opcode (bits 15-13) and a 12-bit
//! operand (bits 12-1). Where several instructions share an opcode the top
//! two operand bits (the quarter code) tell them apart, leaving a 10-bit
//! erasable operand. A preceding EXTEND switches decoding to the extended
//! table; extended opcode 0 carries a 3-bit I/O function and a 9-bit channel.
//!
//! ```text
//!        basic                         extended
//! 0      TC  (2 RETURN, 3 NOOP, 6 EXTEND)  READ WRITE RAND (I/O 0-2)
//! 1      CCS (q0)  TCF (q1-3)
//! 2      DAS (q0)  ADS (q3)
//! 3      CA                            DCA
//! 4      CS
//! 5      INDEX (q0) DXCH (q1) TS (q2) XCH (q3)
//! 6      AD
//! 7      MASK
//! ```
//!
//! Every other slot decodes to [`UnimplementedInstruction`].

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mnemonic {
    Tc,
    Tcf,
    Ccs,
    Ca,
    Cs,
    Ts,
    Xch,
    Ad,
    Ads,
    Mask,
    Index,
    Noop,
    Extend,
    Return,
    Dca,
    Dxch,
    Das,
    Rand,
    Read,
    Write,
}

/// What an instruction's operand field may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperandKind {
    None,
    /// Any 12-bit address.
    Address,
    /// 10-bit erasable address (0000-1777).
    Erasable,
    /// Fixed address (2000-7777).
    Fixed,
    /// 9-bit channel.
    Channel,
}

impl OperandKind {
    pub fn accepts(self, value: u16) -> bool {
        match self {
            OperandKind::None => value == 0,
            OperandKind::Address => value <= 0o7777,
            OperandKind::Erasable => value <= 0o1777,
            OperandKind::Fixed => (0o2000..=0o7777).contains(&value),
            OperandKind::Channel => value <= 0o777,
        }
    }
}

impl Mnemonic {
    pub const ALL: [Mnemonic; 20] = [
        Mnemonic::Tc,
        Mnemonic::Tcf,
        Mnemonic::Ccs,
        Mnemonic::Ca,
        Mnemonic::Cs,
        Mnemonic::Ts,
        Mnemonic::Xch,
        Mnemonic::Ad,
        Mnemonic::Ads,
        Mnemonic::Mask,
        Mnemonic::Index,
        Mnemonic::Noop,
        Mnemonic::Extend,
        Mnemonic::Return,
        Mnemonic::Dca,
        Mnemonic::Dxch,
        Mnemonic::Das,
        Mnemonic::Rand,
        Mnemonic::Read,
        Mnemonic::Write,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mnemonic::Tc => "TC",
            Mnemonic::Tcf => "TCF",
            Mnemonic::Ccs => "CCS",
            Mnemonic::Ca => "CA",
            Mnemonic::Cs => "CS",
            Mnemonic::Ts => "TS",
            Mnemonic::Xch => "XCH",
            Mnemonic::Ad => "AD",
            Mnemonic::Ads => "ADS",
            Mnemonic::Mask => "MASK",
            Mnemonic::Index => "INDEX",
            Mnemonic::Noop => "NOOP",
            Mnemonic::Extend => "EXTEND",
            Mnemonic::Return => "RETURN",
            Mnemonic::Dca => "DCA",
            Mnemonic::Dxch => "DXCH",
            Mnemonic::Das => "DAS",
            Mnemonic::Rand => "RAND",
            Mnemonic::Read => "READ",
            Mnemonic::Write => "WRITE",
        }
    }

    /// Case-insensitive lookup.
    pub fn from_name(name: &str) -> Option<Mnemonic> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(name))
    }

    /// Needs a preceding EXTEND.
    pub fn is_extended(self) -> bool {
        matches!(
            self,
            Mnemonic::Dca | Mnemonic::Rand | Mnemonic::Read | Mnemonic::Write
        )
    }

    pub fn operand_kind(self) -> OperandKind {
        match self {
            Mnemonic::Noop | Mnemonic::Extend | Mnemonic::Return => OperandKind::None,
            Mnemonic::Tc
            | Mnemonic::Ca
            | Mnemonic::Cs
            | Mnemonic::Ad
            | Mnemonic::Mask
            | Mnemonic::Dca => OperandKind::Address,
            Mnemonic::Tcf => OperandKind::Fixed,
            Mnemonic::Ccs
            | Mnemonic::Ts
            | Mnemonic::Xch
            | Mnemonic::Ads
            | Mnemonic::Index
            | Mnemonic::Dxch
            | Mnemonic::Das => OperandKind::Erasable,
            Mnemonic::Rand | Mnemonic::Read | Mnemonic::Write => OperandKind::Channel,
        }
    }

    /// Memory cycles taken to execute.
    pub fn cycles(self) -> u64 {
        match self {
            Mnemonic::Tc | Mnemonic::Tcf | Mnemonic::Noop | Mnemonic::Extend => 1,
            Mnemonic::Dca | Mnemonic::Dxch | Mnemonic::Das => 3,
            _ => 2,
        }
    }

    fn base(self) -> u16 {
        match self {
            Mnemonic::Tc | Mnemonic::Read => 0o00000,
            Mnemonic::Return => 0o00002,
            Mnemonic::Noop => 0o00003,
            Mnemonic::Extend => 0o00006,
            Mnemonic::Write => 0o01000,
            Mnemonic::Rand => 0o02000,
            Mnemonic::Ccs | Mnemonic::Tcf => 0o10000,
            Mnemonic::Das => 0o20000,
            Mnemonic::Ads => 0o26000,
            Mnemonic::Ca | Mnemonic::Dca => 0o30000,
            Mnemonic::Cs => 0o40000,
            Mnemonic::Index => 0o50000,
            Mnemonic::Dxch => 0o52000,
            Mnemonic::Ts => 0o54000,
            Mnemonic::Xch => 0o56000,
            Mnemonic::Ad => 0o60000,
            Mnemonic::Mask => 0o70000,
        }
    }
}

impl fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{mnemonic} operand {operand:o} out of range")]
pub struct OperandRange {
    pub mnemonic: Mnemonic,
    pub operand: u16,
}

/// A word whose opcode slot belongs to an instruction outside the
/// implemented subset.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unimplemented instruction {name} ({}{word:05o})", if *.extended { "extended " } else { "" })]
pub struct UnimplementedInstruction {
    pub word: u16,
    pub extended: bool,
    /// Name of the instruction that owns the slot.
    pub name: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    mnemonic: Mnemonic,
    operand: u16,
}

impl Instruction {
    /// Validates the operand and canonicalizes aliases: `TC 2` is RETURN,
    /// `TC 3` is NOOP and `TC 6` is EXTEND.
    pub fn new(mnemonic: Mnemonic, operand: u16) -> Result<Instruction, OperandRange> {
        if !mnemonic.operand_kind().accepts(operand) {
            return Err(OperandRange { mnemonic, operand });
        }
        let canonical = match (mnemonic, operand) {
            (Mnemonic::Tc, 2) => Mnemonic::Return,
            (Mnemonic::Tc, 3) => Mnemonic::Noop,
            (Mnemonic::Tc, 6) => Mnemonic::Extend,
            (m, _) => m,
        };
        let operand = if canonical == mnemonic { operand } else { 0 };
        Ok(Instruction {
            mnemonic: canonical,
            operand,
        })
    }

    pub fn mnemonic(self) -> Mnemonic {
        self.mnemonic
    }

    pub fn operand(self) -> u16 {
        self.operand
    }

    pub fn is_extended(self) -> bool {
        self.mnemonic.is_extended()
    }

    pub fn encode(self) -> u16 {
        self.mnemonic.base() | self.operand
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mnemonic.operand_kind() {
            OperandKind::None => write!(f, "{}", self.mnemonic),
            OperandKind::Channel => write!(f, "{} {:03o}", self.mnemonic, self.operand),
            _ => write!(f, "{} {:04o}", self.mnemonic, self.operand),
        }
    }
}

pub fn encode(mnemonic: Mnemonic, operand: u16) -> Result<u16, OperandRange> {
    Instruction::new(mnemonic, operand).map(Instruction::encode)
}

pub fn decode(word: u16, extended: bool) -> Result<Instruction, UnimplementedInstruction> {
    let word = word & 0o77777;
    let opcode = word >> 12;
    let operand = word & 0o7777;
    let quarter = operand >> 10;
    let erasable = operand & 0o1777;
    let unimplemented = |name| {
        Err(UnimplementedInstruction {
            word,
            extended,
            name,
        })
    };
    let ok = |mnemonic, operand| Ok(Instruction { mnemonic, operand });

    if !extended {
        return match (opcode, quarter) {
            (0, _) => match operand {
                2 => ok(Mnemonic::Return, 0),
                3 => ok(Mnemonic::Noop, 0),
                6 => ok(Mnemonic::Extend, 0),
                _ => ok(Mnemonic::Tc, operand),
            },
            (1, 0) => ok(Mnemonic::Ccs, erasable),
            (1, _) => ok(Mnemonic::Tcf, operand),
            (2, 0) => ok(Mnemonic::Das, erasable),
            (2, 1) => unimplemented("LXCH"),
            (2, 2) => unimplemented("INCR"),
            (2, _) => ok(Mnemonic::Ads, erasable),
            (3, _) => ok(Mnemonic::Ca, operand),
            (4, _) => ok(Mnemonic::Cs, operand),
            (5, 0) => ok(Mnemonic::Index, erasable),
            (5, 1) => ok(Mnemonic::Dxch, erasable),
            (5, 2) => ok(Mnemonic::Ts, erasable),
            (5, _) => ok(Mnemonic::Xch, erasable),
            (6, _) => ok(Mnemonic::Ad, operand),
            _ => ok(Mnemonic::Mask, operand),
        };
    }

    let channel = operand & 0o777;
    match opcode {
        0 => match operand >> 9 {
            0 => ok(Mnemonic::Read, channel),
            1 => ok(Mnemonic::Write, channel),
            2 => ok(Mnemonic::Rand, channel),
            3 => unimplemented("WAND"),
            4 => unimplemented("ROR"),
            5 => unimplemented("WOR"),
            6 => unimplemented("RXOR"),
            _ => unimplemented("EDRUPT"),
        },
        1 if quarter == 0 => unimplemented("DV"),
        1 => unimplemented("BZF"),
        2 => unimplemented(["MSU", "QXCH", "AUG", "DIM"][quarter as usize]),
        3 => ok(Mnemonic::Dca, operand),
        4 => unimplemented("DCS"),
        5 => unimplemented("INDEX"),
        6 if quarter == 0 => unimplemented("SU"),
        6 => unimplemented("BZMF"),
        _ => unimplemented("MP"),
    }
}
