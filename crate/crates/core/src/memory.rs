//! Banked memory map.
//!
//! ```text
//! 0000-0007  central registers A L Q EB FB Z BB ZERO
//! 0010-1377  unswitched erasable, erasable banks 0-2
//! 1400-1777  switched erasable, bank selected by EB
//! 2000-3777  switched fixed, bank selected by FB (+ superbank)
//! 4000-7777  unmapped
//! ```
//!
//! The central registers double as offsets 0-7 of erasable bank 0, so the
//! switched window at EB=0 shows them too.

use std::fmt;

use thiserror::Error;

use crate::channels::{ChannelBus, ChannelError, SUPERBANK_BIT};
use crate::manifest::Manifest;
use crate::rope::{CoreStack, RopeError, RopeImage};
use crate::word::{Word, DATA_MASK};

pub const ERASABLE_BANKS: usize = 8;
pub const ERASABLE_BANK_WORDS: usize = 256;
pub const ERASABLE_WORDS: usize = ERASABLE_BANKS * ERASABLE_BANK_WORDS;
pub const FIXED_BANKS: usize = 36;
pub const FIXED_BANK_WORDS: usize = 1024;
pub const FIXED_WORDS: usize = FIXED_BANKS * FIXED_BANK_WORDS;

/// One past the highest 12-bit address.
pub const ADDRESS_LIMIT: u16 = 0o10000;
pub const SWITCHED_ERASABLE_BASE: u16 = 0o1400;
pub const FIXED_WINDOW_BASE: u16 = 0o2000;
pub const FIXED_WINDOW_END: u16 = 0o3777;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CentralRegister {
    A,
    L,
    Q,
    Eb,
    Fb,
    Z,
    Bb,
    Zero,
}

impl CentralRegister {
    pub const ALL: [CentralRegister; 8] = [
        CentralRegister::A,
        CentralRegister::L,
        CentralRegister::Q,
        CentralRegister::Eb,
        CentralRegister::Fb,
        CentralRegister::Z,
        CentralRegister::Bb,
        CentralRegister::Zero,
    ];

    pub fn from_addr(addr: u16) -> Option<CentralRegister> {
        Self::ALL.get(addr as usize).copied()
    }

    pub fn addr(self) -> u16 {
        self as u16
    }

    pub fn name(self) -> &'static str {
        match self {
            CentralRegister::A => "A",
            CentralRegister::L => "L",
            CentralRegister::Q => "Q",
            CentralRegister::Eb => "EB",
            CentralRegister::Fb => "FB",
            CentralRegister::Z => "Z",
            CentralRegister::Bb => "BB",
            CentralRegister::Zero => "ZERO",
        }
    }
}

impl fmt::Display for CentralRegister {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// EB, FB and the superbank flag. BB is a view of EB and FB together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BankRegisters {
    eb: u8,
    fb: u8,
    superbank: bool,
}

impl BankRegisters {
    pub fn new(eb: u8, fb: u8, superbank: bool) -> BankRegisters {
        BankRegisters {
            eb: eb & 0o7,
            fb: fb & 0o37,
            superbank,
        }
    }

    pub fn eb(self) -> u8 {
        self.eb
    }

    pub fn fb(self) -> u8 {
        self.fb
    }

    pub fn superbank(self) -> bool {
        self.superbank
    }

    pub fn set_eb(&mut self, eb: u8) {
        self.eb = eb & 0o7;
    }

    pub fn set_fb(&mut self, fb: u8) {
        self.fb = fb & 0o37;
    }

    pub fn set_superbank(&mut self, on: bool) {
        self.superbank = on;
    }

    /// EB as stored: bank number in bits 11-9.
    pub fn eb_word(self) -> u16 {
        u16::from(self.eb) << 8
    }

    /// FB as stored: bank number in bits 15-11.
    pub fn fb_word(self) -> u16 {
        u16::from(self.fb) << 10
    }

    /// BB: FB in bits 15-11, EB in bits 3-1.
    pub fn bb_word(self) -> u16 {
        self.fb_word() | u16::from(self.eb)
    }

    pub fn set_eb_word(&mut self, w: u16) {
        self.eb = (w >> 8 & 0o7) as u8;
    }

    pub fn set_fb_word(&mut self, w: u16) {
        self.fb = (w >> 10 & 0o37) as u8;
    }

    pub fn set_bb_word(&mut self, w: u16) {
        self.fb = (w >> 10 & 0o37) as u8;
        self.eb = (w & 0o7) as u8;
    }

    /// Physical fixed bank behind the window. With the superbank flag set, FB
    /// values 30-33 select banks 40-43 and 34-37 select nothing.
    pub fn fixed_bank(self) -> Option<u8> {
        match (self.superbank, self.fb) {
            (true, 0o30..=0o33) => Some(self.fb + 0o10),
            (true, 0o34..=0o37) => None,
            (_, fb) => Some(fb),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    CentralRegister(CentralRegister),
    UnswitchedErasable,
    SwitchedErasable,
    SwitchedFixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResolvedLocation {
    pub region: Region,
    pub bank: u8,
    pub offset: u16,
}

impl ResolvedLocation {
    pub fn is_fixed(&self) -> bool {
        self.region == Region::SwitchedFixed
    }
}

/// A physical storage location, for error reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Location {
    Erasable { bank: u8, offset: u16 },
    Fixed { bank: u8, offset: u16 },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Erasable { bank, offset } => write!(f, "E{bank:o},{offset:04o}"),
            Location::Fixed { bank, offset } => write!(f, "F{bank:02o},{offset:04o}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemoryError {
    #[error("address {addr:04o} is unmapped")]
    Unmapped { addr: u16 },
    #[error("corrupt word {raw:#08o} at {location}")]
    CorruptWord { location: Location, raw: u16 },
    #[error("write to fixed memory at {addr:04o}")]
    ReadOnlyViolation { addr: u16 },
    #[error("bad image: {0}")]
    BadImage(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Maps a 12-bit address through the bank registers.
pub fn resolve(addr: u16, regs: BankRegisters) -> Result<ResolvedLocation, MemoryError> {
    let loc = |region, bank, offset| {
        Ok(ResolvedLocation {
            region,
            bank,
            offset,
        })
    };
    match addr {
        0..=7 => loc(
            Region::CentralRegister(CentralRegister::from_addr(addr).expect("0-7")),
            0,
            addr,
        ),
        0o10..=0o1377 => loc(
            Region::UnswitchedErasable,
            (addr / ERASABLE_BANK_WORDS as u16) as u8,
            addr % ERASABLE_BANK_WORDS as u16,
        ),
        0o1400..=0o1777 => loc(
            Region::SwitchedErasable,
            regs.eb(),
            addr - SWITCHED_ERASABLE_BASE,
        ),
        0o2000..=0o3777 => match regs.fixed_bank() {
            Some(bank) => loc(Region::SwitchedFixed, bank, addr - FIXED_WINDOW_BASE),
            None => Err(MemoryError::Unmapped { addr }),
        },
        _ => Err(MemoryError::Unmapped { addr }),
    }
}

/// Which implementation stores erasable memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErasableBacking {
    #[default]
    Array,
    /// Sixteen 32x64 magnetic-core bit planes.
    CoreStack,
}

#[derive(Debug, Clone)]
enum ErasableStore {
    Array(Vec<Word>),
    Core(CoreStack),
}

impl ErasableStore {
    fn new(backing: ErasableBacking) -> ErasableStore {
        match backing {
            ErasableBacking::Array => ErasableStore::Array(vec![Word::ZERO; ERASABLE_WORDS]),
            ErasableBacking::CoreStack => {
                let mut stack = CoreStack::new(32, 64);
                for i in 0..ERASABLE_WORDS {
                    stack.write_word(i, Word::ZERO).expect("in range");
                }
                ErasableStore::Core(stack)
            }
        }
    }

    fn read(&mut self, index: usize) -> Word {
        match self {
            ErasableStore::Array(words) => words[index],
            ErasableStore::Core(stack) => stack.read_word(index).expect("in range"),
        }
    }

    fn peek(&self, index: usize) -> Word {
        match self {
            ErasableStore::Array(words) => words[index],
            ErasableStore::Core(stack) => stack.peek_word(index),
        }
    }

    fn write(&mut self, index: usize, w: Word) {
        match self {
            ErasableStore::Array(words) => words[index] = w,
            ErasableStore::Core(stack) => stack.write_word(index, w).expect("in range"),
        }
    }
}

/// All addressable storage: central registers, erasable and fixed banks, and
/// the channel bus.
#[derive(Debug)]
pub struct MemorySystem {
    /// A, L, Q and Z are stored here; EB, FB, BB and ZERO are synthesized.
    central: [Word; 8],
    banks: BankRegisters,
    erasable: ErasableStore,
    fixed: Vec<Option<Box<[Word]>>>,
    channels: ChannelBus,
    superbank_channel: u16,
    strict_parity: bool,
}

impl Default for MemorySystem {
    fn default() -> Self {
        MemorySystem::new(&Manifest::default(), ErasableBacking::Array)
    }
}

impl MemorySystem {
    pub fn new(manifest: &Manifest, backing: ErasableBacking) -> MemorySystem {
        MemorySystem {
            central: [Word::ZERO; 8],
            banks: BankRegisters::default(),
            erasable: ErasableStore::new(backing),
            fixed: vec![None; FIXED_BANKS],
            channels: ChannelBus::new(manifest),
            superbank_channel: manifest.superbank(),
            strict_parity: true,
        }
    }

    pub fn strict_parity(&self) -> bool {
        self.strict_parity
    }

    pub fn set_strict_parity(&mut self, on: bool) {
        self.strict_parity = on;
    }

    /// Bank registers including the superbank flag from its channel.
    pub fn bank_registers(&self) -> BankRegisters {
        let mut regs = self.banks;
        let superbank = self.channels.peek(self.superbank_channel).unwrap_or(0) & SUPERBANK_BIT;
        regs.set_superbank(superbank != 0);
        regs
    }

    pub fn set_bank_registers(&mut self, regs: BankRegisters) {
        self.banks = BankRegisters::new(regs.eb(), regs.fb(), false);
    }

    pub fn resolve(&self, addr: u16) -> Result<ResolvedLocation, MemoryError> {
        resolve(addr, self.bank_registers())
    }

    pub fn channels(&self) -> &ChannelBus {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut ChannelBus {
        &mut self.channels
    }

    pub fn read_channel(&mut self, ch: u16) -> Result<u16, MemoryError> {
        Ok(self.channels.read(ch)?)
    }

    pub fn write_channel(&mut self, ch: u16, value: u16) -> Result<(), MemoryError> {
        Ok(self.channels.write(ch, value)?)
    }

    fn checked(&self, w: Word, location: Location) -> Result<Word, MemoryError> {
        if self.strict_parity && !w.is_valid() {
            return Err(MemoryError::CorruptWord {
                location,
                raw: w.raw(),
            });
        }
        Ok(w)
    }

    fn central_word(&self, reg: CentralRegister) -> Word {
        match reg {
            CentralRegister::Eb => Word::new(self.banks.eb_word()),
            CentralRegister::Fb => Word::new(self.banks.fb_word()),
            CentralRegister::Bb => Word::new(self.banks.bb_word()),
            CentralRegister::Zero => Word::ZERO,
            _ => self.central[reg as usize],
        }
    }

    fn set_central(&mut self, reg: CentralRegister, w: Word) {
        match reg {
            CentralRegister::Eb => self.banks.set_eb_word(w.data()),
            CentralRegister::Fb => self.banks.set_fb_word(w.data()),
            CentralRegister::Bb => self.banks.set_bb_word(w.data()),
            CentralRegister::Zero => {}
            _ => self.central[reg as usize] = w,
        }
    }

    fn erasable_index(bank: u8, offset: u16) -> usize {
        bank as usize * ERASABLE_BANK_WORDS + offset as usize
    }

    /// Reads erasable `bank`/`offset` directly; bank 0 offsets 0-7 are the
    /// central registers.
    pub fn read_erasable(&mut self, bank: u8, offset: u16) -> Result<Word, MemoryError> {
        let location = Location::Erasable { bank, offset };
        let w = match (bank, CentralRegister::from_addr(offset)) {
            (0, Some(reg)) => self.central_word(reg),
            _ => self.erasable.read(Self::erasable_index(bank, offset)),
        };
        self.checked(w, location)
    }

    /// Stored erasable word without parity checking or core rewrite cycles.
    pub fn peek_erasable(&self, bank: u8, offset: u16) -> Word {
        match (bank, CentralRegister::from_addr(offset)) {
            (0, Some(reg)) => self.central_word(reg),
            _ => self.erasable.peek(Self::erasable_index(bank, offset)),
        }
    }

    /// Writes erasable `bank`/`offset`, recomputing parity.
    pub fn write_erasable(&mut self, bank: u8, offset: u16, w: Word) {
        let w = Word::new(w.data());
        match (bank, CentralRegister::from_addr(offset)) {
            (0, Some(reg)) => self.set_central(reg, w),
            _ => self.erasable.write(Self::erasable_index(bank, offset), w),
        }
    }

    /// Stores a raw erasable word as given, parity included (fault injection).
    pub fn poke_erasable_raw(&mut self, bank: u8, offset: u16, raw: u16) {
        let w = Word::from_raw(raw);
        match (bank, CentralRegister::from_addr(offset)) {
            (0, Some(reg)) => match reg {
                CentralRegister::A
                | CentralRegister::L
                | CentralRegister::Q
                | CentralRegister::Z => self.central[reg as usize] = w,
                other => self.set_central(other, w),
            },
            _ => self.erasable.write(Self::erasable_index(bank, offset), w),
        }
    }

    pub fn fixed_word(&self, bank: u8, offset: u16) -> Option<Word> {
        self.fixed
            .get(bank as usize)?
            .as_ref()
            .map(|b| b[offset as usize])
    }

    pub fn fixed_bank(&self, bank: u8) -> Option<&[Word]> {
        self.fixed.get(bank as usize)?.as_deref()
    }

    pub fn read(&mut self, addr: u16) -> Result<Word, MemoryError> {
        let loc = self.resolve(addr)?;
        match loc.region {
            Region::CentralRegister(reg) => self.checked(
                self.central_word(reg),
                Location::Erasable {
                    bank: 0,
                    offset: addr,
                },
            ),
            Region::UnswitchedErasable | Region::SwitchedErasable => {
                self.read_erasable(loc.bank, loc.offset)
            }
            Region::SwitchedFixed => {
                let w = self
                    .fixed_word(loc.bank, loc.offset)
                    .ok_or(MemoryError::Unmapped { addr })?;
                self.checked(
                    w,
                    Location::Fixed {
                        bank: loc.bank,
                        offset: loc.offset,
                    },
                )
            }
        }
    }

    pub fn write(&mut self, addr: u16, w: Word) -> Result<(), MemoryError> {
        let loc = self.resolve(addr)?;
        match loc.region {
            Region::CentralRegister(reg) => self.set_central(reg, Word::new(w.data())),
            Region::UnswitchedErasable | Region::SwitchedErasable => {
                self.write_erasable(loc.bank, loc.offset, w)
            }
            Region::SwitchedFixed => return Err(MemoryError::ReadOnlyViolation { addr }),
        }
        Ok(())
    }

    /// Reads a register or erasable address as a 15-bit pattern.
    pub fn read_data(&mut self, addr: u16) -> Result<u16, MemoryError> {
        self.read(addr).map(Word::data)
    }

    pub fn write_data(&mut self, addr: u16, data: u16) -> Result<(), MemoryError> {
        self.write(addr, Word::new(data & DATA_MASK))
    }

    pub fn register(&self, reg: CentralRegister) -> u16 {
        self.central_word(reg).data()
    }

    pub fn set_register(&mut self, reg: CentralRegister, data: u16) {
        self.set_central(reg, Word::new(data));
    }

    /// Inverts one stored bit at `addr` (bit 0 is parity). Fixed memory is
    /// reachable here, and only here, for fault injection.
    pub fn inject_bit_flip(&mut self, addr: u16, bit: u32) -> Result<(), MemoryError> {
        let loc = self.resolve(addr)?;
        match loc.region {
            Region::SwitchedFixed => {
                let bank = self.fixed[loc.bank as usize]
                    .as_mut()
                    .ok_or(MemoryError::Unmapped { addr })?;
                let w = &mut bank[loc.offset as usize];
                *w = w.with_flipped_bit(bit);
            }
            Region::CentralRegister(reg) => {
                let raw = self.central_word(reg).with_flipped_bit(bit).raw();
                self.poke_erasable_raw(0, reg.addr(), raw);
            }
            _ => {
                let raw = self
                    .peek_erasable(loc.bank, loc.offset)
                    .with_flipped_bit(bit)
                    .raw();
                self.poke_erasable_raw(loc.bank, loc.offset, raw);
            }
        }
        Ok(())
    }

    /// Replaces fixed memory with the image. Banks absent from the image read
    /// as unmapped.
    pub fn load_rope(&mut self, image: &RopeImage) -> Result<(), MemoryError> {
        image.validate().map_err(|e| match e {
            RopeError::CorruptWord { bank, offset, raw } => MemoryError::CorruptWord {
                location: Location::Fixed { bank, offset },
                raw,
            },
            other => MemoryError::BadImage(other.to_string()),
        })?;
        self.fixed = vec![None; FIXED_BANKS];
        for (bank, words) in image.banks() {
            self.fixed[bank as usize] = Some(words.into());
        }
        Ok(())
    }

    /// Rewrite cycles counted by each core bit plane, if core-backed.
    pub fn core_rewrite_cycles(&self) -> Option<Vec<u64>> {
        match &self.erasable {
            ErasableStore::Core(stack) => {
                Some(stack.planes().iter().map(|p| p.rewrite_cycles()).collect())
            }
            ErasableStore::Array(_) => None,
        }
    }

    /// All 2048 erasable words in bank order, without parity checks.
    pub fn erasable_snapshot(&self) -> Vec<Word> {
        (0..ERASABLE_BANKS as u8)
            .flat_map(|bank| (0..ERASABLE_BANK_WORDS as u16).map(move |off| (bank, off)))
            .map(|(bank, off)| self.peek_erasable(bank, off))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image_with(bank: u8, offset: u16, data: u16) -> RopeImage {
        let mut image = RopeImage::new();
        image.bank_mut(bank).unwrap()[offset as usize] = Word::new(data);
        image
    }

    #[test]
    fn resolve_examples() {
        let regs = BankRegisters::new(3, 17, false);
        assert_eq!(
            resolve(0o0005, regs).unwrap().region,
            Region::CentralRegister(CentralRegister::Z)
        );
        let loc = resolve(0o1400, regs).unwrap();
        assert_eq!(
            (loc.region, loc.bank, loc.offset),
            (Region::SwitchedErasable, 3, 0)
        );
        let loc = resolve(0o2000, regs).unwrap();
        assert_eq!(
            (loc.region, loc.bank, loc.offset),
            (Region::SwitchedFixed, 17, 0)
        );
        let loc = resolve(0o1000, regs).unwrap();
        assert_eq!(
            (loc.region, loc.bank, loc.offset),
            (Region::UnswitchedErasable, 2, 0)
        );
        assert_eq!(
            resolve(0o4000, regs),
            Err(MemoryError::Unmapped { addr: 0o4000 })
        );
    }

    #[test]
    fn superbank_mapping() {
        let regs = BankRegisters::new(0, 0o31, true);
        assert_eq!(resolve(0o2000, regs).unwrap().bank, 0o41);
        let regs = BankRegisters::new(0, 0o35, true);
        assert!(resolve(0o2000, regs).is_err());
        let regs = BankRegisters::new(0, 0o27, true);
        assert_eq!(resolve(0o2000, regs).unwrap().bank, 0o27);
    }

    #[test]
    fn bb_is_consistent_with_eb_and_fb() {
        let mut regs = BankRegisters::default();
        regs.set_eb_word(0o2400);
        regs.set_fb_word(0o34000);
        assert_eq!(regs.bb_word(), 0o34005);
        regs.set_bb_word(0o12003);
        assert_eq!((regs.eb(), regs.fb()), (3, 5));
        assert_eq!(regs.eb_word(), 0o1400);
        assert_eq!(regs.fb_word(), 0o12000);
    }

    #[test]
    fn zero_register_reads_zero() {
        let mut mem = MemorySystem::default();
        mem.write(0o7, Word::new(0o1234)).unwrap();
        assert_eq!(mem.read(0o7).unwrap(), Word::ZERO);
    }

    #[test]
    fn erasable_round_trip() {
        let mut mem = MemorySystem::default();
        mem.write(0o30, Word::new(0o4567)).unwrap();
        assert_eq!(mem.read(0o30).unwrap().data(), 0o4567);
    }

    #[test]
    fn fixed_is_read_only() {
        let mut mem = MemorySystem::default();
        mem.load_rope(&image_with(0, 0, 0o1234)).unwrap();
        assert_eq!(
            mem.write(0o2000, Word::new(1)),
            Err(MemoryError::ReadOnlyViolation { addr: 0o2000 })
        );
        assert_eq!(mem.read(0o2000).unwrap().data(), 0o1234);
    }

    #[test]
    fn window_at_eb_zero_matches_bank_zero() {
        let mut mem = MemorySystem::default();
        mem.write_erasable(0, 0o20, Word::new(0o777));
        mem.set_register(CentralRegister::A, 0o4321);
        assert_eq!(
            mem.read(0o1420).unwrap(),
            mem.read_erasable(0, 0o20).unwrap()
        );
        assert_eq!(mem.read(0o1400).unwrap(), mem.read_erasable(0, 0).unwrap());
        assert_eq!(mem.read(0o1400).unwrap().data(), 0o4321);
    }

    #[test]
    fn bank_register_writes_switch_windows() {
        let mut mem = MemorySystem::default();
        mem.write_erasable(5, 0o10, Word::new(0o55));
        mem.write(CentralRegister::Eb.addr(), Word::new(0o2400))
            .unwrap();
        assert_eq!(mem.read(0o1410).unwrap().data(), 0o55);
        mem.write(CentralRegister::Bb.addr(), Word::new(0o06003))
            .unwrap();
        assert_eq!(mem.register(CentralRegister::Eb), 0o1400);
        assert_eq!(mem.register(CentralRegister::Fb), 0o06000);
    }

    #[test]
    fn superbank_follows_channel() {
        let mut mem = MemorySystem::default();
        let mut image = image_with(0o40, 5, 0o111);
        image.bank_mut(0o30).unwrap()[5] = Word::new(0o222);
        mem.load_rope(&image).unwrap();
        mem.set_register(CentralRegister::Fb, 0o30 << 10);
        assert_eq!(mem.read(0o2005).unwrap().data(), 0o222);
        mem.write_channel(0o7, SUPERBANK_BIT).unwrap();
        assert_eq!(mem.read(0o2005).unwrap().data(), 0o111);
    }

    #[test]
    fn strict_parity_toggle() {
        let mut mem = MemorySystem::default();
        mem.write(0o100, Word::new(0o17)).unwrap();
        mem.inject_bit_flip(0o100, 3).unwrap();
        assert!(matches!(
            mem.read(0o100),
            Err(MemoryError::CorruptWord {
                location: Location::Erasable {
                    bank: 0,
                    offset: 0o100
                },
                ..
            })
        ));
        mem.set_strict_parity(false);
        assert!(mem.read(0o100).is_ok());
    }

    #[test]
    fn corrupt_image_names_location() {
        let mut image = image_with(4, 0o77, 0o5);
        let bank = image.bank_mut(4).unwrap();
        bank[0o77] = bank[0o77].with_flipped_bit(0);
        let mut mem = MemorySystem::default();
        assert_eq!(
            mem.load_rope(&image),
            Err(MemoryError::CorruptWord {
                location: Location::Fixed {
                    bank: 4,
                    offset: 0o77
                },
                raw: Word::new(0o5).with_flipped_bit(0).raw(),
            })
        );
    }

    #[test]
    fn empty_image_leaves_fixed_unmapped() {
        let mut mem = MemorySystem::default();
        mem.load_rope(&RopeImage::new()).unwrap();
        assert_eq!(
            mem.read(0o2000),
            Err(MemoryError::Unmapped { addr: 0o2000 })
        );
    }

    #[test]
    fn core_stack_backing_counts_reads() {
        let mut mem = MemorySystem::new(&Manifest::default(), ErasableBacking::CoreStack);
        mem.write(0o200, Word::new(0o31)).unwrap();
        assert_eq!(mem.read(0o200).unwrap().data(), 0o31);
        assert_eq!(mem.read(0o200).unwrap().data(), 0o31);
        assert_eq!(mem.core_rewrite_cycles().unwrap(), vec![2; 16]);
        assert!(MemorySystem::default().core_rewrite_cycles().is_none());
    }
}
