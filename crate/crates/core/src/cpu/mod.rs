//! Fetch, decode and execute.
//!
//! A, L, Q and Z live in the memory system's central registers, so an
//! instruction addressing 0-7 sees exactly what the CPU sees. Z holds the
//! address of the next instruction; it is advanced before the instruction
//! executes, which makes "the address after this one" available to TC.

pub mod isa;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use isa::{
    decode, encode, Instruction, Mnemonic, OperandKind, OperandRange, UnimplementedInstruction,
};

use crate::memory::{BankRegisters, CentralRegister, MemoryError, MemorySystem};
use crate::word::{
    is_negative, is_zero, oc_add, oc_complement, oc_double_add, Overflow, DATA_MASK,
    MAGNITUDE_MASK, POS_ZERO,
};

/// Where execution starts after a reset: fixed bank 0, first word.
pub const BOOT_ENTRY: u16 = 0o2000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CpuError {
    #[error("at {addr:04o}: {source}")]
    Memory {
        addr: u16,
        #[source]
        source: MemoryError,
    },
    #[error("at {addr:04o}: {source}")]
    Unimplemented {
        addr: u16,
        #[source]
        source: UnimplementedInstruction,
    },
    #[error("machine is halted")]
    Halted,
}

impl CpuError {
    /// Short class name for logs and machine-readable error lines.
    pub fn class(&self) -> &'static str {
        match self {
            CpuError::Memory { source, .. } => match source {
                MemoryError::Unmapped { .. } => "Unmapped",
                MemoryError::CorruptWord { .. } => "CorruptWord",
                MemoryError::ReadOnlyViolation { .. } => "ReadOnlyViolation",
                MemoryError::BadImage(_) => "BadImage",
                MemoryError::Channel(_) => "BadChannel",
            },
            CpuError::Unimplemented { .. } => "UnimplementedInstruction",
            CpuError::Halted => "Halted",
        }
    }
}

/// CPU flags and counters that do not live in addressable registers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    pub extend_pending: bool,
    /// Added to the next fetched word; +0 when no INDEX is pending.
    pub index_pending: u16,
    pub interrupts_enabled: bool,
    pub cycles: u64,
    pub halted: bool,
    pub alarm: Option<CpuError>,
}

impl Default for MachineState {
    fn default() -> Self {
        MachineState {
            extend_pending: false,
            index_pending: POS_ZERO,
            interrupts_enabled: true,
            cycles: 0,
            halted: false,
            alarm: None,
        }
    }
}

/// Register values at a point in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Registers {
    pub a: u16,
    pub l: u16,
    pub q: u16,
    pub z: u16,
    pub eb: u8,
    pub fb: u8,
}

impl fmt::Display for Registers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "A={:05o} L={:05o} Q={:05o} Z={:04o} EB={:o} FB={:02o}",
            self.a, self.l, self.q, self.z, self.eb, self.fb
        )
    }
}

/// One state change made by an instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    Memory { addr: u16, value: u16 },
    Channel { channel: u16, value: u16 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepReport {
    /// Cycle count before the instruction ran.
    pub cycle: u64,
    pub address: u16,
    pub instruction: Instruction,
    pub effects: Vec<Effect>,
    pub overflow: Overflow,
    /// Registers after the instruction.
    pub registers: Registers,
}

impl StepReport {
    /// One fixed-format trace line.
    pub fn trace_line(&self) -> String {
        let operand = match self.instruction.mnemonic().operand_kind() {
            OperandKind::None => "----".to_string(),
            _ => format!("{:04o}", self.instruction.operand()),
        };
        format!(
            "{:06} {:04o} {:<6} {} A={:05o} L={:05o} Q={:05o}",
            self.cycle,
            self.address,
            self.instruction.mnemonic().name(),
            operand,
            self.registers.a,
            self.registers.l,
            self.registers.q
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Halted,
    Alarm,
    Breakpoint,
    Limit,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Halted => "halted",
            StopReason::Alarm => "alarm",
            StopReason::Breakpoint => "breakpoint",
            StopReason::Limit => "limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub reason: StopReason,
    /// Cycles executed during this run.
    pub cycles: u64,
    pub registers: Registers,
    pub alarm: Option<CpuError>,
}

#[derive(Debug)]
pub struct Cpu {
    pub state: MachineState,
    pub mem: MemorySystem,
}

impl Default for Cpu {
    fn default() -> Self {
        Cpu::new(MemorySystem::default())
    }
}

/// Sign class used by CCS: 0 for +, 1 for +0, 2 for -, 3 for -0.
fn ccs_class(v: u16) -> u16 {
    match (is_negative(v), is_zero(v)) {
        (false, false) => 0,
        (false, true) => 1,
        (true, false) => 2,
        (true, true) => 3,
    }
}

/// |v| - 1, never below +0.
fn diminished_abs(v: u16) -> u16 {
    let magnitude = if is_negative(v) { oc_complement(v) } else { v } & MAGNITUDE_MASK;
    magnitude.saturating_sub(1)
}

fn next_addr(k: u16) -> u16 {
    (k + 1) & 0o7777
}

impl Cpu {
    /// A CPU over `mem`, reset to the boot entry.
    pub fn new(mem: MemorySystem) -> Cpu {
        let mut cpu = Cpu {
            state: MachineState::default(),
            mem,
        };
        cpu.reset();
        cpu
    }

    /// Clears A, L, Q, flags and alarm, selects bank 0 and points Z at the
    /// boot entry. The cycle counter keeps running.
    pub fn reset(&mut self) {
        let cycles = self.state.cycles;
        self.state = MachineState {
            cycles,
            ..MachineState::default()
        };
        for reg in [CentralRegister::A, CentralRegister::L, CentralRegister::Q] {
            self.mem.set_register(reg, POS_ZERO);
        }
        self.mem.set_bank_registers(BankRegisters::new(0, 0, false));
        self.mem.set_register(CentralRegister::Z, BOOT_ENTRY);
    }

    pub fn registers(&self) -> Registers {
        let banks = self.mem.bank_registers();
        Registers {
            a: self.mem.register(CentralRegister::A),
            l: self.mem.register(CentralRegister::L),
            q: self.mem.register(CentralRegister::Q),
            z: self.z(),
            eb: banks.eb(),
            fb: banks.fb(),
        }
    }

    pub fn z(&self) -> u16 {
        self.mem.register(CentralRegister::Z) & 0o7777
    }

    pub fn set_z(&mut self, z: u16) {
        self.mem.set_register(CentralRegister::Z, z & 0o7777);
    }

    /// Executes one instruction. Errors put the machine in the alarm state
    /// with Z left on the faulting instruction.
    pub fn step(&mut self) -> Result<StepReport, CpuError> {
        if self.state.halted || self.state.alarm.is_some() {
            return Err(CpuError::Halted);
        }
        let address = self.z();
        let saved_extend = self.state.extend_pending;
        let saved_index = self.state.index_pending;
        match self.execute(address) {
            Ok(report) => Ok(report),
            Err(err) => {
                self.state.extend_pending = saved_extend;
                self.state.index_pending = saved_index;
                self.set_z(address);
                self.state.alarm = Some(err.clone());
                Err(err)
            }
        }
    }

    fn execute(&mut self, address: u16) -> Result<StepReport, CpuError> {
        let mem_err = |source| CpuError::Memory {
            addr: address,
            source,
        };
        let fetched = self.mem.read_data(address).map_err(mem_err)?;
        let word = oc_add(fetched, self.state.index_pending).0;
        let extended = self.state.extend_pending;
        let instruction = decode(word, extended).map_err(|source| CpuError::Unimplemented {
            addr: address,
            source,
        })?;
        self.state.index_pending = POS_ZERO;
        self.state.extend_pending = false;

        let next = next_addr(address);
        self.set_z(next);
        let cycle = self.state.cycles;
        let mut exec = Exec {
            mem: &mut self.mem,
            effects: Vec::new(),
            overflow: Overflow::None,
        };
        let k = instruction.operand();
        let a = CentralRegister::A.addr();
        let l = CentralRegister::L.addr();
        let q = CentralRegister::Q.addr();
        let z = CentralRegister::Z.addr();

        let result: Result<(), MemoryError> = (|| {
            match instruction.mnemonic() {
                Mnemonic::Tc => {
                    exec.write(q, next)?;
                    exec.write(z, k)?;
                }
                Mnemonic::Return => {
                    let target = exec.read(q)?;
                    exec.write(z, target & 0o7777)?;
                }
                Mnemonic::Tcf => {
                    exec.write(z, k)?;
                    if k == address {
                        self.state.halted = true;
                    }
                }
                Mnemonic::Ccs => {
                    let v = exec.read(k)?;
                    exec.write(a, diminished_abs(v))?;
                    exec.write(z, (next + ccs_class(v)) & 0o7777)?;
                }
                Mnemonic::Ca => {
                    let v = exec.read(k)?;
                    exec.write(a, v)?;
                }
                Mnemonic::Cs => {
                    let v = exec.read(k)?;
                    exec.write(a, oc_complement(v))?;
                }
                Mnemonic::Ts => {
                    let v = exec.read(a)?;
                    exec.write(k, v)?;
                }
                Mnemonic::Xch => {
                    let (va, vk) = (exec.read(a)?, exec.read(k)?);
                    exec.write(k, va)?;
                    exec.write(a, vk)?;
                }
                Mnemonic::Ad => {
                    let (va, vk) = (exec.read(a)?, exec.read(k)?);
                    let (sum, ov) = oc_add(va, vk);
                    exec.overflow = ov;
                    exec.write(a, sum)?;
                }
                Mnemonic::Ads => {
                    let (va, vk) = (exec.read(a)?, exec.read(k)?);
                    let (sum, ov) = oc_add(va, vk);
                    exec.overflow = ov;
                    exec.write(k, sum)?;
                    exec.write(a, sum)?;
                }
                Mnemonic::Mask => {
                    let (va, vk) = (exec.read(a)?, exec.read(k)?);
                    exec.write(a, va & vk)?;
                }
                Mnemonic::Index => {
                    self.state.index_pending = exec.read(k)?;
                }
                Mnemonic::Noop => {}
                Mnemonic::Extend => self.state.extend_pending = true,
                Mnemonic::Dca => {
                    let lo = exec.read(next_addr(k))?;
                    exec.write(l, lo)?;
                    let hi = exec.read(k)?;
                    exec.write(a, hi)?;
                }
                Mnemonic::Dxch => {
                    let (hi, lo) = (exec.read(k)?, exec.read(next_addr(k))?);
                    let (va, vl) = (exec.read(a)?, exec.read(l)?);
                    exec.write(k, va)?;
                    exec.write(next_addr(k), vl)?;
                    exec.write(a, hi)?;
                    exec.write(l, lo)?;
                }
                Mnemonic::Das => {
                    let (hi, lo) = (exec.read(k)?, exec.read(next_addr(k))?);
                    let (va, vl) = (exec.read(a)?, exec.read(l)?);
                    let (sum_hi, sum_lo, ov) = oc_double_add(hi, lo, va, vl);
                    exec.overflow = ov;
                    exec.write(k, sum_hi)?;
                    exec.write(next_addr(k), sum_lo)?;
                }
                Mnemonic::Read => {
                    let v = exec.mem.read_channel(k)?;
                    exec.write(a, v)?;
                }
                Mnemonic::Write => {
                    let v = exec.read(a)?;
                    exec.mem.write_channel(k, v)?;
                    exec.effects.push(Effect::Channel {
                        channel: k,
                        value: v,
                    });
                }
                Mnemonic::Rand => {
                    let v = exec.mem.read_channel(k)?;
                    let va = exec.read(a)?;
                    exec.write(a, va & v)?;
                }
            }
            Ok(())
        })();
        result.map_err(mem_err)?;

        let Exec {
            effects, overflow, ..
        } = exec;
        self.state.cycles += instruction.mnemonic().cycles();
        Ok(StepReport {
            cycle,
            address,
            instruction,
            effects,
            overflow,
            registers: self.registers(),
        })
    }

    /// Steps until halt, alarm, a breakpoint address or `limit` cycles.
    /// Breakpoints are checked before every instruction, the first included.
    pub fn run(&mut self, limit: u64, breakpoints: &BTreeSet<u16>) -> RunOutcome {
        self.run_with(limit, breakpoints, |_| {})
    }

    /// Like [`Cpu::run`], handing every step report to `on_step`.
    pub fn run_with(
        &mut self,
        limit: u64,
        breakpoints: &BTreeSet<u16>,
        mut on_step: impl FnMut(&StepReport),
    ) -> RunOutcome {
        let start = self.state.cycles;
        let reason = loop {
            if self.state.alarm.is_some() {
                break StopReason::Alarm;
            }
            if self.state.halted {
                break StopReason::Halted;
            }
            if breakpoints.contains(&self.z()) {
                break StopReason::Breakpoint;
            }
            if self.state.cycles - start >= limit {
                break StopReason::Limit;
            }
            match self.step() {
                Ok(report) => on_step(&report),
                Err(_) => break StopReason::Alarm,
            }
        };
        RunOutcome {
            reason,
            cycles: self.state.cycles - start,
            registers: self.registers(),
            alarm: self.state.alarm.clone(),
        }
    }
}

/// Memory access that records writes as effects.
struct Exec<'a> {
    mem: &'a mut MemorySystem,
    effects: Vec<Effect>,
    overflow: Overflow,
}

impl Exec<'_> {
    fn read(&mut self, addr: u16) -> Result<u16, MemoryError> {
        self.mem.read_data(addr)
    }

    fn write(&mut self, addr: u16, value: u16) -> Result<(), MemoryError> {
        let value = value & DATA_MASK;
        self.mem.write_data(addr, value)?;
        self.effects.push(Effect::Memory { addr, value });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rope::RopeImage;
    use crate::word::Word;

    fn cpu_with(program: &[(Mnemonic, u16)]) -> Cpu {
        let mut image = RopeImage::new();
        let bank = image.bank_mut(0).unwrap();
        for (i, &(m, k)) in program.iter().enumerate() {
            bank[i] = Word::new(encode(m, k).unwrap());
        }
        let mut mem = MemorySystem::default();
        mem.load_rope(&image).unwrap();
        Cpu::new(mem)
    }

    #[test]
    fn tc_sets_q_to_following_address() {
        let mut cpu = cpu_with(&[(Mnemonic::Noop, 0); 6]);
        cpu.set_z(0o2005);
        let bank = {
            let mut image = RopeImage::new();
            let b = image.bank_mut(0).unwrap();
            b[5] = Word::new(encode(Mnemonic::Tc, 0o2000).unwrap());
            image
        };
        cpu.mem.load_rope(&bank).unwrap();
        cpu.step().unwrap();
        assert_eq!(cpu.registers().q, 0o2006);
        assert_eq!(cpu.z(), 0o2000);
    }

    #[test]
    fn return_resumes_after_call() {
        let mut cpu = cpu_with(&[
            (Mnemonic::Tc, 0o2003),
            (Mnemonic::Ca, 0o2005),
            (Mnemonic::Tcf, 0o2002),
            (Mnemonic::Return, 0),
            (Mnemonic::Noop, 0),
            (Mnemonic::Noop, 0),
        ]);
        cpu.step().unwrap();
        assert_eq!(cpu.z(), 0o2003);
        cpu.step().unwrap();
        assert_eq!(cpu.z(), 0o2001);
    }

    #[test]
    fn ccs_successors_and_diminish() {
        for (value, skip, a) in [
            (5u16, 0u16, 4u16),
            (0, 1, 0),
            (0o77772, 2, 4),
            (0o77777, 3, 0),
        ] {
            let mut cpu = cpu_with(&[(Mnemonic::Ccs, 0o100)]);
            cpu.mem.write_data(0o100, value).unwrap();
            cpu.step().unwrap();
            assert_eq!(cpu.z(), 0o2001 + skip, "value {value:o}");
            assert_eq!(cpu.registers().a, a);
        }
    }

    #[test]
    fn flagword_sequence_sets_engine_bit() {
        let mut cpu = cpu_with(&[
            (Mnemonic::Cs, 0o100),
            (Mnemonic::Mask, 0o2004),
            (Mnemonic::Ads, 0o100),
            (Mnemonic::Tcf, 0o2003),
            (Mnemonic::Noop, 0),
        ]);
        let mut image = RopeImage::new();
        let bank = image.bank_mut(0).unwrap();
        for i in 0..4 {
            bank[i] = cpu.mem.fixed_word(0, i as u16).unwrap();
        }
        bank[4] = Word::new(0o20000);
        cpu.mem.load_rope(&image).unwrap();
        let outcome = cpu.run(100, &BTreeSet::new());
        assert_eq!(outcome.reason, StopReason::Halted);
        assert_eq!(cpu.mem.read_data(0o100).unwrap(), 0o20000);
    }

    #[test]
    fn double_load_then_exchange() {
        let mut cpu = cpu_with(&[
            (Mnemonic::Extend, 0),
            (Mnemonic::Dca, 0o200),
            (Mnemonic::Dxch, 0o300),
        ]);
        cpu.mem.write_data(0o200, 0o123).unwrap();
        cpu.mem.write_data(0o201, 0o456).unwrap();
        for _ in 0..3 {
            cpu.step().unwrap();
        }
        assert_eq!(cpu.mem.read_data(0o300).unwrap(), 0o123);
        assert_eq!(cpu.mem.read_data(0o301).unwrap(), 0o456);
        assert_eq!(cpu.state.cycles, 7);
    }

    #[test]
    fn channel_instructions() {
        let mut cpu = cpu_with(&[
            (Mnemonic::Ca, 0o2004),
            (Mnemonic::Extend, 0),
            (Mnemonic::Write, 0o11),
            (Mnemonic::Tcf, 0o2003),
            (Mnemonic::Noop, 0),
        ]);
        let mut image = RopeImage::new();
        let bank = image.bank_mut(0).unwrap();
        for i in 0..4 {
            bank[i] = cpu.mem.fixed_word(0, i as u16).unwrap();
        }
        bank[4] = Word::new(0o20000);
        cpu.mem.load_rope(&image).unwrap();
        cpu.run(100, &BTreeSet::new());
        assert!(cpu.mem.channels().engine_on());
    }

    #[test]
    fn unimplemented_alarms_without_advancing() {
        let mut image = RopeImage::new();
        image.bank_mut(0).unwrap()[0] = Word::new(0o24000);
        let mut mem = MemorySystem::default();
        mem.load_rope(&image).unwrap();
        let mut cpu = Cpu::new(mem);
        let err = cpu.step().unwrap_err();
        assert_eq!(err.class(), "UnimplementedInstruction");
        assert_eq!(cpu.z(), 0o2000);
        assert_eq!(cpu.step().unwrap_err(), CpuError::Halted);
    }

    #[test]
    fn double_store_into_fixed_is_an_alarm() {
        let mut cpu = cpu_with(&[(Mnemonic::Dxch, 0o1777)]);
        let err = cpu.step().unwrap_err();
        assert_eq!(err.class(), "ReadOnlyViolation");
        assert!(cpu.state.alarm.is_some());
    }

    #[test]
    fn zero_register_reads_plus_zero() {
        let mut cpu = cpu_with(&[(Mnemonic::Ca, 0o7)]);
        cpu.mem.set_register(CentralRegister::A, 0o12345);
        cpu.step().unwrap();
        assert_eq!(cpu.registers().a, POS_ZERO);
    }

    #[test]
    fn run_limits_and_breakpoints() {
        let mut cpu = cpu_with(&[(Mnemonic::Noop, 0); 8]);
        let none = BTreeSet::new();
        let out = cpu.run(0, &none);
        assert_eq!((out.reason, out.cycles), (StopReason::Limit, 0));
        let out = cpu.run(100, &BTreeSet::from([0o2000]));
        assert_eq!(out.reason, StopReason::Breakpoint);
        let out = cpu.run(100, &BTreeSet::from([0o2003]));
        assert_eq!((out.reason, out.cycles), (StopReason::Breakpoint, 3));
    }

    #[test]
    fn trace_line_format() {
        let mut cpu = cpu_with(&[(Mnemonic::Ca, 0o7), (Mnemonic::Noop, 0)]);
        let line = cpu.step().unwrap().trace_line();
        assert_eq!(line, "000000 2000 CA     0007 A=00000 L=00000 Q=00000");
        let line = cpu.step().unwrap().trace_line();
        assert_eq!(line, "000002 2001 NOOP   ---- A=00000 L=00000 Q=00000");
    }
}
