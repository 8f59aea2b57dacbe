//! A small executive: verb/noun dispatch from the DSKY, a priority job list,
//! alarm handling and restart with resume from a phase table.
//!
//! Programs protect themselves against restarts by committing phases. Each
//! restart group owns two words of the phase table: a phase id and the
//! FCADR (`bank << 10 | offset`) to resume at. Writing both with one DXCH
//! commits the phase in a single instruction. On restart the executive
//! clears unprotected erasable, resets the CPU and resumes at the entry of
//! the lowest group holding a non-zero phase.

pub mod dsky;
pub mod protocol;
pub mod server;

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

pub use dsky::{Command, DataTarget, DskyState, EntryState, Format, Key, Lamp};
pub use protocol::{parse_inbound, ControlAction, DskySnapshot, Inbound, Outbound};
pub use server::{serve, ServeConfig, ServerHandle};

use crate::cpu::{Cpu, CpuError, StepReport};
use crate::manifest::Manifest;
use crate::memory::{
    BankRegisters, MemoryError, MemorySystem, Region, ERASABLE_BANKS, ERASABLE_BANK_WORDS,
    ERASABLE_WORDS, FIXED_WINDOW_BASE,
};
use crate::word::{Word, NEG_ZERO, POS_ZERO};

/// The verb, noun and program table shipped with the emulator.
pub const DEFAULT_VERBS: &str = include_str!("../../data/default.verbs");

/// Nominal memory cycles per second (11.7 microsecond cycle).
pub const CYCLES_PER_SECOND: u64 = 85_333;

pub mod alarm {
    pub const CORRUPT_WORD: u16 = 0o101;
    pub const UNMAPPED: u16 = 0o102;
    pub const UNIMPLEMENTED: u16 = 0o103;
    pub const READ_ONLY: u16 = 0o104;
    pub const BAD_CHANNEL: u16 = 0o105;
}

/// Alarm code stored for a CPU error.
pub fn alarm_code(err: &CpuError) -> u16 {
    match err {
        CpuError::Memory { source, .. } => match source {
            MemoryError::CorruptWord { .. } => alarm::CORRUPT_WORD,
            MemoryError::ReadOnlyViolation { .. } => alarm::READ_ONLY,
            MemoryError::Channel(_) => alarm::BAD_CHANNEL,
            MemoryError::Unmapped { .. } | MemoryError::BadImage(_) => alarm::UNMAPPED,
        },
        CpuError::Unimplemented { .. } => alarm::UNIMPLEMENTED,
        CpuError::Halted => alarm::UNMAPPED,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("unknown verb {0:02}")]
    UnknownVerb(u8),
    #[error("unknown noun {0:02}")]
    UnknownNoun(u8),
    #[error("unknown program {0:02}")]
    UnknownProgram(u8),
    #[error("verb {0:02} needs a noun")]
    MissingNoun(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("verb table line {line}: {message}")]
pub struct TableError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerbKind {
    Monitor,
    Load,
    LampTest,
    ChangeProgram,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NounSpec {
    pub format: Format,
    /// One erasable address per display register.
    pub addresses: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbNounTable {
    pub verbs: BTreeMap<u8, VerbKind>,
    pub nouns: BTreeMap<u8, NounSpec>,
    /// Program id to (fixed bank, window address).
    pub programs: BTreeMap<u8, (u8, u16)>,
}

impl Default for VerbNounTable {
    fn default() -> Self {
        VerbNounTable::parse(DEFAULT_VERBS).expect("shipped verb table is valid")
    }
}

impl VerbNounTable {
    pub fn parse(text: &str) -> Result<VerbNounTable, TableError> {
        let mut table = VerbNounTable {
            verbs: BTreeMap::new(),
            nouns: BTreeMap::new(),
            programs: BTreeMap::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let fail = |message: String| TableError { line, message };
            let fields: Vec<&str> = raw
                .split(';')
                .next()
                .unwrap_or("")
                .split_whitespace()
                .collect();
            let id = |s: &str| -> Result<u8, TableError> {
                s.parse::<u8>()
                    .ok()
                    .filter(|&v| v < 100 && s.len() == 2)
                    .ok_or_else(|| fail(format!("bad two-digit id {s:?}")))
            };
            let octal =
                |s: &str| u16::from_str_radix(s, 8).map_err(|_| fail(format!("bad octal {s:?}")));
            match fields.as_slice() {
                [] => continue,
                ["VERB", v, kind] => {
                    let kind = match *kind {
                        "MONITOR" => VerbKind::Monitor,
                        "LOAD" => VerbKind::Load,
                        "LAMPTEST" => VerbKind::LampTest,
                        "CHANGEPROG" => VerbKind::ChangeProgram,
                        other => return Err(fail(format!("unknown verb kind {other}"))),
                    };
                    if table.verbs.insert(id(v)?, kind).is_some() {
                        return Err(fail(format!("verb {v} defined twice")));
                    }
                }
                ["NOUN", n, format, addrs @ ..] => {
                    let format = match *format {
                        "OCTAL" => Format::Octal,
                        "DECIMAL" => Format::Decimal,
                        other => return Err(fail(format!("unknown format {other}"))),
                    };
                    if addrs.is_empty() || addrs.len() > 3 {
                        return Err(fail("a noun needs one to three addresses".into()));
                    }
                    let addresses = addrs
                        .iter()
                        .map(|a| octal(a))
                        .collect::<Result<Vec<_>, _>>()?;
                    if let Some(bad) = addresses.iter().find(|&&a| !(0o10..=0o1377).contains(&a)) {
                        return Err(fail(format!("address {bad:o} is not unswitched erasable")));
                    }
                    if table
                        .nouns
                        .insert(id(n)?, NounSpec { format, addresses })
                        .is_some()
                    {
                        return Err(fail(format!("noun {n} defined twice")));
                    }
                }
                ["PROG", p, bank, addr] => {
                    let bank = octal(bank)?;
                    let addr = octal(addr)?;
                    if bank >= 0o44 || !(FIXED_WINDOW_BASE..0o4000).contains(&addr) {
                        return Err(fail(
                            "program entry must be a fixed bank and window address".into(),
                        ));
                    }
                    table.programs.insert(id(p)?, (bank as u8, addr));
                }
                _ => return Err(fail(format!("unrecognized entry {:?}", raw.trim()))),
            }
        }
        Ok(table)
    }
}

/// Restart dump: magic, cycle count, all erasable words and every channel
/// latch, big-endian.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestartDump {
    pub cycles: u64,
    pub erasable: Vec<Word>,
    pub channels: Vec<u16>,
}

pub const DUMP_MAGIC: &[u8; 8] = b"AGCDUMP1";
pub const DUMP_LEN: usize = 8 + 8 + ERASABLE_WORDS * 2 + crate::channels::CHANNEL_COUNT * 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad restart dump: {0}")]
pub struct DumpError(pub String);

impl RestartDump {
    /// Captures memory as stored. Words go out with freshly computed
    /// parity, so the dump is always parity-valid.
    pub fn capture(cpu: &Cpu) -> RestartDump {
        RestartDump {
            cycles: cpu.state.cycles,
            erasable: cpu
                .mem
                .erasable_snapshot()
                .into_iter()
                .map(|w| Word::new(w.data()))
                .collect(),
            channels: cpu.mem.channels().latches().to_vec(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(DUMP_LEN);
        out.extend_from_slice(DUMP_MAGIC);
        out.extend_from_slice(&self.cycles.to_be_bytes());
        for w in &self.erasable {
            out.extend_from_slice(&w.raw().to_be_bytes());
        }
        for c in &self.channels {
            out.extend_from_slice(&c.to_be_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<RestartDump, DumpError> {
        if bytes.len() != DUMP_LEN {
            return Err(DumpError(format!(
                "expected {DUMP_LEN} bytes, found {}",
                bytes.len()
            )));
        }
        if &bytes[..8] != DUMP_MAGIC {
            return Err(DumpError("bad magic".into()));
        }
        let cycles = u64::from_be_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let words: Vec<u16> = bytes[16..]
            .chunks(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        let (erasable, channels) = words.split_at(ERASABLE_WORDS);
        Ok(RestartDump {
            cycles,
            erasable: erasable.iter().map(|&raw| Word::from_raw(raw)).collect(),
            channels: channels.to_vec(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExecConfig {
    pub table: VerbNounTable,
    /// Cycles between monitor display refreshes.
    pub refresh_cycles: u64,
    /// How long the lamp test keeps every lamp lit.
    pub lamp_test_cycles: u64,
    /// Directory receiving restart dumps as `restart-NNN.agcdump`.
    pub dump_dir: Option<PathBuf>,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            table: VerbNounTable::default(),
            refresh_cycles: CYCLES_PER_SECOND / 10,
            lamp_test_cycles: CYCLES_PER_SECOND * 2,
            dump_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum JobKind {
    MonitorRefresh,
    LampTestEnd,
}

impl JobKind {
    fn priority(self) -> u8 {
        match self {
            JobKind::LampTestEnd => 30,
            JobKind::MonitorRefresh => 20,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Job {
    due: u64,
    kind: JobKind,
}

#[derive(Debug)]
pub struct Executive {
    cpu: Cpu,
    manifest: Manifest,
    config: ExecConfig,
    dsky: DskyState,
    jobs: Vec<Job>,
    monitor: Option<u8>,
    lamp_test_until: Option<u64>,
    paused: bool,
    dumps: Vec<RestartDump>,
}

/// Reads a register or erasable address without side effects.
pub fn peek_data(mem: &MemorySystem, addr: u16) -> Option<u16> {
    let loc = mem.resolve(addr).ok()?;
    match loc.region {
        Region::CentralRegister(reg) => Some(mem.register(reg)),
        Region::UnswitchedErasable | Region::SwitchedErasable => {
            Some(mem.peek_erasable(loc.bank, loc.offset).data())
        }
        Region::SwitchedFixed => mem.fixed_word(loc.bank, loc.offset).map(Word::data),
    }
}

impl Executive {
    pub fn new(cpu: Cpu, manifest: Manifest, config: ExecConfig) -> Executive {
        let mut dsky = DskyState::default();
        dsky.prog = Some(0);
        Executive {
            cpu,
            manifest,
            config,
            dsky,
            jobs: Vec::new(),
            monitor: None,
            lamp_test_until: None,
            paused: false,
            dumps: Vec::new(),
        }
    }

    pub fn cpu(&self) -> &Cpu {
        &self.cpu
    }

    pub fn cpu_mut(&mut self) -> &mut Cpu {
        &mut self.cpu
    }

    pub fn dsky(&self) -> &DskyState {
        &self.dsky
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn cycles(&self) -> u64 {
        self.cpu.state.cycles
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn set_paused(&mut self, paused: bool) {
        self.paused = paused;
    }

    /// True while the CPU can execute instructions.
    pub fn is_running(&self) -> bool {
        !self.cpu.state.halted && self.cpu.state.alarm.is_none()
    }

    /// Dumps taken by restarts so far.
    pub fn dumps(&self) -> &[RestartDump] {
        &self.dumps
    }

    /// Handles one keypress: latches its code on the key channel, then
    /// advances the entry state machine and acts on completed entries.
    pub fn key_in(&mut self, key: Key) -> &DskyState {
        let _ = self
            .cpu
            .mem
            .write_channel(self.manifest.dsky_keys(), key.channel_code());
        match self.dsky.key(key) {
            Some(Command::Dispatch { verb, noun }) => {
                let result = match self.config.table.verbs.get(&verb) {
                    Some(VerbKind::ChangeProgram) => {
                        self.dsky.begin_program_entry();
                        Ok(())
                    }
                    _ => self.schedule(verb, noun),
                };
                if result.is_err() {
                    self.dsky.set_lamp(Lamp::OprErr, true);
                }
            }
            Some(Command::Load { noun, values }) => {
                if let Some(spec) = self.config.table.nouns.get(&noun).cloned() {
                    for (&addr, &v) in spec.addresses.iter().zip(&values) {
                        let _ = self.cpu.mem.write_data(addr, v);
                    }
                    self.show_noun(noun);
                }
            }
            Some(Command::ChangeProgram(prog)) => {
                if self.change_program(prog).is_err() {
                    self.dsky.set_lamp(Lamp::OprErr, true);
                }
            }
            None => {}
        }
        &self.dsky
    }

    /// Runs a verb against a noun. Errors also light OPR ERR when they come
    /// from the keyboard.
    pub fn schedule(&mut self, verb: u8, noun: Option<u8>) -> Result<(), ExecError> {
        let kind = *self
            .config
            .table
            .verbs
            .get(&verb)
            .ok_or(ExecError::UnknownVerb(verb))?;
        let noun_spec = || {
            let n = noun.ok_or(ExecError::MissingNoun(verb))?;
            self.config
                .table
                .nouns
                .get(&n)
                .cloned()
                .map(|s| (n, s))
                .ok_or(ExecError::UnknownNoun(n))
        };
        match kind {
            VerbKind::Monitor => {
                let (n, _) = noun_spec()?;
                self.monitor = Some(n);
                self.jobs.retain(|j| j.kind != JobKind::MonitorRefresh);
                self.show_noun(n);
                self.add_job(self.config.refresh_cycles, JobKind::MonitorRefresh);
            }
            VerbKind::Load => {
                let (n, spec) = noun_spec()?;
                self.dsky.begin_load(n, spec.addresses.len(), spec.format);
            }
            VerbKind::LampTest => {
                self.lamp_test_until = Some(self.cycles() + self.config.lamp_test_cycles);
                self.jobs.retain(|j| j.kind != JobKind::LampTestEnd);
                self.add_job(self.config.lamp_test_cycles, JobKind::LampTestEnd);
            }
            VerbKind::ChangeProgram => match noun {
                Some(prog) => self.change_program(prog)?,
                None => self.dsky.begin_program_entry(),
            },
        }
        Ok(())
    }

    /// Sets the PROG display and jumps the CPU to the program's entry.
    pub fn change_program(&mut self, prog: u8) -> Result<(), ExecError> {
        let &(bank, addr) = self
            .config
            .table
            .programs
            .get(&prog)
            .ok_or(ExecError::UnknownProgram(prog))?;
        self.dsky.prog = Some(prog);
        self.jump(bank, addr);
        Ok(())
    }

    fn jump(&mut self, bank: u8, addr: u16) {
        let eb = self.cpu.mem.bank_registers().eb();
        self.cpu
            .mem
            .set_bank_registers(BankRegisters::new(eb, bank, false));
        self.cpu.set_z(addr);
        self.cpu.state.halted = false;
        self.cpu.state.alarm = None;
        self.cpu.state.extend_pending = false;
        self.cpu.state.index_pending = POS_ZERO;
    }

    fn add_job(&mut self, delay: u64, kind: JobKind) {
        self.jobs.push(Job {
            due: self.cycles() + delay,
            kind,
        });
    }

    /// Fills R1-R3 from a noun's addresses. Never writes memory.
    fn show_noun(&mut self, noun: u8) {
        let Some(spec) = self.config.table.nouns.get(&noun) else {
            return;
        };
        let mut registers: [Option<String>; 3] = Default::default();
        for (slot, &addr) in registers.iter_mut().zip(&spec.addresses) {
            *slot = peek_data(&self.cpu.mem, addr).map(|v| spec.format.render(v));
        }
        self.dsky.registers = registers;
    }

    fn run_due_jobs(&mut self) {
        let now = self.cycles();
        let mut due: Vec<Job> = Vec::new();
        self.jobs.retain(|j| {
            if j.due <= now {
                due.push(*j);
                false
            } else {
                true
            }
        });
        due.sort_by_key(|j| std::cmp::Reverse(j.kind.priority()));
        for job in due {
            match job.kind {
                JobKind::LampTestEnd => self.lamp_test_until = None,
                JobKind::MonitorRefresh => {
                    if let Some(n) = self.monitor {
                        self.show_noun(n);
                        self.add_job(self.config.refresh_cycles, JobKind::MonitorRefresh);
                    }
                }
            }
        }
    }

    /// Lights PROG ALARM and stores `code` in the alarm word.
    pub fn raise_alarm(&mut self, code: u16) {
        self.dsky.set_lamp(Lamp::ProgAlarm, true);
        let _ = self.cpu.mem.write_data(self.manifest.alarm_code(), code);
    }

    /// Dumps memory, clears unprotected erasable, resets the CPU and
    /// resumes from the phase table (or idles when it is empty).
    pub fn restart(&mut self) -> &RestartDump {
        let dump = RestartDump::capture(&self.cpu);
        if let Some(dir) = &self.config.dump_dir {
            let path = dir.join(format!("restart-{:03}.agcdump", self.dumps.len()));
            // A failed dump write must not stop the restart itself.
            let _ = std::fs::write(path, dump.to_bytes());
        }
        self.dumps.push(dump);

        for bank in 0..ERASABLE_BANKS as u8 {
            for offset in 0..ERASABLE_BANK_WORDS as u16 {
                let addr = bank as u16 * ERASABLE_BANK_WORDS as u16 + offset;
                if bank < 3 && self.manifest.is_protected(addr) {
                    continue;
                }
                self.cpu.mem.write_erasable(bank, offset, Word::ZERO);
            }
        }
        self.cpu.reset();

        let layout = self.manifest.phase_table();
        let resume = (0..layout.groups).find_map(|g| {
            let addr = layout.phase_addr(g);
            let phase = peek_data(&self.cpu.mem, addr)?;
            (phase != POS_ZERO && phase != NEG_ZERO)
                .then(|| peek_data(&self.cpu.mem, addr + 1))
                .flatten()
        });
        match resume {
            Some(fcadr) => self.jump((fcadr >> 10) as u8, FIXED_WINDOW_BASE + (fcadr & 0o1777)),
            None => self.cpu.state.halted = true,
        }
        self.dsky.set_lamp(Lamp::Restart, true);
        self.dumps.last().expect("just pushed")
    }

    /// One scheduling step: executes an instruction if the CPU is running
    /// (or lets one idle cycle pass), then runs due jobs.
    pub fn tick(&mut self) -> Option<StepReport> {
        let report = if self.is_running() && !self.paused {
            self.step_cpu()
        } else {
            self.cpu.state.cycles += 1;
            None
        };
        self.run_due_jobs();
        report
    }

    /// Executes one instruction regardless of the pause flag, applying the
    /// alarm policy: corrupt words restart, other faults halt.
    pub fn step_cpu(&mut self) -> Option<StepReport> {
        if !self.is_running() {
            return None;
        }
        match self.cpu.step() {
            Ok(report) => Some(report),
            Err(err) => {
                self.raise_alarm(alarm_code(&err));
                if matches!(
                    err,
                    CpuError::Memory {
                        source: MemoryError::CorruptWord { .. },
                        ..
                    }
                ) {
                    self.restart();
                }
                None
            }
        }
    }

    /// Ticks until at least `cycles` more cycles have passed.
    pub fn run_cycles(&mut self, cycles: u64) {
        let end = self.cycles() + cycles;
        while self.cycles() < end {
            self.tick();
        }
    }

    pub fn control(&mut self, action: ControlAction) {
        match action {
            ControlAction::Pause => self.paused = true,
            ControlAction::Resume => self.paused = false,
            ControlAction::Step => {
                self.step_cpu();
                self.run_due_jobs();
            }
            ControlAction::Restart => {
                self.restart();
            }
        }
    }

    /// Lamps as shown, combining DSKY state, the lamp test, the engine
    /// mirror, computer activity and lamp bits a program wrote to the lamp
    /// channel (bit n lights `Lamp::ALL[n]`).
    pub fn lamps(&self) -> BTreeMap<Lamp, bool> {
        let channel = self
            .cpu
            .mem
            .channels()
            .peek(self.manifest.dsky_lamps())
            .unwrap_or(0);
        let testing = self.lamp_test_until.is_some();
        Lamp::ALL
            .into_iter()
            .enumerate()
            .map(|(bit, lamp)| {
                let derived = match lamp {
                    Lamp::EngineOn => self.cpu.mem.channels().engine_on(),
                    Lamp::CompActy => self.is_running() && !self.paused,
                    _ => false,
                };
                let on = testing || derived || self.dsky.lamp(lamp) || channel >> bit & 1 == 1;
                (lamp, on)
            })
            .collect()
    }

    pub fn snapshot(&self) -> DskySnapshot {
        DskySnapshot {
            prog: self.dsky.prog_text(),
            verb: self.dsky.verb_text(),
            noun: self.dsky.noun_text(),
            r1: self.dsky.register_text(0),
            r2: self.dsky.register_text(1),
            r3: self.dsky.register_text(2),
            lamps: self
                .lamps()
                .into_iter()
                .map(|(l, on)| (l.name().to_string(), on))
                .collect(),
            cycle: self.cycles(),
        }
    }

    /// Applies one protocol message and returns its reply.
    pub fn handle(&mut self, message: Inbound) -> Outbound {
        match message {
            Inbound::Key { key } => match Key::from_code(&key) {
                Some(k) => {
                    self.key_in(k);
                }
                None => return Outbound::error("BadKey", format!("unknown key {key:?}")),
            },
            Inbound::Control { action } => self.control(action),
        }
        Outbound::Dsky(self.snapshot())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::assemble_str;

    fn executive(src: &str) -> Executive {
        let image = assemble_str(src).unwrap().image;
        let mut mem = MemorySystem::default();
        mem.load_rope(&image).unwrap();
        let config = ExecConfig {
            refresh_cycles: 10,
            lamp_test_cycles: 100,
            ..ExecConfig::default()
        };
        Executive::new(Cpu::new(mem), Manifest::default(), config)
    }

    fn keys(e: &mut Executive, codes: &str) {
        for c in codes.split_whitespace() {
            e.key_in(Key::from_code(c).unwrap());
        }
    }

    const COUNTER: &str = "\
        ERASLOC 1310
        ERASE   TIG 2
LOOP    CA      TIG
        AD      ONE
        TS      TIG
        TCF     LOOP
ONE     OCT     1
";

    #[test]
    fn default_table() {
        let t = VerbNounTable::default();
        assert_eq!(t.verbs[&35], VerbKind::LampTest);
        assert_eq!(t.nouns[&33].addresses, vec![0o1310, 0o1311]);
        assert_eq!(t.programs[&0], (0, 0o2000));
        assert!(VerbNounTable::parse("NOUN 1 OCTAL 100").is_err());
        assert!(VerbNounTable::parse("NOUN 01 OCTAL 3000").is_err());
    }

    #[test]
    fn lamp_test_lights_everything_then_ends() {
        let mut e = executive("DONE TCF DONE\n");
        keys(&mut e, "V 3 5 E");
        assert!(e.lamps().values().all(|&on| on));
        e.run_cycles(150);
        assert!(!e.lamps()[&Lamp::Temp]);
    }

    #[test]
    fn monitor_tracks_running_program() {
        let mut e = executive(COUNTER);
        keys(&mut e, "V 1 6 N 3 3 E");
        assert_eq!(e.snapshot().r1, "+00000");
        e.run_cycles(200);
        let shown = e.snapshot().r1;
        let actual = peek_data(&e.cpu().mem, 0o1310).unwrap();
        let diff = actual - u16::from_str_radix(&shown[1..], 8).unwrap();
        assert!(shown != "+00000" && diff <= 7, "{shown} vs {actual:o}");
    }

    #[test]
    fn monitor_refresh_never_writes_erasable() {
        let mut e = executive("DONE TCF DONE\n");
        keys(&mut e, "V 1 6 N 3 6 E");
        let before = e.cpu().mem.erasable_snapshot();
        e.run_cycles(500);
        assert_eq!(e.cpu().mem.erasable_snapshot(), before);
    }

    #[test]
    fn load_verb_writes_noun_addresses() {
        let mut e = executive("DONE TCF DONE\n");
        keys(&mut e, "V 2 1 N 4 0 E + 1 2 E - 3 E");
        assert_eq!(peek_data(&e.cpu().mem, 0o1302), Some(12));
        assert_eq!(peek_data(&e.cpu().mem, 0o1303), Some(0o77774));
        assert_eq!(e.snapshot().r2, "-00003");
    }

    #[test]
    fn unknown_verb_and_noun_light_operator_error() {
        let mut e = executive("DONE TCF DONE\n");
        keys(&mut e, "V 9 9 E");
        assert!(e.dsky().lamp(Lamp::OprErr));
        assert_eq!(e.schedule(99, None), Err(ExecError::UnknownVerb(99)));
        assert_eq!(e.schedule(16, Some(77)), Err(ExecError::UnknownNoun(77)));
    }

    #[test]
    fn change_program_jumps() {
        let mut e = executive("DONE TCF DONE\n        SETLOC 3 0\nP40 TCF P40\n");
        e.config.table.programs.insert(40, (3, 0o2000));
        keys(&mut e, "V 3 7 E 4 0 E");
        assert_eq!(e.snapshot().prog, "40");
        assert_eq!(e.cpu().registers().fb, 3);
        assert_eq!(e.cpu().z(), 0o2000);
    }

    #[test]
    fn alarms_store_code_and_rset_keeps_it() {
        let mut e = executive("        OCT 24000\n");
        e.tick();
        assert!(e.dsky().lamp(Lamp::ProgAlarm));
        assert_eq!(peek_data(&e.cpu().mem, 0o1337), Some(alarm::UNIMPLEMENTED));
        e.raise_alarm(0o1234);
        assert_eq!(peek_data(&e.cpu().mem, 0o1337), Some(0o1234));
        keys(&mut e, "R");
        assert!(!e.dsky().lamp(Lamp::ProgAlarm));
        assert_eq!(peek_data(&e.cpu().mem, 0o1337), Some(0o1234));
    }

    #[test]
    fn corrupt_word_restarts() {
        let mut e = executive("        CA 100\nDONE TCF DONE\n");
        e.cpu_mut().mem.inject_bit_flip(0o100, 3).unwrap();
        e.tick();
        assert_eq!(e.dumps().len(), 1);
        assert!(e.dsky().lamp(Lamp::Restart));
        assert_eq!(peek_data(&e.cpu().mem, 0o1337), Some(alarm::CORRUPT_WORD));
        // empty phase table: idle
        assert!(!e.is_running());
    }

    #[test]
    fn restart_with_empty_phase_table_idles() {
        let mut e = executive("DONE TCF DONE\n");
        let dump = e.restart().clone();
        assert_eq!(dump.to_bytes().len(), DUMP_LEN);
        assert!(dump.erasable.iter().all(|w| w.is_valid()));
        assert_eq!(RestartDump::from_bytes(&dump.to_bytes()).unwrap(), dump);
        assert!(!e.is_running());
        e.run_cycles(50);
    }

    #[test]
    fn restart_resumes_from_lowest_committed_group() {
        let mut e = executive("DONE TCF DONE\n        SETLOC 2 5\nRES TCF RES\n");
        e.cpu_mut().mem.write_data(0o1342, 1).unwrap();
        e.cpu_mut().mem.write_data(0o1343, 2 << 10 | 5).unwrap();
        e.cpu_mut().mem.write_data(0o1200, 0o777).unwrap();
        e.cpu_mut().mem.write_data(0o1300, 0o555).unwrap();
        e.restart();
        assert_eq!((e.cpu().registers().fb, e.cpu().z()), (2, 0o2005));
        assert_eq!(peek_data(&e.cpu().mem, 0o1200), Some(0));
        assert_eq!(peek_data(&e.cpu().mem, 0o1300), Some(0o555));
    }

    #[test]
    fn engine_lamp_mirrors_channel() {
        let mut e = executive("DONE TCF DONE\n");
        assert!(!e.lamps()[&Lamp::EngineOn]);
        e.cpu_mut().mem.write_channel(0o11, 0o20000).unwrap();
        assert!(e.lamps()[&Lamp::EngineOn]);
    }

    #[test]
    fn protocol_replies() {
        let mut e = executive("DONE TCF DONE\n");
        assert!(matches!(
            e.handle(Inbound::Key { key: "V".into() }),
            Outbound::Dsky(_)
        ));
        assert!(matches!(
            e.handle(Inbound::Key { key: "Q".into() }),
            Outbound::Error { .. }
        ));
        e.handle(Inbound::Control {
            action: ControlAction::Pause,
        });
        assert!(e.is_paused());
        assert_eq!(
            e.cpu().mem.channels().peek(0o15).unwrap(),
            Key::Verb.channel_code()
        );
    }
}
