//! Drivers for the ignition fixtures plus a hand simulation of the snippet
//! built on the integer oracle.

use std::collections::BTreeSet;

use agc_core::asm::{assemble_str, Assembly};
use agc_core::cpu::{Cpu, Effect, StopReason};
use agc_core::executive::{peek_data, ExecConfig, Executive};
use agc_core::manifest::Manifest;
use agc_core::memory::MemorySystem;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::oracle;

pub const LISTING: &str = include_str!("../fixtures/ignition.agc");
pub const PHASED: &str = include_str!("../fixtures/ignition_restart.agc");

pub const TIME2: u16 = 0o1300;
pub const TGO: u16 = 0o1302;
pub const TEVENT: u16 = 0o1304;
pub const FLAGWRD5: u16 = 0o1306;
pub const TIG: u16 = 0o1310;
pub const PHASE_WORD: u16 = 0o1340;
pub const DSALMOUT: u16 = 0o11;

pub const ENGONBIT: u16 = 0o20000;
pub const PRIO30: u16 = 0o30000;
pub const BIT13: u16 = 0o20000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inputs {
    pub flagwrd5: u16,
    pub dsalmout: u16,
    pub time2: (u16, u16),
    pub tgo: (u16, u16),
}

pub const INPUTS: Inputs = Inputs {
    flagwrd5: 0o00404,
    dsalmout: 0o10003,
    time2: (0o00012, 0o37000),
    tgo: (0o00003, 0o02000),
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outputs {
    pub flagwrd5: u16,
    pub dsalmout: u16,
    pub tevent: (u16, u16),
    pub tig: (u16, u16),
}

/// What the snippet should leave behind, worked out one statement at a
/// time with the integer oracle.
pub fn hand_simulate(i: Inputs) -> Outputs {
    let mask = 0o77777u32;
    // CS FLAGWRD5; MASK ENGONBIT; ADS FLAGWRD5
    let a = !(i.flagwrd5 as u32) & mask & ENGONBIT as u32;
    let (flag, _) = oracle::add(15, a, i.flagwrd5 as u32);
    // CS PRIO30; RAND DSALMOUT; AD BIT13; WRITE DSALMOUT
    let a = !(PRIO30 as u32) & mask & i.dsalmout as u32;
    let (out, _) = oracle::add(15, a, BIT13 as u32);
    // DCA TIME2; DXCH TEVENT
    let tevent = i.time2;
    // DCA TGO; DXCH TIG; DCA TIME2; DAS TIG
    let (hi, lo, _) = oracle::double_add(
        15,
        i.tgo.0 as u32,
        i.tgo.1 as u32,
        i.time2.0 as u32,
        i.time2.1 as u32,
    );
    Outputs {
        flagwrd5: flag as u16,
        dsalmout: out as u16,
        tevent,
        tig: (hi as u16, lo as u16),
    }
}

fn memory_for(assembly: &Assembly, i: Inputs) -> MemorySystem {
    let mut mem = MemorySystem::default();
    mem.load_rope(&assembly.image).unwrap();
    for (addr, v) in [
        (FLAGWRD5, i.flagwrd5),
        (TIME2, i.time2.0),
        (TIME2 + 1, i.time2.1),
        (TGO, i.tgo.0),
        (TGO + 1, i.tgo.1),
    ] {
        mem.write_data(addr, v).unwrap();
    }
    mem.write_channel(DSALMOUT, i.dsalmout).unwrap();
    mem
}

fn double(mem: &MemorySystem, addr: u16) -> (u16, u16) {
    (
        peek_data(mem, addr).unwrap(),
        peek_data(mem, addr + 1).unwrap(),
    )
}

pub fn outputs(mem: &MemorySystem) -> Outputs {
    Outputs {
        flagwrd5: peek_data(mem, FLAGWRD5).unwrap(),
        dsalmout: mem.channels().peek(DSALMOUT).unwrap(),
        tevent: double(mem, TEVENT),
        tig: double(mem, TIG),
    }
}

pub struct ListingRun {
    pub outputs: Outputs,
    pub engine_on: bool,
    pub reason: StopReason,
    pub cycles: u64,
}

/// Assembles and runs the snippet on a bare CPU until it parks on DONE.
pub fn run_listing(i: Inputs) -> Result<ListingRun, String> {
    let assembly = assemble_str(LISTING).map_err(|e| e.to_string())?;
    let mut cpu = Cpu::new(memory_for(&assembly, i));
    let outcome = cpu.run(1000, &BTreeSet::new());
    Ok(ListingRun {
        outputs: outputs(&cpu.mem),
        engine_on: cpu.mem.channels().engine_on(),
        reason: outcome.reason,
        cycles: outcome.cycles,
    })
}

/// Everything a restart must carry across: the protected range and the
/// engine channel.
pub type Committed = (Vec<u16>, u16);

fn committed(exec: &Executive) -> Committed {
    let mem = &exec.cpu().mem;
    let words = (0o1300..=0o1377)
        .map(|a| peek_data(mem, a).unwrap())
        .collect();
    (words, mem.channels().peek(DSALMOUT).unwrap())
}

fn phased_executive(i: Inputs) -> Executive {
    let assembly = assemble_str(PHASED).expect("phased fixture assembles");
    let cpu = Cpu::new(memory_for(&assembly, i));
    Executive::new(cpu, Manifest::default(), ExecConfig::default())
}

/// Runs the phased program to completion. With `restart_after = Some(k)`
/// the k-th phase commit is followed by junk in scratch erasable and a
/// restart. `forget_phase` also wipes the phase table first, which a
/// working resume must notice. Returns the committed state and the number
/// of commits seen.
pub fn run_phased(
    i: Inputs,
    restart_after: Option<usize>,
    forget_phase: bool,
    seed: u64,
) -> (Committed, usize) {
    let mut exec = phased_executive(i);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut commits = 0;
    for _ in 0..10_000 {
        if !exec.is_running() {
            break;
        }
        let Some(report) = exec.tick() else { continue };
        let committed_phase = report
            .effects
            .iter()
            .any(|e| matches!(e, Effect::Memory { addr, .. } if *addr == PHASE_WORD));
        if committed_phase {
            commits += 1;
            if restart_after == Some(commits) {
                let mem = &mut exec.cpu_mut().mem;
                for addr in 0o100..0o1300 {
                    mem.write_data(addr, rng.gen_range(0..0o100000)).unwrap();
                }
                let cpu = exec.cpu_mut();
                cpu.mem.write_data(0, rng.gen_range(0..0o100000)).unwrap();
                cpu.mem.write_data(1, rng.gen_range(0..0o100000)).unwrap();
                if forget_phase {
                    cpu.mem.write_data(PHASE_WORD, 0).unwrap();
                }
                exec.restart();
            }
        }
    }
    assert!(!exec.is_running(), "phased program did not finish");
    (committed(&exec), commits)
}

/// Restarts at every phase boundary and compares against the
/// uninterrupted run. Returns how many boundaries were exercised.
pub fn restart_differential(i: Inputs) -> Result<usize, String> {
    let (baseline, phases) = run_phased(i, None, false, 0);
    if phases == 0 {
        return Err("no phase commits observed".into());
    }
    for k in 1..=phases {
        let (state, _) = run_phased(i, Some(k), false, k as u64);
        if state != baseline {
            return Err(format!("restart after phase {k} diverged"));
        }
    }
    Ok(phases)
}

pub fn baseline_outputs(i: Inputs) -> Outputs {
    let mut exec = phased_executive(i);
    while exec.is_running() {
        exec.tick();
    }
    outputs(&exec.cpu().mem)
}
