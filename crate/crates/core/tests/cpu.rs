use std::collections::BTreeSet;

use agc_core::cpu::{decode, encode, Cpu, Instruction, Mnemonic};
use agc_core::memory::{CentralRegister, MemorySystem};
use agc_core::rope::RopeImage;
use agc_core::word::{oc_add, Word};
use proptest::prelude::*;

fn cpu_from_bank0(words: &[u16]) -> Cpu {
    let mut image = RopeImage::new();
    let bank = image.bank_mut(0).unwrap();
    for (i, &w) in words.iter().enumerate() {
        bank[i] = Word::new(w);
    }
    let mut mem = MemorySystem::default();
    mem.load_rope(&image).unwrap();
    Cpu::new(mem)
}

#[test]
fn decode_inverts_encode_for_every_mnemonic_and_operand() {
    let mut checked = 0;
    for m in Mnemonic::ALL {
        for operand in 0..0o10000u16 {
            let Ok(inst) = Instruction::new(m, operand) else {
                assert!(!m.operand_kind().accepts(operand));
                continue;
            };
            let word = inst.encode();
            assert_eq!(
                decode(word, inst.is_extended()),
                Ok(inst),
                "{m} {operand:o}"
            );
            checked += 1;
        }
    }
    assert!(checked > 30_000);
}

#[test]
fn every_word_decodes_deterministically_and_reencodes() {
    for extended in [false, true] {
        for word in 0..0o100000u16 {
            if let Ok(inst) = decode(word, extended) {
                assert_eq!(inst.encode(), word, "{word:05o}");
                assert_eq!(inst.is_extended(), extended);
            }
        }
    }
}

#[test]
fn call_and_return_through_q() {
    // 2000 TC 2004; 2001 CA 0100 (marker); 2002 TCF 2002; 2004 TC Q
    let mut words = vec![0o3; 8];
    words[0] = encode(Mnemonic::Tc, 0o2004).unwrap();
    words[1] = encode(Mnemonic::Ca, 0o100).unwrap();
    words[2] = encode(Mnemonic::Tcf, 0o2002).unwrap();
    words[4] = encode(Mnemonic::Tc, CentralRegister::Q.addr()).unwrap();
    let mut cpu = cpu_from_bank0(&words);
    cpu.mem.write_data(0o100, 0o777).unwrap();
    cpu.step().unwrap();
    assert_eq!(cpu.registers().q, 0o2001);
    let outcome = cpu.run(100, &BTreeSet::new());
    assert_eq!(outcome.reason.name(), "halted");
    assert_eq!(cpu.registers().a, 0o777);
}

#[test]
fn double_load_then_double_exchange_copies_pair() {
    let words = [
        0o6,
        encode(Mnemonic::Dca, 0o200).unwrap(),
        encode(Mnemonic::Dxch, 0o210).unwrap(),
    ];
    let mut cpu = cpu_from_bank0(&words);
    cpu.mem.write_data(0o200, 0o11111).unwrap();
    cpu.mem.write_data(0o201, 0o22222).unwrap();
    for _ in 0..3 {
        cpu.step().unwrap();
    }
    assert_eq!(cpu.mem.read_data(0o210).unwrap(), 0o11111);
    assert_eq!(cpu.mem.read_data(0o211).unwrap(), 0o22222);
}

fn fixed_checksum(cpu: &Cpu) -> Vec<u16> {
    (0..36u8)
        .filter_map(|b| cpu.mem.fixed_bank(b))
        .flat_map(|bank| bank.iter().map(|w| w.raw()))
        .collect()
}

fn seeded(cpu: &mut Cpu, erasable: &[u16]) {
    for (i, &v) in erasable.iter().enumerate() {
        cpu.mem.write_data(0o10 + i as u16, v).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn step_never_modifies_fixed_memory(
        program in prop::collection::vec(0u16..0o100000, 64),
        erasable in prop::collection::vec(0u16..0o100000, 0o100),
    ) {
        let mut cpu = cpu_from_bank0(&program);
        seeded(&mut cpu, &erasable);
        let before = fixed_checksum(&cpu);
        for _ in 0..200 {
            if cpu.step().is_err() {
                break;
            }
        }
        prop_assert_eq!(fixed_checksum(&cpu), before);
    }

    #[test]
    fn index_matches_presummed_word(
        word in 0u16..0o100000,
        addend in 0u16..0o100000,
        erasable in prop::collection::vec(0u16..0o100000, 0o100),
        a in 0u16..0o100000,
        l in 0u16..0o100000,
    ) {
        let summed = oc_add(word, addend).0;
        if let Ok(inst) = decode(summed, false) {
            // Operands reading the two differing program words would see
            // different data by construction.
            prop_assume!(!(0o2000..=0o2001).contains(&inst.operand()));
        }
        let index = encode(Mnemonic::Index, 0o100).unwrap();
        let noop = encode(Mnemonic::Noop, 0).unwrap();
        let mut indexed = cpu_from_bank0(&[index, word]);
        let mut direct = cpu_from_bank0(&[noop, summed]);
        for cpu in [&mut indexed, &mut direct] {
            seeded(cpu, &erasable);
            cpu.mem.write_data(0o100, addend).unwrap();
            cpu.mem.set_register(CentralRegister::A, a);
            cpu.mem.set_register(CentralRegister::L, l);
            cpu.step().unwrap();
        }
        let r1 = indexed.step().map_err(|e| e.class());
        let r2 = direct.step().map_err(|e| e.class());
        prop_assert_eq!(r1.is_ok(), r2.is_ok());
        if let (Ok(x), Ok(y)) = (&r1, &r2) {
            prop_assert_eq!(x.instruction, y.instruction);
            prop_assert_eq!(&x.effects, &y.effects);
            prop_assert_eq!(indexed.state.extend_pending, direct.state.extend_pending);
            prop_assert_eq!(indexed.state.index_pending, direct.state.index_pending);
        }
        prop_assert_eq!(indexed.registers(), direct.registers());
        prop_assert_eq!(indexed.mem.erasable_snapshot(), direct.mem.erasable_snapshot());
        prop_assert_eq!(indexed.mem.channels().latches(), direct.mem.channels().latches());
    }

    #[test]
    fn q_after_tc_is_following_address(offset in 0u16..0o1776, target in 0o2000u16..0o4000) {
        let mut words = vec![0o3; 1024];
        words[offset as usize] = encode(Mnemonic::Tc, target).unwrap();
        let mut cpu = cpu_from_bank0(&words);
        cpu.set_z(0o2000 + offset);
        cpu.step().unwrap();
        prop_assert_eq!(cpu.registers().q, 0o2000 + offset + 1);
        prop_assert_eq!(cpu.z(), target);
    }

    #[test]
    fn rand_leaves_latch_unchanged(channel in 0u16..0o1000, latch in 0u16..0o100000, a in 0u16..0o100000) {
        let mut cpu = cpu_from_bank0(&[0o6, encode(Mnemonic::Rand, channel).unwrap()]);
        cpu.mem.channels_mut().set_latch(channel, latch).unwrap();
        cpu.mem.set_register(CentralRegister::A, a);
        cpu.step().unwrap();
        cpu.step().unwrap();
        prop_assert_eq!(cpu.mem.channels().peek(channel).unwrap(), latch);
        prop_assert_eq!(cpu.registers().a, a & latch);
    }

    #[test]
    fn zero_register_always_reads_plus_zero(prior in 0u16..0o100000) {
        let mut cpu = cpu_from_bank0(&[encode(Mnemonic::Ts, 0o7).unwrap(), encode(Mnemonic::Ca, 0o7).unwrap()]);
        cpu.mem.set_register(CentralRegister::A, prior);
        cpu.step().unwrap();
        cpu.step().unwrap();
        prop_assert_eq!(cpu.registers().a, 0);
    }
}
