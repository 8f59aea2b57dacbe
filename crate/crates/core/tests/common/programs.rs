//! Random valid assembly programs.

use agc_core::cpu::{Mnemonic, OperandKind};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

fn operand(rng: &mut StdRng, kind: OperandKind) -> u16 {
    match kind {
        OperandKind::None => 0,
        OperandKind::Address => rng.gen_range(0..0o10000),
        OperandKind::Erasable => rng.gen_range(0..0o2000),
        OperandKind::Fixed => rng.gen_range(0o2000..0o10000),
        OperandKind::Channel => rng.gen_range(0..0o1000),
    }
}

/// A program spread over a few banks, mixing instructions, data words,
/// labels and label references.
pub fn random_program(rng: &mut StdRng) -> String {
    let mut src = String::new();
    let mut banks: Vec<u8> = (0..36).collect();
    banks.shuffle(rng);
    let erasable = rng.gen_range(0..8);
    for i in 0..erasable {
        src += &format!("        ERASE   V{i} {}\n", rng.gen_range(1..4));
    }
    for (b, &bank) in banks.iter().take(rng.gen_range(1..4)).enumerate() {
        let start = rng.gen_range(0..200);
        src += &format!("        SETLOC  {bank:o} {start:o}\n");
        let count = rng.gen_range(1..300);
        let mut labels = Vec::new();
        for n in 0..count {
            let label = if rng.gen_bool(0.1) {
                let name = format!("LBL{b}_{n:03}");
                labels.push(name.clone());
                name
            } else {
                String::new()
            };
            let body = match rng.gen_range(0..10) {
                0 => format!("OCT     {:o}", rng.gen_range(0..0o100000)),
                1 => format!("DEC     {}", rng.gen_range(-16383..16384)),
                2 if !labels.is_empty() => format!("TCF     {}", labels.choose(rng).unwrap()),
                3 if erasable > 0 => format!("CA      V{}", rng.gen_range(0..erasable)),
                4 => format!("AD      BIT{}", rng.gen_range(0..15)),
                _ => {
                    let m = *Mnemonic::ALL.choose(rng).unwrap();
                    match m.operand_kind() {
                        OperandKind::None => m.name().to_string(),
                        kind => format!("{:<8}{:o}", m.name(), operand(rng, kind)),
                    }
                }
            };
            src += &format!("{label:<8} {body}\n");
        }
    }
    src
}
