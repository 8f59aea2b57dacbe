use std::collections::BTreeMap;

use super::{SourceLine, SourceProgram, SymbolKind, SymbolTable};
use crate::cpu::{decode, Mnemonic};
use crate::rope::RopeImage;
use crate::word::Word;

/// Renders an image as source that reassembles to the same image.
///
/// Each bank starts with a `SETLOC` and runs to its last non-zero word (or
/// last labelled word). Words that do not decode are written as `OCT`.
/// Operands stay numeric; symbols only contribute definitions and labels.
pub fn disassemble(image: &RopeImage, symbols: Option<&SymbolTable>) -> SourceProgram {
    let mut lines = Vec::new();
    let mut labels: BTreeMap<(u8, u16), Vec<&str>> = BTreeMap::new();
    if let Some(table) = symbols {
        for (name, sym) in table.iter() {
            match (sym.kind, sym.bank, sym.fixed_offset()) {
                (SymbolKind::Fixed, Some(bank), Some(offset)) => {
                    labels.entry((bank, offset)).or_default().push(name)
                }
                _ => lines.push(SourceLine::instruction(
                    "=",
                    &[name, &format!("{:o}", sym.value)],
                )),
            }
        }
    }

    for (bank, words) in image.banks() {
        let last_word = words.iter().rposition(|&w| w != Word::ZERO).unwrap_or(0);
        let last_label = labels
            .range((bank, 0)..=(bank, u16::MAX))
            .map(|(&(_, o), _)| o as usize)
            .next_back();
        let end = last_word.max(last_label.unwrap_or(0).min(words.len() - 1));
        lines.push(SourceLine::instruction(
            "SETLOC",
            &[&format!("{bank:o}"), "0"],
        ));
        let mut extended = false;
        for (offset, w) in words[..=end].iter().enumerate() {
            let data = w.data();
            let mut line = match decode(data, extended) {
                Ok(inst) => {
                    extended = inst.mnemonic() == Mnemonic::Extend;
                    let text = inst.to_string();
                    let mut parts = text.split_whitespace();
                    let op = parts.next().unwrap_or_default().to_string();
                    let args: Vec<&str> = parts.collect();
                    SourceLine::instruction(&op, &args)
                }
                Err(_) => {
                    extended = false;
                    SourceLine::instruction("OCT", &[&format!("{data:05o}")])
                }
            };
            if let Some(names) = labels.get(&(bank, offset as u16)) {
                line.label = Some(names[0].to_string());
                for extra in &names[1..] {
                    lines.push(SourceLine {
                        label: Some(extra.to_string()),
                        ..SourceLine::default()
                    });
                }
            }
            lines.push(line);
        }
    }
    SourceProgram { lines }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::assemble_str;

    #[test]
    fn empty_image_gives_empty_program() {
        let program = disassemble(&RopeImage::new(), None);
        assert!(program.is_empty());
        assert_eq!(
            assemble_str(&program.to_string()).unwrap().image,
            RopeImage::new()
        );
    }

    #[test]
    fn extended_words_follow_extend() {
        let a = assemble_str("  DCA 100\n  CA 100\n  OCT 24000\n").unwrap();
        let text = disassemble(&a.image, None).to_string();
        let ops: Vec<String> = text
            .lines()
            .map(|l| l.split_whitespace().next().unwrap().to_string())
            .collect();
        assert_eq!(ops, ["SETLOC", "EXTEND", "DCA", "CA", "OCT"]);
        assert_eq!(assemble_str(&text).unwrap().image, a.image);
    }

    #[test]
    fn labels_and_definitions_from_symbols() {
        let a = assemble_str("  ERASE X\nTOP CA X\n  TCF TOP\n  SETLOC 0 20\nEND NOOP\n").unwrap();
        let program = disassemble(&a.image, Some(&a.symbols));
        let text = program.to_string();
        assert!(text.contains("TOP     CA"));
        assert!(text.contains("END     NOOP"));
        assert!(text.contains("=       X"));
        assert_eq!(assemble_str(&text).unwrap().image, a.image);
    }

    #[test]
    fn zero_bank_keeps_one_word() {
        let mut image = RopeImage::new();
        image.bank_mut(5).unwrap();
        let program = disassemble(&image, None);
        assert_eq!(program.lines.len(), 2);
        assert_eq!(assemble_str(&program.to_string()).unwrap().image, image);
    }
}
