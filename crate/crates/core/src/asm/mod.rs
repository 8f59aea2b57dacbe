//! Two-pass assembler for the ignition-snippet dialect.
//!
//! ```text
//!         ERASE   FLAGWRD5        ; allocate one erasable word
//!         ERASE   TIME2 2         ; ... or several
//!         = PRIO  30000           ; constant
//!         SETLOC  3 0             ; emit into fixed bank 3 from offset 0
//! START   CS      FLAGWRD5
//!         RAND    DSALMOUT        ; EXTEND is inserted automatically
//!         AD      BIT13           ; pooled constant in this bank
//! ```
//!
//! Pass 1 lays out every statement and allocates erasable; pass 2 evaluates
//! operands and encodes. `BITn` (n = 0..14) names a fixed constant holding
//! `1 << n`; unless the program defines the name itself, the assembler places
//! one copy at the end of each bank that refers to it.

mod disasm;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use disasm::disassemble;
pub use parse::{
    is_identifier, is_operation, parse_expr, parse_number, Expr, SourceLine, SourceProgram, Term,
};

use crate::cpu::{Instruction, Mnemonic};
use crate::manifest::Manifest;
use crate::memory::{CentralRegister, ERASABLE_BANK_WORDS, FIXED_WINDOW_BASE};
use crate::rope::{RopeImage, BANK_WORDS, MAX_BANKS};
use crate::word::{SignedValue, Word, DATA_MASK};

/// First address handed out by ERASE.
pub const ERASE_START: u16 = 0o100;

/// Last address ERASE may hand out.
pub const ERASE_LIMIT: u16 = 0o1777;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmErrorKind {
    #[error("undefined symbol {0}")]
    UndefinedSymbol(String),
    #[error("duplicate label {0}")]
    DuplicateLabel(String),
    #[error("bank {bank:o} overflows {BANK_WORDS} words")]
    BankOverflow { bank: u8 },
    #[error("operand out of range: {0}")]
    OperandRange(String),
    #[error("unknown mnemonic {0}")]
    UnknownMnemonic(String),
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("erasable memory exhausted")]
    ErasableOverflow,
    #[error("bank {bank:o} offset {offset:04o} emitted twice")]
    Overlap { bank: u8, offset: u16 },
}

impl AsmErrorKind {
    pub fn class(&self) -> &'static str {
        match self {
            AsmErrorKind::UndefinedSymbol(_) => "UndefinedSymbol",
            AsmErrorKind::DuplicateLabel(_) => "DuplicateLabel",
            AsmErrorKind::BankOverflow { .. } => "BankOverflow",
            AsmErrorKind::OperandRange(_) => "OperandRange",
            AsmErrorKind::UnknownMnemonic(_) => "UnknownMnemonic",
            AsmErrorKind::Syntax(_) => "Syntax",
            AsmErrorKind::ErasableOverflow => "ErasableOverflow",
            AsmErrorKind::Overlap { .. } => "Overlap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct AsmError {
    pub line: usize,
    pub kind: AsmErrorKind,
}

impl AsmError {
    pub fn new(line: usize, kind: AsmErrorKind) -> AsmError {
        AsmError { line, kind }
    }

    pub fn class(&self) -> &'static str {
        self.kind.class()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Erasable,
    Fixed,
    Constant,
}

impl SymbolKind {
    pub fn name(self) -> &'static str {
        match self {
            SymbolKind::Erasable => "erasable",
            SymbolKind::Fixed => "fixed",
            SymbolKind::Constant => "constant",
        }
    }

    fn from_name(name: &str) -> Option<SymbolKind> {
        [
            SymbolKind::Erasable,
            SymbolKind::Fixed,
            SymbolKind::Constant,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symbol {
    pub kind: SymbolKind,
    /// Address as seen by instructions (fixed symbols sit in 2000-3777), or
    /// the constant's value.
    pub value: u16,
    /// Fixed bank, or erasable bank for unswitched erasable.
    pub bank: Option<u8>,
}

impl Symbol {
    pub fn fixed(bank: u8, offset: u16) -> Symbol {
        Symbol {
            kind: SymbolKind::Fixed,
            value: FIXED_WINDOW_BASE + offset,
            bank: Some(bank),
        }
    }

    pub fn erasable(addr: u16) -> Symbol {
        let bank = (addr < 0o1400).then_some((addr / ERASABLE_BANK_WORDS as u16) as u8);
        Symbol {
            kind: SymbolKind::Erasable,
            value: addr,
            bank,
        }
    }

    pub fn constant(value: u16) -> Symbol {
        Symbol {
            kind: SymbolKind::Constant,
            value,
            bank: None,
        }
    }

    /// Offset within the fixed bank, for fixed symbols.
    pub fn fixed_offset(&self) -> Option<u16> {
        (self.kind == SymbolKind::Fixed).then(|| self.value - FIXED_WINDOW_BASE)
    }
}

/// A pooled `BITn` constant placed in one bank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub name: String,
    pub bank: u8,
    pub offset: u16,
    pub value: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymbolTable {
    symbols: BTreeMap<String, Symbol>,
    pool: Vec<PoolEntry>,
}

impl SymbolTable {
    pub fn get(&self, name: &str) -> Option<Symbol> {
        self.symbols.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Symbol)> {
        self.symbols.iter().map(|(n, s)| (n.as_str(), *s))
    }

    pub fn pool(&self) -> &[PoolEntry] {
        &self.pool
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn insert(&mut self, name: &str, symbol: Symbol) -> Result<(), AsmErrorKind> {
        if self.symbols.contains_key(name) {
            return Err(AsmErrorKind::DuplicateLabel(name.to_string()));
        }
        self.symbols.insert(name.to_string(), symbol);
        Ok(())
    }

    /// `.sym` text: `name kind value bank`, octal, `-` for no bank. Pooled
    /// constants follow with kind `pool`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, s) in &self.symbols {
            let bank = s.bank.map_or("-".to_string(), |b| format!("{b:02o}"));
            out += &format!("{name} {} {:05o} {bank}\n", s.kind.name(), s.value);
        }
        for p in &self.pool {
            out += &format!(
                "{} pool {:05o} {:02o}\n",
                p.name,
                FIXED_WINDOW_BASE + p.offset,
                p.bank
            );
        }
        out
    }

    /// Parses `.sym` text written by [`SymbolTable::to_text`].
    pub fn from_text(text: &str) -> Result<SymbolTable, AsmError> {
        let mut table = SymbolTable::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let syntax = |m: &str| AsmError::new(line, AsmErrorKind::Syntax(m.to_string()));
            let fields: Vec<&str> = raw.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [name, kind, value, bank] = fields[..] else {
                return Err(syntax("expected name kind value bank"));
            };
            let value = u16::from_str_radix(value, 8).map_err(|_| syntax("bad value"))?;
            let bank = match bank {
                "-" => None,
                b => Some(u8::from_str_radix(b, 8).map_err(|_| syntax("bad bank"))?),
            };
            if kind == "pool" {
                let bank = bank.ok_or_else(|| syntax("pool entry without bank"))?;
                let bit = pool_bit(name).ok_or_else(|| syntax("bad pool name"))?;
                table.pool.push(PoolEntry {
                    name: name.to_string(),
                    bank,
                    offset: value.wrapping_sub(FIXED_WINDOW_BASE),
                    value: 1 << bit,
                });
                continue;
            }
            let kind = SymbolKind::from_name(kind).ok_or_else(|| syntax("bad kind"))?;
            table
                .insert(name, Symbol { kind, value, bank })
                .map_err(|k| AsmError::new(line, k))?;
        }
        Ok(table)
    }
}

/// Bit number named by `BITn`, n in 0..=14.
fn pool_bit(name: &str) -> Option<u32> {
    let n: u32 = name.strip_prefix("BIT")?.parse().ok()?;
    (n <= 14 && name == format!("BIT{n}")).then_some(n)
}

/// One row of the listing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListingRow {
    /// Bank and offset of the emitted word.
    pub location: Option<(u8, u16)>,
    pub word: Option<u16>,
    /// Source line number; `None` for pooled constants.
    pub line: Option<usize>,
    pub source: String,
}

impl fmt::Display for ListingRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = self.line.map_or("pool".to_string(), |l| l.to_string());
        match (self.location, self.word) {
            (Some((bank, offset)), Some(word)) => write!(
                f,
                "{bank:02o},{:04o}  {word:05o}  {line} {}",
                FIXED_WINDOW_BASE + offset,
                self.source
            ),
            _ => write!(f, "{:14}  {line} {}", "", self.source),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assembly {
    pub image: RopeImage,
    pub symbols: SymbolTable,
    pub listing: Vec<ListingRow>,
}

impl Assembly {
    pub fn listing_text(&self) -> String {
        self.listing
            .iter()
            .map(|r| format!("{}\n", r.to_string().trim_end()))
            .collect()
    }
}

/// What a laid-out statement emits.
#[derive(Debug, Clone)]
enum Emit {
    AutoExtend,
    Instruction {
        mnemonic: Mnemonic,
        operand: Option<Expr>,
    },
    Words(Vec<u16>),
    Adres(Expr),
    Fcadr(Expr),
}

#[derive(Debug, Clone)]
struct Planned {
    line: usize,
    source: String,
    bank: u8,
    offset: u16,
    emit: Emit,
}

impl Emit {
    fn size(&self) -> u16 {
        match self {
            Emit::Words(w) => w.len() as u16,
            _ => 1,
        }
    }
}

struct Layout<'m> {
    manifest: &'m Manifest,
    symbols: SymbolTable,
    planned: Vec<Planned>,
    used: BTreeMap<u8, Vec<bool>>,
    high: BTreeMap<u8, u16>,
    bank: u8,
    offset: u16,
    erase_ptr: u16,
    pending_labels: Vec<(String, usize)>,
    prev_extend: bool,
    /// bank -> BITn names referenced there, with the first referencing line.
    pool_refs: BTreeMap<u8, BTreeMap<String, usize>>,
}

fn err(line: usize, kind: AsmErrorKind) -> AsmError {
    AsmError::new(line, kind)
}

/// Operation name in canonical upper case, resolving NOOP aliases.
fn canonical_operation(op: &str) -> String {
    if parse::NOOP_ALIASES
        .iter()
        .any(|a| a.eq_ignore_ascii_case(op))
    {
        "NOOP".to_string()
    } else {
        op.to_ascii_uppercase()
    }
}

impl<'m> Layout<'m> {
    fn new(manifest: &'m Manifest) -> Layout<'m> {
        Layout {
            manifest,
            symbols: SymbolTable::default(),
            planned: Vec::new(),
            used: BTreeMap::new(),
            high: BTreeMap::new(),
            bank: 0,
            offset: 0,
            erase_ptr: ERASE_START,
            pending_labels: Vec::new(),
            prev_extend: false,
            pool_refs: BTreeMap::new(),
        }
    }

    fn is_predefined(&self, name: &str) -> bool {
        CentralRegister::ALL.iter().any(|r| r.name() == name)
    }

    fn define(&mut self, name: &str, symbol: Symbol, line: usize) -> Result<(), AsmError> {
        if !is_identifier(name) {
            return Err(err(
                line,
                AsmErrorKind::Syntax(format!("bad symbol name {name:?}")),
            ));
        }
        if is_operation(name) || self.is_predefined(name) {
            return Err(err(
                line,
                AsmErrorKind::DuplicateLabel(format!("{name} is reserved")),
            ));
        }
        self.symbols.insert(name, symbol).map_err(|k| err(line, k))
    }

    /// Looks up a symbol known so far, including predefined names.
    fn lookup(&self, name: &str) -> Option<Symbol> {
        if let Some(s) = self.symbols.get(name) {
            return Some(s);
        }
        if let Some(r) = CentralRegister::ALL.iter().find(|r| r.name() == name) {
            return Some(Symbol::erasable(r.addr()));
        }
        self.manifest.channel(name).map(Symbol::constant)
    }

    fn eval_now(&self, expr: &Expr, line: usize) -> Result<i64, AsmError> {
        let mut total = 0;
        for (sign, term) in &expr.terms {
            total += sign
                * match term {
                    Term::Number(n) => *n,
                    Term::Symbol(s) => {
                        self.lookup(s)
                            .ok_or_else(|| err(line, AsmErrorKind::UndefinedSymbol(s.clone())))?
                            .value as i64
                    }
                };
        }
        Ok(total)
    }

    fn bind_pending(&mut self) -> Result<(), AsmError> {
        for (name, line) in std::mem::take(&mut self.pending_labels) {
            self.define(&name, Symbol::fixed(self.bank, self.offset), line)?;
        }
        Ok(())
    }

    fn note_pool_refs(&mut self, expr: &Expr, line: usize) {
        for name in expr.symbols() {
            if pool_bit(name).is_some() {
                self.pool_refs
                    .entry(self.bank)
                    .or_default()
                    .entry(name.to_string())
                    .or_insert(line);
            }
        }
    }

    fn reserve(&mut self, bank: u8, offset: u16, size: u16, line: usize) -> Result<(), AsmError> {
        if offset as usize + size as usize > BANK_WORDS {
            return Err(err(line, AsmErrorKind::BankOverflow { bank }));
        }
        let used = self
            .used
            .entry(bank)
            .or_insert_with(|| vec![false; BANK_WORDS]);
        for o in offset..offset + size {
            if std::mem::replace(&mut used[o as usize], true) {
                return Err(err(line, AsmErrorKind::Overlap { bank, offset: o }));
            }
        }
        let high = self.high.entry(bank).or_insert(0);
        *high = (*high).max(offset + size);
        Ok(())
    }

    fn emit(&mut self, line: usize, source: &str, emit: Emit) -> Result<(), AsmError> {
        let size = emit.size();
        self.reserve(self.bank, self.offset, size, line)?;
        self.planned.push(Planned {
            line,
            source: source.to_string(),
            bank: self.bank,
            offset: self.offset,
            emit,
        });
        self.offset += size;
        Ok(())
    }

    fn set_location(&mut self, bank: i64, offset: i64, line: usize) -> Result<(), AsmError> {
        if !(0..MAX_BANKS as i64).contains(&bank) {
            return Err(err(
                line,
                AsmErrorKind::OperandRange(format!("bank {bank:o}")),
            ));
        }
        if !(0..BANK_WORDS as i64).contains(&offset) {
            return Err(err(
                line,
                AsmErrorKind::OperandRange(format!("offset {offset:o}")),
            ));
        }
        self.bank = bank as u8;
        self.offset = offset as u16;
        self.prev_extend = false;
        Ok(())
    }

    fn erase(&mut self, name: &str, count: u16, line: usize) -> Result<(), AsmError> {
        let addr = self.erase_ptr;
        if count == 0 || addr as u32 + count as u32 - 1 > ERASE_LIMIT as u32 {
            return Err(err(line, AsmErrorKind::ErasableOverflow));
        }
        self.define(name, Symbol::erasable(addr), line)?;
        self.erase_ptr += count;
        Ok(())
    }

    fn statement(&mut self, line: usize, src: &SourceLine, text: &str) -> Result<(), AsmError> {
        let syntax = |m: String| err(line, AsmErrorKind::Syntax(m));
        let Some(op) = &src.operation else {
            if let Some(label) = &src.label {
                self.pending_labels.push((label.clone(), line));
            }
            return Ok(());
        };
        let op = canonical_operation(op);
        let args = &src.args;
        let literal = |t: &str| parse_number(t, line);
        // Directives that name what they define may take the name as a
        // label instead of a first argument.
        let named = |args: &[String]| -> Result<(String, Vec<String>), AsmError> {
            match (&src.label, args.split_first()) {
                (Some(label), _) => Ok((label.clone(), args.to_vec())),
                (None, Some((name, rest))) => Ok((name.clone(), rest.to_vec())),
                (None, None) => Err(syntax(format!("{op} needs a name"))),
            }
        };

        match op.as_str() {
            "ERASE" => {
                let (name, rest) = named(args)?;
                let count = match rest.as_slice() {
                    [] => 1,
                    [n] => literal(n)?,
                    _ => return Err(syntax("ERASE takes a name and a count".into())),
                };
                let count =
                    u16::try_from(count).map_err(|_| err(line, AsmErrorKind::ErasableOverflow))?;
                return self.erase(&name, count, line);
            }
            "ERASLOC" => {
                let [addr] = args.as_slice() else {
                    return Err(syntax("ERASLOC takes one address".into()));
                };
                let addr = literal(addr)?;
                if !(0o10..=ERASE_LIMIT as i64).contains(&addr) {
                    return Err(err(
                        line,
                        AsmErrorKind::OperandRange(format!("erasable {addr:o}")),
                    ));
                }
                self.erase_ptr = addr as u16;
            }
            "=" => {
                let (name, rest) = named(args)?;
                let expr = parse_expr(&rest.join(""), line)?;
                let value = self.eval_now(&expr, line)?;
                let value = encode_signed(value)
                    .ok_or_else(|| err(line, AsmErrorKind::OperandRange(format!("{value}"))))?;
                self.define(&name, Symbol::constant(value), line)?;
                return Ok(());
            }
            "SETLOC" => {
                let [bank, offset] = args.as_slice() else {
                    return Err(syntax("SETLOC takes a bank and an offset".into()));
                };
                self.set_location(literal(bank)?, literal(offset)?, line)?;
            }
            "BANK" => {
                let [bank] = args.as_slice() else {
                    return Err(syntax("BANK takes one bank number".into()));
                };
                let bank = literal(bank)?;
                let high = u8::try_from(bank)
                    .ok()
                    .and_then(|b| self.high.get(&b))
                    .copied()
                    .unwrap_or(0);
                self.set_location(bank, high as i64, line)?;
            }
            _ => {}
        }
        if matches!(op.as_str(), "ERASLOC" | "SETLOC" | "BANK") {
            if let Some(label) = &src.label {
                self.pending_labels.push((label.clone(), line));
            }
            return Ok(());
        }

        // Everything below emits words; labels bind to the first of them.
        if let Some(label) = &src.label {
            self.pending_labels.push((label.clone(), line));
        }
        let emit = match op.as_str() {
            "OCT" | "DEC" => {
                if args.is_empty() {
                    return Err(syntax(format!("{op} needs a value")));
                }
                let words = args
                    .iter()
                    .map(|a| {
                        let (negative, digits) = match a.strip_prefix('-') {
                            Some(d) => (true, d),
                            None => (false, a.as_str()),
                        };
                        let digits = if op == "DEC" && !digits.ends_with(['D', 'd']) {
                            format!("{digits}D")
                        } else {
                            digits.to_string()
                        };
                        let magnitude = literal(&digits)?;
                        let value = if negative { -magnitude } else { magnitude };
                        let fits = if op == "OCT" && !negative {
                            magnitude <= DATA_MASK as i64
                        } else {
                            magnitude <= 0o37777
                        };
                        if !fits {
                            return Err(err(line, AsmErrorKind::OperandRange(a.clone())));
                        }
                        Ok(if negative || op == "DEC" {
                            SignedValue {
                                negative,
                                magnitude: magnitude as u16,
                            }
                            .encode()
                        } else {
                            value as u16
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Emit::Words(words)
            }
            "ADRES" | "FCADR" => {
                let expr = parse_expr(&args.join(""), line)?;
                self.note_pool_refs(&expr, line);
                if op == "ADRES" {
                    Emit::Adres(expr)
                } else {
                    Emit::Fcadr(expr)
                }
            }
            name => {
                let mnemonic = Mnemonic::from_name(name)
                    .ok_or_else(|| err(line, AsmErrorKind::UnknownMnemonic(name.to_string())))?;
                let operand = if args.is_empty() {
                    None
                } else {
                    let expr = parse_expr(&args.join(""), line)?;
                    self.note_pool_refs(&expr, line);
                    Some(expr)
                };
                if mnemonic.is_extended() && !self.prev_extend {
                    self.bind_pending()?;
                    self.emit(line, "EXTEND", Emit::AutoExtend)?;
                }
                Emit::Instruction { mnemonic, operand }
            }
        };
        self.bind_pending()?;
        let is_extend = matches!(
            emit,
            Emit::Instruction {
                mnemonic: Mnemonic::Extend,
                ..
            }
        );
        self.emit(line, text.trim(), emit)?;
        self.prev_extend = is_extend;
        Ok(())
    }

    /// Places pooled constants after each bank's last word.
    fn place_pool(&mut self) -> Result<(), AsmError> {
        let refs = std::mem::take(&mut self.pool_refs);
        for (bank, names) in refs {
            let mut names: Vec<_> = names
                .into_iter()
                .filter(|(name, _)| self.symbols.get(name).is_none())
                .collect();
            names.sort_by_key(|(name, _)| pool_bit(name));
            for (name, line) in names {
                let offset = self.high.get(&bank).copied().unwrap_or(0);
                self.reserve(bank, offset, 1, line)?;
                let value = 1 << pool_bit(&name).expect("filtered");
                self.symbols.pool.push(PoolEntry {
                    name,
                    bank,
                    offset,
                    value,
                });
            }
        }
        Ok(())
    }
}

/// Encodes a signed literal as a one's-complement word. Non-negative values
/// may use all 15 bits.
fn encode_signed(value: i64) -> Option<u16> {
    if (0..=DATA_MASK as i64).contains(&value) {
        Some(value as u16)
    } else {
        SignedValue::from_i32(i32::try_from(value).ok()?).map(SignedValue::encode)
    }
}

struct Resolver<'a> {
    layout: &'a Layout<'a>,
}

struct Value {
    number: i64,
    /// Bank of the fixed symbol the expression is based on.
    bank: Option<u8>,
}

impl Resolver<'_> {
    fn eval(&self, expr: &Expr, bank: u8, line: usize) -> Result<Value, AsmError> {
        let mut number = 0;
        let mut base_bank = None;
        for (sign, term) in &expr.terms {
            number += sign
                * match term {
                    Term::Number(n) => *n,
                    Term::Symbol(s) => {
                        let symbol = self.layout.lookup(s).or_else(|| {
                            self.layout
                                .symbols
                                .pool
                                .iter()
                                .find(|p| p.bank == bank && p.name == *s)
                                .map(|p| Symbol::fixed(p.bank, p.offset))
                        });
                        let symbol = symbol
                            .ok_or_else(|| err(line, AsmErrorKind::UndefinedSymbol(s.clone())))?;
                        if symbol.kind == SymbolKind::Fixed && *sign > 0 {
                            base_bank = symbol.bank;
                        }
                        symbol.value as i64
                    }
                };
        }
        Ok(Value {
            number,
            bank: base_bank,
        })
    }

    fn word(&self, p: &Planned) -> Result<u16, AsmError> {
        let range = |m: String| err(p.line, AsmErrorKind::OperandRange(m));
        match &p.emit {
            Emit::AutoExtend => Ok(Instruction::new(Mnemonic::Extend, 0)
                .expect("valid")
                .encode()),
            Emit::Words(_) => unreachable!("handled by caller"),
            Emit::Adres(expr) => {
                let v = self.eval(expr, p.bank, p.line)?;
                if !(0..=0o7777).contains(&v.number) {
                    return Err(range(format!("address {:o}", v.number)));
                }
                Ok(v.number as u16)
            }
            Emit::Fcadr(expr) => {
                let v = self.eval(expr, p.bank, p.line)?;
                let bank = v
                    .bank
                    .ok_or_else(|| range("FCADR needs a fixed address".into()))?;
                let offset = v.number - FIXED_WINDOW_BASE as i64;
                if bank >= 0o40 || !(0..BANK_WORDS as i64).contains(&offset) {
                    return Err(range(format!("FCADR of bank {bank:o} offset {offset:o}")));
                }
                Ok((bank as u16) << 10 | offset as u16)
            }
            Emit::Instruction { mnemonic, operand } => {
                let value = match operand {
                    Some(expr) => {
                        let v = self.eval(expr, p.bank, p.line)?;
                        if let Some(b) = v.bank.filter(|&b| b != p.bank) {
                            return Err(range(format!(
                                "fixed bank {b:o} is not visible from bank {:o}",
                                p.bank
                            )));
                        }
                        if !(0..=0o7777).contains(&v.number) {
                            return Err(range(format!("{mnemonic} {:o}", v.number)));
                        }
                        v.number as u16
                    }
                    None if mnemonic.operand_kind() == crate::cpu::OperandKind::None => 0,
                    None => {
                        return Err(err(
                            p.line,
                            AsmErrorKind::Syntax(format!("{mnemonic} needs an operand")),
                        ))
                    }
                };
                if operand.is_some() && mnemonic.operand_kind() == crate::cpu::OperandKind::None {
                    return Err(err(
                        p.line,
                        AsmErrorKind::Syntax(format!("{mnemonic} takes no operand")),
                    ));
                }
                Instruction::new(*mnemonic, value)
                    .map(Instruction::encode)
                    .map_err(|e| range(e.to_string()))
            }
        }
    }
}

/// Assembles source text against the default manifest.
pub fn assemble_str(text: &str) -> Result<Assembly, AsmError> {
    assemble(&SourceProgram::parse(text), &Manifest::default())
}

pub fn assemble(program: &SourceProgram, manifest: &Manifest) -> Result<Assembly, AsmError> {
    let mut layout = Layout::new(manifest);
    for (i, src) in program.lines.iter().enumerate() {
        layout.statement(i + 1, src, &src.to_string())?;
    }
    layout.bind_pending()?;
    layout.place_pool()?;

    let resolver = Resolver { layout: &layout };
    let mut banks: BTreeMap<u8, Vec<Word>> = BTreeMap::new();
    let mut listing = Vec::new();
    for p in &layout.planned {
        let words = match &p.emit {
            Emit::Words(words) => words.clone(),
            _ => vec![resolver.word(p)?],
        };
        let bank = banks
            .entry(p.bank)
            .or_insert_with(|| vec![Word::ZERO; BANK_WORDS]);
        for (i, &w) in words.iter().enumerate() {
            let offset = p.offset + i as u16;
            bank[offset as usize] = Word::new(w);
            listing.push(ListingRow {
                location: Some((p.bank, offset)),
                word: Some(w),
                line: Some(p.line),
                source: if matches!(p.emit, Emit::AutoExtend) {
                    "EXTEND".to_string()
                } else {
                    p.source.clone()
                },
            });
        }
    }
    for entry in &layout.symbols.pool {
        let bank = banks
            .entry(entry.bank)
            .or_insert_with(|| vec![Word::ZERO; BANK_WORDS]);
        bank[entry.offset as usize] = Word::new(entry.value);
        listing.push(ListingRow {
            location: Some((entry.bank, entry.offset)),
            word: Some(entry.value),
            line: None,
            source: format!("{} OCT {:o}", entry.name, entry.value),
        });
    }
    let emitted: BTreeSet<usize> = layout.planned.iter().map(|p| p.line).collect();
    for (i, src) in program.lines.iter().enumerate() {
        if !emitted.contains(&(i + 1)) && !src.is_blank() {
            listing.push(ListingRow {
                location: None,
                word: None,
                line: Some(i + 1),
                source: src.to_string(),
            });
        }
    }
    listing.sort_by_key(|r| (r.line.is_none(), r.line));

    let mut image = RopeImage::new();
    for (bank, words) in banks {
        image
            .insert_bank(bank, words)
            .expect("bank ids and sizes are checked during layout");
    }
    Ok(Assembly {
        image,
        symbols: layout.symbols,
        listing,
    })
}
