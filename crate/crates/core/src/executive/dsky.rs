//! DSKY lamps, digit fields and the key-entry state machine.
//!
//! The state machine only edits the display and reports completed entries
//! as [`Command`]s; the executive decides what they mean.

use std::fmt;

use crate::word::SignedValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lamp {
    Standby,
    Uplink,
    ProgAlarm,
    Restart,
    EngineOn,
    OprErr,
    KeyRel,
    CompActy,
    Temp,
    NoAtt,
}

impl Lamp {
    pub const ALL: [Lamp; 10] = [
        Lamp::Standby,
        Lamp::Uplink,
        Lamp::ProgAlarm,
        Lamp::Restart,
        Lamp::EngineOn,
        Lamp::OprErr,
        Lamp::KeyRel,
        Lamp::CompActy,
        Lamp::Temp,
        Lamp::NoAtt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Lamp::Standby => "STANDBY",
            Lamp::Uplink => "UPLINK",
            Lamp::ProgAlarm => "PROG-ALARM",
            Lamp::Restart => "RESTART",
            Lamp::EngineOn => "ENGINE-ON",
            Lamp::OprErr => "OPR-ERR",
            Lamp::KeyRel => "KEY-REL",
            Lamp::CompActy => "COMP-ACTY",
            Lamp::Temp => "TEMP",
            Lamp::NoAtt => "NO-ATT",
        }
    }

    /// Lamps cleared by RSET.
    pub fn is_alarm(self) -> bool {
        matches!(self, Lamp::ProgAlarm | Lamp::Restart | Lamp::OprErr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Key {
    Digit(u8),
    Verb,
    Noun,
    Entr,
    Clr,
    Rset,
    Plus,
    Minus,
    KeyRel,
}

impl Key {
    pub const ALL: [Key; 18] = [
        Key::Digit(0),
        Key::Digit(1),
        Key::Digit(2),
        Key::Digit(3),
        Key::Digit(4),
        Key::Digit(5),
        Key::Digit(6),
        Key::Digit(7),
        Key::Digit(8),
        Key::Digit(9),
        Key::Verb,
        Key::Noun,
        Key::Entr,
        Key::Clr,
        Key::Rset,
        Key::Plus,
        Key::Minus,
        Key::KeyRel,
    ];

    /// Wire code: `V N E C R + -`, a digit, or `K` for KEY REL.
    pub fn from_code(code: &str) -> Option<Key> {
        Some(match code {
            "V" => Key::Verb,
            "N" => Key::Noun,
            "E" => Key::Entr,
            "C" => Key::Clr,
            "R" => Key::Rset,
            "+" => Key::Plus,
            "-" => Key::Minus,
            "K" => Key::KeyRel,
            d if d.len() == 1 && d.as_bytes()[0].is_ascii_digit() => {
                Key::Digit(d.as_bytes()[0] - b'0')
            }
            _ => return None,
        })
    }

    pub fn code(self) -> String {
        match self {
            Key::Digit(d) => d.to_string(),
            Key::Verb => "V".into(),
            Key::Noun => "N".into(),
            Key::Entr => "E".into(),
            Key::Clr => "C".into(),
            Key::Rset => "R".into(),
            Key::Plus => "+".into(),
            Key::Minus => "-".into(),
            Key::KeyRel => "K".into(),
        }
    }

    /// Five-bit keyboard code latched into the key channel.
    pub fn channel_code(self) -> u16 {
        match self {
            Key::Digit(0) => 0o20,
            Key::Digit(d) => d as u16,
            Key::Verb => 0o21,
            Key::Rset => 0o22,
            Key::KeyRel => 0o31,
            Key::Plus => 0o32,
            Key::Minus => 0o33,
            Key::Entr => 0o34,
            Key::Clr => 0o36,
            Key::Noun => 0o37,
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

/// How a noun's registers are shown and entered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Octal,
    Decimal,
}

impl Format {
    /// Sign plus five digits.
    pub fn render(self, pattern: u16) -> String {
        let v = SignedValue::decode(pattern);
        let sign = if v.negative { '-' } else { '+' };
        match self {
            Format::Octal => format!("{sign}{:05o}", v.magnitude),
            Format::Decimal => format!("{sign}{:05}", v.magnitude),
        }
    }

    fn accepts(self, digit: u8) -> bool {
        match self {
            Format::Octal => digit < 8,
            Format::Decimal => digit < 10,
        }
    }
}

/// What a data entry is filling in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataTarget {
    /// Values for the noun's registers, one per address.
    Load {
        noun: u8,
        registers: usize,
        format: Format,
        values: Vec<u16>,
    },
    /// A two-digit program number.
    Program,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum EntryState {
    #[default]
    Idle,
    Verb(String),
    Noun(String),
    Data {
        target: DataTarget,
        negative: Option<bool>,
        digits: String,
    },
}

impl EntryState {
    pub fn is_idle(&self) -> bool {
        *self == EntryState::Idle
    }
}

/// A completed entry for the executive to act on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Dispatch { verb: u8, noun: Option<u8> },
    Load { noun: u8, values: Vec<u16> },
    ChangeProgram(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DskyState {
    lamps: [bool; 10],
    pub prog: Option<u8>,
    pub verb: Option<u8>,
    pub noun: Option<u8>,
    /// Register contents as last committed by the executive.
    pub registers: [Option<String>; 3],
    pub entry: EntryState,
}

fn two_digits(d: &str) -> Option<u8> {
    (d.len() == 2).then(|| d.parse().ok()).flatten()
}

fn field(v: Option<u8>) -> String {
    v.map_or(String::new(), |v| format!("{v:02}"))
}

impl DskyState {
    pub fn lamp(&self, lamp: Lamp) -> bool {
        self.lamps[lamp as usize]
    }

    pub fn set_lamp(&mut self, lamp: Lamp, on: bool) {
        self.lamps[lamp as usize] = on;
    }

    pub fn lamps(&self) -> impl Iterator<Item = (Lamp, bool)> + '_ {
        Lamp::ALL.into_iter().map(|l| (l, self.lamp(l)))
    }

    fn operator_error(&mut self) {
        self.set_lamp(Lamp::OprErr, true);
    }

    /// PROG field as displayed.
    pub fn prog_text(&self) -> String {
        match &self.entry {
            EntryState::Data {
                target: DataTarget::Program,
                digits,
                ..
            } => digits.clone(),
            _ => field(self.prog),
        }
    }

    pub fn verb_text(&self) -> String {
        match &self.entry {
            EntryState::Verb(d) => d.clone(),
            _ => field(self.verb),
        }
    }

    pub fn noun_text(&self) -> String {
        match &self.entry {
            EntryState::Noun(d) => d.clone(),
            _ => field(self.noun),
        }
    }

    /// R1-R3 as displayed, including a value being keyed in.
    pub fn register_text(&self, index: usize) -> String {
        if let EntryState::Data {
            target: DataTarget::Load { values, .. },
            negative,
            digits,
        } = &self.entry
        {
            if index == values.len() {
                let sign = match negative {
                    Some(true) => "-",
                    Some(false) => "+",
                    None => "",
                };
                return format!("{sign}{digits}");
            }
        }
        self.registers[index].clone().unwrap_or_default()
    }

    /// Starts collecting values for a load verb.
    pub fn begin_load(&mut self, noun: u8, registers: usize, format: Format) {
        self.entry = EntryState::Data {
            target: DataTarget::Load {
                noun,
                registers,
                format,
                values: Vec::new(),
            },
            negative: None,
            digits: String::new(),
        };
    }

    pub fn begin_program_entry(&mut self) {
        self.entry = EntryState::Data {
            target: DataTarget::Program,
            negative: None,
            digits: String::new(),
        };
    }

    /// Advances the entry state machine by one key.
    pub fn key(&mut self, key: Key) -> Option<Command> {
        match key {
            Key::Clr => {
                self.entry = EntryState::Idle;
                return None;
            }
            Key::Rset => {
                for lamp in Lamp::ALL.into_iter().filter(|l| l.is_alarm()) {
                    self.set_lamp(lamp, false);
                }
                return None;
            }
            Key::KeyRel => {
                self.set_lamp(Lamp::KeyRel, false);
                return None;
            }
            Key::Verb => {
                self.entry = EntryState::Verb(String::new());
                return None;
            }
            Key::Noun if !matches!(self.entry, EntryState::Verb(_)) => {
                self.entry = EntryState::Noun(String::new());
                return None;
            }
            _ => {}
        }

        match std::mem::take(&mut self.entry) {
            EntryState::Idle => {
                self.operator_error();
                None
            }
            EntryState::Verb(mut d) => match key {
                Key::Digit(n) if d.len() < 2 => {
                    d.push((b'0' + n) as char);
                    self.entry = EntryState::Verb(d);
                    None
                }
                Key::Noun | Key::Entr => match two_digits(&d) {
                    Some(verb) => {
                        self.verb = Some(verb);
                        if key == Key::Noun {
                            self.entry = EntryState::Noun(String::new());
                            None
                        } else {
                            Some(Command::Dispatch {
                                verb,
                                noun: self.noun,
                            })
                        }
                    }
                    None => {
                        self.operator_error();
                        None
                    }
                },
                _ => {
                    self.operator_error();
                    self.entry = EntryState::Verb(d);
                    None
                }
            },
            EntryState::Noun(mut d) => match key {
                Key::Digit(n) if d.len() < 2 => {
                    d.push((b'0' + n) as char);
                    self.entry = EntryState::Noun(d);
                    None
                }
                Key::Entr => match (two_digits(&d), self.verb) {
                    (Some(noun), Some(verb)) => {
                        self.noun = Some(noun);
                        Some(Command::Dispatch {
                            verb,
                            noun: Some(noun),
                        })
                    }
                    _ => {
                        self.operator_error();
                        None
                    }
                },
                _ => {
                    self.operator_error();
                    self.entry = EntryState::Noun(d);
                    None
                }
            },
            EntryState::Data {
                target,
                negative,
                digits,
            } => self.data_key(key, target, negative, digits),
        }
    }

    fn data_key(
        &mut self,
        key: Key,
        mut target: DataTarget,
        mut negative: Option<bool>,
        mut digits: String,
    ) -> Option<Command> {
        let (max_digits, format, signed) = match &target {
            DataTarget::Load { format, .. } => (5, *format, true),
            DataTarget::Program => (2, Format::Decimal, false),
        };
        match key {
            Key::Plus | Key::Minus if signed && negative.is_none() && digits.is_empty() => {
                negative = Some(key == Key::Minus);
            }
            Key::Digit(n) if digits.len() < max_digits && format.accepts(n) => {
                digits.push((b'0' + n) as char);
            }
            Key::Entr if !digits.is_empty() => match &mut target {
                DataTarget::Program => {
                    let prog = digits.parse().expect("digits");
                    self.prog = Some(prog);
                    return Some(Command::ChangeProgram(prog));
                }
                DataTarget::Load {
                    noun,
                    registers,
                    format,
                    values,
                } => {
                    let radix = if *format == Format::Octal { 8 } else { 10 };
                    let magnitude = u16::from_str_radix(&digits, radix).expect("digits");
                    let value = match negative {
                        None if *format == Format::Octal => Some(magnitude),
                        _ if magnitude > 0o37777 => None,
                        n => Some(
                            SignedValue {
                                negative: n == Some(true),
                                magnitude,
                            }
                            .encode(),
                        ),
                    };
                    let Some(value) = value else {
                        self.operator_error();
                        self.entry = EntryState::Data {
                            target,
                            negative: None,
                            digits: String::new(),
                        };
                        return None;
                    };
                    values.push(value);
                    if values.len() == *registers {
                        let (noun, values) = (*noun, std::mem::take(values));
                        return Some(Command::Load { noun, values });
                    }
                    negative = None;
                    digits.clear();
                }
            },
            _ => self.operator_error(),
        }
        self.entry = EntryState::Data {
            target,
            negative,
            digits,
        };
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn press(d: &mut DskyState, keys: &str) -> Vec<Command> {
        keys.split_whitespace()
            .filter_map(|k| d.key(Key::from_code(k).expect("key code")))
            .collect()
    }

    #[test]
    fn verb_noun_enter_dispatches() {
        let mut d = DskyState::default();
        let cmds = press(&mut d, "V 1 6 N 3 6 E");
        assert_eq!(
            cmds,
            vec![Command::Dispatch {
                verb: 16,
                noun: Some(36)
            }]
        );
        assert_eq!((d.verb_text(), d.noun_text()), ("16".into(), "36".into()));
        assert!(d.entry.is_idle());
    }

    #[test]
    fn verb_enter_keeps_previous_noun() {
        let mut d = DskyState::default();
        let cmds = press(&mut d, "V 3 5 E");
        assert_eq!(
            cmds,
            vec![Command::Dispatch {
                verb: 35,
                noun: None
            }]
        );
    }

    #[test]
    fn verb_enter_without_digits_is_operator_error() {
        let mut d = DskyState::default();
        assert!(press(&mut d, "V E").is_empty());
        assert!(d.lamp(Lamp::OprErr));
        press(&mut d, "R");
        assert!(!d.lamp(Lamp::OprErr));
    }

    #[test]
    fn clear_restores_committed_fields() {
        let mut d = DskyState::default();
        press(&mut d, "V 1 6 N 3 6 E V 2");
        assert_eq!(d.verb_text(), "2");
        press(&mut d, "C");
        assert_eq!(d.verb_text(), "16");
    }

    #[test]
    fn load_collects_signed_values() {
        let mut d = DskyState::default();
        d.begin_load(40, 2, Format::Decimal);
        assert!(press(&mut d, "- 1 2 E").is_empty());
        assert_eq!(d.register_text(0), "");
        let cmds = press(&mut d, "+ 7 E");
        assert_eq!(
            cmds,
            vec![Command::Load {
                noun: 40,
                values: vec![0o77763, 7]
            }]
        );
    }

    #[test]
    fn octal_entry_rejects_eight() {
        let mut d = DskyState::default();
        d.begin_load(33, 1, Format::Octal);
        press(&mut d, "8");
        assert!(d.lamp(Lamp::OprErr));
        assert_eq!(
            press(&mut d, "7 7 7 7 7 E"),
            vec![Command::Load {
                noun: 33,
                values: vec![0o77777]
            }]
        );
    }

    #[test]
    fn program_entry() {
        let mut d = DskyState::default();
        d.begin_program_entry();
        assert_eq!(press(&mut d, "4 0 E"), vec![Command::ChangeProgram(40)]);
        assert_eq!(d.prog_text(), "40");
    }

    #[test]
    fn clear_from_every_state_returns_to_idle() {
        let starts: Vec<Box<dyn Fn(&mut DskyState)>> = vec![
            Box::new(|_| {}),
            Box::new(|d| d.begin_load(1, 3, Format::Octal)),
            Box::new(|d| d.begin_program_entry()),
        ];
        for start in &starts {
            for a in Key::ALL {
                for b in Key::ALL {
                    let mut d = DskyState::default();
                    start(&mut d);
                    d.key(a);
                    d.key(b);
                    d.key(Key::Clr);
                    assert!(d.entry.is_idle(), "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn render_formats() {
        assert_eq!(Format::Octal.render(0o00017), "+00017");
        assert_eq!(Format::Decimal.render(0o77776), "-00001");
        assert_eq!(Format::Decimal.render(0o00144), "+00100");
    }

    #[test]
    fn key_codes_round_trip() {
        for k in Key::ALL {
            assert_eq!(Key::from_code(&k.code()), Some(k));
        }
        assert_eq!(Key::from_code("X"), None);
    }
}
