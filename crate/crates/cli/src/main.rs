use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use agc_core::asm::{assemble, disassemble, SourceProgram, SymbolTable};
use agc_core::cpu::{Cpu, RunOutcome};
use agc_core::executive::{serve, ExecConfig, Executive, ServeConfig, VerbNounTable};
use agc_core::manifest::Manifest;
use agc_core::memory::{ErasableBacking, MemorySystem};
use agc_core::rope::{rope_from_csv, rope_to_csv, RopeError, RopeImage};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "agc", version, about = "Block II guidance computer toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a source file into .rope, .sym and .lst files.
    Asm {
        source: PathBuf,
        /// Output path stem; defaults to the source path without extension.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Channel manifest; the built-in one is used otherwise.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Run a rope image and print the outcome.
    Run(RunArgs),
    /// Run a rope image, streaming one trace line per instruction.
    Trace(RunArgs),
    /// Convert between .rope images and weave CSV (direction from the input extension).
    Weave { input: PathBuf, output: PathBuf },
    /// Print assembly source recovered from a rope image.
    Disasm {
        rope: PathBuf,
        /// Symbol table written by `asm`, for labels.
        #[arg(long)]
        sym: Option<PathBuf>,
    },
    /// Serve the DSKY line protocol over TCP.
    Serve {
        rope: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7019")]
        listen: String,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Verb, noun and program table.
        #[arg(long)]
        verbs: Option<PathBuf>,
        /// Directory receiving restart dumps.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
        /// Emulated cycles per second.
        #[arg(long, default_value_t = agc_core::executive::CYCLES_PER_SECOND)]
        rate: u64,
        #[arg(long, overrides_with = "no_strict_parity")]
        strict_parity: bool,
        #[arg(long)]
        no_strict_parity: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    rope: PathBuf,
    /// Stop after this many cycles.
    #[arg(long, default_value_t = 1_000_000)]
    limit: u64,
    /// Raise CorruptWord on bad parity (the default).
    #[arg(long, overrides_with = "no_strict_parity")]
    strict_parity: bool,
    /// Ignore parity on reads.
    #[arg(long)]
    no_strict_parity: bool,
    /// Stop before executing this octal address. Repeatable.
    #[arg(long = "break", value_parser = parse_octal)]
    breakpoints: Vec<u16>,
    /// Trace destination: a file path or `-` for stdout.
    #[arg(long)]
    trace: Option<String>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn parse_octal(s: &str) -> Result<u16, String> {
    u16::from_str_radix(s, 8)
        .ok()
        .filter(|&v| v < 0o10000)
        .ok_or_else(|| format!("{s:?} is not a 12-bit octal address"))
}

/// A failure with its error class and exit code.
struct Failure {
    class: String,
    detail: String,
    code: u8,
}

impl Failure {
    fn new(class: &str, detail: impl ToString, code: u8) -> Failure {
        Failure { class: class.into(), detail: detail.to_string(), code }
    }

    fn io(path: &Path, err: io::Error) -> Failure {
        Failure::new("IoError", format!("{}: {err}", path.display()), 5)
    }
}

fn rope_failure(path: &Path, err: RopeError) -> Failure {
    let class = match err {
        RopeError::BadImage(_) | RopeError::CorruptWord { .. } => "BadImage",
        RopeError::TooManyLines { .. } => "TooManyLines",
        RopeError::WidthMismatch { .. } => "WidthMismatch",
        RopeError::OutOfGrid { .. } => "OutOfGrid",
        RopeError::Csv(_) => "BadCsv",
    };
    Failure::new(class, format!("{}: {err}", path.display()), 5)
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::io(path, e))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

fn load_manifest(path: Option<&Path>) -> Result<Manifest, Failure> {
    match path {
        None => Ok(Manifest::default()),
        Some(p) => Manifest::parse(&read_text(p)?).map_err(|e| Failure::new("BadManifest", e, 5)),
    }
}

fn load_rope(path: &Path) -> Result<RopeImage, Failure> {
    RopeImage::from_bytes(&read(path)?).map_err(|e| rope_failure(path, e))
}

fn machine(rope: &Path, manifest: &Manifest, strict: bool) -> Result<Cpu, Failure> {
    let image = load_rope(rope)?;
    let mut mem = MemorySystem::new(manifest, ErasableBacking::Array);
    mem.load_rope(&image).map_err(|e| Failure::new("BadImage", e, 5))?;
    mem.set_strict_parity(strict);
    Ok(Cpu::new(mem))
}

fn cmd_asm(source: &Path, out: Option<&Path>, manifest: Option<&Path>) -> Result<(), Failure> {
    let manifest = load_manifest(manifest)?;
    let program = SourceProgram::parse(&read_text(source)?);
    let assembly = assemble(&program, &manifest).map_err(|e| Failure::new(e.class(), e, 3))?;
    let stem = out.map(Path::to_path_buf).unwrap_or_else(|| source.with_extension(""));
    write(&stem.with_extension("rope"), assembly.image.to_bytes())?;
    write(&stem.with_extension("sym"), assembly.symbols.to_text())?;
    write(&stem.with_extension("lst"), assembly.listing_text())?;
    Ok(())
}

fn outcome_json(outcome: &RunOutcome) -> serde_json::Value {
    let r = outcome.registers;
    json!({
        "outcome": outcome.reason.name(),
        "cycles": outcome.cycles,
        "z": format!("{:04o}", r.z),
        "a": format!("{:05o}", r.a),
        "l": format!("{:05o}", r.l),
        "q": format!("{:05o}", r.q),
        "fb": format!("{:02o}", r.fb),
        "eb": format!("{:o}", r.eb),
        "alarm": outcome.alarm.as_ref().map(|e| json!({"class": e.class(), "detail": e.to_string()})),
    })
}

fn cmd_run(args: &RunArgs, trace_default: bool) -> Result<(), Failure> {
    let manifest = load_manifest(args.manifest.as_deref())?;
    let mut cpu = machine(&args.rope, &manifest, !args.no_strict_parity)?;
    let breakpoints: BTreeSet<u16> = args.breakpoints.iter().copied().collect();

    let target = args.trace.clone().or_else(|| trace_default.then(|| "-".to_string()));
    let mut sink: Option<Box<dyn Write>> = match target.as_deref() {
        None => None,
        Some("-") => Some(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::io(Path::new(path), e))?;
            Some(Box::new(BufWriter::new(file)))
        }
    };
    let mut trace_error = None;
    let outcome = cpu.run_with(args.limit, &breakpoints, |report| {
        if let Some(out) = sink.as_mut() {
            if let Err(e) = writeln!(out, "{}", report.trace_line()) {
                trace_error.get_or_insert(e);
            }
        }
    });
    if let Some(mut out) = sink {
        if let Err(e) = out.flush() {
            trace_error.get_or_insert(e);
        }
    }
    if let Some(e) = trace_error {
        return Err(Failure::new("IoError", format!("trace: {e}"), 5));
    }

    if !trace_default {
        println!("{}", outcome_json(&outcome));
    }
    match &outcome.alarm {
        Some(err) => Err(Failure::new(err.class(), err, 4)),
        None => Ok(()),
    }
}

fn cmd_weave(input: &Path, output: &Path) -> Result<(), Failure> {
    let is_csv = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let image = rope_from_csv(&read_text(input)?).map_err(|e| rope_failure(input, e))?;
        write(output, image.to_bytes())
    } else {
        write(output, rope_to_csv(&load_rope(input)?))
    }
}

fn cmd_disasm(rope: &Path, sym: Option<&Path>) -> Result<(), Failure> {
    let image = load_rope(rope)?;
    let symbols = match sym {
        Some(p) => Some(SymbolTable::from_text(&read_text(p)?).map_err(|e| Failure::new(e.class(), e, 5))?),
        None => None,
    };
    print!("{}", disassemble(&image, symbols.as_ref()));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_serve(
    rope: &Path,
    listen: &str,
    manifest: Option<&Path>,
    verbs: Option<&Path>,
    dump_dir: Option<PathBuf>,
    rate: u64,
    strict: bool,
) -> Result<(), Failure> {
    let manifest = load_manifest(manifest)?;
    let cpu = machine(rope, &manifest, strict)?;
    let table = match verbs {
        Some(p) => VerbNounTable::parse(&read_text(p)?).map_err(|e| Failure::new("BadVerbTable", e, 5))?,
        None => VerbNounTable::default(),
    };
    let config = ExecConfig { table, dump_dir, ..ExecConfig::default() };
    let exec = Executive::new(cpu, manifest, config);
    let serve_config = ServeConfig { cycles_per_second: rate, ..ServeConfig::default() };
    let handle = serve(exec, listen, serve_config).map_err(|e| Failure::new("IoError", format!("{listen}: {e}"), 5))?;
    eprintln!("{}", json!({"listening": handle.local_addr().to_string()}));
    handle.wait();
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Asm { source, out, manifest } => cmd_asm(source, out.as_deref(), manifest.as_deref()),
        Command::Run(args) => cmd_run(args, false),
        Command::Trace(args) => cmd_run(args, true),
        Command::Weave { input, output } => cmd_weave(input, output),
        Command::Disasm { rope, sym } => cmd_disasm(rope, sym.as_deref()),
        Command::Serve { rope, listen, manifest, verbs, dump_dir, rate, strict_parity: _, no_strict_parity } => {
            cmd_serve(rope, listen, manifest.as_deref(), verbs.as_deref(), dump_dir.clone(), *rate, !no_strict_parity)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({"error": f.class, "detail": f.detail}));
            ExitCode::from(f.code)
        }
    }
}
