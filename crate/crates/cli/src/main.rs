//! `diethelper`: check ingredient labels from the command line.
//!
//! Exit status: 0 compliant, 3 violations found, 2 no text (retake the
//! photo), 1 usage or any other error.

use std::io::{self, IsTerminal, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use diethelper_core::bench::{self, BenchConfig, BenchReport};
use diethelper_core::catalog::{self, read_seed, SHIPPED_SEED};
use diethelper_core::filter::{highlight_spans, mark_spans};
use diethelper_core::{
    check_label, CaptureError, Catalog, CheckError, DirStore, DocumentStore, FilterResult, LabelInput, TextFragment,
    UserProfile,
};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_RETAKE: u8 = 2;
const EXIT_VIOLATIONS: u8 = 3;

#[derive(Parser)]
#[command(name = "diethelper", version, about = "Check ingredient labels against diets")]
struct Cli {
    /// Diet seed file (TOML). Defaults to the built-in catalog.
    #[arg(long, global = true, env = "DIETHELPER_SEED")]
    seed: Option<PathBuf>,
    /// Document store directory. A catalog stored there takes precedence
    /// over the seed.
    #[arg(long, global = true, env = "DIETHELPER_STORE")]
    store: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a label read from FILE, --fragments or standard input.
    Check(CheckArgs),
    /// Validate the seed file; with --store, write it to the store.
    Seed,
    /// List the diets in the catalog.
    Diets {
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Time the automaton against the naive matcher on a generated corpus.
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct CheckArgs {
    /// Diet to follow; repeat for several.
    #[arg(long = "diet", value_name = "NAME")]
    diets: Vec<String>,
    /// Extra unwanted ingredient; repeat for several.
    #[arg(long = "custom", value_name = "INGREDIENT")]
    custom: Vec<String>,
    /// OCR fragments, one per line, joined as the scanner would.
    #[arg(long, value_name = "FILE", conflicts_with = "label")]
    fragments: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    #[arg(long, value_enum, default_value_t = Color::Auto)]
    color: Color,
    /// Label text file; standard input when omitted or "-".
    label: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long, default_value_t = BenchConfig::default().needles)]
    needles: usize,
    #[arg(long, default_value_t = BenchConfig::default().tokens)]
    tokens: usize,
    #[arg(long, default_value_t = BenchConfig::default().diets)]
    diets: usize,
    #[arg(long, default_value_t = BenchConfig::default().seed)]
    rng_seed: u64,
    #[arg(long, default_value_t = BenchConfig::default().iterations)]
    iterations: usize,
    /// Fail when the median check exceeds this many milliseconds.
    #[arg(long, value_name = "MS")]
    budget_ms: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Color {
    Auto,
    Always,
    Never,
}

#[derive(Debug)]
enum Failure {
    Retake(CheckError),
    Usage(String),
}

impl From<String> for Failure {
    fn from(msg: String) -> Self {
        Failure::Usage(msg)
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    ExitCode::from(run(cli))
}

fn run(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Check(args) => cmd_check(&cli, args),
        Command::Seed => cmd_seed(&cli),
        Command::Diets { format } => cmd_diets(&cli, *format),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Retake(err)) => {
            let code = match &err {
                CheckError::Capture(CaptureError::NoTextFound) => "no_text_found",
                _ => "empty_transcript",
            };
            let structured = matches!(&cli.command, Command::Check(a) if a.format == Format::Structured);
            if structured {
                let report = ErrorReport {
                    error: ErrorBody {
                        code,
                        message: err.to_string(),
                    },
                };
                println!("{}", serde_json::to_string(&report).expect("serializable"));
            }
            eprintln!("diethelper: {err}");
            EXIT_RETAKE
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("diethelper: {msg}");
            EXIT_ERROR
        }
    }
}

fn open_store(path: &Path) -> Result<Arc<dyn DocumentStore>, String> {
    DirStore::open(path)
        .map(|s| Arc::new(s) as Arc<dyn DocumentStore>)
        .map_err(|e| format!("cannot open store {}: {e}", path.display()))
}

fn seed_diets(cli: &Cli) -> Result<Vec<diethelper_core::Diet>, String> {
    match &cli.seed {
        Some(path) => read_seed(path).map_err(|e| e.to_string()),
        None => catalog::parse_seed(SHIPPED_SEED).map_err(|e| e.to_string()),
    }
}

/// The stored catalog when the store has one, otherwise the seed.
fn load_catalog(cli: &Cli) -> Result<Catalog, String> {
    if let Some(dir) = &cli.store {
        let catalog = Catalog::open(open_store(dir)?).map_err(|e| e.to_string())?;
        if !catalog.is_empty() {
            return Ok(catalog);
        }
    }
    Catalog::from_diets(seed_diets(cli)?).map_err(|e| e.to_string())
}

fn read_input(path: Option<&Path>) -> Result<String, String> {
    match path {
        None => read_stdin(),
        Some(p) if p == Path::new("-") => read_stdin(),
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display())),
    }
}

fn read_stdin() -> Result<String, String> {
    let mut text = String::new();
    io::stdin()
        .read_to_string(&mut text)
        .map_err(|e| format!("cannot read standard input: {e}"))?;
    Ok(text)
}

fn cmd_check(cli: &Cli, args: &CheckArgs) -> Result<u8, Failure> {
    let catalog = load_catalog(cli)?;
    for diet in &args.diets {
        if !catalog.contains(diet) {
            let known: Vec<String> = catalog.list_diets().into_iter().map(|d| d.name).collect();
            return Err(format!("unknown diet {diet:?} (known: {})", known.join(", ")).into());
        }
    }
    if let Some(bad) = args.custom.iter().find(|c| c.contains(',')) {
        return Err(format!("custom ingredient {bad:?} must not contain a comma").into());
    }
    let profile = UserProfile::ephemeral(args.diets.iter().cloned(), &args.custom);

    let input = match &args.fragments {
        Some(path) => {
            let text = read_input(Some(path))?;
            let fragments: Vec<TextFragment> = text
                .lines()
                .map(|l| TextFragment::from(l.trim_end_matches('\r')))
                .collect();
            if fragments.iter().all(TextFragment::is_blank) {
                return Err(Failure::Retake(CheckError::Capture(CaptureError::NoTextFound)));
            }
            LabelInput::Fragments(fragments)
        }
        None => LabelInput::Raw(read_input(args.label.as_deref())?),
    };

    let result = check_label(&input, &profile, &catalog).map_err(|e| {
        if e.is_retake() {
            Failure::Retake(e)
        } else {
            Failure::Usage(e.to_string())
        }
    })?;

    let mut out = io::stdout().lock();
    let written = match args.format {
        Format::Structured => writeln!(out, "{}", serde_json::to_string(&result).expect("serializable")),
        Format::Human => {
            let color = match args.color {
                Color::Always => true,
                Color::Never => false,
                Color::Auto => io::stdout().is_terminal() && std::env::var_os("NO_COLOR").is_none(),
            };
            out.write_all(render_human(&result, color).as_bytes())
        }
    };
    written.map_err(|e| format!("cannot write output: {e}"))?;
    Ok(if result.is_compliant() {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    })
}

/// Token list with violating substrings marked, then the verdict.
fn render_human(result: &FilterResult, color: bool) -> String {
    let (open, close) = if color { ("\x1b[1;31m", "\x1b[0m") } else { ("[", "]") };
    let mut s = String::new();
    for token in &result.tokens {
        match result.violation_for(token.index) {
            Some(v) => {
                let spans = highlight_spans(&token.text, v.matches.iter().map(|m| m.needle.as_str()));
                let mut diets: Vec<&str> = Vec::new();
                for m in &v.matches {
                    for d in &m.diets {
                        if !diets.contains(&d.as_str()) {
                            diets.push(d);
                        }
                    }
                }
                s.push_str(&format!(
                    "{:>4}  {}  ({})\n",
                    token.index,
                    mark_spans(&token.text, &spans, open, close),
                    diets.join(", ")
                ));
            }
            None => s.push_str(&format!("{:>4}  {}\n", token.index, token.text)),
        }
    }
    s.push('\n');
    if result.is_compliant() {
        s.push_str("No unwanted ingredients found.\n");
    } else {
        s.push_str(&format!(
            "Unwanted ingredients found in {} of {} tokens.\nViolated diets: {}\n",
            result.violations.len(),
            result.tokens.len(),
            result.violated_diets.join(", ")
        ));
    }
    s
}

fn cmd_seed(cli: &Cli) -> Result<u8, Failure> {
    let diets = seed_diets(cli)?;
    let source = cli
        .seed
        .as_ref()
        .map_or_else(|| "built-in seed".to_string(), |p| p.display().to_string());
    let count = diets.len();
    match &cli.store {
        Some(dir) => {
            let mut catalog = Catalog::open(open_store(dir)?).map_err(|e| e.to_string())?;
            let version = catalog.apply_seed(diets).map_err(|e| e.to_string())?;
            println!(
                "{source}: {count} diets written to {} (catalog version {version})",
                dir.display()
            );
        }
        None => println!("{source}: {count} diets, valid"),
    }
    Ok(EXIT_OK)
}

fn cmd_diets(cli: &Cli, format: Format) -> Result<u8, Failure> {
    let diets = load_catalog(cli)?.list_diets();
    match format {
        Format::Structured => println!("{}", serde_json::to_string(&diets).expect("serializable")),
        Format::Human => {
            let width = diets.iter().map(|d| d.name.len()).max().unwrap_or(0);
            for d in &diets {
                println!("{:<width$}  {:>4}  {}", d.name, d.ingredient_count, d.description);
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_bench(args: &BenchArgs) -> Result<u8, Failure> {
    if args.needles == 0 || args.tokens == 0 {
        return Err("--needles and --tokens must be positive".to_string().into());
    }
    let config = BenchConfig {
        needles: args.needles,
        tokens: args.tokens,
        diets: args.diets,
        seed: args.rng_seed,
        iterations: args.iterations,
    };
    let report = bench::run(&config);
    match args.format {
        Format::Structured => println!("{}", serde_json::to_string(&report).expect("serializable")),
        Format::Human => print!("{}", render_bench(&report)),
    }
    if !report.results_equal {
        eprintln!("diethelper: automaton and naive matcher disagree");
        return Ok(EXIT_ERROR);
    }
    if let Some(budget) = args.budget_ms {
        if report.check_ms > budget {
            eprintln!(
                "diethelper: median check {:.3} ms exceeds budget {budget} ms",
                report.check_ms
            );
            return Ok(EXIT_ERROR);
        }
    }
    Ok(EXIT_OK)
}

fn render_bench(r: &BenchReport) -> String {
    format!(
        "needles        {} ({} distinct) in {} rules\n\
         tokens         {} ({} with violations)\n\
         build          {:.3} ms\n\
         check          {:.3} ms median, {:.3} ms max\n\
         cold check     {:.3} ms (build + check)\n\
         naive          {:.3} ms\n\
         results equal  {}\n",
        r.needles,
        r.distinct_needles,
        r.rules,
        r.tokens,
        r.violations,
        r.build_ms,
        r.check_ms,
        r.check_max_ms,
        r.cold_check_ms,
        r.naive_ms,
        if r.results_equal { "yes" } else { "NO" },
    )
}
