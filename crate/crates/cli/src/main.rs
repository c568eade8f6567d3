mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quipu_core::filtration::{run_filtration, CandidateOrder, FiltrationConfig, FiltrationResult, ResultDocument};
use quipu_core::quipu::{alpha_within, Quipu, QuipuDocument};
use quipu_core::tas_core::grow_max;
use quipu_core::{Tas, Window};
use serde_json::json;

const EXIT_USAGE: u8 = 1;
const EXIT_GRID: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;
const EXIT_NOT_CONFLUENT: u8 = 4;
const EXIT_MISMATCH: u8 = 5;

/// Quipu construction and window simulation for temperature-1 tile systems.
#[derive(Parser)]
#[command(name = "quipu", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the filtration and write the quipu document.
    Build {
        tas: PathBuf,
        /// Half-width of the square window [-N,N]².
        #[arg(long, default_value_t = 20)]
        window: i64,
        /// Extra growth band around the window; defaults to max(8, cap).
        #[arg(long)]
        margin: Option<i64>,
        /// Largest |m|+|p| tried.
        #[arg(long, default_value_t = 12)]
        cap: usize,
        #[arg(long, default_value = "SEWN")]
        order: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Grow the window assembly and optionally draw it.
    Simulate {
        tas: PathBuf,
        #[arg(long, default_value_t = 20)]
        window: i64,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Compare a quipu document against the window assembly.
    Verify {
        tas: PathBuf,
        quipu: PathBuf,
        #[arg(long, default_value_t = 20)]
        window: i64,
    },
    /// Look for two tiles competing for one position.
    CheckConfluence {
        tas: PathBuf,
        #[arg(long, default_value_t = 20)]
        window: i64,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn load_tas(path: &Path) -> Result<Tas, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    Tas::from_json(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn window(n: i64, margin: i64) -> Result<Window, Failure> {
    if n < 1 {
        return Err(Failure("--window must be at least 1".into()));
    }
    Ok(Window::square(n).with_margin(margin))
}

fn build(
    tas: &Path,
    n: i64,
    margin: Option<i64>,
    cap: usize,
    order: &str,
    out: Option<&Path>,
    dot: Option<&Path>,
) -> Result<u8, Failure> {
    if cap < 2 {
        return Err(Failure("--cap must be at least 2".into()));
    }
    let tas = load_tas(tas)?;
    let margin = margin.unwrap_or_else(|| 8.max(cap as i64));
    let config = FiltrationConfig { window: window(n, margin)?, order: CandidateOrder::parse(order, cap)? };
    let run = run_filtration(&tas, &config);
    let doc = ResultDocument::new(&run, &tas, &config);
    write_or_print(out, &serde_json::to_string_pretty(&doc)?)?;
    if let (Some(path), Some(q)) = (dot, run.result.quipu()) {
        fs::write(path, q.to_dot(&tas)).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    }
    Ok(match run.result {
        FiltrationResult::Halt(_) => 0,
        FiltrationResult::Grid { .. } => EXIT_GRID,
        FiltrationResult::Inconclusive { .. } => EXIT_INCONCLUSIVE,
        FiltrationResult::NotConfluent(_) => EXIT_NOT_CONFLUENT,
    })
}

fn simulate(tas: &Path, n: i64, svg_path: Option<&Path>) -> Result<u8, Failure> {
    let tas = load_tas(tas)?;
    let w = window(n, Window::DEFAULT_MARGIN)?;
    match grow_max(&tas, &w) {
        Ok(asm) => {
            if let Some(p) = svg_path {
                fs::write(p, svg::render(&tas, &asm, &w)).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            }
            let tiles: Vec<_> = asm.tiles.iter().map(|(p, t)| json!({"point": p, "tile": tas.name(*t)})).collect();
            println!("{}", serde_json::to_string_pretty(&json!({"window": w, "count": tiles.len(), "tiles": tiles}))?);
            Ok(0)
        }
        Err(witness) => {
            println!("{}", serde_json::to_string(&witness)?);
            Ok(EXIT_NOT_CONFLUENT)
        }
    }
}

fn read_quipu(path: &Path, tas: &Tas) -> Result<Quipu, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let doc: QuipuDocument = match serde_json::from_str::<ResultDocument>(&text) {
        Ok(r) => r.quipu.ok_or_else(|| Failure(format!("{}: document has no quipu", path.display())))?,
        Err(_) => serde_json::from_str(&text)?,
    };
    Ok(Quipu::from_document(&doc, tas)?)
}

fn verify(tas_path: &Path, quipu: &Path, n: i64) -> Result<u8, Failure> {
    let tas = load_tas(tas_path)?;
    let q = read_quipu(quipu, &tas)?;
    let w = window(n, Window::DEFAULT_MARGIN)?;
    let alpha = match grow_max(&tas, &w) {
        Ok(a) => a,
        Err(witness) => {
            println!("{}", serde_json::to_string(&json!({"equal": false, "not_confluent": witness}))?);
            return Ok(EXIT_NOT_CONFLUENT);
        }
    };
    let mine = alpha_within(&q, &w)?;
    let missing: Vec<_> = alpha.tiles.keys().filter(|p| mine.get(**p).is_none()).collect();
    let extra: Vec<_> = mine.tiles.keys().filter(|p| alpha.get(**p).is_none()).collect();
    let mismatched: Vec<_> =
        mine.tiles.iter().filter(|(p, t)| alpha.get(**p).is_some_and(|u| u != **t)).map(|(p, _)| p).collect();
    let equal = missing.is_empty() && extra.is_empty() && mismatched.is_empty();
    let report = json!({
        "equal": equal,
        "window": w,
        "assembly_tiles": alpha.len(),
        "quipu_tiles": mine.len(),
        "missing": missing,
        "extra": extra,
        "mismatched": mismatched,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if equal { 0 } else { EXIT_MISMATCH })
}

fn check_confluence(tas: &Path, n: i64) -> Result<u8, Failure> {
    let tas = load_tas(tas)?;
    match grow_max(&tas, &window(n, Window::DEFAULT_MARGIN)?) {
        Ok(_) => {
            println!("{}", json!({"confluent_in_window": true}));
            Ok(0)
        }
        Err(witness) => {
            println!("{}", serde_json::to_string(&witness)?);
            Ok(EXIT_NOT_CONFLUENT)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Build { tas, window, margin, cap, order, out, dot } => {
            build(tas, *window, *margin, *cap, order, out.as_deref(), dot.as_deref())
        }
        Command::Simulate { tas, window, svg } => simulate(tas, *window, svg.as_deref()),
        Command::Verify { tas, quipu, window } => verify(tas, quipu, *window),
        Command::CheckConfluence { tas, window } => check_confluence(tas, *window),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("quipu: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
