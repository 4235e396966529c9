//! Command-line front end: analyze irregular classes, validate and convert
//! structure files, generate deterministic fixtures, and evaluate Wilson
//! loops.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 parse failure, 3 semantic
//! failure.

mod dot;
mod json;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use stokes_core::fixtures;
use stokes_core::reps::rep_from_sgls;
use stokes_core::scalar::rat_to_string;
use stokes_core::structures::{canonical_splitting, graded_to_stokes_ls};

use json::FileJson;

#[derive(Parser)]
#[command(name = "stokes", version, about = "Exact topological Stokes data of irregular classes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the Stokes/singular directions, levels, fission tree and
    /// Stokes quivers of a class (or of a structure's class).
    Analyze {
        /// Input file(s): irregular-class or structure JSON.
        inputs: Vec<PathBuf>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write fission tree and quiver diagrams to this DOT file.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Parallel workers for batch inputs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Validate a structure file; exits 0 iff valid.
    Validate {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compute the canonical Stokes grading of a filtered structure.
    Split {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a deterministic random fixture.
    Random {
        /// class | filtered | graded | stokes-ls | rep
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 4)]
        rank: u32,
        /// Bound on the number of levels.
        #[arg(long, default_value_t = 2)]
        level_bound: u32,
        /// Bound on the ramification of each circle.
        #[arg(long, default_value_t = 3)]
        ram_bound: u32,
        /// Genus of the surface fixtures (rep kind).
        #[arg(long, default_value_t = 0)]
        genus: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a wild Wilson loop of a representation file.
    Wilson {
        input: PathBuf,
        /// Cycle in the complete quiver, e.g. "c0s0,c1s0".
        #[arg(long)]
        cycle: String,
        /// Loop word over the generators, e.g. "h S1" ('\'' inverts).
        #[arg(long)]
        word: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

enum CmdError {
    Parse(String),
    Semantic(String),
    Io(String),
}

impl CmdError {
    fn exit_code(&self) -> u8 {
        match self {
            CmdError::Parse(_) => 2,
            CmdError::Semantic(_) | CmdError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Parse(s) => write!(f, "parse: {s}"),
            CmdError::Semantic(s) => write!(f, "semantic: {s}"),
            CmdError::Io(s) => write!(f, "io: {s}"),
        }
    }
}

fn sem(e: stokes_core::error::Error) -> CmdError {
    CmdError::Semantic(e.to_string())
}

fn read_file(path: &Path) -> Result<FileJson, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CmdError::Parse(format!("{}: {e}", path.display())))
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), CmdError> {
    use std::io::Write;
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CmdError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe downstream is not an error worth failing on
            let _ = writeln!(stdout, "{text}");
            Ok(())
        }
    }
}

fn to_pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn class_of(file: &FileJson) -> Result<stokes_core::irregular::IrregularClass, CmdError> {
    let entries = match file {
        FileJson::Class { entries, .. } => entries,
        FileJson::Filtered { class, .. }
        | FileJson::Graded { class, .. }
        | FileJson::LocalSystem { class, .. }
        | FileJson::Representation { class, .. } => class,
    };
    json::class_from_entries(entries).map_err(sem)
}

#[derive(Serialize)]
struct AnalyzeJson {
    kind: String,
    version: u32,
    input: String,
    rank: u32,
    stokes_directions: Vec<json::AngleJson>,
    singular_directions: Vec<json::AngleJson>,
    levels: Vec<String>,
    fission_degrees: Vec<usize>,
    fission_levels: Vec<String>,
    arrows: Vec<ArrowJson>,
    stokes_group_dims: Vec<StoDimJson>,
}

#[derive(Serialize)]
struct ArrowJson {
    direction: json::AngleJson,
    source: String,
    target: String,
    level: String,
}

#[derive(Serialize)]
struct StoDimJson {
    direction: json::AngleJson,
    dim: u32,
}

fn analyze_one(path: &Path, dot_path: &Option<PathBuf>) -> Result<AnalyzeJson, CmdError> {
    let file = read_file(path)?;
    let class = class_of(&file)?;
    let stokes = class.stokes_directions().map_err(sem)?;
    let singular = class.singular_directions().map_err(sem)?;
    let levels = class.levels().map_err(sem)?;
    let tree = class.fission_tree().map_err(sem)?;
    let mut arrows = Vec::new();
    let mut sto_dims = Vec::new();
    for d in &singular {
        let at = class.stokes_arrows_at(d).map_err(sem)?;
        let mut dim = 0u32;
        for a in &at {
            dim += class.mult_of(&a.source) * class.mult_of(&a.target);
            arrows.push(ArrowJson {
                direction: json::angle_json(d),
                source: a.source.label(),
                target: a.target.label(),
                level: rat_to_string(&a.level),
            });
        }
        sto_dims.push(StoDimJson {
            direction: json::angle_json(d),
            dim,
        });
    }
    if let Some(dp) = dot_path {
        let mut text = dot::fission_tree_dot(&class, &tree);
        text.push_str(&dot::quivers_dot(&class).map_err(sem)?);
        std::fs::write(dp, text).map_err(|e| CmdError::Io(format!("{}: {e}", dp.display())))?;
    }
    let mut degrees = vec![class.fiber().len()];
    degrees.extend(tree.stages.iter().map(|s| s.class.fiber().len()));
    Ok(AnalyzeJson {
        kind: "analysis".into(),
        version: json::VERSION,
        input: path.display().to_string(),
        rank: class.rank(),
        stokes_directions: stokes.iter().map(json::angle_json).collect(),
        singular_directions: singular.iter().map(json::angle_json).collect(),
        levels: levels.iter().map(rat_to_string).collect(),
        fission_degrees: degrees,
        fission_levels: tree.levels.iter().map(rat_to_string).collect(),
        arrows,
        stokes_group_dims: sto_dims,
    })
}

fn validate_one(path: &Path) -> Result<(String, json::ReportJson), CmdError> {
    let file = read_file(path)?;
    let report = match &file {
        FileJson::Class { .. } => {
            return Err(CmdError::Semantic(
                "a bare class has nothing to validate; use analyze".into(),
            ))
        }
        FileJson::Filtered { .. } => {
            let s = json::filtered_from_json(&file).map_err(sem)?;
            json::report_to_json("stokes-filtered", &s.validate().map_err(sem)?)
        }
        FileJson::Graded { .. } => {
            let s = json::graded_from_json(&file).map_err(sem)?;
            json::report_to_json("stokes-graded", &s.validate().map_err(sem)?)
        }
        FileJson::LocalSystem { .. } => {
            let s = json::sls_from_json(&file).map_err(sem)?;
            json::report_to_json("stokes-local-system", &s.validate().map_err(sem)?)
        }
        FileJson::Representation { .. } => {
            let r = json::rep_from_json(&file).map_err(sem)?;
            json::report_to_json("stokes-representation", &r.validate().map_err(sem)?)
        }
    };
    Ok((path.display().to_string(), report))
}

fn run_batch<T: Send, F>(inputs: &[PathBuf], jobs: usize, f: F) -> Vec<Result<T, CmdError>>
where
    F: Fn(&Path) -> Result<T, CmdError> + Sync,
{
    let jobs = jobs.max(1);
    if jobs == 1 || inputs.len() <= 1 {
        return inputs.iter().map(|p| f(p)).collect();
    }
    let mut results: Vec<Option<Result<T, CmdError>>> = Vec::new();
    results.resize_with(inputs.len(), || None);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<T, CmdError>>>> =
        inputs.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(inputs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= inputs.len() {
                    break;
                }
                *slots[i].lock().unwrap() = Some(f(&inputs[i]));
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker filled the slot"))
        .collect()
}

fn run(cli: Cli) -> Result<ExitCode, CmdError> {
    match cli.command {
        Command::Analyze {
            inputs,
            out,
            dot,
            jobs,
        } => {
            if inputs.is_empty() {
                return Err(CmdError::Parse("no input files".into()));
            }
            let results = run_batch(&inputs, jobs, |p| analyze_one(p, &dot));
            let mut reports = Vec::new();
            for r in results {
                reports.push(r?);
            }
            let text = if reports.len() == 1 {
                to_pretty(&reports[0])
            } else {
                to_pretty(&reports)
            };
            write_output(&out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { inputs, out, jobs } => {
            if inputs.is_empty() {
                return Err(CmdError::Parse("no input files".into()));
            }
            let results = run_batch(&inputs, jobs, validate_one);
            let mut all_valid = true;
            let mut reports = Vec::new();
            for r in results {
                let (name, rep) = r?;
                all_valid &= rep.valid;
                reports.push(serde_json::json!({ "input": name, "report": rep }));
            }
            let text = if reports.len() == 1 {
                to_pretty(&reports[0])
            } else {
                to_pretty(&reports)
            };
            write_output(&out, &text)?;
            Ok(if all_valid {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Split { input, out } => {
            let file = read_file(&input)?;
            let s = json::filtered_from_json(&file).map_err(sem)?;
            let report = s.validate().map_err(sem)?;
            if !report.is_valid() {
                eprintln!("input is not a valid Stokes filtration:");
                eprintln!("{}", to_pretty(&json::report_to_json("stokes-filtered", &report)));
                return Ok(ExitCode::from(1));
            }
            let g = canonical_splitting(&s).map_err(sem)?;
            let text = to_pretty(&json::graded_to_json(&g).map_err(sem)?);
            write_output(&out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Random {
            kind,
            rank,
            level_bound,
            ram_bound,
            genus,
            seed,
            out,
        } => {
            let bounds = fixtures::ClassBounds {
                max_rank: rank,
                max_levels: level_bound,
                max_ram: ram_bound,
            };
            let mut rng = fixtures::seeded_rng(seed);
            let file = match kind.as_str() {
                "class" => {
                    let c = fixtures::random_class(&mut rng, &bounds);
                    FileJson::Class {
                        version: json::VERSION,
                        entries: json::class_to_entries(&c),
                    }
                }
                "filtered" => {
                    let c = fixtures::random_class(&mut rng, &bounds);
                    let f = fixtures::random_filtered(&mut rng, &c).map_err(sem)?;
                    json::filtered_to_json(&f).map_err(sem)?
                }
                "graded" => {
                    let c = fixtures::random_class(&mut rng, &bounds);
                    let g = fixtures::random_graded(&mut rng, &c).map_err(sem)?;
                    json::graded_to_json(&g).map_err(sem)?
                }
                "stokes-ls" => {
                    let c = fixtures::random_class(&mut rng, &bounds);
                    let g = fixtures::random_graded(&mut rng, &c).map_err(sem)?;
                    let sls = graded_to_stokes_ls(&g).map_err(sem)?;
                    json::sls_to_json(&sls).map_err(sem)?
                }
                "rep" => {
                    // surface fixtures: unramified families and tame handles
                    let rep = loop {
                        let c = fixtures::random_class(
                            &mut rng,
                            &fixtures::ClassBounds {
                                max_rank: rank,
                                max_levels: level_bound.min(1),
                                max_ram: 1,
                            },
                        );
                        match fixtures::random_surface_graded(&mut rng, &c, genus)
                            .and_then(|s| rep_from_sgls(&s, None))
                        {
                            Ok(r) => break r,
                            Err(_) => continue,
                        }
                    };
                    json::rep_to_json(&rep)
                }
                other => {
                    return Err(CmdError::Parse(format!(
                        "unknown fixture kind {other:?} (class | filtered | graded | stokes-ls | rep)"
                    )))
                }
            };
            write_output(&out, &to_pretty(&file))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Wilson {
            input,
            cycle,
            word,
            out,
        } => {
            let file = read_file(&input)?;
            let rep = json::rep_from_json(&file).map_err(sem)?;
            let report = rep.validate().map_err(sem)?;
            if !report.is_valid() {
                eprintln!("representation is invalid:");
                eprintln!(
                    "{}",
                    to_pretty(&json::report_to_json("stokes-representation", &report))
                );
                return Ok(ExitCode::from(1));
            }
            let cyc = json::parse_cycle(&rep.data.class, &cycle).map_err(sem)?;
            let value = rep.wilson_loop(&cyc, &word).map_err(sem)?;
            let text = to_pretty(&serde_json::json!({
                "kind": "wilson-loop",
                "version": json::VERSION,
                "cycle": cycle,
                "word": word,
                "value": { "re": rat_to_string(&value.re), "im": rat_to_string(&value.im) },
            }));
            write_output(&out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
