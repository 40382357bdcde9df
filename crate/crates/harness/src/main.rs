use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dtl_harness::config::{parse_depths, parse_list, work_cap_from_env, ExperimentSpec, ProfileFile};
use dtl_harness::error::{HarnessError, HarnessResult};
use dtl_harness::generate::GeneratorKind;
use dtl_harness::report::{emit_report, read_text, to_canonical_json, write_text, Format};
use dtl_harness::suites::{run_suite, Suite, SuiteParams};
use dtl_harness::sweep::sweep;
use dtl_harness::tools::{constants_csv, constants_table, decompose_corona, decompose_sparse};
use dtl_core::schema::LeafFile;
use dtl_core::{Ingested, LeafField, LeafMeasure};

#[derive(Parser)]
#[command(name = "dtl", version, about = "Dyadic truncated-grid inequality laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a fixed verification suite at one grid size.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        depth: u32,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one registry id over dimensions and depths.
    Sweep {
        #[arg(long)]
        ineq: String,
        #[arg(long, default_value = "1")]
        dims: String,
        #[arg(long, default_value = "2..5")]
        depths: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Comma list of field generator kinds, cycled by trial.
        #[arg(long)]
        fields: Option<String>,
        /// Comma list of measure generator kinds, cycled by trial.
        #[arg(long)]
        measures: Option<String>,
        /// `.csv` or `.json`; the report goes to stdout as JSON when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the constants of a measure.
    Constants {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a stopping family or a principal-cube forest.
    Decompose {
        kind: DecomposeKind,
        #[arg(long)]
        input: PathBuf,
        /// Measure for the averages of a corona forest.
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the registry ids.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecomposeKind {
    Sparse,
    Corona,
}

fn load_profile(path: Option<&Path>) -> HarnessResult<Option<ProfileFile>> {
    path.map(|p| ProfileFile::from_json(&read_text(p)?)).transpose()
}

fn load_leaf(path: &Path) -> HarnessResult<Ingested> {
    let file: LeafFile = serde_json::from_str(&read_text(path)?)?;
    Ok(file.load()?)
}

fn load_field(path: &Path) -> HarnessResult<LeafField> {
    match load_leaf(path)? {
        Ingested::Field(f) => Ok(f),
        Ingested::Measure(_) => Err(HarnessError::Config(format!("{} holds a measure, not a field", path.display()))),
    }
}

fn load_measure(path: &Path) -> HarnessResult<LeafMeasure> {
    match load_leaf(path)? {
        Ingested::Measure(m) => Ok(m),
        Ingested::Field(f) => Ok(LeafMeasure::Density(f)),
    }
}

fn deliver(text: &str, out: Option<&Path>) -> HarnessResult<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> HarnessResult<bool> {
    match cli.command {
        Command::Verify { suite, dim, depth, trials, seed, profile, out } => {
            let suite: Suite = suite.parse()?;
            let params = SuiteParams {
                dim,
                depth,
                trials,
                seed,
                profile: load_profile(profile.as_deref())?,
                work_cap: work_cap_from_env(),
            };
            let report = run_suite(suite, &params)?;
            for c in &report.checks {
                eprintln!("{} {} (max {}, {} of {} violated)", if c.pass { "PASS" } else { "FAIL" }, c.name, c.max_ratio, c.violations, c.instances);
            }
            deliver(&to_canonical_json(&report)?, out.as_deref())?;
            Ok(report.pass)
        }
        Command::Sweep { ineq, dims, depths, trials, seed, profile, fields, measures, out } => {
            let mut spec = ExperimentSpec::new(&ineq, parse_list(&dims)?, 0..=0, load_profile(profile.as_deref())?);
            spec.depths = parse_depths(&depths)?;
            spec.trials = trials;
            spec.seed = seed;
            if let Some(f) = fields {
                spec.field_kinds = parse_kinds(&f)?;
            }
            if let Some(m) = measures {
                spec.measure_kinds = parse_kinds(&m)?;
            }
            let report = sweep(&spec)?;
            for d in &report.dims {
                eprintln!("{} {} dim {} slope {:.4}", if d.pass { "PASS" } else { "FAIL" }, report.id, d.dim, d.slope);
            }
            match out {
                Some(p) => {
                    emit_report(&report, Format::of(&p), &p)?;
                }
                None => print!("{}", to_canonical_json(&report)?),
            }
            Ok(report.pass)
        }
        Command::Constants { measure, profile, out } => {
            let mu = load_measure(&measure)?;
            let file = load_profile(profile.as_deref())?.unwrap_or_else(|| ProfileFile::default_for(mu.root().dim()));
            let rows = constants_table(&mu, &file)?;
            let text = match out.as_deref().map(Format::of) {
                Some(Format::Csv) => constants_csv(&rows),
                _ => to_canonical_json(&rows)?,
            };
            deliver(&text, out.as_deref())?;
            Ok(true)
        }
        Command::Decompose { kind, input, measure, out } => {
            let f = load_field(&input)?;
            let d = match kind {
                DecomposeKind::Sparse => decompose_sparse(&[f])?,
                DecomposeKind::Corona => {
                    let mu = measure.as_deref().map(load_measure).transpose()?;
                    decompose_corona(&f, mu.as_ref())?
                }
            };
            deliver(&to_canonical_json(&d)?, out.as_deref())?;
            Ok(true)
        }
        Command::List => {
            for e in dtl_harness::registry::REGISTRY {
                println!("{}\t{}\t{}", e.id, if e.exact { "exact" } else { "sweep" }, e.summary);
            }
            Ok(true)
        }
    }
}

fn parse_kinds(s: &str) -> HarnessResult<Vec<GeneratorKind>> {
    s.split(',').map(|t| t.trim().parse()).collect()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
