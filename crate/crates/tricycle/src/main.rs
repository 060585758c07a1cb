//! Command-line surface for the decomposition pipeline.
//!
//! Exit codes: 0 ok, 1 invalid certificate, 2 malformed input, 3 instance
//! not supported by the constructor, 4 internal construction error.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tricycle::certificate::{parse_trades, serialize_trades, CertificateFile};
use tricycle::conditions::{check_construction_domain, check_necessary, supported_instances};
use tricycle::expansion::construct_decomposition;
use tricycle::model::{CellRef, LatinRep, Params, Region};
use tricycle::oracle::{brute_force_decompose, cross_validate, SearchConfig};
use tricycle::verify::verify;
use tricycle::{Error, Result};

const EXIT_INVALID: u8 = 1;
const EXIT_MALFORMED: u8 = 2;
const EXIT_UNSUPPORTED: u8 = 3;
const EXIT_CONSTRUCTION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "tricycle",
    about = "Triangle and 5-cycle decompositions of complete tripartite graphs, \
             with 5-blowups to pure 5-cycle decompositions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Sizes {
    r: u32,
    s: u32,
    t: u32,
}

impl Sizes {
    fn params(&self) -> Result<Params> {
        Params::new(self.r, self.s, self.t)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Feasibility gates for one instance.
    Check {
        #[command(flatten)]
        sizes: Sizes,
        /// Judge the necessary conditions for a pure 5-cycle target instead
        /// of the constructor's gate.
        #[arg(long)]
        pure: bool,
        #[arg(long)]
        json: bool,
    },
    /// Build a triangles-and-5-cycles certificate for a supported instance.
    Construct {
        #[command(flatten)]
        sizes: Sizes,
        /// Certificate output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the trade records next to the certificate.
        #[arg(long)]
        trades: Option<PathBuf>,
        /// Compress the certificate.
        #[arg(long)]
        gzip: bool,
        /// Print the covering-phase diagnostics as well.
        #[arg(long)]
        diagnostics: bool,
        #[arg(long)]
        json: bool,
    },
    /// Lift a verified certificate to a pure 5-cycle certificate of the
    /// five-fold instance.
    Blowup {
        /// Input certificate.
        input: PathBuf,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        gzip: bool,
    },
    /// Re-check a certificate against its instance.
    Verify {
        /// Certificate to check.
        input: PathBuf,
        /// Require pure 5-cycles regardless of the header.
        #[arg(long)]
        pure: bool,
        /// Comma-separated allowed lengths, overriding the header.
        #[arg(long)]
        lengths: Option<String>,
        /// Trade records to re-expand and re-check as well.
        #[arg(long)]
        trades: Option<PathBuf>,
    },
    /// Dump the filled grid as CSV.
    Latin {
        #[command(flatten)]
        sizes: Sizes,
        /// Annotate cells with the trade kind that consumed them (runs the
        /// constructor; the instance must be supported).
        #[arg(long)]
        annotate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive search on a tiny instance.
    Oracle {
        #[command(flatten)]
        sizes: Sizes,
        /// Comma-separated allowed cycle lengths.
        #[arg(long, default_value = "3,5")]
        lengths: String,
        /// Refuse instances with more edges than this.
        #[arg(long, default_value_t = 200)]
        edge_cap: u64,
        /// Disable first-cycle canonical labeling.
        #[arg(long)]
        no_symmetry: bool,
        /// Compare oracle existence against the necessary conditions
        /// (pure 5-cycle semantics).
        #[arg(long)]
        cross_validate: bool,
        /// Write a found decomposition here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct and verify every supported instance up to a size bound.
    Sweep {
        /// Largest part size to include.
        #[arg(long, default_value_t = 99)]
        max_t: u32,
        /// Table output path (appended; stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip instances already present in the output file.
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify(&err))
        }
    }
}

fn classify(err: &Error) -> u8 {
    match err {
        Error::Unsupported { .. } => EXIT_UNSUPPORTED,
        Error::BadParams { .. } => EXIT_MALFORMED,
        _ => EXIT_CONSTRUCTION,
    }
}

fn parse_lengths(spec: &str) -> Option<BTreeSet<usize>> {
    let mut set = BTreeSet::new();
    for tok in spec.split(',') {
        set.insert(tok.trim().parse::<usize>().ok()?);
    }
    if set.is_empty() {
        None
    } else {
        Some(set)
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes a certificate, then reads the artifact back and verifies it
/// again before the command is allowed to succeed.
fn write_and_recheck(cert: &CertificateFile, path: &Path, gzip: bool) -> Result<bool> {
    cert.write_file(path, gzip)?;
    let back = match CertificateFile::read_file(path) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("re-read of {} failed: {e}", path.display());
            return Ok(false);
        }
    };
    if back != *cert {
        eprintln!("re-read of {} does not match what was written", path.display());
        return Ok(false);
    }
    let outcome = verify(&back.decomposition, &back.lengths);
    if !outcome.ok() {
        eprintln!("re-verification of {} failed:\n{}", path.display(), outcome.summary(10));
        return Ok(false);
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Check { sizes, pure, json } => {
            let p = sizes.params()?;
            let report = if pure { check_necessary(&p) } else { check_construction_domain(&p) };
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            } else {
                print!("{}", report.to_text());
            }
            let ok = if pure { report.necessary_ok() } else { report.construction_supported };
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(EXIT_UNSUPPORTED) })
        }

        Command::Construct { sizes, out, trades, gzip, diagnostics, json } => {
            let p = sizes.params()?;
            if diagnostics {
                let state = tricycle::placement::place_all(&p)?;
                eprint!("{}", state.diagnostics());
            }
            let built = construct_decomposition(&p)?;
            let lengths: BTreeSet<usize> = [3usize, 5].into_iter().collect();
            let outcome = verify(&built.decomposition, &lengths);
            if !outcome.ok() {
                eprintln!("self-verification failed:\n{}", outcome.summary(20));
                return Ok(ExitCode::from(EXIT_CONSTRUCTION));
            }
            let cert = CertificateFile::new(built.decomposition, &lengths, "construct", None);
            if let Some(path) = &out {
                if !write_and_recheck(&cert, path, gzip)? {
                    return Ok(ExitCode::from(EXIT_CONSTRUCTION));
                }
            } else {
                print!("{}", cert.serialize());
            }
            if let Some(path) = &trades {
                std::fs::write(path, serialize_trades(&p, &built.trades))?;
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&built.budget).expect("serializable"));
            } else {
                eprint!("{}", built.budget.to_text());
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Blowup { input, out, gzip } => {
            let cert = match CertificateFile::read_file(&input) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(EXIT_MALFORMED));
                }
            };
            let lifted = tricycle::blowup::blowup_decomposition(&cert.decomposition)?;
            let lengths: BTreeSet<usize> = [5usize].into_iter().collect();
            let outcome = verify(&lifted, &lengths);
            if !outcome.ok() {
                eprintln!("lifted certificate failed verification:\n{}", outcome.summary(20));
                return Ok(ExitCode::from(EXIT_CONSTRUCTION));
            }
            let big =
                CertificateFile::new(lifted, &lengths, "blowup", Some(cert.params));
            match &out {
                Some(path) => {
                    if !write_and_recheck(&big, path, gzip)? {
                        return Ok(ExitCode::from(EXIT_CONSTRUCTION));
                    }
                }
                None => print!("{}", big.serialize()),
            }
            eprintln!("lifted {} to {}: {} cycles", cert.params, big.params, big.decomposition.cycles.len());
            Ok(ExitCode::SUCCESS)
        }

        Command::Verify { input, pure, lengths, trades } => {
            let cert = match CertificateFile::read_file(&input) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(EXIT_MALFORMED));
                }
            };
            let allowed = if pure {
                [5usize].into_iter().collect()
            } else if let Some(spec) = &lengths {
                match parse_lengths(spec) {
                    Some(set) => set,
                    None => {
                        eprintln!("error: bad --lengths");
                        return Ok(ExitCode::from(EXIT_MALFORMED));
                    }
                }
            } else {
                cert.lengths.clone()
            };
            let outcome = verify(&cert.decomposition, &allowed);
            let mut ok = outcome.ok();
            if ok {
                println!(
                    "ok: {} cycles partition the {} edges of {}",
                    cert.decomposition.cycles.len(),
                    cert.params.edge_count(),
                    cert.params
                );
            } else {
                print!("{}", outcome.summary(20));
            }
            if let Some(path) = &trades {
                let text = std::fs::read_to_string(path)?;
                let (tp, trade_list) = match parse_trades(&text) {
                    Ok(x) => x,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return Ok(ExitCode::from(EXIT_MALFORMED));
                    }
                };
                let mut bad = 0;
                for tr in &trade_list {
                    if !tricycle::trades::validate_trade_pattern(tr, &tp)
                        || !tricycle::verify::verify_trade_exchange(tr, &tp).ok()
                    {
                        bad += 1;
                    }
                }
                if bad == 0 {
                    println!("ok: {} trade exchanges re-checked", trade_list.len());
                } else {
                    println!("{bad} trade exchanges failed");
                    ok = false;
                }
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(EXIT_INVALID) })
        }

        Command::Latin { sizes, annotate, out } => {
            let p = sizes.params()?;
            let rep = LatinRep::new(p);
            let annotations = if annotate {
                let built = construct_decomposition(&p)?;
                let mut map = std::collections::BTreeMap::new();
                for tr in &built.trades {
                    for &cell in &tr.cells {
                        map.insert(cell, tr.kind.label().to_string());
                    }
                }
                Some(map)
            } else {
                None
            };
            write_or_print(out.as_deref(), &rep.to_csv(annotations.as_ref()))?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Oracle { sizes, lengths, edge_cap, no_symmetry, cross_validate: xv, out } => {
            let p = sizes.params()?;
            let Some(allowed) = parse_lengths(&lengths) else {
                eprintln!("error: bad --lengths");
                return Ok(ExitCode::from(EXIT_MALFORMED));
            };
            let mut cfg = SearchConfig::new(&allowed.iter().copied().collect::<Vec<_>>());
            cfg.edge_cap = edge_cap;
            cfg.symmetry_breaking = !no_symmetry;
            if xv {
                match cross_validate(&p, &cfg) {
                    Ok(report) => {
                        println!(
                            "{}: exists={} necessary_ok={} consistent={}",
                            p,
                            report.exists,
                            report.conditions.necessary_ok(),
                            report.consistent
                        );
                        return Ok(if report.consistent {
                            ExitCode::SUCCESS
                        } else {
                            ExitCode::from(EXIT_INVALID)
                        });
                    }
                    Err(e) => {
                        eprintln!("refused: {e}");
                        return Ok(ExitCode::from(EXIT_MALFORMED));
                    }
                }
            }
            match brute_force_decompose(&p, &cfg) {
                Ok(Some(dec)) => {
                    let outcome = verify(&dec, &allowed);
                    if !outcome.ok() {
                        eprintln!("internal: oracle emitted an invalid decomposition");
                        return Ok(ExitCode::from(EXIT_CONSTRUCTION));
                    }
                    println!("exists: {} cycles", dec.cycles.len());
                    if let Some(path) = &out {
                        let cert = CertificateFile::new(dec, &allowed, "oracle", None);
                        if !write_and_recheck(&cert, path, false)? {
                            return Ok(ExitCode::from(EXIT_CONSTRUCTION));
                        }
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Ok(None) => {
                    println!("none: no decomposition with lengths {allowed:?}");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("refused: {e}");
                    Ok(ExitCode::from(EXIT_MALFORMED))
                }
            }
        }

        Command::Sweep { max_t, out, resume, json } => run_sweep(max_t, out.as_deref(), resume, json),
    }
}

fn run_sweep(max_t: u32, out: Option<&Path>, resume: bool, json: bool) -> Result<ExitCode> {
    use std::io::Write;
    let targets = supported_instances(max_t);
    let mut done: BTreeSet<(u32, u32, u32)> = BTreeSet::new();
    if resume {
        if let Some(path) = out {
            if let Ok(prior) = std::fs::read_to_string(path) {
                for line in prior.lines() {
                    let nums: Vec<u32> = line
                        .split_whitespace()
                        .take(3)
                        .filter_map(|t| t.parse().ok())
                        .collect();
                    if nums.len() == 3 {
                        done.insert((nums[0], nums[1], nums[2]));
                    }
                }
            }
        }
    }
    let mut sink: Box<dyn Write> = match out {
        Some(path) => Box::new(
            std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)?,
        ),
        None => Box::new(std::io::stdout()),
    };
    let lengths: BTreeSet<usize> = [3usize, 5].into_iter().collect();
    let mut failures = 0u32;
    let total = targets.len();
    let mut ran = 0usize;
    for p in targets {
        if done.contains(&(p.r, p.s, p.t)) {
            continue;
        }
        ran += 1;
        let line = match construct_decomposition(&p) {
            Ok(built) => {
                let ok = verify(&built.decomposition, &lengths).ok();
                let within = built.budget.within_bound();
                if !ok || !within {
                    failures += 1;
                }
                if json {
                    serde_json::json!({
                        "r": p.r, "s": p.s, "t": p.t,
                        "triangles": built.budget.triangles,
                        "pentagons": built.budget.pentagons,
                        "ignored": built.budget.total_ignored,
                        "bound": built.budget.bound,
                        "verified": ok,
                        "within_budget": within,
                    })
                    .to_string()
                } else {
                    format!(
                        "{} {} {} triangles={} pentagons={} ignored={} bound={} verified={} within_budget={}",
                        p.r, p.s, p.t,
                        built.budget.triangles,
                        built.budget.pentagons,
                        built.budget.total_ignored,
                        built.budget.bound,
                        ok,
                        within
                    )
                }
            }
            Err(e) => {
                failures += 1;
                if json {
                    serde_json::json!({
                        "r": p.r, "s": p.s, "t": p.t, "error": e.to_string(),
                    })
                    .to_string()
                } else {
                    format!("{} {} {} error={e}", p.r, p.s, p.t)
                }
            }
        };
        writeln!(sink, "{line}")?;
    }
    eprintln!("swept {ran} of {total} instances, {failures} failures");
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CONSTRUCTION)
    })
}

// Quiet the unused-import lint for Region/CellRef used only in annotations.
#[allow(unused)]
fn _types(_: Region, _: CellRef) {}
