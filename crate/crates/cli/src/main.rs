//! `numertree` command-line front end. Machine-readable results go to
//! standard output; failures print one JSON line on standard error and exit
//! with 1 (verification failed), 2 (bad input), 3 (node budget) or
//! 4 (insufficient data, unverified prerequisites).

mod error;

use std::fmt::Write as _;
use std::io::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use numertree::dectree::{RenderFormat, TreePrefix};
use numertree::exactlin::{format_rational, parse_rational, Nat, Rational};
use numertree::gdlr::Gdlr;
use numertree::kernels::{k_kernel_element, kernel_table_csv, rank_profile, KernelKey, KernelKind, KernelTable};
use numertree::linearity::{extend, guess, lift, verify, GuessOptions, RelationSet, RootPolicy};
use numertree::numsys::{NumerationSystem, Word};
use numertree::seqlib::{fixtures, format_bfile, parse_bfile, SequenceSource};

use error::CliError;

#[derive(Parser)]
#[command(name = "numertree", version, about = "Decorated numeration trees and h-linear sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Representation of an integer.
    Rep {
        #[arg(long)]
        system: String,
        n: String,
    },
    /// Integer represented by a word.
    Val {
        #[arg(long)]
        system: String,
        /// Digits; use "" for the empty word, commas for alphabets above 10.
        word: String,
    },
    /// First terms of a sequence as a b-file.
    Terms(SeqArgs),
    /// Decorated tree down to a given level.
    Tree {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        levels: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: TreeFormat,
    },
    /// Fits relations at height h and prints the relation set and report.
    Guess {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        h: usize,
        #[arg(long)]
        min_occurrences: Option<usize>,
        #[arg(long, default_value_t = 25)]
        holdout: usize,
        #[arg(long, value_enum, default_value = "exclude")]
        root: RootArg,
        /// Also write the relation set alone to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks a relation set on every occurrence in the first terms.
    Verify {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        relset: PathBuf,
    },
    /// Relation set at height h+1 derived from one at height h.
    Lift {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        relset: PathBuf,
    },
    /// Extends a prefix with a relation set and prints the terms.
    Extend {
        #[arg(long)]
        relset: PathBuf,
        /// Comma-separated terms or a b-file path.
        #[arg(long)]
        prefix: String,
        #[arg(long)]
        levels: usize,
    },
    /// Graph-directed linear representations.
    Gdlr {
        #[command(subcommand)]
        op: GdlrOp,
    },
    /// Kernel elements and rank profiles, as CSV.
    Kernel {
        #[command(subcommand)]
        op: KernelOp,
    },
    /// Prints a bundled relation set or automaton as JSON.
    Fixture {
        #[arg(value_enum)]
        name: FixtureName,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// "2", "3/2", "fib", "dfa:FILE" or inline DFA JSON.
    #[arg(long)]
    system: String,
    /// builtin:NAME, bfile:PATH, dfao:FILE, ext:RELSET+PREFIX or cumulative:SPEC.
    #[arg(long)]
    seq: String,
}

#[derive(Args)]
struct SeqArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 2000)]
    terms: usize,
}

#[derive(Subcommand)]
enum GdlrOp {
    /// Builds from a relation set verified on the sequence; prints a summary.
    Build(GdlrSource),
    /// Builds and prints (or writes) the representation as JSON.
    Export {
        #[command(flatten)]
        src: GdlrSource,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reads a JSON representation and prints its summary.
    Import {
        #[arg(long)]
        file: PathBuf,
    },
    /// Evaluates at integers or words.
    Eval {
        /// Previously exported representation.
        #[arg(long, conflicts_with_all = ["relset", "seq"])]
        file: Option<PathBuf>,
        #[arg(long)]
        relset: Option<PathBuf>,
        #[arg(long)]
        seq: Option<String>,
        #[arg(long, default_value_t = 2000)]
        terms: usize,
        /// An integer or a range "a..b".
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        word: Option<String>,
        /// Also print the number of matrix products.
        #[arg(long)]
        trace: bool,
    },
}

#[derive(Args)]
struct GdlrSource {
    #[arg(long)]
    relset: PathBuf,
    /// Sequence supplying the initial vector and the verification data.
    #[arg(long)]
    seq: String,
    #[arg(long, default_value_t = 2000)]
    terms: usize,
}

#[derive(Subcommand)]
enum KernelOp {
    /// One column per requested kernel element.
    Element {
        #[command(flatten)]
        seq: SeqArgs,
        /// Suffix word u of τ(x,u); repeatable.
        #[arg(long)]
        suffix: Vec<String>,
        /// Classical element x_{k^j n + r}, given as "j,r"; repeatable.
        #[arg(long)]
        power: Vec<String>,
        /// Restrict suffix elements to one factor type (needs --h).
        #[arg(long = "type", requires = "h")]
        type_id: Option<usize>,
        #[arg(long)]
        h: Option<usize>,
    },
    /// Rank of the span of kernel elements per suffix-length bound.
    Rank {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        max_suffix: usize,
        #[arg(long, value_enum, default_value = "word")]
        kind: KindArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeFormat {
    Text,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum RootArg {
    Include,
    Exclude,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Word,
    Power,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureName {
    Pairs11,
    ZeckSubwords,
    Sumdigits32,
    SumdigitsMatrix,
    Squares,
    Nonregular,
}

type Out = Result<(String, i32), CliError>;

fn system(spec: &str) -> Result<NumerationSystem, CliError> {
    Ok(NumerationSystem::from_spec(spec)?)
}

fn source(args: &SourceArgs) -> Result<(NumerationSystem, SequenceSource), CliError> {
    let sys = system(&args.system)?;
    let seq = SequenceSource::from_spec(&args.seq, &sys)?;
    Ok((sys, seq))
}

fn data_tree(sys: &NumerationSystem, seq: &SequenceSource, terms: usize) -> Result<TreePrefix, CliError> {
    let t = seq.terms(sys, terms)?;
    Ok(TreePrefix::from_terms(sys, &t)?)
}

fn read_relset(path: &PathBuf) -> Result<RelationSet, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(RelationSet::from_json_str(&text)?)
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

fn parse_nat(s: &str) -> Result<Nat, CliError> {
    s.trim()
        .parse::<Nat>()
        .map_err(|_| CliError::input(format!("{s:?} is not a non-negative integer")))
}

fn cmd_rep(sys: &str, n: &str) -> Out {
    let sys = system(sys)?;
    let w = sys.rep(&parse_nat(n)?)?;
    Ok((format!("{}\n", sys.format_word(&w)), 0))
}

fn cmd_val(sys: &str, word: &str) -> Out {
    let sys = system(sys)?;
    let w = sys.parse_word(word)?;
    if !sys.is_valid(&w) {
        // The language is prefix-closed: report the first letter that leaves it.
        let pos = (1..=w.len())
            .find(|&i| !sys.is_valid(&Word::from_digits(&w.digits()[..i])))
            .unwrap_or(0);
        return Err(CliError::input(format!(
            "word {word:?} is not a representation (invalid at position {})",
            pos.saturating_sub(1)
        )));
    }
    Ok((format!("{}\n", sys.val(&w)?), 0))
}

fn cmd_terms(a: &SeqArgs) -> Out {
    let (sys, seq) = source(&a.source)?;
    Ok((format_bfile(&seq.terms(&sys, a.terms)?, 0), 0))
}

fn cmd_tree(a: &SourceArgs, levels: usize, format: TreeFormat) -> Out {
    let (sys, seq) = source(a)?;
    let t = TreePrefix::build(&sys, &seq, levels)?;
    let f = match format {
        TreeFormat::Text => RenderFormat::Text,
        TreeFormat::Dot => RenderFormat::Dot,
    };
    Ok((t.render(f), 0))
}

fn cmd_guess(
    a: &SeqArgs,
    h: usize,
    min_occurrences: Option<usize>,
    holdout: usize,
    root: RootArg,
    out: Option<&PathBuf>,
) -> Out {
    let (sys, seq) = source(&a.source)?;
    let t = data_tree(&sys, &seq, a.terms)?;
    let opts = GuessOptions {
        min_occurrences,
        holdout_percent: holdout.min(90),
        root_policy: match root {
            RootArg::Include => RootPolicy::Include,
            RootArg::Exclude => RootPolicy::Exclude,
        },
    };
    let (set, report) = guess(&t, h, &opts)?;
    if let Some(path) = out {
        fs::write(path, pretty(&set.to_json()))?;
    }
    let body = pretty(&serde_json::json!({ "relations": set.to_json(), "report": report.to_json() }));
    if report.any_insufficient() {
        let deficient: Vec<String> = report
            .types
            .iter()
            .filter(|t| t.cells.iter().any(|c| matches!(c.status, numertree::linearity::CellStatus::Insufficient { .. })))
            .map(|t| format!("type {} ({} occurrences)", t.type_id, t.occurrences.len()))
            .collect();
        let e = CliError::insufficient(format!("not enough occurrences: {}", deficient.join(", ")));
        eprintln!("{}", e.to_json_line());
        return Ok((body, e.exit));
    }
    Ok((body, 0))
}

fn cmd_verify(a: &SeqArgs, relset: &PathBuf) -> Out {
    let (sys, seq) = source(&a.source)?;
    let set = read_relset(relset)?;
    let t = data_tree(&sys, &seq, a.terms)?;
    let report = verify(&t, &set)?;
    let fmt = |w: &Word| sys.format_word(w);
    let sk = t.skeleton();
    let violations: Vec<serde_json::Value> = report
        .violations
        .iter()
        .map(|v| {
            serde_json::json!({
                "root": v.root,
                "root_word": fmt(&sk.word(v.root)),
                "type": v.type_id,
                "leaf": fmt(&v.leaf),
                "expected": format_rational(&v.expected),
                "actual": format_rational(&v.actual),
            })
        })
        .collect();
    let body = pretty(&serde_json::json!({
        "ok": report.ok(),
        "checked": report.checked,
        "uncovered": report.uncovered,
        "violations": violations,
    }));
    if !report.ok() {
        let e = CliError::verification(format!("{} violations", report.violations.len()));
        eprintln!("{}", e.to_json_line());
        return Ok((body, e.exit));
    }
    Ok((body, 0))
}

fn cmd_lift(a: &SeqArgs, relset: &PathBuf) -> Out {
    let (sys, seq) = source(&a.source)?;
    let set = read_relset(relset)?;
    let t = data_tree(&sys, &seq, a.terms)?;
    Ok((pretty(&lift(&set, &t)?.to_json()), 0))
}

fn prefix_terms(spec: &str) -> Result<Vec<Rational>, CliError> {
    let path = PathBuf::from(spec);
    if path.is_file() {
        return Ok(parse_bfile(&fs::read_to_string(&path)?)?);
    }
    spec.split(',')
        .map(|s| parse_rational(s).map_err(|e| CliError::input(e.to_string())))
        .collect()
}

fn cmd_extend(relset: &PathBuf, prefix: &str, levels: usize) -> Out {
    let set = read_relset(relset)?;
    let p = TreePrefix::from_terms(&set.system, &prefix_terms(prefix)?)?;
    let t = extend(&p, &set, levels)?;
    Ok((format_bfile(t.decorations(), 0), 0))
}

/// Builds after checking the relations on the sequence's first terms.
fn gdlr_from(src: &GdlrSource) -> Result<Gdlr, CliError> {
    let set = read_relset(&src.relset)?;
    let seq = SequenceSource::from_spec(&src.seq, &set.system)?;
    let t = data_tree(&set.system, &seq, src.terms)?;
    let report = verify(&t, &set)?;
    if !report.ok() || !report.uncovered.is_empty() {
        return Err(CliError {
            kind: "unverified",
            message: format!(
                "relation set does not verify on {} terms ({} violations, {} uncovered types)",
                src.terms,
                report.violations.len(),
                report.uncovered.len()
            ),
            exit: error::EXIT_INSUFFICIENT,
        });
    }
    Ok(Gdlr::build(&set, &t)?)
}

fn summary(g: &Gdlr) -> String {
    let sys = &g.system;
    let word = |w: &Word| if w.is_empty() { "ε".to_string() } else { sys.format_word(w) };
    let mut s = String::new();
    let _ = writeln!(s, "system: {sys}");
    let _ = writeln!(s, "h: {}", g.h);
    let idx: Vec<String> = g.index.iter().map(word).collect();
    let _ = writeln!(s, "index: {}", idx.join(" "));
    let init: Vec<String> = g.initial.iter().map(|x| x.to_string()).collect();
    let _ = writeln!(s, "initial: {}", init.join(" "));
    for (key, m) in &g.steps {
        let _ = writeln!(s, "{}:", g.key_string(key));
        for r in m.to_rows() {
            let row: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "  {}", row.join(" "));
        }
    }
    s
}

fn parse_range(s: &str) -> Result<Vec<Nat>, CliError> {
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b): (u64, u64) = (
                a.trim().parse().map_err(|_| CliError::input(format!("bad range {s:?}")))?,
                b.trim().parse().map_err(|_| CliError::input(format!("bad range {s:?}")))?,
            );
            Ok((a..b).map(Nat::from).collect())
        }
        None => Ok(vec![parse_nat(s)?]),
    }
}

fn read_gdlr(path: &PathBuf) -> Result<Gdlr, CliError> {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(Gdlr::from_json(&v)?)
}

fn cmd_gdlr(op: &GdlrOp) -> Out {
    match op {
        GdlrOp::Build(src) => Ok((summary(&gdlr_from(src)?), 0)),
        GdlrOp::Export { src, out } => {
            let body = pretty(&gdlr_from(src)?.to_json());
            match out {
                Some(path) => {
                    fs::write(path, body)?;
                    Ok((String::new(), 0))
                }
                None => Ok((body, 0)),
            }
        }
        GdlrOp::Import { file } => Ok((summary(&read_gdlr(file)?), 0)),
        GdlrOp::Eval {
            file,
            relset,
            seq,
            terms,
            n,
            word,
            trace,
        } => {
            let g = match (file, relset, seq) {
                (Some(f), _, _) => read_gdlr(f)?,
                (None, Some(r), Some(s)) => gdlr_from(&GdlrSource {
                    relset: r.clone(),
                    seq: s.clone(),
                    terms: *terms,
                })?,
                _ => return Err(CliError::input("give --file, or --relset with --seq")),
            };
            let words: Vec<Word> = match (n, word) {
                (Some(n), None) => parse_range(n)?
                    .iter()
                    .map(|n| g.system.rep(n))
                    .collect::<Result<_, _>>()?,
                (None, Some(w)) => vec![g.system.parse_word(w)?],
                _ => return Err(CliError::input("give exactly one of --n and --word")),
            };
            let mut s = String::new();
            for w in &words {
                let (x, steps) = g.eval_traced(w)?;
                if *trace {
                    let _ = writeln!(s, "{} {} {steps}", g.system.format_word(w), x);
                } else {
                    let _ = writeln!(s, "{x}");
                }
            }
            Ok((s, 0))
        }
    }
}

fn cmd_kernel(op: &KernelOp) -> Out {
    match op {
        KernelOp::Element {
            seq,
            suffix,
            power,
            type_id,
            h,
        } => {
            let (sys, src) = source(&seq.source)?;
            let words: Vec<Word> = suffix.iter().map(|u| sys.parse_word(u)).collect::<Result<_, _>>()?;
            let depth = words.iter().map(Word::len).max().unwrap_or(0).max(h.unwrap_or(0));
            let mut columns = Vec::new();
            if !words.is_empty() {
                let kt = KernelTable::new(&sys, &src, seq.terms, depth)?;
                let table = match h {
                    Some(h) => Some(kt.classify(*h)?),
                    None => None,
                };
                for u in words {
                    let col = match (type_id, &table) {
                        (Some(t), Some(table)) => kt.filtered(&u, table, *t)?,
                        _ => kt.s_kernel(&u),
                    };
                    let key = match type_id {
                        Some(t) => KernelKey::Filtered { u, type_id: *t },
                        None => KernelKey::WordSuffix(u),
                    };
                    columns.push((key, col));
                }
            }
            for p in power {
                let Some((k, 1)) = sys.base_ratio() else {
                    return Err(CliError::input("--power needs an integer base"));
                };
                let (j, r) = p
                    .split_once(',')
                    .and_then(|(j, r)| Some((j.trim().parse::<u32>().ok()?, r.trim().parse::<u64>().ok()?)))
                    .ok_or_else(|| CliError::input(format!("--power expects \"j,r\", got {p:?}")))?;
                let col = k_kernel_element(&src, &sys, k, j, &Nat::from(r), seq.terms)?;
                columns.push((KernelKey::PowerSuffix { j, r }, col));
            }
            if columns.is_empty() {
                return Err(CliError::input("give at least one --suffix or --power"));
            }
            Ok((kernel_table_csv(&sys, &columns), 0))
        }
        KernelOp::Rank { seq, max_suffix, kind } => {
            let (sys, src) = source(&seq.source)?;
            let kind = match kind {
                KindArg::Word => KernelKind::WordSuffix,
                KindArg::Power => KernelKind::PowerSuffix,
            };
            let profile = rank_profile(&sys, &src, *max_suffix, seq.terms, kind)?;
            if !profile.zero_columns.is_empty() {
                let labels: Vec<String> = profile.zero_columns.iter().map(|k| k.label(&sys)).collect();
                eprintln!("skipped zero columns: {}", labels.join(" "));
            }
            Ok((profile.to_csv(), 0))
        }
    }
}

fn cmd_fixture(name: FixtureName) -> Out {
    let v = match name {
        FixtureName::Pairs11 => fixtures::pairs11_relations().to_json(),
        FixtureName::ZeckSubwords => fixtures::zeck_subwords_relations().to_json(),
        FixtureName::Sumdigits32 => fixtures::sumdigits32_relations().to_json(),
        FixtureName::SumdigitsMatrix => fixtures::sumdigits_matrix_relations().to_json(),
        FixtureName::Squares => fixtures::squares_relations().to_json(),
        FixtureName::Nonregular => fixtures::nonregular_dfao().to_json(),
    };
    Ok((pretty(&v), 0))
}

fn run(cli: Cli) -> Out {
    match &cli.command {
        Command::Rep { system, n } => cmd_rep(system, n),
        Command::Val { system, word } => cmd_val(system, word),
        Command::Terms(a) => cmd_terms(a),
        Command::Tree { source, levels, format } => cmd_tree(source, *levels, *format),
        Command::Guess {
            seq,
            h,
            min_occurrences,
            holdout,
            root,
            out,
        } => cmd_guess(seq, *h, *min_occurrences, *holdout, *root, out.as_ref()),
        Command::Verify { seq, relset } => cmd_verify(seq, relset),
        Command::Lift { seq, relset } => cmd_lift(seq, relset),
        Command::Extend { relset, prefix, levels } => cmd_extend(relset, prefix, *levels),
        Command::Gdlr { op } => cmd_gdlr(op),
        Command::Kernel { op } => cmd_kernel(op),
        Command::Fixture { name } => cmd_fixture(*name),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // Keep clap's message up to the usage hint, on one line.
            let msg = e.to_string();
            let text: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(|l| l.trim().trim_start_matches("error: "))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("{}", CliError::input(text.join(" ")).to_json_line());
            return ExitCode::from(error::EXIT_INPUT as u8);
        }
    };
    match run(cli) {
        Ok((out, code)) => {
            // A closed pipe (e.g. `| head`) is not an error.
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush());
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit as u8)
        }
    }
}
