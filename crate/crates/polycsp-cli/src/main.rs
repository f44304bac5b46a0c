use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use polycsp::conditions::{make_condition, MinorCondition};
use polycsp::cycles::{self, CycleSet};
use polycsp::digraph::all_digraphs;
use polycsp::hom_search::is_core;
use polycsp::indicator::{satisfies_with, Mode, Options, Verdict};
use polycsp::tree_gen::{for_each_balanced_word, generate_balanced_cycles, is_triad, TreeGenerator};
use polycsp::Digraph;

const CSV_VERSION: &str = "# polycsp classify v1";
const EXIT_ERROR: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

#[derive(Parser)]
#[command(name = "polycsp", version, about = "Minor conditions, core trees and pp-constructions for digraphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate trees, triads or balanced cycles as edge-list blocks.
    Gen(GenArgs),
    /// Decide a minor condition on a digraph read from an edge-list file.
    Check(CheckArgs),
    /// Test conditions on every core tree (or triad, or balanced cycle) of a size.
    Classify(ClassifyArgs),
    /// Calculus of cyclic loop conditions; sets are comma separated, e.g. `6,20`.
    Cycles {
        #[command(subcommand)]
        op: CyclesOp,
    },
    /// Census of digraphs with at most four vertices and a table of named small digraphs.
    Poset4,
}

#[derive(Args)]
struct GenArgs {
    n: usize,
    #[arg(long)]
    cores_only: bool,
    #[arg(long)]
    triads: bool,
    #[arg(long, conflicts_with_all = ["cores_only", "triads"])]
    cycles: bool,
    #[arg(long)]
    count_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Copy)]
#[group(multiple = false)]
struct ModeArgs {
    #[arg(long)]
    levelwise: bool,
    #[arg(long)]
    full: bool,
    #[arg(long)]
    auto: bool,
}

impl ModeArgs {
    fn mode(self) -> Mode {
        if self.levelwise {
            Mode::Levelwise
        } else if self.full {
            Mode::Full
        } else {
            Mode::Auto
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    condition: String,
    #[command(flatten)]
    mode: ModeArgs,
    /// Seed idempotency even if the digraph is not a core (structures with constants).
    #[arg(long)]
    idempotent: bool,
    /// Write the witness operation tables as CSV.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Family {
    Trees,
    Triads,
    Cycles,
}

#[derive(Args)]
struct ClassifyArgs {
    n: usize,
    /// Condition names; several may be given, or one comma separated list.
    #[arg(long = "conditions", short = 'c', required = true, num_args = 1..)]
    conditions: Vec<String>,
    #[arg(long, value_enum, default_value = "trees")]
    family: Family,
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[command(flatten)]
    mode: ModeArgs,
    /// Skip everything up to and including this code in generation order.
    #[arg(long)]
    resume: Option<String>,
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CyclesOp {
    /// Σ_C ⇒ Σ_D
    Implies { c: CycleSet, d: CycleSet },
    /// C_D ≤ C_C in the pp-constructability order
    Ppleq { d: CycleSet, c: CycleSet },
    /// Prime cyclic loop conditions equivalent to Σ_C
    Decompose { c: CycleSet },
    Meet { c: CycleSet, d: CycleSet },
    Join { c: CycleSet, d: CycleSet },
    /// Does C_C satisfy Σ_D
    Satisfies { c: CycleSet, d: CycleSet },
    /// Square-free pp-equivalent cycle set
    Squarefree { c: CycleSet },
}

fn main() -> ExitCode {
    // usage errors share the error code; help and version exit 0
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    let res = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a).map(|_| 0),
        Cmd::Check(a) => cmd_check(a),
        Cmd::Classify(a) => cmd_classify(a),
        Cmd::Cycles { op } => cmd_cycles(op).map(|_| 0),
        Cmd::Poset4 => cmd_poset4().map(|_| 0),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    if a.n == 0 {
        bail!("n must be at least 1");
    }
    let mut out = sink(&a.out)?;
    let mut count = 0u64;
    let mut emit = |g: &Digraph, out: &mut Box<dyn Write>| -> io::Result<()> {
        count += 1;
        if !a.count_only {
            writeln!(out, "{}", g.to_edge_list())?;
        }
        Ok(())
    };
    if a.cycles {
        let cs = generate_balanced_cycles(a.n).map_err(|e| anyhow::anyhow!(e))?;
        for c in &cs {
            emit(c, &mut out)?;
        }
    } else {
        let mut gen = if a.cores_only { TreeGenerator::cores() } else { TreeGenerator::all() };
        let mut err = Ok(());
        gen.for_each_tree(a.n, |t| {
            if err.is_ok() && (!a.triads || is_triad(t)) {
                err = emit(t, &mut out);
            }
        });
        err?;
    }
    if a.count_only {
        writeln!(out, "{count}")?;
    }
    out.flush()?;
    Ok(())
}

fn exit_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Yes(_) => 0,
        Verdict::No => 1,
        Verdict::Inconclusive => 2,
    }
}

fn cmd_check(a: CheckArgs) -> Result<u8> {
    let text = fs::read_to_string(&a.file).with_context(|| format!("reading {}", a.file.display()))?;
    let g = Digraph::parse(&text)?;
    let c = make_condition(&a.condition)?;
    let opts = Options { idempotent: a.idempotent.then_some(true), ..Options::default() };
    let v = satisfies_with(&g, &c, a.mode.mode(), &opts)?;
    println!("{}", v.label());
    if let (Some(path), Verdict::Yes(w)) = (&a.witness, &v) {
        let mut wr = csv::WriterBuilder::new().flexible(true).from_path(path)?;
        for t in &w.tables {
            for (args, val) in t.rows() {
                let mut rec = vec![t.symbol.clone()];
                rec.extend(args.iter().map(usize::to_string));
                rec.push(val.to_string());
                wr.write_record(&rec)?;
            }
        }
        wr.flush()?;
    }
    Ok(exit_code(&v))
}

/// Splits `a,HM(2),Sigma(2,3)` at commas outside parentheses.
fn split_conditions(raw: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    for s in raw {
        let mut depth = 0i32;
        let mut cur = String::new();
        for ch in s.chars() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    out.push(std::mem::take(&mut cur).trim().to_string());
                    continue;
                }
                _ => {}
            }
            cur.push(ch);
        }
        if !cur.trim().is_empty() {
            out.push(cur.trim().to_string());
        }
    }
    out
}

struct Item {
    code: String,
    graph: Digraph,
}

fn family_items(n: usize, family: Family) -> Result<Vec<Item>> {
    let mut items = Vec::new();
    match family {
        Family::Cycles => {
            if n % 2 == 1 || n < 4 {
                bail!("balanced cycles need an even n ≥ 4");
            }
            for_each_balanced_word(n, |w| {
                let bits: Vec<bool> = (0..n).map(|i| w >> i & 1 == 1).collect();
                let code = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
                items.push(Item { code, graph: Digraph::cycle_from_bits(&bits) });
            });
        }
        Family::Trees | Family::Triads => {
            TreeGenerator::cores().for_each_tree(n, |t| {
                if family == Family::Trees || is_triad(t) {
                    let code = String::from_utf8(t.tree_canonical_code().unwrap()).unwrap();
                    items.push(Item { code, graph: t.clone() });
                }
            });
        }
    }
    Ok(items)
}

fn budget() -> Result<Option<Duration>> {
    match std::env::var("POLYCSP_BUDGET_SECS") {
        Ok(s) => Ok(Some(Duration::from_secs_f64(s.parse().context("POLYCSP_BUDGET_SECS")?))),
        Err(_) => Ok(None),
    }
}

fn cmd_classify(a: ClassifyArgs) -> Result<u8> {
    let names = split_conditions(&a.conditions);
    let conds: Vec<MinorCondition> = names.iter().map(|n| make_condition(n)).collect::<Result<_, _>>()?;
    let mut items = family_items(a.n, a.family)?;
    if let Some(tok) = &a.resume {
        let pos = items.iter().position(|it| &it.code == tok).context("resume token not found")?;
        items.drain(..=pos);
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.parallel.max(1)).build()?;
    let mode = a.mode.mode();
    let budget = budget()?;
    let start = Instant::now();
    let chunk = 32 * a.parallel.max(1);
    let mut records: Vec<(String, Vec<&'static str>, u128)> = Vec::new();
    let mut resume = None;
    for (i, part) in items.chunks(chunk).enumerate() {
        if let Some(b) = budget {
            if i > 0 && start.elapsed() > b {
                resume = Some(items[i * chunk - 1].code.clone());
                break;
            }
        }
        let done: Vec<Result<(String, Vec<&'static str>, u128)>> = pool.install(|| {
            part.par_iter()
                .map(|it| {
                    let t = Instant::now();
                    let vs = conds
                        .iter()
                        .map(|c| Ok(satisfies_with(&it.graph, c, mode, &Options::default())?.label()))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((it.code.clone(), vs, t.elapsed().as_millis()))
                })
                .collect()
        });
        for r in done {
            records.push(r?);
        }
    }
    records.sort_by(|x, y| x.0.cmp(&y.0));

    let mut out = sink(&a.out)?;
    writeln!(out, "{CSV_VERSION}")?;
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let mut header = vec!["code".to_string(), "n".to_string()];
    header.extend(names.iter().cloned());
    if a.timing {
        header.push("millis".into());
    }
    wr.write_record(&header)?;
    for (code, vs, ms) in &records {
        let mut rec = vec![code.clone(), a.n.to_string()];
        rec.extend(vs.iter().map(|s| s.to_string()));
        if a.timing {
            rec.push(ms.to_string());
        }
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    let mut out = wr.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    for (k, name) in names.iter().enumerate() {
        let count = |l: &str| records.iter().filter(|r| r.1[k] == l).count();
        writeln!(
            out,
            "# summary {name} yes={} no={} inconclusive={}",
            count("Yes"),
            count("No"),
            count("Inconclusive")
        )?;
    }
    if let Some(tok) = &resume {
        writeln!(out, "# resume {tok}")?;
    }
    out.flush()?;
    Ok(if resume.is_some() { EXIT_PARTIAL } else { 0 })
}

fn cmd_cycles(op: CyclesOp) -> Result<()> {
    match op {
        CyclesOp::Implies { c, d } => println!("{}", cycles::clc_implies(&c, &d)),
        CyclesOp::Ppleq { d, c } => println!("{}", cycles::cycles_ppleq(&d, &c)?),
        CyclesOp::Decompose { c } => {
            let parts: Vec<String> = cycles::pcl_decomposition(&c)?.iter().map(|p| p.to_string()).collect();
            println!("{}", parts.join(" | "));
        }
        CyclesOp::Meet { c, d } => println!("{}", cycles::clc_meet(&c, &d)),
        CyclesOp::Join { c, d } => println!("{}", cycles::clc_join(&c, &d)),
        CyclesOp::Satisfies { c, d } => println!("{}", cycles::satisfies_clc(&c, &d)),
        CyclesOp::Squarefree { c } => println!("{}", cycles::square_free_rep(&c)?),
    }
    Ok(())
}

const NAMED: &[(&str, &str)] = &[
    ("C1", include_str!("../../../fixtures/small/c1.txt")),
    ("P1", include_str!("../../../fixtures/small/p1.txt")),
    ("C2", include_str!("../../../fixtures/small/c2.txt")),
    ("C3", include_str!("../../../fixtures/small/c3.txt")),
    ("T3", include_str!("../../../fixtures/small/t3.txt")),
    ("C(1,3)", include_str!("../../../fixtures/small/c13.txt")),
    ("T4", include_str!("../../../fixtures/small/t4.txt")),
    ("T4-(02)", include_str!("../../../fixtures/small/t4_minus_02.txt")),
    ("C3+", include_str!("../../../fixtures/small/c3_plus.txt")),
    ("C2+", include_str!("../../../fixtures/small/c2_plus.txt")),
    ("C2++", include_str!("../../../fixtures/small/c2_plusplus.txt")),
    ("nCk022", include_str!("../../../fixtures/small/nck022.txt")),
    ("Ord", include_str!("../../../fixtures/small/ord2.txt")),
    ("T3u1C2", include_str!("../../../fixtures/small/t3_u1_c2.txt")),
    ("T3u0C2", include_str!("../../../fixtures/small/t3_u0_c2.txt")),
];

const TABLE_CONDITIONS: &[&str] = &["Sigma(2)", "Sigma(3)", "HM(1)", "HM(2)", "HM(4)", "HM(5)", "Majority", "GFS(3)"];

fn cmd_poset4() -> Result<()> {
    let siggers = make_condition("Siggers")?;
    let (mut total, mut cores, mut sig) = (0, 0, 0);
    for n in 0..=4 {
        for g in all_digraphs(n) {
            total += 1;
            if n > 0 && is_core(&g) {
                cores += 1;
                if satisfies_with(&g, &siggers, Mode::Full, &Options::default())?.is_yes() {
                    sig += 1;
                }
            }
        }
    }
    println!("digraphs {total}");
    println!("cores {cores}");
    println!("siggers {sig}");
    let conds: Vec<MinorCondition> = TABLE_CONDITIONS.iter().map(|c| make_condition(c)).collect::<Result<_, _>>()?;
    let mut wr = csv::Writer::from_writer(io::stdout().lock());
    let mut header = vec!["digraph"];
    header.extend(TABLE_CONDITIONS);
    wr.write_record(&header)?;
    for (name, text) in NAMED {
        let g = Digraph::parse(text)?;
        // Ord carries its two constants, so polymorphisms are idempotent
        let opts = Options { idempotent: (*name == "Ord").then_some(true), ..Options::default() };
        let mut rec = vec![name.to_string()];
        for c in &conds {
            rec.push(satisfies_with(&g, c, Mode::Full, &opts)?.label().to_string());
        }
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}
