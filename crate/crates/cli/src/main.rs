use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rw_core::bench::{bench_power2, ratios};
use rw_core::oracle::{run_contract_suite, shrink, with_big_stack, Params};
use rw_core::rewriter::{format_trace, DEFAULT_FUEL};
use rw_core::rules::{corpus, load_items, parse_definitions_with_pos};
use rw_core::syntax::parse_term;
use rw_core::world::{EquivCtx, World};
use rw_core::{rewrite_term, Config, RewriteOutcome};

#[derive(Parser)]
#[command(name = "rw", about = "Conditional term rewriter with binder rules")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rewrite a term and print the result and the bindings it made.
    Rewrite(TermArgs),
    /// Print the rule-application trace of a rewrite.
    Trace(TermArgs),
    /// Check the rewriter's contract on generated cases.
    Check(CheckArgs),
    /// Compare hypothesis-check costs of the two power2p rule styles.
    BenchPower2 {
        #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16, 32])]
        n: Vec<usize>,
    },
}

#[derive(Args)]
struct TermArgs {
    /// Definition files; `corpus` names the bundled corpus.
    files: Vec<String>,
    #[arg(long)]
    term: String,
    /// Comma-separated equivalence names.
    #[arg(long, default_value = "iff")]
    equiv: String,
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    #[arg(long)]
    trace_file: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    files: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    cases: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    /// Write one verdict record per case to this file.
    #[arg(long)]
    trace_file: Option<PathBuf>,
}

fn read_source(file: &str) -> Result<(String, String)> {
    if file == "corpus" {
        if let Ok(path) = std::env::var("RW_CORPUS") {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {path}"))?;
            return Ok((path, text));
        }
        return Ok(("corpus".into(), corpus().to_string()));
    }
    let text = fs::read_to_string(file).with_context(|| format!("reading {file}"))?;
    Ok((file.to_string(), text))
}

fn load(files: &[String]) -> Result<World> {
    let default = ["corpus".to_string()];
    let files = if files.is_empty() { &default[..] } else { files };
    let mut world = World::new();
    rw_core::meta::register_standard(&mut world);
    for f in files {
        let (name, text) = read_source(f)?;
        let items = parse_definitions_with_pos(&text).map_err(|e| anyhow!("{name}:{e}"))?;
        load_items(&mut world, &items).map_err(|e| anyhow!("{name}:{e}"))?;
    }
    Ok(world)
}

fn parse_ctx(world: &World, s: &str) -> Result<EquivCtx> {
    let names: Vec<&str> = s.split(',').map(str::trim).filter(|n| !n.is_empty()).collect();
    if names.is_empty() {
        bail!("empty equivalence context");
    }
    for n in &names {
        if *n != "unequiv" && world.equiv(n).is_none() {
            bail!("unknown equivalence {n}");
        }
    }
    Ok(EquivCtx::of(names))
}

fn rewrite(args: &TermArgs, show_trace: bool) -> Result<ExitCode> {
    let world = load(&args.files)?;
    let term = parse_term(&args.term).map_err(|e| anyhow!("--term: {e}"))?;
    let ctx = parse_ctx(&world, &args.equiv)?;
    let config = Config {
        fuel: args.fuel,
        trace: show_trace || args.trace_file.is_some(),
        mutation: None,
    };
    let (outcome, st) = with_big_stack(|| rewrite_term(&world, &term, &Default::default(), &ctx, config))?;
    let trace = format_trace(&st.trace);
    if let Some(path) = &args.trace_file {
        fs::write(path, &trace).with_context(|| format!("writing {}", path.display()))?;
    }
    let mut out = std::io::stdout().lock();
    if show_trace {
        write!(out, "{trace}")?;
    }
    match outcome {
        RewriteOutcome::Done(t, sigma) => {
            if show_trace {
                writeln!(out, "=> {t}")?;
            } else {
                writeln!(out, "{t}")?;
                writeln!(out, "{sigma}")?;
            }
            Ok(ExitCode::SUCCESS)
        }
        RewriteOutcome::Aborted => {
            writeln!(out, "aborted")?;
            Ok(ExitCode::from(2))
        }
    }
}

fn check(args: &CheckArgs) -> Result<ExitCode> {
    let world = load(&args.files)?;
    if args.cases == 0 {
        eprintln!("warning: no cases requested; nothing checked");
    }
    let mut params = Params::default();
    params.config.fuel = args.fuel.min(params.config.fuel);
    let mut log = match &args.trace_file {
        Some(p) => Some(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => None,
    };
    let mut io_err = None;
    let seeds = args.seed..args.seed + args.cases;
    let summary = run_contract_suite(&world, seeds, &params, false, |r| {
        if let Some(f) = log.as_mut() {
            if let Err(e) = writeln!(f, "{r}") {
                io_err.get_or_insert(e);
            }
        }
    });
    if let Some(e) = io_err {
        return Err(e.into());
    }
    println!("cases         {}", summary.cases);
    println!("pass          {}", summary.pass);
    println!("fail          {}", summary.fail);
    println!("inconclusive  {}", summary.inconclusive);
    if let Some((seed, c)) = &summary.first_failure {
        let small = with_big_stack(|| shrink(&world, c, params.config, params.eval_fuel));
        println!("first failure at seed {seed}");
        println!("{small}");
    }
    Ok(if summary.fail == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn bench(ns: &[usize]) -> Result<ExitCode> {
    let rows = bench_power2(ns)?;
    println!("{:>6} {:>12} {:>12}", "n", "redundant", "binder");
    for r in &rows {
        println!("{:>6} {:>12} {:>12}", r.n, r.redundant, r.binder);
    }
    for (a, b, red, bin) in ratios(&rows) {
        println!("{a:>3} -> {b:<3} redundant x{red:.2}  binder x{bin:.2}");
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.cmd {
        Cmd::Rewrite(a) => rewrite(a, false),
        Cmd::Trace(a) => rewrite(a, true),
        Cmd::Check(a) => check(a),
        Cmd::BenchPower2 { n } => bench(n),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
