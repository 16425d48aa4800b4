//! Command-line driver. Exit codes: 0 = success / positive verdict,
//! 1 = negative verdict (blocked, unsolvable, answer "no"), 2 = input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coremarket_core::gen::{
    gen_improvement, gen_random, PrefModel, RandomModel,
};
use coremarket_core::improve::hm_improve;
use coremarket_core::market::{
    check_core, check_strict_core, AgentId, Allocation, CoreVerdict, HousingMarket,
    StrictCoreVerdict,
};
use coremarket_core::oracle::{self, StrictImprovementKind};
use coremarket_core::reductions::{
    gadget_arc_in_core, gadget_forbidden_arc, gadget_maxcore, gadget_strict_improvement, Digraph,
    ImprovementGadget,
};
use coremarket_core::roommates::{check_stable, find_stable, sr_improve, RoommatesInstance};
use coremarket_core::ttc;

use crate::fmt::{
    parse_allocation, parse_digraph, parse_market, parse_matching, parse_roommates,
    serialize_allocation, serialize_market, serialize_matching,
};

#[derive(Parser)]
#[command(
    name = "coremarket",
    version,
    about = "Housing-market and roommates algorithms: TTC, core checks, repair, oracles, gadgets"
)]
struct Cli {
    /// Emit machine-readable JSON lines instead of human-readable text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Top Trading Cycles on a market file; prints the allocation.
    Ttc {
        market: PathBuf,
        /// Re-verify the output with the core checker.
        #[arg(long)]
        certify: bool,
    },
    /// Check whether an allocation lies in the core (or strict core).
    Check {
        market: PathBuf,
        allocation: PathBuf,
        /// Check strict-core membership instead.
        #[arg(long)]
        strict: bool,
    },
    /// Repair a core allocation after agent p's house gained value.
    HmImprove {
        h: PathBuf,
        h2: PathBuf,
        /// The improving agent.
        #[arg(long)]
        p: String,
        /// Core allocation of the old market.
        #[arg(long)]
        allocation: PathBuf,
    },
    /// Find a stable roommates matching (Irving's algorithm).
    SrSolve { file: PathBuf },
    /// Repair a stable matching after a (p, q)-improvement.
    SrImprove {
        h: PathBuf,
        h2: PathBuf,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        /// Stable matching of the old instance.
        #[arg(long)]
        matching: PathBuf,
    },
    /// Exact brute-force answers on small markets.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Instance generators: hardness gadgets and random markets.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Timing measurements, CSV on stdout.
    Bench {
        /// Market sizes (total description length), comma-separated.
        #[arg(long, default_value = "10000,20000,40000,80000")]
        sizes: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// List every core allocation, one per line.
    Enumerate {
        market: PathBuf,
        /// Keep only strict-core allocations.
        #[arg(long)]
        strict_core: bool,
        /// Split the enumeration across worker threads.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Does some core allocation use the arc (from, to)?
    ArcInCore {
        market: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Does some core allocation avoid the arc (from, to)?
    ForbiddenArc {
        market: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Does some core allocation let the agent trade?
    Trading {
        market: PathBuf,
        #[arg(long)]
        agent: String,
    },
    /// Maximum number of trading agents over the core, with a witness.
    MaxCore { market: PathBuf },
    /// Decide a strict-improvement question between two markets.
    Decide {
        kind: DecideKind,
        h: PathBuf,
        h2: PathBuf,
        #[arg(long)]
        p: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DecideKind {
    Psib,
    Nsib,
    Psiw,
    Nsiw,
}

impl From<DecideKind> for StrictImprovementKind {
    fn from(k: DecideKind) -> Self {
        match k {
            DecideKind::Psib => StrictImprovementKind::Psib,
            DecideKind::Nsib => StrictImprovementKind::Nsib,
            DecideKind::Psiw => StrictImprovementKind::Psiw,
            DecideKind::Nsiw => StrictImprovementKind::Nsiw,
        }
    }
}

#[derive(Subcommand)]
enum GenCmd {
    /// Arc-in-core hardness gadget from a digraph file.
    ArcInCore { digraph: PathBuf },
    /// Forbidden-arc hardness gadget.
    ForbiddenArc { digraph: PathBuf },
    /// Max-core inapproximability gadget.
    Maxcore {
        digraph: PathBuf,
        /// Epsilon as `num/den` (or an integer), 0 < eps <= 1.
        #[arg(long, default_value = "1")]
        epsilon: String,
        /// Override the subdivision length K.
        #[arg(long)]
        force_k: Option<usize>,
    },
    /// Improvement pair for the possible/necessary best-house questions.
    Psib { digraph: PathBuf },
    /// Improvement pair for the possible/necessary worst-house questions.
    Psiw { digraph: PathBuf },
    /// Seeded random market.
    Random(RandomArgs),
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModelArg::Strict)]
    model: ModelArg,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Tie probability (weak model).
    #[arg(long, default_value_t = 0.3)]
    tie: f64,
    /// Cover probability (poset model).
    #[arg(long, default_value_t = 0.3)]
    edge: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Strict,
    Weak,
    Poset,
}

struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            msg: msg.into(),
        }
    }

    fn verdict(msg: impl Into<String>) -> Failure {
        Failure {
            code: 1,
            msg: msg.into(),
        }
    }
}

/// Runs the CLI on the given argument list (`args[0]` is the program name).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(f) => {
            if !f.msg.is_empty() {
                eprintln!("{}", f.msg);
            }
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_market(path: &Path) -> Result<HousingMarket, Failure> {
    parse_market(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_roommates(path: &Path) -> Result<RoommatesInstance, Failure> {
    parse_roommates(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn agent_by_name(h: &HousingMarket, name: &str) -> Result<AgentId, Failure> {
    h.agents()
        .find(|&a| h.name(a) == name)
        .ok_or_else(|| Failure::input(format!("unknown agent `{name}`")))
}

fn roommate_by_name(inst: &RoommatesInstance, name: &str) -> Result<AgentId, Failure> {
    inst.agents()
        .find(|&a| inst.name(a) == name)
        .ok_or_else(|| Failure::input(format!("unknown agent `{name}`")))
}

fn oracle_cap() -> Result<Option<usize>, Failure> {
    match std::env::var("COREMARKET_ORACLE_CAP") {
        Ok(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Failure::input("COREMARKET_ORACLE_CAP must be an integer")),
        Err(_) => Ok(None),
    }
}

fn json_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn allocation_json(h: &HousingMarket, x: &Allocation) -> String {
    let fields: Vec<String> = h
        .agents()
        .map(|a| {
            format!(
                "\"{}\":\"{}\"",
                json_escape(h.name(a)),
                json_escape(h.name(x.get(a)))
            )
        })
        .collect();
    format!("{{{}}}", fields.join(","))
}

fn allocation_line(h: &HousingMarket, x: &Allocation) -> String {
    let parts: Vec<String> = h
        .agents()
        .map(|a| format!("{}->{}", h.name(a), h.name(x.get(a))))
        .collect();
    parts.join(" ")
}

fn print_bool(json: bool, what: &str, answer: bool) -> Result<(), Failure> {
    if json {
        println!("{{\"{}\":{}}}", json_escape(what), answer);
    } else {
        println!("{answer}");
    }
    if answer {
        Ok(())
    } else {
        Err(Failure::verdict(String::new()))
    }
}

fn parse_epsilon(s: &str) -> Result<(u64, u64), Failure> {
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s.trim(), "1"),
    };
    let num = num
        .parse::<u64>()
        .map_err(|_| Failure::input("epsilon must be `num/den` with integers"))?;
    let den = den
        .parse::<u64>()
        .map_err(|_| Failure::input("epsilon must be `num/den` with integers"))?;
    Ok((num, den))
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Ttc { market, certify } => {
            let h = load_market(market)?;
            let x = ttc(&h);
            if *certify {
                if let CoreVerdict::Blocked(cycle) = check_core(&h, &x) {
                    return Err(Failure::verdict(format!(
                        "certification failed: blocking cycle {cycle:?}"
                    )));
                }
            }
            if cli.json {
                println!("{}", allocation_json(&h, &x));
            } else {
                print!("{}", serialize_allocation(&h, &x));
            }
            Ok(())
        }
        Command::Check {
            market,
            allocation,
            strict,
        } => {
            let h = load_market(market)?;
            let x = parse_allocation(&read(allocation)?, &h)
                .map_err(|e| Failure::input(format!("{}: {e}", allocation.display())))?;
            let (ok, witness) = if *strict {
                match check_strict_core(&h, &x) {
                    StrictCoreVerdict::InStrictCore => (true, Vec::new()),
                    StrictCoreVerdict::WeaklyBlocked(c) => (false, c),
                }
            } else {
                match check_core(&h, &x) {
                    CoreVerdict::InCore => (true, Vec::new()),
                    CoreVerdict::Blocked(c) => (false, c),
                }
            };
            if ok {
                println!("{}", if *strict { "in strict core" } else { "in core" });
                Ok(())
            } else {
                let names: Vec<&str> = witness.iter().map(|&a| h.name(a)).collect();
                Err(Failure::verdict(format!(
                    "blocked by cycle: {}",
                    names.join(" ")
                )))
            }
        }
        Command::HmImprove {
            h,
            h2,
            p,
            allocation,
        } => {
            let old = load_market(h)?;
            let new = load_market(h2)?;
            let p = agent_by_name(&new, p)?;
            let x = parse_allocation(&read(allocation)?, &old)
                .map_err(|e| Failure::input(format!("{}: {e}", allocation.display())))?;
            let x2 = hm_improve(&old, &new, p, &x)
                .map_err(|e| Failure::input(format!("precondition failed: {e}")))?;
            if cli.json {
                println!("{}", allocation_json(&new, &x2));
            } else {
                print!("{}", serialize_allocation(&new, &x2));
            }
            Ok(())
        }
        Command::SrSolve { file } => {
            let inst = load_roommates(file)?;
            match find_stable(&inst).map_err(|e| Failure::input(format!("{e}")))? {
                Some(m) => {
                    print!("{}", serialize_matching(&inst, &m));
                    Ok(())
                }
                None => Err(Failure::verdict("no stable matching".to_string())),
            }
        }
        Command::SrImprove {
            h,
            h2,
            p,
            q,
            matching,
        } => {
            let old = load_roommates(h)?;
            let new = load_roommates(h2)?;
            let p = roommate_by_name(&new, p)?;
            let q = roommate_by_name(&new, q)?;
            let m = parse_matching(&read(matching)?, &old)
                .map_err(|e| Failure::input(format!("{}: {e}", matching.display())))?;
            match sr_improve(&old, &new, p, q, &m)
                .map_err(|e| Failure::input(format!("precondition failed: {e}")))?
            {
                Some(m2) => {
                    debug_assert!(check_stable(&new, &m2).is_stable());
                    print!("{}", serialize_matching(&new, &m2));
                    Ok(())
                }
                None => Err(Failure::verdict("no stable matching".to_string())),
            }
        }
        Command::Oracle(cmd) => run_oracle(cli.json, cmd),
        Command::Gen(cmd) => run_gen(cli.json, cmd),
        Command::Bench { sizes, seed } => run_bench(sizes, *seed),
    }
}

fn oracle_err(e: oracle::OracleError) -> Failure {
    Failure::input(format!("{e}"))
}

/// Core enumeration split across threads by agent 0's assigned house; the
/// merged result is sorted so the output matches a sequential run.
fn enumerate_parallel(h: &HousingMarket, threads: usize) -> Vec<Allocation> {
    let first = AgentId::new(0);
    let choices: Vec<AgentId> = h.pref(first).acceptable().to_vec();
    let mut out: Vec<Allocation> = std::thread::scope(|scope| {
        let handles: Vec<_> = choices
            .chunks(choices.len().div_ceil(threads).max(1))
            .map(|chunk| {
                scope.spawn(move || {
                    let mut part = Vec::new();
                    for &b in chunk {
                        let (core, _) = oracle::core_allocations_forced(h, &[(first, b)]);
                        part.extend(core);
                    }
                    part
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|j| j.join().expect("worker panicked"))
            .collect()
    });
    out.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
    out
}

fn run_oracle(json: bool, cmd: &OracleCmd) -> Result<(), Failure> {
    let cap = oracle_cap()?;
    match cmd {
        OracleCmd::Enumerate {
            market,
            strict_core,
            threads,
        } => {
            let h = load_market(market)?;
            let core = match threads {
                Some(t) if *t > 1 => {
                    if let Some(cap) = cap {
                        if h.n() > cap {
                            return Err(oracle_err(oracle::OracleError::TooLarge {
                                agents: h.n(),
                                cap,
                            }));
                        }
                    }
                    enumerate_parallel(&h, *t)
                }
                _ => oracle::enumerate_core(&h, cap).map_err(oracle_err)?.core,
            };
            for x in core
                .iter()
                .filter(|x| !strict_core || check_strict_core(&h, x) == StrictCoreVerdict::InStrictCore)
            {
                if json {
                    println!("{}", allocation_json(&h, x));
                } else {
                    println!("{}", allocation_line(&h, x));
                }
            }
            Ok(())
        }
        OracleCmd::ArcInCore { market, from, to } => {
            let h = load_market(market)?;
            let a = agent_by_name(&h, from)?;
            let b = agent_by_name(&h, to)?;
            let ans = oracle::arc_in_core(&h, a, b, cap).map_err(oracle_err)?;
            print_bool(json, "arc_in_core", ans)
        }
        OracleCmd::ForbiddenArc { market, from, to } => {
            let h = load_market(market)?;
            let a = agent_by_name(&h, from)?;
            let b = agent_by_name(&h, to)?;
            let ans = oracle::forbidden_arc_in_core(&h, a, b, cap).map_err(oracle_err)?;
            print_bool(json, "forbidden_arc_in_core", ans)
        }
        OracleCmd::Trading { market, agent } => {
            let h = load_market(market)?;
            let a = agent_by_name(&h, agent)?;
            let ans = oracle::agent_trading_in_core(&h, a, cap).map_err(oracle_err)?;
            print_bool(json, "trading_in_core", ans)
        }
        OracleCmd::MaxCore { market } => {
            let h = load_market(market)?;
            let (opt, witness) = oracle::max_core(&h, cap).map_err(oracle_err)?;
            if json {
                println!(
                    "{{\"opt\":{opt},\"witness\":{}}}",
                    allocation_json(&h, &witness)
                );
            } else {
                println!("opt {opt}");
                print!("{}", serialize_allocation(&h, &witness));
            }
            Ok(())
        }
        OracleCmd::Decide { kind, h, h2, p } => {
            let old = load_market(h)?;
            let new = load_market(h2)?;
            let p = agent_by_name(&new, p)?;
            let ans = oracle::strict_improvement_decide((*kind).into(), &old, &new, p, cap)
                .map_err(oracle_err)?;
            print_bool(json, "decide", ans)
        }
    }
}

fn load_digraph(path: &Path) -> Result<Digraph, Failure> {
    parse_digraph(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn print_gadget(json: bool, h: &HousingMarket, arc: (AgentId, AgentId)) {
    if json {
        println!(
            "{{\"arc\":[\"{}\",\"{}\"],\"market\":\"{}\"}}",
            json_escape(h.name(arc.0)),
            json_escape(h.name(arc.1)),
            json_escape(&serialize_market(h).replace('\n', "\\n"))
        );
    } else {
        println!("# arc: {} -> {}", h.name(arc.0), h.name(arc.1));
        print!("{}", serialize_market(h));
    }
}

fn print_pair(json: bool, before: &HousingMarket, after: &HousingMarket, p: AgentId) {
    if json {
        println!(
            "{{\"p\":\"{}\",\"before\":\"{}\",\"after\":\"{}\"}}",
            json_escape(after.name(p)),
            json_escape(&serialize_market(before).replace('\n', "\\n")),
            json_escape(&serialize_market(after).replace('\n', "\\n"))
        );
    } else {
        println!("# p: {}", after.name(p));
        print!("{}", serialize_market(before));
        println!("# --- improved market ---");
        print!("{}", serialize_market(after));
    }
}

fn run_gen(json: bool, cmd: &GenCmd) -> Result<(), Failure> {
    match cmd {
        GenCmd::ArcInCore { digraph } => {
            let d = load_digraph(digraph)?;
            let (h, arc) = gadget_arc_in_core(&d);
            print_gadget(json, &h, arc);
            Ok(())
        }
        GenCmd::ForbiddenArc { digraph } => {
            let d = load_digraph(digraph)?;
            let (h, arc) = gadget_forbidden_arc(&d);
            print_gadget(json, &h, arc);
            Ok(())
        }
        GenCmd::Maxcore {
            digraph,
            epsilon,
            force_k,
        } => {
            let d = load_digraph(digraph)?;
            let (num, den) = parse_epsilon(epsilon)?;
            let (h, k) =
                gadget_maxcore(&d, num, den, *force_k).map_err(|e| Failure::input(format!("{e}")))?;
            if json {
                println!(
                    "{{\"k\":{k},\"market\":\"{}\"}}",
                    json_escape(&serialize_market(&h).replace('\n', "\\n"))
                );
            } else {
                println!("# k: {k}");
                print!("{}", serialize_market(&h));
            }
            Ok(())
        }
        GenCmd::Psib { digraph } => {
            let d = load_digraph(digraph)?;
            let (before, after, p) = gadget_strict_improvement(ImprovementGadget::Psib, &d);
            print_pair(json, &before, &after, p);
            Ok(())
        }
        GenCmd::Psiw { digraph } => {
            let d = load_digraph(digraph)?;
            let (before, after, p) = gadget_strict_improvement(ImprovementGadget::Psiw, &d);
            print_pair(json, &before, &after, p);
            Ok(())
        }
        GenCmd::Random(args) => {
            let model = match args.model {
                ModelArg::Strict => PrefModel::Strict,
                ModelArg::Weak => PrefModel::Weak { tie: args.tie },
                ModelArg::Poset => PrefModel::Poset { edge: args.edge },
            };
            let h = gen_random(&RandomModel {
                seed: args.seed,
                n: args.n,
                model,
                density: args.density,
            })
            .map_err(|e| Failure::input(format!("{e}")))?;
            print!("{}", serialize_market(&h));
            Ok(())
        }
    }
}

/// Builds a sparse weak-order market of roughly the requested description
/// length (average acceptability degree ~10).
fn bench_market(size: usize, seed: u64) -> HousingMarket {
    let n = (size / 10).max(2);
    gen_random(&RandomModel {
        seed,
        n,
        model: PrefModel::Weak { tie: 0.3 },
        density: (10.0 / n as f64).min(1.0),
    })
    .expect("bench parameters are valid")
}

fn run_bench(sizes: &str, seed: u64) -> Result<(), Failure> {
    let sizes: Vec<usize> = sizes
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::input("--sizes must be comma-separated integers"))?;
    println!("op,size,agents,millis");
    for &size in &sizes {
        let h = bench_market(size, seed);
        let t = Instant::now();
        let x = ttc(&h);
        println!("ttc,{size},{},{:.3}", h.n(), t.elapsed().as_secs_f64() * 1e3);
        let (h2, p) = gen_improvement(&h, seed ^ 0x5bd1e995);
        let t = Instant::now();
        let x2 = hm_improve(&h, &h2, p, &x).map_err(|e| Failure::input(format!("{e}")))?;
        println!(
            "hm_improve,{size},{},{:.3}",
            h.n(),
            t.elapsed().as_secs_f64() * 1e3
        );
        std::hint::black_box(x2);
    }
    Ok(())
}
