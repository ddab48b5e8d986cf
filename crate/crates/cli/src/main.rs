use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use collab_auction::io::{self, TraceRef};
use collab_auction::oracles::{self, Instability};
use collab_auction::{
    demand, generate, run_auction, verify, verify_prices, GeneratorParams, Instance, Market,
    Prices, Verdict, VerificationTrace,
};

#[derive(Parser)]
#[command(
    name = "collab-auction",
    version,
    about = "Dynamic auction for multilateral contract markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the auction to a stable outcome and print it.
    Solve {
        instance: PathBuf,
        /// Starting prices; all zero when omitted.
        #[arg(long)]
        initial: Option<PathBuf>,
        /// Write the full round-by-round trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write one CSV row per round.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Check whether prices (or reported demand sets) support an equilibrium.
    Verify {
        instance: PathBuf,
        /// A prices file or a demand reports file.
        input: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Print one agent's demand sets at the given prices.
    Demand {
        instance: PathBuf,
        prices: PathBuf,
        #[arg(long)]
        agent: String,
    },
    /// Brute-force reference checks.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Generate a random instance with supermodular valuations.
    Gen(GenArgs),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Maximum aggregate valuation and its maximizers.
    Efficient { instance: PathBuf },
    /// Whether the prices support some set of contracts.
    Equilibrium { instance: PathBuf, prices: PathBuf },
    /// Whether an outcome is stable.
    Stable { instance: PathBuf, outcome: PathBuf },
    /// Whether every valuation is supermodular.
    Supermodular { instance: PathBuf },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    agents: usize,
    #[arg(long)]
    contracts: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    max_participants: usize,
    /// Inclusive range of additive values, as LO:HI.
    #[arg(long, default_value = "-10:10", value_parser = parse_range, allow_hyphen_values = true)]
    value_range: (i64, i64),
    #[arg(long, default_value_t = 0.3)]
    synergy_density: f64,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got `{s}`"))?;
    let num = |x: &str| x.trim().parse::<i64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((num(lo)?, num(hi)?))
}

/// Whether a command's answer was affirmative.
enum Answer {
    Yes,
    No,
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    io::read_instance(path).with_context(|| format!("reading instance {}", path.display()))
}

fn load_prices(path: &Path, market: &Market) -> anyhow::Result<Prices> {
    io::read_prices(path, market).with_context(|| format!("reading prices {}", path.display()))
}

fn print_levels(market: &Market, trace: &VerificationTrace) {
    for level in &trace.levels {
        println!(
            "level {}: G = {}",
            level.index,
            market.show_set(&level.partially_agreeable)
        );
    }
}

fn print_verdict(market: &Market, trace: &VerificationTrace) -> Answer {
    print_levels(market, trace);
    match &trace.verdict {
        Verdict::Equilibrium { support } => {
            println!("equilibrium: support {}", market.show_set(support));
            Answer::Yes
        }
        Verdict::NonEquilibrium { level, witness } => {
            println!(
                "non-equilibrium at level {level}: {} is partially agreeable and strongly demanded",
                market.show_set(witness)
            );
            Answer::No
        }
    }
}

fn solve(
    instance: &Path,
    initial: Option<&Path>,
    trace_out: Option<&Path>,
    summary: Option<&Path>,
) -> anyhow::Result<Answer> {
    let inst = load_instance(instance)?;
    let market = inst.market();
    let start = match initial {
        Some(p) => load_prices(p, market)?,
        None => Prices::zero(market),
    };
    let trace = run_auction(&inst, &start)?;
    if let Some(path) = trace_out {
        io::emit_trace(market, TraceRef::Auction(&trace), path)?;
    }
    if let Some(path) = summary {
        io::emit_summary(&trace, path)?;
    }
    let values = trace.lyapunov_values();
    eprintln!(
        "equilibrium after {} round(s); lyapunov {} -> {}",
        trace.total_rounds(),
        values[0],
        values[values.len() - 1]
    );
    print!("{}", io::emit_outcome(market, &trace.outcome));
    Ok(Answer::Yes)
}

fn verify_cmd(instance: &Path, input: &Path, trace_out: Option<&Path>) -> anyhow::Result<Answer> {
    let text =
        std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", input.display()))?;
    let (market, trace) = if doc.get("reports").is_some() {
        let market = io::read_market(instance)?;
        let reports = io::parse_reports(&text, &market)?;
        let trace = verify(&market, &reports)?;
        (market, trace)
    } else if doc.get("prices").is_some() {
        let inst = load_instance(instance)?;
        let prices = io::parse_prices(&text, inst.market())?;
        oracles::require_gross_complements(&inst)?;
        let (_, trace) = verify_prices(&inst, &prices)?;
        (inst.market().clone(), trace)
    } else {
        bail!(
            "{}: expected a `prices` or `reports` document",
            input.display()
        );
    };
    if let Some(path) = trace_out {
        io::emit_trace::<i64>(&market, TraceRef::Verification(&trace), path)?;
    }
    Ok(print_verdict(&market, &trace))
}

fn demand_cmd(instance: &Path, prices: &Path, agent: &str) -> anyhow::Result<Answer> {
    let inst = load_instance(instance)?;
    let market = inst.market();
    let prices = load_prices(prices, market)?;
    let a = market.agent(agent)?;
    let report = demand(&inst, a, &prices.for_agent(market, a))?;
    for set in report.sets.sets() {
        println!("{}", market.show_set(set));
    }
    println!("optimum: {}", report.optimum);
    Ok(Answer::Yes)
}

fn oracle_cmd(cmd: &OracleCommand) -> anyhow::Result<Answer> {
    match cmd {
        OracleCommand::Efficient { instance } => {
            let inst = load_instance(instance)?;
            let m = inst.market();
            let e = oracles::efficient_sets(&inst)?;
            println!("max value: {}", e.max_value);
            let shown: Vec<_> = e.maximizers.iter().map(|s| m.show_set(s)).collect();
            println!("maximizers: {}", shown.join(" "));
            println!("largest: {}", m.show_set(&e.largest));
            Ok(Answer::Yes)
        }
        OracleCommand::Equilibrium { instance, prices } => {
            let inst = load_instance(instance)?;
            let m = inst.market();
            let p = load_prices(prices, m)?;
            match oracles::is_equilibrium_price(&inst, &p)? {
                Some(phi) => {
                    println!("equilibrium: supports {}", m.show_set(&phi));
                    Ok(Answer::Yes)
                }
                None => {
                    println!("not an equilibrium price vector");
                    Ok(Answer::No)
                }
            }
        }
        OracleCommand::Stable { instance, outcome } => {
            let inst = load_instance(instance)?;
            let m = inst.market();
            let out = io::read_outcome(outcome, m)
                .with_context(|| format!("reading outcome {}", outcome.display()))?;
            match oracles::is_stable(&inst, &out)? {
                None => {
                    println!("stable");
                    Ok(Answer::Yes)
                }
                Some(Instability::NotLargestEfficient { signed, largest }) => {
                    println!(
                        "not stable: signed {} but the largest efficient set is {}",
                        m.show_set(&signed),
                        m.show_set(&largest)
                    );
                    Ok(Answer::No)
                }
                Some(Instability::NotIndividuallyRational { agent, keep }) => {
                    println!(
                        "not stable: {} is better off keeping only {}",
                        m.agent_name(agent),
                        m.show_set(&keep)
                    );
                    Ok(Answer::No)
                }
            }
        }
        OracleCommand::Supermodular { instance } => {
            let inst = load_instance(instance)?;
            let m = inst.market();
            let mut all = true;
            for a in m.agents() {
                match oracles::is_supermodular(&inst, a) {
                    Ok(()) => println!("{}: ok", m.agent_name(a)),
                    Err(w) => {
                        all = false;
                        println!(
                            "{}: v({}) + v({}) exceeds v(union) + v(intersection)",
                            m.agent_name(a),
                            m.show_set(&w.phi),
                            m.show_set(&w.psi)
                        );
                    }
                }
            }
            Ok(if all { Answer::Yes } else { Answer::No })
        }
    }
}

fn gen_cmd(args: &GenArgs) -> anyhow::Result<Answer> {
    let params = GeneratorParams {
        agents: args.agents,
        contracts: args.contracts,
        max_participants: args.max_participants,
        value_range: args.value_range,
        synergy_density: args.synergy_density,
        seed: args.seed,
    };
    let inst: Instance = generate(&params)?;
    std::fs::write(&args.output, io::emit_instance(&inst))
        .with_context(|| format!("writing {}", args.output.display()))?;
    Ok(Answer::Yes)
}

fn run(cli: Cli) -> anyhow::Result<Answer> {
    match &cli.command {
        Command::Solve {
            instance,
            initial,
            trace,
            summary,
        } => solve(
            instance,
            initial.as_deref(),
            trace.as_deref(),
            summary.as_deref(),
        ),
        Command::Verify {
            instance,
            input,
            trace,
        } => verify_cmd(instance, input, trace.as_deref()),
        Command::Demand {
            instance,
            prices,
            agent,
        } => demand_cmd(instance, prices, agent),
        Command::Oracle(cmd) => oracle_cmd(cmd),
        Command::Gen(args) => gen_cmd(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Answer::Yes) => ExitCode::SUCCESS,
        Ok(Answer::No) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            let precondition = err
                .chain()
                .filter_map(|e| e.downcast_ref::<collab_auction::Error>())
                .any(collab_auction::Error::is_precondition);
            ExitCode::from(if precondition { 3 } else { 2 })
        }
    }
}
