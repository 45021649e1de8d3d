use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use preround_core::manipulation::{manipulate_ipre, ManipulationAnswer, Witness};
use preround_core::preround::rpre_win_counts;
use preround_core::reductions::{augment_for_ipre, build_dpre_instance, build_ipre_instance, reduce_matching_r1, reduce_sat};
use preround_core::verify::{
    check_dpre_properties, check_ipre_properties, check_rpre_properties, cross_check_ipre_instance,
    cross_check_rpre_instance, IpreCrossCheck,
};
use preround_core::{
    count_schedules, dpre_winner, enumerate_schedules, manipulate_dpre, manipulate_plain, manipulate_rpre,
    parse_profile, winner, BipartiteGraph, CheckConfig, CheckMode, CnfFormula, CompletionPolicy, DpreSearch,
    IpreSeed, Profile, PropertyReport, ProtocolId, ReductionError, ReductionOutput, RoleMap, Roster, Schedule,
    SearchBounds, TieBreak,
};

mod report;

/// Formula and graph copies written next to a reduction's output.
const FORMULA_FILE: &str = "formula.cnf";
const GRAPH_FILE: &str = "graph.bg";

#[derive(Parser)]
#[command(name = "preround", version, about = "Elections with an elimination preround")]
struct Cli {
    /// Seed for every randomized choice (sampling, random tie-breaks).
    #[arg(long, global = true, default_value_t = 0)]
    rng_seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Winner of an election, optionally after a preround.
    Winner(WinnerArgs),
    /// Number (and optionally the list) of preround schedules.
    Schedules(SchedulesArgs),
    /// Constructive manipulation by a single extra voter.
    Manipulate(ManipulateArgs),
    /// Build an election instance from a formula or a bipartite graph.
    #[command(subcommand)]
    Reduce(ReduceCommand),
    /// Check the claimed properties of a reduction output directory.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PreroundMode {
    None,
    Dpre,
    Rpre,
}

#[derive(Clone, Copy, ValueEnum)]
enum ManipulationMode {
    Plain,
    Dpre,
    Rpre,
    Ipre,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Dpre,
    Ipre,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Verdict {
    Yes,
    No,
}

#[derive(Args)]
struct WinnerArgs {
    #[arg(long, value_parser = ProtocolId::from_str)]
    protocol: ProtocolId,
    #[arg(long, value_enum, default_value = "none")]
    preround: PreroundMode,
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Comma separated names, highest priority first, or `random`.
    #[arg(long)]
    tiebreak: Option<String>,
    election: PathBuf,
}

#[derive(Args)]
struct SchedulesArgs {
    /// Roster size; names are c1..cM.
    #[arg(long, conflicts_with = "election")]
    candidates: Option<usize>,
    /// Print every schedule, one per line.
    #[arg(long)]
    list: bool,
    election: Option<PathBuf>,
}

#[derive(Args)]
struct ManipulateArgs {
    #[arg(long, value_enum)]
    mode: ManipulationMode,
    #[arg(long, value_parser = ProtocolId::from_str)]
    protocol: ProtocolId,
    #[arg(long)]
    prefer: String,
    /// Required win probability, `N/D` or `N`.
    #[arg(long, value_parser = BigRational::from_str)]
    threshold: Option<BigRational>,
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long)]
    seed: Option<PathBuf>,
    /// Role map enabling the assignment-indexed DPRE search.
    #[arg(long)]
    roles: Option<PathBuf>,
    /// IPRE completion: `auto`, `exhaustive`, or `template:a,b,c`.
    #[arg(long, default_value = "auto")]
    completion: String,
    #[arg(long)]
    tiebreak: Option<String>,
    /// Exit with status 2 unless the verdict matches.
    #[arg(long, value_enum)]
    expect: Option<Verdict>,
    election: PathBuf,
}

#[derive(Subcommand)]
enum ReduceCommand {
    /// CNF formula to a DPRE or IPRE instance.
    Sat(ReduceSatArgs),
    /// Bipartite graph to an RPRE instance.
    Matching(ReduceMatchingArgs),
}

#[derive(Args)]
struct ReduceSatArgs {
    #[arg(long, value_parser = ProtocolId::from_str)]
    protocol: ProtocolId,
    #[arg(long, value_enum, default_value = "dpre")]
    target: Target,
    /// Ballot coverage for the IPRE augmentation check.
    #[arg(long, default_value = "auto", value_parser = parse_check_mode)]
    mode: CheckMode,
    formula: PathBuf,
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReduceMatchingArgs {
    graph: PathBuf,
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyKind {
    Dpre,
    Rpre,
    Ipre,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    kind: VerifyKind,
    #[arg(long, value_parser = ProtocolId::from_str)]
    protocol: ProtocolId,
    /// `auto`, `exhaustive`, or `sampled:N`.
    #[arg(long, default_value = "auto", value_parser = parse_check_mode)]
    mode: CheckMode,
    #[arg(long)]
    tiebreak: Option<String>,
    /// Defaults to DIR/formula.cnf.
    #[arg(long)]
    formula: Option<PathBuf>,
    /// Defaults to DIR/graph.bg.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Tie-break policies in the IPRE value cross-check.
    #[arg(long, default_value_t = 3)]
    tiebreaks: usize,
    /// Sampled completions per tie-break policy in the IPRE cross-check.
    #[arg(long, default_value_t = 50)]
    completions: usize,
    dir: PathBuf,
}

fn parse_check_mode(s: &str) -> Result<CheckMode, String> {
    match s {
        "auto" => Ok(CheckMode::Auto),
        "exhaustive" => Ok(CheckMode::Exhaustive),
        _ => s
            .strip_prefix("sampled:")
            .and_then(|n| n.parse().ok())
            .filter(|&n| n > 0)
            .map(CheckMode::Sampled)
            .ok_or_else(|| format!("expected auto, exhaustive or sampled:N, got {s:?}")),
    }
}

/// Successful runs either pass or report a failed property or expectation.
enum Outcome {
    Success,
    Failure,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failure) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    let seed = cli.rng_seed;
    match cli.command {
        Command::Winner(a) => cmd_winner(a, seed),
        Command::Schedules(a) => cmd_schedules(a),
        Command::Manipulate(a) => cmd_manipulate(a, seed),
        Command::Reduce(ReduceCommand::Sat(a)) => cmd_reduce_sat(a, seed),
        Command::Reduce(ReduceCommand::Matching(a)) => cmd_reduce_matching(a),
        Command::Verify(a) => cmd_verify(a, seed),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_profile(path: &Path) -> Result<Profile> {
    parse_profile(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_schedule(path: &Path, roster: &Roster) -> Result<Schedule> {
    Schedule::parse(&read(path)?, roster).with_context(|| format!("parsing {}", path.display()))
}

fn load_formula(path: &Path) -> Result<CnfFormula> {
    CnfFormula::parse_dimacs(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_graph(path: &Path) -> Result<BipartiteGraph> {
    BipartiteGraph::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn tiebreak(choice: Option<&str>, roster: &Roster, seed: u64) -> Result<TieBreak> {
    match choice {
        None => Ok(TieBreak::roster_order(roster.len())),
        Some("random") => Ok(TieBreak::random(roster.len(), &mut ChaCha8Rng::seed_from_u64(seed))),
        Some(list) => TieBreak::from_names(roster, list).context("parsing --tiebreak"),
    }
}

fn cmd_winner(a: WinnerArgs, seed: u64) -> Result<Outcome> {
    let profile = load_profile(&a.election)?;
    let roster = profile.roster();
    let tb = tiebreak(a.tiebreak.as_deref(), roster, seed)?;
    match a.preround {
        PreroundMode::None => println!("winner {}", roster.name(winner(a.protocol, &profile, &tb))),
        PreroundMode::Dpre => {
            let path = a.schedule.ok_or_else(|| anyhow!("--preround dpre needs --schedule"))?;
            let schedule = load_schedule(&path, roster)?;
            let w = dpre_winner(a.protocol, &profile, &schedule, &tb)?;
            println!("winner {}", roster.name(w));
        }
        PreroundMode::Rpre => {
            let (counts, total) = rpre_win_counts(a.protocol, &profile, &tb)?;
            for (c, n) in roster.ids().zip(counts) {
                let prob = BigRational::new(BigInt::from(n), BigInt::from(total));
                println!("{} {prob}", roster.name(c));
            }
        }
    }
    Ok(Outcome::Success)
}

fn cmd_schedules(a: SchedulesArgs) -> Result<Outcome> {
    let roster = match (a.candidates, &a.election) {
        (Some(m), None) => Roster::new((1..=m).map(|i| format!("c{i}")))?,
        (None, Some(path)) => load_profile(path)?.roster().clone(),
        _ => bail!("give either --candidates M or an election file"),
    };
    let m = roster.len();
    println!("schedules: {}", count_schedules(m)?);
    if a.list {
        for s in enumerate_schedules(m)? {
            let text = s.to_text(&roster);
            println!("{}", text.trim_end().replace('\n', "; "));
        }
    }
    Ok(Outcome::Success)
}

fn completion_policy(choice: &str, roster: &Roster) -> Result<CompletionPolicy> {
    match choice {
        "auto" => Ok(CompletionPolicy::Auto),
        "exhaustive" => Ok(CompletionPolicy::Exhaustive),
        _ => {
            let list = choice
                .strip_prefix("template:")
                .ok_or_else(|| anyhow!("--completion expects auto, exhaustive or template:NAMES"))?;
            let names: Vec<&str> = list.split(',').map(str::trim).collect();
            let ballot = preround_core::Ballot::from_names(roster, &names).context("parsing completion template")?;
            Ok(CompletionPolicy::Template(ballot))
        }
    }
}

fn cmd_manipulate(a: ManipulateArgs, seed: u64) -> Result<Outcome> {
    let profile = load_profile(&a.election)?;
    let roster = profile.roster();
    let p = roster.lookup(&a.prefer)?;
    let tb = tiebreak(a.tiebreak.as_deref(), roster, seed)?;
    let bounds = SearchBounds::default();
    let threshold = || a.threshold.clone().ok_or_else(|| anyhow!("this mode needs --threshold N/D"));
    let answer = match a.mode {
        ManipulationMode::Plain => manipulate_plain(a.protocol, &profile, p, &tb, &bounds)?,
        ManipulationMode::Dpre => {
            let path = a.schedule.as_ref().ok_or_else(|| anyhow!("--mode dpre needs --schedule"))?;
            let schedule = load_schedule(path, roster)?;
            let roles = match &a.roles {
                Some(path) => Some(RoleMap::parse(&read(path)?, roster).with_context(|| format!("parsing {}", path.display()))?),
                None => None,
            };
            let search = match &roles {
                Some(r) => DpreSearch::Structured(r),
                None => DpreSearch::Exhaustive,
            };
            manipulate_dpre(a.protocol, &profile, p, &schedule, &tb, search, &bounds)?
        }
        ManipulationMode::Rpre => manipulate_rpre(a.protocol, &profile, p, &threshold()?, &tb, &bounds)?,
        ManipulationMode::Ipre => {
            let path = a.seed.as_ref().ok_or_else(|| anyhow!("--mode ipre needs --seed"))?;
            let ipre_seed = IpreSeed::parse(&read(path)?, roster).with_context(|| format!("parsing {}", path.display()))?;
            let policy = completion_policy(&a.completion, roster)?;
            manipulate_ipre(a.protocol, &profile, p, &threshold()?, &ipre_seed, &tb, &policy, &bounds)?
        }
    };
    print_answer(&answer, roster);
    let got = if answer.decision { Verdict::Yes } else { Verdict::No };
    Ok(match a.expect {
        Some(want) if want != got => Outcome::Failure,
        _ => Outcome::Success,
    })
}

fn bits(draws: &[bool]) -> String {
    if draws.is_empty() {
        return "-".into();
    }
    draws.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn print_answer(answer: &ManipulationAnswer, roster: &Roster) {
    let verdict = if answer.decision { "yes" } else { "no" };
    println!("{verdict} {}", answer.best_probability);
    match &answer.witness {
        Some(Witness::Ballot(b)) => println!("witness: {}", b.display(roster)),
        Some(Witness::Plan(plan)) => {
            for (draws, &answer) in &plan.answers {
                println!("draws={} -> answer={}", bits(draws), u8::from(answer));
            }
            for (draws, ballot) in &plan.completions {
                println!("draws={} -> completion: {}", bits(draws), ballot.display(roster));
            }
        }
        None => {}
    }
}

fn print_counts(r: &ReductionOutput) {
    println!("candidates: {} votes: {}", r.profile.num_candidates(), r.profile.total_votes());
}

fn cmd_reduce_sat(a: ReduceSatArgs, seed: u64) -> Result<Outcome> {
    let formula = load_formula(&a.formula)?;
    let base = reduce_sat(a.protocol, &formula)?;
    let out = match a.target {
        Target::Dpre => build_dpre_instance(&base)?,
        Target::Ipre => {
            let check = CheckConfig { mode: a.mode, rng_seed: seed };
            match augment_for_ipre(&base, &formula, a.protocol, &check) {
                Ok((augmented, reports)) => {
                    let out = build_ipre_instance(&augmented, &formula)?;
                    out.write_to(&a.out)?;
                    fs::write(a.out.join(FORMULA_FILE), formula.to_dimacs())?;
                    print_counts(&out);
                    for rep in &reports {
                        println!("{}", rep.line());
                    }
                    return Ok(Outcome::Success);
                }
                Err(ReductionError::PropertyCheck { reports, instance }) => {
                    let dir = a.out.join(report::DIR);
                    let path = report::write_augmentation(&dir, &instance, &reports)?;
                    for rep in &reports {
                        println!("{}", rep.line());
                    }
                    bail!("augmentation failed its property check; report at {}", path.display());
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    out.write_to(&a.out)?;
    fs::write(a.out.join(FORMULA_FILE), formula.to_dimacs())?;
    print_counts(&out);
    Ok(Outcome::Success)
}

fn cmd_reduce_matching(a: ReduceMatchingArgs) -> Result<Outcome> {
    let graph = load_graph(&a.graph)?;
    let out = reduce_matching_r1(&graph)?;
    out.write_to(&a.out)?;
    fs::write(a.out.join(GRAPH_FILE), graph.to_text())?;
    print_counts(&out);
    Ok(Outcome::Success)
}

fn cmd_verify(a: VerifyArgs, seed: u64) -> Result<Outcome> {
    let r = ReductionOutput::read_from(&a.dir)?;
    let tb = tiebreak(a.tiebreak.as_deref(), r.roster(), seed)?;
    let config = CheckConfig { mode: a.mode, rng_seed: seed };
    let formula = || load_formula(&a.formula.clone().unwrap_or_else(|| a.dir.join(FORMULA_FILE)));
    let reports: Vec<PropertyReport> = match a.kind {
        VerifyKind::Dpre => check_dpre_properties(&r, &formula()?, a.protocol, &tb, &config),
        VerifyKind::Rpre => {
            let graph = load_graph(&a.graph.clone().unwrap_or_else(|| a.dir.join(GRAPH_FILE)))?;
            let mut reports = check_rpre_properties(&r, &graph, a.protocol, &tb, &config);
            reports.push(cross_check_rpre_instance(&r, &graph, a.protocol, &tb, &config)?);
            reports
        }
        VerifyKind::Ipre => {
            let f = formula()?;
            let cross = IpreCrossCheck {
                tiebreaks: a.tiebreaks,
                completions: a.completions,
                rng_seed: seed,
            };
            let mut reports = check_ipre_properties(&r, &f, a.protocol, &tb, &config);
            reports.push(cross_check_ipre_instance(&r, &f, a.protocol, &cross)?);
            reports
        }
    };
    let dir = a.dir.join(report::DIR);
    let mut failed = false;
    for rep in &reports {
        println!("{}", rep.line());
        if !rep.passed {
            failed = true;
            if let Some(path) = report::write_counterexample(&dir, &r, rep)? {
                println!("counterexample: {}", path.display());
            }
        }
    }
    Ok(if failed { Outcome::Failure } else { Outcome::Success })
}
