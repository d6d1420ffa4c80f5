//! `hedonic` — batch front end for the deviation-dynamics engine.
//!
//! Exit codes: 0 success (including a delivered Yes/No verdict), 2 verdict
//! Unknown (node cap hit), 3 validation error, 4 manifest check failure.

mod bundle_io;
mod format;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hedonic_core::cis::{s_of_game, shortcut, three_phase_cis};
use hedonic_core::dynamics::{default_step_budget, replay, run, SchedulerPolicy, Trace};
use hedonic_core::gadgets::bundle::GadgetBundle;
use hedonic_core::gadgets::exponential::gen_cis_exponential;
use hedonic_core::gadgets::indset::{gen_indset_reduction, IndSetInstance};
use hedonic_core::gadgets::quota::{
    gen_quota_in_cycle, gen_quota_in_cycle_adapted, gen_quota_out_cycle,
    gen_quota_out_cycle_adapted,
};
use hedonic_core::gadgets::rx3c::{find_rx3c_no_instance, gen_rx3c_reduction, Rx3cInstance};
use hedonic_core::oracle::{
    decide_ncd, decide_pcd, decide_reachable_ir_cis, exists_stable_partition, explore,
    TransitionGraph, Verdict, DEFAULT_NODE_CAP,
};
use hedonic_core::{CardinalGame, GameClass, Partition, StabilityNotion};

use format::GameDoc;

#[derive(Parser)]
#[command(name = "hedonic", version, about = "Deviation dynamics in cardinal hedonic games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a gadget bundle into a directory.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Run the deviation dynamics and report the outcome.
    Run {
        #[command(flatten)]
        input: GameInput,
        /// Start partition file.
        #[arg(long)]
        start: PathBuf,
        /// Deviation rule: nash, is, cns, cis, sms, or "vote <out> <in>".
        #[arg(long)]
        notion: String,
        #[arg(long, value_enum, default_value_t = Policy::First)]
        policy: Policy,
        /// Seed for the random policy.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Step budget; defaults to a Bell-number-based bound.
        #[arg(long)]
        max_steps: Option<usize>,
        /// Write the run as a trace file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Replay a trace file against its game and validate every step.
    Replay {
        #[command(flatten)]
        input: GameInput,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Decide a reachability question about the dynamics.
    Decide {
        which: Question,
        #[command(flatten)]
        input: GameInput,
        #[arg(long)]
        start: PathBuf,
        /// Required for pcd and ncd; ir-cis always uses the CIS rule.
        #[arg(long)]
        notion: Option<String>,
        /// Exploration cap on materialized partitions
        /// (HDYN_NODE_CAP overrides the built-in default).
        #[arg(long)]
        node_cap: Option<usize>,
        /// Write the witness script (path or lead-in + cycle) here.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Export the explored transition graph in DOT form.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Re-verify every manifest check of a generated bundle directory.
    Check { dir: PathBuf },
    /// Does any partition at all satisfy the rule? (full enumeration)
    StableExists {
        #[command(flatten)]
        input: GameInput,
        #[arg(long)]
        notion: String,
        /// Lift the agent-count guard on the Bell-number enumeration.
        #[arg(long)]
        guard: Option<usize>,
    },
    /// Compress a converged CIS trace to one deviation per final coalition.
    Shortcut {
        #[command(flatten)]
        input: GameInput,
        #[arg(long)]
        trace: PathBuf,
        /// Write the compressed trace here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the bounded three-phase CIS procedure from singletons.
    ThreePhase {
        #[command(flatten)]
        input: GameInput,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Count the one-sided admirers of an additively separable game.
    SOfGame {
        #[command(flatten)]
        input: GameInput,
    },
}

#[derive(Args)]
struct GameInput {
    /// Game file.
    #[arg(long)]
    game: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    First,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Question {
    Pcd,
    Ncd,
    IrCis,
}

#[derive(Subcommand)]
enum GenFamily {
    /// Cycling game for rules between (q,1)-vote and Nash deviations.
    QuotaOut(QuotaArgs),
    /// Cycling game for rules between (1,q)-vote and Nash deviations.
    QuotaIn(QuotaArgs),
    /// Quota-out cycling game whose first deviator starts in a singleton.
    QuotaOutAdapted(QuotaArgs),
    /// Quota-in cycling game whose first deviator starts in a singleton.
    QuotaInAdapted(QuotaArgs),
    /// Game whose CIS dynamics can take exponentially many steps.
    CisExp {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cover-instance reduction around a trivially solvable instance.
    Rx3cYes {
        #[arg(long, default_value_t = 1)]
        h: usize,
        /// Deviation rule wrapped around the reduction.
        #[arg(long, default_value = "cis")]
        notion: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cover-instance reduction around a searched unsolvable instance.
    Rx3cNo {
        #[arg(long, default_value_t = 2)]
        h: usize,
        #[arg(long, default_value_t = 10_000)]
        attempts: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Independent-set reduction deciding reachable IR CIS partitions.
    Indset {
        #[arg(long)]
        vertices: usize,
        /// An edge as "a,b"; repeat for more edges.
        #[arg(long = "edge")]
        edges: Vec<String>,
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = parse_class, default_value = "ASHG")]
        class: GameClass,
        #[arg(long, default_value = "1")]
        like: String,
        #[arg(long, default_value = "-1")]
        dislike: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct QuotaArgs {
    /// Vote quota in [0, 1) as "p/q" or an integer.
    #[arg(long)]
    q: String,
    #[arg(long, value_parser = parse_class, default_value = "ASHG")]
    class: GameClass,
    #[arg(long)]
    out: PathBuf,
}

fn parse_class(tag: &str) -> Result<GameClass, String> {
    GameClass::from_tag(tag).ok_or_else(|| format!("unknown game class {tag:?}"))
}

enum Failure {
    Validation(String),
    Manifest(String),
}

impl Failure {
    fn validation(e: impl std::fmt::Display) -> Failure {
        Failure::Validation(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            3
        }
        Err(Failure::Manifest(m)) => {
            eprintln!("error: {m}");
            4
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), Failure> {
    fs::write(path, content)
        .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display())))
}

fn load_game(input: &GameInput) -> Result<GameDoc, Failure> {
    format::parse_game(&read_to_string(&input.game)?).map_err(Failure::Validation)
}

fn load_partition(path: &Path, agents: usize) -> Result<Partition, Failure> {
    let pi = format::parse_partition(&read_to_string(path)?).map_err(Failure::Validation)?;
    if pi.agent_count() != agents {
        return Err(Failure::Validation(format!(
            "partition covers {} agents, game has {agents}",
            pi.agent_count()
        )));
    }
    Ok(pi)
}

fn node_cap(flag: Option<usize>) -> Result<usize, Failure> {
    if let Some(cap) = flag {
        return Ok(cap);
    }
    match std::env::var("HDYN_NODE_CAP") {
        Ok(v) => v
            .parse()
            .map_err(|_| Failure::Validation(format!("bad HDYN_NODE_CAP value {v:?}"))),
        Err(_) => Ok(DEFAULT_NODE_CAP),
    }
}

fn print_summary(game: &CardinalGame, trace: &Trace) {
    println!("outcome: {:?}", trace.outcome);
    println!("steps: {}", trace.len());
    let welfare: Vec<String> = trace
        .welfare_sequence(game)
        .iter()
        .map(|w| w.to_string())
        .collect();
    println!("welfare: {}", welfare.join(" -> "));
}

fn write_trace_file(path: &Path, doc: &GameDoc, trace: &Trace) -> Result<(), Failure> {
    let text = format::write_trace(doc, trace).map_err(Failure::Validation)?;
    write_file(path, &text)
}

fn graph_to_dot(graph: &TransitionGraph) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("digraph dynamics {\n");
    for (i, node) in graph.nodes.iter().enumerate() {
        let shape = if graph.sinks[i] { "doublecircle" } else { "circle" };
        writeln!(
            out,
            "  n{i} [label=\"{}\", shape={shape}];",
            format::partition_token(node)
        )
        .unwrap();
    }
    for (i, edges) in graph.edges.iter().enumerate() {
        for t in edges {
            writeln!(
                out,
                "  n{i} -> n{} [label=\"{}:{}\"];",
                t.to,
                t.deviator,
                format::target_token(&t.target)
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Gen { family } => cmd_gen(family),
        Command::Run {
            input,
            start,
            notion,
            policy,
            seed,
            max_steps,
            trace,
        } => cmd_run(input, start, notion, policy, seed, max_steps, trace),
        Command::Replay { input, trace } => cmd_replay(input, trace),
        Command::Decide {
            which,
            input,
            start,
            notion,
            node_cap,
            witness,
            dot,
        } => cmd_decide(which, input, start, notion, node_cap, witness, dot),
        Command::Check { dir } => cmd_check(&dir),
        Command::StableExists {
            input,
            notion,
            guard,
        } => cmd_stable_exists(input, notion, guard),
        Command::Shortcut { input, trace, out } => cmd_shortcut(input, trace, out),
        Command::ThreePhase { input, trace } => cmd_three_phase(input, trace),
        Command::SOfGame { input } => cmd_s_of_game(input),
    }
}

fn cmd_gen(family: GenFamily) -> CmdResult {
    let (bundle, out): (GadgetBundle, PathBuf) = match family {
        GenFamily::QuotaOut(a) => (gen_quota(&a, gen_quota_out_cycle)?, a.out),
        GenFamily::QuotaIn(a) => (gen_quota(&a, gen_quota_in_cycle)?, a.out),
        GenFamily::QuotaOutAdapted(a) => (gen_quota(&a, gen_quota_out_cycle_adapted)?, a.out),
        GenFamily::QuotaInAdapted(a) => (gen_quota(&a, gen_quota_in_cycle_adapted)?, a.out),
        GenFamily::CisExp { k, out } => {
            (gen_cis_exponential(k).map_err(Failure::validation)?, out)
        }
        GenFamily::Rx3cYes { h, notion, out } => {
            let notion = format::parse_notion(&notion).map_err(Failure::Validation)?;
            let instance = Rx3cInstance::trivial_yes(h);
            let subgame = CardinalGame::new(1, GameClass::Ashg);
            let (bundle, _) = gen_rx3c_reduction(&instance, &subgame, 0, None, &notion)
                .map_err(Failure::validation)?;
            (bundle, out)
        }
        GenFamily::Rx3cNo { h, attempts, out } => {
            let instance = find_rx3c_no_instance(h, attempts).ok_or_else(|| {
                Failure::Validation(format!(
                    "no unsolvable instance with h={h} found in {attempts} attempts"
                ))
            })?;
            let subgame = CardinalGame::new(1, GameClass::Ashg);
            let notion = StabilityNotion::contractual_individual();
            let (bundle, _) = gen_rx3c_reduction(&instance, &subgame, 0, None, &notion)
                .map_err(Failure::validation)?;
            (bundle, out)
        }
        GenFamily::Indset {
            vertices,
            edges,
            k,
            class,
            like,
            dislike,
            out,
        } => {
            let mut parsed = Vec::new();
            for edge in &edges {
                let (a, b) = edge
                    .split_once(',')
                    .ok_or_else(|| Failure::Validation(format!("bad edge {edge:?}")))?;
                let a = a
                    .trim()
                    .parse()
                    .map_err(|_| Failure::Validation(format!("bad vertex {a:?}")))?;
                let b = b
                    .trim()
                    .parse()
                    .map_err(|_| Failure::Validation(format!("bad vertex {b:?}")))?;
                parsed.push((a, b));
            }
            let instance = IndSetInstance::new(vertices, parsed, k).map_err(Failure::validation)?;
            let like = format::parse_rational(&like).map_err(Failure::Validation)?;
            let dislike = format::parse_rational(&dislike).map_err(Failure::Validation)?;
            let (bundle, _) =
                gen_indset_reduction(&instance, class, &like, &dislike).map_err(Failure::validation)?;
            (bundle, out)
        }
    };
    bundle_io::write_bundle(&out, &bundle).map_err(Failure::Validation)?;
    println!(
        "wrote bundle: {} agents, {} scripts, {} checks -> {}",
        bundle.game.agent_count(),
        bundle.scripts.len(),
        bundle.manifest.len(),
        out.display()
    );
    Ok(0)
}

fn gen_quota<E: std::fmt::Display>(
    args: &QuotaArgs,
    generate: impl Fn(GameClass, &hedonic_core::Rational) -> Result<GadgetBundle, E>,
) -> Result<GadgetBundle, Failure> {
    let q = format::parse_rational(&args.q).map_err(Failure::Validation)?;
    generate(args.class, &q).map_err(Failure::validation)
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    input: GameInput,
    start: PathBuf,
    notion: String,
    policy: Policy,
    seed: u64,
    max_steps: Option<usize>,
    trace_out: Option<PathBuf>,
) -> CmdResult {
    let doc = load_game(&input)?;
    let start = load_partition(&start, doc.game.agent_count())?;
    let notion = format::parse_notion(&notion).map_err(Failure::Validation)?;
    let policy = match policy {
        Policy::First => SchedulerPolicy::FirstInOrder,
        Policy::Random => SchedulerPolicy::RandomSeeded(seed),
    };
    let budget = max_steps.unwrap_or_else(|| default_step_budget(doc.game.agent_count()));
    let trace = run(&doc.game, &notion, &start, policy, budget).map_err(Failure::validation)?;
    print_summary(&doc.game, &trace);
    if let Some(path) = trace_out {
        write_trace_file(&path, &doc, &trace)?;
    }
    Ok(0)
}

/// Replay a trace file: digest must match, each step must be allowed under
/// the recorded rule, and the recorded coalitions and outcome must agree
/// with what the replay produces.
fn replay_trace_file(doc: &GameDoc, text: &str) -> Result<Trace, Failure> {
    let parsed =
        format::parse_trace(text, doc.game.agent_count()).map_err(Failure::Validation)?;
    if parsed.digest != format::game_digest(doc) {
        return Err(Failure::Validation(
            "trace digest does not match the game file".into(),
    ));
    }
    let trace = replay(&doc.game, &parsed.notion, &parsed.start, &parsed.script())
        .map_err(Failure::validation)?;
    for (step, (_, from, _)) in trace.steps.iter().zip(&parsed.steps) {
        if step.from != *from {
            return Err(Failure::Validation(format!(
                "step {}: recorded source coalition {} does not match {}",
                step.index,
                format::coalition_token(from),
                format::coalition_token(&step.from)
            )));
        }
    }
    if trace.final_partition() != &parsed.final_partition {
        return Err(Failure::Validation(
            "recorded final partition does not match the replay".into(),
        ));
    }
    if trace.outcome != parsed.outcome {
        return Err(Failure::Validation(format!(
            "recorded outcome {:?} does not match replayed {:?}",
            parsed.outcome, trace.outcome
        )));
    }
    let welfare = trace
        .welfare_sequence(&doc.game)
        .last()
        .cloned()
        .expect("at least the start partition");
    if welfare != parsed.welfare {
        return Err(Failure::Validation(format!(
            "recorded welfare {} does not match replayed {welfare}",
            parsed.welfare
        )));
    }
    Ok(trace)
}

fn cmd_replay(input: GameInput, trace: PathBuf) -> CmdResult {
    let doc = load_game(&input)?;
    let trace = replay_trace_file(&doc, &read_to_string(&trace)?)?;
    println!("Script OK, {} steps", trace.len());
    Ok(0)
}

fn cmd_decide(
    which: Question,
    input: GameInput,
    start: PathBuf,
    notion: Option<String>,
    cap_flag: Option<usize>,
    witness: Option<PathBuf>,
    dot: Option<PathBuf>,
) -> CmdResult {
    let doc = load_game(&input)?;
    let start = load_partition(&start, doc.game.agent_count())?;
    let cap = node_cap(cap_flag)?;
    let notion = match (which, notion) {
        (Question::IrCis, _) => StabilityNotion::contractual_individual(),
        (_, Some(n)) => format::parse_notion(&n).map_err(Failure::Validation)?,
        (_, None) => {
            return Err(Failure::Validation(
                "--notion is required for pcd and ncd".into(),
            ))
        }
    };

    let (verdict, witness_script): (Verdict, Option<String>) = match which {
        Question::Pcd => {
            let (v, w) =
                decide_pcd(&doc.game, &notion, &start, cap).map_err(Failure::validation)?;
            (v, w.map(|s| format::write_script(&s)))
        }
        Question::Ncd => {
            let (v, w) =
                decide_ncd(&doc.game, &notion, &start, cap).map_err(Failure::validation)?;
            (
                v,
                w.map(|(lead_in, cycle)| {
                    format!(
                        "{}# cycle\n{}",
                        format::write_script(&lead_in),
                        format::write_script(&cycle)
                    )
                }),
            )
        }
        Question::IrCis => {
            let (v, w) =
                decide_reachable_ir_cis(&doc.game, &start, cap).map_err(Failure::validation)?;
            (v, w.map(|s| format::write_script(&s)))
        }
    };

    println!("{verdict}");
    if let (Some(path), Some(text)) = (&witness, &witness_script) {
        write_file(path, text)?;
    }
    if let Some(path) = dot {
        let graph =
            explore(&doc.game, &notion, &start, cap).map_err(Failure::validation)?;
        write_file(&path, &graph_to_dot(&graph))?;
    }
    Ok(if verdict == Verdict::Unknown { 2 } else { 0 })
}

fn cmd_check(dir: &Path) -> CmdResult {
    let bundle = bundle_io::read_bundle(dir).map_err(Failure::Validation)?;
    let mut failures = 0usize;
    for (name, result) in bundle.run_manifest() {
        match result {
            Ok(()) => println!("{name}: ok"),
            Err(reason) => {
                println!("{name}: FAIL ({reason})");
                failures += 1;
            }
        }
    }
    if failures == 0 {
        Ok(0)
    } else {
        Err(Failure::Manifest(format!(
            "{failures} manifest check(s) failed"
        )))
    }
}

fn cmd_stable_exists(input: GameInput, notion: String, guard: Option<usize>) -> CmdResult {
    let doc = load_game(&input)?;
    let notion = format::parse_notion(&notion).map_err(Failure::Validation)?;
    let exists =
        exists_stable_partition(&doc.game, &notion, guard).map_err(Failure::validation)?;
    println!("{}", if exists { "Yes" } else { "No" });
    Ok(0)
}

fn cmd_shortcut(input: GameInput, trace: PathBuf, out: Option<PathBuf>) -> CmdResult {
    let doc = load_game(&input)?;
    let trace = replay_trace_file(&doc, &read_to_string(&trace)?)?;
    let compressed = shortcut(&doc.game, &trace).map_err(Failure::validation)?;
    println!(
        "compressed {} steps to {}",
        trace.len(),
        compressed.len()
    );
    if let Some(path) = out {
        write_trace_file(&path, &doc, &compressed)?;
    }
    Ok(0)
}

fn cmd_three_phase(input: GameInput, trace_out: Option<PathBuf>) -> CmdResult {
    let doc = load_game(&input)?;
    let trace = three_phase_cis(&doc.game).map_err(Failure::validation)?;
    print_summary(&doc.game, &trace);
    if let Some(path) = trace_out {
        write_trace_file(&path, &doc, &trace)?;
    }
    Ok(0)
}

fn cmd_s_of_game(input: GameInput) -> CmdResult {
    let doc = load_game(&input)?;
    let s = s_of_game(&doc.game).map_err(Failure::validation)?;
    println!("{s}");
    Ok(0)
}
