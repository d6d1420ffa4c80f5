//! Text formats: game files, partition files, trace files, and move
//! scripts. All formats are line-oriented UTF-8 with a canonical form that
//! round-trips byte-exactly through parse and serialize.
//!
//! Rationals are written as `p/q` with `/q` omitted when the denominator is
//! one; no decimal notation is accepted, so values stay exact.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use hedonic_core::dynamics::{Outcome, Trace};
use hedonic_core::gadgets::bundle::Script;
use hedonic_core::stability::VoteQuotas;
use hedonic_core::{
    AgentId, CardinalGame, Coalition, DeviationTarget, GameClass, Partition, Rational,
    StabilityNotion,
};
use sha2::{Digest, Sha256};

pub fn parse_rational(token: &str) -> Result<Rational, String> {
    token
        .parse::<Rational>()
        .map_err(|e| format!("bad rational {token:?}: {e}"))
}

/// A game plus the optional agent names carried in its file.
#[derive(Debug, Clone)]
pub struct GameDoc {
    pub game: CardinalGame,
    pub names: Vec<Option<String>>,
}

impl GameDoc {
    pub fn unnamed(game: CardinalGame) -> GameDoc {
        let names = vec![None; game.agent_count()];
        GameDoc { game, names }
    }
}

pub fn write_game(doc: &GameDoc) -> String {
    let mut out = String::new();
    writeln!(out, "class {}", doc.game.class().tag()).unwrap();
    writeln!(out, "agents {}", doc.game.agent_count()).unwrap();
    for (id, name) in doc.names.iter().enumerate() {
        if let Some(name) = name {
            writeln!(out, "name {id} {name}").unwrap();
        }
    }
    for (from, to, value) in doc.game.entries() {
        writeln!(out, "val {from} {to} {value}").unwrap();
    }
    out
}

pub fn parse_game(text: &str) -> Result<GameDoc, String> {
    let mut class: Option<GameClass> = None;
    let mut doc: Option<GameDoc> = None;
    let mut seen: BTreeSet<(AgentId, AgentId)> = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |m: String| format!("line {}: {m}", lineno + 1);
        let mut words = line.split_whitespace();
        let key = words.next().expect("nonempty line");
        let rest: Vec<&str> = words.collect();
        match key {
            "class" => {
                let [tag] = rest.as_slice() else {
                    return Err(at("expected `class <tag>`".into()));
                };
                if class.is_some() {
                    return Err(at("duplicate class line".into()));
                }
                class = Some(
                    GameClass::from_tag(tag).ok_or_else(|| at(format!("unknown class {tag:?}")))?,
                );
            }
            "agents" => {
                let [count] = rest.as_slice() else {
                    return Err(at("expected `agents <n>`".into()));
                };
                let class = class.ok_or_else(|| at("agents line before class line".into()))?;
                if doc.is_some() {
                    return Err(at("duplicate agents line".into()));
                }
                let n: usize = count
                    .parse()
                    .map_err(|_| at(format!("bad agent count {count:?}")))?;
                doc = Some(GameDoc::unnamed(CardinalGame::new(n, class)));
            }
            "name" => {
                let doc = doc
                    .as_mut()
                    .ok_or_else(|| at("name line before agents line".into()))?;
                let [id, name] = rest.as_slice() else {
                    return Err(at("expected `name <id> <name>`".into()));
                };
                let id: usize = id.parse().map_err(|_| at(format!("bad agent id {id:?}")))?;
                let slot = doc
                    .names
                    .get_mut(id)
                    .ok_or_else(|| at(format!("agent {id} out of range")))?;
                if slot.is_some() {
                    return Err(at(format!("duplicate name for agent {id}")));
                }
                *slot = Some((*name).to_owned());
            }
            "val" => {
                let doc = doc
                    .as_mut()
                    .ok_or_else(|| at("val line before agents line".into()))?;
                let [from, to, value] = rest.as_slice() else {
                    return Err(at("expected `val <from> <to> <rational>`".into()));
                };
                let from: usize = from.parse().map_err(|_| at(format!("bad agent id {from:?}")))?;
                let to: usize = to.parse().map_err(|_| at(format!("bad agent id {to:?}")))?;
                if !seen.insert((from, to)) {
                    return Err(at(format!("duplicate valuation for ({from}, {to})")));
                }
                let value = parse_rational(value).map_err(|e| at(e))?;
                doc.game
                    .set_value(from, to, value)
                    .map_err(|e| at(format!("{e}")))?;
            }
            other => return Err(at(format!("unknown field {other:?}"))),
        }
    }
    doc.ok_or_else(|| "missing class/agents header".into())
}

/// Hex SHA-256 of the canonical game serialization, independent of comment
/// and whitespace variations in the source file.
pub fn game_digest(doc: &GameDoc) -> String {
    let bytes = write_game(doc);
    let hash = Sha256::digest(bytes.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in hash {
        write!(out, "{byte:02x}").unwrap();
    }
    out
}

pub fn coalition_token(c: &Coalition) -> String {
    let members: Vec<String> = c.iter().map(|a| a.to_string()).collect();
    format!("{{{}}}", members.join(","))
}

pub fn parse_coalition_token(token: &str) -> Result<Coalition, String> {
    let inner = token
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| format!("bad coalition token {token:?}"))?;
    let mut members = Vec::new();
    for part in inner.split(',') {
        let id: AgentId = part
            .trim()
            .parse()
            .map_err(|_| format!("bad agent id {part:?} in coalition {token:?}"))?;
        members.push(id);
    }
    Coalition::new(members).map_err(|e| format!("bad coalition {token:?}: {e}"))
}

pub fn target_token(t: &DeviationTarget) -> String {
    match t {
        DeviationTarget::Solo => "solo".into(),
        DeviationTarget::Join(c) => coalition_token(c),
    }
}

pub fn parse_target_token(token: &str) -> Result<DeviationTarget, String> {
    if token == "solo" {
        Ok(DeviationTarget::Solo)
    } else {
        parse_coalition_token(token).map(DeviationTarget::Join)
    }
}

/// One-line partition form: coalition tokens joined by `|` in canonical
/// order.
pub fn partition_token(pi: &Partition) -> String {
    let parts: Vec<String> = pi.coalitions().iter().map(coalition_token).collect();
    parts.join("|")
}

pub fn parse_partition_token(token: &str, agents: usize) -> Result<Partition, String> {
    let mut coalitions = Vec::new();
    for part in token.split('|') {
        coalitions.push(parse_coalition_token(part)?);
    }
    Partition::from_coalitions(agents, coalitions).map_err(|e| format!("{e}"))
}

/// Partition file: an `agents` header, then one coalition token per line.
pub fn write_partition(pi: &Partition) -> String {
    let mut out = format!("agents {}\n", pi.agent_count());
    for c in pi.coalitions() {
        out.push_str(&coalition_token(c));
        out.push('\n');
    }
    out
}

pub fn parse_partition(text: &str) -> Result<Partition, String> {
    let mut agents: Option<usize> = None;
    let mut coalitions = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |m: String| format!("line {}: {m}", lineno + 1);
        if let Some(count) = line.strip_prefix("agents ") {
            if agents.is_some() {
                return Err(at("duplicate agents line".into()));
            }
            agents = Some(
                count
                    .trim()
                    .parse()
                    .map_err(|_| at(format!("bad agent count {count:?}")))?,
            );
        } else {
            coalitions.push(parse_coalition_token(line).map_err(|e| at(e))?);
        }
    }
    let agents = agents.ok_or("missing agents line")?;
    Partition::from_coalitions(agents, coalitions).map_err(|e| format!("{e}"))
}

/// Parse a deviation rule: one of the aliases `nash`, `is`, `cns`, `cis`,
/// `sms`, or `vote <out-quota> <in-quota>`.
pub fn parse_notion(text: &str) -> Result<StabilityNotion, String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    match words.as_slice() {
        ["nash"] => Ok(StabilityNotion::nash()),
        ["is"] => Ok(StabilityNotion::individual()),
        ["cns"] => Ok(StabilityNotion::contractual_nash()),
        ["cis"] => Ok(StabilityNotion::contractual_individual()),
        ["sms"] => Ok(StabilityNotion::simple_majority()),
        ["vote", out, r#in] => {
            let quotas = VoteQuotas::new(parse_rational(out)?, parse_rational(r#in)?)
                .map_err(|e| format!("{e}"))?;
            Ok(StabilityNotion::Vote(quotas))
        }
        _ => Err(format!(
            "bad notion {text:?}: expected nash, is, cns, cis, sms, or `vote <out> <in>`"
        )),
    }
}

/// Canonical spelling of a rule, preferring the aliases.
pub fn notion_token(notion: &StabilityNotion) -> Result<String, String> {
    let StabilityNotion::Vote(q) = notion else {
        return Err("custom deviation rules have no file form".into());
    };
    for alias in ["nash", "is", "cns", "cis", "sms"] {
        let StabilityNotion::Vote(known) = parse_notion(alias).expect("alias parses") else {
            unreachable!("aliases are quota pairs");
        };
        if known == *q {
            return Ok(alias.into());
        }
    }
    Ok(format!("vote {} {}", q.out_quota(), q.in_quota()))
}

/// Script file: one `<agent> <target>` line per step.
pub fn write_script(script: &Script) -> String {
    let mut out = String::new();
    for (agent, target) in script {
        writeln!(out, "{agent} {}", target_token(target)).unwrap();
    }
    out
}

pub fn parse_script(text: &str) -> Result<Script, String> {
    let mut script = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |m: String| format!("line {}: {m}", lineno + 1);
        let (agent, target) = line
            .split_once(' ')
            .ok_or_else(|| at("expected `<agent> <target>`".into()))?;
        let agent: AgentId = agent
            .parse()
            .map_err(|_| at(format!("bad agent id {agent:?}")))?;
        let target = parse_target_token(target.trim()).map_err(|e| at(e))?;
        script.push((agent, target));
    }
    Ok(script)
}

fn outcome_token(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Converged => "Converged".into(),
        Outcome::CycleDetected { first_seen } => format!("CycleDetected {first_seen}"),
        Outcome::BudgetExhausted => "BudgetExhausted".into(),
    }
}

fn parse_outcome(words: &[&str]) -> Result<Outcome, String> {
    match words {
        ["Converged"] => Ok(Outcome::Converged),
        ["CycleDetected", index] => {
            let first_seen = index
                .parse()
                .map_err(|_| format!("bad cycle index {index:?}"))?;
            Ok(Outcome::CycleDetected { first_seen })
        }
        ["BudgetExhausted"] => Ok(Outcome::BudgetExhausted),
        _ => Err(format!("bad outcome {:?}", words.join(" "))),
    }
}

/// A parsed trace file: everything needed to re-validate and replay it.
#[derive(Debug, Clone)]
pub struct TraceDoc {
    pub digest: String,
    pub notion: StabilityNotion,
    pub start: Partition,
    /// Per step: deviator, coalition left, target joined.
    pub steps: Vec<(AgentId, Coalition, DeviationTarget)>,
    pub outcome: Outcome,
    pub final_partition: Partition,
    pub welfare: Rational,
}

impl TraceDoc {
    pub fn script(&self) -> Script {
        self.steps
            .iter()
            .map(|(agent, _, target)| (*agent, target.clone()))
            .collect()
    }
}

pub fn write_trace(game_doc: &GameDoc, trace: &Trace) -> Result<String, String> {
    let mut out = String::from("trace v1\n");
    writeln!(out, "digest {}", game_digest(game_doc)).unwrap();
    writeln!(out, "notion {}", notion_token(&trace.notion)?).unwrap();
    writeln!(out, "start {}", partition_token(&trace.start)).unwrap();
    for step in &trace.steps {
        writeln!(
            out,
            "step {} {} {} {}",
            step.index,
            step.deviator,
            coalition_token(&step.from),
            target_token(&step.to)
        )
        .unwrap();
    }
    writeln!(out, "outcome {}", outcome_token(&trace.outcome)).unwrap();
    writeln!(out, "final {}", partition_token(trace.final_partition())).unwrap();
    let welfare = trace
        .welfare_sequence(&game_doc.game)
        .last()
        .cloned()
        .expect("at least the start partition");
    writeln!(out, "welfare {welfare}").unwrap();
    Ok(out)
}

pub fn parse_trace(text: &str, agents: usize) -> Result<TraceDoc, String> {
    let mut lines = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if !line.is_empty() && !line.starts_with('#') {
            lines.push((lineno + 1, line));
        }
    }
    let mut iter = lines.into_iter();
    fn field<'a>(
        iter: &mut impl Iterator<Item = (usize, &'a str)>,
        key: &str,
    ) -> Result<String, String> {
        let (lineno, line) = iter.next().ok_or_else(|| format!("missing {key} line"))?;
        line.strip_prefix(key)
            .map(|rest| rest.trim().to_owned())
            .ok_or_else(|| format!("line {lineno}: expected {key} line, got {line:?}"))
    }

    let version = field(&mut iter, "trace")?;
    if version != "v1" {
        return Err(format!("unsupported trace version {version:?}"));
    }
    let digest = field(&mut iter, "digest")?;
    let notion = parse_notion(&field(&mut iter, "notion")?)?;
    let start = parse_partition_token(&field(&mut iter, "start")?, agents)?;

    let mut steps = Vec::new();
    let (outcome, final_partition, welfare);
    loop {
        let Some((_, line)) = iter.next() else {
            return Err("missing outcome line".into());
        };
        if let Some(rest) = line.strip_prefix("step ") {
            let words: Vec<&str> = rest.split_whitespace().collect();
            let [index, deviator, from, to] = words.as_slice() else {
                return Err(format!("bad step line {line:?}"));
            };
            let index: usize = index
                .parse()
                .map_err(|_| format!("bad step index {index:?}"))?;
            if index != steps.len() {
                return Err(format!("step index {index} out of order"));
            }
            let deviator: AgentId = deviator
                .parse()
                .map_err(|_| format!("bad agent id {deviator:?}"))?;
            steps.push((deviator, parse_coalition_token(from)?, parse_target_token(to)?));
        } else if let Some(rest) = line.strip_prefix("outcome ") {
            let words: Vec<&str> = rest.split_whitespace().collect();
            outcome = parse_outcome(&words)?;
            final_partition = parse_partition_token(&field(&mut iter, "final")?, agents)?;
            welfare = parse_rational(&field(&mut iter, "welfare")?)?;
            break;
        } else {
            return Err(format!("unexpected trace line {line:?}"));
        }
    }
    if iter.next().is_some() {
        return Err("trailing content after the trace footer".into());
    }
    Ok(TraceDoc {
        digest,
        notion,
        start,
        steps,
        outcome,
        final_partition,
        welfare,
    })
}
