//! File formats and run reports.
//!
//! Games and discourses are JSON. Reports are typed values serialized to
//! JSON for machines; the table rendering is produced from that same JSON
//! value, so both carry the same data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::beliefs::{level_k_strategies, LevelKConfig, LevelKStatus};
use crate::centering::{compatible, CompoundResolution, Discourse, DiscourseState, Referent, Resolution};
use crate::equilibrium::{
    enumerate_pure_equilibria, is_equilibrium, pareto_indices, predict, EquilibriumKind, EquilibriumReport,
    OffPathRule, SolveOptions,
};
use crate::error::{GameError, Result};
use crate::game::{
    Content, Credit, MeaningGame, Message, PairCost, Player, PlayerModel, Prior, Severity,
    UtilityModel, ValidationReport, TOL,
};

fn parse<T: DeserializeOwned>(text: &str, path: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let at = format!("line {} column {}", inner.line(), inner.column());
        let message = if field == "." { format!("{at}: {inner}") } else { format!("{at}, field `{field}`: {inner}") };
        GameError::Parse { path: path.into(), message }
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| GameError::Io { path: path.display().to_string(), source })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Cost of the message for any content, split evenly between producing
    /// and interpreting it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

/// A pair cost, either as a total that is split evenly or as explicit
/// production and interpretation shares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostEntry {
    pub content: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sender: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver: Option<f64>,
}

impl CostEntry {
    fn pair_cost(&self) -> Result<PairCost> {
        match (self.cost, self.sender, self.receiver) {
            (Some(c), None, None) => Ok(PairCost::split(c)),
            (None, Some(s), Some(r)) => Ok(PairCost::new(s, r)),
            _ => Err(GameError::InvalidArgument(format!(
                "cost entry ({}, {}) needs either `cost` or both `sender` and `receiver`",
                self.content, self.message
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bonus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credit: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub costs: Vec<CostEntry>,
}

/// On-disk game description.
///
/// Every content–message pair is grammatical unless `grammatical` lists the
/// pairs. A pair costs its message's `cost` unless `costs` overrides it.
/// When `receiver` is present the receiver's utility starts as a copy of
/// the sender's and applies its own overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub contents: Vec<ContentSpec>,
    pub messages: Vec<MessageSpec>,
    pub prior: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bonus: Option<f64>,
    /// Credit table [intended][interpreted], instead of `bonus`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credit: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grammatical: Option<Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub costs: Vec<CostEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver: Option<ReceiverSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub off_path: Option<OffPathRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedGame {
    pub game: MeaningGame,
    pub off_path: Option<OffPathRule>,
    pub cap: Option<u64>,
    pub warnings: Vec<String>,
}

fn credit_of(bonus: Option<f64>, table: &Option<Vec<Vec<f64>>>) -> Result<Option<Credit>> {
    match (bonus, table) {
        (Some(_), Some(_)) => Err(GameError::InvalidArgument("give either `bonus` or `credit`, not both".into())),
        (Some(b), None) => Ok(Some(Credit::Exact(b))),
        (None, Some(t)) => Ok(Some(Credit::Partial(t.clone()))),
        (None, None) => Ok(None),
    }
}

impl GameFile {
    /// The game described, with priors normalized; unvalidated.
    pub fn to_game(&self) -> Result<(MeaningGame, Vec<String>)> {
        let mut warnings = Vec::new();
        let contents: Vec<Content> = self
            .contents
            .iter()
            .map(|c| Content { id: c.id.clone(), label: c.label.clone().unwrap_or_else(|| c.id.clone()) })
            .collect();
        let messages: Vec<Message> = self
            .messages
            .iter()
            .map(|m| Message { id: m.id.clone(), label: m.label.clone().unwrap_or_else(|| m.id.clone()) })
            .collect();
        let cix = |id: &str| {
            contents
                .iter()
                .position(|c| c.id == id)
                .ok_or_else(|| GameError::InvalidArgument(format!("unknown content '{id}'")))
        };
        let mix = |id: &str| {
            messages
                .iter()
                .position(|m| m.id == id)
                .ok_or_else(|| GameError::InvalidArgument(format!("unknown message '{id}'")))
        };
        let (nc, nm) = (contents.len(), messages.len());
        let mut edge = vec![vec![self.grammatical.is_none(); nm]; nc];
        for (c, m) in self.grammatical.iter().flatten() {
            edge[cix(c)?][mix(m)?] = true;
        }
        let overrides = |base: &mut Vec<Vec<Option<PairCost>>>, entries: &[CostEntry]| -> Result<()> {
            for e in entries {
                let (c, m) = (cix(&e.content)?, mix(&e.message)?);
                if !edge[c][m] {
                    return Err(GameError::InvalidArgument(format!(
                        "cost given for ungrammatical pair ({}, {})",
                        e.content, e.message
                    )));
                }
                base[c][m] = Some(e.pair_cost()?);
            }
            Ok(())
        };
        let mut costs: Vec<Vec<Option<PairCost>>> = (0..nc)
            .map(|c| {
                (0..nm)
                    .map(|m| edge[c][m].then(|| PairCost::split(self.messages[m].cost.unwrap_or(0.0))))
                    .collect()
            })
            .collect();
        overrides(&mut costs, &self.costs)?;
        let credit = credit_of(self.bonus, &self.credit)?.unwrap_or(Credit::Exact(1.0));
        let sender = PlayerModel { credit, costs };
        let utility = match &self.receiver {
            None => UtilityModel::shared(sender),
            Some(r) => {
                let mut receiver = sender.clone();
                if let Some(c) = credit_of(r.bonus, &r.credit)? {
                    receiver.credit = c;
                }
                overrides(&mut receiver.costs, &r.costs)?;
                UtilityModel::split(sender, receiver)
            }
        };
        let sum: f64 = self.prior.iter().sum();
        let prior = if self.prior.len() == nc && self.prior.iter().all(|p| p.is_finite() && *p >= 0.0) && sum > 0.0 {
            let (p, rescaled) = Prior::normalized(self.prior.clone())?;
            if rescaled {
                warnings.push(format!("prior weights sum to {sum}; normalized"));
            }
            p
        } else {
            Prior::new(self.prior.clone())
        };
        Ok((MeaningGame::from_parts(contents, messages, prior, utility), warnings))
    }

    /// Canonical description of a game: labels, priors and every pair cost
    /// spelled out.
    pub fn from_game(g: &MeaningGame) -> GameFile {
        let entries = |model: &PlayerModel| -> Vec<CostEntry> {
            let mut out = Vec::new();
            for (c, row) in model.costs.iter().enumerate() {
                for (m, pc) in row.iter().enumerate() {
                    if let Some(pc) = pc {
                        out.push(CostEntry {
                            content: g.contents()[c].id.clone(),
                            message: g.messages()[m].id.clone(),
                            cost: None,
                            sender: Some(pc.sender),
                            receiver: Some(pc.receiver),
                        });
                    }
                }
            }
            out
        };
        let split = |credit: &Credit| match credit {
            Credit::Exact(b) => (Some(*b), None),
            Credit::Partial(t) => (None, Some(t.clone())),
        };
        let um = g.utility_model();
        let (bonus, credit) = split(&um.sender.credit);
        let grammatical = (!g.is_complete()).then(|| {
            let mut pairs = Vec::new();
            for c in 0..g.n_contents() {
                for m in g.messages_for(c) {
                    pairs.push((g.contents()[c].id.clone(), g.messages()[m].id.clone()));
                }
            }
            pairs
        });
        let receiver = (!um.shared).then(|| {
            let (bonus, credit) = split(&um.receiver.credit);
            ReceiverSpec { bonus, credit, costs: entries(&um.receiver) }
        });
        GameFile {
            contents: g
                .contents()
                .iter()
                .map(|c| ContentSpec { id: c.id.clone(), label: Some(c.label.clone()) })
                .collect(),
            messages: g
                .messages()
                .iter()
                .map(|m| MessageSpec { id: m.id.clone(), label: Some(m.label.clone()), cost: None })
                .collect(),
            prior: g.prior().weights().to_vec(),
            bonus,
            credit,
            grammatical,
            costs: entries(&um.sender),
            receiver,
            off_path: None,
            cap: None,
        }
    }
}

/// Parses a game file without validating the game.
pub fn parse_game_unchecked(text: &str, path: &str) -> Result<LoadedGame> {
    let file: GameFile = parse(text, path)?;
    let (game, warnings) = file.to_game().map_err(|e| match e {
        GameError::InvalidArgument(m) => GameError::Parse { path: path.into(), message: m },
        other => other,
    })?;
    Ok(LoadedGame { game, off_path: file.off_path, cap: file.cap, warnings })
}

pub fn parse_game(text: &str, path: &str) -> Result<LoadedGame> {
    let mut loaded = parse_game_unchecked(text, path)?;
    loaded.game = loaded.game.validated()?;
    Ok(loaded)
}

pub fn load_game_unchecked(path: impl AsRef<Path>) -> Result<LoadedGame> {
    let path = path.as_ref();
    parse_game_unchecked(&read(path)?, &path.display().to_string())
}

pub fn load_game(path: impl AsRef<Path>) -> Result<LoadedGame> {
    let path = path.as_ref();
    parse_game(&read(path)?, &path.display().to_string())
}

/// Canonical JSON for a game; parsing it back gives the same game.
pub fn game_to_json(g: &MeaningGame) -> String {
    serde_json::to_string_pretty(&GameFile::from_game(g)).expect("game files serialize")
}

#[derive(Clone, Debug)]
pub struct LoadedDiscourse {
    pub discourse: Discourse,
    /// State after the utterances that precede the first unresolved slot.
    pub state: DiscourseState,
    /// Unresolved slot ids in order of appearance.
    pub slots: Vec<String>,
}

pub fn parse_discourse(text: &str, path: &str) -> Result<LoadedDiscourse> {
    let discourse: Discourse = parse(text, path)?;
    let wrap = |e: GameError| match e {
        GameError::InvalidArgument(m) | GameError::Discourse(m) => GameError::Discourse(format!("{path}: {m}")),
        other => other,
    };
    discourse.validate().map_err(wrap)?;
    let mut slots = Vec::new();
    for u in &discourse.utterances {
        for r in &u.realizations {
            if let Referent::Slot(s) = &r.referent {
                slots.push(s.clone());
            }
        }
    }
    for s in &slots {
        check_slot(&discourse, s).map_err(wrap)?;
    }
    let mut state = DiscourseState::new(discourse.entities.iter().map(|e| e.id.clone()), discourse.config.salience);
    for u in &discourse.utterances {
        if u.realizations.iter().any(|r| r.referent.entity().is_none()) {
            break;
        }
        state = state.record(u.clone()).map_err(wrap)?;
    }
    Ok(LoadedDiscourse { discourse, state, slots })
}

fn check_slot(d: &Discourse, slot: &str) -> Result<()> {
    let (options, candidates) = d.slot_domain(slot)?;
    if candidates.is_empty() {
        return Err(GameError::Discourse(format!("slot '{slot}' has no candidates")));
    }
    for e in &candidates {
        if !options.iter().any(|x| compatible(e, x)) {
            return Err(GameError::Discourse(format!(
                "slot '{slot}': no expression option is compatible with candidate '{}'",
                e.id
            )));
        }
    }
    let (_, site) = d.slot_site(slot)?;
    let observed = d.expression(&site.surface)?;
    if !candidates.iter().any(|e| compatible(e, observed)) {
        return Err(GameError::Discourse(format!(
            "slot '{slot}': '{}' is compatible with none of its candidates",
            site.surface
        )));
    }
    Ok(())
}

pub fn load_discourse(path: impl AsRef<Path>) -> Result<LoadedDiscourse> {
    let path = path.as_ref();
    parse_discourse(&read(path)?, &path.display().to_string())
}

/// Hex SHA-256 of the compact JSON of `inputs`.
pub fn config_hash<T: Serialize>(inputs: &T) -> String {
    let bytes = serde_json::to_vec(inputs).expect("inputs serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assignment {
    pub content: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reading {
    pub message: String,
    pub reading: Option<String>,
    pub on_path: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumRow {
    pub index: usize,
    pub kind: EquilibriumKind,
    pub sender: Vec<Assignment>,
    pub receiver: Vec<Reading>,
    pub success: f64,
    pub eu_sender: f64,
    pub eu_receiver: f64,
    pub cost_eu_sender: f64,
    pub cost_eu_receiver: f64,
    pub pareto_optimal: bool,
}

impl EquilibriumRow {
    pub fn new(g: &MeaningGame, index: usize, r: &EquilibriumReport, pareto_optimal: bool) -> Self {
        EquilibriumRow {
            index,
            kind: r.kind,
            sender: r
                .pure
                .sender
                .iter()
                .enumerate()
                .map(|(c, &m)| Assignment { content: g.contents()[c].id.clone(), message: g.messages()[m].id.clone() })
                .collect(),
            receiver: r
                .pure
                .receiver
                .iter()
                .enumerate()
                .map(|(m, c)| Reading {
                    message: g.messages()[m].id.clone(),
                    reading: c.map(|c| g.contents()[c].id.clone()),
                    on_path: r.beliefs.on_path[m],
                })
                .collect(),
            success: r.success,
            eu_sender: r.eu_sender,
            eu_receiver: r.eu_receiver,
            cost_eu_sender: r.cost_eu_sender,
            cost_eu_receiver: r.cost_eu_receiver,
            pareto_optimal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IssueRow {
    pub severity: String,
    pub subject: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidateBody {
    pub valid: bool,
    pub contents: usize,
    pub messages: usize,
    pub complete: bool,
    pub cheap_talk: bool,
    pub issues: Vec<IssueRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscourseSummary {
    pub entities: usize,
    pub utterances: usize,
    pub slots: Vec<String>,
    pub compounds: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveBody {
    pub off_path: String,
    pub profiles: String,
    pub equilibria: Vec<EquilibriumRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictBody {
    pub off_path: String,
    pub ambiguous: bool,
    pub equilibria: Vec<EquilibriumRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: usize,
    pub sender: Vec<Assignment>,
    pub receiver: Vec<Reading>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelKBody {
    pub depth: usize,
    pub status: LevelKStatus,
    /// Whether the fixed point is an equilibrium of the sender's estimate;
    /// absent without a fixed point.
    pub fixed_point_is_equilibrium: Option<bool>,
    pub levels: Vec<LevelRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplainBody {
    pub contents: [String; 2],
    pub messages: [String; 2],
    pub p1: f64,
    pub p2: f64,
    pub u1: f64,
    pub u2: f64,
    pub e1: f64,
    pub e2: f64,
    pub difference: f64,
    pub product: f64,
    pub identity: String,
    /// Cost-only expected utility of the two separating equilibria found
    /// by enumeration, in the order of E1 and E2; absent if not an
    /// equilibrium.
    pub enumerated: [Option<f64>; 2],
    pub preferred: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompoundBody {
    pub compounds: Vec<CompoundResolution>,
}

impl CompoundBody {
    pub fn ambiguous(&self) -> bool {
        self.compounds.iter().any(|c| c.readings.len() != 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Body {
    Validate(ValidateBody),
    ValidateDiscourse(DiscourseSummary),
    Solve(SolveBody),
    Predict(PredictBody),
    Resolve(Box<Resolution>),
    Compound(CompoundBody),
    LevelK(LevelKBody),
    Explain(ExplainBody),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config_hash: String,
    pub warnings: Vec<String>,
    pub result: Body,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        render_table(&serde_json::to_value(self).expect("reports serialize"))
    }
}

pub fn validate_body(g: &MeaningGame, report: &ValidationReport) -> ValidateBody {
    ValidateBody {
        valid: report.is_valid(),
        contents: g.n_contents(),
        messages: g.n_messages(),
        complete: g.is_complete(),
        cheap_talk: g.is_cheap_talk(),
        issues: report
            .issues
            .iter()
            .map(|i| IssueRow {
                severity: match i.severity {
                    Severity::Violation => "violation".into(),
                    Severity::Warning => "warning".into(),
                },
                subject: i.subject.clone(),
                message: i.message.clone(),
            })
            .collect(),
    }
}

pub fn solve_body(g: &MeaningGame, opts: &SolveOptions, pareto_only: bool) -> Result<SolveBody> {
    let all = enumerate_pure_equilibria(g, opts)?;
    let pay: Vec<(f64, f64)> = all.iter().map(|r| (r.eu_sender, r.eu_receiver)).collect();
    let optimal = pareto_indices(&pay);
    let equilibria = all
        .iter()
        .enumerate()
        .filter(|(i, _)| !pareto_only || optimal.contains(i))
        .map(|(i, r)| EquilibriumRow::new(g, i, r, optimal.contains(&i)))
        .collect();
    Ok(SolveBody {
        off_path: opts.off_path.to_string(),
        profiles: crate::equilibrium::pure_profile_count(g).to_string(),
        equilibria,
    })
}

pub fn predict_body(g: &MeaningGame, opts: &SolveOptions) -> Result<PredictBody> {
    let p = predict(g, opts)?;
    Ok(PredictBody {
        off_path: opts.off_path.to_string(),
        ambiguous: p.ambiguous,
        equilibria: p.reports.iter().enumerate().map(|(i, r)| EquilibriumRow::new(g, i, r, true)).collect(),
    })
}

pub fn level_k_body(g_s: &MeaningGame, g_r: &MeaningGame, cfg: &LevelKConfig) -> Result<LevelKBody> {
    let run = level_k_strategies(g_s, g_r, cfg)?;
    let fixed_point_is_equilibrium = match run.status {
        LevelKStatus::FixedPoint { at } => {
            Some(is_equilibrium(g_s, &run.levels[at].to_profile(g_s), cfg.off_path)?.holds())
        }
        _ => None,
    };
    let levels = run
        .levels
        .iter()
        .enumerate()
        .map(|(level, p)| LevelRow {
            level,
            sender: p
                .sender
                .iter()
                .enumerate()
                .map(|(c, &m)| Assignment { content: g_s.contents()[c].id.clone(), message: g_s.messages()[m].id.clone() })
                .collect(),
            receiver: p
                .receiver
                .iter()
                .enumerate()
                .map(|(m, c)| Reading {
                    message: g_s.messages()[m].id.clone(),
                    reading: c.map(|c| g_s.contents()[c].id.clone()),
                    on_path: p.sender.contains(&m),
                })
                .collect(),
        })
        .collect();
    Ok(LevelKBody { depth: cfg.depth, status: run.status, fixed_point_is_equilibrium, levels })
}

/// The two-by-two comparison of the two perfect-communication equilibria:
/// E1 pairs the first content with the first message.
pub fn explain_body(g: &MeaningGame, opts: &SolveOptions) -> Result<ExplainBody> {
    if g.n_contents() != 2 || g.n_messages() != 2 || !g.is_complete() {
        return Err(GameError::NotApplicable("explain needs a complete game with two contents and two messages".into()));
    }
    let mut u = [0.0; 2];
    for (m, slot) in u.iter_mut().enumerate() {
        let a = -g.turn_cost(0, m, 0, Player::Sender);
        let b = -g.turn_cost(1, m, 1, Player::Sender);
        if (a - b).abs() > TOL {
            return Err(GameError::NotApplicable(format!(
                "the cost of '{}' depends on the content",
                g.messages()[m].id
            )));
        }
        *slot = a;
    }
    let (p1, p2) = (g.prior().get(0), g.prior().get(1));
    let (u1, u2) = (u[0], u[1]);
    let e1 = p1 * u1 + p2 * u2;
    let e2 = p1 * u2 + p2 * u1;
    let difference = e1 - e2;
    let product = (p1 - p2) * (u1 - u2);
    let all = enumerate_pure_equilibria(g, opts)?;
    let find = |sender: [usize; 2]| {
        all.iter().find(|r| r.pure.sender == sender && r.success == 1.0).map(|r| r.cost_eu_sender)
    };
    let id = |c: usize, m: usize| format!("{}↦{}", g.contents()[c].id, g.messages()[m].id);
    let preferred = if difference > TOL {
        format!("E1 ({}, {})", id(0, 0), id(1, 1))
    } else if difference < -TOL {
        format!("E2 ({}, {})", id(0, 1), id(1, 0))
    } else {
        "neither".into()
    };
    Ok(ExplainBody {
        contents: [g.contents()[0].id.clone(), g.contents()[1].id.clone()],
        messages: [g.messages()[0].id.clone(), g.messages()[1].id.clone()],
        p1,
        p2,
        u1,
        u2,
        e1,
        e2,
        difference,
        product,
        identity: format!("E1 - E2 = ({p1} - {p2}) * ({u1} - {u2}) = {product}"),
        enumerated: [find([0, 1]), find([1, 0])],
        preferred,
    })
}

pub fn discourse_summary(d: &LoadedDiscourse) -> DiscourseSummary {
    DiscourseSummary {
        entities: d.discourse.entities.len(),
        utterances: d.discourse.utterances.len(),
        slots: d.slots.clone(),
        compounds: d.discourse.compounds.iter().map(|c| c.id.clone()).collect(),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(inline).collect::<Vec<_>>().join(", "),
        Value::Object(_) => inline(v),
        other => other.to_string(),
    }
}

fn inline(v: &Value) -> String {
    match v {
        Value::Object(map) => {
            let mut text = map
                .values()
                .filter(|x| !x.is_boolean())
                .map(scalar)
                .collect::<Vec<_>>()
                .join("→");
            for (k, x) in map {
                if x == &Value::Bool(false) {
                    let _ = write!(text, " (not {})", k.replace('_', " "));
                }
            }
            text
        }
        Value::Array(items) => format!("[{}]", items.iter().map(inline).collect::<Vec<_>>().join(", ")),
        other => scalar(other),
    }
}

fn is_table(items: &[Value]) -> bool {
    !items.is_empty() && items.iter().all(Value::is_object)
}

/// Plain-text rendering of a report value: scalars as `key: value`, arrays
/// of objects as aligned tables, nested objects as indented sections.
pub fn render_table(v: &Value) -> String {
    let mut out = String::new();
    section(&mut out, v, 0);
    out
}

fn section(out: &mut String, v: &Value, indent: usize) {
    let pad = " ".repeat(indent);
    let Value::Object(map) = v else {
        let _ = writeln!(out, "{pad}{}", scalar(v));
        return;
    };
    for (k, val) in map {
        match val {
            Value::Object(inner) if inner.values().any(|x| x.is_object() || x.is_array()) => {
                let _ = writeln!(out, "{pad}{k}:");
                section(out, val, indent + 2);
            }
            Value::Array(items) if is_table(items) => {
                let _ = writeln!(out, "{pad}{k}:");
                table(out, items, indent + 2);
            }
            Value::Array(items) if items.is_empty() => {
                let _ = writeln!(out, "{pad}{k}: (none)");
            }
            other => {
                let _ = writeln!(out, "{pad}{k}: {}", scalar(other));
            }
        }
    }
}

fn table(out: &mut String, rows: &[Value], indent: usize) {
    let pad = " ".repeat(indent);
    let mut columns: Vec<String> = Vec::new();
    for r in rows {
        for k in r.as_object().unwrap().keys() {
            if !columns.contains(k) {
                columns.push(k.clone());
            }
        }
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| columns.iter().map(|c| r.get(c).map_or("-".to_string(), scalar)).collect())
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| cells.iter().map(|r| r[i].chars().count()).chain([c.chars().count()]).max().unwrap())
        .collect();
    let line = |vals: &[String]| -> String {
        let joined: Vec<String> = vals
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v}{}", " ".repeat(w - v.chars().count())))
            .collect();
        format!("{pad}{}", joined.join("  ").trim_end())
    };
    let _ = writeln!(out, "{}", line(&columns));
    let _ = writeln!(out, "{}", line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
    for r in &cells {
        let _ = writeln!(out, "{}", line(r));
    }
}

/// Inputs of a run, in the form that is hashed.
#[derive(Clone, Debug, Serialize)]
pub struct RunInputs<'a> {
    pub command: &'a str,
    pub game: Option<GameFile>,
    pub receiver_game: Option<GameFile>,
    pub discourse: Option<&'a Discourse>,
    pub off_path: String,
    pub cap: String,
    pub depth: Option<usize>,
    pub seed: Option<u64>,
    pub extra: BTreeMap<String, String>,
}
