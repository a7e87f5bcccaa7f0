//! Meaning games and the expected-utility arithmetic shared by every solver.
//!
//! A meaning game is a discrete signaling game whose sender types and receiver
//! actions are both semantic contents. A turn `⟨c_S, m, c_R⟩` pays player `X`
//!
//! ```text
//! U_X(c_S, m, c_R) = credit_X(c_S, c_R) - sender_cost_X(c_S, m) - receiver_cost_X(m, c_R)
//! ```
//!
//! where `credit_X` is the success bonus on the diagonal and zero elsewhere for
//! ordinary games. Flattened compound games carry componentwise partial credit.
//! A pair without a cost entry is ungrammatical and is not an edge of the game.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GameError, Result};

/// Absolute tolerance for probability sums and best-response comparisons.
pub const TOL: f64 = 1e-9;

pub type ContentIx = usize;
pub type MessageIx = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Content {
    pub id: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub label: String,
}

impl Content {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        Content { label: id.clone(), id }
    }
}

impl Message {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        Message { label: id.clone(), id }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Sender,
    Receiver,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Sender => f.write_str("S"),
            Player::Receiver => f.write_str("R"),
        }
    }
}

/// Probability of each content being the one the sender intends.
#[derive(Clone, Debug, PartialEq)]
pub struct Prior(Vec<f64>);

impl Prior {
    /// Wraps weights as-is; [`validate_game`] reports any defect.
    pub fn new(weights: Vec<f64>) -> Self {
        Prior(weights)
    }

    /// Scales nonnegative weights to sum to one. Weights already summing to
    /// one within [`TOL`] are kept as given; the flag is set otherwise.
    pub fn normalized(weights: Vec<f64>) -> Result<(Self, bool)> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("prior weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(invalid("prior weights sum to zero"));
        }
        if (total - 1.0).abs() <= TOL {
            return Ok((Prior(weights), false));
        }
        Ok((Prior(weights.into_iter().map(|w| w / total).collect()), true))
    }

    pub fn uniform(n: usize) -> Self {
        Prior(vec![1.0 / n as f64; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, c: ContentIx) -> f64 {
        self.0.get(c).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Cost of one grammatical content–message association, split into the
/// production side `⟨c_S, m⟩` and the interpretation side `⟨m, c_R⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairCost {
    pub sender: f64,
    pub receiver: f64,
}

impl PairCost {
    pub fn new(sender: f64, receiver: f64) -> Self {
        PairCost { sender, receiver }
    }

    /// An association cost charged half on each side, so a successful turn
    /// over this pair costs exactly `total`.
    pub fn split(total: f64) -> Self {
        PairCost { sender: total / 2.0, receiver: total / 2.0 }
    }

    pub fn total(&self) -> f64 {
        self.sender + self.receiver
    }
}

/// What a player gains from the receiver's interpretation, before costs.
#[derive(Clone, Debug, PartialEq)]
pub enum Credit {
    /// `bonus` when the interpretation matches the intention, zero otherwise.
    Exact(f64),
    /// Full `[intended][interpreted]` table; used by flattened compound games
    /// where recovering some constituents is worth part of the bonus.
    Partial(Vec<Vec<f64>>),
}

impl Credit {
    pub fn get(&self, intended: ContentIx, interpreted: ContentIx) -> f64 {
        match self {
            Credit::Exact(b) => {
                if intended == interpreted {
                    *b
                } else {
                    0.0
                }
            }
            Credit::Partial(t) => t
                .get(intended)
                .and_then(|row| row.get(interpreted))
                .copied()
                .unwrap_or(0.0),
        }
    }

    /// The scalar success bonus, when the credit is exact.
    pub fn bonus(&self) -> Option<f64> {
        match self {
            Credit::Exact(b) => Some(*b),
            Credit::Partial(_) => None,
        }
    }

    fn mean(&self, other: &Credit, n: usize) -> Credit {
        match (self, other) {
            (Credit::Exact(a), Credit::Exact(b)) => Credit::Exact((a + b) / 2.0),
            _ => Credit::Partial(
                (0..n)
                    .map(|i| (0..n).map(|j| (self.get(i, j) + other.get(i, j)) / 2.0).collect())
                    .collect(),
            ),
        }
    }
}

/// One player's valuation of turns.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayerModel {
    pub credit: Credit,
    /// `costs[c][m]`; `None` marks an ungrammatical pair.
    pub costs: Vec<Vec<Option<PairCost>>>,
}

impl PlayerModel {
    pub fn cost(&self, c: ContentIx, m: MessageIx) -> Option<PairCost> {
        self.costs.get(c).and_then(|row| row.get(m)).copied().flatten()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UtilityModel {
    pub sender: PlayerModel,
    pub receiver: PlayerModel,
    /// Both players evaluate turns identically.
    pub shared: bool,
}

impl UtilityModel {
    pub fn shared(model: PlayerModel) -> Self {
        UtilityModel { sender: model.clone(), receiver: model, shared: true }
    }

    pub fn split(sender: PlayerModel, receiver: PlayerModel) -> Self {
        UtilityModel { sender, receiver, shared: false }
    }

    pub fn player(&self, p: Player) -> &PlayerModel {
        match p {
            Player::Sender => &self.sender,
            Player::Receiver => &self.receiver,
        }
    }
}

/// A turn of communication: the sender intends `intended`, sends `sent`, and
/// the receiver takes it to mean `interpreted`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Turn {
    pub intended: ContentIx,
    pub sent: MessageIx,
    pub interpreted: ContentIx,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeaningGame {
    contents: Vec<Content>,
    messages: Vec<Message>,
    prior: Prior,
    utility: UtilityModel,
    edges: Vec<Vec<bool>>,
}

impl MeaningGame {
    /// Assembles a game without checking it. Use [`validate_game`] or
    /// [`MeaningGame::validated`] before solving.
    pub fn from_parts(
        contents: Vec<Content>,
        messages: Vec<Message>,
        prior: Prior,
        utility: UtilityModel,
    ) -> Self {
        let edges = (0..contents.len())
            .map(|c| {
                (0..messages.len())
                    .map(|m| utility.sender.cost(c, m).is_some() && utility.receiver.cost(c, m).is_some())
                    .collect()
            })
            .collect();
        MeaningGame { contents, messages, prior, utility, edges }
    }

    pub fn validated(self) -> Result<Self> {
        let report = validate_game(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(GameError::Invalid(report))
        }
    }

    pub fn contents(&self) -> &[Content] {
        &self.contents
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn utility_model(&self) -> &UtilityModel {
        &self.utility
    }

    pub fn n_contents(&self) -> usize {
        self.contents.len()
    }

    pub fn n_messages(&self) -> usize {
        self.messages.len()
    }

    pub fn content_index(&self, id: &str) -> Option<ContentIx> {
        self.contents.iter().position(|c| c.id == id)
    }

    pub fn message_index(&self, id: &str) -> Option<MessageIx> {
        self.messages.iter().position(|m| m.id == id)
    }

    pub fn is_edge(&self, c: ContentIx, m: MessageIx) -> bool {
        self.edges.get(c).and_then(|row| row.get(m)).copied().unwrap_or(false)
    }

    /// Messages grammatical for content `c`, in declaration order.
    pub fn messages_for(&self, c: ContentIx) -> impl Iterator<Item = MessageIx> + '_ {
        (0..self.n_messages()).filter(move |&m| self.is_edge(c, m))
    }

    /// Contents message `m` can grammatically mean, in declaration order.
    pub fn contents_for(&self, m: MessageIx) -> impl Iterator<Item = ContentIx> + '_ {
        (0..self.n_contents()).filter(move |&c| self.is_edge(c, m))
    }

    pub fn is_complete(&self) -> bool {
        self.edges.iter().all(|row| row.iter().all(|&e| e))
    }

    /// Same game with a different prior.
    pub fn with_prior(&self, prior: Prior) -> Self {
        MeaningGame { prior, ..self.clone() }
    }

    /// Same game with a different utility model; edges are recomputed.
    pub fn with_utility(&self, utility: UtilityModel) -> Self {
        MeaningGame::from_parts(self.contents.clone(), self.messages.clone(), self.prior.clone(), utility)
    }

    /// Utility of a turn for `player`, without checking the turn.
    pub(crate) fn turn_value(&self, cs: ContentIx, m: MessageIx, cr: ContentIx, player: Player) -> f64 {
        let model = self.utility.player(player);
        let production = model.cost(cs, m).map_or(0.0, |p| p.sender);
        let interpretation = model.cost(cr, m).map_or(0.0, |p| p.receiver);
        model.credit.get(cs, cr) - production - interpretation
    }

    /// Turn cost only, with the credit term dropped.
    pub(crate) fn turn_cost(&self, cs: ContentIx, m: MessageIx, cr: ContentIx, player: Player) -> f64 {
        let model = self.utility.player(player);
        model.cost(cs, m).map_or(0.0, |p| p.sender) + model.cost(cr, m).map_or(0.0, |p| p.receiver)
    }

    pub fn check_turn(&self, t: &Turn) -> Result<()> {
        let (nc, nm) = (self.n_contents(), self.n_messages());
        if t.intended >= nc || t.interpreted >= nc || t.sent >= nm {
            return Err(invalid(format!("turn {t:?} references unknown ids")));
        }
        if !self.is_edge(t.intended, t.sent) {
            return Err(invalid(format!(
                "'{}' cannot express '{}'",
                self.messages[t.sent].id, self.contents[t.intended].id
            )));
        }
        if !self.is_edge(t.interpreted, t.sent) {
            return Err(invalid(format!(
                "'{}' cannot be read as '{}'",
                self.messages[t.sent].id, self.contents[t.interpreted].id
            )));
        }
        Ok(())
    }

    pub fn utility(&self, t: &Turn, player: Player) -> Result<f64> {
        self.check_turn(t)?;
        Ok(self.turn_value(t.intended, t.sent, t.interpreted, player))
    }

    /// `Σ P(c) σ_S(m|c) σ_R(c'|m) U_X(c, m, c')`.
    pub fn expected_utility(&self, s: &SenderStrategy, r: &ReceiverStrategy, player: Player) -> Result<f64> {
        s.check_for(self)?;
        r.check_for(self)?;
        Ok(self.weighted_sum(s, r, |cs, m, cr| self.turn_value(cs, m, cr, player)))
    }

    /// Expected utility with the credit term removed, i.e. minus the expected
    /// cost of the turns played.
    pub fn expected_cost_utility(&self, s: &SenderStrategy, r: &ReceiverStrategy, player: Player) -> Result<f64> {
        s.check_for(self)?;
        r.check_for(self)?;
        Ok(-self.weighted_sum(s, r, |cs, m, cr| self.turn_cost(cs, m, cr, player)))
    }

    /// `Σ_c P(c) Σ_m σ_S(m|c) σ_R(c|m)`.
    pub fn success_probability(&self, s: &SenderStrategy, r: &ReceiverStrategy) -> Result<f64> {
        s.check_for(self)?;
        r.check_for(self)?;
        Ok(self.weighted_sum(s, r, |cs, _, cr| if cs == cr { 1.0 } else { 0.0 }))
    }

    fn weighted_sum(&self, s: &SenderStrategy, r: &ReceiverStrategy, f: impl Fn(usize, usize, usize) -> f64) -> f64 {
        let mut total = 0.0;
        for cs in 0..self.n_contents() {
            let p = self.prior.get(cs);
            if p == 0.0 {
                continue;
            }
            for m in 0..self.n_messages() {
                let ps = s.prob(cs, m);
                if ps == 0.0 {
                    continue;
                }
                for cr in 0..self.n_contents() {
                    let pr = r.prob(m, cr);
                    if pr == 0.0 {
                        continue;
                    }
                    total += p * ps * pr * f(cs, m, cr);
                }
            }
        }
        total
    }

    /// Both players adopt the pointwise mean of the two valuations.
    pub fn equalize_utilities(&self) -> MeaningGame {
        let (s, r) = (&self.utility.sender, &self.utility.receiver);
        let n = self.n_contents();
        let costs = (0..n)
            .map(|c| {
                (0..self.n_messages())
                    .map(|m| match (s.cost(c, m), r.cost(c, m)) {
                        (Some(a), Some(b)) => {
                            Some(PairCost::new((a.sender + b.sender) / 2.0, (a.receiver + b.receiver) / 2.0))
                        }
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        let model = PlayerModel { credit: s.credit.mean(&r.credit, n), costs };
        self.with_utility(UtilityModel::shared(model))
    }

    /// True when neither player's utility depends on the message: for every
    /// `(c_S, c_R)` the value is constant over messages grammatical for both.
    pub fn is_cheap_talk(&self) -> bool {
        let n = self.n_contents();
        [Player::Sender, Player::Receiver].into_iter().all(|player| {
            (0..n).all(|cs| {
                (0..n).all(|cr| {
                    let mut values = (0..self.n_messages())
                        .filter(|&m| self.is_edge(cs, m) && self.is_edge(cr, m))
                        .map(|m| self.turn_value(cs, m, cr, player));
                    match values.next() {
                        None => true,
                        Some(first) => values.all(|v| (v - first).abs() <= TOL),
                    }
                })
            })
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Violation,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub subject: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn violations(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Violation)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    fn push(&mut self, severity: Severity, subject: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue { severity, subject: subject.into(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            let tag = match issue.severity {
                Severity::Violation => "error",
                Severity::Warning => "warning",
            };
            writeln!(f, "  {tag}: {}: {}", issue.subject, issue.message)?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of a game and reports each defect.
pub fn validate_game(g: &MeaningGame) -> ValidationReport {
    use Severity::*;
    let mut report = ValidationReport::default();
    let (nc, nm) = (g.n_contents(), g.n_messages());

    if nc == 0 {
        report.push(Violation, "contents", "game has no contents");
    }
    if nm == 0 {
        report.push(Violation, "messages", "game has no messages");
    }
    let mut seen = HashSet::new();
    for c in &g.contents {
        if !seen.insert(c.id.as_str()) {
            report.push(Violation, format!("content '{}'", c.id), "duplicate id");
        }
    }
    let mut seen = HashSet::new();
    for m in &g.messages {
        if !seen.insert(m.id.as_str()) {
            report.push(Violation, format!("message '{}'", m.id), "duplicate id");
        }
    }

    let w = g.prior.weights();
    if w.len() != nc {
        report.push(Violation, "prior", format!("has {} weights for {} contents", w.len(), nc));
    } else if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        report.push(Violation, "prior", "weights must be finite and nonnegative");
    } else {
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > TOL {
            report.push(Violation, "prior", format!("weights sum to {total}, not 1"));
        }
    }

    let mut shapes_ok = true;
    for (name, model) in [("sender", &g.utility.sender), ("receiver", &g.utility.receiver)] {
        if model.costs.len() != nc || model.costs.iter().any(|row| row.len() != nm) {
            report.push(Violation, format!("{name} costs"), format!("table is not {nc}x{nm}"));
            shapes_ok = false;
            continue;
        }
        for (c, row) in model.costs.iter().enumerate() {
            for (m, cost) in row.iter().enumerate() {
                if let Some(p) = cost {
                    if !(p.sender.is_finite() && p.receiver.is_finite()) || p.sender < 0.0 || p.receiver < 0.0 {
                        report.push(
                            Violation,
                            format!("{name} cost ({}, {})", g.contents[c].id, g.messages[m].id),
                            "costs must be finite and nonnegative",
                        );
                    }
                }
            }
        }
        match &model.credit {
            Credit::Exact(b) => {
                if !(b.is_finite() && *b > 0.0) {
                    report.push(Violation, format!("{name} success bonus"), "must be positive");
                }
            }
            Credit::Partial(t) => {
                if t.len() != nc || t.iter().any(|row| row.len() != nc) {
                    report.push(Violation, format!("{name} credit"), format!("table is not {nc}x{nc}"));
                } else {
                    for i in 0..nc {
                        if !(t[i][i].is_finite() && t[i][i] > 0.0) {
                            report.push(
                                Violation,
                                format!("{name} credit ({0}, {0})", g.contents[i].id),
                                "full-recovery credit must be positive",
                            );
                        }
                        for j in (0..nc).filter(|&j| j != i) {
                            if !(t[i][j] >= 0.0 && t[i][j] < t[i][i]) {
                                report.push(
                                    Violation,
                                    format!("{name} credit ({}, {})", g.contents[i].id, g.contents[j].id),
                                    "partial credit must lie in [0, full credit)",
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    if !shapes_ok {
        return report;
    }

    for c in 0..nc {
        for m in 0..nm {
            let (s, r) = (g.utility.sender.cost(c, m).is_some(), g.utility.receiver.cost(c, m).is_some());
            if s != r {
                report.push(
                    Violation,
                    format!("pair ({}, {})", g.contents[c].id, g.messages[m].id),
                    "grammatical for one player's model but not the other's",
                );
            }
        }
    }
    for c in 0..nc {
        if g.messages_for(c).next().is_none() {
            report.push(Violation, format!("content '{}'", g.contents[c].id), "has no grammatical message");
        }
    }
    for m in 0..nm {
        if g.contents_for(m).next().is_none() {
            report.push(Warning, format!("message '{}'", g.messages[m].id), "has no grammatical content");
        }
    }
    if g.utility.shared && !models_close(&g.utility.sender, &g.utility.receiver) {
        report.push(Violation, "utility", "marked shared but the two players' models differ");
    }

    // With exact credit and nonnegative costs a mismatched turn can never pay
    // more than zero; this loop guards hand-built credit tables.
    if matches!(g.utility.sender.credit, Credit::Exact(_)) && matches!(g.utility.receiver.credit, Credit::Exact(_)) {
        'outer: for cs in 0..nc {
            for m in g.messages_for(cs) {
                for cr in g.contents_for(m).filter(|&cr| cr != cs) {
                    for p in [Player::Sender, Player::Receiver] {
                        if g.turn_value(cs, m, cr, p) > 0.0 {
                            report.push(Violation, "utility", "a mismatched turn has positive utility");
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    for p in [Player::Sender, Player::Receiver] {
        let model = g.utility.player(p);
        let Some(bonus) = model.credit.bonus() else { continue };
        let costs: Vec<f64> = (0..nc)
            .flat_map(|c| g.messages_for(c).map(move |m| (c, m)))
            .filter_map(|(c, m)| model.cost(c, m).map(|pc| pc.total()))
            .collect();
        if let (Some(lo), Some(hi)) = (
            costs.iter().copied().reduce(f64::min),
            costs.iter().copied().reduce(f64::max),
        ) {
            if bonus <= hi - lo {
                report.push(
                    Warning,
                    format!("{p} success bonus"),
                    format!("bonus {bonus} does not exceed the cost spread {}; full-success equilibria may not exist", hi - lo),
                );
            }
        }
    }
    report
}

fn models_close(a: &PlayerModel, b: &PlayerModel) -> bool {
    const EPS: f64 = 1e-12;
    let n = a.costs.len();
    let credit_eq = (0..n).all(|i| (0..n).all(|j| (a.credit.get(i, j) - b.credit.get(i, j)).abs() <= EPS));
    let costs_eq = a.costs.len() == b.costs.len()
        && a.costs.iter().zip(&b.costs).all(|(ra, rb)| {
            ra.len() == rb.len()
                && ra.iter().zip(rb).all(|(x, y)| match (x, y) {
                    (None, None) => true,
                    (Some(x), Some(y)) => (x.sender - y.sender).abs() <= EPS && (x.receiver - y.receiver).abs() <= EPS,
                    _ => false,
                })
        });
    credit_eq && costs_eq
}

fn check_row(row: &[f64], allowed: impl Fn(usize) -> bool, what: &str) -> Result<()> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(invalid(format!("{what}: probabilities must be finite and nonnegative")));
    }
    if let Some((i, _)) = row.iter().enumerate().find(|&(i, &p)| p > 0.0 && !allowed(i)) {
        return Err(invalid(format!("{what}: puts weight on ungrammatical option {i}")));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > TOL {
        return Err(invalid(format!("{what}: sums to {total}")));
    }
    Ok(())
}

/// `σ_S(m|c)`, one distribution over messages per content.
#[derive(Clone, Debug, PartialEq)]
pub struct SenderStrategy {
    rows: Vec<Vec<f64>>,
}

impl SenderStrategy {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        SenderStrategy { rows }
    }

    pub fn pure(choice: &[MessageIx], n_messages: usize) -> Self {
        SenderStrategy {
            rows: choice
                .iter()
                .map(|&m| (0..n_messages).map(|i| if i == m { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn prob(&self, c: ContentIx, m: MessageIx) -> f64 {
        self.rows.get(c).and_then(|r| r.get(m)).copied().unwrap_or(0.0)
    }

    /// The message content `c` sends for sure, if the row is a point mass.
    pub fn pure_choice(&self, c: ContentIx) -> Option<MessageIx> {
        point_mass(self.rows.get(c)?)
    }

    pub fn is_deterministic(&self) -> bool {
        self.rows.iter().all(|r| point_mass(r).is_some())
    }

    pub fn check_for(&self, g: &MeaningGame) -> Result<()> {
        if self.rows.len() != g.n_contents() {
            return Err(invalid(format!(
                "sender strategy has {} rows for {} contents",
                self.rows.len(),
                g.n_contents()
            )));
        }
        for (c, row) in self.rows.iter().enumerate() {
            if row.len() != g.n_messages() {
                return Err(invalid(format!("sender row '{}' has the wrong width", g.contents[c].id)));
            }
            check_row(row, |m| g.is_edge(c, m), &format!("sender row '{}'", g.contents[c].id))?;
        }
        Ok(())
    }
}

/// `σ_R(c|m)`, one distribution over contents per message. Rows of messages
/// with no grammatical content are all zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceiverStrategy {
    rows: Vec<Vec<f64>>,
}

impl ReceiverStrategy {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        ReceiverStrategy { rows }
    }

    pub fn pure(choice: &[Option<ContentIx>], n_contents: usize) -> Self {
        ReceiverStrategy {
            rows: choice
                .iter()
                .map(|c| (0..n_contents).map(|i| if Some(i) == *c { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn prob(&self, m: MessageIx, c: ContentIx) -> f64 {
        self.rows.get(m).and_then(|r| r.get(c)).copied().unwrap_or(0.0)
    }

    pub fn pure_choice(&self, m: MessageIx) -> Option<ContentIx> {
        point_mass(self.rows.get(m)?)
    }

    pub fn is_deterministic(&self) -> bool {
        self.rows.iter().all(|r| point_mass(r).is_some() || r.iter().all(|&p| p == 0.0))
    }

    pub fn check_for(&self, g: &MeaningGame) -> Result<()> {
        if self.rows.len() != g.n_messages() {
            return Err(invalid(format!(
                "receiver strategy has {} rows for {} messages",
                self.rows.len(),
                g.n_messages()
            )));
        }
        for (m, row) in self.rows.iter().enumerate() {
            if row.len() != g.n_contents() {
                return Err(invalid(format!("receiver row '{}' has the wrong width", g.messages[m].id)));
            }
            if g.contents_for(m).next().is_none() {
                if row.iter().any(|&p| p != 0.0) {
                    return Err(invalid(format!(
                        "receiver row '{}' must be empty: the message has no grammatical content",
                        g.messages[m].id
                    )));
                }
                continue;
            }
            check_row(row, |c| g.is_edge(c, m), &format!("receiver row '{}'", g.messages[m].id))?;
        }
        Ok(())
    }
}

fn point_mass(row: &[f64]) -> Option<usize> {
    let i = row.iter().position(|&p| p > 0.0)?;
    ((row[i] - 1.0).abs() <= TOL && row.iter().enumerate().all(|(j, &p)| j == i || p == 0.0)).then_some(i)
}

/// Incremental construction of a validated game from string ids.
///
/// Edges default to the complete bipartite graph; per-message costs apply to
/// every grammatical pair of that message and are split evenly between the
/// production and interpretation sides.
#[derive(Clone, Debug, Default)]
pub struct GameBuilder {
    contents: Vec<Content>,
    messages: Vec<Message>,
    message_costs: Vec<f64>,
    prior: Vec<f64>,
    bonus: Option<f64>,
    grammatical: Option<Vec<(String, String)>>,
    pair_costs: Vec<(String, String, PairCost)>,
    receiver_bonus: Option<f64>,
    receiver_pair_costs: Vec<(String, String, PairCost)>,
}

impl GameBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn content(mut self, id: &str, weight: f64) -> Self {
        self.contents.push(Content::new(id));
        self.prior.push(weight);
        self
    }

    pub fn content_labeled(mut self, id: &str, label: &str, weight: f64) -> Self {
        self.contents.push(Content { id: id.into(), label: label.into() });
        self.prior.push(weight);
        self
    }

    pub fn message(mut self, id: &str, cost: f64) -> Self {
        self.messages.push(Message::new(id));
        self.message_costs.push(cost);
        self
    }

    pub fn message_labeled(mut self, id: &str, label: &str, cost: f64) -> Self {
        self.messages.push(Message { id: id.into(), label: label.into() });
        self.message_costs.push(cost);
        self
    }

    pub fn bonus(mut self, bonus: f64) -> Self {
        self.bonus = Some(bonus);
        self
    }

    /// Restricts the edges to the listed pairs (plus any later `grammatical`).
    pub fn grammatical(mut self, content: &str, message: &str) -> Self {
        self.grammatical.get_or_insert_with(Vec::new).push((content.into(), message.into()));
        self
    }

    /// Overrides the cost of one pair for both players.
    pub fn pair_cost(mut self, content: &str, message: &str, cost: PairCost) -> Self {
        self.pair_costs.push((content.into(), message.into(), cost));
        self
    }

    /// Gives the receiver a bonus of its own; the game stops being shared.
    pub fn receiver_bonus(mut self, bonus: f64) -> Self {
        self.receiver_bonus = Some(bonus);
        self
    }

    /// Overrides one pair in the receiver's model only.
    pub fn receiver_pair_cost(mut self, content: &str, message: &str, cost: PairCost) -> Self {
        self.receiver_pair_costs.push((content.into(), message.into(), cost));
        self
    }

    /// The assembled game, unvalidated.
    pub fn assemble(self) -> Result<MeaningGame> {
        let (nc, nm) = (self.contents.len(), self.messages.len());
        let cix = |id: &str| {
            self.contents
                .iter()
                .position(|c| c.id == id)
                .ok_or_else(|| invalid(format!("unknown content '{id}'")))
        };
        let mix = |id: &str| {
            self.messages
                .iter()
                .position(|m| m.id == id)
                .ok_or_else(|| invalid(format!("unknown message '{id}'")))
        };
        let mut edge = vec![vec![self.grammatical.is_none(); nm]; nc];
        for (c, m) in self.grammatical.iter().flatten() {
            edge[cix(c)?][mix(m)?] = true;
        }
        let mut costs: Vec<Vec<Option<PairCost>>> = (0..nc)
            .map(|c| (0..nm).map(|m| edge[c][m].then(|| PairCost::split(self.message_costs[m]))).collect())
            .collect();
        for (c, m, pc) in &self.pair_costs {
            let (c, m) = (cix(c)?, mix(m)?);
            if !edge[c][m] {
                return Err(invalid(format!(
                    "cost given for ungrammatical pair ({}, {})",
                    self.contents[c].id, self.messages[m].id
                )));
            }
            costs[c][m] = Some(*pc);
        }
        let bonus = self.bonus.unwrap_or(1.0);
        let sender = PlayerModel { credit: Credit::Exact(bonus), costs };
        let utility = if self.receiver_bonus.is_none() && self.receiver_pair_costs.is_empty() {
            UtilityModel::shared(sender)
        } else {
            let mut receiver = sender.clone();
            receiver.credit = Credit::Exact(self.receiver_bonus.unwrap_or(bonus));
            for (c, m, pc) in &self.receiver_pair_costs {
                let (c, m) = (cix(c)?, mix(m)?);
                if !edge[c][m] {
                    return Err(invalid("receiver cost given for an ungrammatical pair"));
                }
                receiver.costs[c][m] = Some(*pc);
            }
            UtilityModel::split(sender, receiver)
        };
        Ok(MeaningGame::from_parts(self.contents, self.messages, Prior::new(self.prior), utility))
    }

    pub fn build(self) -> Result<MeaningGame> {
        self.assemble()?.validated()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2(p1: f64, cost_he: f64, cost_man: f64, bonus: f64) -> MeaningGame {
        GameBuilder::new()
            .content("Fred", p1)
            .content("Max", 1.0 - p1)
            .message("he", cost_he)
            .message("the man", cost_man)
            .bonus(bonus)
            .build()
            .unwrap()
    }

    fn left() -> (SenderStrategy, ReceiverStrategy) {
        (SenderStrategy::pure(&[0, 1], 2), ReceiverStrategy::pure(&[Some(0), Some(1)], 2))
    }

    fn right() -> (SenderStrategy, ReceiverStrategy) {
        (SenderStrategy::pure(&[1, 0], 2), ReceiverStrategy::pure(&[Some(1), Some(0)], 2))
    }

    #[test]
    fn fig2_game_is_valid() {
        let g = GameBuilder::new()
            .content("Fred", 0.6)
            .content("Max", 0.4)
            .message("he", 0.0)
            .message("the man", 0.5)
            .build()
            .unwrap();
        assert_eq!(validate_game(&g).violations().count(), 0);
        assert!(g.is_complete());
    }

    #[test]
    fn prior_not_summing_to_one_is_one_violation() {
        let g = GameBuilder::new()
            .content("Fred", 0.5)
            .content("Max", 0.4)
            .message("he", 0.0)
            .assemble()
            .unwrap();
        let report = validate_game(&g);
        let v: Vec<_> = report.violations().collect();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].subject, "prior");
    }

    #[test]
    fn content_without_edges_is_one_violation() {
        let g = GameBuilder::new()
            .content("Fred", 0.5)
            .content("Max", 0.5)
            .message("he", 0.0)
            .grammatical("Fred", "he")
            .assemble()
            .unwrap();
        let report = validate_game(&g);
        let v: Vec<_> = report.violations().collect();
        assert_eq!(v.len(), 1);
        assert!(v[0].subject.contains("Max"));
        assert!(matches!(g.validated(), Err(GameError::Invalid(_))));
    }

    #[test]
    fn utility_of_successful_free_turn_is_the_bonus() {
        let g = fig2(0.6, 0.0, 0.5, 1.0);
        let t = Turn { intended: 0, sent: 0, interpreted: 0 };
        assert_eq!(g.utility(&t, Player::Sender).unwrap(), 1.0);
        assert_eq!(g.utility(&t, Player::Receiver).unwrap(), 1.0);
        let miss = Turn { intended: 0, sent: 0, interpreted: 1 };
        assert!(g.utility(&miss, Player::Sender).unwrap() <= 0.0);
        let bad = Turn { intended: 0, sent: 7, interpreted: 0 };
        assert!(matches!(g.utility(&bad, Player::Sender), Err(GameError::InvalidArgument(_))));
    }

    #[test]
    fn utility_strictly_decreases_in_cost() {
        let t = Turn { intended: 0, sent: 1, interpreted: 0 };
        let a = fig2(0.6, 0.0, 0.2, 1.0).utility(&t, Player::Sender).unwrap();
        let b = fig2(0.6, 0.0, 0.4, 1.0).utility(&t, Player::Sender).unwrap();
        assert!(b < a);
    }

    #[test]
    fn fig3_expected_utilities() {
        // Turn utilities U1 = 1.0 for 'he' and U2 = 0.5 for 'the man'.
        let g = fig2(0.6, 0.0, 0.5, 1.0);
        let (s, r) = left();
        let (s2, r2) = right();
        let e1 = g.expected_utility(&s, &r, Player::Sender).unwrap();
        let e2 = g.expected_utility(&s2, &r2, Player::Sender).unwrap();
        assert!((e1 - 0.8).abs() < 1e-12);
        assert!((e2 - 0.7).abs() < 1e-12);
        assert!((g.expected_utility(&s, &r, Player::Receiver).unwrap() - 0.8).abs() < 1e-12);
        // Without the constant bonus: U1 = 0, U2 = -0.5.
        let n1 = g.expected_cost_utility(&s, &r, Player::Sender).unwrap();
        let n2 = g.expected_cost_utility(&s2, &r2, Player::Sender).unwrap();
        assert!((n1 - (0.6 * 0.0 + 0.4 * -0.5)).abs() < 1e-12);
        assert!((n1 - n2 - (0.6 - 0.4) * (0.0 - -0.5)).abs() < 1e-12);
    }

    #[test]
    fn matched_zero_cost_profile_pays_bonus() {
        let g = fig2(0.6, 0.0, 0.0, 1.0);
        let (s, r) = left();
        assert!((g.expected_utility(&s, &r, Player::Sender).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(g.success_probability(&s, &r).unwrap(), 1.0);
        let (s, r) = right();
        assert_eq!(g.success_probability(&s, &r).unwrap(), 1.0);
    }

    #[test]
    fn uniform_receiver_succeeds_half_the_time() {
        let g = fig2(0.7, 0.0, 0.5, 1.0);
        let s = SenderStrategy::pure(&[0, 1], 2);
        let r = ReceiverStrategy::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!((g.success_probability(&s, &r).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_pair_game_always_succeeds() {
        let g = GameBuilder::new().content("a", 1.0).message("x", 0.3).build().unwrap();
        let s = SenderStrategy::pure(&[0], 1);
        let r = ReceiverStrategy::pure(&[Some(0)], 1);
        assert_eq!(g.success_probability(&s, &r).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = fig2(0.6, 0.0, 0.5, 1.0);
        let s = SenderStrategy::pure(&[0], 2);
        let r = ReceiverStrategy::pure(&[Some(0), Some(1)], 2);
        assert!(g.expected_utility(&s, &r, Player::Sender).is_err());
        assert!(g.success_probability(&s, &r).is_err());
    }

    #[test]
    fn equalize_takes_the_mean() {
        let g = GameBuilder::new()
            .content("c", 1.0)
            .message("m", 0.0)
            .pair_cost("c", "m", PairCost::new(0.2, 0.0))
            .receiver_pair_cost("c", "m", PairCost::new(0.4, 0.0))
            .build()
            .unwrap();
        assert!(!g.utility_model().shared);
        let eq = g.equalize_utilities();
        assert!(eq.utility_model().shared);
        let pc = eq.utility_model().sender.cost(0, 0).unwrap();
        assert!((pc.sender - 0.3).abs() < 1e-12);
        assert_eq!(eq.equalize_utilities(), eq);
        assert!(validate_game(&eq).is_valid());

        let shared = fig2(0.6, 0.0, 0.5, 1.0);
        assert_eq!(shared.equalize_utilities(), shared);
    }

    #[test]
    fn cheap_talk_detection() {
        assert!(fig2(0.6, 0.0, 0.0, 1.0).is_cheap_talk());
        assert!(!fig2(0.6, 0.0, 0.5, 1.0).is_cheap_talk());
        // nonzero costs that depend on the content only
        let g = GameBuilder::new()
            .content("a", 0.5)
            .content("b", 0.5)
            .message("x", 0.0)
            .message("y", 0.0)
            .pair_cost("a", "x", PairCost::new(0.3, 0.1))
            .pair_cost("a", "y", PairCost::new(0.3, 0.1))
            .pair_cost("b", "x", PairCost::new(0.2, 0.4))
            .pair_cost("b", "y", PairCost::new(0.2, 0.4))
            .build()
            .unwrap();
        assert!(g.is_cheap_talk());
    }

    #[test]
    fn normalizing_a_prior_flags_rescaling() {
        let (p, rescaled) = Prior::normalized(vec![3.0, 1.0]).unwrap();
        assert!(rescaled);
        assert_eq!(p.weights(), &[0.75, 0.25]);
        assert!(!Prior::normalized(vec![0.5, 0.5]).unwrap().1);
        assert!(Prior::normalized(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn low_bonus_draws_a_warning() {
        let g = fig2(0.6, 0.0, 2.0, 1.0);
        let report = validate_game(&g);
        assert!(report.is_valid());
        assert!(report.warnings().any(|w| w.subject.contains("bonus")));
    }
}
