//! Pure-strategy equilibria of meaning games and Pareto selection among them.
//!
//! An equilibrium here is a complete Bayesian one: the sender best-responds
//! type by type, and the receiver best-responds message by message to beliefs
//! that follow Bayes' rule on the path of play. Beliefs after messages nobody
//! sends are fixed by an [`OffPathRule`].

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GameError, Result};
use crate::game::{
    validate_game, ContentIx, MeaningGame, MessageIx, Player, ReceiverStrategy, SenderStrategy, TOL,
};

pub const DEFAULT_CAP: u128 = 10_000_000;

/// Beliefs after a message the sender never uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffPathRule {
    /// The prior, restricted to contents the message can mean.
    #[default]
    #[serde(alias = "prior")]
    PriorRestricted,
    /// Uniform over contents the message can mean.
    #[serde(alias = "uniform")]
    UniformRestricted,
}

impl std::str::FromStr for OffPathRule {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prior" | "prior-restricted" => Ok(OffPathRule::PriorRestricted),
            "uniform" | "uniform-restricted" => Ok(OffPathRule::UniformRestricted),
            other => Err(GameError::InvalidArgument(format!("unknown off-path rule '{other}' (expected prior or uniform)"))),
        }
    }
}

impl fmt::Display for OffPathRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OffPathRule::PriorRestricted => "prior",
            OffPathRule::UniformRestricted => "uniform",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub off_path: OffPathRule,
    /// Upper bound on the number of pure profiles enumeration may visit.
    pub cap: u128,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { off_path: OffPathRule::default(), cap: DEFAULT_CAP }
    }
}

/// A deterministic profile: the message each content sends and the content
/// each message is read as (`None` for messages that mean nothing).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PureProfile {
    pub sender: Vec<MessageIx>,
    pub receiver: Vec<Option<ContentIx>>,
}

impl PureProfile {
    pub fn to_profile(&self, g: &MeaningGame) -> Profile {
        Profile::new(
            SenderStrategy::pure(&self.sender, g.n_messages()),
            ReceiverStrategy::pure(&self.receiver, g.n_contents()),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub sender: SenderStrategy,
    pub receiver: ReceiverStrategy,
    pub deterministic: bool,
}

impl Profile {
    pub fn new(sender: SenderStrategy, receiver: ReceiverStrategy) -> Self {
        let deterministic = sender.is_deterministic() && receiver.is_deterministic();
        Profile { sender, receiver, deterministic }
    }

    /// The pure form of a deterministic profile.
    pub fn as_pure(&self) -> Option<PureProfile> {
        if !self.deterministic {
            return None;
        }
        let sender = (0..self.sender.rows().len()).map(|c| self.sender.pure_choice(c)).collect::<Option<_>>()?;
        let receiver = (0..self.receiver.rows().len()).map(|m| self.receiver.pure_choice(m)).collect();
        Some(PureProfile { sender, receiver })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeliefSystem {
    /// Distribution over contents after each message; `None` for messages
    /// that cannot mean anything.
    pub posterior: Vec<Option<Vec<f64>>>,
    pub on_path: Vec<bool>,
    pub off_path_rule: OffPathRule,
}

impl BeliefSystem {
    pub fn get(&self, m: MessageIx) -> Option<&[f64]> {
        self.posterior.get(m)?.as_deref()
    }
}

/// Receiver beliefs induced by a sender strategy.
pub fn posterior_beliefs(g: &MeaningGame, s: &SenderStrategy, rule: OffPathRule) -> Result<BeliefSystem> {
    s.check_for(g)?;
    let nc = g.n_contents();
    let mut posterior = Vec::with_capacity(g.n_messages());
    let mut on_path = Vec::with_capacity(g.n_messages());
    for m in 0..g.n_messages() {
        let joint: Vec<f64> = (0..nc).map(|c| g.prior().get(c) * s.prob(c, m)).collect();
        let mass: f64 = joint.iter().sum();
        if mass > 0.0 {
            posterior.push(Some(joint.into_iter().map(|x| x / mass).collect()));
            on_path.push(true);
        } else {
            posterior.push(off_path_belief(g, m, rule));
            on_path.push(false);
        }
    }
    Ok(BeliefSystem { posterior, on_path, off_path_rule: rule })
}

fn off_path_belief(g: &MeaningGame, m: MessageIx, rule: OffPathRule) -> Option<Vec<f64>> {
    let support: Vec<ContentIx> = g.contents_for(m).collect();
    if support.is_empty() {
        return None;
    }
    let nc = g.n_contents();
    let weight = |c: ContentIx| match rule {
        OffPathRule::PriorRestricted => g.prior().get(c),
        OffPathRule::UniformRestricted => 1.0,
    };
    let mut total: f64 = support.iter().map(|&c| weight(c)).sum();
    let mut belief = vec![0.0; nc];
    if total > 0.0 {
        for &c in &support {
            belief[c] = weight(c) / total;
        }
    } else {
        // every candidate has zero prior: fall back to uniform
        total = support.len() as f64;
        for &c in &support {
            belief[c] = 1.0 / total;
        }
    }
    Some(belief)
}

/// Interim value to content `c` of sending each grammatical message against `r`.
pub fn sender_values(g: &MeaningGame, r: &ReceiverStrategy, c: ContentIx) -> Vec<(MessageIx, f64)> {
    g.messages_for(c)
        .map(|m| {
            let v = g
                .contents_for(m)
                .map(|cr| r.prob(m, cr) * g.turn_value(c, m, cr, Player::Sender))
                .sum();
            (m, v)
        })
        .collect()
}

/// Value to the receiver of each reading of `m` under `belief`.
pub fn receiver_values(g: &MeaningGame, belief: &[f64], m: MessageIx) -> Vec<(ContentIx, f64)> {
    g.contents_for(m)
        .map(|cr| {
            let v = belief
                .iter()
                .enumerate()
                .filter(|(_, &mu)| mu > 0.0)
                .map(|(cs, &mu)| mu * g.turn_value(cs, m, cr, Player::Receiver))
                .sum();
            (cr, v)
        })
        .collect()
}

/// Options within [`TOL`] of the best value, in declaration order.
pub fn best_set(values: &[(usize, f64)]) -> Vec<usize> {
    let best = values.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    values.iter().filter(|&&(_, v)| v >= best - TOL).map(|&(i, _)| i).collect()
}

/// A profitable unilateral deviation.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "player", rename_all = "lowercase")]
pub enum Deviation {
    Sender { content: ContentIx, from: MessageIx, to: MessageIx, gain: f64 },
    Receiver { message: MessageIx, from: ContentIx, to: ContentIx, gain: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumCheck {
    pub beliefs: BeliefSystem,
    /// First profitable deviation found, sender types before messages.
    pub witness: Option<Deviation>,
}

impl EquilibriumCheck {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

pub fn is_equilibrium(g: &MeaningGame, p: &Profile, rule: OffPathRule) -> Result<EquilibriumCheck> {
    p.sender.check_for(g)?;
    p.receiver.check_for(g)?;
    let beliefs = posterior_beliefs(g, &p.sender, rule)?;

    for c in 0..g.n_contents() {
        let values = sender_values(g, &p.receiver, c);
        let (best_m, best) = argmax(&values);
        for &(m, v) in &values {
            if p.sender.prob(c, m) > 0.0 && v < best - TOL {
                let witness = Deviation::Sender { content: c, from: m, to: best_m, gain: best - v };
                return Ok(EquilibriumCheck { beliefs, witness: Some(witness) });
            }
        }
    }
    for m in 0..g.n_messages() {
        let Some(belief) = beliefs.get(m) else { continue };
        let values = receiver_values(g, belief, m);
        let (best_c, best) = argmax(&values);
        for &(c, v) in &values {
            if p.receiver.prob(m, c) > 0.0 && v < best - TOL {
                let witness = Deviation::Receiver { message: m, from: c, to: best_c, gain: best - v };
                return Ok(EquilibriumCheck { beliefs, witness: Some(witness) });
            }
        }
    }
    Ok(EquilibriumCheck { beliefs, witness: None })
}

fn argmax(values: &[(usize, f64)]) -> (usize, f64) {
    values
        .iter()
        .copied()
        .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumKind {
    Separating,
    Pooling,
    Partial,
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquilibriumKind::Separating => "separating",
            EquilibriumKind::Pooling => "pooling",
            EquilibriumKind::Partial => "partial",
        })
    }
}

/// How a content with positive prior is communicated under a pure profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PlayedTurn {
    pub intended: ContentIx,
    pub sent: MessageIx,
    pub interpreted: ContentIx,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub profile: Profile,
    pub pure: PureProfile,
    pub beliefs: BeliefSystem,
    pub success: f64,
    pub eu_sender: f64,
    pub eu_receiver: f64,
    /// Expected utilities with the credit term removed.
    pub cost_eu_sender: f64,
    pub cost_eu_receiver: f64,
    pub kind: EquilibriumKind,
    /// On-path turns, one per content with positive prior.
    pub interpretation: Vec<PlayedTurn>,
}

impl EquilibriumReport {
    pub fn build(g: &MeaningGame, pure: PureProfile, beliefs: BeliefSystem) -> Result<Self> {
        let profile = pure.to_profile(g);
        let (s, r) = (&profile.sender, &profile.receiver);
        let support: Vec<ContentIx> = (0..g.n_contents()).filter(|&c| g.prior().get(c) > 0.0).collect();
        let sent: Vec<MessageIx> = support.iter().map(|&c| pure.sender[c]).collect();
        let distinct = {
            let mut v = sent.clone();
            v.sort_unstable();
            v.dedup();
            v.len()
        };
        let kind = if distinct == sent.len() {
            EquilibriumKind::Separating
        } else if distinct == 1 {
            EquilibriumKind::Pooling
        } else {
            EquilibriumKind::Partial
        };
        let interpretation = support
            .iter()
            .map(|&c| {
                let m = pure.sender[c];
                let interpreted = pure.receiver[m].ok_or_else(|| invalid("on-path message has no reading"))?;
                Ok(PlayedTurn { intended: c, sent: m, interpreted })
            })
            .collect::<Result<_>>()?;
        Ok(EquilibriumReport {
            success: g.success_probability(s, r)?,
            eu_sender: g.expected_utility(s, r, Player::Sender)?,
            eu_receiver: g.expected_utility(s, r, Player::Receiver)?,
            cost_eu_sender: g.expected_cost_utility(s, r, Player::Sender)?,
            cost_eu_receiver: g.expected_cost_utility(s, r, Player::Receiver)?,
            kind,
            interpretation,
            beliefs,
            pure,
            profile,
        })
    }

    pub fn payoff(&self, p: Player) -> f64 {
        match p {
            Player::Sender => self.eu_sender,
            Player::Receiver => self.eu_receiver,
        }
    }

    /// Reading of message `m` under this equilibrium.
    pub fn reading(&self, m: MessageIx) -> Option<ContentIx> {
        self.pure.receiver.get(m).copied().flatten()
    }
}

fn pure_beliefs(g: &MeaningGame, sender: &[MessageIx], rule: OffPathRule) -> BeliefSystem {
    let nc = g.n_contents();
    let mut posterior = Vec::with_capacity(g.n_messages());
    let mut on_path = Vec::with_capacity(g.n_messages());
    for m in 0..g.n_messages() {
        let mass: f64 = (0..nc).filter(|&c| sender[c] == m).map(|c| g.prior().get(c)).sum();
        if mass > 0.0 {
            posterior.push(Some(
                (0..nc)
                    .map(|c| if sender[c] == m { g.prior().get(c) / mass } else { 0.0 })
                    .collect(),
            ));
            on_path.push(true);
        } else {
            posterior.push(off_path_belief(g, m, rule));
            on_path.push(false);
        }
    }
    BeliefSystem { posterior, on_path, off_path_rule: rule }
}

/// Number of pure profiles over grammatical choices.
pub fn pure_profile_count(g: &MeaningGame) -> u128 {
    let senders = (0..g.n_contents()).map(|c| g.messages_for(c).count().max(1) as u128);
    let receivers = (0..g.n_messages()).map(|m| g.contents_for(m).count().max(1) as u128);
    senders.chain(receivers).fold(1u128, |acc, k| acc.saturating_mul(k))
}

/// Every pure equilibrium, ordered lexicographically by (sender choices,
/// receiver choices).
///
/// Receiver strategies are enumerated outright; for each one only sender
/// strategies built from per-type best responses are visited, since no other
/// sender strategy can be part of an equilibrium.
pub fn enumerate_pure_equilibria(g: &MeaningGame, opts: &SolveOptions) -> Result<Vec<EquilibriumReport>> {
    let report = validate_game(g);
    if !report.is_valid() {
        return Err(GameError::Invalid(report));
    }
    let count = pure_profile_count(g);
    if count > opts.cap {
        return Err(GameError::TooLarge { count, cap: opts.cap });
    }
    let (nc, nm) = (g.n_contents(), g.n_messages());
    let readings: Vec<Vec<Option<ContentIx>>> = (0..nm)
        .map(|m| {
            let cs: Vec<_> = g.contents_for(m).map(Some).collect();
            if cs.is_empty() {
                vec![None]
            } else {
                cs
            }
        })
        .collect();

    let mut found = Vec::new();
    let mut r_idx = vec![0usize; nm];
    loop {
        let receiver: Vec<Option<ContentIx>> = (0..nm).map(|m| readings[m][r_idx[m]]).collect();
        let responses: Vec<Vec<MessageIx>> = (0..nc)
            .map(|c| {
                let values: Vec<(usize, f64)> = g
                    .messages_for(c)
                    .map(|m| {
                        let cr = receiver[m].expect("grammatical message has a reading");
                        (m, g.turn_value(c, m, cr, Player::Sender))
                    })
                    .collect();
                best_set(&values)
            })
            .collect();

        let mut s_idx = vec![0usize; nc];
        loop {
            let sender: Vec<MessageIx> = (0..nc).map(|c| responses[c][s_idx[c]]).collect();
            let beliefs = pure_beliefs(g, &sender, opts.off_path);
            let receiver_ok = (0..nm).all(|m| match (beliefs.get(m), receiver[m]) {
                (Some(belief), Some(cr)) => {
                    let values = receiver_values(g, belief, m);
                    let best = values.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
                    values.iter().any(|&(c, v)| c == cr && v >= best - TOL)
                }
                _ => true,
            });
            if receiver_ok {
                found.push((PureProfile { sender, receiver: receiver.clone() }, beliefs));
            }
            if !advance(&mut s_idx, |c| responses[c].len()) {
                break;
            }
        }
        if !advance(&mut r_idx, |m| readings[m].len()) {
            break;
        }
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    found.into_iter().map(|(pure, beliefs)| EquilibriumReport::build(g, pure, beliefs)).collect()
}

/// Odometer step; false once every digit has wrapped.
pub(crate) fn advance(idx: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < radix(i) {
            return true;
        }
        idx[i] = 0;
    }
    false
}

/// `b` Pareto-dominates `a`: weakly better for both players, strictly for one.
pub fn dominates(b: (f64, f64), a: (f64, f64)) -> bool {
    b.0 >= a.0 - TOL && b.1 >= a.1 - TOL && (b.0 > a.0 + TOL || b.1 > a.1 + TOL)
}

/// Equilibria that no other equilibrium in the list Pareto-dominates, in
/// input order.
pub fn pareto_filter(reports: &[EquilibriumReport]) -> Vec<EquilibriumReport> {
    let pay: Vec<(f64, f64)> = reports.iter().map(|r| (r.eu_sender, r.eu_receiver)).collect();
    pareto_indices(&pay).into_iter().map(|i| reports[i].clone()).collect()
}

pub fn pareto_indices(payoffs: &[(f64, f64)]) -> Vec<usize> {
    (0..payoffs.len())
        .filter(|&i| !payoffs.iter().any(|&other| dominates(other, payoffs[i])))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub reports: Vec<EquilibriumReport>,
    /// More than one Pareto-optimal equilibrium, and they disagree on how
    /// some content is sent or read.
    pub ambiguous: bool,
}

impl Prediction {
    pub fn unique(&self) -> Option<&EquilibriumReport> {
        (!self.ambiguous).then(|| self.reports.first()).flatten()
    }

    /// Distinct on-path interpretation maps among the predictions.
    pub fn interpretations(&self) -> Vec<&[PlayedTurn]> {
        let mut maps: Vec<&[PlayedTurn]> = Vec::new();
        for r in &self.reports {
            if !maps.contains(&r.interpretation.as_slice()) {
                maps.push(&r.interpretation);
            }
        }
        maps
    }
}

/// Pareto-optimal pure equilibria. Ties are all kept.
pub fn predict(g: &MeaningGame, opts: &SolveOptions) -> Result<Prediction> {
    let reports = pareto_filter(&enumerate_pure_equilibria(g, opts)?);
    let mut p = Prediction { reports, ambiguous: false };
    p.ambiguous = p.interpretations().len() > 1;
    Ok(p)
}

/// Per-message cost of a turn when it does not depend on the content; errors
/// otherwise.
fn message_costs(g: &MeaningGame, player: Player) -> Result<Vec<f64>> {
    (0..g.n_messages())
        .map(|m| {
            let costs: Vec<f64> = (0..g.n_contents()).map(|c| g.turn_cost(c, m, c, player)).collect();
            let first = costs[0];
            if costs.iter().all(|x| (x - first).abs() <= TOL) {
                Ok(first)
            } else {
                Err(GameError::NotApplicable(format!(
                    "cost of '{}' depends on the content",
                    g.messages()[m].id
                )))
            }
        })
        .collect()
}

fn strict_order(values: &[f64], descending: bool, what: &str) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let o = values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    if order.windows(2).any(|w| (values[w[0]] - values[w[1]]).abs() <= TOL) {
        return Err(GameError::NotApplicable(format!("{what} are not strictly ordered")));
    }
    Ok(order)
}

/// Pairs the i-th most probable content with the i-th cheapest message.
///
/// Requires a complete square game whose priors and per-message costs are
/// strictly ordered, with both players ranking messages alike.
pub fn assortative_solution(g: &MeaningGame) -> Result<Profile> {
    let n = g.n_contents();
    if n == 0 || n != g.n_messages() {
        return Err(GameError::NotApplicable("needs as many messages as contents".into()));
    }
    if !g.is_complete() {
        return Err(GameError::NotApplicable("needs every message to be able to mean every content".into()));
    }
    let by_prior = strict_order(g.prior().weights(), true, "priors")?;
    let by_cost = strict_order(&message_costs(g, Player::Sender)?, false, "message costs")?;
    if strict_order(&message_costs(g, Player::Receiver)?, false, "message costs")? != by_cost {
        return Err(GameError::NotApplicable("players rank the messages differently".into()));
    }
    let mut sender = vec![0; n];
    let mut receiver = vec![None; n];
    for (&c, &m) in by_prior.iter().zip(&by_cost) {
        sender[c] = m;
        receiver[m] = Some(c);
    }
    Ok(PureProfile { sender, receiver }.to_profile(g))
}
