//! Compound games: several meaning games played at once over one utterance.
//!
//! A compound is solved by flattening it into a single meaning game whose
//! contents are feasible joint content assignments and whose messages are
//! feasible joint message assignments. Player utilities are weighted sums of
//! the constituent utilities evaluated componentwise, so recovering part of a
//! joint content earns part of the credit.

use crate::equilibrium::{self, EquilibriumReport, PlayedTurn, Prediction, PureProfile, SolveOptions};
use crate::error::{invalid, GameError, Result};
use crate::game::{
    validate_game, Content, ContentIx, Credit, MeaningGame, Message, MessageIx, PairCost, Player, PlayerModel,
    Prior, UtilityModel,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    pub id: String,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstituentGame {
    pub slot: Slot,
    pub game: MeaningGame,
    pub weight: f64,
}

impl ConstituentGame {
    pub fn new(id: &str, description: &str, game: MeaningGame) -> Self {
        ConstituentGame { slot: Slot { id: id.into(), description: description.into() }, game, weight: 1.0 }
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

/// A set of joint assignments, one index per constituent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasible {
    /// Every combination.
    All,
    Only(Vec<Vec<usize>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompoundGame {
    pub constituents: Vec<ConstituentGame>,
    /// Joint content assignments that make sense together.
    pub joint_contents: Feasible,
    /// Joint message assignments that can be realized together.
    pub joint_messages: Feasible,
    /// Optional display names for joint contents, parallel to `joint_contents`.
    pub content_names: Option<Vec<String>>,
    pub message_names: Option<Vec<String>>,
}

impl CompoundGame {
    pub fn new(constituents: Vec<ConstituentGame>) -> Self {
        CompoundGame {
            constituents,
            joint_contents: Feasible::All,
            joint_messages: Feasible::All,
            content_names: None,
            message_names: None,
        }
    }

    fn expand(&self, feasible: &Feasible, size: impl Fn(&MeaningGame) -> usize, what: &str) -> Result<Vec<Vec<usize>>> {
        let sizes: Vec<usize> = self.constituents.iter().map(|k| size(&k.game)).collect();
        match feasible {
            Feasible::All => {
                let mut out = Vec::new();
                let mut idx = vec![0usize; sizes.len()];
                if sizes.contains(&0) {
                    return Ok(out);
                }
                loop {
                    out.push(idx.clone());
                    if !equilibrium::advance(&mut idx, |i| sizes[i]) {
                        break;
                    }
                }
                Ok(out)
            }
            Feasible::Only(list) => {
                if list.is_empty() {
                    return Err(invalid(format!("feasible joint {what} set is empty")));
                }
                for tuple in list {
                    if tuple.len() != sizes.len() || tuple.iter().zip(&sizes).any(|(&i, &n)| i >= n) {
                        return Err(invalid(format!("joint {what} {tuple:?} does not match the constituents")));
                    }
                }
                Ok(list.clone())
            }
        }
    }

    /// Upper bound on flattened size: joint contents times joint messages.
    pub fn flat_size(&self) -> Result<u128> {
        let count = |f: &Feasible, size: &dyn Fn(&MeaningGame) -> usize| -> u128 {
            match f {
                Feasible::All => self
                    .constituents
                    .iter()
                    .fold(1u128, |acc, k| acc.saturating_mul(size(&k.game) as u128)),
                Feasible::Only(list) => list.len() as u128,
            }
        };
        Ok(count(&self.joint_contents, &|g| g.n_contents()).saturating_mul(count(&self.joint_messages, &|g| g.n_messages())))
    }
}

/// A flattened compound with the joint assignment behind each index.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatGame {
    pub game: MeaningGame,
    pub joint_contents: Vec<Vec<ContentIx>>,
    pub joint_messages: Vec<Vec<MessageIx>>,
}

impl FlatGame {
    pub fn content_of(&self, joint: &[ContentIx]) -> Option<ContentIx> {
        self.joint_contents.iter().position(|j| j == joint)
    }

    pub fn message_of(&self, joint: &[MessageIx]) -> Option<MessageIx> {
        self.joint_messages.iter().position(|j| j == joint)
    }

    /// The composite profile in which every constituent plays its own pure
    /// profile independently. `None` when some induced joint choice is not
    /// feasible.
    pub fn product_profile(&self, parts: &[&PureProfile]) -> Option<PureProfile> {
        let sender = self
            .joint_contents
            .iter()
            .map(|j| {
                let msg: Vec<MessageIx> = j.iter().zip(parts).map(|(&c, p)| p.sender[c]).collect();
                self.message_of(&msg)
            })
            .collect::<Option<Vec<_>>>()?;
        let receiver = self
            .joint_messages
            .iter()
            .enumerate()
            .map(|(s, j)| {
                if self.game.contents_for(s).next().is_none() {
                    return Some(None);
                }
                let reading: Option<Vec<ContentIx>> = j.iter().zip(parts).map(|(&m, p)| p.receiver[m]).collect();
                reading.and_then(|r| self.content_of(&r)).map(Some)
            })
            .collect::<Option<Vec<_>>>()?;
        Some(PureProfile { sender, receiver })
    }
}

pub fn flatten(cg: &CompoundGame, cap: u128) -> Result<FlatGame> {
    if cg.constituents.is_empty() {
        return Err(invalid("compound has no constituents"));
    }
    for k in &cg.constituents {
        if !(k.weight.is_finite() && k.weight > 0.0) {
            return Err(invalid(format!("constituent '{}' needs a positive weight", k.slot.id)));
        }
        let report = validate_game(&k.game);
        if !report.is_valid() {
            return Err(GameError::Invalid(report));
        }
    }
    let size = cg.flat_size()?;
    if size > cap {
        return Err(GameError::TooLarge { count: size, cap });
    }
    let jc = cg.expand(&cg.joint_contents, |g| g.n_contents(), "content")?;
    let jm = cg.expand(&cg.joint_messages, |g| g.n_messages(), "message")?;
    let ks = &cg.constituents;

    let name = |parts: Vec<&str>| parts.join(" | ");
    let contents: Vec<Content> = jc
        .iter()
        .enumerate()
        .map(|(i, j)| {
            let id = name(j.iter().zip(ks).map(|(&c, k)| k.game.contents()[c].id.as_str()).collect());
            let label = cg
                .content_names
                .as_ref()
                .and_then(|n| n.get(i).cloned())
                .unwrap_or_else(|| format!("⟨{}⟩", id.replace(" | ", ", ")));
            Content { id, label }
        })
        .collect();
    let messages: Vec<Message> = jm
        .iter()
        .enumerate()
        .map(|(i, j)| {
            let id = name(j.iter().zip(ks).map(|(&m, k)| k.game.messages()[m].id.as_str()).collect());
            let label = cg
                .message_names
                .as_ref()
                .and_then(|n| n.get(i).cloned())
                .unwrap_or_else(|| format!("⟨{}⟩", id.replace(" | ", ", ")));
            Message { id, label }
        })
        .collect();

    let weights: Vec<f64> = jc
        .iter()
        .map(|j| j.iter().zip(ks).map(|(&c, k)| k.game.prior().get(c)).product())
        .collect();
    let (prior, _) = Prior::normalized(weights)
        .map_err(|_| invalid("every feasible joint content has zero prior probability"))?;

    let model = |player: Player| -> PlayerModel {
        let credit: Vec<Vec<f64>> = jc
            .iter()
            .map(|a| {
                jc.iter()
                    .map(|b| {
                        a.iter()
                            .zip(b)
                            .zip(ks)
                            .map(|((&ca, &cb), k)| k.weight * k.game.utility_model().player(player).credit.get(ca, cb))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let costs = jc
            .iter()
            .map(|a| {
                jm.iter()
                    .map(|s| {
                        let mut total = PairCost::new(0.0, 0.0);
                        for ((&c, &m), k) in a.iter().zip(s).zip(ks) {
                            let pc = k.game.utility_model().player(player).cost(c, m)?;
                            total.sender += k.weight * pc.sender;
                            total.receiver += k.weight * pc.receiver;
                        }
                        Some(total)
                    })
                    .collect()
            })
            .collect();
        PlayerModel { credit: simplify_credit(credit), costs }
    };
    let sender = model(Player::Sender);
    let receiver = model(Player::Receiver);
    let utility = if ks.iter().all(|k| k.game.utility_model().shared) {
        UtilityModel::shared(sender)
    } else {
        UtilityModel::split(sender, receiver)
    };
    let game = MeaningGame::from_parts(contents, messages, prior, utility);
    let report = validate_game(&game);
    if !report.is_valid() {
        return Err(GameError::Invalid(report));
    }
    Ok(FlatGame { game, joint_contents: jc, joint_messages: jm })
}

fn simplify_credit(table: Vec<Vec<f64>>) -> Credit {
    let n = table.len();
    let diag = table.first().and_then(|r| r.first()).copied().unwrap_or(0.0);
    let exact = (0..n).all(|i| (0..n).all(|j| table[i][j] == if i == j { diag } else { 0.0 }));
    if exact {
        Credit::Exact(diag)
    } else {
        Credit::Partial(table)
    }
}

/// How a compound prediction relates to one constituent's own prediction.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConstituentVerdict {
    pub slot: String,
    /// Every constituent message used on the global path is read the way
    /// some Pareto-optimal equilibrium of the constituent alone reads it.
    pub optimal: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompoundPrediction {
    pub flat: FlatGame,
    /// Every Pareto-optimal equilibrium of the flattened game.
    pub pareto: Vec<EquilibriumReport>,
    /// Per entry of `pareto`, one verdict per constituent.
    pub verdicts: Vec<Vec<ConstituentVerdict>>,
    /// Indices into `pareto` that survive refinement.
    pub retained: Vec<usize>,
    /// The retained equilibria.
    pub prediction: Prediction,
    pub constituent_predictions: Vec<Prediction>,
}

impl CompoundPrediction {
    /// Readings of composite message `s` across the retained equilibria,
    /// deduplicated in order.
    pub fn readings(&self, s: MessageIx) -> Vec<ContentIx> {
        let mut out = Vec::new();
        for r in &self.prediction.reports {
            if let Some(c) = r.reading(s) {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }

    pub fn retained_verdicts(&self) -> Option<&[ConstituentVerdict]> {
        self.retained.first().map(|&i| self.verdicts[i].as_slice())
    }
}

fn constituent_optimal(
    flat: &FlatGame,
    turns: &[PlayedTurn],
    k: usize,
    own: &Prediction,
) -> bool {
    own.reports.iter().any(|p| {
        turns.iter().all(|t| {
            let m = flat.joint_messages[t.sent][k];
            let c = flat.joint_contents[t.interpreted][k];
            p.reading(m) == Some(c)
        })
    })
}

/// Pareto-optimal equilibria of the flattened compound.
///
/// When several of them read some message differently, those agreeing with
/// the most constituents' own predictions are kept; the result is ambiguous
/// only if a tie remains.
pub fn predict_compound(cg: &CompoundGame, opts: &SolveOptions) -> Result<CompoundPrediction> {
    let flat = flatten(cg, opts.cap)?;
    let base = equilibrium::predict(&flat.game, opts)?;
    let constituent_predictions = cg
        .constituents
        .iter()
        .map(|k| equilibrium::predict(&k.game, opts))
        .collect::<Result<Vec<_>>>()?;
    let verdict = |r: &EquilibriumReport| -> Vec<ConstituentVerdict> {
        cg.constituents
            .iter()
            .enumerate()
            .map(|(k, c)| ConstituentVerdict {
                slot: c.slot.id.clone(),
                optimal: constituent_optimal(&flat, &r.interpretation, k, &constituent_predictions[k]),
            })
            .collect()
    };
    let verdicts: Vec<Vec<ConstituentVerdict>> = base.reports.iter().map(verdict).collect();
    let score = |v: &[ConstituentVerdict]| v.iter().filter(|x| x.optimal).count();
    let best = verdicts.iter().map(|v| score(v)).max().unwrap_or(0);
    let retained: Vec<usize> = (0..base.reports.len())
        .filter(|&i| !base.ambiguous || score(&verdicts[i]) == best)
        .collect();
    let mut prediction =
        Prediction { reports: retained.iter().map(|&i| base.reports[i].clone()).collect(), ambiguous: false };
    prediction.ambiguous = prediction.interpretations().len() > 1;
    Ok(CompoundPrediction {
        flat,
        pareto: base.reports,
        verdicts,
        retained,
        prediction,
        constituent_predictions,
    })
}
