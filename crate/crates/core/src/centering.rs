//! Discourse structures for reference resolution: forward-looking centers,
//! the preferred and backward-looking center, Rule 1, and the map from a
//! discourse state to the priors and costs of NP games.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::compound::{predict_compound, CompoundGame, ConstituentGame, ConstituentVerdict, Feasible};
use crate::equilibrium::{predict, SolveOptions};
use crate::error::{invalid, GameError, Result};
use crate::game::{GameBuilder, MeaningGame, PairCost, Prior};

pub type EntityId = String;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrammaticalFunction {
    Subject,
    DirectObject,
    IndirectObject,
    OtherComplement,
    Adjunct,
}

impl GrammaticalFunction {
    pub const ALL: [GrammaticalFunction; 5] = [
        GrammaticalFunction::Subject,
        GrammaticalFunction::DirectObject,
        GrammaticalFunction::IndirectObject,
        GrammaticalFunction::OtherComplement,
        GrammaticalFunction::Adjunct,
    ];

    /// 1 for subjects down to 5 for adjuncts.
    pub fn rank(self) -> u32 {
        self as u32 + 1
    }

    pub fn tag(self) -> &'static str {
        match self {
            GrammaticalFunction::Subject => "subject",
            GrammaticalFunction::DirectObject => "direct_object",
            GrammaticalFunction::IndirectObject => "indirect_object",
            GrammaticalFunction::OtherComplement => "other_complement",
            GrammaticalFunction::Adjunct => "adjunct",
        }
    }
}

impl fmt::Display for GrammaticalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Pronoun,
    DefiniteNp,
    ProperName,
}

impl FormKind {
    pub fn tag(self) -> &'static str {
        match self {
            FormKind::Pronoun => "pronoun",
            FormKind::DefiniteNp => "definite_np",
            FormKind::ProperName => "proper_name",
        }
    }
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Lightness cost of each expression form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormCosts {
    pub pronoun: f64,
    pub definite_np: f64,
    pub proper_name: f64,
}

impl Default for FormCosts {
    fn default() -> Self {
        FormCosts { pronoun: 0.0, definite_np: 0.5, proper_name: 0.5 }
    }
}

impl FormCosts {
    pub fn cost(&self, form: FormKind) -> f64 {
        match form {
            FormKind::Pronoun => self.pronoun,
            FormKind::DefiniteNp => self.definite_np,
            FormKind::ProperName => self.proper_name,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.pronoun, self.definite_np, self.proper_name];
        if all.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(invalid("form costs must be finite and nonnegative"));
        }
        if !(self.pronoun < self.definite_np && self.definite_np <= self.proper_name) {
            return Err(invalid("form costs must satisfy pronoun < definite_np <= proper_name"));
        }
        Ok(())
    }
}

/// Multiplicative salience boosts applied after a committed reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boosts {
    pub pronoun: f64,
    pub definite_np: f64,
    pub proper_name: f64,
}

impl Default for Boosts {
    fn default() -> Self {
        Boosts { pronoun: 1.5, definite_np: 1.1, proper_name: 1.0 }
    }
}

impl Boosts {
    pub const NONE: Boosts = Boosts { pronoun: 1.0, definite_np: 1.0, proper_name: 1.0 };

    pub fn get(&self, form: FormKind) -> f64 {
        match form {
            FormKind::Pronoun => self.pronoun,
            FormKind::DefiniteNp => self.definite_np,
            FormKind::ProperName => self.proper_name,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.pronoun, self.definite_np, self.proper_name].iter().all(|b| b.is_finite()) {
            return Err(invalid("boosts must be finite"));
        }
        if !(self.pronoun >= self.definite_np && self.definite_np >= self.proper_name && self.proper_name >= 1.0) {
            return Err(invalid("boosts must satisfy pronoun >= definite_np >= proper_name >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SalienceParams {
    /// Score every entity starts with.
    pub initial: f64,
    /// An entity realized at function rank k gains `decay^k`.
    pub decay: f64,
    /// Added to the preferred center of the previous utterance when priors
    /// are read off the state.
    pub cb_bonus: f64,
}

impl Default for SalienceParams {
    fn default() -> Self {
        SalienceParams { initial: 1.0, decay: 0.5, cb_bonus: 0.0 }
    }
}

impl SalienceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial.is_finite() && self.initial > 0.0) {
            return Err(invalid("initial salience must be positive"));
        }
        if !(self.decay.is_finite() && self.decay > 0.0 && self.decay < 1.0) {
            return Err(invalid("salience decay must lie in (0, 1)"));
        }
        if !(self.cb_bonus.is_finite() && self.cb_bonus >= 0.0) {
            return Err(invalid("cb_bonus must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscourseConfig {
    pub salience: SalienceParams,
    pub boosts: Boosts,
    pub costs: FormCosts,
    /// Credit for a correctly recovered referent or proposition.
    pub bonus: f64,
    /// Extra cost on proposition–sentence pairs that break the grammatical
    /// function order of the previous utterance.
    pub parallelism_bonus: f64,
}

impl Default for DiscourseConfig {
    fn default() -> Self {
        DiscourseConfig {
            salience: SalienceParams::default(),
            boosts: Boosts::default(),
            costs: FormCosts::default(),
            bonus: 1.0,
            parallelism_bonus: 0.0,
        }
    }
}

impl DiscourseConfig {
    pub fn validate(&self) -> Result<()> {
        self.salience.validate()?;
        self.boosts.validate()?;
        self.costs.validate()?;
        if !(self.bonus.is_finite() && self.bonus > 0.0) {
            return Err(invalid("bonus must be positive"));
        }
        if !(self.parallelism_bonus.is_finite() && self.parallelism_bonus >= 0.0) {
            return Err(invalid("parallelism_bonus must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entity {
    pub id: EntityId,
    #[serde(default)]
    pub features: BTreeMap<String, String>,
}

impl Entity {
    pub fn new(id: &str) -> Self {
        Entity { id: id.into(), features: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.features.insert(key.into(), value.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expression {
    pub surface: String,
    pub form: FormKind,
    #[serde(default)]
    pub features: BTreeMap<String, String>,
    /// Overrides the form's lightness cost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

impl Expression {
    pub fn new(surface: &str, form: FormKind) -> Self {
        Expression { surface: surface.into(), form, features: BTreeMap::new(), cost: None }
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.features.insert(key.into(), value.into());
        self
    }

    pub fn cost(&self, costs: &FormCosts) -> f64 {
        self.cost.unwrap_or_else(|| costs.cost(self.form))
    }
}

/// An expression can refer to an entity unless they disagree on a feature
/// both specify.
pub fn compatible(entity: &Entity, expr: &Expression) -> bool {
    expr.features.iter().all(|(k, v)| entity.features.get(k).is_none_or(|e| e == v))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Referent {
    Entity(EntityId),
    /// A reference still to be resolved, named by its slot id.
    Slot(String),
}

impl Referent {
    pub fn entity(&self) -> Option<&str> {
        match self {
            Referent::Entity(e) => Some(e),
            Referent::Slot(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Realization {
    pub referent: Referent,
    pub function: GrammaticalFunction,
    pub form: FormKind,
    pub surface: String,
}

impl Realization {
    pub fn new(entity: &str, function: GrammaticalFunction, form: FormKind, surface: &str) -> Self {
        Realization { referent: Referent::Entity(entity.into()), function, form, surface: surface.into() }
    }

    pub fn slot(slot: &str, function: GrammaticalFunction, form: FormKind, surface: &str) -> Self {
        Realization { referent: Referent::Slot(slot.into()), function, form, surface: surface.into() }
    }
}

/// Realizations in surface order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Utterance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub realizations: Vec<Realization>,
}

impl Utterance {
    pub fn new(realizations: Vec<Realization>) -> Self {
        Utterance { text: None, realizations }
    }

    /// Each resolved entity with the best rank it is realized at.
    fn ranked(&self) -> Vec<(EntityId, GrammaticalFunction)> {
        let mut order: Vec<(usize, &Realization)> = self.realizations.iter().enumerate().collect();
        order.sort_by_key(|(i, r)| (r.function.rank(), *i));
        let mut out: Vec<(EntityId, GrammaticalFunction)> = Vec::new();
        for (_, r) in order {
            if let Some(e) = r.referent.entity() {
                if !out.iter().any(|(x, _)| x == e) {
                    out.push((e.to_string(), r.function));
                }
            }
        }
        out
    }

    pub fn realizes(&self, entity: &str) -> bool {
        self.realizations.iter().any(|r| r.referent.entity() == Some(entity))
    }

    fn check_slots(&self) -> Result<()> {
        let mut seen: Vec<GrammaticalFunction> = Vec::new();
        for r in &self.realizations {
            if r.function != GrammaticalFunction::Adjunct && r.function != GrammaticalFunction::OtherComplement {
                if seen.contains(&r.function) {
                    return Err(GameError::Discourse(format!("two realizations fill the {} slot", r.function)));
                }
                seen.push(r.function);
            }
        }
        Ok(())
    }
}

/// Forward-looking centers: realized entities by function rank, then
/// surface order. Unresolved slots are left out.
pub fn cf(u: &Utterance) -> Vec<EntityId> {
    u.ranked().into_iter().map(|(e, _)| e).collect()
}

/// Preferred center.
pub fn cp(u: &Utterance) -> Option<EntityId> {
    cf(u).into_iter().next()
}

/// Backward-looking center of `cur` given the utterance before it.
pub fn cb(prev: &Utterance, cur: &Utterance) -> Option<EntityId> {
    cf(prev).into_iter().find(|e| cur.realizes(e))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule1Violation {
    /// Zero-based utterance index.
    pub utterance: usize,
    pub cb: EntityId,
    /// Centers of the previous utterance realized by a pronoun here.
    pub pronominalized: Vec<EntityId>,
}

/// Utterances where some center of the previous utterance is pronominalized
/// but the backward-looking center is not.
pub fn rule1_check(utterances: &[Utterance]) -> Result<Vec<Rule1Violation>> {
    for (i, u) in utterances.iter().enumerate() {
        if let Some(r) = u.realizations.iter().find(|r| r.referent.entity().is_none()) {
            return Err(invalid(format!("utterance {} has an unresolved reference '{}'", i + 1, r.surface)));
        }
    }
    let mut out = Vec::new();
    for i in 1..utterances.len() {
        let (prev, cur) = (&utterances[i - 1], &utterances[i]);
        let pron = |e: &str| {
            cur.realizations.iter().any(|r| r.form == FormKind::Pronoun && r.referent.entity() == Some(e))
        };
        let pronominalized: Vec<EntityId> = cf(prev).into_iter().filter(|e| pron(e)).collect();
        if pronominalized.is_empty() {
            continue;
        }
        let center = cb(prev, cur).expect("a pronominalized center is realized");
        if !pron(&center) {
            out.push(Rule1Violation { utterance: i, cb: center, pronominalized });
        }
    }
    Ok(out)
}

/// Utterance history and salience scores. Updates return new states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscourseState {
    history: Vec<Utterance>,
    salience: BTreeMap<EntityId, f64>,
    cf_cache: Vec<Vec<EntityId>>,
    params: SalienceParams,
}

impl DiscourseState {
    pub fn new<I, S>(entities: I, params: SalienceParams) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<EntityId>,
    {
        DiscourseState {
            history: Vec::new(),
            salience: entities.into_iter().map(|e| (e.into(), params.initial)).collect(),
            cf_cache: Vec::new(),
            params,
        }
    }

    pub fn with_salience(mut self, salience: BTreeMap<EntityId, f64>) -> Result<Self> {
        if salience.values().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(invalid("salience scores must be positive"));
        }
        self.salience = salience;
        Ok(self)
    }

    pub fn history(&self) -> &[Utterance] {
        &self.history
    }

    pub fn salience(&self) -> &BTreeMap<EntityId, f64> {
        &self.salience
    }

    pub fn cf_of(&self, i: usize) -> Option<&[EntityId]> {
        self.cf_cache.get(i).map(Vec::as_slice)
    }

    pub fn params(&self) -> &SalienceParams {
        &self.params
    }

    /// Backward-looking center of the i-th recorded utterance.
    pub fn cb(&self, i: usize) -> Option<EntityId> {
        if i == 0 || i >= self.history.len() {
            return None;
        }
        let cur = &self.history[i];
        self.cf_cache[i - 1].iter().find(|e| cur.realizes(e)).cloned()
    }

    /// Appends an utterance; each realized entity gains `decay^rank` at its
    /// best rank.
    pub fn record(&self, u: Utterance) -> Result<DiscourseState> {
        let mut next = self.clone();
        let ranked = u.ranked();
        for (e, f) in &ranked {
            let score = next
                .salience
                .get_mut(e)
                .ok_or_else(|| GameError::Discourse(format!("unknown entity '{e}'")))?;
            *score += self.params.decay.powi(f.rank() as i32);
        }
        next.cf_cache.push(ranked.into_iter().map(|(e, _)| e).collect());
        next.history.push(u);
        Ok(next)
    }

    fn effective(&self, e: &str) -> Option<f64> {
        let s = *self.salience.get(e)?;
        let premium = match self.cf_cache.last().and_then(|c| c.first()) {
            Some(top) if top == e => self.params.cb_bonus,
            _ => 0.0,
        };
        Some(s + premium)
    }
}

/// Salience scores of the candidates, normalized.
pub fn salience_priors(state: &DiscourseState, candidates: &[&str]) -> Result<Prior> {
    if candidates.is_empty() {
        return Err(invalid("no candidates"));
    }
    let scores = candidates
        .iter()
        .map(|c| state.effective(c).ok_or_else(|| invalid(format!("'{c}' has no salience score"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prior::normalized(scores)?.0)
}

/// A reference committed during resolution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CommittedReference {
    pub entity: EntityId,
    pub form: FormKind,
}

/// Raises the referent's salience by the boost for the form used.
pub fn accommodate(state: &DiscourseState, turn: &CommittedReference, boosts: &Boosts) -> DiscourseState {
    let mut next = state.clone();
    if let Some(s) = next.salience.get_mut(&turn.entity) {
        let b = boosts.get(turn.form);
        if b.is_finite() && b > 0.0 {
            *s *= b;
        }
    }
    next
}

/// The NP game for one referring slot: candidates are contents weighted by
/// salience, options are messages costed by lightness, and incompatible
/// pairs have no edge.
pub fn build_np_game(
    state: &DiscourseState,
    config: &DiscourseConfig,
    options: &[&Expression],
    candidates: &[&Entity],
) -> Result<MeaningGame> {
    if options.is_empty() {
        return Err(invalid("slot has no expression options"));
    }
    let ids: Vec<&str> = candidates.iter().map(|e| e.id.as_str()).collect();
    let prior = salience_priors(state, &ids)?;
    let mut b = GameBuilder::new().bonus(config.bonus);
    for (e, p) in candidates.iter().zip(prior.weights()) {
        b = b.content(&e.id, *p);
    }
    for x in options {
        b = b.message(&x.surface, x.cost(&config.costs));
    }
    let pairs: Vec<(&str, &str)> = candidates
        .iter()
        .flat_map(|e| options.iter().filter(|x| compatible(e, x)).map(|x| (e.id.as_str(), x.surface.as_str())))
        .collect();
    if pairs.is_empty() {
        return Err(invalid("no option is compatible with any candidate"));
    }
    if pairs.len() < candidates.len() * options.len() {
        for (e, x) in pairs {
            b = b.grammatical(e, x);
        }
    }
    b.build()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotSpec {
    pub id: String,
    /// Surfaces of the expressions that could fill the slot; all known
    /// expressions when empty.
    #[serde(default)]
    pub options: Vec<String>,
    /// Entities the slot may refer to; all entities when empty.
    #[serde(default)]
    pub candidates: Vec<EntityId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Proposition {
    pub id: String,
    pub prior: f64,
    /// Referent of every slot under this proposition.
    pub referents: BTreeMap<String, EntityId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sentence {
    pub id: String,
    #[serde(default)]
    pub cost: f64,
    /// Expression filling every slot in this sentence.
    pub realizes: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropositionCost {
    pub proposition: String,
    pub sentence: String,
    pub cost: f64,
}

/// Which sentences enter the sentence-level game.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternatives {
    /// Only the sentence actually uttered.
    #[default]
    Observed,
    All,
}

/// A sentence-level game played together with the NP games of its slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompoundSpec {
    pub id: String,
    /// Zero-based utterance index.
    pub utterance: usize,
    pub propositions: Vec<Proposition>,
    pub sentences: Vec<Sentence>,
    #[serde(default)]
    pub alternatives: Alternatives,
    #[serde(default = "one")]
    pub sentence_weight: f64,
    #[serde(default)]
    pub slot_weights: BTreeMap<String, f64>,
    /// Replaces the sentence cost for particular pairs.
    #[serde(default)]
    pub pair_costs: Vec<PropositionCost>,
    /// Pairs whose total cost exceeds this are dropped before the game.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neglect_above: Option<f64>,
}

fn one() -> f64 {
    1.0
}

/// Knowledge from outside the discourse that overrides sentence-level
/// priors and costs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Context {
    #[serde(default)]
    pub proposition_priors: BTreeMap<String, f64>,
    #[serde(default)]
    pub pair_costs: Vec<PropositionCost>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discourse {
    pub entities: Vec<Entity>,
    pub expressions: Vec<Expression>,
    pub utterances: Vec<Utterance>,
    #[serde(default)]
    pub slots: Vec<SlotSpec>,
    #[serde(default)]
    pub compounds: Vec<CompoundSpec>,
    #[serde(default)]
    pub config: DiscourseConfig,
    #[serde(default)]
    pub context: Context,
}

impl Discourse {
    pub fn entity(&self, id: &str) -> Result<&Entity> {
        self.entities
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| GameError::Discourse(format!("unknown entity '{id}'")))
    }

    pub fn expression(&self, surface: &str) -> Result<&Expression> {
        self.expressions
            .iter()
            .find(|x| x.surface == surface)
            .ok_or_else(|| GameError::Discourse(format!("unknown expression '{surface}'")))
    }

    /// Utterance index, position and realization of a slot.
    pub fn slot_site(&self, slot: &str) -> Result<(usize, &Realization)> {
        for (i, u) in self.utterances.iter().enumerate() {
            if let Some(r) = u.realizations.iter().find(|r| r.referent == Referent::Slot(slot.into())) {
                return Ok((i, r));
            }
        }
        Err(GameError::Discourse(format!("slot '{slot}' does not occur in any utterance")))
    }

    fn slot_spec(&self, slot: &str) -> SlotSpec {
        self.slots
            .iter()
            .find(|s| s.id == slot)
            .cloned()
            .unwrap_or(SlotSpec { id: slot.into(), options: vec![], candidates: vec![] })
    }

    /// Options and candidates of a slot, defaults filled in.
    pub fn slot_domain(&self, slot: &str) -> Result<(Vec<&Expression>, Vec<&Entity>)> {
        let spec = self.slot_spec(slot);
        let (_, site) = self.slot_site(slot)?;
        let options: Vec<&Expression> = if spec.options.is_empty() {
            self.expressions.iter().collect()
        } else {
            spec.options.iter().map(|s| self.expression(s)).collect::<Result<_>>()?
        };
        if !options.iter().any(|x| x.surface == site.surface) {
            return Err(GameError::Discourse(format!(
                "slot '{slot}': observed expression '{}' is not among its options",
                site.surface
            )));
        }
        let candidates: Vec<&Entity> = if spec.candidates.is_empty() {
            self.entities.iter().collect()
        } else {
            spec.candidates.iter().map(|e| self.entity(e)).collect::<Result<_>>()?
        };
        Ok((options, candidates))
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let dup = |ids: Vec<&str>, what: &str| -> Result<()> {
            let mut sorted = ids.clone();
            sorted.sort_unstable();
            match sorted.windows(2).find(|w| w[0] == w[1]) {
                Some(w) => Err(GameError::Discourse(format!("duplicate {what} '{}'", w[0]))),
                None => Ok(()),
            }
        };
        if self.entities.is_empty() {
            return Err(GameError::Discourse("no entities".into()));
        }
        dup(self.entities.iter().map(|e| e.id.as_str()).collect(), "entity")?;
        dup(self.expressions.iter().map(|x| x.surface.as_str()).collect(), "expression")?;
        dup(self.slots.iter().map(|s| s.id.as_str()).collect(), "slot spec")?;
        dup(self.compounds.iter().map(|c| c.id.as_str()).collect(), "compound")?;
        for x in &self.expressions {
            if let Some(c) = x.cost {
                if !(c.is_finite() && c >= 0.0) {
                    return Err(GameError::Discourse(format!("expression '{}' has a negative cost", x.surface)));
                }
            }
        }
        let mut slot_ids = Vec::new();
        for u in &self.utterances {
            u.check_slots()?;
            for r in &u.realizations {
                match &r.referent {
                    Referent::Entity(e) => {
                        self.entity(e)?;
                    }
                    Referent::Slot(s) => slot_ids.push(s.as_str()),
                }
                if let Ok(x) = self.expression(&r.surface) {
                    if x.form != r.form {
                        return Err(GameError::Discourse(format!(
                            "'{}' is listed as a {} but used as a {}",
                            r.surface, x.form, r.form
                        )));
                    }
                }
            }
        }
        dup(slot_ids.clone(), "slot")?;
        for s in &self.slots {
            if !slot_ids.contains(&s.id.as_str()) {
                return Err(GameError::Discourse(format!("slot spec '{}' matches no utterance slot", s.id)));
            }
        }
        let mut claimed: Vec<&str> = Vec::new();
        for c in &self.compounds {
            if c.utterance >= self.utterances.len() {
                return Err(GameError::Discourse(format!("compound '{}' points past the last utterance", c.id)));
            }
            for s in compound_slots(c)? {
                if claimed.contains(&s) {
                    return Err(GameError::Discourse(format!("slot '{s}' belongs to two compounds")));
                }
                let (i, _) = self.slot_site(s)?;
                if i != c.utterance {
                    return Err(GameError::Discourse(format!(
                        "compound '{}': slot '{s}' is not in utterance {}",
                        c.id,
                        c.utterance + 1
                    )));
                }
                claimed.push(s);
            }
        }
        Ok(())
    }
}

/// Slot ids of a compound, checked to be the same across its propositions
/// and sentences.
fn compound_slots(c: &CompoundSpec) -> Result<Vec<&str>> {
    let first = c
        .propositions
        .first()
        .ok_or_else(|| GameError::Discourse(format!("compound '{}' has no propositions", c.id)))?;
    let slots: Vec<&str> = first.referents.keys().map(String::as_str).collect();
    let same = |keys: Vec<&str>| keys == slots;
    if !c.propositions.iter().all(|p| same(p.referents.keys().map(String::as_str).collect()))
        || !c.sentences.iter().all(|s| same(s.realizes.keys().map(String::as_str).collect()))
    {
        return Err(GameError::Discourse(format!(
            "compound '{}': every proposition and sentence must cover the same slots",
            c.id
        )));
    }
    if c.sentences.is_empty() {
        return Err(GameError::Discourse(format!("compound '{}' has no sentences", c.id)));
    }
    Ok(slots)
}

/// Whether assigning `referents` to the slots keeps the relative order of
/// grammatical functions the entities had in the previous utterance.
pub fn is_parallel(
    prev: &Utterance,
    slot_functions: &BTreeMap<String, GrammaticalFunction>,
    referents: &BTreeMap<String, EntityId>,
) -> bool {
    let before: BTreeMap<EntityId, u32> = prev.ranked().into_iter().map(|(e, f)| (e, f.rank())).collect();
    let placed: Vec<(u32, u32)> = referents
        .iter()
        .filter_map(|(slot, e)| Some((before.get(e).copied()?, slot_functions.get(slot)?.rank())))
        .collect();
    placed.iter().all(|a| {
        placed
            .iter()
            .all(|b| !((a.0 < b.0 && a.1 > b.1) || (a.0 > b.0 && a.1 < b.1)))
    })
}

/// A compound spec turned into a game, with the composite message that was
/// actually uttered.
#[derive(Clone, Debug, PartialEq)]
pub struct BuiltCompound {
    pub game: CompoundGame,
    pub slots: Vec<String>,
    pub observed: Vec<usize>,
    pub parallel: Vec<(String, bool)>,
}

pub fn build_compound(d: &Discourse, state: &DiscourseState, spec: &CompoundSpec) -> Result<BuiltCompound> {
    let slots: Vec<String> = compound_slots(spec)?.into_iter().map(String::from).collect();
    let u = &d.utterances[spec.utterance];
    let functions: BTreeMap<String, GrammaticalFunction> = slots
        .iter()
        .map(|s| Ok((s.clone(), d.slot_site(s)?.1.function)))
        .collect::<Result<_>>()?;
    let observed_sentence = spec
        .sentences
        .iter()
        .position(|s| {
            s.realizes.iter().all(|(slot, surface)| {
                u.realizations.iter().any(|r| r.referent == Referent::Slot(slot.clone()) && &r.surface == surface)
            })
        })
        .ok_or_else(|| {
            GameError::Discourse(format!("compound '{}': no sentence matches the observed utterance", spec.id))
        })?;
    let sentences: Vec<&Sentence> = match spec.alternatives {
        Alternatives::Observed => vec![&spec.sentences[observed_sentence]],
        Alternatives::All => spec.sentences.iter().collect(),
    };
    let prev = spec.utterance.checked_sub(1).map(|i| &state.history()[i]);
    let parallel: Vec<(String, bool)> = spec
        .propositions
        .iter()
        .map(|p| (p.id.clone(), prev.is_none_or(|prev| is_parallel(prev, &functions, &p.referents))))
        .collect();

    let override_cost = |p: &str, s: &str| -> Option<f64> {
        d.context
            .pair_costs
            .iter()
            .chain(&spec.pair_costs)
            .rev()
            .find(|x| x.proposition == p && x.sentence == s)
            .map(|x| x.cost)
    };
    let mut b = GameBuilder::new().bonus(d.config.bonus);
    for p in &spec.propositions {
        let prior = d.context.proposition_priors.get(&p.id).copied().unwrap_or(p.prior);
        b = b.content(&p.id, prior);
    }
    for s in &sentences {
        b = b.message(&s.id, s.cost);
    }
    let mut pairs = Vec::new();
    for (p, (_, par)) in spec.propositions.iter().zip(&parallel) {
        for s in &sentences {
            let mut cost = override_cost(&p.id, &s.id).unwrap_or(s.cost);
            if !par {
                cost += d.config.parallelism_bonus;
            }
            if spec.neglect_above.is_none_or(|t| cost <= t) {
                pairs.push((p.id.clone(), s.id.clone(), cost));
            }
        }
    }
    for (p, s, _) in &pairs {
        b = b.grammatical(p, s);
    }
    for (p, s, cost) in &pairs {
        b = b.pair_cost(p, s, PairCost::split(*cost));
    }
    let raw = b.assemble()?;
    let (prior, _) = Prior::normalized(raw.prior().weights().to_vec())?;
    let sentence_game = raw.with_prior(prior).validated()?;

    let mut constituents =
        vec![ConstituentGame::new(&spec.id, "sentence", sentence_game.clone()).weighted(spec.sentence_weight)];
    let mut np_games = Vec::new();
    for s in &slots {
        let (options, candidates) = d.slot_domain(s)?;
        let g = build_np_game(state, &d.config, &options, &candidates)?;
        let w = spec.slot_weights.get(s).copied().unwrap_or(1.0);
        constituents.push(ConstituentGame::new(s, &format!("{} NP", functions[s]), g.clone()).weighted(w));
        np_games.push(g);
    }
    let lookup = |g: &MeaningGame, id: &str, content: bool| -> Result<usize> {
        let ix = if content { g.content_index(id) } else { g.message_index(id) };
        ix.ok_or_else(|| GameError::Discourse(format!("compound '{}': '{id}' is not available in its slot", spec.id)))
    };
    let joint_contents = spec
        .propositions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut j = vec![i];
            for (s, g) in slots.iter().zip(&np_games) {
                j.push(lookup(g, &p.referents[s], true)?);
            }
            Ok(j)
        })
        .collect::<Result<Vec<_>>>()?;
    let joint_messages = sentences
        .iter()
        .enumerate()
        .map(|(i, sent)| {
            let mut j = vec![i];
            for (s, g) in slots.iter().zip(&np_games) {
                j.push(lookup(g, &sent.realizes[s], false)?);
            }
            Ok(j)
        })
        .collect::<Result<Vec<_>>>()?;
    let observed_ix = sentences.iter().position(|s| s.id == spec.sentences[observed_sentence].id).unwrap();
    let observed = joint_messages[observed_ix].clone();
    let mut game = CompoundGame::new(constituents);
    game.content_names = Some(spec.propositions.iter().map(|p| p.id.clone()).collect());
    game.message_names = Some(sentences.iter().map(|s| s.id.clone()).collect());
    game.joint_contents = Feasible::Only(joint_contents);
    game.joint_messages = Feasible::Only(joint_messages);
    Ok(BuiltCompound { game, slots, observed, parallel })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "referent")]
pub enum SlotOutcome {
    Resolved(EntityId),
    /// Predicted equilibria disagree; the candidate readings.
    Ambiguous(Vec<EntityId>),
}

impl SlotOutcome {
    pub fn entity(&self) -> Option<&str> {
        match self {
            SlotOutcome::Resolved(e) => Some(e),
            SlotOutcome::Ambiguous(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlotResolution {
    pub slot: String,
    pub utterance: usize,
    pub surface: String,
    pub form: FormKind,
    pub outcome: SlotOutcome,
    /// Prior over candidates in the slot's own NP game.
    pub prior: Vec<(EntityId, f64)>,
    /// Compound the slot was resolved through, if any.
    pub compound: Option<String>,
}

/// One Pareto-optimal equilibrium of a compound, seen from the observed
/// sentence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompoundCandidate {
    /// Proposition the observed sentence is read as.
    pub reading: Option<String>,
    pub eu_sender: f64,
    pub eu_receiver: f64,
    pub verdicts: Vec<ConstituentVerdict>,
    pub retained: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompoundResolution {
    pub id: String,
    pub utterance: usize,
    pub observed: String,
    /// Propositions the observed sentence is read as after refinement.
    pub readings: Vec<String>,
    pub candidates: Vec<CompoundCandidate>,
    pub parallel: Vec<(String, bool)>,
    pub parallelism_bonus: f64,
}

impl CompoundResolution {
    /// Constituent verdicts of the first retained equilibrium.
    pub fn verdicts(&self) -> &[ConstituentVerdict] {
        self.candidates.iter().find(|c| c.retained).map_or(&[], |c| c.verdicts.as_slice())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttributedViolation {
    #[serde(flatten)]
    pub violation: Rule1Violation,
    pub attribution: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Rule1Verdict {
    Checked { violations: Vec<AttributedViolation> },
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolution {
    pub utterances: Vec<Utterance>,
    pub slots: Vec<SlotResolution>,
    pub compounds: Vec<CompoundResolution>,
    pub rule1: Rule1Verdict,
    /// Salience after each utterance and its accommodation.
    pub salience: Vec<BTreeMap<EntityId, f64>>,
}

impl Resolution {
    pub fn is_ambiguous(&self) -> bool {
        self.slots.iter().any(|s| s.outcome.entity().is_none())
    }

    pub fn referent(&self, slot: &str) -> Option<&str> {
        self.slots.iter().find(|s| s.slot == slot).and_then(|s| s.outcome.entity())
    }
}

fn np_prior(g: &MeaningGame) -> Vec<(EntityId, f64)> {
    g.contents().iter().map(|c| c.id.clone()).zip(g.prior().weights().iter().copied()).collect()
}

/// Resolves every slot, utterance by utterance, then checks Rule 1 if
/// nothing is left ambiguous.
pub fn resolve(d: &Discourse, opts: &SolveOptions) -> Result<Resolution> {
    d.validate()?;
    let mut state = DiscourseState::new(d.entities.iter().map(|e| e.id.clone()), d.config.salience);
    let mut out = Resolution {
        utterances: Vec::new(),
        slots: Vec::new(),
        compounds: Vec::new(),
        rule1: Rule1Verdict::Skipped { reason: String::new() },
        salience: Vec::new(),
    };
    for (i, u) in d.utterances.iter().enumerate() {
        let mut found: Vec<SlotResolution> = Vec::new();
        for spec in d.compounds.iter().filter(|c| c.utterance == i) {
            let built = build_compound(d, &state, spec)?;
            let pred = predict_compound(&built.game, opts)?;
            let s = pred
                .flat
                .message_of(&built.observed)
                .ok_or_else(|| GameError::Discourse(format!("compound '{}': observed sentence is infeasible", spec.id)))?;
            let readings = pred.readings(s);
            for (k, slot) in built.slots.iter().enumerate() {
                let (_, site) = d.slot_site(slot)?;
                let np = &built.game.constituents[k + 1].game;
                let mut ents: Vec<EntityId> = Vec::new();
                for &c in &readings {
                    let e = np.contents()[pred.flat.joint_contents[c][k + 1]].id.clone();
                    if !ents.contains(&e) {
                        ents.push(e);
                    }
                }
                let outcome = if ents.len() == 1 { SlotOutcome::Resolved(ents.remove(0)) } else { SlotOutcome::Ambiguous(ents) };
                found.push(SlotResolution {
                    slot: slot.clone(),
                    utterance: i,
                    surface: site.surface.clone(),
                    form: site.form,
                    outcome,
                    prior: np_prior(np),
                    compound: Some(spec.id.clone()),
                });
            }
            let proposition = |c: usize| spec.propositions[pred.flat.joint_contents[c][0]].id.clone();
            let candidates = pred
                .pareto
                .iter()
                .enumerate()
                .map(|(i, r)| CompoundCandidate {
                    reading: r.reading(s).map(proposition),
                    eu_sender: r.eu_sender,
                    eu_receiver: r.eu_receiver,
                    verdicts: pred.verdicts[i].clone(),
                    retained: pred.retained.contains(&i),
                })
                .collect();
            out.compounds.push(CompoundResolution {
                id: spec.id.clone(),
                utterance: i,
                observed: pred.flat.game.messages()[s].label.clone(),
                readings: readings.iter().map(|&c| proposition(c)).collect(),
                candidates,
                parallel: built.parallel,
                parallelism_bonus: d.config.parallelism_bonus,
            });
        }
        for r in &u.realizations {
            let Referent::Slot(slot) = &r.referent else { continue };
            if found.iter().any(|f| &f.slot == slot) {
                continue;
            }
            let (options, candidates) = d.slot_domain(slot)?;
            let g = build_np_game(&state, &d.config, &options, &candidates)?;
            let p = predict(&g, opts)?;
            let m = g.message_index(&r.surface).expect("observed surface is an option");
            let mut ents: Vec<EntityId> = Vec::new();
            for rep in &p.reports {
                if let Some(c) = rep.reading(m) {
                    let e = g.contents()[c].id.clone();
                    if !ents.contains(&e) {
                        ents.push(e);
                    }
                }
            }
            let outcome = if ents.len() == 1 { SlotOutcome::Resolved(ents.remove(0)) } else { SlotOutcome::Ambiguous(ents) };
            found.push(SlotResolution {
                slot: slot.clone(),
                utterance: i,
                surface: r.surface.clone(),
                form: r.form,
                outcome,
                prior: np_prior(&g),
                compound: None,
            });
        }
        let mut resolved = u.clone();
        for r in &mut resolved.realizations {
            if let Referent::Slot(slot) = &r.referent {
                if let Some(e) = found.iter().find(|f| &f.slot == slot).and_then(|f| f.outcome.entity()) {
                    r.referent = Referent::Entity(e.to_string());
                }
            }
        }
        state = state.record(resolved.clone())?;
        for f in &found {
            if let Some(e) = f.outcome.entity() {
                state = accommodate(&state, &CommittedReference { entity: e.into(), form: f.form }, &d.config.boosts);
            }
        }
        // Slots are reported in surface order.
        found.sort_by_key(|f| u.realizations.iter().position(|r| r.referent == Referent::Slot(f.slot.clone())));
        out.slots.extend(found);
        out.utterances.push(resolved);
        out.salience.push(state.salience().clone());
    }
    out.rule1 = if out.is_ambiguous() {
        Rule1Verdict::Skipped { reason: "some references are ambiguous".into() }
    } else {
        let violations = rule1_check(&out.utterances)?
            .into_iter()
            .map(|v| {
                let attribution = out
                    .compounds
                    .iter()
                    .find(|c| {
                        c.utterance == v.utterance
                            && c.parallelism_bonus > 0.0
                            && c.verdicts().iter().skip(1).any(|x| !x.optimal)
                    })
                    .map(|c| format!("parallelism preference in compound '{}'", c.id));
                AttributedViolation { violation: v, attribution }
            })
            .collect();
        Rule1Verdict::Checked { violations }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use GrammaticalFunction::*;

    fn u1() -> Utterance {
        Utterance::new(vec![
            Realization::new("Fred", Subject, FormKind::ProperName, "Fred"),
            Realization::new("Max", DirectObject, FormKind::ProperName, "Max"),
        ])
    }

    fn he_man() -> Discourse {
        Discourse {
            entities: vec![Entity::new("Fred").with("gender", "male"), Entity::new("Max").with("gender", "male")],
            expressions: vec![
                Expression::new("he", FormKind::Pronoun).with("gender", "male"),
                Expression::new("him", FormKind::Pronoun).with("gender", "male"),
                Expression::new("the man", FormKind::DefiniteNp).with("gender", "male"),
            ],
            utterances: vec![
                u1(),
                Utterance::new(vec![
                    Realization::slot("u2.subj", Subject, FormKind::Pronoun, "he"),
                    Realization::slot("u2.obj", OtherComplement, FormKind::DefiniteNp, "the man"),
                ]),
            ],
            slots: vec![
                SlotSpec { id: "u2.subj".into(), options: vec!["he".into(), "the man".into()], candidates: vec![] },
                SlotSpec { id: "u2.obj".into(), options: vec!["him".into(), "the man".into()], candidates: vec![] },
            ],
            compounds: vec![],
            config: DiscourseConfig::default(),
            context: Context::default(),
        }
    }

    #[test]
    fn ranks_follow_the_hierarchy() {
        let ranks: Vec<u32> = GrammaticalFunction::ALL.iter().map(|f| f.rank()).collect();
        assert_eq!(ranks, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn cf_orders_by_rank_then_surface() {
        assert_eq!(cf(&u1()), vec!["Fred", "Max"]);
        let u = Utterance::new(vec![
            Realization::new("Max", DirectObject, FormKind::ProperName, "Max"),
            Realization::new("Bob", Adjunct, FormKind::ProperName, "Bob"),
            Realization::new("Fred", Subject, FormKind::ProperName, "Fred"),
        ]);
        assert_eq!(cf(&u), vec!["Fred", "Max", "Bob"]);
        assert_eq!(cp(&u).as_deref(), Some("Fred"));
        assert_eq!(cp(&Utterance::default()), None);
        let twice = Utterance::new(vec![
            Realization::new("Max", Adjunct, FormKind::ProperName, "Max"),
            Realization::new("Max", Subject, FormKind::Pronoun, "he"),
        ]);
        assert_eq!(cf(&twice), vec!["Max"]);
    }

    #[test]
    fn cb_is_the_best_carried_over_center() {
        let only_max = Utterance::new(vec![Realization::new("Max", Subject, FormKind::Pronoun, "he")]);
        assert_eq!(cb(&u1(), &only_max).as_deref(), Some("Max"));
        let nobody = Utterance::new(vec![Realization::new("Bob", Subject, FormKind::ProperName, "Bob")]);
        assert_eq!(cb(&u1(), &nobody), None);
    }

    #[test]
    fn rule1_examples() {
        let good = Utterance::new(vec![
            Realization::new("Fred", Subject, FormKind::Pronoun, "he"),
            Realization::new("Max", OtherComplement, FormKind::DefiniteNp, "the man"),
        ]);
        assert!(rule1_check(&[u1(), good]).unwrap().is_empty());
        let bad = Utterance::new(vec![
            Realization::new("Max", Subject, FormKind::Pronoun, "he"),
            Realization::new("Fred", OtherComplement, FormKind::DefiniteNp, "the man"),
        ]);
        let v = rule1_check(&[u1(), bad]).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].utterance, 1);
        assert_eq!(v[0].cb, "Fred");
        assert!(rule1_check(&[u1(), u1()]).unwrap().is_empty());
        let open = Utterance::new(vec![Realization::slot("s", Subject, FormKind::Pronoun, "he")]);
        assert!(matches!(rule1_check(&[u1(), open]), Err(GameError::InvalidArgument(_))));
    }

    #[test]
    fn salience_priors_normalize() {
        let state = DiscourseState::new(["a", "b", "c"], SalienceParams::default())
            .with_salience([("a".into(), 2.0), ("b".into(), 1.0), ("c".into(), 1.0)].into())
            .unwrap();
        assert_eq!(salience_priors(&state, &["a", "b", "c"]).unwrap().weights(), &[0.5, 0.25, 0.25]);
        assert_eq!(salience_priors(&state, &["b"]).unwrap().weights(), &[1.0]);
        assert!(salience_priors(&state, &[]).is_err());
        let after = DiscourseState::new(["Fred", "Max"], SalienceParams::default()).record(u1()).unwrap();
        let p = salience_priors(&after, &["Fred", "Max"]).unwrap();
        assert!(p.get(0) > p.get(1));
    }

    #[test]
    fn accommodation_scales_and_can_flip() {
        let state = DiscourseState::new(["Fred", "Max"], SalienceParams::default()).record(u1()).unwrap();
        let he = CommittedReference { entity: "Fred".into(), form: FormKind::Pronoun };
        let next = accommodate(&state, &he, &Boosts::default());
        assert_eq!(next.salience()["Fred"], state.salience()["Fred"] * 1.5);
        assert_eq!(accommodate(&state, &he, &Boosts::NONE), state);
        let mut s = state.clone();
        let max = CommittedReference { entity: "Max".into(), form: FormKind::Pronoun };
        s = accommodate(&s, &max, &Boosts::default());
        let p = salience_priors(&s, &["Fred", "Max"]).unwrap();
        assert!(p.get(1) > p.get(0));
    }

    #[test]
    fn np_game_matches_the_two_by_two_game() {
        let d = he_man();
        let state = DiscourseState::new(["Fred", "Max"], d.config.salience).record(u1()).unwrap();
        let (options, candidates) = d.slot_domain("u2.subj").unwrap();
        let g = build_np_game(&state, &d.config, &options, &candidates).unwrap();
        assert!(g.is_complete());
        assert!(g.prior().get(0) > g.prior().get(1));
        assert_eq!(g.n_messages(), 2);
    }

    #[test]
    fn incompatible_features_remove_edges() {
        let d = he_man();
        let state = DiscourseState::new(["Fred", "Sue"], d.config.salience);
        let he = Expression::new("he", FormKind::Pronoun).with("gender", "male");
        let np = Expression::new("the person", FormKind::DefiniteNp);
        let fred = Entity::new("Fred").with("gender", "male");
        let sue = Entity::new("Sue").with("gender", "female");
        let g = build_np_game(&state, &d.config, &[&he, &np], &[&fred, &sue]).unwrap();
        assert!(!g.is_edge(1, 0));
        assert!(g.is_edge(1, 1));
        assert!(build_np_game(&state, &d.config, &[&he], &[&fred, &sue]).is_err());
    }

    #[test]
    fn three_candidates_two_expressions() {
        let d = he_man();
        let state = DiscourseState::new(["a", "b", "c"], d.config.salience);
        let he = Expression::new("he", FormKind::Pronoun);
        let np = Expression::new("the man", FormKind::DefiniteNp);
        let ents = [Entity::new("a"), Entity::new("b"), Entity::new("c")];
        let g = build_np_game(&state, &d.config, &[&he, &np], &ents.iter().collect::<Vec<_>>()).unwrap();
        assert_eq!((g.n_contents(), g.n_messages()), (3, 2));
        assert!((g.prior().weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn he_man_resolves_without_violations() {
        let r = resolve(&he_man(), &SolveOptions::default()).unwrap();
        assert_eq!(r.referent("u2.subj"), Some("Fred"));
        assert_eq!(r.referent("u2.obj"), Some("Max"));
        assert_eq!(r.rule1, Rule1Verdict::Checked { violations: vec![] });
    }

    #[test]
    fn symmetric_slot_is_ambiguous() {
        let mut d = he_man();
        d.utterances.remove(0);
        d.expressions[2].cost = Some(0.0);
        d.config.costs = FormCosts { pronoun: 0.0, definite_np: 0.5, proper_name: 0.5 };
        let r = resolve(&d, &SolveOptions::default()).unwrap();
        assert!(r.is_ambiguous());
        assert!(matches!(r.rule1, Rule1Verdict::Skipped { .. }));
        match &r.slots[0].outcome {
            SlotOutcome::Ambiguous(alts) => assert_eq!(alts.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_candidate_slot_takes_it() {
        let mut d = he_man();
        d.slots[0].candidates = vec!["Max".into()];
        let r = resolve(&d, &SolveOptions::default()).unwrap();
        assert_eq!(r.referent("u2.subj"), Some("Max"));
    }

    #[test]
    fn parallelism_follows_function_order() {
        let f: BTreeMap<String, GrammaticalFunction> =
            [("s".to_string(), Subject), ("o".to_string(), OtherComplement)].into();
        let same: BTreeMap<String, EntityId> = [("s".to_string(), "Fred".into()), ("o".to_string(), "Max".into())].into();
        let swapped: BTreeMap<String, EntityId> =
            [("s".to_string(), "Max".into()), ("o".to_string(), "Fred".into())].into();
        assert!(is_parallel(&u1(), &f, &same));
        assert!(!is_parallel(&u1(), &f, &swapped));
    }

    fn man_him(parallelism: f64) -> Discourse {
        let mut d = he_man();
        d.utterances[1] = Utterance::new(vec![
            Realization::slot("u2.subj", Subject, FormKind::DefiniteNp, "the man"),
            Realization::slot("u2.obj", OtherComplement, FormKind::Pronoun, "him"),
        ]);
        let map = |pairs: [(&str, &str); 2]| -> BTreeMap<String, String> {
            pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
        };
        d.compounds = vec![CompoundSpec {
            id: "u2".into(),
            utterance: 1,
            propositions: vec![
                Proposition { id: "angry(Fred,Max)".into(), prior: 0.5, referents: map([("u2.subj", "Fred"), ("u2.obj", "Max")]) },
                Proposition { id: "angry(Max,Fred)".into(), prior: 0.5, referents: map([("u2.subj", "Max"), ("u2.obj", "Fred")]) },
            ],
            sentences: vec![
                Sentence { id: "The man was angry with him".into(), cost: 0.0, realizes: map([("u2.subj", "the man"), ("u2.obj", "him")]) },
                Sentence { id: "He was angry with the man".into(), cost: 0.0, realizes: map([("u2.subj", "he"), ("u2.obj", "the man")]) },
            ],
            alternatives: Alternatives::Observed,
            sentence_weight: 1.0,
            slot_weights: BTreeMap::new(),
            pair_costs: vec![],
            neglect_above: None,
        }];
        d.config.parallelism_bonus = parallelism;
        d
    }

    #[test]
    fn parallelism_overrides_the_np_games() {
        let r = resolve(&man_him(0.4), &SolveOptions::default()).unwrap();
        assert_eq!(r.referent("u2.subj"), Some("Fred"));
        assert_eq!(r.referent("u2.obj"), Some("Max"));
        let c = &r.compounds[0];
        assert_eq!(c.readings, vec!["angry(Fred,Max)"]);
        let optimal: Vec<bool> = c.verdicts().iter().map(|v| v.optimal).collect();
        assert_eq!(optimal, vec![true, false, false]);
        match &r.rule1 {
            Rule1Verdict::Checked { violations } => {
                assert_eq!(violations.len(), 1);
                assert!(violations[0].attribution.as_deref().unwrap().contains("parallelism"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn without_parallelism_the_np_reading_returns() {
        let r = resolve(&man_him(0.0), &SolveOptions::default()).unwrap();
        assert_eq!(r.referent("u2.subj"), Some("Max"));
        assert_eq!(r.referent("u2.obj"), Some("Fred"));
        assert_eq!(r.rule1, Rule1Verdict::Checked { violations: vec![] });
        assert!(r.compounds[0].candidates.iter().any(|c| !c.retained));
    }

    #[test]
    fn context_priors_enter_the_sentence_game() {
        let mut d = man_him(0.0);
        d.context.proposition_priors.insert("angry(Max,Fred)".into(), 0.05);
        d.context.proposition_priors.insert("angry(Fred,Max)".into(), 0.95);
        let r = resolve(&d, &SolveOptions::default()).unwrap();
        assert_eq!(r.referent("u2.subj"), Some("Fred"));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(FormCosts { pronoun: 0.5, definite_np: 0.5, proper_name: 0.6 }.validate().is_err());
        assert!(Boosts { pronoun: 1.0, definite_np: 1.2, proper_name: 1.0 }.validate().is_err());
        let mut d = he_man();
        d.utterances[1].realizations[1].function = Subject;
        assert!(resolve(&d, &SolveOptions::default()).is_err());
    }
}
