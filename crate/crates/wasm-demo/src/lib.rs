//! Browser bindings: each export takes plain numbers or comma-separated
//! lists and returns a JSON document, `{"error": ...}` on bad input.

use meaning_game::beliefs::LevelKConfig;
use meaning_game::equilibrium::{assortative_solution, SolveOptions};
use meaning_game::scenario::{self, Assignment};
use meaning_game::{GameBuilder, MeaningGame, PairCost, Result};
use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn render(result: Result<Value>) -> String {
    result.unwrap_or_else(|e| json!({ "error": e.to_string() })).to_string()
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn numbers(list: &str, what: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| meaning_game::GameError::InvalidArgument(format!("{what}: '{s}' is not a number")))
        })
        .collect()
}

fn two_referents(p1: f64, costs: [[f64; 2]; 2], bonus: f64) -> Result<MeaningGame> {
    let mut b = GameBuilder::new()
        .content("Fred", p1)
        .content("Max", 1.0 - p1)
        .message("he", 0.0)
        .message("the man", 0.0)
        .bonus(bonus);
    for (c, row) in ["Fred", "Max"].iter().zip(costs) {
        for (m, x) in ["he", "the man"].iter().zip(row) {
            b = b.pair_cost(c, m, PairCost::split(x));
        }
    }
    b.build()
}

fn table(list: &str, what: &str) -> Result<[[f64; 2]; 2]> {
    match numbers(list, what)?[..] {
        [a, b, c, d] => Ok([[a, b], [c, d]]),
        _ => Err(meaning_game::GameError::InvalidArgument(format!("{what}: need four numbers"))),
    }
}

/// Every pure equilibrium of the two-referent game, the prediction, and the
/// decomposition of the cost gap between the two separating equilibria.
pub fn two_referent_report(p1: f64, cost_he: f64, cost_man: f64, bonus: f64) -> Result<Value> {
    let g = two_referents(p1, [[cost_he, cost_man], [cost_he, cost_man]], bonus)?;
    let opts = SolveOptions::default();
    Ok(json!({
        "equilibria": to_value(scenario::solve_body(&g, &opts, false)?),
        "prediction": to_value(scenario::predict_body(&g, &opts)?),
        "explain": to_value(scenario::explain_body(&g, &opts)?),
    }))
}

/// A complete n x n game from priors and message costs, solved by
/// enumeration and compared with the lightest-message-to-likeliest-content
/// pairing.
pub fn assortative_report(priors: &str, costs: &str) -> Result<Value> {
    let (p, c) = (numbers(priors, "priors")?, numbers(costs, "costs")?);
    if p.len() != c.len() || p.is_empty() || p.len() > 5 {
        return Err(meaning_game::GameError::InvalidArgument(
            "give between 1 and 5 priors and as many costs".into(),
        ));
    }
    let total: f64 = p.iter().sum();
    let mut b = GameBuilder::new().bonus(1.0);
    for (i, w) in p.iter().enumerate() {
        b = b.content(&format!("c{}", i + 1), w / total);
    }
    for (j, x) in c.iter().enumerate() {
        b = b.message(&format!("m{}", j + 1), *x);
    }
    let g = b.build()?;
    let prediction = scenario::predict_body(&g, &SolveOptions::default())?;
    let assortative = match assortative_solution(&g) {
        Ok(profile) => {
            let pure = profile.as_pure().expect("assortative profile is pure");
            let pairs: Vec<Assignment> = pure
                .sender
                .iter()
                .enumerate()
                .map(|(ci, &m)| Assignment { content: g.contents()[ci].id.clone(), message: g.messages()[m].id.clone() })
                .collect();
            json!({ "applies": true, "sender": pairs })
        }
        Err(e) => json!({ "applies": false, "reason": e.to_string() }),
    };
    Ok(json!({ "prediction": to_value(prediction), "assortative": assortative }))
}

/// Level-k play when the sender and the receiver price the four
/// content-message pairs differently.
pub fn level_k_report(p1: f64, sender_costs: &str, receiver_costs: &str, depth: usize) -> Result<Value> {
    let g_s = two_referents(p1, table(sender_costs, "sender costs")?, 1.0)?;
    let g_r = two_referents(p1, table(receiver_costs, "receiver costs")?, 1.0)?;
    let cfg = LevelKConfig { depth: depth.min(64), ..Default::default() };
    Ok(to_value(scenario::level_k_body(&g_s, &g_r, &cfg)?))
}

#[wasm_bindgen]
pub fn two_referent(p1: f64, cost_he: f64, cost_man: f64, bonus: f64) -> String {
    render(two_referent_report(p1, cost_he, cost_man, bonus))
}

#[wasm_bindgen]
pub fn assortative(priors: &str, costs: &str) -> String {
    render(assortative_report(priors, costs))
}

#[wasm_bindgen]
pub fn level_k(p1: f64, sender_costs: &str, receiver_costs: &str, depth: usize) -> String {
    render(level_k_report(p1, sender_costs, receiver_costs, depth))
}
