use meaning_game_wasm::{assortative, level_k, two_referent};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn two_referent_explorer_reports_the_cheap_pronoun_reading() {
    let v = parse(two_referent(0.6, 0.0, 0.5, 1.0));
    assert_eq!(v["equilibria"]["equilibria"].as_array().unwrap().len(), 3);
    let predicted = &v["prediction"]["equilibria"][0]["sender"];
    assert_eq!(predicted[0]["message"], "he");
    assert_eq!(predicted[1]["message"], "the man");
    assert!((v["explain"]["difference"].as_f64().unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn assortative_explorer_agrees_with_enumeration() {
    let v = parse(assortative("0.5, 0.3, 0.2", "0.4, 0.0, 0.2"));
    assert_eq!(v["assortative"]["applies"], true);
    assert_eq!(v["prediction"]["ambiguous"], false);
    assert_eq!(v["assortative"]["sender"], v["prediction"]["equilibria"][0]["sender"]);
    assert_eq!(v["assortative"]["sender"][0]["message"], "m2");
}

#[test]
fn assortative_explorer_explains_ties() {
    let v = parse(assortative("0.5, 0.5", "0.1, 0.2"));
    assert_eq!(v["assortative"]["applies"], false);
    assert_eq!(v["prediction"]["ambiguous"], true);
}

#[test]
fn level_k_explorer_shows_oscillation() {
    let v = parse(level_k(3.0 / 7.0, "0.3, 0.2, 0.2, 0.3", "0.2, 0.3, 0.3, 0.2", 6));
    assert_eq!(v["status"]["status"], "cycle");
    assert_eq!(v["levels"].as_array().unwrap().len(), 7);
    let v = parse(level_k(0.6, "0, 0.5, 0, 0.5", "0, 0.5, 0, 0.5", 4));
    assert_eq!(v["status"]["status"], "fixed_point");
}

#[test]
fn bad_input_is_an_error_document() {
    assert!(parse(assortative("0.5, x", "0, 1"))["error"].as_str().unwrap().contains("'x'"));
    assert!(parse(level_k(0.5, "1, 2", "1, 2, 3, 4", 2))["error"].is_string());
    assert!(parse(two_referent(1.5, 0.0, 0.5, 1.0))["error"].is_string());
}
