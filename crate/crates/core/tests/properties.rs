mod common;

use common::*;
use meaning_game::beliefs::{level_k_strategies, prune_by_message, LevelKConfig, LevelKStatus};
use meaning_game::centering::{accommodate, salience_priors, Boosts, CommittedReference, DiscourseState, FormKind, SalienceParams};
use meaning_game::compound::{flatten, CompoundGame, ConstituentGame};
use meaning_game::equilibrium::{
    enumerate_pure_equilibria, is_equilibrium, pareto_filter, predict, OffPathRule, PureProfile, SolveOptions,
};
use meaning_game::scenario::{game_to_json, parse_game};
use meaning_game::{MeaningGame, Player, ReceiverStrategy, SenderStrategy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shape() -> impl Strategy<Value = Shape> {
    (1usize..=3, 1usize..=3, any::<bool>(), any::<bool>(), any::<bool>()).prop_map(
        |(contents, messages, drop_edges, split, zero_prior)| Shape { contents, messages, drop_edges, split, zero_prior },
    )
}

fn game() -> impl Strategy<Value = MeaningGame> {
    (any::<u64>(), shape()).prop_map(|(seed, s)| random_game(&mut ChaCha8Rng::seed_from_u64(seed), s))
}

fn rule() -> impl Strategy<Value = OffPathRule> {
    prop_oneof![Just(OffPathRule::PriorRestricted), Just(OffPathRule::UniformRestricted)]
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, allowed: impl Fn(usize, usize) -> bool, width: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..width).map(|j| if allowed(i, j) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect();
            if row.iter().sum::<f64>() == 0.0 {
                let j = (0..width).find(|&j| allowed(i, j)).unwrap();
                row[j] = 1.0;
            }
            normalize(&mut row);
            row
        })
        .collect()
}

fn sender(g: &MeaningGame, rng: &mut ChaCha8Rng) -> SenderStrategy {
    SenderStrategy::new(random_rows(rng, g.n_contents(), |c, m| g.is_edge(c, m), g.n_messages()))
}

fn receiver(g: &MeaningGame, rng: &mut ChaCha8Rng) -> ReceiverStrategy {
    let rows = (0..g.n_messages())
        .map(|m| {
            if g.contents_for(m).next().is_none() {
                return vec![0.0; g.n_contents()];
            }
            random_rows(rng, 1, |_, c| g.is_edge(c, m), g.n_contents()).remove(0)
        })
        .collect();
    ReceiverStrategy::new(rows)
}

fn mix(a: &[Vec<f64>], b: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| t * p + (1.0 - t) * q).collect()).collect()
}

/// Contents and messages within `threshold` of message `m0`, by repeated
/// relaxation over pair costs (the larger of the two players' totals).
fn reachable(g: &MeaningGame, m0: usize, threshold: f64) -> (Vec<usize>, Vec<usize>) {
    let (nc, nm) = (g.n_contents(), g.n_messages());
    let weight = |c: usize, m: usize| {
        let um = g.utility_model();
        um.sender.cost(c, m).unwrap().total().max(um.receiver.cost(c, m).unwrap().total())
    };
    let mut dc = vec![f64::INFINITY; nc];
    let mut dm = vec![f64::INFINITY; nm];
    dm[m0] = 0.0;
    for _ in 0..(nc + nm) {
        for c in 0..nc {
            for m in (0..nm).filter(|&m| g.is_edge(c, m)) {
                dc[c] = dc[c].min(dm[m] + weight(c, m));
                dm[m] = dm[m].min(dc[c] + weight(c, m));
            }
        }
    }
    (
        (0..nc).filter(|&c| dc[c] <= threshold).collect(),
        (0..nm).filter(|&m| dm[m] <= threshold).collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn enumeration_matches_brute_force(g in game(), rule in rule()) {
        let opts = SolveOptions { off_path: rule, ..Default::default() };
        let ours: Vec<PureProfile> = enumerate_pure_equilibria(&g, &opts).unwrap().into_iter().map(|r| r.pure).collect();
        prop_assert_eq!(ours, brute_force_equilibria(&g, rule));
    }

    #[test]
    fn expected_utility_is_multilinear(g in game(), seed in any::<u64>(), t in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s1, s2, r1, r2) = (sender(&g, &mut rng), sender(&g, &mut rng), receiver(&g, &mut rng), receiver(&g, &mut rng));
        let s = SenderStrategy::new(mix(s1.rows(), s2.rows(), t));
        let r = ReceiverStrategy::new(mix(r1.rows(), r2.rows(), t));
        for p in [Player::Sender, Player::Receiver] {
            let eu = |s: &SenderStrategy, r: &ReceiverStrategy| g.expected_utility(s, r, p).unwrap();
            prop_assert!((eu(&s, &r1) - (t * eu(&s1, &r1) + (1.0 - t) * eu(&s2, &r1))).abs() < 1e-9);
            prop_assert!((eu(&s1, &r) - (t * eu(&s1, &r1) + (1.0 - t) * eu(&s1, &r2))).abs() < 1e-9);
        }
    }

    #[test]
    fn success_is_a_probability(g in game(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, r) = (sender(&g, &mut rng), receiver(&g, &mut rng));
        let p = g.success_probability(&s, &r).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
        let bonus = g.utility_model().sender.credit.bonus().unwrap();
        prop_assert!(g.expected_utility(&s, &r, Player::Sender).unwrap() <= bonus * p + 1e-9);
    }

    #[test]
    fn equalizing_is_idempotent(g in game()) {
        let once = g.equalize_utilities();
        prop_assert!(once.utility_model().shared);
        prop_assert_eq!(once.equalize_utilities(), once);
    }

    #[test]
    fn relabeling_preserves_equilibria(g in game(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pc, pm) = (shuffled(&mut rng, g.n_contents()), shuffled(&mut rng, g.n_messages()));
        let h = relabel(&g, &pc, &pm);
        let payoffs = |g: &MeaningGame| {
            let mut v: Vec<(i64, i64)> = enumerate_pure_equilibria(g, &SolveOptions::default())
                .unwrap()
                .iter()
                .map(|r| ((r.eu_sender * 1e6).round() as i64, (r.eu_receiver * 1e6).round() as i64))
                .collect();
            v.sort();
            v
        };
        prop_assert_eq!(payoffs(&g), payoffs(&h));
    }

    #[test]
    fn pareto_set_is_an_antichain(g in game()) {
        let all = enumerate_pure_equilibria(&g, &SolveOptions::default()).unwrap();
        let kept = pareto_filter(&all);
        let pay = |r: &meaning_game::equilibrium::EquilibriumReport| (r.eu_sender, r.eu_receiver);
        let beats = |a: (f64, f64), b: (f64, f64)| a.0 >= b.0 - 1e-9 && a.1 >= b.1 - 1e-9 && (a.0 > b.0 + 1e-9 || a.1 > b.1 + 1e-9);
        for a in &kept {
            for b in &kept {
                prop_assert!(!beats(pay(a), pay(b)));
            }
        }
        for r in &all {
            if !kept.iter().any(|k| k.pure == r.pure) {
                prop_assert!(kept.iter().any(|k| beats(pay(k), pay(r))));
            }
        }
        prop_assert_eq!(all.is_empty(), kept.is_empty());
    }

    #[test]
    fn salience_priors_ignore_scale(scores in prop::collection::vec(0.01f64..10.0, 1..6), k in 0.01f64..100.0) {
        let names: Vec<String> = (0..scores.len()).map(|i| format!("E{i}")).collect();
        let state = |f: f64| {
            DiscourseState::new(names.clone(), SalienceParams::default())
                .with_salience(names.iter().cloned().zip(scores.iter().map(|s| s * f)).collect())
                .unwrap()
        };
        let ids: Vec<&str> = names.iter().map(String::as_str).collect();
        let (a, b) = (salience_priors(&state(1.0), &ids).unwrap(), salience_priors(&state(k), &ids).unwrap());
        for (x, y) in a.weights().iter().zip(b.weights()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn accommodation_only_raises_the_referent(scores in prop::collection::vec(0.01f64..10.0, 2..6), pick in any::<prop::sample::Index>(), boost in 1.0f64..4.0) {
        let names: Vec<String> = (0..scores.len()).map(|i| format!("E{i}")).collect();
        let state = DiscourseState::new(names.clone(), SalienceParams::default())
            .with_salience(names.iter().cloned().zip(scores.iter().copied()).collect())
            .unwrap();
        let target = pick.index(names.len());
        let turn = CommittedReference { entity: names[target].clone(), form: FormKind::Pronoun };
        let next = accommodate(&state, &turn, &Boosts { pronoun: boost, definite_np: 1.0, proper_name: 1.0 });
        for (i, e) in names.iter().enumerate() {
            let (before, after) = (state.salience()[e], next.salience()[e]);
            if i == target {
                prop_assert!(after >= before && after > 0.0);
            } else {
                prop_assert_eq!(before, after);
            }
        }
    }

    #[test]
    fn pruning_matches_shortest_paths(g in game(), pick in any::<prop::sample::Index>(), threshold in 0.0f64..2.0) {
        let m = pick.index(g.n_messages());
        let observed = g.messages()[m].id.clone();
        let (contents, messages) = reachable(&g, m, threshold);
        let mass: f64 = contents.iter().map(|&c| g.prior().get(c)).sum();
        match prune_by_message(&g, &observed, threshold) {
            Err(_) => prop_assert!(contents.is_empty() || mass == 0.0),
            Ok(p) => {
                prop_assert_eq!(&p.contents, &contents);
                prop_assert_eq!(&p.messages, &messages);
                for (ci, &c) in p.contents.iter().enumerate() {
                    for (mi, &mm) in p.messages.iter().enumerate() {
                        prop_assert_eq!(p.game.is_edge(ci, mi), g.is_edge(c, mm));
                    }
                }
                let total: f64 = p.game.prior().weights().iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn flattening_preserves_expected_utility(seed in any::<u64>(), wa in 0.1f64..3.0, wb in 0.1f64..3.0, pick in any::<prop::sample::Index>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_game(&mut rng, Shape { contents: 2, messages: 2, drop_edges: true, split: false, zero_prior: false });
        let b = random_game(&mut rng, Shape { contents: 2, messages: 3, drop_edges: true, split: false, zero_prior: false });
        let cg = CompoundGame::new(vec![
            ConstituentGame::new("a", "", a.clone()).weighted(wa),
            ConstituentGame::new("b", "", b.clone()).weighted(wb),
        ]);
        let flat = flatten(&cg, u128::MAX).unwrap();
        let profiles = all_pure_profiles(&flat.game);
        let p = &profiles[pick.index(profiles.len())];
        for player in [Player::Sender, Player::Receiver] {
            let weighted: f64 = (0..flat.game.n_contents())
                .map(|c| {
                    let s = p.sender[c];
                    let r = p.receiver[s].unwrap();
                    let (jc, jm, jr) = (&flat.joint_contents[c], &flat.joint_messages[s], &flat.joint_contents[r]);
                    flat.game.prior().get(c)
                        * (wa * value(&a, player, jc[0], jm[0], jr[0]) + wb * value(&b, player, jc[1], jm[1], jr[1]))
                })
                .sum();
            let composite = flat.game.expected_utility(&p.to_profile(&flat.game).sender, &p.to_profile(&flat.game).receiver, player).unwrap();
            prop_assert!((composite - weighted).abs() < 1e-9);
        }
    }

    #[test]
    fn level_k_fixed_points_are_equilibria(g in game(), rule in rule(), depth in 0usize..12) {
        let cfg = LevelKConfig { depth, off_path: rule, ..Default::default() };
        let run = level_k_strategies(&g, &g, &cfg).unwrap();
        prop_assert_eq!(run.levels.len(), depth + 1);
        if let LevelKStatus::FixedPoint { at } = run.status {
            let p = run.levels[at].to_profile(&g);
            prop_assert!(is_equilibrium(&g, &p, rule).unwrap().holds());
        }
    }

    #[test]
    fn game_files_round_trip(g in game()) {
        let text = game_to_json(&g);
        let back = parse_game(&text, "roundtrip.game").unwrap();
        prop_assert!(back.warnings.is_empty());
        prop_assert_eq!(back.game, g);
    }

    #[test]
    fn predictions_are_pareto_optimal_equilibria(g in game()) {
        let opts = SolveOptions::default();
        let all: Vec<PureProfile> = enumerate_pure_equilibria(&g, &opts).unwrap().into_iter().map(|r| r.pure).collect();
        let p = predict(&g, &opts).unwrap();
        for r in &p.reports {
            prop_assert!(all.contains(&r.pure));
        }
        prop_assert_eq!(p.ambiguous, p.interpretations().len() > 1);
    }
}
