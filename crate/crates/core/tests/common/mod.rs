#![allow(dead_code)]

use meaning_game::equilibrium::{OffPathRule, PureProfile};
use meaning_game::{GameBuilder, MeaningGame, PairCost, Player, TOL};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub contents: usize,
    pub messages: usize,
    /// Drop some content-message pairs, keeping every content expressible.
    pub drop_edges: bool,
    /// Give the receiver its own bonus and costs.
    pub split: bool,
    /// Allow a content with zero prior.
    pub zero_prior: bool,
}

impl Shape {
    pub fn complete(n: usize) -> Self {
        Shape { contents: n, messages: n, drop_edges: false, split: false, zero_prior: false }
    }
}

pub fn normalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= total;
    }
}

pub fn random_game(rng: &mut impl Rng, shape: Shape) -> MeaningGame {
    let (nc, nm) = (shape.contents, shape.messages);
    let mut prior: Vec<f64> = (0..nc).map(|_| rng.gen_range(0.05..1.0)).collect();
    if shape.zero_prior && nc > 1 && rng.gen_bool(0.2) {
        prior[rng.gen_range(0..nc)] = 0.0;
    }
    normalize(&mut prior);

    let mut edge = vec![vec![true; nm]; nc];
    if shape.drop_edges {
        for row in edge.iter_mut() {
            for e in row.iter_mut() {
                *e = !rng.gen_bool(0.3);
            }
            if !row.iter().any(|&e| e) {
                row[rng.gen_range(0..nm)] = true;
            }
        }
    }
    let complete = edge.iter().flatten().all(|&e| e);

    let mut b = GameBuilder::new().bonus(rng.gen_range(0.5..2.0));
    for (c, p) in prior.iter().enumerate() {
        b = b.content(&format!("c{c}"), *p);
    }
    for m in 0..nm {
        b = b.message(&format!("m{m}"), 0.0);
    }
    if shape.split {
        b = b.receiver_bonus(rng.gen_range(0.5..2.0));
    }
    for c in 0..nc {
        for m in 0..nm {
            if !edge[c][m] {
                continue;
            }
            let (cid, mid) = (format!("c{c}"), format!("m{m}"));
            if !complete {
                b = b.grammatical(&cid, &mid);
            }
            b = b.pair_cost(&cid, &mid, PairCost::new(rng.gen_range(0.0..0.6), rng.gen_range(0.0..0.6)));
            if shape.split {
                b = b.receiver_pair_cost(&cid, &mid, PairCost::new(rng.gen_range(0.0..0.6), rng.gen_range(0.0..0.6)));
            }
        }
    }
    b.build().expect("generated game is valid")
}

/// Complete n x n game with shared utility, strictly ordered priors and
/// strictly ordered per-message costs below the bonus.
pub fn strict_square_game(rng: &mut impl Rng, n: usize) -> MeaningGame {
    loop {
        let mut prior: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        normalize(&mut prior);
        let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.9)).collect();
        let strict = |v: &[f64]| {
            let mut s = v.to_vec();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s.windows(2).all(|w| w[1] - w[0] > 1e-3)
        };
        if !strict(&prior) || !strict(&costs) {
            continue;
        }
        let mut b = GameBuilder::new().bonus(1.0);
        for (c, p) in prior.iter().enumerate() {
            b = b.content(&format!("c{c}"), *p);
        }
        for (m, x) in costs.iter().enumerate() {
            b = b.message(&format!("m{m}"), *x);
        }
        return b.build().unwrap();
    }
}

/// Utility of one turn, computed straight from the cost tables.
pub fn value(g: &MeaningGame, p: Player, cs: usize, m: usize, cr: usize) -> f64 {
    let model = g.utility_model().player(p);
    let production = model.cost(cs, m).map_or(0.0, |x| x.sender);
    let interpretation = model.cost(cr, m).map_or(0.0, |x| x.receiver);
    model.credit.get(cs, cr) - production - interpretation
}

fn belief(g: &MeaningGame, sender: &[usize], m: usize, rule: OffPathRule) -> Vec<f64> {
    let nc = g.n_contents();
    let p = g.prior().weights();
    let mut mu: Vec<f64> = (0..nc).map(|c| if sender[c] == m { p[c] } else { 0.0 }).collect();
    if mu.iter().sum::<f64>() > 0.0 {
        normalize(&mut mu);
        return mu;
    }
    mu = (0..nc)
        .map(|c| match (g.is_edge(c, m), rule) {
            (false, _) => 0.0,
            (true, OffPathRule::PriorRestricted) => p[c],
            (true, OffPathRule::UniformRestricted) => 1.0,
        })
        .collect();
    if mu.iter().sum::<f64>() == 0.0 {
        mu = (0..nc).map(|c| if g.is_edge(c, m) { 1.0 } else { 0.0 }).collect();
    }
    normalize(&mut mu);
    mu
}

/// Exhaustive unilateral-deviation check of a pure profile.
pub fn oracle_equilibrium(g: &MeaningGame, p: &PureProfile, rule: OffPathRule) -> bool {
    let (nc, nm) = (g.n_contents(), g.n_messages());
    for c in 0..nc {
        let read = |m: usize| p.receiver[m].expect("grammatical message has a reading");
        let here = value(g, Player::Sender, c, p.sender[c], read(p.sender[c]));
        for m in (0..nm).filter(|&m| g.is_edge(c, m)) {
            if value(g, Player::Sender, c, m, read(m)) > here + TOL {
                return false;
            }
        }
    }
    for m in 0..nm {
        let Some(r) = p.receiver[m] else { continue };
        let mu = belief(g, &p.sender, m, rule);
        let eval = |cr: usize| -> f64 {
            (0..nc).filter(|&cs| mu[cs] > 0.0).map(|cs| mu[cs] * value(g, Player::Receiver, cs, m, cr)).sum()
        };
        let here = eval(r);
        for cr in (0..nc).filter(|&cr| g.is_edge(cr, m)) {
            if eval(cr) > here + TOL {
                return false;
            }
        }
    }
    true
}

/// Every deterministic profile over grammatical choices.
pub fn all_pure_profiles(g: &MeaningGame) -> Vec<PureProfile> {
    let senders: Vec<Vec<usize>> = (0..g.n_contents()).map(|c| g.messages_for(c).collect()).collect();
    let receivers: Vec<Vec<Option<usize>>> = (0..g.n_messages())
        .map(|m| {
            let cs: Vec<Option<usize>> = g.contents_for(m).map(Some).collect();
            if cs.is_empty() {
                vec![None]
            } else {
                cs
            }
        })
        .collect();
    let mut out = Vec::new();
    for s in product(&senders) {
        for r in product(&receivers) {
            out.push(PureProfile { sender: s.clone(), receiver: r });
        }
    }
    out
}

fn product<T: Clone>(options: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for opts in options {
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o.clone());
                    v
                })
            })
            .collect();
    }
    acc
}

pub fn brute_force_equilibria(g: &MeaningGame, rule: OffPathRule) -> Vec<PureProfile> {
    let mut out: Vec<PureProfile> =
        all_pure_profiles(g).into_iter().filter(|p| oracle_equilibrium(g, p, rule)).collect();
    out.sort();
    out
}

/// Expected utility of a pure profile, from the cost tables.
pub fn pure_eu(g: &MeaningGame, p: &PureProfile, player: Player) -> f64 {
    (0..g.n_contents())
        .map(|c| {
            let m = p.sender[c];
            g.prior().get(c) * value(g, player, c, m, p.receiver[m].unwrap())
        })
        .sum()
}

/// On-path map from each content with positive prior to its reading.
pub fn interpretation(g: &MeaningGame, p: &PureProfile) -> Vec<(usize, usize, usize)> {
    (0..g.n_contents())
        .filter(|&c| g.prior().get(c) > 0.0)
        .map(|c| (c, p.sender[c], p.receiver[p.sender[c]].unwrap()))
        .collect()
}

pub fn relabel(g: &MeaningGame, content_perm: &[usize], message_perm: &[usize]) -> MeaningGame {
    let mut b = GameBuilder::new();
    let model = g.utility_model();
    b = b.bonus(model.sender.credit.bonus().unwrap());
    if !model.shared {
        b = b.receiver_bonus(model.receiver.credit.bonus().unwrap());
    }
    let name_c = |c: usize| g.contents()[c].id.clone();
    let name_m = |m: usize| g.messages()[m].id.clone();
    for &c in content_perm {
        b = b.content(&name_c(c), g.prior().get(c));
    }
    for &m in message_perm {
        b = b.message(&name_m(m), 0.0);
    }
    for &c in content_perm {
        for &m in message_perm {
            if let Some(pc) = model.sender.cost(c, m) {
                if !g.is_complete() {
                    b = b.grammatical(&name_c(c), &name_m(m));
                }
                b = b.pair_cost(&name_c(c), &name_m(m), pc);
                if !model.shared {
                    b = b.receiver_pair_cost(&name_c(c), &name_m(m), model.receiver.cost(c, m).unwrap());
                }
            }
        }
    }
    b.build().unwrap()
}

pub fn shuffled(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}

pub fn scenario(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}
