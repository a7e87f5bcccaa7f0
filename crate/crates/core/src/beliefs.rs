//! Truncated nested beliefs: level-k play when the players may hold
//! different estimates of the game, belief trees checked against an observed
//! message, and pruning a game down to what an observed message makes
//! relevant.

use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;

use crate::equilibrium::{best_set, posterior_beliefs, receiver_values, sender_values, OffPathRule, PureProfile};
use crate::error::{invalid, GameError, Result};
use crate::game::{
    validate_game, ContentIx, Credit, MeaningGame, MessageIx, Player, PlayerModel, Prior, ReceiverStrategy,
    SenderStrategy, UtilityModel, TOL,
};

/// Deepest level-k iteration accepted.
pub const MAX_DEPTH: usize = 10_000;
/// Largest belief tree built.
pub const MAX_TREE_NODES: usize = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SenderAnchor {
    /// Each content takes its cheapest grammatical message.
    #[default]
    CheapestGrammatical,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverAnchor {
    /// Each message is read as its most probable grammatical content.
    #[default]
    PriorMaximum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LevelKConfig {
    pub depth: usize,
    pub level0_sender: SenderAnchor,
    pub level0_receiver: ReceiverAnchor,
    pub off_path: OffPathRule,
}

impl Default for LevelKConfig {
    fn default() -> Self {
        LevelKConfig {
            depth: 8,
            level0_sender: SenderAnchor::default(),
            level0_receiver: ReceiverAnchor::default(),
            off_path: OffPathRule::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum LevelKStatus {
    /// Levels `at` and `at + 1` coincide, and so do all later ones.
    FixedPoint { at: usize },
    /// Level `start + period` repeats level `start`, with `period > 1`.
    Cycle { start: usize, period: usize },
    /// Neither within the computed depth.
    Open,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelKRun {
    /// Profiles for levels 0 through depth.
    pub levels: Vec<PureProfile>,
    pub status: LevelKStatus,
}

impl LevelKRun {
    pub fn last(&self) -> &PureProfile {
        self.levels.last().expect("level 0 is always present")
    }
}

fn same_alphabet(a: &MeaningGame, b: &MeaningGame) -> bool {
    a.contents().iter().map(|c| &c.id).eq(b.contents().iter().map(|c| &c.id))
        && a.messages().iter().map(|m| &m.id).eq(b.messages().iter().map(|m| &m.id))
}

/// Among tied options, the one whose id sorts first.
fn pick(options: &[usize], id: impl Fn(usize) -> String) -> usize {
    *options.iter().min_by_key(|&&i| id(i)).expect("nonempty best set")
}

pub fn level0_sender(g: &MeaningGame, _anchor: SenderAnchor) -> Vec<MessageIx> {
    (0..g.n_contents())
        .map(|c| {
            let values: Vec<(MessageIx, f64)> =
                g.messages_for(c).map(|m| (m, -g.turn_cost(c, m, c, Player::Sender))).collect();
            pick(&best_set(&values), |m| g.messages()[m].id.clone())
        })
        .collect()
}

pub fn level0_receiver(g: &MeaningGame, _anchor: ReceiverAnchor) -> Vec<Option<ContentIx>> {
    (0..g.n_messages())
        .map(|m| {
            let values: Vec<(ContentIx, f64)> = g.contents_for(m).map(|c| (c, g.prior().get(c))).collect();
            (!values.is_empty()).then(|| pick(&best_set(&values), |c| g.contents()[c].id.clone()))
        })
        .collect()
}

/// Sender best reply under `g` to a pure receiver strategy.
pub fn sender_reply(g: &MeaningGame, receiver: &[Option<ContentIx>]) -> Vec<MessageIx> {
    let r = ReceiverStrategy::pure(receiver, g.n_contents());
    (0..g.n_contents())
        .map(|c| pick(&best_set(&sender_values(g, &r, c)), |m| g.messages()[m].id.clone()))
        .collect()
}

/// Receiver best reply under `g` to a pure sender strategy.
pub fn receiver_reply(g: &MeaningGame, sender: &[MessageIx], rule: OffPathRule) -> Result<Vec<Option<ContentIx>>> {
    let s = SenderStrategy::pure(sender, g.n_messages());
    let beliefs = posterior_beliefs(g, &s, rule)?;
    Ok((0..g.n_messages())
        .map(|m| {
            beliefs
                .get(m)
                .map(|b| pick(&best_set(&receiver_values(g, b, m)), |c| g.contents()[c].id.clone()))
        })
        .collect())
}

/// Level 0 from the anchors; each later sender replies under `g_s` to the
/// previous receiver and each later receiver replies under `g_r` to the
/// previous sender.
pub fn level_k_strategies(g_s: &MeaningGame, g_r: &MeaningGame, cfg: &LevelKConfig) -> Result<LevelKRun> {
    if !same_alphabet(g_s, g_r) {
        return Err(invalid("the two game estimates must share contents and messages, in order"));
    }
    if cfg.depth > MAX_DEPTH {
        return Err(invalid(format!("depth {} exceeds the limit of {MAX_DEPTH}", cfg.depth)));
    }
    for g in [g_s, g_r] {
        let report = validate_game(g);
        if !report.is_valid() {
            return Err(GameError::Invalid(report));
        }
    }
    let mut levels = vec![PureProfile {
        sender: level0_sender(g_s, cfg.level0_sender),
        receiver: level0_receiver(g_r, cfg.level0_receiver),
    }];
    for _ in 0..cfg.depth {
        let prev = levels.last().unwrap();
        let next = PureProfile {
            sender: sender_reply(g_s, &prev.receiver),
            receiver: receiver_reply(g_r, &prev.sender, cfg.off_path)?,
        };
        levels.push(next);
    }
    let status = classify(&levels);
    Ok(LevelKRun { levels, status })
}

fn classify(levels: &[PureProfile]) -> LevelKStatus {
    for (k, p) in levels.iter().enumerate() {
        if let Some(j) = levels[..k].iter().position(|q| q == p) {
            return if k - j == 1 {
                LevelKStatus::FixedPoint { at: j }
            } else {
                LevelKStatus::Cycle { start: j, period: k - j }
            };
        }
    }
    LevelKStatus::Open
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Viewpoint {
    SenderIntending(ContentIx),
    ReceiverInterpreting(MessageIx),
}

impl fmt::Display for Viewpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Viewpoint::SenderIntending(c) => write!(f, "S intends #{c}"),
            Viewpoint::ReceiverInterpreting(m) => write!(f, "R reads #{m}"),
        }
    }
}

/// One viewpoint's estimate of the game, and its estimates of the other
/// player's viewpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefNode {
    pub viewpoint: Viewpoint,
    pub estimate: MeaningGame,
    pub children: Vec<BeliefNode>,
}

impl BeliefNode {
    pub fn leaf(viewpoint: Viewpoint, estimate: MeaningGame) -> Self {
        BeliefNode { viewpoint, estimate, children: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(BeliefNode::node_count).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| 1 + c.depth()).max().unwrap_or(0)
    }

    /// Viewpoints alternate between the players along every path.
    pub fn alternates(&self) -> bool {
        self.children.iter().all(|c| {
            matches!(
                (self.viewpoint, c.viewpoint),
                (Viewpoint::SenderIntending(_), Viewpoint::ReceiverInterpreting(_))
                    | (Viewpoint::ReceiverInterpreting(_), Viewpoint::SenderIntending(_))
            ) && c.alternates()
        })
    }

    /// Node at a path of child indices.
    pub fn at(&self, path: &[usize]) -> Option<&BeliefNode> {
        path.iter().try_fold(self, |n, &i| n.children.get(i))
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut BeliefNode> {
        path.iter().try_fold(self, |n, &i| n.children.get_mut(i))
    }
}

/// Full tree of the given depth: a sender viewpoint considers every reading
/// viewpoint and vice versa. `estimate` receives the viewpoints from the
/// root down.
pub fn belief_tree(
    root: Viewpoint,
    depth: usize,
    estimate: &dyn Fn(&[Viewpoint]) -> MeaningGame,
) -> Result<BeliefNode> {
    let top = estimate(&[root]);
    let (nc, nm) = (top.n_contents() as f64, top.n_messages() as f64);
    let size: f64 = (0..=depth).map(|d| (nc.max(nm)).powi(d as i32)).sum();
    if size > MAX_TREE_NODES as f64 {
        return Err(GameError::TooLarge { count: size as u128, cap: MAX_TREE_NODES as u128 });
    }
    fn grow(path: &mut Vec<Viewpoint>, depth: usize, estimate: &dyn Fn(&[Viewpoint]) -> MeaningGame) -> BeliefNode {
        let g = estimate(path);
        let here = *path.last().unwrap();
        let mut children = Vec::new();
        if depth > 0 {
            let next: Vec<Viewpoint> = match here {
                Viewpoint::SenderIntending(_) => (0..g.n_messages()).map(Viewpoint::ReceiverInterpreting).collect(),
                Viewpoint::ReceiverInterpreting(_) => (0..g.n_contents()).map(Viewpoint::SenderIntending).collect(),
            };
            for v in next {
                path.push(v);
                children.push(grow(path, depth - 1, estimate));
                path.pop();
            }
        }
        BeliefNode { viewpoint: here, estimate: g, children }
    }
    let mut path = vec![root];
    Ok(grow(&mut path, depth, estimate))
}

/// Strategies a node attributes to both players.
#[derive(Clone, Debug, PartialEq)]
pub struct Implied {
    pub sender: Vec<MessageIx>,
    pub receiver: Vec<Option<ContentIx>>,
}

/// Leaves play the level-0 anchors. A sender viewpoint best-replies to the
/// receiver assembled from its reading children; a reading viewpoint
/// best-replies to the sender assembled from its intending children. Rows
/// without a matching child fall back to the node's own anchors.
pub fn implied_strategies(node: &BeliefNode, cfg: &LevelKConfig) -> Result<Implied> {
    let g = &node.estimate;
    let mut sender = level0_sender(g, cfg.level0_sender);
    let mut receiver = level0_receiver(g, cfg.level0_receiver);
    if node.children.is_empty() {
        return Ok(Implied { sender, receiver });
    }
    for child in &node.children {
        if !same_alphabet(g, &child.estimate) {
            return Err(invalid("belief tree estimates must share contents and messages"));
        }
        let sub = implied_strategies(child, cfg)?;
        match child.viewpoint {
            Viewpoint::ReceiverInterpreting(m) => receiver[m] = sub.receiver[m],
            Viewpoint::SenderIntending(c) => sender[c] = sub.sender[c],
        }
    }
    match node.viewpoint {
        Viewpoint::SenderIntending(_) => sender = sender_reply(g, &receiver),
        Viewpoint::ReceiverInterpreting(_) => receiver = receiver_reply(g, &sender, cfg.off_path)?,
    }
    Ok(Implied { sender, receiver })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Refutation {
    /// Child indices from the root.
    pub path: Vec<usize>,
    pub viewpoint: Viewpoint,
}

/// Nodes whose implied sender strategy never produces the observed message.
pub fn consistency_check(tree: &BeliefNode, observed: &str, cfg: &LevelKConfig) -> Result<Vec<Refutation>> {
    let m = tree
        .estimate
        .message_index(observed)
        .ok_or_else(|| invalid(format!("'{observed}' is not a message of the game")))?;
    let mut out = Vec::new();
    let mut path = Vec::new();
    walk(tree, m, cfg, &mut path, &mut out)?;
    Ok(out)
}

fn walk(
    node: &BeliefNode,
    m: MessageIx,
    cfg: &LevelKConfig,
    path: &mut Vec<usize>,
    out: &mut Vec<Refutation>,
) -> Result<()> {
    let implied = implied_strategies(node, cfg)?;
    if !implied.sender.contains(&m) {
        out.push(Refutation { path: path.clone(), viewpoint: node.viewpoint });
    }
    for (i, c) in node.children.iter().enumerate() {
        path.push(i);
        walk(c, m, cfg, path, out)?;
        path.pop();
    }
    Ok(())
}

fn close(a: &MeaningGame, b: &MeaningGame) -> bool {
    let near = |x: f64, y: f64| (x - y).abs() <= TOL;
    let models_close = |p: &PlayerModel, q: &PlayerModel| {
        let credit = (0..a.n_contents()).all(|i| (0..a.n_contents()).all(|j| near(p.credit.get(i, j), q.credit.get(i, j))));
        let costs = p.costs.iter().zip(&q.costs).all(|(r, s)| {
            r.iter().zip(s).all(|(x, y)| match (x, y) {
                (Some(x), Some(y)) => near(x.sender, y.sender) && near(x.receiver, y.receiver),
                (None, None) => true,
                _ => false,
            })
        });
        credit && costs
    };
    same_alphabet(a, b)
        && a.prior().weights().iter().zip(b.prior().weights()).all(|(x, y)| near(*x, *y))
        && [Player::Sender, Player::Receiver]
            .iter()
            .all(|&p| models_close(a.utility_model().player(p), b.utility_model().player(p)))
}

/// The single shared game when every estimate in the tree agrees with the
/// root's within tolerance.
pub fn common_knowledge(tree: &BeliefNode) -> Option<MeaningGame> {
    fn agree(n: &BeliefNode, g: &MeaningGame) -> bool {
        close(&n.estimate, g) && n.children.iter().all(|c| agree(c, g))
    }
    agree(tree, &tree.estimate).then(|| tree.estimate.clone())
}

/// A game cut down around an observed message.
#[derive(Clone, Debug, PartialEq)]
pub struct Pruned {
    pub game: MeaningGame,
    /// Original indices of the kept contents and messages.
    pub contents: Vec<ContentIx>,
    pub messages: Vec<MessageIx>,
}

fn edge_weight(g: &MeaningGame, c: ContentIx, m: MessageIx) -> f64 {
    [Player::Sender, Player::Receiver]
        .iter()
        .filter_map(|&p| g.utility_model().player(p).cost(c, m).map(|pc| pc.total()))
        .fold(0.0, f64::max)
}

/// Keeps the contents and messages reachable from the observed message
/// through grammatical pairs at total cost within `threshold`.
///
/// Distances are shortest paths in the content–message graph weighted by
/// pair cost, so anything outside the observed message's component is
/// always dropped.
pub fn prune_by_message(g: &MeaningGame, observed: &str, threshold: f64) -> Result<Pruned> {
    let m0 = g
        .message_index(observed)
        .ok_or_else(|| invalid(format!("'{observed}' is not a message of the game")))?;
    if threshold.is_nan() || threshold < 0.0 {
        return Err(invalid("threshold must be nonnegative"));
    }
    let (nc, nm) = (g.n_contents(), g.n_messages());
    // nodes: contents 0..nc, messages nc..nc+nm
    let mut dist = vec![f64::INFINITY; nc + nm];
    dist[nc + m0] = 0.0;
    let mut queue = VecDeque::from([nc + m0]);
    // Bellman-Ford style relaxation; graphs here are small.
    while let Some(v) = queue.pop_front() {
        let neighbours: Vec<(usize, f64)> = if v < nc {
            g.messages_for(v).map(|m| (nc + m, edge_weight(g, v, m))).collect()
        } else {
            g.contents_for(v - nc).map(|c| (c, edge_weight(g, c, v - nc))).collect()
        };
        for (w, cost) in neighbours {
            let d = dist[v] + cost;
            if d < dist[w] && d <= threshold {
                dist[w] = d;
                queue.push_back(w);
            }
        }
    }
    let contents: Vec<ContentIx> = (0..nc).filter(|&c| dist[c].is_finite()).collect();
    let messages: Vec<MessageIx> = (0..nm).filter(|&m| dist[nc + m].is_finite()).collect();
    if contents.is_empty() {
        return Err(invalid(format!("pruning around '{observed}' leaves no contents")));
    }
    let weights: Vec<f64> = contents.iter().map(|&c| g.prior().get(c)).collect();
    let (prior, _) = Prior::normalized(weights).map_err(|_| invalid("pruned contents all have zero prior"))?;
    let restrict = |model: &PlayerModel| PlayerModel {
        credit: match &model.credit {
            Credit::Exact(b) => Credit::Exact(*b),
            Credit::Partial(t) => Credit::Partial(
                contents.iter().map(|&i| contents.iter().map(|&j| t[i][j]).collect()).collect(),
            ),
        },
        costs: contents.iter().map(|&c| messages.iter().map(|&m| model.costs[c][m]).collect()).collect(),
    };
    let um = g.utility_model();
    let utility = if um.shared {
        UtilityModel::shared(restrict(&um.sender))
    } else {
        UtilityModel::split(restrict(&um.sender), restrict(&um.receiver))
    };
    let game = MeaningGame::from_parts(
        contents.iter().map(|&c| g.contents()[c].clone()).collect(),
        messages.iter().map(|&m| g.messages()[m].clone()).collect(),
        prior,
        utility,
    )
    .validated()?;
    Ok(Pruned { game, contents, messages })
}
