//! Undirected social graph and influence rank.
//!
//! Influence rank is the PageRank recurrence applied to a friendship graph:
//! each undirected edge acts as a link in both directions, so a node's
//! out-degree equals its degree. One damped power-iteration step computes
//!
//! ```text
//! next(u) = (1 - d)/N + d * (sum over neighbors v of cur(v)/deg(v) + S/N)
//! ```
//!
//! where `S` is the total score held by degree-zero nodes. Isolated nodes
//! have no outgoing links, so their score is redistributed uniformly each
//! step; this keeps the score vector a probability distribution for every
//! damping value, including the endpoints 0 and 1.
//!
//! With `damping = 1.0` the recurrence is the raw undamped one. On bipartite
//! components the raw iterate never settles (it alternates between the two
//! sides with eigenvalue -1), so for that damping value convergence is judged
//! on the average of two consecutive iterates instead. The averaged sequence
//! cancels the alternating component and lands on the stationary distribution,
//! which on a connected graph is `deg(u) / (2 * |edges|)`.
//!
//! Determinism: nodes are indexed in ascending id order and neighbor
//! contributions are accumulated in that order, so equal inputs produce
//! bit-identical score vectors.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Account identifier: a non-empty token with no whitespace.
///
/// Ordering is byte-lexicographic and is the tie-break order used by every
/// ranking in this crate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccountId(String);

impl AccountId {
    pub fn new(token: impl Into<String>) -> Result<Self, InvalidAccountId> {
        let token = token.into();
        if token.is_empty() {
            return Err(InvalidAccountId {
                token,
                reason: "empty token",
            });
        }
        if token.chars().any(char::is_whitespace) {
            return Err(InvalidAccountId {
                token,
                reason: "contains whitespace",
            });
        }
        Ok(AccountId(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for AccountId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for AccountId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let token = String::deserialize(deserializer)?;
        AccountId::new(token).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid account id {token:?}: {reason}")]
pub struct InvalidAccountId {
    pub token: String,
    pub reason: &'static str,
}

/// Errors from graph construction or rank computation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge ({src}, {dst}) references unknown account `{missing}`")]
    UnknownEndpoint {
        src: AccountId,
        dst: AccountId,
        missing: AccountId,
    },
    #[error("self-loop on account `{0}`")]
    SelfLoop(AccountId),
    #[error("duplicate account id `{0}`")]
    DuplicateAccount(AccountId),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("invalid rank configuration: {0}")]
    InvalidConfig(String),
}

/// Immutable undirected graph over a fixed account roster.
///
/// Nodes are stored in ascending id order; adjacency lists hold ascending
/// node indices. Duplicate edges (including reversed duplicates) collapse to
/// a single undirected edge. Isolated nodes are legal and participate in
/// ranking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    nodes: Vec<AccountId>,
    index: HashMap<AccountId, usize>,
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl SocialGraph {
    /// Builds a graph from a node roster and undirected edge pairs.
    ///
    /// Rejects duplicate roster entries, self-loops, and edges whose
    /// endpoints are not in the roster. An empty roster is rejected.
    pub fn build(
        accounts: Vec<AccountId>,
        edges: &[(AccountId, AccountId)],
    ) -> Result<SocialGraph, GraphError> {
        if accounts.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        let mut nodes = accounts;
        nodes.sort_unstable();
        for pair in nodes.windows(2) {
            if pair[0] == pair[1] {
                return Err(GraphError::DuplicateAccount(pair[0].clone()));
            }
        }
        let index: HashMap<AccountId, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();

        let mut unique: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a.clone()));
            }
            let missing = if !index.contains_key(a) {
                Some(a)
            } else if !index.contains_key(b) {
                Some(b)
            } else {
                None
            };
            if let Some(missing) = missing {
                return Err(GraphError::UnknownEndpoint {
                    src: a.clone(),
                    dst: b.clone(),
                    missing: missing.clone(),
                });
            }
            let (i, j) = (index[a], index[b]);
            unique.insert((i.min(j), i.max(j)));
        }

        let mut adj = vec![Vec::new(); nodes.len()];
        // BTreeSet iteration keeps every adjacency list ascending without a sort.
        for &(i, j) in &unique {
            adj[i].push(j);
            adj[j].push(i);
        }
        debug_assert!(adj.iter().all(|list| list.windows(2).all(|w| w[0] < w[1])));

        Ok(SocialGraph {
            nodes,
            index,
            adj,
            edge_count: unique.len(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains(&self, id: &AccountId) -> bool {
        self.index.contains_key(id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &AccountId> {
        self.nodes.iter()
    }

    pub fn degree(&self, id: &AccountId) -> Option<usize> {
        self.index.get(id).map(|&i| self.adj[i].len())
    }

    /// Neighbors of `id` in ascending id order.
    pub fn neighbors(&self, id: &AccountId) -> Option<impl Iterator<Item = &AccountId>> {
        self.index
            .get(id)
            .map(|&i| self.adj[i].iter().map(move |&j| &self.nodes[j]))
    }

    /// Undirected edges as `(low, high)` id pairs, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (&AccountId, &AccountId)> {
        self.adj.iter().enumerate().flat_map(move |(i, list)| {
            list.iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (&self.nodes[i], &self.nodes[j]))
        })
    }
}

/// Parameters for [`influence_rank`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankConfig {
    /// Damping factor in `[0, 1]`. `1.0` selects the undamped recurrence
    /// with averaged-iterate convergence.
    pub damping: f64,
    /// Convergence threshold on the L1 change between successive tracked
    /// vectors. Must be positive.
    pub tolerance: f64,
    /// Iteration cap. Must be at least 1.
    pub max_iterations: usize,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            damping: 0.85,
            tolerance: 1e-9,
            max_iterations: 1000,
        }
    }
}

/// Converged (or capped) influence scores keyed by account id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    /// Score per account; entries sum to 1.
    pub scores: std::collections::BTreeMap<AccountId, f64>,
    /// Power-iteration steps performed.
    pub iterations: usize,
    /// Whether the L1 change dropped below the tolerance before the cap.
    pub converged: bool,
    /// L1 change observed on the last step.
    pub residual: f64,
}

impl RankVector {
    pub fn score(&self, id: &AccountId) -> Option<f64> {
        self.scores.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// One damped step of the recurrence; isolated-node mass is spread uniformly.
fn step(adj: &[Vec<usize>], current: &[f64], damping: f64) -> Vec<f64> {
    let n = current.len() as f64;
    let mut held = 0.0;
    for (i, list) in adj.iter().enumerate() {
        if list.is_empty() {
            held += current[i];
        }
    }
    let base = (1.0 - damping) / n + damping * held / n;
    adj.iter()
        .map(|list| {
            let mut acc = 0.0;
            for &j in list {
                acc += current[j] / adj[j].len() as f64;
            }
            base + damping * acc
        })
        .collect()
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Runs power iteration from the uniform vector until the tracked vector's
/// L1 change drops below `config.tolerance` or the iteration cap is hit.
///
/// For `damping < 1.0` the tracked vector is the iterate itself. For
/// `damping == 1.0` it is the average of the last two iterates, which
/// converges even on bipartite graphs where the raw iterate oscillates.
///
/// The result is returned either way; `converged` records which case
/// occurred. Scores always sum to 1 (up to rounding).
pub fn influence_rank(graph: &SocialGraph, config: &RankConfig) -> Result<RankVector, GraphError> {
    if !(0.0..=1.0).contains(&config.damping) {
        return Err(GraphError::InvalidConfig(format!(
            "damping must be in [0, 1], got {}",
            config.damping
        )));
    }
    if !(config.tolerance > 0.0 && config.tolerance.is_finite()) {
        return Err(GraphError::InvalidConfig(format!(
            "tolerance must be a positive finite number, got {}",
            config.tolerance
        )));
    }
    if config.max_iterations == 0 {
        return Err(GraphError::InvalidConfig(
            "max_iterations must be at least 1".into(),
        ));
    }
    let n = graph.node_count();
    if n == 0 {
        return Err(GraphError::EmptyGraph);
    }

    let average_iterates = config.damping == 1.0;
    let mut current = vec![1.0 / n as f64; n];
    let mut tracked = current.clone();
    let mut iterations = 0;
    let mut converged = false;
    let mut residual = f64::INFINITY;

    while iterations < config.max_iterations {
        iterations += 1;
        let next = step(&graph.adj, &current, config.damping);
        let new_tracked = if average_iterates {
            current
                .iter()
                .zip(&next)
                .map(|(a, b)| 0.5 * (a + b))
                .collect()
        } else {
            next.clone()
        };
        residual = l1_distance(&tracked, &new_tracked);
        tracked = new_tracked;
        current = next;
        if residual < config.tolerance {
            converged = true;
            break;
        }
    }

    let scores = graph
        .nodes
        .iter()
        .cloned()
        .zip(tracked.iter().copied())
        .collect();
    Ok(RankVector {
        scores,
        iterations,
        converged,
        residual,
    })
}

/// Top `k` accounts by score, descending; ties break on ascending id.
/// Returns fewer than `k` entries when the graph is smaller than `k`.
pub fn top_k_by_rank(ranks: &RankVector, k: usize) -> Vec<(AccountId, f64)> {
    let mut entries: Vec<(AccountId, f64)> = ranks
        .scores
        .iter()
        .map(|(id, &s)| (id.clone(), s))
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(k);
    entries
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn id(s: &str) -> AccountId {
        AccountId::new(s).unwrap()
    }

    fn ids(tokens: &[&str]) -> Vec<AccountId> {
        tokens.iter().map(|t| id(t)).collect()
    }

    fn pair(a: &str, b: &str) -> (AccountId, AccountId) {
        (id(a), id(b))
    }

    #[test]
    fn account_id_rejects_empty_and_whitespace() {
        assert!(AccountId::new("").is_err());
        assert!(AccountId::new("a b").is_err());
        assert!(AccountId::new("a\tb").is_err());
        assert!(AccountId::new("tsel_main").is_ok());
    }

    #[test]
    fn build_collapses_duplicate_and_reversed_edges() {
        let g = SocialGraph::build(
            ids(&["a", "b", "c"]),
            &[
                pair("a", "b"),
                pair("b", "a"),
                pair("a", "b"),
                pair("b", "c"),
            ],
        )
        .unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degree(&id("a")), Some(1));
        assert_eq!(g.degree(&id("b")), Some(2));
    }

    #[test]
    fn build_rejects_self_loop() {
        let err = SocialGraph::build(ids(&["a", "b"]), &[pair("a", "a")]).unwrap_err();
        assert_eq!(err, GraphError::SelfLoop(id("a")));
    }

    #[test]
    fn build_rejects_unknown_endpoint() {
        let err = SocialGraph::build(ids(&["a", "b"]), &[pair("a", "z")]).unwrap_err();
        assert_eq!(
            err,
            GraphError::UnknownEndpoint {
                src: id("a"),
                dst: id("z"),
                missing: id("z"),
            }
        );
    }

    #[test]
    fn build_rejects_duplicate_account() {
        let err = SocialGraph::build(ids(&["a", "b", "a"]), &[]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateAccount(id("a")));
    }

    #[test]
    fn build_rejects_empty_roster() {
        assert_eq!(
            SocialGraph::build(Vec::new(), &[]).unwrap_err(),
            GraphError::EmptyGraph
        );
    }

    #[test]
    fn isolated_nodes_are_kept() {
        let g = SocialGraph::build(ids(&["a", "b", "lone"]), &[pair("a", "b")]).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.degree(&id("lone")), Some(0));
    }

    #[test]
    fn edges_iterate_ascending_normalized() {
        let g =
            SocialGraph::build(ids(&["b", "a", "c"]), &[pair("c", "a"), pair("b", "a")]).unwrap();
        let listed: Vec<(String, String)> = g
            .edges()
            .map(|(x, y)| (x.to_string(), y.to_string()))
            .collect();
        assert_eq!(
            listed,
            vec![
                ("a".to_string(), "b".to_string()),
                ("a".to_string(), "c".to_string())
            ]
        );
    }

    #[test]
    fn triangle_ranks_uniformly() {
        let g = SocialGraph::build(
            ids(&["a", "b", "c"]),
            &[pair("a", "b"), pair("b", "c"), pair("a", "c")],
        )
        .unwrap();
        let ranks = influence_rank(&g, &RankConfig::default()).unwrap();
        assert!(ranks.converged);
        for &s in ranks.scores.values() {
            assert!((s - 1.0 / 3.0).abs() < 1e-12, "score {s}");
        }
    }

    #[test]
    fn path_at_full_damping_matches_degree_proportions() {
        // A - B - C, damping 1.0: the raw iterate alternates between
        // (1/3, 1/3, 1/3) and (1/6, 2/3, 1/6); the averaged iterate settles
        // on deg/2|E| = (1/4, 1/2, 1/4).
        let g =
            SocialGraph::build(ids(&["a", "b", "c"]), &[pair("a", "b"), pair("b", "c")]).unwrap();
        let ranks = influence_rank(
            &g,
            &RankConfig {
                damping: 1.0,
                ..RankConfig::default()
            },
        )
        .unwrap();
        assert!(ranks.converged);
        assert!((ranks.score(&id("a")).unwrap() - 0.25).abs() < 1e-12);
        assert!((ranks.score(&id("b")).unwrap() - 0.5).abs() < 1e-12);
        assert!((ranks.score(&id("c")).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn star_hub_score_matches_fixed_point() {
        // Star with 4 leaves at damping 0.85. Solving the fixed point by hand:
        // hub = 0.15/5 + 0.85 * 4 * leaf, leaf = 0.15/5 + 0.85 * hub / 4,
        // so hub = 88/185 and leaf = 97/740.
        let g = SocialGraph::build(
            ids(&["hub", "l1", "l2", "l3", "l4"]),
            &[
                pair("hub", "l1"),
                pair("hub", "l2"),
                pair("hub", "l3"),
                pair("hub", "l4"),
            ],
        )
        .unwrap();
        let ranks = influence_rank(
            &g,
            &RankConfig {
                tolerance: 1e-12,
                max_iterations: 10_000,
                ..RankConfig::default()
            },
        )
        .unwrap();
        assert!(ranks.converged);
        assert!((ranks.score(&id("hub")).unwrap() - 88.0 / 185.0).abs() < 1e-10);
        for leaf in ["l1", "l2", "l3", "l4"] {
            assert!((ranks.score(&id(leaf)).unwrap() - 97.0 / 740.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_damping_is_uniform() {
        let g = SocialGraph::build(ids(&["a", "b", "c", "d"]), &[pair("a", "b")]).unwrap();
        let ranks = influence_rank(
            &g,
            &RankConfig {
                damping: 0.0,
                ..RankConfig::default()
            },
        )
        .unwrap();
        assert!(ranks.converged);
        for &s in ranks.scores.values() {
            assert_eq!(s, 0.25);
        }
    }

    #[test]
    fn single_isolated_node_scores_one() {
        let g = SocialGraph::build(ids(&["only"]), &[]).unwrap();
        let ranks = influence_rank(&g, &RankConfig::default()).unwrap();
        assert!(ranks.converged);
        assert_eq!(ranks.score(&id("only")), Some(1.0));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let g = SocialGraph::build(
            ids(&["a", "b", "c", "d"]),
            &[pair("a", "b"), pair("b", "c"), pair("c", "d")],
        )
        .unwrap();
        let ranks = influence_rank(
            &g,
            &RankConfig {
                tolerance: 1e-15,
                max_iterations: 2,
                ..RankConfig::default()
            },
        )
        .unwrap();
        assert!(!ranks.converged);
        assert_eq!(ranks.iterations, 2);
        let total: f64 = ranks.scores.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let g = SocialGraph::build(ids(&["a"]), &[]).unwrap();
        for bad in [
            RankConfig {
                damping: -0.1,
                ..RankConfig::default()
            },
            RankConfig {
                damping: 1.1,
                ..RankConfig::default()
            },
            RankConfig {
                damping: f64::NAN,
                ..RankConfig::default()
            },
            RankConfig {
                tolerance: 0.0,
                ..RankConfig::default()
            },
            RankConfig {
                tolerance: -1e-9,
                ..RankConfig::default()
            },
            RankConfig {
                max_iterations: 0,
                ..RankConfig::default()
            },
        ] {
            assert!(matches!(
                influence_rank(&g, &bad),
                Err(GraphError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn top_k_orders_and_breaks_ties_by_id() {
        let scores = [("c", 0.5), ("a", 0.2), ("b", 0.2), ("d", 0.1)];
        let ranks = RankVector {
            scores: scores.iter().map(|(s, v)| (id(s), *v)).collect(),
            iterations: 1,
            converged: true,
            residual: 0.0,
        };
        let top = top_k_by_rank(&ranks, 3);
        let names: Vec<&str> = top.iter().map(|(i, _)| i.as_str()).collect();
        assert_eq!(names, vec!["c", "a", "b"]);
        assert_eq!(top_k_by_rank(&ranks, 10).len(), 4);
        assert!(top_k_by_rank(&ranks, 0).is_empty());
    }

    #[test]
    fn rank_is_bit_identical_across_runs() {
        let roster = ids(&["a", "b", "c", "d", "e", "f"]);
        let edges = [
            pair("a", "b"),
            pair("b", "c"),
            pair("c", "d"),
            pair("d", "a"),
            pair("e", "a"),
        ];
        let g1 = SocialGraph::build(roster.clone(), &edges).unwrap();
        let g2 = SocialGraph::build(roster, &edges).unwrap();
        let r1 = influence_rank(&g1, &RankConfig::default()).unwrap();
        let r2 = influence_rank(&g2, &RankConfig::default()).unwrap();
        for (a, b) in r1.scores.values().zip(r2.scores.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    /// Cycle graph on `n` nodes: every node has degree 2.
    fn cycle(n: usize) -> SocialGraph {
        let roster: Vec<AccountId> = (0..n).map(|i| id(&format!("n{i:03}"))).collect();
        let edges: Vec<(AccountId, AccountId)> = (0..n)
            .map(|i| (roster[i].clone(), roster[(i + 1) % n].clone()))
            .collect();
        SocialGraph::build(roster, &edges).unwrap()
    }

    /// Random graph encoded as node count plus an arbitrary pair list.
    fn arb_graph() -> impl Strategy<Value = SocialGraph> {
        (2usize..12).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..24).prop_map(move |pairs| {
                let roster: Vec<AccountId> = (0..n).map(|i| id(&format!("n{i:02}"))).collect();
                let edges: Vec<(AccountId, AccountId)> = pairs
                    .into_iter()
                    .filter(|(a, b)| a != b)
                    .map(|(a, b)| (roster[a].clone(), roster[b].clone()))
                    .collect();
                SocialGraph::build(roster, &edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn symmetric_graphs_rank_uniformly(n in 3usize..40) {
            let ranks = influence_rank(&cycle(n), &RankConfig::default()).unwrap();
            prop_assert!(ranks.converged);
            for &s in ranks.scores.values() {
                prop_assert!((s - 1.0 / n as f64).abs() < 1e-9);
            }
        }

        #[test]
        fn scores_total_one_for_any_damping(g in arb_graph(), d in 0.0f64..=1.0) {
            let ranks = influence_rank(
                &g,
                &RankConfig { damping: d, tolerance: 1e-10, max_iterations: 20_000 },
            )
            .unwrap();
            let total: f64 = ranks.scores.values().sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "sum {total} at damping {d}");
        }

        #[test]
        fn truncation_is_a_prefix(g in arb_graph(), k in 0usize..14) {
            let ranks = influence_rank(&g, &RankConfig::default()).unwrap();
            let full = top_k_by_rank(&ranks, g.node_count());
            let cut = top_k_by_rank(&ranks, k);
            prop_assert_eq!(&cut[..], &full[..k.min(full.len())]);
        }
    }
}
