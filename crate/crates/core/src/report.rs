//! Combined ranking reports and their export formats.
//!
//! A [`RankedReport`] answers three questions about one dataset in one
//! artifact: who leads structurally (top accounts by influence rank), who
//! leads behaviorally (per-category MOI rankings), and where the two
//! disagree (the divergence table). Divergence is ordinal: each account that
//! has an MOI value gets `rank_gap = moi_rank - ir_rank`, where both ranks
//! are 1-based positions within that same population, so a positive gap
//! means the account ranks worse by engagement than its network position
//! suggests.
//!
//! Exports are deterministic byte-for-byte: JSON objects carry their keys in
//! sorted order, CSV sections and DOT statements follow the canonical
//! orderings established upstream (taxonomy order, score order, id order).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engagement::{moi, EngagementError, EngagementMode, ZeroFollowerPolicy};
use crate::graph::{
    influence_rank, top_k_by_rank, AccountId, GraphError, RankConfig, RankVector, SocialGraph,
};
use crate::ingest::Dataset;

/// Parameters for [`build_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportConfig {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Entries kept in the influence-rank table.
    pub top_k: usize,
    pub zero_follower_policy: ZeroFollowerPolicy,
    /// Free-form dataset identifier echoed into the report.
    pub dataset_label: String,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            damping: 0.85,
            tolerance: 1e-9,
            max_iterations: 1000,
            top_k: 5,
            zero_follower_policy: ZeroFollowerPolicy::default(),
            dataset_label: "dataset".to_string(),
        }
    }
}

/// Echo of the inputs that produced a report, so exports are self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportContext {
    pub dataset: String,
    pub mode: EngagementMode,
    pub damping: f64,
    pub tolerance: f64,
    pub top_k: usize,
    pub zero_follower_policy: ZeroFollowerPolicy,
}

/// Convergence facts for the influence-rank computation inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMeta {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub id: AccountId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoiEntry {
    pub id: AccountId,
    pub moi: f64,
    pub post_count: usize,
}

/// One category's accounts, MOI descending, ties broken by ascending id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRanking {
    pub category: String,
    pub entries: Vec<MoiEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    NoPosts,
    ZeroFollowers,
}

impl std::fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExclusionReason::NoPosts => "no_posts",
            ExclusionReason::ZeroFollowers => "zero_followers",
        })
    }
}

/// Account left out of the MOI rankings under the skip policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: AccountId,
    pub reason: ExclusionReason,
}

/// Rank disagreement for one account. Ranks are 1-based positions among the
/// accounts that have an MOI value; influence rank is re-ranked within that
/// same population so the two ordinals are comparable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEntry {
    pub id: AccountId,
    pub ir_rank: usize,
    pub moi_rank: usize,
    pub rank_gap: i64,
}

/// The combined artifact; see the module docs for the field semantics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedReport {
    pub generated_for: ReportContext,
    pub rank_meta: RankMeta,
    pub ir_top: Vec<ScoreEntry>,
    pub moi_by_category: Vec<CategoryRanking>,
    pub exclusions: Vec<Exclusion>,
    /// Every MOI-ranked account, by |rank_gap| descending, then id.
    pub divergence: Vec<DivergenceEntry>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Engagement(#[from] EngagementError),
}

/// MOI rankings plus the accounts that could not be ranked.
#[derive(Debug, Clone, PartialEq)]
pub struct MoiSummary {
    /// One entry per taxonomy category, in taxonomy order; a category whose
    /// accounts were all excluded still appears, with an empty list.
    pub by_category: Vec<CategoryRanking>,
    /// All ranked accounts network-wide, MOI descending, ties by id.
    pub network: Vec<MoiEntry>,
    /// Ascending id order.
    pub exclusions: Vec<Exclusion>,
}

/// Computes MOI for every account in the dataset.
///
/// Accounts with an undefined MOI (no posts or zero followers) abort under
/// [`ZeroFollowerPolicy::Fail`] and are set aside under
/// [`ZeroFollowerPolicy::Skip`]. The fail-fast error names the first
/// offending account in id order, so it is deterministic.
pub fn moi_rankings(
    dataset: &Dataset,
    mode: EngagementMode,
    policy: ZeroFollowerPolicy,
) -> Result<MoiSummary, EngagementError> {
    let mut network: Vec<MoiEntry> = Vec::new();
    let mut exclusions: Vec<Exclusion> = Vec::new();

    for (id, profile) in &dataset.profiles {
        match moi(profile, dataset.posts_for(id), mode) {
            Ok(result) => network.push(MoiEntry {
                id: id.clone(),
                moi: result.moi,
                post_count: result.post_count,
            }),
            Err(e) => {
                let reason = match &e {
                    EngagementError::NoPosts(_) => ExclusionReason::NoPosts,
                    EngagementError::ZeroFollowers(_) => ExclusionReason::ZeroFollowers,
                    // A broken dataset invariant, never skippable.
                    EngagementError::AuthorMismatch { .. } => return Err(e),
                };
                match policy {
                    ZeroFollowerPolicy::Fail => return Err(e),
                    ZeroFollowerPolicy::Skip => exclusions.push(Exclusion {
                        id: id.clone(),
                        reason,
                    }),
                }
            }
        }
    }

    network.sort_by(|a, b| b.moi.total_cmp(&a.moi).then_with(|| a.id.cmp(&b.id)));

    let mut grouped: BTreeMap<&str, Vec<MoiEntry>> = BTreeMap::new();
    for entry in &network {
        let category = dataset.profiles[&entry.id].category.as_str();
        grouped.entry(category).or_default().push(entry.clone());
    }
    let mut by_category: Vec<CategoryRanking> = Vec::new();
    for label in &dataset.taxonomy {
        by_category.push(CategoryRanking {
            category: label.clone(),
            entries: grouped.remove(label.as_str()).unwrap_or_default(),
        });
    }
    // Categories outside the taxonomy cannot come from ingest; keep any that
    // hand-built datasets smuggle in, deterministically at the end.
    for (label, entries) in grouped {
        by_category.push(CategoryRanking {
            category: label.to_string(),
            entries,
        });
    }

    Ok(MoiSummary {
        by_category,
        network,
        exclusions,
    })
}

/// Builds the combined report: influence rank over the graph, MOI rankings
/// per category, and the divergence table over the MOI-ranked population.
///
/// Non-convergence of the rank computation is not an error here; it is
/// recorded in [`RankedReport::rank_meta`] for the caller to act on.
pub fn build_report(
    dataset: &Dataset,
    mode: EngagementMode,
    config: &ReportConfig,
) -> Result<RankedReport, ReportError> {
    let ranks = influence_rank(
        &dataset.graph,
        &RankConfig {
            damping: config.damping,
            tolerance: config.tolerance,
            max_iterations: config.max_iterations,
        },
    )?;
    let ir_top = top_k_by_rank(&ranks, config.top_k)
        .into_iter()
        .map(|(id, score)| ScoreEntry { id, score })
        .collect();

    let summary = moi_rankings(dataset, mode, config.zero_follower_policy)?;

    let ranked_ids: BTreeSet<&AccountId> = summary.network.iter().map(|e| &e.id).collect();
    let mut ir_rank_of: BTreeMap<AccountId, usize> = BTreeMap::new();
    let mut position = 0usize;
    for (id, _) in top_k_by_rank(&ranks, ranks.len()) {
        if ranked_ids.contains(&id) {
            position += 1;
            ir_rank_of.insert(id, position);
        }
    }
    let mut divergence: Vec<DivergenceEntry> = Vec::new();
    for (index, entry) in summary.network.iter().enumerate() {
        let Some(&ir_rank) = ir_rank_of.get(&entry.id) else {
            continue;
        };
        let moi_rank = index + 1;
        divergence.push(DivergenceEntry {
            id: entry.id.clone(),
            ir_rank,
            moi_rank,
            rank_gap: moi_rank as i64 - ir_rank as i64,
        });
    }
    divergence.sort_by(|a, b| {
        b.rank_gap
            .abs()
            .cmp(&a.rank_gap.abs())
            .then_with(|| a.id.cmp(&b.id))
    });

    Ok(RankedReport {
        generated_for: ReportContext {
            dataset: config.dataset_label.clone(),
            mode,
            damping: config.damping,
            tolerance: config.tolerance,
            top_k: config.top_k,
            zero_follower_policy: config.zero_follower_policy,
        },
        rank_meta: RankMeta {
            converged: ranks.converged,
            iterations: ranks.iterations,
            residual: ranks.residual,
        },
        ir_top,
        moi_by_category: summary.by_category,
        exclusions: summary.exclusions,
        divergence,
    })
}

/// Machine-readable export formats for [`export_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

fn csv_section(name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut out = format!("# section: {name}\n").into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("csv write to memory");
    for row in rows {
        w.write_record(&row).expect("csv write to memory");
    }
    out.extend_from_slice(&w.into_inner().expect("csv flush to memory"));
    out
}

/// Renders a report to one deterministic byte stream.
///
/// JSON output is pretty-printed with keys in sorted order and parses back
/// into an equal [`RankedReport`]. CSV output is a sequence of
/// `# section: <name>` blocks, one per report field, each with a stable
/// header that is present even when the section is empty.
pub fn export_report(report: &RankedReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let value = serde_json::to_value(report).expect("report values are finite");
            let mut text = serde_json::to_string_pretty(&value).expect("valid json value");
            text.push('\n');
            text
        }
        ReportFormat::Csv => {
            let ctx = &report.generated_for;
            let meta_rows = vec![
                vec!["dataset".to_string(), ctx.dataset.clone()],
                vec!["mode".to_string(), ctx.mode.to_string()],
                vec!["damping".to_string(), ctx.damping.to_string()],
                vec!["tolerance".to_string(), ctx.tolerance.to_string()],
                vec!["top_k".to_string(), ctx.top_k.to_string()],
                vec![
                    "zero_follower_policy".to_string(),
                    ctx.zero_follower_policy.to_string(),
                ],
                vec![
                    "converged".to_string(),
                    report.rank_meta.converged.to_string(),
                ],
                vec![
                    "iterations".to_string(),
                    report.rank_meta.iterations.to_string(),
                ],
                vec![
                    "residual".to_string(),
                    report.rank_meta.residual.to_string(),
                ],
            ];
            let ir_rows = report
                .ir_top
                .iter()
                .enumerate()
                .map(|(i, e)| vec![(i + 1).to_string(), e.id.to_string(), e.score.to_string()])
                .collect();
            let mut moi_rows = Vec::new();
            for ranking in &report.moi_by_category {
                for (i, e) in ranking.entries.iter().enumerate() {
                    moi_rows.push(vec![
                        ranking.category.clone(),
                        (i + 1).to_string(),
                        e.id.to_string(),
                        e.moi.to_string(),
                        e.post_count.to_string(),
                    ]);
                }
            }
            let exclusion_rows = report
                .exclusions
                .iter()
                .map(|e| vec![e.id.to_string(), e.reason.to_string()])
                .collect();
            let divergence_rows = report
                .divergence
                .iter()
                .map(|e| {
                    vec![
                        e.id.to_string(),
                        e.ir_rank.to_string(),
                        e.moi_rank.to_string(),
                        e.rank_gap.to_string(),
                    ]
                })
                .collect();

            let sections = [
                csv_section("meta", &["key", "value"], meta_rows),
                csv_section("ir_top", &["rank", "id", "score"], ir_rows),
                csv_section(
                    "moi_by_category",
                    &["category", "rank", "id", "moi", "post_count"],
                    moi_rows,
                ),
                csv_section("exclusions", &["id", "reason"], exclusion_rows),
                csv_section(
                    "divergence",
                    &["id", "ir_rank", "moi_rank", "rank_gap"],
                    divergence_rows,
                ),
            ];
            let joined = sections.join(&b"\n"[..]);
            String::from_utf8(joined).expect("csv sections are utf-8")
        }
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the graph in DOT, one node statement per account (ascending id)
/// with its influence score as an `ir` attribute, then one edge statement
/// per undirected edge (ascending normalized pairs).
pub fn export_dot(graph: &SocialGraph, ranks: &RankVector) -> String {
    let mut out = String::from("graph influence {\n");
    for id in graph.nodes() {
        let score = ranks.score(id).unwrap_or(0.0);
        out.push_str(&format!(
            "  \"{}\" [ir=\"{}\"];\n",
            dot_escape(id.as_str()),
            score
        ));
    }
    for (a, b) in graph.edges() {
        out.push_str(&format!(
            "  \"{}\" -- \"{}\";\n",
            dot_escape(a.as_str()),
            dot_escape(b.as_str())
        ));
    }
    out.push('}');
    out.push('\n');
    out
}
