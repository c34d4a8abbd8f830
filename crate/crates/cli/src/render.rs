//! Documents for each subcommand. Text output is aligned tables for people
//! reading a terminal; JSON and CSV follow the same conventions as the
//! report exports (sorted JSON keys, `# section:` CSV blocks) so every
//! command shares one machine-readable shape. Numbers keep full precision
//! in all three formats.

use serde_json::json;

use moirank_core::graph::{AccountId, RankVector};
use moirank_core::ingest::ValidationReport;
use moirank_core::report::{CategoryRanking, Exclusion, MoiSummary, RankedReport};

use crate::config::{OutputFormat, RunConfig};
use crate::CliError;

/// Rejects the graph-only format for commands that produce tables.
pub fn require_tabular(format: OutputFormat, command: &str) -> Result<(), CliError> {
    if format == OutputFormat::Dot {
        return Err(CliError::Usage(format!(
            "dot output is only available for the report command, not {command}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Align {
    Left,
    Right,
}

/// Renders a header row plus data rows as two-space separated columns sized
/// to their widest cell. No trailing whitespace on any line.
fn table(columns: &[(&str, Align)], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = columns.iter().map(|(h, _)| h.chars().count()).collect();
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }

    let render_row = |cells: &[&str]| -> String {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            let pad = widths[i] - cell.chars().count();
            match columns[i].1 {
                Align::Right => {
                    line.extend(std::iter::repeat_n(' ', pad));
                    line.push_str(cell);
                }
                Align::Left => {
                    line.push_str(cell);
                    if i + 1 < cells.len() {
                        line.extend(std::iter::repeat_n(' ', pad));
                    }
                }
            }
        }
        line
    };

    let headers: Vec<&str> = columns.iter().map(|(h, _)| *h).collect();
    let mut out = render_row(&headers);
    out.push('\n');
    for row in rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        out.push_str(&render_row(&cells));
        out.push('\n');
    }
    out
}

/// Same block layout as the CSV report export: a `# section: <name>` line
/// followed by a header record and the rows.
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

fn join_sections(sections: Vec<Vec<u8>>) -> String {
    String::from_utf8(sections.join(&b"\n"[..])).expect("csv sections are utf-8")
}

fn pretty(value: serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(&value).expect("valid json value");
    text.push('\n');
    text
}

fn convergence_line(converged: bool, iterations: usize, residual: f64) -> String {
    if converged {
        format!("converged after {iterations} iterations (residual {residual})")
    } else {
        format!("did not converge within {iterations} iterations (residual {residual})")
    }
}

/// Settings rows shared by the ir, moi, and report CSV exports.
fn meta_rows(pairs: &[(&str, String)]) -> Vec<Vec<String>> {
    pairs
        .iter()
        .map(|(k, v)| vec![k.to_string(), v.clone()])
        .collect()
}

pub fn validation_doc(report: &ValidationReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Text => {
            let status = if report.is_valid() {
                "valid"
            } else {
                "invalid"
            };
            format!(
                "accounts: {} records\nedges: {} records\nposts: {} records\nerrors: {}\nwarnings: {}\nstatus: {}\n",
                report.counts.accounts,
                report.counts.edges,
                report.counts.posts,
                report.errors.len(),
                report.warnings.len(),
                status
            )
        }
        OutputFormat::Json => {
            let mut value = serde_json::to_value(report).expect("report values are plain data");
            value["valid"] = json!(report.is_valid());
            pretty(value)
        }
        OutputFormat::Csv => {
            let issue_rows = |issues: &[moirank_core::ingest::Issue]| -> Vec<Vec<String>> {
                issues
                    .iter()
                    .map(|i| {
                        vec![
                            i.file.to_string(),
                            i.line.map(|l| l.to_string()).unwrap_or_default(),
                            i.code.to_string(),
                            i.message.clone(),
                        ]
                    })
                    .collect()
            };
            let counts = vec![
                vec!["accounts".to_string(), report.counts.accounts.to_string()],
                vec!["edges".to_string(), report.counts.edges.to_string()],
                vec!["posts".to_string(), report.counts.posts.to_string()],
            ];
            join_sections(vec![
                csv_section("counts", &["file", "records"], counts),
                csv_section(
                    "errors",
                    &["file", "line", "code", "message"],
                    issue_rows(&report.errors),
                ),
                csv_section(
                    "warnings",
                    &["file", "line", "code", "message"],
                    issue_rows(&report.warnings),
                ),
            ])
        }
        OutputFormat::Dot => unreachable!("rejected by require_tabular"),
    }
}

pub fn ir_doc(ranks: &RankVector, top: &[(AccountId, f64)], cfg: &RunConfig) -> String {
    match cfg.format {
        OutputFormat::Text => {
            let rows: Vec<Vec<String>> = top
                .iter()
                .enumerate()
                .map(|(i, (id, score))| {
                    vec![(i + 1).to_string(), id.to_string(), score.to_string()]
                })
                .collect();
            format!(
                "influence rank (damping {}, tolerance {})\n{}\n\n{}",
                cfg.damping,
                cfg.tol,
                convergence_line(ranks.converged, ranks.iterations, ranks.residual),
                table(
                    &[
                        ("rank", Align::Right),
                        ("account", Align::Left),
                        ("score", Align::Right),
                    ],
                    &rows,
                )
            )
        }
        OutputFormat::Json => pretty(json!({
            "damping": cfg.damping,
            "tolerance": cfg.tol,
            "max_iterations": cfg.max_iter,
            "converged": ranks.converged,
            "iterations": ranks.iterations,
            "residual": ranks.residual,
            "top": top
                .iter()
                .enumerate()
                .map(|(i, (id, score))| {
                    json!({"rank": i + 1, "id": id.as_str(), "score": score})
                })
                .collect::<Vec<_>>(),
        })),
        OutputFormat::Csv => {
            let meta = meta_rows(&[
                ("damping", cfg.damping.to_string()),
                ("tolerance", cfg.tol.to_string()),
                ("max_iterations", cfg.max_iter.to_string()),
                ("converged", ranks.converged.to_string()),
                ("iterations", ranks.iterations.to_string()),
                ("residual", ranks.residual.to_string()),
            ]);
            let rows = top
                .iter()
                .enumerate()
                .map(|(i, (id, score))| {
                    vec![(i + 1).to_string(), id.to_string(), score.to_string()]
                })
                .collect();
            join_sections(vec![
                csv_section("meta", &["key", "value"], meta),
                csv_section("ir_top", &["rank", "id", "score"], rows),
            ])
        }
        OutputFormat::Dot => unreachable!("rejected by require_tabular"),
    }
}

fn category_tables(rankings: &[CategoryRanking]) -> String {
    let mut out = String::new();
    for ranking in rankings {
        out.push_str(&format!("category: {}\n", ranking.category));
        if ranking.entries.is_empty() {
            out.push_str("(no ranked accounts)\n");
        } else {
            let rows: Vec<Vec<String>> = ranking
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    vec![
                        (i + 1).to_string(),
                        e.id.to_string(),
                        e.moi.to_string(),
                        e.post_count.to_string(),
                    ]
                })
                .collect();
            out.push_str(&table(
                &[
                    ("rank", Align::Right),
                    ("account", Align::Left),
                    ("moi", Align::Right),
                    ("posts", Align::Right),
                ],
                &rows,
            ));
        }
        out.push('\n');
    }
    out
}

fn exclusion_block(exclusions: &[Exclusion]) -> String {
    if exclusions.is_empty() {
        return "excluded accounts: none\n".to_string();
    }
    let rows: Vec<Vec<String>> = exclusions
        .iter()
        .map(|e| vec![e.id.to_string(), e.reason.to_string()])
        .collect();
    format!(
        "excluded accounts\n{}",
        table(&[("account", Align::Left), ("reason", Align::Left)], &rows)
    )
}

fn moi_category_csv_rows(rankings: &[CategoryRanking]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for ranking in rankings {
        for (i, e) in ranking.entries.iter().enumerate() {
            rows.push(vec![
                ranking.category.clone(),
                (i + 1).to_string(),
                e.id.to_string(),
                e.moi.to_string(),
                e.post_count.to_string(),
            ]);
        }
    }
    rows
}

fn exclusion_csv_rows(exclusions: &[Exclusion]) -> Vec<Vec<String>> {
    exclusions
        .iter()
        .map(|e| vec![e.id.to_string(), e.reason.to_string()])
        .collect()
}

pub fn moi_doc(summary: &MoiSummary, cfg: &RunConfig) -> String {
    match cfg.format {
        OutputFormat::Text => {
            format!(
                "magnitude of influence ({} mode, {} policy)\n\n{}{}",
                cfg.mode,
                cfg.policy,
                category_tables(&summary.by_category),
                exclusion_block(&summary.exclusions)
            )
        }
        OutputFormat::Json => pretty(json!({
            "mode": cfg.mode.to_string(),
            "zero_follower_policy": cfg.policy.to_string(),
            "categories": serde_json::to_value(&summary.by_category)
                .expect("rankings are plain data"),
            "exclusions": serde_json::to_value(&summary.exclusions)
                .expect("exclusions are plain data"),
        })),
        OutputFormat::Csv => {
            let meta = meta_rows(&[
                ("mode", cfg.mode.to_string()),
                ("zero_follower_policy", cfg.policy.to_string()),
            ]);
            join_sections(vec![
                csv_section("meta", &["key", "value"], meta),
                csv_section(
                    "moi_by_category",
                    &["category", "rank", "id", "moi", "post_count"],
                    moi_category_csv_rows(&summary.by_category),
                ),
                csv_section(
                    "exclusions",
                    &["id", "reason"],
                    exclusion_csv_rows(&summary.exclusions),
                ),
            ])
        }
        OutputFormat::Dot => unreachable!("rejected by require_tabular"),
    }
}

/// The human-readable face of the combined report; JSON and CSV renderings
/// come from the core exporter instead.
pub fn report_text(report: &RankedReport) -> String {
    let ctx = &report.generated_for;
    let meta = &report.rank_meta;

    let ir_rows: Vec<Vec<String>> = report
        .ir_top
        .iter()
        .enumerate()
        .map(|(i, e)| vec![(i + 1).to_string(), e.id.to_string(), e.score.to_string()])
        .collect();
    let divergence_rows: Vec<Vec<String>> = report
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

    let mut out = String::new();
    out.push_str("influence and engagement report\n");
    out.push_str(&format!("dataset: {}\n", ctx.dataset));
    out.push_str(&format!(
        "mode: {}; damping: {}; tolerance: {}; top_k: {}; zero_follower_policy: {}\n",
        ctx.mode, ctx.damping, ctx.tolerance, ctx.top_k, ctx.zero_follower_policy
    ));
    out.push_str(&convergence_line(
        meta.converged,
        meta.iterations,
        meta.residual,
    ));
    out.push_str("\n\ntop accounts by influence rank\n");
    out.push_str(&table(
        &[
            ("rank", Align::Right),
            ("account", Align::Left),
            ("score", Align::Right),
        ],
        &ir_rows,
    ));
    out.push_str("\nmagnitude of influence by category\n\n");
    out.push_str(&category_tables(&report.moi_by_category));
    out.push_str(&exclusion_block(&report.exclusions));
    out.push_str("\nrank divergence (gap = moi_rank - ir_rank)\n");
    out.push_str(&table(
        &[
            ("account", Align::Left),
            ("ir_rank", Align::Right),
            ("moi_rank", Align::Right),
            ("gap", Align::Right),
        ],
        &divergence_rows,
    ));
    out
}
