//! Dataset loading, validation, and canonical serialization.
//!
//! A dataset is three files: an account roster (CSV), an undirected edge
//! list (CSV), and a post archive (JSON Lines). Parsing is total: a bad
//! record never aborts the file, it produces an [`Issue`] carrying the file
//! role, the 1-based line number, and a stable code, and parsing moves on.
//! Fatal problems accumulate in [`ValidationReport::errors`]; recoverable
//! ones (duplicate edges, duplicate engagers, self-engagement) are repaired
//! and logged in [`ValidationReport::warnings`].
//!
//! The roster may open with a `# taxonomy: a,b,c` directive that fixes the
//! category vocabulary and its presentation order. Without it the taxonomy
//! is inferred from category values in first-appearance order. The canonical
//! writer always emits the directive, so a load/write/load round trip
//! preserves the taxonomy exactly, along with everything else: loading a
//! canonically written dataset yields an equal [`Dataset`].
//!
//! All inputs are UTF-8; a leading byte-order mark is tolerated and both LF
//! and CRLF line endings are accepted. Canonical output is LF.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::engagement::{AccountProfile, Post, PostId};
use crate::graph::{AccountId, SocialGraph};

const ACCOUNTS_HEADER: [&str; 4] = ["id", "handle", "category", "follower_count"];
const EDGES_HEADER: [&str; 2] = ["src", "dst"];
const TAXONOMY_DIRECTIVE: &str = "# taxonomy:";

/// Which input file an issue belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFile {
    Accounts,
    Edges,
    Posts,
}

impl fmt::Display for InputFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFile::Accounts => "accounts",
            InputFile::Edges => "edges",
            InputFile::Posts => "posts",
        })
    }
}

/// Stable machine-readable issue classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IssueCode {
    MalformedRecord,
    DuplicateAccountId,
    NegativeFollowerCount,
    UnknownCategory,
    SelfLoop,
    UnknownEndpoint,
    DuplicateEdge,
    UnknownAuthor,
    DuplicatePostId,
    DuplicateEngager,
    SelfEngagement,
    EmptyDataset,
    Io,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One problem found during ingestion, tied to its source location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub file: InputFile,
    /// 1-based line in the source file; absent for whole-file problems.
    pub line: Option<u64>,
    pub code: IssueCode,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}: {}", self.file, line, self.code, self.message),
            None => write!(f, "{}: {}: {}", self.file, self.code, self.message),
        }
    }
}

/// Records accepted per file, after deduplication.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordCounts {
    pub accounts: usize,
    pub edges: usize,
    pub posts: usize,
}

/// Outcome of validating a dataset: errors block loading, warnings do not.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
    pub counts: RecordCounts,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_io_errors(&self) -> bool {
        self.errors.iter().any(|i| i.code == IssueCode::Io)
    }

    fn error(&mut self, file: InputFile, line: Option<u64>, code: IssueCode, message: String) {
        self.errors.push(Issue {
            file,
            line,
            code,
            message,
        });
    }

    fn warning(&mut self, file: InputFile, line: Option<u64>, code: IssueCode, message: String) {
        self.warnings.push(Issue {
            file,
            line,
            code,
            message,
        });
    }
}

/// A fully validated dataset, canonically ordered.
///
/// `posts` holds only authors with at least one post, each history ascending
/// by post id. Two loads of equivalent inputs compare equal whatever the
/// record order of the source files was.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub profiles: BTreeMap<AccountId, AccountProfile>,
    pub graph: SocialGraph,
    pub posts: BTreeMap<AccountId, Vec<Post>>,
    /// Category vocabulary in presentation order.
    pub taxonomy: Vec<String>,
}

impl Dataset {
    pub fn account_count(&self) -> usize {
        self.profiles.len()
    }

    pub fn post_count(&self) -> usize {
        self.posts.values().map(Vec::len).sum()
    }

    /// Post history for `id` in ascending post id order; empty if none.
    pub fn posts_for(&self, id: &AccountId) -> &[Post] {
        self.posts.get(id).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Locations of the three dataset files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub accounts: PathBuf,
    pub edges: PathBuf,
    pub posts: PathBuf,
}

/// Result of a successful load: the dataset plus the (possibly warning-
/// carrying) validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub dataset: Dataset,
    pub report: ValidationReport,
}

/// Roster parse result: profiles in input order plus the taxonomy, either
/// declared by directive or inferred from first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedAccounts {
    pub profiles: Vec<AccountProfile>,
    pub taxonomy: Vec<String>,
}

/// Consumes a UTF-8 byte-order mark if the stream starts with one.
fn strip_bom<R: BufRead>(reader: &mut R) -> io::Result<()> {
    let buf = reader.fill_buf()?;
    if buf.starts_with(&[0xEF, 0xBB, 0xBF]) {
        reader.consume(3);
    }
    Ok(())
}

/// Reads one line as raw bytes, without the trailing newline. Returns
/// `None` at end of input.
fn read_line_bytes<R: BufRead>(reader: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut buf = Vec::new();
    let n = reader.read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
    }
    if buf.last() == Some(&b'\r') {
        buf.pop();
    }
    Ok(Some(buf))
}

fn check_header(
    got: &csv::StringRecord,
    want: &[&str],
    file: InputFile,
    line: u64,
    report: &mut ValidationReport,
) -> bool {
    if got.len() == want.len() && got.iter().zip(want).all(|(g, w)| g == *w) {
        return true;
    }
    let found: Vec<&str> = got.iter().collect();
    report.error(
        file,
        Some(line),
        IssueCode::MalformedRecord,
        format!(
            "expected header `{}`, found `{}`",
            want.join(","),
            found.join(",")
        ),
    );
    false
}

/// Records a CSV-level parse failure (wrong field count, broken quoting,
/// invalid UTF-8) against the right line. I/O failures end the file.
fn record_csv_error(
    err: &csv::Error,
    file: InputFile,
    offset: u64,
    report: &mut ValidationReport,
) -> bool {
    if let csv::ErrorKind::Io(io_err) = err.kind() {
        report.error(file, None, IssueCode::Io, io_err.to_string());
        return false;
    }
    let line = err.position().map(|p| p.line() + offset);
    report.error(file, line, IssueCode::MalformedRecord, err.to_string());
    true
}

/// Parses and validates a taxonomy directive line. Labels are trimmed and
/// must be non-empty, comma-free by construction, and unique.
fn parse_taxonomy_directive(line: &str, report: &mut ValidationReport) -> Option<Vec<String>> {
    let rest = &line[TAXONOMY_DIRECTIVE.len()..];
    let labels: Vec<String> = rest.split(',').map(|s| s.trim().to_string()).collect();
    if labels.iter().any(String::is_empty) {
        report.error(
            InputFile::Accounts,
            Some(1),
            IssueCode::MalformedRecord,
            "taxonomy directive contains an empty category label".to_string(),
        );
        return None;
    }
    let mut seen = BTreeSet::new();
    for label in &labels {
        if !seen.insert(label) {
            report.error(
                InputFile::Accounts,
                Some(1),
                IssueCode::MalformedRecord,
                format!("taxonomy directive repeats category `{label}`"),
            );
            return None;
        }
    }
    Some(labels)
}

/// Parses the account roster.
///
/// The stream may open with a `# taxonomy:` directive; the CSV header
/// `id,handle,category,follower_count` is required either way. Every
/// malformed record yields exactly one error and is skipped.
pub fn parse_accounts<R: BufRead>(mut reader: R, report: &mut ValidationReport) -> ParsedAccounts {
    let file = InputFile::Accounts;
    let mut profiles: Vec<AccountProfile> = Vec::new();
    let mut taxonomy: Vec<String> = Vec::new();
    let mut declared = false;
    let mut offset = 0u64;

    if let Err(e) = strip_bom(&mut reader) {
        report.error(file, None, IssueCode::Io, e.to_string());
        return ParsedAccounts { profiles, taxonomy };
    }

    // Peek at the first line for the optional directive; anything else is
    // handed back to the CSV reader untouched.
    let mut replay: Vec<u8> = Vec::new();
    match read_line_bytes(&mut reader) {
        Err(e) => {
            report.error(file, None, IssueCode::Io, e.to_string());
            return ParsedAccounts { profiles, taxonomy };
        }
        Ok(None) => {}
        Ok(Some(bytes)) => match String::from_utf8(bytes) {
            Err(e) => {
                // Not a directive; let the CSV reader report it in place.
                replay = e.into_bytes();
                replay.push(b'\n');
            }
            Ok(line) => {
                if let Some(stripped) = line.strip_prefix('#') {
                    offset = 1;
                    if line.starts_with(TAXONOMY_DIRECTIVE) {
                        if let Some(labels) = parse_taxonomy_directive(line.trim_end(), report) {
                            taxonomy = labels;
                            declared = true;
                        }
                    } else {
                        report.error(
                            file,
                            Some(1),
                            IssueCode::MalformedRecord,
                            format!("unrecognized directive `#{}`", stripped.trim_end()),
                        );
                    }
                } else {
                    replay = line.into_bytes();
                    replay.push(b'\n');
                }
            }
        },
    }

    let chained = io::Cursor::new(replay).chain(reader);
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(chained);

    match csv_reader.headers() {
        Err(e) => {
            record_csv_error(&e, file, offset, report);
            return ParsedAccounts { profiles, taxonomy };
        }
        Ok(header) => {
            if !check_header(header, &ACCOUNTS_HEADER, file, 1 + offset, report) {
                return ParsedAccounts { profiles, taxonomy };
            }
        }
    }

    let mut seen: BTreeMap<AccountId, u64> = BTreeMap::new();
    for result in csv_reader.records() {
        let record = match result {
            Ok(record) => record,
            Err(e) => {
                if record_csv_error(&e, file, offset, report) {
                    continue;
                }
                break;
            }
        };
        let line = record.position().map(|p| p.line() + offset);

        let id = match AccountId::new(&record[0]) {
            Ok(id) => id,
            Err(e) => {
                report.error(file, line, IssueCode::MalformedRecord, e.to_string());
                continue;
            }
        };
        if let Some(first) = seen.get(&id) {
            report.error(
                file,
                line,
                IssueCode::DuplicateAccountId,
                format!("account `{id}` already defined at line {first}"),
            );
            continue;
        }

        let category = record[2].to_string();
        if category.trim() != category || category.is_empty() || category.contains(',') {
            report.error(
                file,
                line,
                IssueCode::MalformedRecord,
                format!("category {category:?} must be non-empty, trimmed, and comma-free"),
            );
            continue;
        }
        if declared && !taxonomy.contains(&category) {
            report.error(
                file,
                line,
                IssueCode::UnknownCategory,
                format!("category `{category}` is not in the declared taxonomy"),
            );
            continue;
        }

        let raw_count = &record[3];
        let follower_count = match raw_count.parse::<u64>() {
            Ok(n) => n,
            Err(_) => {
                if raw_count.parse::<i64>().map(|n| n < 0).unwrap_or(false) {
                    report.error(
                        file,
                        line,
                        IssueCode::NegativeFollowerCount,
                        format!("follower_count {raw_count} is negative"),
                    );
                } else {
                    report.error(
                        file,
                        line,
                        IssueCode::MalformedRecord,
                        format!("follower_count {raw_count:?} is not a non-negative integer"),
                    );
                }
                continue;
            }
        };

        if !declared && !taxonomy.contains(&category) {
            taxonomy.push(category.clone());
        }
        seen.insert(id.clone(), line.unwrap_or(0));
        profiles.push(AccountProfile {
            id,
            handle: record[1].to_string(),
            category,
            follower_count,
        });
    }

    report.counts.accounts = profiles.len();
    ParsedAccounts { profiles, taxonomy }
}

/// Parses the edge list against a known roster.
///
/// Self-loops and unknown endpoints are errors. Duplicate edges, including
/// reversed duplicates, collapse to one with a warning. Returned pairs are
/// normalized `(low, high)`.
pub fn parse_edges<R: BufRead>(
    mut reader: R,
    known: &BTreeSet<AccountId>,
    report: &mut ValidationReport,
) -> Vec<(AccountId, AccountId)> {
    let file = InputFile::Edges;
    let mut edges: Vec<(AccountId, AccountId)> = Vec::new();

    if let Err(e) = strip_bom(&mut reader) {
        report.error(file, None, IssueCode::Io, e.to_string());
        return edges;
    }

    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    match csv_reader.headers() {
        Err(e) => {
            record_csv_error(&e, file, 0, report);
            return edges;
        }
        Ok(header) => {
            if !check_header(header, &EDGES_HEADER, file, 1, report) {
                return edges;
            }
        }
    }

    let mut seen: BTreeSet<(AccountId, AccountId)> = BTreeSet::new();
    for result in csv_reader.records() {
        let record = match result {
            Ok(record) => record,
            Err(e) => {
                if record_csv_error(&e, file, 0, report) {
                    continue;
                }
                break;
            }
        };
        let line = record.position().map(|p| p.line());

        let endpoint = |token: &str| -> Result<AccountId, String> {
            let id = AccountId::new(token).map_err(|e| e.to_string())?;
            if known.contains(&id) {
                Ok(id)
            } else {
                Err(format!("unknown account `{id}`"))
            }
        };
        let src = &record[0];
        let dst = &record[1];
        let (a, b) = match (endpoint(src), endpoint(dst)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(msg), _) | (_, Err(msg)) => {
                let code = if msg.starts_with("unknown account") {
                    IssueCode::UnknownEndpoint
                } else {
                    IssueCode::MalformedRecord
                };
                report.error(file, line, code, format!("edge ({src}, {dst}): {msg}"));
                continue;
            }
        };
        if a == b {
            report.error(
                file,
                line,
                IssueCode::SelfLoop,
                format!("edge ({a}, {b}) is a self-loop"),
            );
            continue;
        }
        let pair = if a <= b { (a, b) } else { (b, a) };
        if !seen.insert(pair.clone()) {
            report.warning(
                file,
                line,
                IssueCode::DuplicateEdge,
                format!(
                    "edge ({}, {}) repeats an earlier edge; collapsed",
                    pair.0, pair.1
                ),
            );
            continue;
        }
        edges.push(pair);
    }

    report.counts.edges = edges.len();
    edges
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPost {
    post_id: String,
    author: String,
    #[serde(default)]
    likers: Vec<String>,
    #[serde(default)]
    mentioners: Vec<String>,
    #[serde(default)]
    retweeters: Vec<String>,
}

/// Parses the post archive (one JSON object per line).
///
/// Blank lines are skipped. Authors must be known accounts; engagers need
/// not be (audiences extend beyond the roster). Duplicate engagers within a
/// list and self-engagement are repaired with warnings; duplicate post ids
/// and unknown authors are errors.
pub fn parse_posts<R: BufRead>(
    mut reader: R,
    known: &BTreeSet<AccountId>,
    report: &mut ValidationReport,
) -> Vec<Post> {
    let file = InputFile::Posts;
    let mut posts: Vec<Post> = Vec::new();

    if let Err(e) = strip_bom(&mut reader) {
        report.error(file, None, IssueCode::Io, e.to_string());
        return posts;
    }

    let mut seen: BTreeMap<PostId, u64> = BTreeMap::new();
    let mut line_no = 0u64;
    loop {
        line_no += 1;
        let bytes = match read_line_bytes(&mut reader) {
            Ok(Some(bytes)) => bytes,
            Ok(None) => break,
            Err(e) => {
                report.error(file, None, IssueCode::Io, e.to_string());
                break;
            }
        };
        let line = Some(line_no);
        let text = match String::from_utf8(bytes) {
            Ok(text) => text,
            Err(_) => {
                report.error(
                    file,
                    line,
                    IssueCode::MalformedRecord,
                    "line is not valid UTF-8".to_string(),
                );
                continue;
            }
        };
        if text.trim().is_empty() {
            continue;
        }
        let raw: RawPost = match serde_json::from_str(&text) {
            Ok(raw) => raw,
            Err(e) => {
                report.error(file, line, IssueCode::MalformedRecord, e.to_string());
                continue;
            }
        };

        let post_id = match PostId::new(raw.post_id) {
            Ok(id) => id,
            Err(e) => {
                report.error(file, line, IssueCode::MalformedRecord, e.to_string());
                continue;
            }
        };
        if let Some(first) = seen.get(&post_id) {
            report.error(
                file,
                line,
                IssueCode::DuplicatePostId,
                format!("post `{post_id}` already defined at line {first}"),
            );
            continue;
        }
        let author = match AccountId::new(raw.author) {
            Ok(id) => id,
            Err(e) => {
                report.error(file, line, IssueCode::MalformedRecord, e.to_string());
                continue;
            }
        };
        if !known.contains(&author) {
            report.error(
                file,
                line,
                IssueCode::UnknownAuthor,
                format!("post `{post_id}` has unknown author `{author}`"),
            );
            continue;
        }

        let mut parse_engagers = |field: &str, raw: Vec<String>| -> Option<Vec<AccountId>> {
            let mut out = Vec::with_capacity(raw.len());
            let mut dedup = BTreeSet::new();
            let mut repeated = BTreeSet::new();
            let mut selfish = false;
            for token in raw {
                let id = match AccountId::new(token) {
                    Ok(id) => id,
                    Err(e) => {
                        report.error(
                            file,
                            line,
                            IssueCode::MalformedRecord,
                            format!("{field}: {e}"),
                        );
                        return None;
                    }
                };
                if id == author {
                    selfish = true;
                    continue;
                }
                if !dedup.insert(id.clone()) {
                    repeated.insert(id);
                    continue;
                }
                out.push(id);
            }
            if !repeated.is_empty() {
                let listing: Vec<String> = repeated.iter().map(|r| r.to_string()).collect();
                report.warning(
                    file,
                    line,
                    IssueCode::DuplicateEngager,
                    format!(
                        "post `{post_id}`: {field} repeats {}; deduplicated",
                        listing.join(", ")
                    ),
                );
            }
            if selfish {
                report.warning(
                    file,
                    line,
                    IssueCode::SelfEngagement,
                    format!("post `{post_id}`: author `{author}` in {field}; dropped"),
                );
            }
            Some(out)
        };

        let likers = parse_engagers("likers", raw.likers);
        let mentioners = parse_engagers("mentioners", raw.mentioners);
        let retweeters = parse_engagers("retweeters", raw.retweeters);
        let (Some(likers), Some(mentioners), Some(retweeters)) = (likers, mentioners, retweeters)
        else {
            continue;
        };

        seen.insert(post_id.clone(), line_no);
        posts.push(Post::new(post_id, author, likers, mentioners, retweeters));
    }

    report.counts.posts = posts.len();
    posts
}

/// Loads and cross-validates the three dataset files.
///
/// All problems the inputs contain are gathered into one report; any error
/// (including an unreadable file) fails the load and returns the report.
/// Warnings alone do not block: they ride along inside [`Loaded`].
pub fn load_dataset(paths: &DatasetPaths) -> Result<Loaded, ValidationReport> {
    let mut report = ValidationReport::default();

    let open =
        |path: &PathBuf, file: InputFile, report: &mut ValidationReport| match File::open(path) {
            Ok(f) => Some(BufReader::new(f)),
            Err(e) => {
                report.error(
                    file,
                    None,
                    IssueCode::Io,
                    format!("cannot open {}: {e}", path.display()),
                );
                None
            }
        };

    let accounts_reader = open(&paths.accounts, InputFile::Accounts, &mut report);
    let edges_reader = open(&paths.edges, InputFile::Edges, &mut report);
    let posts_reader = open(&paths.posts, InputFile::Posts, &mut report);
    let Some(accounts_reader) = accounts_reader else {
        // Without the roster no cross-checks are meaningful.
        return Err(report);
    };

    let parsed = parse_accounts(accounts_reader, &mut report);
    if parsed.profiles.is_empty() {
        report.error(
            InputFile::Accounts,
            None,
            IssueCode::EmptyDataset,
            "dataset contains no accounts".to_string(),
        );
    }
    let known: BTreeSet<AccountId> = parsed.profiles.iter().map(|p| p.id.clone()).collect();

    let edges = match edges_reader {
        Some(reader) => parse_edges(reader, &known, &mut report),
        None => Vec::new(),
    };
    let posts = match posts_reader {
        Some(reader) => parse_posts(reader, &known, &mut report),
        None => Vec::new(),
    };

    if !report.errors.is_empty() {
        return Err(report);
    }

    let roster: Vec<AccountId> = known.iter().cloned().collect();
    let graph = match SocialGraph::build(roster, &edges) {
        Ok(graph) => graph,
        Err(e) => {
            // Unreachable after per-record validation; kept as a hard stop.
            report.error(
                InputFile::Edges,
                None,
                IssueCode::MalformedRecord,
                e.to_string(),
            );
            return Err(report);
        }
    };

    let mut by_author: BTreeMap<AccountId, Vec<Post>> = BTreeMap::new();
    for post in posts {
        by_author
            .entry(post.author().clone())
            .or_default()
            .push(post);
    }
    for history in by_author.values_mut() {
        history.sort_by(|a, b| a.post_id().cmp(b.post_id()));
    }

    let profiles: BTreeMap<AccountId, AccountProfile> = parsed
        .profiles
        .into_iter()
        .map(|p| (p.id.clone(), p))
        .collect();

    Ok(Loaded {
        dataset: Dataset {
            profiles,
            graph,
            posts: by_author,
            taxonomy: parsed.taxonomy,
        },
        report,
    })
}

fn to_io(err: csv::Error) -> io::Error {
    io::Error::other(err)
}

/// Writes the roster in canonical form: taxonomy directive, header, then
/// profiles in ascending id order.
pub fn write_accounts<W: Write>(dataset: &Dataset, mut out: W) -> io::Result<()> {
    writeln!(out, "{} {}", TAXONOMY_DIRECTIVE, dataset.taxonomy.join(","))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ACCOUNTS_HEADER).map_err(to_io)?;
    for profile in dataset.profiles.values() {
        w.write_record([
            profile.id.as_str(),
            &profile.handle,
            &profile.category,
            &profile.follower_count.to_string(),
        ])
        .map_err(to_io)?;
    }
    w.flush()
}

/// Writes the edge list in canonical form: `(low, high)` pairs ascending.
pub fn write_edges<W: Write>(dataset: &Dataset, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EDGES_HEADER).map_err(to_io)?;
    for (a, b) in dataset.graph.edges() {
        w.write_record([a.as_str(), b.as_str()]).map_err(to_io)?;
    }
    w.flush()
}

#[derive(Serialize)]
struct RawPostOut<'a> {
    post_id: &'a str,
    author: &'a str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    likers: Vec<&'a str>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    mentioners: Vec<&'a str>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    retweeters: Vec<&'a str>,
}

/// Writes the post archive in canonical form: one JSON object per line,
/// ascending by post id, empty engagement lists omitted.
pub fn write_posts<W: Write>(dataset: &Dataset, mut out: W) -> io::Result<()> {
    fn strs(set: &BTreeSet<AccountId>) -> Vec<&str> {
        set.iter().map(AccountId::as_str).collect()
    }
    let mut all: Vec<&Post> = dataset.posts.values().flatten().collect();
    all.sort_by(|a, b| a.post_id().cmp(b.post_id()));
    for post in all {
        let raw = RawPostOut {
            post_id: post.post_id().as_str(),
            author: post.author().as_str(),
            likers: strs(post.likers()),
            mentioners: strs(post.mentioners()),
            retweeters: strs(post.retweeters()),
        };
        let line = serde_json::to_string(&raw)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes all three files. Not atomic; callers needing all-or-nothing
/// semantics should stage to a scratch location first.
pub fn write_dataset(dataset: &Dataset, paths: &DatasetPaths) -> io::Result<()> {
    write_accounts(dataset, BufWriter::new(File::create(&paths.accounts)?))?;
    write_edges(dataset, BufWriter::new(File::create(&paths.edges)?))?;
    write_posts(dataset, BufWriter::new(File::create(&paths.posts)?))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> AccountId {
        AccountId::new(s).unwrap()
    }

    fn parse_accounts_str(input: &str) -> (ParsedAccounts, ValidationReport) {
        let mut report = ValidationReport::default();
        let parsed = parse_accounts(io::Cursor::new(input.as_bytes()), &mut report);
        (parsed, report)
    }

    fn roster(tokens: &[&str]) -> BTreeSet<AccountId> {
        tokens.iter().map(|t| id(t)).collect()
    }

    fn parse_edges_str(
        input: &str,
        known: &BTreeSet<AccountId>,
    ) -> (Vec<(AccountId, AccountId)>, ValidationReport) {
        let mut report = ValidationReport::default();
        let edges = parse_edges(io::Cursor::new(input.as_bytes()), known, &mut report);
        (edges, report)
    }

    fn parse_posts_str(input: &str, known: &BTreeSet<AccountId>) -> (Vec<Post>, ValidationReport) {
        let mut report = ValidationReport::default();
        let posts = parse_posts(io::Cursor::new(input.as_bytes()), known, &mut report);
        (posts, report)
    }

    #[test]
    fn taxonomy_directive_fixes_vocabulary_and_order() {
        let (parsed, report) = parse_accounts_str(
            "# taxonomy: main, regional,community\n\
             id,handle,category,follower_count\n\
             a,@a,community,10\n\
             b,@b,main,20\n",
        );
        assert!(report.is_valid(), "{:?}", report.errors);
        assert_eq!(parsed.taxonomy, vec!["main", "regional", "community"]);
        assert_eq!(parsed.profiles.len(), 2);
    }

    #[test]
    fn taxonomy_is_inferred_in_first_appearance_order() {
        let (parsed, report) = parse_accounts_str(
            "id,handle,category,follower_count\n\
             b,@b,x,10\n\
             a,@a,y,20\n\
             c,@c,x,30\n",
        );
        assert!(report.is_valid());
        assert_eq!(parsed.taxonomy, vec!["x", "y"]);
    }

    #[test]
    fn undeclared_category_is_rejected() {
        let (parsed, report) = parse_accounts_str(
            "# taxonomy: main\n\
             id,handle,category,follower_count\n\
             a,@a,main,10\n\
             b,@b,mystery,20\n",
        );
        assert_eq!(parsed.profiles.len(), 1);
        assert_eq!(report.errors.len(), 1);
        let issue = &report.errors[0];
        assert_eq!(issue.code, IssueCode::UnknownCategory);
        assert_eq!(issue.line, Some(4));
    }

    #[test]
    fn unknown_directive_is_an_error_but_records_still_parse() {
        let (parsed, report) = parse_accounts_str(
            "# flavor: vanilla\n\
             id,handle,category,follower_count\n\
             a,@a,main,10\n",
        );
        assert_eq!(parsed.profiles.len(), 1);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line, Some(1));
    }

    #[test]
    fn header_mismatch_aborts_roster() {
        let (parsed, report) = parse_accounts_str("id,handle,category\na,@a,main\n");
        assert!(parsed.profiles.is_empty());
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line, Some(1));
    }

    #[test]
    fn duplicate_account_reported_at_second_occurrence() {
        let (parsed, report) = parse_accounts_str(
            "id,handle,category,follower_count\n\
             a,@a,main,10\n\
             b,@b,main,20\n\
             a,@again,main,30\n",
        );
        assert_eq!(parsed.profiles.len(), 2);
        assert_eq!(report.errors.len(), 1);
        let issue = &report.errors[0];
        assert_eq!(issue.code, IssueCode::DuplicateAccountId);
        assert_eq!(issue.line, Some(4));
        assert!(issue.message.contains("line 2"));
    }

    #[test]
    fn negative_follower_count_has_its_own_code() {
        let (parsed, report) = parse_accounts_str(
            "id,handle,category,follower_count\n\
             a,@a,main,-5\n\
             b,@b,main,abc\n",
        );
        assert!(parsed.profiles.is_empty());
        assert_eq!(report.errors.len(), 2);
        assert_eq!(report.errors[0].code, IssueCode::NegativeFollowerCount);
        assert_eq!(report.errors[0].line, Some(2));
        assert_eq!(report.errors[1].code, IssueCode::MalformedRecord);
        assert_eq!(report.errors[1].line, Some(3));
    }

    #[test]
    fn wrong_field_count_is_located() {
        let (parsed, report) = parse_accounts_str(
            "id,handle,category,follower_count\n\
             a,@a,main,10\n\
             b,@b,main\n\
             c,@c,main,30\n",
        );
        assert_eq!(parsed.profiles.len(), 2);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line, Some(3));
        assert_eq!(report.errors[0].code, IssueCode::MalformedRecord);
    }

    #[test]
    fn bom_and_crlf_are_tolerated() {
        let input = "\u{feff}id,handle,category,follower_count\r\na,@a,main,10\r\n";
        let (parsed, report) = parse_accounts_str(input);
        assert!(report.is_valid(), "{:?}", report.errors);
        assert_eq!(parsed.profiles.len(), 1);
        assert_eq!(parsed.profiles[0].follower_count, 10);
    }

    #[test]
    fn quoted_handles_keep_commas_and_quotes() {
        let input = "id,handle,category,follower_count\n\
                     a,\"Care, the \"\"official\"\" line\",main,10\n";
        let (parsed, report) = parse_accounts_str(input);
        assert!(report.is_valid());
        assert_eq!(parsed.profiles[0].handle, "Care, the \"official\" line");
    }

    #[test]
    fn error_count_matches_malformed_record_count() {
        let (parsed, report) = parse_accounts_str(
            "id,handle,category,follower_count\n\
             ok1,@1,main,1\n\
             bad id,@2,main,2\n\
             ok2,@3,main,3\n\
             dup,@4,main,4\n\
             dup,@5,main,5\n\
             ok3,@6,main,-6\n",
        );
        assert_eq!(parsed.profiles.len(), 3);
        assert_eq!(report.errors.len(), 3);
        assert_eq!(report.counts.accounts, 3);
    }

    #[test]
    fn reversed_duplicate_edge_collapses_with_warning() {
        let known = roster(&["a", "b", "c"]);
        let (edges, report) = parse_edges_str("src,dst\na,b\nb,a\nb,c\n", &known);
        assert_eq!(edges.len(), 2);
        assert!(report.is_valid());
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.warnings[0].code, IssueCode::DuplicateEdge);
        assert_eq!(report.warnings[0].line, Some(3));
        assert_eq!(report.counts.edges, 2);
    }

    #[test]
    fn self_loop_and_unknown_endpoint_are_errors() {
        let known = roster(&["a", "b"]);
        let (edges, report) = parse_edges_str("src,dst\na,a\na,z\na,b\n", &known);
        assert_eq!(edges.len(), 1);
        assert_eq!(report.errors.len(), 2);
        assert_eq!(report.errors[0].code, IssueCode::SelfLoop);
        assert_eq!(report.errors[0].line, Some(2));
        assert_eq!(report.errors[1].code, IssueCode::UnknownEndpoint);
        assert_eq!(report.errors[1].line, Some(3));
    }

    #[test]
    fn posts_with_missing_lists_default_to_empty() {
        let known = roster(&["brand"]);
        let (posts, report) =
            parse_posts_str("{\"post_id\":\"p1\",\"author\":\"brand\"}\n", &known);
        assert!(report.is_valid());
        assert_eq!(posts.len(), 1);
        assert_eq!(posts[0].total_interactions(), 0);
    }

    #[test]
    fn duplicate_engagers_dedup_with_warning() {
        let known = roster(&["brand"]);
        let (posts, report) = parse_posts_str(
            "{\"post_id\":\"p1\",\"author\":\"brand\",\"likers\":[\"x\",\"x\",\"y\"]}\n",
            &known,
        );
        assert!(report.is_valid());
        assert_eq!(posts[0].likers().len(), 2);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.warnings[0].code, IssueCode::DuplicateEngager);
    }

    #[test]
    fn self_engagement_is_dropped_with_warning() {
        let known = roster(&["brand"]);
        let (posts, report) = parse_posts_str(
            "{\"post_id\":\"p1\",\"author\":\"brand\",\"retweeters\":[\"brand\",\"z\"]}\n",
            &known,
        );
        assert!(report.is_valid());
        assert_eq!(posts[0].retweeters().len(), 1);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.warnings[0].code, IssueCode::SelfEngagement);
    }

    #[test]
    fn unknown_author_and_duplicate_post_id_are_errors() {
        let known = roster(&["brand"]);
        let (posts, report) = parse_posts_str(
            "{\"post_id\":\"p1\",\"author\":\"brand\"}\n\
             {\"post_id\":\"p1\",\"author\":\"brand\"}\n\
             {\"post_id\":\"p2\",\"author\":\"ghost\"}\n",
            &known,
        );
        assert_eq!(posts.len(), 1);
        assert_eq!(report.errors.len(), 2);
        assert_eq!(report.errors[0].code, IssueCode::DuplicatePostId);
        assert_eq!(report.errors[0].line, Some(2));
        assert_eq!(report.errors[1].code, IssueCode::UnknownAuthor);
        assert_eq!(report.errors[1].line, Some(3));
    }

    #[test]
    fn unknown_json_field_is_rejected_with_line() {
        let known = roster(&["brand"]);
        let (posts, report) = parse_posts_str(
            "{\"post_id\":\"p1\",\"author\":\"brand\"}\n\
             {\"post_id\":\"p2\",\"author\":\"brand\",\"shares\":[]}\n",
            &known,
        );
        assert_eq!(posts.len(), 1);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line, Some(2));
        assert_eq!(report.errors[0].code, IssueCode::MalformedRecord);
    }

    #[test]
    fn blank_lines_are_skipped_and_lines_still_count() {
        let known = roster(&["brand"]);
        let (posts, report) = parse_posts_str(
            "{\"post_id\":\"p1\",\"author\":\"brand\"}\n\
             \n\
             not json\n",
            &known,
        );
        assert_eq!(posts.len(), 1);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line, Some(3));
    }

    #[test]
    fn invalid_utf8_line_does_not_stop_the_file() {
        let known = roster(&["brand"]);
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"{\"post_id\":\"p1\",\"author\":\"brand\"}\n");
        bytes.extend_from_slice(&[0xFF, 0xFE, b'\n']);
        bytes.extend_from_slice(b"{\"post_id\":\"p2\",\"author\":\"brand\"}\n");
        let mut report = ValidationReport::default();
        let posts = parse_posts(io::Cursor::new(bytes), &known, &mut report);
        assert_eq!(posts.len(), 2);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line, Some(2));
    }

    #[test]
    fn load_reports_missing_files_as_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        let paths = DatasetPaths {
            accounts: dir.path().join("missing_accounts.csv"),
            edges: dir.path().join("missing_edges.csv"),
            posts: dir.path().join("missing_posts.jsonl"),
        };
        let report = load_dataset(&paths).unwrap_err();
        assert!(report.has_io_errors());
    }

    #[test]
    fn empty_roster_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let paths = DatasetPaths {
            accounts: dir.path().join("accounts.csv"),
            edges: dir.path().join("edges.csv"),
            posts: dir.path().join("posts.jsonl"),
        };
        std::fs::write(&paths.accounts, "id,handle,category,follower_count\n").unwrap();
        std::fs::write(&paths.edges, "src,dst\n").unwrap();
        std::fs::write(&paths.posts, "").unwrap();
        let report = load_dataset(&paths).unwrap_err();
        assert!(report
            .errors
            .iter()
            .any(|i| i.code == IssueCode::EmptyDataset));
    }

    #[test]
    fn messy_input_round_trips_to_an_equal_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let paths = DatasetPaths {
            accounts: dir.path().join("accounts.csv"),
            edges: dir.path().join("edges.csv"),
            posts: dir.path().join("posts.jsonl"),
        };
        // Unsorted records, CRLF, BOM, duplicate and reversed edges,
        // explicit empty lists, blank lines.
        std::fs::write(
            &paths.accounts,
            "\u{feff}id,handle,category,follower_count\r\n\
             zeta,@z,community,50\r\n\
             alpha,@a,main,100\r\n\
             mid,@m,community,75\r\n",
        )
        .unwrap();
        std::fs::write(&paths.edges, "src,dst\nzeta,alpha\nalpha,zeta\nmid,alpha\n").unwrap();
        std::fs::write(
            &paths.posts,
            "{\"post_id\":\"p2\",\"author\":\"zeta\",\"likers\":[\"alpha\"],\"mentioners\":[]}\n\
             \n\
             {\"post_id\":\"p1\",\"author\":\"zeta\",\"retweeters\":[\"fan1\",\"fan2\"]}\n",
        )
        .unwrap();

        let first = load_dataset(&paths).unwrap();
        assert!(first.report.is_valid());
        assert_eq!(first.report.warnings.len(), 1);

        let out = DatasetPaths {
            accounts: dir.path().join("out_accounts.csv"),
            edges: dir.path().join("out_edges.csv"),
            posts: dir.path().join("out_posts.jsonl"),
        };
        write_dataset(&first.dataset, &out).unwrap();
        let second = load_dataset(&out).unwrap();
        assert!(second.report.is_valid());
        assert!(second.report.warnings.is_empty());
        assert_eq!(first.dataset, second.dataset);

        // Canonical output is stable: writing again yields identical bytes.
        let reread = std::fs::read(&out.accounts).unwrap();
        let mut buf = Vec::new();
        write_accounts(&second.dataset, &mut buf).unwrap();
        assert_eq!(reread, buf);
    }

    #[test]
    fn canonical_writer_emits_taxonomy_directive() {
        let (parsed, _) = parse_accounts_str(
            "id,handle,category,follower_count\n\
             b,@b,community,10\n\
             a,@a,main,20\n",
        );
        let profiles: BTreeMap<AccountId, AccountProfile> = parsed
            .profiles
            .into_iter()
            .map(|p| (p.id.clone(), p))
            .collect();
        let graph = SocialGraph::build(profiles.keys().cloned().collect(), &[]).unwrap();
        let dataset = Dataset {
            profiles,
            graph,
            posts: BTreeMap::new(),
            taxonomy: parsed.taxonomy,
        };
        let mut buf = Vec::new();
        write_accounts(&dataset, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# taxonomy: community,main\n"));
        let mut lines = text.lines().skip(1);
        assert_eq!(lines.next(), Some("id,handle,category,follower_count"));
        assert_eq!(lines.next(), Some("a,@a,main,20"));
        assert_eq!(lines.next(), Some("b,@b,community,10"));
    }
}
