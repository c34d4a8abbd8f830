//! Per-post engagement and per-account magnitude of influence.
//!
//! For a post, a user either engaged (liked, mentioned, or retweeted) or did
//! not; that indicator is [`lcrt`]. Reach-over-audience ([`roa`]) normalizes
//! engagement by the author's follower count, and magnitude of influence
//! ([`moi`]) is the root-mean-square of a post history's ROA values, so a
//! single viral post cannot dominate a consistent account, and consistently
//! engaging accounts score close to their typical per-post reach.
//!
//! Two ROA modes exist. `Strict` counts each engaging user once across all
//! three interaction kinds and divides by followers; on clean data (engagers
//! drawn from the author's audience) it lands in `[0, 1]`. `Raw` sums the
//! three interaction counts without deduplication and scales by 100,
//! matching how engagement tallies are usually exported by listening tools.
//! Both modes use the same follower denominator, so neither changes the
//! relative order of accounts with equal post behavior.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::AccountId;

/// Post identifier: a non-empty token with no whitespace. Ordering is
/// byte-lexicographic; ROA accumulation follows it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PostId(String);

impl PostId {
    pub fn new(token: impl Into<String>) -> Result<Self, InvalidPostId> {
        let token = token.into();
        if token.is_empty() {
            return Err(InvalidPostId {
                token,
                reason: "empty token",
            });
        }
        if token.chars().any(char::is_whitespace) {
            return Err(InvalidPostId {
                token,
                reason: "contains whitespace",
            });
        }
        Ok(PostId(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for PostId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for PostId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let token = String::deserialize(deserializer)?;
        PostId::new(token).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid post id {token:?}: {reason}")]
pub struct InvalidPostId {
    pub token: String,
    pub reason: &'static str,
}

/// A single post with its engagement sets.
///
/// The sets are deduplicated and never contain the author; self-engagement
/// is dropped at construction. Callers that need to report dropped entries
/// (the ingest layer does) must detect them before constructing the post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    post_id: PostId,
    author: AccountId,
    likers: BTreeSet<AccountId>,
    mentioners: BTreeSet<AccountId>,
    retweeters: BTreeSet<AccountId>,
}

impl Post {
    pub fn new(
        post_id: PostId,
        author: AccountId,
        likers: impl IntoIterator<Item = AccountId>,
        mentioners: impl IntoIterator<Item = AccountId>,
        retweeters: impl IntoIterator<Item = AccountId>,
    ) -> Post {
        let strip = |set: BTreeSet<AccountId>, author: &AccountId| {
            let mut set = set;
            set.remove(author);
            set
        };
        let likers = strip(likers.into_iter().collect(), &author);
        let mentioners = strip(mentioners.into_iter().collect(), &author);
        let retweeters = strip(retweeters.into_iter().collect(), &author);
        Post {
            post_id,
            author,
            likers,
            mentioners,
            retweeters,
        }
    }

    pub fn post_id(&self) -> &PostId {
        &self.post_id
    }

    pub fn author(&self) -> &AccountId {
        &self.author
    }

    pub fn likers(&self) -> &BTreeSet<AccountId> {
        &self.likers
    }

    pub fn mentioners(&self) -> &BTreeSet<AccountId> {
        &self.mentioners
    }

    pub fn retweeters(&self) -> &BTreeSet<AccountId> {
        &self.retweeters
    }

    /// Users appearing in at least one engagement set.
    pub fn engaging_users(&self) -> BTreeSet<&AccountId> {
        self.likers
            .iter()
            .chain(&self.mentioners)
            .chain(&self.retweeters)
            .collect()
    }

    /// `|likers ∪ mentioners ∪ retweeters|`.
    pub fn distinct_engagement(&self) -> usize {
        self.engaging_users().len()
    }

    /// `|likers| + |mentioners| + |retweeters|`, duplicates counted per kind.
    pub fn total_interactions(&self) -> usize {
        self.likers.len() + self.mentioners.len() + self.retweeters.len()
    }
}

/// Roster entry for one account.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccountProfile {
    pub id: AccountId,
    pub handle: String,
    pub category: String,
    pub follower_count: u64,
}

/// How ROA counts engagement. See the module docs for the two definitions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngagementMode {
    #[default]
    Strict,
    Raw,
}

impl fmt::Display for EngagementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngagementMode::Strict => "strict",
            EngagementMode::Raw => "raw",
        })
    }
}

impl std::str::FromStr for EngagementMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(EngagementMode::Strict),
            "raw" => Ok(EngagementMode::Raw),
            other => Err(format!("unknown mode `{other}` (expected strict or raw)")),
        }
    }
}

/// What to do with accounts whose MOI is undefined (zero followers or an
/// empty post history).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroFollowerPolicy {
    /// Abort the batch, naming the account.
    #[default]
    Fail,
    /// Rank the remaining accounts and list the account as excluded.
    Skip,
}

impl fmt::Display for ZeroFollowerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZeroFollowerPolicy::Fail => "fail",
            ZeroFollowerPolicy::Skip => "skip",
        })
    }
}

impl std::str::FromStr for ZeroFollowerPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fail" => Ok(ZeroFollowerPolicy::Fail),
            "skip" => Ok(ZeroFollowerPolicy::Skip),
            other => Err(format!("unknown policy `{other}` (expected fail or skip)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngagementError {
    #[error("account `{0}` has zero followers; reach is undefined")]
    ZeroFollowers(AccountId),
    #[error("account `{0}` has no posts; influence magnitude is undefined")]
    NoPosts(AccountId),
    #[error("post `{post}` was authored by `{found}`, not `{expected}`")]
    AuthorMismatch {
        post: PostId,
        expected: AccountId,
        found: AccountId,
    },
}

/// MOI for one account, with the per-post breakdown that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MoiResult {
    pub account: AccountId,
    pub moi: f64,
    /// `(post_id, roa)` in ascending post id order.
    pub roa_per_post: Vec<(PostId, f64)>,
    pub post_count: usize,
}

/// 1 if `user` liked, mentioned, or retweeted the post; 0 otherwise.
/// The author never counts as engaging with their own post.
pub fn lcrt(user: &AccountId, post: &Post) -> u8 {
    let engaged = post.likers.contains(user)
        || post.mentioners.contains(user)
        || post.retweeters.contains(user);
    u8::from(engaged)
}

/// Reach-over-audience for one post.
///
/// Fails when the author has zero followers (the ratio is undefined) or when
/// the post does not belong to `profile`. In `Strict` mode an engagement
/// count above the follower count is suspicious but not fatal; it is logged
/// and the ratio above 1 is returned as-is.
pub fn roa(
    post: &Post,
    profile: &AccountProfile,
    mode: EngagementMode,
) -> Result<f64, EngagementError> {
    if post.author != profile.id {
        return Err(EngagementError::AuthorMismatch {
            post: post.post_id.clone(),
            expected: profile.id.clone(),
            found: post.author.clone(),
        });
    }
    if profile.follower_count == 0 {
        return Err(EngagementError::ZeroFollowers(profile.id.clone()));
    }
    let followers = profile.follower_count as f64;
    let value = match mode {
        EngagementMode::Strict => {
            let distinct = post.distinct_engagement();
            if distinct as u64 > profile.follower_count {
                log::warn!(
                    "post `{}`: {} distinct engaging users exceed the author's {} followers",
                    post.post_id,
                    distinct,
                    profile.follower_count
                );
            }
            distinct as f64 / followers
        }
        EngagementMode::Raw => (post.total_interactions() as f64 * 100.0) / followers,
    };
    Ok(value)
}

/// Root-mean-square of the per-post ROA values.
///
/// `posts` must all belong to `profile`; an empty history is an error (the
/// mean is undefined). Squared ratios are accumulated in ascending post id
/// order, so the result is bit-identical however the caller ordered the
/// slice.
pub fn moi(
    profile: &AccountProfile,
    posts: &[Post],
    mode: EngagementMode,
) -> Result<MoiResult, EngagementError> {
    if posts.is_empty() {
        return Err(EngagementError::NoPosts(profile.id.clone()));
    }
    let mut roa_per_post = Vec::with_capacity(posts.len());
    for post in posts {
        roa_per_post.push((post.post_id.clone(), roa(post, profile, mode)?));
    }
    roa_per_post.sort_by(|a, b| a.0.cmp(&b.0));
    let sum_of_squares = roa_per_post.iter().fold(0.0, |acc, (_, r)| acc + r * r);
    let moi = (sum_of_squares / roa_per_post.len() as f64).sqrt();
    Ok(MoiResult {
        account: profile.id.clone(),
        moi,
        roa_per_post,
        post_count: posts.len(),
    })
}
