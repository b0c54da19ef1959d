//! Post dumps: parsing, sample windows and the user/post eligibility filter.

use std::collections::{HashMap, HashSet};
use std::io::{self, BufRead, Write};

use chrono::{DateTime, Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("ingestion error: {0}")]
    Ingestion(#[from] io::Error),
    #[error("configuration error: {0}")]
    Config(String),
}

/// One submission. `text` is the title and body joined by a single newline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub post_id: String,
    pub author: String,
    pub created_at: i64,
    pub subreddit: String,
    pub text: String,
}

impl Post {
    pub fn year(&self) -> i32 {
        DateTime::from_timestamp(self.created_at, 0)
            .map(|d| d.year())
            .unwrap_or(1970)
    }
}

/// Wire form of a dump line.
#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    id: String,
    author: String,
    created_utc: i64,
    subreddit: String,
    title: String,
    selftext: String,
}

impl From<&Post> for RawRecord {
    fn from(p: &Post) -> Self {
        RawRecord {
            id: p.post_id.clone(),
            author: p.author.clone(),
            created_utc: p.created_at,
            subreddit: p.subreddit.clone(),
            title: p.text.clone(),
            selftext: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line_no: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct ParsedDump {
    pub posts: Vec<Post>,
    pub rejects: Vec<Reject>,
    /// Lines dropped because their `id` was already seen.
    pub duplicates: usize,
}

pub fn join_title_body(title: &str, body: &str) -> String {
    if body.is_empty() {
        title.to_string()
    } else if title.is_empty() {
        body.to_string()
    } else {
        format!("{title}\n{body}")
    }
}

fn field_str<'a>(obj: &'a serde_json::Map<String, Value>, name: &str) -> Result<&'a str, String> {
    match obj.get(name) {
        None | Some(Value::Null) => Err(format!("missing field `{name}`")),
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(format!("field `{name}` is not a string")),
    }
}

fn parse_line(line: &str) -> Result<Post, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    let obj = value.as_object().ok_or("record is not an object")?;
    let id = field_str(obj, "id")?;
    if id.is_empty() {
        return Err("empty field `id`".into());
    }
    let author = field_str(obj, "author")?;
    let created_at = match obj.get("created_utc") {
        None | Some(Value::Null) => return Err("missing field `created_utc`".into()),
        Some(v) => v.as_i64().ok_or("field `created_utc` is not an integer")?,
    };
    let subreddit = field_str(obj, "subreddit")?;
    let title = field_str(obj, "title")?;
    let body = field_str(obj, "selftext")?;
    Ok(Post {
        post_id: id.to_string(),
        author: author.to_string(),
        created_at,
        subreddit: subreddit.to_string(),
        text: join_title_body(title, body),
    })
}

/// Parses a line-delimited dump. Blank lines are ignored, malformed lines go to
/// the rejects report, and repeated ids keep their first occurrence.
pub fn parse_dump<R: BufRead>(reader: R) -> Result<ParsedDump, CorpusError> {
    let mut out = ParsedDump::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line) {
            Ok(post) => {
                if seen.insert(post.post_id.clone()) {
                    out.posts.push(post);
                } else {
                    log::debug!("duplicate post id {} on line {}", post.post_id, idx + 1);
                    out.duplicates += 1;
                }
            }
            Err(reason) => out.rejects.push(Reject { line_no: idx + 1, reason }),
        }
    }
    Ok(out)
}

/// Writes posts in the dump format accepted by [`parse_dump`].
pub fn write_dump<W: Write>(w: &mut W, posts: &[Post]) -> io::Result<()> {
    for p in posts {
        serde_json::to_writer(&mut *w, &RawRecord::from(p))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Inclusive UTC sample window, stored as seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleWindow {
    pub start: i64,
    pub end: i64,
}

impl SampleWindow {
    /// Parses `YYYY-MM-DD..YYYY-MM-DD`; both days are included in full.
    pub fn parse(spec: &str) -> Result<Self, CorpusError> {
        let (a, b) = spec
            .split_once("..")
            .ok_or_else(|| CorpusError::Config(format!("window `{spec}` must be <start>..<end>")))?;
        let day = |s: &str| {
            NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
                .map_err(|e| CorpusError::Config(format!("bad date `{s}`: {e}")))
        };
        let start = day(a)?.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
        let end = day(b)?.and_hms_opt(23, 59, 59).unwrap().and_utc().timestamp();
        if start >= end {
            return Err(CorpusError::Config(format!("window `{spec}` is empty")));
        }
        Ok(SampleWindow { start, end })
    }

    pub fn contains(&self, ts: i64) -> bool {
        ts >= self.start && ts <= self.end
    }
}

impl Default for SampleWindow {
    fn default() -> Self {
        SampleWindow::parse("2020-01-01..2023-12-31").unwrap()
    }
}

/// Which posts count toward a user's `min_posts`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostCountBasis {
    /// Every post in the dump, before the word filter.
    #[default]
    AllPosts,
    /// Only posts that pass the word filter. Makes the filter idempotent.
    QualifyingPosts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterThresholds {
    pub min_posts: usize,
    pub min_words: usize,
    #[serde(default)]
    pub count_basis: PostCountBasis,
}

impl FilterThresholds {
    pub fn new(min_posts: i64, min_words: i64) -> Result<Self, CorpusError> {
        let conv = |v: i64, name: &str| {
            usize::try_from(v).map_err(|_| CorpusError::Config(format!("{name} must be ≥ 0, got {v}")))
        };
        Ok(FilterThresholds {
            min_posts: conv(min_posts, "min_posts")?,
            min_words: conv(min_words, "min_words")?,
            count_basis: PostCountBasis::AllPosts,
        })
    }
}

impl Default for FilterThresholds {
    fn default() -> Self {
        FilterThresholds { min_posts: 15, min_words: 20, count_basis: PostCountBasis::AllPosts }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_posts: usize,
    pub eligible_posts: usize,
    pub total_users: usize,
    pub eligible_users: usize,
    pub posts_per_user_mean: f64,
}

/// Keeps posts whose author has enough posts and a positive age/income flag,
/// and which are themselves long enough. Authors missing from `flags` are
/// treated as unflagged.
pub fn filter_corpus(
    posts: &[Post],
    flags: &HashMap<String, bool>,
    thresholds: &FilterThresholds,
) -> (Vec<Post>, CorpusStats) {
    let long_enough = |p: &Post| word_count(&p.text) >= thresholds.min_words;

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for p in posts {
        let counted = match thresholds.count_basis {
            PostCountBasis::AllPosts => true,
            PostCountBasis::QualifyingPosts => long_enough(p),
        };
        let c = counts.entry(p.author.as_str()).or_insert(0);
        if counted {
            *c += 1;
        }
    }

    let eligible: Vec<Post> = posts
        .iter()
        .filter(|p| {
            counts[p.author.as_str()] >= thresholds.min_posts
                && flags.get(&p.author).copied().unwrap_or(false)
                && long_enough(p)
        })
        .cloned()
        .collect();

    let eligible_users = eligible.iter().map(|p| p.author.as_str()).collect::<HashSet<_>>().len();
    let stats = CorpusStats {
        total_posts: posts.len(),
        eligible_posts: eligible.len(),
        total_users: counts.len(),
        eligible_users,
        posts_per_user_mean: if eligible_users > 0 {
            eligible.len() as f64 / eligible_users as f64
        } else {
            0.0
        },
    };
    (eligible, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(id: &str, author: &str, title: &str) -> String {
        format!(
            r#"{{"id":"{id}","author":"{author}","created_utc":1600000000,"subreddit":"personalfinance","title":"{title}","selftext":"body"}}"#
        )
    }

    fn post(id: usize, author: &str, words: usize) -> Post {
        Post {
            post_id: format!("p{id}"),
            author: author.to_string(),
            created_at: 1_600_000_000 + id as i64,
            subreddit: "personalfinance".into(),
            text: vec!["word"; words].join(" "),
        }
    }

    #[test]
    fn parses_valid_lines_in_order() {
        let input = [raw("a", "u1", "t1"), raw("b", "u2", "t2"), raw("c", "u1", "t3")].join("\n");
        let out = parse_dump(input.as_bytes()).unwrap();
        let ids: Vec<_> = out.posts.iter().map(|p| p.post_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(out.posts[0].text, "t1\nbody");
        assert!(out.rejects.is_empty());
    }

    #[test]
    fn malformed_line_is_reported_not_fatal() {
        let input = format!("{}\n{{\"id\":\"x\",\"author\":\"u\"}}\n{}", raw("a", "u", "t"), raw("b", "u", "t"));
        let out = parse_dump(input.as_bytes()).unwrap();
        assert_eq!(out.posts.len(), 2);
        assert_eq!(out.rejects.len(), 1);
        assert_eq!(out.rejects[0].line_no, 2);
        assert!(out.rejects[0].reason.contains("created_utc"), "{}", out.rejects[0].reason);
    }

    #[test]
    fn non_json_and_wrong_types_are_rejected() {
        let input = "not json\n{\"id\":\"a\",\"author\":\"u\",\"created_utc\":\"soon\",\"subreddit\":\"s\",\"title\":\"t\",\"selftext\":\"\"}";
        let out = parse_dump(input.as_bytes()).unwrap();
        assert!(out.posts.is_empty());
        assert_eq!(out.rejects.iter().map(|r| r.line_no).collect::<Vec<_>>(), [1, 2]);
    }

    #[test]
    fn empty_stream() {
        let out = parse_dump(&b""[..]).unwrap();
        assert!(out.posts.is_empty() && out.rejects.is_empty());
        let (kept, stats) = filter_corpus(&out.posts, &HashMap::new(), &FilterThresholds::default());
        assert!(kept.is_empty());
        assert_eq!(stats, CorpusStats::default());
    }

    #[test]
    fn duplicate_ids_keep_first() {
        let input = [raw("a", "u1", "first"), raw("a", "u2", "second")].join("\n");
        let out = parse_dump(input.as_bytes()).unwrap();
        assert_eq!(out.posts.len(), 1);
        assert_eq!(out.posts[0].author, "u1");
        assert_eq!(out.duplicates, 1);
    }

    #[test]
    fn unreadable_stream_is_an_ingestion_error() {
        struct Broken;
        impl io::Read for Broken {
            fn read(&mut self, _: &mut [u8]) -> io::Result<usize> {
                Err(io::Error::other("disk gone"))
            }
        }
        let err = parse_dump(io::BufReader::new(Broken)).unwrap_err();
        assert!(matches!(err, CorpusError::Ingestion(_)));
    }

    #[test]
    fn word_count_examples() {
        assert_eq!(word_count("I need help saving"), 4);
        assert_eq!(word_count(""), 0);
        assert_eq!(word_count("a  b\tc\nd"), 4);
    }

    fn brute_force_words(text: &str) -> usize {
        let mut n = 0;
        let mut in_word = false;
        for c in text.chars() {
            if c.is_whitespace() {
                in_word = false;
            } else if !in_word {
                in_word = true;
                n += 1;
            }
        }
        n
    }

    proptest! {
        #[test]
        fn word_count_matches_scanner(text in "[a-c \t\n\u{00a0}]{0,40}") {
            prop_assert_eq!(word_count(&text), brute_force_words(&text));
        }
    }

    #[test]
    fn threshold_is_inclusive_and_flag_required() {
        let mut posts = Vec::new();
        posts.extend((0..15).map(|i| post(i, "a", 20)));
        posts.extend((100..114).map(|i| post(i, "b", 30)));
        posts.extend((200..220).map(|i| post(i, "c", 30)));
        let flags: HashMap<String, bool> =
            [("a", true), ("b", true), ("c", false)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let (kept, stats) = filter_corpus(&posts, &flags, &FilterThresholds::default());

        // Enumerate users independently of the filter implementation.
        let mut expected = 0;
        for user in ["a", "b", "c"] {
            let theirs: Vec<_> = posts.iter().filter(|p| p.author == user).collect();
            if theirs.len() >= 15 && flags[user] {
                expected += theirs.iter().filter(|p| word_count(&p.text) >= 20).count();
            }
        }
        assert_eq!(kept.len(), expected);
        assert!(kept.iter().all(|p| p.author == "a"));
        assert_eq!(kept.len(), 15);
        assert_eq!(stats.total_posts, 49);
        assert_eq!(stats.total_users, 3);
        assert_eq!(stats.eligible_users, 1);
        assert_eq!(stats.posts_per_user_mean, 15.0);
    }

    #[test]
    fn short_posts_count_toward_min_posts_by_default() {
        let mut posts: Vec<_> = (0..13).map(|i| post(i, "a", 25)).collect();
        posts.extend((13..15).map(|i| post(i, "a", 5)));
        let flags = HashMap::from([("a".to_string(), true)]);
        let (kept, _) = filter_corpus(&posts, &flags, &FilterThresholds::default());
        assert_eq!(kept.len(), 13);

        let strict = FilterThresholds { count_basis: PostCountBasis::QualifyingPosts, ..Default::default() };
        let (kept, _) = filter_corpus(&posts, &flags, &strict);
        assert!(kept.is_empty());
    }

    #[test]
    fn negative_thresholds_are_config_errors() {
        assert!(matches!(FilterThresholds::new(-1, 20), Err(CorpusError::Config(_))));
        assert!(matches!(FilterThresholds::new(15, -3), Err(CorpusError::Config(_))));
        let zero = FilterThresholds::new(0, 0).unwrap();
        let posts = vec![post(0, "a", 0)];
        let flags = HashMap::from([("a".to_string(), true)]);
        assert_eq!(filter_corpus(&posts, &flags, &zero).0.len(), 1);
    }

    #[test]
    fn window_parsing() {
        let w = SampleWindow::parse("2020-01-01..2023-12-31").unwrap();
        assert!(w.contains(1577836800)); // 2020-01-01T00:00:00Z
        assert!(w.contains(1704067199)); // 2023-12-31T23:59:59Z
        assert!(!w.contains(1704067200));
        assert!(SampleWindow::parse("2023-01-01..2020-01-01").is_err());
        assert!(SampleWindow::parse("2020-01-01").is_err());
    }

    fn arb_posts() -> impl Strategy<Value = Vec<Post>> {
        prop::collection::vec((0usize..6, 0usize..40), 0..80).prop_map(|spec| {
            spec.into_iter()
                .enumerate()
                .map(|(i, (user, words))| post(i, &format!("u{user}"), words))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn filter_properties(posts in arb_posts(), flag_bits in 0u8..64, min_posts in 0usize..8, min_words in 0usize..30) {
            let flags: HashMap<String, bool> =
                (0..6).map(|u| (format!("u{u}"), flag_bits & (1 << u) != 0)).collect();
            let th = FilterThresholds { min_posts, min_words, count_basis: PostCountBasis::AllPosts };
            let (kept, stats) = filter_corpus(&posts, &flags, &th);
            prop_assert!(stats.eligible_posts <= stats.total_posts);
            prop_assert!(stats.eligible_users <= stats.total_users);
            for p in &kept {
                prop_assert!(posts.contains(p));
                prop_assert!(word_count(&p.text) >= min_words);
                prop_assert!(posts.iter().filter(|q| q.author == p.author).count() >= min_posts);
            }

            let strict = FilterThresholds { count_basis: PostCountBasis::QualifyingPosts, ..th };
            let (once, _) = filter_corpus(&posts, &flags, &strict);
            let (twice, _) = filter_corpus(&once, &flags, &strict);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn dump_round_trip(posts in arb_posts(), titles in prop::collection::vec("[a-z \n\"\\\\]{0,12}", 80)) {
            let posts: Vec<Post> = posts.into_iter().zip(titles).map(|(mut p, t)| { p.text = t; p }).collect();
            let mut buf = Vec::new();
            write_dump(&mut buf, &posts).unwrap();
            let back = parse_dump(&buf[..]).unwrap();
            prop_assert_eq!(back.posts, posts);
        }
    }
}
