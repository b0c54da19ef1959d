//! Deterministic synthetic data: a small post corpus written in the style the
//! rule engine understands, and planted-topic token corpora for sampler tests.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Post;
use crate::topics::TokenizedNeed;

/// Seed of the shipped `data/synthetic_posts.jsonl`.
pub const SYNTHETIC_SEED: u64 = 20_240_601;
pub const SYNTHETIC_POSTS: usize = 200;

const QUESTIONS: &[&str] = &[
    "How much should I keep in my emergency fund?",
    "Should I pay off my credit card debt before investing?",
    "How do I budget for rent when I am behind and facing eviction?",
    "Is it smart to put more into my 401k or a Roth IRA?",
    "How should I save for a down payment on a house?",
    "I am not sure, can I afford a new car on my budget?",
    "Should I buy VTI or VOO in my brokerage account?",
    "How do I plan for overdue medical bills that went to collections?",
    "What is the best way to pay off my student loan?",
    "Should I get more life insurance coverage for my family?",
    "How do I set aside money for my kids college tuition?",
    "Is a high yield savings account good for my emergency savings?",
    "How should I handle taxes on my side hustle income?",
    "Should I put my bonus into an index fund?",
    "How can I help my parents with their bills?",
    "Is it worth buying a rental property as an investment?",
    "How do I start planning my estate and a will?",
    "Should I donate to charity or pay down debt first?",
    "How do I save for a vacation without using credit cards?",
    "Should I put some money into crypto or is that gambling?",
    "How can I stop living paycheck to paycheck with groceries so expensive?",
    "I am unsure, what should my portfolio allocation be at my age?",
    "I am wondering, should I refinance my mortgage now?",
    "How do I cover my wedding costs?",
];

const CONTEXT: &[&str] = &[
    "I have been reading this sub for a while and finally decided to ask for advice.",
    "Things have been tight lately and I am worried about falling behind on payments.",
    "My partner and I are trying to get our finances organized this year.",
    "I just started a new job and want to set things up the right way from the beginning.",
    "I am a bit scared after a surprise expense wiped out most of my savings last month.",
    "Honestly I am not sure where to start and feel a little overwhelmed by all the options.",
    "I got some money from a tax refund and want to use it wisely instead of spending it.",
    "We had an urgent situation with an overdue notice and I am afraid it could happen again.",
    "I am happy with my progress so far but want to make sure I am not missing anything.",
    "A friend told me to ask here because everyone gives good practical advice.",
    "I currently keep everything in a checking account at my local bank.",
    "My expenses are mostly rent, groceries, utilities and a small car payment.",
];

const SHORT: &[&str] = &["Quick question, should I pay off my car loan?", "Is a Roth IRA worth it?"];

struct User {
    name: &'static str,
    posts: usize,
    /// (year, age) stated in the user's first post of that year.
    ages: &'static [(i32, u32)],
    /// (year, phrase) stated in the user's first post of that year.
    incomes: &'static [(i32, &'static str)],
    /// Include one post dated before the default window.
    early_post: bool,
}

const USERS: &[User] = &[
    User { name: "maple_saver", posts: 16, ages: &[(2020, 24)], incomes: &[(2020, "I make $52,000 a year")], early_post: false },
    User {
        name: "quiet_ledger",
        posts: 16,
        ages: &[(2021, 33), (2022, 35), (2022, 33)],
        incomes: &[(2021, "my salary is $6,500 a month"), (2023, "I earn $7,200 a month")],
        early_post: false,
    },
    User { name: "budget_owl", posts: 16, ages: &[(2022, 19)], incomes: &[(2022, "I make $18 an hour")], early_post: false },
    User {
        name: "harbor_fund",
        posts: 16,
        ages: &[(2020, 45)],
        incomes: &[(2021, "my income is $9,000 a month"), (2021, "I earn $8,500 a month")],
        early_post: false,
    },
    User { name: "tidy_wallet", posts: 16, ages: &[(2023, 58)], incomes: &[(2020, "my salary is $140,000 a year")], early_post: false },
    User { name: "cedar_coin", posts: 16, ages: &[(2021, 62)], incomes: &[(2021, "I get paid $2,400 biweekly")], early_post: false },
    User { name: "lumen_plan", posts: 16, ages: &[(2020, 28)], incomes: &[(2022, "I make $1,100 a week")], early_post: false },
    User {
        name: "river_notes",
        posts: 16,
        ages: &[(2021, 31)],
        incomes: &[(2021, "my salary is $95k a year"), (2023, "my salary is $110k a year")],
        early_post: false,
    },
    User { name: "steady_acorn", posts: 16, ages: &[(2022, 38)], incomes: &[(2022, "I make $25,000 a year")], early_post: false },
    User { name: "no_income_ned", posts: 16, ages: &[(2021, 29)], incomes: &[], early_post: false },
    User { name: "ageless_ana", posts: 16, ages: &[], incomes: &[(2021, "I make $4,000 a month")], early_post: false },
    User { name: "brief_visitor", posts: 8, ages: &[(2021, 41)], incomes: &[(2021, "I make $70,000 a year")], early_post: true },
    User { name: "new_member", posts: 8, ages: &[(2022, 22)], incomes: &[(2022, "I earn $3,000 a month")], early_post: false },
    User { name: "lurker_lou", posts: 8, ages: &[(2023, 50)], incomes: &[(2023, "I make $20 an hour")], early_post: false },
];

fn timestamp(rng: &mut ChaCha8Rng, year: i32) -> i64 {
    let day = rng.random_range(0..365);
    let base = NaiveDate::from_ymd_opt(year, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
    base + day * 86_400 + rng.random_range(0..86_400)
}

/// The 200-post corpus. Eleven authors meet the post-count threshold; one of
/// them never states an income and one never states an age.
pub fn synthetic_posts(seed: u64) -> Vec<Post> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut posts = Vec::new();
    for user in USERS {
        let mut years: Vec<i32> = (0..user.posts).map(|_| rng.random_range(2020..=2023)).collect();
        let required: BTreeSet<i32> = user.ages.iter().map(|a| a.0).chain(user.incomes.iter().map(|i| i.0)).collect();
        let offset = usize::from(user.early_post);
        for (i, &y) in required.iter().enumerate() {
            years[offset + i] = y;
        }
        if user.early_post {
            years[0] = 2019;
        }
        let mut entries: Vec<(i64, i32)> = years.iter().map(|&y| (timestamp(&mut rng, y), y)).collect();
        entries.sort();

        let mut stated: Vec<(i32, String)> = user.ages.iter().map(|&(y, a)| (y, format!("I'm {a} and"))).collect();
        stated.extend(user.incomes.iter().map(|&(y, s)| (y, format!("{}{}.", s[..1].to_uppercase(), &s[1..]))));
        for (i, &(ts, year)) in entries.iter().enumerate() {
            let mut parts: Vec<String> = Vec::new();
            // Attach every not-yet-used statement for this year to the first post of the year.
            let mut age_part: Option<String> = None;
            while let Some(pos) = stated.iter().position(|(y, _)| *y == year) {
                let (_, s) = stated.remove(pos);
                if s.ends_with(" and") {
                    if age_part.is_none() {
                        age_part = Some(s);
                    } else {
                        parts.push(s.trim_end_matches(" and").to_string() + ".");
                    }
                } else {
                    parts.push(s);
                }
            }
            let short = rng.random_bool(0.06) && parts.is_empty() && age_part.is_none();
            let text = if short {
                SHORT.choose(&mut rng).unwrap().to_string()
            } else {
                let context = CONTEXT.choose(&mut rng).unwrap();
                let opener = match age_part {
                    Some(a) => format!("{a} {}{}", &context[..1].to_lowercase(), &context[1..]),
                    None => context.to_string(),
                };
                let mut body = vec![opener];
                body.append(&mut parts);
                body.push(CONTEXT.choose(&mut rng).unwrap().to_string());
                let n_questions = rng.random_range(1..=3);
                let qs: Vec<&&str> = QUESTIONS.choose_multiple(&mut rng, n_questions).collect();
                body.extend(qs.iter().map(|q| q.to_string()));
                body.join(" ")
            };
            posts.push(Post {
                post_id: format!("s{:03}", posts.len() + 1),
                author: user.name.to_string(),
                created_at: ts,
                subreddit: if i % 3 == 0 { "financialplanning" } else { "personalfinance" }.to_string(),
                text,
            });
        }
    }
    debug_assert_eq!(posts.len(), SYNTHETIC_POSTS);
    posts
}

/// Shape of a planted-topic corpus: each document draws most tokens from one
/// block of `words_per_topic` word ids, the rest uniformly from the whole vocabulary.
#[derive(Debug, Clone, Copy)]
pub struct PlantedSpec {
    pub docs: usize,
    pub doc_len: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    /// Probability a token comes from the document's own block.
    pub purity: f64,
}

pub struct PlantedCorpus {
    pub needs: Vec<TokenizedNeed>,
    pub vocab_size: usize,
    /// Planted block of each document.
    pub truth: Vec<usize>,
}

/// Word id `w` belongs to block `w / words_per_topic`.
pub fn planted_corpus(spec: &PlantedSpec, seed: u64) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab_size = spec.topics * spec.words_per_topic;
    let mut needs = Vec::with_capacity(spec.docs);
    let mut truth = Vec::with_capacity(spec.docs);
    for d in 0..spec.docs {
        let topic = d % spec.topics;
        let tokens = (0..spec.doc_len)
            .map(|_| {
                if rng.random_bool(spec.purity) {
                    (topic * spec.words_per_topic + rng.random_range(0..spec.words_per_topic)) as u32
                } else {
                    rng.random_range(0..vocab_size) as u32
                }
            })
            .collect();
        needs.push(TokenizedNeed { need_id: format!("d{d}"), tokens });
        truth.push(topic);
    }
    PlantedCorpus { needs, vocab_size, truth }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_dump, word_count};

    #[test]
    fn generator_is_deterministic() {
        assert_eq!(synthetic_posts(SYNTHETIC_SEED), synthetic_posts(SYNTHETIC_SEED));
        assert_eq!(synthetic_posts(SYNTHETIC_SEED).len(), SYNTHETIC_POSTS);
    }

    #[test]
    fn shipped_file_matches_generator() {
        let shipped = include_str!("../data/synthetic_posts.jsonl");
        let parsed = parse_dump(shipped.as_bytes()).unwrap();
        assert!(parsed.rejects.is_empty());
        assert_eq!(parsed.posts, synthetic_posts(SYNTHETIC_SEED));
    }

    #[test]
    fn corpus_has_short_and_long_posts() {
        let posts = synthetic_posts(SYNTHETIC_SEED);
        assert!(posts.iter().any(|p| word_count(&p.text) < 20));
        assert!(posts.iter().filter(|p| word_count(&p.text) >= 20).count() > 150);
    }

    #[test]
    fn planted_blocks() {
        let spec = PlantedSpec { docs: 10, doc_len: 30, topics: 2, words_per_topic: 5, purity: 1.0 };
        let c = planted_corpus(&spec, 1);
        assert_eq!(c.vocab_size, 10);
        for (n, &t) in c.needs.iter().zip(&c.truth) {
            assert!(n.tokens.iter().all(|&w| w as usize / 5 == t));
        }
    }
}
