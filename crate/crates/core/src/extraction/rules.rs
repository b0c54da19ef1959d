//! Deterministic keyword/lexicon engine. Offline, byte-for-byte reproducible;
//! serves as test oracle and fallback for the LLM engine.

use std::sync::OnceLock;

use regex::Regex;

use super::types::*;
use super::{ExtractionEngine, ExtractionError};
use crate::attribution::IncomePeriod;
use crate::corpus::Post;

/// Purposes in match priority; the first cue hit wins.
const PURPOSES: &[(&str, &[&str])] = &[
    ("real estate investment", &["rental property", "real estate", "investment property", "flip"]),
    ("medical expenses", &["medical", "hospital", "doctor", "surgery", "dental", "prescription", "er visit"]),
    ("emergency fund", &["emergency fund", "emergency savings", "rainy day"]),
    ("rent", &["rent", "landlord", "lease", "utilities", "utility", "electric bill", "evict"]),
    ("charity", &["charity", "charitable", "donat", "philanthrop", "tithe"]),
    ("legacy planning", &["estate plan", "inheritance", "inherit", "a will", "my will", "trust fund", "beneficiar", "legacy"]),
    ("retirement", &["retire", "401k", "401 k", "ira", "roth", "pension"]),
    ("buying house", &["house", "home", "mortgage", "down payment", "condo"]),
    ("debt repayment", &["debt", "loan", "credit card", "owe", "collections", "payoff", "pay off"]),
    ("education", &["college", "tuition", "school", "degree", "529"]),
    ("family support", &["parents", "family", "kids", "child", "wedding", "spouse", "baby", "partner"]),
    ("taxes", &["tax"]),
    ("buying car", &["car", "vehicle", "auto"]),
    ("vacation", &["vacation", "travel", "trip", "hobby", "hobbies"]),
    ("self-employment", &["business", "self employ", "freelanc", "side hustle", "startup"]),
    ("insurance coverage", &["insurance", "insure"]),
    ("wealth building", &["invest", "stock", "portfolio", "index fund", "etf", "brokerage", "wealth"]),
    ("daily expenses", &["grocer", "food", "bills", "expenses", "paycheck"]),
];
const DEFAULT_PURPOSE: &str = "general finances";

const PROCESSES: &[(&str, &[&str])] = &[
    ("insurance", &["insurance", "insure", "coverage"]),
    ("investing", &[
        "invest", "index fund", "mutual fund", "etf", "stock", "portfolio", "brokerage", "bond", "vti", "voo",
        "crypto", "bitcoin", "allocation", "dividend",
    ]),
    ("debt management", &["pay off", "payoff", "repay", "refinanc", "consolidat", "debt", "loan", "owe"]),
    ("tax planning", &["tax"]),
    ("saving", &["save", "saving", "emergency fund", "set aside", "high yield"]),
    ("legacy planning", &["estate plan", "a will", "my will", "trust", "beneficiar", "inherit", "legacy"]),
    ("budgeting", &["budget", "afford", "spend", "expense", "cost", "pay for", "bill"]),
];
const DEFAULT_PROCESS: &str = "planning";

fn purpose_levels(purpose: &str) -> Option<(NhfLevel7, NpfLevel)> {
    use NhfLevel7::*;
    use NpfLevel::*;
    Some(match purpose {
        "real estate investment" | "self-employment" | "wealth building" => (Esteem, RetirementWealthLifestyle),
        "medical expenses" | "debt repayment" => (Basic, SavingsEmergencies),
        "rent" | "buying car" | "daily expenses" => (Basic, ConsumptionImmediate),
        "emergency fund" | "taxes" | "insurance coverage" => (SafetyL1, SavingsEmergencies),
        "retirement" | "buying house" | "education" => (SafetyL2, RetirementWealthLifestyle),
        "family support" => (LoveBelongingness, ConsumptionImmediate),
        "vacation" => (SelfTranscendence, RetirementWealthLifestyle),
        "charity" | "legacy planning" => (SelfActualization, RetirementWealthLifestyle),
        _ => return None,
    })
}

fn process_levels(process: &str) -> (NhfLevel7, NpfLevel) {
    use NhfLevel7::*;
    use NpfLevel::*;
    match process {
        "investing" => (Esteem, RetirementWealthLifestyle),
        "debt management" => (Basic, SavingsEmergencies),
        "budgeting" => (Basic, ConsumptionImmediate),
        "legacy planning" => (SelfActualization, RetirementWealthLifestyle),
        _ => (SafetyL1, SavingsEmergencies),
    }
}

const STRESS_CUES: &[(StressLevel, &[&str])] = &[
    (StressLevel::High, &[
        "urgent", "evict", "desperate", "panic", "drowning", "collections", "overdue", "can t afford",
        "cant afford", "losing my", "foreclos", "bankrupt", "homeless", "asap", "shut off",
    ]),
    (StressLevel::Moderate, &[
        "worried", "worry", "stress", "struggl", "behind on", "tight", "anxious", "scared", "afraid", "debt",
        "late payment", "overwhelm",
    ]),
    (StressLevel::Slight, &["unsure", "not sure", "confus", "wondering", "concern", "hesitant", "torn"]),
];

const RISK_CUES: &[(RiskLevel, &[&str])] = &[
    (RiskLevel::ChanceTaking, &[
        "crypto", "bitcoin", "stock options", "call options", "options trading", "yolo", "gambl", "all in",
        "margin", "meme stock", "lottery", "leverage", "day trad",
    ]),
    (RiskLevel::Calculative, &[
        "allocation", "weighing", "compare", "vs", "versus", "diversif", "index fund", "etf", "portfolio",
        "invest", "rebalanc", "returns", "expense ratio", "vti", "voo",
    ]),
    (RiskLevel::Cautious, &[
        "safe", "emergency fund", "insurance", "savings account", "high yield", "conservative", "avoid risk",
        "protect", "secure", "pay off", "save", "saving", "budget",
    ]),
];

/// Lowercase text with every non-alphanumeric run collapsed to one space and
/// padded, so a cue matches at the start of any word.
struct CueText(String);

impl CueText {
    fn new(text: &str) -> Self {
        let mut out = String::with_capacity(text.len() + 2);
        out.push(' ');
        let mut last_space = true;
        for c in text.chars().flat_map(char::to_lowercase) {
            if c.is_alphanumeric() {
                out.push(c);
                last_space = false;
            } else if !last_space {
                out.push(' ');
                last_space = true;
            }
        }
        if !last_space {
            out.push(' ');
        }
        CueText(out)
    }

    fn has(&self, cue: &str) -> bool {
        self.0.contains(&format!(" {cue}"))
    }

    fn any(&self, cues: &[&str]) -> bool {
        cues.iter().any(|c| self.has(c))
    }
}

fn first_match<'a, T: Copy>(text: &CueText, table: &'a [(T, &'a [&'a str])]) -> Option<T> {
    table.iter().find(|(_, cues)| text.any(cues)).map(|(v, _)| *v)
}

/// Splits into sentences, keeping terminal punctuation. A period only ends a
/// sentence when followed by whitespace or the end of text.
pub(crate) fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let next_is_break = chars.peek().is_none_or(|&(_, n)| n.is_whitespace());
        let end = match c {
            '?' | '!' | '\n' => true,
            '.' => next_is_break,
            _ => false,
        };
        if end {
            let s = text[start..i + c.len_utf8()].trim();
            if !s.is_empty() && s.chars().any(char::is_alphanumeric) {
                out.push(s);
            }
            start = i + c.len_utf8();
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() && tail.chars().any(char::is_alphanumeric) {
        out.push(tail);
    }
    out
}

fn normalize_query(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

const ASK_CUES: &[&str] = &["need", "want", "should", "how", "help", "plan", "advice", "trying", "looking"];

fn age_regexes() -> &'static [Regex; 4] {
    static RE: OnceLock<[Regex; 4]> = OnceLock::new();
    RE.get_or_init(|| {
        [
            Regex::new(r"\b(?:i['’]?m|i am)\s+(?:a\s+)?(\d{1,3})\b").unwrap(),
            Regex::new(r"\b(?:at\s+)?aged?\s+(\d{1,3})\b").unwrap(),
            Regex::new(r"\b(\d{1,3})\s*(?:years?[\s-]old|yo|y/o)\b").unwrap(),
            Regex::new(r"(?:^|[\s(\[])(\d{2})\s?[mf]\b").unwrap(),
        ]
    })
}

const NOT_AN_AGE: &[&str] = &[
    "months", "month", "weeks", "week", "days", "day", "hours", "hour", "percent", "dollars", "grand", "k",
    "minutes", "times", "payments", "years", "year", "%", "x",
];

fn detect_ages(lower: &str) -> Vec<u32> {
    let mut ages = Vec::new();
    for (i, re) in age_regexes().iter().enumerate() {
        for caps in re.captures_iter(lower) {
            let m = caps.get(1).unwrap();
            let Ok(age) = m.as_str().parse::<u32>() else { continue };
            let rest = lower[m.end()..].trim_start();
            if i == 0 {
                let next = rest.split(|c: char| c.is_whitespace() || c == ',' || c == '.').next().unwrap_or("");
                let years_old = rest.starts_with("years old") || rest.starts_with("year old");
                if !(14..=99).contains(&age) || (NOT_AN_AGE.contains(&next) && !years_old) || rest.starts_with('%') {
                    continue;
                }
            }
            if i == 3 && lower[..m.start()].ends_with('$') {
                continue;
            }
            if (1..120).contains(&age) && !ages.contains(&age) {
                ages.push(age);
            }
        }
    }
    ages
}

fn money_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?:(?P<c1>[$€£])\s?)?(?P<num>\d[\d,]*(?:\.\d+)?)(?:\s?(?P<k>k\b|thousand\b))?(?:\s?(?P<c2>usd|dollars|eur|euros|gbp|pounds)\b)?",
        )
        .unwrap()
    })
}

fn period_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^\s*(?:/\s*|an?\s+|per\s+|each\s+|every\s+)?(?P<p>yr\b|year\b|annum\b|annually\b|yearly\b|month\b|mo\b|monthly\b|hour\b|hr\b|hourly\b|week\b|wk\b|weekly\b|biweekly\b|bi-weekly\b|two weeks\b|other week\b)",
        )
        .unwrap()
    })
}

const INCOME_CUES: &[&str] = &[
    "salary", "income", "make", "making", "earn", "earning", "earnings", "take home", "paid", "gross", "wage",
    "wages", "bring in", "brings in", "paycheck",
];

fn income_keyword_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let alts: Vec<String> = INCOME_CUES.iter().map(|c| regex::escape(c)).collect();
        Regex::new(&format!(r"\b(?:{})\b", alts.join("|"))).unwrap()
    })
}

fn parse_period(word: &str) -> IncomePeriod {
    match word {
        "yr" | "year" | "annum" | "annually" | "yearly" => IncomePeriod::Annual,
        "month" | "mo" | "monthly" => IncomePeriod::Monthly,
        "hour" | "hr" | "hourly" => IncomePeriod::Hourly,
        "week" | "wk" | "weekly" => IncomePeriod::Weekly,
        _ => IncomePeriod::Biweekly,
    }
}

/// Period when none is stated: large figures read as annual, small ones as hourly.
fn default_period(amount: f64) -> IncomePeriod {
    if amount >= 20_000.0 {
        IncomePeriod::Annual
    } else if amount <= 200.0 {
        IncomePeriod::Hourly
    } else {
        IncomePeriod::Monthly
    }
}

fn detect_incomes(lower: &str) -> Vec<DetectedIncome> {
    let mut out = Vec::new();
    for sentence in sentences(lower) {
        let mut used_until = 0;
        for kw in income_keyword_regex().find_iter(sentence) {
            let from = kw.end().max(used_until);
            let window_end = (kw.end() + 60).min(sentence.len());
            let Some(window) = sentence.get(from..window_end).or_else(|| sentence.get(from..)) else { continue };
            let Some(caps) = money_regex()
                .captures_iter(window)
                .find(|c| c.name("c1").is_some() || c.name("c2").is_some() || c.name("k").is_some())
            else {
                continue;
            };
            let whole = caps.get(0).unwrap();
            used_until = from + whole.end();
            let Ok(mut amount) = caps["num"].replace(',', "").parse::<f64>() else { continue };
            if caps.name("k").is_some() {
                amount *= 1000.0;
            }
            let currency = match (caps.name("c1").map(|m| m.as_str()), caps.name("c2").map(|m| m.as_str())) {
                (Some("€"), _) | (_, Some("eur" | "euros")) => "EUR",
                (Some("£"), _) | (_, Some("gbp" | "pounds")) => "GBP",
                _ => "USD",
            };
            let after = &sentence[used_until..];
            let period = period_regex()
                .captures(after)
                .map(|c| parse_period(&c["p"]))
                .unwrap_or_else(|| default_period(amount));
            if amount > 0.0 {
                out.push(DetectedIncome { amount, period, currency: currency.to_string() });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct RuleEngine;

impl RuleEngine {
    pub fn label_for(&self, query: &str) -> NeedLabel {
        let text = CueText::new(query);
        let purpose = PURPOSES
            .iter()
            .find(|(_, cues)| text.any(cues))
            .map(|(p, _)| *p)
            .unwrap_or(DEFAULT_PURPOSE);
        let process = PROCESSES
            .iter()
            .find(|(_, cues)| text.any(cues))
            .map(|(p, _)| *p)
            .unwrap_or(DEFAULT_PROCESS);
        NeedLabel::new(purpose, process).expect("lexicon labels are non-empty")
    }
}

impl ExtractionEngine for RuleEngine {
    fn name(&self) -> &str {
        "rule"
    }

    fn summarize(&self, post: &Post) -> Result<QuerySummary, ExtractionError> {
        let sents = sentences(&post.text);
        let mut questions: Vec<String> = Vec::new();
        for s in sents.iter().filter(|s| s.ends_with('?')) {
            let q = normalize_query(s);
            if !questions.contains(&q) {
                questions.push(q);
            }
        }
        let core = if questions.is_empty() {
            sents
                .iter()
                .find(|s| CueText::new(s).any(ASK_CUES))
                .or(sents.first())
                .map(|s| normalize_query(s))
        } else {
            Some(questions.remove(0))
        };
        let core_query = core.ok_or_else(|| ExtractionError::Validation {
            schema_id: super::schema::SUMMARY.into(),
            reason: "post has no text to summarize".into(),
            raw: post.text.clone(),
        })?;
        questions.truncate(2);
        Ok(QuerySummary { post_id: post.post_id.clone(), core_query, additional_queries: questions })
    }

    fn extract_needs(&self, summary: &QuerySummary) -> Result<Vec<NeedLabel>, ExtractionError> {
        Ok(summary.queries().map(|q| self.label_for(q)).collect())
    }

    fn map_hierarchy(&self, label: &NeedLabel, _: &QuerySummary) -> Result<(NhfLevel7, NpfLevel), ExtractionError> {
        Ok(purpose_levels(&label.purpose).unwrap_or_else(|| process_levels(&label.process)))
    }

    fn assess_behavior(
        &self,
        label: &NeedLabel,
        context: &QuerySummary,
    ) -> Result<(StressLevel, RiskLevel), ExtractionError> {
        let joined = context.queries().collect::<Vec<_>>().join(" ");
        let text = CueText::new(&format!("{joined} {} {}", label.purpose, label.process));
        let stress = first_match(&text, STRESS_CUES).unwrap_or(StressLevel::Low);
        let risk = first_match(&text, RISK_CUES).unwrap_or(RiskLevel::Unassigned);
        Ok((stress, risk))
    }

    fn detect_age_income(&self, post: &Post) -> Result<DetectedMentions, ExtractionError> {
        let lower = post.text.to_lowercase();
        Ok(DetectedMentions { ages: detect_ages(&lower), incomes: detect_incomes(&lower) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(text: &str) -> Post {
        Post {
            post_id: "p".into(),
            author: "u".into(),
            created_at: 1_650_000_000,
            subreddit: "personalfinance".into(),
            text: text.into(),
        }
    }

    fn summary(core: &str) -> QuerySummary {
        QuerySummary { post_id: "p".into(), core_query: core.into(), additional_queries: vec![] }
    }

    fn label(p: &str, q: &str) -> NeedLabel {
        NeedLabel::new(p, q).unwrap()
    }

    #[test]
    fn sentence_splitting() {
        assert_eq!(
            sentences("I earn $4,500.50 a month. Is that ok? yes!\nnew line"),
            ["I earn $4,500.50 a month.", "Is that ok?", "yes!", "new line"]
        );
        assert!(sentences("  ...  ").is_empty());
    }

    #[test]
    fn summarize_single_question() {
        let s = RuleEngine.summarize(&post("Should I open a   Roth IRA?")).unwrap();
        assert_eq!(s.core_query, "should i open a roth ira?");
        assert!(s.additional_queries.is_empty());
    }

    #[test]
    fn summarize_three_asks() {
        let s = RuleEngine
            .summarize(&post("Context here. How much rent can I afford? Should I pay off my car? Is a Roth worth it? And a 4th?"))
            .unwrap();
        assert_eq!(s.core_query, "how much rent can i afford?");
        assert_eq!(s.additional_queries, ["should i pay off my car?", "is a roth worth it?"]);
    }

    #[test]
    fn summarize_without_question_uses_ask_sentence() {
        let s = RuleEngine.summarize(&post("Got a raise last week. I need a plan for my bonus.")).unwrap();
        assert_eq!(s.core_query, "i need a plan for my bonus.");
        assert!(RuleEngine.summarize(&post("   ")).unwrap_err().is_validation());
    }

    #[test]
    fn need_keyword_map() {
        let needs = RuleEngine.extract_needs(&summary("should I use savings for a medical bill")).unwrap();
        assert_eq!(needs, [label("medical expenses", "saving")]);
        let needs = RuleEngine.extract_needs(&summary("best index fund for retirement")).unwrap();
        assert_eq!(needs, [label("retirement", "investing")]);
    }

    #[test]
    fn hierarchy_examples() {
        let ctx = summary("x");
        assert_eq!(
            RuleEngine.map_hierarchy(&label("rent", "budgeting"), &ctx).unwrap(),
            (NhfLevel7::Basic, NpfLevel::ConsumptionImmediate)
        );
        assert_eq!(
            RuleEngine.map_hierarchy(&label("emergency fund", "saving"), &ctx).unwrap(),
            (NhfLevel7::SafetyL1, NpfLevel::SavingsEmergencies)
        );
        assert_eq!(
            RuleEngine.map_hierarchy(&label("charity", "legacy planning"), &ctx).unwrap(),
            (NhfLevel7::SelfActualization, NpfLevel::RetirementWealthLifestyle)
        );
        // Unknown purposes fall back on the process.
        assert_eq!(
            RuleEngine.map_hierarchy(&label("general finances", "investing"), &ctx).unwrap(),
            (NhfLevel7::Esteem, NpfLevel::RetirementWealthLifestyle)
        );
    }

    #[test]
    fn every_lexicon_purpose_has_levels() {
        for (p, _) in PURPOSES {
            assert!(purpose_levels(p).is_some(), "{p}");
        }
    }

    #[test]
    fn behavior_cues() {
        let l = label("rent", "budgeting");
        let (stress, _) = RuleEngine
            .assess_behavior(&l, &summary("we got an eviction notice, what do we do urgently?"))
            .unwrap();
        assert_eq!(stress, StressLevel::High);

        let l = label("wealth building", "investing");
        let (_, risk) = RuleEngine.assess_behavior(&l, &summary("weighing VTI vs VOO allocations")).unwrap();
        assert_eq!(risk, RiskLevel::Calculative);

        let l = label("general finances", "planning");
        let (stress, risk) = RuleEngine.assess_behavior(&l, &summary("what is a good first step?")).unwrap();
        assert_eq!((stress, risk), (StressLevel::Low, RiskLevel::Unassigned));
    }

    #[test]
    fn age_income_fixtures() {
        let m = RuleEngine.detect_age_income(&post("I'm 27, making $65k/yr")).unwrap();
        assert_eq!(m.ages, [27]);
        assert_eq!(m.incomes, [DetectedIncome { amount: 65000.0, period: IncomePeriod::Annual, currency: "USD".into() }]);

        let m = RuleEngine.detect_age_income(&post("thinking about index funds")).unwrap();
        assert_eq!(m, DetectedMentions::default());

        let m = RuleEngine.detect_age_income(&post("salary is $4,500 a month at age 31")).unwrap();
        assert_eq!(m.ages, [31]);
        assert_eq!(m.incomes, [DetectedIncome { amount: 4500.0, period: IncomePeriod::Monthly, currency: "USD".into() }]);
    }

    #[test]
    fn age_false_positives_are_skipped() {
        for text in ["I'm 5 months behind on rent", "i'm 100% sure", "I'm 3 years into my job", "worth $30m now"] {
            let m = RuleEngine.detect_age_income(&post(text)).unwrap();
            assert!(m.ages.is_empty(), "{text}: {:?}", m.ages);
        }
        assert_eq!(RuleEngine.detect_age_income(&post("(34F) looking for help")).unwrap().ages, [34]);
        assert_eq!(RuleEngine.detect_age_income(&post("I am 45 years old")).unwrap().ages, [45]);
    }

    #[test]
    fn income_needs_a_keyword_and_takes_first_amount() {
        let m = RuleEngine
            .detect_age_income(&post("Rent is $1,500 a month. I make $3,000 a month and spend $200 a week."))
            .unwrap();
        assert_eq!(m.incomes.len(), 1);
        assert_eq!(m.incomes[0].amount, 3000.0);
        assert_eq!(m.incomes[0].period, IncomePeriod::Monthly);

        let m = RuleEngine.detect_age_income(&post("I earn €50,000 per year")).unwrap();
        assert_eq!(m.incomes[0].currency, "EUR");

        let m = RuleEngine.detect_age_income(&post("I get paid $25 an hour")).unwrap();
        assert_eq!(m.incomes[0].period, IncomePeriod::Hourly);
    }

    #[test]
    fn deterministic_output() {
        let p = post("I'm 29 and I make $70k. Should I max my 401k? Or pay off my student loan?");
        let a = crate::extraction::extract_post(&RuleEngine, &p).unwrap();
        let b = crate::extraction::extract_post(&RuleEngine, &p).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
