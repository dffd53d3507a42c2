//! Offline text generator standing in for a hosted model.
//!
//! Records are assembled from fixed per-class word lists mixed with generic
//! news vocabulary, so classifiers trained on mock output have real signal
//! while the output stays a pure function of the prompt and seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::backend::{BackendError, CompletionRequest, TextBackend};
use crate::corpus::{normalize_label, tokenize, ClassLabel, Corpus, NewsRecord, Origin, Split};
use crate::prompt::{GENERATION_MARKER, ICL_MARKER};

pub const WORLD_WORDS: &[&str] = &[
    "government",
    "minister",
    "election",
    "president",
    "military",
    "troops",
    "rebels",
    "ceasefire",
    "embassy",
    "diplomat",
    "parliament",
    "refugees",
    "border",
    "treaty",
    "sanctions",
    "protest",
    "iraq",
    "baghdad",
    "najaf",
    "palestinian",
    "israeli",
    "iran",
    "nuclear",
    "korea",
    "sudan",
    "darfur",
    "afghanistan",
    "kabul",
    "militants",
    "hostage",
    "bombing",
    "insurgents",
    "police",
    "opposition",
    "vote",
    "coalition",
    "united",
    "nations",
    "summit",
    "peace",
    "envoy",
    "regime",
    "prime",
    "killed",
    "attack",
    "army",
    "capital",
    "leaders",
    "foreign",
    "crisis",
];

pub const SPORTS_WORDS: &[&str] = &[
    "game",
    "season",
    "coach",
    "team",
    "players",
    "championship",
    "league",
    "tournament",
    "olympic",
    "medal",
    "score",
    "victory",
    "defeat",
    "quarterback",
    "inning",
    "homer",
    "pitcher",
    "goal",
    "striker",
    "match",
    "cup",
    "final",
    "semifinal",
    "playoffs",
    "touchdown",
    "yankees",
    "red",
    "sox",
    "nba",
    "nfl",
    "golf",
    "tennis",
    "open",
    "round",
    "stroke",
    "lead",
    "win",
    "wins",
    "beat",
    "title",
    "racing",
    "driver",
    "lap",
    "athens",
    "gold",
    "sprint",
    "club",
    "manager",
    "fans",
    "stadium",
];

pub const BUSINESS_WORDS: &[&str] = &[
    "stocks",
    "shares",
    "market",
    "investors",
    "earnings",
    "profit",
    "revenue",
    "quarter",
    "dollar",
    "euro",
    "oil",
    "prices",
    "crude",
    "barrel",
    "economy",
    "inflation",
    "rates",
    "federal",
    "reserve",
    "bank",
    "loan",
    "merger",
    "acquisition",
    "deal",
    "billion",
    "million",
    "ceo",
    "company",
    "retail",
    "sales",
    "wall",
    "street",
    "nasdaq",
    "dow",
    "trade",
    "deficit",
    "growth",
    "forecast",
    "analysts",
    "bonds",
    "airline",
    "bankruptcy",
    "jobs",
    "unemployment",
    "consumer",
    "spending",
    "tax",
    "pension",
    "insurer",
    "fund",
];

pub const SCITECH_WORDS: &[&str] = &[
    "software",
    "microsoft",
    "google",
    "apple",
    "internet",
    "web",
    "computer",
    "technology",
    "researchers",
    "scientists",
    "space",
    "nasa",
    "launch",
    "satellite",
    "mars",
    "planet",
    "telescope",
    "wireless",
    "mobile",
    "phone",
    "chip",
    "intel",
    "linux",
    "browser",
    "search",
    "online",
    "digital",
    "network",
    "virus",
    "security",
    "hackers",
    "spam",
    "data",
    "server",
    "ibm",
    "sun",
    "processor",
    "broadband",
    "video",
    "games",
    "sony",
    "nintendo",
    "genome",
    "species",
    "study",
    "climate",
    "energy",
    "robot",
    "users",
    "version",
];

pub const GENERIC_WORDS: &[&str] = &[
    "the",
    "new",
    "after",
    "over",
    "said",
    "on",
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "weekend",
    "year",
    "first",
    "two",
    "three",
    "report",
    "reuters",
    "ap",
    "afp",
    "week",
    "today",
    "could",
    "would",
    "more",
    "than",
    "about",
    "its",
    "their",
    "from",
    "with",
    "into",
    "against",
    "last",
    "next",
    "top",
    "plans",
    "says",
    "officials",
    "news",
    "people",
    "since",
    "amid",
    "despite",
    "record",
    "early",
    "late",
    "major",
    "big",
    "set",
];

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mir", "zen", "tav", "ro", "quin", "bel", "dor", "sha", "vex", "ul", "tri", "nam",
    "gor", "pel", "xu", "fa", "ri", "mon",
];

pub fn class_words(label: ClassLabel) -> &'static [&'static str] {
    match label {
        ClassLabel::World => WORLD_WORDS,
        ClassLabel::Sports => SPORTS_WORDS,
        ClassLabel::Business => BUSINESS_WORDS,
        ClassLabel::SciTech => SCITECH_WORDS,
    }
}

/// What the mock answers to prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MockBehavior {
    /// Template records for generation prompts, vocabulary-overlap classification for ICL.
    #[default]
    Default,
    /// Every generated record carries this label; ICL answers are this label.
    OnlyClass(ClassLabel),
    /// ICL answers repeat the first demonstration's label.
    EchoFirstDemo,
}

#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    behavior: MockBehavior,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_behavior(behavior: MockBehavior) -> Self {
        MockBackend { behavior }
    }

    fn rng_for(prompt: &str, seed: u64) -> ChaCha8Rng {
        let digest = Sha256::digest(prompt.as_bytes());
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        for (k, s) in key.iter_mut().zip(seed.to_le_bytes()) {
            *k ^= s;
        }
        ChaCha8Rng::from_seed(key)
    }

    fn generate(&self, n: usize, rng: &mut ChaCha8Rng) -> String {
        let items: Vec<serde_json::Value> = (0..n)
            .map(|_| {
                let label = match self.behavior {
                    MockBehavior::OnlyClass(l) => l,
                    _ => ClassLabel::ALL[rng.gen_range(0..ClassLabel::COUNT)],
                };
                let (title, description) = compose(label, rng, MixProfile::SYNTHETIC);
                serde_json::json!({
                    "Title": title,
                    "Description": description,
                    "Class_Label": label.prompt_name(),
                })
            })
            .collect();
        let body = serde_json::to_string_pretty(&items).expect("json values serialize");
        format!("```json\n{body}\n```")
    }

    fn classify(&self, prompt: &str, rng: &mut ChaCha8Rng) -> String {
        let label = match self.behavior {
            MockBehavior::OnlyClass(l) => l,
            MockBehavior::EchoFirstDemo => first_demo_label(prompt)
                .unwrap_or_else(|| ClassLabel::ALL[rng.gen_range(0..ClassLabel::COUNT)]),
            MockBehavior::Default => {
                let query = prompt.split(ICL_MARKER).nth(1).unwrap_or(prompt);
                vocabulary_vote(query)
                    .unwrap_or_else(|| ClassLabel::ALL[rng.gen_range(0..ClassLabel::COUNT)])
            }
        };
        format!("Class Label: \"{}\"", label.prompt_name())
    }
}

impl TextBackend for MockBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let mut rng = Self::rng_for(&request.prompt, request.seed);
        if let Some(n) = requested_count(&request.prompt) {
            return Ok(self.generate(n, &mut rng));
        }
        if request.prompt.contains(ICL_MARKER) {
            return Ok(self.classify(&request.prompt, &mut rng));
        }
        Ok("I can only generate or classify news items.".to_string())
    }

    fn name(&self) -> &str {
        "mock"
    }
}

fn requested_count(prompt: &str) -> Option<usize> {
    let rest = &prompt[prompt.find(GENERATION_MARKER)? + GENERATION_MARKER.len()..];
    let end = rest.find(" different")?;
    rest[..end].trim().parse().ok()
}

fn first_demo_label(prompt: &str) -> Option<ClassLabel> {
    let after = &prompt[prompt.find("Class Label: \"")? + "Class Label: \"".len()..];
    normalize_label(&after[..after.find('"')?]).ok()
}

/// Class whose word list overlaps the text most; `None` on no overlap or a tie.
pub fn vocabulary_vote(text: &str) -> Option<ClassLabel> {
    let tokens = tokenize(text);
    let scores: Vec<usize> = ClassLabel::ALL
        .iter()
        .map(|&l| {
            let words = class_words(l);
            tokens
                .iter()
                .filter(|t| words.contains(&t.as_str()))
                .count()
        })
        .collect();
    let best = *scores.iter().max()?;
    let winners: Vec<_> = (0..ClassLabel::COUNT)
        .filter(|&i| scores[i] == best)
        .collect();
    (best > 0 && winners.len() == 1).then(|| ClassLabel::ALL[winners[0]])
}

#[derive(Clone, Copy)]
struct MixProfile {
    class_share: f64,
    cross_share: f64,
    /// Number of record-unique pseudo-name tokens.
    unique_names: usize,
}

impl MixProfile {
    const SYNTHETIC: MixProfile = MixProfile {
        class_share: 0.45,
        cross_share: 0.12,
        unique_names: 0,
    };
    const ORIGINAL: MixProfile = MixProfile {
        class_share: 0.4,
        cross_share: 0.15,
        unique_names: 3,
    };
}

fn compose(label: ClassLabel, rng: &mut ChaCha8Rng, profile: MixProfile) -> (String, String) {
    let pick = |rng: &mut ChaCha8Rng| -> String {
        let r: f64 = rng.gen();
        let list = if r < profile.class_share {
            class_words(label)
        } else if r < profile.class_share + profile.cross_share {
            let other = ClassLabel::ALL[rng.gen_range(0..ClassLabel::COUNT)];
            class_words(other)
        } else {
            GENERIC_WORDS
        };
        list.choose(rng).expect("non-empty list").to_string()
    };
    let title_len = rng.gen_range(4..=8);
    let mut title: Vec<String> = (0..title_len).map(|_| pick(rng)).collect();
    let desc_len = rng.gen_range(14..=32);
    let mut desc: Vec<String> = (0..desc_len).map(|_| pick(rng)).collect();
    for _ in 0..profile.unique_names {
        let name: String = (0..3)
            .map(|_| *SYLLABLES.choose(rng).expect("non-empty"))
            .collect();
        let at = rng.gen_range(0..=desc.len());
        desc.insert(at, capitalize(&name));
    }
    if let Some(first) = title.first_mut() {
        *first = capitalize(first);
    }
    if let Some(first) = desc.first_mut() {
        *first = capitalize(first);
    }
    (title.join(" "), format!("{}.", desc.join(" ")))
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// A balanced AGNews-shaped corpus built from the mock vocabulary plus
/// record-unique pseudo-names; the offline stand-in for real news data.
pub fn fixture_corpus(per_class: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f1c7);
    let mut records = Vec::with_capacity(per_class * ClassLabel::COUNT);
    let mut seen = std::collections::HashSet::new();
    while records.len() < per_class * ClassLabel::COUNT {
        let label = ClassLabel::ALL[records.len() % ClassLabel::COUNT];
        let (title, description) = compose(label, &mut rng, MixProfile::ORIGINAL);
        if !seen.insert((title.clone(), description.clone())) {
            continue;
        }
        records.push(
            NewsRecord::new(title, description, label, Origin::Original)
                .expect("composed fields are non-empty"),
        );
    }
    Corpus::new(records, Split::Unsplit)
}
