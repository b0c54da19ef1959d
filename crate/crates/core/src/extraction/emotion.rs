use super::types::{Emotion, EmotionProfile};

const FEAR: &[&str] = &[
    "afraid", "scared", "fear", "fearful", "worried", "worry", "worrying", "anxious", "anxiety", "nervous",
    "panic", "panicking", "terrified", "stress", "stressed", "risk", "risky", "lose", "losing",
    "uncertain", "concerned", "dread", "frightened",
];
const SADNESS: &[&str] = &[
    "sad", "depressed", "unhappy", "miserable", "regret", "crying", "cry", "hopeless", "lonely",
    "grief", "disappointed", "heartbroken", "lost", "devastated", "sorry",
];
const SURPRISE: &[&str] = &[
    "surprised", "shocked", "unexpected", "unexpectedly", "suddenly", "sudden", "wow", "unbelievable",
    "astonished", "amazed", "surprise",
];
const HAPPINESS: &[&str] = &[
    "happy", "glad", "excited", "grateful", "thankful", "great", "love", "proud", "relieved", "joy",
    "thrilled", "blessed", "lucky",
];
const ANGER: &[&str] = &[
    "angry", "mad", "furious", "annoyed", "frustrated", "frustrating", "unfair", "hate", "outraged",
    "ridiculous", "pissed", "infuriating",
];

fn lexicon(e: Emotion) -> &'static [&'static str] {
    match e {
        Emotion::Fear => FEAR,
        Emotion::Sadness => SADNESS,
        Emotion::Surprise => SURPRISE,
        Emotion::Happiness => HAPPINESS,
        Emotion::Anger => ANGER,
    }
}

/// Post-level emotion distribution from lexicon hit counts.
pub fn score_emotion_lexicon(text: &str) -> EmotionProfile {
    let lower = text.to_lowercase();
    let mut counts = Vec::new();
    for token in lower.split(|c: char| !(c.is_alphanumeric() || c == '\'')) {
        let token = token.trim_matches('\'');
        if token.is_empty() {
            continue;
        }
        for &e in Emotion::ALL {
            if lexicon(e).contains(&token) {
                counts.push((e, 1.0));
            }
        }
    }
    EmotionProfile::from_counts(&counts)
}
