//! Seeded synthetic dialogues for scale checks and benchmarks.

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compiler::{InteractionHistory, Turn};

const SPEAKERS: &[&str] = &["Ann", "Bo", "Carla", "Dev", "Elif", "Farid", "Gwen", "Hugo"];
const PEOPLE: &[&str] = &["Maya", "Oskar", "Lena", "Tariq", "Noor", "Pavel", "Rosa", "Sven", "Yuki", "Zane"];
const PLACES: &[&str] = &[
    "Cafe Roma", "Blue Lake", "Pine Hill Library", "Harbor Market", "Old Town Gallery", "Cedar Park",
    "Riverside Gym", "Maple Bakery", "North Beach", "Sunset Theater", "Green Valley Farm", "City Museum",
];
const EVENTS: &[(&str, &[&str])] = &[
    ("adopted", &["a puppy", "a kitten", "two rabbits", "a parrot"]),
    ("bought", &["a guitar", "a used bike", "a telescope", "new hiking boots", "a sewing machine"]),
    ("finished", &["a pottery course", "the first novel draft", "a half marathon", "the kitchen renovation"]),
    ("started", &["a painting class", "a new job", "volunteering", "a podcast", "learning Spanish"]),
    ("joined", &["a book club", "a choir", "the climbing team", "a chess league"]),
    ("visited", &["the aquarium", "an old friend", "the science fair", "a vineyard"]),
    ("painted", &["a sunset mural", "a portrait", "the garden fence"]),
    ("won", &["a baking contest", "a raffle prize", "the chess final"]),
];
const FILLER: &[&str] = &[
    "haha nice", "That sounds great!", "Wow, really?", "How was your week?", "Tell me more.",
    "I totally agree.", "Thanks for sharing!", "Sounds fun.", "Oh no!", "Good luck with that.",
];
const OPINIONS: &[&str] = &[
    "It was a lot of work but worth it.", "The weather was perfect that day.", "My family loved it.",
    "I want to go back next year.", "It took longer than expected.", "We stayed until late evening.",
];

fn fact_sentence(rng: &mut ChaCha8Rng, day: NaiveDate) -> String {
    let (verb, objects) = EVENTS.choose(rng).expect("events");
    let object = objects.choose(rng).expect("objects");
    let place = PLACES.choose(rng).expect("places");
    let when = day - Duration::days(rng.gen_range(0..60));
    match rng.gen_range(0..4) {
        0 => format!("I {verb} {object} at {place} on {}.", when.format("%-d %B %Y")),
        1 => format!("Last week {} {verb} {object} near {place}.", PEOPLE.choose(rng).expect("people")),
        2 => format!("My sister {verb} {object} in {}.", when.format("%B %Y")),
        _ => format!("We {verb} {object} with {} at {place}.", PEOPLE.choose(rng).expect("people")),
    }
}

/// A dialogue of `turns` turns in sessions of 20, two speakers per session,
/// each turn one to three sentences mixing facts, opinions and filler.
pub fn generate_history(turns: usize, seed: u64) -> InteractionHistory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2023, 1, 2).expect("valid date");
    let mut out = Vec::with_capacity(turns);
    for i in 0..turns {
        let session = i / 20;
        let day = start + Duration::days(session as i64 * 3);
        let pair = [SPEAKERS[session % SPEAKERS.len()], SPEAKERS[(session + 3) % SPEAKERS.len()]];
        let n = rng.gen_range(1..=3);
        let mut parts = Vec::with_capacity(n);
        for _ in 0..n {
            parts.push(match rng.gen_range(0..10) {
                0..=4 => fact_sentence(&mut rng, day),
                5..=7 => OPINIONS.choose(&mut rng).expect("opinions").to_string(),
                _ => FILLER.choose(&mut rng).expect("filler").to_string(),
            });
        }
        out.push(Turn {
            session_key: format!("session_{}", session + 1),
            speaker: pair[i % 2].to_string(),
            text: parts.join(" "),
            timestamp: day.and_hms_opt(10, 0, 0),
            image_caption: None,
        });
    }
    InteractionHistory { conversation_id: format!("synthetic-{seed}"), turns: out }
}

/// Questions over the synthetic vocabulary.
pub fn sample_queries(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..n)
        .map(|_| {
            let (verb, objects) = EVENTS.choose(&mut rng).expect("events");
            let object = objects.choose(&mut rng).expect("objects");
            match rng.gen_range(0..3) {
                0 => format!("When was {object} {verb}?"),
                1 => format!("Who {verb} {object} at {}?", PLACES.choose(&mut rng).expect("places")),
                _ => format!("What happened at {} in May 2023?", PLACES.choose(&mut rng).expect("places")),
            }
        })
        .collect()
}
