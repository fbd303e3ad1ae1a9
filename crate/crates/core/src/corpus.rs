//! Seeded synthetic Italian-like text for fixtures and benchmarks.
//!
//! Word frequencies follow a Zipf law over a core vocabulary of common
//! Italian words plus a long tail of generated words, so the three n-gram
//! collections grow in size the way they do on real corpora.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CORE: &[&str] = &[
    "di", "e", "il", "la", "che", "a", "in", "un", "per", "è", "non", "una", "con", "del", "si", "i", "le", "da",
    "al", "della", "lo", "come", "ma", "più", "anche", "sono", "nel", "alla", "dei", "se", "gli", "ha", "questo",
    "tra", "delle", "suo", "sua", "nella", "loro", "essere", "stato", "può", "dopo", "tutti", "molto", "fa", "così",
    "già", "quando", "perché", "ancora", "anni", "città", "tempo", "parte", "prima", "sempre", "casa", "vita",
    "mondo", "giorno", "lavoro", "paese", "storia", "modo", "uomo", "donna", "anno", "cosa", "volta", "governo",
    "italia", "roma", "milano", "napoli", "regione", "comune", "chiesa", "guerra", "popolo", "legge", "libro",
    "acqua", "terra", "mare", "fiume", "monte", "strada", "piazza", "scuola", "famiglia", "padre", "madre",
    "figlio", "figlia", "fratello", "amico", "nome", "lingua", "parola", "opera", "musica", "arte", "teatro",
    "film", "società", "università", "politica", "economia", "sviluppo", "progetto", "sistema", "servizio",
    "numero", "gruppo", "caso", "punto", "fine", "inizio", "secolo", "periodo", "nord", "sud", "centro",
    "grande", "piccolo", "nuovo", "vecchio", "primo", "ultimo", "altro", "stesso", "bello", "buono", "lungo",
    "alto", "importante", "possibile", "diverso", "italiano", "italiana", "europeo", "nazionale", "pubblico",
    "fare", "dire", "andare", "vedere", "sapere", "venire", "dare", "stare", "volere", "potere", "dovere",
    "trovare", "parlare", "pensare", "sentire", "lasciare", "portare", "prendere", "credere", "tenere",
    "aveva", "era", "erano", "fu", "furono", "sarà", "sarebbe", "hanno", "abbiamo", "siamo", "viene", "ciò",
    "dove", "mentre", "quindi", "però", "oppure", "né", "sia", "ogni", "qualche", "nessuno", "tutto", "niente",
    "oggi", "ieri", "domani", "qui", "là", "sopra", "sotto", "dentro", "fuori", "senza", "verso", "contro",
    "durante", "secondo", "circa", "solo", "proprio", "bene", "male", "poco", "troppo", "tanto", "quanto",
    "nostro", "vostro", "mio", "tuo", "questa", "quella", "quello", "quelli", "queste", "cui", "chi", "qualcosa",
    "caffè", "virtù", "perciò", "affinché", "benché", "poiché", "finché", "lunedì", "venerdì", "tribù",
];

/// Elided articles and prepositions, glued to the following word.
const ELIDED: &[&str] = &["l'", "dell'", "all'", "nell'", "un'", "dall'", "sull'", "quest'", "c'"];

const SYLLABLES: &[&str] = &[
    "ca", "sa", "to", "ri", "la", "ne", "po", "mo", "ve", "di", "gi", "lo", "fa", "re", "tu", "ba", "pe", "co",
    "se", "mi", "no", "te", "vi", "za", "chi", "glie", "gno", "sco", "tra", "pro", "cen", "por", "ten", "man",
];

const TAIL_WORDS: usize = 4000;
const ZIPF_EXPONENT: f64 = 1.05;

fn tail_word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..=4);
    let mut w: String = (0..n).map(|_| SYLLABLES[rng.gen_range(0..SYLLABLES.len())]).collect();
    if rng.gen_ratio(1, 12) {
        w.pop();
        w.push(['à', 'è', 'ì', 'ò', 'ù'][rng.gen_range(0..5)]);
    }
    w
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Generates about `target_tokens` words of text, one sentence per line.
/// The same seed always yields the same text.
pub fn generate_corpus(seed: u64, target_tokens: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab: Vec<String> = CORE.iter().map(|s| s.to_string()).collect();
    vocab.extend((0..TAIL_WORDS).map(|_| tail_word(&mut rng)));
    let weights: Vec<f64> = (1..=vocab.len()).map(|r| 1.0 / (r as f64).powf(ZIPF_EXPONENT)).collect();
    let zipf = WeightedIndex::new(&weights).expect("positive weights");

    let mut out = String::new();
    let mut tokens = 0;
    while tokens < target_tokens {
        let len = rng.gen_range(4..=20);
        let mut sentence = String::new();
        for i in 0..len {
            if i > 0 {
                sentence.push(if rng.gen_ratio(1, 15) { ',' } else { ' ' });
                if sentence.ends_with(',') {
                    sentence.push(' ');
                }
            }
            if rng.gen_ratio(1, 40) {
                sentence.push_str(&rng.gen_range(1..2100).to_string());
            } else {
                if rng.gen_ratio(1, 20) {
                    sentence.push_str(ELIDED[rng.gen_range(0..ELIDED.len())]);
                }
                let word = &vocab[zipf.sample(&mut rng)];
                if i == 0 || rng.gen_ratio(1, 30) {
                    sentence.push_str(&capitalize(word));
                } else {
                    sentence.push_str(word);
                }
            }
            tokens += 1;
        }
        sentence.push(['.', '.', '.', '?', '!', ';'][rng.gen_range(0..6)]);
        out.push_str(&sentence);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::tokenize;

    #[test]
    fn deterministic() {
        assert_eq!(generate_corpus(3, 500), generate_corpus(3, 500));
        assert_ne!(generate_corpus(3, 500), generate_corpus(4, 500));
    }

    #[test]
    fn token_count_near_target() {
        let text = generate_corpus(1, 10_000);
        let n: usize = text.lines().map(|l| tokenize(l).len()).sum();
        assert!((10_000..11_000).contains(&n), "{n}");
    }
}
