//! Trigram and normalized Levenshtein scores for name pairs.
//!
//!     cargo run --example name_similarity
//!     cargo run --example name_similarity -- "Cafe Blue" "Blue Café"

use poi_conflate::similarity::{
    levenshtein_distance, levenshtein_similarity, levenshtein_similarity_with, normalize_name, trigram_set,
    trigram_similarity, LevenshteinNormalization,
};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let pairs: Vec<(String, String)> = match args.as_slice() {
        [a, b] => vec![(a.clone(), b.clone())],
        _ => [
            ("Fitnessgl", "Fitness GL"),
            ("Starbucks", "Starbuck"),
            ("Cafe Blue", "Blue Café"),
            ("Nana's Thai Takeaway", "N/Anas Thai Take away"),
            ("Brugseni", "Brugseni Nuuk"),
            ("Hotel Hans Egede", "hotel  hans egede"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect(),
    };

    println!(
        "{:<22} {:<22} {:>6} {:>6} {:>4} {:>7}",
        "a", "b", "trg", "lev", "d", "lev_gen"
    );
    for (a, b) in &pairs {
        println!(
            "{:<22} {:<22} {:>6.3} {:>6.3} {:>4} {:>7.3}",
            a,
            b,
            trigram_similarity(a, b).value(),
            levenshtein_similarity(a, b).value(),
            levenshtein_distance(a, b),
            levenshtein_similarity_with(a, b, LevenshteinNormalization::Generalized).value(),
        );
    }

    if let [(a, _)] = pairs.as_slice() {
        println!("\nnormalized: {:?}", normalize_name(a));
        println!("trigrams:   {:?}", trigram_set(a));
    }
}
