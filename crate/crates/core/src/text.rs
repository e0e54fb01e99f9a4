//! Text normalization shared by name resolution, ranking and metrics.

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Lower-cased word tokens; every non-alphanumeric character is a separator.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Canonical form of an entity name: case-folded, whitespace collapsed and
/// one leading article removed. No stemming.
pub fn normalize_name(name: &str) -> String {
    let lowered = name.to_lowercase();
    let mut words: Vec<&str> = lowered.split_whitespace().collect();
    if words.len() > 1 && ARTICLES.contains(&words[0]) {
        words.remove(0);
    }
    words.join(" ")
}

/// Key used to detect duplicate candidate texts.
pub fn candidate_key(text: &str) -> String {
    text.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

pub fn slugify(name: &str) -> String {
    let slug = tokenize(&normalize_name(name)).join("-");
    if slug.is_empty() {
        "entity".to_owned()
    } else {
        slug
    }
}
