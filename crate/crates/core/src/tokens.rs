//! Whitespace tokenization shared by the graph loader, the verbalizer and the
//! language-model backends.

/// Split on whitespace and lower-case every token.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// Join tokens back into a single space-separated string.
pub fn join(tokens: &[String]) -> String {
    tokens.join(" ")
}

/// Literal separator token used in context features.
pub const SEP: &str = "[SEP]";
/// Placeholder emitted for an unfilled mask in flat token form.
pub const MASK: &str = "[MASK]";
/// Connective inserted before every interior edge mask of an infill template.
pub const IT: &str = "It";
/// Terminator placed after each interior node mask.
pub const PERIOD: &str = ".";
/// Edge-type-agnostic relation used by the first two training templates and
/// as the initial value of interior edge masks.
pub const RELATES_TO: [&str; 2] = ["relates", "to"];

pub fn relates_to() -> Vec<String> {
    RELATES_TO.iter().map(|s| s.to_string()).collect()
}
