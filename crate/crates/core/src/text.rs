//! Small text normalization helpers shared by every module.

use unicode_normalization::UnicodeNormalization;

/// NFC-normalizes `s`.
pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// NFC plus lowercase. All keyword and item comparisons go through this.
pub fn fold(s: &str) -> String {
    nfc(s).to_lowercase()
}

/// Collapses every run of whitespace into a single space and trims both ends.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}
