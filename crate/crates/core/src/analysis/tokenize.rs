use std::sync::LazyLock;

use regex::Regex;
use unicode_segmentation::UnicodeSegmentation;

static SPECIAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@<USERNAME>|<[A-Z_]+>|#[\p{L}\p{N}_]+").unwrap());

/// Splits text into lowercase word tokens. Redaction placeholders
/// (`<URL>`, `@<USERNAME>`, ...) and `#hashtags` survive as single tokens;
/// punctuation-only pieces and one-character words are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let push_words = |piece: &str, out: &mut Vec<String>| {
        for w in piece.unicode_words() {
            let w = w.to_lowercase();
            if w.chars().count() > 1 {
                out.push(w);
            }
        }
    };
    let mut cursor = 0;
    for m in SPECIAL.find_iter(text) {
        push_words(&text[cursor..m.start()], &mut out);
        let tok = m.as_str();
        if tok.starts_with('#') {
            out.push(tok.to_lowercase());
        } else {
            out.push(tok.to_string());
        }
        cursor = m.end();
    }
    push_words(&text[cursor..], &mut out);
    out
}
