//! Pattern-based PII detection and replacement.
//!
//! Detectors run in a fixed priority order (URL, email, crypto address, IP,
//! card number, phone). A later detector never claims bytes already claimed
//! by an earlier one, so a URL containing an email stays one `<URL>` and a
//! card number is never half-consumed by the phone pattern.

use std::fmt;
use std::net::{Ipv4Addr, Ipv6Addr};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PiiCategory {
    EmailAddress,
    PhoneNumber,
    CreditCard,
    IpAddress,
    CryptoAddress,
    Url,
    Username,
}

impl PiiCategory {
    pub fn label(self) -> &'static str {
        match self {
            PiiCategory::EmailAddress => "EMAIL_ADDRESS",
            PiiCategory::PhoneNumber => "PHONE_NUMBER",
            PiiCategory::CreditCard => "CREDIT_CARD",
            PiiCategory::IpAddress => "IP_ADDRESS",
            PiiCategory::CryptoAddress => "CRYPTO_ADDRESS",
            PiiCategory::Url => "URL",
            PiiCategory::Username => "USERNAME",
        }
    }

    pub fn replacement(self) -> String {
        match self {
            PiiCategory::Username => "@<USERNAME>".to_string(),
            other => format!("<{}>", other.label()),
        }
    }
}

impl fmt::Display for PiiCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One replaced entity; `start..end` are byte offsets into the input text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Redaction {
    pub start: usize,
    pub end: usize,
    pub category: PiiCategory,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Redacted {
    pub text: String,
    pub redactions: Vec<Redaction>,
}

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?i)\b(?:https?://|ftp://|www\.)[^\s<>"'`]+"#).unwrap());
static EMAIL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)[a-z0-9._%+\-]+@[a-z0-9\-]+(?:\.[a-z0-9\-]+)*\.[a-z]{2,}").unwrap());
static ETH_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b0x[0-9a-fA-F]{40}\b").unwrap());
static BECH32_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(?:bc1|tb1|ltc1)[02-9ac-hj-np-z]{11,71}\b").unwrap());
static BASE58_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b[13][1-9A-HJ-NP-Za-km-z]{25,34}\b").unwrap());
static IPV4_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3}\b").unwrap());
static IPV6_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:[0-9a-f]{0,4}:){2,7}(?:(?:\d{1,3}\.){3}\d{1,3}|[0-9a-f]{0,4})").unwrap());
static DID_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\bdid:(?:plc|web|key):[A-Za-z0-9._:%\-]+").unwrap());
static CARD_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?:\d[ -]?){12,18}\d\b").unwrap());
static PHONE_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:\+\d{1,3}[\s.\-]?)?(?:\(\d{1,4}\)[\s.\-]?)?\d{2,5}(?:[\s.\-]?\d{2,5}){1,4}").unwrap()
});

/// Replaces detected entities with `<CATEGORY>` tokens. Mentions are left
/// to [`anonymize_mentions`].
pub fn redact_pii(text: &str) -> Redacted {
    let mut spans: Vec<Redaction> = Vec::new();
    detect(text, &mut spans);
    apply(text, spans)
}

/// Replaces every `@handle` (including dotted custom domains) with
/// `@<USERNAME>`.
pub fn anonymize_mentions(text: &str) -> String {
    anonymize_mentions_with_spans(text).text
}

pub fn anonymize_mentions_with_spans(text: &str) -> Redacted {
    let mut spans = mention_spans(text);
    // raw account identifiers pasted into text are treated like handles
    for m in DID_RE.find_iter(text) {
        let end = m.start() + m.as_str().trim_end_matches(['.', ':', '-']).len();
        claim(&mut spans, m.start(), end, PiiCategory::Username);
    }
    apply(text, spans)
}

/// PII redaction followed by mention anonymization.
pub fn scrub(text: &str) -> String {
    anonymize_mentions(&redact_pii(text).text)
}

fn detect(text: &str, spans: &mut Vec<Redaction>) {
    for m in URL_RE.find_iter(text) {
        let end = m.start() + trim_url(m.as_str()).len();
        claim(spans, m.start(), end, PiiCategory::Url);
    }
    for m in EMAIL_RE.find_iter(text) {
        claim(spans, m.start(), m.end(), PiiCategory::EmailAddress);
    }
    for m in ETH_RE.find_iter(text).chain(BECH32_RE.find_iter(text)) {
        claim(spans, m.start(), m.end(), PiiCategory::CryptoAddress);
    }
    for m in BASE58_RE.find_iter(text) {
        if base58check_valid(m.as_str()) {
            claim(spans, m.start(), m.end(), PiiCategory::CryptoAddress);
        }
    }
    for m in IPV4_RE.find_iter(text) {
        let dotted_neighbour = text[..m.start()].ends_with('.') || text[m.end()..].starts_with(".");
        let followed_by_digit =
            text[m.end()..].strip_prefix('.').is_some_and(|r| r.starts_with(|c: char| c.is_ascii_digit()));
        let preceded_by_digit =
            text[..m.start()].strip_suffix('.').is_some_and(|r| r.ends_with(|c: char| c.is_ascii_digit()));
        if m.as_str().parse::<Ipv4Addr>().is_ok() && !(dotted_neighbour && (followed_by_digit || preceded_by_digit)) {
            claim(spans, m.start(), m.end(), PiiCategory::IpAddress);
        }
    }
    for m in IPV6_RE.find_iter(text) {
        let before = text[..m.start()].chars().next_back();
        if before.is_some_and(|c| c.is_ascii_hexdigit() || c == ':') {
            continue;
        }
        let candidate = m.as_str();
        if candidate.parse::<Ipv6Addr>().is_ok() {
            claim(spans, m.start(), m.end(), PiiCategory::IpAddress);
        }
    }
    for m in CARD_RE.find_iter(text) {
        let digits: Vec<u8> = m.as_str().bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();
        if (13..=19).contains(&digits.len()) && luhn_valid(&digits) {
            claim(spans, m.start(), m.end(), PiiCategory::CreditCard);
        }
    }
    for m in PHONE_RE.find_iter(text) {
        let s = m.as_str();
        let before = text[..m.start()].chars().next_back();
        let after = text[m.end()..].chars().next();
        if before.is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '.' || c == '+')
            || after.is_some_and(|c| c.is_alphanumeric() || c == '_')
        {
            continue;
        }
        let digits = s.bytes().filter(u8::is_ascii_digit).count();
        let international = s.starts_with('+');
        let ok = if international { (8..=15).contains(&digits) } else { (10..=15).contains(&digits) };
        if ok {
            claim(spans, m.start(), m.end(), PiiCategory::PhoneNumber);
        }
    }
}

fn claim(spans: &mut Vec<Redaction>, start: usize, end: usize, category: PiiCategory) {
    if start >= end || spans.iter().any(|s| start < s.end && s.start < end) {
        return;
    }
    spans.push(Redaction { start, end, category });
}

fn apply(text: &str, mut spans: Vec<Redaction>) -> Redacted {
    spans.sort_by_key(|s| s.start);
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for s in &spans {
        out.push_str(&text[cursor..s.start]);
        out.push_str(&s.category.replacement());
        cursor = s.end;
    }
    out.push_str(&text[cursor..]);
    Redacted { text: out, redactions: spans }
}

fn trim_url(url: &str) -> &str {
    let mut s = url;
    loop {
        let trimmed = s.trim_end_matches(['.', ',', ';', ':', '!', '?', '\'', '"', ']', '}']);
        let trimmed = if trimmed.ends_with(')') && trimmed.matches('(').count() < trimmed.matches(')').count() {
            &trimmed[..trimmed.len() - 1]
        } else {
            trimmed
        };
        if trimmed.len() == s.len() {
            return s;
        }
        s = trimmed;
    }
}

fn is_handle_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_')
}

fn mention_spans(text: &str) -> Vec<Redaction> {
    let mut spans = Vec::new();
    let mut prev: Option<char> = None;
    let mut skip_until = 0;
    for (i, c) in text.char_indices() {
        let before = prev;
        prev = Some(c);
        if i < skip_until || c != '@' {
            continue;
        }
        let rest = &text[i + 1..];
        let len = rest.find(|c: char| !is_handle_char(c)).unwrap_or(rest.len());
        let token = rest[..len].trim_end_matches(['.', '-']);
        if !token.starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
            continue;
        }
        // word-glued `x@y` is only a mention when it looks like a domain
        let glued = before.is_some_and(|p| p.is_alphanumeric() || p == '_');
        if glued && !token.contains('.') {
            continue;
        }
        let end = i + 1 + token.len();
        spans.push(Redaction { start: i, end, category: PiiCategory::Username });
        skip_until = end;
    }
    spans
}

pub(crate) fn luhn_valid(digits: &[u8]) -> bool {
    let sum: u32 = digits
        .iter()
        .rev()
        .enumerate()
        .map(|(i, &d)| {
            let d = d as u32;
            if i % 2 == 1 {
                let x = d * 2;
                if x > 9 {
                    x - 9
                } else {
                    x
                }
            } else {
                d
            }
        })
        .sum();
    sum.is_multiple_of(10)
}

const BASE58_ALPHABET: &[u8] = b"123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

/// Legacy Bitcoin address check: 25 decoded bytes whose last four are the
/// double-SHA-256 checksum of the first 21.
fn base58check_valid(s: &str) -> bool {
    let mut bytes: Vec<u8> = Vec::new(); // little-endian base-256 accumulator
    for c in s.bytes() {
        let Some(mut carry) = BASE58_ALPHABET.iter().position(|&a| a == c).map(|v| v as u32) else {
            return false;
        };
        for b in bytes.iter_mut() {
            carry += (*b as u32) * 58;
            *b = (carry & 0xff) as u8;
            carry >>= 8;
        }
        while carry > 0 {
            bytes.push((carry & 0xff) as u8);
            carry >>= 8;
        }
    }
    let leading_zeros = s.bytes().take_while(|&c| c == b'1').count();
    let mut decoded = vec![0u8; leading_zeros];
    decoded.extend(bytes.iter().rev());
    if decoded.len() != 25 {
        return false;
    }
    let check = Sha256::digest(Sha256::digest(&decoded[..21]));
    check[..4] == decoded[21..]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn email_example() {
        let r = redact_pii("We welcome feedback at janedoe@gmail.com");
        assert_eq!(r.text, "We welcome feedback at <EMAIL_ADDRESS>");
        assert_eq!(r.redactions, vec![Redaction { start: 23, end: 40, category: PiiCategory::EmailAddress }]);
    }

    #[test]
    fn tokens_are_stable() {
        for t in [
            "<EMAIL_ADDRESS>",
            "<URL> <IP_ADDRESS> <PHONE_NUMBER> <CREDIT_CARD> <CRYPTO_ADDRESS>",
            "@<USERNAME> said hi",
        ] {
            assert_eq!(redact_pii(t).text, t);
            assert_eq!(anonymize_mentions(t), t);
        }
    }

    #[test]
    fn url_and_ip() {
        assert_eq!(redact_pii("visit https://a.example/x from 10.0.0.7").text, "visit <URL> from <IP_ADDRESS>");
        assert_eq!(redact_pii("see (www.example.org/a).").text, "see (<URL>).");
    }

    #[test]
    fn url_swallows_embedded_email() {
        assert_eq!(redact_pii("https://x.org/?to=a@b.com ok").text, "<URL> ok");
    }

    #[test]
    fn ipv6_and_versions() {
        assert_eq!(redact_pii("host 2001:db8::8a2e:370:7334 up").text, "host <IP_ADDRESS> up");
        assert_eq!(redact_pii("loopback ::1").text, "loopback <IP_ADDRESS>");
        assert_eq!(redact_pii("at 12:30:45 today").text, "at 12:30:45 today");
        assert_eq!(redact_pii("v1.2.3.4.5 released").text, "v1.2.3.4.5 released");
        assert_eq!(redact_pii("bad 999.1.1.1").text, "bad 999.1.1.1");
    }

    #[test]
    fn cards_need_luhn() {
        assert_eq!(redact_pii("card 4111 1111 1111 1111.").text, "card <CREDIT_CARD>.");
        assert!(!redact_pii("card 4111-1111-1111-1112").text.contains("CREDIT_CARD"));
    }

    #[test]
    fn phones() {
        assert_eq!(redact_pii("call +1 (416) 555-0199 now").text, "call <PHONE_NUMBER> now");
        assert_eq!(redact_pii("call 416-555-0199").text, "call <PHONE_NUMBER>");
        assert_eq!(redact_pii("call +44 20 7946 0958").text, "call <PHONE_NUMBER>");
        // short numbers and years stay
        assert_eq!(redact_pii("in 2025 we had 1588757 likes").text, "in 2025 we had 1588757 likes");
    }

    #[test]
    fn crypto_addresses() {
        assert_eq!(redact_pii("tip 1A1zP1eP5QGefi2DMPTfTL5SLmv7DivfNa thanks").text, "tip <CRYPTO_ADDRESS> thanks");
        assert_eq!(redact_pii("eth 0x52908400098527886E0F7030069857D2E4169EE7").text, "eth <CRYPTO_ADDRESS>");
        assert_eq!(redact_pii("bc1qar0srrr7xfkvy5l643lydnw9re59gtzzwf5mdq").text, "<CRYPTO_ADDRESS>");
        // base58-looking word with a bad checksum
        assert!(!redact_pii("1A1zP1eP5QGefi2DMPTfTL5SLmv7DivfNb").text.contains('<'));
    }

    #[test]
    fn mentions() {
        assert_eq!(anonymize_mentions("thanks @alice.bsky.social!"), "thanks @<USERNAME>!");
        assert_eq!(anonymize_mentions("email me @ noon"), "email me @ noon");
        assert_eq!(anonymize_mentions("cc @govevers.wisconsin.gov"), "cc @<USERNAME>");
        assert_eq!(anonymize_mentions("hi @bob, @carol."), "hi @<USERNAME>, @<USERNAME>.");
        assert_eq!(anonymize_mentions("C@t"), "C@t");
        assert_eq!(anonymize_mentions("see did:plc:abc234xyz."), "see @<USERNAME>.");
    }

    #[test]
    fn scrub_combines_both() {
        assert_eq!(scrub("@alice.bsky.social mail janedoe@gmail.com"), "@<USERNAME> mail <EMAIL_ADDRESS>");
    }

    #[test]
    fn luhn_reference_numbers() {
        let d = |s: &str| s.bytes().map(|b| b - b'0').collect::<Vec<_>>();
        assert!(luhn_valid(&d("79927398713")));
        assert!(!luhn_valid(&d("79927398710")));
    }

    #[test]
    fn redaction_spans_do_not_overlap() {
        let r = redact_pii("a@b.com https://x.y/a@b.com 10.1.1.1 +1 416 555 0199");
        for w in r.redactions.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
    }
}
