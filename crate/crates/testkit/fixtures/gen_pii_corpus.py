#!/usr/bin/env python3
"""Writes pii_corpus.jsonl: synthetic lines with PII planted into templates.

Each record holds the text, the planted entities with their categories and
the expected scrubbed text. Labels are known by construction; checksums
(Luhn, base58check) are computed here, independently of the Rust code.
"""
import hashlib
import json
import random
import string
from pathlib import Path

rng = random.Random(2025)
B58 = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"
BECH32 = "qpzry9x8gf2tvdw0s3jn54khce6mua7l"

FIRST = ["jane", "omar", "li", "marie", "dev", "sam", "aiko", "raj", "ana", "tom"]
LAST = ["doe", "tremblay", "singh", "nguyen", "roy", "martin", "chen", "brown"]
DOMAINS = ["gmail.com", "example.org", "mail.example.co.uk", "uottawa.ca", "proton.me", "sub.example.net"]
SITES = ["example.com", "news.example.ca", "elections.example.org", "blog.example.net"]


def email():
    sep = rng.choice([".", "_", "", "+"])
    local = rng.choice(FIRST) + sep + rng.choice(LAST)
    if sep == "+":
        local = rng.choice(FIRST) + "+" + rng.choice(["news", "vote", "x1"])
    if rng.random() < 0.2:
        local = local.upper()
    return f"{local}@{rng.choice(DOMAINS)}"


def phone():
    a, b, c = rng.randint(200, 989), rng.randint(200, 989), rng.randint(0, 9999)
    return rng.choice([
        f"+1 {a} {b} {c:04d}",
        f"({a}) {b}-{c:04d}",
        f"{a}-{b}-{c:04d}",
        f"{a}.{b}.{c:04d}",
        f"+1-{a}-{b}-{c:04d}",
        f"+44 20 {rng.randint(7000, 8999)} {c:04d}",
    ])


def luhn_complete(prefix, length):
    digits = [int(d) for d in prefix]
    while len(digits) < length - 1:
        digits.append(rng.randint(0, 9))
    for check in range(10):
        cand = digits + [check]
        total = 0
        for i, d in enumerate(reversed(cand)):
            if i % 2 == 1:
                d *= 2
                if d > 9:
                    d -= 9
            total += d
        if total % 10 == 0:
            return "".join(map(str, cand))
    raise AssertionError


def card():
    kind = rng.choice(["visa", "mc", "amex"])
    if kind == "amex":
        n = luhn_complete(rng.choice(["34", "37"]), 15)
        groups = [n[:4], n[4:10], n[10:]]
    else:
        n = luhn_complete("4" if kind == "visa" else str(rng.randint(51, 55)), 16)
        groups = [n[i:i + 4] for i in range(0, 16, 4)]
    return rng.choice([" ", "-", ""]).join(groups)


def ipv4():
    return ".".join(str(rng.randint(1, 254)) for _ in range(4))


def ipv6():
    return rng.choice([
        "2001:db8::" + ":".join(f"{rng.randint(0, 0xffff):x}" for _ in range(3)),
        "fe80::" + ":".join(f"{rng.randint(1, 0xffff):x}" for _ in range(4)),
        ":".join(f"{rng.randint(0x1000, 0xffff):x}" for _ in range(8)),
    ])


def b58encode(raw):
    n = int.from_bytes(raw, "big")
    out = ""
    while n:
        n, r = divmod(n, 58)
        out = B58[r] + out
    pad = len(raw) - len(raw.lstrip(b"\0"))
    return "1" * pad + out


def crypto():
    kind = rng.choice(["eth", "btc", "bech32", "p2sh"])
    if kind == "eth":
        return "0x" + "".join(rng.choice("0123456789abcdefABCDEF") for _ in range(40))
    if kind == "bech32":
        return "bc1q" + "".join(rng.choice(BECH32) for _ in range(38))
    version = b"\x00" if kind == "btc" else b"\x05"
    payload = version + bytes(rng.randint(0, 255) for _ in range(20))
    check = hashlib.sha256(hashlib.sha256(payload).digest()).digest()[:4]
    return b58encode(payload + check)


def url():
    path = "/".join("".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(3, 8))) for _ in range(rng.randint(0, 2)))
    base = rng.choice(["https://", "http://", "www."]) + rng.choice(SITES)
    u = base + ("/" + path if path else "")
    if rng.random() < 0.3:
        u += f"?id={rng.randint(1, 999)}&ref=bsky"
    return u


def mention():
    return "@" + rng.choice([
        f"{rng.choice(FIRST)}.bsky.social",
        f"{rng.choice(FIRST)}{rng.choice(LAST)}.bsky.social",
        "govevers.wisconsin.gov",
        f"{rng.choice(LAST)}news.ca",
        rng.choice(FIRST) + rng.choice(LAST),
    ])


GEN = {
    "EMAIL_ADDRESS": email,
    "PHONE_NUMBER": phone,
    "CREDIT_CARD": card,
    "IP_ADDRESS": lambda: ipv4() if rng.random() < 0.6 else ipv6(),
    "CRYPTO_ADDRESS": crypto,
    "URL": url,
    "USERNAME": mention,
}
TOKEN = {c: f"<{c}>" for c in GEN}
TOKEN["USERNAME"] = "@<USERNAME>"

TEMPLATES = {
    "EMAIL_ADDRESS": ["We welcome feedback at {}", "Send your questions to {} before Friday.", "contact: {}", "My campaign inbox is {}, reply anytime!"],
    "PHONE_NUMBER": ["Call the riding office at {} for a lawn sign.", "text {} to volunteer", "Hotline: {}", "Reach me on {} after 6pm"],
    "CREDIT_CARD": ["Donated with card {} lol oops", "card number {} exp 09/27", "Is {} the right format?"],
    "IP_ADDRESS": ["the server at {} keeps timing out", "Logged in from {} again", "ping {} please"],
    "CRYPTO_ADDRESS": ["Tips welcome at {}", "send donations to {} thanks", "wallet {} is mine"],
    "URL": ["Full platform here: {}", "read {} before you vote", "Source ({}) says otherwise."],
    "USERNAME": ["thanks {}!", "cc {} on the debate clip", "{} you should see this", "Agree with {}, housing first."],
}
MIXED = [
    ("visit {} from {}", ["URL", "IP_ADDRESS"]),
    ("email {} or call {}", ["EMAIL_ADDRESS", "PHONE_NUMBER"]),
    ("{} posted {} and asked for {}", ["USERNAME", "URL", "CRYPTO_ADDRESS"]),
    ("Receipt for {} sent to {}.", ["CREDIT_CARD", "EMAIL_ADDRESS"]),
    ("{}: my number changed to {}", ["USERNAME", "PHONE_NUMBER"]),
]
NEGATIVE = [
    "Polls close at 9:30 tonight, see you there",
    "Turnout was 68.3% in 2021 and 62.5% in 2019",
    "Version v2.10.3 of the app fixed the bug",
    "email me @ noon",
    "The budget is 4.5 billion over 10 years",
    "Debate starts 2025-04-16 at 20:00 ET",
    "Order #12345 shipped",
    "Room 101, 3rd floor",
    "Final score 3-2 in overtime",
    "Price went from $1,299.99 to $999",
    "He won by 1,234 votes",
    "Riding 35047 has 112,000 electors",
    "ratio 16:9 is fine",
    "I am @ the rally now",
    "pi is about 3.14159",
]


def render(template, cats):
    values = [GEN[c]() for c in cats]
    text = template.format(*values)
    expected = template.format(*(TOKEN[c] for c in cats))
    return text, expected, [{"category": c, "value": v} for c, v in zip(cats, values)]


def main():
    out = []
    for cat, temps in TEMPLATES.items():
        for i in range(24):
            out.append(render(temps[i % len(temps)], [cat]))
    for i in range(40):
        t, cats = MIXED[i % len(MIXED)]
        out.append(render(t, cats))
    out.append(("We welcome feedback at janedoe@gmail.com", "We welcome feedback at <EMAIL_ADDRESS>",
                [{"category": "EMAIL_ADDRESS", "value": "janedoe@gmail.com"}]))
    for n in NEGATIVE:
        out.append((n, n, []))
    path = Path(__file__).with_name("pii_corpus.jsonl")
    with path.open("w") as f:
        for i, (text, expected, ents) in enumerate(out):
            f.write(json.dumps({"id": i, "text": text, "expected": expected, "entities": ents}) + "\n")
    print(f"wrote {len(out)} lines to {path}")


if __name__ == "__main__":
    main()
