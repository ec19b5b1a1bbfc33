//! Small helpers shared across modules: digests, seed derivation, calendar
//! dates and text normalization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of the compact JSON encoding of `value`.
pub fn sha256_json<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("value serializes to JSON");
    sha256_hex(&bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Derives an independent 64-bit seed from a base seed and a stream of
/// labels (splitmix64 finalizer over an FNV-style fold).
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = base ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h = splitmix(h ^ p.wrapping_mul(0x0100_0000_01B3));
    }
    splitmix(h)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(base: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, parts))
}

/// Stable 64-bit label for a string, for use in [`derive_seed`].
pub fn label(s: &str) -> u64 {
    s.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3))
}

const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];

/// Calendar day within a fixed year; only month/day matter for matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthDay {
    pub month: u8,
    pub day: u8,
}

impl MonthDay {
    pub const YEAR: u16 = 2025;

    pub fn new(month: u8, day: u8) -> Option<Self> {
        let valid = (1..=12).contains(&month) && day >= 1 && day <= days_in_month(month);
        valid.then_some(Self { month, day })
    }

    /// `2025-04-10`
    pub fn iso(self) -> String {
        format!("{:04}-{:02}-{:02}", Self::YEAR, self.month, self.day)
    }

    /// `April 10th`
    pub fn spoken(self) -> String {
        format!("{} {}{}", MONTHS[self.month as usize - 1], self.day, ordinal_suffix(self.day))
    }

    pub fn parse_iso(s: &str) -> Option<Self> {
        let mut it = s.trim().split('-');
        let _year: u16 = it.next()?.parse().ok()?;
        let month = it.next()?.parse().ok()?;
        let day = it.next()?.parse().ok()?;
        if it.next().is_some() {
            return None;
        }
        Self::new(month, day)
    }

    pub fn plus_days(self, n: u8) -> Option<Self> {
        Self::new(self.month, self.day.checked_add(n)?)
    }
}

pub fn days_in_month(month: u8) -> u8 {
    match month {
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

fn ordinal_suffix(day: u8) -> &'static str {
    match (day % 10, day % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

pub fn month_from_name(word: &str) -> Option<u8> {
    let w = word.to_ascii_lowercase();
    let w = w.trim_end_matches('.');
    if w.len() < 3 {
        return None;
    }
    MONTHS
        .iter()
        .position(|m| {
            let m = m.to_ascii_lowercase();
            m == w || (w.len() >= 3 && m.starts_with(w) && (w.len() == 3 || w == "sept"))
        })
        .map(|i| i as u8 + 1)
}

/// Lowercases and replaces every non-alphanumeric run with one space, with a
/// leading and trailing space so phrase lookups can use ` word ` boundaries.
pub fn normalize_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push(' ');
    let mut last_space = true;
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            out.extend(ch.to_lowercase());
            last_space = false;
        } else if !last_space {
            out.push(' ');
            last_space = true;
        }
    }
    if !last_space {
        out.push(' ');
    }
    out
}

/// Whole-word phrase search in text produced by [`normalize_text`].
/// Returns the byte offset of the last occurrence.
pub fn find_phrase(normalized: &str, phrase: &str) -> Option<usize> {
    let needle = normalize_text(phrase);
    if needle.trim().is_empty() {
        return None;
    }
    normalized.rfind(&needle)
}

pub fn contains_phrase(normalized: &str, phrase: &str) -> bool {
    find_phrase(normalized, phrase).is_some()
}

/// Blocking token bucket shared by every caller of one remote endpoint.
#[derive(Clone)]
pub struct Throttle(std::sync::Arc<governor::DefaultDirectRateLimiter>);

impl Throttle {
    /// `None` or zero means unlimited.
    pub fn per_second(rate: Option<u32>) -> Option<Throttle> {
        let rate = std::num::NonZeroU32::new(rate?)?;
        Some(Throttle(std::sync::Arc::new(governor::RateLimiter::direct(governor::Quota::per_second(rate)))))
    }

    /// Blocks until a request may be sent.
    pub fn wait(&self) {
        use governor::clock::{Clock, DefaultClock};
        while let Err(not_until) = self.0.check() {
            std::thread::sleep(not_until.wait_time_from(DefaultClock::default().now()));
        }
    }
}

impl std::fmt::Debug for Throttle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Throttle")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dates_render_and_parse() {
        let d = MonthDay::new(4, 10).unwrap();
        assert_eq!(d.iso(), "2025-04-10");
        assert_eq!(d.spoken(), "April 10th");
        assert_eq!(MonthDay::new(3, 1).unwrap().spoken(), "March 1st");
        assert_eq!(MonthDay::new(3, 22).unwrap().spoken(), "March 22nd");
        assert_eq!(MonthDay::new(3, 13).unwrap().spoken(), "March 13th");
        assert_eq!(MonthDay::parse_iso("2025-04-10"), Some(d));
        assert!(MonthDay::new(2, 30).is_none());
    }

    #[test]
    fn month_names_and_abbreviations() {
        assert_eq!(month_from_name("April"), Some(4));
        assert_eq!(month_from_name("apr"), Some(4));
        assert_eq!(month_from_name("Sept"), Some(9));
        assert_eq!(month_from_name("ma"), None);
        assert_eq!(month_from_name("mayday"), None);
    }

    #[test]
    fn phrase_search_respects_word_boundaries() {
        let t = normalize_text("Any Wi-Fi on the flight? (carpool)");
        assert_eq!(t, " any wi fi on the flight carpool ");
        assert!(contains_phrase(&t, "wi-fi"));
        assert!(contains_phrase(&t, "flight"));
        assert!(!contains_phrase(&t, "car"));
    }

    #[test]
    fn derived_seeds_differ_per_part() {
        assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[1]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
        assert_eq!(derive_seed(7, &[3, 4]), derive_seed(7, &[3, 4]));
    }

    #[test]
    fn throttle_spaces_requests() {
        assert!(Throttle::per_second(None).is_none());
        assert!(Throttle::per_second(Some(0)).is_none());
        let t = Throttle::per_second(Some(20)).unwrap();
        let start = std::time::Instant::now();
        for _ in 0..22 {
            t.wait();
        }
        // A full bucket covers 20 requests; the last two wait ~50 ms each.
        assert!(start.elapsed() >= std::time::Duration::from_millis(90));
    }
}
