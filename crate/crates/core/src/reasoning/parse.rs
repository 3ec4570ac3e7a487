//! Reply parsing for free-text model output.

/// First standalone integer in `1..=5`, scanning left to right.
///
/// Digits glued to letters (`"L2"`, `"5th"`) or part of a decimal (`"4.5"`)
/// are not standalone.
pub fn parse_score(reply: &str) -> Option<u8> {
    let chars: Vec<char> = reply.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        let before = start.checked_sub(1).map(|j| chars[j]);
        let after = chars.get(i).copied();
        let glued_before = match before {
            Some(c) if c.is_alphanumeric() || c == '_' => true,
            Some('.') => start >= 2 && chars[start - 2].is_ascii_digit(),
            _ => false,
        };
        let glued_after = match after {
            Some(c) if c.is_alphanumeric() || c == '_' => true,
            Some('.') => chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()),
            _ => false,
        };
        if glued_before || glued_after {
            continue;
        }
        let digits: String = chars[start..i].iter().collect();
        if let Ok(v) = digits.parse::<u64>() {
            if (1..=5).contains(&v) {
                return Some(v as u8);
            }
        }
    }
    None
}

/// First standalone `yes` or `no` (case-insensitive).
pub fn parse_verdict(reply: &str) -> Option<bool> {
    reply.split(|c: char| !c.is_alphanumeric()).find_map(|w| match w.to_ascii_lowercase().as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_label_prefix() {
        assert_eq!(parse_score("Score: 4 — likely near a picnic area"), Some(4));
    }

    #[test]
    fn no_score_in_reply() {
        assert_eq!(parse_score("I cannot tell from this description."), None);
        assert_eq!(parse_score("maybe 7 or 9"), None);
        assert_eq!(parse_score(""), None);
    }

    #[test]
    fn glued_and_decimal_digits_are_skipped() {
        assert_eq!(parse_score("Level L2 scene, 4.5 overall, final 3"), Some(3));
        assert_eq!(parse_score("the 5th bench; score 2"), Some(2));
    }

    #[test]
    fn first_in_range_wins() {
        assert_eq!(parse_score("10 meters away, so 2/5"), Some(2));
        assert_eq!(parse_score("(5)"), Some(5));
    }

    #[test]
    fn verdicts() {
        assert_eq!(parse_verdict("Yes, the bench is right here."), Some(true));
        assert_eq!(parse_verdict("no."), Some(false));
        assert_eq!(parse_verdict("Nothing yet, keep going"), None);
    }
}
