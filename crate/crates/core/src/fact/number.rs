use num_rational::Ratio;

use super::FactError;
use crate::lexicon::Lexicon;

/// A proportion value with the integers of an "m in n" style form, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedNumber {
    pub value: f64,
    pub numerator: Option<u64>,
    pub denominator: Option<u64>,
}

impl NormalizedNumber {
    fn from_ratio(r: Ratio<u64>, keep_integers: Option<(u64, u64)>) -> Self {
        NormalizedNumber {
            // both parts are far below 2^53, so this division is correctly rounded
            value: *r.numer() as f64 / *r.denom() as f64,
            numerator: keep_integers.map(|p| p.0),
            denominator: keep_integers.map(|p| p.1),
        }
    }
}

/// Exact decimal: "12.5" → 125/10, "1,000" → 1000/1.
fn parse_decimal(s: &str) -> Option<Ratio<u64>> {
    let s = s.replace(',', "");
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s.as_str(), ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 9 {
        return None;
    }
    let digits: u64 = format!("{int}{frac}").parse().ok()?;
    Some(Ratio::new(digits, 10u64.pow(frac.len() as u32)))
}

fn parse_count(word: &str) -> Option<u64> {
    if word.chars().all(|c| c.is_ascii_digit() || c == ',') {
        return word.replace(',', "").parse().ok();
    }
    Lexicon::get().number_word(word)
}

/// Splits the surface form into lowercase words, keeping "%" and "/" apart.
fn words(surface: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in surface.split_whitespace() {
        let mut cur = String::new();
        for c in raw.chars() {
            if c == '%' || c == '/' {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            } else {
                cur.extend(c.to_lowercase());
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

/// Converts the text of a number entity into a value in `[0, 1]`.
///
/// Accepts "n%", "n percent", "m in n", "m out of n", "m/n", fraction words
/// ("half of", "two thirds") and bare decimals at most 1.
pub fn normalize_number(surface: &str) -> Result<NormalizedNumber, FactError> {
    let unparsable = || FactError::UnparsableNumber(surface.trim().to_string());
    let mut w = words(surface);
    while w.last().map_or(false, |x| x == "of" || x == "the") {
        w.pop();
    }
    if w.is_empty() {
        return Err(unparsable());
    }

    let is_percent = |x: &str| x == "%" || x == "percent" || x == "pct";
    if is_percent(w.last().unwrap()) || (w.len() >= 2 && w[w.len() - 2] == "per" && w[w.len() - 1] == "cent") {
        let cut = if w.last().unwrap() == "cent" { 2 } else { 1 };
        if w.len() != cut + 1 {
            return Err(unparsable());
        }
        let n = parse_decimal(&w[0]).ok_or_else(unparsable)?;
        if n > Ratio::from_integer(100) {
            return Err(unparsable());
        }
        return Ok(NormalizedNumber::from_ratio(n / 100, None));
    }

    let ratio_form = match w.as_slice() {
        [m, sep, n] if sep == "in" || sep == "/" => Some((m, n)),
        [m, out, of, n] if out == "out" && of == "of" => Some((m, n)),
        _ => None,
    };
    if let Some((m, n)) = ratio_form {
        let m = parse_count(m).ok_or_else(unparsable)?;
        let n = parse_count(n).ok_or_else(unparsable)?;
        if n == 0 {
            return Err(unparsable());
        }
        if m > n {
            return Err(FactError::OutOfRange(m as f64 / n as f64));
        }
        let keep = if m > 0 { Some((m, n)) } else { None };
        return Ok(NormalizedNumber::from_ratio(Ratio::new(m, n), keep));
    }

    if let Some((m, n)) = Lexicon::get().fraction(&w) {
        return Ok(NormalizedNumber::from_ratio(Ratio::new(m, n), if m > 0 { Some((m, n)) } else { None }));
    }

    if w.len() == 1 {
        if let Some(r) = parse_decimal(&w[0]) {
            if w[0].contains('.') {
                if r > Ratio::from_integer(1) {
                    return Err(FactError::OutOfRange(*r.numer() as f64 / *r.denom() as f64));
                }
                return Ok(NormalizedNumber::from_ratio(r, None));
            }
        }
    }
    Err(unparsable())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_forms() {
        assert_eq!(normalize_number("40%").unwrap(), NormalizedNumber { value: 0.4, numerator: None, denominator: None });
        assert_eq!(
            normalize_number("1 in 4").unwrap(),
            NormalizedNumber { value: 0.25, numerator: Some(1), denominator: Some(4) }
        );
        assert_eq!(
            normalize_number("half of").unwrap(),
            NormalizedNumber { value: 0.5, numerator: Some(1), denominator: Some(2) }
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(normalize_number("140%"), Err(FactError::UnparsableNumber(_))));
        assert!(matches!(normalize_number("5 in 4"), Err(FactError::OutOfRange(_))));
        assert!(matches!(normalize_number("students"), Err(FactError::UnparsableNumber(_))));
        assert!(matches!(normalize_number("1 in 0"), Err(FactError::UnparsableNumber(_))));
        assert!(matches!(normalize_number("40"), Err(FactError::UnparsableNumber(_))));
    }
}
