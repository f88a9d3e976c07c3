//! Range conditions of fee rules: `'3-5'`, `'>5'`, `'<3'`, `'100k-1m'`,
//! `'7.7%-8.3%'`, bare numbers and tags such as `immediate`.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    Days,
    Euros,
    Percent,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RangeSpec {
    /// `low <= x <= high`
    Interval {
        low: f64,
        high: f64,
    },
    /// `x > low`
    Above(f64),
    /// `x < high`
    Below(f64),
    Exact(f64),
    Tag(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("cannot parse range {text:?}: {reason}")]
pub struct RangeError {
    pub text: String,
    pub reason: String,
}

fn number(s: &str, unit: Unit, full: &str) -> Result<f64, RangeError> {
    let err = |reason: &str| RangeError {
        text: full.to_string(),
        reason: reason.to_string(),
    };
    let mut s = s.trim();
    if unit == Unit::Percent {
        s = s.strip_suffix('%').unwrap_or(s).trim();
    }
    let (digits, scale) = match s.chars().last() {
        Some('k' | 'K') => (&s[..s.len() - 1], 1e3),
        Some('m' | 'M') => (&s[..s.len() - 1], 1e6),
        _ => (s, 1.0),
    };
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit() || c == '.') {
        return Err(err("expected a number"));
    }
    let x: f64 = digits.parse().map_err(|_| err("expected a number"))?;
    Ok(x * scale)
}

pub fn parse_range_spec(text: &str, unit: Unit) -> Result<RangeSpec, RangeError> {
    let t = text.trim();
    let err = |reason: &str| RangeError {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    if t.is_empty() {
        return Err(err("empty"));
    }
    if t.chars().all(|c| c.is_ascii_alphabetic() || c == '_') {
        return Ok(RangeSpec::Tag(t.to_ascii_lowercase()));
    }
    if let Some(rest) = t.strip_prefix('>') {
        return Ok(RangeSpec::Above(number(rest, unit, text)?));
    }
    if let Some(rest) = t.strip_prefix('<') {
        return Ok(RangeSpec::Below(number(rest, unit, text)?));
    }
    if let Some((a, b)) = t.split_once('-') {
        let (low, high) = (number(a, unit, text)?, number(b, unit, text)?);
        if low > high {
            return Err(err("lower bound exceeds upper bound"));
        }
        return Ok(RangeSpec::Interval { low, high });
    }
    Ok(RangeSpec::Exact(number(t, unit, text)?))
}

impl RangeSpec {
    pub fn contains(&self, x: f64) -> bool {
        match self {
            RangeSpec::Interval { low, high } => *low <= x && x <= *high,
            RangeSpec::Above(low) => x > *low,
            RangeSpec::Below(high) => x < *high,
            RangeSpec::Exact(v) => x == *v,
            RangeSpec::Tag(_) => false,
        }
    }

    /// Matches a merchant capture delay: a tag, a day count, or
    /// `immediate`, which is also 0 days.
    pub fn accepts_delay(&self, delay: &str) -> bool {
        let delay = delay.trim();
        if let RangeSpec::Tag(tag) = self {
            return tag.eq_ignore_ascii_case(delay);
        }
        if delay.eq_ignore_ascii_case("immediate") {
            return self.contains(0.0);
        }
        match parse_range_spec(delay, Unit::Days) {
            Ok(RangeSpec::Exact(days)) => self.contains(days),
            // A merchant delay written as a range fits when it lies inside.
            Ok(RangeSpec::Interval { low, high }) => self.contains(low) && self.contains(high),
            _ => false,
        }
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeSpec::Interval { low, high } => write!(f, "[{low}, {high}]"),
            RangeSpec::Above(low) => write!(f, "> {low}"),
            RangeSpec::Below(high) => write!(f, "< {high}"),
            RangeSpec::Exact(v) => write!(f, "= {v}"),
            RangeSpec::Tag(t) => f.write_str(t),
        }
    }
}
