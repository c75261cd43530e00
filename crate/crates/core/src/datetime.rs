//! strftime-style datetime patterns restricted to `%Y %m %d %H %M %S`.
//!
//! `%%` is accepted as a literal percent sign. Every other `%x` token is
//! rejected so that patterns behave identically here and in generated code.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatetimeError {
    #[error("unsupported format token `%{0}`")]
    UnsupportedFormatToken(char),
    #[error("format ends with a lone `%`")]
    TrailingPercent,
    #[error("value {value:?} does not match format {format:?}")]
    Mismatch { value: String, format: String },
    #[error("value {0:?} is not a valid calendar date/time")]
    OutOfRange(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Year,
    Month,
    Day,
    Hour,
    Minute,
    Second,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Literal(char),
    Field(Field),
}

fn compile(format: &str) -> Result<Vec<Piece>, DatetimeError> {
    let mut pieces = Vec::new();
    let mut chars = format.chars();
    while let Some(c) = chars.next() {
        if c != '%' {
            pieces.push(Piece::Literal(c));
            continue;
        }
        let field = match chars.next() {
            Some('Y') => Field::Year,
            Some('m') => Field::Month,
            Some('d') => Field::Day,
            Some('H') => Field::Hour,
            Some('M') => Field::Minute,
            Some('S') => Field::Second,
            Some('%') => {
                pieces.push(Piece::Literal('%'));
                continue;
            }
            Some(other) => return Err(DatetimeError::UnsupportedFormatToken(other)),
            None => return Err(DatetimeError::TrailingPercent),
        };
        pieces.push(Piece::Field(field));
    }
    Ok(pieces)
}

pub fn validate_format(format: &str) -> Result<(), DatetimeError> {
    compile(format).map(|_| ())
}

/// Parses `value` against `format`. Missing date fields default to
/// 1970-01-01, missing time fields to zero.
pub fn parse(value: &str, format: &str) -> Result<NaiveDateTime, DatetimeError> {
    let pieces = compile(format)?;
    let mismatch = || DatetimeError::Mismatch {
        value: value.to_string(),
        format: format.to_string(),
    };
    let (mut year, mut month, mut day) = (1970i32, 1u32, 1u32);
    let (mut hour, mut minute, mut second) = (0u32, 0u32, 0u32);
    let bytes: Vec<char> = value.chars().collect();
    let mut i = 0usize;
    for piece in &pieces {
        match piece {
            Piece::Literal(c) => {
                if bytes.get(i) != Some(c) {
                    return Err(mismatch());
                }
                i += 1;
            }
            Piece::Field(field) => {
                let max_digits = if *field == Field::Year { 4 } else { 2 };
                let start = i;
                while i < bytes.len() && i - start < max_digits && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == start {
                    return Err(mismatch());
                }
                let n: u32 = bytes[start..i]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| mismatch())?;
                match field {
                    Field::Year => year = n as i32,
                    Field::Month => month = n,
                    Field::Day => day = n,
                    Field::Hour => hour = n,
                    Field::Minute => minute = n,
                    Field::Second => second = n,
                }
            }
        }
    }
    if i != bytes.len() {
        return Err(mismatch());
    }
    let date = NaiveDate::from_ymd_opt(year, month, day)
        .ok_or_else(|| DatetimeError::OutOfRange(value.to_string()))?;
    let time = NaiveTime::from_hms_opt(hour, minute, second)
        .ok_or_else(|| DatetimeError::OutOfRange(value.to_string()))?;
    Ok(NaiveDateTime::new(date, time))
}

pub fn format(value: &NaiveDateTime, format: &str) -> Result<String, DatetimeError> {
    use chrono::{Datelike, Timelike};
    let pieces = compile(format)?;
    let mut out = String::new();
    for piece in pieces {
        match piece {
            Piece::Literal(c) => out.push(c),
            Piece::Field(Field::Year) => out.push_str(&format!("{:04}", value.year())),
            Piece::Field(Field::Month) => out.push_str(&format!("{:02}", value.month())),
            Piece::Field(Field::Day) => out.push_str(&format!("{:02}", value.day())),
            Piece::Field(Field::Hour) => out.push_str(&format!("{:02}", value.hour())),
            Piece::Field(Field::Minute) => out.push_str(&format!("{:02}", value.minute())),
            Piece::Field(Field::Second) => out.push_str(&format!("{:02}", value.second())),
        }
    }
    Ok(out)
}

/// Seconds since the Unix epoch, interpreting the value as UTC.
pub fn epoch_seconds(value: &NaiveDateTime) -> i64 {
    value.and_utc().timestamp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reformat_day_first_to_iso() {
        let dt = parse("31.12.2020", "%d.%m.%Y").unwrap();
        assert_eq!(format(&dt, "%Y-%m-%d").unwrap(), "2020-12-31");
    }

    #[test]
    fn rejects_unsupported_tokens() {
        assert_eq!(
            validate_format("%Y-%j"),
            Err(DatetimeError::UnsupportedFormatToken('j'))
        );
        assert_eq!(validate_format("%Y%"), Err(DatetimeError::TrailingPercent));
        assert!(validate_format("100%% %H:%M:%S").is_ok());
    }

    #[test]
    fn rejects_impossible_dates_and_trailing_text() {
        assert!(matches!(
            parse("31.02.2021", "%d.%m.%Y"),
            Err(DatetimeError::OutOfRange(_))
        ));
        assert!(matches!(
            parse("01.01.2021x", "%d.%m.%Y"),
            Err(DatetimeError::Mismatch { .. })
        ));
    }

    #[test]
    fn epoch_of_known_instant() {
        let dt = parse("2020-12-31 00:00:00", "%Y-%m-%d %H:%M:%S").unwrap();
        assert_eq!(epoch_seconds(&dt), 1_609_372_800);
    }
}
