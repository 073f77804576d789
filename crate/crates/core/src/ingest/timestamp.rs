//! `mm/dd/yyyy H:M:S` and `mm/dd/yy H:M:S` timestamps, always GMT.

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike};

use crate::error::{Error, Result};

fn bad(text: &str) -> Error {
    Error::BadTimestamp {
        line: 0,
        text: text.to_owned(),
    }
}

fn number(part: &str, min_len: usize, max_len: usize) -> Option<u32> {
    if part.len() < min_len || part.len() > max_len || !part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    part.parse().ok()
}

/// Parses a log timestamp into `(instant, day_of_week, hour_of_day)`.
///
/// Day of week counts from Monday = 0. Two-digit years map to 2000-2099.
pub fn parse_timestamp(text: &str) -> Result<(NaiveDateTime, u8, u8)> {
    let text = text.trim();
    let (date, time) = text.split_once(' ').ok_or_else(|| bad(text))?;
    let time = time.trim_start();

    let mut date_parts = date.split('/');
    let (Some(mm), Some(dd), Some(yy), None) = (
        date_parts.next(),
        date_parts.next(),
        date_parts.next(),
        date_parts.next(),
    ) else {
        return Err(bad(text));
    };
    let month = number(mm, 1, 2).ok_or_else(|| bad(text))?;
    let day = number(dd, 1, 2).ok_or_else(|| bad(text))?;
    let year = match yy.len() {
        4 => number(yy, 4, 4).ok_or_else(|| bad(text))? as i32,
        2 => 2000 + number(yy, 2, 2).ok_or_else(|| bad(text))? as i32,
        _ => return Err(bad(text)),
    };

    let mut time_parts = time.split(':');
    let (Some(h), Some(m), Some(s), None) = (
        time_parts.next(),
        time_parts.next(),
        time_parts.next(),
        time_parts.next(),
    ) else {
        return Err(bad(text));
    };
    let hour = number(h, 1, 2).ok_or_else(|| bad(text))?;
    let minute = number(m, 1, 2).ok_or_else(|| bad(text))?;
    let second = number(s, 1, 2).ok_or_else(|| bad(text))?;

    let date = NaiveDate::from_ymd_opt(year, month, day).ok_or_else(|| bad(text))?;
    let time = NaiveTime::from_hms_opt(hour, minute, second).ok_or_else(|| bad(text))?;
    let instant = NaiveDateTime::new(date, time);
    Ok((
        instant,
        date.weekday().num_days_from_monday() as u8,
        instant.hour() as u8,
    ))
}

/// Formats an instant in the four-digit-year log form.
pub fn format_timestamp(instant: &NaiveDateTime) -> String {
    format!(
        "{:02}/{:02}/{:04} {:02}:{:02}:{:02}",
        instant.month(),
        instant.day(),
        instant.year(),
        instant.hour(),
        instant.minute(),
        instant.second()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent weekday oracle (Sakamoto's method), Monday = 0.
    fn weekday_oracle(y: i32, m: u32, d: u32) -> u8 {
        const T: [i32; 12] = [0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4];
        let y = if m < 3 { y - 1 } else { y };
        let sunday0 = (y + y / 4 - y / 100 + y / 400 + T[(m - 1) as usize] + d as i32) % 7;
        ((sunday0 + 6) % 7) as u8
    }

    #[test]
    fn start_of_dataset_is_saturday() {
        let (ts, day, hour) = parse_timestamp("02/15/2014 00:00:01").unwrap();
        assert_eq!(day, 5);
        assert_eq!(day, weekday_oracle(2014, 2, 15));
        assert_eq!(hour, 0);
        assert_eq!(format_timestamp(&ts), "02/15/2014 00:00:01");
    }

    #[test]
    fn two_digit_year() {
        let (ts, day, hour) = parse_timestamp("02/15/14 13:30:00").unwrap();
        assert_eq!(ts.date(), NaiveDate::from_ymd_opt(2014, 2, 15).unwrap());
        assert_eq!(day, 5);
        assert_eq!(hour, 13);
    }

    #[test]
    fn wednesday_afternoon() {
        let (_, day, hour) = parse_timestamp("02/19/2014 14:05:00").unwrap();
        assert_eq!(day, weekday_oracle(2014, 2, 19));
        assert_eq!((day, hour), (2, 14));
    }

    #[test]
    fn unpadded_time() {
        let (_, _, hour) = parse_timestamp("2/5/2014 7:03:09").unwrap();
        assert_eq!(hour, 7);
    }

    #[test]
    fn rejects_other_formats() {
        for t in [
            "2014-02-15 00:00:01",
            "",
            "02/15/2014",
            "13/01/2014 00:00:00",
            "02/30/2014 00:00:00",
            "02/15/014 00:00:00",
            "02/15/2014 24:00:00",
            "02/15/2014 00:00",
            "02/15/2014 00:00:00:00",
        ] {
            assert!(matches!(parse_timestamp(t), Err(Error::BadTimestamp { .. })), "{t}");
        }
    }

    proptest! {
        #[test]
        fn round_trip_and_weekday(days in 0i64..40_000, secs in 0u32..86_400) {
            let date = NaiveDate::from_ymd_opt(1990, 1, 1).unwrap() + chrono::Duration::days(days);
            let time = NaiveTime::from_num_seconds_from_midnight_opt(secs, 0).unwrap();
            let ts = NaiveDateTime::new(date, time);
            let text = format_timestamp(&ts);
            let (back, day, hour) = parse_timestamp(&text).unwrap();
            prop_assert_eq!(back, ts);
            prop_assert_eq!(format_timestamp(&back), text);
            prop_assert_eq!(day, weekday_oracle(date.year(), date.month(), date.day()));
            prop_assert_eq!(hour as u32, secs / 3600);
        }
    }
}
