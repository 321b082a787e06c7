//! Gregorian calendar arithmetic used by the grammar guards and the parser.

/// Month length from the alternating 30/31 pattern, with the parity flip
/// after July folded in by `month / 8`. February is handled separately.
pub fn days_in_month_bound(month: u32, year: i32) -> u32 {
    assert!((1..=12).contains(&month), "month out of range: {month}");
    if month == 2 {
        if is_leap(year) {
            29
        } else {
            28
        }
    } else {
        30 + (month + month / 8) % 2
    }
}

/// Largest day a month can have in any year.
pub fn max_days_in_month(month: u32) -> u32 {
    if month == 2 {
        29
    } else {
        days_in_month_bound(month, 2001)
    }
}

pub fn is_leap(year: i32) -> bool {
    year.rem_euclid(4) == 0 && (year.rem_euclid(100) != 0 || year.rem_euclid(400) == 0)
}

/// Days since 1970-01-01 for a proleptic Gregorian date.
pub fn days_from_civil(year: i32, month: u32, day: u32) -> i64 {
    let y = i64::from(year) - i64::from(month <= 2);
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let m = i64::from(month);
    let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + i64::from(day) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Inverse of [`days_from_civil`].
pub fn civil_from_days(days: i64) -> (i32, u32, u32) {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let month = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let year = (yoe + era * 400 + i64::from(month <= 2)) as i32;
    (year, month, day)
}

/// ISO weekday, Monday = 1 through Sunday = 7.
pub fn weekday(year: i32, month: u32, day: u32) -> u8 {
    // 1970-01-01 was a Thursday.
    ((days_from_civil(year, month, day) + 3).rem_euclid(7) + 1) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_examples() {
        assert_eq!(days_in_month_bound(1, 2015), 31);
        assert_eq!(days_in_month_bound(8, 2015), 31);
        assert_eq!(days_in_month_bound(2, 2013), 28);
        assert_eq!(days_in_month_bound(11, 2015), 30);
        assert!(is_leap(2000));
        assert!(!is_leap(1900));
        assert!(is_leap(2012));
        assert!(!is_leap(2013));
    }

    #[test]
    fn alternation_halves_agree() {
        // Months before August follow 30 + x mod 2, the rest 30 + (x + 1) mod 2.
        for x in 1..=12u32 {
            if x == 2 {
                continue;
            }
            let split = if x <= 7 { 30 + x % 2 } else { 30 + (x + 1) % 2 };
            assert_eq!(days_in_month_bound(x, 2015), split, "month {x}");
        }
    }

    #[test]
    fn against_chrono_calendar() {
        use chrono::{Datelike, NaiveDate};
        for year in [1583, 1900, 2000, 2013, 2016, 2100, 2400] {
            for month in 1..=12u32 {
                let first = NaiveDate::from_ymd_opt(year, month, 1).unwrap();
                let next = if month == 12 {
                    NaiveDate::from_ymd_opt(year + 1, 1, 1).unwrap()
                } else {
                    NaiveDate::from_ymd_opt(year, month + 1, 1).unwrap()
                };
                assert_eq!(days_in_month_bound(month, year) as i64, (next - first).num_days());
                assert_eq!(
                    weekday(year, month, 1),
                    first.weekday().number_from_monday() as u8
                );
            }
        }
    }

    #[test]
    fn civil_round_trip() {
        for days in (-800_000..800_000).step_by(997) {
            let (y, m, d) = civil_from_days(days);
            assert_eq!(days_from_civil(y, m, d), days);
        }
        assert_eq!(days_from_civil(1970, 1, 1), 0);
        assert_eq!(weekday(2011, 4, 1), 5);
    }
}
