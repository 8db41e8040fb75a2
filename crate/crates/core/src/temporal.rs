//! Deterministic time-expression detection and calendar normalization.
//!
//! Absolute dates normalize on their own. Relative expressions ("last Friday",
//! "two weeks ago") normalize only when an anchor date is available; their
//! surface text is always kept as the relative expression.

use std::fmt;
use std::sync::OnceLock;

use chrono::{Datelike, Days, Months, NaiveDate, Weekday};
use regex::Regex;
use serde::{Deserialize, Serialize};

/// Inclusive calendar interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DateInterval {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateInterval {
    pub fn day(d: NaiveDate) -> Self {
        Self { start: d, end: d }
    }

    pub fn month(year: i32, month: u32) -> Option<Self> {
        let start = NaiveDate::from_ymd_opt(year, month, 1)?;
        let end = start.checked_add_months(Months::new(1))?.pred_opt()?;
        Some(Self { start, end })
    }

    pub fn year(year: i32) -> Option<Self> {
        Some(Self {
            start: NaiveDate::from_ymd_opt(year, 1, 1)?,
            end: NaiveDate::from_ymd_opt(year, 12, 31)?,
        })
    }

    /// Monday-to-Sunday week containing `d`.
    pub fn week_of(d: NaiveDate) -> Self {
        let start = d - Days::new(u64::from(d.weekday().num_days_from_monday()));
        Self { start, end: start + Days::new(6) }
    }
}

/// Renders `YYYY-MM-DD` for a single day, `YYYY-MM-DD..YYYY-MM-DD` otherwise.
/// This is the time-key format shared by time views and query rewriting.
impl fmt::Display for DateInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            write!(f, "{}", self.start.format("%Y-%m-%d"))
        } else {
            write!(f, "{}..{}", self.start.format("%Y-%m-%d"), self.end.format("%Y-%m-%d"))
        }
    }
}

/// One time expression found in a text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeMention {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub normalized: Option<DateInterval>,
    /// Interpretation depends on the anchor date (relative expressions,
    /// yearless dates, clock times).
    pub anchored: bool,
}

impl TimeMention {
    /// The verbatim expression to keep alongside (or instead of) the
    /// normalized interval.
    pub fn relative_expression(&self) -> Option<String> {
        (self.anchored || self.normalized.is_none()).then(|| self.surface.clone())
    }
}

#[derive(Clone, Copy)]
enum Pattern {
    Iso,
    DayMonthYear,
    MonthDayYear,
    MonthYear,
    DayMonth,
    MonthDay,
    PrepMonth,
    PrepYear,
    DayWord,
    RelativeUnit,
    Ago,
    Weekday,
    Clock,
    Vague,
}

const MONTH: &str = r"(?P<month>january|february|march|april|may|june|july|august|september|october|november|december|jan|feb|mar|apr|jun|jul|aug|sept|sep|oct|nov|dec)";
const WEEKDAY: &str = r"(?P<weekday>monday|tuesday|wednesday|thursday|friday|saturday|sunday)";

fn patterns() -> &'static [(Regex, Pattern)] {
    static PATTERNS: OnceLock<Vec<(Regex, Pattern)>> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        let src: Vec<(String, Pattern)> = vec![
            (r"\b(?P<y>\d{4})-(?P<m>\d{2})-(?P<d>\d{2})\b".into(), Pattern::Iso),
            (format!(r"\b(?P<d>\d{{1,2}})(?:st|nd|rd|th)?\s+(?:of\s+)?{MONTH}\.?,?\s+(?P<y>\d{{4}})\b"), Pattern::DayMonthYear),
            (format!(r"\b{MONTH}\.?\s+(?P<d>\d{{1,2}})(?:st|nd|rd|th)?,?\s+(?P<y>\d{{4}})\b"), Pattern::MonthDayYear),
            (format!(r"\b{MONTH},?\s+(?P<y>\d{{4}})\b"), Pattern::MonthYear),
            (format!(r"\b(?P<d>\d{{1,2}})(?:st|nd|rd|th)?\s+(?:of\s+)?{MONTH}\b"), Pattern::DayMonth),
            (format!(r"\b{MONTH}\s+(?P<d>\d{{1,2}})(?:st|nd|rd|th)?\b"), Pattern::MonthDay),
            (r"\b(?:in|during|since|until|by|early|late|mid)\s+(?P<month>january|february|march|april|may|june|july|august|september|october|november|december)\b".into(), Pattern::PrepMonth),
            (r"\b(?:in|since|during|until|by)\s+(?P<y>(?:19|20)\d{2})\b".into(), Pattern::PrepYear),
            (r"\b(?P<word>yesterday|today|tonight|tomorrow)\b".into(), Pattern::DayWord),
            (format!(r"\b(?P<dir>last|next|this|past|coming)\s+(?:(?P<unit>week|weekend|month|year|summer|winter|spring|fall|autumn)|{WEEKDAY})\b"), Pattern::RelativeUnit),
            (r"\b(?P<n>\d+|an?|one|two|three|four|five|six|seven|eight|nine|ten|a\s+few|a\s+couple\s+of|couple\s+of|few)\s+(?P<unit>day|week|month|year)s?\s+ago\b".into(), Pattern::Ago),
            (format!(r"\b{WEEKDAY}s?\b"), Pattern::Weekday),
            (r"\b(?P<h>\d{1,2})(?::(?P<min>\d{2}))?\s*(?:(?:am|pm)\b|a\.m\.|p\.m\.)".into(), Pattern::Clock),
            (r"\b(?:recently|lately)\b".into(), Pattern::Vague),
        ];
        src.into_iter()
            .map(|(p, k)| (Regex::new(&format!("(?i){p}")).expect("static pattern"), k))
            .collect()
    })
}

fn month_number(name: &str) -> Option<u32> {
    let n = name.to_lowercase();
    let idx = [
        "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
    ]
    .iter()
    .position(|m| n.starts_with(m))?;
    Some(idx as u32 + 1)
}

fn weekday(name: &str) -> Option<Weekday> {
    name.to_lowercase().trim_end_matches('s').parse::<Weekday>().ok()
}

fn count_word(w: &str) -> Option<u32> {
    let w = w.to_lowercase();
    match w.as_str() {
        "a" | "an" | "one" => Some(1),
        "two" => Some(2),
        "three" => Some(3),
        "four" => Some(4),
        "five" => Some(5),
        "six" => Some(6),
        "seven" => Some(7),
        "eight" => Some(8),
        "nine" => Some(9),
        "ten" => Some(10),
        _ => w.parse().ok(),
    }
}

/// Most recent `wd` strictly before `d`.
fn previous_weekday(d: NaiveDate, wd: Weekday) -> NaiveDate {
    let back = (7 + d.weekday().num_days_from_monday() - wd.num_days_from_monday()) % 7;
    d - Days::new(u64::from(if back == 0 { 7 } else { back }))
}

/// First `wd` strictly after `d`.
fn following_weekday(d: NaiveDate, wd: Weekday) -> NaiveDate {
    let fwd = (7 + wd.num_days_from_monday() - d.weekday().num_days_from_monday()) % 7;
    d + Days::new(u64::from(if fwd == 0 { 7 } else { fwd }))
}

fn shift_interval(iv: DateInterval, unit: &str, dir: i32) -> Option<DateInterval> {
    match unit {
        "week" | "weekend" => {
            let base = DateInterval::week_of(iv.start);
            let start = if dir < 0 {
                base.start - Days::new(7)
            } else if dir > 0 {
                base.start + Days::new(7)
            } else {
                base.start
            };
            let week = DateInterval { start, end: start + Days::new(6) };
            if unit == "weekend" {
                Some(DateInterval { start: week.start + Days::new(5), end: week.end })
            } else {
                Some(week)
            }
        }
        "month" => {
            let first = NaiveDate::from_ymd_opt(iv.start.year(), iv.start.month(), 1)?;
            let target = match dir.signum() {
                -1 => first.checked_sub_months(Months::new(1))?,
                1 => first.checked_add_months(Months::new(1))?,
                _ => first,
            };
            DateInterval::month(target.year(), target.month())
        }
        "year" => DateInterval::year(iv.start.year() + dir.signum()),
        _ => None,
    }
}

fn normalize(kind: Pattern, caps: &regex::Captures<'_>, anchor: Option<NaiveDate>) -> (Option<DateInterval>, bool) {
    let num = |k: &str| caps.name(k).and_then(|m| m.as_str().parse::<i64>().ok());
    let month = || caps.name("month").and_then(|m| month_number(m.as_str()));
    let ymd = |y: i64, m: u32, d: i64| {
        NaiveDate::from_ymd_opt(y as i32, m, d as u32).map(DateInterval::day)
    };
    match kind {
        Pattern::Iso => {
            let m = num("m").unwrap_or(0) as u32;
            (ymd(num("y").unwrap_or(0), m, num("d").unwrap_or(0)), false)
        }
        Pattern::DayMonthYear | Pattern::MonthDayYear => {
            let iv = month().and_then(|m| ymd(num("y")?, m, num("d")?));
            (iv, false)
        }
        Pattern::MonthYear => {
            let iv = month().and_then(|m| DateInterval::month(num("y")? as i32, m));
            (iv, false)
        }
        Pattern::DayMonth | Pattern::MonthDay => {
            let iv = anchor.and_then(|a| ymd(i64::from(a.year()), month()?, num("d")?));
            (iv, true)
        }
        Pattern::PrepMonth => {
            let iv = anchor.and_then(|a| DateInterval::month(a.year(), month()?));
            (iv, true)
        }
        Pattern::PrepYear => (num("y").and_then(|y| DateInterval::year(y as i32)), false),
        Pattern::DayWord => {
            let iv = anchor.and_then(|a| {
                let d = match caps["word"].to_lowercase().as_str() {
                    "yesterday" => a.pred_opt()?,
                    "tomorrow" => a.succ_opt()?,
                    _ => a,
                };
                Some(DateInterval::day(d))
            });
            (iv, true)
        }
        Pattern::RelativeUnit => {
            let dir = match caps["dir"].to_lowercase().as_str() {
                "last" | "past" => -1,
                "next" | "coming" => 1,
                _ => 0,
            };
            let iv = anchor.and_then(|a| {
                if let Some(wd) = caps.name("weekday").and_then(|w| weekday(w.as_str())) {
                    let d = match dir {
                        -1 => previous_weekday(a, wd),
                        1 => following_weekday(a, wd),
                        _ => DateInterval::week_of(a).start
                            + Days::new(u64::from(wd.num_days_from_monday())),
                    };
                    return Some(DateInterval::day(d));
                }
                shift_interval(DateInterval::day(a), &caps["unit"].to_lowercase(), dir)
            });
            (iv, true)
        }
        Pattern::Ago => {
            let iv = anchor.and_then(|a| {
                let n = count_word(&caps["n"])?;
                match caps["unit"].to_lowercase().as_str() {
                    "day" => Some(DateInterval::day(a - Days::new(u64::from(n)))),
                    "week" => Some(DateInterval::week_of(a - Days::new(7 * u64::from(n)))),
                    "month" => {
                        let d = a.checked_sub_months(Months::new(n))?;
                        DateInterval::month(d.year(), d.month())
                    }
                    _ => DateInterval::year(a.year() - n as i32),
                }
            });
            (iv, true)
        }
        Pattern::Weekday | Pattern::Clock | Pattern::Vague => (None, true),
    }
}

/// Finds non-overlapping time expressions, longest first, in text order.
pub fn find_time_mentions(text: &str, anchor: Option<NaiveDate>) -> Vec<TimeMention> {
    let mut cands: Vec<(usize, usize, usize, TimeMention)> = Vec::new();
    for (prio, (re, kind)) in patterns().iter().enumerate() {
        for caps in re.captures_iter(text) {
            // Patterns with a leading preposition keep only the date itself.
            let m = match kind {
                Pattern::PrepMonth => caps.name("month"),
                Pattern::PrepYear => caps.name("y"),
                _ => caps.get(0),
            }
            .expect("match");
            let (normalized, anchored) = normalize(*kind, &caps, anchor);
            let outer = caps.get(0).expect("match");
            cands.push((
                outer.start(),
                outer.end(),
                prio,
                TimeMention {
                    start: m.start(),
                    end: m.end(),
                    surface: m.as_str().to_string(),
                    normalized,
                    anchored,
                },
            ));
        }
    }
    cands.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)).then(a.2.cmp(&b.2)));
    let mut taken: Vec<(usize, usize, TimeMention)> = Vec::new();
    for (s, e, _, m) in cands {
        if taken.iter().all(|(ts, te, _)| e <= *ts || s >= *te) {
            taken.push((s, e, m));
        }
    }
    taken.sort_by_key(|t| t.0);
    let out: Vec<TimeMention> = taken.into_iter().map(|t| t.2).collect();
    out
}

/// True if `word` is a full month or weekday name (any case).
pub fn is_calendar_word(word: &str) -> bool {
    const NAMES: [&str; 19] = [
        "january", "february", "march", "april", "may", "june", "july", "august", "september",
        "october", "november", "december", "monday", "tuesday", "wednesday", "thursday", "friday",
        "saturday", "sunday",
    ];
    let w = word.to_lowercase();
    let w = w.strip_suffix('s').filter(|b| NAMES[12..].contains(b)).unwrap_or(&w);
    NAMES.contains(&w)
}
