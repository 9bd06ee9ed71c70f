//! Event-file ingestion and waiting-time construction.
//!
//! Input is a CSV with header `pair_side,timestamp[,day]`, one row per
//! best-price change. Timestamps are integer seconds from session open.
//! Rows are grouped per `(pair_side, day)` in order of first appearance and
//! waiting times are never computed across a day boundary.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seconds in the default 07:00-17:00 session.
pub const DEFAULT_SESSION_LENGTH: u64 = 36_000;

/// Ordered price-change timestamps for one pair/side (and optionally one day).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSeries {
    pub pair_side: String,
    pub day: Option<u32>,
    pub timestamps: Vec<u64>,
    pub session_length: u64,
}

impl EventSeries {
    pub fn new(
        pair_side: impl Into<String>,
        day: Option<u32>,
        timestamps: Vec<u64>,
        session_length: u64,
    ) -> Result<Self> {
        let pair_side = pair_side.into();
        if pair_side.is_empty() {
            return Err(Error::Domain("pair_side must be non-empty".into()));
        }
        if timestamps.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain(format!(
                "timestamps of {pair_side} are not non-decreasing"
            )));
        }
        if let Some(&last) = timestamps.last() {
            if last > session_length {
                return Err(Error::Domain(format!(
                    "timestamp {last} of {pair_side} exceeds session length {session_length}"
                )));
            }
        }
        Ok(EventSeries {
            pair_side,
            day,
            timestamps,
            session_length,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// Positive integer gaps between consecutive events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaitingTimes {
    pub pair_side: String,
    pub values: Vec<u64>,
    /// Raw gaps of zero (several changes within one second), excluded from `values`.
    pub n_zero_collapsed: usize,
}

impl WaitingTimes {
    pub fn new(pair_side: impl Into<String>, values: Vec<u64>) -> Result<Self> {
        if values.contains(&0) {
            return Err(Error::Domain("waiting times must be >= 1".into()));
        }
        Ok(WaitingTimes {
            pair_side: pair_side.into(),
            values,
            n_zero_collapsed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

/// Differences `s[i+1] - s[i]`, keeping only gaps of at least one second.
pub fn waiting_times(events: &EventSeries) -> Result<WaitingTimes> {
    if events.timestamps.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: events.timestamps.len(),
        });
    }
    let mut values = Vec::with_capacity(events.timestamps.len() - 1);
    let mut zeros = 0;
    for w in events.timestamps.windows(2) {
        match w[1].checked_sub(w[0]) {
            Some(0) => zeros += 1,
            Some(gap) => values.push(gap),
            None => {
                return Err(Error::Domain(format!(
                    "timestamps of {} are not sorted",
                    events.pair_side
                )))
            }
        }
    }
    Ok(WaitingTimes {
        pair_side: events.pair_side.clone(),
        values,
        n_zero_collapsed: zeros,
    })
}

/// Session seconds per recorded price change.
pub fn mean_interval(events: &EventSeries) -> Result<f64> {
    if events.timestamps.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(events.session_length as f64 / events.timestamps.len() as f64)
}

/// All days of one pair/side pooled together.
#[derive(Debug, Clone, PartialEq)]
pub struct PairData {
    pub pair_side: String,
    pub waiting: WaitingTimes,
    pub n_events: usize,
    pub n_sessions: usize,
    pub total_seconds: u64,
}

impl PairData {
    /// Total session seconds over total price changes.
    pub fn mean_interval(&self) -> Result<f64> {
        if self.n_events == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        Ok(self.total_seconds as f64 / self.n_events as f64)
    }
}

/// Pool per-day series by pair/side, preserving first-appearance order.
/// Days with a single event contribute to the event count but not to the gaps.
pub fn group_by_pair(series: &[EventSeries]) -> Vec<PairData> {
    let mut order: Vec<String> = Vec::new();
    let mut by_pair: HashMap<String, PairData> = HashMap::new();
    for s in series {
        let entry = by_pair.entry(s.pair_side.clone()).or_insert_with(|| {
            order.push(s.pair_side.clone());
            PairData {
                pair_side: s.pair_side.clone(),
                waiting: WaitingTimes {
                    pair_side: s.pair_side.clone(),
                    values: Vec::new(),
                    n_zero_collapsed: 0,
                },
                n_events: 0,
                n_sessions: 0,
                total_seconds: 0,
            }
        });
        entry.n_events += s.len();
        entry.n_sessions += 1;
        entry.total_seconds += s.session_length;
        if let Ok(w) = waiting_times(s) {
            entry.waiting.values.extend_from_slice(&w.values);
            entry.waiting.n_zero_collapsed += w.n_zero_collapsed;
        }
    }
    order
        .into_iter()
        .filter_map(|k| by_pair.remove(&k))
        .collect()
}

/// Parse an event CSV file.
pub fn parse_events(path: impl AsRef<Path>, session_length: u64) -> Result<Vec<EventSeries>> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_events_from(file, session_length)
}

/// Parse event CSV text from any reader. See [`parse_events`].
pub fn parse_events_from<R: Read>(reader: R, session_length: u64) -> Result<Vec<EventSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(Error::EmptyInput),
        Err(e) => return Err(csv_error(e)),
    };
    let has_day = check_header(&headers)?;

    let mut order: Vec<(String, Option<u32>)> = Vec::new();
    let mut groups: HashMap<(String, Option<u32>), Vec<u64>> = HashMap::new();
    let mut rows = 0usize;
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = if has_day { 3 } else { 2 };
        if record.len() != expected {
            return Err(Error::Parse {
                line,
                message: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        let pair = record[0].to_string();
        if pair.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty pair_side".into(),
            });
        }
        let ts = parse_timestamp(&record[1], line)?;
        if ts > session_length {
            return Err(Error::Domain(format!(
                "line {line}: timestamp {ts} exceeds session length {session_length}"
            )));
        }
        let day = if has_day {
            let raw = &record[2];
            if raw.is_empty() {
                None
            } else {
                Some(raw.parse::<u32>().map_err(|e| Error::Parse {
                    line,
                    message: format!("bad day {raw:?}: {e}"),
                })?)
            }
        } else {
            None
        };
        let key = (pair, day);
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(ts);
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyInput);
    }

    order
        .into_iter()
        .map(|key| {
            let mut ts = groups.remove(&key).unwrap_or_default();
            // stable: equal timestamps keep input order
            ts.sort();
            EventSeries::new(key.0, key.1, ts, session_length)
        })
        .collect()
}

fn check_header(headers: &csv::StringRecord) -> Result<bool> {
    let bad = |msg: String| Error::Parse {
        line: 1,
        message: msg,
    };
    if headers.len() < 2 || headers.len() > 3 {
        return Err(bad(format!(
            "expected header pair_side,timestamp[,day], found {} columns",
            headers.len()
        )));
    }
    if &headers[0] != "pair_side" || !headers[1].starts_with("timestamp") {
        return Err(bad(format!(
            "expected header pair_side,timestamp[,day], found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    if headers.len() == 3 && &headers[2] != "day" {
        return Err(bad(format!("unknown third column {:?}", &headers[2])));
    }
    Ok(headers.len() == 3)
}

fn parse_timestamp(raw: &str, line: usize) -> Result<u64> {
    match raw.parse::<i64>() {
        Ok(v) if v < 0 => Err(Error::Domain(format!(
            "line {line}: negative timestamp {v}"
        ))),
        Ok(v) => Ok(v as u64),
        Err(e) => Err(Error::Parse {
            line,
            message: format!("bad timestamp {raw:?}: {e}"),
        }),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Write series in the format read by [`parse_events`]. The `day` column is
/// emitted only when some series carries a day.
pub fn write_events<W: Write>(writer: W, series: &[EventSeries]) -> Result<()> {
    let with_day = series.iter().any(|s| s.day.is_some());
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    if with_day {
        w.write_record(["pair_side", "timestamp", "day"]).map_err(io)?;
    } else {
        w.write_record(["pair_side", "timestamp"]).map_err(io)?;
    }
    for s in series {
        let day = s.day.map(|d| d.to_string()).unwrap_or_default();
        for t in &s.timestamps {
            let ts = t.to_string();
            if with_day {
                w.write_record([s.pair_side.as_str(), ts.as_str(), day.as_str()])
                    .map_err(io)?;
            } else {
                w.write_record([s.pair_side.as_str(), ts.as_str()])
                    .map_err(io)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_events_file(path: impl AsRef<Path>, series: &[EventSeries]) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_events(std::io::BufWriter::new(file), series)
}

/// Split one long series into consecutive sessions of `session_length`
/// seconds, numbering days from zero. Used to write simulator output that
/// runs longer than a single session.
pub fn split_sessions(series: &EventSeries, session_length: u64) -> Result<Vec<EventSeries>> {
    if session_length == 0 {
        return Err(Error::Config("session length must be positive".into()));
    }
    let n_days = series.session_length.div_ceil(session_length).max(1);
    let mut days: Vec<Vec<u64>> = vec![Vec::new(); n_days as usize];
    for &t in &series.timestamps {
        let d = (t / session_length).min(n_days - 1);
        days[d as usize].push(t - d * session_length);
    }
    days.into_iter()
        .enumerate()
        .map(|(d, ts)| EventSeries::new(series.pair_side.clone(), Some(d as u32), ts, session_length))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<EventSeries>> {
        parse_events_from(text.as_bytes(), DEFAULT_SESSION_LENGTH)
    }

    #[test]
    fn groups_by_key_in_first_appearance_order() {
        let s = parse("pair_side,timestamp_seconds\nA,5\nA,8\nB,2\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].pair_side, "A");
        assert_eq!(s[0].timestamps, vec![5, 8]);
        assert_eq!(s[1].pair_side, "B");
        assert_eq!(s[1].timestamps, vec![2]);
    }

    #[test]
    fn sorts_within_series() {
        let s = parse("pair_side,timestamp\nA,8\nA,5\n").unwrap();
        assert_eq!(s[0].timestamps, vec![5, 8]);
    }

    #[test]
    fn negative_timestamp_is_domain_error() {
        assert!(matches!(
            parse("pair_side,timestamp\nA,-3\n"),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn malformed_row_reports_line() {
        match parse("pair_side,timestamp\nA,5\nA,x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("pair_side,timestamp\nA,5,7\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(parse(""), Err(Error::EmptyInput));
        assert_eq!(parse("pair_side,timestamp\n"), Err(Error::EmptyInput));
    }

    #[test]
    fn crlf_and_day_column() {
        let s = parse("pair_side,timestamp,day\r\nA,5,0\r\nA,1,1\r\nA,3,0\r\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].day, s[0].timestamps.clone()), (Some(0), vec![3, 5]));
        assert_eq!((s[1].day, s[1].timestamps.clone()), (Some(1), vec![1]));
    }

    #[test]
    fn timestamp_beyond_session_is_rejected() {
        assert!(matches!(
            parse_events_from("pair_side,timestamp\nA,40000\n".as_bytes(), 36_000),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn waiting_time_examples() {
        let e = EventSeries::new("A", None, vec![0, 3, 3, 10], 36_000).unwrap();
        let w = waiting_times(&e).unwrap();
        assert_eq!(w.values, vec![3, 7]);
        assert_eq!(w.n_zero_collapsed, 1);

        let e = EventSeries::new("A", None, vec![0, 1], 36_000).unwrap();
        assert_eq!(waiting_times(&e).unwrap().values, vec![1]);

        let e = EventSeries::new("A", None, vec![5], 36_000).unwrap();
        assert!(matches!(
            waiting_times(&e),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn mean_interval_examples() {
        let e = EventSeries::new("A", None, (0..7200).map(|i| i * 5).collect(), 36_000).unwrap();
        assert_eq!(mean_interval(&e).unwrap(), 5.0);
        let e = EventSeries::new("EURNOKask", None, (0..805).collect(), 36_000).unwrap();
        assert_eq!(format!("{:.1}", mean_interval(&e).unwrap()), "44.7");
        let e = EventSeries::new("A", None, vec![], 36_000).unwrap();
        assert!(mean_interval(&e).is_err());
    }

    #[test]
    fn pooling_never_crosses_days() {
        let s = parse("pair_side,timestamp,day\nA,10,0\nA,20,0\nA,5,1\nA,9,1\nB,1,0\n").unwrap();
        let pairs = group_by_pair(&s);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].waiting.values, vec![10, 4]);
        assert_eq!(pairs[0].n_events, 4);
        assert_eq!(pairs[0].total_seconds, 72_000);
        assert_eq!(pairs[1].waiting.values, Vec::<u64>::new());
        assert_eq!(pairs[1].mean_interval().unwrap(), 36_000.0);
    }

    #[test]
    fn split_sessions_partitions_events() {
        let long = EventSeries::new("S", None, vec![0, 5, 10, 12, 25], 30).unwrap();
        let days = split_sessions(&long, 10).unwrap();
        assert_eq!(days.len(), 3);
        assert_eq!(days[0].timestamps, vec![0, 5]);
        assert_eq!(days[1].timestamps, vec![0, 2]);
        assert_eq!(days[2].timestamps, vec![5]);
    }
}
