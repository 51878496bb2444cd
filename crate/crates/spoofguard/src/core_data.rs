//! Dataset model, corpus ingestion, temporal splitting, and imbalance-aware
//! 0-event downsampling.
//!
//! A corpus is a directory of `events/<event_type>.csv` files with rows
//! `timestamp_ns,label`, `sensors/<sensor_id>.csv` files with rows
//! `timestamp_ns,value`, and a `meta.json` naming every sensor (with a
//! modality tag) and the two split boundaries. All CSVs are ASCII with a
//! mandatory header row and `\n` line endings.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NANOS_PER_SEC: i64 = 1_000_000_000;

/// Integer nanoseconds since an arbitrary epoch. Light sensors can record
/// thousands of values per second, so float time would drift; i64 nanoseconds
/// cover multi-week corpora with room to spare.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_secs(secs: i64) -> Self {
        Timestamp(secs * NANOS_PER_SEC)
    }

    pub fn nanos(self) -> i64 {
        self.0
    }

    /// Shift by whole seconds (may be negative).
    pub fn offset_secs(self, secs: i64) -> Self {
        Timestamp(self.0 + secs * NANOS_PER_SEC)
    }

    pub fn offset_nanos(self, nanos: i64) -> Self {
        Timestamp(self.0 + nanos)
    }

    /// Whole seconds elapsed since `earlier` (floor division).
    pub fn secs_since(self, earlier: Timestamp) -> i64 {
        (self.0 - earlier.0).div_euclid(NANOS_PER_SEC)
    }
}

/// One sensor's timestamped readings at its own (irregular) rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorStream {
    pub sensor_id: String,
    pub modality: String,
    /// Strictly increasing timestamps; values finite.
    pub readings: Vec<(Timestamp, f64)>,
}

impl SensorStream {
    pub fn first_timestamp(&self) -> Option<Timestamp> {
        self.readings.first().map(|r| r.0)
    }

    pub fn last_timestamp(&self) -> Option<Timestamp> {
        self.readings.last().map(|r| r.0)
    }

    /// Last reading strictly before `t`, if any.
    pub fn last_before(&self, t: Timestamp) -> Option<f64> {
        let idx = self.readings.partition_point(|r| r.0 < t);
        idx.checked_sub(1).map(|i| self.readings[i].1)
    }
}

/// Binary occurrence records for one event type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub event_type: String,
    /// Strictly increasing timestamps; labels 0 or 1.
    pub records: Vec<(Timestamp, u8)>,
}

/// An anchor moment with a claimed (1) or absent (0) event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub event_type: String,
    pub anchor: Timestamp,
    pub label: u8,
}

/// Half-open time range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Segment {
    pub fn contains(&self, t: Timestamp) -> bool {
        t >= self.start && t < self.end
    }
}

/// The three temporal partitions of a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Dev,
    Train,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Dev => "dev",
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dev" => Ok(Split::Dev),
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MetaSensor {
    id: String,
    modality: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MetaFile {
    sensors: Vec<MetaSensor>,
    dev_end: i64,
    train_end: i64,
}

/// An immutable, validated corpus. Safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    streams: Vec<SensorStream>,
    logs: Vec<EventLog>,
    stream_index: BTreeMap<String, usize>,
    log_index: BTreeMap<String, usize>,
    pub dev_end: Timestamp,
    pub train_end: Timestamp,
    pub span_start: Timestamp,
    /// Exclusive end: one nanosecond past the last observation.
    pub span_end: Timestamp,
    /// Non-fatal validation notes gathered during ingestion.
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn streams(&self) -> &[SensorStream] {
        &self.streams
    }

    pub fn logs(&self) -> &[EventLog] {
        &self.logs
    }

    pub fn stream(&self, sensor_id: &str) -> Result<&SensorStream> {
        self.stream_index
            .get(sensor_id)
            .map(|&i| &self.streams[i])
            .ok_or_else(|| Error::UnknownSensor(sensor_id.to_string()))
    }

    pub fn log(&self, event_type: &str) -> Result<&EventLog> {
        self.log_index
            .get(event_type)
            .map(|&i| &self.logs[i])
            .ok_or_else(|| Error::UnknownEvent(event_type.to_string()))
    }

    pub fn event_types(&self) -> Vec<String> {
        self.logs.iter().map(|l| l.event_type.clone()).collect()
    }

    pub fn segment(&self, split: Split) -> Segment {
        match split {
            Split::Dev => Segment {
                start: self.span_start,
                end: self.dev_end,
            },
            Split::Train => Segment {
                start: self.dev_end,
                end: self.train_end,
            },
            Split::Test => Segment {
                start: self.train_end,
                end: self.span_end,
            },
        }
    }

    /// Assemble and validate a dataset from already-parsed parts.
    pub fn from_parts(
        mut streams: Vec<SensorStream>,
        mut logs: Vec<EventLog>,
        dev_end: Timestamp,
        train_end: Timestamp,
        warnings: Vec<String>,
    ) -> Result<Dataset> {
        if streams.is_empty() {
            return Err(Error::Corpus("no sensors".into()));
        }
        if logs.is_empty() {
            return Err(Error::Corpus("no events".into()));
        }
        streams.sort_by(|a, b| a.sensor_id.cmp(&b.sensor_id));
        logs.sort_by(|a, b| a.event_type.cmp(&b.event_type));

        let mut span_start = Timestamp(i64::MAX);
        let mut span_last = Timestamp(i64::MIN);
        for s in &streams {
            if let (Some(f), Some(l)) = (s.first_timestamp(), s.last_timestamp()) {
                span_start = span_start.min(f);
                span_last = span_last.max(l);
            }
        }
        for l in &logs {
            if let (Some(f), Some(t)) = (l.records.first(), l.records.last()) {
                span_start = span_start.min(f.0);
                span_last = span_last.max(t.0);
            }
        }
        if span_start.0 > span_last.0 {
            return Err(Error::Corpus("corpus holds no observations".into()));
        }
        let span_end = span_last.offset_nanos(1);
        if !(span_start < dev_end && dev_end < train_end && train_end < span_end) {
            return Err(Error::Corpus(format!(
                "split boundaries must satisfy start < dev_end < train_end < end \
                 (start={}, dev_end={}, train_end={}, end={})",
                span_start.0, dev_end.0, train_end.0, span_end.0
            )));
        }

        let stream_index = streams
            .iter()
            .enumerate()
            .map(|(i, s)| (s.sensor_id.clone(), i))
            .collect();
        let log_index = logs
            .iter()
            .enumerate()
            .map(|(i, l)| (l.event_type.clone(), i))
            .collect();
        Ok(Dataset {
            streams,
            logs,
            stream_index,
            log_index,
            dev_end,
            train_end,
            span_start,
            span_end,
            warnings,
        })
    }
}

fn list_csv_files(dir: &Path) -> Result<Vec<(String, std::path::PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("csv") {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Corpus(format!("unreadable file name in {}", dir.display())))?
                .to_string();
            out.push((stem, path));
        }
    }
    out.sort();
    Ok(out)
}

struct ParsedColumn {
    rows: Vec<(Timestamp, f64)>,
    warnings: Vec<String>,
}

/// Parse a two-column CSV, enforcing the exact header and strictly
/// increasing timestamps. Duplicate timestamps keep the first row and warn;
/// decreasing timestamps are an error naming the stream.
fn parse_two_column(path: &Path, header: &str, stream_name: &str) -> Result<ParsedColumn> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut rows: Vec<(Timestamp, f64)> = Vec::new();
    let mut warnings = Vec::new();
    let mut lines = text.split('\n');
    match lines.next() {
        Some(h) if h == header => {}
        other => {
            return Err(Error::MalformedRow {
                path: display,
                line: 1,
                detail: format!("expected header {header:?}, got {:?}", other.unwrap_or("")),
            })
        }
    }
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.is_empty() {
            continue; // trailing newline
        }
        let (ts_str, val_str) = line.split_once(',').ok_or_else(|| Error::MalformedRow {
            path: display.clone(),
            line: line_no,
            detail: "expected two comma-separated fields".into(),
        })?;
        let ts: i64 = ts_str.parse().map_err(|e| Error::MalformedRow {
            path: display.clone(),
            line: line_no,
            detail: format!("bad timestamp {ts_str:?}: {e}"),
        })?;
        let val: f64 = val_str.parse().map_err(|e| Error::MalformedRow {
            path: display.clone(),
            line: line_no,
            detail: format!("bad value {val_str:?}: {e}"),
        })?;
        if !val.is_finite() {
            return Err(Error::MalformedRow {
                path: display.clone(),
                line: line_no,
                detail: format!("non-finite value {val_str:?}"),
            });
        }
        if let Some(&(last_ts, _)) = rows.last() {
            if ts == last_ts.0 {
                warnings.push(format!(
                    "{stream_name}: duplicate timestamp {ts} at {display}:{line_no}; kept first"
                ));
                continue;
            }
            if ts < last_ts.0 {
                return Err(Error::NonMonotone {
                    name: stream_name.to_string(),
                    detail: format!("{display}:{line_no}: {ts} after {}", last_ts.0),
                });
            }
        }
        rows.push((Timestamp(ts), val));
    }
    Ok(ParsedColumn { rows, warnings })
}

/// Load, sort, and validate a corpus directory.
///
/// The sensor files and `meta.json` must agree exactly: a sensor named in the
/// meta without a file, or a file without a meta entry, is an error.
/// Per-file parsing runs in parallel; the resulting dataset is immutable.
pub fn ingest_corpus(root: &Path) -> Result<Dataset> {
    let meta_path = root.join("meta.json");
    let meta: MetaFile = serde_json::from_str(&fs::read_to_string(&meta_path).map_err(|e| {
        Error::Corpus(format!("cannot read {}: {e}", meta_path.display()))
    })?)?;

    let sensor_files = list_csv_files(&root.join("sensors"))?;
    if sensor_files.is_empty() {
        return Err(Error::Corpus("no sensors".into()));
    }
    let event_files = list_csv_files(&root.join("events"))?;
    if event_files.is_empty() {
        return Err(Error::Corpus("no events".into()));
    }

    let mut modality: BTreeMap<&str, &str> = BTreeMap::new();
    for s in &meta.sensors {
        modality.insert(&s.id, &s.modality);
    }
    for s in &meta.sensors {
        if !sensor_files.iter().any(|(stem, _)| stem == &s.id) {
            return Err(Error::UnknownSensor(format!(
                "{} listed in meta.json but sensors/{}.csv is missing",
                s.id, s.id
            )));
        }
    }
    for (stem, _) in &sensor_files {
        if !modality.contains_key(stem.as_str()) {
            return Err(Error::UnknownSensor(format!(
                "sensors/{stem}.csv has no entry in meta.json"
            )));
        }
    }

    let streams: Vec<(SensorStream, Vec<String>)> = sensor_files
        .par_iter()
        .map(|(stem, path)| {
            let parsed = parse_two_column(path, "timestamp_ns,value", stem)?;
            Ok((
                SensorStream {
                    sensor_id: stem.clone(),
                    modality: modality[stem.as_str()].to_string(),
                    readings: parsed.rows,
                },
                parsed.warnings,
            ))
        })
        .collect::<Result<_>>()?;

    let logs: Vec<(EventLog, Vec<String>)> = event_files
        .par_iter()
        .map(|(stem, path)| {
            let parsed = parse_two_column(path, "timestamp_ns,label", stem)?;
            let mut records = Vec::with_capacity(parsed.rows.len());
            for (i, &(ts, v)) in parsed.rows.iter().enumerate() {
                if v != 0.0 && v != 1.0 {
                    return Err(Error::MalformedRow {
                        path: path.display().to_string(),
                        line: i + 2,
                        detail: format!("label must be 0 or 1, got {v}"),
                    });
                }
                records.push((ts, v as u8));
            }
            Ok((
                EventLog {
                    event_type: stem.clone(),
                    records,
                },
                parsed.warnings,
            ))
        })
        .collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    let streams = streams
        .into_iter()
        .map(|(s, w)| {
            warnings.extend(w);
            s
        })
        .collect();
    let logs = logs
        .into_iter()
        .map(|(l, w)| {
            warnings.extend(w);
            l
        })
        .collect();

    Dataset::from_parts(
        streams,
        logs,
        Timestamp(meta.dev_end),
        Timestamp(meta.train_end),
        warnings,
    )
}

/// Serialize a dataset back into the corpus directory layout.
///
/// Writing then re-ingesting is byte-stable: floats are emitted in shortest
/// round-trip form and files in sorted order.
pub fn write_corpus(dataset: &Dataset, root: &Path) -> Result<()> {
    fs::create_dir_all(root.join("sensors"))?;
    fs::create_dir_all(root.join("events"))?;

    dataset
        .streams
        .par_iter()
        .map(|s| {
            let mut buf = String::with_capacity(32 * s.readings.len() + 32);
            buf.push_str("timestamp_ns,value\n");
            for &(ts, v) in &s.readings {
                writeln!(buf, "{},{}", ts.0, v).expect("string write");
            }
            fs::write(root.join("sensors").join(format!("{}.csv", s.sensor_id)), buf)?;
            Ok(())
        })
        .collect::<Result<()>>()?;

    dataset
        .logs
        .par_iter()
        .map(|l| {
            let mut buf = String::with_capacity(24 * l.records.len() + 32);
            buf.push_str("timestamp_ns,label\n");
            for &(ts, v) in &l.records {
                writeln!(buf, "{},{}", ts.0, v).expect("string write");
            }
            fs::write(root.join("events").join(format!("{}.csv", l.event_type)), buf)?;
            Ok(())
        })
        .collect::<Result<()>>()?;

    let meta = MetaFile {
        sensors: dataset
            .streams
            .iter()
            .map(|s| MetaSensor {
                id: s.sensor_id.clone(),
                modality: s.modality.clone(),
            })
            .collect(),
        dev_end: dataset.dev_end.0,
        train_end: dataset.train_end.0,
    };
    fs::write(
        root.join("meta.json"),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    Ok(())
}

/// Build labeled instances for one event type over a segment.
///
/// Every label-1 record in the segment becomes an instance; 1-events are
/// never downsampled. 0-instances are taken on the second grid at offsets
/// 0, k, 2k, ... from the segment start, skipping any second that holds a
/// 1-event. For a gap-free N-second segment with no 1-events this yields
/// exactly floor((N-1)/k) + 1 instances.
pub fn build_instances(
    log: &EventLog,
    segment: Segment,
    sample_every_secs: i64,
) -> Result<Vec<Instance>> {
    if sample_every_secs < 1 {
        return Err(Error::Config(format!(
            "sample_every must be >= 1, got {sample_every_secs}"
        )));
    }
    if segment.start >= segment.end {
        return Ok(Vec::new());
    }

    let mut instances = Vec::new();
    let mut occupied_secs: HashSet<i64> = HashSet::new();
    for &(ts, label) in &log.records {
        if label == 1 && segment.contains(ts) {
            occupied_secs.insert(ts.secs_since(segment.start));
            instances.push(Instance {
                event_type: log.event_type.clone(),
                anchor: ts,
                label: 1,
            });
        }
    }

    let mut offset = 0i64;
    loop {
        let anchor = segment.start.offset_secs(offset);
        if anchor >= segment.end {
            break;
        }
        if !occupied_secs.contains(&offset) {
            instances.push(Instance {
                event_type: log.event_type.clone(),
                anchor,
                label: 0,
            });
        }
        offset += sample_every_secs;
    }

    instances.sort_by_key(|i| i.anchor);
    Ok(instances)
}

/// Readings with `anchor + t_minus <= timestamp < anchor + t_plus`, as a
/// contiguous sub-slice of the stream. May be empty; length varies with the
/// sensor rate.
pub fn slice_window(
    stream: &SensorStream,
    anchor: Timestamp,
    t_minus_secs: i64,
    t_plus_secs: i64,
) -> &[(Timestamp, f64)] {
    assert!(
        t_minus_secs < t_plus_secs,
        "window must satisfy t_minus < t_plus"
    );
    let lo_ts = anchor.offset_secs(t_minus_secs);
    let hi_ts = anchor.offset_secs(t_plus_secs);
    let lo = stream.readings.partition_point(|r| r.0 < lo_ts);
    let hi = stream.readings.partition_point(|r| r.0 < hi_ts);
    &stream.readings[lo..hi]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_with(records: Vec<(i64, u8)>) -> EventLog {
        EventLog {
            event_type: "ev".into(),
            records: records
                .into_iter()
                .map(|(t, l)| (Timestamp(t), l))
                .collect(),
        }
    }

    #[test]
    fn timestamp_arithmetic() {
        let t = Timestamp::from_secs(10);
        assert_eq!(t.offset_secs(-3), Timestamp::from_secs(7));
        assert_eq!(t.offset_secs(5).secs_since(t), 5);
        assert_eq!(t.offset_nanos(1).secs_since(t), 0);
        assert_eq!(t.offset_nanos(-1).secs_since(t), -1);
    }

    #[test]
    fn gap_free_grid_counts_match_closed_form() {
        // 13 days of seconds, no 1-events anywhere.
        let n: i64 = 1_123_200;
        let seg = Segment {
            start: Timestamp(0),
            end: Timestamp::from_secs(n),
        };
        let log = log_with(vec![]);
        for (k, expected) in [(1i64, 1_123_200usize), (100, 11_232), (500, 2_247)] {
            let got = build_instances(&log, seg, k).unwrap();
            assert_eq!(got.len(), expected, "k={k}");
            assert_eq!(got.len(), ((n - 1) / k) as usize + 1);
            assert!(got.iter().all(|i| i.label == 0));
        }
    }

    #[test]
    fn one_events_kept_and_their_seconds_excluded() {
        let seg = Segment {
            start: Timestamp(0),
            end: Timestamp::from_secs(10),
        };
        // 1-event inside second 4; a second-grid with k=2 visits 0,2,4,6,8.
        let log = log_with(vec![(4_400_000_000, 1)]);
        let got = build_instances(&log, seg, 2).unwrap();
        let ones: Vec<_> = got.iter().filter(|i| i.label == 1).collect();
        let zeros: Vec<_> = got.iter().filter(|i| i.label == 0).collect();
        assert_eq!(ones.len(), 1);
        assert_eq!(ones[0].anchor, Timestamp(4_400_000_000));
        let zero_secs: Vec<i64> = zeros.iter().map(|i| i.anchor.secs_since(seg.start)).collect();
        assert_eq!(zero_secs, vec![0, 2, 6, 8]);
        // Sorted by anchor overall.
        let anchors: Vec<_> = got.iter().map(|i| i.anchor).collect();
        let mut sorted = anchors.clone();
        sorted.sort();
        assert_eq!(anchors, sorted);
    }

    #[test]
    fn empty_segment_yields_empty_list() {
        let seg = Segment {
            start: Timestamp(5),
            end: Timestamp(5),
        };
        assert!(build_instances(&log_with(vec![(1, 1)]), seg, 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sample_every_must_be_positive() {
        let seg = Segment {
            start: Timestamp(0),
            end: Timestamp(10),
        };
        assert!(build_instances(&log_with(vec![]), seg, 0).is_err());
    }

    fn stream_20hz() -> SensorStream {
        SensorStream {
            sensor_id: "s".into(),
            modality: "m".into(),
            readings: (0..200)
                .map(|i| (Timestamp(i * 50_000_000), i as f64))
                .collect(),
        }
    }

    #[test]
    fn slice_window_rate_times_duration() {
        let s = stream_20hz();
        let got = slice_window(&s, Timestamp::from_secs(4), -1, 1);
        assert_eq!(got.len(), 40); // 2 s at 20 Hz
    }

    #[test]
    fn slice_window_before_stream_is_empty() {
        let s = stream_20hz();
        assert!(slice_window(&s, Timestamp::from_secs(-100), -1, 1).is_empty());
    }

    #[test]
    fn slice_window_half_open_boundary() {
        let s = stream_20hz();
        // Anchor exactly on a reading with t_minus = 0: included.
        let got = slice_window(&s, Timestamp(50_000_000), 0, 1);
        assert_eq!(got[0].0, Timestamp(50_000_000));
        // A reading exactly at anchor + t_plus: excluded.
        let end_excluded = slice_window(&s, Timestamp(0), 0, 1);
        assert!(end_excluded.iter().all(|r| r.0 < Timestamp::from_secs(1)));
        assert_eq!(end_excluded.len(), 20);
    }

    #[test]
    fn slice_window_is_contiguous_sublist() {
        let s = stream_20hz();
        let got = slice_window(&s, Timestamp::from_secs(3), -2, 2);
        let start = s.readings.iter().position(|r| r.0 == got[0].0).unwrap();
        assert_eq!(&s.readings[start..start + got.len()], got);
    }
}
