//! Class-level defect datasets with dated releases.
//!
//! A dataset arrives as CSV text, one class per row. Rows are grouped into
//! [`Release`]s keyed by `(project, version)` and the releases are then laid
//! out on a calendar timeline of fixed-width [`TimeBucket`]s.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::Arc;

use chrono::{Datelike, Months, NaiveDate};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("schema: {0}")]
    Schema(String),
    #[error("release {project}/{version} appears with conflicting dates {first} and {second}")]
    Conflict {
        project: String,
        version: String,
        first: NaiveDate,
        second: NaiveDate,
    },
    #[error("dataset is empty")]
    Empty,
    #[error("granularity must be at least one month")]
    Granularity,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One class observed in one release.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub project_id: String,
    pub version_id: String,
    pub release_date: NaiveDate,
    pub class_id: String,
    pub features: Vec<f64>,
    pub defect_count: u32,
}

impl MetricRecord {
    pub fn defective(&self) -> bool {
        self.defect_count > 0
    }
}

/// Identity of a project version.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VersionKey {
    pub project: String,
    pub version: String,
}

impl std::fmt::Display for VersionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.project, self.version)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Release {
    pub project_id: String,
    pub version_id: String,
    pub release_date: NaiveDate,
    pub records: Vec<MetricRecord>,
}

impl Release {
    pub fn key(&self) -> VersionKey {
        VersionKey {
            project: self.project_id.clone(),
            version: self.version_id.clone(),
        }
    }

    pub fn defective_count(&self) -> usize {
        self.records.iter().filter(|r| r.defective()).count()
    }

    /// Ordering used everywhere a deterministic release order is needed.
    fn sort_key(&self) -> (NaiveDate, &str, &str) {
        (self.release_date, &self.project_id, &self.version_id)
    }
}

/// Column mapping for the input CSV.
///
/// When `features` is empty every column not claimed by one of the identity
/// columns is treated as a feature, in header order.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub project: String,
    pub version: String,
    pub date: String,
    pub class: String,
    pub defects: String,
    pub features: Vec<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            project: "project".into(),
            version: "version".into(),
            date: "date".into(),
            class: "class".into(),
            defects: "bug".into(),
            features: Vec::new(),
        }
    }
}

struct ColumnIndex {
    project: usize,
    version: usize,
    date: usize,
    class: usize,
    defects: usize,
    features: Vec<usize>,
    feature_names: Vec<String>,
}

impl Schema {
    fn resolve(&self, header: &csv::StringRecord) -> Result<ColumnIndex, DatasetError> {
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| DatasetError::Schema(format!("missing column '{name}'")))
        };
        let project = find(&self.project)?;
        let version = find(&self.version)?;
        let date = find(&self.date)?;
        let class = find(&self.class)?;
        let defects = find(&self.defects)?;
        let (features, feature_names) = if self.features.is_empty() {
            let claimed = [project, version, date, class, defects];
            header
                .iter()
                .enumerate()
                .filter(|(i, _)| !claimed.contains(i))
                .map(|(i, h)| (i, h.trim().to_string()))
                .unzip()
        } else {
            let idx = self.features.iter().map(|f| find(f)).collect::<Result<Vec<_>, _>>()?;
            (idx, self.features.clone())
        };
        if features.is_empty() {
            return Err(DatasetError::Schema("no feature columns".into()));
        }
        Ok(ColumnIndex {
            project,
            version,
            date,
            class,
            defects,
            features,
            feature_names,
        })
    }
}

/// Parsed dataset: releases plus the feature column names that were used.
#[derive(Debug, Clone)]
pub struct ParsedDataset {
    pub feature_names: Vec<String>,
    pub releases: Vec<Release>,
}

pub fn parse_date(text: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d").ok()
}

/// Parse CSV text into releases.
///
/// Releases come back sorted by `(date, project, version)`; records keep
/// source order inside each release.
pub fn parse_dataset<R: Read>(source: R, schema: &Schema) -> Result<ParsedDataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header = match reader.headers() {
        Ok(h) if h.iter().any(|c| !c.trim().is_empty()) => h.clone(),
        Ok(_) => return Err(DatasetError::Empty),
        Err(e) => return Err(csv_error(e)),
    };
    let cols = schema.resolve(&header)?;

    let mut order: Vec<VersionKey> = Vec::new();
    let mut groups: HashMap<VersionKey, Release> = HashMap::new();
    let mut row = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut row) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(csv_error(e)),
        }
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        if row.len() != header.len() {
            return Err(DatasetError::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), row.len()),
            });
        }
        let record = parse_row(&row, &cols, line)?;
        let key = VersionKey {
            project: record.project_id.clone(),
            version: record.version_id.clone(),
        };
        match groups.get_mut(&key) {
            Some(release) => {
                if release.release_date != record.release_date {
                    return Err(DatasetError::Conflict {
                        project: key.project,
                        version: key.version,
                        first: release.release_date,
                        second: record.release_date,
                    });
                }
                release.records.push(record);
            }
            None => {
                order.push(key.clone());
                groups.insert(
                    key,
                    Release {
                        project_id: record.project_id.clone(),
                        version_id: record.version_id.clone(),
                        release_date: record.release_date,
                        records: vec![record],
                    },
                );
            }
        }
    }
    if groups.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut releases: Vec<Release> = order
        .into_iter()
        .map(|k| groups.remove(&k).expect("grouped release"))
        .collect();
    releases.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(ParsedDataset {
        feature_names: cols.feature_names,
        releases,
    })
}

fn csv_error(e: csv::Error) -> DatasetError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Utf8 { .. } => DatasetError::Parse {
            line,
            message: "invalid UTF-8".into(),
        },
        _ => DatasetError::Csv(e),
    }
}

fn parse_row(row: &csv::StringRecord, cols: &ColumnIndex, line: u64) -> Result<MetricRecord, DatasetError> {
    let err = |message: String| DatasetError::Parse { line, message };
    let text = |i: usize| row[i].trim();

    let project_id = text(cols.project).to_string();
    let version_id = text(cols.version).to_string();
    if project_id.is_empty() || version_id.is_empty() {
        return Err(err("empty project or version".into()));
    }
    let release_date =
        parse_date(text(cols.date)).ok_or_else(|| err(format!("unparseable date '{}'", text(cols.date))))?;
    let defect_count: u32 = text(cols.defects)
        .parse()
        .map_err(|_| err(format!("unparseable defect count '{}'", text(cols.defects))))?;
    let features = cols
        .features
        .iter()
        .map(|&i| {
            let v: f64 = text(i)
                .parse()
                .map_err(|_| err(format!("unparseable number '{}'", text(i))))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(format!("non-finite value '{}'", text(i))))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricRecord {
        project_id,
        version_id,
        release_date,
        class_id: text(cols.class).to_string(),
        features,
        defect_count,
    })
}

/// How bucket 0 is placed on the calendar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BucketAnchor {
    /// Bucket 0 starts on the first day of the earliest release's month.
    #[default]
    EarliestMonth,
    /// Bucket boundaries fall on multiples of the granularity counted from
    /// January of year 0, e.g. January and July for 6-month buckets.
    Calendar,
}

impl std::str::FromStr for BucketAnchor {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "earliest" | "earliest-month" => Ok(Self::EarliestMonth),
            "calendar" => Ok(Self::Calendar),
            other => Err(format!("unknown bucket anchor '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TimeBucket {
    pub index: usize,
    /// Inclusive.
    pub start: NaiveDate,
    /// Exclusive.
    pub end: NaiveDate,
    pub releases: Vec<Arc<Release>>,
}

impl TimeBucket {
    pub fn is_empty(&self) -> bool {
        self.releases.is_empty()
    }
}

/// Time-ordered, contiguous buckets. Empty buckets are kept so that split and
/// gap arithmetic stays positional.
#[derive(Debug, Clone)]
pub struct TimeSeriesDataset {
    pub buckets: Vec<TimeBucket>,
    pub granularity_months: u32,
}

impl TimeSeriesDataset {
    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn releases(&self) -> impl Iterator<Item = &Arc<Release>> {
        self.buckets.iter().flat_map(|b| b.releases.iter())
    }
}

fn month_index(d: NaiveDate) -> i64 {
    d.year() as i64 * 12 + d.month0() as i64
}

fn month_start(index: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(index.div_euclid(12) as i32, index.rem_euclid(12) as u32 + 1, 1).expect("valid month")
}

pub fn bucketize(releases: Vec<Release>, granularity_months: u32) -> Result<TimeSeriesDataset, DatasetError> {
    bucketize_anchored(releases, granularity_months, BucketAnchor::EarliestMonth)
}

pub fn bucketize_anchored(
    mut releases: Vec<Release>,
    granularity_months: u32,
    anchor: BucketAnchor,
) -> Result<TimeSeriesDataset, DatasetError> {
    if granularity_months == 0 {
        return Err(DatasetError::Granularity);
    }
    if releases.is_empty() {
        return Err(DatasetError::Empty);
    }
    releases.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let g = granularity_months as i64;
    let first = month_index(releases[0].release_date);
    let last = month_index(releases[releases.len() - 1].release_date);
    let origin = match anchor {
        BucketAnchor::EarliestMonth => first,
        BucketAnchor::Calendar => first - first.rem_euclid(g),
    };
    let count = ((last - origin) / g + 1) as usize;

    let mut buckets: Vec<TimeBucket> = (0..count)
        .map(|i| {
            let start = month_start(origin + i as i64 * g);
            TimeBucket {
                index: i,
                start,
                end: start
                    .checked_add_months(Months::new(granularity_months))
                    .expect("date in range"),
                releases: Vec::new(),
            }
        })
        .collect();
    for release in releases {
        let i = ((month_index(release.release_date) - origin) / g) as usize;
        buckets[i].releases.push(Arc::new(release));
    }
    Ok(TimeSeriesDataset {
        buckets,
        granularity_months,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketSummary {
    pub index: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub releases: usize,
    pub instances: usize,
    pub defective: usize,
}

impl BucketSummary {
    pub fn defective_pct(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            100.0 * self.defective as f64 / self.instances as f64
        }
    }
}

pub fn dataset_summary(ts: &TimeSeriesDataset) -> Vec<BucketSummary> {
    ts.buckets
        .iter()
        .map(|b| BucketSummary {
            index: b.index,
            start: b.start,
            end: b.end,
            releases: b.releases.len(),
            instances: b.releases.iter().map(|r| r.records.len()).sum(),
            defective: b.releases.iter().map(|r| r.defective_count()).sum(),
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[BucketSummary], out: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bucket_index", "start", "end", "releases", "instances", "defective_pct"])?;
    for r in rows {
        w.write_record([
            r.index.to_string(),
            r.start.to_string(),
            r.end.to_string(),
            r.releases.to_string(),
            r.instances.to_string(),
            r.defective_pct().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
