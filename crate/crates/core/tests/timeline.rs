mod common;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use timewise::dataset::{bucketize_anchored, dataset_summary, parse_dataset, BucketAnchor, Schema};
use timewise::pairs::{enumerate_pairs, ConfigurationKind};

#[test]
fn worked_example_pairs() {
    for kind in ConfigurationKind::ALL {
        common::check_worked_example(kind).unwrap();
    }
}

#[test]
fn worked_example_with_gap() {
    let ts = common::worked_timeline();
    let rows = common::describe(&enumerate_pairs(&ts, ConfigurationKind::CC, 1));
    assert_eq!(rows[0].2, ["i:1"]);
    assert_eq!(rows[0].3, ["k:1"]);
    assert!(enumerate_pairs(&ts, ConfigurationKind::II, 2).is_empty());
}

#[test]
fn random_timelines_never_time_travel() {
    let checked = common::check_random_timelines(150, 11).unwrap();
    assert!(checked > 0);
}

/// Expands the published release table into one CSV row per class.
fn reference_dataset() -> (String, Vec<(String, u64)>) {
    let mut csv = String::from("project,version,date,class,size,bug\n");
    let mut pct = Vec::new();
    let mut reader = csv::Reader::from_path(common::fixture("reference_releases.csv")).unwrap();
    for row in reader.records() {
        let row = row.unwrap();
        let release = &row[0];
        let (project, version) = match release.split_once('-') {
            Some((p, v)) => (p.to_string(), v.to_string()),
            None => {
                let head = release.trim_end_matches(|c: char| c.is_ascii_digit() || c == '.');
                let tail = &release[head.len()..];
                (
                    head.to_string(),
                    if tail.is_empty() { "1".into() } else { tail.to_string() },
                )
            }
        };
        let cases: usize = row[2].parse().unwrap();
        let defects: usize = row[3].parse().unwrap();
        for c in 0..cases {
            let bug = u32::from(c < defects);
            writeln!(csv, "{project},{version},{},{project}.C{c},{c},{bug}", &row[1]).unwrap();
        }
        pct.push((format!("{project}:{version}"), row[4].parse().unwrap()));
    }
    (csv, pct)
}

#[test]
fn reference_layout_has_nineteen_half_year_buckets() {
    let (text, pct) = reference_dataset();
    let parsed = parse_dataset(text.as_bytes(), &Schema::default()).unwrap();
    assert_eq!(parsed.releases.len(), 43);
    let ts = bucketize_anchored(parsed.releases.clone(), 6, BucketAnchor::EarliestMonth).unwrap();
    assert_eq!(ts.len(), 19);
    assert_eq!(ts.buckets[0].start.to_string(), "1999-11-01");
    assert_eq!(ts.buckets[18].start.to_string(), "2008-11-01");
    // Aligning to January and July adds a bucket at the front.
    let cal = bucketize_anchored(parsed.releases.clone(), 6, BucketAnchor::Calendar).unwrap();
    assert_eq!(cal.len(), 20);
    assert_eq!(cal.buckets[0].start.to_string(), "1999-07-01");
    assert_eq!(cal.buckets[19].start.to_string(), "2009-01-01");

    // Defective share per release, rounded as in the published table. One
    // published entry (10 of 51) is truncated rather than rounded.
    let by_release: BTreeMap<String, f64> = parsed
        .releases
        .iter()
        .map(|r| {
            (
                r.key().to_string(),
                100.0 * r.defective_count() as f64 / r.records.len() as f64,
            )
        })
        .collect();
    for (key, published) in pct {
        let ours = by_release[&key];
        if key == "pbeans:2.0" {
            assert_eq!(ours.floor() as u64, published, "{key}");
        } else {
            assert_eq!(ours.round() as u64, published, "{key}");
        }
    }
    let summary = dataset_summary(&ts);
    assert_eq!(summary.iter().map(|b| b.releases).sum::<usize>(), 43);
}
