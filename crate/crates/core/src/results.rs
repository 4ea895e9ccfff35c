//! The per-(pair, test version) results table and its CSV form.

use std::io::{Read, Write};

use thiserror::Error;

use crate::metrics::{ConfusionMatrix, ScoreSet};
use crate::pairs::{PairKind, Window};

pub const RESULTS_HEADER: &str = "technique,kind,window_k,split_index,gap,test_project,test_version,\
tp,fp,tn,fn,precision,recall,fscore,gmeasure,mcc,auc,auc_degenerate";

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("header mismatch: expected `{RESULTS_HEADER}`")]
    Header,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub technique: String,
    pub kind: PairKind,
    pub window: Window,
    pub split_index: usize,
    pub gap: usize,
    pub test_project: String,
    pub test_version: String,
    pub confusion: ConfusionMatrix,
    pub scores: ScoreSet,
    pub auc_degenerate: bool,
}

impl ResultRecord {
    /// Everything that identifies the train/test pair the row came from.
    pub fn pair_key(&self) -> (&str, PairKind, Window, usize, usize) {
        (&self.technique, self.kind, self.window, self.split_index, self.gap)
    }

    fn fields(&self) -> [String; 18] {
        let c = &self.confusion;
        let s = &self.scores;
        [
            self.technique.clone(),
            self.kind.to_string(),
            self.window.to_string(),
            self.split_index.to_string(),
            self.gap.to_string(),
            self.test_project.clone(),
            self.test_version.clone(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            c.fn_.to_string(),
            s.precision.to_string(),
            s.recall.to_string(),
            s.fscore.to_string(),
            s.gmeasure.to_string(),
            s.mcc.to_string(),
            s.auc.to_string(),
            self.auc_degenerate.to_string(),
        ]
    }
}

pub fn write_results<W: Write>(records: &[ResultRecord], out: W) -> Result<(), ResultsError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(RESULTS_HEADER.split(','))?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T, ResultsError> {
    let text = rec.get(i).unwrap_or_default();
    text.parse().map_err(|_| ResultsError::Parse {
        line,
        message: format!(
            "bad value `{text}` in column {}",
            RESULTS_HEADER.split(',').nth(i).unwrap_or("?")
        ),
    })
}

fn metric(rec: &csv::StringRecord, i: usize, line: u64, lo: f64) -> Result<f64, ResultsError> {
    let v: f64 = field(rec, i, line)?;
    if !(lo..=1.0).contains(&v) {
        return Err(ResultsError::Parse {
            line,
            message: format!("metric value {v} out of range"),
        });
    }
    Ok(v)
}

pub fn read_results<R: Read>(source: R) -> Result<Vec<ResultRecord>, ResultsError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut rows = reader.records();
    let header = rows.next().ok_or(ResultsError::Header)??;
    if header.iter().collect::<Vec<_>>().join(",") != RESULTS_HEADER {
        return Err(ResultsError::Header);
    }
    let mut out = Vec::new();
    for rec in rows {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 18 {
            return Err(ResultsError::Parse {
                line,
                message: format!("expected 18 fields, found {}", rec.len()),
            });
        }
        let kind = rec[1]
            .parse::<PairKind>()
            .map_err(|message| ResultsError::Parse { line, message })?;
        let window = rec[2]
            .parse::<Window>()
            .map_err(|message| ResultsError::Parse { line, message })?;
        out.push(ResultRecord {
            technique: rec[0].to_string(),
            kind,
            window,
            split_index: field(&rec, 3, line)?,
            gap: field(&rec, 4, line)?,
            test_project: rec[5].to_string(),
            test_version: rec[6].to_string(),
            confusion: ConfusionMatrix {
                tp: field(&rec, 7, line)?,
                fp: field(&rec, 8, line)?,
                tn: field(&rec, 9, line)?,
                fn_: field(&rec, 10, line)?,
            },
            scores: ScoreSet {
                precision: metric(&rec, 11, line, 0.0)?,
                recall: metric(&rec, 12, line, 0.0)?,
                fscore: metric(&rec, 13, line, 0.0)?,
                gmeasure: metric(&rec, 14, line, 0.0)?,
                mcc: metric(&rec, 15, line, -1.0)?,
                auc: metric(&rec, 16, line, 0.0)?,
            },
            auc_degenerate: field(&rec, 17, line)?,
        });
    }
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::sample::{record, CC};
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut b = record("Nam15", PairKind::CrossValidation, 3, 0.123456789012345);
        b.window = Window::Unbounded;
        b.test_project = "with,comma".into();
        let rows = vec![record("Ma12", CC, 1, 2.0 / 3.0), b];
        let mut buf = Vec::new();
        write_results(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("{RESULTS_HEADER}\n")));
        assert!(text.contains("0.6666666666666666"));
        assert_eq!(read_results(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn bad_rows_report_line() {
        let text = format!("{RESULTS_HEADER}\nMa12,CC,1,1,0,p,1,1,2,3,4,0.1,0.2,2.5,0.3,0,0.7,false\n");
        match read_results(text.as_bytes()) {
            Err(ResultsError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(read_results("a,b\n".as_bytes()), Err(ResultsError::Header)));
        assert!(matches!(read_results("".as_bytes()), Err(ResultsError::Header)));
    }
}
