//! Daily VIX/VVIX input series.

use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mcmc::Observations;

/// Validated daily series. `y = ln(vix)` and `vvix_sq = (vvix / 100)²`
/// unless the file carries those columns itself, in which case they are
/// taken verbatim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservedSeries {
    pub dates: Vec<NaiveDate>,
    pub vix: Vec<f64>,
    pub vvix: Vec<f64>,
    pub y: Vec<f64>,
    pub vvix_sq: Vec<f64>,
}

impl ObservedSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Estimation input: row `k` becomes day `k`, so `T = rows - 2`.
    pub fn observations(&self) -> Result<Observations> {
        Observations::new(self.y.clone(), self.vvix_sq.clone())
    }
}

fn parse_number(field: Option<&str>, row: usize, name: &str) -> Result<f64> {
    let raw = field.map(str::trim).unwrap_or("");
    if raw.is_empty() {
        return Err(Error::Input {
            row,
            reason: format!("missing {name}"),
        });
    }
    let v: f64 = raw.parse().map_err(|_| Error::Input {
        row,
        reason: format!("malformed {name} `{raw}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Input {
            row,
            reason: format!("non-finite {name}"),
        });
    }
    Ok(v)
}

/// Parse CSV with a `date,vix,vvix` header (extra columns allowed, `#`
/// lines ignored). Row numbers in errors count data rows from 1.
pub fn parse_csv<R: Read>(reader: R) -> Result<ObservedSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(ci_date), Some(ci_vix), Some(ci_vvix)) = (col("date"), col("vix"), col("vvix"))
    else {
        return Err(Error::Input {
            row: 0,
            reason: "header must contain date, vix and vvix".into(),
        });
    };
    let ci_y = col("y");
    let ci_vsq = col("vvix_sq");

    let mut s = ObservedSeries {
        dates: Vec::new(),
        vix: Vec::new(),
        vvix: Vec::new(),
        y: Vec::new(),
        vvix_sq: Vec::new(),
    };
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| Error::Input {
            row,
            reason: e.to_string(),
        })?;
        let raw_date = rec.get(ci_date).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| Error::Input {
            row,
            reason: format!("malformed date `{raw_date}`"),
        })?;
        if let Some(prev) = s.dates.last() {
            if date <= *prev {
                return Err(Error::Input {
                    row,
                    reason: format!("date {date} does not follow {prev}"),
                });
            }
        }
        let vix = parse_number(rec.get(ci_vix), row, "vix")?;
        let vvix = parse_number(rec.get(ci_vvix), row, "vvix")?;
        if !(vix > 0.0) {
            return Err(Error::Input {
                row,
                reason: format!("vix must be positive, got {vix}"),
            });
        }
        if !(vvix > 0.0) {
            return Err(Error::Input {
                row,
                reason: format!("vvix must be positive, got {vvix}"),
            });
        }
        let y = match ci_y {
            Some(i) => parse_number(rec.get(i), row, "y")?,
            None => vix.ln(),
        };
        let vvix_sq = match ci_vsq {
            Some(i) => parse_number(rec.get(i), row, "vvix_sq")?,
            None => (vvix / 100.0).powi(2),
        };
        s.dates.push(date);
        s.vix.push(vix);
        s.vvix.push(vvix);
        s.y.push(y);
        s.vvix_sq.push(vvix_sq);
    }
    if s.is_empty() {
        return Err(Error::Input {
            row: 0,
            reason: "no data rows".into(),
        });
    }
    Ok(s)
}

pub fn ingest_csv(path: &Path) -> Result<ObservedSeries> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open input {}: {e}", path.display())))?;
    parse_csv(std::io::BufReader::new(file))
}

/// `count` consecutive weekdays starting at `start` (moved forward to a
/// weekday if needed).
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    use chrono::{Datelike, Weekday};
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}
