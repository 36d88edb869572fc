use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, CorpusError, Result};
use crate::stats::{RatingMatrix, Scale};

/// One rater's judgment of one item. Empty cells are `None`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub rater_id: String,
    pub item_id: String,
    /// Likert 1..=5.
    pub q1: Option<u8>,
    /// Unsupported-claim flag.
    pub q2: Option<bool>,
    pub cohort: String,
}

/// Ratings pivoted into items x raters, once per question. Items and raters
/// keep first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ratings {
    pub records: Vec<RatingRecord>,
    pub q1: RatingMatrix,
    pub q2: RatingMatrix,
    /// rater_id -> cohort tag.
    pub cohorts: BTreeMap<String, String>,
}

impl Ratings {
    fn from_records(records: Vec<RatingRecord>) -> Self {
        let mut items: Vec<String> = Vec::new();
        let mut raters: Vec<String> = Vec::new();
        let mut cohorts = BTreeMap::new();
        for r in &records {
            if !items.contains(&r.item_id) {
                items.push(r.item_id.clone());
            }
            if !raters.contains(&r.rater_id) {
                raters.push(r.rater_id.clone());
            }
            cohorts.entry(r.rater_id.clone()).or_insert_with(|| r.cohort.clone());
        }
        let item_ix: BTreeMap<&str, usize> = items.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let rater_ix: BTreeMap<&str, usize> = raters.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut c1 = vec![vec![None; raters.len()]; items.len()];
        let mut c2 = vec![vec![None; raters.len()]; items.len()];
        for r in &records {
            let (i, j) = (item_ix[r.item_id.as_str()], rater_ix[r.rater_id.as_str()]);
            c1[i][j] = r.q1.map(|v| v - 1);
            c2[i][j] = r.q2.map(u8::from);
        }
        // Cells are range-checked while parsing.
        let q1 = RatingMatrix::new(Scale::Likert5, items.clone(), raters.clone(), c1).expect("checked cells");
        let q2 = RatingMatrix::new(Scale::Binary, items, raters, c2).expect("checked cells");
        Self {
            records,
            q1,
            q2,
            cohorts,
        }
    }

    pub fn cohort_names(&self) -> Vec<String> {
        self.cohorts
            .values()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// The subset rated by one cohort.
    pub fn cohort(&self, name: &str) -> Ratings {
        Ratings::from_records(self.records.iter().filter(|r| r.cohort == name).cloned().collect())
    }
}

const COLUMNS: [&str; 5] = ["rater_id", "item_id", "q1", "q2", "cohort"];

pub fn load_ratings(path: &Path) -> Result<Ratings> {
    let f = std::fs::File::open(path).map_err(io_err(path))?;
    parse_ratings(f)
}

pub fn parse_ratings<R: Read>(r: R) -> Result<Ratings> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr
        .headers()
        .map_err(|e| CorpusError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut col = [0usize; 5];
    for (k, name) in COLUMNS.iter().enumerate() {
        col[k] = header
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| CorpusError::MissingField {
                line: 1,
                field: name.to_string(),
            })?;
    }
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CorpusError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| row.get(col[k]).unwrap_or("");
        let (rater, item) = (field(0), field(1));
        for (k, v) in [(0, rater), (1, item)] {
            if v.is_empty() {
                return Err(CorpusError::MissingField {
                    line,
                    field: COLUMNS[k].into(),
                });
            }
        }
        let out_of_range = |k: usize, v: &str| CorpusError::OutOfRange {
            line,
            field: COLUMNS[k].into(),
            value: v.into(),
        };
        let q1 = match field(2) {
            "" => None,
            s => match s.parse::<u8>() {
                Ok(v @ 1..=5) => Some(v),
                Ok(_) => return Err(out_of_range(2, s)),
                Err(_) => match s.parse::<i64>() {
                    Ok(_) => return Err(out_of_range(2, s)),
                    Err(e) => {
                        return Err(CorpusError::Parse {
                            line,
                            message: format!("q1 `{s}`: {e}"),
                        })
                    }
                },
            },
        };
        let q2 = match field(3) {
            "" => None,
            "Y" | "y" => Some(true),
            "N" | "n" => Some(false),
            s => return Err(out_of_range(3, s)),
        };
        if !seen.insert((rater.to_string(), item.to_string())) {
            return Err(CorpusError::DuplicateId {
                line,
                id: format!("{rater}/{item}"),
            });
        }
        records.push(RatingRecord {
            rater_id: rater.into(),
            item_id: item.into(),
            q1,
            q2,
            cohort: field(4).into(),
        });
    }
    Ok(Ratings::from_records(records))
}
