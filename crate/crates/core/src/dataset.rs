//! Columnar dataset loading and active domains.
//!
//! A [`Dataset`] is a single in-memory table of `f64` columns. Categorical
//! columns are encoded as numeric codes at load time (first appearance order,
//! starting at 0) and the label-to-code mapping is returned alongside so it
//! can be reported back to the user.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
}

/// Label-to-code mappings for the categorical attributes of a dataset,
/// serialized as `{attr: {label: code}}`.
pub type CategoricalMaps = BTreeMap<String, BTreeMap<String, f64>>;

/// A single-table dataset with one `f64` column per attribute.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Vec<String>,
    columns: Vec<Vec<f64>>,
    categorical: BTreeSet<String>,
    row_count: usize,
}

/// The sorted distinct values an attribute takes in the dataset. Repair
/// candidates draw their constants from these values.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveDomain {
    pub attribute: String,
    pub values: Vec<f64>,
}

impl Dataset {
    pub fn new(
        schema: Vec<String>,
        columns: Vec<Vec<f64>>,
        categorical: BTreeSet<String>,
    ) -> Result<Self, DataError> {
        if schema.len() != columns.len() {
            return Err(DataError::Schema(format!(
                "{} attribute names for {} columns",
                schema.len(),
                columns.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for name in &schema {
            if name.is_empty() {
                return Err(DataError::Schema("empty attribute name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(DataError::Schema(format!("duplicate attribute {name:?}")));
            }
        }
        let row_count = columns.first().map_or(0, Vec::len);
        for (name, col) in schema.iter().zip(&columns) {
            if col.len() != row_count {
                return Err(DataError::Schema(format!(
                    "column {name:?} has {} rows, expected {row_count}",
                    col.len()
                )));
            }
            if let Some(pos) = col.iter().position(|v| v.is_nan()) {
                return Err(DataError::Parse {
                    row: pos,
                    column: name.clone(),
                    message: "NaN value".into(),
                });
            }
        }
        Ok(Self {
            schema,
            columns,
            categorical,
            row_count,
        })
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn attr_index(&self, attr: &str) -> Option<usize> {
        self.schema.iter().position(|a| a == attr)
    }

    pub fn column(&self, idx: usize) -> &[f64] {
        &self.columns[idx]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn is_categorical(&self, attr: &str) -> bool {
        self.categorical.contains(attr)
    }

    /// Sorted distinct values of `attr`'s column.
    pub fn active_domain(&self, attr: &str) -> Result<ActiveDomain, DataError> {
        let idx = self
            .attr_index(attr)
            .ok_or_else(|| DataError::UnknownAttribute(attr.to_string()))?;
        let mut values = self.columns[idx].clone();
        values.sort_unstable_by(f64::total_cmp);
        values.dedup();
        Ok(ActiveDomain {
            attribute: attr.to_string(),
            values,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), DataError> {
        let wrap = |source| DataError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(wrap)?);
        let render = |row: usize| {
            let cells: Vec<String> = self.columns.iter().map(|c| fmt_value(c[row])).collect();
            cells.join(",")
        };
        writeln!(out, "{}", self.schema.join(",")).map_err(wrap)?;
        for row in 0..self.row_count {
            writeln!(out, "{}", render(row)).map_err(wrap)?;
        }
        out.flush().map_err(wrap)
    }
}

/// Renders a value so that parsing it back yields the identical f64.
fn fmt_value(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 && !(v == 0.0 && v.is_sign_negative()) {
        format!("{}", v as i64)
    } else {
        // Shortest round-trippable representation ("-0" included).
        format!("{v}")
    }
}

/// Loads a CSV file (RFC 4180 subset: comma separated, header row, UTF-8).
///
/// Columns named in `categorical_attrs` may hold arbitrary strings which are
/// encoded by first appearance starting at 0; every other cell must parse as
/// a finite number.
pub fn load_csv(
    path: &Path,
    categorical_attrs: &BTreeSet<String>,
) -> Result<(Dataset, CategoricalMaps), DataError> {
    let wrap_io = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::open(path).map_err(wrap_io)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::Schema(format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() {
        return Err(DataError::Schema("empty header".into()));
    }

    let cat_cols: Vec<bool> = header
        .iter()
        .map(|h| categorical_attrs.contains(h))
        .collect();
    let mut codes: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); header.len()];
    let mut next_code: Vec<f64> = vec![0.0; header.len()];
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];

    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::Parse {
            row: line,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(DataError::Parse {
                row: line,
                column: String::new(),
                message: format!("row has {} cells, expected {}", record.len(), header.len()),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let value = if cat_cols[col] {
                *codes[col].entry(cell.to_string()).or_insert_with(|| {
                    let c = next_code[col];
                    next_code[col] += 1.0;
                    c
                })
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| DataError::Parse {
                    row: line,
                    column: header[col].clone(),
                    message: format!("not a number: {cell:?}"),
                })?;
                if !v.is_finite() {
                    return Err(DataError::Parse {
                        row: line,
                        column: header[col].clone(),
                        message: format!("non-finite value: {cell:?}"),
                    });
                }
                v
            };
            columns[col].push(value);
        }
    }

    let maps: CategoricalMaps = header
        .iter()
        .zip(&codes)
        .filter(|(h, _)| categorical_attrs.contains(*h))
        .map(|(h, m)| (h.clone(), m.clone()))
        .collect();
    let ds = Dataset::new(header, columns, categorical_attrs.clone())?;
    Ok((ds, maps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!(
            "repairkit-ds-{}-{:?}.csv",
            std::process::id(),
            std::thread::current().id()
        ));
        std::fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn categorical_encoding_by_first_appearance() {
        let path = write_temp("T,G\n27,M\n34,F\n");
        let cats = BTreeSet::from(["G".to_string()]);
        let (ds, maps) = load_csv(&path, &cats).unwrap();
        assert_eq!(ds.row_count(), 2);
        assert_eq!(maps["G"]["M"], 0.0);
        assert_eq!(maps["G"]["F"], 1.0);
        assert_eq!(ds.column(1), &[0.0, 1.0]);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn ragged_row_is_rejected() {
        let path = write_temp("A,B\n1,2\n1,2,3\n");
        let err = load_csv(&path, &BTreeSet::new()).unwrap_err();
        assert!(matches!(err, DataError::Parse { row: 1, .. }));
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn non_numeric_cell_is_rejected() {
        let path = write_temp("A\n1\nx\n");
        let err = load_csv(&path, &BTreeSet::new()).unwrap_err();
        assert!(matches!(err, DataError::Parse { row: 1, .. }));
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn duplicate_header_is_rejected() {
        let path = write_temp("A,A\n1,2\n");
        assert!(matches!(
            load_csv(&path, &BTreeSet::new()),
            Err(DataError::Schema(_))
        ));
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn four_row_fixture_loads() {
        let path = write_temp("T,G,Y\n31,F,1\n27,F,1\n37,M,1\n34,M,1\n");
        let cats = BTreeSet::from(["G".to_string()]);
        let (ds, _) = load_csv(&path, &cats).unwrap();
        assert_eq!(ds.row_count(), 4);
        let dom = ds.active_domain("T").unwrap();
        assert_eq!(dom.values, vec![27.0, 31.0, 34.0, 37.0]);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn active_domain_dedups_and_sorts() {
        let ds = Dataset::new(
            vec!["a".into()],
            vec![vec![8.0, 10.0, 8.0]],
            BTreeSet::new(),
        )
        .unwrap();
        assert_eq!(ds.active_domain("a").unwrap().values, vec![8.0, 10.0]);
        assert!(matches!(
            ds.active_domain("zzz"),
            Err(DataError::UnknownAttribute(_))
        ));
    }

    #[test]
    fn empty_dataset_has_empty_domain() {
        let ds = Dataset::new(vec!["a".into()], vec![vec![]], BTreeSet::new()).unwrap();
        assert!(ds.active_domain("a").unwrap().values.is_empty());
    }

    #[test]
    fn domain_endpoints_are_column_extremes() {
        let col = vec![4.0, -1.5, 9.0, 4.0, 0.25];
        let ds = Dataset::new(vec!["a".into()], vec![col.clone()], BTreeSet::new()).unwrap();
        let dom = ds.active_domain("a").unwrap().values;
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(*dom.first().unwrap(), min);
        assert_eq!(*dom.last().unwrap(), max);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = Dataset::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, -2.5, 1e9], vec![0.25, -0.0, -0.125]],
            BTreeSet::new(),
        )
        .unwrap();
        let path = std::env::temp_dir().join(format!("repairkit-rt-{}.csv", std::process::id()));
        ds.write_csv(&path).unwrap();
        let (back, _) = load_csv(&path, &BTreeSet::new()).unwrap();
        for c in 0..2 {
            let bits = |col: &[f64]| col.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(ds.column(c)), bits(back.column(c)));
        }
        std::fs::remove_file(path).ok();
    }
}
