//! CSV ingestion: comma separated, header on the first line, plain cells.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use bnscore_core::{DiscreteDataset, DiscreteScheme, GaussianDataset};

use crate::error::{CliError, Result};

/// Rectangular table of string cells with a unique header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    lines: Vec<u64>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .quoting(false)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let header: Vec<String> =
            reader.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(CliError::Csv { path: path.into(), line: 1, message: "missing header".into() });
        }
        let mut seen = BTreeSet::new();
        for name in &header {
            if name.is_empty() {
                return Err(CliError::Schema(format!("{}: empty column name in header", path.display())));
            }
            if !seen.insert(name) {
                return Err(CliError::Schema(format!("{}: duplicate column `{name}`", path.display())));
            }
        }
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != header.len() {
                return Err(CliError::Csv {
                    path: path.into(),
                    line,
                    message: format!("row has {} cells, header has {}", record.len(), header.len()),
                });
            }
            rows.push(record.iter().map(str::to_string).collect());
            lines.push(line);
        }
        Ok(Self { path: path.into(), header, rows, lines })
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Columns rearranged to follow `names`, which must be the same set as the header.
    pub fn reordered(&self, names: &[String]) -> Result<Self> {
        let index: HashMap<&str, usize> = self.header.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut cols = Vec::with_capacity(names.len());
        for name in names {
            let &i = index.get(name.as_str()).ok_or_else(|| {
                CliError::Schema(format!("{}: column `{name}` not found", self.path.display()))
            })?;
            cols.push(i);
        }
        if names.len() != self.header.len() {
            let extra: Vec<&str> =
                self.header.iter().filter(|h| !names.contains(h)).map(String::as_str).collect();
            return Err(CliError::Schema(format!(
                "{}: unexpected columns {}",
                self.path.display(),
                extra.join(", ")
            )));
        }
        Ok(Self {
            path: self.path.clone(),
            header: names.to_vec(),
            rows: self.rows.iter().map(|r| cols.iter().map(|&c| r[c].clone()).collect()).collect(),
            lines: self.lines.clone(),
        })
    }

    fn check_complete(&self) -> Result<()> {
        for (row, &line) in self.rows.iter().zip(&self.lines) {
            if let Some(c) = row.iter().position(String::is_empty) {
                return Err(CliError::IncompleteData {
                    path: self.path.clone(),
                    line,
                    column: self.header[c].clone(),
                });
            }
        }
        Ok(())
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io { path: path.into(), source },
        other => CliError::Csv { path: path.into(), line, message: format!("{other:?}") },
    }
}

/// Declared variables of a discrete model, with optional state labels.
#[derive(Debug, Clone, Copy)]
pub struct DeclaredScheme<'a> {
    pub names: &'a [String],
    pub cardinalities: &'a [usize],
    pub states: Option<&'a [Vec<String>]>,
}

/// Discrete data. Without labels, each column's distinct strings are
/// coded in lexicographic order.
pub fn load_discrete_csv(
    path: &Path,
    declared: Option<DeclaredScheme<'_>>,
    max_states: usize,
) -> Result<DiscreteDataset> {
    let table = CsvTable::read(path)?;
    discrete_from_table(&table, declared, max_states)
}

pub fn discrete_from_table(
    table: &CsvTable,
    declared: Option<DeclaredScheme<'_>>,
    max_states: usize,
) -> Result<DiscreteDataset> {
    let table = match declared {
        Some(d) => table.reordered(d.names)?,
        None => table.clone(),
    };
    table.check_complete()?;
    let n = table.header.len();
    let mut codes: Vec<HashMap<&str, usize>> = Vec::with_capacity(n);
    let mut cards = Vec::with_capacity(n);
    for c in 0..n {
        let name = &table.header[c];
        let labels: Vec<&str> = match declared.and_then(|d| d.states) {
            Some(states) => states[c].iter().map(String::as_str).collect(),
            None => {
                let distinct: BTreeSet<&str> = table.rows.iter().map(|r| r[c].as_str()).collect();
                distinct.into_iter().collect()
            }
        };
        let card = match declared {
            Some(d) => {
                if labels.len() > d.cardinalities[c] {
                    return Err(CliError::Schema(format!(
                        "column `{name}` has {} categories, {} declared",
                        labels.len(),
                        d.cardinalities[c]
                    )));
                }
                d.cardinalities[c]
            }
            None => labels.len().max(2),
        };
        codes.push(labels.iter().enumerate().map(|(k, &s)| (s, k)).collect());
        cards.push(card);
    }
    let mut rows = Vec::with_capacity(table.rows.len());
    for (row, &line) in table.rows.iter().zip(&table.lines) {
        let mut coded = Vec::with_capacity(n);
        for (c, cell) in row.iter().enumerate() {
            let &k = codes[c].get(cell.as_str()).ok_or_else(|| {
                CliError::Schema(format!(
                    "{}: line {line}, column `{}`: unknown category `{cell}`",
                    table.path.display(),
                    table.header[c]
                ))
            })?;
            coded.push(k);
        }
        rows.push(coded);
    }
    let scheme = DiscreteScheme::with_max_states(cards, max_states)?;
    Ok(DiscreteDataset::new(table.header.clone(), scheme, rows)?)
}

/// Real-valued data; every cell must parse to a finite number.
pub fn load_continuous_csv(path: &Path) -> Result<GaussianDataset> {
    continuous_from_table(&CsvTable::read(path)?)
}

pub fn continuous_from_table(table: &CsvTable) -> Result<GaussianDataset> {
    table.check_complete()?;
    let mut rows = Vec::with_capacity(table.rows.len());
    for (row, &line) in table.rows.iter().zip(&table.lines) {
        let mut parsed = Vec::with_capacity(row.len());
        for (c, cell) in row.iter().enumerate() {
            let bad = |message: String| CliError::Parse {
                path: table.path.clone(),
                line,
                column: table.header[c].clone(),
                message,
            };
            let x: f64 = cell.trim().parse().map_err(|_| bad(format!("`{cell}` is not a number")))?;
            if !x.is_finite() {
                return Err(bad(format!("`{cell}` is not finite")));
            }
            parsed.push(x);
        }
        rows.push(parsed);
    }
    Ok(GaussianDataset::new(table.header.clone(), rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bnscore_core::DEFAULT_MAX_STATES;
    use std::io::Write;

    fn file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn lexicographic_codes() {
        let f = file("X,Y\na,b\nb,a\n");
        let d = load_discrete_csv(f.path(), None, DEFAULT_MAX_STATES).unwrap();
        assert_eq!(d.scheme().cardinalities(), &[2, 2]);
        assert_eq!(d.row(0), &[0, 1]);
        assert_eq!(d.row(1), &[1, 0]);
    }

    #[test]
    fn empty_body() {
        let f = file("X,Y\n");
        assert_eq!(load_discrete_csv(f.path(), None, DEFAULT_MAX_STATES).unwrap().m(), 0);
        assert_eq!(load_continuous_csv(f.path()).unwrap().m(), 0);
    }

    #[test]
    fn ragged_row_reports_line() {
        let f = file("X,Y\na,b\na\n");
        let err = load_discrete_csv(f.path(), None, DEFAULT_MAX_STATES).unwrap_err();
        assert_eq!(err.kind(), "csv");
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn missing_cell() {
        let f = file("X,Y\na,\n");
        let err = load_discrete_csv(f.path(), None, DEFAULT_MAX_STATES).unwrap_err();
        assert_eq!(err.kind(), "incomplete-data");
    }

    #[test]
    fn continuous_cells() {
        let f = file("X\n1.5\n-2.0\n1e-3\n");
        let d = load_continuous_csv(f.path()).unwrap();
        assert_eq!((d.m(), d.n()), (3, 1));
        assert_eq!(d.row(2), &[1e-3]);
        let f = file("X\nNaN\n");
        assert_eq!(load_continuous_csv(f.path()).unwrap_err().kind(), "parse");
        let f = file("X\nabc\n");
        assert_eq!(load_continuous_csv(f.path()).unwrap_err().kind(), "parse");
    }

    #[test]
    fn declared_labels_and_order() {
        let f = file("Y,X\nhi,a\nlo,c\n");
        let names = vec!["X".to_string(), "Y".to_string()];
        let states = vec![
            vec!["a".to_string(), "b".to_string(), "c".to_string()],
            vec!["lo".to_string(), "hi".to_string()],
        ];
        let declared = DeclaredScheme { names: &names, cardinalities: &[3, 2], states: Some(&states) };
        let d = load_discrete_csv(f.path(), Some(declared), DEFAULT_MAX_STATES).unwrap();
        assert_eq!(d.names(), names.as_slice());
        assert_eq!(d.row(0), &[0, 1]);
        assert_eq!(d.row(1), &[2, 0]);

        let f = file("X,Y\nz,lo\n");
        let err = load_discrete_csv(f.path(), Some(declared), DEFAULT_MAX_STATES).unwrap_err();
        assert_eq!(err.kind(), "schema");
    }
}
