//! Tabular data: pouring trials on disk and named numeric columns in memory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::world::{Trial, FU, RC, RD, RV, S};

pub const TRIAL_HEADER: [&str; 5] = ["rc", "fu", "rd", "rv", "spillage"];

/// Column-major numeric table. Binary variables are stored as 0.0 / 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Schema("column count does not match header".into()));
        }
        if let Some(first) = columns.first() {
            if columns.iter().any(|c| c.len() != first.len()) {
                return Err(Error::Schema("ragged columns".into()));
            }
        }
        Ok(Dataset { names, columns })
    }

    pub fn from_trials(trials: &[Trial]) -> Self {
        let names = [RC, FU, RD, RV, S].iter().map(|s| s.to_string()).collect();
        let columns = [RC, FU, RD, RV, S]
            .iter()
            .map(|v| trials.iter().map(|t| t.get(v).expect("known variable")).collect())
            .collect();
        Dataset { names, columns }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    /// Column position by node name. Matching is case-insensitive and the
    /// trial header name `spillage` stands in for `S`.
    pub fn position(&self, name: &str) -> Result<usize> {
        let canon = |s: &str| {
            let s = s.to_ascii_lowercase();
            if s == "spillage" {
                "s".to_string()
            } else {
                s
            }
        };
        let want = canon(name);
        self.names.iter().position(|n| canon(n) == want).ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.columns[self.position(name)?])
    }

    pub fn column_at(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    /// Rows picked by index, with repetition allowed.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect();
        Dataset { names: self.names.clone(), columns }
    }

    /// Reads any CSV whose cells are numbers or `true`/`false`.
    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let mut rdr = csv::Reader::from_path(path)?;
        let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != names.len() {
                return Err(Error::Schema(format!("row {} has {} cells", line + 1, rec.len())));
            }
            for (col, cell) in columns.iter_mut().zip(rec.iter()) {
                col.push(
                    parse_cell(cell)
                        .ok_or_else(|| Error::Schema(format!("row {}: `{cell}` is not numeric", line + 1)))?,
                );
            }
        }
        Dataset::new(names, columns)
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    match cell.trim() {
        "true" => Some(1.0),
        "false" => Some(0.0),
        s => s.parse().ok(),
    }
}

pub fn write_trials_csv(path: &Path, trials: &[Trial]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    for t in trials {
        wtr.serialize(t)?;
    }
    if trials.is_empty() {
        wtr.write_record(TRIAL_HEADER)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_trials_csv(path: &Path) -> Result<Vec<Trial>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    for want in TRIAL_HEADER {
        if !header.iter().any(|h| h == want) {
            return Err(Error::MissingColumn(want.to_string()));
        }
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let t: Trial = rec.map_err(|e| Error::Schema(e.to_string()))?;
        t.check()?;
        out.push(t);
    }
    Ok(out)
}

pub fn write_trials_jsonl(path: &Path, trials: &[Trial]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in trials {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials_jsonl(path: &Path) -> Result<Vec<Trial>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Trial = serde_json::from_str(&line).map_err(|e| Error::Schema(e.to_string()))?;
        t.check()?;
        out.push(t);
    }
    Ok(out)
}

fn is_jsonl(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "ndjson"))
}

/// Reads trials as JSON lines for `.jsonl`/`.ndjson`, CSV otherwise.
pub fn read_trials(path: &Path) -> Result<Vec<Trial>> {
    if is_jsonl(path) {
        read_trials_jsonl(path)
    } else {
        read_trials_csv(path)
    }
}

pub fn write_trials(path: &Path, trials: &[Trial]) -> Result<()> {
    if is_jsonl(path) {
        write_trials_jsonl(path, trials)
    } else {
        write_trials_csv(path, trials)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::WorldConfig;

    #[test]
    fn trial_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let trials = WorldConfig::default().generate_dataset(50, 4);
        for name in ["t.csv", "t.jsonl"] {
            let p = dir.path().join(name);
            write_trials(&p, &trials).unwrap();
            assert_eq!(read_trials(&p).unwrap(), trials);
        }
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert!(text.starts_with("rc,fu,rd,rv,spillage\n"));
        let first_row = text.lines().nth(1).unwrap();
        assert!(first_row.ends_with(",0") || first_row.ends_with(",1"));
        let json = std::fs::read_to_string(dir.path().join("t.jsonl")).unwrap();
        assert!(json.lines().next().unwrap().contains("\"spillage\":"));
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "rc,fu,rd,spillage\n1,0.5,1,0\n").unwrap();
        assert!(matches!(read_trials_csv(&p), Err(Error::MissingColumn(c)) if c == "rv"));
    }

    #[test]
    fn column_lookup_aliases() {
        let trials = WorldConfig::default().generate_dataset(5, 1);
        let d = Dataset::from_trials(&trials);
        assert_eq!(d.column("spillage").unwrap(), d.column("S").unwrap());
        assert_eq!(d.column("rc").unwrap()[0], trials[0].rc);
        assert!(d.column("XX").is_err());
        let picked = d.select_rows(&[2, 2, 0]);
        assert_eq!(picked.n_rows(), 3);
        assert_eq!(picked.column("FU").unwrap()[1], trials[2].fu);
    }
}
