use adjquat::PointCloud;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    Dimension { line: u64, expected: usize, found: usize },
}

const HEADERS: [&[&str]; 5] = [&["x"], &["x", "y"], &["x", "y", "z"], &["u"], &["u", "v"]];

/// Reads a point cloud with header `x,y[,z]` or `u[,v]`, one point per row.
pub fn load_cloud_csv(path: &Path) -> Result<PointCloud, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    parse_cloud_csv(&text)
}

pub fn parse_cloud_csv(text: &str) -> Result<PointCloud, LoadError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(LoadError::Parse { line: 1, message: "empty file".into() }),
        Some(r) => r.map_err(|e| LoadError::Parse { line: 1, message: e.to_string() })?,
    };
    let names: Vec<&str> = header.iter().collect();
    let dim = HEADERS
        .iter()
        .find(|h| **h == names.as_slice())
        .map(|h| h.len())
        .ok_or_else(|| LoadError::Parse { line: 1, message: format!("unrecognized header {names:?}") })?;
    let mut coords = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| LoadError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() != dim {
            return Err(LoadError::Dimension { line, expected: dim, found: rec.len() });
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| LoadError::Parse { line, message: format!("not a number: {field:?}") })?;
            if !v.is_finite() {
                return Err(LoadError::Parse { line, message: format!("non-finite value {field:?}") });
            }
            coords.push(v);
        }
    }
    if coords.is_empty() {
        return Err(LoadError::Parse { line: 2, message: "no data rows".into() });
    }
    Ok(PointCloud::new(dim, coords).expect("validated coordinates"))
}
