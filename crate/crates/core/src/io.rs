//! MatrixMarket coordinate files and single-column CSV vectors.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;

const MM_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_matrix_market(BufReader::new(file), path)
}

/// Parses a real general coordinate MatrixMarket stream. `origin` is only
/// used for error messages.
pub fn parse_matrix_market(reader: impl BufRead, origin: &Path) -> Result<SparseMatrix> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file".into()))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "coordinate"
        || tokens[3] != "real"
        || tokens[4] != "general"
    {
        return Err(err(1, format!("unsupported header {header:?}, expected {MM_HEADER:?}")));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(err(lineno, "size line must have 3 fields".into()));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|e| err(lineno, format!("bad size field {s:?}: {e}")))
                };
                let (r, c, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                triplets.reserve(nnz);
                size = Some((r, c, nnz));
            }
            Some((r, c, _)) => {
                if fields.len() != 3 {
                    return Err(err(lineno, "entry line must have 3 fields".into()));
                }
                let i: usize = fields[0]
                    .parse()
                    .map_err(|e| err(lineno, format!("bad row index: {e}")))?;
                let j: usize = fields[1]
                    .parse()
                    .map_err(|e| err(lineno, format!("bad column index: {e}")))?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|e| err(lineno, format!("bad value: {e}")))?;
                if i == 0 || j == 0 || i > r || j > c {
                    return Err(err(lineno, format!("index ({i}, {j}) outside {r}x{c}")));
                }
                if !v.is_finite() {
                    return Err(err(lineno, "non-finite value".into()));
                }
                triplets.push((i - 1, j - 1, v));
            }
        }
    }
    let (r, c, nnz) = size.ok_or_else(|| err(1, "missing size line".into()))?;
    if triplets.len() != nnz {
        return Err(Error::Data {
            path: origin.to_path_buf(),
            message: format!("declared {nnz} entries, found {}", triplets.len()),
        });
    }
    SparseMatrix::from_triplets(r, c, &triplets)
}

pub fn write_matrix_market(path: impl AsRef<Path>, a: &SparseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market_to(&mut w, a)?;
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market_to(w: &mut impl Write, a: &SparseMatrix) -> Result<()> {
    writeln!(w, "{MM_HEADER}")?;
    writeln!(w, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        // `{:e}` prints the shortest representation that round-trips.
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_vector_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    parse_vector_csv(File::open(path)?, path)
}

pub fn parse_vector_csv(reader: impl Read, origin: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.len() != 1 {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: format!("expected a single column, found {}", record.len()),
            });
        }
        let v: f64 = record[0].parse().map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message: format!("bad value {:?}: {e}", &record[0]),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: "non-finite value".into(),
            });
        }
        out.push(v);
    }
    Ok(out)
}

pub fn write_vector_csv(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for x in v {
        writeln!(w, "{x:e}")?;
    }
    w.flush()?;
    Ok(())
}
