//! Plain numeric CSV: one design row per line, `,` separated, no header.

use std::io::{Read, Write};
use std::path::Path;

use crate::design::DesignMatrix;
use crate::error::{Error, Result};

pub fn read_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: `{field}` is not a number", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    Ok(rows)
}

pub fn parse_design(text: &str) -> Result<DesignMatrix> {
    DesignMatrix::from_rows(&read_rows(text.as_bytes())?)
}

pub fn read_design(path: impl AsRef<Path>) -> Result<DesignMatrix> {
    let file = std::fs::File::open(path.as_ref())?;
    DesignMatrix::from_rows(&read_rows(file)?)
}

/// Reads a vector stored either as one column or as one row.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let rows = read_rows(std::fs::File::open(path.as_ref())?)?;
    match (rows.len(), rows[0].len()) {
        (1, _) => Ok(rows.into_iter().next().unwrap_or_default()),
        (_, 1) if rows.iter().all(|r| r.len() == 1) => Ok(rows.into_iter().map(|r| r[0]).collect()),
        _ => Err(Error::Parse("expected a single row or a single column".into())),
    }
}

/// Writes the design using the shortest representation that parses back to
/// the identical `f64` (at most 17 significant digits).
pub fn write_design<W: Write>(mut out: W, x: &DesignMatrix) -> Result<()> {
    let mut line = String::new();
    for i in 0..x.rows() {
        line.clear();
        for j in 0..x.cols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_value(x.get(i, j)));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

fn format_value(v: f64) -> String {
    // normalise -0 so written designs are stable
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

pub fn design_to_string(x: &DesignMatrix) -> String {
    let mut buf = Vec::new();
    write_design(&mut buf, x).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
