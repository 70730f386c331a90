//! CSV ingestion of point clouds and serialization of distance matrices.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{DistanceMatrix, PointCloud};

/// Formats a float with 17 significant digits; `+inf` is written as `inf`.
pub fn format_float(x: f64) -> String {
    if x.is_infinite() && x > 0.0 {
        "inf".to_string()
    } else if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Inverse of [`format_float`].
pub fn parse_float(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        t => t.parse().ok(),
    }
}

/// Reads one point per row. A first row that does not parse as numbers is
/// taken as a header; any later unparsable row is an error naming its line.
pub fn read_point_cloud<R: Read>(reader: R) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut first = true;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, String> = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| format!("cannot parse {f:?} as a number"))
            })
            .collect();
        match parsed {
            Ok(row) => {
                if let Some(expected) = rows.first().map(Vec::len) {
                    if row.len() != expected {
                        return Err(Error::Parse {
                            line,
                            message: format!("expected {expected} columns, found {}", row.len()),
                        });
                    }
                }
                if let Some(col) = row.iter().position(|x| !x.is_finite()) {
                    return Err(Error::Parse {
                        line,
                        message: format!("non-finite value in column {}", col + 1),
                    });
                }
                rows.push(row);
            }
            Err(_) if first => {}
            Err(message) => return Err(Error::Parse { line, message }),
        }
        first = false;
    }
    PointCloud::new(&rows)
}

pub fn read_point_cloud_file(path: impl AsRef<Path>) -> Result<PointCloud> {
    read_point_cloud(std::fs::File::open(path)?)
}

pub fn write_point_cloud<W: Write>(cloud: &PointCloud, mut out: W) -> Result<()> {
    for p in cloud.points() {
        let row: Vec<String> = p.iter().map(|&x| format_float(x)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Writes an `n × n` matrix, one row per line, no header.
pub fn write_distance_matrix<W: Write>(m: &DistanceMatrix, mut out: W) -> Result<()> {
    for i in 0..m.len() {
        let row: Vec<String> = m.row(i).iter().map(|&x| format_float(x)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_distance_matrix_file(m: &DistanceMatrix, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    write_distance_matrix(m, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn read_distance_matrix<R: Read>(reader: R) -> Result<DistanceMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .map(|f| {
                parse_float(f).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("cannot parse {f:?} as a distance"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidMatrix("distance matrix is not square".into()));
    }
    let m = DistanceMatrix::from_fn(n, |i, j| rows[i][j])?;
    for (i, row) in rows.iter().enumerate() {
        if row[i] != 0.0 || (0..n).any(|j| row[j] != rows[j][i]) {
            return Err(Error::InvalidMatrix(format!(
                "row {i} breaks symmetry or zero diagonal"
            )));
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_detected() {
        let c = read_point_cloud("x,y\n1,0\n0,1\n".as_bytes()).unwrap();
        assert_eq!((c.len(), c.dim()), (2, 2));
        let c = read_point_cloud("1,0\r\n0,1\r\n".as_bytes()).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let text = "x,y\n1,0\n2,0\n3,0\n4,0\n5,0\nfoo,0\n";
        let err = read_point_cloud(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 7, .. }), "{err}");
        assert!(err.to_string().starts_with("line 7"));
    }

    #[test]
    fn ragged_row_names_its_line() {
        let err = read_point_cloud("1,0\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_file_is_empty_input() {
        assert!(matches!(
            read_point_cloud("".as_bytes()),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            read_point_cloud("a,b\n".as_bytes()),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn matrix_roundtrip_keeps_inf_and_bits() {
        let m = DistanceMatrix::from_fn(3, |i, j| {
            if i == 0 && j == 2 {
                f64::INFINITY
            } else {
                0.1 + (i * 3 + j) as f64 / 7.0
            }
        })
        .unwrap();
        let mut buf = Vec::new();
        write_distance_matrix(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("inf"));
        let back = read_distance_matrix(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(format_float(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(parse_float(&format_float(0.1)), Some(0.1));
    }
}
