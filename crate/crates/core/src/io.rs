//! Plain-text formats: numeric CSV tables with a header row, label columns,
//! one-index-per-line files and loss traces.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ndcore::Matrix;

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            Error::Table { row, column: len as usize + 1, message: format!("expected {expected_len} fields, found {len}") }
        }
        other => Error::Table { row, column: 0, message: format!("{other:?}") },
    }
}

/// Writes `m` with header `{prefix}0,{prefix}1,…`. Values use the shortest
/// decimal form that reads back to the same `f64`.
pub fn write_matrix_csv<W: Write>(writer: W, m: &Matrix, prefix: &str) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    w.write_record((0..m.cols()).map(|j| format!("{prefix}{j}"))).map_err(csv_error)?;
    let mut buf = Vec::with_capacity(m.cols());
    for i in 0..m.rows() {
        buf.clear();
        buf.extend(m.row(i).iter().map(|v| v.to_string()));
        w.write_record(&buf).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric table with a header row. Errors name the 1-based file
/// line and column of the offending cell.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<Matrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let cols = r.headers().map_err(csv_error)?.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(rows + 2, |p| p.line() as usize);
        if rec.len() != cols {
            return Err(Error::Table { row: line, column: rec.len().min(cols) + 1, message: format!("expected {cols} fields, found {}", rec.len()) });
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::Table { row: line, column: j + 1, message: format!("not a number: {cell:?}") })?;
            if !v.is_finite() {
                return Err(Error::Table { row: line, column: j + 1, message: format!("non-finite value {cell:?}") });
            }
            data.push(v);
        }
        rows += 1;
    }
    Matrix::new(rows, cols, data)
}

pub fn write_labels_csv<W: Write>(writer: W, labels: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["label"]).map_err(csv_error)?;
    for l in labels {
        w.write_record([l.to_string()]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels_csv<R: Read>(reader: R) -> Result<Vec<usize>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let cols = r.headers().map_err(csv_error)?.len();
    if cols != 1 {
        return Err(Error::Table { row: 1, column: 2, message: format!("label files have one column, found {cols}") });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(out.len() + 2, |p| p.line() as usize);
        let cell = rec.get(0).unwrap_or("");
        out.push(cell.trim().parse().map_err(|_| Error::Table { row: line, column: 1, message: format!("not a label: {cell:?}") })?);
    }
    Ok(out)
}

/// One non-negative integer per line; blank lines are skipped.
pub fn parse_index_lines(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse().map_err(|_| Error::Parse { line: k + 1, message: format!("not an index: {t:?}") })?);
    }
    Ok(out)
}

pub fn format_index_lines(values: &[usize]) -> String {
    let mut s = String::with_capacity(values.len() * 4);
    for v in values {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    s
}

pub fn write_loss_trace_csv<W: Write>(writer: W, trace: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "loss"]).map_err(csv_error)?;
    for (i, l) in trace.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_loss_trace_csv<R: Read>(reader: R) -> Result<Vec<f64>> {
    let m = read_matrix_csv(reader)?;
    if m.cols() != 2 {
        return Err(Error::Table { row: 1, column: m.cols().min(2) + 1, message: "loss traces have two columns".into() });
    }
    Ok(m.column(1))
}

pub fn read_matrix_file(path: &Path) -> Result<Matrix> {
    read_matrix_csv(fs::File::open(path)?)
}

pub fn write_matrix_file(path: &Path, m: &Matrix, prefix: &str) -> Result<()> {
    let mut buf = Vec::new();
    write_matrix_csv(&mut buf, m, prefix)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_labels_file(path: &Path) -> Result<Vec<usize>> {
    read_labels_csv(fs::File::open(path)?)
}

pub fn write_labels_file(path: &Path, labels: &[usize]) -> Result<()> {
    let mut buf = Vec::new();
    write_labels_csv(&mut buf, labels)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_index_file(path: &Path) -> Result<Vec<usize>> {
    parse_index_lines(&fs::read_to_string(path)?)
}

pub fn write_index_file(path: &Path, values: &[usize]) -> Result<()> {
    fs::write(path, format_index_lines(values))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matrix_round_trip_with_header() {
        let m = Matrix::from_rows(&[vec![1.5, -2.0], vec![0.1, 1e-300]]).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m, "v").unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("v0,v1\n1.5,-2\n"));
        assert_eq!(read_matrix_csv(&buf[..]).unwrap(), m);
    }

    #[test]
    fn errors_locate_the_cell() {
        match read_matrix_csv("a,b\n1,2\n3,x\n".as_bytes()) {
            Err(Error::Table { row, column, .. }) => assert_eq!((row, column), (3, 2)),
            other => panic!("{other:?}"),
        }
        match read_matrix_csv("a,b\n1,2\n3\n".as_bytes()) {
            Err(Error::Table { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        match read_labels_csv("label\n0\n-1\n".as_bytes()) {
            Err(Error::Table { row, column, .. }) => assert_eq!((row, column), (3, 1)),
            other => panic!("{other:?}"),
        }
        assert!(read_matrix_csv("a\nNaN\n".as_bytes()).is_err());
    }

    #[test]
    fn header_only_is_an_empty_table() {
        let m = read_matrix_csv("z0,z1\n".as_bytes()).unwrap();
        assert_eq!(m.shape(), (0, 2));
    }

    #[test]
    fn index_lines() {
        assert_eq!(parse_index_lines("3\n\n10\n").unwrap(), vec![3, 10]);
        assert_eq!(format_index_lines(&[1, 2]), "1\n2\n");
        assert!(matches!(parse_index_lines("1\nx\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn loss_trace_round_trip() {
        let trace = vec![3.0, 2.5, 0.125];
        let mut buf = Vec::new();
        write_loss_trace_csv(&mut buf, &trace).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("iteration,loss\n0,3\n"));
        assert_eq!(read_loss_trace_csv(&buf[..]).unwrap(), trace);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(vals in prop::collection::vec(-1e10..1e10f64, 1..30), cols in 1usize..4) {
            let rows = vals.len() / cols;
            prop_assume!(rows > 0);
            let m = Matrix::new(rows, cols, vals[..rows * cols].to_vec()).unwrap();
            let mut buf = Vec::new();
            write_matrix_csv(&mut buf, &m, "v").unwrap();
            let back = read_matrix_csv(&buf[..]).unwrap();
            for (a, b) in back.as_slice().iter().zip(m.as_slice()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
