//! Matrix Market and CSV persistence.
//!
//! The Matrix Market writer always emits `array real general` with 17
//! significant digits, which round-trips every finite `f64` bit-exactly. The
//! reader accepts `array` and `coordinate` files with `real`, `integer` or
//! `pattern` fields and `general`, `symmetric` or `skew-symmetric` storage.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::DenseMatrix;
use crate::error::{Result, RipError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> RipError {
    RipError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line: &str) -> Result<(Layout, Field, Symmetry)> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let layout = match tokens[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(parse_err(1, format!("unsupported format '{other}'"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };
    Ok((layout, field, symmetry))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("bad number '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad integer '{tok}'")))
}

pub fn read_matrix_market<R: Read>(reader: R) -> Result<DenseMatrix> {
    let reader = BufReader::new(reader);
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let (layout, field, symmetry) = parse_header(&header?)?;

    // Remaining non-comment, non-blank lines.
    let mut body = lines.filter_map(|(no, l)| match l {
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((no, t.to_string())))
            }
        }
        Err(e) => Some(Err(RipError::from(e))),
    });

    let (size_no, size_line) = body.next().ok_or_else(|| parse_err(2, "missing size line"))??;
    let size: Vec<&str> = size_line.split_whitespace().collect();
    let expected = if layout == Layout::Array { 2 } else { 3 };
    if size.len() != expected {
        return Err(parse_err(size_no, "malformed size line"));
    }
    let rows = parse_usize(size[0], size_no)?;
    let cols = parse_usize(size[1], size_no)?;
    if rows == 0 || cols == 0 {
        return Err(parse_err(size_no, "matrix dimensions must be positive"));
    }
    if symmetry != Symmetry::General && rows != cols {
        return Err(parse_err(size_no, "symmetric storage requires a square matrix"));
    }

    let mut data = vec![0.0; rows * cols];
    // Array entries are assigned so that signed zeros survive; repeated
    // coordinate entries are summed.
    let mut put = |i: usize, j: usize, v: f64, sum: bool| {
        let mirror = match symmetry {
            Symmetry::General => None,
            _ if i == j => None,
            Symmetry::Symmetric => Some(v),
            Symmetry::SkewSymmetric => Some(-v),
        };
        if sum {
            data[i * cols + j] += v;
            if let Some(w) = mirror {
                data[j * cols + i] += w;
            }
        } else {
            data[i * cols + j] = v;
            if let Some(w) = mirror {
                data[j * cols + i] = w;
            }
        }
    };

    match layout {
        Layout::Array => {
            // Column-major; symmetric kinds list only the lower triangle.
            let mut slots = Vec::new();
            for j in 0..cols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::SkewSymmetric => j + 1,
                };
                for i in start..rows {
                    slots.push((i, j));
                }
            }
            let mut slot = slots.into_iter();
            for item in body {
                let (no, line) = item?;
                for tok in line.split_whitespace() {
                    let (i, j) = slot
                        .next()
                        .ok_or_else(|| parse_err(no, "more values than the size line declares"))?;
                    let v = parse_f64(tok, no)?;
                    put(i, j, v, false);
                }
            }
            if slot.next().is_some() {
                return Err(parse_err(size_no, "fewer values than the size line declares"));
            }
        }
        Layout::Coordinate => {
            let nnz = parse_usize(size[2], size_no)?;
            let mut seen = 0usize;
            for item in body {
                let (no, line) = item?;
                let toks: Vec<&str> = line.split_whitespace().collect();
                let want = if field == Field::Pattern { 2 } else { 3 };
                if toks.len() != want {
                    return Err(parse_err(no, format!("expected {want} fields")));
                }
                let i = parse_usize(toks[0], no)?;
                let j = parse_usize(toks[1], no)?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(no, format!("entry ({i}, {j}) outside {rows}x{cols}")));
                }
                let v = if field == Field::Pattern {
                    1.0
                } else {
                    parse_f64(toks[2], no)?
                };
                put(i - 1, j - 1, v, true);
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(size_no, format!("declared {nnz} entries, found {seen}")));
            }
        }
    }
    DenseMatrix::new(rows, cols, data)
}

pub fn write_matrix_market<W: Write>(a: &DenseMatrix, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.rows(), a.cols())?;
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(w, "{:.16e}", a.get(i, j))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Coordinate (sparse) variant; only nonzero entries are listed.
pub fn write_matrix_market_coordinate<W: Write>(a: &DenseMatrix, mut w: W) -> Result<()> {
    let nnz = a.as_slice().iter().filter(|v| **v != 0.0).count();
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.rows(), a.cols(), nnz)?;
    for i in 0..a.rows() {
        for (j, v) in a.row(i).iter().enumerate() {
            if *v != 0.0 {
                writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a vector as an `n x 1` array.
pub fn write_vector_market<W: Write>(x: &[f64], w: W) -> Result<()> {
    let col = DenseMatrix::new(x.len(), 1, x.to_vec())?;
    write_matrix_market(&col, w)
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_matrix_market(File::open(path)?)
}

pub fn write_matrix_market_file(a: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_market(a, BufWriter::new(File::create(path)?))
}

/// One matrix row per line, comma separated, no header.
pub fn read_csv<R: Read>(reader: R) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (no, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|tok| parse_f64(tok, no + 1))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(parse_err(1, "empty CSV matrix"));
    }
    DenseMatrix::from_rows(&rows)
}

pub fn write_csv<W: Write>(a: &DenseMatrix, w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..a.rows() {
        // Debug formatting is the shortest representation that round-trips.
        wtr.write_record(a.row(i).iter().map(|v| format!("{v:?}")))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Dispatches on extension: `.csv` is CSV, anything else Matrix Market.
pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        read_csv(File::open(path)?)
    } else {
        read_matrix_market_file(path)
    }
}
