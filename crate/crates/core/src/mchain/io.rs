//! Matrix Market (coordinate, real, general) and dense CSV readers/writers.
//!
//! Values are written with 17 significant digits so that a save/load round trip
//! reproduces every `f64` bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::matrix::{CsrMatrix, DenseMatrix, Matrix};
use crate::error::{Error, Result};

const MM_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    MatrixMarket,
    Csv,
}

impl MatrixFormat {
    /// `.mtx` means Matrix Market, anything else dense CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("mtx") => MatrixFormat::MatrixMarket,
            _ => MatrixFormat::Csv,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

pub fn load_matrix(path: &Path, format: Option<MatrixFormat>) -> Result<Matrix> {
    let file = File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);
    match format.unwrap_or_else(|| MatrixFormat::from_path(path)) {
        MatrixFormat::MatrixMarket => read_matrix_market(reader).map(Matrix::Sparse),
        MatrixFormat::Csv => read_csv_matrix(reader).map(Matrix::Dense),
    }
}

pub fn save_matrix(m: &Matrix, path: &Path, format: Option<MatrixFormat>) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    match format.unwrap_or_else(|| MatrixFormat::from_path(path)) {
        MatrixFormat::MatrixMarket => write_matrix_market(m, &mut w),
        MatrixFormat::Csv => write_csv_matrix(&m.to_dense(), &mut w),
    }
    .and_then(|_| w.flush())
    .map_err(io_err(path))
}

pub fn read_matrix_market(reader: impl Read) -> Result<CsrMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "empty file")),
    };
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    let expected: Vec<String> = MM_HEADER.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields != expected {
        return Err(parse_err(1, format!("expected header `{MM_HEADER}`")));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(parse_err(lineno, "size line needs rows, cols and entry count"));
                }
                let rows = parse_usize(parts[0], lineno)?;
                let cols = parse_usize(parts[1], lineno)?;
                let nnz = parse_usize(parts[2], lineno)?;
                triplets.reserve(nnz);
                size = Some((rows, cols, nnz));
            }
            Some((rows, cols, _)) => {
                if parts.len() != 3 {
                    return Err(parse_err(lineno, "entry needs row, column and value"));
                }
                let i = parse_usize(parts[0], lineno)?;
                let j = parse_usize(parts[1], lineno)?;
                let v: f64 = parts[2].parse().map_err(|_| parse_err(lineno, "bad value"))?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(Error::Shape(format!(
                        "entry ({i}, {j}) on line {lineno} outside {rows}x{cols}"
                    )));
                }
                triplets.push((i - 1, j - 1, v));
            }
        }
    }
    let (rows, cols, nnz) = size.ok_or_else(|| parse_err(2, "missing size line"))?;
    if triplets.len() != nnz {
        return Err(Error::Shape(format!("header declares {nnz} entries, found {}", triplets.len())));
    }
    CsrMatrix::from_triplets(rows, cols, &triplets)
}

pub fn write_matrix_market(m: &Matrix, w: &mut impl Write) -> std::io::Result<()> {
    let sparse;
    let csr = match m {
        Matrix::Sparse(s) => s,
        Matrix::Dense(d) => {
            sparse = CsrMatrix::from_dense(d);
            &sparse
        }
    };
    writeln!(w, "{MM_HEADER}")?;
    writeln!(w, "{} {} {}", csr.rows(), csr.cols(), csr.nnz())?;
    for i in 0..csr.rows() {
        for (j, v) in csr.row(i) {
            writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}

pub fn read_csv_matrix(reader: impl Read) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|_| parse_err(lineno, format!("bad value `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Shape(format!(
                    "line {lineno} has {} columns, expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

pub fn write_csv_matrix(m: &DenseMatrix, w: &mut impl Write) -> std::io::Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a single-column CSV. A non-numeric first line is treated as a header.
pub fn load_distribution(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut values = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if idx == 0 => continue,
            Err(_) => return Err(parse_err(idx + 1, format!("bad value `{field}`"))),
        }
    }
    Ok(values)
}

pub fn save_distribution(values: &[f64], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    values
        .iter()
        .try_for_each(|v| writeln!(w, "{v:.16e}"))
        .and_then(|_| w.flush())
        .map_err(io_err(path))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| parse_err(line, format!("bad integer `{s}`")))
}
