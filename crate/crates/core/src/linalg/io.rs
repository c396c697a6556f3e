//! Matrix file formats.
//!
//! Text form: a header line `rows cols kind` with `kind` either `dense` or
//! `sparse`, then
//!
//! * `dense`: `rows * cols` values, one per line, in column-major order;
//! * `sparse`: one `i j v` triplet per line, 0-indexed.
//!
//! Values are written in Rust's shortest round-trip notation, so reading a
//! written file reproduces every entry bit-for-bit. Blank lines and lines
//! starting with `#` are ignored on read.
//!
//! Binary form (little-endian): the magic bytes `SRTOMAT1`, `u64 rows`,
//! `u64 cols`, `u8 kind` (0 dense, 1 sparse), then for dense `rows * cols`
//! `f64` values column-major; for sparse a `u64 nnz` followed by `nnz` records
//! of `u64 i, u64 j, f64 v`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;
use crate::linalg::sparse::CscMatrix;

const MAGIC: &[u8; 8] = b"SRTOMAT1";

/// A matrix loaded from disk.
#[derive(Clone, Debug, PartialEq)]
pub enum StoredMatrix {
    Dense(DenseMatrix),
    Sparse(CscMatrix),
}

impl StoredMatrix {
    pub fn rows(&self) -> usize {
        match self {
            StoredMatrix::Dense(d) => d.rows(),
            StoredMatrix::Sparse(s) => s.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            StoredMatrix::Dense(d) => d.cols(),
            StoredMatrix::Sparse(s) => s.cols(),
        }
    }

    pub fn into_operator(self) -> crate::linalg::OpRef {
        match self {
            StoredMatrix::Dense(d) => std::sync::Arc::new(d),
            StoredMatrix::Sparse(s) => std::sync::Arc::new(s),
        }
    }
}

pub fn format_text(m: &StoredMatrix) -> String {
    let mut s = String::new();
    match m {
        StoredMatrix::Dense(d) => {
            s.push_str(&format!("{} {} dense\n", d.rows(), d.cols()));
            for v in d.as_slice() {
                s.push_str(&format!("{v:e}\n"));
            }
        }
        StoredMatrix::Sparse(sp) => {
            s.push_str(&format!("{} {} sparse\n", sp.rows(), sp.cols()));
            for (i, j, v) in sp.triplets() {
                s.push_str(&format!("{i} {j} {v:e}\n"));
            }
        }
    }
    s
}

pub fn parse_text(text: &str) -> Result<StoredMatrix> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Parse(format!(
            "header must be `rows cols kind`, got `{header}`"
        )));
    }
    let rows = parse_usize(fields[0], 1)?;
    let cols = parse_usize(fields[1], 1)?;
    match fields[2] {
        "dense" => {
            let mut data = Vec::with_capacity(rows * cols);
            for (ln, l) in lines {
                for tok in l.split_whitespace() {
                    data.push(parse_f64(tok, ln + 1)?);
                }
            }
            DenseMatrix::new(rows, cols, data).map(StoredMatrix::Dense)
        }
        "sparse" => {
            let mut trip = Vec::new();
            for (ln, l) in lines {
                let t: Vec<&str> = l.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(Error::Parse(format!(
                        "line {}: expected `i j v`, got `{l}`",
                        ln + 1
                    )));
                }
                trip.push((
                    parse_usize(t[0], ln + 1)?,
                    parse_usize(t[1], ln + 1)?,
                    parse_f64(t[2], ln + 1)?,
                ));
            }
            CscMatrix::from_triplets(rows, cols, &trip).map(StoredMatrix::Sparse)
        }
        other => Err(Error::Parse(format!("unknown matrix kind `{other}`"))),
    }
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::Parse(format!("line {line}: `{tok}` is not an index")))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse()
        .map_err(|_| Error::Parse(format!("line {line}: `{tok}` is not a number")))
}

pub fn write_text(path: &Path, m: &StoredMatrix) -> Result<()> {
    fs::write(path, format_text(m)).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<StoredMatrix> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    for line in BufReader::new(f).lines() {
        text.push_str(&line.map_err(|e| Error::io(path, e))?);
        text.push('\n');
    }
    parse_text(&text)
}

pub fn encode_binary(m: &StoredMatrix) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    match m {
        StoredMatrix::Dense(d) => {
            out.push(0);
            for v in d.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        StoredMatrix::Sparse(s) => {
            out.push(1);
            out.extend_from_slice(&(s.nnz() as u64).to_le_bytes());
            for (i, j, v) in s.triplets() {
                out.extend_from_slice(&(i as u64).to_le_bytes());
                out.extend_from_slice(&(j as u64).to_le_bytes());
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<StoredMatrix> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(Error::Parse("bad magic in binary matrix".into()));
    }
    let rows = cur.u64()? as usize;
    let cols = cur.u64()? as usize;
    let kind = cur.take(1)?[0];
    let m = match kind {
        0 => {
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                data.push(cur.f64()?);
            }
            StoredMatrix::Dense(DenseMatrix::new(rows, cols, data)?)
        }
        1 => {
            let nnz = cur.u64()? as usize;
            let mut trip = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                trip.push((cur.u64()? as usize, cur.u64()? as usize, cur.f64()?));
            }
            StoredMatrix::Sparse(CscMatrix::from_triplets(rows, cols, &trip)?)
        }
        k => return Err(Error::Parse(format!("unknown binary matrix kind {k}"))),
    };
    if cur.pos != bytes.len() {
        return Err(Error::Parse("trailing bytes in binary matrix".into()));
    }
    Ok(m)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Parse("truncated binary matrix".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn write_binary(path: &Path, m: &StoredMatrix) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_binary(m)).map_err(|e| Error::io(path, e))
}

pub fn read_binary(path: &Path) -> Result<StoredMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_binary(&bytes)
}

/// Reads a text vector file: one value per line (`#` comments allowed).
/// Reads either format, detected by the magic bytes.
pub fn read_matrix(path: &Path) -> Result<StoredMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        decode_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::Parse(format!("{} is neither UTF-8 text nor a binary matrix", path.display())))?;
        parse_text(&text)
    }
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_vector(&text)
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    for (ln, l) in text.lines().enumerate() {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        for tok in l.split(|c: char| c == ',' || c.is_whitespace()) {
            if !tok.is_empty() {
                v.push(parse_f64(tok, ln + 1)?);
            }
        }
    }
    Ok(v)
}
