//! File formats: MatrixMarket coordinate matrices, JSON records and CSV
//! tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{DenseOperator, StateRegister};
use crate::qlsp::Form;
use crate::scalar::Cplx;

use super::instance::InstanceRecord;

pub const INSTANCE_FORMAT: &str = "eigenfilter-instance";

/// MatrixMarket coordinate text, `real` when every entry is real, nonzeros in
/// row-major order.
pub fn write_matrix_market(op: &DenseOperator<f64>) -> String {
    let m = op.matrix();
    let n = op.dim();
    let real = op.is_real();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            if z.re != 0.0 || z.im != 0.0 {
                entries.push((i, j, z));
            }
        }
    }
    let mut s = String::new();
    let field = if real { "real" } else { "complex" };
    let _ = writeln!(s, "%%MatrixMarket matrix coordinate {field} general");
    let _ = writeln!(s, "{n} {n} {}", entries.len());
    for (i, j, z) in entries {
        if real {
            let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, z.re);
        } else {
            let _ = writeln!(s, "{} {} {:e} {:e}", i + 1, j + 1, z.re, z.im);
        }
    }
    s
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Parses MatrixMarket coordinate text (`real`, `integer` or `complex`;
/// `general`, `symmetric` or `hermitian`).
pub fn read_matrix_market(text: &str) -> Result<DenseOperator<f64>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, 1, "empty file"))?;
    let words: Vec<String> = header.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" || words[2] != "coordinate" {
        return Err(parse_err(1, 1, "expected '%%MatrixMarket matrix coordinate <field> <symmetry>'"));
    }
    let complex = match words[3].as_str() {
        "real" | "integer" => false,
        "complex" => true,
        other => return Err(parse_err(1, 1, format!("unsupported field '{other}'"))),
    };
    let symmetry = words[4].clone();
    if !["general", "symmetric", "hermitian"].contains(&symmetry.as_str()) {
        return Err(parse_err(1, 1, format!("unsupported symmetry '{symmetry}'")));
    }
    let mut size: Option<(usize, usize, usize)> = None;
    let mut m: Option<DMatrix<Cplx<f64>>> = None;
    let mut seen = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields = tokens(line);
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, 1, "size line needs 'rows cols nnz'"));
                }
                let r: usize = parse_field(&fields[0], lineno)?;
                let c: usize = parse_field(&fields[1], lineno)?;
                let nnz: usize = parse_field(&fields[2], lineno)?;
                if r == 0 || c == 0 {
                    return Err(parse_err(lineno, 1, "empty matrix"));
                }
                if r != c {
                    return Err(parse_err(lineno, 1, format!("matrix must be square, got {r}x{c}")));
                }
                size = Some((r, c, nnz));
                m = Some(DMatrix::zeros(r, c));
            }
            Some((r, _, nnz)) => {
                let want = if complex { 4 } else { 3 };
                if fields.len() != want {
                    return Err(parse_err(lineno, 1, format!("expected {want} fields, got {}", fields.len())));
                }
                if seen == nnz {
                    return Err(parse_err(lineno, 1, "more entries than declared"));
                }
                let i: usize = parse_field(&fields[0], lineno)?;
                let j: usize = parse_field(&fields[1], lineno)?;
                if i == 0 || j == 0 || i > r || j > r {
                    return Err(parse_err(lineno, fields[0].1, format!("index ({i}, {j}) out of range")));
                }
                let re: f64 = parse_field(&fields[2], lineno)?;
                let im: f64 = if complex { parse_field(&fields[3], lineno)? } else { 0.0 };
                let z = Cplx::new(re, im);
                let mat = m.as_mut().expect("allocated with size line");
                mat[(i - 1, j - 1)] = z;
                if i != j {
                    match symmetry.as_str() {
                        "symmetric" => mat[(j - 1, i - 1)] = z,
                        "hermitian" => mat[(j - 1, i - 1)] = z.conj(),
                        _ => {}
                    }
                }
                seen += 1;
            }
        }
    }
    let (_, _, nnz) = size.ok_or_else(|| parse_err(text.lines().count().max(1), 1, "missing size line"))?;
    if seen != nnz {
        return Err(parse_err(text.lines().count(), 1, format!("declared {nnz} entries, found {seen}")));
    }
    DenseOperator::general(m.expect("allocated"))
}

/// Whitespace-separated tokens with their 1-based column.
fn tokens(line: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((line[s..i].to_string(), s + 1));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((line[s..].to_string(), s + 1));
    }
    out
}

fn parse_field<T: std::str::FromStr>(field: &(String, usize), line: usize) -> Result<T> {
    field
        .0
        .parse()
        .map_err(|_| parse_err(line, field.1, format!("cannot parse '{}'", field.0)))
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    format: String,
    seed: u64,
    kappa: f64,
    sparsity: usize,
    form: Form,
    matrix: String,
    /// `[re, im]` pairs.
    b: Vec<[f64; 2]>,
}

pub fn instance_to_string(rec: &InstanceRecord) -> Result<String> {
    let file = InstanceFile {
        format: INSTANCE_FORMAT.into(),
        seed: rec.seed,
        kappa: rec.kappa,
        sparsity: rec.sparsity,
        form: rec.form,
        matrix: write_matrix_market(&rec.a),
        b: rec.b.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

pub fn instance_from_str(text: &str) -> Result<InstanceRecord> {
    let file: InstanceFile = from_json(text)?;
    if file.format != INSTANCE_FORMAT {
        return Err(parse_err(1, 1, format!("unknown format tag '{}'", file.format)));
    }
    let a = read_matrix_market(&file.matrix)?;
    let a = match file.form {
        Form::General => a,
        _ => a.into_hermitian()?,
    };
    let amps: Vec<Cplx<f64>> = file.b.iter().map(|p| Cplx::new(p[0], p[1])).collect();
    let b = StateRegister::from_complex(&amps)?;
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    Ok(InstanceRecord {
        seed: file.seed,
        kappa: file.kappa,
        sparsity: file.sparsity,
        form: file.form,
        a,
        b,
    })
}

pub fn write_instance(path: &Path, rec: &InstanceRecord) -> Result<()> {
    fs::write(path, instance_to_string(rec)?)?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<InstanceRecord> {
    instance_from_str(&fs::read_to_string(path)?)
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.column(), e.to_string()))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&fs::read_to_string(path)?)
}

/// Writes then reads back a JSON record.
pub fn io_roundtrip<T: Serialize + DeserializeOwned>(path: &Path, value: &T) -> Result<T> {
    write_json(path, value)?;
    read_json(path)
}

/// A CSV table with a declared header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::DimensionMismatch {
                expected: self.header.len(),
                found: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, expected_header: Option<&str>) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or_else(|| parse_err(1, 1, "empty table"))?;
        if let Some(h) = expected_header {
            if head.trim() != h {
                return Err(parse_err(1, 1, format!("expected header '{h}', found '{}'", head.trim())));
            }
        }
        let header: Vec<String> = head.trim().split(',').map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let row: Vec<String> = line.trim().split(',').map(|s| s.to_string()).collect();
            if row.len() != header.len() {
                return Err(parse_err(
                    idx + 1,
                    1,
                    format!("expected {} fields, got {}", header.len(), row.len()),
                ));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    /// Column `name` parsed as numbers.
    pub fn column<T: std::str::FromStr>(&self, name: &str) -> Result<Vec<T>> {
        let c = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::arg(format!("no column '{name}'")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row[c]
                    .parse()
                    .map_err(|_| parse_err(r + 2, c + 1, format!("cannot parse '{}'", row[c])))
            })
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Shortest representation that reads back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}
