//! JSON and CSV formats for tuples, polynomials, reports and variety samples.
//!
//! Complex numbers are written as `[re, im]` pairs; a matrix is an array of
//! rows. Floats round-trip exactly.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMat};
use crate::operator_core::OperatorTuple;
use crate::poly::Polynomial;
use crate::vn::{VarietyPart, VarietySample};

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// Square `dim × dim` matrix from rows; `what` names the matrix in errors.
pub fn matrix_from_json(rows: &JsonMatrix, dim: usize, what: &str) -> Result<CMat> {
    if rows.len() != dim {
        return Err(Error::Parse { location: what.into(), message: format!("expected {dim} rows, found {}", rows.len()) });
    }
    let mut m = CMat::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Parse {
                location: format!("{what}, row {i}"),
                message: format!("expected {dim} entries, found {}", row.len()),
            });
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::Parse { location: format!("{what}, entry ({i}, {j})"), message: "non-finite value".into() });
            }
            m[(i, j)] = c64(re, im);
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleFile {
    pub n: usize,
    pub dim: usize,
    pub operators: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl TupleFile {
    pub fn from_tuple(t: &OperatorTuple, metadata: Option<serde_json::Value>) -> Self {
        Self { n: t.len(), dim: t.dim(), operators: t.ops().iter().map(matrix_to_json).collect(), metadata }
    }

    pub fn to_tuple(&self) -> Result<OperatorTuple> {
        if self.n == 0 || self.dim == 0 {
            return Err(Error::Parse { location: "header".into(), message: "n and dim must be positive".into() });
        }
        if self.operators.len() != self.n {
            return Err(Error::Parse {
                location: "operators".into(),
                message: format!("header says n = {}, found {} operators", self.n, self.operators.len()),
            });
        }
        let ops = self
            .operators
            .iter()
            .enumerate()
            .map(|(i, m)| matrix_from_json(m, self.dim, &format!("operator {}", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        OperatorTuple::new(ops)
    }
}

fn json_error(source: &str, e: serde_json::Error) -> Error {
    Error::Parse { location: format!("{source}:{}:{}", e.line(), e.column()), message: e.to_string() }
}

pub fn parse_tuple(text: &str, source: &str) -> Result<OperatorTuple> {
    let file: TupleFile = serde_json::from_str(text).map_err(|e| json_error(source, e))?;
    file.to_tuple()
}

pub fn read_tuple(path: &Path) -> Result<OperatorTuple> {
    parse_tuple(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn tuple_to_json(t: &OperatorTuple, metadata: Option<serde_json::Value>) -> String {
    serde_json::to_string_pretty(&TupleFile::from_tuple(t, metadata)).expect("finite floats serialize")
}

pub fn write_tuple(path: &Path, t: &OperatorTuple, metadata: Option<serde_json::Value>) -> Result<()> {
    fs::write(path, tuple_to_json(t, metadata))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialEntry {
    pub k: Vec<usize>,
    pub c: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyEntry {
    pub n: usize,
    pub monomials: Vec<MonomialEntry>,
}

impl PolyEntry {
    pub fn from_polynomial(p: &Polynomial) -> Self {
        Self {
            n: p.vars(),
            monomials: p.terms().iter().map(|(k, c)| MonomialEntry { k: k.clone(), c: [c.re, c.im] }).collect(),
        }
    }

    pub fn to_polynomial(&self) -> Result<Polynomial> {
        Polynomial::new(self.n, self.monomials.iter().map(|m| (m.k.clone(), Complex64::new(m.c[0], m.c[1]))).collect())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PolyFile {
    Many(Vec<PolyEntry>),
    One(PolyEntry),
}

/// A single polynomial object or an array of them.
pub fn parse_polynomials(text: &str, source: &str) -> Result<Vec<Polynomial>> {
    let file: PolyFile = serde_json::from_str(text).map_err(|e| json_error(source, e))?;
    let entries = match file {
        PolyFile::Many(v) => v,
        PolyFile::One(p) => vec![p],
    };
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            e.to_polynomial().map_err(|err| Error::Parse { location: format!("{source}, polynomial {}", i + 1), message: err.to_string() })
        })
        .collect()
}

pub fn read_polynomials(path: &Path) -> Result<Vec<Polynomial>> {
    parse_polynomials(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn polynomials_to_json(polys: &[Polynomial]) -> String {
    let entries: Vec<PolyEntry> = polys.iter().map(PolyEntry::from_polynomial).collect();
    serde_json::to_string_pretty(&entries).expect("finite floats serialize")
}

pub fn save_report<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Input(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

/// Header `part,lambda_re,lambda_im,theta1,...,theta{n-1}`.
pub fn variety_csv_header(n: usize) -> Vec<String> {
    let mut h = vec!["part".to_string(), "lambda_re".into(), "lambda_im".into()];
    h.extend((1..n).map(|j| format!("theta{j}")));
    h
}

/// Writes fully expanded samples, one row per boundary point.
pub fn write_variety_csv<W: std::io::Write>(out: W, n: usize, samples: &[VarietySample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Input(format!("CSV write failed: {e}"));
    w.write_record(variety_csv_header(n)).map_err(csv_err)?;
    for s in samples {
        if s.thetas.len() + 1 != n {
            return Err(Error::Input(format!("sample has {} angles, expected {}", s.thetas.len(), n - 1)));
        }
        let mut rec = vec![s.part.label().to_string(), format!("{:?}", s.lambda.re), format!("{:?}", s.lambda.im)];
        rec.extend(s.thetas.iter().map(|t| format!("{t:?}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_variety_csv`]; returns `n` and the samples.
pub fn read_variety_csv<R: std::io::Read>(input: R) -> Result<(usize, Vec<VarietySample>)> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| Error::Parse { location: "header".into(), message: e.to_string() })?.clone();
    let n = header.len().saturating_sub(2);
    if n < 2 || header.iter().collect::<Vec<_>>() != variety_csv_header(n) {
        return Err(Error::Parse { location: "header".into(), message: "unexpected columns".into() });
    }
    let mut samples = vec![];
    for (i, rec) in r.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Parse { location: format!("line {row}"), message: e.to_string() })?;
        let num = |j: usize| -> Result<f64> {
            rec[j].parse::<f64>().map_err(|e| Error::Parse { location: format!("line {row}, column {}", j + 1), message: e.to_string() })
        };
        let part = match &rec[0] {
            "u" => VarietyPart::U,
            "c" => VarietyPart::C,
            other => return Err(Error::Parse { location: format!("line {row}"), message: format!("unknown part {other:?}") }),
        };
        let lambda = c64(num(1)?, num(2)?);
        let thetas = (3..rec.len()).map(num).collect::<Result<Vec<_>>>()?;
        samples.push(VarietySample { part, lambda, thetas });
    }
    Ok((n, samples))
}
