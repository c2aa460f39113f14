//! Field file format: one UTF-8 JSON header line
//! `{dim, counts, lo, hi, kind, [provenance]}` terminated by `\n`, followed by
//! a little-endian f64 payload in row-major node order (1 value per node for
//! scalars, `n` for vectors, `n(n+1)/2` for symmetric matrices).

use super::data::{ScalarField, SymMat, SymMatrixField, VectorField};
use super::grid::GridSpec;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    dim: usize,
    counts: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}

#[derive(Debug, Clone)]
pub enum FieldData {
    Scalar(ScalarField),
    Vector(VectorField),
    SymMatrix(SymMatrixField),
}

impl FieldData {
    fn kind(&self) -> &'static str {
        match self {
            FieldData::Scalar(_) => "scalar",
            FieldData::Vector(_) => "vector",
            FieldData::SymMatrix(_) => "symmetric",
        }
    }

    fn grid(&self) -> &GridSpec {
        match self {
            FieldData::Scalar(f) => f.grid(),
            FieldData::Vector(f) => f.grid(),
            FieldData::SymMatrix(f) => f.grid(),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            FieldData::Scalar(f) => f.values(),
            FieldData::Vector(f) => f.values(),
            FieldData::SymMatrix(f) => f.values(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FieldFile {
    pub data: FieldData,
    pub provenance: Option<serde_json::Value>,
}

pub fn write_field(
    path: &Path,
    data: &FieldData,
    provenance: Option<serde_json::Value>,
) -> Result<()> {
    let grid = data.grid();
    let d = grid.dim();
    let header = Header {
        dim: d,
        counts: grid.counts()[..d].to_vec(),
        lo: grid.lo()[..d].to_vec(),
        hi: grid.hi()[..d].to_vec(),
        kind: data.kind().to_string(),
        provenance,
    };
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut w, &header).map_err(|e| Error::FieldIo(e.to_string()))?;
    w.write_all(b"\n")?;
    for v in data.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: Header =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::FieldIo(format!("header: {e}")))?;
    let grid = GridSpec::new(header.dim, &header.lo, &header.hi, &header.counts)?;
    let per_node = match header.kind.as_str() {
        "scalar" => 1,
        "vector" => header.dim,
        "symmetric" => SymMat::len(header.dim),
        other => return Err(Error::FieldIo(format!("unknown kind {other:?}"))),
    };
    let expect = grid.num_nodes() * per_node;
    let mut bytes = Vec::with_capacity(expect * 8);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != expect * 8 {
        return Err(Error::FieldIo(format!(
            "payload {} bytes, expected {}",
            bytes.len(),
            expect * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let data = match header.kind.as_str() {
        "scalar" => FieldData::Scalar(ScalarField::from_values(grid, values)?),
        "vector" => {
            let mut f = VectorField::zeros(grid);
            f.values_mut().copy_from_slice(&values);
            FieldData::Vector(f)
        }
        _ => {
            let mut f = SymMatrixField::zeros(grid);
            f.values_mut().copy_from_slice(&values);
            FieldData::SymMatrix(f)
        }
    };
    Ok(FieldFile { data, provenance: header.provenance })
}
