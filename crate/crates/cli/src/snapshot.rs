//! Binary checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! b"AGGF" | version u32 | dim u32 | n u32 | length f64 | time f64 | count u32
//! count × (name_len u32 | name utf-8)
//! count × n^dim × f64
//! ```
//!
//! Fields are stored in the order `phi, u_x, u_y[, u_z]`.

use std::fs;
use std::path::Path;

use aggf_core::coupled::State;
use aggf_core::{GridSpec, ScalarField, VectorField};

pub const MAGIC: &[u8; 4] = b"AGGF";
pub const VERSION: u32 = 1;
const VELOCITY_NAMES: [&str; 3] = ["u_x", "u_y", "u_z"];

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("snapshot io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt snapshot: {0}")]
    CorruptHeader(String),
    #[error("snapshot does not match the configured grid: {0}")]
    DimensionMismatch(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub dim: u32,
    pub n_per_axis: u32,
    pub length_per_axis: f64,
    pub time: f64,
    pub names: Vec<String>,
}

impl SnapshotHeader {
    fn for_grid(grid: &GridSpec, time: f64) -> Self {
        let mut names = vec!["phi".to_string()];
        names.extend(VELOCITY_NAMES[..grid.dim()].iter().map(|s| s.to_string()));
        Self {
            version: VERSION,
            dim: grid.dim() as u32,
            n_per_axis: grid.n_per_axis() as u32,
            length_per_axis: grid.length_per_axis(),
            time,
            names,
        }
    }
}

pub fn encode(state: &State) -> Vec<u8> {
    let grid = *state.phi.grid();
    let h = SnapshotHeader::for_grid(&grid, state.t);
    let mut out = Vec::with_capacity(64 + h.names.len() * grid.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&h.version.to_le_bytes());
    out.extend_from_slice(&h.dim.to_le_bytes());
    out.extend_from_slice(&h.n_per_axis.to_le_bytes());
    out.extend_from_slice(&h.length_per_axis.to_le_bytes());
    out.extend_from_slice(&h.time.to_le_bytes());
    out.extend_from_slice(&(h.names.len() as u32).to_le_bytes());
    for name in &h.names {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    let fields = std::iter::once(&state.phi).chain(state.u.components());
    for f in fields {
        for v in f.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], SnapshotError> {
        if self.bytes.len() - self.pos < n {
            return Err(SnapshotError::CorruptHeader(format!("truncated while reading {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn decode_header(r: &mut Reader<'_>) -> Result<SnapshotHeader, SnapshotError> {
    if r.take(4, "magic")? != MAGIC {
        return Err(SnapshotError::CorruptHeader("bad magic tag".into()));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(SnapshotError::CorruptHeader(format!("unsupported version {version}")));
    }
    let dim = r.u32("dim")?;
    let n_per_axis = r.u32("n")?;
    let length_per_axis = r.f64("length")?;
    let time = r.f64("time")?;
    let count = r.u32("field count")?;
    if count > 16 {
        return Err(SnapshotError::CorruptHeader(format!("implausible field count {count}")));
    }
    let mut names = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = r.u32("name length")? as usize;
        let raw = r.take(len, "field name")?;
        let name = std::str::from_utf8(raw)
            .map_err(|_| SnapshotError::CorruptHeader("field name is not utf-8".into()))?;
        names.push(name.to_string());
    }
    Ok(SnapshotHeader {
        version,
        dim,
        n_per_axis,
        length_per_axis,
        time,
        names,
    })
}

pub fn decode(bytes: &[u8]) -> Result<State, SnapshotError> {
    let mut r = Reader { bytes, pos: 0 };
    let h = decode_header(&mut r)?;
    let grid = GridSpec::new(h.dim as usize, h.n_per_axis as usize, h.length_per_axis)
        .map_err(|e| SnapshotError::CorruptHeader(e.to_string()))?;
    let expected = SnapshotHeader::for_grid(&grid, h.time);
    if h.names != expected.names {
        return Err(SnapshotError::DimensionMismatch(format!(
            "fields {:?}, expected {:?}",
            h.names, expected.names
        )));
    }
    let len = grid.len();
    let payload = bytes.len() - r.pos;
    if payload != h.names.len() * len * 8 {
        return Err(SnapshotError::CorruptHeader(format!(
            "payload has {payload} bytes, expected {}",
            h.names.len() * len * 8
        )));
    }
    let mut fields = Vec::with_capacity(h.names.len());
    for name in &h.names {
        let raw = r.take(len * 8, name)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let f = ScalarField::new(grid, values)
            .map_err(|e| SnapshotError::CorruptHeader(format!("field {name}: {e}")))?;
        fields.push(f);
    }
    let phi = fields.remove(0);
    let u = VectorField::new(fields).map_err(|e| SnapshotError::CorruptHeader(e.to_string()))?;
    Ok(State { t: h.time, u, phi })
}

pub fn write_snapshot(state: &State, path: &Path) -> Result<(), SnapshotError> {
    fs::write(path, encode(state))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<State, SnapshotError> {
    decode(&fs::read(path)?)
}

/// Reads a snapshot and checks it lives on `grid`.
pub fn read_snapshot_on(path: &Path, grid: &GridSpec) -> Result<State, SnapshotError> {
    let s = read_snapshot(path)?;
    if s.phi.grid() != grid {
        return Err(SnapshotError::DimensionMismatch(format!(
            "snapshot grid {:?}, configured {:?}",
            s.phi.grid(),
            grid
        )));
    }
    Ok(s)
}
