//! Field snapshots as CSV (plus a JSON sidecar with the grid metadata) and
//! traces in a compact binary column format.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{Field, Frame, Grid};
use super::solver::{SolveTrace, StopReason};
use crate::csv::num;
use crate::error::{Error, Result};

pub const TRACE_MAGIC: &[u8; 8] = b"BLWTRACE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub frame: Frame,
    pub time: f64,
    pub n: usize,
    pub m: usize,
    pub dy: f64,
    pub half_width: f64,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes one row per node (coordinates, value) and `<path>.json`.
pub fn write_field_csv(field: &Field, path: &Path) -> Result<()> {
    let g = &field.grid;
    let mut out = String::from(if g.n == 1 { "y1,value\n" } else { "y1,y2,value\n" });
    for (k, v) in field.values.iter().enumerate() {
        let y = g.point(k);
        for c in &y[..g.n] {
            out.push_str(&num(*c));
            out.push(',');
        }
        out.push_str(&num(*v));
        out.push('\n');
    }
    fs::write(path, out)?;
    let header = FieldHeader {
        frame: field.frame,
        time: field.time,
        n: g.n,
        m: g.m,
        dy: g.dy,
        half_width: g.half_width(),
    };
    fs::write(sidecar(path), serde_json::to_string_pretty(&header).map_err(|e| Error::Io(e.to_string()))?)?;
    Ok(())
}

pub fn read_field_csv(path: &Path) -> Result<Field> {
    let header: FieldHeader =
        serde_json::from_str(&fs::read_to_string(sidecar(path))?).map_err(|e| Error::Io(e.to_string()))?;
    let grid = Grid {
        n: header.n,
        m: header.m,
        dy: header.dy,
    };
    let text = fs::read_to_string(path)?;
    let mut values = Vec::with_capacity(grid.len());
    for (i, line) in text.lines().enumerate().skip(1) {
        let last = line.rsplit(',').next().unwrap_or("");
        values.push(
            last.trim()
                .parse::<f64>()
                .map_err(|e| Error::Io(format!("line {}: {e}", i + 1)))?,
        );
    }
    Field::new(grid, values, header.time, header.frame)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TraceHeader {
    frame: Frame,
    grid: Option<Grid>,
    snapshot_times: Vec<f64>,
    sup_norm: Vec<(f64, f64)>,
    blowup_time: Option<f64>,
    stop: StopReason,
}

/// Layout: magic, u64 LE header length, JSON header, then the snapshot values
/// as little-endian f64, snapshot after snapshot.
pub fn write_trace_bin(trace: &SolveTrace, path: &Path) -> Result<()> {
    let grid = trace.snapshots.first().map(|f| f.grid.clone());
    if let Some(g) = &grid {
        if trace.snapshots.iter().any(|f| f.grid != *g) {
            return Err(Error::Io("snapshots on different grids".into()));
        }
    }
    let header = TraceHeader {
        frame: trace.frame,
        grid,
        snapshot_times: trace.snapshots.iter().map(|f| f.time).collect(),
        sup_norm: trace.sup_norm.clone(),
        blowup_time: trace.blowup_time,
        stop: trace.stop,
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Io(e.to_string()))?;
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    f.write_all(TRACE_MAGIC)?;
    f.write_all(&(json.len() as u64).to_le_bytes())?;
    f.write_all(&json)?;
    for snap in &trace.snapshots {
        for v in &snap.values {
            f.write_all(&v.to_le_bytes())?;
        }
    }
    f.flush()?;
    Ok(())
}

pub fn read_trace_bin(path: &Path) -> Result<SolveTrace> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 16 || &bytes[..8] != TRACE_MAGIC {
        return Err(Error::Io("not a trace file".into()));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = bytes.get(16..16 + len).ok_or_else(|| Error::Io("truncated header".into()))?;
    let header: TraceHeader = serde_json::from_slice(body).map_err(|e| Error::Io(e.to_string()))?;
    let mut snapshots = Vec::new();
    let mut off = 16 + len;
    if let Some(g) = &header.grid {
        for &t in &header.snapshot_times {
            let mut values = Vec::with_capacity(g.len());
            for _ in 0..g.len() {
                let chunk = bytes.get(off..off + 8).ok_or_else(|| Error::Io("truncated data".into()))?;
                values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
                off += 8;
            }
            snapshots.push(Field::new(g.clone(), values, t, header.frame)?);
        }
    }
    Ok(SolveTrace {
        frame: header.frame,
        snapshots,
        sup_norm: header.sup_norm,
        blowup_time: header.blowup_time,
        stop: header.stop,
    })
}
