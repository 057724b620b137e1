//! Flat binary and CSV export of gridded fields.
//!
//! Binary layout, all little-endian: h, t_max, x_half_width (f64), nt, nx
//! (u64), seed (u64), eps (f64), rows (u64), then rows × nx f64 values in
//! row-major order. Noise realizations have nt rows, solutions nt + 1.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::noise::{HurstParameter, NoiseRealization, SpaceTimeGrid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldHeader {
    pub h: f64,
    pub grid: SpaceTimeGrid,
    pub seed: u64,
    pub eps: f64,
    pub rows: usize,
}

const HEADER_BYTES: usize = 8 * 8;

pub fn write_field<W: Write>(mut w: W, header: &FieldHeader, data: &[f64]) -> std::io::Result<()> {
    let g = &header.grid;
    assert_eq!(data.len(), header.rows * g.nx, "data does not match the header shape");
    let mut buf = Vec::with_capacity(HEADER_BYTES + 8 * data.len());
    buf.extend_from_slice(&header.h.to_le_bytes());
    buf.extend_from_slice(&g.t_max.to_le_bytes());
    buf.extend_from_slice(&g.x_half_width.to_le_bytes());
    buf.extend_from_slice(&(g.nt as u64).to_le_bytes());
    buf.extend_from_slice(&(g.nx as u64).to_le_bytes());
    buf.extend_from_slice(&header.seed.to_le_bytes());
    buf.extend_from_slice(&header.eps.to_le_bytes());
    buf.extend_from_slice(&(header.rows as u64).to_le_bytes());
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read_field<R: Read>(mut r: R) -> Result<(FieldHeader, Vec<f64>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::Config(format!("reading field dump: {e}")))?;
    if bytes.len() < HEADER_BYTES {
        return Err(Error::Config(format!("field dump of {} bytes is shorter than its header", bytes.len())));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8-byte word") };
    let f = |i: usize| f64::from_le_bytes(word(i));
    let u = |i: usize| u64::from_le_bytes(word(i)) as usize;
    let grid = SpaceTimeGrid::new(f(1), f(2), u(3), u(4))?;
    let header = FieldHeader { h: f(0), grid, seed: u64::from_le_bytes(word(5)), eps: f(6), rows: u(7) };
    let n = header.rows * grid.nx;
    if bytes.len() != HEADER_BYTES + 8 * n {
        return Err(Error::Config(format!("field dump holds {} bytes, header implies {}", bytes.len(), HEADER_BYTES + 8 * n)));
    }
    let data = (0..n).map(|k| f(8 + k)).collect();
    Ok((header, data))
}

pub fn write_noise<W: Write>(w: W, noise: &NoiseRealization) -> std::io::Result<()> {
    let header = FieldHeader { h: noise.h.h(), grid: noise.grid, seed: noise.seed, eps: noise.mollification_eps, rows: noise.grid.nt };
    write_field(w, &header, &noise.increments)
}

pub fn read_noise<R: Read>(r: R) -> Result<NoiseRealization> {
    let (header, increments) = read_field(r)?;
    if header.rows != header.grid.nt {
        return Err(Error::Config(format!("noise dump has {} rows for nt = {}", header.rows, header.grid.nt)));
    }
    Ok(NoiseRealization {
        grid: header.grid,
        h: HurstParameter::new(header.h)?,
        seed: header.seed,
        mollification_eps: header.eps,
        increments,
        warnings: Vec::new(),
    })
}

/// Rows of a gridded field as `row,t,x,value` lines; row r sits at time
/// t_offset + r dt.
pub fn write_grid_csv<W: Write>(mut w: W, grid: &SpaceTimeGrid, data: &[f64], t_offset: f64) -> std::io::Result<()> {
    writeln!(w, "row,t,x,value")?;
    for (r, row) in data.chunks(grid.nx).enumerate() {
        let t = t_offset + r as f64 * grid.dt();
        for (j, v) in row.iter().enumerate() {
            writeln!(w, "{r},{t},{},{v}", grid.x(j))?;
        }
    }
    Ok(())
}

/// A dense n × n matrix as `i,j,value` lines.
pub fn write_matrix_csv<W: Write>(mut w: W, values: &[f64], n: usize) -> std::io::Result<()> {
    writeln!(w, "i,j,value")?;
    for (k, v) in values.iter().enumerate() {
        writeln!(w, "{},{},{v}", k / n, k % n)?;
    }
    Ok(())
}
