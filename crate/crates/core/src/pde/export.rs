//! Field export: `x,y,value` CSV and a compact binary dump.
//!
//! Binary layout, little endian: magic `BNDKFLD1`, `n: u64`, `L: f64`,
//! `dx: f64`, `t: f64`, then `n²` values as `f64`, row-major with rows at
//! increasing `x_2`.

use super::Field;
use crate::fmt_num;
use std::io::{self, Read, Write};

const MAGIC: &[u8; 8] = b"BNDKFLD1";

pub fn write_csv<W: Write>(field: &Field, mut out: W) -> io::Result<()> {
    let g = field.grid();
    writeln!(out, "x,y,value")?;
    for j in 0..g.n() {
        for i in 0..g.n() {
            writeln!(
                out,
                "{},{},{}",
                fmt_num(g.coord(i)),
                fmt_num(g.coord(j)),
                fmt_num(field.node(i, j))
            )?;
        }
    }
    Ok(())
}

pub fn write_binary<W: Write>(field: &Field, mut out: W) -> io::Result<()> {
    let g = field.grid();
    out.write_all(MAGIC)?;
    out.write_all(&(g.n() as u64).to_le_bytes())?;
    out.write_all(&g.l().to_le_bytes())?;
    out.write_all(&g.dx().to_le_bytes())?;
    out.write_all(&field.t.to_le_bytes())?;
    for v in &field.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Header fields and values of a binary dump: `(n, L, dx, t, values)`.
pub fn read_binary<R: Read>(mut input: R) -> io::Result<(usize, f64, f64, f64, Vec<f64>)> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "not a field dump"));
    }
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> io::Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let n = u64::from_le_bytes(next(&mut input)?) as usize;
    let l = f64::from_le_bytes(next(&mut input)?);
    let dx = f64::from_le_bytes(next(&mut input)?);
    let t = f64::from_le_bytes(next(&mut input)?);
    let mut values = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        values.push(f64::from_le_bytes(next(&mut input)?));
    }
    Ok((n, l, dx, t, values))
}
