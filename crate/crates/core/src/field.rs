//! Stored field amplitudes on the spacetime lattice and their binary dump.
//!
//! Binary layout (little endian):
//! - magic `b"WGFH"`, `u32` format version (1);
//! - lattice: `f64` dt, t_max, x_min, x_max;
//! - `u32` component count; per component: `u32` name length, UTF-8 name,
//!   `f64` x_origin, `f64` x_step, `u64` frame count, `u64` sites per frame;
//! - then, per component, frames in time order, each a row of
//!   `(f64 re, f64 im)` pairs in site order.

use std::io::{self, Read, Write};

use num_complex::Complex64;

use crate::config::LatticeSpec;

const MAGIC: &[u8; 4] = b"WGFH";
const VERSION: u32 = 1;

/// One field component; site j of every frame sits at x_origin + j·x_step.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldComponent {
    pub name: String,
    pub x_origin: f64,
    pub x_step: f64,
    /// frames[n][j] is the amplitude at time n·dt and site j.
    pub frames: Vec<Vec<Complex64>>,
}

impl FieldComponent {
    /// Amplitude at frame `n`, site `j`, zero past the stored row.
    pub fn get(&self, n: usize, j: usize) -> Complex64 {
        self.frames[n].get(j).copied().unwrap_or_default()
    }
}

/// Field amplitudes per (site, time) for each component.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldHistory {
    pub lattice: LatticeSpec,
    pub components: Vec<FieldComponent>,
}

impl FieldHistory {
    /// Component by name.
    pub fn component(&self, name: &str) -> Option<&FieldComponent> {
        self.components.iter().find(|c| c.name == name)
    }

    /// Writes the documented binary layout.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for v in [
            self.lattice.dt,
            self.lattice.t_max,
            self.lattice.x_min,
            self.lattice.x_max,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(self.components.len() as u32).to_le_bytes())?;
        for c in &self.components {
            let width = c.frames.iter().map(Vec::len).max().unwrap_or(0);
            w.write_all(&(c.name.len() as u32).to_le_bytes())?;
            w.write_all(c.name.as_bytes())?;
            w.write_all(&c.x_origin.to_le_bytes())?;
            w.write_all(&c.x_step.to_le_bytes())?;
            w.write_all(&(c.frames.len() as u64).to_le_bytes())?;
            w.write_all(&(width as u64).to_le_bytes())?;
        }
        for c in &self.components {
            let width = c.frames.iter().map(Vec::len).max().unwrap_or(0);
            for frame in &c.frames {
                for j in 0..width {
                    let v = frame.get(j).copied().unwrap_or_default();
                    w.write_all(&v.re.to_le_bytes())?;
                    w.write_all(&v.im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// Reads a history written by [`FieldHistory::write_binary`].
    pub fn read_binary<R: Read>(mut r: R) -> io::Result<Self> {
        fn bad(msg: &str) -> io::Error {
            io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
        }
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not a field history file"));
        }
        if read_u32(&mut r)? != VERSION {
            return Err(bad("unsupported version"));
        }
        let lattice = LatticeSpec {
            dt: read_f64(&mut r)?,
            t_max: read_f64(&mut r)?,
            x_min: read_f64(&mut r)?,
            x_max: read_f64(&mut r)?,
        };
        let count = read_u32(&mut r)? as usize;
        let mut headers = Vec::with_capacity(count);
        for _ in 0..count {
            let len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| bad("component name is not UTF-8"))?;
            let x_origin = read_f64(&mut r)?;
            let x_step = read_f64(&mut r)?;
            let n_frames = read_u64(&mut r)? as usize;
            let width = read_u64(&mut r)? as usize;
            headers.push((name, x_origin, x_step, n_frames, width));
        }
        let mut components = Vec::with_capacity(count);
        for (name, x_origin, x_step, n_frames, width) in headers {
            let mut frames = Vec::with_capacity(n_frames);
            for _ in 0..n_frames {
                let mut row = Vec::with_capacity(width);
                for _ in 0..width {
                    let re = read_f64(&mut r)?;
                    let im = read_f64(&mut r)?;
                    row.push(Complex64::new(re, im));
                }
                frames.push(row);
            }
            components.push(FieldComponent {
                name,
                x_origin,
                x_step,
                frames,
            });
        }
        Ok(Self {
            lattice,
            components,
        })
    }
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
