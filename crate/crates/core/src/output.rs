//! CSV tables, atom lists and 16-bit PGM rasters.
//!
//! CSV: ',' separator, '.' decimal, LF line endings, `# key=value` comment
//! lines recording parameters, then a header row.

use crate::error::{Error, Result};
use crate::fourier::Raster;
use crate::linalg::{fmt_q, parse_q};
use crate::measure::DiscreteMeasure;

/// Deterministic float formatting: shortest round-trip representation,
/// switching to exponent form for very small or large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn fmt_ivec(v: &[i64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            meta: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Atom list with exact rational coordinates and weights.
pub fn atoms_csv(mu: &DiscreteMeasure) -> String {
    let d = mu.dim();
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.push("weight".into());
    let mut t = CsvTable {
        header,
        ..Default::default()
    };
    t.meta("dimension", d).meta("atoms", mu.len());
    for (x, w) in mu.atoms() {
        let mut row: Vec<String> = x.iter().map(fmt_q).collect();
        row.push(fmt_q(w));
        t.push(row);
    }
    t.render()
}

/// Inverse of [`atoms_csv`].
pub fn parse_atoms_csv(text: &str) -> Result<DiscreteMeasure> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::InvalidMeasure("missing header".into()))?;
    let cols = header.split(',').count();
    if cols < 2 {
        return Err(Error::InvalidMeasure("need at least one coordinate and a weight".into()));
    }
    let dim = cols - 1;
    let mut atoms = Vec::new();
    for (i, line) in lines.enumerate() {
        let vals = line
            .split(',')
            .map(|s| parse_q(s).ok_or_else(|| Error::InvalidMeasure(format!("row {}: `{s}` is not a rational", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != cols {
            return Err(Error::InvalidMeasure(format!("row {} has {} columns, expected {cols}", i + 1, vals.len())));
        }
        let w = vals[dim].clone();
        atoms.push((vals[..dim].to_vec(), w));
    }
    DiscreteMeasure::from_atoms(dim, atoms)
}

pub const PGM_MAXVAL: u32 = 65535;

fn pixel(v: f64) -> u16 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * PGM_MAXVAL as f64).round() as u16
}

/// 16-bit PGM, values scaled so that 1.0 maps to 65535; the top row is the
/// largest second coordinate. `binary` selects P5 (big-endian samples),
/// otherwise P2.
pub fn pgm(raster: &Raster, binary: bool) -> Vec<u8> {
    let (w, h) = (raster.nx, raster.ny);
    let mut out = format!("{}\n{w} {h}\n{PGM_MAXVAL}\n", if binary { "P5" } else { "P2" }).into_bytes();
    for row in (0..h).rev() {
        if binary {
            for ix in 0..w {
                out.extend_from_slice(&pixel(raster.get(ix, row)).to_be_bytes());
            }
        } else {
            let line: Vec<String> = (0..w).map(|ix| pixel(raster.get(ix, row)).to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgmImage {
    pub binary: bool,
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    /// Row-major, top row first.
    pub pixels: Vec<u16>,
}

/// Minimal reader for the files written by [`pgm`]; used to validate them.
pub fn parse_pgm(bytes: &[u8]) -> Result<PgmImage> {
    let bad = |m: &str| Error::InvalidParameter(format!("pgm: {m}"));
    let mut pos = 0;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        _ => return Err(bad("bad magic")),
    };
    let width: usize = token()?.parse().map_err(|_| bad("bad width"))?;
    let height: usize = token()?.parse().map_err(|_| bad("bad height"))?;
    let maxval: u32 = token()?.parse().map_err(|_| bad("bad maxval"))?;
    let n = width * height;
    let mut pixels = Vec::with_capacity(n);
    if binary {
        let data = &bytes[pos + 1..];
        if data.len() != 2 * n {
            return Err(bad("pixel count mismatch"));
        }
        for c in data.chunks(2) {
            pixels.push(u16::from_be_bytes([c[0], c[1]]));
        }
    } else {
        let rest = String::from_utf8_lossy(&bytes[pos..]);
        for t in rest.split_ascii_whitespace() {
            pixels.push(t.parse().map_err(|_| bad("bad sample"))?);
        }
        if pixels.len() != n {
            return Err(bad("pixel count mismatch"));
        }
    }
    Ok(PgmImage {
        binary,
        width,
        height,
        maxval,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::fourier::GridSpec;
    use crate::measure::{build_mu_n, DEFAULT_ATOM_CAP};

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(1e-20), "1e-20");
        assert_eq!(fmt_f64(-2.25), "-2.25");
    }

    #[test]
    fn atoms_round_trip() {
        let mu = build_mu_n(&fixtures::example1_alternating(), 3, DEFAULT_ATOM_CAP).unwrap();
        let text = atoms_csv(&mu);
        assert!(text.starts_with("# dimension=2\n# atoms=48\nx1,x2,weight\n"));
        assert_eq!(parse_atoms_csv(&text).unwrap(), mu);
    }

    #[test]
    fn pgm_formats() {
        let grid = GridSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![3, 2]).unwrap();
        // value = y-index, so rows differ
        let values = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let raster = Raster::from_grid(&grid, values).unwrap();
        for binary in [false, true] {
            let img = parse_pgm(&pgm(&raster, binary)).unwrap();
            assert_eq!((img.width, img.height, img.maxval, img.binary), (3, 2, 65535, binary));
            assert_eq!(img.pixels, vec![65535, 65535, 65535, 0, 0, 0]);
        }
        assert!(parse_pgm(b"P2\n2 2\n65535\n1 2 3\n").is_err());
    }
}
