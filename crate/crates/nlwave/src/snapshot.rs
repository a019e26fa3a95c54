//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | offset | size | content                         |
//! |--------|------|---------------------------------|
//! | 0      | 4    | magic `NLWV`                    |
//! | 4      | 4    | format version (`u32`, = 1)     |
//! | 8      | 4    | dimension `n` (`u32`)           |
//! | 12     | 4    | points per axis `M` (`u32`)     |
//! | 16     | 4    | components `N` (`u32`)          |
//! | 20     | 4    | flags (`u32`)                   |
//! | 24     | 8    | half-period `L` (`f64`)         |
//! | 32     | 8    | time `t` (`f64`), if flag bit 0 |
//! | 32/40  | 8·N·Mⁿ | values, component-major       |
//!
//! Values within a component follow the grid point order (last axis fastest).
//! Plain fields have flags 0. Run checkpoints set bit 0, carry the time and
//! store `2N` components: `u_1..u_N` followed by `u_t,1..u_t,N`.

use std::io::{self, Read, Write};
use std::path::Path;

use nlwave_core::spectral::{Grid, RealField};

pub const MAGIC: [u8; 4] = *b"NLWV";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;
pub const FLAG_TIME: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a snapshot file (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("malformed snapshot: {0}")]
    Malformed(String),
}

/// A decoded snapshot: the grid it lives on, its values and, for
/// checkpoints, the time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub field: RealField,
    pub time: Option<f64>,
}

pub fn encode(field: &RealField, grid: &Grid) -> Vec<u8> {
    encode_with(field, grid, None)
}

/// Checkpoint of `(u, u_t)` at time `t`.
pub fn encode_checkpoint(u: &RealField, ut: &RealField, grid: &Grid, t: f64) -> Vec<u8> {
    let n = u.components();
    assert_eq!(n, ut.components(), "u and u_t component counts differ");
    let mut values = Vec::with_capacity(2 * u.values().len());
    values.extend_from_slice(u.values());
    values.extend_from_slice(ut.values());
    let stacked = RealField::new(2 * n, grid.modes(), values).expect("shapes agree");
    encode_with(&stacked, grid, Some(t))
}

fn encode_with(field: &RealField, grid: &Grid, time: Option<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 + 8 * field.values().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.points() as u32).to_le_bytes());
    out.extend_from_slice(&(field.components() as u32).to_le_bytes());
    let flags = if time.is_some() { FLAG_TIME } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(&grid.half_period().to_le_bytes());
    if let Some(t) = time {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
    if bytes.len() < HEADER_LEN {
        return Err(SnapshotError::Malformed(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if bytes[..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(SnapshotError::Version(version));
    }
    let (dim, points, components) = (word(8) as usize, word(12) as usize, word(16) as usize);
    let flags = word(20);
    if flags & !FLAG_TIME != 0 {
        return Err(SnapshotError::Malformed(format!(
            "unknown header flags {flags:#x}"
        )));
    }
    let half_period = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let (time, start) = if flags & FLAG_TIME != 0 {
        let end = HEADER_LEN + 8;
        let t = bytes
            .get(HEADER_LEN..end)
            .ok_or_else(|| SnapshotError::Malformed("missing time field".into()))?;
        (Some(f64::from_le_bytes(t.try_into().unwrap())), end)
    } else {
        (None, HEADER_LEN)
    };
    let grid =
        Grid::new(dim, half_period, points).map_err(|e| SnapshotError::Malformed(e.to_string()))?;
    let count = components
        .checked_mul(grid.modes())
        .ok_or_else(|| SnapshotError::Malformed("size overflow".into()))?;
    let body = &bytes[start..];
    if body.len() != 8 * count {
        return Err(SnapshotError::Malformed(format!(
            "expected {} value bytes, found {}",
            8 * count,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = RealField::new(components, grid.modes(), values)
        .map_err(|e| SnapshotError::Malformed(e.to_string()))?;
    Ok(Snapshot { grid, field, time })
}

pub fn write_to<W: Write>(mut w: W, field: &RealField, grid: &Grid) -> io::Result<()> {
    w.write_all(&encode(field, grid))
}

pub fn read_from<R: Read>(mut r: R) -> Result<Snapshot, SnapshotError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn save(path: &Path, field: &RealField, grid: &Grid) -> io::Result<()> {
    std::fs::write(path, encode(field, grid))
}

pub fn save_checkpoint(
    path: &Path,
    u: &RealField,
    ut: &RealField,
    grid: &Grid,
    t: f64,
) -> io::Result<()> {
    std::fs::write(path, encode_checkpoint(u, ut, grid, t))
}

pub fn load(path: &Path) -> Result<Snapshot, SnapshotError> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Grid, RealField) {
        let grid = Grid::new(2, 1.5, 4).unwrap();
        let field =
            RealField::from_fn(&grid, 2, |x, j| x[0] - 2.0 * x[1] + j as f64 * 0.1).unwrap();
        (grid, field)
    }

    #[test]
    fn header_layout_is_fixed() {
        let (grid, field) = sample();
        let bytes = encode(&field, &grid);
        assert_eq!(bytes.len(), 32 + 8 * 2 * 16);
        assert_eq!(&bytes[..4], b"NLWV");
        assert_eq!(bytes[4..8], [1, 0, 0, 0]);
        assert_eq!(bytes[8..12], [2, 0, 0, 0]);
        assert_eq!(bytes[12..16], [4, 0, 0, 0]);
        assert_eq!(bytes[16..20], [2, 0, 0, 0]);
        assert_eq!(bytes[20..24], [0; 4]);
        assert_eq!(bytes[24..32], 1.5f64.to_le_bytes());
        assert_eq!(bytes[32..40], field.values()[0].to_le_bytes());
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let (grid, field) = sample();
        let back = decode(&encode(&field, &grid)).unwrap();
        assert_eq!(back.grid, grid);
        let bits = |f: &RealField| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.field), bits(&field));
        assert_eq!(back.time, None);
    }

    #[test]
    fn checkpoints_carry_time_and_velocity() {
        let (grid, u) = sample();
        let ut = RealField::from_fn(&grid, 2, |x, j| x[1] * (j + 1) as f64).unwrap();
        let bytes = encode_checkpoint(&u, &ut, &grid, 0.75);
        assert_eq!(bytes.len(), 40 + 8 * 4 * 16);
        assert_eq!(bytes[16..20], [4, 0, 0, 0]);
        assert_eq!(bytes[20..24], [1, 0, 0, 0]);
        assert_eq!(bytes[32..40], 0.75f64.to_le_bytes());
        let back = decode(&bytes).unwrap();
        assert_eq!(back.time, Some(0.75));
        assert_eq!(back.field.components(), 4);
        assert_eq!(back.field.component(1), u.component(1));
        assert_eq!(back.field.component(3), ut.component(1));
        assert!(matches!(
            decode(&bytes[..36]),
            Err(SnapshotError::Malformed(_))
        ));
        let mut bad = bytes;
        bad[20] = 2;
        assert!(matches!(decode(&bad), Err(SnapshotError::Malformed(_))));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let (grid, field) = sample();
        let good = encode(&field, &grid);
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(SnapshotError::BadMagic)));
        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(decode(&bad), Err(SnapshotError::Version(9))));
        assert!(matches!(
            decode(&good[..good.len() - 1]),
            Err(SnapshotError::Malformed(_))
        ));
        assert!(matches!(
            decode(&good[..10]),
            Err(SnapshotError::Malformed(_))
        ));
        let mut bad = good;
        bad[12] = 5;
        assert!(matches!(decode(&bad), Err(SnapshotError::Malformed(_))));
    }
}
