//! Binary geometry file.
//!
//! Layout: magic `LBMGEO1\0`, then `nx, ny, nz` as little-endian `u32`, then
//! one policy byte per axis (0 = periodic, 1 = wall), then `nx * ny * nz`
//! mask bytes (0 = solid, 1 = fluid) in x-fastest order.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use super::{AxisPolicy, GeometryError, GridGeometry};

const MAGIC: &[u8; 8] = b"LBMGEO1\0";

/// Upper bound on the cell count accepted when loading.
const MAX_CELLS: u64 = 1 << 40;

pub fn save_geo<W: Write>(g: &GridGeometry, mut w: W) -> Result<(), GeometryError> {
    w.write_all(MAGIC)?;
    for n in g.dims() {
        let n = u32::try_from(n).map_err(|_| GeometryError::DimensionOverflow([u32::MAX; 3]))?;
        w.write_all(&n.to_le_bytes())?;
    }
    for p in g.policy() {
        w.write_all(&[match p {
            AxisPolicy::Periodic => 0u8,
            AxisPolicy::Wall => 1u8,
        }])?;
    }
    let bytes: Vec<u8> = g.mask().iter().map(|&m| m as u8).collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), GeometryError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => GeometryError::ShortRead,
        _ => GeometryError::Io(e),
    })
}

pub fn load_geo<R: Read>(mut r: R) -> Result<GridGeometry, GeometryError> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(GeometryError::BadMagic);
    }
    let mut dims = [0u32; 3];
    for d in dims.iter_mut() {
        let mut b = [0u8; 4];
        read_exact(&mut r, &mut b)?;
        *d = u32::from_le_bytes(b);
    }
    let cells = dims
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
        .filter(|&c| c > 0 && c <= MAX_CELLS && usize::try_from(c).is_ok())
        .ok_or(GeometryError::DimensionOverflow(dims))?;
    let mut policy_bytes = [0u8; 3];
    read_exact(&mut r, &mut policy_bytes)?;
    let mut policy = [AxisPolicy::Periodic; 3];
    for (p, &b) in policy.iter_mut().zip(&policy_bytes) {
        *p = match b {
            0 => AxisPolicy::Periodic,
            1 => AxisPolicy::Wall,
            value => {
                return Err(GeometryError::BadByte {
                    what: "axis policy",
                    value,
                })
            }
        };
    }
    let mut bytes = vec![0u8; cells as usize];
    read_exact(&mut r, &mut bytes)?;
    let mask = bytes
        .into_iter()
        .map(|b| match b {
            0 => Ok(false),
            1 => Ok(true),
            value => Err(GeometryError::BadByte {
                what: "mask",
                value,
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    GridGeometry::new(dims.map(|d| d as usize), mask, policy)
}

pub fn save_geo_file(g: &GridGeometry, path: impl AsRef<Path>) -> Result<(), GeometryError> {
    save_geo(g, BufWriter::new(File::create(path)?))
}

pub fn load_geo_file(path: impl AsRef<Path>) -> Result<GridGeometry, GeometryError> {
    load_geo(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gen_channel, gen_packed_bed, CHANNEL_POLICY};
    use proptest::prelude::*;

    fn encode(g: &GridGeometry) -> Vec<u8> {
        let mut buf = Vec::new();
        save_geo(g, &mut buf).unwrap();
        buf
    }

    #[test]
    fn header_layout() {
        let g = gen_channel([2, 3, 1]).unwrap();
        let buf = encode(&g);
        assert_eq!(&buf[..8], b"LBMGEO1\0");
        assert_eq!(&buf[8..20], &[2, 0, 0, 0, 3, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&buf[20..23], &[0, 1, 1]);
        assert_eq!(&buf[23..], &[1u8; 6]);
    }

    #[test]
    fn channel_round_trip() {
        let g = gen_channel([7, 5, 3]).unwrap();
        assert_eq!(load_geo(encode(&g).as_slice()).unwrap(), g);
        let bed = gen_packed_bed([20, 10, 10], 3.0, 6.0).unwrap();
        assert_eq!(load_geo(encode(&bed).as_slice()).unwrap(), bed);
    }

    #[test]
    fn wrong_magic() {
        let mut buf = encode(&gen_channel([2, 2, 2]).unwrap());
        buf[0] = b'X';
        let err = load_geo(buf.as_slice()).unwrap_err();
        assert_eq!(err.to_string(), "not a geometry file");
    }

    #[test]
    fn truncated_payload() {
        let buf = encode(&gen_channel([4, 4, 4]).unwrap());
        let err = load_geo(&buf[..buf.len() - 3]).unwrap_err();
        assert_eq!(err.to_string(), "short read");
        assert!(matches!(
            load_geo(&buf[..10]),
            Err(GeometryError::ShortRead)
        ));
    }

    #[test]
    fn dimension_overflow() {
        let mut buf = Vec::from(&MAGIC[..]);
        for _ in 0..3 {
            buf.extend_from_slice(&u32::MAX.to_le_bytes());
        }
        buf.extend_from_slice(&[0, 0, 0]);
        assert!(matches!(
            load_geo(buf.as_slice()),
            Err(GeometryError::DimensionOverflow(_))
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("box.geo");
        let g = GridGeometry::random([6, 4, 3], 0.3, 5, CHANNEL_POLICY).unwrap();
        save_geo_file(&g, &path).unwrap();
        assert_eq!(load_geo_file(&path).unwrap(), g);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trip_identity(
            nx in 1usize..6, ny in 1usize..6, nz in 1usize..6,
            seed in any::<u64>(), frac in 0.0f64..1.0,
            pol in proptest::array::uniform3(any::<bool>()),
        ) {
            let policy = pol.map(|p| if p { AxisPolicy::Periodic } else { AxisPolicy::Wall });
            let g = GridGeometry::random([nx, ny, nz], frac, seed, policy).unwrap();
            prop_assert_eq!(load_geo(encode(&g).as_slice()).unwrap(), g);
        }
    }
}
