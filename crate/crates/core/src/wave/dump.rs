use std::io::{Read, Write};
use std::path::Path;

use super::{FieldGrid, GridSpec};
use crate::beam::ElectronContext;
use crate::{Error, Result, C64};

pub const DUMP_MAGIC: &[u8; 4] = b"QPGF";
pub const DUMP_VERSION: u32 = 1;
pub const DUMP_HEADER_LEN: usize = 64;

/// Writes the little-endian dump: 64-byte header then `N·N` (re, im) pairs.
pub fn write_dump<W: Write>(field: &FieldGrid, mut out: W) -> Result<()> {
    let mut header = [0u8; DUMP_HEADER_LEN];
    header[0..4].copy_from_slice(DUMP_MAGIC);
    header[4..8].copy_from_slice(&DUMP_VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&(field.n() as u32).to_le_bytes());
    header[12..20].copy_from_slice(&field.extent().to_le_bytes());
    header[20..28].copy_from_slice(&field.z().to_le_bytes());
    header[28..36].copy_from_slice(&field.ctx().kinetic_energy_kev().to_le_bytes());
    out.write_all(&header)?;
    let mut body = Vec::with_capacity(16 * field.samples().len());
    for c in field.samples() {
        body.extend_from_slice(&c.re.to_le_bytes());
        body.extend_from_slice(&c.im.to_le_bytes());
    }
    out.write_all(&body)?;
    out.flush()?;
    Ok(())
}

pub fn write_dump_file(field: &FieldGrid, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dump(field, std::io::BufWriter::new(file))
}

fn format_error(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

fn f64_at(bytes: &[u8], offset: usize) -> f64 {
    f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8 bytes"))
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

/// Parses a dump, reporting the byte offset of the first problem.
pub fn read_dump<R: Read>(mut input: R) -> Result<FieldGrid> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < DUMP_HEADER_LEN {
        return Err(format_error(
            bytes.len(),
            format!("header truncated, expected {DUMP_HEADER_LEN} bytes"),
        ));
    }
    if &bytes[0..4] != DUMP_MAGIC {
        return Err(format_error(0, "bad magic, expected \"QPGF\""));
    }
    let version = u32_at(&bytes, 4);
    if version != DUMP_VERSION {
        return Err(format_error(4, format!("unsupported version {version}")));
    }
    let n = u32_at(&bytes, 8) as usize;
    if n < 4 || !n.is_power_of_two() {
        return Err(format_error(8, format!("grid size {n} is not a power of two ≥ 4")));
    }
    let extent = f64_at(&bytes, 12);
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(format_error(12, format!("extent {extent} must be positive")));
    }
    let z = f64_at(&bytes, 20);
    if !z.is_finite() {
        return Err(format_error(20, "z is not finite"));
    }
    let energy = f64_at(&bytes, 28);
    let ctx = ElectronContext::from_energy_kev(energy)
        .map_err(|_| format_error(28, format!("energy {energy} keV must be positive")))?;
    let expected = DUMP_HEADER_LEN + 16 * n * n;
    if bytes.len() < expected {
        return Err(format_error(
            bytes.len(),
            format!("sample data truncated, expected {expected} bytes in total"),
        ));
    }
    if bytes.len() > expected {
        return Err(format_error(expected, "unexpected trailing data"));
    }
    let samples: Vec<C64> = bytes[DUMP_HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| C64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    if let Some(i) = samples.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(format_error(DUMP_HEADER_LEN + 16 * i, "sample is not finite"));
    }
    let spec = GridSpec::new(n, extent)?;
    FieldGrid::new(spec, z, ctx, samples)
}

pub fn read_dump_file(path: impl AsRef<Path>) -> Result<FieldGrid> {
    read_dump(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> FieldGrid {
        let ctx = ElectronContext::from_energy_kev(300.0).unwrap();
        let spec = GridSpec::new(4, 2e-6).unwrap();
        let samples = (0..16).map(|i| C64::new(i as f64, -0.5 * i as f64)).collect();
        FieldGrid::new(spec, 0.25, ctx, samples).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let f = field();
        let mut buf = Vec::new();
        write_dump(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), 64 + 16 * 16);
        assert_eq!(&buf[0..4], b"QPGF");
        assert_eq!(&buf[36..64], &[0u8; 28]);
        assert_eq!(read_dump(&buf[..]).unwrap(), f);
    }

    #[test]
    fn errors_carry_offsets() {
        let mut buf = Vec::new();
        write_dump(&field(), &mut buf).unwrap();
        let offset = |bytes: &[u8]| match read_dump(bytes) {
            Err(Error::Format { offset, .. }) => offset,
            other => panic!("{other:?}"),
        };
        assert_eq!(offset(&buf[..100]), 100);
        assert_eq!(offset(&buf[..10]), 10);
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert_eq!(offset(&bad), 0);
        let mut bad = buf.clone();
        bad[4] = 9;
        assert_eq!(offset(&bad), 4);
        let mut bad = buf.clone();
        bad[8] = 3;
        assert_eq!(offset(&bad), 8);
        let mut bad = buf;
        bad.push(0);
        assert_eq!(offset(&bad), 320);
    }
}
