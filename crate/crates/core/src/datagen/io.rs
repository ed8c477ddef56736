//! Dataset file format, version 1. All integers and floats are little-endian.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "ACLDATA\0"
//! 8       4     format version (u32) = 1
//! 12      4     patch side (u32)
//! 16      8     patch count (u64)
//! 24      8     positive count (u64)
//! 32      8     generator seed (u64)
//! 40      ...   patch records, each:
//!                 id     u64
//!                 label  u8   (0 = negative, 1 = positive)
//!                 pixels side² × f64, row-major
//! ```

use std::io::{Read, Write};

use super::{Dataset, Label, Patch};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"ACLDATA\0";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(dataset.side as u32).to_le_bytes())?;
    out.write_all(&(dataset.len() as u64).to_le_bytes())?;
    out.write_all(&(dataset.positives() as u64).to_le_bytes())?;
    out.write_all(&dataset.seed.to_le_bytes())?;
    for p in &dataset.patches {
        out.write_all(&p.id.to_le_bytes())?;
        out.write_all(&[p.label.bit()])?;
        for v in &p.pixels {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated dataset file".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub fn read_dataset<R: Read>(mut input: R) -> Result<Dataset> {
    let magic: [u8; 8] = read_array(&mut input)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a dataset file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let side = u32::from_le_bytes(read_array(&mut input)?) as usize;
    let count = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let positives = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let seed = u64::from_le_bytes(read_array(&mut input)?);

    let mut patches = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let id = u64::from_le_bytes(read_array(&mut input)?);
        let [bit] = read_array::<1, _>(&mut input)?;
        let label = Label::from_bit(bit)
            .ok_or_else(|| Error::Format(format!("patch {id}: invalid label byte {bit}")))?;
        let mut pixels = Vec::with_capacity(side * side);
        for _ in 0..side * side {
            let v = f64::from_le_bytes(read_array(&mut input)?);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Format(format!("patch {id}: pixel {v} outside [0, 1]")));
            }
            pixels.push(v);
        }
        patches.push(Patch { id, label, pixels });
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after the last patch".into()));
    }
    let dataset = Dataset {
        side,
        seed,
        patches,
    };
    if dataset.positives() != positives {
        return Err(Error::Format(format!(
            "header says {positives} positives, records contain {}",
            dataset.positives()
        )));
    }
    Ok(dataset)
}

/// Inspection export: `id,label,p0,...,p{side²-1}`.
pub fn write_csv<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((0..dataset.side * dataset.side).map(|i| format!("p{i}")));
    w.write_record(&header)?;
    for p in &dataset.patches {
        let mut rec = vec![p.id.to_string(), p.label.bit().to_string()];
        rec.extend(p.pixels.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_dataset, DatasetSpec};

    fn small() -> Dataset {
        generate_dataset(&DatasetSpec {
            pool_size: 30,
            patch_side: 3,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let ds = small();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        assert_eq!(buf.len(), 40 + 30 * (8 + 1 + 9 * 8));
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn header_layout() {
        let ds = small();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(buf[16..24].try_into().unwrap()), 30);
        assert_eq!(u64::from_le_bytes(buf[24..32].try_into().unwrap()), 4);
    }

    #[test]
    fn rejects_corruption() {
        let ds = small();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        assert!(matches!(read_dataset(&buf[..buf.len() - 3]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_dataset(bad.as_slice()), Err(Error::Format(_))));
        let mut extra = buf.clone();
        extra.push(0);
        assert!(matches!(read_dataset(extra.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let ds = small();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("id,label,p0,"));
        assert_eq!(lines.count(), 30);
    }
}
