//! ACTB binary activation files, with a CSV fallback for loading.
//!
//! Layout, all integers little-endian:
//!
//! | field       | encoding                          |
//! |-------------|-----------------------------------|
//! | magic       | `b"ACTB"`                         |
//! | version     | `u32`, currently 1                |
//! | N           | `u64`                             |
//! | D           | `u64`                             |
//! | layer_tag   | `u16` byte length + UTF-8 bytes   |
//! | source_tag  | `u16` byte length + UTF-8 bytes   |
//! | payload     | N·D `f32` values, row-major       |

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::ActivationSet;
use crate::error::{Error, Result};

pub const ACTB_MAGIC: &[u8; 4] = b"ACTB";
pub const ACTB_VERSION: u32 = 1;

/// Reads an ACTB file, or a CSV file whose first line names the columns.
pub fn load_activations(path: impl AsRef<Path>) -> Result<ActivationSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(ACTB_MAGIC) {
        return decode_actb(&bytes);
    }
    let is_actb_ext = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("actb"));
    if is_actb_ext {
        return Err(Error::Format(format!("{}: missing ACTB magic", path.display())));
    }
    decode_csv(&bytes)
}

/// Writes `set` as ACTB. Values are narrowed to `f32`.
pub fn save_activations(set: &ActivationSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_actb(set)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&bytes)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_actb(set: &ActivationSet) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(32 + set.as_slice().len() * 4);
    buf.extend_from_slice(ACTB_MAGIC);
    buf.extend_from_slice(&ACTB_VERSION.to_le_bytes());
    buf.extend_from_slice(&(set.n_samples() as u64).to_le_bytes());
    buf.extend_from_slice(&(set.dim() as u64).to_le_bytes());
    for tag in [set.layer_tag(), set.source_tag()] {
        let len = u16::try_from(tag.len())
            .map_err(|_| Error::Validation(format!("tag longer than {} bytes", u16::MAX)))?;
        buf.extend_from_slice(&len.to_le_bytes());
        buf.extend_from_slice(tag.as_bytes());
    }
    for &v in set.as_slice() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(buf)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated header while reading {what}")))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn tag(&mut self, what: &str) -> Result<String> {
        let len = self.u16(what)? as usize;
        let raw = self.take(len, what)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::Format(format!("{what} is not UTF-8")))
    }
}

pub(crate) fn decode_actb(bytes: &[u8]) -> Result<ActivationSet> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != ACTB_MAGIC {
        return Err(Error::Format("missing ACTB magic".into()));
    }
    let version = cur.u32("version")?;
    if version != ACTB_VERSION {
        return Err(Error::Format(format!("unsupported ACTB version {version}")));
    }
    let n = cur.u64("sample count")?;
    let d = cur.u64("dimension")?;
    if n == 0 || d == 0 {
        return Err(Error::Format(format!("header declares empty shape {n}x{d}")));
    }
    let layer_tag = cur.tag("layer tag")?;
    let source_tag = cur.tag("source tag")?;

    let (n, d) = (n as usize, d as usize);
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::Format("declared shape overflows".into()))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(Error::Format(format!(
            "truncated payload: header declares {n}x{d} ({expected} bytes), found {} bytes",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after {n}x{d} payload",
            payload.len() - expected
        )));
    }
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    ActivationSet::new(data, n, d, layer_tag, source_tag)
}

fn decode_csv(bytes: &[u8]) -> Result<ActivationSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let dim = reader
        .headers()
        .map_err(|e| Error::Format(format!("csv header: {e}")))?
        .len();
    let mut data = Vec::new();
    let mut n = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("csv row {row}: {e}")))?;
        if record.len() != dim {
            return Err(Error::Format(format!(
                "csv row {row} has {} fields, header has {dim}",
                record.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Format(format!("csv row {row}, column {col}: bad number {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::Data { row, col });
            }
            data.push(v);
        }
        n += 1;
    }
    if n == 0 || dim == 0 {
        return Err(Error::Format("csv file has no data rows".into()));
    }
    ActivationSet::new(data, n, dim, "unknown", "unknown")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(n: u64, d: u64) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(b"ACTB");
        b.extend_from_slice(&1u32.to_le_bytes());
        b.extend_from_slice(&n.to_le_bytes());
        b.extend_from_slice(&d.to_le_bytes());
        b.extend_from_slice(&0u16.to_le_bytes());
        b.extend_from_slice(&0u16.to_le_bytes());
        b
    }

    #[test]
    fn byte_layout_is_exact() {
        let set = ActivationSet::from_rows(&[[1.0, -2.0]])
            .unwrap()
            .with_tags("pool64", "real");
        let bytes = encode_actb(&set).unwrap();
        let mut expected = b"ACTB".to_vec();
        expected.extend_from_slice(&[1, 0, 0, 0]);
        expected.extend_from_slice(&[1, 0, 0, 0, 0, 0, 0, 0]);
        expected.extend_from_slice(&[2, 0, 0, 0, 0, 0, 0, 0]);
        expected.extend_from_slice(&[6, 0]);
        expected.extend_from_slice(b"pool64");
        expected.extend_from_slice(&[4, 0]);
        expected.extend_from_slice(b"real");
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&(-2.0f32).to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn declared_rows_exceed_payload() {
        let mut b = header(5, 2);
        for v in 0..8 {
            b.extend_from_slice(&(v as f32).to_le_bytes());
        }
        assert!(matches!(decode_actb(&b), Err(Error::Format(_))));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut b = header(1, 1);
        b.extend_from_slice(&[0; 8]);
        assert!(matches!(decode_actb(&b), Err(Error::Format(_))));
    }

    #[test]
    fn malformed_header() {
        assert!(matches!(decode_actb(b"ACTB\x01\x00"), Err(Error::Format(_))));
        let mut b = header(1, 1);
        b[4] = 2;
        assert!(matches!(decode_actb(&b), Err(Error::Format(_))));
    }

    #[test]
    fn non_finite_payload_reports_coordinates() {
        let mut b = header(2, 2);
        for v in [0.0f32, 1.0, f32::INFINITY, 3.0] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        assert!(matches!(decode_actb(&b), Err(Error::Data { row: 1, col: 0 })));
    }

    #[test]
    fn csv_single_row() {
        let set = decode_csv(b"f0,f1\n0.5,1.5").unwrap();
        assert_eq!((set.n_samples(), set.dim()), (1, 2));
        assert_eq!(set.as_slice(), &[0.5, 1.5]);
        assert_eq!(set.layer_tag(), "unknown");
        assert_eq!(set.source_tag(), "unknown");
    }

    #[test]
    fn csv_non_finite_and_ragged() {
        assert!(matches!(
            decode_csv(b"a,b\n1,2\n3,inf\n"),
            Err(Error::Data { row: 1, col: 1 })
        ));
        assert!(matches!(decode_csv(b"a,b\n1\n"), Err(Error::Format(_))));
        assert!(matches!(decode_csv(b"a,b\n"), Err(Error::Format(_))));
    }
}
