//! Binary record streams with a JSON header.
//!
//! Layout: `"GREC"`, `u32` header length, UTF-8 JSON header, then `count`
//! records of `width` little-endian `f32` values each. The header always
//! carries `count` and `width`.

use std::io::{Read, Write};

use serde_json::Value;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GREC";

pub fn write_records<W: Write>(
    mut w: W,
    mut header: serde_json::Map<String, Value>,
    width: usize,
    data: &[f64],
) -> Result<()> {
    if width == 0 || data.len() % width != 0 {
        return Err(Error::dim(format!(
            "{} values do not form records of width {width}",
            data.len()
        )));
    }
    header.insert("count".into(), (data.len() / width).into());
    header.insert("width".into(), width.into());
    let header = serde_json::to_vec(&Value::Object(header))?;
    w.write_all(MAGIC)?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(data.len() * 4);
    for &v in data {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub struct RecordStream {
    pub header: serde_json::Map<String, Value>,
    pub count: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl RecordStream {
    pub fn record(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn header_str(&self, key: &str) -> Option<&str> {
        self.header.get(key).and_then(Value::as_str)
    }

    pub fn header_usize(&self, key: &str) -> Option<usize> {
        self.header.get(key).and_then(Value::as_u64).map(|v| v as usize)
    }
}

pub fn read_records<R: Read>(mut r: R) -> Result<RecordStream> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|e| Error::parse(format!("record stream header: {e}")))?;
    if &magic[..4] != MAGIC {
        return Err(Error::parse("not a GREC record stream"));
    }
    let hlen = u32::from_le_bytes(magic[4..8].try_into().unwrap()) as usize;
    let mut hbuf = vec![0u8; hlen];
    r.read_exact(&mut hbuf)
        .map_err(|e| Error::parse(format!("record stream header truncated: {e}")))?;
    let header: Value = serde_json::from_slice(&hbuf)?;
    let Value::Object(header) = header else {
        return Err(Error::parse("record stream header is not a JSON object"));
    };
    let get = |k: &str| {
        header
            .get(k)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| Error::parse(format!("record stream header lacks {k:?}")))
    };
    let count = get("count")?;
    let width = get("width")?;
    let n = count
        .checked_mul(width)
        .ok_or_else(|| Error::parse("record stream size overflows"))?;
    let mut raw = vec![0u8; n * 4];
    r.read_exact(&mut raw)
        .map_err(|e| Error::parse(format!("record stream truncated: {e}")))?;
    let data = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    Ok(RecordStream {
        header,
        count,
        width,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_records() {
        let mut h = serde_json::Map::new();
        h.insert("kind".into(), "test".into());
        let mut buf = Vec::new();
        write_records(&mut buf, h, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let s = read_records(&buf[..]).unwrap();
        assert_eq!((s.count, s.width), (2, 3));
        assert_eq!(s.header_str("kind"), Some("test"));
        assert_eq!(s.record(1), &[4.0, 5.0, 6.0]);
        assert!(read_records(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn ragged_data_rejected() {
        let mut buf = Vec::new();
        assert!(write_records(&mut buf, Default::default(), 4, &[0.0; 6]).is_err());
    }
}
