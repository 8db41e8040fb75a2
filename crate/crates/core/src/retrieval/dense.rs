//! Exact-scan vector tables for the dense routes, with a flat binary file
//! format: per record a u16 id length, the id bytes, a u32 dimension and the
//! f32 values, all little-endian.

use std::io::{self, Read, Write};

use crate::atom::AtomId;
use crate::providers::cosine;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DenseTable {
    pub rows: Vec<(AtomId, Vec<f32>)>,
}

impl DenseTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `(atom, cosine)` for every row with positive similarity.
    pub fn scan(&self, query: &[f32]) -> Vec<(AtomId, f64)> {
        self.rows
            .iter()
            .map(|(id, v)| (*id, cosine(query, v)))
            .filter(|(_, s)| *s > 0.0)
            .collect()
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        for (id, v) in &self.rows {
            let id = id.to_string();
            let len = u16::try_from(id.len()).map_err(|_| io::Error::other("atom id too long"))?;
            w.write_all(&len.to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            let dim = u32::try_from(v.len()).map_err(|_| io::Error::other("vector too long"))?;
            w.write_all(&dim.to_le_bytes())?;
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> io::Result<Self> {
        let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
        let mut rows = Vec::new();
        loop {
            let mut len = [0u8; 2];
            match r.read_exact(&mut len) {
                Ok(()) => {}
                Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e),
            }
            let mut id = vec![0u8; u16::from_le_bytes(len) as usize];
            r.read_exact(&mut id)?;
            let id = String::from_utf8(id).map_err(|e| bad(e.to_string()))?;
            let id: AtomId = id.parse().map_err(|e: crate::atom::ParseAtomIdError| bad(e.to_string()))?;
            let mut dim = [0u8; 4];
            r.read_exact(&mut dim)?;
            let dim = u32::from_le_bytes(dim) as usize;
            let mut v = Vec::with_capacity(dim);
            let mut x = [0u8; 4];
            for _ in 0..dim {
                r.read_exact(&mut x)?;
                v.push(f32::from_le_bytes(x));
            }
            rows.push((id, v));
        }
        Ok(Self { rows })
    }
}
