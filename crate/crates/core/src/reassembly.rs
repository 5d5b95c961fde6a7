//! Offset-addressed byte reassembly shared by TCP streams and QUIC CRYPTO
//! frames. Where pieces overlap, the bytes that arrived first win.

use std::collections::BTreeMap;

#[derive(Debug, Default, Clone)]
pub struct ByteAssembler {
    pieces: BTreeMap<u64, Vec<u8>>,
}

impl ByteAssembler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert `data` at `offset`, keeping any bytes already present.
    pub fn insert(&mut self, offset: u64, data: &[u8]) {
        if data.is_empty() {
            return;
        }
        let end = offset + data.len() as u64;
        // Existing pieces that may overlap [offset, end).
        let mut covered: Vec<(u64, u64)> = Vec::new();
        if let Some((&s, v)) = self.pieces.range(..offset).next_back() {
            let e = s + v.len() as u64;
            if e > offset {
                covered.push((s, e));
            }
        }
        for (&s, v) in self.pieces.range(offset..end) {
            covered.push((s, s + v.len() as u64));
        }

        let mut pos = offset;
        for (s, e) in covered {
            if s > pos {
                let from = (pos - offset) as usize;
                let to = (s - offset) as usize;
                self.pieces.insert(pos, data[from..to].to_vec());
            }
            pos = pos.max(e);
            if pos >= end {
                break;
            }
        }
        if pos < end {
            let from = (pos - offset) as usize;
            self.pieces.insert(pos, data[from..].to_vec());
        }
    }

    /// Contiguous bytes starting at `start`, and whether a gap (or a missing
    /// prefix) cut the result short of the highest received byte.
    pub fn contiguous_from(&self, start: u64) -> (Vec<u8>, bool) {
        let mut out = Vec::new();
        let mut pos = start;
        for (&s, v) in self.pieces.range(..) {
            let e = s + v.len() as u64;
            if e <= pos {
                continue;
            }
            if s > pos {
                return (out, true);
            }
            out.extend_from_slice(&v[(pos - s) as usize..]);
            pos = e;
        }
        (out, false)
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn min_offset(&self) -> Option<u64> {
        self.pieces.keys().next().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in_and_out_of_order() {
        let mut a = ByteAssembler::new();
        a.insert(2, b"cd");
        a.insert(0, b"ab");
        assert_eq!(a.contiguous_from(0), (b"abcd".to_vec(), false));
    }

    #[test]
    fn gap_truncates() {
        let mut a = ByteAssembler::new();
        a.insert(0, b"ab");
        a.insert(4, b"ef");
        assert_eq!(a.contiguous_from(0), (b"ab".to_vec(), true));
    }

    #[test]
    fn overlap_keeps_first_copy() {
        let mut a = ByteAssembler::new();
        a.insert(1, b"XY");
        a.insert(0, b"abcd");
        assert_eq!(a.contiguous_from(0).0, b"aXYd");
        a.insert(0, b"abcd");
        assert_eq!(a.contiguous_from(0).0, b"aXYd");
    }

    #[test]
    fn missing_prefix() {
        let mut a = ByteAssembler::new();
        a.insert(3, b"zz");
        assert_eq!(a.contiguous_from(0), (Vec::new(), true));
    }
}
