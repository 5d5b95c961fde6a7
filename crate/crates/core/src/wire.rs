//! Bounds-checked big-endian reader shared by the dissectors.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Short;

#[derive(Debug, Clone)]
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    /// Varint length-prefixed bytes.
    pub fn vec_varint(&mut self) -> Result<&'a [u8], Short> {
        let n = self.varint()?;
        self.bytes(usize::try_from(n).map_err(|_| Short)?)
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8], Short> {
        if self.remaining() < n {
            return Err(Short);
        }
        let r = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(r)
    }

    pub fn u8(&mut self) -> Result<u8, Short> {
        Ok(self.bytes(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, Short> {
        let b = self.bytes(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub fn u24(&mut self) -> Result<u32, Short> {
        let b = self.bytes(3)?;
        Ok(u32::from_be_bytes([0, b[0], b[1], b[2]]))
    }

    pub fn u32(&mut self) -> Result<u32, Short> {
        let b = self.bytes(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn vec8(&mut self) -> Result<&'a [u8], Short> {
        let n = self.u8()? as usize;
        self.bytes(n)
    }

    pub fn vec16(&mut self) -> Result<&'a [u8], Short> {
        let n = self.u16()? as usize;
        self.bytes(n)
    }

    pub fn vec32(&mut self) -> Result<&'a [u8], Short> {
        let n = self.u32()? as usize;
        self.bytes(n)
    }

    /// QUIC variable-length integer.
    pub fn varint(&mut self) -> Result<u64, Short> {
        let first = self.u8()?;
        let extra = (1usize << (first >> 6)) - 1;
        let mut v = (first & 0x3F) as u64;
        for &b in self.bytes(extra)? {
            v = (v << 8) | b as u64;
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn varints() {
        // RFC 9000 sample encodings
        for (bytes, v) in [
            (&[0xc2, 0x19, 0x7c, 0x5e, 0xff, 0x14, 0xe8, 0x8c][..], 151_288_809_941_952_652u64),
            (&[0x9d, 0x7f, 0x3e, 0x7d][..], 494_878_333),
            (&[0x7b, 0xbd][..], 15_293),
            (&[0x25][..], 37),
            (&[0x40, 0x25][..], 37),
        ] {
            assert_eq!(Reader::new(bytes).varint(), Ok(v));
        }
    }

    #[test]
    fn short_reads_fail() {
        let mut r = Reader::new(&[0, 5, 1]);
        assert_eq!(r.vec16(), Err(Short));
    }
}
