//! pcap / pcapng ingestion.
//!
//! Readers hand back raw frames with their link type; [`decode`] turns them
//! into transport segments and [`flow`] groups those into bidirectional flows.

use std::io::Read;

pub mod decode;
pub mod flow;

pub use flow::{assemble_flows, Datagram, Direction, FlowData, FlowKey, Side, Transport};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CaptureError {
    #[error("malformed capture: {0}")]
    Malformed(String),
    #[error("unsupported link type {0}")]
    UnsupportedLinkType(u32),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkType {
    Null,
    Ethernet,
    Raw,
    LinuxSll,
}

impl LinkType {
    pub fn from_code(code: u32) -> Result<Self, CaptureError> {
        match code {
            0 => Ok(LinkType::Null),
            1 => Ok(LinkType::Ethernet),
            101 => Ok(LinkType::Raw),
            113 => Ok(LinkType::LinuxSll),
            other => Err(CaptureError::UnsupportedLinkType(other)),
        }
    }

    pub fn code(self) -> u32 {
        match self {
            LinkType::Null => 0,
            LinkType::Ethernet => 1,
            LinkType::Raw => 101,
            LinkType::LinuxSll => 113,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    /// Nanoseconds since the Unix epoch.
    pub ts_nanos: u64,
    pub link_type: LinkType,
    pub data: Vec<u8>,
    /// Length on the wire; larger than `data.len()` when the snap length cut it.
    pub orig_len: u32,
}

impl Frame {
    pub fn snap_truncated(&self) -> bool {
        (self.orig_len as usize) > self.data.len()
    }
}

const PCAP_MICRO: u32 = 0xA1B2_C3D4;
const PCAP_NANO: u32 = 0xA1B2_3C4D;
const PCAPNG_SHB: u32 = 0x0A0D_0D0A;
const PCAPNG_BOM: u32 = 0x1A2B_3C4D;

pub fn read_capture_from<R: Read>(mut source: R) -> Result<Vec<Frame>, CaptureError> {
    let mut buf = Vec::new();
    source
        .read_to_end(&mut buf)
        .map_err(|e| CaptureError::Io(e.to_string()))?;
    read_capture(&buf)
}

/// Parse a whole pcap or pcapng file held in memory. Frames come back in
/// file order.
pub fn read_capture(data: &[u8]) -> Result<Vec<Frame>, CaptureError> {
    if data.len() < 4 {
        return Err(CaptureError::Malformed("file shorter than a magic number".into()));
    }
    let magic_le = u32::from_le_bytes(data[..4].try_into().unwrap());
    let magic_be = u32::from_be_bytes(data[..4].try_into().unwrap());
    if magic_le == PCAPNG_SHB {
        return read_pcapng(data);
    }
    let (big_endian, nanos) = match (magic_le, magic_be) {
        (PCAP_MICRO, _) => (false, false),
        (PCAP_NANO, _) => (false, true),
        (_, PCAP_MICRO) => (true, false),
        (_, PCAP_NANO) => (true, true),
        _ => return Err(CaptureError::Malformed(format!("bad magic {magic_be:#010x}"))),
    };
    read_pcap(data, big_endian, nanos)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    big_endian: bool,
}

impl<'a> Cursor<'a> {
    fn u16_at(&self, at: usize) -> u16 {
        let b: [u8; 2] = self.data[at..at + 2].try_into().unwrap();
        if self.big_endian {
            u16::from_be_bytes(b)
        } else {
            u16::from_le_bytes(b)
        }
    }

    fn u32_at(&self, at: usize) -> u32 {
        let b: [u8; 4] = self.data[at..at + 4].try_into().unwrap();
        if self.big_endian {
            u32::from_be_bytes(b)
        } else {
            u32::from_le_bytes(b)
        }
    }

    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }
}

fn read_pcap(data: &[u8], big_endian: bool, nanos: bool) -> Result<Vec<Frame>, CaptureError> {
    if data.len() < 24 {
        return Err(CaptureError::Malformed("truncated pcap global header".into()));
    }
    let mut cur = Cursor {
        data,
        pos: 24,
        big_endian,
    };
    // Upper bits of the link-type word carry FCS flags in newer writers.
    let link_type = LinkType::from_code(cur.u32_at(20) & 0x0FFF_FFFF)?;
    let mut frames = Vec::new();
    while cur.remaining() > 0 {
        if cur.remaining() < 16 {
            return Err(CaptureError::Malformed(format!(
                "truncated record header at offset {}",
                cur.pos
            )));
        }
        let sec = cur.u32_at(cur.pos) as u64;
        let frac = cur.u32_at(cur.pos + 4) as u64;
        let incl = cur.u32_at(cur.pos + 8) as usize;
        let orig = cur.u32_at(cur.pos + 12);
        cur.pos += 16;
        let take = incl.min(cur.remaining());
        let ts_nanos = sec * 1_000_000_000 + if nanos { frac } else { frac * 1000 };
        frames.push(Frame {
            ts_nanos,
            link_type,
            data: data[cur.pos..cur.pos + take].to_vec(),
            orig_len: orig.max(take as u32),
        });
        cur.pos += take;
    }
    Ok(frames)
}

struct Interface {
    link_type: LinkType,
    snaplen: u32,
    /// Ticks per second.
    ts_units: u128,
}

fn read_pcapng(data: &[u8]) -> Result<Vec<Frame>, CaptureError> {
    let mut cur = Cursor {
        data,
        pos: 0,
        big_endian: false,
    };
    let mut interfaces: Vec<Interface> = Vec::new();
    let mut frames = Vec::new();

    while cur.remaining() > 0 {
        if cur.remaining() < 12 {
            return Err(CaptureError::Malformed(format!(
                "truncated block header at offset {}",
                cur.pos
            )));
        }
        let start = cur.pos;
        let raw_type = u32::from_le_bytes(data[start..start + 4].try_into().unwrap());
        if raw_type == PCAPNG_SHB {
            // The byte-order magic decides endianness for the whole section.
            if cur.remaining() < 28 {
                return Err(CaptureError::Malformed("truncated section header".into()));
            }
            let bom = u32::from_le_bytes(data[start + 8..start + 12].try_into().unwrap());
            cur.big_endian = match bom {
                PCAPNG_BOM => false,
                b if b.swap_bytes() == PCAPNG_BOM => true,
                _ => return Err(CaptureError::Malformed("bad byte-order magic".into())),
            };
            interfaces.clear();
        }
        let block_type = cur.u32_at(start);
        let total = cur.u32_at(start + 4) as usize;
        if total < 12 || total > cur.remaining() {
            return Err(CaptureError::Malformed(format!(
                "block at offset {start} declares length {total}"
            )));
        }
        let body = &data[start + 8..start + total - 4];
        let body_cur = Cursor {
            data: body,
            pos: 0,
            big_endian: cur.big_endian,
        };
        match block_type {
            PCAPNG_SHB => {}
            1 => {
                if body.len() < 8 {
                    return Err(CaptureError::Malformed("short interface block".into()));
                }
                let link_type = LinkType::from_code(body_cur.u16_at(0) as u32)?;
                let snaplen = body_cur.u32_at(4);
                let ts_units = parse_tsresol(&body_cur, 8);
                interfaces.push(Interface {
                    link_type,
                    snaplen,
                    ts_units,
                });
            }
            6 | 2 => {
                if body.len() < 20 {
                    return Err(CaptureError::Malformed("short packet block".into()));
                }
                let iface_id = if block_type == 6 {
                    body_cur.u32_at(0) as usize
                } else {
                    body_cur.u16_at(0) as usize
                };
                let iface = interfaces.get(iface_id).ok_or_else(|| {
                    CaptureError::Malformed(format!("packet references interface {iface_id}"))
                })?;
                let ts = ((body_cur.u32_at(4) as u128) << 32) | body_cur.u32_at(8) as u128;
                let caplen = body_cur.u32_at(12) as usize;
                let orig = body_cur.u32_at(16);
                let avail = body.len() - 20;
                let take = caplen.min(avail);
                frames.push(Frame {
                    ts_nanos: (ts * 1_000_000_000 / iface.ts_units) as u64,
                    link_type: iface.link_type,
                    data: body[20..20 + take].to_vec(),
                    orig_len: orig.max(take as u32),
                });
            }
            3 => {
                if body.len() < 4 {
                    return Err(CaptureError::Malformed("short simple packet block".into()));
                }
                let iface = interfaces.first().ok_or_else(|| {
                    CaptureError::Malformed("simple packet block before interface".into())
                })?;
                let orig = body_cur.u32_at(0);
                let mut take = (orig as usize).min(body.len() - 4);
                if iface.snaplen > 0 {
                    take = take.min(iface.snaplen as usize);
                }
                frames.push(Frame {
                    ts_nanos: 0,
                    link_type: iface.link_type,
                    data: body[4..4 + take].to_vec(),
                    orig_len: orig,
                });
            }
            _ => {}
        }
        cur.pos = start + total;
    }
    Ok(frames)
}

fn parse_tsresol(cur: &Cursor<'_>, mut at: usize) -> u128 {
    let mut units = 1_000_000u128;
    while at + 4 <= cur.data.len() {
        let code = cur.u16_at(at);
        let len = cur.u16_at(at + 2) as usize;
        if code == 0 {
            break;
        }
        if code == 9 && len >= 1 && at + 5 <= cur.data.len() {
            let v = cur.data[at + 4];
            let exp = (v & 0x7F) as u32;
            units = if v & 0x80 == 0 {
                10u128.checked_pow(exp).unwrap_or(1_000_000)
            } else {
                2u128.checked_pow(exp).unwrap_or(1_000_000)
            };
        }
        at += 4 + len.div_ceil(4) * 4;
    }
    units
}

/// Write frames as a little-endian, nanosecond-resolution pcap file. All
/// frames must share one link type.
pub fn write_pcap(frames: &[Frame]) -> Vec<u8> {
    let link = frames.first().map_or(1, |f| f.link_type.code());
    let mut out = Vec::with_capacity(24 + frames.iter().map(|f| f.data.len() + 16).sum::<usize>());
    out.extend_from_slice(&PCAP_NANO.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&262_144u32.to_le_bytes());
    out.extend_from_slice(&link.to_le_bytes());
    for f in frames {
        debug_assert_eq!(f.link_type.code(), link);
        out.extend_from_slice(&((f.ts_nanos / 1_000_000_000) as u32).to_le_bytes());
        out.extend_from_slice(&((f.ts_nanos % 1_000_000_000) as u32).to_le_bytes());
        out.extend_from_slice(&(f.data.len() as u32).to_le_bytes());
        out.extend_from_slice(&f.orig_len.to_le_bytes());
        out.extend_from_slice(&f.data);
    }
    out
}

/// Write frames as pcapng with one interface per distinct link type and
/// nanosecond timestamps.
pub fn write_pcapng(frames: &[Frame]) -> Vec<u8> {
    fn block(out: &mut Vec<u8>, kind: u32, body: &[u8]) {
        let padded = body.len().div_ceil(4) * 4;
        let total = (12 + padded) as u32;
        out.extend_from_slice(&kind.to_le_bytes());
        out.extend_from_slice(&total.to_le_bytes());
        out.extend_from_slice(body);
        out.resize(out.len() + padded - body.len(), 0);
        out.extend_from_slice(&total.to_le_bytes());
    }

    let mut out = Vec::new();
    let mut shb = Vec::new();
    shb.extend_from_slice(&PCAPNG_BOM.to_le_bytes());
    shb.extend_from_slice(&1u16.to_le_bytes());
    shb.extend_from_slice(&0u16.to_le_bytes());
    shb.extend_from_slice(&u64::MAX.to_le_bytes());
    block(&mut out, PCAPNG_SHB, &shb);

    let mut links: Vec<LinkType> = Vec::new();
    for f in frames {
        if !links.contains(&f.link_type) {
            links.push(f.link_type);
        }
    }
    for link in &links {
        let mut idb = Vec::new();
        idb.extend_from_slice(&(link.code() as u16).to_le_bytes());
        idb.extend_from_slice(&0u16.to_le_bytes());
        idb.extend_from_slice(&0u32.to_le_bytes());
        // if_tsresol = 9 (nanoseconds), then opt_endofopt
        idb.extend_from_slice(&9u16.to_le_bytes());
        idb.extend_from_slice(&1u16.to_le_bytes());
        idb.extend_from_slice(&[9, 0, 0, 0]);
        idb.extend_from_slice(&[0, 0, 0, 0]);
        block(&mut out, 1, &idb);
    }
    for f in frames {
        let iface = links.iter().position(|l| *l == f.link_type).unwrap() as u32;
        let mut epb = Vec::with_capacity(20 + f.data.len());
        epb.extend_from_slice(&iface.to_le_bytes());
        epb.extend_from_slice(&((f.ts_nanos >> 32) as u32).to_le_bytes());
        epb.extend_from_slice(&(f.ts_nanos as u32).to_le_bytes());
        epb.extend_from_slice(&(f.data.len() as u32).to_le_bytes());
        epb.extend_from_slice(&f.orig_len.to_le_bytes());
        epb.extend_from_slice(&f.data);
        block(&mut out, 6, &epb);
    }
    out
}
