//! Link, network and transport header decoding.

use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use super::{Frame, LinkType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Transport {
    Tcp,
    Udp,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TcpFlags {
    pub syn: bool,
    pub ack: bool,
    pub fin: bool,
    pub rst: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub ts_nanos: u64,
    pub transport: Transport,
    pub src: IpAddr,
    pub dst: IpAddr,
    pub src_port: u16,
    pub dst_port: u16,
    pub seq: u32,
    pub flags: TcpFlags,
    pub payload: Vec<u8>,
    /// Payload bytes are missing because of the capture snap length.
    pub short: bool,
    /// Part of a fragmented IP datagram; payload is not usable.
    pub fragment: bool,
}

/// Decode one frame down to its TCP or UDP payload. Frames that carry
/// anything else, or whose headers do not parse, yield `None`.
pub fn decode_frame(frame: &Frame) -> Option<Segment> {
    let data = frame.data.as_slice();
    let (ethertype, rest) = match frame.link_type {
        LinkType::Ethernet => strip_ethernet(data)?,
        LinkType::LinuxSll => {
            if data.len() < 16 {
                return None;
            }
            (u16::from_be_bytes([data[14], data[15]]), &data[16..])
        }
        LinkType::Null => {
            if data.len() < 4 {
                return None;
            }
            let le = u32::from_le_bytes(data[..4].try_into().unwrap());
            let be = u32::from_be_bytes(data[..4].try_into().unwrap());
            let family = if matches!(le, 2 | 24 | 28 | 30) { le } else { be };
            let ethertype = match family {
                2 => 0x0800,
                24 | 28 | 30 => 0x86DD,
                _ => return None,
            };
            (ethertype, &data[4..])
        }
        LinkType::Raw => match data.first()? >> 4 {
            4 => (0x0800, data),
            6 => (0x86DD, data),
            _ => return None,
        },
    };
    let snap_short = frame.snap_truncated();
    match ethertype {
        0x0800 => decode_ipv4(rest, frame.ts_nanos, snap_short),
        0x86DD => decode_ipv6(rest, frame.ts_nanos, snap_short),
        _ => None,
    }
}

fn strip_ethernet(data: &[u8]) -> Option<(u16, &[u8])> {
    if data.len() < 14 {
        return None;
    }
    let mut ethertype = u16::from_be_bytes([data[12], data[13]]);
    let mut at = 14;
    // 802.1Q / 802.1ad tags
    while matches!(ethertype, 0x8100 | 0x88A8 | 0x9100) {
        if data.len() < at + 4 {
            return None;
        }
        ethertype = u16::from_be_bytes([data[at + 2], data[at + 3]]);
        at += 4;
    }
    Some((ethertype, &data[at..]))
}

fn decode_ipv4(data: &[u8], ts_nanos: u64, snap_short: bool) -> Option<Segment> {
    if data.len() < 20 || data[0] >> 4 != 4 {
        return None;
    }
    let ihl = ((data[0] & 0x0F) as usize) * 4;
    let total = u16::from_be_bytes([data[2], data[3]]) as usize;
    if ihl < 20 || data.len() < ihl || total < ihl {
        return None;
    }
    let frag = u16::from_be_bytes([data[6], data[7]]);
    let more_fragments = frag & 0x2000 != 0;
    let offset = frag & 0x1FFF;
    if offset != 0 {
        // Later fragments carry no transport header.
        return None;
    }
    let proto = data[9];
    let src = IpAddr::V4(Ipv4Addr::new(data[12], data[13], data[14], data[15]));
    let dst = IpAddr::V4(Ipv4Addr::new(data[16], data[17], data[18], data[19]));
    let end = total.min(data.len());
    let short = snap_short || data.len() < total;
    let expected = total - ihl;
    decode_transport(
        proto,
        &data[ihl..end],
        expected,
        src,
        dst,
        ts_nanos,
        short,
        more_fragments,
    )
}

fn decode_ipv6(data: &[u8], ts_nanos: u64, snap_short: bool) -> Option<Segment> {
    if data.len() < 40 || data[0] >> 4 != 6 {
        return None;
    }
    let payload_len = u16::from_be_bytes([data[4], data[5]]) as usize;
    let mut next = data[6];
    let src = IpAddr::V6(Ipv6Addr::from(<[u8; 16]>::try_from(&data[8..24]).unwrap()));
    let dst = IpAddr::V6(Ipv6Addr::from(<[u8; 16]>::try_from(&data[24..40]).unwrap()));
    let end = (40 + payload_len).min(data.len());
    let short = snap_short || data.len() < 40 + payload_len;
    let mut at = 40;
    let mut fragment = false;
    loop {
        match next {
            0 | 43 | 60 => {
                if end < at + 2 {
                    return None;
                }
                next = data[at];
                at += (data[at + 1] as usize + 1) * 8;
            }
            51 => {
                if end < at + 2 {
                    return None;
                }
                next = data[at];
                at += (data[at + 1] as usize + 2) * 4;
            }
            44 => {
                if end < at + 8 {
                    return None;
                }
                let off = u16::from_be_bytes([data[at + 2], data[at + 3]]) >> 3;
                if off != 0 {
                    return None;
                }
                fragment = true;
                next = data[at];
                at += 8;
            }
            _ => break,
        }
        if at > end {
            return None;
        }
    }
    let expected = (40 + payload_len).saturating_sub(at);
    decode_transport(next, &data[at..end], expected, src, dst, ts_nanos, short, fragment)
}

#[allow(clippy::too_many_arguments)]
fn decode_transport(
    proto: u8,
    data: &[u8],
    expected_len: usize,
    src: IpAddr,
    dst: IpAddr,
    ts_nanos: u64,
    short: bool,
    fragment: bool,
) -> Option<Segment> {
    match proto {
        6 => {
            if data.len() < 20 {
                return None;
            }
            let off = ((data[12] >> 4) as usize) * 4;
            if off < 20 || data.len() < off {
                return None;
            }
            let f = data[13];
            Some(Segment {
                ts_nanos,
                transport: Transport::Tcp,
                src,
                dst,
                src_port: u16::from_be_bytes([data[0], data[1]]),
                dst_port: u16::from_be_bytes([data[2], data[3]]),
                seq: u32::from_be_bytes(data[4..8].try_into().unwrap()),
                flags: TcpFlags {
                    fin: f & 0x01 != 0,
                    syn: f & 0x02 != 0,
                    rst: f & 0x04 != 0,
                    ack: f & 0x10 != 0,
                },
                payload: if fragment { Vec::new() } else { data[off..].to_vec() },
                short: short || data.len() < expected_len,
                fragment,
            })
        }
        17 => {
            if data.len() < 8 {
                return None;
            }
            let udp_len = u16::from_be_bytes([data[4], data[5]]) as usize;
            let end = if udp_len >= 8 { udp_len.min(data.len()) } else { data.len() };
            Some(Segment {
                ts_nanos,
                transport: Transport::Udp,
                src,
                dst,
                src_port: u16::from_be_bytes([data[0], data[1]]),
                dst_port: u16::from_be_bytes([data[2], data[3]]),
                seq: 0,
                flags: TcpFlags::default(),
                payload: if fragment { Vec::new() } else { data[8..end].to_vec() },
                short: short || data.len() < udp_len,
                fragment,
            })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ipv4_tcp(payload: &[u8], flags: u8) -> Vec<u8> {
        let total = 20 + 20 + payload.len();
        let mut p = vec![
            0x45, 0, (total >> 8) as u8, total as u8, 0, 0, 0x40, 0, 64, 6, 0, 0, 10, 0, 0, 1, 10,
            0, 0, 2,
        ];
        p.extend_from_slice(&[0x1f, 0x90, 0x01, 0xbb, 0, 0, 0, 100, 0, 0, 0, 0, 0x50, flags]);
        p.extend_from_slice(&[0xff, 0xff, 0, 0, 0, 0]);
        p.extend_from_slice(payload);
        p
    }

    fn eth(ethertype: u16, vlan: bool, inner: &[u8]) -> Vec<u8> {
        let mut f = vec![0u8; 12];
        if vlan {
            f.extend_from_slice(&[0x81, 0x00, 0x00, 0x05]);
        }
        f.extend_from_slice(&ethertype.to_be_bytes());
        f.extend_from_slice(inner);
        f
    }

    fn frame(link_type: LinkType, data: Vec<u8>) -> Frame {
        Frame {
            ts_nanos: 1,
            link_type,
            orig_len: data.len() as u32,
            data,
        }
    }

    #[test]
    fn ethernet_vlan_tcp() {
        let seg = decode_frame(&frame(
            LinkType::Ethernet,
            eth(0x0800, true, &ipv4_tcp(b"hello", 0x18)),
        ))
        .unwrap();
        assert_eq!(seg.transport, Transport::Tcp);
        assert_eq!((seg.src_port, seg.dst_port, seg.seq), (8080, 443, 100));
        assert_eq!(seg.payload, b"hello");
        assert!(seg.flags.ack && !seg.flags.syn);
        assert!(!seg.short);
    }

    #[test]
    fn raw_null_and_sll() {
        let ip = ipv4_tcp(b"x", 0x02);
        assert!(decode_frame(&frame(LinkType::Raw, ip.clone())).unwrap().flags.syn);
        let mut null = 2u32.to_le_bytes().to_vec();
        null.extend_from_slice(&ip);
        assert!(decode_frame(&frame(LinkType::Null, null)).is_some());
        let mut sll = vec![0u8; 14];
        sll.extend_from_slice(&[0x08, 0x00]);
        sll.extend_from_slice(&ip);
        assert_eq!(decode_frame(&frame(LinkType::LinuxSll, sll)).unwrap().payload, b"x");
    }

    #[test]
    fn snap_truncated_segment_is_short() {
        let ip = ipv4_tcp(b"0123456789", 0x18);
        let mut f = frame(LinkType::Raw, ip[..45].to_vec());
        f.orig_len = ip.len() as u32;
        let seg = decode_frame(&f).unwrap();
        assert!(seg.short);
        assert_eq!(seg.payload, b"01234");
    }

    #[test]
    fn fragments_are_flagged_or_dropped() {
        let mut ip = ipv4_tcp(b"abc", 0x18);
        ip[6] = 0x20; // MF
        let seg = decode_frame(&frame(LinkType::Raw, ip.clone())).unwrap();
        assert!(seg.fragment && seg.payload.is_empty());
        ip[6] = 0x00;
        ip[7] = 0x10; // non-zero offset
        assert!(decode_frame(&frame(LinkType::Raw, ip)).is_none());
    }

    #[test]
    fn ipv6_udp() {
        let mut p = vec![0x60, 0, 0, 0, 0, 12, 17, 64];
        p.extend_from_slice(&[0u8; 15]);
        p.push(1);
        p.extend_from_slice(&[0u8; 15]);
        p.push(2);
        p.extend_from_slice(&[0x30, 0x39, 0x01, 0xbb, 0, 12, 0, 0, 0xc0, 0xff, 0xee, 0x00]);
        let seg = decode_frame(&frame(LinkType::Ethernet, eth(0x86DD, false, &p))).unwrap();
        assert_eq!(seg.transport, Transport::Udp);
        assert_eq!(seg.payload, vec![0xc0, 0xff, 0xee, 0x00]);
        assert_eq!(seg.dst, "::2".parse::<IpAddr>().unwrap());
    }

    #[test]
    fn non_ip_is_ignored() {
        assert!(decode_frame(&frame(LinkType::Ethernet, eth(0x0806, false, &[0; 28]))).is_none());
        assert!(decode_frame(&frame(LinkType::Ethernet, vec![1, 2, 3])).is_none());
    }
}
