//! Link/IP/TCP/UDP frame encoders and capture file writers.

use std::net::IpAddr;

pub const LINKTYPE_ETHERNET: u32 = 1;
pub const LINKTYPE_RAW: u32 = 101;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub ts_micros: u64,
    pub link_type: u32,
    pub data: Vec<u8>,
}

pub const SYN: u8 = 0x02;
pub const ACK: u8 = 0x10;
pub const PSH: u8 = 0x08;
pub const FIN: u8 = 0x01;

fn checksum(data: &[u8]) -> u16 {
    let mut sum = 0u32;
    for c in data.chunks(2) {
        let w = if c.len() == 2 {
            u16::from_be_bytes([c[0], c[1]])
        } else {
            u16::from_be_bytes([c[0], 0])
        };
        sum += w as u32;
    }
    while sum > 0xFFFF {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    !(sum as u16)
}

pub fn tcp_segment(sport: u16, dport: u16, seq: u32, ack: u32, flags: u8, payload: &[u8]) -> Vec<u8> {
    let mut t = Vec::with_capacity(20 + payload.len());
    t.extend_from_slice(&sport.to_be_bytes());
    t.extend_from_slice(&dport.to_be_bytes());
    t.extend_from_slice(&seq.to_be_bytes());
    t.extend_from_slice(&ack.to_be_bytes());
    t.push(5 << 4);
    t.push(flags);
    t.extend_from_slice(&65535u16.to_be_bytes());
    t.extend_from_slice(&[0, 0, 0, 0]);
    t.extend_from_slice(payload);
    t
}

pub fn udp_datagram(sport: u16, dport: u16, payload: &[u8]) -> Vec<u8> {
    let mut u = Vec::with_capacity(8 + payload.len());
    u.extend_from_slice(&sport.to_be_bytes());
    u.extend_from_slice(&dport.to_be_bytes());
    u.extend_from_slice(&((8 + payload.len()) as u16).to_be_bytes());
    u.extend_from_slice(&[0, 0]);
    u.extend_from_slice(payload);
    u
}

/// IPv4 or IPv6 packet around a transport payload.
pub fn ip_packet(src: IpAddr, dst: IpAddr, proto: u8, transport: &[u8]) -> Vec<u8> {
    match (src, dst) {
        (IpAddr::V4(s), IpAddr::V4(d)) => {
            let total = 20 + transport.len();
            let mut h = vec![0x45, 0];
            h.extend_from_slice(&(total as u16).to_be_bytes());
            h.extend_from_slice(&[0x12, 0x34, 0x40, 0x00, 64, proto, 0, 0]);
            h.extend_from_slice(&s.octets());
            h.extend_from_slice(&d.octets());
            let c = checksum(&h);
            h[10..12].copy_from_slice(&c.to_be_bytes());
            h.extend_from_slice(transport);
            h
        }
        (IpAddr::V6(s), IpAddr::V6(d)) => {
            let mut h = vec![0x60, 0, 0, 0];
            h.extend_from_slice(&(transport.len() as u16).to_be_bytes());
            h.push(proto);
            h.push(64);
            h.extend_from_slice(&s.octets());
            h.extend_from_slice(&d.octets());
            h.extend_from_slice(transport);
            h
        }
        _ => panic!("mixed address families"),
    }
}

pub fn ethernet(ip: &[u8]) -> Vec<u8> {
    let ethertype: u16 = if ip[0] >> 4 == 6 { 0x86DD } else { 0x0800 };
    let mut f = vec![0x02, 0, 0, 0, 0, 0x02, 0x02, 0, 0, 0, 0, 0x01];
    f.extend_from_slice(&ethertype.to_be_bytes());
    f.extend_from_slice(ip);
    f
}

/// A TCP connection rendered as Ethernet frames: three-way handshake, the
/// client stream, the server stream, and a FIN from each side.
#[derive(Debug, Clone)]
pub struct TcpConversation {
    pub client: (IpAddr, u16),
    pub server: (IpAddr, u16),
    pub client_isn: u32,
    pub server_isn: u32,
    pub start_micros: u64,
    /// Maximum payload bytes per segment.
    pub mss: usize,
}

impl TcpConversation {
    pub fn new(client: (&str, u16), server: (&str, u16), start_micros: u64) -> Self {
        TcpConversation {
            client: (client.0.parse().unwrap(), client.1),
            server: (server.0.parse().unwrap(), server.1),
            client_isn: 1000,
            server_isn: 5000,
            start_micros,
            mss: 1400,
        }
    }

    fn frame(&self, from_client: bool, seq: u32, ack: u32, flags: u8, payload: &[u8]) -> Vec<u8> {
        let ((sip, sport), (dip, dport)) = if from_client {
            (self.client, self.server)
        } else {
            (self.server, self.client)
        };
        ethernet(&ip_packet(sip, dip, 6, &tcp_segment(sport, dport, seq, ack, flags, payload)))
    }

    /// Segments of `stream` cut at `cuts` (ascending offsets) and at `mss`.
    fn segments(&self, stream: &[u8], cuts: &[usize]) -> Vec<(usize, Vec<u8>)> {
        let mut bounds: Vec<usize> = cuts.iter().copied().filter(|&c| c > 0 && c < stream.len()).collect();
        let mut at = 0;
        while at + self.mss < stream.len() {
            at += self.mss;
            bounds.push(at);
        }
        bounds.push(stream.len());
        bounds.sort_unstable();
        bounds.dedup();
        let mut out = Vec::new();
        let mut start = 0;
        for b in bounds {
            if b > start {
                out.push((start, stream[start..b].to_vec()));
                start = b;
            }
        }
        out
    }

    pub fn packets(&self, client: &[u8], server: &[u8]) -> Vec<Packet> {
        self.packets_with_cuts(client, &[], server, &[])
    }

    /// As `packets`, with extra segment boundaries per direction.
    pub fn packets_with_cuts(
        &self,
        client: &[u8],
        client_cuts: &[usize],
        server: &[u8],
        server_cuts: &[usize],
    ) -> Vec<Packet> {
        let c0 = self.client_isn;
        let s0 = self.server_isn;
        let mut raw: Vec<Vec<u8>> = vec![
            self.frame(true, c0, 0, SYN, &[]),
            self.frame(false, s0, c0 + 1, SYN | ACK, &[]),
            self.frame(true, c0 + 1, s0 + 1, ACK, &[]),
        ];
        for (off, seg) in self.segments(client, client_cuts) {
            raw.push(self.frame(true, c0 + 1 + off as u32, s0 + 1, ACK | PSH, &seg));
        }
        for (off, seg) in self.segments(server, server_cuts) {
            let ack = c0 + 1 + client.len() as u32;
            raw.push(self.frame(false, s0 + 1 + off as u32, ack, ACK | PSH, &seg));
        }
        let cfin = c0 + 1 + client.len() as u32;
        let sfin = s0 + 1 + server.len() as u32;
        raw.push(self.frame(true, cfin, sfin, FIN | ACK, &[]));
        raw.push(self.frame(false, sfin, cfin + 1, FIN | ACK, &[]));
        raw.into_iter()
            .enumerate()
            .map(|(i, data)| Packet {
                ts_micros: self.start_micros + i as u64 * 100,
                link_type: LINKTYPE_ETHERNET,
                data,
            })
            .collect()
    }
}

/// UDP datagrams as Ethernet frames; `true` marks client-to-server.
pub fn udp_packets(
    client: (&str, u16),
    server: (&str, u16),
    start_micros: u64,
    datagrams: &[(bool, Vec<u8>)],
) -> Vec<Packet> {
    let c: IpAddr = client.0.parse().unwrap();
    let s: IpAddr = server.0.parse().unwrap();
    datagrams
        .iter()
        .enumerate()
        .map(|(i, (to_server, payload))| {
            let (sip, sport, dip, dport) = if *to_server {
                (c, client.1, s, server.1)
            } else {
                (s, server.1, c, client.1)
            };
            Packet {
                ts_micros: start_micros + i as u64 * 100,
                link_type: LINKTYPE_ETHERNET,
                data: ethernet(&ip_packet(sip, dip, 17, &udp_datagram(sport, dport, payload))),
            }
        })
        .collect()
}

/// Classic pcap, little-endian, microsecond timestamps, single link type.
pub fn pcap(packets: &[Packet]) -> Vec<u8> {
    let link = packets.first().map(|p| p.link_type).unwrap_or(LINKTYPE_ETHERNET);
    let mut out = Vec::new();
    out.extend_from_slice(&0xA1B2_C3D4u32.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&262_144u32.to_le_bytes());
    out.extend_from_slice(&link.to_le_bytes());
    for p in packets {
        assert_eq!(p.link_type, link, "pcap holds one link type");
        out.extend_from_slice(&((p.ts_micros / 1_000_000) as u32).to_le_bytes());
        out.extend_from_slice(&((p.ts_micros % 1_000_000) as u32).to_le_bytes());
        out.extend_from_slice(&(p.data.len() as u32).to_le_bytes());
        out.extend_from_slice(&(p.data.len() as u32).to_le_bytes());
        out.extend_from_slice(&p.data);
    }
    out
}

fn block(ty: u32, body: &[u8]) -> Vec<u8> {
    let padded = (body.len() + 3) & !3;
    let total = (12 + padded) as u32;
    let mut b = ty.to_le_bytes().to_vec();
    b.extend_from_slice(&total.to_le_bytes());
    b.extend_from_slice(body);
    b.resize(8 + padded, 0);
    b.extend_from_slice(&total.to_le_bytes());
    b
}

/// pcapng, little-endian, default microsecond resolution, one interface per
/// link type, with a custom block in between that readers must skip.
pub fn pcapng(packets: &[Packet]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut shb = 0x1A2B_3C4Du32.to_le_bytes().to_vec();
    shb.extend_from_slice(&1u16.to_le_bytes());
    shb.extend_from_slice(&0u16.to_le_bytes());
    shb.extend_from_slice(&(-1i64).to_le_bytes());
    out.extend(block(0x0A0D_0D0A, &shb));
    let mut interfaces: Vec<u32> = Vec::new();
    for p in packets {
        if !interfaces.contains(&p.link_type) {
            interfaces.push(p.link_type);
            let mut idb = (p.link_type as u16).to_le_bytes().to_vec();
            idb.extend_from_slice(&0u16.to_le_bytes());
            idb.extend_from_slice(&0u32.to_le_bytes());
            out.extend(block(1, &idb));
            out.extend(block(0x0000_0BAD, b"skip me"));
        }
    }
    for p in packets {
        let iface = interfaces.iter().position(|&l| l == p.link_type).unwrap() as u32;
        let mut epb = iface.to_le_bytes().to_vec();
        epb.extend_from_slice(&((p.ts_micros >> 32) as u32).to_le_bytes());
        epb.extend_from_slice(&(p.ts_micros as u32).to_le_bytes());
        epb.extend_from_slice(&(p.data.len() as u32).to_le_bytes());
        epb.extend_from_slice(&(p.data.len() as u32).to_le_bytes());
        epb.extend_from_slice(&p.data);
        epb.resize((epb.len() + 3) & !3, 0);
        out.extend(block(6, &epb));
    }
    out
}
