//! Bidirectional flow grouping and per-direction TCP reassembly.

use std::collections::BTreeMap;
use std::fmt;
use std::net::{IpAddr, SocketAddr};

use serde::Serialize;

pub use super::decode::Transport;
use super::decode::{decode_frame, Segment};
use super::Frame;
use crate::reassembly::ByteAssembler;

/// Canonical bidirectional flow identifier: endpoint `a` is the smaller of
/// the two `(ip, port)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FlowKey {
    pub ip_a: IpAddr,
    pub port_a: u16,
    pub ip_b: IpAddr,
    pub port_b: u16,
    pub transport: Transport,
}

impl Serialize for Transport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            Transport::Tcp => "tcp",
            Transport::Udp => "udp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

impl FlowKey {
    pub fn new(
        src: IpAddr,
        src_port: u16,
        dst: IpAddr,
        dst_port: u16,
        transport: Transport,
    ) -> (FlowKey, Side) {
        if (src, src_port) <= (dst, dst_port) {
            (
                FlowKey {
                    ip_a: src,
                    port_a: src_port,
                    ip_b: dst,
                    port_b: dst_port,
                    transport,
                },
                Side::A,
            )
        } else {
            (
                FlowKey {
                    ip_a: dst,
                    port_a: dst_port,
                    ip_b: src,
                    port_b: src_port,
                    transport,
                },
                Side::B,
            )
        }
    }

    pub fn endpoint(&self, side: Side) -> SocketAddr {
        match side {
            Side::A => SocketAddr::new(self.ip_a, self.port_a),
            Side::B => SocketAddr::new(self.ip_b, self.port_b),
        }
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} <-> {}",
            self.endpoint(Side::A),
            self.endpoint(Side::B)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datagram {
    pub ts_nanos: u64,
    pub data: Vec<u8>,
}

/// One direction of a flow: reassembled bytes for TCP, datagrams for UDP.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Direction {
    pub stream: Vec<u8>,
    pub datagrams: Vec<Datagram>,
    pub truncated: bool,
    pub packets: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowData {
    pub key: FlowKey,
    /// Traffic sent from endpoint a to endpoint b.
    pub dir_ab: Direction,
    pub dir_ba: Direction,
    pub first_ts: u64,
    pub last_ts: u64,
    pub truncated: bool,
    /// The endpoint that opened the flow (SYN sender, else first sender).
    pub initiator: Side,
}

impl FlowData {
    /// Data sent by `side`.
    pub fn sent_by(&self, side: Side) -> &Direction {
        match side {
            Side::A => &self.dir_ab,
            Side::B => &self.dir_ba,
        }
    }
}

#[derive(Default)]
struct TcpDir {
    segments: Vec<(u32, Vec<u8>)>,
    syn_seq: Option<u32>,
    short: bool,
}

impl TcpDir {
    fn reassemble(self) -> (Vec<u8>, bool) {
        let base = match self.syn_seq {
            Some(isn) => isn.wrapping_add(1),
            None => {
                let Some(&(reference, _)) = self.segments.first() else {
                    return (Vec::new(), self.short);
                };
                let min = self
                    .segments
                    .iter()
                    .map(|(seq, _)| seq.wrapping_sub(reference) as i32)
                    .min()
                    .unwrap_or(0);
                reference.wrapping_add(min as u32)
            }
        };
        let mut asm = ByteAssembler::new();
        for (seq, data) in &self.segments {
            let rel = seq.wrapping_sub(base) as i32 as i64;
            if rel < 0 {
                let skip = (-rel) as usize;
                if skip < data.len() {
                    asm.insert(0, &data[skip..]);
                }
            } else {
                asm.insert(rel as u64, data);
            }
        }
        let (bytes, gap) = asm.contiguous_from(0);
        (bytes, gap || self.short)
    }
}

struct Pending {
    key: FlowKey,
    first_ts: u64,
    last_ts: u64,
    initiator: Side,
    saw_syn: bool,
    fragmented: bool,
    tcp: [TcpDir; 2],
    udp: [Vec<Datagram>; 2],
    packets: [usize; 2],
}

fn idx(side: Side) -> usize {
    match side {
        Side::A => 0,
        Side::B => 1,
    }
}

/// Group frames into flows. TCP payloads are ordered by sequence number
/// and deduplicated; a sequence gap truncates the stream at the gap. UDP
/// datagrams stay in capture order.
pub fn assemble_flows(frames: &[Frame]) -> BTreeMap<FlowKey, FlowData> {
    let segments = frames.iter().filter_map(decode_frame);
    assemble_segments(segments)
}

pub(crate) fn assemble_segments(
    segments: impl IntoIterator<Item = Segment>,
) -> BTreeMap<FlowKey, FlowData> {
    let mut pending: BTreeMap<FlowKey, Pending> = BTreeMap::new();
    for seg in segments {
        let (key, side) = FlowKey::new(seg.src, seg.src_port, seg.dst, seg.dst_port, seg.transport);
        let p = pending.entry(key).or_insert_with(|| Pending {
            key,
            first_ts: seg.ts_nanos,
            last_ts: seg.ts_nanos,
            initiator: side,
            saw_syn: false,
            fragmented: false,
            tcp: [TcpDir::default(), TcpDir::default()],
            udp: [Vec::new(), Vec::new()],
            packets: [0, 0],
        });
        p.first_ts = p.first_ts.min(seg.ts_nanos);
        p.last_ts = p.last_ts.max(seg.ts_nanos);
        p.packets[idx(side)] += 1;
        if seg.fragment {
            p.fragmented = true;
            p.tcp[idx(side)].short = true;
            continue;
        }
        match seg.transport {
            Transport::Tcp => {
                let dir = &mut p.tcp[idx(side)];
                if seg.flags.syn {
                    dir.syn_seq = Some(seg.seq);
                    if !seg.flags.ack && !p.saw_syn {
                        p.initiator = side;
                        p.saw_syn = true;
                    }
                }
                let data_seq = if seg.flags.syn { seg.seq.wrapping_add(1) } else { seg.seq };
                if seg.short {
                    dir.short = true;
                }
                if !seg.payload.is_empty() {
                    dir.segments.push((data_seq, seg.payload));
                }
            }
            Transport::Udp => {
                p.udp[idx(side)].push(Datagram {
                    ts_nanos: seg.ts_nanos,
                    data: seg.payload,
                });
            }
        }
    }

    pending
        .into_iter()
        .map(|(key, p)| {
            let Pending {
                tcp: [tcp_a, tcp_b],
                udp: [udp_a, udp_b],
                ..
            } = p;
            let mut dirs = [(tcp_a, udp_a), (tcp_b, udp_b)].map(|(tcp, udp)| {
                let (stream, truncated) = if key.transport == Transport::Tcp {
                    tcp.reassemble()
                } else {
                    (Vec::new(), false)
                };
                Direction {
                    stream,
                    datagrams: udp,
                    truncated,
                    packets: 0,
                }
            });
            dirs[0].packets = p.packets[0];
            dirs[1].packets = p.packets[1];
            let [dir_ab, dir_ba] = dirs;
            let truncated = p.fragmented || dir_ab.truncated || dir_ba.truncated;
            (
                key,
                FlowData {
                    key: p.key,
                    dir_ab,
                    dir_ba,
                    first_ts: p.first_ts,
                    last_ts: p.last_ts,
                    truncated,
                    initiator: p.initiator,
                },
            )
        })
        .collect()
}
