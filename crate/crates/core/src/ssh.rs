//! SSH transport layer before NEWKEYS: identification strings, KEXINIT
//! name-lists and the ECDH/KEM init and reply messages.

use serde::Serialize;
use thiserror::Error;

use crate::wire::Reader;

pub const SSH_MSG_KEXINIT: u8 = 20;
pub const SSH_MSG_NEWKEYS: u8 = 21;
pub const SSH_MSG_KEX_ECDH_INIT: u8 = 30;
pub const SSH_MSG_KEX_ECDH_REPLY: u8 = 31;

const MAX_PACKET: usize = 256 * 1024;
const MAX_PREBANNER: usize = 8192;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SshError {
    #[error("not an SSH stream")]
    NotSsh,
    #[error("malformed packet: {0}")]
    MalformedPacket(String),
    #[error("malformed name-list")]
    MalformedNameList,
    #[error("malformed key exchange body")]
    MalformedBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SshSide {
    Client,
    Server,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Banner {
    pub proto_version: String,
    pub software_version: String,
    pub comments: Option<String>,
}

/// Find the identification line and return it with the bytes that follow.
/// Lines before it are skipped.
pub fn parse_banner(stream: &[u8]) -> Result<(Banner, &[u8]), SshError> {
    let mut at = 0;
    while at < stream.len() && at <= MAX_PREBANNER {
        let (line, next) = match stream[at..].iter().position(|&b| b == b'\n') {
            Some(i) => (&stream[at..at + i], at + i + 1),
            None => (&stream[at..], stream.len()),
        };
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        if let Some(rest) = line.strip_prefix(b"SSH-") {
            let text = std::str::from_utf8(rest).map_err(|_| SshError::NotSsh)?;
            let (proto, rest) = text.split_once('-').ok_or(SshError::NotSsh)?;
            if proto != "2.0" && proto != "1.99" {
                return Err(SshError::NotSsh);
            }
            let (software, comments) = match rest.split_once(' ') {
                Some((s, c)) => (s, Some(c.to_owned())),
                None => (rest, None),
            };
            if software.is_empty() {
                return Err(SshError::NotSsh);
            }
            return Ok((
                Banner {
                    proto_version: proto.to_owned(),
                    software_version: software.to_owned(),
                    comments,
                },
                &stream[next..],
            ));
        }
        if line.iter().any(|&b| b < 0x20 && b != b'\t') {
            return Err(SshError::NotSsh);
        }
        at = next;
    }
    Err(SshError::NotSsh)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SshPacket {
    pub msg_type: u8,
    /// Payload after the message type byte.
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SshPackets {
    pub packets: Vec<SshPacket>,
    /// The stream ended inside a packet.
    pub truncated: bool,
}

/// Unencrypted binary packets up to and including the first NEWKEYS.
pub fn parse_binary_packets(stream: &[u8]) -> Result<SshPackets, SshError> {
    let mut packets = Vec::new();
    let mut r = Reader::new(stream);
    while !r.is_empty() {
        let Ok(len) = r.u32() else {
            return Ok(SshPackets { packets, truncated: true });
        };
        let len = len as usize;
        if len == 0 || len > MAX_PACKET {
            return Err(SshError::MalformedPacket(format!("packet_length {len}")));
        }
        let Ok(body) = r.bytes(len) else {
            return Ok(SshPackets { packets, truncated: true });
        };
        let padding = body[0] as usize;
        if padding + 1 >= len {
            return Err(SshError::MalformedPacket(format!(
                "padding_length {padding} with packet_length {len}"
            )));
        }
        let payload = &body[1..len - padding];
        let msg_type = payload[0];
        packets.push(SshPacket {
            msg_type,
            payload: payload[1..].to_vec(),
        });
        if msg_type == SSH_MSG_NEWKEYS {
            break;
        }
    }
    Ok(SshPackets { packets, truncated: false })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SshKexInitSummary {
    pub side: SshSide,
    pub kex_algorithms: Vec<String>,
    pub host_key_algorithms: Vec<String>,
}

fn name_list(r: &mut Reader<'_>) -> Result<Vec<String>, SshError> {
    let raw = r.vec32().map_err(|_| SshError::MalformedNameList)?;
    let text = std::str::from_utf8(raw).map_err(|_| SshError::MalformedNameList)?;
    Ok(text
        .split(',')
        .filter(|n| !n.is_empty())
        .map(str::to_owned)
        .collect())
}

/// KEXINIT payload (after the message type): cookie, then name-lists.
pub fn parse_kexinit(payload: &[u8], side: SshSide) -> Result<SshKexInitSummary, SshError> {
    let mut r = Reader::new(payload);
    r.bytes(16).map_err(|_| SshError::MalformedNameList)?;
    let kex_algorithms = name_list(&mut r)?;
    let host_key_algorithms = name_list(&mut r)?;
    Ok(SshKexInitSummary {
        side,
        kex_algorithms,
        host_key_algorithms,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SshKexDhSummary {
    pub msg_type: u8,
    pub public_value_len: usize,
    pub reply_hostkey_len: Option<usize>,
}

/// KEX init (Q_C) or reply (K_S, Q_S, signature) body lengths.
pub fn parse_kex_dh(payload: &[u8], msg_type: u8) -> Result<SshKexDhSummary, SshError> {
    let mut r = Reader::new(payload);
    match msg_type {
        SSH_MSG_KEX_ECDH_INIT => {
            let q_c = r.vec32().map_err(|_| SshError::MalformedBody)?;
            Ok(SshKexDhSummary {
                msg_type,
                public_value_len: q_c.len(),
                reply_hostkey_len: None,
            })
        }
        SSH_MSG_KEX_ECDH_REPLY => {
            let k_s = r.vec32().map_err(|_| SshError::MalformedBody)?;
            let q_s = r.vec32().map_err(|_| SshError::MalformedBody)?;
            r.vec32().map_err(|_| SshError::MalformedBody)?;
            Ok(SshKexDhSummary {
                msg_type,
                public_value_len: q_s.len(),
                reply_hostkey_len: Some(k_s.len()),
            })
        }
        _ => Err(SshError::MalformedBody),
    }
}

/// The first client algorithm that the server also lists.
pub fn negotiate(client: &[String], server: &[String]) -> Option<String> {
    client.iter().find(|c| server.contains(c)).cloned()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SshFacts {
    pub client_banner: Option<Banner>,
    pub server_banner: Option<Banner>,
    pub client_kexinit: Option<SshKexInitSummary>,
    pub server_kexinit: Option<SshKexInitSummary>,
    pub negotiated_kex: Option<String>,
    pub init: Option<SshKexDhSummary>,
    pub reply: Option<SshKexDhSummary>,
    pub notes: Vec<String>,
}

fn side_packets(stream: &[u8], side: SshSide, facts: &mut SshFacts) {
    let who = match side {
        SshSide::Client => "client",
        SshSide::Server => "server",
    };
    let (banner, rest) = match parse_banner(stream) {
        Ok(b) => b,
        Err(e) => {
            if !stream.is_empty() {
                facts.notes.push(format!("{who}: {e}"));
            }
            return;
        }
    };
    match side {
        SshSide::Client => facts.client_banner = Some(banner),
        SshSide::Server => facts.server_banner = Some(banner),
    }
    let packets = match parse_binary_packets(rest) {
        Ok(p) => p,
        Err(e) => {
            facts.notes.push(format!("{who}: {e}"));
            return;
        }
    };
    if packets.truncated {
        facts.notes.push(format!("{who}: stream ends inside a packet"));
    }
    for p in &packets.packets {
        let result = match p.msg_type {
            SSH_MSG_KEXINIT => parse_kexinit(&p.payload, side).map(|k| match side {
                SshSide::Client => facts.client_kexinit = facts.client_kexinit.take().or(Some(k)),
                SshSide::Server => facts.server_kexinit = facts.server_kexinit.take().or(Some(k)),
            }),
            SSH_MSG_KEX_ECDH_INIT if side == SshSide::Client && facts.init.is_none() => {
                parse_kex_dh(&p.payload, p.msg_type).map(|s| facts.init = Some(s))
            }
            SSH_MSG_KEX_ECDH_REPLY if side == SshSide::Server && facts.reply.is_none() => {
                parse_kex_dh(&p.payload, p.msg_type).map(|s| facts.reply = Some(s))
            }
            _ => Ok(()),
        };
        if let Err(e) = result {
            facts.notes.push(format!("{who}: {e}"));
        }
    }
}

/// Dissect both directions of an SSH connection.
pub fn dissect_streams(client: &[u8], server: &[u8]) -> SshFacts {
    let mut facts = SshFacts::default();
    side_packets(client, SshSide::Client, &mut facts);
    side_packets(server, SshSide::Server, &mut facts);
    if let (Some(c), Some(s)) = (&facts.client_kexinit, &facts.server_kexinit) {
        facts.negotiated_kex = negotiate(&c.kex_algorithms, &s.kex_algorithms);
        if facts.negotiated_kex.is_none() {
            facts.notes.push("no common key exchange algorithm".into());
        }
    }
    facts
}
