//! OpenVPN over TCP: recover the TLS byte stream carried by P_CONTROL_V1
//! packets on a control channel without tls-auth or tls-crypt.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpenVpnError {
    #[error("not an OpenVPN control channel")]
    NotOpenVPN,
    #[error("control channel payload is not TLS (tls-auth or tls-crypt in use?)")]
    EncryptedControlChannel,
}

pub const P_CONTROL_HARD_RESET_CLIENT_V1: u8 = 1;
pub const P_CONTROL_HARD_RESET_SERVER_V1: u8 = 2;
pub const P_CONTROL_SOFT_RESET_V1: u8 = 3;
pub const P_CONTROL_V1: u8 = 4;
pub const P_ACK_V1: u8 = 5;
pub const P_DATA_V1: u8 = 6;
pub const P_CONTROL_HARD_RESET_CLIENT_V2: u8 = 7;
pub const P_CONTROL_HARD_RESET_SERVER_V2: u8 = 8;
pub const P_DATA_V2: u8 = 9;
pub const P_CONTROL_HARD_RESET_CLIENT_V3: u8 = 10;
pub const P_CONTROL_WKC_V1: u8 = 11;

fn is_hard_reset(op: u8) -> bool {
    matches!(
        op,
        P_CONTROL_HARD_RESET_CLIENT_V1
            | P_CONTROL_HARD_RESET_SERVER_V1
            | P_CONTROL_HARD_RESET_CLIENT_V2
            | P_CONTROL_HARD_RESET_SERVER_V2
            | P_CONTROL_HARD_RESET_CLIENT_V3
    )
}

/// Split the stream into length-prefixed packets. A trailing partial packet
/// is dropped.
fn packets(stream: &[u8]) -> Vec<&[u8]> {
    let mut out = Vec::new();
    let mut at = 0;
    while stream.len() >= at + 2 {
        let len = u16::from_be_bytes([stream[at], stream[at + 1]]) as usize;
        if stream.len() < at + 2 + len {
            break;
        }
        out.push(&stream[at + 2..at + 2 + len]);
        at += 2 + len;
    }
    out
}

/// Control packet body after the opcode byte: session id, ack array,
/// optional remote session id, message packet id, payload.
fn control_payload(pkt: &[u8]) -> Option<(u32, &[u8])> {
    let mut at = 1 + 8;
    let acks = *pkt.get(at)? as usize;
    at += 1 + acks * 4;
    if acks > 0 {
        at += 8;
    }
    let id = pkt.get(at..at + 4)?;
    let id = u32::from_be_bytes(id.try_into().unwrap());
    Some((id, &pkt[at + 4..]))
}

/// Concatenate P_CONTROL_V1 payloads in message packet-id order. Output stops
/// at the first missing packet id; the first copy of a retransmitted id wins.
pub fn deframe_openvpn_tcp(stream: &[u8]) -> Result<Vec<u8>, OpenVpnError> {
    let pkts = packets(stream);
    let first = pkts.first().ok_or(OpenVpnError::NotOpenVPN)?;
    if first.is_empty() || !is_hard_reset(first[0] >> 3) || first.len() < 9 {
        return Err(OpenVpnError::NotOpenVPN);
    }
    let mut by_id: BTreeMap<u32, &[u8]> = BTreeMap::new();
    for pkt in &pkts {
        let Some(&b0) = pkt.first() else {
            return Err(OpenVpnError::NotOpenVPN);
        };
        let op = b0 >> 3;
        if !(1..=11).contains(&op) {
            return Err(OpenVpnError::NotOpenVPN);
        }
        if op != P_CONTROL_V1 {
            continue;
        }
        let (id, payload) = control_payload(pkt).ok_or(OpenVpnError::NotOpenVPN)?;
        by_id.entry(id).or_insert(payload);
    }

    let mut out = Vec::new();
    let mut expect = by_id.keys().next().copied().unwrap_or(0);
    for (&id, payload) in &by_id {
        if id != expect {
            break;
        }
        out.extend_from_slice(payload);
        expect = id.wrapping_add(1);
    }
    if !out.is_empty() && !(out.len() >= 2 && out[0] == 0x16 && out[1] == 0x03) {
        return Err(OpenVpnError::EncryptedControlChannel);
    }
    Ok(out)
}
