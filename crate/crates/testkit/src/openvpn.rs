//! OpenVPN TCP control-channel framing (no tls-auth / tls-crypt).

pub const HARD_RESET_CLIENT_V2: u8 = 7;
pub const HARD_RESET_SERVER_V2: u8 = 8;
pub const CONTROL_V1: u8 = 4;
pub const ACK_V1: u8 = 5;

/// One length-prefixed packet. `packet_id` is omitted for ACK packets.
pub fn packet(
    opcode: u8,
    session: [u8; 8],
    acks: &[u32],
    remote_session: [u8; 8],
    packet_id: Option<u32>,
    payload: &[u8],
) -> Vec<u8> {
    let mut b = vec![opcode << 3];
    b.extend_from_slice(&session);
    b.push(acks.len() as u8);
    for a in acks {
        b.extend_from_slice(&a.to_be_bytes());
    }
    if !acks.is_empty() {
        b.extend_from_slice(&remote_session);
    }
    if let Some(id) = packet_id {
        b.extend_from_slice(&id.to_be_bytes());
    }
    b.extend_from_slice(payload);
    let mut out = (b.len() as u16).to_be_bytes().to_vec();
    out.extend(b);
    out
}

/// Wrap a TLS byte stream into one direction of a control channel: hard
/// reset, then P_CONTROL_V1 packets of at most `chunk` TLS bytes. With
/// `reverse`, control packets are emitted in descending packet-id order.
pub fn wrap(tls: &[u8], client: bool, chunk: usize, reverse: bool) -> Vec<u8> {
    let (me, peer) = if client {
        ([0x11; 8], [0x22; 8])
    } else {
        ([0x22; 8], [0x11; 8])
    };
    let reset = if client {
        HARD_RESET_CLIENT_V2
    } else {
        HARD_RESET_SERVER_V2
    };
    let mut out = if client {
        packet(reset, me, &[], peer, Some(0), &[])
    } else {
        packet(reset, me, &[0], peer, Some(0), &[])
    };
    let mut ctl: Vec<Vec<u8>> = tls
        .chunks(chunk.max(1))
        .enumerate()
        .map(|(i, c)| {
            let id = i as u32 + 1;
            let acks: &[u32] = if i == 0 { &[0] } else { &[] };
            packet(CONTROL_V1, me, acks, peer, Some(id), c)
        })
        .collect();
    if reverse {
        ctl.reverse();
    }
    for c in ctl {
        out.extend(c);
    }
    out.extend(packet(ACK_V1, me, &[1], peer, None, &[]));
    out
}
