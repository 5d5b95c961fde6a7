//! TLS record and handshake message encoders.

use crate::filler;

pub const HRR_RANDOM: [u8; 32] = [
    0xCF, 0x21, 0xAD, 0x74, 0xE5, 0x9A, 0x61, 0x11, 0xBE, 0x1D, 0x8C, 0x02, 0x1E, 0x65, 0xB8,
    0x91, 0xC2, 0xA2, 0x11, 0x16, 0x7A, 0xBB, 0x8C, 0x5E, 0x07, 0x9E, 0x09, 0xE2, 0xC8, 0xA8,
    0x33, 0x9C,
];

fn u16be(v: usize) -> [u8; 2] {
    (v as u16).to_be_bytes()
}

fn ext(ty: u16, body: &[u8]) -> Vec<u8> {
    let mut v = ty.to_be_bytes().to_vec();
    v.extend_from_slice(&u16be(body.len()));
    v.extend_from_slice(body);
    v
}

fn list16(values: &[u16]) -> Vec<u8> {
    let mut v = u16be(values.len() * 2).to_vec();
    for x in values {
        v.extend_from_slice(&x.to_be_bytes());
    }
    v
}

/// Handshake message: type, 24-bit length, body.
pub fn handshake(msg_type: u8, body: &[u8]) -> Vec<u8> {
    let mut m = vec![msg_type];
    m.extend_from_slice(&(body.len() as u32).to_be_bytes()[1..]);
    m.extend_from_slice(body);
    m
}

pub fn record(content_type: u8, payload: &[u8]) -> Vec<u8> {
    let mut r = vec![content_type, 0x03, 0x03];
    r.extend_from_slice(&u16be(payload.len()));
    r.extend_from_slice(payload);
    r
}

/// Wrap `payload` in records of at most `max` bytes each.
pub fn records(content_type: u8, payload: &[u8], max: usize) -> Vec<u8> {
    payload.chunks(max.max(1)).flat_map(|c| record(content_type, c)).collect()
}

/// Wrap `payload` in records split at the given ascending cut offsets.
pub fn records_at(content_type: u8, payload: &[u8], cuts: &[usize]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut start = 0;
    for &c in cuts.iter().chain(std::iter::once(&payload.len())) {
        if c > start && c <= payload.len() {
            out.extend(record(content_type, &payload[start..c]));
            start = c;
        }
    }
    out
}

pub fn change_cipher_spec() -> Vec<u8> {
    record(20, &[1])
}

/// Opaque application-data record standing in for encrypted traffic.
pub fn encrypted(len: usize, seed: u64) -> Vec<u8> {
    record(23, &filler(len, seed))
}

#[derive(Debug, Clone)]
pub struct ClientHello {
    pub random: [u8; 32],
    pub session_id: Vec<u8>,
    pub suites: Vec<u16>,
    pub sni: Option<String>,
    pub groups: Vec<u16>,
    /// (group, share length); the share bytes are filler.
    pub key_shares: Vec<(u16, usize)>,
    /// Advertise TLS 1.3 in supported_versions.
    pub tls13: bool,
    /// Insert GREASE values into the lists.
    pub grease: bool,
    pub psk: bool,
}

impl Default for ClientHello {
    fn default() -> Self {
        ClientHello {
            random: [0x42; 32],
            session_id: vec![0x33; 32],
            suites: vec![0x1301, 0x1302, 0xC02F, 0xC030],
            sni: Some("example.com".into()),
            groups: vec![0x001D, 0x0017],
            key_shares: vec![(0x001D, 32)],
            tls13: true,
            grease: false,
            psk: false,
        }
    }
}

impl ClientHello {
    pub fn body(&self) -> Vec<u8> {
        let g = |list: &[u16], val: u16| -> Vec<u16> {
            let mut v = list.to_vec();
            if self.grease {
                v.insert(0, val);
            }
            v
        };
        let mut b = vec![3, 3];
        b.extend_from_slice(&self.random);
        b.push(self.session_id.len() as u8);
        b.extend_from_slice(&self.session_id);
        b.extend(list16(&g(&self.suites, 0x5A5A)));
        b.extend_from_slice(&[1, 0]);

        let mut e = Vec::new();
        if self.grease {
            e.extend(ext(0x8A8A, &[]));
        }
        if let Some(name) = &self.sni {
            let mut entry = vec![0];
            entry.extend_from_slice(&u16be(name.len()));
            entry.extend_from_slice(name.as_bytes());
            let mut l = u16be(entry.len()).to_vec();
            l.extend(entry);
            e.extend(ext(0, &l));
        }
        e.extend(ext(11, &[1, 0]));
        if !self.groups.is_empty() {
            e.extend(ext(10, &list16(&g(&self.groups, 0x1A1A))));
        }
        e.extend(ext(13, &list16(&[0x0403, 0x0804, 0x0401])));
        if self.tls13 {
            let versions = g(&[0x0304, 0x0303], 0x3A3A);
            let mut v = vec![(versions.len() * 2) as u8];
            for x in versions {
                v.extend_from_slice(&x.to_be_bytes());
            }
            e.extend(ext(43, &v));
            e.extend(ext(45, &[1, 1]));
            let mut shares = Vec::new();
            if self.grease {
                shares.extend_from_slice(&[0x1A, 0x1A, 0, 1, 0]);
            }
            for (i, &(group, len)) in self.key_shares.iter().enumerate() {
                shares.extend_from_slice(&group.to_be_bytes());
                shares.extend_from_slice(&u16be(len));
                shares.extend(filler(len, 100 + i as u64));
            }
            let mut ks = u16be(shares.len()).to_vec();
            ks.extend(shares);
            e.extend(ext(51, &ks));
        }
        if self.psk {
            // identities: one 16-byte identity + age; binders: one 32-byte binder
            let mut ids = u16be(16).to_vec();
            ids.extend_from_slice(&[7; 16]);
            ids.extend_from_slice(&[0, 0, 0, 1]);
            let mut body = u16be(ids.len()).to_vec();
            body.extend(ids);
            body.extend_from_slice(&u16be(33));
            body.push(32);
            body.extend_from_slice(&[9; 32]);
            e.extend(ext(41, &body));
        }
        b.extend_from_slice(&u16be(e.len()));
        b.extend(e);
        b
    }

    pub fn message(&self) -> Vec<u8> {
        handshake(1, &self.body())
    }
}

fn server_hello_body(
    random: [u8; 32],
    session_id: &[u8],
    suite: u16,
    exts: &[u8],
) -> Vec<u8> {
    let mut b = vec![3, 3];
    b.extend_from_slice(&random);
    b.push(session_id.len() as u8);
    b.extend_from_slice(session_id);
    b.extend_from_slice(&suite.to_be_bytes());
    b.push(0);
    if !exts.is_empty() {
        b.extend_from_slice(&u16be(exts.len()));
        b.extend_from_slice(exts);
    }
    b
}

/// TLS 1.3 ServerHello selecting `group` with a share of `share_len` bytes.
pub fn server_hello_13(group: u16, share_len: usize) -> Vec<u8> {
    let mut ks = group.to_be_bytes().to_vec();
    ks.extend_from_slice(&u16be(share_len));
    ks.extend(filler(share_len, 7));
    let mut e = ext(43, &[3, 4]);
    e.extend(ext(51, &ks));
    handshake(2, &server_hello_body([0x24; 32], &[0x33; 32], 0x1301, &e))
}

/// TLS 1.3 ServerHello accepting a PSK without a key share.
pub fn server_hello_13_psk_only() -> Vec<u8> {
    let mut e = ext(43, &[3, 4]);
    e.extend(ext(41, &[0, 0]));
    handshake(2, &server_hello_body([0x25; 32], &[0x33; 32], 0x1301, &e))
}

/// HelloRetryRequest naming `group`.
pub fn hello_retry_request(group: u16) -> Vec<u8> {
    let mut e = ext(43, &[3, 4]);
    e.extend(ext(51, &group.to_be_bytes()));
    handshake(2, &server_hello_body(HRR_RANDOM, &[0x33; 32], 0x1301, &e))
}

/// TLS 1.2 ServerHello.
pub fn server_hello_12(suite: u16) -> Vec<u8> {
    let e = ext(0xFF01, &[0]);
    handshake(2, &server_hello_body([0x26; 32], &[0x44; 32], suite, &e))
}

pub fn certificate(cert_len: usize) -> Vec<u8> {
    let cert = filler(cert_len, 11);
    let mut entry = (cert.len() as u32).to_be_bytes()[1..].to_vec();
    entry.extend(cert);
    let mut body = (entry.len() as u32).to_be_bytes()[1..].to_vec();
    body.extend(entry);
    handshake(11, &body)
}

/// ECDHE ServerKeyExchange with a named curve.
pub fn server_key_exchange_ecdhe(curve: u16, point_len: usize) -> Vec<u8> {
    let mut b = vec![3];
    b.extend_from_slice(&curve.to_be_bytes());
    b.push(point_len as u8);
    b.extend(filler(point_len, 13));
    b.extend_from_slice(&[0x04, 0x01]);
    b.extend_from_slice(&u16be(256));
    b.extend(filler(256, 14));
    handshake(12, &b)
}

/// DHE ServerKeyExchange with a `p_len`-byte prime and `ys_len`-byte Ys.
pub fn server_key_exchange_dhe(p_len: usize, ys_len: usize) -> Vec<u8> {
    let mut b = u16be(p_len).to_vec();
    b.extend(filler(p_len, 15));
    b.extend_from_slice(&[0, 1, 2]);
    b.extend_from_slice(&u16be(ys_len));
    b.extend(filler(ys_len, 16));
    b.extend_from_slice(&[0x04, 0x01, 0, 4, 1, 2, 3, 4]);
    handshake(12, &b)
}

pub fn server_hello_done() -> Vec<u8> {
    handshake(14, &[])
}

/// ClientKeyExchange with a 1-byte (ECDHE) length prefix.
pub fn client_key_exchange_ecdhe(len: usize) -> Vec<u8> {
    let mut b = vec![len as u8];
    b.extend(filler(len, 17));
    handshake(16, &b)
}

/// ClientKeyExchange with a 2-byte (DHE or RSA) length prefix.
pub fn client_key_exchange_2(len: usize) -> Vec<u8> {
    let mut b = u16be(len).to_vec();
    b.extend(filler(len, 18));
    handshake(16, &b)
}

/// Client and server byte streams of one TLS connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    pub client: Vec<u8>,
    pub server: Vec<u8>,
}

/// TLS 1.3: hello exchange in cleartext, then CCS and encrypted records.
pub fn tls13_conversation(hello: &ClientHello, group: u16, server_share_len: usize) -> Conversation {
    let mut client = records(22, &hello.message(), 1 << 14);
    client.extend(change_cipher_spec());
    client.extend(encrypted(53, 1));
    let mut server = records(22, &server_hello_13(group, server_share_len), 1 << 14);
    server.extend(change_cipher_spec());
    server.extend(encrypted(1200, 2));
    server.extend(encrypted(300, 3));
    Conversation { client, server }
}

/// TLS 1.2 ECDHE full handshake up to the encrypted Finished messages.
pub fn tls12_ecdhe_conversation(
    hello: &ClientHello,
    suite: u16,
    curve: u16,
    point_len: usize,
) -> Conversation {
    let mut sflight = server_hello_12(suite);
    sflight.extend(certificate(900));
    sflight.extend(server_key_exchange_ecdhe(curve, point_len));
    sflight.extend(server_hello_done());
    let mut server = records(22, &sflight, 1 << 14);
    server.extend(change_cipher_spec());
    server.extend(record(22, &filler(40, 4)));

    let mut client = records(22, &hello.message(), 1 << 14);
    client.extend(records(22, &client_key_exchange_ecdhe(point_len), 1 << 14));
    client.extend(change_cipher_spec());
    client.extend(record(22, &filler(40, 5)));
    client.extend(encrypted(80, 6));
    Conversation { client, server }
}
