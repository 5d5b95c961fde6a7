use super::hello::{
    EXT_KEY_SHARE, EXT_PSK_KEY_EXCHANGE_MODES, EXT_SERVER_NAME, EXT_SIGNATURE_ALGORITHMS,
    EXT_SUPPORTED_GROUPS, EXT_SUPPORTED_VERSIONS,
};
use super::{CONTENT_HANDSHAKE, HS_CLIENT_HELLO};

const DEFAULT_SUITES: [u16; 3] = [0x1301, 0x1302, 0x1303];
const DEFAULT_SIG_ALGS: [u16; 9] = [
    0x0403, 0x0503, 0x0603, 0x0804, 0x0805, 0x0806, 0x0401, 0x0501, 0x0601,
];

/// Encoder for TLS 1.3 ClientHello messages.
#[derive(Debug, Clone)]
pub struct ClientHelloBuilder {
    pub random: [u8; 32],
    pub session_id: Vec<u8>,
    pub cipher_suites: Vec<u16>,
    pub supported_versions: Vec<u16>,
    pub supported_groups: Vec<u16>,
    pub key_shares: Vec<(u16, Vec<u8>)>,
    pub sni: Option<String>,
    pub signature_algorithms: Vec<u16>,
}

impl Default for ClientHelloBuilder {
    fn default() -> Self {
        ClientHelloBuilder {
            random: [0; 32],
            session_id: Vec::new(),
            cipher_suites: DEFAULT_SUITES.to_vec(),
            supported_versions: vec![0x0304],
            supported_groups: Vec::new(),
            key_shares: Vec::new(),
            sni: None,
            signature_algorithms: DEFAULT_SIG_ALGS.to_vec(),
        }
    }
}

fn push_ext(out: &mut Vec<u8>, ty: u16, body: &[u8]) {
    out.extend_from_slice(&ty.to_be_bytes());
    out.extend_from_slice(&(body.len() as u16).to_be_bytes());
    out.extend_from_slice(body);
}

fn u16_vec16(values: &[u16]) -> Vec<u8> {
    let mut v = ((values.len() * 2) as u16).to_be_bytes().to_vec();
    for x in values {
        v.extend_from_slice(&x.to_be_bytes());
    }
    v
}

impl ClientHelloBuilder {
    /// Handshake message body (without the 4-byte message header).
    pub fn body(&self) -> Vec<u8> {
        let mut b = vec![0x03, 0x03];
        b.extend_from_slice(&self.random);
        b.push(self.session_id.len() as u8);
        b.extend_from_slice(&self.session_id);
        b.extend(u16_vec16(&self.cipher_suites));
        b.extend_from_slice(&[1, 0]);

        let mut ext = Vec::new();
        if let Some(name) = &self.sni {
            let mut entry = vec![0u8];
            entry.extend_from_slice(&(name.len() as u16).to_be_bytes());
            entry.extend_from_slice(name.as_bytes());
            let mut list = (entry.len() as u16).to_be_bytes().to_vec();
            list.extend(entry);
            push_ext(&mut ext, EXT_SERVER_NAME, &list);
        }
        if !self.supported_groups.is_empty() {
            push_ext(&mut ext, EXT_SUPPORTED_GROUPS, &u16_vec16(&self.supported_groups));
        }
        if !self.signature_algorithms.is_empty() {
            push_ext(&mut ext, EXT_SIGNATURE_ALGORITHMS, &u16_vec16(&self.signature_algorithms));
        }
        if !self.supported_versions.is_empty() {
            let mut v = vec![(self.supported_versions.len() * 2) as u8];
            for x in &self.supported_versions {
                v.extend_from_slice(&x.to_be_bytes());
            }
            push_ext(&mut ext, EXT_SUPPORTED_VERSIONS, &v);
        }
        push_ext(&mut ext, EXT_PSK_KEY_EXCHANGE_MODES, &[1, 1]);
        let mut shares = Vec::new();
        for (group, share) in &self.key_shares {
            shares.extend_from_slice(&group.to_be_bytes());
            shares.extend_from_slice(&(share.len() as u16).to_be_bytes());
            shares.extend_from_slice(share);
        }
        let mut ks = (shares.len() as u16).to_be_bytes().to_vec();
        ks.extend(shares);
        push_ext(&mut ext, EXT_KEY_SHARE, &ks);

        b.extend_from_slice(&(ext.len() as u16).to_be_bytes());
        b.extend(ext);
        b
    }

    /// Handshake message with its header.
    pub fn message(&self) -> Vec<u8> {
        let body = self.body();
        let len = body.len() as u32;
        let mut m = vec![HS_CLIENT_HELLO];
        m.extend_from_slice(&len.to_be_bytes()[1..]);
        m.extend(body);
        m
    }

    /// The message wrapped in TLS records of at most 2^14 payload bytes.
    pub fn records(&self) -> Vec<u8> {
        let msg = self.message();
        let mut out = Vec::with_capacity(msg.len() + 10);
        for chunk in msg.chunks(1 << 14) {
            out.extend_from_slice(&[CONTENT_HANDSHAKE, 0x03, 0x01]);
            out.extend_from_slice(&(chunk.len() as u16).to_be_bytes());
            out.extend_from_slice(chunk);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_client_hello, parse_records, reassemble_handshake, KeyShare};
    use super::*;

    #[test]
    fn round_trips_through_parser() {
        let b = ClientHelloBuilder {
            supported_groups: vec![0x11EC, 0x001D],
            key_shares: vec![(0x001D, vec![9; 32])],
            sni: Some("example.com".into()),
            ..Default::default()
        };
        let recs = parse_records(&b.records()).unwrap();
        let msgs = reassemble_handshake(&recs.records).unwrap();
        let ch = parse_client_hello(&msgs[0].body).unwrap();
        assert_eq!(ch.supported_groups, vec![0x11EC, 0x001D]);
        assert_eq!(ch.key_shares, vec![KeyShare { group: 0x001D, share_len: 32 }]);
        assert_eq!(ch.sni.as_deref(), Some("example.com"));
        assert_eq!(ch.supported_versions, vec![0x0304]);
    }

    #[test]
    fn large_hello_spans_records() {
        let b = ClientHelloBuilder {
            supported_groups: vec![0x0202],
            key_shares: vec![(0x0202, vec![1; 20000])],
            ..Default::default()
        };
        let recs = parse_records(&b.records()).unwrap();
        assert_eq!(recs.records.len(), 2);
        let msgs = reassemble_handshake(&recs.records).unwrap();
        let ch = parse_client_hello(&msgs[0].body).unwrap();
        assert_eq!(ch.key_shares[0].share_len, 20000);
    }
}
