//! TLS record and handshake layers, up to the point where traffic is
//! encrypted.

mod builder;
mod hello;
mod tls12;

pub use builder::ClientHelloBuilder;
pub use hello::{
    is_grease, parse_client_hello, parse_server_hello, ClientHelloSummary, KeyShare,
    ServerHelloSummary, HRR_RANDOM,
};
pub use tls12::{
    kx_kind_for_suite, parse_client_key_exchange, parse_server_key_exchange, KxKind,
    Tls12KexSummary,
};

use thiserror::Error;

use crate::wire::Reader;

pub const CONTENT_CHANGE_CIPHER_SPEC: u8 = 20;
pub const CONTENT_ALERT: u8 = 21;
pub const CONTENT_HANDSHAKE: u8 = 22;
pub const CONTENT_APPLICATION_DATA: u8 = 23;

pub const HS_CLIENT_HELLO: u8 = 1;
pub const HS_SERVER_HELLO: u8 = 2;
pub const HS_CERTIFICATE: u8 = 11;
pub const HS_SERVER_KEY_EXCHANGE: u8 = 12;
pub const HS_SERVER_HELLO_DONE: u8 = 14;
pub const HS_CLIENT_KEY_EXCHANGE: u8 = 16;

pub const TLS13: u16 = 0x0304;

pub const MAX_RECORD_PAYLOAD: usize = (1 << 14) + 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TlsError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("handshake message truncated: declared {declared} bytes, {available} available")]
    TruncatedHandshake { declared: usize, available: usize },
    #[error("malformed hello: {0}")]
    MalformedHello(String),
    #[error("unknown key exchange encoding: {0}")]
    UnknownKxEncoding(String),
    #[error("malformed key exchange body")]
    MalformedBody,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub content_type: u8,
    pub version: u16,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Records {
    pub records: Vec<Record>,
    /// The stream ended inside a record.
    pub truncated: bool,
}

/// Split a byte stream into TLS records.
pub fn parse_records(stream: &[u8]) -> Result<Records, TlsError> {
    let mut records = Vec::new();
    let mut r = Reader::new(stream);
    while !r.is_empty() {
        let Ok(header) = r.bytes(5) else {
            return Ok(Records {
                records,
                truncated: true,
            });
        };
        let content_type = header[0];
        if !(CONTENT_CHANGE_CIPHER_SPEC..=CONTENT_APPLICATION_DATA).contains(&content_type) {
            return Err(TlsError::MalformedRecord(format!(
                "content type {content_type}"
            )));
        }
        let version = u16::from_be_bytes([header[1], header[2]]);
        let len = u16::from_be_bytes([header[3], header[4]]) as usize;
        if len > MAX_RECORD_PAYLOAD {
            return Err(TlsError::MalformedRecord(format!("length {len}")));
        }
        let Ok(payload) = r.bytes(len) else {
            return Ok(Records {
                records,
                truncated: true,
            });
        };
        records.push(Record {
            content_type,
            version,
            payload: payload.to_vec(),
        });
    }
    Ok(Records {
        records,
        truncated: false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandshakeMessage {
    pub msg_type: u8,
    pub body: Vec<u8>,
}

/// Split a contiguous handshake byte sequence into messages. Returns the
/// complete messages and, if the buffer ends inside one, the truncation.
pub fn split_handshake_messages(buf: &[u8]) -> (Vec<HandshakeMessage>, Option<TlsError>) {
    let mut out = Vec::new();
    let mut r = Reader::new(buf);
    while !r.is_empty() {
        let available = r.remaining();
        let (Ok(msg_type), Ok(len)) = (r.u8(), r.u24()) else {
            return (
                out,
                Some(TlsError::TruncatedHandshake {
                    declared: 4,
                    available,
                }),
            );
        };
        let Ok(body) = r.bytes(len as usize) else {
            return (
                out,
                Some(TlsError::TruncatedHandshake {
                    declared: len as usize,
                    available: available - 4,
                }),
            );
        };
        out.push(HandshakeMessage {
            msg_type,
            body: body.to_vec(),
        });
    }
    (out, None)
}

/// A handshake record sent after ChangeCipherSpec is still cleartext only in
/// the middlebox-compatible HelloRetryRequest exchange, where a second hello
/// follows. Such a record holds exactly one hello message.
fn is_cleartext_hello_after_ccs(payload: &[u8]) -> bool {
    if payload.len() < 4 || !matches!(payload[0], HS_CLIENT_HELLO | HS_SERVER_HELLO) {
        return false;
    }
    let len = u32::from_be_bytes([0, payload[1], payload[2], payload[3]]) as usize;
    len + 4 == payload.len() && len >= 38
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Handshake {
    pub messages: Vec<HandshakeMessage>,
    /// Set when the cleartext phase ended inside a message.
    pub truncated: Option<TlsError>,
    pub saw_ccs: bool,
    pub alert: Option<(u8, u8)>,
}

/// Rebuild handshake messages across record boundaries. Collection stops at
/// ChangeCipherSpec or application data, except for the hello that follows a
/// HelloRetryRequest.
pub fn collect_handshake(records: &[Record]) -> Handshake {
    let mut buf = Vec::new();
    let mut saw_ccs = false;
    let mut alert = None;
    for rec in records {
        match rec.content_type {
            CONTENT_HANDSHAKE => {
                if saw_ccs && !is_cleartext_hello_after_ccs(&rec.payload) {
                    break;
                }
                buf.extend_from_slice(&rec.payload);
            }
            CONTENT_CHANGE_CIPHER_SPEC => {
                if saw_ccs {
                    break;
                }
                saw_ccs = true;
                let (_, partial) = split_handshake_messages(&buf);
                if partial.is_some() {
                    break;
                }
            }
            CONTENT_ALERT => {
                if !saw_ccs && rec.payload.len() == 2 && alert.is_none() {
                    alert = Some((rec.payload[0], rec.payload[1]));
                }
            }
            _ => break,
        }
    }
    let (messages, truncated) = split_handshake_messages(&buf);
    Handshake {
        messages,
        truncated,
        saw_ccs,
        alert,
    }
}

/// Strict form: a message cut off at the end of the cleartext phase is an
/// error.
pub fn reassemble_handshake(records: &[Record]) -> Result<Vec<HandshakeMessage>, TlsError> {
    let hs = collect_handshake(records);
    match hs.truncated {
        Some(e) => Err(e),
        None => Ok(hs.messages),
    }
}

/// Everything the classifier needs from one TLS connection.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TlsFacts {
    /// ClientHellos in order; a second one follows a HelloRetryRequest.
    pub client_hellos: Vec<ClientHelloSummary>,
    pub hello_retry: Option<ServerHelloSummary>,
    pub server_hello: Option<ServerHelloSummary>,
    pub tls12: Option<Tls12KexSummary>,
    pub alert: Option<(u8, u8)>,
    pub notes: Vec<String>,
}

impl TlsFacts {
    pub fn is_tls13(&self) -> bool {
        self.server_hello
            .as_ref()
            .map(|s| s.selected_version == TLS13)
            .unwrap_or(false)
    }

    /// The ClientHello the final ServerHello answers.
    pub fn last_client_hello(&self) -> Option<&ClientHelloSummary> {
        self.client_hellos.last()
    }
}

fn stream_messages(stream: &[u8], who: &str, notes: &mut Vec<String>) -> Handshake {
    let records = match parse_records(stream) {
        Ok(r) => r,
        Err(e) => {
            notes.push(format!("{who}: {e}"));
            return Handshake {
                messages: Vec::new(),
                truncated: None,
                saw_ccs: false,
                alert: None,
            };
        }
    };
    let hs = collect_handshake(&records.records);
    if let Some(e) = &hs.truncated {
        notes.push(format!("{who}: {e}"));
    }
    hs
}

/// Dissect the cleartext handshake of a TLS connection from its two
/// reassembled byte streams.
pub fn dissect_streams(client: &[u8], server: &[u8]) -> TlsFacts {
    let mut notes = Vec::new();
    let c = stream_messages(client, "client", &mut notes);
    let s = stream_messages(server, "server", &mut notes);
    let mut facts = dissect_messages(&c.messages, &s.messages);
    facts.alert = s.alert.or(c.alert);
    notes.append(&mut facts.notes);
    facts.notes = notes;
    facts
}

/// Dissect already separated handshake messages (QUIC CRYPTO streams carry
/// messages without a record layer).
pub fn dissect_messages(client: &[HandshakeMessage], server: &[HandshakeMessage]) -> TlsFacts {
    let mut facts = TlsFacts::default();
    for m in client.iter().filter(|m| m.msg_type == HS_CLIENT_HELLO) {
        match parse_client_hello(&m.body) {
            Ok(ch) => facts.client_hellos.push(ch),
            Err(e) => facts.notes.push(format!("client: {e}")),
        }
    }

    let mut cipher_suite = None;
    let mut ske_seen = false;
    let mut tls12 = Tls12KexSummary::default();
    for m in server {
        match m.msg_type {
            HS_SERVER_HELLO => match parse_server_hello(&m.body) {
                Ok(sh) if sh.is_hello_retry => {
                    if facts.hello_retry.is_none() {
                        facts.hello_retry = Some(sh);
                    }
                }
                Ok(sh) => {
                    if facts.server_hello.is_none() {
                        cipher_suite = Some(sh.cipher_suite);
                        facts.server_hello = Some(sh);
                    }
                }
                Err(e) => facts.notes.push(format!("server: {e}")),
            },
            HS_SERVER_KEY_EXCHANGE => {
                let Some(suite) = cipher_suite else { continue };
                match parse_server_key_exchange(&m.body, suite) {
                    Ok(part) => {
                        ske_seen = true;
                        tls12.merge(part);
                    }
                    Err(e) => facts.notes.push(format!("server: {e}")),
                }
            }
            _ => {}
        }
    }

    if facts.server_hello.is_some() && !facts.is_tls13() {
        let suite = cipher_suite.unwrap_or(0);
        let kind = if ske_seen {
            tls12.kx_kind
        } else {
            kx_kind_for_suite(suite).unwrap_or(KxKind::Rsa)
        };
        tls12.kx_kind = kind;
        if let Some(m) = client.iter().find(|m| m.msg_type == HS_CLIENT_KEY_EXCHANGE) {
            match parse_client_key_exchange(&m.body, kind) {
                Ok(part) => tls12.merge(part),
                Err(e) => facts.notes.push(format!("client: {e}")),
            }
        }
        let any = tls12.server_pub_len.is_some() || tls12.client_pub_len.is_some();
        if any {
            facts.tls12 = Some(tls12);
        }
    }
    facts
}
