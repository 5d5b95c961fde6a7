use serde::Serialize;

use super::TlsError;
use crate::wire::{Reader, Short};

pub const EXT_SERVER_NAME: u16 = 0;
pub const EXT_SUPPORTED_GROUPS: u16 = 10;
pub const EXT_SIGNATURE_ALGORITHMS: u16 = 13;
pub const EXT_PRE_SHARED_KEY: u16 = 41;
pub const EXT_SUPPORTED_VERSIONS: u16 = 43;
pub const EXT_PSK_KEY_EXCHANGE_MODES: u16 = 45;
pub const EXT_KEY_SHARE: u16 = 51;

/// ServerHello.random value that marks a HelloRetryRequest.
pub const HRR_RANDOM: [u8; 32] = [
    0xCF, 0x21, 0xAD, 0x74, 0xE5, 0x9A, 0x61, 0x11, 0xBE, 0x1D, 0x8C, 0x02, 0x1E, 0x65, 0xB8,
    0x91, 0xC2, 0xA2, 0x11, 0x16, 0x7A, 0xBB, 0x8C, 0x5E, 0x07, 0x9E, 0x09, 0xE2, 0xC8, 0xA8,
    0x33, 0x9C,
];

/// GREASE values have the form 0x?A?A with both bytes equal.
pub fn is_grease(v: u16) -> bool {
    v & 0x0F0F == 0x0A0A && v >> 8 == v & 0xFF
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KeyShare {
    pub group: u16,
    pub share_len: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClientHelloSummary {
    pub legacy_version: u16,
    pub supported_versions: Vec<u16>,
    pub cipher_suites: Vec<u16>,
    pub supported_groups: Vec<u16>,
    pub key_shares: Vec<KeyShare>,
    pub sni: Option<String>,
    /// The hello offers a pre-shared key (resumption).
    pub offers_psk: bool,
    #[serde(skip)]
    pub session_id: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ServerHelloSummary {
    pub selected_version: u16,
    pub cipher_suite: u16,
    pub key_share: Option<KeyShare>,
    pub is_hello_retry: bool,
    /// The server accepted a pre-shared key.
    pub selected_psk: bool,
    #[serde(skip)]
    pub session_id: Vec<u8>,
}

fn malformed(what: &str) -> impl Fn(Short) -> TlsError + '_ {
    move |_| TlsError::MalformedHello(what.to_owned())
}

fn u16_list(data: &[u8], what: &str) -> Result<Vec<u16>, TlsError> {
    if !data.len().is_multiple_of(2) {
        return Err(TlsError::MalformedHello(format!("{what}: odd length")));
    }
    Ok(data
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .filter(|v| !is_grease(*v))
        .collect())
}

/// Walk an extensions block, which must fill `data` exactly.
fn extensions(data: &[u8]) -> Result<Vec<(u16, &[u8])>, TlsError> {
    let mut r = Reader::new(data);
    let mut out = Vec::new();
    while !r.is_empty() {
        let ty = r.u16().map_err(malformed("extension header"))?;
        let body = r.vec16().map_err(malformed("extension length"))?;
        out.push((ty, body));
    }
    Ok(out)
}

fn hello_prefix<'a>(r: &mut Reader<'a>) -> Result<(u16, &'a [u8], &'a [u8]), TlsError> {
    let version = r.u16().map_err(malformed("version"))?;
    let random = r.bytes(32).map_err(malformed("random"))?;
    let session_id = r.vec8().map_err(malformed("session id"))?;
    if session_id.len() > 32 {
        return Err(TlsError::MalformedHello("session id longer than 32".into()));
    }
    Ok((version, random, session_id))
}

fn trailing_extensions<'a>(r: &mut Reader<'a>) -> Result<Vec<(u16, &'a [u8])>, TlsError> {
    if r.is_empty() {
        return Ok(Vec::new());
    }
    let block = r.vec16().map_err(malformed("extensions length"))?;
    if !r.is_empty() {
        return Err(TlsError::MalformedHello("bytes after extensions".into()));
    }
    extensions(block)
}

fn parse_sni(data: &[u8]) -> Result<Option<String>, TlsError> {
    let mut r = Reader::new(data);
    let list = r.vec16().map_err(malformed("server_name list"))?;
    let mut l = Reader::new(list);
    while !l.is_empty() {
        let ty = l.u8().map_err(malformed("server_name type"))?;
        let name = l.vec16().map_err(malformed("server_name"))?;
        if ty == 0 {
            return Ok(Some(String::from_utf8_lossy(name).into_owned()));
        }
    }
    Ok(None)
}

pub fn parse_client_hello(body: &[u8]) -> Result<ClientHelloSummary, TlsError> {
    let mut r = Reader::new(body);
    let (legacy_version, _random, session_id) = hello_prefix(&mut r)?;
    let suites = r.vec16().map_err(malformed("cipher suites"))?;
    let cipher_suites = u16_list(suites, "cipher suites")?;
    r.vec8().map_err(malformed("compression methods"))?;
    let mut out = ClientHelloSummary {
        legacy_version,
        cipher_suites,
        session_id: session_id.to_vec(),
        ..Default::default()
    };
    for (ty, data) in trailing_extensions(&mut r)? {
        match ty {
            EXT_SERVER_NAME => out.sni = parse_sni(data)?,
            EXT_SUPPORTED_GROUPS => {
                let mut e = Reader::new(data);
                let list = e.vec16().map_err(malformed("supported_groups"))?;
                out.supported_groups = u16_list(list, "supported_groups")?;
            }
            EXT_SUPPORTED_VERSIONS => {
                let mut e = Reader::new(data);
                let list = e.vec8().map_err(malformed("supported_versions"))?;
                out.supported_versions = u16_list(list, "supported_versions")?;
            }
            EXT_KEY_SHARE => {
                let mut e = Reader::new(data);
                let list = e.vec16().map_err(malformed("key_share"))?;
                let mut l = Reader::new(list);
                while !l.is_empty() {
                    let group = l.u16().map_err(malformed("key_share group"))?;
                    let share = l.vec16().map_err(malformed("key_share entry"))?;
                    if !is_grease(group) {
                        out.key_shares.push(KeyShare {
                            group,
                            share_len: share.len(),
                        });
                    }
                }
            }
            EXT_PRE_SHARED_KEY => out.offers_psk = true,
            _ => {}
        }
    }
    Ok(out)
}

pub fn parse_server_hello(body: &[u8]) -> Result<ServerHelloSummary, TlsError> {
    let mut r = Reader::new(body);
    let (legacy_version, random, session_id) = hello_prefix(&mut r)?;
    let cipher_suite = r.u16().map_err(malformed("cipher suite"))?;
    r.u8().map_err(malformed("compression method"))?;
    let is_hello_retry = random == HRR_RANDOM;
    let mut out = ServerHelloSummary {
        selected_version: legacy_version,
        cipher_suite,
        is_hello_retry,
        session_id: session_id.to_vec(),
        ..Default::default()
    };
    for (ty, data) in trailing_extensions(&mut r)? {
        let mut e = Reader::new(data);
        match ty {
            EXT_SUPPORTED_VERSIONS => {
                out.selected_version = e.u16().map_err(malformed("supported_versions"))?;
            }
            EXT_KEY_SHARE => {
                let group = e.u16().map_err(malformed("key_share group"))?;
                let share_len = if is_hello_retry {
                    0
                } else {
                    e.vec16().map_err(malformed("key_share entry"))?.len()
                };
                if !is_grease(group) {
                    out.key_share = Some(KeyShare { group, share_len });
                }
            }
            EXT_PRE_SHARED_KEY => out.selected_psk = true,
            _ => {}
        }
    }
    Ok(out)
}
