use serde::Serialize;

use super::TlsError;
use crate::wire::Reader;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KxKind {
    #[default]
    Ecdhe,
    Dhe,
    Rsa,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Tls12KexSummary {
    pub server_curve: Option<u16>,
    pub server_pub_len: Option<usize>,
    pub client_pub_len: Option<usize>,
    pub kx_kind: KxKind,
}

impl Tls12KexSummary {
    pub(crate) fn merge(&mut self, other: Tls12KexSummary) {
        self.server_curve = self.server_curve.or(other.server_curve);
        self.server_pub_len = self.server_pub_len.or(other.server_pub_len);
        self.client_pub_len = self.client_pub_len.or(other.client_pub_len);
        self.kx_kind = other.kx_kind;
    }
}

/// Key exchange family of a TLS 1.2 cipher suite, or `None` for suites this
/// table does not know (including TLS 1.3 suites).
pub fn kx_kind_for_suite(suite: u16) -> Option<KxKind> {
    match suite {
        0x0001..=0x000A | 0x002F | 0x0035 | 0x003B..=0x003D | 0x0041 | 0x0084 | 0x0096
        | 0x009C | 0x009D | 0x00BA | 0x00C0 | 0xC09C | 0xC09D | 0xC0A0 | 0xC0A1 => {
            Some(KxKind::Rsa)
        }
        0x0011..=0x0016 | 0x0032 | 0x0033 | 0x0038 | 0x0039 | 0x0040 | 0x0044 | 0x0045
        | 0x0067 | 0x006A | 0x006B | 0x0087 | 0x0088 | 0x009E..=0x00A3 | 0x00BD | 0x00BE
        | 0x00C3 | 0x00C4 | 0xC09E | 0xC09F | 0xC0A2 | 0xC0A3 | 0xCCAA => Some(KxKind::Dhe),
        0xC006..=0xC00A | 0xC010..=0xC014 | 0xC023 | 0xC024 | 0xC027 | 0xC028 | 0xC02B
        | 0xC02C | 0xC02F | 0xC030 | 0xC035..=0xC03B | 0xC072 | 0xC073 | 0xC076 | 0xC077
        | 0xC0AC..=0xC0AF | 0xCCA8 | 0xCCA9 | 0xCCAC => Some(KxKind::Ecdhe),
        _ => None,
    }
}

fn ecdhe_params(body: &[u8]) -> Result<Tls12KexSummary, TlsError> {
    let mut r = Reader::new(body);
    let curve_type = r.u8().map_err(|_| TlsError::MalformedBody)?;
    if curve_type != 3 {
        return Err(TlsError::UnknownKxEncoding(format!("curve_type {curve_type}")));
    }
    let curve = r.u16().map_err(|_| TlsError::MalformedBody)?;
    let point = r.vec8().map_err(|_| TlsError::MalformedBody)?;
    Ok(Tls12KexSummary {
        server_curve: Some(curve),
        server_pub_len: Some(point.len()),
        client_pub_len: None,
        kx_kind: KxKind::Ecdhe,
    })
}

fn dhe_params(body: &[u8]) -> Result<Tls12KexSummary, TlsError> {
    let mut r = Reader::new(body);
    let p = r.vec16().map_err(|_| TlsError::MalformedBody)?;
    r.vec16().map_err(|_| TlsError::MalformedBody)?;
    let ys = r.vec16().map_err(|_| TlsError::MalformedBody)?;
    if p.is_empty() || ys.is_empty() {
        return Err(TlsError::MalformedBody);
    }
    Ok(Tls12KexSummary {
        server_curve: None,
        server_pub_len: Some(ys.len()),
        client_pub_len: None,
        kx_kind: KxKind::Dhe,
    })
}

/// ServerKeyExchange: named curve and point length for ECDHE, Ys length for
/// DHE. Suites missing from the table are decoded by shape.
pub fn parse_server_key_exchange(
    body: &[u8],
    cipher_suite: u16,
) -> Result<Tls12KexSummary, TlsError> {
    match kx_kind_for_suite(cipher_suite) {
        Some(KxKind::Ecdhe) => ecdhe_params(body),
        Some(KxKind::Dhe) => dhe_params(body),
        Some(KxKind::Rsa) => Err(TlsError::UnknownKxEncoding(format!(
            "ServerKeyExchange with RSA suite 0x{cipher_suite:04X}"
        ))),
        None => match body.first() {
            Some(3) => ecdhe_params(body).or_else(|_| dhe_params(body)),
            _ => dhe_params(body)
                .map_err(|_| TlsError::UnknownKxEncoding(format!("suite 0x{cipher_suite:04X}"))),
        },
    }
}

/// ClientKeyExchange: the public value (or encrypted premaster) length.
pub fn parse_client_key_exchange(body: &[u8], kx_kind: KxKind) -> Result<Tls12KexSummary, TlsError> {
    let mut r = Reader::new(body);
    let value = match kx_kind {
        KxKind::Ecdhe => r.vec8(),
        KxKind::Dhe | KxKind::Rsa => r.vec16(),
    }
    .map_err(|_| TlsError::MalformedBody)?;
    if !r.is_empty() || value.is_empty() {
        return Err(TlsError::MalformedBody);
    }
    Ok(Tls12KexSummary {
        server_curve: None,
        server_pub_len: None,
        client_pub_len: Some(value.len()),
        kx_kind,
    })
}
