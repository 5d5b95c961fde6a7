//! QUIC version 1 Initial packets: key derivation, header protection
//! removal, payload decryption and CRYPTO frame reassembly.

use aes::cipher::{generic_array::GenericArray, BlockEncrypt, KeyInit};
use aes::Aes128;
use aes_gcm::aead::{Aead, Payload};
use aes_gcm::Aes128Gcm;
use hkdf::Hkdf;
use sha2::Sha256;
use thiserror::Error;

use crate::reassembly::ByteAssembler;
use crate::wire::Reader;

pub const QUIC_V1: u32 = 0x0000_0001;

const INITIAL_SALT_V1: [u8; 20] = [
    0x38, 0x76, 0x2c, 0xf7, 0xf5, 0x59, 0x34, 0xb3, 0x4d, 0x17, 0x9a, 0xe6, 0xa4, 0xc8, 0x0c,
    0xad, 0xcc, 0xbb, 0x7f, 0x0a,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuicError {
    #[error("unsupported QUIC version 0x{0:08x}")]
    UnsupportedVersion(u32),
    #[error("Initial packet failed authentication")]
    DecryptFailed,
    #[error("malformed packet: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuicSide {
    Client,
    Server,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialKeys {
    pub hp: [u8; 16],
    pub key: [u8; 16],
    pub iv: [u8; 12],
}

fn expand_label(prk: &Hkdf<Sha256>, label: &str, out: &mut [u8]) {
    let full = format!("tls13 {label}");
    let mut info = Vec::with_capacity(full.len() + 4);
    info.extend_from_slice(&(out.len() as u16).to_be_bytes());
    info.push(full.len() as u8);
    info.extend_from_slice(full.as_bytes());
    info.push(0);
    prk.expand(&info, out).expect("output length is valid for SHA-256");
}

/// Initial secrets for one side, derived from the client's first
/// destination connection ID.
pub fn derive_initial_protection(
    dcid: &[u8],
    version: u32,
    side: QuicSide,
) -> Result<InitialKeys, QuicError> {
    if version != QUIC_V1 {
        return Err(QuicError::UnsupportedVersion(version));
    }
    let (initial, _) = Hkdf::<Sha256>::extract(Some(&INITIAL_SALT_V1), dcid);
    let initial = Hkdf::<Sha256>::from_prk(&initial).expect("PRK length");
    let mut secret = [0u8; 32];
    let label = match side {
        QuicSide::Client => "client in",
        QuicSide::Server => "server in",
    };
    expand_label(&initial, label, &mut secret);
    let prk = Hkdf::<Sha256>::from_prk(&secret).expect("PRK length");
    let mut keys = InitialKeys {
        hp: [0; 16],
        key: [0; 16],
        iv: [0; 12],
    };
    expand_label(&prk, "quic key", &mut keys.key);
    expand_label(&prk, "quic iv", &mut keys.iv);
    expand_label(&prk, "quic hp", &mut keys.hp);
    Ok(keys)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CryptoFrame {
    pub offset: u64,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuicInitialPacket {
    pub version: u32,
    pub dcid: Vec<u8>,
    pub scid: Vec<u8>,
    pub packet_number: u64,
    pub crypto_frames: Vec<CryptoFrame>,
    pub ack: bool,
    /// Error code of a CONNECTION_CLOSE frame.
    pub connection_close: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecodedDatagram {
    pub initials: Vec<QuicInitialPacket>,
    /// Source connection ID of a Retry packet; the client's next Initial
    /// uses it as destination.
    pub retry_scid: Option<Vec<u8>>,
}

fn header_mask(hp: &[u8; 16], sample: &[u8]) -> [u8; 16] {
    let cipher = Aes128::new(GenericArray::from_slice(hp));
    let mut block = GenericArray::clone_from_slice(sample);
    cipher.encrypt_block(&mut block);
    block.into()
}

fn parse_frames(plain: &[u8], pkt: &mut QuicInitialPacket) -> Result<(), QuicError> {
    let bad = |_| QuicError::Malformed("frame");
    let mut r = Reader::new(plain);
    while !r.is_empty() {
        let ty = r.varint().map_err(bad)?;
        match ty {
            0x00 | 0x01 => {}
            0x02 | 0x03 => {
                pkt.ack = true;
                r.varint().map_err(bad)?;
                r.varint().map_err(bad)?;
                let ranges = r.varint().map_err(bad)?;
                r.varint().map_err(bad)?;
                for _ in 0..ranges {
                    r.varint().map_err(bad)?;
                    r.varint().map_err(bad)?;
                }
                if ty == 0x03 {
                    for _ in 0..3 {
                        r.varint().map_err(bad)?;
                    }
                }
            }
            0x06 => {
                let offset = r.varint().map_err(bad)?;
                let data = r.vec_varint().map_err(bad)?;
                pkt.crypto_frames.push(CryptoFrame {
                    offset,
                    data: data.to_vec(),
                });
            }
            0x1c | 0x1d => {
                let code = r.varint().map_err(bad)?;
                if ty == 0x1c {
                    r.varint().map_err(bad)?;
                }
                r.vec_varint().map_err(bad)?;
                pkt.connection_close = Some(code);
            }
            _ => return Err(QuicError::Malformed("frame type not allowed in Initial")),
        }
    }
    Ok(())
}

/// Decrypt the Initial packets coalesced in one UDP datagram. Keys come from
/// `key_dcid` when given (server packets use the client's original DCID),
/// else from each packet's own DCID. Other long-header packets are skipped;
/// a short-header packet ends the datagram.
pub fn unprotect_and_decrypt(
    datagram: &[u8],
    side: QuicSide,
    key_dcid: Option<&[u8]>,
) -> Result<DecodedDatagram, QuicError> {
    let mut out = DecodedDatagram::default();
    let mut at = 0;
    while at < datagram.len() {
        let pkt = &datagram[at..];
        let first = pkt[0];
        if first & 0x80 == 0 {
            break;
        }
        let bad = |_| QuicError::Malformed("long header");
        let mut r = Reader::new(pkt);
        r.u8().map_err(bad)?;
        let version = r.u32().map_err(bad)?;
        if version == 0 {
            break;
        }
        if version != QUIC_V1 {
            return Err(QuicError::UnsupportedVersion(version));
        }
        let dcid = r.vec8().map_err(bad)?;
        let scid = r.vec8().map_err(bad)?;
        if dcid.len() > 20 || scid.len() > 20 {
            return Err(QuicError::Malformed("connection id longer than 20"));
        }
        let ty = (first >> 4) & 0x03;
        if ty == 3 {
            out.retry_scid = Some(scid.to_vec());
            break;
        }
        if ty == 0 {
            // token
            r.vec_varint().map_err(bad)?;
        }
        let length = r.varint().map_err(bad)? as usize;
        let pn_offset = pkt.len() - r.remaining();
        let end = pn_offset + length;
        if end > pkt.len() {
            return Err(QuicError::Malformed("length past datagram end"));
        }
        at += end;
        if ty != 0 {
            continue;
        }
        if length < 20 {
            return Err(QuicError::Malformed("Initial too short for header protection sample"));
        }

        let keys = derive_initial_protection(key_dcid.unwrap_or(dcid), version, side)?;
        let mask = header_mask(&keys.hp, &pkt[pn_offset + 4..pn_offset + 20]);
        let mut header = pkt[..pn_offset + 4].to_vec();
        header[0] ^= mask[0] & 0x0F;
        let pn_len = (header[0] & 0x03) as usize + 1;
        let mut pn = 0u64;
        for i in 0..pn_len {
            header[pn_offset + i] ^= mask[1 + i];
            pn = (pn << 8) | header[pn_offset + i] as u64;
        }
        header.truncate(pn_offset + pn_len);

        let mut nonce = keys.iv;
        for (i, b) in pn.to_be_bytes().iter().enumerate() {
            nonce[4 + i] ^= b;
        }
        let aead = Aes128Gcm::new(GenericArray::from_slice(&keys.key));
        let plain = aead
            .decrypt(
                GenericArray::from_slice(&nonce),
                Payload {
                    msg: &pkt[pn_offset + pn_len..end],
                    aad: &header,
                },
            )
            .map_err(|_| QuicError::DecryptFailed)?;

        let mut initial = QuicInitialPacket {
            version,
            dcid: dcid.to_vec(),
            scid: scid.to_vec(),
            packet_number: pn,
            crypto_frames: Vec::new(),
            ack: false,
            connection_close: None,
        };
        parse_frames(&plain, &mut initial)?;
        out.initials.push(initial);
    }
    Ok(out)
}

/// Join CRYPTO frames of one direction by offset. The flag reports a gap.
pub fn reassemble_crypto<'a>(frames: impl IntoIterator<Item = &'a CryptoFrame>) -> (Vec<u8>, bool) {
    let mut asm = ByteAssembler::new();
    for f in frames {
        asm.insert(f.offset, &f.data);
    }
    asm.contiguous_from(0)
}
