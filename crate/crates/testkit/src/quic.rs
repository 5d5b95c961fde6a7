//! QUIC Initial test vectors.

use crate::unhex;

/// Destination connection ID of the RFC 9001 Appendix A exchange.
pub const RFC9001_DCID: [u8; 8] = [0x83, 0x94, 0xc8, 0xf0, 0x3e, 0x51, 0x57, 0x08];

/// RFC 9001 A.1 client Initial keys (key, iv, hp).
pub const RFC9001_CLIENT_KEY: &str = "1f369613dd76d5467730efcbe3b1a22d";
pub const RFC9001_CLIENT_IV: &str = "fa044b2f42a3fd3b46fb255c";
pub const RFC9001_CLIENT_HP: &str = "9f50449e04a0e810283a1e9933adedd2";
/// RFC 9001 A.1 server Initial keys.
pub const RFC9001_SERVER_KEY: &str = "cf3a5331653c364c88f0f379b6067e37";
pub const RFC9001_SERVER_IV: &str = "0ac1493ca1905853b0bba03e";
pub const RFC9001_SERVER_HP: &str = "c206b8d9b9f0f37644430b490eeaa314";

/// RFC 9001 A.2: the protected 1200-byte client Initial datagram.
pub fn rfc9001_client_initial() -> Vec<u8> {
    unhex(include_str!("../fixtures/rfc9001_client_initial.hex"))
}

/// RFC 9001 A.2: the unprotected payload (CRYPTO frame and padding).
pub fn rfc9001_client_plaintext() -> Vec<u8> {
    unhex(include_str!("../fixtures/rfc9001_client_initial_plaintext.hex"))
}

/// Two server Initial datagrams (second CRYPTO half first) carrying a TLS
/// 1.3 ServerHello for group 0x11EC with a 1120-byte share, protected with
/// keys for `RFC9001_DCID`. Generated by fixtures/gen_quic_server_initial.py.
pub fn server_initials_11ec() -> Vec<Vec<u8>> {
    include_str!("../fixtures/quic_server_initial_11ec.hex")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(unhex)
        .collect()
}
