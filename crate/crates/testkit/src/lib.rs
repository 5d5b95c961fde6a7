//! Wire-format encoders for test fixtures. Everything here is written from
//! the protocol descriptions and shares no code with the decoders it feeds.

pub mod fixtures;
pub mod net;
pub mod openvpn;
pub mod quic;
pub mod server;
pub mod ssh;
pub mod tls;

/// Decode a hex string, ignoring ASCII whitespace.
pub fn unhex(s: &str) -> Vec<u8> {
    let digits: Vec<u8> = s.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
    assert!(digits.len().is_multiple_of(2), "odd hex length");
    digits
        .chunks(2)
        .map(|p| {
            let v = |c: u8| match c {
                b'0'..=b'9' => c - b'0',
                b'a'..=b'f' => c - b'a' + 10,
                b'A'..=b'F' => c - b'A' + 10,
                _ => panic!("bad hex digit {c}"),
            };
            (v(p[0]) << 4) | v(p[1])
        })
        .collect()
}

/// Deterministic filler bytes (xorshift), so share contents are not all
/// equal.
pub fn filler(len: usize, seed: u64) -> Vec<u8> {
    let mut x = seed | 1;
    (0..len)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            x as u8
        })
        .collect()
}
