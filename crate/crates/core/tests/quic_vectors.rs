use pqscope_core::quic::{derive_initial_protection, reassemble_crypto, unprotect_and_decrypt, QuicError, QuicSide, QUIC_V1};
use pqscope_core::tls::{parse_client_hello, split_handshake_messages, HS_CLIENT_HELLO};
use pqscope_testkit::quic::*;

#[test]
fn client_keys_match_published_vector() {
    let k = derive_initial_protection(&RFC9001_DCID, QUIC_V1, QuicSide::Client).unwrap();
    assert_eq!(hex::encode(k.key), RFC9001_CLIENT_KEY);
    assert_eq!(hex::encode(k.iv), RFC9001_CLIENT_IV);
    assert_eq!(hex::encode(k.hp), RFC9001_CLIENT_HP);
}

#[test]
fn server_keys_match_published_vector() {
    let k = derive_initial_protection(&RFC9001_DCID, QUIC_V1, QuicSide::Server).unwrap();
    assert_eq!(hex::encode(k.key), RFC9001_SERVER_KEY);
    assert_eq!(hex::encode(k.iv), RFC9001_SERVER_IV);
    assert_eq!(hex::encode(k.hp), RFC9001_SERVER_HP);
}

#[test]
fn client_initial_decrypts_to_documented_hello() {
    let dec = unprotect_and_decrypt(&rfc9001_client_initial(), QuicSide::Client, None).unwrap();
    assert_eq!(dec.initials.len(), 1);
    let pkt = &dec.initials[0];
    assert_eq!(pkt.dcid, RFC9001_DCID);
    assert!(pkt.scid.is_empty());
    assert_eq!(pkt.packet_number, 2);

    // The CRYPTO frame equals the plaintext published alongside the packet.
    let plain = rfc9001_client_plaintext();
    let (stream, gap) = reassemble_crypto(&pkt.crypto_frames);
    assert!(!gap);
    assert_eq!(stream, plain[4..4 + 241]);

    let (msgs, err) = split_handshake_messages(&stream);
    assert!(err.is_none());
    assert_eq!(msgs.len(), 1);
    assert_eq!(msgs[0].msg_type, HS_CLIENT_HELLO);
    let ch = parse_client_hello(&msgs[0].body).unwrap();
    assert_eq!(ch.legacy_version, 0x0303);
    assert_eq!(ch.cipher_suites, [0x1301, 0x1302]);
    assert_eq!(ch.supported_groups, [0x001D, 0x0017, 0x0018]);
    assert_eq!(ch.supported_versions, [0x0304]);
    assert_eq!(ch.sni.as_deref(), Some("example.com"));
    assert_eq!(ch.key_shares.len(), 1);
    assert_eq!((ch.key_shares[0].group, ch.key_shares[0].share_len), (0x001D, 32));
}

#[test]
fn flipped_ciphertext_fails_authentication() {
    let mut d = rfc9001_client_initial();
    let last = d.len() - 40;
    d[last] ^= 0x01;
    assert_eq!(
        unprotect_and_decrypt(&d, QuicSide::Client, None),
        Err(QuicError::DecryptFailed)
    );
}

#[test]
fn server_initials_reassemble_out_of_order() {
    let mut frames = Vec::new();
    for d in server_initials_11ec() {
        let dec = unprotect_and_decrypt(&d, QuicSide::Server, Some(&RFC9001_DCID)).unwrap();
        for p in dec.initials {
            frames.extend(p.crypto_frames);
        }
    }
    assert!(frames[0].offset > 0);
    let (stream, gap) = reassemble_crypto(&frames);
    assert!(!gap);
    let (msgs, _) = split_handshake_messages(&stream);
    let sh = pqscope_core::tls::parse_server_hello(&msgs[0].body).unwrap();
    let ks = sh.key_share.unwrap();
    assert_eq!((ks.group, ks.share_len), (0x11EC, 1120));
}
