//! Cross-checks every stored seed length against reference KEM
//! implementations and the ECDH encoding formulas.

use pqcrypto_traits::kem::{Ciphertext, PublicKey};
use pqscope_core::kexdb::{load_builtin, Family};

macro_rules! kem_lengths {
    ($($id:literal => $m:path),* $(,)?) => {
        vec![$(($id, { use $m as m; (m::public_key_bytes(), m::ciphertext_bytes()) })),*]
    };
}

fn reference_kem_lengths() -> Vec<(&'static str, (usize, usize))> {
    kem_lengths! {
        "kyber512" => pqcrypto_mlkem::mlkem512,
        "kyber768" => pqcrypto_mlkem::mlkem768,
        "kyber1024" => pqcrypto_mlkem::mlkem1024,
        "frodokem640" => pqcrypto_frodo::frodokem640shake,
        "frodokem976" => pqcrypto_frodo::frodokem976shake,
        "frodokem1344" => pqcrypto_frodo::frodokem1344shake,
        "hqc128" => pqcrypto_hqc::hqc128,
        "hqc192" => pqcrypto_hqc::hqc192,
        "hqc256" => pqcrypto_hqc::hqc256,
        "classic_mceliece_348864" => pqcrypto_classicmceliece::mceliece348864,
        "classic_mceliece_460896" => pqcrypto_classicmceliece::mceliece460896,
        "classic_mceliece_6688128" => pqcrypto_classicmceliece::mceliece6688128,
        "classic_mceliece_6960119" => pqcrypto_classicmceliece::mceliece6960119,
        "classic_mceliece_8192128" => pqcrypto_classicmceliece::mceliece8192128,
        "sntrup761" => pqcrypto_ntruprime::sntrup761,
    }
}

/// Uncompressed SEC1 point: 0x04 || X || Y.
fn sec1_uncompressed(field_bits: usize) -> usize {
    1 + 2 * field_bits.div_ceil(8)
}

fn ecdh_lengths() -> Vec<(&'static str, usize)> {
    vec![
        ("x25519", 32),
        ("x448", 56),
        ("ecdh_p256", sec1_uncompressed(256)),
        ("ecdh_p384", sec1_uncompressed(384)),
        ("ecdh_p521", sec1_uncompressed(521)),
    ]
}

#[test]
fn kem_lengths_match_reference_constants() {
    let db = load_builtin();
    for (id, (pk, ct)) in reference_kem_lengths() {
        let p = db.get(id).unwrap_or_else(|| panic!("missing {id}"));
        assert_eq!(p.client_share_len, pk, "{id} public key");
        assert_eq!(p.server_share_len, ct, "{id} ciphertext");
    }
}

#[test]
fn kem_lengths_match_generated_objects() {
    let db = load_builtin();
    let (pk, _) = pqcrypto_mlkem::mlkem768::keypair();
    let (_, ct) = pqcrypto_mlkem::mlkem768::encapsulate(&pk);
    let p = db.get("kyber768").unwrap();
    assert_eq!(pk.as_bytes().len(), p.client_share_len);
    assert_eq!(ct.as_bytes().len(), p.server_share_len);

    let (pk, _) = pqcrypto_ntruprime::sntrup761::keypair();
    let (_, ct) = pqcrypto_ntruprime::sntrup761::encapsulate(&pk);
    let p = db.get("sntrup761").unwrap();
    assert_eq!(pk.as_bytes().len(), p.client_share_len);
    assert_eq!(ct.as_bytes().len(), p.server_share_len);
}

#[test]
fn ecdh_lengths_match_encoding_formulas() {
    let db = load_builtin();
    for (id, len) in ecdh_lengths() {
        let p = db.get(id).unwrap();
        assert_eq!((p.client_share_len, p.server_share_len), (len, len), "{id}");
    }
}

#[test]
fn ffdhe_and_rsa_lengths_are_modulus_bytes() {
    let db = load_builtin();
    for (id, bits) in [("ffdhe2048", 2048), ("modp2048", 2048), ("modp4096", 4096)] {
        let p = db.get(id).unwrap();
        assert_eq!(p.client_share_len, bits / 8, "{id}");
        assert_eq!(p.server_share_len, bits / 8, "{id}");
    }
    for (id, bits) in [("rsa_2048", 2048), ("rsa_3072", 3072), ("rsa_4096", 4096)] {
        assert_eq!(db.get(id).unwrap().client_share_len, bits / 8, "{id}");
    }
}

#[test]
fn hybrid_lengths_are_component_sums() {
    let db = load_builtin();
    let hybrids: Vec<_> = db.profiles().iter().filter(|p| p.family == Family::Hybrid).collect();
    assert!(hybrids.len() >= 8);
    for h in hybrids {
        let parts: Vec<_> = h.components.iter().map(|c| db.get(c).unwrap()).collect();
        assert_eq!(h.client_share_len, parts.iter().map(|p| p.client_share_len).sum::<usize>(), "{}", h.id);
        assert_eq!(h.server_share_len, parts.iter().map(|p| p.server_share_len).sum::<usize>(), "{}", h.id);
    }
}
