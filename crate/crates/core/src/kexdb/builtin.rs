//! Seed table. Lengths are bytes on the wire:
//! ECDH points are uncompressed SEC1 (1 + 2 * field bytes) or RFC 7748 u-coordinates,
//! KEM client values are public keys, KEM server values are ciphertexts.

use super::{AlgorithmProfile, Family, Mechanism};

struct Seed {
    id: &'static str,
    name: &'static str,
    family: Family,
    mechanism: Mechanism,
    client: usize,
    server: usize,
    codepoints: &'static [u16],
    ssh: &'static [&'static str],
    components: &'static [&'static str],
    broken: bool,
}

const fn classical(
    id: &'static str,
    name: &'static str,
    mechanism: Mechanism,
    client: usize,
    server: usize,
    codepoints: &'static [u16],
    ssh: &'static [&'static str],
) -> Seed {
    Seed {
        id,
        name,
        family: Family::Classical,
        mechanism,
        client,
        server,
        codepoints,
        ssh,
        components: &[],
        broken: false,
    }
}

const fn kem(
    id: &'static str,
    name: &'static str,
    client: usize,
    server: usize,
    codepoints: &'static [u16],
) -> Seed {
    Seed {
        id,
        name,
        family: Family::PostQuantum,
        mechanism: Mechanism::Kem,
        client,
        server,
        codepoints,
        ssh: &[],
        components: &[],
        broken: false,
    }
}

const fn hybrid(
    id: &'static str,
    name: &'static str,
    client: usize,
    server: usize,
    codepoints: &'static [u16],
    ssh: &'static [&'static str],
    components: &'static [&'static str],
) -> Seed {
    Seed {
        id,
        name,
        family: Family::Hybrid,
        mechanism: Mechanism::HybridKem,
        client,
        server,
        codepoints,
        ssh,
        components,
        broken: false,
    }
}

const fn sike(id: &'static str, name: &'static str, client: usize, server: usize) -> Seed {
    Seed {
        broken: true,
        ..kem(id, name, client, server, &[])
    }
}

#[rustfmt::skip]
const SEEDS: &[Seed] = &[
    // classical
    classical("x25519", "X25519", Mechanism::Ecdh, 32, 32, &[0x001D],
        &["curve25519-sha256", "curve25519-sha256@libssh.org"]),
    classical("x448", "X448", Mechanism::Ecdh, 56, 56, &[0x001E], &["curve448-sha512"]),
    classical("ecdh_p256", "ECDH P-256", Mechanism::Ecdh, 65, 65, &[0x0017], &["ecdh-sha2-nistp256"]),
    classical("ecdh_p384", "ECDH P-384", Mechanism::Ecdh, 97, 97, &[0x0018], &["ecdh-sha2-nistp384"]),
    classical("ecdh_p521", "ECDH P-521", Mechanism::Ecdh, 133, 133, &[0x0019], &["ecdh-sha2-nistp521"]),
    classical("ffdhe2048", "FFDHE-2048", Mechanism::Ffdhe, 256, 256, &[0x0100], &[]),
    classical("modp2048", "MODP-2048 (SSH group14)", Mechanism::Ffdhe, 256, 256, &[],
        &["diffie-hellman-group14-sha256", "diffie-hellman-group14-sha1"]),
    classical("modp4096", "MODP-4096 (SSH group16)", Mechanism::Ffdhe, 512, 512, &[],
        &["diffie-hellman-group16-sha512"]),
    classical("rsa_2048", "RSA-2048 key transport", Mechanism::RsaKex, 256, 0, &[], &[]),
    classical("rsa_3072", "RSA-3072 key transport", Mechanism::RsaKex, 384, 0, &[], &[]),
    classical("rsa_4096", "RSA-4096 key transport", Mechanism::RsaKex, 512, 0, &[], &[]),

    // post-quantum KEMs
    kem("kyber512", "ML-KEM-512 (Kyber512)", 800, 768, &[0x0200]),
    kem("kyber768", "ML-KEM-768 (Kyber768)", 1184, 1088, &[0x0201]),
    kem("kyber1024", "ML-KEM-1024 (Kyber1024)", 1568, 1568, &[0x0202]),
    kem("frodokem640", "FrodoKEM-640", 9616, 9720, &[]),
    kem("frodokem976", "FrodoKEM-976", 15632, 15744, &[]),
    kem("frodokem1344", "FrodoKEM-1344", 21520, 21632, &[]),
    kem("hqc128", "HQC-128", 2249, 4433, &[0x022C]),
    kem("hqc192", "HQC-192", 4522, 8978, &[0x022D]),
    kem("hqc256", "HQC-256", 7245, 14421, &[0x022E]),
    kem("bike_l1", "BIKE-L1", 1541, 1573, &[0x0241]),
    kem("bike_l3", "BIKE-L3", 3083, 3115, &[0x0242]),
    kem("bike_l5", "BIKE-L5", 5122, 5154, &[0x0243]),
    kem("classic_mceliece_348864", "Classic-McEliece-348864", 261120, 96, &[]),
    kem("classic_mceliece_460896", "Classic-McEliece-460896", 524160, 156, &[]),
    kem("classic_mceliece_6688128", "Classic-McEliece-6688128", 1044992, 208, &[]),
    kem("classic_mceliece_6960119", "Classic-McEliece-6960119", 1047319, 194, &[]),
    kem("classic_mceliece_8192128", "Classic-McEliece-8192128", 1357824, 208, &[]),
    kem("sntrup761", "sntrup761", 1158, 1039, &[]),
    sike("sike_p434", "SIKE-p434", 330, 346),
    sike("sike_p503", "SIKE-p503", 378, 402),
    sike("sike_p610", "SIKE-p610", 462, 486),

    // hybrids: lengths are component sums
    hybrid("x25519_kyber512", "X25519Kyber512Draft00", 32 + 800, 32 + 768, &[0xFE30], &[],
        &["x25519", "kyber512"]),
    hybrid("x25519_kyber768", "X25519Kyber768Draft00", 32 + 1184, 32 + 1088, &[0x6399], &[],
        &["x25519", "kyber768"]),
    hybrid("p256_kyber768", "P256Kyber768Draft00", 65 + 1184, 65 + 1088, &[0x639A, 0xFE32], &[],
        &["ecdh_p256", "kyber768"]),
    hybrid("x448_kyber768", "X448+Kyber768", 56 + 1184, 56 + 1088, &[], &[],
        &["x448", "kyber768"]),
    hybrid("x448_kyber1024", "X448+Kyber1024", 56 + 1568, 56 + 1568, &[], &[],
        &["x448", "kyber1024"]),
    hybrid("x25519_mlkem768", "X25519MLKEM768", 1184 + 32, 1088 + 32, &[0x11EC],
        &["mlkem768x25519-sha256"], &["kyber768", "x25519"]),
    hybrid("secp256r1_mlkem768", "SecP256r1MLKEM768", 65 + 1184, 65 + 1088, &[0x11EB], &[],
        &["ecdh_p256", "kyber768"]),
    hybrid("secp384r1_mlkem1024", "SecP384r1MLKEM1024", 97 + 1568, 97 + 1568, &[0x11ED], &[],
        &["ecdh_p384", "kyber1024"]),
    hybrid("sntrup761_x25519", "sntrup761x25519", 1158 + 32, 1039 + 32, &[],
        &["sntrup761x25519-sha512@openssh.com", "sntrup761x25519-sha512"],
        &["sntrup761", "x25519"]),
];

pub(super) fn profiles() -> Vec<AlgorithmProfile> {
    SEEDS
        .iter()
        .map(|s| AlgorithmProfile {
            id: s.id.to_owned(),
            display_name: s.name.to_owned(),
            family: s.family,
            mechanism: s.mechanism,
            client_share_len: s.client,
            server_share_len: s.server,
            tls_group_codepoints: s.codepoints.to_vec(),
            ssh_kex_names: s.ssh.iter().map(|n| (*n).to_owned()).collect(),
            components: s.components.iter().map(|c| (*c).to_owned()).collect(),
            broken: s.broken,
        })
        .collect()
}
