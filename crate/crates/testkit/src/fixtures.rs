//! Canned multi-protocol captures with their expected classifications.

use crate::net::{self, Packet, TcpConversation};
use crate::{openvpn, quic, ssh, tls};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedFlow {
    pub client: &'static str,
    pub server: &'static str,
    pub protocol: &'static str,
    pub classification: &'static str,
    pub candidate: &'static str,
    pub basis: &'static str,
}

pub const SIX_FLOWS: [ExpectedFlow; 6] = [
    ExpectedFlow {
        client: "10.0.0.1:40001",
        server: "192.0.2.10:443",
        protocol: "tls13",
        classification: "classical",
        candidate: "x25519",
        basis: "codepoint",
    },
    ExpectedFlow {
        client: "10.0.0.1:40002",
        server: "192.0.2.20:443",
        protocol: "tls13",
        classification: "hybrid",
        candidate: "x25519_kyber768",
        basis: "codepoint",
    },
    ExpectedFlow {
        client: "10.0.0.1:40003",
        server: "192.0.2.30:443",
        protocol: "tls12",
        classification: "classical",
        candidate: "ecdh_p256",
        basis: "codepoint",
    },
    ExpectedFlow {
        client: "10.0.0.2:50001",
        server: "198.51.100.5:22",
        protocol: "ssh",
        classification: "classical",
        candidate: "x25519",
        basis: "ssh_name",
    },
    ExpectedFlow {
        client: "10.0.0.2:50002",
        server: "198.51.100.6:22",
        protocol: "ssh",
        classification: "hybrid",
        candidate: "sntrup761_x25519",
        basis: "ssh_name",
    },
    ExpectedFlow {
        client: "10.0.0.3:51000",
        server: "203.0.113.7:1194",
        protocol: "openvpn_tls",
        classification: "classical",
        candidate: "ecdh_p384",
        basis: "codepoint",
    },
];

fn split(addr: &'static str) -> (&'static str, u16) {
    let (ip, port) = addr.rsplit_once(':').unwrap();
    (ip, port.parse().unwrap())
}

fn tcp(i: usize, client: &[u8], server: &[u8]) -> Vec<Packet> {
    let e = &SIX_FLOWS[i];
    TcpConversation::new(split(e.client), split(e.server), 1_700_000_000_000_000 + i as u64 * 10_000)
        .packets(client, server)
}

/// The TLS 1.3 hybrid conversation used by flow 2, also handy on its own.
pub fn tls13_hybrid_conversation() -> tls::Conversation {
    let hello = tls::ClientHello {
        groups: vec![0x6399, 0x001D],
        key_shares: vec![(0x6399, 32 + 1184), (0x001D, 32)],
        grease: true,
        ..Default::default()
    };
    tls::tls13_conversation(&hello, 0x6399, 32 + 1088)
}

/// Packets of the six-flow fixture, in capture order.
pub fn six_flow_packets() -> Vec<Packet> {
    let mut out = Vec::new();

    let hello = tls::ClientHello {
        grease: true,
        ..Default::default()
    };
    let c = tls::tls13_conversation(&hello, 0x001D, 32);
    out.extend(tcp(0, &c.client, &c.server));

    let c = tls13_hybrid_conversation();
    out.extend(tcp(1, &c.client, &c.server));

    let hello12 = tls::ClientHello {
        tls13: false,
        suites: vec![0xC02F, 0xC030, 0x009C],
        groups: vec![0x0017, 0x0018],
        ..Default::default()
    };
    let c = tls::tls12_ecdhe_conversation(&hello12, 0xC02F, 0x0017, 65);
    out.extend(tcp(2, &c.client, &c.server));

    let s = ssh::conversation(
        &["curve25519-sha256", "ecdh-sha2-nistp256", "ext-info-c"],
        &["curve25519-sha256", "curve25519-sha256@libssh.org", "kex-strict-s-v00@openssh.com"],
        32,
        32,
    );
    out.extend(tcp(3, &s.client, &s.server));

    let s = ssh::conversation(
        &["sntrup761x25519-sha512@openssh.com", "curve25519-sha256", "ext-info-c"],
        &["sntrup761x25519-sha512@openssh.com", "curve25519-sha256"],
        1158 + 32,
        1039 + 32,
    );
    out.extend(tcp(4, &s.client, &s.server));

    let hello_vpn = tls::ClientHello {
        tls13: false,
        sni: None,
        suites: vec![0xC030, 0xC02C],
        groups: vec![0x0018],
        ..Default::default()
    };
    let c = tls::tls12_ecdhe_conversation(&hello_vpn, 0xC030, 0x0018, 97);
    let client = openvpn::wrap(&c.client, true, 100, true);
    let server = openvpn::wrap(&c.server, false, 500, false);
    out.extend(tcp(5, &client, &server));
    out
}

pub fn six_flow_pcapng() -> Vec<u8> {
    net::pcapng(&six_flow_packets())
}

pub fn six_flow_pcap() -> Vec<u8> {
    net::pcap(&six_flow_packets())
}

/// A TLS 1.3 flow whose only handshake evidence is a ServerHello with an
/// unregistered group codepoint and a 97-byte share.
pub fn server_only_97_packets() -> Vec<Packet> {
    let mut server = tls::records(22, &tls::server_hello_13(0x2F00, 97), 1 << 14);
    server.extend(tls::change_cipher_spec());
    server.extend(tls::encrypted(400, 9));
    TcpConversation::new(("10.0.0.9", 45000), ("192.0.2.97", 443), 1_700_000_100_000_000)
        .packets(&[], &server)
}

/// QUIC: the RFC 9001 client Initial and two server Initials answering
/// with group 0x11EC.
pub fn quic_packets() -> Vec<Packet> {
    let mut dgrams = vec![(true, quic::rfc9001_client_initial())];
    for d in quic::server_initials_11ec() {
        dgrams.push((false, d));
    }
    net::udp_packets(("10.0.0.4", 55000), ("192.0.2.40", 443), 1_700_000_200_000_000, &dgrams)
}
