use pqscope_core::analyze::{analyze_capture, CaptureReport};
use pqscope_core::kexdb::load_builtin;
use pqscope_core::verdict::EvalOptions;
use pqscope_testkit::fixtures::{self, SIX_FLOWS};
use pqscope_testkit::net;

fn run(bytes: &[u8], opts: &EvalOptions) -> CaptureReport {
    analyze_capture(bytes, &load_builtin(), opts).unwrap()
}

fn check_six(rep: &CaptureReport) {
    assert_eq!(rep.flows.len(), 6, "{rep:#?}");
    for (flow, want) in rep.flows.iter().zip(SIX_FLOWS.iter()) {
        assert_eq!(flow.src, want.client);
        assert_eq!(flow.dst, want.server);
        assert_eq!(flow.protocol.as_str(), want.protocol, "{flow:?}");
        assert_eq!(flow.classification.as_str(), want.classification, "{flow:?}");
        let ids: Vec<&str> = flow.candidates.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, [want.candidate], "{flow:?}");
        let basis = serde_json::to_value(flow.candidates[0].basis).unwrap();
        assert_eq!(basis, want.basis);
    }
    assert_eq!(rep.summary.total, 6);
    assert_eq!(rep.summary.classical, 4);
    assert_eq!(rep.summary.hybrid, 2);
    let ips: Vec<&str> = rep.pq_ips.iter().map(|p| p.ip.as_str()).collect();
    assert_eq!(ips, ["192.0.2.20", "198.51.100.6"]);
}

#[test]
fn six_flow_pcapng() {
    check_six(&run(&fixtures::six_flow_pcapng(), &EvalOptions::default()));
}

#[test]
fn six_flow_pcap_matches_pcapng() {
    let opts = EvalOptions::default();
    let a = run(&fixtures::six_flow_pcap(), &opts);
    check_six(&a);
    assert_eq!(a, run(&fixtures::six_flow_pcapng(), &opts));
}

#[test]
fn report_json_round_trip() {
    let rep = run(&fixtures::six_flow_pcapng(), &EvalOptions::default());
    let text = serde_json::to_string(&rep).unwrap();
    let back: CaptureReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, rep);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["flows", "summary", "pq_ips", "notes"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let f = &v["flows"][1];
    for key in ["src", "dst", "protocol", "classification", "candidates", "notes"] {
        assert!(f.get(key).is_some(), "{key}");
    }
    assert_eq!(f["candidates"][0]["id"], "x25519_kyber768");
}

#[test]
fn server_only_97_ambiguity() {
    let bytes = net::pcapng(&fixtures::server_only_97_packets());
    let opts = EvalOptions {
        tolerance: 1,
        ..Default::default()
    };
    let rep = run(&bytes, &opts);
    assert_eq!(rep.flows.len(), 1);
    let f = &rep.flows[0];
    assert_eq!(f.classification.as_str(), "unknown");
    let mut ids: Vec<&str> = f.candidates.iter().map(|c| c.id.as_str()).collect();
    ids.sort();
    assert_eq!(ids, ["classic_mceliece_348864", "ecdh_p384"]);
    assert!(f.notes.iter().any(|n| n == "ambiguous"), "{:?}", f.notes);
    assert_eq!(f.dst, "192.0.2.97:443");

    let exact = run(&bytes, &EvalOptions::default());
    let ids: Vec<&str> = exact.flows[0].candidates.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(ids, ["ecdh_p384"]);

    let biased = run(
        &bytes,
        &EvalOptions {
            tolerance: 1,
            prefer_pq: true,
            ..Default::default()
        },
    );
    assert_eq!(biased.flows[0].classification.as_str(), "post_quantum");
}

#[test]
fn quic_flow_decrypts_both_sides() {
    let rep = run(&net::pcapng(&fixtures::quic_packets()), &EvalOptions::default());
    assert_eq!(rep.flows.len(), 1, "{rep:#?}");
    let f = &rep.flows[0];
    assert_eq!(f.protocol.as_str(), "quic");
    assert_eq!(f.src, "10.0.0.4:55000");
    assert_eq!(f.classification.as_str(), "hybrid", "{f:?}");
    assert_eq!(f.candidates[0].id, "x25519_mlkem768");
    assert_eq!(rep.pq_ips[0].ip, "192.0.2.40");
}

#[test]
fn empty_capture_reports_nothing() {
    let rep = run(&net::pcap(&[]), &EvalOptions::default());
    assert!(rep.flows.is_empty());
    assert_eq!(rep.summary.total, 0);
    assert_eq!(rep.notes, ["no handshakes found"]);
}

#[test]
fn malformed_capture_is_an_error() {
    assert!(analyze_capture(&[0xDE, 0xAD, 0, 0], &load_builtin(), &EvalOptions::default()).is_err());
}

#[test]
fn flows_ordered_by_first_timestamp() {
    let mut packets = fixtures::six_flow_packets();
    packets.reverse();
    let rep = run(&net::pcapng(&packets), &EvalOptions::default());
    check_six(&rep);
}

#[test]
fn client_hello_only_is_unconfirmed() {
    let c = fixtures::tls13_hybrid_conversation();
    let packets = net::TcpConversation::new(("10.1.0.1", 40000), ("192.0.2.50", 443), 1_000_000)
        .packets(&c.client, &[]);
    let rep = run(&net::pcapng(&packets), &EvalOptions::default());
    let f = &rep.flows[0];
    assert_eq!(f.classification.as_str(), "unknown");
    let ids: Vec<&str> = f.candidates.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(ids, ["x25519", "x25519_kyber768"]);
    assert!(f.notes.iter().any(|n| n.contains("unconfirmed")), "{:?}", f.notes);
}
