//! Whole-capture analysis: flow assembly, protocol detection, dissection
//! and verdicts, summarized as a `CaptureReport`.

use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use crate::capture::{self, CaptureError, FlowData, Frame, Side, Transport};
use crate::kexdb::{Mechanism, ProfileSet};
use crate::openvpn::{deframe_openvpn_tcp, OpenVpnError};
use crate::quic::{self, QuicSide};
use crate::ssh;
use crate::tls::{self, KxKind, TlsFacts, HS_CLIENT_HELLO, TLS13};
use crate::verdict::{
    evaluate, Candidate, Classification, ConnectionEvidence, EvalOptions, Protocol, Verdict,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowReport {
    /// Client endpoint, `ip:port`.
    pub src: String,
    /// Server endpoint, `ip:port`.
    pub dst: String,
    pub protocol: Protocol,
    pub classification: Classification,
    pub candidates: Vec<Candidate>,
    pub notes: Vec<String>,
    /// Capture timestamp of the flow's first packet, nanoseconds since the
    /// Unix epoch.
    pub first_ts: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub classical: usize,
    pub post_quantum: usize,
    pub hybrid: usize,
    pub unknown: usize,
}

impl Summary {
    fn count(&mut self, c: Classification) {
        self.total += 1;
        match c {
            Classification::Classical => self.classical += 1,
            Classification::PostQuantum => self.post_quantum += 1,
            Classification::Hybrid => self.hybrid += 1,
            Classification::Unknown => self.unknown += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PqIp {
    pub ip: String,
    /// Probable key exchange algorithms seen with this address.
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureReport {
    pub flows: Vec<FlowReport>,
    pub summary: Summary,
    /// Server addresses with a post-quantum or hybrid verdict.
    pub pq_ips: Vec<PqIp>,
    pub notes: Vec<String>,
}

/// One analyzed flow: the extracted evidence and its verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowAnalysis {
    pub evidence: ConnectionEvidence,
    pub verdict: Verdict,
    pub client: Side,
    pub first_ts: u64,
}

/// Map TLS handshake facts onto connection evidence.
pub fn tls_evidence(
    flow: capture::FlowKey,
    facts: &TlsFacts,
    protocol: Option<Protocol>,
) -> ConnectionEvidence {
    let offers_13 = facts
        .last_client_hello()
        .map(|c| c.supported_versions.contains(&TLS13))
        .unwrap_or(false);
    let is_13 = facts.is_tls13() || (facts.server_hello.is_none() && offers_13);
    let protocol = protocol.unwrap_or(if is_13 { Protocol::Tls13 } else { Protocol::Tls12 });
    let mut ev = ConnectionEvidence::new(flow, protocol);
    ev.notes = facts.notes.clone();
    if let Some((level, desc)) = facts.alert {
        ev.notes.push(format!("alert level {level} description {desc}"));
    }
    let ch = facts.last_client_hello();
    if let Some(hrr) = &facts.hello_retry {
        ev.hello_retry_group = hrr.key_share.map(|k| k.group);
    }

    if is_13 || facts.server_hello.as_ref().and_then(|s| s.key_share).is_some() {
        if let Some(ch) = ch {
            ev.client_offers = ch.key_shares.clone();
        }
        if let Some(sh) = &facts.server_hello {
            match sh.key_share {
                Some(ks) => {
                    ev.server_group = Some(ks.group);
                    ev.server_share_len = Some(ks.share_len);
                    if let Some(offer) = ch.and_then(|c| c.key_shares.iter().find(|o| o.group == ks.group)) {
                        ev.client_group = Some(offer.group);
                        ev.client_share_len = Some(offer.share_len);
                    }
                }
                None if sh.selected_psk => ev.resumed = true,
                None => ev.notes.push("server hello without key share".into()),
            }
        }
    } else if let Some(sh) = &facts.server_hello {
        match &facts.tls12 {
            Some(k) => {
                ev.server_group = k.server_curve;
                ev.server_share_len = k.server_pub_len;
                ev.client_share_len = k.client_pub_len;
                ev.kx_hint = Some(match k.kx_kind {
                    KxKind::Ecdhe => Mechanism::Ecdh,
                    KxKind::Dhe => Mechanism::Ffdhe,
                    KxKind::Rsa => Mechanism::RsaKex,
                });
            }
            None => {
                let same_session = ch
                    .map(|c| !c.session_id.is_empty() && c.session_id == sh.session_id)
                    .unwrap_or(false);
                if same_session {
                    ev.resumed = true;
                }
            }
        }
    }
    let client_seen = ch.is_some() || ev.client_share_len.is_some();
    let server_seen = facts.server_hello.is_some() || facts.hello_retry.is_some();
    ev.complete = client_seen && server_seen;
    ev
}

fn looks_like_tls(stream: &[u8]) -> bool {
    stream.len() >= 3 && (20..=23).contains(&stream[0]) && stream[1] == 3 && stream[2] <= 4
}

/// Pick the client side by content: the side that sent the first
/// ClientHello, else the TCP initiator.
fn tls_client_side(flow: &FlowData, a: &[u8], b: &[u8]) -> Side {
    let starts_with_ch = |s: &[u8]| s.len() >= 6 && s[0] == 22 && s[5] == HS_CLIENT_HELLO;
    match (starts_with_ch(a), starts_with_ch(b)) {
        (true, false) => Side::A,
        (false, true) => Side::B,
        _ => flow.initiator,
    }
}

fn analyze_tcp(flow: &FlowData) -> Option<(ConnectionEvidence, Side)> {
    let a = flow.dir_ab.stream.as_slice();
    let b = flow.dir_ba.stream.as_slice();
    let client = flow.initiator;
    let stream = |side: Side| flow.sent_by(side).stream.as_slice();

    if ssh::parse_banner(stream(client)).is_ok() || ssh::parse_banner(stream(client.other())).is_ok() {
        let facts = ssh::dissect_streams(stream(client), stream(client.other()));
        let mut ev = ConnectionEvidence::new(flow.key, Protocol::Ssh);
        ev.ssh_negotiated_name = facts.negotiated_kex.clone();
        ev.client_share_len = facts.init.as_ref().map(|i| i.public_value_len);
        ev.server_share_len = facts.reply.as_ref().map(|r| r.public_value_len);
        ev.complete = facts.client_kexinit.is_some() && facts.server_kexinit.is_some();
        ev.notes = facts.notes;
        return Some((ev, client));
    }

    let vpn_a = deframe_openvpn_tcp(a);
    let vpn_b = deframe_openvpn_tcp(b);
    let not_vpn = |r: &Result<Vec<u8>, OpenVpnError>| matches!(r, Err(OpenVpnError::NotOpenVPN));
    if !(not_vpn(&vpn_a) && not_vpn(&vpn_b)) && !looks_like_tls(a) && !looks_like_tls(b) {
        let mut notes = Vec::new();
        let mut take = |r: Result<Vec<u8>, OpenVpnError>| match r {
            Ok(s) => s,
            Err(OpenVpnError::EncryptedControlChannel) => {
                let note = "encrypted control channel".to_owned();
                if !notes.contains(&note) {
                    notes.push(note);
                }
                Vec::new()
            }
            Err(OpenVpnError::NotOpenVPN) => Vec::new(),
        };
        let ta = take(vpn_a);
        let tb = take(vpn_b);
        let client = tls_client_side(flow, &ta, &tb);
        let (cs, ss) = if client == Side::A { (&ta, &tb) } else { (&tb, &ta) };
        let facts = tls::dissect_streams(cs, ss);
        let mut ev = tls_evidence(flow.key, &facts, Some(Protocol::OpenvpnTls));
        ev.notes.extend(notes);
        return Some((ev, client));
    }

    if looks_like_tls(a) || looks_like_tls(b) {
        let client = tls_client_side(flow, a, b);
        let facts = tls::dissect_streams(stream(client), stream(client.other()));
        let any = !facts.client_hellos.is_empty()
            || facts.server_hello.is_some()
            || facts.hello_retry.is_some()
            || !facts.notes.is_empty();
        if !any {
            return None;
        }
        return Some((tls_evidence(flow.key, &facts, None), client));
    }
    None
}

fn is_quic_initial(d: &[u8]) -> bool {
    d.len() >= 7 && d[0] & 0xF0 == 0xC0 && d[1..5] == quic::QUIC_V1.to_be_bytes()
}

fn analyze_udp(flow: &FlowData) -> Option<(ConnectionEvidence, Side)> {
    // The client sends the first Initial.
    let mut first: Option<(u64, Side)> = None;
    for side in [Side::A, Side::B] {
        if let Some(d) = flow.sent_by(side).datagrams.iter().find(|d| is_quic_initial(&d.data)) {
            if first.map(|(ts, _)| d.ts_nanos < ts).unwrap_or(true) {
                first = Some((d.ts_nanos, side));
            }
        }
    }
    let (_, client) = first?;
    let mut notes = Vec::new();
    let mut client_frames = Vec::new();
    let mut dcids: Vec<Vec<u8>> = Vec::new();
    for d in &flow.sent_by(client).datagrams {
        if d.data.first().map(|b| b & 0x80 == 0).unwrap_or(true) {
            continue;
        }
        match quic::unprotect_and_decrypt(&d.data, QuicSide::Client, None) {
            Ok(dec) => {
                for p in dec.initials {
                    if !dcids.contains(&p.dcid) {
                        dcids.push(p.dcid.clone());
                    }
                    client_frames.extend(p.crypto_frames);
                }
            }
            Err(e) => notes.push(format!("client: {e}")),
        }
    }
    let mut server_frames = Vec::new();
    for d in &flow.sent_by(client.other()).datagrams {
        if d.data.first().map(|b| b & 0x80 == 0).unwrap_or(true) {
            continue;
        }
        let mut last_err = None;
        let mut done = false;
        for dcid in &dcids {
            match quic::unprotect_and_decrypt(&d.data, QuicSide::Server, Some(dcid)) {
                Ok(dec) => {
                    for p in dec.initials {
                        server_frames.extend(p.crypto_frames);
                    }
                    done = true;
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
        if !done {
            if let Some(e) = last_err {
                notes.push(format!("server: {e}"));
            }
        }
    }
    let (cbytes, cgap) = quic::reassemble_crypto(&client_frames);
    let (sbytes, sgap) = quic::reassemble_crypto(&server_frames);
    if cgap {
        notes.push("client: CRYPTO stream has a gap".into());
    }
    if sgap {
        notes.push("server: CRYPTO stream has a gap".into());
    }
    let (cmsgs, ctrunc) = tls::split_handshake_messages(&cbytes);
    let (smsgs, strunc) = tls::split_handshake_messages(&sbytes);
    let mut facts = tls::dissect_messages(&cmsgs, &smsgs);
    if let Some(e) = ctrunc {
        facts.notes.push(format!("client: {e}"));
    }
    if let Some(e) = strunc {
        // Server CRYPTO data continues into the Handshake space.
        if facts.server_hello.is_none() {
            facts.notes.push(format!("server: {e}"));
        }
    }
    notes.append(&mut facts.notes);
    facts.notes = notes;
    Some((tls_evidence(flow.key, &facts, Some(Protocol::Quic)), client))
}

/// Evidence and verdict for one assembled flow, or `None` if it carries no
/// recognizable handshake.
pub fn analyze_flow(flow: &FlowData, profiles: &ProfileSet, opts: &EvalOptions) -> Option<FlowAnalysis> {
    let (mut evidence, client) = match flow.key.transport {
        Transport::Tcp => analyze_tcp(flow)?,
        Transport::Udp => analyze_udp(flow)?,
    };
    if flow.truncated {
        evidence.notes.push("capture incomplete for this flow".into());
    }
    let verdict = evaluate(&evidence, profiles, opts);
    Some(FlowAnalysis {
        evidence,
        verdict,
        client,
        first_ts: flow.first_ts,
    })
}

/// Build the report from analyzed flows.
pub fn report(mut flows: Vec<FlowAnalysis>) -> CaptureReport {
    flows.sort_by(|a, b| a.first_ts.cmp(&b.first_ts).then_with(|| a.verdict.flow.cmp(&b.verdict.flow)));
    let mut rep = CaptureReport::default();
    let mut pq: BTreeMap<IpAddr, BTreeSet<String>> = BTreeMap::new();
    for f in flows {
        let key = f.verdict.flow;
        let server = key.endpoint(f.client.other());
        rep.summary.count(f.verdict.classification);
        if f.verdict.classification.is_pq() {
            pq.entry(server.ip())
                .or_default()
                .extend(f.verdict.candidates.iter().map(|c| c.id.clone()));
        }
        rep.flows.push(FlowReport {
            src: key.endpoint(f.client).to_string(),
            dst: server.to_string(),
            protocol: f.evidence.protocol,
            classification: f.verdict.classification,
            candidates: f.verdict.candidates,
            notes: f.verdict.notes,
            first_ts: f.first_ts,
        });
    }
    rep.pq_ips = pq
        .into_iter()
        .map(|(ip, c)| PqIp {
            ip: ip.to_string(),
            candidates: c.into_iter().collect(),
        })
        .collect();
    if rep.flows.is_empty() {
        rep.notes.push("no handshakes found".into());
    }
    rep
}

pub fn analyze_frames(frames: &[Frame], profiles: &ProfileSet, opts: &EvalOptions) -> CaptureReport {
    let flows = capture::assemble_flows(frames);
    report(
        flows
            .values()
            .filter_map(|f| analyze_flow(f, profiles, opts))
            .collect(),
    )
}

/// Analyze a pcap or pcapng file held in memory.
pub fn analyze_capture(
    data: &[u8],
    profiles: &ProfileSet,
    opts: &EvalOptions,
) -> Result<CaptureReport, CaptureError> {
    let frames = capture::read_capture(data)?;
    Ok(analyze_frames(&frames, profiles, opts))
}
