//! Fuse per-connection handshake evidence into a key-exchange verdict.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::capture::FlowKey;
use crate::kexdb::{Family, Mechanism, ProfileSet};
use crate::tls::KeyShare;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Tls13,
    Tls12,
    Ssh,
    Quic,
    OpenvpnTls,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Tls13 => "tls13",
            Protocol::Tls12 => "tls12",
            Protocol::Ssh => "ssh",
            Protocol::Quic => "quic",
            Protocol::OpenvpnTls => "openvpn_tls",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Classical,
    PostQuantum,
    Hybrid,
    Unknown,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Classical => "classical",
            Classification::PostQuantum => "post_quantum",
            Classification::Hybrid => "hybrid",
            Classification::Unknown => "unknown",
        }
    }

    fn from_family(f: Family) -> Self {
        match f {
            Family::Classical => Classification::Classical,
            Family::PostQuantum => Classification::PostQuantum,
            Family::Hybrid => Classification::Hybrid,
        }
    }

    /// Post-quantum or hybrid.
    pub fn is_pq(self) -> bool {
        matches!(self, Classification::PostQuantum | Classification::Hybrid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Codepoint,
    SshName,
    SizePair,
    SizeClientOnly,
    SizeServerOnly,
}

impl Basis {
    fn rank(self) -> u8 {
        match self {
            Basis::Codepoint | Basis::SshName => 0,
            Basis::SizePair => 1,
            Basis::SizeClientOnly | Basis::SizeServerOnly => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub basis: Basis,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionEvidence {
    pub flow: FlowKey,
    pub protocol: Protocol,
    pub client_group: Option<u16>,
    pub client_share_len: Option<usize>,
    pub server_group: Option<u16>,
    pub server_share_len: Option<usize>,
    pub ssh_negotiated_name: Option<String>,
    /// Both sides of the handshake were observed.
    pub complete: bool,
    /// Every key share the client offered (TLS 1.3 and QUIC).
    pub client_offers: Vec<KeyShare>,
    /// Key exchange mechanism implied by the negotiated TLS 1.2 suite.
    pub kx_hint: Option<Mechanism>,
    /// The server resumed a session without a fresh key exchange.
    pub resumed: bool,
    /// Group named by a HelloRetryRequest.
    pub hello_retry_group: Option<u16>,
    pub notes: Vec<String>,
}

impl ConnectionEvidence {
    pub fn new(flow: FlowKey, protocol: Protocol) -> Self {
        ConnectionEvidence {
            flow,
            protocol,
            client_group: None,
            client_share_len: None,
            server_group: None,
            server_share_len: None,
            ssh_negotiated_name: None,
            complete: false,
            client_offers: Vec::new(),
            kx_hint: None,
            resumed: false,
            hello_retry_group: None,
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub flow: FlowKey,
    pub classification: Classification,
    pub candidates: Vec<Candidate>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Byte slack for size matching.
    pub tolerance: usize,
    /// Resolve mixed-family candidate sets toward post-quantum.
    pub prefer_pq: bool,
    /// Ignore SSH algorithm names and classify SSH by sizes alone.
    pub ssh_size_only: bool,
}

fn push_note(notes: &mut Vec<String>, note: &str) {
    if !notes.iter().any(|n| n == note) {
        notes.push(note.to_owned());
    }
}

fn filter_mechanism(ids: Vec<String>, profiles: &ProfileSet, hint: Option<Mechanism>) -> Vec<String> {
    match hint {
        None => ids,
        Some(m) => ids
            .into_iter()
            .filter(|id| profiles.get(id).map(|p| p.mechanism == m).unwrap_or(false))
            .collect(),
    }
}

/// Classify one connection. Precedence: server codepoint, SSH name, size
/// pair, single-sided sizes.
pub fn evaluate(ev: &ConnectionEvidence, profiles: &ProfileSet, opts: &EvalOptions) -> Verdict {
    let mut notes = ev.notes.clone();
    let mut candidates: Vec<Candidate> = Vec::new();
    let tol = opts.tolerance;

    let server_group = ev.server_group.or(ev.hello_retry_group);
    if ev.server_group.is_none() && ev.hello_retry_group.is_some() {
        push_note(&mut notes, "hello retry request");
    }
    let by_group = server_group.and_then(|g| profiles.candidates_by_group(g));
    let by_name = if opts.ssh_size_only {
        None
    } else {
        ev.ssh_negotiated_name
            .as_deref()
            .and_then(|n| profiles.candidates_by_ssh_name(n))
    };

    if let Some(id) = by_group {
        candidates.push(Candidate { id: id.to_owned(), basis: Basis::Codepoint });
        if let (Some(len), Some(p)) = (ev.server_share_len, profiles.get(id)) {
            if len.abs_diff(p.server_share_len) > tol && p.server_share_len > 0 {
                push_note(&mut notes, "server share length does not match group");
            }
        }
    } else if let Some(id) = by_name {
        candidates.push(Candidate { id: id.to_owned(), basis: Basis::SshName });
    } else if ev.resumed && ev.client_share_len.is_none() && ev.server_share_len.is_none() {
        push_note(&mut notes, "resumed");
    } else {
        let client = ev
            .client_share_len
            .map(|l| filter_mechanism(profiles.candidates_by_client_len(l, tol), profiles, ev.kx_hint));
        let server = ev
            .server_share_len
            .map(|l| filter_mechanism(profiles.candidates_by_server_len(l, tol), profiles, ev.kx_hint));
        match (client, server) {
            (Some(c), Some(s)) => {
                let s: BTreeSet<&String> = s.iter().collect();
                let both: Vec<_> = c.iter().filter(|id| s.contains(id)).collect();
                if both.is_empty() {
                    push_note(&mut notes, "inconsistent pair");
                }
                candidates.extend(both.into_iter().map(|id| Candidate {
                    id: id.clone(),
                    basis: Basis::SizePair,
                }));
            }
            (None, Some(s)) => candidates.extend(s.into_iter().map(|id| Candidate {
                id,
                basis: Basis::SizeServerOnly,
            })),
            (Some(c), None) if ev.client_offers.is_empty() => {
                push_note(&mut notes, "unconfirmed");
                candidates.extend(c.into_iter().map(|id| Candidate {
                    id,
                    basis: Basis::SizeClientOnly,
                }));
            }
            _ => {}
        }
        if candidates.is_empty() && ev.server_share_len.is_none() && !ev.client_offers.is_empty() {
            push_note(&mut notes, "unconfirmed");
            for offer in &ev.client_offers {
                match profiles.candidates_by_group(offer.group) {
                    Some(id) => candidates.push(Candidate { id: id.to_owned(), basis: Basis::Codepoint }),
                    None => candidates.extend(
                        profiles
                            .candidates_by_client_len(offer.share_len, tol)
                            .into_iter()
                            .map(|id| Candidate { id, basis: Basis::SizeClientOnly }),
                    ),
                }
            }
        }
        if ev.kx_hint == Some(Mechanism::RsaKex) && !candidates.is_empty() {
            push_note(&mut notes, "low confidence: RSA key transport inferred from length");
        }
    }

    candidates.sort_by(|a, b| a.basis.rank().cmp(&b.basis.rank()).then_with(|| a.id.cmp(&b.id)));
    let mut seen = BTreeSet::new();
    candidates.retain(|c| seen.insert(c.id.clone()));

    let families: BTreeSet<Family> = candidates
        .iter()
        .filter_map(|c| profiles.get(&c.id).map(|p| p.family))
        .collect();
    let classification = match families.len() {
        0 => Classification::Unknown,
        1 => Classification::from_family(*families.iter().next().unwrap()),
        _ => {
            push_note(&mut notes, "ambiguous");
            if opts.prefer_pq && families.contains(&Family::PostQuantum) {
                Classification::PostQuantum
            } else if opts.prefer_pq && families.contains(&Family::Hybrid) {
                Classification::Hybrid
            } else {
                Classification::Unknown
            }
        }
    };
    if candidates.iter().any(|c| profiles.get(&c.id).map(|p| p.broken).unwrap_or(false)) {
        push_note(&mut notes, "candidate algorithm is broken");
    }

    Verdict {
        flow: ev.flow,
        classification,
        candidates,
        notes,
    }
}
