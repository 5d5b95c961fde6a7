//! Active TLS 1.3 probing: offer post-quantum and hybrid groups, record
//! which group the server selects.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::sync::Arc;
use std::time::{Duration, Instant};

use pqscope_core::analyze::tls_evidence;
use pqscope_core::capture::{FlowKey, Transport};
use pqscope_core::kexdb::ProfileSet;
use pqscope_core::tls::{
    self, ClientHelloBuilder, CONTENT_ALERT, CONTENT_APPLICATION_DATA, CONTENT_CHANGE_CIPHER_SPEC, CONTENT_HANDSHAKE,
    HS_SERVER_HELLO,
};
use pqscope_core::verdict::{evaluate, Classification, EvalOptions, Verdict};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio::sync::{mpsc, Semaphore};

pub const X25519: u16 = 0x001D;

/// Groups offered by default: the deployed hybrids, then X25519.
pub const DEFAULT_OFFER: [u16; 4] = [0x11EC, 0x6399, 0x11EB, X25519];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProbeError {
    #[error("no key share bytes supplied for group 0x{0:04x}")]
    MissingBlob(u16),
    #[error("probe hello failed self-check: {0}")]
    SelfCheck(String),
}

/// Where key share bytes come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShareSource {
    /// Advertise every group but send a share only for X25519 (fresh random
    /// bytes); servers preferring another group answer with a
    /// HelloRetryRequest naming it.
    Hrr,
    /// Send the supplied bytes as the share for each offered group.
    Blob(BTreeMap<u16, Vec<u8>>),
}

/// A TLS 1.3 ClientHello, as records, offering `offer` in order.
pub fn build_probe_hello(offer: &[u16], source: &ShareSource, sni: Option<&str>) -> Result<Vec<u8>, ProbeError> {
    build_probe_hello_with(offer, source, sni, &mut rand::rng())
}

pub fn build_probe_hello_with<R: Rng>(
    offer: &[u16],
    source: &ShareSource,
    sni: Option<&str>,
    rng: &mut R,
) -> Result<Vec<u8>, ProbeError> {
    let mut b = ClientHelloBuilder {
        supported_groups: offer.to_vec(),
        sni: sni.map(str::to_owned),
        session_id: vec![0; 32],
        ..Default::default()
    };
    rng.fill(&mut b.random);
    rng.fill(&mut b.session_id[..]);
    match source {
        ShareSource::Hrr => {
            if offer.contains(&X25519) {
                let mut share = vec![0u8; 32];
                rng.fill(&mut share[..]);
                b.key_shares.push((X25519, share));
            }
        }
        ShareSource::Blob(blobs) => {
            for &g in offer {
                let bytes = blobs.get(&g).ok_or(ProbeError::MissingBlob(g))?;
                b.key_shares.push((g, bytes.clone()));
            }
        }
    }
    let records = b.records();
    self_check(&records, &b)?;
    Ok(records)
}

fn self_check(records: &[u8], b: &ClientHelloBuilder) -> Result<(), ProbeError> {
    let fail = |m: String| ProbeError::SelfCheck(m);
    let recs = tls::parse_records(records).map_err(|e| fail(e.to_string()))?;
    let msgs = tls::reassemble_handshake(&recs.records).map_err(|e| fail(e.to_string()))?;
    let ch = tls::parse_client_hello(&msgs[0].body).map_err(|e| fail(e.to_string()))?;
    let want: Vec<(u16, usize)> = b.key_shares.iter().map(|(g, s)| (*g, s.len())).collect();
    let got: Vec<(u16, usize)> = ch.key_shares.iter().map(|k| (k.group, k.share_len)).collect();
    if ch.supported_groups != b.supported_groups || got != want {
        return Err(fail("offered groups do not round-trip".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOutcome {
    SelectedGroup(u16),
    HelloRetry(u16),
    /// TLS alert description code.
    Alert(u8),
    Timeout,
    DnsFailure,
    TcpRefused,
    /// The server answered with something that is not a TLS server flight.
    Malformed,
}

impl ProbeOutcome {
    pub fn is_error(self) -> bool {
        matches!(
            self,
            ProbeOutcome::Timeout | ProbeOutcome::DnsFailure | ProbeOutcome::TcpRefused | ProbeOutcome::Malformed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub domain: String,
    pub ip: Option<IpAddr>,
    pub port: u16,
    pub outcome: ProbeOutcome,
    pub rtt_ms: Option<f64>,
    pub verdict: Option<Verdict>,
    /// Left for external enrichment.
    pub org: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub offer: Vec<u16>,
    pub source: ShareSource,
    pub timeout: Duration,
    pub eval: EvalOptions,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            offer: DEFAULT_OFFER.to_vec(),
            source: ShareSource::Hrr,
            timeout: Duration::from_secs(5),
            eval: EvalOptions::default(),
        }
    }
}

/// Classify the first server flight read so far; `None` means more bytes
/// are needed.
fn first_flight_outcome(buf: &[u8]) -> Option<ProbeOutcome> {
    let recs = match tls::parse_records(buf) {
        Ok(r) => r,
        Err(_) => return Some(ProbeOutcome::Malformed),
    };
    let mut handshake = Vec::new();
    for rec in &recs.records {
        match rec.content_type {
            CONTENT_ALERT if rec.payload.len() >= 2 && handshake.is_empty() => {
                return Some(ProbeOutcome::Alert(rec.payload[1]))
            }
            CONTENT_HANDSHAKE => handshake.push(rec.clone()),
            CONTENT_CHANGE_CIPHER_SPEC | CONTENT_APPLICATION_DATA | CONTENT_ALERT if !handshake.is_empty() => break,
            _ => return Some(ProbeOutcome::Malformed),
        }
    }
    let hs = tls::collect_handshake(&handshake);
    let msg = hs.messages.first()?;
    if msg.msg_type != HS_SERVER_HELLO {
        return Some(ProbeOutcome::Malformed);
    }
    let sh = match tls::parse_server_hello(&msg.body) {
        Ok(sh) => sh,
        Err(_) => return Some(ProbeOutcome::Malformed),
    };
    Some(match (sh.is_hello_retry, sh.key_share) {
        (true, Some(ks)) => ProbeOutcome::HelloRetry(ks.group),
        (false, Some(ks)) => ProbeOutcome::SelectedGroup(ks.group),
        _ => ProbeOutcome::Malformed,
    })
}

/// The verdict capture analysis would reach for this exchange.
pub fn probe_verdict(
    client: SocketAddr,
    server: SocketAddr,
    hello: &[u8],
    response: &[u8],
    profiles: &ProfileSet,
    eval: &EvalOptions,
) -> Verdict {
    let (key, _) = FlowKey::new(client.ip(), client.port(), server.ip(), server.port(), Transport::Tcp);
    let facts = tls::dissect_streams(hello, response);
    evaluate(&tls_evidence(key, &facts, None), profiles, eval)
}

async fn exchange(addr: SocketAddr, hello: &[u8], timeout: Duration) -> (ProbeOutcome, Option<f64>, Vec<u8>, Option<SocketAddr>) {
    let start = Instant::now();
    let deadline = tokio::time::Instant::now() + timeout;
    let mut stream = match tokio::time::timeout_at(deadline, TcpStream::connect(addr)).await {
        Err(_) => return (ProbeOutcome::Timeout, None, Vec::new(), None),
        Ok(Err(_)) => return (ProbeOutcome::TcpRefused, None, Vec::new(), None),
        Ok(Ok(s)) => s,
    };
    let local = stream.local_addr().ok();
    if stream.write_all(hello).await.is_err() {
        return (ProbeOutcome::Malformed, None, Vec::new(), local);
    }
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    loop {
        match tokio::time::timeout_at(deadline, stream.read(&mut chunk)).await {
            Err(_) => return (ProbeOutcome::Timeout, None, buf, local),
            Ok(Err(_)) | Ok(Ok(0)) => {
                let outcome = first_flight_outcome(&buf).unwrap_or(ProbeOutcome::Malformed);
                let rtt = (!buf.is_empty()).then(|| start.elapsed().as_secs_f64() * 1000.0);
                return (outcome, rtt, buf, local);
            }
            Ok(Ok(n)) => {
                buf.extend_from_slice(&chunk[..n]);
                if let Some(outcome) = first_flight_outcome(&buf) {
                    return (outcome, Some(start.elapsed().as_secs_f64() * 1000.0), buf, local);
                }
            }
        }
    }
}

/// Split `host:port` / `[v6]:port`; bare names use `default_port`.
pub fn split_target(target: &str, default_port: u16) -> (String, u16) {
    if let Some(rest) = target.strip_prefix('[') {
        if let Some((host, port)) = rest.split_once("]:") {
            if let Ok(p) = port.parse() {
                return (host.to_owned(), p);
            }
        }
        return (rest.trim_end_matches(']').to_owned(), default_port);
    }
    match target.rsplit_once(':') {
        Some((host, port)) if !host.contains(':') => match port.parse() {
            Ok(p) => (host.to_owned(), p),
            Err(_) => (target.to_owned(), default_port),
        },
        _ => (target.to_owned(), default_port),
    }
}

/// Probe one host with a fresh hello per attempt.
pub async fn probe(host: &str, port: u16, config: &ProbeConfig, profiles: &ProfileSet) -> ProbeResult {
    let mut result = ProbeResult {
        domain: host.to_owned(),
        ip: None,
        port,
        outcome: ProbeOutcome::DnsFailure,
        rtt_ms: None,
        verdict: None,
        org: None,
    };
    let addr = match tokio::net::lookup_host((host, port)).await {
        Ok(mut addrs) => match addrs.next() {
            Some(a) => a,
            None => return result,
        },
        Err(_) => return result,
    };
    result.ip = Some(addr.ip());
    let sni = host.parse::<IpAddr>().is_err().then_some(host);
    let hello = match build_probe_hello(&config.offer, &config.source, sni) {
        Ok(h) => h,
        Err(_) => {
            result.outcome = ProbeOutcome::Malformed;
            return result;
        }
    };
    probe_addr(&mut result, addr, &hello, config, profiles).await;
    result
}

async fn probe_addr(result: &mut ProbeResult, addr: SocketAddr, hello: &[u8], config: &ProbeConfig, profiles: &ProfileSet) {
    let (outcome, rtt, response, local) = exchange(addr, hello, config.timeout).await;
    result.outcome = outcome;
    result.rtt_ms = rtt;
    if matches!(outcome, ProbeOutcome::SelectedGroup(_) | ProbeOutcome::HelloRetry(_) | ProbeOutcome::Alert(_)) {
        let client = local.unwrap_or_else(|| SocketAddr::new(addr.ip(), 0));
        result.verdict = Some(probe_verdict(client, addr, hello, &response, profiles, &config.eval));
    }
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub probe: ProbeConfig,
    pub port: u16,
    pub concurrency: usize,
    /// Maximum probe starts per second.
    pub rate_limit: Option<f64>,
    /// Extra attempts after a timeout.
    pub retries: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            probe: ProbeConfig::default(),
            port: 443,
            concurrency: 32,
            rate_limit: None,
            retries: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpSummary {
    pub ip: String,
    pub domains: Vec<String>,
    pub classifications: Vec<String>,
    pub candidates: Vec<String>,
    pub org: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub total: usize,
    pub classical: usize,
    pub post_quantum: usize,
    pub hybrid: usize,
    pub unknown: usize,
    pub error: usize,
    /// Per address with a verdict, ascending by address.
    pub by_ip: Vec<IpSummary>,
}

impl ScanSummary {
    pub fn from_results<'a>(results: impl IntoIterator<Item = &'a ProbeResult>) -> Self {
        let mut s = ScanSummary::default();
        let mut ips: BTreeMap<IpAddr, [BTreeSet<String>; 3]> = BTreeMap::new();
        for r in results {
            s.total += 1;
            let class = match (&r.verdict, r.outcome.is_error()) {
                (_, true) | (None, _) => {
                    s.error += 1;
                    continue;
                }
                (Some(v), false) => v.classification,
            };
            match class {
                Classification::Classical => s.classical += 1,
                Classification::PostQuantum => s.post_quantum += 1,
                Classification::Hybrid => s.hybrid += 1,
                Classification::Unknown => s.unknown += 1,
            }
            if let (Some(ip), Some(v)) = (r.ip, &r.verdict) {
                let e = ips.entry(ip).or_default();
                e[0].insert(r.domain.clone());
                e[1].insert(class.as_str().to_owned());
                e[2].extend(v.candidates.iter().map(|c| c.id.clone()));
            }
        }
        s.by_ip = ips
            .into_iter()
            .map(|(ip, [d, c, k])| IpSummary {
                ip: ip.to_string(),
                domains: d.into_iter().collect(),
                classifications: c.into_iter().collect(),
                candidates: k.into_iter().collect(),
                org: None,
            })
            .collect();
        s
    }
}

/// Targets from a newline-delimited list, or from the second column of a
/// Tranco `rank,domain` CSV.
pub fn parse_domain_list(text: &str, tranco: bool) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            if tranco {
                l.split(',').nth(1).map(|d| d.trim().to_owned())
            } else {
                Some(l.to_owned())
            }
        })
        .filter(|d| !d.is_empty())
        .collect()
}

/// Probe every target with bounded concurrency, writing each result as a
/// JSON line as it completes. Returns all results and their summary.
pub async fn scan<W: Write>(
    targets: &[String],
    config: &ScanConfig,
    profiles: Arc<ProfileSet>,
    mut out: W,
) -> std::io::Result<(Vec<ProbeResult>, ScanSummary)> {
    let sem = Arc::new(Semaphore::new(config.concurrency.max(1)));
    let (tx, mut rx) = mpsc::unbounded_channel();
    let mut interval = config
        .rate_limit
        .filter(|r| *r > 0.0)
        .map(|r| tokio::time::interval(Duration::from_secs_f64(1.0 / r)));
    for target in targets {
        if let Some(iv) = interval.as_mut() {
            iv.tick().await;
        }
        let permit = sem.clone().acquire_owned().await.expect("semaphore open");
        let (host, port) = split_target(target, config.port);
        let cfg = config.probe.clone();
        let retries = config.retries;
        let profiles = profiles.clone();
        let tx = tx.clone();
        tokio::spawn(async move {
            let mut r = probe(&host, port, &cfg, &profiles).await;
            for _ in 0..retries {
                if r.outcome != ProbeOutcome::Timeout {
                    break;
                }
                r = probe(&host, port, &cfg, &profiles).await;
            }
            drop(permit);
            let _ = tx.send(r);
        });
    }
    drop(tx);
    let mut results = Vec::with_capacity(targets.len());
    while let Some(r) = rx.recv().await {
        serde_json::to_writer(&mut out, &r)?;
        out.write_all(b"\n")?;
        results.push(r);
    }
    out.flush()?;
    let summary = ScanSummary::from_results(&results);
    Ok((results, summary))
}
