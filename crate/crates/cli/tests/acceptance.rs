//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use pqscope_core::kexdb::{Family, Mechanism};
use pqscope_core::quic::{derive_initial_protection, reassemble_crypto, unprotect_and_decrypt, QuicSide, QUIC_V1};
use pqscope_core::tls::{self, parse_client_hello, split_handshake_messages, HS_CLIENT_HELLO};
use pqscope_core::{analyze_capture, load_builtin, EvalOptions};
use pqscope_ml::chi2::chi2_matrix;
use pqscope_ml::schema::{NUM_CORES, VM_DATA, VM_EXE, VM_RSS, VM_SIZE};
use pqscope_ml::synth::presets;
use pqscope_ml::*;
use pqscope_testkit::{fixtures, net, quic as tq, server, tls as tk};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

/// Criteria that cannot hold for the required algorithm table; they must
/// still be evaluated and are expected to report FAIL.
const UNATTAINABLE: &[u32] = &[4];

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pqscope")
}

fn workdir() -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn pqscope_raw(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(bin()).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("pqscope {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn pqscope(args: &[&str]) -> Result<Value, String> {
    let stdout = pqscope_raw(args)?;
    serde_json::from_slice(&stdout).map_err(|e| format!("pqscope {args:?}: bad JSON: {e}"))
}

fn quic_vector() -> Outcome {
    let keys = derive_initial_protection(&tq::RFC9001_DCID, QUIC_V1, QuicSide::Client).map_err(|e| e.to_string())?;
    check(hex_eq(&keys.key, tq::RFC9001_CLIENT_KEY), || "client key differs from published vector".into())?;
    check(hex_eq(&keys.iv, tq::RFC9001_CLIENT_IV), || "client iv differs".into())?;
    check(hex_eq(&keys.hp, tq::RFC9001_CLIENT_HP), || "client hp differs".into())?;
    let dec = unprotect_and_decrypt(&tq::rfc9001_client_initial(), QuicSide::Client, None).map_err(|e| e.to_string())?;
    let frames: Vec<_> = dec.initials.iter().flat_map(|p| p.crypto_frames.iter().cloned()).collect();
    let (stream, gap) = reassemble_crypto(&frames);
    check(!gap, || "CRYPTO stream has a gap".into())?;
    let (msgs, err) = split_handshake_messages(&stream);
    check(err.is_none() && msgs.len() == 1 && msgs[0].msg_type == HS_CLIENT_HELLO, || {
        "CRYPTO stream is not a single ClientHello".into()
    })?;
    let ch = parse_client_hello(&msgs[0].body).map_err(|e| e.to_string())?;
    check(ch.sni.as_deref() == Some("example.com") && ch.supported_versions == [0x0304], || {
        format!("unexpected ClientHello {ch:?}")
    })?;
    Ok(format!("key {}, ClientHello for example.com", tq::RFC9001_CLIENT_KEY))
}

fn hex_eq(bytes: &[u8], hex: &str) -> bool {
    let s: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
    s == hex
}

fn random_cuts(rng: &mut StdRng, len: usize) -> Vec<usize> {
    let n = rng.random_range(0..12);
    let mut v: Vec<usize> = (0..n).map(|_| rng.random_range(1..len)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn fragmentation() -> Outcome {
    let hello = tk::ClientHello {
        groups: vec![0x11EC, 0x6399, 0x001D],
        key_shares: vec![(0x11EC, 1216), (0x001D, 32)],
        grease: true,
        ..Default::default()
    };
    let ch = hello.message();
    let sh = tk::server_hello_13(0x11EC, 1120);
    let tail = |mut v: Vec<u8>| {
        v.extend(tk::change_cipher_spec());
        v.extend(tk::encrypted(200, 11));
        v
    };
    let client_whole = tail(tk::records(22, &ch, 1 << 14));
    let server_whole = tail(tk::records(22, &sh, 1 << 14));
    let baseline = tls::dissect_streams(&client_whole, &server_whole);
    check(baseline.server_hello.is_some() && baseline.notes.is_empty(), || "baseline parse incomplete".into())?;
    let profiles = load_builtin();
    let opts = EvalOptions::default();
    let conv = net::TcpConversation::new(("10.0.0.1", 40000), ("192.0.2.1", 443), 1_000_000);
    let base_report = analyze_capture(&net::pcap(&conv.packets(&client_whole, &server_whole)), &profiles, &opts)
        .map_err(|e| e.to_string())?;

    let mut rng = StdRng::seed_from_u64(0x5eed);
    let trials = 1000;
    let mut mismatches = 0;
    for _ in 0..trials {
        let client = tail(tk::records_at(22, &ch, &random_cuts(&mut rng, ch.len())));
        let server = tail(tk::records_at(22, &sh, &random_cuts(&mut rng, sh.len())));
        if tls::dissect_streams(&client, &server) != baseline {
            mismatches += 1;
            continue;
        }
        let cc = random_cuts(&mut rng, client.len());
        let sc = random_cuts(&mut rng, server.len());
        let mut packets = conv.packets_with_cuts(&client, &cc, &server, &sc);
        let n = packets.len();
        for i in (4..n - 2).rev() {
            let j = rng.random_range(3..=i);
            packets.swap(i, j);
        }
        let report = analyze_capture(&net::pcap(&packets), &profiles, &opts).map_err(|e| e.to_string())?;
        let same = report.flows.len() == 1
            && report.flows[0].classification == base_report.flows[0].classification
            && report.flows[0].candidates == base_report.flows[0].candidates
            && report.flows[0].notes == base_report.flows[0].notes;
        if !same {
            mismatches += 1;
        }
    }
    check(mismatches == 0, || format!("{mismatches} of {trials} fragmentations disagree"))?;
    Ok(format!("{trials} record and {trials} segment fragmentations, 0 mismatches"))
}

fn verdicts() -> Outcome {
    let profiles = load_builtin();
    let report = analyze_capture(&fixtures::six_flow_pcapng(), &profiles, &EvalOptions::default())
        .map_err(|e| e.to_string())?;
    check(report.flows.len() == 6, || format!("{} flows", report.flows.len()))?;
    for (f, e) in report.flows.iter().zip(fixtures::SIX_FLOWS.iter()) {
        let basis = serde_json::to_value(f.candidates.first().map(|c| c.basis)).unwrap();
        let ok = f.src == e.client
            && f.dst == e.server
            && f.protocol.as_str() == e.protocol
            && f.classification.as_str() == e.classification
            && f.candidates.first().map(|c| c.id.as_str()) == Some(e.candidate)
            && basis == e.basis;
        check(ok, || format!("flow {} -> {} got {f:?}", e.client, e.server))?;
    }
    let amb = net::pcap(&fixtures::server_only_97_packets());
    let opts = EvalOptions {
        tolerance: 1,
        ..Default::default()
    };
    let r = analyze_capture(&amb, &profiles, &opts).map_err(|e| e.to_string())?;
    let got: BTreeSet<&str> = r.flows[0].candidates.iter().map(|c| c.id.as_str()).collect();
    let want: BTreeSet<&str> = ["classic_mceliece_348864", "ecdh_p384"].into();
    check(got == want, || format!("97-byte ambiguity gave {got:?}"))?;
    Ok("6/6 flows, 97-byte share -> {classic_mceliece_348864, ecdh_p384}".into())
}

fn separability() -> Outcome {
    let profiles = load_builtin();
    let all = profiles.profiles();
    let mut close = Vec::new();
    for c in all.iter().filter(|p| p.family == Family::Classical) {
        for q in all.iter().filter(|p| p.family == Family::PostQuantum && p.mechanism == Mechanism::Kem) {
            if c.client_share_len.abs_diff(q.client_share_len) < 600 {
                close.push(format!("{}({}) vs {}({})", c.id, c.client_share_len, q.id, q.client_share_len));
            }
        }
    }
    let mut bad_sums = Vec::new();
    for h in all.iter().filter(|p| p.family == Family::Hybrid) {
        let parts: Option<Vec<_>> = h.components.iter().map(|id| profiles.get(id)).collect();
        let ok = parts.is_some_and(|parts| {
            parts.iter().map(|p| p.client_share_len).sum::<usize>() == h.client_share_len
                && parts.iter().map(|p| p.server_share_len).sum::<usize>() == h.server_share_len
        });
        if !ok {
            bad_sums.push(h.id.clone());
        }
    }
    check(bad_sums.is_empty(), || format!("hybrid sums differ: {bad_sums:?}"))?;
    check(close.is_empty(), || {
        format!(
            "hybrid sums exact; {} classical/PQ pairs closer than 600 bytes, e.g. {}",
            close.len(),
            close.iter().take(3).cloned().collect::<Vec<_>>().join(", ")
        )
    })?;
    Ok("all pairs >= 600 bytes apart, hybrid sums exact".into())
}

fn accuracy(model: &TrainedModel, test: &Dataset) -> Result<f64, String> {
    evaluate(model, test).map(|m| m.overall_accuracy).map_err(|e| e.to_string())
}

fn ml_properties() -> Outcome {
    let e = |e: MlError| e.to_string();
    // (a) duplication doubles chi-square scores exactly.
    let ds = synthesize(&presets::kex_loaded(), 200, 1).map_err(e)?;
    let x: Vec<Vec<u64>> = ds.rows.iter().map(|r| r.values().to_vec()).collect();
    let y = ds.label_indices().map_err(e)?;
    let s1 = chi2_matrix(&x, &y, ds.classes.len());
    let x2: Vec<Vec<u64>> = x.iter().chain(&x).cloned().collect();
    let y2: Vec<usize> = y.iter().chain(&y).copied().collect();
    let s2 = chi2_matrix(&x2, &y2, ds.classes.len());
    check(s1.iter().zip(&s2).all(|(a, b)| 2.0 * a == *b), || "(a) duplicated scores are not exactly doubled".into())?;

    // (b) memory-only separation selects the four memory features.
    let ds = synthesize(&presets::kex_memory(), 1000, 2).map_err(e)?;
    let sel = select_top_k(&chi2_scores(&ds).map_err(e)?, 4).map_err(e)?;
    let mut got = sel.selected.clone();
    got.sort_unstable();
    check(got == [VM_SIZE, VM_RSS, VM_DATA, VM_EXE], || format!("(b) selected {:?}", sel.names()))?;

    // (c) 2000 rows, 3-sigma separation, 5 seeds: mean >= 0.95, each within 0.03.
    let mut summary = Vec::new();
    for kind in ["forest", "logreg"] {
        let mut accs = Vec::new();
        for seed in 1..=5u64 {
            let ds = synthesize(&presets::kex_separated(), 1000, seed).map_err(e)?;
            let sp = split(&ds, 0.8, seed).map_err(e)?;
            let sel = select_top_k(&chi2_scores(&sp.train).map_err(e)?, 4).map_err(e)?;
            let m = if kind == "forest" {
                fit_forest(&sp.train, &sel, &ForestParams { n_trees: 25, ..ForestParams::with_seed(seed) })
            } else {
                fit_logreg(&sp.train, &sel, &LogRegParams::default())
            }
            .map_err(e)?;
            accs.push(accuracy(&m, &sp.test)?);
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        check(mean >= 0.95 && accs.iter().all(|&a| a >= 0.92), || format!("(c) {kind} accuracies {accs:?}"))?;
        summary.push(format!("{kind} mean {mean:.3}"));
    }

    // (d) cycles-only ablation is strictly worse in at least 4 of 5 seeds.
    let mut lower = 0;
    for seed in 1..=5u64 {
        let ds = synthesize(&presets::kex_loaded(), 500, seed).map_err(e)?;
        let sp = split(&ds, 0.8, seed).map_err(e)?;
        let p = ForestParams { n_trees: 25, ..ForestParams::with_seed(seed) };
        let full = fit_forest(&sp.train, &FeatureSelector::all(), &p).map_err(e)?;
        let cycles = fit_forest(&sp.train, &FeatureSelector::from_indices((0..NUM_CORES).collect()), &p).map_err(e)?;
        if accuracy(&cycles, &sp.test)? < accuracy(&full, &sp.test)? {
            lower += 1;
        }
    }
    check(lower >= 4, || format!("(d) cycles-only lower in only {lower} of 5 seeds"))?;
    Ok(format!("(a) exact, (b) memory features, (c) {}, (d) {lower}/5", summary.join(", ")))
}

fn snark() -> Outcome {
    let e = |e: MlError| e.to_string();
    let ds = synthesize(&presets::snark(), 2000, 11).map_err(e)?;
    check(ds.len() == 4000, || format!("{} rows", ds.len()))?;
    let sp = split(&ds, 0.8, 11).map_err(e)?;
    let sel = select_top_k(&chi2_scores(&sp.train).map_err(e)?, 2).map_err(e)?;
    check(sel.selected.iter().all(|&f| f < NUM_CORES), || format!("selected {:?}", sel.names()))?;
    let m = fit_forest(&sp.train, &sel, &ForestParams { n_trees: 10, ..ForestParams::with_seed(11) }).map_err(e)?;
    let acc = accuracy(&m, &sp.test)?;
    check(acc == 1.0, || format!("accuracy {acc}"))?;
    Ok(format!("features {:?}, accuracy {acc:.2}", sel.names()))
}

struct ServerProcess(Child);

impl Drop for ServerProcess {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn http(addr: SocketAddr, method: &str, path: &str, content_type: &str, body: &[u8]) -> Result<(u16, Value), String> {
    let mut s = TcpStream::connect(addr).map_err(|e| e.to_string())?;
    s.set_read_timeout(Some(Duration::from_secs(10))).ok();
    let head = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    s.write_all(head.as_bytes()).and_then(|_| s.write_all(body)).map_err(|e| e.to_string())?;
    let mut resp = Vec::new();
    s.read_to_end(&mut resp).map_err(|e| e.to_string())?;
    let split = resp.windows(4).position(|w| w == b"\r\n\r\n").ok_or("no header terminator")?;
    let head = String::from_utf8_lossy(&resp[..split]);
    let status: u16 = head.split_whitespace().nth(1).and_then(|s| s.parse().ok()).ok_or("no status")?;
    let body = serde_json::from_slice(&resp[split + 4..]).map_err(|e| format!("bad JSON body: {e}"))?;
    Ok((status, body))
}

fn multipart(field: &str, data: &[u8]) -> (String, Vec<u8>) {
    let b = "acceptanceBoundary7";
    let mut body = format!(
        "--{b}\r\nContent-Disposition: form-data; name=\"{field}\"; filename=\"f\"\r\nContent-Type: application/octet-stream\r\n\r\n"
    )
    .into_bytes();
    body.extend_from_slice(data);
    body.extend_from_slice(format!("\r\n--{b}--\r\n").as_bytes());
    (format!("multipart/form-data; boundary={b}"), body)
}

fn service_equivalence() -> Outcome {
    let dir = workdir();
    let capture = dir.join("six.pcapng");
    std::fs::write(&capture, fixtures::six_flow_pcapng()).map_err(|e| e.to_string())?;
    let cli_report = pqscope(&["analyze", "--input", capture.to_str().unwrap(), "--json"])?;

    let train = dir.join("train.csv");
    let test = dir.join("test.csv");
    let model = dir.join("kex.json");
    let p = |p: &PathBuf| p.to_str().unwrap().to_owned();
    pqscope_raw(&["synth", "--preset", "kex-loaded", "--n-per-class", "200", "--seed", "4", "--out", &p(&train)])?;
    pqscope_raw(&["synth", "--preset", "kex-loaded", "--n-per-class", "50", "--seed", "8", "--out", &p(&test)])?;
    pqscope(&["ml-train", "--data", &p(&train), "--model-kind", "forest", "--trees", "15", "--seed", "4", "--out", &p(&model)])?;
    let cli_eval = pqscope(&["ml-eval", "--data", &p(&test), "--model", &p(&model)])?;

    let addr = server::closed_port();
    let child = Command::new(bin())
        .args(["serve", "--bind", &addr.to_string(), "--kex-model", &p(&model)])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let _guard = ServerProcess(child);
    let deadline = Instant::now() + Duration::from_secs(5);
    while http(addr, "GET", "/healthz", "text/plain", b"").is_err() {
        check(Instant::now() < deadline, || "service did not start".into())?;
        std::thread::sleep(Duration::from_millis(25));
    }

    let (ct, body) = multipart("capture", &std::fs::read(&capture).unwrap());
    let (status, http_report) = http(addr, "POST", "/classify", &ct, &body)?;
    check(status == 200, || format!("/classify status {status}"))?;
    check(http_report == cli_report, || "/classify differs from `analyze --json`".into())?;

    let csv = std::fs::read(&test).unwrap();
    let (status, preds) = http(addr, "POST", "/classifyKex", "text/csv", &csv)?;
    check(status == 200, || format!("/classifyKex status {status}"))?;
    let strip = |v: &Value| -> Vec<(Value, Value)> {
        v["predictions"]
            .as_array()
            .map(|a| a.iter().map(|p| (p["row"].clone(), p["label"].clone())).collect())
            .unwrap_or_default()
    };
    let (svc, cli) = (strip(&preds), strip(&cli_eval));
    check(svc.len() == 100 && svc == cli, || {
        format!("{} service predictions vs {} from ml-eval", svc.len(), cli.len())
    })?;
    Ok("/classify == analyze --json, /classifyKex == ml-eval on 100 rows".into())
}

fn prober_harness() -> Outcome {
    let dir = workdir();
    let hybrid = server::spawn_canned(tk::records(22, &tk::server_hello_13(0x6399, 32 + 1088), 1 << 14));
    let classical = server::spawn_canned(tk::records(22, &tk::server_hello_13(0x001D, 32), 1 << 14));
    let closed = server::closed_port();
    let list = dir.join("domains.txt");
    let text: String = [hybrid, classical, closed].iter().map(|a| format!("{a}\n")).collect();
    std::fs::write(&list, text).map_err(|e| e.to_string())?;
    let mut summaries = Vec::new();
    for c in ["1", "8"] {
        let out = dir.join(format!("scan-{c}.jsonl"));
        let s = pqscope(&[
            "scan",
            "--domains",
            list.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--concurrency",
            c,
            "--timeout-ms",
            "3000",
        ])?;
        let counts = (s["total"].clone(), s["hybrid"].clone(), s["classical"].clone(), s["error"].clone());
        check(counts == (3.into(), 1.into(), 1.into(), 1.into()), || format!("concurrency {c}: summary {s}"))?;
        let lines = std::fs::read_to_string(&out).map_err(|e| e.to_string())?.lines().count();
        check(lines == 3, || format!("concurrency {c}: {lines} result lines"))?;
        summaries.push(s);
    }
    check(summaries[0] == summaries[1], || "summaries differ across concurrency".into())?;
    Ok("{hybrid:1, classical:1, error:1} at concurrency 1 and 8".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "QUIC Initial vector", Duration::from_secs(1), quic_vector),
        (2, "fragmentation invariance", Duration::from_secs(30), fragmentation),
        (3, "verdicts on fixtures", Duration::from_secs(5), verdicts),
        (4, "seed-table separability", Duration::from_secs(1), separability),
        (5, "ML properties", Duration::from_secs(120), ml_properties),
        (6, "SNARK separability", Duration::from_secs(30), snark),
        (7, "service equivalence", Duration::from_secs(10), service_equivalence),
        (8, "prober harness", Duration::from_secs(10), prober_harness),
    ];
    let mut failed = Vec::new();
    for (n, name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = outcome.and_then(|d| {
            if took <= budget {
                Ok(d)
            } else {
                Err(format!("{d}; took {took:?}, budget {budget:?}"))
            }
        });
        match &outcome {
            Ok(d) => println!("criterion {n} ({name}): PASS [{} ms] {d}", took.as_millis()),
            Err(d) => {
                println!("criterion {n} ({name}): FAIL [{} ms] {d}", took.as_millis());
                failed.push(n);
            }
        }
    }
    let _ = std::fs::remove_dir_all(workdir());
    let unexpected: Vec<u32> = failed.iter().copied().filter(|n| !UNATTAINABLE.contains(n)).collect();
    let now_passing: Vec<u32> = UNATTAINABLE.iter().copied().filter(|n| !failed.contains(n)).collect();
    println!(
        "acceptance: {} passed, {} failed ({} known unattainable)",
        8 - failed.len(),
        failed.len(),
        failed.len() - unexpected.len()
    );
    if !unexpected.is_empty() || !now_passing.is_empty() {
        eprintln!("unexpected failures {unexpected:?}; unattainable criteria now passing {now_passing:?}");
        std::process::exit(1);
    }
}
