//! Scripted TCP servers for prober tests.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::thread;
use std::time::Duration;

fn read_record(s: &mut TcpStream) -> Option<Vec<u8>> {
    let mut hdr = [0u8; 5];
    s.read_exact(&mut hdr).ok()?;
    let len = u16::from_be_bytes([hdr[3], hdr[4]]) as usize;
    let mut body = vec![0u8; len];
    s.read_exact(&mut body).ok()?;
    let mut rec = hdr.to_vec();
    rec.extend(body);
    Some(rec)
}

/// Listen on 127.0.0.1; for every connection read one TLS record, answer
/// with `response`, then close. Runs until the process exits.
pub fn spawn_canned(response: Vec<u8>) -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for conn in listener.incoming() {
            let Ok(mut s) = conn else { continue };
            let response = response.clone();
            thread::spawn(move || {
                s.set_read_timeout(Some(Duration::from_secs(5))).ok();
                if read_record(&mut s).is_some() {
                    s.write_all(&response).ok();
                }
            });
        }
    });
    addr
}

/// Accept connections and never answer.
pub fn spawn_silent() -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        let mut held = Vec::new();
        for conn in listener.incoming().flatten() {
            held.push(conn);
        }
    });
    addr
}

/// An address on 127.0.0.1 with nothing listening.
pub fn closed_port() -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    listener.local_addr().unwrap()
}
