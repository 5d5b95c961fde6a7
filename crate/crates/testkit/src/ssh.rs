//! SSH identification strings and unencrypted binary packets.

use crate::filler;

pub fn string(b: &[u8]) -> Vec<u8> {
    let mut v = (b.len() as u32).to_be_bytes().to_vec();
    v.extend_from_slice(b);
    v
}

/// Binary packet with block-size-8 padding and no MAC.
pub fn packet(payload: &[u8]) -> Vec<u8> {
    let mut pad = 8 - (payload.len() + 5) % 8;
    if pad < 4 {
        pad += 8;
    }
    let mut p = ((payload.len() + pad + 1) as u32).to_be_bytes().to_vec();
    p.push(pad as u8);
    p.extend_from_slice(payload);
    p.extend(filler(pad, 21));
    p
}

pub fn kexinit(kex: &[&str], host_key: &[&str]) -> Vec<u8> {
    let mut p = vec![20];
    p.extend(filler(16, 22));
    p.extend(string(kex.join(",").as_bytes()));
    p.extend(string(host_key.join(",").as_bytes()));
    for list in [
        "chacha20-poly1305@openssh.com,aes128-ctr",
        "chacha20-poly1305@openssh.com,aes128-ctr",
        "umac-64-etm@openssh.com,hmac-sha2-256",
        "umac-64-etm@openssh.com,hmac-sha2-256",
        "none,zlib@openssh.com",
        "none,zlib@openssh.com",
        "",
        "",
    ] {
        p.extend(string(list.as_bytes()));
    }
    p.push(0);
    p.extend_from_slice(&[0, 0, 0, 0]);
    p
}

pub fn kex_ecdh_init(q_c_len: usize) -> Vec<u8> {
    let mut p = vec![30];
    p.extend(string(&filler(q_c_len, 23)));
    p
}

pub fn kex_ecdh_reply(host_key_len: usize, q_s_len: usize) -> Vec<u8> {
    let mut p = vec![31];
    p.extend(string(&filler(host_key_len, 24)));
    p.extend(string(&filler(q_s_len, 25)));
    p.extend(string(&filler(83, 26)));
    p
}

pub fn newkeys() -> Vec<u8> {
    vec![21]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    pub client: Vec<u8>,
    pub server: Vec<u8>,
}

/// Full pre-NEWKEYS exchange followed by encrypted bytes.
pub fn conversation(
    client_kex: &[&str],
    server_kex: &[&str],
    q_c_len: usize,
    q_s_len: usize,
) -> Conversation {
    let mut client = b"SSH-2.0-OpenSSH_9.2\r\n".to_vec();
    client.extend(packet(&kexinit(client_kex, &["ssh-ed25519", "rsa-sha2-512"])));
    client.extend(packet(&kex_ecdh_init(q_c_len)));
    client.extend(packet(&newkeys()));
    client.extend(filler(64, 27));

    let mut server = b"SSH-2.0-OpenSSH_9.2p1 Debian-2\r\n".to_vec();
    server.extend(packet(&kexinit(server_kex, &["ssh-ed25519"])));
    server.extend(packet(&kex_ecdh_reply(51, q_s_len)));
    server.extend(packet(&newkeys()));
    server.extend(filler(64, 28));
    Conversation { client, server }
}
