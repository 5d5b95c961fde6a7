"""Encrypt a QUIC v1 server Initial flight carrying a ServerHello.

Written against the QUIC-TLS key schedule with the `cryptography` package,
independently of the Rust decoder. Output: one hex datagram per line.
"""
import sys

from cryptography.hazmat.primitives import hashes, hmac
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDFExpand

SALT = bytes.fromhex("38762cf7f55934b34d179ae6a4c80cadccbb7f0a")
CLIENT_DCID = bytes.fromhex("8394c8f03e515708")
SERVER_SCID = bytes.fromhex("f067a5502a4262b5")


def expand_label(secret, label, n):
    full = b"tls13 " + label
    info = n.to_bytes(2, "big") + bytes([len(full)]) + full + b"\x00"
    return HKDFExpand(hashes.SHA256(), n, info).derive(secret)


def server_keys():
    h = hmac.HMAC(SALT, hashes.SHA256())
    h.update(CLIENT_DCID)
    initial = h.finalize()
    s = expand_label(initial, b"server in", 32)
    return (expand_label(s, b"quic key", 16), expand_label(s, b"quic iv", 12),
            expand_label(s, b"quic hp", 16))


def varint(v):
    if v < 64:
        return bytes([v])
    if v < 16384:
        return (v | 0x4000).to_bytes(2, "big")
    return (v | 0x80000000).to_bytes(4, "big")


def server_hello(group, share_len):
    ks = group.to_bytes(2, "big") + share_len.to_bytes(2, "big") + bytes([0x5A]) * share_len
    exts = (b"\x00\x2b\x00\x02\x03\x04"
            + b"\x00\x33" + len(ks).to_bytes(2, "big") + ks)
    body = (b"\x03\x03" + bytes(range(32)) + b"\x00" + b"\x13\x01" + b"\x00"
            + len(exts).to_bytes(2, "big") + exts)
    return b"\x02" + len(body).to_bytes(3, "big") + body


def protect(pn, frames):
    key, iv, hp = server_keys()
    pn_bytes = pn.to_bytes(2, "big")
    length = len(pn_bytes) + len(frames) + 16
    header = (bytes([0xC0 | 0x01]) + (1).to_bytes(4, "big")
              + bytes([0]) + bytes([len(SERVER_SCID)]) + SERVER_SCID
              + varint(0) + varint(length).rjust(2, b"\x40") + pn_bytes)
    nonce = bytearray(iv)
    for i, b in enumerate(pn.to_bytes(8, "big")):
        nonce[4 + i] ^= b
    ct = AESGCM(key).encrypt(bytes(nonce), frames, header)
    pn_offset = len(header) - 2
    sample = ct[4 - 2:4 - 2 + 16]
    enc = Cipher(algorithms.AES(hp), modes.ECB()).encryptor()
    mask = enc.update(sample) + enc.finalize()
    first = header[0] ^ (mask[0] & 0x0F)
    prot = bytearray(header)
    prot[0] = first
    for i in range(2):
        prot[pn_offset + i] ^= mask[1 + i]
    return bytes(prot) + ct


def main():
    group = int(sys.argv[1], 16) if len(sys.argv) > 1 else 0x11EC
    share_len = int(sys.argv[2]) if len(sys.argv) > 2 else 1120
    sh = server_hello(group, share_len)
    half = len(sh) // 2
    ack = b"\x02\x00\x00\x00\x00"
    second = b"\x06" + varint(half) + varint(len(sh) - half) + sh[half:]
    first = ack + b"\x06" + varint(0) + varint(half) + sh[:half]
    # second half first, to exercise offset ordering
    print(protect(1, second).hex())
    print(protect(0, first).hex())


if __name__ == "__main__":
    main()
