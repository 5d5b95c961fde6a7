//! Passive key-exchange classification for TLS, SSH, QUIC and OpenVPN
//! handshakes.

pub mod analyze;
pub mod capture;
pub mod kexdb;
pub mod openvpn;
pub mod quic;
pub mod reassembly;
pub mod ssh;
pub mod tls;
pub mod verdict;
mod wire;

pub use analyze::{analyze_capture, CaptureReport};
pub use kexdb::{load_builtin, ProfileSet};
pub use verdict::{evaluate, EvalOptions};
