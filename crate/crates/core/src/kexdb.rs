//! Key-exchange algorithm profiles and length/codepoint/name indexes.
//!
//! A profile records the byte lengths a key exchange puts on the wire: the
//! client's public value and the server's reply (an ECDH point or a KEM
//! ciphertext). Hybrid profiles concatenate their components without any
//! extra framing, so their lengths are the component sums.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

mod builtin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Classical,
    PostQuantum,
    Hybrid,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Classical => "classical",
            Family::PostQuantum => "post_quantum",
            Family::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Ecdh,
    Ffdhe,
    RsaKex,
    Kem,
    HybridKem,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmProfile {
    pub id: String,
    pub display_name: String,
    pub family: Family,
    pub mechanism: Mechanism,
    pub client_share_len: usize,
    pub server_share_len: usize,
    #[serde(default)]
    pub tls_group_codepoints: Vec<u16>,
    #[serde(default)]
    pub ssh_kex_names: Vec<String>,
    #[serde(default)]
    pub components: Vec<String>,
    /// Known to be broken by classical cryptanalysis (SIKE).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub broken: bool,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum KexDbError {
    #[error("duplicate profile id {0:?}")]
    DuplicateId(String),
    #[error("profile {0:?} must have non-zero share lengths")]
    ZeroLength(String),
    #[error("profile {0:?}: family hybrid iff components are listed")]
    HybridComponents(String),
    #[error("profile {id:?} references unknown component {component:?}")]
    UnknownComponent { id: String, component: String },
    #[error("hybrid {id:?}: {side} length {stored} does not equal component sum {sum}")]
    HybridSum {
        id: String,
        side: &'static str,
        stored: usize,
        sum: usize,
    },
    #[error("codepoint {codepoint:#06x} claimed by both {first:?} and {second:?}")]
    DuplicateCodepoint {
        codepoint: u16,
        first: String,
        second: String,
    },
    #[error("ssh name {name:?} claimed by both {first:?} and {second:?}")]
    DuplicateSshName {
        name: String,
        first: String,
        second: String,
    },
    #[error("invalid profile JSON: {0}")]
    Json(String),
}

/// Immutable, validated collection of profiles with lookup indexes.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    profiles: Vec<AlgorithmProfile>,
    by_id: BTreeMap<String, usize>,
    by_client_len: BTreeMap<usize, Vec<usize>>,
    by_server_len: BTreeMap<usize, Vec<usize>>,
    by_codepoint: BTreeMap<u16, usize>,
    by_ssh_name: BTreeMap<String, usize>,
}

impl ProfileSet {
    pub fn new(mut profiles: Vec<AlgorithmProfile>) -> Result<Self, KexDbError> {
        profiles.sort_by(|a, b| a.id.cmp(&b.id));

        let mut by_id = BTreeMap::new();
        for (i, p) in profiles.iter().enumerate() {
            if by_id.insert(p.id.clone(), i).is_some() {
                return Err(KexDbError::DuplicateId(p.id.clone()));
            }
        }

        for p in &profiles {
            let needs_both = matches!(
                p.mechanism,
                Mechanism::Ecdh | Mechanism::Kem | Mechanism::HybridKem
            );
            if needs_both && (p.client_share_len == 0 || p.server_share_len == 0) {
                return Err(KexDbError::ZeroLength(p.id.clone()));
            }
            if p.client_share_len == 0 {
                return Err(KexDbError::ZeroLength(p.id.clone()));
            }
            if (p.family == Family::Hybrid) != !p.components.is_empty() {
                return Err(KexDbError::HybridComponents(p.id.clone()));
            }
            if p.family == Family::Hybrid {
                let mut client = 0;
                let mut server = 0;
                for c in &p.components {
                    let idx = by_id.get(c).ok_or_else(|| KexDbError::UnknownComponent {
                        id: p.id.clone(),
                        component: c.clone(),
                    })?;
                    client += profiles[*idx].client_share_len;
                    server += profiles[*idx].server_share_len;
                }
                if client != p.client_share_len {
                    return Err(KexDbError::HybridSum {
                        id: p.id.clone(),
                        side: "client",
                        stored: p.client_share_len,
                        sum: client,
                    });
                }
                if server != p.server_share_len {
                    return Err(KexDbError::HybridSum {
                        id: p.id.clone(),
                        side: "server",
                        stored: p.server_share_len,
                        sum: server,
                    });
                }
            }
        }

        let mut by_client_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut by_server_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut by_codepoint = BTreeMap::new();
        let mut by_ssh_name = BTreeMap::new();
        for (i, p) in profiles.iter().enumerate() {
            by_client_len.entry(p.client_share_len).or_default().push(i);
            if p.server_share_len > 0 {
                by_server_len.entry(p.server_share_len).or_default().push(i);
            }
            for &cp in &p.tls_group_codepoints {
                if let Some(prev) = by_codepoint.insert(cp, i) {
                    return Err(KexDbError::DuplicateCodepoint {
                        codepoint: cp,
                        first: profiles[prev].id.clone(),
                        second: p.id.clone(),
                    });
                }
            }
            for name in &p.ssh_kex_names {
                if let Some(prev) = by_ssh_name.insert(name.clone(), i) {
                    return Err(KexDbError::DuplicateSshName {
                        name: name.clone(),
                        first: profiles[prev].id.clone(),
                        second: p.id.clone(),
                    });
                }
            }
        }

        Ok(ProfileSet {
            profiles,
            by_id,
            by_client_len,
            by_server_len,
            by_codepoint,
            by_ssh_name,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, KexDbError> {
        let profiles: Vec<AlgorithmProfile> =
            serde_json::from_str(text).map_err(|e| KexDbError::Json(e.to_string()))?;
        Self::new(profiles)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.profiles).expect("profiles serialize")
    }

    /// Profiles sorted by id.
    pub fn profiles(&self) -> &[AlgorithmProfile] {
        &self.profiles
    }

    pub fn get(&self, id: &str) -> Option<&AlgorithmProfile> {
        self.by_id.get(id).map(|&i| &self.profiles[i])
    }

    pub fn candidates_by_client_len(&self, len: usize, tolerance: usize) -> Vec<String> {
        Self::range_lookup(&self.profiles, &self.by_client_len, len, tolerance)
    }

    pub fn candidates_by_server_len(&self, len: usize, tolerance: usize) -> Vec<String> {
        Self::range_lookup(&self.profiles, &self.by_server_len, len, tolerance)
    }

    pub fn candidates_by_group(&self, codepoint: u16) -> Option<&str> {
        self.by_codepoint
            .get(&codepoint)
            .map(|&i| self.profiles[i].id.as_str())
    }

    pub fn candidates_by_ssh_name(&self, name: &str) -> Option<&str> {
        self.by_ssh_name
            .get(name)
            .map(|&i| self.profiles[i].id.as_str())
    }

    fn range_lookup(
        profiles: &[AlgorithmProfile],
        index: &BTreeMap<usize, Vec<usize>>,
        len: usize,
        tolerance: usize,
    ) -> Vec<String> {
        let lo = len.saturating_sub(tolerance);
        let hi = len.saturating_add(tolerance);
        let ids: BTreeSet<&str> = index
            .range(lo..=hi)
            .flat_map(|(_, v)| v.iter().map(|&i| profiles[i].id.as_str()))
            .collect();
        ids.into_iter().map(str::to_owned).collect()
    }
}

/// The compiled-in profile table. Integrity violations here are programming
/// errors, so this panics instead of returning an error.
pub fn load_builtin() -> ProfileSet {
    let profiles = builtin::profiles();
    let set = ProfileSet::new(profiles).expect("builtin profile table is inconsistent");
    debug_assert_eq!(
        set.profiles.iter().map(|p| &p.id).collect::<HashSet<_>>().len(),
        set.profiles.len()
    );
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kyber768_lengths() {
        let db = load_builtin();
        let p = db.get("kyber768").unwrap();
        assert_eq!((p.client_share_len, p.server_share_len), (1184, 1088));
        let x = db.get("x25519").unwrap();
        assert_eq!((x.client_share_len, x.server_share_len), (32, 32));
        let h = db.get("x25519_kyber768").unwrap();
        assert_eq!(h.client_share_len, 32 + 1184);
    }

    #[test]
    fn client_len_lookups() {
        let db = load_builtin();
        assert_eq!(
            db.candidates_by_client_len(1216, 0),
            vec!["x25519_kyber768", "x25519_mlkem768"]
        );
        assert_eq!(db.candidates_by_client_len(32, 0), vec!["x25519"]);
        assert!(db.candidates_by_client_len(7, 0).is_empty());
    }

    #[test]
    fn server_len_lookups() {
        let db = load_builtin();
        assert_eq!(db.candidates_by_server_len(97, 0), vec!["ecdh_p384"]);
        assert_eq!(
            db.candidates_by_server_len(96, 0),
            vec!["classic_mceliece_348864"]
        );
        assert_eq!(
            db.candidates_by_server_len(97, 1),
            vec!["classic_mceliece_348864", "ecdh_p384"]
        );
    }

    #[test]
    fn codepoint_and_name_lookups() {
        let db = load_builtin();
        assert_eq!(db.candidates_by_group(0x001D), Some("x25519"));
        assert_eq!(db.candidates_by_group(0x6399), Some("x25519_kyber768"));
        assert_eq!(db.candidates_by_group(0x0A0A), None);
        assert_eq!(
            db.candidates_by_ssh_name("sntrup761x25519-sha512@openssh.com"),
            Some("sntrup761_x25519")
        );
        assert_eq!(db.candidates_by_ssh_name("curve25519-sha256"), Some("x25519"));
        assert_eq!(db.candidates_by_ssh_name("unknown-kex@example"), None);
    }

    #[test]
    fn required_profiles_present() {
        let db = load_builtin();
        for id in [
            "x25519",
            "ecdh_p256",
            "ecdh_p384",
            "ecdh_p521",
            "ffdhe2048",
            "rsa_2048",
            "kyber512",
            "kyber768",
            "kyber1024",
            "frodokem640",
            "frodokem976",
            "frodokem1344",
            "hqc128",
            "hqc192",
            "hqc256",
            "bike_l1",
            "bike_l3",
            "bike_l5",
            "classic_mceliece_348864",
            "classic_mceliece_460896",
            "classic_mceliece_6688128",
            "classic_mceliece_6960119",
            "classic_mceliece_8192128",
            "sntrup761",
            "sike_p434",
            "sike_p503",
            "sike_p610",
            "x25519_kyber512",
            "x25519_kyber768",
            "p256_kyber768",
            "x448_kyber768",
            "x448_kyber1024",
            "x25519_mlkem768",
            "secp256r1_mlkem768",
            "sntrup761_x25519",
        ] {
            assert!(db.get(id).is_some(), "missing {id}");
        }
        assert!(db.get("sike_p434").unwrap().broken);
    }

    fn profile(id: &str, family: Family, mech: Mechanism, c: usize, s: usize) -> AlgorithmProfile {
        AlgorithmProfile {
            id: id.into(),
            display_name: id.into(),
            family,
            mechanism: mech,
            client_share_len: c,
            server_share_len: s,
            tls_group_codepoints: vec![],
            ssh_kex_names: vec![],
            components: vec![],
            broken: false,
        }
    }

    #[test]
    fn rejects_bad_hybrid_sum() {
        let mut h = profile("h", Family::Hybrid, Mechanism::HybridKem, 10, 10);
        h.components = vec!["a".into(), "b".into()];
        let err = ProfileSet::new(vec![
            profile("a", Family::Classical, Mechanism::Ecdh, 4, 4),
            profile("b", Family::PostQuantum, Mechanism::Kem, 5, 6),
            h,
        ])
        .unwrap_err();
        assert!(matches!(err, KexDbError::HybridSum { side: "client", .. }));
    }

    #[test]
    fn rejects_duplicates_and_orphans() {
        let a = profile("a", Family::Classical, Mechanism::Ecdh, 4, 4);
        assert_eq!(
            ProfileSet::new(vec![a.clone(), a.clone()]).unwrap_err(),
            KexDbError::DuplicateId("a".into())
        );
        let mut h = profile("h", Family::Hybrid, Mechanism::HybridKem, 4, 4);
        h.components = vec!["zz".into()];
        assert!(matches!(
            ProfileSet::new(vec![a.clone(), h]).unwrap_err(),
            KexDbError::UnknownComponent { .. }
        ));
        let not_hybrid = AlgorithmProfile {
            components: vec!["a".into()],
            ..profile("p", Family::PostQuantum, Mechanism::Kem, 4, 4)
        };
        assert!(matches!(
            ProfileSet::new(vec![a, not_hybrid]).unwrap_err(),
            KexDbError::HybridComponents(_)
        ));
    }

    #[test]
    fn json_round_trip() {
        let db = load_builtin();
        let again = ProfileSet::from_json(&db.to_json()).unwrap();
        assert_eq!(db.profiles(), again.profiles());
        assert!(ProfileSet::from_json("{").is_err());
    }

    #[test]
    fn json_field_names() {
        let db = load_builtin();
        let v: serde_json::Value = serde_json::from_str(&db.to_json()).unwrap();
        let first = &v.as_array().unwrap()[0];
        for key in [
            "id",
            "display_name",
            "family",
            "mechanism",
            "client_share_len",
            "server_share_len",
            "tls_group_codepoints",
            "ssh_kex_names",
            "components",
        ] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
    }
}
