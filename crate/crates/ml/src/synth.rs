//! Seeded synthetic datasets from per-class, per-feature normal
//! distributions truncated at zero.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::schema::{feature_index, Dataset, FeatureVector, FEATURE_NAMES, NUM_FEATURES};
use crate::{MlError, Result};

/// `{class: {feature: [mean, std]}}`. Features left out are constant 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SynthSpec(pub BTreeMap<String, BTreeMap<String, (f64, f64)>>);

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SynthSpec = serde_json::from_str(text).map_err(|e| MlError::Schema(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        for feats in self.0.values() {
            for (name, &(mean, std)) in feats {
                if feature_index(name).is_none() {
                    return Err(MlError::Schema(format!("unknown feature {name}")));
                }
                if !(mean.is_finite() && std.is_finite() && mean >= 0.0 && std >= 0.0) {
                    return Err(MlError::Schema(format!("{name}: mean and std must be finite and non-negative")));
                }
            }
        }
        Ok(())
    }

    fn set(&mut self, class: &str, feature: &str, mean: f64, std: f64) {
        self.0
            .entry(class.to_owned())
            .or_default()
            .insert(feature.to_owned(), (mean, std));
    }

    fn set_cores(&mut self, class: &str, mean: f64, std: f64) {
        for name in &FEATURE_NAMES[..12] {
            self.set(class, name, mean, std);
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> u64 {
    if std == 0.0 {
        return mean.round() as u64;
    }
    let normal = Normal::new(mean, std).expect("validated parameters");
    for _ in 0..64 {
        let v = normal.sample(rng);
        if v >= 0.0 {
            return v.round() as u64;
        }
    }
    0
}

/// `n_per_class` rows per class, classes in ascending order. Deterministic
/// for a fixed spec and seed.
pub fn synthesize(spec: &SynthSpec, n_per_class: usize, seed: u64) -> Result<Dataset> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(spec.0.len() * n_per_class);
    for (class, feats) in &spec.0 {
        let params: Vec<(f64, f64)> = FEATURE_NAMES
            .iter()
            .map(|n| feats.get(*n).copied().unwrap_or((0.0, 0.0)))
            .collect();
        for _ in 0..n_per_class {
            let mut v = [0u64; NUM_FEATURES];
            for (slot, &(mean, std)) in v.iter_mut().zip(&params) {
                *slot = draw(&mut rng, mean, std);
            }
            rows.push(FeatureVector::from_values(v, Some(class.clone())));
        }
    }
    Ok(Dataset::new(rows))
}

/// Named specs mirroring the measurement scenarios.
pub mod presets {
    use super::SynthSpec;

    pub const NAMES: [&str; 4] = ["kex-memory", "kex-separated", "kex-loaded", "snark"];

    pub fn by_name(name: &str) -> Option<SynthSpec> {
        match name {
            "kex-memory" => Some(kex_memory()),
            "kex-separated" => Some(kex_separated()),
            "kex-loaded" => Some(kex_loaded()),
            "snark" => Some(snark()),
            _ => None,
        }
    }

    fn shared_memory(s: &mut SynthSpec, class: &str) {
        s.set(class, "vm_stk_kb", 132.0, 2.0);
        s.set(class, "vm_lib_kb", 3100.0, 20.0);
        s.set(class, "vm_pte_kb", 64.0, 3.0);
    }

    /// Classical vs PQ key exchange where only VmSize, VmRSS, VmData and
    /// VmExe differ; cycle counts share one distribution.
    pub fn kex_memory() -> SynthSpec {
        let mut s = SynthSpec::default();
        for (class, size, rss, data, exe) in [
            ("classical", 12_000.0, 4_000.0, 2_500.0, 300.0),
            ("pq", 19_000.0, 7_000.0, 5_200.0, 900.0),
        ] {
            s.set_cores(class, 2_000_000.0, 20_000.0);
            s.set(class, "vm_size_kb", size, 300.0);
            s.set(class, "vm_rss_kb", rss, 100.0);
            s.set(class, "vm_data_kb", data, 80.0);
            s.set(class, "vm_exe_kb", exe, 20.0);
            shared_memory(&mut s, class);
        }
        s
    }

    /// Two classes whose four discriminating memory features differ by
    /// three standard deviations.
    pub fn kex_separated() -> SynthSpec {
        let mut s = SynthSpec::default();
        for (class, k) in [("classical", 0.0), ("pq", 3.0)] {
            s.set_cores(class, 2_000_000.0, 20_000.0);
            s.set(class, "vm_size_kb", 12_000.0 + k * 400.0, 400.0);
            s.set(class, "vm_rss_kb", 4_000.0 + k * 150.0, 150.0);
            s.set(class, "vm_data_kb", 2_500.0 + k * 100.0, 100.0);
            s.set(class, "vm_exe_kb", 300.0 + k * 30.0, 30.0);
            shared_memory(&mut s, class);
        }
        s
    }

    /// Background load: cycle counts carry a small class difference buried
    /// in heavy noise, memory is unaffected by load.
    pub fn kex_loaded() -> SynthSpec {
        let mut s = SynthSpec::default();
        for (class, cycles, size, rss, data, exe) in [
            ("classical", 2_000_000.0, 12_000.0, 4_000.0, 2_500.0, 300.0),
            ("pq", 2_400_000.0, 19_000.0, 7_000.0, 5_200.0, 900.0),
        ] {
            s.set_cores(class, cycles, 1_200_000.0);
            s.set(class, "vm_size_kb", size, 300.0);
            s.set(class, "vm_rss_kb", rss, 100.0);
            s.set(class, "vm_data_kb", data, 80.0);
            s.set(class, "vm_exe_kb", exe, 20.0);
            shared_memory(&mut s, class);
        }
        s
    }

    /// Classical vs lattice-based SNARK generation: disjoint cycle
    /// distributions on two busy cores, similar memory.
    pub fn snark() -> SynthSpec {
        let mut s = SynthSpec::default();
        for (class, busy) in [("classical", 400_000_000.0), ("pq", 2_600_000_000.0)] {
            s.set_cores(class, 5_000_000.0, 50_000.0);
            s.set(class, "core_0", busy, 10_000_000.0);
            s.set(class, "core_1", busy * 0.9, 10_000_000.0);
            s.set(class, "vm_size_kb", 250_000.0, 2_000.0);
            s.set(class, "vm_rss_kb", 90_000.0, 1_000.0);
            s.set(class, "vm_data_kb", 70_000.0, 1_000.0);
            s.set(class, "vm_exe_kb", 4_000.0, 10.0);
            shared_memory(&mut s, class);
        }
        s
    }
}
