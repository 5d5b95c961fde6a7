//! The 19-feature sample schema: twelve per-core cycle counts and seven
//! memory figures from `/proc/[pid]/status`, in kibibytes.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{MlError, Result};

pub const NUM_CORES: usize = 12;
pub const NUM_FEATURES: usize = 19;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "core_0", "core_1", "core_2", "core_3", "core_4", "core_5", "core_6", "core_7", "core_8",
    "core_9", "core_10", "core_11", "vm_size_kb", "vm_rss_kb", "vm_data_kb", "vm_stk_kb",
    "vm_exe_kb", "vm_lib_kb", "vm_pte_kb",
];

pub const VM_SIZE: usize = 12;
pub const VM_RSS: usize = 13;
pub const VM_DATA: usize = 14;
pub const VM_STK: usize = 15;
pub const VM_EXE: usize = 16;
pub const VM_LIB: usize = 17;
pub const VM_PTE: usize = 18;

/// Indices of the memory features.
pub const MEMORY_FEATURES: std::ops::Range<usize> = NUM_CORES..NUM_FEATURES;

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryFields {
    pub vm_size_kb: u64,
    pub vm_rss_kb: u64,
    pub vm_data_kb: u64,
    pub vm_stk_kb: u64,
    pub vm_exe_kb: u64,
    pub vm_lib_kb: u64,
    pub vm_pte_kb: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Cycles per core; cores the device lacks are 0.
    pub core_cycles: [u64; NUM_CORES],
    pub memory: MemoryFields,
    pub label: Option<String>,
}

impl FeatureVector {
    pub fn values(&self) -> [u64; NUM_FEATURES] {
        let m = &self.memory;
        let mut v = [0; NUM_FEATURES];
        v[..NUM_CORES].copy_from_slice(&self.core_cycles);
        v[NUM_CORES..].copy_from_slice(&[
            m.vm_size_kb,
            m.vm_rss_kb,
            m.vm_data_kb,
            m.vm_stk_kb,
            m.vm_exe_kb,
            m.vm_lib_kb,
            m.vm_pte_kb,
        ]);
        v
    }

    pub fn from_values(v: [u64; NUM_FEATURES], label: Option<String>) -> Self {
        let mut core_cycles = [0; NUM_CORES];
        core_cycles.copy_from_slice(&v[..NUM_CORES]);
        FeatureVector {
            core_cycles,
            memory: MemoryFields {
                vm_size_kb: v[VM_SIZE],
                vm_rss_kb: v[VM_RSS],
                vm_data_kb: v[VM_DATA],
                vm_stk_kb: v[VM_STK],
                vm_exe_kb: v[VM_EXE],
                vm_lib_kb: v[VM_LIB],
                vm_pte_kb: v[VM_PTE],
            },
            label,
        }
    }

    pub fn features_f64(&self) -> [f64; NUM_FEATURES] {
        self.values().map(|x| x as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<FeatureVector>,
    /// Distinct labels, ascending. Empty for unlabeled data.
    pub classes: Vec<String>,
}

impl Dataset {
    /// Build a dataset, deriving the class list from the row labels.
    pub fn new(rows: Vec<FeatureVector>) -> Self {
        let classes: BTreeSet<String> = rows.iter().filter_map(|r| r.label.clone()).collect();
        Dataset {
            rows,
            classes: classes.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Class index of every row; fails on unlabeled rows.
    pub fn label_indices(&self) -> Result<Vec<usize>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let label = r.label.as_ref().ok_or_else(|| MlError::Value {
                    row: i,
                    column: "label".into(),
                    message: "missing label".into(),
                })?;
                self.classes
                    .binary_search(label)
                    .map_err(|_| MlError::Schema(format!("label {label:?} not in class list")))
            })
            .collect()
    }

    pub fn class_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for r in &self.rows {
            if let Some(l) = &r.label {
                *m.entry(l.clone()).or_insert(0) += 1;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
    /// The file carried a label column.
    pub labeled: bool,
}

fn parse_cell(text: &str, row: usize, column: &str) -> Result<u64> {
    let t = text.trim();
    if t.is_empty() {
        return Ok(0);
    }
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    let err = |message: &str| MlError::Value {
        row,
        column: column.to_owned(),
        message: format!("{message}: {t:?}"),
    };
    match t.parse::<f64>() {
        Ok(v) if v < 0.0 => Err(err("negative value")),
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v <= u64::MAX as f64 => Ok(v as u64),
        Ok(_) => Err(err("not a non-negative integer")),
        Err(_) => Err(err("not a number")),
    }
}

/// Read a feature CSV. Memory columns are required; absent core columns are
/// zero-filled; the label column is optional. Empty cells read as 0.
pub fn load_csv<R: Read>(source: R) -> Result<LoadedCsv> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr
        .headers()
        .map_err(|e| MlError::Schema(format!("unreadable header: {e}")))?
        .clone();
    let mut columns: Vec<Option<usize>> = Vec::with_capacity(headers.len());
    let mut label_col = None;
    let mut seen = BTreeSet::new();
    for (i, h) in headers.iter().enumerate() {
        if !seen.insert(h.to_owned()) {
            return Err(MlError::Schema(format!("duplicate column {h}")));
        }
        if h == "label" {
            label_col = Some(i);
            columns.push(None);
        } else if let Some(f) = feature_index(h) {
            columns.push(Some(f));
        } else {
            return Err(MlError::Schema(format!("unknown column {h}")));
        }
    }
    for f in MEMORY_FEATURES {
        if !columns.contains(&Some(f)) {
            return Err(MlError::Schema(format!("missing column {}", FEATURE_NAMES[f])));
        }
    }
    let mut warnings = Vec::new();
    let missing: Vec<&str> = (0..NUM_CORES)
        .filter(|f| !columns.contains(&Some(*f)))
        .map(|f| FEATURE_NAMES[f])
        .collect();
    if !missing.is_empty() {
        warnings.push(format!("zero-filled missing core columns: {}", missing.join(", ")));
    }
    let mut rows = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| MlError::Parse(format!("row {row}: {e}")))?;
        if rec.len() != headers.len() {
            return Err(MlError::Value {
                row,
                column: String::new(),
                message: format!("expected {} cells, found {}", headers.len(), rec.len()),
            });
        }
        let mut v = [0u64; NUM_FEATURES];
        let mut label = None;
        for (i, cell) in rec.iter().enumerate() {
            match columns[i] {
                Some(f) => v[f] = parse_cell(cell, row, FEATURE_NAMES[f])?,
                None if Some(i) == label_col => {
                    if cell.is_empty() {
                        return Err(MlError::Value {
                            row,
                            column: "label".into(),
                            message: "empty label".into(),
                        });
                    }
                    label = Some(cell.to_owned());
                }
                None => {}
            }
        }
        rows.push(FeatureVector::from_values(v, label));
    }
    Ok(LoadedCsv {
        dataset: Dataset::new(rows),
        warnings,
        labeled: label_col.is_some(),
    })
}

/// Write all 19 feature columns, plus `label` when any row has one.
pub fn write_csv<W: Write>(ds: &Dataset, sink: W) -> Result<()> {
    let labeled = ds.rows.iter().any(|r| r.label.is_some());
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| MlError::Io(std::io::Error::other(e));
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    if labeled {
        header.push("label");
    }
    w.write_record(&header).map_err(io)?;
    for r in &ds.rows {
        let mut rec: Vec<String> = r.values().iter().map(u64::to_string).collect();
        if labeled {
            rec.push(r.label.clone().unwrap_or_default());
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

const STATUS_KEYS: [(&str, usize); 7] = [
    ("VmSize", VM_SIZE),
    ("VmRSS", VM_RSS),
    ("VmData", VM_DATA),
    ("VmStk", VM_STK),
    ("VmExe", VM_EXE),
    ("VmLib", VM_LIB),
    ("VmPTE", VM_PTE),
];

/// Extract the seven memory fields (kB) from `/proc/[pid]/status` text.
pub fn parse_proc_status(text: &str) -> Result<MemoryFields> {
    let mut found: BTreeMap<usize, u64> = BTreeMap::new();
    for line in text.lines() {
        let Some((key, rest)) = line.split_once(':') else {
            continue;
        };
        let Some(&(_, idx)) = STATUS_KEYS.iter().find(|(k, _)| *k == key.trim()) else {
            continue;
        };
        let mut parts = rest.split_whitespace();
        let value = parts
            .next()
            .and_then(|v| v.parse::<u64>().ok())
            .ok_or_else(|| MlError::Parse(format!("bad value on line {line:?}")))?;
        match parts.next() {
            Some("kB") | None => {}
            Some(unit) => return Err(MlError::Parse(format!("unexpected unit {unit:?} for {key}"))),
        }
        found.insert(idx, value);
    }
    let mut v = [0u64; NUM_FEATURES];
    for (key, idx) in STATUS_KEYS {
        v[idx] = *found.get(&idx).ok_or_else(|| MlError::MissingField(key.to_owned()))?;
    }
    Ok(FeatureVector::from_values(v, None).memory)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerfCycles {
    /// Core index to cycle count.
    pub cores: BTreeMap<usize, u64>,
    pub warnings: Vec<String>,
}

impl PerfCycles {
    pub fn to_array(&self) -> [u64; NUM_CORES] {
        let mut a = [0; NUM_CORES];
        for (&c, &v) in &self.cores {
            a[c] = v;
        }
        a
    }
}

/// Parse CSV-mode per-core counter output (`perf stat -x, -A -e cycles`):
/// rows of `CPU<n>,<value>,<unit>,<event>,...`. Rows for other events and
/// comment lines are ignored; repeated rows for a core are summed.
pub fn parse_perf_stat(text: &str) -> Result<PerfCycles> {
    let mut cores = BTreeMap::new();
    let mut warnings = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 {
            return Err(MlError::Parse(format!("line {}: expected at least 4 fields", n + 1)));
        }
        let event = fields[3].trim();
        if event != "cycles" && !event.starts_with("cycles:") {
            continue;
        }
        let cpu = fields[0]
            .trim()
            .strip_prefix("CPU")
            .and_then(|c| c.parse::<usize>().ok())
            .ok_or_else(|| MlError::Parse(format!("line {}: bad cpu id {:?}", n + 1, fields[0])))?;
        if cpu >= NUM_CORES {
            return Err(MlError::Parse(format!("line {}: core {cpu} beyond {NUM_CORES}", n + 1)));
        }
        let raw = fields[1].trim();
        let value = if raw.starts_with("<not") {
            warnings.push(format!("CPU{cpu}: {raw}, recorded as 0"));
            0
        } else {
            raw.parse::<u64>()
                .map_err(|_| MlError::Parse(format!("line {}: bad count {raw:?}", n + 1)))?
        };
        *cores.entry(cpu).or_insert(0u64) += value;
    }
    if cores.is_empty() {
        return Err(MlError::Parse("no per-core cycle rows".into()));
    }
    Ok(PerfCycles { cores, warnings })
}
