//! Byte-traffic model of the propagation schemes, code and machine balance,
//! and bandwidth-bound performance prediction.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schemes::Addressing;
use crate::stencil::Stencil;

/// Nominal FLOPs per node update used for the published code balance.
pub const NOMINAL_FLOPS: u64 = 200;

const BUNDLED_MACHINES: &str = include_str!("machines.toml");

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown scheme '{0}'")]
    UnknownScheme(String),
    #[error("unknown machine '{0}'")]
    UnknownMachine(String),
    #[error("unknown memory level '{0}'")]
    UnknownLevel(String),
    #[error("machine {machine} has no copy bandwidth at {level} level")]
    MissingBandwidth { machine: String, level: MemoryLevel },
    #[error("flops per update must be positive")]
    ZeroFlops,
    #[error("invalid machine entry {machine}: {reason}")]
    InvalidMachine { machine: String, reason: String },
    #[error("machine registry: {0}")]
    Registry(#[from] toml::de::Error),
    #[error("machine registry: {0}")]
    Io(#[from] std::io::Error),
}

/// Propagation scheme family as far as memory traffic is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelScheme {
    Ts,
    Os,
    Osnt,
    Cg,
    Swap,
    Aap,
    Et,
}

impl ModelScheme {
    pub const ALL: [ModelScheme; 7] = [
        ModelScheme::Ts,
        ModelScheme::Os,
        ModelScheme::Osnt,
        ModelScheme::Cg,
        ModelScheme::Swap,
        ModelScheme::Aap,
        ModelScheme::Et,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelScheme::Ts => "TS",
            ModelScheme::Os => "OS",
            ModelScheme::Osnt => "OSNT",
            ModelScheme::Cg => "CG",
            ModelScheme::Swap => "SWAP",
            ModelScheme::Aap => "AAP",
            ModelScheme::Et => "ET",
        }
    }
}

impl fmt::Display for ModelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelScheme {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_uppercase()
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .collect();
        ModelScheme::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| ModelError::UnknownScheme(s.to_string()))
    }
}

/// Memory level whose copy bandwidth enters the machine balance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryLevel {
    Core,
    Socket,
    Node,
}

impl fmt::Display for MemoryLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemoryLevel::Core => "core",
            MemoryLevel::Socket => "socket",
            MemoryLevel::Node => "node",
        })
    }
}

impl FromStr for MemoryLevel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "core" => Ok(MemoryLevel::Core),
            "socket" => Ok(MemoryLevel::Socket),
            "node" => Ok(MemoryLevel::Node),
            _ => Err(ModelError::UnknownLevel(s.to_string())),
        }
    }
}

/// Memory elements moved per node update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficSpec {
    pub scheme: ModelScheme,
    pub addressing: Addressing,
    pub pdf_loads: Ratio<i64>,
    pub pdf_write_allocates: Ratio<i64>,
    pub pdf_stores: Ratio<i64>,
    /// Averaged over time steps where the pattern alternates.
    pub idx_loads: Ratio<i64>,
    pub pdf_bytes: u32,
    pub idx_bytes: u32,
}

impl TrafficSpec {
    pub fn total_pdf_elements(&self) -> Ratio<i64> {
        self.pdf_loads + self.pdf_write_allocates + self.pdf_stores
    }

    pub fn idx_elements(&self) -> Ratio<i64> {
        self.idx_loads
    }

    pub fn bytes_per_lup_exact(&self) -> Ratio<i64> {
        self.total_pdf_elements() * i64::from(self.pdf_bytes)
            + self.idx_loads * i64::from(self.idx_bytes)
    }

    pub fn bytes_per_lup(&self) -> f64 {
        ratio_to_f64(self.bytes_per_lup_exact())
    }

    /// Same traffic with a different PDF element size (4 for single precision).
    pub fn with_pdf_bytes(mut self, bytes: u32) -> Self {
        self.pdf_bytes = bytes;
        self
    }
}

/// Nearest `f64` of an exact count.
pub fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Element counts per node update for one scheme and addressing mode.
pub fn traffic(scheme: ModelScheme, addressing: Addressing, stencil: &Stencil) -> TrafficSpec {
    let q = Ratio::from_integer(stencil.q() as i64);
    let one = Ratio::from_integer(1);
    let two = Ratio::from_integer(2);
    let zero = Ratio::from_integer(0);
    let (loads, wa, stores, idx) = match scheme {
        ModelScheme::Ts => (two * q, two * q, two * q, two * (q - one)),
        ModelScheme::Os => (q, q, q, q - one),
        ModelScheme::Osnt => (q, zero, q, q - one),
        ModelScheme::Cg => (q, q - one, q, q - one),
        // Local loads plus remote loads for the swap; local stores plus swap stores.
        ModelScheme::Swap => (
            q + (q - one) / two,
            zero,
            q + (q - one) / two,
            (q - one) / two,
        ),
        ModelScheme::Aap => (q, zero, q, (q - one) / two),
        ModelScheme::Et => (q, zero, q, (q + one) / two),
    };
    TrafficSpec {
        scheme,
        addressing,
        pdf_loads: loads,
        pdf_write_allocates: wa,
        pdf_stores: stores,
        idx_loads: if addressing == Addressing::Indirect {
            idx
        } else {
            zero
        },
        pdf_bytes: 8,
        idx_bytes: 4,
    }
}

/// Index loads of the AA pattern on even and odd steps (indirect addressing).
pub fn aap_idx_per_parity(stencil: &Stencil) -> [Ratio<i64>; 2] {
    [
        Ratio::from_integer(0),
        Ratio::from_integer(stencil.q() as i64 - 1),
    ]
}

/// Bytes per FLOP at the nominal FLOP count.
pub fn code_balance(t: &TrafficSpec) -> f64 {
    ratio_to_f64(t.bytes_per_lup_exact() / NOMINAL_FLOPS as i64)
}

/// Bytes per FLOP for a given FLOP count per update.
pub fn code_balance_with(t: &TrafficSpec, flops_per_update: u64) -> Result<f64, ModelError> {
    if flops_per_update == 0 {
        return Err(ModelError::ZeroFlops);
    }
    Ok(t.bytes_per_lup() / flops_per_update as f64)
}

/// Copy bandwidth at `level` over the node peak.
pub fn machine_balance(m: &MachineSpec, level: MemoryLevel) -> Result<f64, ModelError> {
    let bw = m
        .copy_bw(level)
        .ok_or_else(|| ModelError::MissingBandwidth {
            machine: m.name.clone(),
            level,
        })?;
    Ok(bw / m.peak_gflops)
}

pub fn is_memory_bound(b_code: f64, b_machine: f64) -> bool {
    b_code > b_machine
}

/// Upper bound in MLUPs for a bandwidth in GB/s.
pub fn predict_mlups(bandwidth_gbs: f64, bytes_per_lup: f64) -> f64 {
    bandwidth_gbs * 1e9 / bytes_per_lup / 1e6
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table8Row {
    pub scheme: ModelScheme,
    pub addressing: Addressing,
    pub pdf_elements: f64,
    pub idx_elements: f64,
    pub bytes_per_lup: f64,
    pub b_code: f64,
}

/// Traffic of every scheme, direct addressing rows first.
pub fn table8(stencil: &Stencil) -> Vec<Table8Row> {
    let mut rows = Vec::with_capacity(2 * ModelScheme::ALL.len());
    for addressing in Addressing::ALL {
        for scheme in ModelScheme::ALL {
            let t = traffic(scheme, addressing, stencil);
            rows.push(Table8Row {
                scheme,
                addressing,
                pdf_elements: ratio_to_f64(t.total_pdf_elements()),
                idx_elements: ratio_to_f64(t.idx_elements()),
                bytes_per_lup: t.bytes_per_lup(),
                b_code: code_balance(&t),
            });
        }
    }
    rows
}

/// Outcome of checking a machine's peak against its clock and core count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakCheck {
    Consistent,
    /// Matches only at the maximum turbo frequency.
    TurboAdjusted,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineSpec {
    pub name: String,
    #[serde(default)]
    pub cpu: Option<String>,
    pub frequency_ghz: f64,
    #[serde(default)]
    pub max_frequency_ghz: Option<f64>,
    pub cores: u32,
    pub flops_per_cycle_per_core: u32,
    pub peak_gflops: f64,
    #[serde(default)]
    pub copy_bw_core: Option<f64>,
    #[serde(default)]
    pub copy_bw_socket: Option<f64>,
    #[serde(default)]
    pub copy_bw_node: Option<f64>,
    pub sockets: u32,
    pub numa_domains: u32,
    #[serde(default)]
    pub l1_kib: Option<u32>,
    #[serde(default)]
    pub l2_kib: Option<u32>,
    #[serde(default)]
    pub l3_kib: Option<u32>,
}

impl MachineSpec {
    pub fn copy_bw(&self, level: MemoryLevel) -> Option<f64> {
        match level {
            MemoryLevel::Core => self.copy_bw_core,
            MemoryLevel::Socket => self.copy_bw_socket,
            MemoryLevel::Node => self.copy_bw_node,
        }
    }

    pub fn computed_peak(&self, frequency_ghz: f64) -> f64 {
        frequency_ghz * f64::from(self.cores) * f64::from(self.flops_per_cycle_per_core)
    }

    /// Peak within 1% of frequency × cores × FLOPs per cycle.
    pub fn peak_check(&self) -> PeakCheck {
        let close =
            |f: f64| (self.computed_peak(f) - self.peak_gflops).abs() <= 0.01 * self.peak_gflops;
        if close(self.frequency_ghz) {
            PeakCheck::Consistent
        } else if self.max_frequency_ghz.is_some_and(close) {
            PeakCheck::TurboAdjusted
        } else {
            PeakCheck::Inconsistent
        }
    }

    /// Same machine with twice the FLOPs per cycle, as for single precision.
    pub fn single_precision(&self) -> Self {
        let mut m = self.clone();
        m.flops_per_cycle_per_core *= 2;
        m.peak_gflops *= 2.0;
        m
    }

    fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: &str| {
            Err(ModelError::InvalidMachine {
                machine: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if !(self.peak_gflops > 0.0 && self.frequency_ghz > 0.0) || self.cores == 0 {
            return bad("peak, frequency and cores must be positive");
        }
        let bws = [self.copy_bw_core, self.copy_bw_socket, self.copy_bw_node];
        if bws.iter().flatten().any(|b| !(*b > 0.0)) {
            return bad("bandwidths must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct RegistryFile {
    #[serde(default)]
    machine: Vec<MachineSpec>,
}

/// Named machine descriptions.
#[derive(Debug, Clone, Default)]
pub struct MachineRegistry {
    machines: Vec<MachineSpec>,
}

impl MachineRegistry {
    /// The four reference machines shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_MACHINES).expect("bundled machine table parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let file: RegistryFile = toml::from_str(text)?;
        for m in &file.machine {
            m.validate()?;
        }
        Ok(MachineRegistry {
            machines: file.machine,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Adds or replaces entries by name.
    pub fn merge(&mut self, other: MachineRegistry) {
        for m in other.machines {
            match self
                .machines
                .iter_mut()
                .find(|e| e.name.eq_ignore_ascii_case(&m.name))
            {
                Some(e) => *e = m,
                None => self.machines.push(m),
            }
        }
    }

    pub fn machines(&self) -> &[MachineSpec] {
        &self.machines
    }

    pub fn get(&self, name: &str) -> Result<&MachineSpec, ModelError> {
        self.machines
            .iter()
            .find(|m| m.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| ModelError::UnknownMachine(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::StencilKind;

    fn d3q19() -> Stencil {
        Stencil::new(StencilKind::D3Q19)
    }

    fn bytes(s: ModelScheme, a: Addressing) -> i64 {
        traffic(s, a, &d3q19()).bytes_per_lup_exact().to_integer()
    }

    #[test]
    fn element_counts_for_d3q19() {
        let s = d3q19();
        // (pdf elements, idx elements in halves) per scheme, indirect addressing.
        let expect = [
            (114, 72),
            (57, 36),
            (38, 36),
            (56, 36),
            (56, 18),
            (38, 18),
            (38, 20),
        ];
        for (m, (pdfs, idx2)) in ModelScheme::ALL.into_iter().zip(expect) {
            let t = traffic(m, Addressing::Indirect, &s);
            assert_eq!(t.total_pdf_elements(), Ratio::from_integer(pdfs), "{m}");
            assert_eq!(t.idx_elements() * 2, Ratio::from_integer(idx2), "{m}");
            let d = traffic(m, Addressing::Direct, &s);
            assert_eq!(d.total_pdf_elements(), t.total_pdf_elements());
            assert_eq!(d.idx_elements(), Ratio::from_integer(0));
        }
    }

    #[test]
    fn in_place_schemes_have_no_write_allocate() {
        let s = d3q19();
        for m in [ModelScheme::Osnt, ModelScheme::Aap, ModelScheme::Et] {
            assert_eq!(
                traffic(m, Addressing::Direct, &s).pdf_write_allocates,
                Ratio::from_integer(0)
            );
        }
    }

    #[test]
    fn examples_from_the_table() {
        use Addressing::*;
        assert_eq!(bytes(ModelScheme::Ts, Direct), 912);
        assert_eq!(bytes(ModelScheme::Aap, Indirect), 340);
        assert_eq!(bytes(ModelScheme::Et, Indirect), 344);
        assert_eq!(bytes(ModelScheme::Swap, Indirect), 484);
        assert_eq!(bytes(ModelScheme::Cg, Indirect), 520);
        let t = traffic(ModelScheme::Os, Indirect, &d3q19());
        assert!((code_balance(&t) - 2.64).abs() < 1e-12);
    }

    #[test]
    fn code_balance_override() {
        let t = traffic(ModelScheme::Osnt, Addressing::Direct, &d3q19());
        assert!((code_balance_with(&t, 200).unwrap() - 1.52).abs() < 1e-12);
        assert!((code_balance_with(&t, 304).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            code_balance_with(&t, 0),
            Err(ModelError::ZeroFlops)
        ));
    }

    #[test]
    fn aap_parity_average() {
        let s = d3q19();
        let [even, odd] = aap_idx_per_parity(&s);
        assert_eq!(
            (even + odd) / 2,
            traffic(ModelScheme::Aap, Addressing::Indirect, &s).idx_loads
        );
    }

    #[test]
    fn predictions() {
        assert!((predict_mlups(1.0, 1000.0) - 1.0).abs() < 1e-12);
        assert!((predict_mlups(40.6, 340.0) - 119.41).abs() < 0.01);
        assert_eq!(predict_mlups(20.0, 300.0) * 2.0, predict_mlups(40.0, 300.0));
    }

    #[test]
    fn memory_bound_is_strict() {
        assert!(is_memory_bound(4.56, 0.32));
        assert!(!is_memory_bound(0.5, 0.5));
    }

    #[test]
    fn scheme_names_parse() {
        for m in ModelScheme::ALL {
            assert_eq!(m.name().parse::<ModelScheme>().unwrap(), m);
        }
        assert_eq!("os-nt".parse::<ModelScheme>().unwrap(), ModelScheme::Osnt);
        assert!(matches!(
            "XX".parse::<ModelScheme>(),
            Err(ModelError::UnknownScheme(_))
        ));
    }

    #[test]
    fn bundled_registry() {
        let r = MachineRegistry::bundled();
        assert_eq!(r.machines().len(), 4);
        for m in r.machines() {
            assert_eq!(m.peak_check(), PeakCheck::Consistent, "{}", m.name);
        }
        let w = r.get("westmere").unwrap();
        assert!((machine_balance(w, MemoryLevel::Node).unwrap() - 0.3168).abs() < 1e-4);
        assert!(r.get("Nehalem").is_err());
    }

    #[test]
    fn turbo_and_missing_bandwidth() {
        let text = r#"
            [[machine]]
            name = "host"
            frequency_ghz = 2.0
            max_frequency_ghz = 2.5
            cores = 2
            flops_per_cycle_per_core = 4
            peak_gflops = 20.0
            copy_bw_node = 10.0
            sockets = 1
            numa_domains = 1
        "#;
        let mut r = MachineRegistry::bundled();
        r.merge(MachineRegistry::from_toml_str(text).unwrap());
        let h = r.get("HOST").unwrap();
        assert_eq!(h.peak_check(), PeakCheck::TurboAdjusted);
        assert!((machine_balance(h, MemoryLevel::Node).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(
            machine_balance(h, MemoryLevel::Core),
            Err(ModelError::MissingBandwidth { .. })
        ));
        assert!(MachineRegistry::from_toml_str(&text.replace("10.0", "-1.0")).is_err());
    }

    #[test]
    fn single_precision_keeps_verdict() {
        let s = d3q19();
        for m in MachineRegistry::bundled().machines() {
            let sp = m.single_precision();
            for a in Addressing::ALL {
                for scheme in ModelScheme::ALL {
                    let t = traffic(scheme, a, &s);
                    let dp = is_memory_bound(
                        code_balance(&t),
                        machine_balance(m, MemoryLevel::Node).unwrap(),
                    );
                    let t4 = t.with_pdf_bytes(4);
                    let spv = is_memory_bound(
                        code_balance(&t4),
                        machine_balance(&sp, MemoryLevel::Node).unwrap(),
                    );
                    assert_eq!(dp, spv);
                }
            }
        }
    }
}
