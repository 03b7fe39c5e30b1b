//! Copy-bandwidth microbenchmark.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use rayon::ThreadPool;

use super::{median, BenchError};
use crate::real::Real;

const CHUNK: usize = 1 << 15;

/// Store path used by the copy loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopyMode {
    /// Plain stores: each written line is read first (write allocate).
    Allocate,
    /// Non-temporal stores that bypass the caches.
    Streaming,
}

impl CopyMode {
    /// Bytes counted per copied byte.
    pub fn traffic_factor(self) -> f64 {
        match self {
            CopyMode::Allocate => 3.0,
            CopyMode::Streaming => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CopyMode::Allocate => "allocate",
            CopyMode::Streaming => "streaming",
        }
    }
}

impl fmt::Display for CopyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CopyMode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "allocate" | "plain" => Ok(CopyMode::Allocate),
            "streaming" | "nt" => Ok(CopyMode::Streaming),
            _ => Err(BenchError::UnknownCopyMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StreamConfig {
    /// Size of each of the two copied regions.
    pub buffer_bytes: usize,
    pub repetitions: usize,
    pub mode: CopyMode,
    pub workers: usize,
    /// Last-level cache size; detected when `None`.
    pub llc_bytes: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct StreamResult {
    /// Median bandwidth in GB/s.
    pub bandwidth_gbs: f64,
    pub samples: Vec<f64>,
    pub requested: CopyMode,
    pub mode: CopyMode,
    /// Streaming stores were unavailable and plain stores were used.
    pub fallback: bool,
    pub buffer_bytes: usize,
    pub llc_bytes: Option<u64>,
    pub workers: usize,
}

impl StreamResult {
    /// Coefficient of variation of the samples.
    pub fn cv(&self) -> f64 {
        let n = self.samples.len() as f64;
        let mean = self.samples.iter().sum::<f64>() / n;
        let var = self.samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        var.sqrt() / mean
    }
}

/// Largest data or unified cache reported by sysfs for cpu0.
pub fn detect_llc_bytes() -> Option<u64> {
    llc_from_sysfs(Path::new("/sys/devices/system/cpu/cpu0/cache"))
}

fn llc_from_sysfs(dir: &Path) -> Option<u64> {
    let mut best: Option<(u32, u64)> = None;
    for entry in std::fs::read_dir(dir).ok()?.flatten() {
        let p = entry.path();
        let read = |f: &str| {
            std::fs::read_to_string(p.join(f))
                .ok()
                .map(|s| s.trim().to_string())
        };
        let (Some(level), Some(kind), Some(size)) = (read("level"), read("type"), read("size"))
        else {
            continue;
        };
        if kind == "Instruction" {
            continue;
        }
        let (Ok(level), Some(bytes)) = (level.parse::<u32>(), parse_size(&size)) else {
            continue;
        };
        if best.is_none_or(|(l, _)| level > l) {
            best = Some((level, bytes));
        }
    }
    best.map(|(_, b)| b)
}

/// Parses sizes such as `32K`, `8M` or `1024`.
pub(crate) fn parse_size(s: &str) -> Option<u64> {
    let s = s.trim();
    let (num, mult) = match s.chars().last()? {
        'K' | 'k' => (&s[..s.len() - 1], 1u64 << 10),
        'M' | 'm' => (&s[..s.len() - 1], 1 << 20),
        'G' | 'g' => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    num.trim().parse::<u64>().ok()?.checked_mul(mult)
}

/// Copy bandwidth with all available cores and the detected cache size.
pub fn stream_copy_bw(
    buffer_bytes: usize,
    repetitions: usize,
    mode: CopyMode,
) -> Result<StreamResult, BenchError> {
    stream_copy(&StreamConfig {
        buffer_bytes,
        repetitions,
        mode,
        workers: rayon::current_num_threads(),
        llc_bytes: None,
    })
}

pub fn stream_copy(cfg: &StreamConfig) -> Result<StreamResult, BenchError> {
    if cfg.repetitions < 5 {
        return Err(BenchError::TooFewRepetitions(cfg.repetitions));
    }
    let llc = cfg.llc_bytes.or_else(detect_llc_bytes);
    if let Some(l) = llc {
        if (cfg.buffer_bytes as u64) < 4 * l {
            return Err(BenchError::BufferTooSmall {
                buffer: cfg.buffer_bytes,
                llc: l,
            });
        }
    }
    if cfg.buffer_bytes < CHUNK * 8 {
        return Err(BenchError::BufferTooSmall {
            buffer: cfg.buffer_bytes,
            llc: llc.unwrap_or(0),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| BenchError::ThreadPool(e.to_string()))?;
    let n = cfg.buffer_bytes / 8;
    let src = touched(n, &pool, |i| i as f64)?;
    let mut dst = touched(n, &pool, |_| 0.0)?;
    let fallback = cfg.mode == CopyMode::Streaming && !f64::HAS_STREAMING_STORE;
    let mode = if fallback {
        CopyMode::Allocate
    } else {
        cfg.mode
    };
    copy(&src, &mut dst, mode, &pool);
    let bytes = (n * 8) as f64 * mode.traffic_factor();
    let samples: Vec<f64> = (0..cfg.repetitions)
        .map(|_| {
            let t = Instant::now();
            copy(&src, &mut dst, mode, &pool);
            bytes / t.elapsed().as_secs_f64() / 1e9
        })
        .collect();
    if dst[n - 1] != src[n - 1] {
        return Err(BenchError::CopyMismatch);
    }
    Ok(StreamResult {
        bandwidth_gbs: median(&samples),
        samples,
        requested: cfg.mode,
        mode,
        fallback,
        buffer_bytes: n * 8,
        llc_bytes: llc,
        workers: pool.current_num_threads(),
    })
}

fn touched(
    n: usize,
    pool: &ThreadPool,
    f: impl Fn(usize) -> f64 + Sync + Send,
) -> Result<Vec<f64>, BenchError> {
    let mut v: Vec<f64> = Vec::new();
    v.try_reserve_exact(n)
        .map_err(|_| BenchError::Allocation(n * 8))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect_into_vec(&mut v));
    Ok(v)
}

fn copy(src: &[f64], dst: &mut [f64], mode: CopyMode, pool: &ThreadPool) {
    pool.install(|| {
        dst.par_chunks_mut(CHUNK)
            .zip(src.par_chunks(CHUNK))
            .for_each(|(d, s)| match mode {
                CopyMode::Allocate => d.copy_from_slice(s),
                CopyMode::Streaming => {
                    for (x, &y) in d.iter_mut().zip(s) {
                        // SAFETY: `x` is a valid, aligned, exclusively borrowed element.
                        unsafe { f64::store_streaming(x, y) };
                    }
                    f64::streaming_fence();
                }
            })
    });
}
