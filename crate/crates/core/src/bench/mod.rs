//! Measurement harness: copy bandwidth, timed scheme runs and the
//! cross-scheme verification suite.

mod stream;
mod verify;

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use stream::{
    detect_llc_bytes, stream_copy, stream_copy_bw, CopyMode, StreamConfig, StreamResult,
};
pub use verify::{
    oracle_geometry, verify_suite, verify_suite_with, VerifyEntry, VerifyReport, VERIFY_TOLERANCE,
};

use crate::collision::FlowParams;
use crate::geometry::GridGeometry;
use crate::perfmodel::{predict_mlups, traffic, ModelScheme};
use crate::real::Real;
use crate::schemes::{
    create_stepper_with, Addressing, SchemeError, SchemeId, StepperOptions, StoreMode,
};
use crate::stencil::{Stencil, StencilKind};

/// Model fraction above which a run is reported as violating the bound.
pub const MODEL_SLACK: f64 = 1.1;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("buffer too small: {buffer} bytes, need at least 4x the {llc}-byte last-level cache")]
    BufferTooSmall { buffer: usize, llc: u64 },
    #[error("need at least 5 repetitions, got {0}")]
    TooFewRepetitions(usize),
    #[error("could not allocate {0} bytes")]
    Allocation(usize),
    #[error("copy produced wrong data")]
    CopyMismatch,
    #[error("unknown copy mode '{0}'")]
    UnknownCopyMode(String),
    #[error("steps and repetitions must be positive")]
    ZeroSteps,
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Median of a non-empty sample.
pub(crate) fn median(samples: &[f64]) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Million lattice-node updates per second.
pub fn mlups(fluid_count: usize, steps: u64, seconds: f64) -> f64 {
    fluid_count as f64 * steps as f64 / seconds / 1e6
}

/// Host copy bandwidths in GB/s used for predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HostBandwidth {
    pub allocate_gbs: f64,
    pub streaming_gbs: f64,
}

impl HostBandwidth {
    /// Streaming bandwidth for the schemes without write allocate.
    pub fn for_scheme(&self, m: ModelScheme) -> f64 {
        match m {
            ModelScheme::Osnt | ModelScheme::Aap | ModelScheme::Et => self.streaming_gbs,
            _ => self.allocate_gbs,
        }
    }

    pub fn measure(
        buffer_bytes: usize,
        repetitions: usize,
        workers: usize,
    ) -> Result<Self, BenchError> {
        let run = |mode| {
            stream_copy(&StreamConfig {
                buffer_bytes,
                repetitions,
                mode,
                workers,
                llc_bytes: None,
            })
        };
        Ok(HostBandwidth {
            allocate_gbs: run(CopyMode::Allocate)?.bandwidth_gbs,
            streaming_gbs: run(CopyMode::Streaming)?.bandwidth_gbs,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub steps: u64,
    pub warmup_steps: u64,
    /// Timed runs; the median is reported.
    pub repetitions: usize,
    pub workers: usize,
    pub chunk_length: usize,
    pub store_mode: StoreMode,
    pub stencil: StencilKind,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            steps: 20,
            warmup_steps: 10,
            repetitions: 3,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            chunk_length: 150,
            store_mode: StoreMode::Streaming,
            stencil: StencilKind::D3Q19,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub scheme: String,
    pub addressing: String,
    pub geometry: String,
    pub fluid_count: usize,
    pub steps: u64,
    pub workers: usize,
    pub seconds: f64,
    pub mlups: f64,
    pub bytes_per_lup: f64,
    pub predicted_mlups: f64,
    pub model_fraction: f64,
}

/// Column order of the CSV output.
pub const CSV_HEADER: [&str; 11] = [
    "scheme",
    "addressing",
    "geometry",
    "fluid_count",
    "steps",
    "workers",
    "seconds",
    "mlups",
    "bytes_per_lup",
    "predicted_mlups",
    "model_fraction",
];

impl BenchResult {
    /// Field values in [`CSV_HEADER`] order, floats in shortest round-trip form.
    pub fn fields(&self) -> [String; 11] {
        [
            self.scheme.clone(),
            self.addressing.clone(),
            self.geometry.clone(),
            self.fluid_count.to_string(),
            self.steps.to_string(),
            self.workers.to_string(),
            self.seconds.to_string(),
            self.mlups.to_string(),
            self.bytes_per_lup.to_string(),
            self.predicted_mlups.to_string(),
            self.model_fraction.to_string(),
        ]
    }

    pub fn model_violated(&self) -> bool {
        self.model_fraction > MODEL_SLACK
    }
}

/// Times `scheme` on `geometry`: `warmup_steps` untimed, then the median
/// over `repetitions` runs of `steps` sweeps.
pub fn run_bench<T: Real>(
    scheme: SchemeId,
    addressing: Addressing,
    geometry: &GridGeometry,
    geometry_name: &str,
    params: FlowParams<T>,
    cfg: &BenchConfig,
    bandwidth: &HostBandwidth,
) -> Result<BenchResult, BenchError> {
    if cfg.steps == 0 || cfg.repetitions == 0 {
        return Err(BenchError::ZeroSteps);
    }
    let stencil = Stencil::new(cfg.stencil);
    let options = StepperOptions {
        chunk_length: cfg.chunk_length,
        store_mode: cfg.store_mode,
        workers: cfg.workers,
        ..Default::default()
    };
    let mut st = create_stepper_with(scheme, addressing, geometry, &stencil, params, options)?;
    st.run(cfg.warmup_steps);
    let times: Vec<f64> = (0..cfg.repetitions)
        .map(|_| {
            let t = Instant::now();
            st.run(cfg.steps);
            st.finish_pending();
            t.elapsed().as_secs_f64()
        })
        .collect();
    let seconds = median(&times);
    let model = scheme.model_family();
    let bytes = traffic(model, addressing, &stencil)
        .with_pdf_bytes(std::mem::size_of::<T>() as u32)
        .bytes_per_lup();
    let rate = mlups(st.fluid_count(), cfg.steps, seconds);
    let predicted = predict_mlups(bandwidth.for_scheme(model), bytes);
    Ok(BenchResult {
        scheme: scheme.name().to_string(),
        addressing: addressing.name().to_string(),
        geometry: geometry_name.to_string(),
        fluid_count: st.fluid_count(),
        steps: cfg.steps,
        workers: cfg.workers,
        seconds,
        mlups: rate,
        bytes_per_lup: bytes,
        predicted_mlups: predicted,
        model_fraction: rate / predicted,
    })
}

pub fn write_csv<W: Write>(results: &[BenchResult], w: W) -> Result<(), BenchError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in results {
        out.write_record(r.fields())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(results: &[BenchResult], mut w: W) -> Result<(), BenchError> {
    serde_json::to_writer_pretty(&mut w, results)?;
    writeln!(w)?;
    Ok(())
}
