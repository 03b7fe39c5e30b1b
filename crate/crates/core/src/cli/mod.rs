//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::bench::{
    detect_llc_bytes, run_bench, stream_copy, verify_suite_with, write_csv, write_json,
    BenchConfig, BenchError, BenchResult, CopyMode, HostBandwidth, StreamConfig,
};
use crate::collision::{CollisionError, FlowParams};
use crate::geometry::{
    gen_channel, gen_packed_bed, load_geo_file, save_geo_file, AxisPolicy, GeometryError,
    GridGeometry, PACKED_BED_PITCH, PACKED_BED_RADIUS,
};
use crate::perfmodel::{
    code_balance_with, machine_balance, predict_mlups, traffic, MachineRegistry, MemoryLevel,
    ModelError, ModelScheme, PeakCheck,
};
use crate::schemes::{Addressing, SchemeError, SchemeId, StoreMode};
use crate::stencil::{make_stencil, StencilError};

/// Environment variable naming the machine used for `model` predictions.
pub const MACHINE_ENV: &str = "LBMLAB_MACHINE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error(transparent)]
    Stencil(#[from] StencilError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lbmlab",
    version,
    about = "Lattice Boltzmann propagation schemes: model, verify, bench"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Byte traffic, code balance and predictions per scheme.
    Model(ModelArgs),
    /// Runs every implemented scheme against the reference.
    Verify(VerifyArgs),
    /// Times schemes on a geometry.
    Bench(BenchArgs),
    /// Generates or inspects a geometry.
    Geom(GeomArgs),
    /// Copy-bandwidth microbenchmark.
    Stream(StreamArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write to a file instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value = "d3q19")]
    pub stencil: String,
    /// Scheme family, repeatable; `all` selects every one.
    #[arg(long = "scheme", default_value = "all")]
    pub schemes: Vec<String>,
    /// `direct`, `indirect` or `all`, repeatable.
    #[arg(long = "addressing", default_value = "all")]
    pub addressings: Vec<String>,
    /// FLOPs per node update.
    #[arg(long, default_value_t = crate::perfmodel::NOMINAL_FLOPS)]
    pub flops: u64,
    /// Machine whose node bandwidth drives the predictions.
    #[arg(long, env = MACHINE_ENV)]
    pub machine: Option<String>,
    /// Extra machine registry file.
    #[arg(long)]
    pub machines: Option<PathBuf>,
    /// Bandwidth in GB/s for predictions, overriding any machine.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Print the machine balance table instead.
    #[arg(long)]
    pub balance: bool,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub steps: u64,
    #[arg(long, default_value = "d3q19")]
    pub stencil: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeomKind {
    Channel,
    PackedBed,
    Random,
}

#[derive(Debug, Args)]
pub struct GeometrySource {
    /// Generator for the benchmark geometry.
    #[arg(long, value_enum, default_value = "channel")]
    pub geometry: GeomKind,
    /// Geometry file; takes precedence over the generator.
    #[arg(long)]
    pub geometry_file: Option<PathBuf>,
    #[arg(long, default_value = "100x40x40", value_parser = parse_dims)]
    pub dims: [usize; 3],
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long = "scheme", default_value = "all")]
    pub schemes: Vec<String>,
    #[arg(long = "addressing", default_value = "all")]
    pub addressings: Vec<String>,
    #[command(flatten)]
    pub geometry: GeometrySource,
    #[arg(long, default_value_t = 20)]
    pub steps: u64,
    #[arg(long, default_value_t = 10)]
    pub warmup: u64,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 150)]
    pub chunk_length: usize,
    #[arg(long, default_value_t = 0.9)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.1875)]
    pub magic: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub force: f64,
    /// Measured copy bandwidth in allocate mode, GB/s (skips measurement).
    #[arg(long)]
    pub allocate_bw: Option<f64>,
    /// Measured copy bandwidth in streaming mode, GB/s (skips measurement).
    #[arg(long)]
    pub streaming_bw: Option<f64>,
    /// Stream buffer per region in MiB; defaults to 4x the last-level cache.
    #[arg(long)]
    pub stream_mib: Option<usize>,
    #[arg(long)]
    pub single_precision: bool,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct GeomArgs {
    #[arg(value_enum)]
    pub kind: GeomKind,
    #[arg(long, default_value = "500x100x100", value_parser = parse_dims)]
    pub dims: [usize; 3],
    #[arg(long, default_value_t = PACKED_BED_RADIUS)]
    pub radius: f64,
    #[arg(long, default_value_t = PACKED_BED_PITCH)]
    pub pitch: f64,
    #[arg(long, default_value_t = 0.2)]
    pub solid_fraction: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Save the geometry to this file.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StreamMode {
    Allocate,
    Streaming,
    Both,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Buffer per region in MiB; defaults to 4x the last-level cache.
    #[arg(long)]
    pub mib: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub mode: StreamMode,
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Parses `NXxNYxNZ`.
pub fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    if parts.len() != 3 {
        return Err(format!("expected NXxNYxNZ, got '{s}'"));
    }
    let mut d = [0usize; 3];
    for (v, p) in d.iter_mut().zip(parts) {
        *v = p
            .trim()
            .parse()
            .map_err(|_| format!("bad extent '{p}' in '{s}'"))?;
        if *v == 0 {
            return Err(format!("zero extent in '{s}'"));
        }
    }
    Ok(d)
}

fn select_schemes(names: &[String]) -> Result<Vec<SchemeId>, CliError> {
    let mut out = Vec::new();
    for n in names {
        if n.eq_ignore_ascii_case("all") {
            out.extend(SchemeId::ALL);
        } else {
            out.push(
                n.parse()
                    .map_err(|e: SchemeError| CliError::Usage(e.to_string()))?,
            );
        }
    }
    out.dedup();
    Ok(out)
}

fn select_families(names: &[String]) -> Result<Vec<ModelScheme>, CliError> {
    let mut out = Vec::new();
    for n in names {
        if n.eq_ignore_ascii_case("all") {
            out.extend(ModelScheme::ALL);
        } else {
            out.push(
                n.parse()
                    .map_err(|e: ModelError| CliError::Usage(e.to_string()))?,
            );
        }
    }
    out.dedup();
    Ok(out)
}

fn select_addressing(names: &[String]) -> Result<Vec<Addressing>, CliError> {
    let mut out = Vec::new();
    for n in names {
        if n.eq_ignore_ascii_case("all") {
            out.extend(Addressing::ALL);
        } else {
            out.push(
                n.parse()
                    .map_err(|e: SchemeError| CliError::Usage(e.to_string()))?,
            );
        }
    }
    out.dedup();
    Ok(out)
}

fn sink<'a>(
    path: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

/// One row of the `model` report.
#[derive(Debug, Clone, Serialize)]
pub struct ModelRow {
    pub scheme: String,
    pub addressing: String,
    pub pdf_elems: f64,
    pub idx_elems: f64,
    pub bytes_per_lup: f64,
    pub b_code: String,
    pub predicted_mlups_at_bw: Option<f64>,
}

fn model(a: &ModelArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let mut registry = MachineRegistry::bundled();
    if let Some(p) = &a.machines {
        registry.merge(MachineRegistry::load(p)?);
    }
    if a.balance {
        return balance_table(&registry, &a.out, out);
    }
    let stencil = make_stencil(&a.stencil).map_err(|e| CliError::Usage(e.to_string()))?;
    let families = select_families(&a.schemes)?;
    let addressing = select_addressing(&a.addressings)?;
    let bw = match (a.bandwidth, &a.machine) {
        (Some(b), _) if b > 0.0 => Some(b),
        (Some(b), _) => {
            return Err(CliError::Usage(format!(
                "bandwidth must be positive, got {b}"
            )))
        }
        (None, Some(name)) => {
            let m = registry.get(name)?;
            let bw = m
                .copy_bw(MemoryLevel::Node)
                .ok_or_else(|| ModelError::MissingBandwidth {
                    machine: m.name.clone(),
                    level: MemoryLevel::Node,
                })?;
            writeln!(err, "predictions at {} node bandwidth {bw} GB/s", m.name)?;
            Some(bw)
        }
        (None, None) => None,
    };
    let mut rows = Vec::new();
    for &ad in &addressing {
        for &f in &families {
            let t = traffic(f, ad, &stencil);
            let bytes = t.bytes_per_lup();
            rows.push(ModelRow {
                scheme: f.name().to_string(),
                addressing: ad.name().to_string(),
                pdf_elems: crate::perfmodel::ratio_to_f64(t.total_pdf_elements()),
                idx_elems: crate::perfmodel::ratio_to_f64(t.idx_elements()),
                bytes_per_lup: bytes,
                b_code: format!("{:.2}", code_balance_with(&t, a.flops)?),
                predicted_mlups_at_bw: bw.map(|b| predict_mlups(b, bytes)),
            });
        }
    }
    let mut w = sink(&a.out.output, out)?;
    match a.out.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &rows)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record([
                "scheme",
                "addressing",
                "pdf_elems",
                "idx_elems",
                "bytes_per_lup",
                "b_code",
                "predicted_mlups_at_bw",
            ])?;
            for r in &rows {
                c.write_record([
                    r.scheme.clone(),
                    r.addressing.clone(),
                    r.pdf_elems.to_string(),
                    r.idx_elems.to_string(),
                    r.bytes_per_lup.to_string(),
                    r.b_code.clone(),
                    r.predicted_mlups_at_bw
                        .map(|v| format!("{v:.2}"))
                        .unwrap_or_default(),
                ])?;
            }
            c.flush()?;
        }
    }
    w.flush()?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct BalanceRow {
    machine: String,
    peak_gflops: f64,
    copy_bw_node: Option<f64>,
    b_machine: Option<f64>,
    peak_check: &'static str,
}

fn balance_table(r: &MachineRegistry, o: &Output, out: &mut dyn Write) -> Result<i32, CliError> {
    let rows: Vec<BalanceRow> = r
        .machines()
        .iter()
        .map(|m| BalanceRow {
            machine: m.name.clone(),
            peak_gflops: m.peak_gflops,
            copy_bw_node: m.copy_bw_node,
            b_machine: machine_balance(m, MemoryLevel::Node).ok(),
            peak_check: match m.peak_check() {
                PeakCheck::Consistent => "ok",
                PeakCheck::TurboAdjusted => "turbo",
                PeakCheck::Inconsistent => "inconsistent",
            },
        })
        .collect();
    let mut w = sink(&o.output, out)?;
    match o.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &rows)?;
            writeln!(w)?;
        }
        Format::Csv => {
            writeln!(w, "machine,peak_gflops,copy_bw_node,b_machine,peak_check")?;
            for b in &rows {
                let opt = |v: Option<f64>, prec: usize| {
                    v.map(|v| format!("{v:.prec$}")).unwrap_or_default()
                };
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    b.machine,
                    b.peak_gflops,
                    opt(b.copy_bw_node, 1),
                    opt(b.b_machine, 3),
                    b.peak_check
                )?;
            }
        }
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let stencil = make_stencil(&a.stencil).map_err(|e| CliError::Usage(e.to_string()))?;
    let report = verify_suite_with(&stencil, a.seed, a.steps)?;
    writeln!(
        out,
        "seed {} steps {} fluid_count {} stencil {}",
        report.seed,
        report.steps,
        report.fluid_count,
        stencil.name()
    )?;
    for e in &report.entries {
        let status = if e.passed { "PASS" } else { "FAIL" };
        let kind = if e.bitwise { "bitwise" } else { "max_rel_dev" };
        write!(
            out,
            "{status} {:<11} {:<8} {kind} {:e}",
            e.scheme.name(),
            e.addressing.name(),
            e.max_deviation
        )?;
        if let Some(msg) = &e.error {
            write!(out, " ({msg})")?;
        }
        writeln!(out)?;
    }
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

fn build_geometry(src: &GeometrySource) -> Result<(GridGeometry, String), CliError> {
    if let Some(p) = &src.geometry_file {
        return Ok((load_geo_file(p)?, p.display().to_string()));
    }
    let [x, y, z] = src.dims;
    let dims = format!("{x}x{y}x{z}");
    Ok(match src.geometry {
        GeomKind::Channel => (gen_channel(src.dims)?, format!("channel-{dims}")),
        GeomKind::PackedBed => (
            gen_packed_bed(src.dims, PACKED_BED_RADIUS, PACKED_BED_PITCH)?,
            format!("packed-bed-{dims}"),
        ),
        GeomKind::Random => (
            GridGeometry::random(
                src.dims,
                0.2,
                42,
                [AxisPolicy::Periodic, AxisPolicy::Wall, AxisPolicy::Periodic],
            )?,
            format!("random-{dims}"),
        ),
    })
}

fn default_stream_bytes() -> usize {
    let llc = detect_llc_bytes().unwrap_or(32 << 20);
    (4 * llc) as usize
}

fn bench(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let schemes = select_schemes(&a.schemes)?;
    let addressing = select_addressing(&a.addressings)?;
    let workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::Usage("workers must be at least 1".into()));
    }
    let explicit = !a.schemes.iter().any(|s| s.eq_ignore_ascii_case("all"));
    if workers > 1 && explicit {
        if let Some(s) = schemes.iter().find(|s| !s.is_parallel()) {
            return Err(CliError::Usage(format!(
                "{s} is sequential; use --workers 1"
            )));
        }
    }
    let (geometry, name) = build_geometry(&a.geometry)?;
    let bandwidth = match (a.allocate_bw, a.streaming_bw) {
        (Some(al), Some(st)) => HostBandwidth {
            allocate_gbs: al,
            streaming_gbs: st,
        },
        _ => {
            let bytes = a.stream_mib.map_or_else(default_stream_bytes, |m| m << 20);
            writeln!(
                err,
                "measuring copy bandwidth with {} MiB buffers",
                bytes >> 20
            )?;
            let hb = HostBandwidth::measure(bytes, 5, workers)?;
            writeln!(
                err,
                "allocate {:.2} GB/s, streaming {:.2} GB/s",
                hb.allocate_gbs, hb.streaming_gbs
            )?;
            hb
        }
    };
    let cfg = BenchConfig {
        steps: a.steps,
        warmup_steps: a.warmup,
        repetitions: a.repetitions,
        workers,
        chunk_length: a.chunk_length,
        store_mode: StoreMode::Streaming,
        ..Default::default()
    };
    let g = [a.force, 0.0, 0.0];
    let mut results: Vec<BenchResult> = Vec::new();
    for &ad in &addressing {
        for &s in &schemes {
            if !s.supports(ad) {
                writeln!(
                    err,
                    "skip {s} {}: kernel not implemented; traffic model only",
                    ad.name()
                )?;
                continue;
            }
            if workers > 1 && !s.is_parallel() {
                writeln!(
                    err,
                    "skip {s} {}: sequential scheme with {workers} workers",
                    ad.name()
                )?;
                continue;
            }
            let r = if a.single_precision {
                let p = FlowParams::<f32>::from_tau(
                    a.tau as f32,
                    a.magic as f32,
                    g.map(|v| v as f32),
                    1.0,
                )?;
                run_bench(s, ad, &geometry, &name, p, &cfg, &bandwidth)?
            } else {
                run_bench(
                    s,
                    ad,
                    &geometry,
                    &name,
                    FlowParams::from_tau(a.tau, a.magic, g, 1.0)?,
                    &cfg,
                    &bandwidth,
                )?
            };
            if r.model_violated() {
                writeln!(err, "{s} {}: model violated, investigate timing", ad.name())?;
            }
            results.push(r);
        }
    }
    let mut w = sink(&a.out.output, out)?;
    match a.out.format {
        Format::Csv => write_csv(&results, &mut w)?,
        Format::Json => write_json(&results, &mut w)?,
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn geom(a: &GeomArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let g = match a.kind {
        GeomKind::Channel => gen_channel(a.dims)?,
        GeomKind::PackedBed => gen_packed_bed(a.dims, a.radius, a.pitch)?,
        GeomKind::Random => {
            if !(0.0..=1.0).contains(&a.solid_fraction) {
                return Err(CliError::Usage(format!(
                    "solid fraction {} outside [0, 1]",
                    a.solid_fraction
                )));
            }
            GridGeometry::random(
                a.dims,
                a.solid_fraction,
                a.seed,
                [AxisPolicy::Periodic, AxisPolicy::Wall, AxisPolicy::Periodic],
            )?
        }
    };
    writeln!(out, "fluid_count {}", g.fluid_count())?;
    writeln!(out, "cell_count {}", g.cell_count())?;
    if let Some(p) = &a.output {
        save_geo_file(&g, p)?;
        writeln!(out, "saved {}", p.display())?;
    }
    Ok(EXIT_OK)
}

fn stream(a: &StreamArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let bytes = a.mib.map_or_else(default_stream_bytes, |m| m << 20);
    let workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let modes: &[CopyMode] = match a.mode {
        StreamMode::Allocate => &[CopyMode::Allocate],
        StreamMode::Streaming => &[CopyMode::Streaming],
        StreamMode::Both => &[CopyMode::Allocate, CopyMode::Streaming],
    };
    writeln!(out, "mode,buffer_mib,workers,median_gbs,cv,fallback")?;
    for &mode in modes {
        let r = stream_copy(&StreamConfig {
            buffer_bytes: bytes,
            repetitions: a.repetitions,
            mode,
            workers,
            llc_bytes: None,
        })?;
        writeln!(
            out,
            "{},{},{},{:.3},{:.4},{}",
            r.mode,
            r.buffer_bytes >> 20,
            r.workers,
            r.bandwidth_gbs,
            r.cv(),
            r.fallback
        )?;
    }
    Ok(EXIT_OK)
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let result = match &cli.command {
        Command::Model(a) => model(a, out, err),
        Command::Verify(a) => verify(a, out),
        Command::Bench(a) => bench(a, out, err),
        Command::Geom(a) => geom(a, out),
        Command::Stream(a) => stream(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("lbmlab").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn dims_parse() {
        assert_eq!(parse_dims("500x100x100").unwrap(), [500, 100, 100]);
        assert!(parse_dims("5x5").is_err());
        assert!(parse_dims("5x0x5").is_err());
    }

    #[test]
    fn model_indirect_column() {
        let (code, out, _) = call(&["model", "--stencil", "d3q19", "--addressing", "indirect"]);
        assert_eq!(code, 0);
        let bytes: Vec<&str> = out
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(4).unwrap())
            .collect();
        assert_eq!(bytes, ["1056", "528", "376", "520", "484", "340", "344"]);
    }

    #[test]
    fn model_is_deterministic_and_json_matches() {
        let a = call(&["model", "--bandwidth", "40.6"]);
        assert_eq!(a, call(&["model", "--bandwidth", "40.6"]));
        let (_, json, _) = call(&["model", "--bandwidth", "40.6", "--format", "json"]);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let csv_rows: Vec<Vec<String>> =
            a.1.lines()
                .skip(1)
                .map(|l| l.split(',').map(str::to_string).collect())
                .collect();
        assert_eq!(v.as_array().unwrap().len(), csv_rows.len());
        for (row, rec) in csv_rows.iter().zip(v.as_array().unwrap()) {
            assert_eq!(rec["scheme"], row[0].as_str());
            assert_eq!(rec["bytes_per_lup"].as_f64().unwrap().to_string(), row[4]);
            assert_eq!(rec["b_code"], row[5].as_str());
        }
    }

    #[test]
    fn machine_selection() {
        let (code, out, err) = call(&[
            "model",
            "--machine",
            "westmere",
            "--scheme",
            "aap",
            "--addressing",
            "indirect",
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(out.lines().nth(1).unwrap().ends_with(",119.41"));
        assert_eq!(call(&["model", "--machine", "nowhere"]).0, 1);
        let (code, out, _) = call(&["model", "--balance"]);
        assert_eq!(code, 0);
        assert!(out.contains("Westmere,128.16,40.6,0.317,ok"));
    }

    #[test]
    fn usage_errors() {
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["model", "--no-such-flag"]).0, 2);
        assert_eq!(call(&["model", "--scheme", "XYZ"]).0, 2);
        assert_eq!(call(&["bench", "--scheme", "CG", "--workers", "2"]).0, 2);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn verify_passes() {
        let (code, out, _) = call(&["verify", "--seed", "42", "--steps", "3"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 17);
    }

    #[test]
    fn geom_channel_count() {
        let (code, out, _) = call(&["geom", "channel", "--dims", "50x10x10"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("fluid_count 5000\n"));
    }

    #[test]
    fn bench_skips_unimplemented_pairs() {
        let (code, out, err) = call(&[
            "bench",
            "--scheme",
            "SWAP_PUSH",
            "--scheme",
            "AAP",
            "--addressing",
            "all",
            "--dims",
            "16x8x8",
            "--steps",
            "2",
            "--warmup",
            "1",
            "--workers",
            "1",
            "--allocate-bw",
            "10",
            "--streaming-bw",
            "10",
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(err.contains("skip SWAP_PUSH indirect"));
        assert_eq!(out.lines().count(), 4);
    }
}
