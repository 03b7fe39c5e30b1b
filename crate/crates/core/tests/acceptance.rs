//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runs sequentially so the timing criterion sees an idle
//! machine.

use std::time::{Duration, Instant};

use lbmlab::bench::{
    oracle_geometry, run_bench, verify_suite, BenchConfig, HostBandwidth, MODEL_SLACK,
};
use lbmlab::geometry::AxisPolicy::{Periodic, Wall};
use lbmlab::perfmodel::{
    code_balance, is_memory_bound, machine_balance, table8, MachineRegistry, MemoryLevel,
};
use lbmlab::schemes::{implemented_pairs, StoreMode};
use lbmlab::{
    create_stepper, create_stepper_with, gen_channel, Addressing, FlowParams, GridGeometry,
    ModelScheme, Params, SchemeId, Stencil, StencilKind, StepperOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

const FULL_BYTES: [f64; 7] = [912.0, 456.0, 304.0, 448.0, 448.0, 304.0, 304.0];
const INDIRECT_BYTES: [f64; 7] = [1056.0, 528.0, 376.0, 520.0, 484.0, 340.0, 344.0];
const FULL_BCODE: [&str; 7] = ["4.56", "2.28", "1.52", "2.24", "2.24", "1.52", "1.52"];
const INDIRECT_BCODE: [&str; 7] = ["5.28", "2.64", "1.88", "2.60", "2.42", "1.70", "1.72"];

fn d3q19() -> Stencil {
    Stencil::new(StencilKind::D3Q19)
}

fn table_reproduction() -> Outcome {
    let rows = table8(&d3q19());
    let mut bad = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let (bytes, bcode) = if i < 7 {
            (FULL_BYTES[i], FULL_BCODE[i])
        } else {
            (INDIRECT_BYTES[i - 7], INDIRECT_BCODE[i - 7])
        };
        if r.bytes_per_lup != bytes || format!("{:.2}", r.b_code) != bcode {
            bad.push(format!(
                "{} {}: {} {:.2}",
                r.scheme,
                r.addressing.name(),
                r.bytes_per_lup,
                r.b_code
            ));
        }
    }
    // The same numbers through the command line.
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = lbmlab::cli::run(
        ["lbmlab", "model", "--stencil", "d3q19"],
        &mut out,
        &mut err,
    );
    let text = String::from_utf8_lossy(&out);
    let cli_bytes: Vec<String> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap_or("").to_string())
        .collect();
    let want: Vec<String> = FULL_BYTES
        .iter()
        .chain(&INDIRECT_BYTES)
        .map(|b| b.to_string())
        .collect();
    if code != 0 || cli_bytes != want {
        bad.push(format!("cli output {cli_bytes:?}"));
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            "14 cells exact".into()
        } else {
            bad.join("; ")
        },
    )
}

fn machine_balances() -> Outcome {
    let reg = MachineRegistry::bundled();
    let published = [
        ("Harpertown", 0.09),
        ("Westmere", 0.32),
        ("SandyBridge", 0.33),
        ("MagnyCours", 0.33),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, want) in published {
        let b = reg
            .get(name)
            .and_then(|m| machine_balance(m, MemoryLevel::Node));
        match b {
            Ok(b) => {
                let hit = (b - want).abs() <= 0.005;
                ok &= hit;
                parts.push(format!(
                    "{name} {b:.4} vs {want}{}",
                    if hit { "" } else { " MISMATCH" }
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    let s = d3q19();
    let bound = reg.machines().iter().all(|m| {
        let bm = machine_balance(m, MemoryLevel::Node).unwrap_or(f64::INFINITY);
        Addressing::ALL.iter().all(|&a| {
            ModelScheme::ALL.iter().all(|&sc| {
                is_memory_bound(code_balance(&lbmlab::perfmodel::traffic(sc, a, &s)), bm)
            })
        })
    });
    ok &= bound;
    parts.push(format!("all memory bound: {bound}"));
    outcome(ok, parts.join("; "))
}

fn scheme_equivalence() -> Outcome {
    match verify_suite(42, 10) {
        Ok(r) => {
            let bitwise = r.entries.iter().filter(|e| e.bitwise).count();
            let failed: Vec<String> = r
                .entries
                .iter()
                .filter(|e| !e.passed)
                .map(|e| format!("{} {} {:e}", e.scheme, e.addressing.name(), e.max_deviation))
                .collect();
            outcome(
                r.passed(),
                format!(
                    "{} pairs, {bitwise} bitwise, {} fluid nodes{}",
                    r.entries.len(),
                    r.fluid_count,
                    if failed.is_empty() {
                        String::new()
                    } else {
                        format!("; failed {}", failed.join(", "))
                    }
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn conservation() -> Outcome {
    let s = d3q19();
    let g = GridGeometry::all_fluid([8, 8, 8], [Wall; 3]).unwrap();
    let p = Params::channel_default().with_body_force([0.0; 3]);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let init: Vec<f64> = (0..g.fluid_count() * s.q())
        .map(|i| s.weight_as::<f64>(i % s.q()) * rng.gen_range(0.5..1.5))
        .collect();
    let m0: f64 = init.iter().sum();
    let mut worst = (0.0f64, String::new());
    for (id, a) in implemented_pairs() {
        let mut st = create_stepper(id, a, &g, &s, p).unwrap();
        st.load_natural(&init).unwrap();
        st.run(1000);
        let drift = ((st.total_mass() - m0) / m0).abs();
        if drift >= worst.0 {
            worst = (drift, format!("{id} {}", a.name()));
        }
    }
    outcome(
        worst.0 <= 1e-10,
        format!("max relative drift {:e} ({})", worst.0, worst.1),
    )
}

fn poiseuille() -> Outcome {
    let s = d3q19();
    let dims = [16, 32, 4];
    let g = GridGeometry::all_fluid(dims, [Periodic, Wall, Periodic]).unwrap();
    let gx = 1e-6;
    let p = FlowParams::from_tau(0.9, 3.0 / 16.0, [gx, 0.0, 0.0], 1.0).unwrap();
    let nu = p.viscosity();
    let h = dims[1] as f64;
    let analytic: Vec<f64> = (0..dims[1])
        .map(|j| {
            let y = j as f64 + 0.5 - h / 2.0;
            gx / (2.0 * nu) * (h * h / 4.0 - y * y)
        })
        .collect();
    let umax = analytic.iter().cloned().fold(0.0, f64::max);
    let mut parts = Vec::new();
    let mut ok = true;
    let runs = [
        (SchemeId::Ts, Addressing::Direct),
        (SchemeId::Aap, Addressing::Indirect),
        (SchemeId::Et, Addressing::Direct),
    ];
    for (id, a) in runs {
        let mut st = create_stepper(id, a, &g, &s, p).unwrap();
        let profile = |st: &lbmlab::Stepper| -> Vec<f64> {
            let (_, u) = st.macroscopic_fields().unwrap();
            // Every column carries the same profile; take x = z = 0.
            (0..dims[1]).map(|j| u[j * dims[0]][0]).collect()
        };
        let mut prev = profile(&st);
        let mut converged = false;
        let mut steps = 0u64;
        while steps < 200_000 {
            st.run(99);
            let before = profile(&st);
            st.step();
            steps += 100;
            let now = profile(&st);
            let change = now
                .iter()
                .zip(&before)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / umax;
            prev = now;
            if change < 1e-12 {
                converged = true;
                break;
            }
        }
        let err = prev
            .iter()
            .zip(&analytic)
            .map(|(u, w)| (u - w).abs())
            .fold(0.0, f64::max)
            / umax;
        let hit = converged && err <= 1e-6;
        ok &= hit;
        parts.push(format!(
            "{id} {}: {steps} steps, rel Linf {err:.2e}",
            a.name()
        ));
    }
    outcome(ok, parts.join("; "))
}

fn mem_available() -> Option<u64> {
    let text = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = text.lines().find(|l| l.starts_with("MemAvailable:"))?;
    line.split_whitespace()
        .nth(1)?
        .parse::<u64>()
        .ok()
        .map(|kib| kib * 1024)
}

fn model_bound() -> Outcome {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let llc = lbmlab::bench::detect_llc_bytes().unwrap_or(32 << 20);
    let buffer = (4 * llc) as usize;
    let bw = match HostBandwidth::measure(buffer, 5, workers) {
        Ok(b) => b,
        Err(e) => return outcome(false, format!("stream: {e}")),
    };
    // Largest channel from the 500x100x100 reference whose two-grid state
    // uses at most 40% of the available memory.
    let budget = mem_available().unwrap_or(4 << 30) as f64 * 0.4;
    let mut dims = [500usize, 100, 100];
    while (dims.iter().product::<usize>() as f64) * 420.0 > budget && dims[0] > 25 {
        dims[0] /= 2;
    }
    let g = gen_channel(dims).unwrap();
    let cfg = BenchConfig {
        steps: 4,
        warmup_steps: 1,
        repetitions: 3,
        workers,
        store_mode: StoreMode::Streaming,
        ..Default::default()
    };
    let schemes = [
        SchemeId::OsPush,
        SchemeId::OsPull,
        SchemeId::OsntPull1S,
        SchemeId::OsntPull2S,
        SchemeId::Aap,
        SchemeId::Et,
    ];
    let mut ok = true;
    let mut parts = vec![format!(
        "channel {}x{}x{}, {workers} workers, copy bw {:.2}/{:.2} GB/s",
        dims[0], dims[1], dims[2], bw.allocate_gbs, bw.streaming_gbs
    )];
    for a in Addressing::ALL {
        for id in schemes {
            match run_bench(id, a, &g, "channel", Params::channel_default(), &cfg, &bw) {
                Ok(r) => {
                    let hit = r.model_fraction <= MODEL_SLACK;
                    ok &= hit;
                    parts.push(format!(
                        "{id} {} {:.1}/{:.1} MLUPs ({:.2})",
                        a.name(),
                        r.mlups,
                        r.predicted_mlups,
                        r.model_fraction
                    ));
                }
                Err(e) => {
                    ok = false;
                    parts.push(format!("{id} {}: {e}", a.name()));
                }
            }
        }
    }
    outcome(ok, parts.join("; "))
}

fn traffic_ordering() -> Outcome {
    let rows = table8(&d3q19());
    let mut ok = true;
    for a in Addressing::ALL {
        let b = |m: ModelScheme| {
            rows.iter()
                .find(|r| r.scheme == m && r.addressing == a)
                .unwrap()
                .bytes_per_lup
        };
        use ModelScheme::*;
        ok &= b(Ts) > b(Os)
            && b(Os) > b(Cg)
            && b(Cg) >= b(Swap)
            && b(Swap) > b(Osnt)
            && b(Osnt) >= b(Et)
            && b(Et) >= b(Aap);
    }
    outcome(
        ok,
        "TS > OS > CG >= SWAP > OSNT >= ET >= AAP, both addressing modes",
    )
}

fn chunk_invariance() -> Outcome {
    let s = d3q19();
    let g = oracle_geometry(42);
    let p = FlowParams::from_tau(0.8, 3.0 / 16.0, [1e-4, 0.0, 0.0], 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let init: Vec<f64> = (0..g.fluid_count() * s.q())
        .map(|i| s.weight_as::<f64>(i % s.q()) * rng.gen_range(0.9..1.1))
        .collect();
    let mut ok = true;
    for id in [SchemeId::OsntPull1S, SchemeId::OsntPull2S] {
        for a in Addressing::ALL {
            let runs: Vec<Vec<f64>> = [1, 150, g.fluid_count()]
                .into_iter()
                .map(|chunk_length| {
                    let o = StepperOptions {
                        chunk_length,
                        ..Default::default()
                    };
                    let mut st = create_stepper_with(id, a, &g, &s, p, o).unwrap();
                    st.load_natural(&init).unwrap();
                    st.run(10);
                    st.extract_natural()
                })
                .collect();
            ok &= runs[0] == runs[1] && runs[0] == runs[2];
        }
    }
    outcome(
        ok,
        format!(
            "chunk lengths 1, 150, {} bitwise identical",
            g.fluid_count()
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        (
            "traffic table reproduction",
            Duration::from_secs(1),
            table_reproduction,
        ),
        ("machine balance", Duration::from_secs(1), machine_balances),
        (
            "scheme equivalence oracle",
            Duration::from_secs(5),
            scheme_equivalence,
        ),
        ("mass conservation", Duration::from_secs(10), conservation),
        ("Poiseuille profile", Duration::from_secs(60), poiseuille),
        ("model upper bound", Duration::from_secs(300), model_bound),
        ("traffic ordering", Duration::from_secs(1), traffic_ordering),
        (
            "non-temporal chunk invariance",
            Duration::from_secs(5),
            chunk_invariance,
        ),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let took = t.elapsed();
        let in_time = took <= limit;
        let passed = o.passed && in_time;
        failures += usize::from(!passed);
        println!(
            "criterion {} {} {name}: {} [{:.2} s{}]",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            if in_time {
                String::new()
            } else {
                format!(" > {} s limit", limit.as_secs())
            }
        );
    }
    println!("{} of 8 criteria passed", 8 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
