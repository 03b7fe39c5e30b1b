//! Every implemented scheme against the two-step direct reference.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BenchError;
use crate::collision::FlowParams;
use crate::geometry::{AxisPolicy, GridGeometry};
use crate::schemes::{create_stepper, implemented_pairs, Addressing, SchemeId};
use crate::stencil::{make_stencil, Stencil};

/// Relative L-infinity deviation accepted when results are not bitwise equal.
pub const VERIFY_TOLERANCE: f64 = 1e-13;

const DIMS: [usize; 3] = [16, 8, 8];
const SOLID_FRACTION: f64 = 0.2;

/// Seeded 16x8x8 box with scattered solid cells, periodic in x and z.
pub fn oracle_geometry(seed: u64) -> GridGeometry {
    let policy = [AxisPolicy::Periodic, AxisPolicy::Wall, AxisPolicy::Periodic];
    let mut g = GridGeometry::random(DIMS, SOLID_FRACTION, seed, policy).expect("valid dimensions");
    // Keep at least one fluid cell whatever the seed.
    g.set_fluid(DIMS[0] / 2, DIMS[1] / 2, DIMS[2] / 2, true);
    g
}

#[derive(Debug, Clone)]
pub struct VerifyEntry {
    pub scheme: SchemeId,
    pub addressing: Addressing,
    /// Largest relative deviation over all steps; infinite if the run failed.
    pub max_deviation: f64,
    pub bitwise: bool,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub seed: u64,
    pub steps: u64,
    pub fluid_count: usize,
    pub entries: Vec<VerifyEntry>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

fn params() -> FlowParams<f64> {
    FlowParams::from_tau(0.8, 3.0 / 16.0, [1e-4, -2e-5, 3e-5], 1.0).expect("valid parameters")
}

fn initial_state(fluid: usize, s: &Stencil, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut out = Vec::with_capacity(fluid * s.q());
    for _ in 0..fluid {
        for k in 0..s.q() {
            out.push(s.weight_as::<f64>(k) * rng.gen_range(0.9..1.1));
        }
    }
    out
}

fn deviation(got: &[f64], want: &[f64]) -> f64 {
    let scale = want
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    got.iter().zip(want).fold(0.0f64, |m, (a, b)| {
        let d = (a - b).abs();
        if d.is_nan() {
            f64::INFINITY
        } else {
            m.max(d)
        }
    }) / scale
}

pub fn verify_suite(seed: u64, steps: u64) -> Result<VerifyReport, BenchError> {
    verify_suite_with(&make_stencil("D3Q19").expect("known stencil"), seed, steps)
}

/// Runs the schemes with `stencil` and compares them to a reference built
/// from a fresh copy of the same stencil kind.
pub fn verify_suite_with(
    stencil: &Stencil,
    seed: u64,
    steps: u64,
) -> Result<VerifyReport, BenchError> {
    let g = oracle_geometry(seed);
    let reference_stencil = Stencil::new(stencil.kind());
    let init = initial_state(g.fluid_count(), &reference_stencil, seed);
    let mut oracle = create_stepper(
        SchemeId::Ts,
        Addressing::Direct,
        &g,
        &reference_stencil,
        params(),
    )?;
    oracle.load_natural(&init)?;
    let mut want = Vec::with_capacity(steps as usize);
    for _ in 0..steps {
        oracle.step();
        want.push(oracle.extract_natural());
    }
    let entries = implemented_pairs()
        .into_iter()
        .map(|(scheme, addressing)| {
            let run = catch_unwind(AssertUnwindSafe(|| -> Result<(f64, bool), String> {
                let mut st = create_stepper(scheme, addressing, &g, stencil, params())
                    .map_err(|e| e.to_string())?;
                st.load_natural(&init).map_err(|e| e.to_string())?;
                let (mut worst, mut bitwise) = (0.0f64, true);
                for w in &want {
                    st.step();
                    let got = st.extract_natural();
                    bitwise &= got == *w;
                    worst = worst.max(deviation(&got, w));
                }
                Ok((worst, bitwise))
            }));
            let (max_deviation, bitwise, error) = match run {
                Ok(Ok((d, b))) => (d, b, None),
                Ok(Err(e)) => (f64::INFINITY, false, Some(e)),
                Err(_) => (f64::INFINITY, false, Some("kernel panicked".to_string())),
            };
            VerifyEntry {
                scheme,
                addressing,
                max_deviation,
                bitwise,
                passed: error.is_none() && (bitwise || max_deviation <= VERIFY_TOLERANCE),
                error,
            }
        })
        .collect();
    Ok(VerifyReport {
        seed,
        steps,
        fluid_count: g.fluid_count(),
        entries,
    })
}
