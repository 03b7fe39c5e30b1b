//! Propagation schemes behind one stepper interface.
//!
//! Every scheme stores PDFs direction-major ([`PdfField`]) and funnels all
//! node updates through the same [`Trt`] routine, so a physical state
//! extracted with [`SchemeState::extract_natural`] is bit-identical across
//! schemes and addressing modes.
//!
//! Supported kernels: all ten scheme variants with direct addressing; all
//! but the compressed grid and the two swap variants with indirect
//! addressing.

mod aa;
mod cg;
mod et;
mod field;
mod links;
mod os;
mod padded;
mod swap;
mod ts;

use std::fmt;
use std::str::FromStr;

use rayon::ThreadPool;
use thiserror::Error;

pub use et::DirectionBase;
pub use field::PdfField;

use crate::collision::{moments, CollisionError, FlowParams, Trt};
use crate::geometry::{build_sparse, check_compatible, GeometryError, GridGeometry};
use crate::perfmodel::ModelScheme;
use crate::real::Real;
use crate::stencil::Stencil;
use links::{DenseLinks, Links, SparseLinks};

pub(crate) const MAX_Q: usize = 19;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("{scheme} with {addressing} addressing: kernel not implemented; traffic model only")]
    Unsupported {
        scheme: SchemeId,
        addressing: Addressing,
    },
    #[error("{scheme} is sequential and cannot run with {workers} workers")]
    SequentialOnly { scheme: SchemeId, workers: usize },
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("chunk length must be at least 1")]
    ZeroChunk,
    #[error("stencil {0} has more than {MAX_Q} directions")]
    StencilTooLarge(&'static str),
    #[error("snapshot holds {got} values, expected {expected}")]
    SnapshotLength { got: usize, expected: usize },
    #[error("unknown scheme: {0}")]
    UnknownScheme(String),
    #[error("unknown addressing mode: {0}")]
    UnknownAddressing(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Collision(#[from] CollisionError),
}

/// The ten kernel variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    Ts,
    OsPush,
    OsPull,
    OsntPull1S,
    OsntPull2S,
    Cg,
    SwapPush,
    SwapPull,
    Aap,
    Et,
}

impl SchemeId {
    pub const ALL: [SchemeId; 10] = [
        SchemeId::Ts,
        SchemeId::OsPush,
        SchemeId::OsPull,
        SchemeId::OsntPull1S,
        SchemeId::OsntPull2S,
        SchemeId::Cg,
        SchemeId::SwapPush,
        SchemeId::SwapPull,
        SchemeId::Aap,
        SchemeId::Et,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Ts => "TS",
            SchemeId::OsPush => "OS_PUSH",
            SchemeId::OsPull => "OS_PULL",
            SchemeId::OsntPull1S => "OSNT_PULL_1S",
            SchemeId::OsntPull2S => "OSNT_PULL_2S",
            SchemeId::Cg => "CG",
            SchemeId::SwapPush => "SWAP_PUSH",
            SchemeId::SwapPull => "SWAP_PULL",
            SchemeId::Aap => "AAP",
            SchemeId::Et => "ET",
        }
    }

    /// Traffic-model family of this variant.
    pub fn model_family(self) -> ModelScheme {
        match self {
            SchemeId::Ts => ModelScheme::Ts,
            SchemeId::OsPush | SchemeId::OsPull => ModelScheme::Os,
            SchemeId::OsntPull1S | SchemeId::OsntPull2S => ModelScheme::Osnt,
            SchemeId::Cg => ModelScheme::Cg,
            SchemeId::SwapPush | SchemeId::SwapPull => ModelScheme::Swap,
            SchemeId::Aap => ModelScheme::Aap,
            SchemeId::Et => ModelScheme::Et,
        }
    }

    /// Whether node updates within a sweep may run concurrently.
    pub fn is_parallel(self) -> bool {
        !matches!(self, SchemeId::Cg | SchemeId::SwapPush | SchemeId::SwapPull)
    }

    pub fn supports(self, addressing: Addressing) -> bool {
        addressing == Addressing::Direct
            || !matches!(self, SchemeId::Cg | SchemeId::SwapPush | SchemeId::SwapPull)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name() == norm)
            .ok_or_else(|| SchemeError::UnknownScheme(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Addressing {
    /// Full-array addressing over the Cartesian box.
    Direct,
    /// Fluid nodes only, neighbors through an index table.
    Indirect,
}

impl Addressing {
    pub const ALL: [Addressing; 2] = [Addressing::Direct, Addressing::Indirect];

    pub fn name(self) -> &'static str {
        match self {
            Addressing::Direct => "direct",
            Addressing::Indirect => "indirect",
        }
    }
}

impl fmt::Display for Addressing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Addressing {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" | "full" | "full_array" | "full-array" => Ok(Addressing::Direct),
            "indirect" => Ok(Addressing::Indirect),
            _ => Err(SchemeError::UnknownAddressing(s.to_string())),
        }
    }
}

/// How stored slots map to physical PDFs at a step boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutPhase {
    /// `slot(k, n) = f_k(n)`.
    Natural,
    /// `slot(k, n)` holds post-collision values that still have to be
    /// pulled: `f_k(n) = slot(k, n - c_k)`.
    PostCollision,
    /// `slot(opp k, n) = f_k(n)` (swap push), or the AA-pattern state left by
    /// an even step.
    Opposed,
    /// Compressed grid, values at offset 0.
    ShiftedEven,
    /// Compressed grid, values at offset `+s`.
    ShiftedOdd,
    /// Esoteric twist; see [`SchemeState::direction_base`].
    Twisted,
    /// Swap push with the wrapping links not yet exchanged.
    SwapPartial,
}

/// Store instruction used by the non-temporal-store kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreMode {
    /// Cache-bypassing stores where the platform has them.
    Streaming,
    Plain,
}

/// When the swap-push fix-up of wrapping links runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapFixup {
    AfterSweep,
    /// At the start of the next step; snapshots resolve the pending links.
    Deferred,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepperOptions {
    pub chunk_length: usize,
    pub store_mode: StoreMode,
    pub swap_fixup: SwapFixup,
    pub workers: usize,
}

impl Default for StepperOptions {
    fn default() -> Self {
        StepperOptions {
            chunk_length: 150,
            store_mode: StoreMode::Streaming,
            swap_fixup: SwapFixup::AfterSweep,
            workers: 1,
        }
    }
}

/// Read-only kernel context.
pub(crate) struct Kern<'a, T> {
    trt: &'a Trt<T>,
    opp: &'a [usize],
    q: usize,
    pool: Option<&'a ThreadPool>,
}

/// Natural state indexed by logical node, direction-major.
pub(crate) enum Nat<T> {
    Dense {
        data: Vec<T>,
        len: usize,
    },
    /// Same PDFs at every node.
    Uniform(Vec<T>),
}

impl<T: Real> Nat<T> {
    #[inline]
    fn get(&self, k: usize, n: usize) -> T {
        match self {
            Nat::Dense { data, len } => data[k * len + n],
            Nat::Uniform(f) => f[k],
        }
    }
}

#[derive(Debug, Clone)]
enum Topology {
    Dense(DenseLinks),
    Sparse(SparseLinks),
}

#[derive(Debug, Clone)]
enum Aux<T> {
    None,
    Cg(cg::CgAux<T>),
    Swap(swap::SwapAux),
    EtDense(et::DenseEt, DirectionBase),
    EtSparse(et::SparseEt, DirectionBase),
}

/// A propagation scheme bound to a geometry, stencil and parameter set.
pub struct SchemeState<T: Real> {
    scheme: SchemeId,
    addressing: Addressing,
    stencil: Stencil,
    params: FlowParams<T>,
    trt: Trt<T>,
    field: PdfField<T>,
    topo: Topology,
    aux: Aux<T>,
    /// Logical index of each fluid node in canonical order.
    fluid: Vec<usize>,
    time_step: u64,
    phase: LayoutPhase,
    /// Source grid of the two-grid schemes.
    cur: usize,
    options: StepperOptions,
    pool: Option<ThreadPool>,
}

/// Builds a stepper initialized to equilibrium at `(rho0, u = 0)`.
pub fn create_stepper<T: Real>(
    scheme: SchemeId,
    addressing: Addressing,
    geometry: &GridGeometry,
    stencil: &Stencil,
    params: FlowParams<T>,
) -> Result<SchemeState<T>, SchemeError> {
    create_stepper_with(
        scheme,
        addressing,
        geometry,
        stencil,
        params,
        StepperOptions::default(),
    )
}

pub fn create_stepper_with<T: Real>(
    scheme: SchemeId,
    addressing: Addressing,
    geometry: &GridGeometry,
    stencil: &Stencil,
    params: FlowParams<T>,
    options: StepperOptions,
) -> Result<SchemeState<T>, SchemeError> {
    if !scheme.supports(addressing) {
        return Err(SchemeError::Unsupported { scheme, addressing });
    }
    if stencil.q() > MAX_Q {
        return Err(SchemeError::StencilTooLarge(stencil.name()));
    }
    if options.chunk_length == 0 {
        return Err(SchemeError::ZeroChunk);
    }
    check_workers(scheme, options.workers)?;
    check_compatible(geometry, stencil)?;
    let pool = make_pool(options.workers)?;
    let q = stencil.q();
    let (topo, fluid) = match addressing {
        Addressing::Direct => {
            let fluid = (0..geometry.cell_count())
                .filter(|&c| geometry.mask()[c])
                .collect();
            (Topology::Dense(DenseLinks::new(geometry, stencil)), fluid)
        }
        Addressing::Indirect => {
            let sparse = build_sparse(geometry, stencil)?;
            let fluid = (0..sparse.fluid_count()).collect();
            (Topology::Sparse(SparseLinks { sparse }), fluid)
        }
    };
    let len = match &topo {
        Topology::Dense(l) => l.len(),
        Topology::Sparse(l) => l.len(),
    };
    let aux = match (&topo, scheme) {
        (Topology::Dense(l), SchemeId::Cg) => Aux::Cg(cg::CgAux::new(l, stencil)),
        (Topology::Dense(l), SchemeId::SwapPush | SchemeId::SwapPull) => {
            Aux::Swap(swap::SwapAux::new(l, q))
        }
        (Topology::Dense(l), SchemeId::Et) => {
            Aux::EtDense(et::DenseEt::new(l, stencil), DirectionBase::identity(q))
        }
        (Topology::Sparse(l), SchemeId::Et) => Aux::EtSparse(
            et::SparseEt::new(&l.sparse, stencil),
            DirectionBase::identity(q),
        ),
        _ => Aux::None,
    };
    let (grids, slots) = match &aux {
        Aux::Cg(a) => (1, a.slots()),
        Aux::EtDense(e, _) => (1, e.slots()),
        Aux::EtSparse(e, _) => (1, e.slots()),
        _ => match scheme {
            SchemeId::Ts
            | SchemeId::OsPush
            | SchemeId::OsPull
            | SchemeId::OsntPull1S
            | SchemeId::OsntPull2S => (2, len),
            _ => (1, len),
        },
    };
    let field = PdfField::new(grids, q, slots, pool.as_ref());
    let mut state = SchemeState {
        scheme,
        addressing,
        stencil: stencil.clone(),
        trt: Trt::new(stencil, &params),
        params,
        field,
        topo,
        aux,
        fluid,
        time_step: 0,
        phase: LayoutPhase::Natural,
        cur: 0,
        options,
        pool,
    };
    let rho0 = state.params.rho0();
    state.load(Nat::Uniform(
        (0..q).map(|k| stencil.weight_as::<T>(k) * rho0).collect(),
    ));
    Ok(state)
}

fn check_workers(scheme: SchemeId, workers: usize) -> Result<(), SchemeError> {
    if workers == 0 {
        return Err(SchemeError::NoWorkers);
    }
    if workers > 1 && !scheme.is_parallel() {
        return Err(SchemeError::SequentialOnly { scheme, workers });
    }
    Ok(())
}

fn make_pool(workers: usize) -> Result<Option<ThreadPool>, SchemeError> {
    if workers <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map(Some)
        .map_err(|e| SchemeError::ThreadPool(e.to_string()))
}

macro_rules! with_links {
    ($topo:expr, $l:ident => $body:expr) => {
        match $topo {
            Topology::Dense($l) => $body,
            Topology::Sparse($l) => $body,
        }
    };
}

impl<T: Real> SchemeState<T> {
    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn addressing(&self) -> Addressing {
        self.addressing
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn params(&self) -> &FlowParams<T> {
        &self.params
    }

    pub fn field(&self) -> &PdfField<T> {
        &self.field
    }

    pub fn time_step(&self) -> u64 {
        self.time_step
    }

    pub fn layout_phase(&self) -> LayoutPhase {
        self.phase
    }

    pub fn fluid_count(&self) -> usize {
        self.fluid.len()
    }

    pub fn chunk_length(&self) -> usize {
        self.options.chunk_length
    }

    pub fn options(&self) -> StepperOptions {
        self.options
    }

    pub fn workers(&self) -> usize {
        self.options.workers
    }

    /// Esoteric-twist storage handle table.
    pub fn direction_base(&self) -> Option<&DirectionBase> {
        match &self.aux {
            Aux::EtDense(_, d) | Aux::EtSparse(_, d) => Some(d),
            _ => None,
        }
    }

    /// Compressed-grid offset of the stored values (0 or 1).
    pub fn shift_parity(&self) -> Option<usize> {
        matches!(self.aux, Aux::Cg(_)).then_some((self.time_step % 2) as usize)
    }

    /// Number of links crossing periodic faces handled by the swap fix-up.
    pub fn swap_fixup_links(&self) -> Option<usize> {
        match &self.aux {
            Aux::Swap(a) => Some(a.wrap_link_count()),
            _ => None,
        }
    }

    /// Index elements loaded per node update by the esoteric-twist kernel
    /// under indirect addressing.
    pub fn et_index_width(&self) -> Option<usize> {
        match &self.aux {
            Aux::EtSparse(e, _) => Some(e.idx_per_node()),
            _ => None,
        }
    }

    pub fn set_workers(&mut self, workers: usize) -> Result<(), SchemeError> {
        check_workers(self.scheme, workers)?;
        self.pool = make_pool(workers)?;
        self.options.workers = workers;
        Ok(())
    }

    pub fn set_chunk_length(&mut self, chunk_length: usize) -> Result<(), SchemeError> {
        if chunk_length == 0 {
            return Err(SchemeError::ZeroChunk);
        }
        self.options.chunk_length = chunk_length;
        Ok(())
    }

    pub fn set_store_mode(&mut self, mode: StoreMode) {
        self.options.store_mode = mode;
    }

    pub fn set_swap_fixup(&mut self, fixup: SwapFixup) {
        self.options.swap_fixup = fixup;
    }

    /// Advances the state by one time step (collision and streaming).
    pub fn step(&mut self) {
        let kern = Kern {
            trt: &self.trt,
            opp: self.stencil.opposite_table(),
            q: self.stencil.q(),
            pool: self.pool.as_ref(),
        };
        let raw = self.field.raw();
        let cur = self.cur;
        match self.scheme {
            SchemeId::Ts => with_links!(&self.topo, l => ts::step(&kern, l, raw)),
            SchemeId::OsPush => {
                with_links!(&self.topo, l => os::push_step(&kern, l, raw, cur));
                self.cur = 1 - cur;
            }
            SchemeId::OsPull => {
                with_links!(&self.topo, l => os::pull_step(&kern, l, raw, cur));
                self.cur = 1 - cur;
            }
            SchemeId::OsntPull1S | SchemeId::OsntPull2S => {
                let paired = self.scheme == SchemeId::OsntPull2S;
                let (chunk, mode) = (self.options.chunk_length, self.options.store_mode);
                with_links!(&self.topo, l => os::nt_step(&kern, l, raw, cur, chunk, paired, mode));
                self.cur = 1 - cur;
            }
            SchemeId::Aap => {
                if self.time_step.is_multiple_of(2) {
                    with_links!(&self.topo, l => aa::even_step(&kern, l, raw));
                    self.phase = LayoutPhase::Opposed;
                } else {
                    with_links!(&self.topo, l => aa::odd_step(&kern, l, raw));
                    self.phase = LayoutPhase::Natural;
                }
            }
            SchemeId::Cg => {
                let (Topology::Dense(l), Aux::Cg(a)) = (&self.topo, &mut self.aux) else {
                    unreachable!("compressed grid requires direct addressing")
                };
                let o = (self.time_step % 2) as usize;
                cg::step(&kern, l, raw, a, o);
                self.phase = if o == 0 {
                    LayoutPhase::ShiftedOdd
                } else {
                    LayoutPhase::ShiftedEven
                };
            }
            SchemeId::SwapPush => {
                let (Topology::Dense(l), Aux::Swap(a)) = (&self.topo, &self.aux) else {
                    unreachable!("swap requires direct addressing")
                };
                if self.phase == LayoutPhase::SwapPartial {
                    swap::fixup(raw, kern.opp, a);
                }
                swap::push_sweep(&kern, l, raw, a);
                self.phase = match self.options.swap_fixup {
                    SwapFixup::AfterSweep => {
                        swap::fixup(raw, kern.opp, a);
                        LayoutPhase::Opposed
                    }
                    SwapFixup::Deferred => LayoutPhase::SwapPartial,
                };
            }
            SchemeId::SwapPull => {
                let (Topology::Dense(l), Aux::Swap(a)) = (&self.topo, &self.aux) else {
                    unreachable!("swap requires direct addressing")
                };
                swap::pull_step(&kern, l, raw, a);
            }
            SchemeId::Et => match (&self.topo, &mut self.aux) {
                (Topology::Dense(l), Aux::EtDense(e, d)) => {
                    et::step(&kern, &et::DenseEtView { et: e, links: l }, raw, d);
                    d.exchange(&self.stencil);
                }
                (Topology::Sparse(_), Aux::EtSparse(e, d)) => {
                    et::step(&kern, e, raw, d);
                    d.exchange(&self.stencil);
                }
                _ => unreachable!("esoteric twist state without topology"),
            },
        }
        self.time_step += 1;
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Completes a deferred swap fix-up so the stored layout is canonical.
    pub fn finish_pending(&mut self) {
        if self.phase == LayoutPhase::SwapPartial {
            if let Aux::Swap(a) = &self.aux {
                swap::fixup(self.field.raw(), self.stencil.opposite_table(), a);
            }
            self.phase = LayoutPhase::Opposed;
        }
    }

    fn natural_value(&self, n: usize, k: usize) -> T {
        let opp = self.stencil.opposite_table();
        let f = &self.field;
        match self.scheme {
            SchemeId::Ts => ts::natural(f, n, k),
            SchemeId::OsPush => f.get(self.cur, k, n),
            SchemeId::OsPull | SchemeId::OsntPull1S | SchemeId::OsntPull2S => {
                with_links!(&self.topo, l => os::pull_natural(f, self.cur, l, opp, n, k, |m| m))
            }
            SchemeId::Aap => {
                let opposed = self.phase == LayoutPhase::Opposed;
                with_links!(&self.topo, l => aa::natural(f, l, opp, opposed, n, k))
            }
            SchemeId::Cg => match (&self.topo, &self.aux) {
                (Topology::Dense(l), Aux::Cg(a)) => {
                    cg::natural(f, l, opp, a, (self.time_step % 2) as usize, n, k)
                }
                _ => unreachable!(),
            },
            SchemeId::SwapPush => match &self.topo {
                Topology::Dense(l) => {
                    swap::push_natural(f, l, opp, self.phase == LayoutPhase::SwapPartial, n, k)
                }
                _ => unreachable!(),
            },
            SchemeId::SwapPull => {
                with_links!(&self.topo, l => os::pull_natural(f, 0, l, opp, n, k, |m| m))
            }
            SchemeId::Et => match (&self.topo, &self.aux) {
                (Topology::Dense(l), Aux::EtDense(e, d)) => et::natural(
                    f,
                    &et::DenseEtView { et: e, links: l },
                    &self.stencil,
                    d,
                    n,
                    k,
                ),
                (Topology::Sparse(_), Aux::EtSparse(e, d)) => {
                    et::natural(f, e, &self.stencil, d, n, k)
                }
                _ => unreachable!(),
            },
        }
    }

    /// Physical PDFs at the current time step, node-major: fluid nodes in
    /// x-fastest order, directions in stencil order.
    pub fn extract_natural(&self) -> Vec<T> {
        let q = self.stencil.q();
        let mut out = Vec::with_capacity(self.fluid.len() * q);
        for &n in &self.fluid {
            for k in 0..q {
                out.push(self.natural_value(n, k));
            }
        }
        out
    }

    /// Replaces the physical state with `snapshot` (layout as produced by
    /// [`SchemeState::extract_natural`]) and resets the step counter.
    pub fn load_natural(&mut self, snapshot: &[T]) -> Result<(), SchemeError> {
        let q = self.stencil.q();
        let expected = self.fluid.len() * q;
        if snapshot.len() != expected {
            return Err(SchemeError::SnapshotLength {
                got: snapshot.len(),
                expected,
            });
        }
        let len = with_links!(&self.topo, l => l.len());
        let mut data = vec![T::zero(); q * len];
        for (i, &n) in self.fluid.iter().enumerate() {
            for k in 0..q {
                data[k * len + n] = snapshot[i * q + k];
            }
        }
        self.load(Nat::Dense { data, len });
        Ok(())
    }

    fn load(&mut self, nat: Nat<T>) {
        let q = self.stencil.q();
        let opp = self.stencil.opposite_table().to_vec();
        self.time_step = 0;
        self.cur = 0;
        let f = &mut self.field;
        let fluid = &self.fluid;
        self.phase = match self.scheme {
            SchemeId::Ts | SchemeId::OsPush => {
                ts::load(f, &nat, fluid);
                LayoutPhase::Natural
            }
            SchemeId::OsPull | SchemeId::OsntPull1S | SchemeId::OsntPull2S | SchemeId::SwapPull => {
                with_links!(&self.topo, l => os::pull_load(f, 0, l, &opp, &nat, fluid, |m| m));
                LayoutPhase::PostCollision
            }
            SchemeId::Aap => {
                aa::load(f, &nat, fluid);
                LayoutPhase::Natural
            }
            SchemeId::Cg => match (&self.topo, &self.aux) {
                (Topology::Dense(l), Aux::Cg(a)) => {
                    cg::load(f, l, &opp, a, &nat, fluid);
                    LayoutPhase::ShiftedEven
                }
                _ => unreachable!(),
            },
            SchemeId::SwapPush => {
                swap::push_load(f, &opp, &nat, fluid);
                LayoutPhase::Opposed
            }
            SchemeId::Et => {
                match (&self.topo, &mut self.aux) {
                    (Topology::Dense(l), Aux::EtDense(e, d)) => {
                        *d = DirectionBase::identity(q);
                        et::load(
                            f,
                            &et::DenseEtView { et: e, links: l },
                            &self.stencil,
                            d,
                            &nat,
                            fluid,
                        );
                    }
                    (Topology::Sparse(_), Aux::EtSparse(e, d)) => {
                        *d = DirectionBase::identity(q);
                        et::load(f, e, &self.stencil, d, &nat, fluid);
                    }
                    _ => unreachable!(),
                }
                LayoutPhase::Twisted
            }
        };
    }

    /// Density and velocity (with the half-force correction) of every fluid
    /// node, in canonical order.
    pub fn macroscopic_fields(&self) -> Result<(Vec<T>, Vec<[T; 3]>), SchemeError> {
        let q = self.stencil.q();
        let data = self.extract_natural();
        let g = self.params.body_force();
        let mut rho = Vec::with_capacity(self.fluid.len());
        let mut u = Vec::with_capacity(self.fluid.len());
        for row in data.chunks_exact(q) {
            let (r, v) = moments(&self.stencil, row, Some(g))?;
            rho.push(r);
            u.push(v);
        }
        Ok((rho, u))
    }

    /// Sum of all PDFs.
    pub fn total_mass(&self) -> T {
        self.extract_natural()
            .into_iter()
            .fold(T::zero(), |a, b| a + b)
    }
}

impl<T: Real> fmt::Debug for SchemeState<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchemeState")
            .field("scheme", &self.scheme)
            .field("addressing", &self.addressing)
            .field("stencil", &self.stencil.name())
            .field("fluid_count", &self.fluid.len())
            .field("time_step", &self.time_step)
            .field("phase", &self.phase)
            .field("options", &self.options)
            .finish()
    }
}

/// Every implemented `(scheme, addressing)` pair.
pub fn implemented_pairs() -> Vec<(SchemeId, Addressing)> {
    Addressing::ALL
        .into_iter()
        .flat_map(|a| {
            SchemeId::ALL
                .into_iter()
                .filter(move |s| s.supports(a))
                .map(move |s| (s, a))
        })
        .collect()
}
