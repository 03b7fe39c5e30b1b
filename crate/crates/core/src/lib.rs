//! Lattice Boltzmann propagation-step laboratory.
//!
//! Seven propagation schemes (two-step, one-step push/pull, one-step with
//! non-temporal stores, compressed grid, swap, AA pattern, esoteric twist)
//! over direct and indirect addressing, all driven by one shared TRT
//! collision routine, plus a byte-traffic performance model and a
//! benchmark harness.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod collision;
pub mod flops;
pub mod geometry;
pub mod perfmodel;
pub mod real;
pub mod schemes;
pub mod stencil;

pub use collision::{equilibrium, moments, CollisionError, FlowParams, Trt};
pub use geometry::{
    build_sparse, gen_channel, gen_packed_bed, load_geo, save_geo, AxisPolicy, GeometryError,
    GridGeometry, SparseRepresentation,
};
pub use perfmodel::{MachineRegistry, MachineSpec, ModelScheme, TrafficSpec};
pub use real::Real;
pub use schemes::{
    create_stepper, create_stepper_with, Addressing, SchemeError, SchemeId, SchemeState,
    StepperOptions,
};
pub use stencil::{make_stencil, Stencil, StencilError, StencilKind};

/// Double-precision flow parameters.
pub type Params = FlowParams<f64>;
/// Single-precision flow parameters.
pub type Params32 = FlowParams<f32>;
/// Double-precision scheme state.
pub type Stepper = SchemeState<f64>;
/// Single-precision scheme state.
pub type Stepper32 = SchemeState<f32>;
