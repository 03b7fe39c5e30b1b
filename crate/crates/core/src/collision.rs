//! Node-local physics: equilibrium, macroscopic moments and the
//! two-relaxation-time (TRT) collision operator with a linear body force.
//!
//! Every propagation scheme funnels its node updates through the same
//! [`Trt`] instance. The arithmetic is split into a per-node prelude
//! ([`Trt::prepare`]) and per-pair updates ([`Trt::pair_post`]) so that kernels
//! which emit one direction at a time still evaluate exactly the same
//! operations, in the same order, as a full [`Trt::collide`].

use thiserror::Error;

use crate::real::Real;
use crate::stencil::Stencil;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CollisionError {
    #[error("invalid flow parameters: {0}")]
    InvalidParams(String),
    #[error("vacuum node: density is zero")]
    VacuumNode,
}

/// Relaxation rates, body force and initial density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams<T> {
    lambda_even: T,
    lambda_odd: T,
    magic: T,
    body_force: [T; 3],
    rho0: T,
}

impl<T: Real> FlowParams<T> {
    /// `lambda_even = 1/tau` in `(0, 2)`, magic parameter `magic > 0`; the odd
    /// rate follows from `magic = (1/le - 1/2)(1/lo - 1/2)`.
    pub fn new(
        lambda_even: T,
        magic: T,
        body_force: [T; 3],
        rho0: T,
    ) -> Result<Self, CollisionError> {
        let (zero, one, two) = (T::zero(), T::one(), T::lit(2.0));
        if !(lambda_even > zero && lambda_even < two) {
            return Err(CollisionError::InvalidParams(format!(
                "lambda_even must lie in (0, 2), got {lambda_even}"
            )));
        }
        if !(magic > zero) {
            return Err(CollisionError::InvalidParams(format!(
                "magic parameter must be positive, got {magic}"
            )));
        }
        if !(rho0 > zero) {
            return Err(CollisionError::InvalidParams(format!(
                "rho0 must be positive, got {rho0}"
            )));
        }
        let half = T::lit(0.5);
        let lambda_odd = one / (magic / (one / lambda_even - half) + half);
        Ok(FlowParams {
            lambda_even,
            lambda_odd,
            magic,
            body_force,
            rho0,
        })
    }

    pub fn from_tau(tau: T, magic: T, body_force: [T; 3], rho0: T) -> Result<Self, CollisionError> {
        Self::new(T::one() / tau, magic, body_force, rho0)
    }

    /// Channel-flow defaults: tau = 0.9, magic = 3/16, g = (1e-5, 0, 0), rho0 = 1.
    pub fn channel_default() -> Self {
        Self::from_tau(
            T::lit(0.9),
            T::lit(3.0 / 16.0),
            [T::lit(1e-5), T::zero(), T::zero()],
            T::one(),
        )
        .expect("defaults are valid")
    }

    /// Single-relaxation-time special case: both rates equal `lambda`.
    pub fn bgk(lambda: T, body_force: [T; 3], rho0: T) -> Result<Self, CollisionError> {
        let half = T::lit(0.5);
        let a = T::one() / lambda - half;
        Self::new(lambda, a * a, body_force, rho0)
    }

    /// Zero relaxation, zero force: collision is the identity and a step is
    /// pure streaming. Bypasses the usual validation on purpose.
    pub fn free_streaming(rho0: T) -> Self {
        FlowParams {
            lambda_even: T::zero(),
            lambda_odd: T::zero(),
            magic: T::zero(),
            body_force: [T::zero(); 3],
            rho0,
        }
    }

    pub fn with_body_force(mut self, g: [T; 3]) -> Self {
        self.body_force = g;
        self
    }

    pub fn lambda_even(&self) -> T {
        self.lambda_even
    }

    pub fn lambda_odd(&self) -> T {
        self.lambda_odd
    }

    pub fn magic(&self) -> T {
        self.magic
    }

    pub fn body_force(&self) -> [T; 3] {
        self.body_force
    }

    pub fn rho0(&self) -> T {
        self.rho0
    }

    /// Kinematic viscosity `(1/lambda_even - 1/2) / 3`.
    pub fn viscosity(&self) -> T {
        (T::one() / self.lambda_even - T::lit(0.5)) / T::lit(3.0)
    }
}

/// Second-order equilibrium `w_i rho (1 + 3 c.u + 4.5 (c.u)^2 - 1.5 |u|^2)`.
pub fn equilibrium<T: Real>(s: &Stencil, rho: T, u: [T; 3], i: usize) -> T {
    let c = s.velocity(i);
    let mut cu = T::zero();
    let mut usq = T::zero();
    for a in 0..3 {
        cu = cu + T::lit(c[a] as f64) * u[a];
        usq = usq + u[a] * u[a];
    }
    s.weight_as::<T>(i)
        * rho
        * (T::one() + T::lit(3.0) * cu + T::lit(4.5) * cu * cu - T::lit(1.5) * usq)
}

/// Density and velocity of a node. With `force = Some(g)` the velocity
/// includes the half-force correction `g / 2`.
pub fn moments<T: Real>(
    s: &Stencil,
    pdfs: &[T],
    force: Option<[T; 3]>,
) -> Result<(T, [T; 3]), CollisionError> {
    let mut rho = T::zero();
    let mut j = [T::zero(); 3];
    for (i, &f) in pdfs.iter().enumerate().take(s.q()) {
        rho = rho + f;
        let c = s.velocity(i);
        for a in 0..3 {
            if c[a] > 0 {
                j[a] = j[a] + f;
            } else if c[a] < 0 {
                j[a] = j[a] - f;
            }
        }
    }
    if rho == T::zero() {
        return Err(CollisionError::VacuumNode);
    }
    let mut u = j.map(|v| v / rho);
    if let Some(g) = force {
        for a in 0..3 {
            u[a] = u[a] + g[a] * T::lit(0.5);
        }
    }
    Ok((rho, u))
}

const MAX_PAIRS: usize = 9;
const MAX_CLASSES: usize = 2;

#[derive(Debug, Clone)]
struct PairCoef<T> {
    pos: usize,
    neg: usize,
    class: usize,
    /// Non-zero velocity components of `pos` as (axis, positive?).
    terms: Vec<(usize, bool)>,
    /// `3 w (c.g)`; multiplied by the node density.
    force: T,
}

/// Per-node quantities shared by all pair updates.
#[derive(Debug, Clone, Copy)]
pub struct NodeMoments<T> {
    pub rho: T,
    pub u: [T; 3],
    c1: [T; MAX_CLASSES],
    c2: [T; MAX_CLASSES],
    c3: [T; MAX_CLASSES],
    feq0: T,
}

impl<T: Real> Default for NodeMoments<T> {
    fn default() -> Self {
        let z = T::zero();
        NodeMoments {
            rho: z,
            u: [z; 3],
            c1: [z; MAX_CLASSES],
            c2: [z; MAX_CLASSES],
            c3: [z; MAX_CLASSES],
            feq0: z,
        }
    }
}

/// Precomputed TRT collision kernel for one stencil and parameter set.
#[derive(Debug, Clone)]
pub struct Trt<T> {
    q: usize,
    dim: usize,
    pairs: Vec<PairCoef<T>>,
    two_w: [T; MAX_CLASSES],
    nine_w: [T; MAX_CLASSES],
    six_w: [T; MAX_CLASSES],
    w0: T,
    lambda_even: T,
    half_le: T,
    half_lo: T,
    one_and_half: T,
    /// Signed pair contributions to each momentum component.
    j_terms: [Vec<(usize, bool)>; 3],
}

impl<T: Real> Trt<T> {
    pub fn new(s: &Stencil, p: &FlowParams<T>) -> Self {
        let dirs = s.pairs();
        assert!(
            dirs.len() <= MAX_PAIRS,
            "stencil has too many direction pairs"
        );
        let mut class_weights = Vec::new();
        let mut pairs = Vec::with_capacity(dirs.len());
        let g = p.body_force();
        for d in &dirs {
            let w = s.weight(d.pos);
            let class = match class_weights.iter().position(|&cw| cw == w) {
                Some(c) => c,
                None => {
                    class_weights.push(w);
                    class_weights.len() - 1
                }
            };
            assert!(class < MAX_CLASSES, "stencil has too many weight classes");
            let c = s.velocity(d.pos);
            let terms = (0..3)
                .filter(|&a| c[a] != 0)
                .map(|a| (a, c[a] > 0))
                .collect();
            let cg = (0..3).fold(T::zero(), |acc, a| acc + T::lit(c[a] as f64) * g[a]);
            pairs.push(PairCoef {
                pos: d.pos,
                neg: d.neg,
                class,
                terms,
                force: T::lit(3.0) * s.weight_as::<T>(d.pos) * cg,
            });
        }
        let mut two_w = [T::zero(); MAX_CLASSES];
        let mut nine_w = [T::zero(); MAX_CLASSES];
        let mut six_w = [T::zero(); MAX_CLASSES];
        for (c, w) in class_weights.iter().enumerate() {
            let w = T::from_i64(*w.numer()).unwrap() / T::from_i64(*w.denom()).unwrap();
            two_w[c] = T::lit(2.0) * w;
            nine_w[c] = T::lit(9.0) * w;
            six_w[c] = T::lit(6.0) * w;
        }
        let j_terms = std::array::from_fn(|a| {
            pairs
                .iter()
                .enumerate()
                .filter(|(_, pc)| s.velocity(pc.pos)[a] != 0)
                .map(|(i, pc)| (i, s.velocity(pc.pos)[a] > 0))
                .collect()
        });
        let half = T::lit(0.5);
        Trt {
            q: s.q(),
            dim: s.dim(),
            pairs,
            two_w,
            nine_w,
            six_w,
            w0: s.weight_as(0),
            lambda_even: p.lambda_even(),
            half_le: p.lambda_even() * half,
            half_lo: p.lambda_odd() * half,
            one_and_half: T::lit(1.5),
            j_terms,
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Direction indices `(pos, neg)` of pair `p`.
    #[inline]
    pub fn pair_dirs(&self, p: usize) -> (usize, usize) {
        (self.pairs[p].pos, self.pairs[p].neg)
    }

    /// Density, velocity and equilibrium coefficients of a node.
    #[inline]
    pub fn prepare(&self, f: &[T]) -> NodeMoments<T> {
        let mut rho = f[0];
        let mut d = [T::zero(); MAX_PAIRS];
        for (p, pc) in self.pairs.iter().enumerate() {
            let a = f[pc.pos];
            let b = f[pc.neg];
            rho = rho + (a + b);
            d[p] = a - b;
        }
        let mut u = [T::zero(); 3];
        let inv = T::one() / rho;
        for (a, terms) in self.j_terms.iter().enumerate().take(self.dim) {
            let mut j = T::zero();
            for (n, &(p, plus)) in terms.iter().enumerate() {
                j = match (n, plus) {
                    (0, true) => d[p],
                    (0, false) => -d[p],
                    (_, true) => j + d[p],
                    (_, false) => j - d[p],
                };
            }
            u[a] = j * inv;
        }
        let mut usq = u[0] * u[0];
        for ua in u.iter().take(self.dim).skip(1) {
            usq = usq + *ua * *ua;
        }
        let base = T::one() - self.one_and_half * usq;
        let mut m = NodeMoments {
            rho,
            u,
            ..Default::default()
        };
        for c in 0..MAX_CLASSES {
            m.c1[c] = (self.two_w[c] * rho) * base;
            m.c2[c] = self.nine_w[c] * rho;
            m.c3[c] = self.six_w[c] * rho;
        }
        m.feq0 = (self.w0 * rho) * base;
        m
    }

    /// Post-collision values of pair `p` given its pre-collision values
    /// `(a, b)` for `(pos, neg)`.
    #[inline]
    pub fn pair_post(&self, p: usize, a: T, b: T, m: &NodeMoments<T>) -> (T, T) {
        let pc = &self.pairs[p];
        let s = a + b;
        let d = a - b;
        let mut cu = T::zero();
        for (n, &(axis, plus)) in pc.terms.iter().enumerate() {
            cu = match (n, plus) {
                (0, true) => m.u[axis],
                (0, false) => -m.u[axis],
                (_, true) => cu + m.u[axis],
                (_, false) => cu - m.u[axis],
            };
        }
        let even_eq = m.c1[pc.class] + m.c2[pc.class] * (cu * cu);
        let odd_eq = m.c3[pc.class] * cu;
        let even = (s - even_eq) * self.half_le;
        let odd = (d - odd_eq) * self.half_lo - pc.force * m.rho;
        (a - even - odd, b - even + odd)
    }

    #[inline]
    pub fn rest_post(&self, f0: T, m: &NodeMoments<T>) -> T {
        f0 - self.lambda_even * (f0 - m.feq0)
    }

    /// Full collision of one node: `out[i]` receives the post-collision value
    /// of direction `i`.
    #[inline]
    pub fn collide(&self, f: &[T], out: &mut [T]) {
        let m = self.prepare(f);
        out[0] = self.rest_post(f[0], &m);
        for (p, pc) in self.pairs.iter().enumerate() {
            let (x, y) = self.pair_post(p, f[pc.pos], f[pc.neg], &m);
            out[pc.pos] = x;
            out[pc.neg] = y;
        }
    }
}
