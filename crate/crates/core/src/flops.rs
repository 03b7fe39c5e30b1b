//! Static FLOP audit of one node update.
//!
//! [`Counted`] is an `f64` wrapper that bumps thread-local counters on every
//! arithmetic operation. Running the shared collision routine once with it
//! yields the exact operation count of a node update, which the performance
//! model can use instead of its nominal value.

use std::cell::Cell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

use crate::collision::{equilibrium, FlowParams, Trt};
use crate::real::Real;
use crate::stencil::Stencil;

thread_local! {
    static COUNTS: Cell<FlopCounts> = const { Cell::new(FlopCounts { add: 0, sub: 0, mul: 0, div: 0 }) };
}

/// Operation tallies. Negation is a sign flip and not counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlopCounts {
    pub add: u64,
    pub sub: u64,
    pub mul: u64,
    pub div: u64,
}

impl FlopCounts {
    pub fn total(&self) -> u64 {
        self.add + self.sub + self.mul + self.div
    }
}

pub fn reset_counts() {
    COUNTS.with(|c| c.set(FlopCounts::default()));
}

pub fn counts() -> FlopCounts {
    COUNTS.with(|c| c.get())
}

fn bump(f: impl FnOnce(&mut FlopCounts)) {
    COUNTS.with(|c| {
        let mut v = c.get();
        f(&mut v);
        c.set(v);
    });
}

/// Operation-counting scalar.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct Counted(pub f64);

impl fmt::Display for Counted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

macro_rules! counted_op {
    ($tr:ident, $method:ident, $field:ident, $op:tt) => {
        impl $tr for Counted {
            type Output = Counted;
            #[inline]
            #[allow(clippy::suspicious_arithmetic_impl)]
            fn $method(self, rhs: Counted) -> Counted {
                bump(|c| c.$field += 1);
                Counted(self.0 $op rhs.0)
            }
        }
    };
}

counted_op!(Add, add, add, +);
counted_op!(Sub, sub, sub, -);
counted_op!(Mul, mul, mul, *);
counted_op!(Div, div, div, /);

impl Rem for Counted {
    type Output = Counted;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn rem(self, rhs: Counted) -> Counted {
        bump(|c| c.div += 1);
        Counted(self.0 % rhs.0)
    }
}

impl Neg for Counted {
    type Output = Counted;
    #[inline]
    fn neg(self) -> Counted {
        Counted(-self.0)
    }
}

impl Zero for Counted {
    fn zero() -> Self {
        Counted(0.0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
}

impl One for Counted {
    fn one() -> Self {
        Counted(1.0)
    }
}

impl Num for Counted {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Counted)
    }
}

impl ToPrimitive for Counted {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.0)
    }
}

impl FromPrimitive for Counted {
    fn from_i64(n: i64) -> Option<Self> {
        Some(Counted(n as f64))
    }
    fn from_u64(n: u64) -> Option<Self> {
        Some(Counted(n as f64))
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Counted(n))
    }
}

impl NumCast for Counted {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        n.to_f64().map(Counted)
    }
}

impl Real for Counted {}

/// FLOPs of one fluid-node update (moments, equilibrium, TRT relaxation and
/// body force) as executed by the shared collision routine.
pub fn flops_per_update(s: &Stencil) -> u64 {
    let p = FlowParams::<Counted>::channel_default();
    let trt = Trt::new(s, &p);
    let f: Vec<Counted> = (0..s.q())
        .map(|i| {
            let v = equilibrium(s, 1.0, [0.01, 0.0, 0.0], i);
            Counted(v)
        })
        .collect();
    let mut out = vec![Counted(0.0); s.q()];
    reset_counts();
    trt.collide(&f, &mut out);
    let n = counts().total();
    reset_counts();
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::{make_stencil, StencilKind};

    #[test]
    fn counter_tracks_each_operation() {
        reset_counts();
        let a = Counted(2.0);
        let b = Counted(3.0);
        let r = (a + b) * (a - b) / b;
        let _ = -r;
        assert_eq!(
            counts(),
            FlopCounts {
                add: 1,
                sub: 1,
                mul: 1,
                div: 1
            }
        );
        assert!((r.0 + 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn d3q19_budget() {
        let s = make_stencil("D3Q19").unwrap();
        let n = flops_per_update(&s);
        // prepare 60, nine pair updates 150, rest 3
        assert_eq!(n, 213);
        assert!((180..=220).contains(&n));
    }

    #[test]
    fn d2q9_is_cheaper() {
        let d2 = flops_per_update(&Stencil::new(StencilKind::D2Q9));
        let d3 = flops_per_update(&Stencil::new(StencilKind::D3Q19));
        assert!(d2 < d3);
    }

    #[test]
    fn counted_collision_matches_f64() {
        let s = make_stencil("D3Q19").unwrap();
        let pf = FlowParams::<f64>::channel_default();
        let pc = FlowParams::<Counted>::channel_default();
        let f: Vec<f64> = (0..19)
            .map(|i| equilibrium(&s, 1.02, [0.01, -0.02, 0.003], i) * 1.01)
            .collect();
        let fc: Vec<Counted> = f.iter().map(|&v| Counted(v)).collect();
        let mut a = vec![0.0; 19];
        let mut b = vec![Counted(0.0); 19];
        Trt::new(&s, &pf).collide(&f, &mut a);
        Trt::new(&s, &pc).collide(&fc, &mut b);
        for i in 0..19 {
            assert_eq!(a[i].to_bits(), b[i].0.to_bits());
        }
    }
}
