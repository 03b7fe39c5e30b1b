//! Discrete velocity sets (DdQq) and direction algebra.
//!
//! Enumeration order is fixed so that serialized states are portable between
//! schemes and addressing modes: the rest particle first, then the axis
//! directions as `+x, -x, +y, -y, +z, -z`, then the diagonals sorted
//! lexicographically by their `(cx, cy, cz)` components.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StencilError {
    #[error("unsupported stencil: {0}")]
    Unsupported(String),
    #[error("direction index {index} out of range for q = {q}")]
    OutOfRange { index: usize, q: usize },
}

/// The two supported velocity sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StencilKind {
    D2Q9,
    D3Q19,
}

impl StencilKind {
    pub fn name(self) -> &'static str {
        match self {
            StencilKind::D2Q9 => "D2Q9",
            StencilKind::D3Q19 => "D3Q19",
        }
    }
}

impl fmt::Display for StencilKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StencilKind {
    type Err = StencilError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "D2Q9" => Ok(StencilKind::D2Q9),
            "D3Q19" => Ok(StencilKind::D3Q19),
            _ => Err(StencilError::Unsupported(s.to_string())),
        }
    }
}

/// One opposing direction pair `(pos, neg)` with `pos < neg`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirPair {
    pub pos: usize,
    pub neg: usize,
}

/// A discrete velocity model.
///
/// Velocities are stored as 3-vectors; two-dimensional stencils have a zero
/// z component everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stencil {
    kind: StencilKind,
    velocities: Vec<[i32; 3]>,
    weights: Vec<Ratio<i64>>,
    opposite: Vec<usize>,
}

/// Builds the canonical stencil for `name` (`"D3Q19"` or `"D2Q9"`, case
/// insensitive).
pub fn make_stencil(name: &str) -> Result<Stencil, StencilError> {
    Ok(Stencil::new(name.parse()?))
}

impl Stencil {
    pub fn new(kind: StencilKind) -> Self {
        let dim = match kind {
            StencilKind::D2Q9 => 2,
            StencilKind::D3Q19 => 3,
        };
        let mut velocities = vec![[0i32; 3]];
        for axis in 0..dim {
            for sign in [1, -1] {
                let mut c = [0; 3];
                c[axis] = sign;
                velocities.push(c);
            }
        }
        // Diagonals: exactly two non-zero components.
        let mut diagonals = Vec::new();
        let range = |a: usize| if a < dim { -1..=1 } else { 0..=0 };
        for cx in range(0) {
            for cy in range(1) {
                for cz in range(2) {
                    let c = [cx, cy, cz];
                    if c.iter().filter(|v| **v != 0).count() == 2 {
                        diagonals.push(c);
                    }
                }
            }
        }
        diagonals.sort();
        velocities.extend(diagonals);

        let (rest, axis, diag) = match kind {
            StencilKind::D2Q9 => (Ratio::new(4, 9), Ratio::new(1, 9), Ratio::new(1, 36)),
            StencilKind::D3Q19 => (Ratio::new(1, 3), Ratio::new(1, 18), Ratio::new(1, 36)),
        };
        let weights = velocities
            .iter()
            .map(|c| match c.iter().filter(|v| **v != 0).count() {
                0 => rest,
                1 => axis,
                _ => diag,
            })
            .collect();
        let opposite = velocities
            .iter()
            .map(|c| {
                let neg = [-c[0], -c[1], -c[2]];
                velocities.iter().position(|v| *v == neg).unwrap()
            })
            .collect();
        Stencil {
            kind,
            velocities,
            weights,
            opposite,
        }
    }

    pub fn kind(&self) -> StencilKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Spatial dimension `d`.
    pub fn dim(&self) -> usize {
        match self.kind {
            StencilKind::D2Q9 => 2,
            StencilKind::D3Q19 => 3,
        }
    }

    /// Number of discrete velocities `q`.
    pub fn q(&self) -> usize {
        self.velocities.len()
    }

    pub fn velocities(&self) -> &[[i32; 3]] {
        &self.velocities
    }

    #[inline]
    pub fn velocity(&self, i: usize) -> [i32; 3] {
        self.velocities[i]
    }

    pub fn weights(&self) -> &[Ratio<i64>] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize) -> Ratio<i64> {
        self.weights[i]
    }

    /// Weight converted to the scalar type `T`.
    pub fn weight_as<T: Real>(&self, i: usize) -> T {
        let w = self.weights[i];
        T::from_i64(*w.numer()).unwrap() / T::from_i64(*w.denom()).unwrap()
    }

    /// Opposite direction, panicking on an out-of-range index. Hot paths use
    /// this; [`Stencil::opposite_dir`] is the checked variant.
    #[inline]
    pub fn opposite(&self, i: usize) -> usize {
        self.opposite[i]
    }

    pub fn opposite_table(&self) -> &[usize] {
        &self.opposite
    }

    pub fn opposite_dir(&self, i: usize) -> Result<usize, StencilError> {
        self.opposite
            .get(i)
            .copied()
            .ok_or(StencilError::OutOfRange {
                index: i,
                q: self.q(),
            })
    }

    /// Index of the direction with velocity `c`, if any.
    pub fn direction_of(&self, c: [i32; 3]) -> Option<usize> {
        self.velocities.iter().position(|v| *v == c)
    }

    /// Opposing pairs `(i, opposite(i))` with `i < opposite(i)`, covering every
    /// non-rest direction exactly once for a well-formed table.
    pub fn pairs(&self) -> Vec<DirPair> {
        (1..self.q())
            .filter(|&i| i < self.opposite[i])
            .map(|i| DirPair {
                pos: i,
                neg: self.opposite[i],
            })
            .collect()
    }

    /// Overwrites two entries of the opposite table. Only meant for fault
    /// injection in verification runs; the result violates the stencil
    /// invariants.
    #[doc(hidden)]
    pub fn corrupt_opposite(&mut self, a: usize, b: usize) {
        self.opposite.swap(a, b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    fn check_invariants(s: &Stencil) {
        assert_eq!(s.velocity(0), [0, 0, 0]);
        assert_eq!(s.opposite(0), 0);
        let mut wsum = Ratio::<i64>::zero();
        let mut first = [Ratio::<i64>::zero(); 3];
        for i in 0..s.q() {
            let j = s.opposite(i);
            assert_eq!(s.opposite(j), i);
            let (ci, cj) = (s.velocity(i), s.velocity(j));
            assert_eq!([-ci[0], -ci[1], -ci[2]], cj);
            assert!(s.weight(i) > Ratio::zero());
            wsum += s.weight(i);
            for a in 0..3 {
                first[a] += s.weight(i) * Ratio::from_integer(ci[a] as i64);
            }
            if s.dim() == 2 {
                assert_eq!(ci[2], 0);
            }
        }
        assert_eq!(wsum, Ratio::one());
        assert_eq!(first, [Ratio::zero(); 3]);
    }

    #[test]
    fn d3q19_canonical() {
        let s = make_stencil("D3Q19").unwrap();
        assert_eq!((s.q(), s.dim()), (19, 3));
        check_invariants(&s);
        assert_eq!(
            &s.velocities()[1..7],
            &[
                [1, 0, 0],
                [-1, 0, 0],
                [0, 1, 0],
                [0, -1, 0],
                [0, 0, 1],
                [0, 0, -1]
            ]
        );
        assert_eq!(s.velocity(7), [-1, -1, 0]);
        assert_eq!(s.velocity(18), [1, 1, 0]);
        assert_eq!(s.weight(0), Ratio::new(1, 3));
        assert_eq!(s.weight(1), Ratio::new(1, 18));
        assert_eq!(s.weight(7), Ratio::new(1, 36));
    }

    #[test]
    fn d2q9_canonical() {
        let s = make_stencil("d2q9").unwrap();
        assert_eq!((s.q(), s.dim()), (9, 2));
        check_invariants(&s);
        assert_eq!(s.velocity(5), [-1, -1, 0]);
        assert_eq!(s.velocity(8), [1, 1, 0]);
        assert_eq!(s.weight(0), Ratio::new(4, 9));
    }

    #[test]
    fn unsupported_name() {
        let err = make_stencil("D3Q27").unwrap_err();
        assert!(err.to_string().contains("unsupported stencil"));
    }

    #[test]
    fn opposite_lookup() {
        let s = make_stencil("D3Q19").unwrap();
        assert_eq!(s.opposite_dir(0).unwrap(), 0);
        let px = s.direction_of([1, 0, 0]).unwrap();
        let mx = s.direction_of([-1, 0, 0]).unwrap();
        assert_eq!(s.opposite_dir(px).unwrap(), mx);
        for i in 0..s.q() {
            assert_eq!(s.opposite_dir(s.opposite_dir(i).unwrap()).unwrap(), i);
        }
        assert!(s.opposite_dir(19).is_err());
    }

    #[test]
    fn pairs_cover_non_rest_once() {
        for kind in [StencilKind::D2Q9, StencilKind::D3Q19] {
            let s = Stencil::new(kind);
            let pairs = s.pairs();
            assert_eq!(pairs.len(), (s.q() - 1) / 2);
            let mut seen = vec![0; s.q()];
            for p in &pairs {
                seen[p.pos] += 1;
                seen[p.neg] += 1;
            }
            assert_eq!(seen[0], 0);
            assert!(seen[1..].iter().all(|&n| n == 1));
        }
    }
}
