//! Esoteric twist on a single grid.
//!
//! For every direction pair `(i, j = opp i)` with `i < j`, a node owns the
//! `i` value in its own slot and reads the `j` value from the slot of its
//! neighbor along `i` (or from a private ghost slot if that link bounces).
//! Results are written back to the opposite slots, and after the sweep the
//! storage handles of `i` and `j` are exchanged, which completes the
//! propagation.

use super::field::{PdfField, RawField};
use super::links::{for_ranges, DenseLinks, Links};
use super::padded::Padded;
use super::{Kern, Nat, MAX_Q};
use crate::geometry::SparseRepresentation;
use crate::real::Real;
use crate::stencil::Stencil;

/// Storage region used for each direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionBase(Vec<usize>);

impl DirectionBase {
    pub fn identity(q: usize) -> Self {
        DirectionBase((0..q).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn region(&self, k: usize) -> usize {
        self.0[k]
    }

    /// Swaps the entries of every opposing direction pair.
    pub fn exchange(&mut self, s: &Stencil) {
        for p in s.pairs() {
            self.0.swap(p.pos, p.neg);
        }
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(k, &d)| d == k)
    }

    /// Every direction maps to itself or to its opposite, consistently for
    /// both members of a pair.
    pub fn is_pairing(&self, s: &Stencil) -> bool {
        self.0.len() == s.q()
            && self.0[0] == 0
            && s.pairs().iter().all(|p| {
                let (a, b) = (self.0[p.pos], self.0[p.neg]);
                (a, b) == (p.pos, p.neg) || (a, b) == (p.neg, p.pos)
            })
    }
}

const MAX_PAIRS: usize = (MAX_Q - 1) / 2;

/// Slot addressing of the twisted layout.
pub(super) trait EtTopo: Sync {
    fn len(&self) -> usize;
    fn is_fluid(&self, n: usize) -> bool;
    fn pos(&self, n: usize) -> usize;
    /// Partner slot of pair `p` at node `n` (stored at `base`), and whether
    /// the `i` and `j` links bounce.
    fn link(&self, n: usize, base: usize, p: usize) -> (usize, bool, bool);
}

#[derive(Debug, Clone)]
pub(super) struct DenseEt {
    pad: Padded,
    pairs: Vec<(usize, usize)>,
    pair_delta: Vec<isize>,
    velocities: Vec<[i32; 3]>,
}

impl DenseEt {
    pub fn new(links: &DenseLinks, s: &Stencil) -> Self {
        let h: [usize; 3] = std::array::from_fn(|a| usize::from(a < s.dim()));
        let pad = Padded::new(links.geometry().dims(), h, h);
        let pairs: Vec<(usize, usize)> = s.pairs().iter().map(|p| (p.pos, p.neg)).collect();
        let pair_delta = pairs
            .iter()
            .map(|&(i, _)| pad.delta(s.velocity(i)))
            .collect();
        DenseEt {
            pad,
            pairs,
            pair_delta,
            velocities: s.velocities().to_vec(),
        }
    }

    pub fn slots(&self) -> usize {
        self.pad.len()
    }
}

/// Dense topology bundled with its links for the kernel.
pub(super) struct DenseEtView<'a> {
    pub et: &'a DenseEt,
    pub links: &'a DenseLinks,
}

impl EtTopo for DenseEtView<'_> {
    fn len(&self) -> usize {
        self.links.len()
    }

    #[inline]
    fn is_fluid(&self, n: usize) -> bool {
        self.links.is_fluid(n)
    }

    #[inline]
    fn pos(&self, n: usize) -> usize {
        self.et.pad.pos(n)
    }

    #[inline]
    fn link(&self, n: usize, base: usize, p: usize) -> (usize, bool, bool) {
        if self.links.is_simple(n) {
            return (
                (base as isize + self.et.pair_delta[p]) as usize,
                false,
                false,
            );
        }
        let (i, j) = self.et.pairs[p];
        let bi = self.links.neighbor(n, i).is_none();
        let bj = self.links.neighbor(n, j).is_none();
        let g = self.links.geometry();
        let x = g.cell_coords(n);
        let c = self.et.velocities[i];
        let slot = match g.displaced(x, c) {
            // Fluid neighbor, or a solid cell serving as ghost.
            Some(t) => self.et.pad.at([t[0] as i64, t[1] as i64, t[2] as i64]),
            // Wall crossing: ghost in the halo.
            None => self
                .et
                .pad
                .at(std::array::from_fn(|a| x[a] as i64 + c[a] as i64)),
        };
        (slot, bi, bj)
    }
}

/// Indirect topology: per node, one entry per pair (neighbor or ghost id)
/// plus one bounce bit mask.
#[derive(Debug, Clone)]
pub(super) struct SparseEt {
    npairs: usize,
    fluid: usize,
    table: Vec<u32>,
    bounce: Vec<u32>,
    slots: usize,
}

impl SparseEt {
    pub fn new(sp: &SparseRepresentation, s: &Stencil) -> Self {
        let pairs = s.pairs();
        let npairs = pairs.len();
        let fluid = sp.fluid_count();
        let mut next_ghost = vec![fluid; npairs];
        let mut table = Vec::with_capacity(fluid * npairs);
        let mut bounce = Vec::with_capacity(fluid);
        for n in 0..fluid {
            let mut mask = 0u32;
            for (p, pair) in pairs.iter().enumerate() {
                let target = match sp.neighbor(n, pair.pos) {
                    Some(m) => m,
                    None => {
                        mask |= 1 << (2 * p);
                        next_ghost[p] += 1;
                        next_ghost[p] - 1
                    }
                };
                if sp.neighbor(n, pair.neg).is_none() {
                    mask |= 1 << (2 * p + 1);
                }
                table.push(target as u32);
            }
            bounce.push(mask);
        }
        let slots = next_ghost.into_iter().max().unwrap_or(fluid).max(fluid);
        SparseEt {
            npairs,
            fluid,
            table,
            bounce,
            slots,
        }
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Index elements per node: one per pair plus the bounce mask.
    pub fn idx_per_node(&self) -> usize {
        self.npairs + 1
    }
}

impl EtTopo for SparseEt {
    fn len(&self) -> usize {
        self.fluid
    }

    #[inline]
    fn is_fluid(&self, _n: usize) -> bool {
        true
    }

    #[inline]
    fn pos(&self, n: usize) -> usize {
        n
    }

    #[inline]
    fn link(&self, n: usize, _base: usize, p: usize) -> (usize, bool, bool) {
        let m = self.bounce[n] >> (2 * p);
        (
            self.table[n * self.npairs + p] as usize,
            m & 1 != 0,
            m & 2 != 0,
        )
    }
}

pub(super) fn step<T: Real, E: EtTopo>(
    kern: &Kern<T>,
    topo: &E,
    raw: RawField<T>,
    d: &DirectionBase,
) {
    let q = kern.q;
    let trt = kern.trt;
    let np = trt.pair_count();
    for_ranges(kern.pool, topo.len(), |r| {
        let mut f = [T::zero(); MAX_Q];
        let mut post = [T::zero(); MAX_Q];
        let mut links = [(0usize, false, false); MAX_PAIRS];
        for n in r {
            if !topo.is_fluid(n) {
                continue;
            }
            let b = topo.pos(n);
            unsafe {
                f[0] = raw.get(0, 0, b);
                for (p, l) in links[..np].iter_mut().enumerate() {
                    let (i, j) = trt.pair_dirs(p);
                    *l = topo.link(n, b, p);
                    f[i] = raw.get(0, d.region(i), b);
                    f[j] = raw.get(0, d.region(j), l.0);
                }
                trt.collide(&f[..q], &mut post[..q]);
                raw.set(0, 0, b, post[0]);
                for (p, &(l, bi, bj)) in links[..np].iter().enumerate() {
                    let (i, j) = trt.pair_dirs(p);
                    let (di, dj) = (d.region(i), d.region(j));
                    raw.set(0, if bj { dj } else { di }, b, post[j]);
                    raw.set(0, if bi { di } else { dj }, l, post[i]);
                }
            }
        }
    });
}

pub(super) fn natural<T: Real, E: EtTopo>(
    field: &PdfField<T>,
    topo: &E,
    s: &Stencil,
    d: &DirectionBase,
    n: usize,
    k: usize,
) -> T {
    let b = topo.pos(n);
    if k == 0 {
        return field.get(0, 0, b);
    }
    let pairs = s.pairs();
    let p = pairs
        .iter()
        .position(|p| p.pos == k || p.neg == k)
        .expect("direction belongs to a pair");
    if pairs[p].pos == k {
        field.get(0, d.region(k), b)
    } else {
        let (l, _, _) = topo.link(n, b, p);
        field.get(0, d.region(k), l)
    }
}

pub(super) fn load<T: Real, E: EtTopo>(
    field: &mut PdfField<T>,
    topo: &E,
    s: &Stencil,
    d: &DirectionBase,
    nat: &Nat<T>,
    fluid: &[usize],
) {
    let pairs = s.pairs();
    for &n in fluid {
        let b = topo.pos(n);
        field.set(0, 0, b, nat.get(0, n));
        for (p, pair) in pairs.iter().enumerate() {
            let (l, _, _) = topo.link(n, b, p);
            field.set(0, d.region(pair.pos), b, nat.get(pair.pos, n));
            field.set(0, d.region(pair.neg), l, nat.get(pair.neg, n));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::{make_stencil, StencilKind};

    #[test]
    fn exchange_is_an_involution() {
        for kind in [StencilKind::D2Q9, StencilKind::D3Q19] {
            let s = Stencil::new(kind);
            let mut d = DirectionBase::identity(s.q());
            assert!(d.is_identity() && d.is_pairing(&s));
            d.exchange(&s);
            assert!(!d.is_identity() && d.is_pairing(&s));
            for k in 0..s.q() {
                assert_eq!(d.region(k), s.opposite(k));
            }
            d.exchange(&s);
            assert!(d.is_identity());
        }
    }

    #[test]
    fn sparse_table_width_and_ghosts() {
        let s = make_stencil("D3Q19").unwrap();
        let g = crate::geometry::gen_channel([4, 3, 3]).unwrap();
        let sp = crate::geometry::build_sparse(&g, &s).unwrap();
        let et = SparseEt::new(&sp, &s);
        assert_eq!(et.idx_per_node(), 10);
        assert_eq!(et.table.len(), 36 * 9);
        // Every +y link out of the top layer bounces: 4 * 3 ghosts for that pair.
        assert!(et.slots() > 36);
        let mut ghosts: Vec<(usize, u32)> = Vec::new();
        for n in 0..36 {
            for p in 0..9 {
                let (t, bi, _) = et.link(n, n, p);
                if bi {
                    assert!(t >= 36);
                    ghosts.push((p, t as u32));
                } else {
                    assert!(t < 36);
                }
            }
        }
        let before = ghosts.len();
        ghosts.sort();
        ghosts.dedup();
        assert_eq!(before, ghosts.len());
    }
}
