//! Compressed grid: one grid enlarged by one cell along each moving axis.
//!
//! Post-collision values of logical cell `x` live at `x + o * s` with
//! `s = (1, 1, 1)` (or `(1, 1, 0)` in 2D) and `o` the current offset. An
//! even step (`o = 0`) walks the cells in reverse lexicographic order and
//! writes at `x + s`; an odd step walks forward and writes at `x`. Reads that
//! wrap around a periodic face are snapshotted before the sweep.

use super::field::{PdfField, RawField};
use super::links::{DenseLinks, Links};
use super::os::{pull_load, pull_natural};
use super::padded::Padded;
use super::{Kern, Nat, MAX_Q};
use crate::real::Real;
use crate::stencil::Stencil;

#[derive(Debug, Clone)]
pub(super) struct CgAux<T> {
    pad: Padded,
    shift: isize,
    pdelta: Vec<isize>,
    ghost_start: Vec<u32>,
    ghost_k: Vec<u8>,
    ghost_src: Vec<usize>,
    ghost_val: Vec<T>,
}

impl<T: Real> CgAux<T> {
    pub fn new(links: &DenseLinks, s: &Stencil) -> Self {
        let sv: [usize; 3] = std::array::from_fn(|a| usize::from(a < s.dim()));
        let pad = Padded::new(links.geometry().dims(), [0; 3], sv);
        let shift = pad.delta([sv[0] as i32, sv[1] as i32, sv[2] as i32]);
        let pdelta = s.velocities().iter().map(|&c| pad.delta(c)).collect();
        let mut ghost_start = Vec::with_capacity(links.len() + 1);
        let mut ghost_k = Vec::new();
        let mut ghost_src = Vec::new();
        ghost_start.push(0u32);
        for n in 0..links.len() {
            if links.is_fluid(n) && !links.is_simple(n) {
                for k in 1..s.q() {
                    let j = s.opposite(k);
                    if let Some(m) = links.neighbor(n, j) {
                        if links.wraps(n, j) {
                            ghost_k.push(k as u8);
                            ghost_src.push(m);
                        }
                    }
                }
            }
            ghost_start.push(ghost_k.len() as u32);
        }
        let ghost_val = vec![T::zero(); ghost_k.len()];
        CgAux {
            pad,
            shift,
            pdelta,
            ghost_start,
            ghost_k,
            ghost_src,
            ghost_val,
        }
    }

    pub fn slots(&self) -> usize {
        self.pad.len()
    }

    pub fn pos(&self, n: usize, o: usize) -> usize {
        (self.pad.pos(n) as isize + o as isize * self.shift) as usize
    }
}

pub(super) fn step<T: Real>(
    kern: &Kern<T>,
    links: &DenseLinks,
    raw: RawField<T>,
    aux: &mut CgAux<T>,
    o: usize,
) {
    let (q, opp) = (kern.q, kern.opp);
    let so = o as isize * aux.shift;
    let sn = (1 - o) as isize * aux.shift;
    for e in 0..aux.ghost_k.len() {
        let src = (aux.pad.pos(aux.ghost_src[e]) as isize + so) as usize;
        aux.ghost_val[e] = unsafe { raw.get(0, aux.ghost_k[e] as usize, src) };
    }
    let aux = &*aux;
    let mut f = [T::zero(); MAX_Q];
    let mut post = [T::zero(); MAX_Q];
    let mut visit = |n: usize| {
        if !links.is_fluid(n) {
            return;
        }
        let base = aux.pad.pos(n) as isize;
        let here = (base + so) as usize;
        unsafe {
            f[0] = raw.get(0, 0, here);
            if links.is_simple(n) {
                for k in 1..q {
                    f[k] = raw.get(0, k, (base + so - aux.pdelta[k]) as usize);
                }
            } else {
                let mut gi = aux.ghost_start[n] as usize;
                for k in 1..q {
                    let j = opp[k];
                    f[k] = match links.neighbor(n, j) {
                        Some(_) if links.wraps(n, j) => {
                            gi += 1;
                            aux.ghost_val[gi - 1]
                        }
                        Some(m) => raw.get(0, k, (aux.pad.pos(m) as isize + so) as usize),
                        None => raw.get(0, j, here),
                    };
                }
            }
            kern.trt.collide(&f[..q], &mut post[..q]);
            let dst = (base + sn) as usize;
            for (k, &v) in post[..q].iter().enumerate() {
                raw.set(0, k, dst, v);
            }
        }
    };
    if o == 0 {
        (0..links.len()).rev().for_each(&mut visit);
    } else {
        (0..links.len()).for_each(&mut visit);
    }
}

pub(super) fn natural<T: Real>(
    field: &PdfField<T>,
    links: &DenseLinks,
    opp: &[usize],
    aux: &CgAux<T>,
    o: usize,
    n: usize,
    k: usize,
) -> T {
    pull_natural(field, 0, links, opp, n, k, |m| aux.pos(m, o))
}

pub(super) fn load<T: Real>(
    field: &mut PdfField<T>,
    links: &DenseLinks,
    opp: &[usize],
    aux: &CgAux<T>,
    nat: &Nat<T>,
    fluid: &[usize],
) {
    pull_load(field, 0, links, opp, nat, fluid, |m| aux.pos(m, 0))
}
