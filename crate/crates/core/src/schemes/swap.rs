//! Swap algorithm on a single grid, direct addressing, strictly sequential.
//!
//! The sweep swaps only along non-wrapping links in a fixed half of the
//! directions (backward in memory for push, forward for pull). Links that
//! cross a periodic face are exchanged by a separate fix-up pass.

use super::field::{PdfField, RawField};
use super::links::{DenseLinks, Links};
use super::{Kern, Nat, MAX_Q};
use crate::real::Real;

#[derive(Debug, Clone)]
pub(super) struct SwapAux {
    backward: Vec<usize>,
    forward: Vec<usize>,
    /// Wrapping links `(n, k, m)` with `m = neighbor(n, k)` and `n < m`.
    wrap_links: Vec<(usize, usize, usize)>,
}

impl SwapAux {
    pub fn new(links: &DenseLinks, q: usize) -> Self {
        let backward = (1..q).filter(|&k| links.offset(k) < 0).collect();
        let forward = (1..q).filter(|&k| links.offset(k) > 0).collect();
        let mut wrap_links = Vec::new();
        for n in 0..links.len() {
            if !links.is_fluid(n) || links.is_simple(n) {
                continue;
            }
            for k in 1..q {
                if let Some(m) = links.neighbor(n, k) {
                    if n < m && links.wraps(n, k) {
                        wrap_links.push((n, k, m));
                    }
                }
            }
        }
        SwapAux {
            backward,
            forward,
            wrap_links,
        }
    }

    pub fn wrap_link_count(&self) -> usize {
        self.wrap_links.len()
    }
}

/// Exchanges the two slots of every wrapping link.
pub(super) fn fixup<T: Real>(raw: RawField<T>, opp: &[usize], aux: &SwapAux) {
    for &(n, k, m) in &aux.wrap_links {
        unsafe { raw.swap(0, k, n, opp[k], m) };
    }
}

#[inline(always)]
fn non_wrapping(links: &DenseLinks, n: usize, k: usize) -> Option<usize> {
    if links.is_simple(n) {
        return Some((n as isize + links.offset(k)) as usize);
    }
    links.neighbor(n, k).filter(|_| !links.wraps(n, k))
}

/// Push sweep: opposed layout in, opposed layout out (wrap links pending).
pub(super) fn push_sweep<T: Real>(
    kern: &Kern<T>,
    links: &DenseLinks,
    raw: RawField<T>,
    aux: &SwapAux,
) {
    let (q, opp) = (kern.q, kern.opp);
    let mut f = [T::zero(); MAX_Q];
    let mut post = [T::zero(); MAX_Q];
    for n in 0..links.len() {
        if !links.is_fluid(n) {
            continue;
        }
        unsafe {
            for (k, v) in f[..q].iter_mut().enumerate() {
                *v = raw.get(0, opp[k], n);
            }
            kern.trt.collide(&f[..q], &mut post[..q]);
            for (k, &v) in post[..q].iter().enumerate() {
                raw.set(0, k, n, v);
            }
            for &k in &aux.backward {
                if let Some(m) = non_wrapping(links, n, k) {
                    raw.swap(0, k, n, opp[k], m);
                }
            }
        }
    }
}

/// Pull step: pull layout in and out.
pub(super) fn pull_step<T: Real>(
    kern: &Kern<T>,
    links: &DenseLinks,
    raw: RawField<T>,
    aux: &SwapAux,
) {
    let (q, opp) = (kern.q, kern.opp);
    fixup(raw, opp, aux);
    let mut f = [T::zero(); MAX_Q];
    let mut post = [T::zero(); MAX_Q];
    for n in 0..links.len() {
        if !links.is_fluid(n) {
            continue;
        }
        unsafe {
            for &k in &aux.forward {
                if let Some(m) = non_wrapping(links, n, k) {
                    raw.swap(0, k, n, opp[k], m);
                }
            }
            for (k, v) in f[..q].iter_mut().enumerate() {
                *v = raw.get(0, opp[k], n);
            }
            kern.trt.collide(&f[..q], &mut post[..q]);
            for (k, &v) in post[..q].iter().enumerate() {
                raw.set(0, k, n, v);
            }
        }
    }
}

/// Natural PDF of a push state. With `partial`, wrapping links have not been
/// exchanged yet and their values are read from the partner slot.
pub(super) fn push_natural<T: Real>(
    field: &PdfField<T>,
    links: &DenseLinks,
    opp: &[usize],
    partial: bool,
    n: usize,
    k: usize,
) -> T {
    let j = opp[k];
    if partial && k != 0 && links.wraps(n, j) {
        if let Some(m) = links.neighbor(n, j) {
            return field.get(0, k, m);
        }
    }
    field.get(0, j, n)
}

pub(super) fn push_load<T: Real>(
    field: &mut PdfField<T>,
    opp: &[usize],
    nat: &Nat<T>,
    fluid: &[usize],
) {
    for &n in fluid {
        for (k, &j) in opp.iter().enumerate() {
            field.set(0, j, n, nat.get(k, n));
        }
    }
}
