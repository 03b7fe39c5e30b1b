//! AA pattern on a single grid.
//!
//! Even steps collide in place and store each result in the opposite slot.
//! Odd steps read the values pointing at a node from its neighbors, collide,
//! and write the results back to the same slots in natural orientation. Each
//! node touches a disjoint set of slots in both kernels.

use super::field::{PdfField, RawField};
use super::links::{for_ranges, Links};
use super::{Kern, Nat, MAX_Q};
use crate::real::Real;

pub(super) fn even_step<T: Real, L: Links>(kern: &Kern<T>, links: &L, raw: RawField<T>) {
    let q = kern.q;
    for_ranges(kern.pool, links.len(), |r| {
        let mut f = [T::zero(); MAX_Q];
        let mut post = [T::zero(); MAX_Q];
        for n in r {
            if !links.is_fluid(n) {
                continue;
            }
            unsafe {
                for (k, v) in f[..q].iter_mut().enumerate() {
                    *v = raw.get(0, k, n);
                }
                kern.trt.collide(&f[..q], &mut post[..q]);
                for (k, &v) in post[..q].iter().enumerate() {
                    raw.set(0, kern.opp[k], n, v);
                }
            }
        }
    });
}

pub(super) fn odd_step<T: Real, L: Links>(kern: &Kern<T>, links: &L, raw: RawField<T>) {
    let (q, opp) = (kern.q, kern.opp);
    for_ranges(kern.pool, links.len(), |r| {
        let mut f = [T::zero(); MAX_Q];
        let mut post = [T::zero(); MAX_Q];
        for n in r {
            if !links.is_fluid(n) {
                continue;
            }
            unsafe {
                f[0] = raw.get(0, 0, n);
                for k in 1..q {
                    f[k] = match links.neighbor(n, opp[k]) {
                        Some(m) => raw.get(0, opp[k], m),
                        None => raw.get(0, k, n),
                    };
                }
                kern.trt.collide(&f[..q], &mut post[..q]);
                raw.set(0, 0, n, post[0]);
                for k in 1..q {
                    match links.neighbor(n, k) {
                        Some(m) => raw.set(0, k, m, post[k]),
                        None => raw.set(0, opp[k], n, post[k]),
                    }
                }
            }
        }
    });
}

/// Natural PDF; `opposed` is the layout left behind by an even step.
pub(super) fn natural<T: Real, L: Links>(
    field: &PdfField<T>,
    links: &L,
    opp: &[usize],
    opposed: bool,
    n: usize,
    k: usize,
) -> T {
    if !opposed || k == 0 {
        return field.get(0, k, n);
    }
    match links.neighbor(n, opp[k]) {
        Some(m) => field.get(0, opp[k], m),
        None => field.get(0, k, n),
    }
}

pub(super) fn load<T: Real>(field: &mut PdfField<T>, nat: &Nat<T>, fluid: &[usize]) {
    super::ts::load(field, nat, fluid)
}
