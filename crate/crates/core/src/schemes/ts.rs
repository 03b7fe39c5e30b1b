//! Two-step: collide from grid A into grid B, then push-propagate B back
//! into A.

use super::field::{PdfField, RawField};
use super::links::{for_ranges, Links};
use super::{Kern, Nat, MAX_Q};
use crate::real::Real;

pub(super) fn step<T: Real, L: Links>(kern: &Kern<T>, links: &L, raw: RawField<T>) {
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
                    raw.set(1, k, n, v);
                }
            }
        }
    });
    propagate(kern, links, raw);
}

/// Streaming sub-step: moves every value of B to its destination in A.
pub(super) fn propagate<T: Real, L: Links>(kern: &Kern<T>, links: &L, raw: RawField<T>) {
    let q = kern.q;
    for_ranges(kern.pool, links.len(), |r| {
        for n in r {
            if !links.is_fluid(n) {
                continue;
            }
            unsafe {
                raw.set(0, 0, n, raw.get(1, 0, n));
                for k in 1..q {
                    let v = raw.get(1, k, n);
                    match links.neighbor(n, k) {
                        Some(m) => raw.set(0, k, m, v),
                        None => raw.set(0, kern.opp[k], n, v),
                    }
                }
            }
        }
    });
}

pub(super) fn natural<T: Real>(field: &PdfField<T>, n: usize, k: usize) -> T {
    field.get(0, k, n)
}

pub(super) fn load<T: Real>(field: &mut PdfField<T>, nat: &Nat<T>, fluid: &[usize]) {
    for &n in fluid {
        for k in 0..field.q() {
            field.set(0, k, n, nat.get(k, n));
        }
    }
}
