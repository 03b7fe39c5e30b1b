//! One-step kernels on two grids: push, pull, and pull with chunked
//! non-temporal store loops.

use super::field::{PdfField, RawField};
use super::links::{for_ranges, Links};
use super::{Kern, Nat, StoreMode, MAX_Q};
use crate::collision::NodeMoments;
use crate::real::Real;

/// Reads `f_k(n)` from a pull-layout grid `g` (post-collision values not yet
/// streamed). `pos` maps logical nodes to storage slots.
#[inline(always)]
pub(super) unsafe fn pull_read<T: Real, L: Links>(
    raw: RawField<T>,
    g: usize,
    links: &L,
    opp: &[usize],
    n: usize,
    k: usize,
    pos: impl Fn(usize) -> usize,
) -> T {
    if k == 0 {
        return raw.get(g, 0, pos(n));
    }
    match links.neighbor(n, opp[k]) {
        Some(m) => raw.get(g, k, pos(m)),
        None => raw.get(g, opp[k], pos(n)),
    }
}

pub(super) fn pull_natural<T: Real, L: Links>(
    field: &PdfField<T>,
    g: usize,
    links: &L,
    opp: &[usize],
    n: usize,
    k: usize,
    pos: impl Fn(usize) -> usize,
) -> T {
    if k == 0 {
        return field.get(g, 0, pos(n));
    }
    match links.neighbor(n, opp[k]) {
        Some(m) => field.get(g, k, pos(m)),
        None => field.get(g, opp[k], pos(n)),
    }
}

/// Inverse of [`pull_natural`]: stores a natural state into pull layout.
pub(super) fn pull_load<T: Real, L: Links>(
    field: &mut PdfField<T>,
    g: usize,
    links: &L,
    opp: &[usize],
    nat: &Nat<T>,
    fluid: &[usize],
    pos: impl Fn(usize) -> usize,
) {
    for &m in fluid {
        field.set(g, 0, pos(m), nat.get(0, m));
        for k in 1..field.q() {
            let v = match links.neighbor(m, k) {
                Some(n) => nat.get(k, n),
                None => nat.get(opp[k], m),
            };
            field.set(g, k, pos(m), v);
        }
    }
}

pub(super) fn push_step<T: Real, L: Links>(
    kern: &Kern<T>,
    links: &L,
    raw: RawField<T>,
    cur: usize,
) {
    let (q, dst) = (kern.q, 1 - cur);
    for_ranges(kern.pool, links.len(), |r| {
        let mut f = [T::zero(); MAX_Q];
        let mut post = [T::zero(); MAX_Q];
        for n in r {
            if !links.is_fluid(n) {
                continue;
            }
            unsafe {
                for (k, v) in f[..q].iter_mut().enumerate() {
                    *v = raw.get(cur, k, n);
                }
                kern.trt.collide(&f[..q], &mut post[..q]);
                raw.set(dst, 0, n, post[0]);
                for k in 1..q {
                    match links.neighbor(n, k) {
                        Some(m) => raw.set(dst, k, m, post[k]),
                        None => raw.set(dst, kern.opp[k], n, post[k]),
                    }
                }
            }
        }
    });
}

pub(super) fn pull_step<T: Real, L: Links>(
    kern: &Kern<T>,
    links: &L,
    raw: RawField<T>,
    cur: usize,
) {
    let (q, dst) = (kern.q, 1 - cur);
    for_ranges(kern.pool, links.len(), |r| {
        let mut f = [T::zero(); MAX_Q];
        let mut post = [T::zero(); MAX_Q];
        for n in r {
            if !links.is_fluid(n) {
                continue;
            }
            unsafe {
                for (k, v) in f[..q].iter_mut().enumerate() {
                    *v = pull_read(raw, cur, links, kern.opp, n, k, |x| x);
                }
                kern.trt.collide(&f[..q], &mut post[..q]);
                for (k, &v) in post[..q].iter().enumerate() {
                    raw.set(dst, k, n, v);
                }
            }
        }
    });
}

#[inline(always)]
unsafe fn put<T: Real>(raw: RawField<T>, mode: StoreMode, g: usize, k: usize, n: usize, v: T) {
    match mode {
        StoreMode::Streaming => raw.store_streaming(g, k, n, v),
        StoreMode::Plain => raw.set(g, k, n, v),
    }
}

/// Pull kernel blocked into chunks of `chunk` nodes. Pulled values and the
/// per-node moments are staged first; the post-collision values are then
/// produced and stored by `q` single-direction loops (`paired = false`) or
/// by one rest loop plus one loop per direction pair (`paired = true`).
#[allow(clippy::too_many_arguments)]
pub(super) fn nt_step<T: Real, L: Links>(
    kern: &Kern<T>,
    links: &L,
    raw: RawField<T>,
    cur: usize,
    chunk: usize,
    paired: bool,
    mode: StoreMode,
) {
    let (q, dst) = (kern.q, 1 - cur);
    let trt = kern.trt;
    let pairs: Vec<(usize, usize)> = (0..trt.pair_count()).map(|p| trt.pair_dirs(p)).collect();
    // Per direction: (pair, is the positive member).
    let mut member = vec![(usize::MAX, false); q];
    for (p, &(a, b)) in pairs.iter().enumerate() {
        member[a] = (p, true);
        member[b] = (p, false);
    }
    let len = links.len();
    let blocks = len.div_ceil(chunk);
    for_ranges(kern.pool, blocks, |br| {
        let mut stage = vec![T::zero(); chunk * q];
        let mut moments = vec![NodeMoments::<T>::default(); chunk];
        let mut fluid = vec![false; chunk];
        for b in br {
            let start = b * chunk;
            let end = (start + chunk).min(len);
            let width = end - start;
            for (i, n) in (start..end).enumerate() {
                fluid[i] = links.is_fluid(n);
                if !fluid[i] {
                    continue;
                }
                let f = &mut stage[i * q..(i + 1) * q];
                for (k, v) in f.iter_mut().enumerate() {
                    *v = unsafe { pull_read(raw, cur, links, kern.opp, n, k, |x| x) };
                }
                moments[i] = trt.prepare(f);
            }
            unsafe {
                for i in 0..width {
                    let v = if fluid[i] {
                        trt.rest_post(stage[i * q], &moments[i])
                    } else {
                        T::zero()
                    };
                    put(raw, mode, dst, 0, start + i, v);
                }
                if paired {
                    for (p, &(a, bb)) in pairs.iter().enumerate() {
                        for i in 0..width {
                            let (x, y) = if fluid[i] {
                                let f = &stage[i * q..];
                                trt.pair_post(p, f[a], f[bb], &moments[i])
                            } else {
                                (T::zero(), T::zero())
                            };
                            put(raw, mode, dst, a, start + i, x);
                            put(raw, mode, dst, bb, start + i, y);
                        }
                    }
                } else {
                    for (k, &(p, pos)) in member.iter().enumerate().skip(1) {
                        let (a, bb) = pairs[p];
                        for i in 0..width {
                            let v = if fluid[i] {
                                let f = &stage[i * q..];
                                let (x, y) = trt.pair_post(p, f[a], f[bb], &moments[i]);
                                if pos {
                                    x
                                } else {
                                    y
                                }
                            } else {
                                T::zero()
                            };
                            put(raw, mode, dst, k, start + i, v);
                        }
                    }
                }
            }
        }
        if mode == StoreMode::Streaming {
            T::streaming_fence();
        }
    });
}
