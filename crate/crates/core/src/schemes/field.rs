use std::mem::size_of;

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::real::Real;

const ALIGN: usize = 64;

/// Direction-major PDF storage.
///
/// Each `(grid, direction)` region holds `slots` values and starts on a
/// 64-byte boundary; regions are padded up to the next boundary.
#[derive(Debug, Clone)]
pub struct PdfField<T> {
    data: Vec<T>,
    base: usize,
    stride: usize,
    slots: usize,
    q: usize,
    grids: usize,
}

impl<T: Real> PdfField<T> {
    /// Zero-initialized field. With a pool, pages are first touched by the
    /// pool's workers.
    pub fn new(grids: usize, q: usize, slots: usize, pool: Option<&ThreadPool>) -> Self {
        let per_line = (ALIGN / size_of::<T>()).max(1);
        let stride = slots.div_ceil(per_line) * per_line;
        let len = grids * q * stride + per_line;
        let mut data: Vec<T> = Vec::with_capacity(len);
        let spare = &mut data.spare_capacity_mut()[..len];
        let init = |chunk: &mut [std::mem::MaybeUninit<T>]| {
            for v in chunk {
                v.write(T::zero());
            }
        };
        match pool {
            Some(p) => p.install(|| spare.par_chunks_mut(1 << 16).for_each(init)),
            None => init(spare),
        }
        // SAFETY: all `len` elements were initialized above.
        unsafe { data.set_len(len) };
        let addr = data.as_ptr() as usize;
        let base = (ALIGN - addr % ALIGN) % ALIGN / size_of::<T>();
        PdfField {
            data,
            base,
            stride,
            slots,
            q,
            grids,
        }
    }

    pub fn grids(&self) -> usize {
        self.grids
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Node slots per direction region.
    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Padded region length in elements.
    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Number of logical values, `grids * q * slots`.
    pub fn value_count(&self) -> usize {
        self.grids * self.q * self.slots
    }

    #[inline]
    fn offset(&self, g: usize, k: usize, n: usize) -> usize {
        debug_assert!(g < self.grids && k < self.q && n < self.slots);
        self.base + (g * self.q + k) * self.stride + n
    }

    #[inline]
    pub fn get(&self, g: usize, k: usize, n: usize) -> T {
        self.data[self.offset(g, k, n)]
    }

    #[inline]
    pub fn set(&mut self, g: usize, k: usize, n: usize, v: T) {
        let o = self.offset(g, k, n);
        self.data[o] = v;
    }

    /// Start of region `(g, k)`.
    pub fn region(&self, g: usize, k: usize) -> &[T] {
        let o = self.offset(g, k, 0);
        &self.data[o..o + self.slots]
    }

    pub(crate) fn raw(&mut self) -> RawField<T> {
        RawField {
            ptr: unsafe { self.data.as_mut_ptr().add(self.base) },
            stride: self.stride,
            q: self.q,
        }
    }
}

/// Unchecked shared view used by kernels whose node updates touch disjoint
/// slots.
#[derive(Clone, Copy)]
pub(crate) struct RawField<T> {
    ptr: *mut T,
    stride: usize,
    q: usize,
}

// SAFETY: kernels guarantee that concurrent workers access disjoint slots.
unsafe impl<T: Send> Send for RawField<T> {}
unsafe impl<T: Sync> Sync for RawField<T> {}

impl<T: Real> RawField<T> {
    #[inline(always)]
    fn at(&self, g: usize, k: usize, n: usize) -> *mut T {
        unsafe { self.ptr.add((g * self.q + k) * self.stride + n) }
    }

    #[inline(always)]
    pub unsafe fn get(&self, g: usize, k: usize, n: usize) -> T {
        *self.at(g, k, n)
    }

    #[inline(always)]
    pub unsafe fn set(&self, g: usize, k: usize, n: usize, v: T) {
        *self.at(g, k, n) = v;
    }

    #[inline(always)]
    pub unsafe fn store_streaming(&self, g: usize, k: usize, n: usize, v: T) {
        T::store_streaming(self.at(g, k, n), v)
    }

    #[inline(always)]
    pub unsafe fn swap(&self, g: usize, k1: usize, n1: usize, k2: usize, n2: usize) {
        std::ptr::swap(self.at(g, k1, n1), self.at(g, k2, n2));
    }
}
