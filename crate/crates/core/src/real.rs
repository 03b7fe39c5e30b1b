//! Scalar abstraction for PDF storage and collision arithmetic.
//!
//! Everything that touches PDF values is generic over [`Real`], so the same
//! kernels run in double precision (the production configuration), single
//! precision, or with the operation-counting [`Counted`](crate::flops::Counted)
//! scalar used to audit the FLOP budget of a node update.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_traits::{FromPrimitive, Num, NumCast, ToPrimitive};

/// Floating-point-like scalar usable as a PDF value.
pub trait Real:
    Num
    + NumCast
    + FromPrimitive
    + ToPrimitive
    + Neg<Output = Self>
    + Copy
    + PartialOrd
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Whether [`Real::store_streaming`] bypasses the cache hierarchy on this
    /// target.
    const HAS_STREAMING_STORE: bool = false;

    /// Lossy conversion from `f64`, used for constants and test data.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("value representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn abs_val(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    /// Stores `v` at `dst`, using a non-temporal store when available.
    ///
    /// # Safety
    /// `dst` must be valid for writes and properly aligned for `Self`.
    #[inline]
    unsafe fn store_streaming(dst: *mut Self, v: Self) {
        dst.write(v)
    }

    /// Orders previously issued streaming stores before later stores.
    #[inline]
    fn streaming_fence() {}
}

impl Real for f64 {
    const HAS_STREAMING_STORE: bool = cfg!(target_arch = "x86_64");

    #[inline]
    unsafe fn store_streaming(dst: *mut Self, v: Self) {
        #[cfg(target_arch = "x86_64")]
        {
            std::arch::x86_64::_mm_stream_si64(dst as *mut i64, v.to_bits() as i64);
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            dst.write(v)
        }
    }

    #[inline]
    fn streaming_fence() {
        #[cfg(target_arch = "x86_64")]
        unsafe {
            std::arch::x86_64::_mm_sfence()
        }
    }
}

impl Real for f32 {
    const HAS_STREAMING_STORE: bool = cfg!(target_arch = "x86_64");

    #[inline]
    unsafe fn store_streaming(dst: *mut Self, v: Self) {
        #[cfg(target_arch = "x86_64")]
        {
            std::arch::x86_64::_mm_stream_si32(dst as *mut i32, v.to_bits() as i32);
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            dst.write(v)
        }
    }

    #[inline]
    fn streaming_fence() {
        #[cfg(target_arch = "x86_64")]
        unsafe {
            std::arch::x86_64::_mm_sfence()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streaming_store_writes_value() {
        let mut buf = vec![0.0f64; 4];
        unsafe { f64::store_streaming(buf.as_mut_ptr().add(3), 2.5) };
        f64::streaming_fence();
        assert_eq!(buf, [0.0, 0.0, 0.0, 2.5]);

        let mut buf32 = vec![0.0f32; 3];
        unsafe { f32::store_streaming(buf32.as_mut_ptr().add(1), -1.25) };
        f32::streaming_fence();
        assert_eq!(buf32, [0.0, -1.25, 0.0]);
    }

    #[test]
    fn abs_and_literals() {
        assert_eq!(f64::lit(-0.5).abs_val(), 0.5);
        assert_eq!(f32::lit(0.25).as_f64(), 0.25);
    }
}
