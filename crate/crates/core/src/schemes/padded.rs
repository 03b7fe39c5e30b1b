/// Index map from logical cells into a box enlarged by `lo` cells below and
/// `hi` cells above along each axis.
#[derive(Debug, Clone)]
pub(super) struct Padded {
    dims: [usize; 3],
    lo: [usize; 3],
    pdims: [usize; 3],
}

impl Padded {
    pub fn new(dims: [usize; 3], lo: [usize; 3], hi: [usize; 3]) -> Self {
        let pdims = std::array::from_fn(|a| dims[a] + lo[a] + hi[a]);
        Padded { dims, lo, pdims }
    }

    pub fn len(&self) -> usize {
        self.pdims.iter().product()
    }

    /// Position of logical coordinates `c`, which may lie in the padding.
    #[inline]
    pub fn at(&self, c: [i64; 3]) -> usize {
        let p: [usize; 3] = std::array::from_fn(|a| (c[a] + self.lo[a] as i64) as usize);
        debug_assert!((0..3).all(|a| p[a] < self.pdims[a]));
        p[0] + self.pdims[0] * (p[1] + self.pdims[1] * p[2])
    }

    /// Position of logical cell `n`.
    #[inline]
    pub fn pos(&self, n: usize) -> usize {
        let [nx, ny, _] = self.dims;
        let x = n % nx;
        let yz = n / nx;
        self.at([x as i64, (yz % ny) as i64, (yz / ny) as i64])
    }

    /// Position difference of a displacement.
    #[inline]
    pub fn delta(&self, c: [i32; 3]) -> isize {
        c[0] as isize
            + self.pdims[0] as isize * (c[1] as isize + self.pdims[1] as isize * c[2] as isize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_injective_and_shifted() {
        let p = Padded::new([3, 2, 2], [1, 1, 0], [1, 1, 0]);
        assert_eq!(p.len(), 5 * 4 * 2);
        let mut seen: Vec<usize> = (0..12).map(|n| p.pos(n)).collect();
        assert_eq!(p.pos(0), p.at([0, 0, 0]));
        assert_eq!(p.at([-1, -1, 0]), 0);
        assert_eq!(
            p.pos(0) as isize + p.delta([1, 1, 1]),
            p.at([1, 1, 1]) as isize
        );
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 12);
    }
}
