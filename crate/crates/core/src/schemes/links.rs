use std::ops::Range;

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::geometry::{GridGeometry, SparseRepresentation};
use crate::stencil::Stencil;

/// Node connectivity seen by the kernels.
///
/// Nodes are addressed by their logical index: the cell index under direct
/// addressing, the fluid-node index under indirect addressing.
pub(crate) trait Links: Sync {
    fn len(&self) -> usize;
    fn is_fluid(&self, n: usize) -> bool;
    /// Node reached from `n` along direction `k >= 1`; `None` is a
    /// bounce-back link.
    fn neighbor(&self, n: usize, k: usize) -> Option<usize>;
}

const FLUID: u8 = 1;
/// Fluid cell whose neighbors all exist, are fluid and need no wrap.
const SIMPLE: u8 = 2;

/// Direct addressing over the full Cartesian box.
#[derive(Debug, Clone)]
pub(crate) struct DenseLinks {
    geometry: GridGeometry,
    velocities: Vec<[i32; 3]>,
    offsets: Vec<isize>,
    flags: Vec<u8>,
}

impl DenseLinks {
    pub fn new(g: &GridGeometry, s: &Stencil) -> Self {
        let [nx, ny, _] = g.dims();
        let velocities = s.velocities().to_vec();
        let offsets = velocities
            .iter()
            .map(|c| c[0] as isize + nx as isize * (c[1] as isize + ny as isize * c[2] as isize))
            .collect();
        let flags = (0..g.cell_count())
            .map(|cell| {
                if !g.mask()[cell] {
                    return 0;
                }
                let x = g.cell_coords(cell);
                let simple = velocities[1..].iter().all(|&c| {
                    let inside = (0..3).all(|a| {
                        let v = x[a] as i64 + c[a] as i64;
                        v >= 0 && v < g.dims()[a] as i64
                    });
                    inside && g.fluid_neighbor(x, c).is_some()
                });
                if simple {
                    FLUID | SIMPLE
                } else {
                    FLUID
                }
            })
            .collect();
        DenseLinks {
            geometry: g.clone(),
            velocities,
            offsets,
            flags,
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// Linear index offset of direction `k` for non-wrapping links.
    #[inline]
    pub fn offset(&self, k: usize) -> isize {
        self.offsets[k]
    }

    #[inline]
    pub fn is_simple(&self, n: usize) -> bool {
        self.flags[n] & SIMPLE != 0
    }

    /// Whether the link `(n, k)` crosses a periodic face.
    #[inline]
    pub fn wraps(&self, n: usize, k: usize) -> bool {
        !self.is_simple(n)
            && self
                .geometry
                .wraps(self.geometry.cell_coords(n), self.velocities[k])
    }
}

impl Links for DenseLinks {
    #[inline]
    fn len(&self) -> usize {
        self.flags.len()
    }

    #[inline]
    fn is_fluid(&self, n: usize) -> bool {
        self.flags[n] & FLUID != 0
    }

    #[inline]
    fn neighbor(&self, n: usize, k: usize) -> Option<usize> {
        if self.flags[n] & SIMPLE != 0 {
            Some((n as isize + self.offsets[k]) as usize)
        } else {
            self.geometry
                .fluid_neighbor(self.geometry.cell_coords(n), self.velocities[k])
        }
    }
}

/// Indirect addressing through the adjacency table.
#[derive(Debug, Clone)]
pub(crate) struct SparseLinks {
    pub sparse: SparseRepresentation,
}

impl Links for SparseLinks {
    #[inline]
    fn len(&self) -> usize {
        self.sparse.fluid_count()
    }

    #[inline]
    fn is_fluid(&self, _n: usize) -> bool {
        true
    }

    #[inline]
    fn neighbor(&self, n: usize, k: usize) -> Option<usize> {
        self.sparse.neighbor(n, k)
    }
}

/// Splits `0..len` into ranges and runs `f` on each, in parallel when a pool
/// is given.
pub(crate) fn for_ranges(
    pool: Option<&ThreadPool>,
    len: usize,
    f: impl Fn(Range<usize>) + Sync + Send,
) {
    match pool {
        None => f(0..len),
        Some(p) => {
            let parts = p.current_num_threads() * 8;
            let chunk = len.div_ceil(parts).max(512);
            let n = len.div_ceil(chunk);
            p.install(|| {
                (0..n)
                    .into_par_iter()
                    .for_each(|c| f(c * chunk..((c + 1) * chunk).min(len)))
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_sparse, gen_channel, AxisPolicy, CHANNEL_POLICY};
    use crate::stencil::make_stencil;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn dense_matches_sparse() {
        let s = make_stencil("D3Q19").unwrap();
        let g = GridGeometry::random([9, 6, 5], 0.3, 3, CHANNEL_POLICY).unwrap();
        let dense = DenseLinks::new(&g, &s);
        let sparse = SparseLinks {
            sparse: build_sparse(&g, &s).unwrap(),
        };
        let cells: Vec<usize> = (0..g.cell_count()).filter(|&c| g.mask()[c]).collect();
        for (node, &cell) in cells.iter().enumerate() {
            for k in 1..19 {
                let d = dense.neighbor(cell, k);
                let sp = sparse.neighbor(node, k).map(|m| cells[m]);
                assert_eq!(d, sp);
            }
        }
    }

    #[test]
    fn simple_cells_and_wraps() {
        let s = make_stencil("D3Q19").unwrap();
        let g = gen_channel([5, 5, 5]).unwrap();
        let l = DenseLinks::new(&g, &s);
        assert!(l.is_simple(g.cell_index(2, 2, 2)));
        assert!(!l.is_simple(g.cell_index(0, 2, 2)));
        let mx = s.direction_of([-1, 0, 0]).unwrap();
        assert!(l.wraps(g.cell_index(0, 2, 2), mx));
        assert_eq!(
            l.neighbor(g.cell_index(0, 2, 2), mx),
            Some(g.cell_index(4, 2, 2))
        );
        let g = GridGeometry::all_fluid([3, 3, 3], [AxisPolicy::Wall; 3]).unwrap();
        let l = DenseLinks::new(&g, &s);
        assert_eq!(l.neighbor(0, mx), None);
    }

    #[test]
    fn ranges_cover_everything_once() {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        for len in [0usize, 1, 511, 5000] {
            let hits: Vec<AtomicUsize> = (0..len).map(|_| AtomicUsize::new(0)).collect();
            for_ranges(Some(&pool), len, |r| {
                for i in r {
                    hits[i].fetch_add(1, Ordering::Relaxed);
                }
            });
            assert!(hits.iter().all(|h| h.load(Ordering::Relaxed) == 1));
        }
    }
}
