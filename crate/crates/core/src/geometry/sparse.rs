use super::{AxisPolicy, GeometryError, GridGeometry};
use crate::stencil::Stencil;

/// Fluid-node list plus the `(q - 1)`-wide adjacency table (IDX).
///
/// Nodes are numbered in x-fastest lexicographic order of their coordinates.
/// `adjacency[n * (q - 1) + (k - 1)]` is the index of the node reached from
/// `n` along direction `k`, or `n` itself for a bounce-back link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseRepresentation {
    q: usize,
    coords: Vec<[u32; 3]>,
    adjacency: Vec<u32>,
}

impl SparseRepresentation {
    pub fn fluid_count(&self) -> usize {
        self.coords.len()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn coords(&self) -> &[[u32; 3]] {
        &self.coords
    }

    pub fn adjacency(&self) -> &[u32] {
        &self.adjacency
    }

    /// Raw adjacency entry of `node` in direction `k` (`k >= 1`).
    #[inline]
    pub fn link(&self, node: usize, k: usize) -> u32 {
        self.adjacency[node * (self.q - 1) + k - 1]
    }

    /// Neighbor of `node` along `k`, `None` for bounce-back.
    #[inline]
    pub fn neighbor(&self, node: usize, k: usize) -> Option<usize> {
        let m = self.link(node, k) as usize;
        (m != node).then_some(m)
    }
}

/// Checks that `g` can be paired with `s`.
pub(crate) fn check_compatible(g: &GridGeometry, s: &Stencil) -> Result<(), GeometryError> {
    let dims = g.dims();
    if s.dim() == 2 && dims[2] != 1 {
        return Err(GeometryError::DimensionMismatch {
            stencil: s.name(),
            dims,
        });
    }
    for axis in 0..3 {
        let moves = s.velocities().iter().any(|c| c[axis] != 0);
        if moves && dims[axis] == 1 && g.policy()[axis] == AxisPolicy::Periodic {
            return Err(GeometryError::DegeneratePeriodicAxis { axis });
        }
    }
    Ok(())
}

/// Builds the indirect-addressing representation of `g` for stencil `s`.
pub fn build_sparse(g: &GridGeometry, s: &Stencil) -> Result<SparseRepresentation, GeometryError> {
    check_compatible(g, s)?;
    let fluid = g.fluid_count();
    if fluid >= 1usize << 31 {
        return Err(GeometryError::TooManyNodes(fluid));
    }
    // Dense cell -> sparse node map.
    let mut node_of = vec![u32::MAX; g.cell_count()];
    let mut coords = Vec::with_capacity(fluid);
    for (cell, _) in g.mask().iter().enumerate().filter(|(_, &m)| m) {
        node_of[cell] = coords.len() as u32;
        let c = g.cell_coords(cell);
        coords.push([c[0] as u32, c[1] as u32, c[2] as u32]);
    }
    let q = s.q();
    let mut adjacency = Vec::with_capacity(fluid * (q - 1));
    for (n, c) in coords.iter().enumerate() {
        let c = [c[0] as usize, c[1] as usize, c[2] as usize];
        for k in 1..q {
            let target = match g.fluid_neighbor(c, s.velocity(k)) {
                Some(cell) => node_of[cell],
                None => n as u32,
            };
            adjacency.push(target);
        }
    }
    Ok(SparseRepresentation {
        q,
        coords,
        adjacency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gen_channel, CHANNEL_POLICY};
    use crate::stencil::{make_stencil, StencilKind};
    use proptest::prelude::*;

    /// Brute-force reciprocity scan over every (node, direction) pair.
    fn reciprocity_holds(sp: &SparseRepresentation, s: &Stencil) -> bool {
        (0..sp.fluid_count()).all(|a| {
            (1..s.q()).all(|k| match sp.neighbor(a, k) {
                Some(b) => sp.neighbor(b, s.opposite(k)) == Some(a),
                None => true,
            })
        })
    }

    #[test]
    fn periodic_box_has_no_bounce() {
        let g = GridGeometry::all_fluid([4, 4, 4], [AxisPolicy::Periodic; 3]).unwrap();
        let s = make_stencil("D3Q19").unwrap();
        let sp = build_sparse(&g, &s).unwrap();
        assert_eq!(sp.fluid_count(), 64);
        for n in 0..64 {
            for k in 1..19 {
                assert!(sp.neighbor(n, k).is_some());
            }
        }
        assert!(reciprocity_holds(&sp, &s));
    }

    #[test]
    fn isolated_node_is_all_bounce() {
        let g = GridGeometry::all_fluid([1, 1, 1], [AxisPolicy::Wall; 3]).unwrap();
        let s = make_stencil("D3Q19").unwrap();
        let sp = build_sparse(&g, &s).unwrap();
        assert_eq!(sp.adjacency(), &[0u32; 18]);
    }

    #[test]
    fn random_mask_reciprocity() {
        let s = make_stencil("D3Q19").unwrap();
        let g = GridGeometry::random([16, 8, 8], 0.25, 1234, CHANNEL_POLICY).unwrap();
        let sp = build_sparse(&g, &s).unwrap();
        assert!(reciprocity_holds(&sp, &s));
        // Enumeration is x-fastest and stable.
        let again = build_sparse(&g, &s).unwrap();
        assert_eq!(sp, again);
        let key = |c: &[u32; 3]| (c[2], c[1], c[0]);
        assert!(sp.coords().windows(2).all(|w| key(&w[0]) < key(&w[1])));
    }

    #[test]
    fn channel_walls_bounce() {
        let s = make_stencil("D3Q19").unwrap();
        let g = gen_channel([4, 3, 3]).unwrap();
        let sp = build_sparse(&g, &s).unwrap();
        let up = s.direction_of([0, 1, 0]).unwrap();
        let px = s.direction_of([1, 0, 0]).unwrap();
        // Node (0, 2, 1) touches the +y wall and wraps in x.
        let n = g.cell_index(0, 2, 1);
        assert_eq!(sp.neighbor(n, up), None);
        assert_eq!(sp.neighbor(n, s.opposite(px)), Some(g.cell_index(3, 2, 1)));
    }

    #[test]
    fn incompatible_geometries() {
        let d2 = Stencil::new(StencilKind::D2Q9);
        let g = gen_channel([4, 4, 2]).unwrap();
        assert!(matches!(
            build_sparse(&g, &d2),
            Err(GeometryError::DimensionMismatch { .. })
        ));
        let d3 = Stencil::new(StencilKind::D3Q19);
        let g = GridGeometry::all_fluid([1, 4, 4], [AxisPolicy::Periodic; 3]).unwrap();
        assert!(matches!(
            build_sparse(&g, &d3),
            Err(GeometryError::DegeneratePeriodicAxis { axis: 0 })
        ));
        // A flat periodic slab is fine for a 2D stencil.
        let g = GridGeometry::all_fluid([5, 4, 1], [AxisPolicy::Periodic; 3]).unwrap();
        assert!(build_sparse(&g, &d2).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn reciprocity_on_random_masks(
            seed in any::<u64>(),
            nx in 2usize..7, ny in 2usize..6, nz in 2usize..6,
            frac in 0.0f64..0.6,
            px in any::<bool>(), py in any::<bool>(), pz in any::<bool>(),
        ) {
            let pol = |p: bool| if p { AxisPolicy::Periodic } else { AxisPolicy::Wall };
            let g = GridGeometry::random([nx, ny, nz], frac, seed, [pol(px), pol(py), pol(pz)]).unwrap();
            let s = make_stencil("D3Q19").unwrap();
            let sp = build_sparse(&g, &s).unwrap();
            prop_assert_eq!(sp.fluid_count(), g.fluid_count());
            prop_assert!(sp.adjacency().iter().all(|&m| (m as usize) < sp.fluid_count()));
            prop_assert!(reciprocity_holds(&sp, &s));
        }
    }
}
