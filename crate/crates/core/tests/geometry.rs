use lbmlab::geometry::{load_geo_file, save_geo_file, PACKED_BED_PITCH, PACKED_BED_RADIUS};
use lbmlab::{build_sparse, gen_channel, gen_packed_bed, Stencil, StencilKind};

#[test]
fn reference_channel_is_all_fluid() {
    let g = gen_channel([500, 100, 100]).unwrap();
    assert_eq!(g.fluid_count(), 5_000_000);
}

#[test]
fn reference_packed_bed_fluid_count() {
    let g = gen_packed_bed([500, 100, 100], PACKED_BED_RADIUS, PACKED_BED_PITCH).unwrap();
    assert_eq!(g.fluid_count(), 2_105_000);
    let s = Stencil::new(StencilKind::D3Q19);
    assert_eq!(build_sparse(&g, &s).unwrap().fluid_count(), 2_105_000);
}

#[test]
fn file_round_trip() {
    let g = gen_packed_bed([40, 30, 20], 6.0, 14.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bed.geo");
    save_geo_file(&g, &path).unwrap();
    let back = load_geo_file(&path).unwrap();
    assert_eq!(back.dims(), g.dims());
    assert_eq!(back.policy(), g.policy());
    assert_eq!(back.mask(), g.mask());
}
