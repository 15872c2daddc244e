//! Whole-library runs from a voxel mask or synthetic input to the reported
//! quantity, checked against values computed here.

use std::f64::consts::PI;

use porescope::pnm::{self, fixtures, ConductanceModel, SampleGeometry};
use porescope::poreseg;
use porescope::regime::{analyze_regime, RegimeCurve, TransitionOptions};
use porescope::streamline::{stream_tortuosity, Streamline};
use porescope::voxel::{self, BinaryPoreMask, Connectivity, Dims, VoxelGrid};
use porescope::FluidProps;
use proptest::prelude::*;

fn network_k(mask: &BinaryPoreMask) -> f64 {
    let water = FluidProps::default();
    let dmap = poreseg::distance_transform(mask);
    let spheres = poreseg::maximal_inscribed_spheres(&dmap);
    let lps = poreseg::segment_pores(&dmap, &spheres).unwrap();
    let net = pnm::extract_network(&lps, &dmap, &water, ConductanceModel::default()).unwrap();
    let sol = pnm::solve_pressure(&net, 1000.0, 0.0).unwrap();
    let sample = SampleGeometry::from_dims(mask.dims(), mask.voxel_size());
    pnm::permeability(&sol, sample, &water, 1000.0).unwrap().k_m2
}

fn disc(cx: f64, cy: f64, r: f64) -> impl Fn(usize, usize) -> bool {
    move |x, y| (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r
}

#[test]
fn two_separate_tubes_double_the_permeability() {
    let (n, nz, vs) = (64, 40, 5.0);
    let a = disc(16.0, 31.5, 10.0);
    let b = disc(47.0, 31.5, 10.0);
    let one = BinaryPoreMask::from_fn(Dims::new(n, n, nz), vs, |x, y, _| a(x, y));
    let two = BinaryPoreMask::from_fn(Dims::new(n, n, nz), vs, |x, y, _| a(x, y) || b(x, y));
    let (k1, k2) = (network_k(&one), network_k(&two));
    assert!((k2 / k1 - 2.0).abs() < 1e-9, "k1 {k1:e}, k2 {k2:e}");

    // volume-equivalent radius of the digitised disc against Hagen–Poiseuille
    let area_vox = (0..n * n).filter(|&i| a(i % n, i / n)).count() as f64;
    let r = (area_vox / PI).sqrt() * vs * 1e-6;
    let side = n as f64 * vs * 1e-6;
    let k0 = PI * r.powi(4) / (8.0 * side * side);
    assert!((k1 / k0 - 1.0).abs() < 1e-9, "k1 {k1:e}, oracle {k0:e}");
}

#[test]
fn clean_then_binarise_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mask = poreseg::fixtures::tube(20, 12, 5.0, 2.5);
    let data: Vec<u8> = mask.pore().iter().map(|&p| if p { 10 } else { 240 }).collect();
    let grid = VoxelGrid::new(mask.dims(), 2.5, data).unwrap();
    let path = dir.path().join("v.raw");
    voxel::save_raw(&grid, &path).unwrap();
    let back = voxel::binarise(&voxel::load_raw(&path).unwrap(), 34);
    let (clean, report) = voxel::clean_pore_space(&back, 8, Connectivity::TwentySix).unwrap();
    assert_eq!(clean.pore(), mask.pore());
    assert_eq!(report.components_removed, 0);
}

fn interior_imbalance(net: &pnm::PoreNetwork, p: &[f64]) -> f64 {
    let mut net_flow = vec![0.0; net.pores.len()];
    let mut scale: f64 = 0.0;
    for t in &net.throats {
        let q = t.g * (p[t.a as usize - 1] - p[t.b as usize - 1]);
        net_flow[t.a as usize - 1] -= q;
        net_flow[t.b as usize - 1] += q;
        scale = scale.max(q.abs());
    }
    let fixed = |id: u32| net.inlet.contains(&id) || net.outlet.contains(&id);
    net.pores.iter().filter(|q| !fixed(q.id)).map(|q| net_flow[q.id as usize - 1].abs() / scale).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_networks_conserve_mass(n in 20usize..120, seed in 0u64..10_000) {
        let net = fixtures::random_network(n, seed);
        let sol = pnm::solve_pressure(&net, 500.0, 0.0).unwrap();
        prop_assert!(interior_imbalance(&net, &sol.pore_pressure) < 1e-8);
        prop_assert!((sol.inflow - sol.outflow).abs() <= 1e-8 * sol.inflow.abs());
        for &p in &sol.pore_pressure {
            prop_assert!((-1e-9..=500.0 + 1e-9).contains(&p));
        }
    }

    #[test]
    fn flux_is_linear_in_pressure_drop(seed in 0u64..10_000, scale in 0.1f64..100.0) {
        let net = fixtures::random_network(40, seed);
        let a = pnm::solve_pressure(&net, 1.0, 0.0).unwrap();
        let b = pnm::solve_pressure(&net, scale, 0.0).unwrap();
        prop_assert!((b.total_flux / a.total_flux - scale).abs() < 1e-8 * scale);
    }

    #[test]
    fn tortuosity_ignores_rigid_motion_and_scale(
        pts in prop::collection::vec(prop::array::uniform3(-50.0f64..50.0), 3..30),
        shift in prop::array::uniform3(-1e3f64..1e3),
        s in 0.01f64..100.0,
    ) {
        let a = &pts[0];
        let b = pts.last().unwrap();
        let chord = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt();
        prop_assume!(chord > 1.0);
        let moved: Vec<[f64; 3]> = pts.iter().map(|p| [s * p[0] + shift[0], s * p[1] + shift[1], s * p[2] + shift[2]]).collect();
        let t0 = stream_tortuosity(&Streamline::new(0, pts.clone()).unwrap()).unwrap();
        let t1 = stream_tortuosity(&Streamline::new(1, moved).unwrap()).unwrap();
        prop_assert!(t0 >= 1.0 - 1e-12);
        prop_assert!((t0 - t1).abs() < 1e-9 * t0);
    }

    #[test]
    fn darcy_curves_recover_k_and_report_no_transition(log_k in -14.0f64..-9.0, n in 5usize..30) {
        let water = FluidProps::default();
        let k = 10f64.powf(log_k);
        let pairs: Vec<(f64, f64)> = (1..=n).map(|i| {
            let v = 1e-4 * i as f64;
            (v, water.dynamic_viscosity * v / k)
        }).collect();
        let curve = RegimeCurve::from_pairs("s", &pairs).unwrap();
        let fit = analyze_regime(&curve, &water, TransitionOptions::default()).unwrap();
        prop_assert!((fit.darcy.k_m2 / k - 1.0).abs() < 1e-9);
        prop_assert!(fit.transition.velocity.is_none());
    }
}
