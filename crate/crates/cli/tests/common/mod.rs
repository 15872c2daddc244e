//! Fixture writers and a thin wrapper around the `porescope` binary.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use porescope::flowfield::{export_nodal_csv, VoxelFlowField};
use porescope::voxel::{save_raw, BinaryPoreMask, Dims, VoxelGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BIN: &str = env!("CARGO_BIN_EXE_porescope");

pub fn porescope(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("PORESCOPE_THREADS", n.to_string()),
        None => cmd.env_remove("PORESCOPE_THREADS"),
    };
    cmd.output().expect("binary runs")
}

pub fn ok(out: &Output) -> bool {
    if !out.status.success() {
        eprintln!("porescope failed ({:?}): {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    }
    out.status.success()
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).expect("report exists")).expect("valid JSON")
}

/// Grayscale volume: pore voxels at 20, solid at 200 (threshold 34 keeps
/// the pore).
pub fn grayscale(mask: &BinaryPoreMask) -> VoxelGrid {
    let data = mask.pore().iter().map(|&p| if p { 20 } else { 200 }).collect();
    VoxelGrid::new(mask.dims(), mask.voxel_size(), data).unwrap()
}

pub fn write_volume(mask: &BinaryPoreMask, path: &Path) {
    save_raw(&grayscale(mask), path).unwrap();
}

/// Straight cylinder along z through an `n × n × nz` block.
pub fn tube_mask(n: usize, nz: usize, r: f64, voxel_size: f64) -> BinaryPoreMask {
    let c = (n as f64 - 1.0) / 2.0;
    BinaryPoreMask::from_fn(Dims::new(n, n, nz), voxel_size, |x, y, _| {
        (x as f64 - c).powi(2) + (y as f64 - c).powi(2) <= r * r
    })
}

/// Several wandering channels with bulges: a small sample with many pores
/// and throats that still spans z.
pub fn porous_mask(n: usize, seed: u64) -> BinaryPoreMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut balls: Vec<([f64; 3], f64)> = Vec::new();
    for _ in 0..3 {
        let (mut x, mut y) = (rng.random_range(6.0..n as f64 - 6.0), rng.random_range(6.0..n as f64 - 6.0));
        let mut z = -2.0;
        while z < n as f64 + 2.0 {
            balls.push(([x, y, z], rng.random_range(2.0..4.5)));
            x = (x + rng.random_range(-1.5..1.5)).clamp(5.0, n as f64 - 6.0);
            y = (y + rng.random_range(-1.5..1.5)).clamp(5.0, n as f64 - 6.0);
            z += 2.0;
        }
    }
    BinaryPoreMask::from_fn(Dims::new(n, n, n), 6.25, |x, y, z| {
        let p = [x as f64, y as f64, z as f64];
        balls.iter().any(|(c, r)| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2) <= r * r)
    })
}

/// Smooth synthetic velocity field on the mask, exported on every
/// `every`-th plane.
pub fn nodal_csv(mask: &BinaryPoreMask, every: usize) -> String {
    // coordinates in µm
    let field = VoxelFlowField::from_fn(mask, |x, y, z| {
        let w = 0.01 * (1.0 + 0.3 * (x / 20.0).sin() * (y / 20.0).cos());
        ([1e-3 * (z / 30.0).sin(), 5e-4, w], 100.0 - 0.1 * z)
    });
    export_nodal_csv(&field, every)
}

/// Every file in `dir` except the manifests, which carry a timestamp.
pub fn report_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut m = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p: PathBuf = e.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        if p.is_file() && !name.starts_with("manifest_") {
            m.insert(name, std::fs::read(&p).unwrap());
        }
    }
    m
}

/// A manifest with its timestamp removed.
pub fn manifest_without_time(path: &Path) -> serde_json::Value {
    let mut v = read_json(path);
    v.as_object_mut().unwrap().remove("created_unix_s");
    v
}
