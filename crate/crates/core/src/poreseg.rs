//! Maximal-ball segmentation of the pore space.
//!
//! Pipeline: exact Euclidean distance map → maximal inscribed spheres →
//! master spheres seeding pore families → level-ordered region growth →
//! 26-neighbour adjacency and per-section architectural statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::section::Sectioning;
use crate::stats::{summarize, Histogram, Summary};
use crate::voxel::{
    forward_offsets_26, read_sidecar, voxel_centre, write_sidecar, BinaryPoreMask, Connectivity, Dims, Sidecar,
    VoxelError,
};

#[derive(Debug, thiserror::Error)]
pub enum SegError {
    #[error("pore space is empty")]
    EmptyPoreSpace,
    #[error("labels must be contiguous 1..=P; label {0} is missing")]
    NonContiguousLabels(u32),
    #[error("label volume does not match the mask: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Voxel(#[from] VoxelError),
}

/// How the volume edges are treated by the distance transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// The x and y faces are sample walls (solid just outside); z is open.
    #[default]
    LateralWalls,
    /// Nothing outside the volume counts as solid.
    Open,
}

/// Exact Euclidean distance from every pore voxel centre to the nearest solid
/// voxel centre. Squared distances are kept in voxel² units (exact integers).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    dims: Dims,
    voxel_size: f64,
    sq: Vec<u32>,
}

/// Marks voxels with no solid anywhere in reach (open boundary only).
pub const UNBOUNDED: u32 = u32::MAX;

impl DistanceMap {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    /// Squared distance in voxel² units; 0 on solid.
    pub fn squared_voxels(&self) -> &[u32] {
        &self.sq
    }

    /// Distance in µm.
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        match self.sq[i] {
            UNBOUNDED => f64::INFINITY,
            s => (s as f64).sqrt() * self.voxel_size,
        }
    }

    pub fn distances(&self) -> Vec<f64> {
        (0..self.sq.len()).map(|i| self.get(i)).collect()
    }

    pub fn max(&self) -> f64 {
        self.sq.iter().max().map(|&s| self.get_sq(s)).unwrap_or(0.0)
    }

    fn get_sq(&self, s: u32) -> f64 {
        if s == UNBOUNDED {
            f64::INFINITY
        } else {
            (s as f64).sqrt() * self.voxel_size
        }
    }
}

/// 1-D lower envelope of parabolas (squared distance transform of a sampled
/// function). `f` holds INF for "no site". Sites at `-1` and `n` with value 0
/// are added when `walls` is set.
fn edt_1d(f: &[f64], walls: bool, out: &mut [f64]) {
    let n = f.len();
    let mut pos: Vec<f64> = Vec::with_capacity(n + 2);
    let mut val: Vec<f64> = Vec::with_capacity(n + 2);
    if walls {
        pos.push(-1.0);
        val.push(0.0);
    }
    for (i, &v) in f.iter().enumerate() {
        if v.is_finite() {
            pos.push(i as f64);
            val.push(v);
        }
    }
    if walls {
        pos.push(n as f64);
        val.push(0.0);
    }
    if pos.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    // envelope vertices and boundaries
    let m = pos.len();
    let mut v = vec![0usize; m];
    let mut z = vec![0f64; m + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..m {
        loop {
            let p = v[k];
            let s = ((val[q] + pos[q] * pos[q]) - (val[p] + pos[p] * pos[p])) / (2.0 * (pos[q] - pos[p]));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0: new parabola dominates everything to its left
                v[0] = q;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    let mut k = 0usize;
    for (x, o) in out.iter_mut().enumerate() {
        let xf = x as f64;
        while z[k + 1] < xf {
            k += 1;
        }
        let p = v[k];
        *o = (xf - pos[p]).powi(2) + val[p];
    }
}

pub fn distance_transform(mask: &BinaryPoreMask) -> DistanceMap {
    distance_transform_with(mask, Boundary::LateralWalls)
}

/// Exact EDT by three separable parabolic-envelope passes (x, y, z).
pub fn distance_transform_with(mask: &BinaryPoreMask, boundary: Boundary) -> DistanceMap {
    let d = mask.dims();
    let walls = boundary == Boundary::LateralWalls;
    let (nx, ny, nz) = (d.nx, d.ny, d.nz);
    let plane = d.plane_len();
    let mut g: Vec<f64> = mask.pore().iter().map(|&p| if p { f64::INFINITY } else { 0.0 }).collect();

    // x rows are contiguous
    g.par_chunks_mut(nx).for_each(|row| {
        let f = row.to_vec();
        edt_1d(&f, walls, row);
    });
    // y columns, one z-plane per task
    g.par_chunks_mut(plane).for_each(|pl| {
        let mut f = vec![0.0; ny];
        let mut o = vec![0.0; ny];
        for x in 0..nx {
            for y in 0..ny {
                f[y] = pl[x + nx * y];
            }
            edt_1d(&f, walls, &mut o);
            for y in 0..ny {
                pl[x + nx * y] = o[y];
            }
        }
    });
    // z columns: compute per (x,y) then scatter
    let cols: Vec<Vec<f64>> = (0..plane)
        .into_par_iter()
        .map(|xy| {
            let f: Vec<f64> = (0..nz).map(|z| g[xy + plane * z]).collect();
            let mut o = vec![0.0; nz];
            edt_1d(&f, false, &mut o);
            o
        })
        .collect();
    let mut sq = vec![0u32; d.len()];
    for (xy, col) in cols.iter().enumerate() {
        for (z, &v) in col.iter().enumerate() {
            let i = xy + plane * z;
            sq[i] = if !mask.pore()[i] {
                0
            } else if v.is_finite() {
                v.round() as u32
            } else {
                UNBOUNDED
            };
        }
    }
    DistanceMap { dims: d, voxel_size: mask.voxel_size(), sq }
}

/// A maximal inscribed sphere centred on a pore voxel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InscribedSphere {
    /// voxel index triple (x, y, z)
    pub voxel: [usize; 3],
    pub centre_um: [f64; 3],
    /// µm
    pub radius: f64,
    /// squared radius in voxel² units
    pub radius_sq: u32,
}

impl InscribedSphere {
    fn sort_key(&self) -> (std::cmp::Reverse<u32>, usize, usize, usize) {
        (std::cmp::Reverse(self.radius_sq), self.voxel[2], self.voxel[1], self.voxel[0])
    }
}

/// Sphere-inclusion settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct MisOptions {
    /// Slack of the inclusion test `dist + r_small ≤ r_big + slack·r_small`,
    /// as a fraction of the smaller radius. 0 is strict geometric containment;
    /// 1 absorbs every sphere whose centre lies inside a larger accepted one.
    /// On a voxel lattice `d(p) + |p − c|` overshoots `d(c)` by up to √3
    /// voxels inside a perfect ball, so strict containment leaves shells of
    /// lattice-artefact spheres.
    pub inclusion_slack: f64,
}

impl Default for MisOptions {
    fn default() -> Self {
        MisOptions { inclusion_slack: 1.0 }
    }
}

/// Lattice offsets within `radius` voxels, ordered by length then (z,y,x).
fn offsets_within(radius: f64) -> Vec<((i64, i64, i64), f64)> {
    let r = radius.ceil() as i64;
    let mut v = Vec::new();
    for dz in -r..=r {
        for dy in -r..=r {
            for dx in -r..=r {
                let n2 = (dx * dx + dy * dy + dz * dz) as f64;
                if n2 <= radius * radius + 1e-9 {
                    v.push(((dx, dy, dz), n2.sqrt()));
                }
            }
        }
    }
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then((a.0 .2, a.0 .1, a.0 .0).cmp(&(b.0 .2, b.0 .1, b.0 .0))));
    v
}

const EPS: f64 = 1e-9;

fn sphere_at(dmap: &DistanceMap, i: usize) -> InscribedSphere {
    let (x, y, z) = dmap.dims.coords(i);
    InscribedSphere {
        voxel: [x, y, z],
        centre_um: voxel_centre(x, y, z, dmap.voxel_size),
        radius: dmap.get(i),
        radius_sq: dmap.sq[i],
    }
}

pub fn maximal_inscribed_spheres(dmap: &DistanceMap) -> Vec<InscribedSphere> {
    maximal_inscribed_spheres_with(dmap, MisOptions::default())
}

/// Candidate spheres are visited in order of decreasing radius; a sphere is
/// dropped when it lies (within tolerance) inside an already accepted one.
/// Every pore voxel stays covered: a dropped sphere's centre lies inside the
/// accepted sphere that absorbed it.
pub fn maximal_inscribed_spheres_with(dmap: &DistanceMap, opts: MisOptions) -> Vec<InscribedSphere> {
    let d = dmap.dims;
    let slack = opts.inclusion_slack.max(0.0);
    let mut order: Vec<usize> = (0..d.len()).filter(|&i| dmap.sq[i] > 0).collect();
    if order.is_empty() {
        return Vec::new();
    }
    order.sort_by_key(|&i| (std::cmp::Reverse(dmap.sq[i]), i));
    let rmax = (dmap.sq[order[0]] as f64).sqrt();
    let offsets = offsets_within(rmax * (1.0 + slack));
    let mut accepted = vec![0f64; d.len()];
    let mut out = Vec::new();
    for &i in &order {
        let r = (dmap.sq[i] as f64).sqrt();
        let tol = slack * r;
        let (x, y, z) = d.coords(i);
        let reach = rmax - r + tol;
        let mut inside = false;
        for &(o, len) in &offsets {
            if len > reach + EPS {
                break;
            }
            if len == 0.0 {
                continue;
            }
            if let Some(j) = d.offset(x, y, z, o) {
                let rq = accepted[j];
                if rq > 0.0 && len + r <= rq + tol + EPS {
                    inside = true;
                    break;
                }
            }
        }
        if !inside {
            accepted[i] = r;
            out.push(sphere_at(dmap, i));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoreRecord {
    pub id: u32,
    pub centroid_um: [f64; 3],
    /// Largest distance-map value among the pore's voxels (µm).
    pub max_inscribed_radius: f64,
    pub voxel_count: usize,
    pub touches_inlet: bool,
    pub touches_outlet: bool,
    /// Extent along z in voxels (max − min + 1).
    pub z_extent: usize,
}

/// Per-voxel pore labels with pore records and 26-neighbour adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoreSpace {
    dims: Dims,
    voxel_size: f64,
    labels: Vec<u32>,
    pores: Vec<PoreRecord>,
    adjacency: BTreeSet<(u32, u32)>,
}

impl LabeledPoreSpace {
    /// Builds records and adjacency from a contiguous labelling (0 = solid).
    /// Radii come from `dmap` when given, otherwise they are 0.
    pub fn from_labels(
        dims: Dims,
        voxel_size: f64,
        labels: Vec<u32>,
        dmap: Option<&DistanceMap>,
    ) -> Result<Self, SegError> {
        if labels.len() != dims.len() {
            return Err(SegError::Mismatch(format!("{} labels for {} voxels", labels.len(), dims.len())));
        }
        let n = labels.iter().copied().max().unwrap_or(0) as usize;
        let mut count = vec![0usize; n + 1];
        let mut sum = vec![[0f64; 3]; n + 1];
        let mut rmax = vec![0f64; n + 1];
        let mut zmin = vec![usize::MAX; n + 1];
        let mut zmax = vec![0usize; n + 1];
        for (i, &l) in labels.iter().enumerate() {
            if l == 0 {
                continue;
            }
            let l = l as usize;
            let (x, y, z) = dims.coords(i);
            count[l] += 1;
            let c = voxel_centre(x, y, z, voxel_size);
            for k in 0..3 {
                sum[l][k] += c[k];
            }
            if let Some(dm) = dmap {
                rmax[l] = rmax[l].max(dm.get(i));
            }
            zmin[l] = zmin[l].min(z);
            zmax[l] = zmax[l].max(z);
        }
        if let Some(missing) = (1..=n).find(|&l| count[l] == 0) {
            return Err(SegError::NonContiguousLabels(missing as u32));
        }
        let pores = (1..=n)
            .map(|l| {
                let c = count[l] as f64;
                PoreRecord {
                    id: l as u32,
                    centroid_um: [sum[l][0] / c, sum[l][1] / c, sum[l][2] / c],
                    max_inscribed_radius: rmax[l],
                    voxel_count: count[l],
                    touches_inlet: zmin[l] == 0,
                    touches_outlet: zmax[l] == dims.nz - 1,
                    z_extent: zmax[l] - zmin[l] + 1,
                }
            })
            .collect();
        let adjacency = adjacency_of(dims, &labels);
        Ok(LabeledPoreSpace { dims, voxel_size, labels, pores, adjacency })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn pores(&self) -> &[PoreRecord] {
        &self.pores
    }

    pub fn pore(&self, id: u32) -> &PoreRecord {
        &self.pores[id as usize - 1]
    }

    pub fn pore_count(&self) -> usize {
        self.pores.len()
    }

    /// Unordered pairs stored as `(min, max)`.
    pub fn adjacency(&self) -> &BTreeSet<(u32, u32)> {
        &self.adjacency
    }

    pub fn are_adjacent(&self, a: u32, b: u32) -> bool {
        self.adjacency.contains(&(a.min(b), a.max(b)))
    }

    /// Writes labels as u32 little-endian with a sidecar.
    pub fn save_labels(&self, path: &Path) -> Result<(), SegError> {
        let mut bytes = Vec::with_capacity(self.labels.len() * 4);
        for l in &self.labels {
            bytes.extend_from_slice(&l.to_le_bytes());
        }
        fs::write(path, bytes).map_err(|source| VoxelError::Io { path: path.to_path_buf(), source })?;
        let d = self.dims;
        write_sidecar(
            path,
            &Sidecar { dims: [d.nx, d.ny, d.nz], voxel_size_um: self.voxel_size, dtype: "u32".into() },
        )?;
        Ok(())
    }

    pub fn load_labels(path: &Path, dmap: Option<&DistanceMap>) -> Result<Self, SegError> {
        let side = read_sidecar(path)?;
        if side.dtype != "u32" {
            return Err(VoxelError::InvalidSidecar { field: "dtype", reason: format!("expected u32, got {}", side.dtype) }
                .into());
        }
        let bytes = fs::read(path).map_err(|source| VoxelError::Io { path: path.to_path_buf(), source })?;
        let dims = Dims::new(side.dims[0], side.dims[1], side.dims[2]);
        if bytes.len() != dims.len() * 4 {
            return Err(VoxelError::SizeMismatch { expected: dims.len() * 4, actual: bytes.len() }.into());
        }
        let labels = bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        LabeledPoreSpace::from_labels(dims, side.voxel_size_um, labels, dmap)
    }
}

fn adjacency_of(dims: Dims, labels: &[u32]) -> BTreeSet<(u32, u32)> {
    let fwd = forward_offsets_26();
    let plane = dims.plane_len();
    let per_plane: Vec<BTreeSet<(u32, u32)>> = (0..dims.nz)
        .into_par_iter()
        .map(|z| {
            let mut set = BTreeSet::new();
            for i in z * plane..(z + 1) * plane {
                let a = labels[i];
                if a == 0 {
                    continue;
                }
                let (x, y, z) = dims.coords(i);
                for &o in &fwd {
                    if let Some(j) = dims.offset(x, y, z, o) {
                        let b = labels[j];
                        if b != 0 && b != a {
                            set.insert((a.min(b), a.max(b)));
                        }
                    }
                }
            }
            set
        })
        .collect();
    per_plane.into_iter().flatten().collect()
}

/// Renumbers arbitrary non-zero labels to 1..=P in order of first appearance.
pub fn relabel_contiguous(labels: &[u32]) -> Vec<u32> {
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    let mut next = 1;
    labels
        .iter()
        .map(|&l| {
            if l == 0 {
                0
            } else {
                *map.entry(l).or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            }
        })
        .collect()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // keep the earlier (higher-priority) root
        if ra < rb {
            self.0[rb] = ra;
        } else if rb < ra {
            self.0[ra] = rb;
        }
    }
}

/// Master spheres grouped into families, in priority order. Each family is a
/// list of indices into the sorted sphere slice.
fn master_families(d: Dims, spheres: &[InscribedSphere]) -> Vec<Vec<usize>> {
    if spheres.is_empty() {
        return Vec::new();
    }
    let rmax = (spheres[0].radius_sq as f64).sqrt();
    let mut slot = vec![usize::MAX; d.len()];
    for (k, s) in spheres.iter().enumerate() {
        slot[d.index(s.voxel[0], s.voxel[1], s.voxel[2])] = k;
    }
    let offsets = offsets_within(2.0 * rmax);
    let is_master: Vec<bool> = spheres
        .par_iter()
        .map(|s| {
            let r = (s.radius_sq as f64).sqrt();
            let [x, y, z] = s.voxel;
            for &(o, len) in &offsets {
                if len >= r + rmax {
                    break;
                }
                if let Some(j) = d.offset(x, y, z, o) {
                    let k = slot[j];
                    if k != usize::MAX && spheres[k].radius_sq > s.radius_sq {
                        let rk = (spheres[k].radius_sq as f64).sqrt();
                        if len < r + rk {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .collect();
    // overlapping masters always share a radius; merge them
    let mut uf = UnionFind((0..spheres.len()).collect());
    for (k, s) in spheres.iter().enumerate() {
        if !is_master[k] {
            continue;
        }
        let r = (s.radius_sq as f64).sqrt();
        let [x, y, z] = s.voxel;
        for &(o, len) in &offsets {
            if len >= 2.0 * r {
                break;
            }
            if let Some(j) = d.offset(x, y, z, o) {
                let m = slot[j];
                if m != usize::MAX && m != k && is_master[m] && spheres[m].radius_sq == s.radius_sq {
                    uf.union(k, m);
                }
            }
        }
    }
    let mut families: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for k in 0..spheres.len() {
        if is_master[k] {
            let root = uf.find(k);
            families.entry(root).or_default().push(k);
        }
    }
    families.into_values().collect()
}

/// Labels the pore space into families seeded by master spheres.
///
/// A master is a sphere that no strictly larger sphere overlaps; overlapping
/// masters (necessarily of equal radius) form one family. Families are
/// numbered by seed radius (descending) then by seed centre in (z,y,x) order.
/// Each master's open ball is painted with its family id, then the rest of
/// the pore space is grown level by level in decreasing distance: at each
/// level, eligible voxels touching labelled voxels (26-neighbourhood) join the
/// lowest-numbered neighbouring family, in synchronous waves.
pub fn segment_pores(dmap: &DistanceMap, spheres: &[InscribedSphere]) -> Result<LabeledPoreSpace, SegError> {
    let d = dmap.dims;
    if !dmap.sq.iter().any(|&s| s > 0) {
        return Err(SegError::EmptyPoreSpace);
    }
    let mut sorted = spheres.to_vec();
    sorted.sort_by_key(|s| s.sort_key());
    sorted.dedup_by_key(|s| s.voxel);
    let families = master_families(d, &sorted);

    let mut labels = vec![0u32; d.len()];
    for (f, members) in families.iter().enumerate() {
        let id = f as u32 + 1;
        for &k in members {
            let s = &sorted[k];
            let r = (s.radius_sq as f64).sqrt();
            let [x, y, z] = s.voxel;
            for (o, len) in offsets_within(r) {
                if len >= r {
                    break;
                }
                if let Some(j) = d.offset(x, y, z, o) {
                    if dmap.sq[j] > 0 {
                        labels[j] = id;
                    }
                }
            }
        }
    }

    let n26 = Connectivity::TwentySix.offsets();
    let mut pending: Vec<usize> = (0..d.len()).filter(|&i| dmap.sq[i] > 0 && labels[i] == 0).collect();
    pending.sort_by_key(|&i| (std::cmp::Reverse(dmap.sq[i]), i));
    let mut next_family = families.len() as u32 + 1;
    let mut cursor = 0;
    let mut in_wave = vec![false; d.len()];
    while cursor < pending.len() {
        let level = dmap.sq[pending[cursor]];
        let mut end = cursor;
        while end < pending.len() && dmap.sq[pending[end]] == level {
            end += 1;
        }
        let mut candidates: Vec<usize> = pending[cursor..end].to_vec();
        loop {
            let mut assign: Vec<(usize, u32)> = Vec::new();
            for &i in &candidates {
                in_wave[i] = false;
                if labels[i] != 0 {
                    continue;
                }
                let (x, y, z) = d.coords(i);
                let best = n26
                    .iter()
                    .filter_map(|&o| d.offset(x, y, z, o))
                    .map(|j| labels[j])
                    .filter(|&l| l != 0)
                    .min();
                if let Some(l) = best {
                    assign.push((i, l));
                }
            }
            if assign.is_empty() {
                break;
            }
            let mut next = Vec::new();
            for &(i, l) in &assign {
                labels[i] = l;
            }
            for &(i, _) in &assign {
                let (x, y, z) = d.coords(i);
                for &o in &n26 {
                    if let Some(j) = d.offset(x, y, z, o) {
                        if labels[j] == 0 && dmap.sq[j] >= level && !in_wave[j] {
                            in_wave[j] = true;
                            next.push(j);
                        }
                    }
                }
            }
            next.sort_unstable();
            candidates = next;
        }
        cursor = end;
    }
    // Components without a master cannot occur for spheres produced by
    // `maximal_inscribed_spheres`, but arbitrary sphere lists may leave gaps.
    for &start in &pending {
        if labels[start] != 0 {
            continue;
        }
        let id = next_family;
        next_family += 1;
        labels[start] = id;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let (x, y, z) = d.coords(i);
            for &o in &n26 {
                if let Some(j) = d.offset(x, y, z, o) {
                    if dmap.sq[j] > 0 && labels[j] == 0 {
                        labels[j] = id;
                        stack.push(j);
                    }
                }
            }
        }
    }
    LabeledPoreSpace::from_labels(d, dmap.voxel_size, labels, Some(dmap))
}

/// Adjacency pairs and coordination numbers (index `id − 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoreConnectivity {
    pub adjacency: Vec<(u32, u32)>,
    pub coordination: Vec<usize>,
}

pub fn pore_connectivity(lps: &LabeledPoreSpace) -> PoreConnectivity {
    let mut coordination = vec![0usize; lps.pore_count()];
    for &(a, b) in &lps.adjacency {
        coordination[a as usize - 1] += 1;
        coordination[b as usize - 1] += 1;
    }
    PoreConnectivity { adjacency: lps.adjacency.iter().copied().collect(), coordination }
}

/// Equivalent circular diameter `√(4A/π)`.
pub fn equivalent_diameter(area: f64) -> f64 {
    (4.0 * area / std::f64::consts::PI).sqrt()
}

/// One labelled cross-section in one image plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneChannel {
    pub slice: usize,
    pub label: u32,
    pub pixels: usize,
    pub area_um2: f64,
    pub diameter_um: f64,
}

/// Per-plane, per-label cross-sections in (slice, label) order.
pub fn plane_channels(lps: &LabeledPoreSpace) -> Vec<PlaneChannel> {
    let d = lps.dims;
    let plane = d.plane_len();
    let a_px = lps.voxel_size * lps.voxel_size;
    (0..d.nz)
        .into_par_iter()
        .map(|z| {
            let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
            for &l in &lps.labels[z * plane..(z + 1) * plane] {
                if l != 0 {
                    *counts.entry(l).or_default() += 1;
                }
            }
            counts
                .into_iter()
                .map(|(label, pixels)| {
                    let area = pixels as f64 * a_px;
                    PlaneChannel { slice: z, label, pixels, area_um2: area, diameter_um: equivalent_diameter(area) }
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionStats {
    pub section_index: usize,
    pub z_min_um: f64,
    pub z_max_um: f64,
    pub porosity: f64,
    pub channel_diameter_um: Summary,
    pub connectivity: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleStats {
    pub porosity: f64,
    /// Across-section mean/SD of section porosities.
    pub porosity_sections: Summary,
    pub channel_diameter_um: Summary,
    pub connectivity: Summary,
    pub pore_count: usize,
    pub throat_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distributions {
    pub channel_diameter_um: Histogram,
    pub connectivity: Histogram,
    pub pore_radius_um: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub sections: Vec<SectionStats>,
    pub sample: SampleStats,
    pub distributions: Distributions,
    #[serde(skip)]
    pub channels: Vec<PlaneChannel>,
    #[serde(skip)]
    pub coordination: Vec<usize>,
}

pub fn architectural_stats(
    lps: &LabeledPoreSpace,
    mask: &BinaryPoreMask,
    section_length: f64,
) -> Result<StatsReport, SegError> {
    if mask.dims() != lps.dims {
        return Err(SegError::Mismatch(format!("mask {:?} vs labels {:?}", mask.dims(), lps.dims)));
    }
    let sec = Sectioning::new(lps.dims.nz, lps.voxel_size, section_length).map_err(VoxelError::from)?;
    let porosity = crate::voxel::sectional_porosity(mask, section_length)?;
    let channels = plane_channels(lps);
    let conn = pore_connectivity(lps);
    let mut diam_by_sec: Vec<Vec<f64>> = vec![Vec::new(); sec.count()];
    for c in &channels {
        diam_by_sec[sec.section_of_slice(c.slice)].push(c.diameter_um);
    }
    let mut conn_by_sec: Vec<Vec<f64>> = vec![Vec::new(); sec.count()];
    for (p, &k) in lps.pores.iter().zip(&conn.coordination) {
        if let Some(s) = sec.section_of_z(p.centroid_um[2]) {
            conn_by_sec[s].push(k as f64);
        }
    }
    let sections: Vec<SectionStats> = sec
        .bounds()
        .into_iter()
        .map(|b| SectionStats {
            section_index: b.index,
            z_min_um: b.z_min_um,
            z_max_um: b.z_max_um,
            porosity: porosity[b.index].porosity,
            channel_diameter_um: summarize(&diam_by_sec[b.index]),
            connectivity: summarize(&conn_by_sec[b.index]),
        })
        .collect();
    let all_diam: Vec<f64> = channels.iter().map(|c| c.diameter_um).collect();
    let all_conn: Vec<f64> = conn.coordination.iter().map(|&k| k as f64).collect();
    let radii: Vec<f64> = lps.pores.iter().map(|p| p.max_inscribed_radius).collect();
    let max_k = conn.coordination.iter().copied().max().unwrap_or(0);
    let sample = SampleStats {
        porosity: mask.porosity(),
        porosity_sections: summarize(&porosity.iter().map(|p| p.porosity).collect::<Vec<_>>()),
        channel_diameter_um: summarize(&all_diam),
        connectivity: summarize(&all_conn),
        pore_count: lps.pore_count(),
        throat_count: lps.adjacency.len(),
    };
    let distributions = Distributions {
        channel_diameter_um: Histogram::auto(&all_diam, 30),
        connectivity: Histogram::uniform(&all_conn, -0.5, max_k as f64 + 0.5, max_k + 1),
        pore_radius_um: Histogram::auto(&radii, 30),
    };
    Ok(StatsReport { sections, sample, distributions, channels, coordination: conn.coordination })
}

/// One row per section per parameter plus `all` rows for the sample.
pub fn stats_csv(report: &StatsReport) -> String {
    let mut s = String::from("section,z_min_um,z_max_um,parameter,mean,sd,n\n");
    let row = |s: &mut String, sec: &str, lo: f64, hi: f64, name: &str, v: &Summary| {
        s.push_str(&format!("{sec},{lo},{hi},{name},{},{},{}\n", v.mean, v.sd, v.n));
    };
    for sec in &report.sections {
        let id = sec.section_index.to_string();
        let p = Summary { n: 1, mean: sec.porosity, sd: 0.0 };
        row(&mut s, &id, sec.z_min_um, sec.z_max_um, "porosity", &p);
        row(&mut s, &id, sec.z_min_um, sec.z_max_um, "channel_diameter_um", &sec.channel_diameter_um);
        row(&mut s, &id, sec.z_min_um, sec.z_max_um, "connectivity", &sec.connectivity);
    }
    let (lo, hi) = match (report.sections.first(), report.sections.last()) {
        (Some(a), Some(b)) => (a.z_min_um, b.z_max_um),
        _ => (0.0, 0.0),
    };
    row(&mut s, "all", lo, hi, "porosity", &report.sample.porosity_sections);
    row(&mut s, "all", lo, hi, "channel_diameter_um", &report.sample.channel_diameter_um);
    row(&mut s, "all", lo, hi, "connectivity", &report.sample.connectivity);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force EDT oracle: minimum over all solid voxels (and lateral
    /// wall sites) of the squared centre distance.
    fn brute_edt(mask: &BinaryPoreMask, walls: bool) -> Vec<u32> {
        let d = mask.dims();
        let mut solids: Vec<(i64, i64, i64)> = (0..d.len())
            .filter(|&i| !mask.pore()[i])
            .map(|i| {
                let (x, y, z) = d.coords(i);
                (x as i64, y as i64, z as i64)
            })
            .collect();
        if walls {
            for z in 0..d.nz as i64 {
                for y in -1..=d.ny as i64 {
                    solids.push((-1, y, z));
                    solids.push((d.nx as i64, y, z));
                }
                for x in -1..=d.nx as i64 {
                    solids.push((x, -1, z));
                    solids.push((x, d.ny as i64, z));
                }
            }
        }
        (0..d.len())
            .map(|i| {
                if !mask.pore()[i] {
                    return 0;
                }
                let (x, y, z) = d.coords(i);
                solids
                    .iter()
                    .map(|&(a, b, c)| {
                        let (dx, dy, dz) = (a - x as i64, b - y as i64, c - z as i64);
                        (dx * dx + dy * dy + dz * dz) as u32
                    })
                    .min()
                    .unwrap_or(UNBOUNDED)
            })
            .collect()
    }

    fn random_mask(seed: u64, dims: Dims, p: f64) -> BinaryPoreMask {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BinaryPoreMask::from_fn(dims, 1.0, |_, _, _| rng.random_bool(p))
    }

    #[test]
    fn edt_matches_brute_force() {
        for seed in 0..6 {
            let m = random_mask(seed, Dims::new(9, 7, 8), 0.8);
            for (b, walls) in [(Boundary::LateralWalls, true), (Boundary::Open, false)] {
                let dm = distance_transform_with(&m, b);
                assert_eq!(dm.squared_voxels(), brute_edt(&m, walls).as_slice(), "seed {seed} {b:?}");
            }
        }
    }

    #[test]
    fn single_pore_voxel_distance_is_one_voxel() {
        let m = BinaryPoreMask::from_fn(Dims::new(5, 5, 5), 6.25, |x, y, z| (x, y, z) == (2, 2, 2));
        let dm = distance_transform(&m);
        assert_eq!(dm.get(m.dims().index(2, 2, 2)), 6.25);
        let s = maximal_inscribed_spheres(&dm);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].radius, 6.25);
    }

    #[test]
    fn cylinder_axis_distance() {
        let (n, r) = (32usize, 10.0f64);
        let c = 15.5;
        let m = BinaryPoreMask::from_fn(Dims::new(n, n, 8), 2.0, |x, y, _| {
            (x as f64 - c).powi(2) + (y as f64 - c).powi(2) <= r * r
        });
        let dm = distance_transform(&m);
        let max = dm.max();
        assert!((max - r * 2.0).abs() <= 2.0, "{max}");
    }

    #[test]
    fn walled_box_centre_distance() {
        // all-pore block; solid boundary faces on every side
        let n = 21;
        let m = BinaryPoreMask::from_fn(Dims::new(n, n, n), 1.0, |x, y, z| {
            x > 0 && y > 0 && z > 0 && x < n - 1 && y < n - 1 && z < n - 1
        });
        let dm = distance_transform(&m);
        let centre = dm.get(m.dims().index(10, 10, 10));
        assert!((centre - n as f64 / 2.0).abs() <= 1.0, "{centre}");
    }

    #[test]
    fn lateral_walls_bound_all_pore_volume() {
        let m = BinaryPoreMask::from_fn(Dims::new(5, 7, 9), 1.0, |_, _, _| true);
        let dm = distance_transform(&m);
        assert_eq!(dm.get(m.dims().index(2, 3, 4)), 3.0);
        assert!(distance_transform_with(&m, Boundary::Open).get(0).is_infinite());
    }

    fn ball(dims: Dims, c: [f64; 3], r: f64) -> impl Fn(usize, usize, usize) -> bool {
        move |x, y, z| {
            let _ = dims;
            (x as f64 - c[0]).powi(2) + (y as f64 - c[1]).powi(2) + (z as f64 - c[2]).powi(2) <= r * r
        }
    }

    #[test]
    fn sphere_pore_has_dominant_mis() {
        let d = Dims::new(25, 25, 25);
        let r = 9.0;
        let m = BinaryPoreMask::from_fn(d, 1.0, ball(d, [12.0, 12.0, 12.0], r));
        let dm = distance_transform(&m);
        let s = maximal_inscribed_spheres(&dm);
        let biggest = s.iter().map(|s| s.radius).fold(0.0, f64::max);
        assert!((biggest - r).abs() <= 1.0, "{biggest}");
        assert_eq!(s[0].voxel, [12, 12, 12]);
    }

    /// Pairwise oracle for the accepted-set rule: visit spheres by radius,
    /// accept unless inside an accepted one within tolerance.
    fn brute_mis(dm: &DistanceMap, slack: f64) -> Vec<[usize; 3]> {
        let d = dm.dims();
        let mut cand: Vec<usize> = (0..d.len()).filter(|&i| dm.squared_voxels()[i] > 0).collect();
        cand.sort_by_key(|&i| (std::cmp::Reverse(dm.squared_voxels()[i]), i));
        let mut acc: Vec<(usize, f64)> = Vec::new();
        for i in cand {
            let r = (dm.squared_voxels()[i] as f64).sqrt();
            let (x, y, z) = d.coords(i);
            let inside = acc.iter().any(|&(j, rj)| {
                let (a, b, c) = d.coords(j);
                let dist = ((x as f64 - a as f64).powi(2) + (y as f64 - b as f64).powi(2) + (z as f64 - c as f64).powi(2)).sqrt();
                dist + r <= rj + slack * r + 1e-9
            });
            if !inside {
                acc.push((i, r));
            }
        }
        acc.into_iter().map(|(i, _)| { let (x, y, z) = d.coords(i); [x, y, z] }).collect()
    }

    #[test]
    fn two_disjoint_spheres_give_two_mis() {
        let d = Dims::new(20, 12, 12);
        let a = ball(d, [5.0, 6.0, 6.0], 4.0);
        let b = ball(d, [14.0, 6.0, 6.0], 4.0);
        let m = BinaryPoreMask::from_fn(d, 1.0, |x, y, z| a(x, y, z) || b(x, y, z));
        let dm = distance_transform(&m);
        let s = maximal_inscribed_spheres(&dm);
        let oracle = brute_mis(&dm, MisOptions::default().inclusion_slack);
        assert_eq!(s.iter().map(|s| s.voxel).collect::<Vec<_>>(), oracle);
        assert_eq!(oracle.len(), 2);
    }

    #[test]
    fn mis_matches_oracle_and_covers_on_random_masks() {
        for seed in 0..4 {
            let m = random_mask(100 + seed, Dims::new(10, 10, 10), 0.75);
            let dm = distance_transform(&m);
            for slack in [0.0, 0.5, 1.0] {
                let s = maximal_inscribed_spheres_with(&dm, MisOptions { inclusion_slack: slack });
                let got: Vec<[usize; 3]> = s.iter().map(|s| s.voxel).collect();
                assert_eq!(got, brute_mis(&dm, slack));
                check_mis_post(&m, &s);
            }
        }
    }

    fn check_mis_post(m: &BinaryPoreMask, s: &[InscribedSphere]) {
        let d = m.dims();
        for i in (0..d.len()).filter(|&i| m.pore()[i]) {
            let c = { let (x, y, z) = d.coords(i); voxel_centre(x, y, z, m.voxel_size()) };
            let covered = s.iter().any(|s| dist(&s.centre_um, &c) <= s.radius + 1e-9);
            assert!(covered, "voxel {i} uncovered");
        }
        for a in s {
            for b in s {
                if a.voxel != b.voxel {
                    assert!(dist(&a.centre_um, &b.centre_um) + b.radius > a.radius + 1e-9);
                }
            }
        }
    }

    fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    fn segment(m: &BinaryPoreMask) -> LabeledPoreSpace {
        let dm = distance_transform(m);
        let s = maximal_inscribed_spheres(&dm);
        segment_pores(&dm, &s).unwrap()
    }

    #[test]
    fn single_sphere_is_one_family() {
        let d = Dims::new(21, 21, 21);
        let m = BinaryPoreMask::from_fn(d, 1.0, ball(d, [10.0, 10.0, 10.0], 8.0));
        let l = segment(&m);
        assert_eq!(l.pore_count(), 1);
        assert_eq!(l.pores()[0].voxel_count, m.pore_count());
    }

    #[test]
    fn straight_channel_is_one_family() {
        let d = Dims::new(24, 24, 40);
        let m = BinaryPoreMask::from_fn(d, 1.0, |x, y, _| (x as f64 - 11.5).powi(2) + (y as f64 - 11.5).powi(2) <= 36.0);
        let l = segment(&m);
        assert_eq!(l.pore_count(), 1);
        assert!(l.pores()[0].touches_inlet && l.pores()[0].touches_outlet);
    }

    pub(crate) fn dumbbell(n: usize) -> BinaryPoreMask {
        crate::poreseg::fixtures::dumbbell(n)
    }

    #[test]
    fn dumbbell_splits_at_neck() {
        let m = dumbbell(64);
        let l = segment(&m);
        assert_eq!(l.pore_count(), 2);
        assert_eq!(l.adjacency().len(), 1);
        // one family per ball (ball centres at z = 22.5 and 40.5 voxels)
        let mut zs = [l.pore(1).centroid_um[2], l.pore(2).centroid_um[2]];
        zs.sort_by(f64::total_cmp);
        assert!((zs[0] - 23.0).abs() < 1.5 && (zs[1] - 41.0).abs() < 1.5, "{zs:?}");
        let c = pore_connectivity(&l);
        assert_eq!(c.coordination, vec![1, 1]);
    }

    #[test]
    fn segmentation_is_order_independent() {
        let m = random_mask(7, Dims::new(12, 12, 12), 0.7);
        let dm = distance_transform(&m);
        let s = maximal_inscribed_spheres(&dm);
        let mut rev = s.clone();
        rev.reverse();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut shuffled = s.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let a = segment_pores(&dm, &s).unwrap();
        assert_eq!(a, segment_pores(&dm, &rev).unwrap());
        assert_eq!(a, segment_pores(&dm, &shuffled).unwrap());
    }

    #[test]
    fn connectivity_trivial_cases() {
        let d = Dims::new(4, 1, 1);
        let l = LabeledPoreSpace::from_labels(d, 1.0, vec![1, 1, 0, 0], None).unwrap();
        assert_eq!(pore_connectivity(&l).coordination, vec![0]);
        let l = LabeledPoreSpace::from_labels(d, 1.0, vec![1, 1, 2, 2], None).unwrap();
        assert_eq!(pore_connectivity(&l).coordination, vec![1, 1]);
        assert!(l.are_adjacent(2, 1));
        assert!(matches!(
            LabeledPoreSpace::from_labels(d, 1.0, vec![1, 0, 3, 3], None),
            Err(SegError::NonContiguousLabels(2))
        ));
    }

    /// Exhaustive oracle: every voxel against all 26 neighbours.
    fn brute_adjacency(d: Dims, labels: &[u32]) -> BTreeSet<(u32, u32)> {
        let mut set = BTreeSet::new();
        for i in 0..d.len() {
            let (x, y, z) = d.coords(i);
            for o in Connectivity::TwentySix.offsets() {
                if let Some(j) = d.offset(x, y, z, o) {
                    let (a, b) = (labels[i], labels[j]);
                    if a != 0 && b != 0 && a != b {
                        set.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
        set
    }

    #[test]
    fn random_labelling_adjacency_matches_oracle() {
        let d = Dims::new(16, 16, 16);
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<u32> = (0..d.len()).map(|_| if rng.random_bool(0.3) { 0 } else { rng.random_range(1..40) }).collect();
            let labels = relabel_contiguous(&raw);
            let l = LabeledPoreSpace::from_labels(d, 1.0, labels.clone(), None).unwrap();
            assert_eq!(l.adjacency(), &brute_adjacency(d, &labels));
        }
    }

    #[test]
    fn cylinder_channel_diameter() {
        let r = 8.0;
        let d = Dims::new(24, 24, 30);
        let m = BinaryPoreMask::from_fn(d, 6.25, |x, y, _| (x as f64 - 11.5).powi(2) + (y as f64 - 11.5).powi(2) <= r * r);
        let l = segment(&m);
        let rep = architectural_stats(&l, &m, 62.5).unwrap();
        assert_eq!(rep.sections.len(), 3);
        for s in &rep.sections {
            assert!((s.channel_diameter_um.mean - 2.0 * r * 6.25).abs() <= 6.25, "{:?}", s.channel_diameter_um);
        }
    }

    #[test]
    fn two_parallel_channels_stats() {
        let d = Dims::new(30, 14, 20);
        let m = BinaryPoreMask::from_fn(d, 1.0, |x, y, _| {
            let a = (x as f64 - 7.0).powi(2) + (y as f64 - 7.0).powi(2) <= 16.0;
            let b = (x as f64 - 22.0).powi(2) + (y as f64 - 7.0).powi(2) <= 16.0;
            a || b
        });
        let l = segment(&m);
        assert_eq!(l.pore_count(), 2);
        let rep = architectural_stats(&l, &m, 10.0).unwrap();
        assert_eq!(rep.sample.connectivity.mean, 0.0);
        let area = (0..d.plane_len()).filter(|&i| m.pore()[i]).count() as f64 / 2.0;
        for c in &rep.channels {
            assert!((c.diameter_um - equivalent_diameter(area)).abs() < 1e-12);
        }
    }

    #[test]
    fn label_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = dumbbell(40);
        let dm = distance_transform(&m);
        let l = segment(&m);
        let p = dir.path().join("labels.raw");
        l.save_labels(&p).unwrap();
        assert_eq!(LabeledPoreSpace::load_labels(&p, Some(&dm)).unwrap(), l);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn segmentation_invariants(seed in 0u64..10_000, p in 0.5f64..0.95) {
            let m = random_mask(seed, Dims::new(9, 8, 7), p);
            prop_assume!(m.pore_count() > 0);
            let dm = distance_transform(&m);
            let l = segment(&m);
            // label partition
            prop_assert_eq!(l.pores().iter().map(|p| p.voxel_count).sum::<usize>(), m.pore_count());
            for (i, &lab) in l.labels().iter().enumerate() {
                prop_assert_eq!(lab != 0, m.pore()[i]);
            }
            // max inscribed radius
            for p in l.pores() {
                let max = (0..m.dims().len()).filter(|&i| l.labels()[i] == p.id).map(|i| dm.get(i)).fold(0.0, f64::max);
                prop_assert_eq!(p.max_inscribed_radius, max);
            }
            // per-plane areas sum to plane pore area
            let ch = plane_channels(&l);
            for z in 0..m.dims().nz {
                let px: usize = ch.iter().filter(|c| c.slice == z).map(|c| c.pixels).sum();
                prop_assert_eq!(px, m.slice_pore_count(z));
            }
            // adjacency symmetry
            for &(a, b) in l.adjacency() {
                prop_assert!(a < b && l.are_adjacent(b, a));
            }
        }

        #[test]
        fn distance_map_is_lipschitz(seed in 0u64..10_000) {
            let m = random_mask(seed, Dims::new(8, 8, 8), 0.8);
            let dm = distance_transform(&m);
            let d = m.dims();
            for i in 0..d.len() {
                if !m.pore()[i] { prop_assert_eq!(dm.get(i), 0.0); continue; }
                prop_assert!(dm.get(i) > 0.0);
                let (x, y, z) = d.coords(i);
                for o in Connectivity::TwentySix.offsets() {
                    if let Some(j) = d.offset(x, y, z, o) {
                        let len = ((o.0 * o.0 + o.1 * o.1 + o.2 * o.2) as f64).sqrt();
                        prop_assert!((dm.get(i) - dm.get(j)).abs() <= len * m.voxel_size() + 1e-9);
                    }
                }
            }
        }
    }
}

/// Constructed phantoms shared by tests and the acceptance suite.
pub mod fixtures {
    use crate::voxel::{BinaryPoreMask, Dims};

    /// Two balls of radius `n/8` on the z axis joined by a neck of radius
    /// `n/32`, in an `n³` grid (n = 64: radii 8 and 2).
    pub fn dumbbell(n: usize) -> BinaryPoreMask {
        let rb = n as f64 / 8.0;
        let rn = n as f64 / 32.0;
        let c = (n as f64 - 1.0) / 2.0;
        let za = c - rb - 1.0;
        let zb = c + rb + 1.0;
        BinaryPoreMask::from_fn(Dims::new(n, n, n), 1.0, |x, y, z| {
            let (x, y, z) = (x as f64, y as f64, z as f64);
            let rho2 = (x - c).powi(2) + (y - c).powi(2);
            let in_a = rho2 + (z - za).powi(2) <= rb * rb;
            let in_b = rho2 + (z - zb).powi(2) <= rb * rb;
            let in_neck = rho2 <= rn * rn && z >= za && z <= zb;
            in_a || in_b || in_neck
        })
    }

    /// Axial cylinder of radius `r` voxels centred in an `n × n × nz` grid.
    pub fn tube(n: usize, nz: usize, r: f64, voxel_size: f64) -> BinaryPoreMask {
        let c = (n as f64 - 1.0) / 2.0;
        BinaryPoreMask::from_fn(Dims::new(n, n, nz), voxel_size, |x, y, _| {
            (x as f64 - c).powi(2) + (y as f64 - c).powi(2) <= r * r
        })
    }
}
