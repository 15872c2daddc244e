//! Nodal CFD exports: import, interpolation onto the voxel grid, and
//! per-channel Reynolds numbers.
//!
//! Nodal files are plain CSV with the header `x,y,z,u,v,w,p` in SI units.
//! Rows are grouped plane by plane in increasing z.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::poreseg::{equivalent_diameter, plane_channels, LabeledPoreSpace};
use crate::section::Sectioning;
use crate::stats::{summarize, Summary};
use crate::voxel::{BinaryPoreMask, Dims};
use crate::{FluidProps, UM};

pub const NODAL_HEADER: [&str; 7] = ["x", "y", "z", "u", "v", "w", "p"];

/// Number of neighbours and power used by inverse-distance weighting.
const IDW_K: usize = 8;
const IDW_POWER: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("nodal CSV header must be exactly `x,y,z,u,v,w,p`, found `{0}`")]
    MalformedHeader(String),
    #[error("malformed nodal row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("plane at z = {z_um} µm follows plane at z = {prev_um} µm; planes must be grouped in increasing z")]
    NonMonotonePlanes { prev_um: f64, z_um: f64 },
    #[error("need at least 2 sample planes, found {0}")]
    InsufficientPlanes(usize),
    #[error("plane spacing {spacing_um} µm is below the voxel size {voxel_um} µm")]
    PlaneSpacing { spacing_um: f64, voxel_um: f64 },
    #[error("{0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodalPoint {
    pub x_um: f64,
    pub y_um: f64,
    /// m/s
    pub velocity: [f64; 3],
    /// Pa
    pub pressure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePlane {
    pub z_um: f64,
    pub points: Vec<NodalPoint>,
}

/// Sample planes as exported by the CFD tool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalField {
    pub planes: Vec<SamplePlane>,
}

/// Velocity and pressure per voxel, aligned with a pore mask.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelFlowField {
    dims: Dims,
    voxel_size: f64,
    velocity: Vec<[f64; 3]>,
    pressure: Vec<f64>,
}

impl VoxelFlowField {
    /// Evaluates `f(x, y, z)` (µm, voxel centres) on pore voxels; solid voxels
    /// get zero velocity and pressure.
    pub fn from_fn(mask: &BinaryPoreMask, f: impl Fn(f64, f64, f64) -> ([f64; 3], f64) + Sync) -> Self {
        let d = mask.dims();
        let vs = mask.voxel_size();
        let (velocity, pressure) = (0..d.len())
            .into_par_iter()
            .map(|i| {
                if !mask.pore()[i] {
                    return ([0.0; 3], 0.0);
                }
                let (x, y, z) = d.coords(i);
                f((x as f64 + 0.5) * vs, (y as f64 + 0.5) * vs, (z as f64 + 0.5) * vs)
            })
            .unzip();
        VoxelFlowField { dims: d, voxel_size: vs, velocity, pressure }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn velocity(&self) -> &[[f64; 3]] {
        &self.velocity
    }

    pub fn pressure(&self) -> &[f64] {
        &self.pressure
    }

    pub fn speed(&self, i: usize) -> f64 {
        let [u, v, w] = self.velocity[i];
        (u * u + v * v + w * w).sqrt()
    }
}

fn parse_f64(field: &str, row: usize, name: &str) -> Result<f64, FlowError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| FlowError::MalformedRow { row, reason: format!("`{name}` is not a number: `{field}`") })?;
    if !v.is_finite() {
        return Err(FlowError::MalformedRow { row, reason: format!("`{name}` is not finite") });
    }
    Ok(v)
}

/// Parses nodal CSV text. A row starts a new plane when its z differs from
/// the current plane's z by more than `0.1 · voxel_size`.
pub fn parse_nodal_csv(text: &str, voxel_size: f64) -> Result<NodalField, FlowError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| FlowError::MalformedHeader(e.to_string()))?.clone();
    if header.iter().ne(NODAL_HEADER.iter().copied()) {
        return Err(FlowError::MalformedHeader(header.iter().collect::<Vec<_>>().join(",")));
    }
    let tol = 0.1 * voxel_size;
    let mut planes: Vec<SamplePlane> = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| FlowError::MalformedRow { row, reason: e.to_string() })?;
        if rec.len() != 7 {
            return Err(FlowError::MalformedRow { row, reason: format!("{} fields, expected 7", rec.len()) });
        }
        let mut v = [0.0; 7];
        for (j, name) in NODAL_HEADER.iter().enumerate() {
            v[j] = parse_f64(&rec[j], row, name)?;
        }
        let z_um = v[2] / UM;
        let point = NodalPoint { x_um: v[0] / UM, y_um: v[1] / UM, velocity: [v[3], v[4], v[5]], pressure: v[6] };
        match planes.last_mut() {
            Some(p) if (z_um - p.z_um).abs() <= tol => p.points.push(point),
            Some(p) if z_um < p.z_um => {
                return Err(FlowError::NonMonotonePlanes { prev_um: p.z_um, z_um });
            }
            _ => planes.push(SamplePlane { z_um, points: vec![point] }),
        }
    }
    Ok(NodalField { planes })
}

pub fn import_nodal_csv(path: &Path, voxel_size: f64) -> Result<NodalField, FlowError> {
    let text = std::fs::read_to_string(path).map_err(|source| FlowError::Io { path: path.display().to_string(), source })?;
    parse_nodal_csv(&text, voxel_size)
}

/// Writes every `every`-th z slice of a voxelised field as a full regular
/// grid of voxel centres (solid voxels included, with zero velocity).
pub fn export_nodal_csv(field: &VoxelFlowField, every: usize) -> String {
    let d = field.dims;
    let vs = field.voxel_size;
    let mut s = NODAL_HEADER.join(",");
    s.push('\n');
    for z in (0..d.nz).step_by(every.max(1)) {
        for y in 0..d.ny {
            for x in 0..d.nx {
                let i = d.index(x, y, z);
                let [u, v, w] = field.velocity[i];
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    (x as f64 + 0.5) * vs * UM,
                    (y as f64 + 0.5) * vs * UM,
                    (z as f64 + 0.5) * vs * UM,
                    u,
                    v,
                    w,
                    field.pressure[i]
                ));
            }
        }
    }
    s
}

/// In-plane interpolant for one sample plane.
enum PlaneInterp<'a> {
    /// Samples form a complete rectilinear grid: bilinear, linear beyond the
    /// hull. Exact for affine data.
    Grid { xs: Vec<f64>, ys: Vec<f64>, values: Vec<[f64; 4]> },
    Scattered(Buckets<'a>),
}

fn values_of(p: &NodalPoint) -> [f64; 4] {
    [p.velocity[0], p.velocity[1], p.velocity[2], p.pressure]
}

fn unique_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

impl<'a> PlaneInterp<'a> {
    fn new(points: &'a [NodalPoint]) -> Self {
        let xs = unique_sorted(points.iter().map(|p| p.x_um).collect());
        let ys = unique_sorted(points.iter().map(|p| p.y_um).collect());
        if xs.len() >= 2 && ys.len() >= 2 && xs.len() * ys.len() == points.len() {
            let mut values = vec![[f64::NAN; 4]; points.len()];
            let mut complete = true;
            for p in points {
                let ix = xs.partition_point(|&x| x < p.x_um);
                let iy = ys.partition_point(|&y| y < p.y_um);
                let slot = &mut values[iy * xs.len() + ix];
                if !slot[0].is_nan() {
                    complete = false;
                    break;
                }
                *slot = values_of(p);
            }
            if complete && values.iter().all(|v| !v[0].is_nan()) {
                return PlaneInterp::Grid { xs, ys, values };
            }
        }
        PlaneInterp::Scattered(Buckets::new(points))
    }

    fn eval(&self, x: f64, y: f64) -> [f64; 4] {
        match self {
            PlaneInterp::Grid { xs, ys, values } => {
                let cell = |axis: &[f64], q: f64| {
                    let i = axis.partition_point(|&a| a <= q).saturating_sub(1).min(axis.len() - 2);
                    (i, (q - axis[i]) / (axis[i + 1] - axis[i]))
                };
                let (i, tx) = cell(xs, x);
                let (j, ty) = cell(ys, y);
                let n = xs.len();
                let (a, b, c, d) = (values[j * n + i], values[j * n + i + 1], values[(j + 1) * n + i], values[(j + 1) * n + i + 1]);
                let mut out = [0.0; 4];
                for k in 0..4 {
                    let lo = a[k] + tx * (b[k] - a[k]);
                    let hi = c[k] + tx * (d[k] - c[k]);
                    out[k] = lo + ty * (hi - lo);
                }
                out
            }
            PlaneInterp::Scattered(b) => b.idw(x, y),
        }
    }
}

/// Uniform bucket grid over a plane's points for k-nearest queries.
struct Buckets<'a> {
    points: &'a [NodalPoint],
    x0: f64,
    y0: f64,
    cell: f64,
    gw: usize,
    gh: usize,
    cells: Vec<Vec<usize>>,
}

impl<'a> Buckets<'a> {
    fn new(points: &'a [NodalPoint]) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p.x_um);
            x1 = x1.max(p.x_um);
            y0 = y0.min(p.y_um);
            y1 = y1.max(p.y_um);
        }
        let span = (x1 - x0).max(y1 - y0).max(1e-9);
        let side = ((points.len() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let cell = span / side as f64 * (1.0 + 1e-9);
        let gw = ((x1 - x0) / cell).floor() as usize + 1;
        let gh = ((y1 - y0) / cell).floor() as usize + 1;
        let mut cells = vec![Vec::new(); gw * gh];
        for (k, p) in points.iter().enumerate() {
            let cx = ((p.x_um - x0) / cell).floor() as usize;
            let cy = ((p.y_um - y0) / cell).floor() as usize;
            cells[cy.min(gh - 1) * gw + cx.min(gw - 1)].push(k);
        }
        Buckets { points, x0, y0, cell, gw, gh, cells }
    }

    /// `k` nearest points as (squared distance, index), ties broken by index.
    fn nearest(&self, x: f64, y: f64, k: usize) -> Vec<(f64, usize)> {
        let clampi = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        let cx = clampi((x - self.x0) / self.cell, self.gw);
        let cy = clampi((y - self.y0) / self.cell, self.gh);
        let k = k.min(self.points.len());
        let mut found: Vec<(f64, usize)> = Vec::new();
        let max_ring = self.gw.max(self.gh);
        for r in 0..=max_ring {
            let (xl, xh) = (cx as i64 - r as i64, cx as i64 + r as i64);
            let (yl, yh) = (cy as i64 - r as i64, cy as i64 + r as i64);
            for gy in yl..=yh {
                for gx in xl..=xh {
                    let on_ring = gx == xl || gx == xh || gy == yl || gy == yh;
                    if !on_ring || gx < 0 || gy < 0 || gx >= self.gw as i64 || gy >= self.gh as i64 {
                        continue;
                    }
                    for &i in &self.cells[gy as usize * self.gw + gx as usize] {
                        let p = &self.points[i];
                        found.push(((p.x_um - x).powi(2) + (p.y_um - y).powi(2), i));
                    }
                }
            }
            if found.len() >= k {
                found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                // distance from the query to the unexplored region
                let mut margin = f64::INFINITY;
                if xl > 0 {
                    margin = margin.min(x - (self.x0 + xl as f64 * self.cell));
                }
                if (xh as usize) < self.gw - 1 {
                    margin = margin.min(self.x0 + (xh + 1) as f64 * self.cell - x);
                }
                if yl > 0 {
                    margin = margin.min(y - (self.y0 + yl as f64 * self.cell));
                }
                if (yh as usize) < self.gh - 1 {
                    margin = margin.min(self.y0 + (yh + 1) as f64 * self.cell - y);
                }
                if margin.is_infinite() || found[k - 1].0 <= margin.max(0.0).powi(2) {
                    found.truncate(k);
                    return found;
                }
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        found.truncate(k);
        found
    }

    /// Local linear least squares over the k nearest samples with
    /// inverse-distance weights, so affine data is reproduced exactly even
    /// between scattered nodes. Falls back to the weighted mean when the
    /// neighbours are (nearly) collinear, and to the sample value on an
    /// exact hit.
    fn idw(&self, x: f64, y: f64) -> [f64; 4] {
        let near = self.nearest(x, y, IDW_K);
        let exact = 1e-18 * self.cell.max(1.0).powi(2);
        if near[0].0 <= exact {
            return values_of(&self.points[near[0].1]);
        }
        let h = near.last().map_or(1.0, |n| n.0.sqrt());
        let mut m = [[0.0; 3]; 3];
        let mut rhs = [[0.0; 3]; 4];
        let mut mean = [0.0; 4];
        let mut wsum = 0.0;
        for &(d2, i) in &near {
            let w = 1.0 / d2.sqrt().powi(IDW_POWER);
            let p = &self.points[i];
            let basis = [1.0, (p.x_um - x) / h, (p.y_um - y) / h];
            let v = values_of(p);
            for r in 0..3 {
                for c in 0..3 {
                    m[r][c] += w * basis[r] * basis[c];
                }
                for k in 0..4 {
                    rhs[k][r] += w * basis[r] * v[k];
                }
            }
            for k in 0..4 {
                mean[k] += w * v[k];
            }
            wsum += w;
        }
        let det3 = |a: &[[f64; 3]; 3]| {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        };
        let det = det3(&m);
        if near.len() < 3 || !(det.abs() > 1e-8 * wsum.powi(3)) {
            return mean.map(|a| a / wsum);
        }
        // Cramer's rule for the constant term
        let mut out = [0.0; 4];
        for k in 0..4 {
            let mut a = m;
            for r in 0..3 {
                a[r][0] = rhs[k][r];
            }
            out[k] = det3(&a) / det;
        }
        out
    }
}

/// Interpolates sample planes onto the centres of `mask`'s voxels:
/// in-plane bilinear (regular grids) or inverse-distance weighted local
/// linear fits (scattered samples), then linear in z, extrapolating linearly beyond
/// the first and last planes. Solid voxels get zero velocity and pressure.
pub fn interpolate_to_voxels(field: &NodalField, mask: &BinaryPoreMask) -> Result<VoxelFlowField, FlowError> {
    let planes: Vec<&SamplePlane> = field.planes.iter().filter(|p| !p.points.is_empty()).collect();
    if planes.len() < 2 {
        return Err(FlowError::InsufficientPlanes(planes.len()));
    }
    let vs = mask.voxel_size();
    for w in planes.windows(2) {
        let spacing = w[1].z_um - w[0].z_um;
        if spacing < vs * (1.0 - 1e-9) {
            return Err(FlowError::PlaneSpacing { spacing_um: spacing, voxel_um: vs });
        }
    }
    let d = mask.dims();
    let plane_len = d.plane_len();
    // every plane evaluated on the full xy grid of voxel centres
    let on_grid: Vec<Vec<[f64; 4]>> = planes
        .par_iter()
        .map(|p| {
            let interp = PlaneInterp::new(&p.points);
            (0..plane_len)
                .map(|j| {
                    let (x, y) = (j % d.nx, j / d.nx);
                    interp.eval((x as f64 + 0.5) * vs, (y as f64 + 0.5) * vs)
                })
                .collect()
        })
        .collect();
    let zs: Vec<f64> = planes.iter().map(|p| p.z_um).collect();
    let slices: Vec<(Vec<[f64; 3]>, Vec<f64>)> = (0..d.nz)
        .into_par_iter()
        .map(|z| {
            let zc = (z as f64 + 0.5) * vs;
            let j = zs.partition_point(|&pz| pz <= zc).saturating_sub(1).min(zs.len() - 2);
            let t = (zc - zs[j]) / (zs[j + 1] - zs[j]);
            let mut vel = Vec::with_capacity(plane_len);
            let mut pres = Vec::with_capacity(plane_len);
            for k in 0..plane_len {
                if !mask.pore()[z * plane_len + k] {
                    vel.push([0.0; 3]);
                    pres.push(0.0);
                    continue;
                }
                let (a, b) = (on_grid[j][k], on_grid[j + 1][k]);
                let lerp = |m: usize| a[m] + t * (b[m] - a[m]);
                vel.push([lerp(0), lerp(1), lerp(2)]);
                pres.push(lerp(3));
            }
            (vel, pres)
        })
        .collect();
    let mut velocity = Vec::with_capacity(d.len());
    let mut pressure = Vec::with_capacity(d.len());
    for (v, p) in slices {
        velocity.extend(v);
        pressure.extend(p);
    }
    Ok(VoxelFlowField { dims: d, voxel_size: vs, velocity, pressure })
}

/// D_hyd = √(4A/π), any consistent length unit.
pub fn hydraulic_diameter(area: f64) -> f64 {
    equivalent_diameter(area)
}

/// Re = u·D/ν with u in m/s, D in m and ν in m²/s.
pub fn reynolds(speed: f64, diameter_m: f64, kinematic_viscosity: f64) -> f64 {
    speed * diameter_m / kinematic_viscosity
}

/// One labelled cross-section of one image plane with its flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelSection {
    /// z slice index
    pub plane: usize,
    pub plane_z_um: f64,
    pub label: u32,
    pub area_um2: f64,
    pub dhyd_um: f64,
    /// Mean speed over the channel's pixels, m/s.
    pub u_mean: f64,
    pub re: f64,
}

/// Per plane, per label: area, hydraulic diameter, mean speed and Reynolds
/// number, in (plane, label) order.
pub fn channel_re(field: &VoxelFlowField, lps: &LabeledPoreSpace, props: &FluidProps) -> Result<Vec<ChannelSection>, FlowError> {
    let d = field.dims;
    if lps.dims() != d {
        return Err(FlowError::Mismatch("flow field and labels differ in size".into()));
    }
    let plane_len = d.plane_len();
    let labels = lps.labels();
    let mut speed_sum: Vec<BTreeMap<u32, f64>> = (0..d.nz)
        .into_par_iter()
        .map(|z| {
            let mut m = BTreeMap::new();
            for k in z * plane_len..(z + 1) * plane_len {
                if labels[k] != 0 {
                    *m.entry(labels[k]).or_insert(0.0) += field.speed(k);
                }
            }
            m
        })
        .collect();
    Ok(plane_channels(lps)
        .into_iter()
        .map(|c| {
            let u = speed_sum[c.slice].remove(&c.label).unwrap_or(0.0) / c.pixels as f64;
            ChannelSection {
                plane: c.slice,
                plane_z_um: (c.slice as f64 + 0.5) * field.voxel_size,
                label: c.label,
                area_um2: c.area_um2,
                dhyd_um: c.diameter_um,
                u_mean: u,
                re: reynolds(u, c.diameter_um * UM, props.kinematic_viscosity),
            }
        })
        .collect())
}

/// `plane_z_um,label,area_um2,dhyd_um,u_mean,re`
pub fn channel_csv(sections: &[ChannelSection]) -> String {
    let mut s = String::from("plane_z_um,label,area_um2,dhyd_um,u_mean,re\n");
    for c in sections {
        s.push_str(&format!("{},{},{},{},{},{}\n", c.plane_z_um, c.label, c.area_um2, c.dhyd_um, c.u_mean, c.re));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionFlow {
    pub section: usize,
    pub z_min_um: f64,
    pub z_max_um: f64,
    /// Channel elements averaged, each weighted equally.
    pub velocity: Summary,
    pub re: Summary,
}

/// Averages channel elements whose plane falls within each z section.
pub fn sectional_flow_stats(sections: &[ChannelSection], sectioning: &Sectioning) -> Vec<SectionFlow> {
    sectioning
        .bounds()
        .into_iter()
        .map(|b| {
            let inside: Vec<&ChannelSection> =
                sections.iter().filter(|c| c.plane >= b.first_slice && c.plane < b.end_slice).collect();
            let u: Vec<f64> = inside.iter().map(|c| c.u_mean).collect();
            let re: Vec<f64> = inside.iter().map(|c| c.re).collect();
            SectionFlow { section: b.index, z_min_um: b.z_min_um, z_max_um: b.z_max_um, velocity: summarize(&u), re: summarize(&re) }
        })
        .collect()
}

/// `section,z_min_um,z_max_um,n,u_mean,u_sd,re_mean,re_sd`
pub fn sectional_flow_csv(rows: &[SectionFlow]) -> String {
    let mut s = String::from("section,z_min_um,z_max_um,n,u_mean,u_sd,re_mean,re_sd\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.section, r.z_min_um, r.z_max_um, r.re.n, r.velocity.mean, r.velocity.sd, r.re.mean, r.re.sd
        ));
    }
    s
}
