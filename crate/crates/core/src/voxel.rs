//! Volume ingestion, binarisation, pore-space cleaning and porosity.

use std::collections::VecDeque;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::section::{SectionError, Sectioning};

#[derive(Debug, thiserror::Error)]
pub enum VoxelError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("missing sidecar {0}")]
    MissingSidecar(PathBuf),
    #[error("invalid sidecar field `{field}`: {reason}")]
    InvalidSidecar { field: &'static str, reason: String },
    #[error("volume holds {actual} values but dims require {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("inconsistent slice stack: {0}")]
    InconsistentSlices(String),
    #[error("malformed PGM {path}: {reason}")]
    MalformedPgm { path: PathBuf, reason: String },
    #[error("invalid volume: {0}")]
    Invalid(String),
    #[error("no pore component spans the inlet (z=0) to the outlet (z=nz-1)")]
    EmptyPoreSpace,
    #[error(transparent)]
    Section(#[from] SectionError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> VoxelError + '_ {
    move |source| VoxelError::Io { path: path.to_path_buf(), source }
}

/// Grid extent in voxels. Linear index is `x + nx·(y + ny·z)` (z-major slices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane_len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        let x = i % self.nx;
        let y = (i / self.nx) % self.ny;
        let z = i / self.plane_len();
        (x, y, z)
    }

    /// Index of `(x,y,z) + (dx,dy,dz)` if it lies inside the grid.
    #[inline]
    pub fn offset(&self, x: usize, y: usize, z: usize, d: (i64, i64, i64)) -> Option<usize> {
        let xx = x as i64 + d.0;
        let yy = y as i64 + d.1;
        let zz = z as i64 + d.2;
        if xx < 0 || yy < 0 || zz < 0 {
            return None;
        }
        let (xx, yy, zz) = (xx as usize, yy as usize, zz as usize);
        if xx >= self.nx || yy >= self.ny || zz >= self.nz {
            return None;
        }
        Some(self.index(xx, yy, zz))
    }

    fn as_array(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }
}

/// Physical centre of voxel `(x,y,z)` in µm.
#[inline]
pub fn voxel_centre(x: usize, y: usize, z: usize, voxel_size: f64) -> [f64; 3] {
    [
        (x as f64 + 0.5) * voxel_size,
        (y as f64 + 0.5) * voxel_size,
        (z as f64 + 0.5) * voxel_size,
    ]
}

/// Neighbourhood used for connected components and adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum Connectivity {
    Six,
    TwentySix,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Option<Self> {
        match n {
            6 => Some(Connectivity::Six),
            26 => Some(Connectivity::TwentySix),
            _ => None,
        }
    }

    pub fn offsets(self) -> Vec<(i64, i64, i64)> {
        let mut v = Vec::new();
        for dz in -1..=1i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let manhattan = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Six => manhattan == 1,
                        Connectivity::TwentySix => manhattan > 0,
                    };
                    if keep {
                        v.push((dx, dy, dz));
                    }
                }
            }
        }
        v
    }
}

/// The 13 "forward" offsets of the 26-neighbourhood; each unordered
/// neighbour pair is visited once when scanning these from every voxel.
pub fn forward_offsets_26() -> Vec<(i64, i64, i64)> {
    Connectivity::TwentySix
        .offsets()
        .into_iter()
        .filter(|&(dx, dy, dz)| (dz, dy, dx) > (0, 0, 0))
        .collect()
}

/// 8-bit grayscale volume.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dims: Dims,
    voxel_size: f64,
    data: Vec<u8>,
}

impl VoxelGrid {
    pub fn new(dims: Dims, voxel_size: f64, data: Vec<u8>) -> Result<Self, VoxelError> {
        check_geometry(dims, voxel_size)?;
        if data.len() != dims.len() {
            return Err(VoxelError::SizeMismatch { expected: dims.len(), actual: data.len() });
        }
        Ok(VoxelGrid { dims, voxel_size, data })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u8 {
        self.data[self.dims.index(x, y, z)]
    }
}

fn check_geometry(dims: Dims, voxel_size: f64) -> Result<(), VoxelError> {
    if dims.nx == 0 || dims.ny == 0 || dims.nz == 0 {
        return Err(VoxelError::Invalid(format!("dims must be ≥ 1, got {:?}", dims.as_array())));
    }
    if !(voxel_size > 0.0 && voxel_size.is_finite()) {
        return Err(VoxelError::Invalid(format!("voxel size must be > 0, got {voxel_size}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeFormat {
    /// `<name>.raw` with a `<name>.json` sidecar.
    RawSidecar,
    /// Directory of `slice_%04d.pgm` (binary P5).
    PgmStack,
}

/// Raw-volume sidecar. `dtype` is `"u8"` unless stated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sidecar {
    pub dims: [usize; 3],
    pub voxel_size_um: f64,
    pub dtype: String,
}

pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

pub fn read_sidecar(raw: &Path) -> Result<Sidecar, VoxelError> {
    let path = sidecar_path(raw);
    if !path.exists() {
        return Err(VoxelError::MissingSidecar(path));
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
        VoxelError::InvalidSidecar { field: "<document>", reason: e.to_string() }
    })?;
    let dims_v = value.get("dims").ok_or(VoxelError::InvalidSidecar {
        field: "dims",
        reason: "missing".into(),
    })?;
    let dims: Vec<usize> = dims_v
        .as_array()
        .filter(|a| a.len() == 3)
        .and_then(|a| a.iter().map(|d| d.as_u64().map(|d| d as usize)).collect())
        .ok_or(VoxelError::InvalidSidecar {
            field: "dims",
            reason: format!("expected three non-negative integers, got {dims_v}"),
        })?;
    if dims.iter().any(|&d| d == 0) {
        return Err(VoxelError::InvalidSidecar { field: "dims", reason: "zero extent".into() });
    }
    let vs = value
        .get("voxel_size_um")
        .and_then(|v| v.as_f64())
        .filter(|v| *v > 0.0 && v.is_finite())
        .ok_or(VoxelError::InvalidSidecar {
            field: "voxel_size_um",
            reason: "missing or not a positive number".into(),
        })?;
    let dtype = match value.get("dtype") {
        None => "u8".to_string(),
        Some(v) => v
            .as_str()
            .ok_or(VoxelError::InvalidSidecar { field: "dtype", reason: "not a string".into() })?
            .to_string(),
    };
    Ok(Sidecar { dims: [dims[0], dims[1], dims[2]], voxel_size_um: vs, dtype })
}

pub fn write_sidecar(raw: &Path, sidecar: &Sidecar) -> Result<(), VoxelError> {
    let path = sidecar_path(raw);
    let mut text = serde_json::to_string_pretty(sidecar).expect("sidecar serialises");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))
}

/// Reads `path` (`.raw`) and its JSON sidecar.
pub fn load_raw(path: &Path) -> Result<VoxelGrid, VoxelError> {
    let side = read_sidecar(path)?;
    if side.dtype != "u8" {
        return Err(VoxelError::InvalidSidecar {
            field: "dtype",
            reason: format!("expected u8 grayscale, got {}", side.dtype),
        });
    }
    let bytes = fs::read(path).map_err(io_err(path))?;
    let dims = Dims::new(side.dims[0], side.dims[1], side.dims[2]);
    VoxelGrid::new(dims, side.voxel_size_um, bytes)
}

pub fn save_raw(grid: &VoxelGrid, path: &Path) -> Result<(), VoxelError> {
    fs::write(path, &grid.data).map_err(io_err(path))?;
    let d = grid.dims;
    write_sidecar(
        path,
        &Sidecar { dims: d.as_array(), voxel_size_um: grid.voxel_size, dtype: "u8".into() },
    )
}

pub fn pgm_slice_name(index: usize) -> String {
    format!("slice_{index:04}.pgm")
}

fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<u8>), VoxelError> {
    let bad = |reason: &str| VoxelError::MalformedPgm { path: path.to_path_buf(), reason: reason.into() };
    let mut pos = 0usize;
    let mut fields: Vec<String> = Vec::with_capacity(4);
    while fields.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() {
            match bytes[pos] {
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(bad("only binary P5 is supported"));
    }
    let parse = |s: &str, what: &str| s.parse::<usize>().map_err(|_| bad(&format!("bad {what}")));
    let w = parse(&fields[1], "width")?;
    let h = parse(&fields[2], "height")?;
    let maxval = parse(&fields[3], "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(bad("maxval must be in 1..=255"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() != w * h {
        return Err(bad(&format!("raster holds {} bytes, expected {}", raster.len(), w * h)));
    }
    let data = if maxval == 255 {
        raster.to_vec()
    } else {
        raster.iter().map(|&v| ((v as usize * 255 + maxval / 2) / maxval) as u8).collect()
    };
    Ok((w, h, data))
}

/// Reads `slice_%04d.pgm` files from `dir`. Indices must be contiguous; the
/// first index found becomes z = 0.
pub fn load_pgm_stack(dir: &Path, voxel_size: f64) -> Result<VoxelGrid, VoxelError> {
    let mut indices: Vec<(usize, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(num) = name.strip_prefix("slice_").and_then(|s| s.strip_suffix(".pgm")) {
            if let Ok(i) = num.parse::<usize>() {
                indices.push((i, entry.path()));
            }
        }
    }
    indices.sort();
    if indices.is_empty() {
        return Err(VoxelError::InconsistentSlices(format!("no slice_*.pgm in {}", dir.display())));
    }
    for w in indices.windows(2) {
        if w[1].0 != w[0].0 + 1 {
            return Err(VoxelError::InconsistentSlices(format!(
                "slice index gap between {} and {}",
                w[0].0, w[1].0
            )));
        }
    }
    let mut data = Vec::new();
    let mut shape: Option<(usize, usize)> = None;
    for (_, path) in &indices {
        let bytes = fs::read(path).map_err(io_err(path))?;
        let (w, h, slice) = parse_pgm(path, &bytes)?;
        match shape {
            None => shape = Some((w, h)),
            Some(s) if s != (w, h) => {
                return Err(VoxelError::InconsistentSlices(format!(
                    "{} is {}x{}, expected {}x{}",
                    path.display(),
                    w,
                    h,
                    s.0,
                    s.1
                )))
            }
            _ => {}
        }
        data.extend_from_slice(&slice);
    }
    let (w, h) = shape.expect("at least one slice");
    VoxelGrid::new(Dims::new(w, h, indices.len()), voxel_size, data)
}

pub fn save_pgm_stack(grid: &VoxelGrid, dir: &Path) -> Result<(), VoxelError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let d = grid.dims;
    for z in 0..d.nz {
        let path = dir.join(pgm_slice_name(z));
        let mut f = fs::File::create(&path).map_err(io_err(&path))?;
        let plane = &grid.data[z * d.plane_len()..(z + 1) * d.plane_len()];
        write!(f, "P5\n{} {}\n255\n", d.nx, d.ny)
            .and_then(|_| f.write_all(plane))
            .map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn load_volume(path: &Path, format: VolumeFormat, voxel_size: f64) -> Result<VoxelGrid, VoxelError> {
    match format {
        VolumeFormat::RawSidecar => load_raw(path),
        VolumeFormat::PgmStack => load_pgm_stack(path, voxel_size),
    }
}

/// Which side of the threshold is void.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// pore iff value < threshold
    #[default]
    DarkIsPore,
    /// pore iff value ≥ threshold
    BrightIsPore,
}

/// Boolean pore/solid volume (true = fluid).
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryPoreMask {
    dims: Dims,
    voxel_size: f64,
    pore: Vec<bool>,
}

impl BinaryPoreMask {
    pub fn new(dims: Dims, voxel_size: f64, pore: Vec<bool>) -> Result<Self, VoxelError> {
        check_geometry(dims, voxel_size)?;
        if pore.len() != dims.len() {
            return Err(VoxelError::SizeMismatch { expected: dims.len(), actual: pore.len() });
        }
        Ok(BinaryPoreMask { dims, voxel_size, pore })
    }

    /// Builds a mask by evaluating `f(x, y, z)` at every voxel.
    pub fn from_fn(dims: Dims, voxel_size: f64, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut pore = Vec::with_capacity(dims.len());
        for z in 0..dims.nz {
            for y in 0..dims.ny {
                for x in 0..dims.nx {
                    pore.push(f(x, y, z));
                }
            }
        }
        BinaryPoreMask::new(dims, voxel_size, pore).expect("valid geometry")
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn pore(&self) -> &[bool] {
        &self.pore
    }

    pub fn is_pore(&self, x: usize, y: usize, z: usize) -> bool {
        self.pore[self.dims.index(x, y, z)]
    }

    pub fn pore_count(&self) -> usize {
        self.pore.iter().filter(|&&p| p).count()
    }

    pub fn porosity(&self) -> f64 {
        self.pore_count() as f64 / self.dims.len() as f64
    }

    pub fn slice_pore_count(&self, z: usize) -> usize {
        let n = self.dims.plane_len();
        self.pore[z * n..(z + 1) * n].iter().filter(|&&p| p).count()
    }

    /// Renders pores as 0 and solid as 255.
    pub fn to_grid(&self) -> VoxelGrid {
        let data = self.pore.iter().map(|&p| if p { 0 } else { 255 }).collect();
        VoxelGrid { dims: self.dims, voxel_size: self.voxel_size, data }
    }

    /// Writes the mask as u8 (1 = pore, 0 = solid) with a sidecar.
    pub fn save(&self, path: &Path) -> Result<(), VoxelError> {
        let bytes: Vec<u8> = self.pore.iter().map(|&p| p as u8).collect();
        fs::write(path, bytes).map_err(io_err(path))?;
        write_sidecar(
            path,
            &Sidecar { dims: self.dims.as_array(), voxel_size_um: self.voxel_size, dtype: "mask_u8".into() },
        )
    }

    pub fn load(path: &Path) -> Result<Self, VoxelError> {
        let side = read_sidecar(path)?;
        if side.dtype != "mask_u8" {
            return Err(VoxelError::InvalidSidecar {
                field: "dtype",
                reason: format!("expected mask_u8, got {}", side.dtype),
            });
        }
        let bytes = fs::read(path).map_err(io_err(path))?;
        let dims = Dims::new(side.dims[0], side.dims[1], side.dims[2]);
        BinaryPoreMask::new(dims, side.voxel_size_um, bytes.into_iter().map(|b| b != 0).collect())
    }
}

pub fn binarise(grid: &VoxelGrid, threshold: u8) -> BinaryPoreMask {
    binarise_with(grid, threshold, Polarity::DarkIsPore)
}

pub fn binarise_with(grid: &VoxelGrid, threshold: u8, polarity: Polarity) -> BinaryPoreMask {
    let pore = grid
        .data
        .iter()
        .map(|&v| match polarity {
            Polarity::DarkIsPore => v < threshold,
            Polarity::BrightIsPore => v >= threshold,
        })
        .collect();
    BinaryPoreMask { dims: grid.dims, voxel_size: grid.voxel_size, pore }
}

/// Connected components of the pore space. Returns per-voxel component id
/// (0 = solid, ids from 1 in scan order) and component sizes (index 0 unused).
pub fn pore_components(mask: &BinaryPoreMask, connectivity: Connectivity) -> (Vec<u32>, Vec<usize>) {
    let d = mask.dims;
    let offsets = connectivity.offsets();
    let mut comp = vec![0u32; d.len()];
    let mut sizes = vec![0usize];
    let mut queue = VecDeque::new();
    for start in 0..d.len() {
        if !mask.pore[start] || comp[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32;
        let mut size = 0usize;
        comp[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y, z) = d.coords(i);
            for &o in &offsets {
                if let Some(j) = d.offset(x, y, z, o) {
                    if mask.pore[j] && comp[j] == 0 {
                        comp[j] = id;
                        queue.push_back(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    (comp, sizes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CleanReport {
    pub components_found: usize,
    pub components_removed: usize,
    pub components_small: usize,
    pub components_non_spanning: usize,
    pub voxels_removed: usize,
    pub porosity_before: f64,
    pub porosity_after: f64,
}

/// Keeps pore components that have at least `min_component_voxels` voxels
/// and touch both the inlet (z = 0) and outlet (z = nz − 1) faces.
pub fn clean_pore_space(
    mask: &BinaryPoreMask,
    min_component_voxels: usize,
    connectivity: Connectivity,
) -> Result<(BinaryPoreMask, CleanReport), VoxelError> {
    let d = mask.dims;
    let (comp, sizes) = pore_components(mask, connectivity);
    let n_comp = sizes.len() - 1;
    let mut at_inlet = vec![false; sizes.len()];
    let mut at_outlet = vec![false; sizes.len()];
    for i in 0..d.plane_len() {
        at_inlet[comp[i] as usize] = true;
        at_outlet[comp[(d.nz - 1) * d.plane_len() + i] as usize] = true;
    }
    let mut keep = vec![false; sizes.len()];
    let (mut small, mut non_spanning) = (0, 0);
    for c in 1..sizes.len() {
        let big = sizes[c] >= min_component_voxels;
        let spans = at_inlet[c] && at_outlet[c];
        if !big {
            small += 1;
        } else if !spans {
            non_spanning += 1;
        }
        keep[c] = big && spans;
    }
    if !keep.iter().any(|&k| k) {
        return Err(VoxelError::EmptyPoreSpace);
    }
    let pore: Vec<bool> = comp.iter().map(|&c| c != 0 && keep[c as usize]).collect();
    let cleaned = BinaryPoreMask { dims: d, voxel_size: mask.voxel_size, pore };
    let before = mask.pore_count();
    let after = cleaned.pore_count();
    let report = CleanReport {
        components_found: n_comp,
        components_removed: small + non_spanning,
        components_small: small,
        components_non_spanning: non_spanning,
        voxels_removed: before - after,
        porosity_before: mask.porosity(),
        porosity_after: cleaned.porosity(),
    };
    Ok((cleaned, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionPorosity {
    pub section_index: usize,
    pub z_min_um: f64,
    pub z_max_um: f64,
    pub pore_voxels: usize,
    pub total_voxels: usize,
    pub porosity: f64,
}

pub fn sectional_porosity(mask: &BinaryPoreMask, section_length: f64) -> Result<Vec<SectionPorosity>, VoxelError> {
    let sec = Sectioning::new(mask.dims.nz, mask.voxel_size, section_length)?;
    Ok(sec
        .bounds()
        .into_iter()
        .map(|b| {
            let pore_voxels: usize = (b.first_slice..b.end_slice).map(|z| mask.slice_pore_count(z)).sum();
            let total_voxels = (b.end_slice - b.first_slice) * mask.dims.plane_len();
            SectionPorosity {
                section_index: b.index,
                z_min_um: b.z_min_um,
                z_max_um: b.z_max_um,
                pore_voxels,
                total_voxels,
                porosity: pore_voxels as f64 / total_voxels as f64,
            }
        })
        .collect())
}

/// `section_index,z_min_um,z_max_um,porosity`
pub fn porosity_csv(sections: &[SectionPorosity]) -> String {
    let mut s = String::from("section_index,z_min_um,z_max_um,porosity\n");
    for p in sections {
        s.push_str(&format!("{},{},{},{}\n", p.section_index, p.z_min_um, p.z_max_um, p.porosity));
    }
    s
}
