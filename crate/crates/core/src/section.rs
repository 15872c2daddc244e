//! Partition of the flow axis (z) into equal-length sections.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SectionError {
    #[error("section length {section_um} µm is thinner than one voxel ({voxel_um} µm)")]
    SectionTooThin { section_um: f64, voxel_um: f64 },
}

/// Maps z-slices onto `⌊Lz / section_length⌋` sections; the last section
/// absorbs the remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct Sectioning {
    nz: usize,
    voxel_size: f64,
    section_length: f64,
    count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionBounds {
    pub index: usize,
    pub first_slice: usize,
    /// exclusive
    pub end_slice: usize,
    pub z_min_um: f64,
    pub z_max_um: f64,
}

impl Sectioning {
    pub fn new(nz: usize, voxel_size: f64, section_length: f64) -> Result<Self, SectionError> {
        if !(section_length >= voxel_size) {
            return Err(SectionError::SectionTooThin {
                section_um: section_length,
                voxel_um: voxel_size,
            });
        }
        let lz = nz as f64 * voxel_size;
        let count = ((lz / section_length) * (1.0 + 1e-12)).floor().max(1.0) as usize;
        Ok(Sectioning { nz, voxel_size, section_length, count })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn section_length(&self) -> f64 {
        self.section_length
    }

    pub fn section_of_slice(&self, z: usize) -> usize {
        let s = (z as f64 * self.voxel_size / self.section_length * (1.0 + 1e-12)).floor() as usize;
        s.min(self.count - 1)
    }

    /// Section containing the physical coordinate `z_um`, or `None` outside
    /// the volume.
    pub fn section_of_z(&self, z_um: f64) -> Option<usize> {
        if !(z_um >= 0.0) || z_um > self.nz as f64 * self.voxel_size {
            return None;
        }
        let slice = ((z_um / self.voxel_size).floor() as usize).min(self.nz.saturating_sub(1));
        Some(self.section_of_slice(slice))
    }

    pub fn bounds(&self) -> Vec<SectionBounds> {
        let mut out: Vec<SectionBounds> = Vec::with_capacity(self.count);
        for z in 0..self.nz {
            let s = self.section_of_slice(z);
            match out.last_mut() {
                Some(b) if b.index == s => {
                    b.end_slice = z + 1;
                    b.z_max_um = (z + 1) as f64 * self.voxel_size;
                }
                _ => out.push(SectionBounds {
                    index: s,
                    first_slice: z,
                    end_slice: z + 1,
                    z_min_um: z as f64 * self.voxel_size,
                    z_max_um: (z + 1) as f64 * self.voxel_size,
                }),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remainder_goes_to_last_section() {
        // 70 slices of 6.25 µm = 437.5 µm, 100 µm sections -> 4 sections
        let s = Sectioning::new(70, 6.25, 100.0).unwrap();
        assert_eq!(s.count(), 4);
        let b = s.bounds();
        assert_eq!(b.len(), 4);
        assert_eq!(b[0].first_slice, 0);
        assert_eq!(b[0].end_slice, 16);
        assert_eq!(b[3].end_slice, 70);
        assert_eq!(b.iter().map(|b| b.end_slice - b.first_slice).sum::<usize>(), 70);
    }

    #[test]
    fn exact_multiple() {
        let s = Sectioning::new(64, 6.25, 50.0).unwrap();
        assert_eq!(s.count(), 8);
        assert!(s.bounds().iter().all(|b| b.end_slice - b.first_slice == 8));
        assert_eq!(s.section_of_z(399.0), Some(7));
        assert_eq!(s.section_of_z(-1.0), None);
    }

    #[test]
    fn too_thin() {
        assert!(matches!(
            Sectioning::new(10, 6.25, 3.0),
            Err(SectionError::SectionTooThin { .. })
        ));
    }

    #[test]
    fn longer_than_volume_is_single_section() {
        let s = Sectioning::new(10, 1.0, 100.0).unwrap();
        assert_eq!(s.count(), 1);
        assert_eq!(s.bounds()[0].end_slice, 10);
    }
}
