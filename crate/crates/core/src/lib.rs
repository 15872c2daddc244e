//! Analysis chain for voxelised porous media.
//!
//! The crate is organised bottom-up along the pipeline:
//!
//! * [`voxel`] ingests grayscale volumes, binarises and cleans the pore space.
//! * [`poreseg`] computes the Euclidean distance map, maximal inscribed
//!   spheres and the labelled pore families with their architectural stats.
//! * [`pnm`] turns the labels into a pore network, solves the pressure field
//!   and derives permeability and particle tortuosity.
//! * [`flowfield`] imports nodal CFD exports and computes channel Reynolds
//!   numbers.
//! * [`streamline`] handles hydraulic tortuosity, orientation and Von Mises
//!   fits of exported streamlines.
//! * [`regime`] fits Darcy and Forchheimer laws and locates the transition.

pub mod flowfield;
pub mod pnm;
pub mod poreseg;
pub mod regime;
pub mod section;
pub mod stats;
pub mod streamline;
pub mod svg;
pub mod voxel;

/// One Darcy expressed in square metres.
pub const DARCY_M2: f64 = 9.869233e-13;

/// Micrometres to metres.
pub const UM: f64 = 1e-6;

pub fn m2_to_darcy(k_m2: f64) -> f64 {
    k_m2 / DARCY_M2
}

pub fn darcy_to_m2(k_darcy: f64) -> f64 {
    k_darcy * DARCY_M2
}

/// Constant fluid properties.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FluidProps {
    /// kg/m³
    pub density: f64,
    /// Pa·s
    pub dynamic_viscosity: f64,
    /// m²/s, quoted independently of µ/ρ.
    pub kinematic_viscosity: f64,
}

impl Default for FluidProps {
    /// Water near 25 °C.
    fn default() -> Self {
        FluidProps {
            density: 997.0,
            dynamic_viscosity: 8.8871e-4,
            kinematic_viscosity: 8.93e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FluidPropsError {
    #[error("fluid property `{0}` must be positive and finite")]
    NonPositive(&'static str),
    #[error("kinematic viscosity {nu} differs from µ/ρ = {derived} by more than 0.5%")]
    Inconsistent { nu: f64, derived: f64 },
}

impl FluidProps {
    pub fn validate(&self) -> Result<(), FluidPropsError> {
        for (name, v) in [
            ("density", self.density),
            ("dynamic_viscosity", self.dynamic_viscosity),
            ("kinematic_viscosity", self.kinematic_viscosity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FluidPropsError::NonPositive(name));
            }
        }
        let derived = self.dynamic_viscosity / self.density;
        if ((self.kinematic_viscosity - derived) / derived).abs() > 0.005 {
            return Err(FluidPropsError::Inconsistent {
                nu: self.kinematic_viscosity,
                derived,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_water_is_consistent() {
        // 8.8871e-4 / 997 = 8.914e-7, within 0.5% of 8.93e-7
        FluidProps::default().validate().unwrap();
    }

    #[test]
    fn darcy_round_trip() {
        for k in [1e-18, 2.7e-11, 3.3e-9] {
            let back = darcy_to_m2(m2_to_darcy(k));
            assert!(((back - k) / k).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_inconsistent_props() {
        let p = FluidProps { kinematic_viscosity: 1e-6, ..FluidProps::default() };
        assert!(matches!(p.validate(), Err(FluidPropsError::Inconsistent { .. })));
        let p = FluidProps { density: 0.0, ..FluidProps::default() };
        assert_eq!(p.validate(), Err(FluidPropsError::NonPositive("density")));
    }
}
