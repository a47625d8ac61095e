//! AM, erosion and accretion feasibility predicates.

use crate::error::{Error, Result};
use crate::grid::{NoMask, VirtualEmpty, Voxel, VoxelGrid, WithVoxel};
use crate::stability::{self, LocalStability, StabilityMode};
use crate::tools::{self, SmOrientation, ToolSpec};

/// An AM deposit at `v` is feasible when `v` is on the base layer or has a
/// solid support neighbour one layer down, and nothing solid is above its
/// layer. Voxels in `mask` count as empty.
pub fn is_am_feasible<M: VirtualEmpty>(grid: &VoxelGrid, v: Voxel, mask: &M) -> Result<bool> {
    if !grid.in_bounds(v) {
        return Err(Error::OutOfBounds {
            voxel: v,
            dims: grid.dims().as_array(),
        });
    }
    if grid.is_solid_masked(v, mask) {
        return Err(Error::Contract(format!(
            "AM feasibility queried at solid voxel {v}"
        )));
    }
    Ok(am_feasible_unchecked(grid, v, mask))
}

#[inline]
pub(crate) fn am_feasible_unchecked<M: VirtualEmpty>(grid: &VoxelGrid, v: Voxel, mask: &M) -> bool {
    (v.k == 0 || grid.has_support(v, mask)) && !tools::am_collides(grid, v, mask)
}

/// Tool, stability settings and scratch space shared by the feasibility
/// queries of one planning run.
#[derive(Clone, Debug)]
pub struct FeasibilityContext {
    pub tool: ToolSpec,
    pub stability: StabilityMode,
    local: LocalStability,
}

impl FeasibilityContext {
    pub fn new(tool: ToolSpec, delta: i32, stability: StabilityMode) -> Result<Self> {
        Ok(FeasibilityContext {
            tool,
            stability,
            local: LocalStability::new(delta)?,
        })
    }

    pub fn delta(&self) -> i32 {
        self.local.delta()
    }

    /// Erosion of the top-layer voxel `v` with the voxels of `lambda` already
    /// treated as removed.
    pub fn is_erosion_feasible<M: VirtualEmpty>(
        &mut self,
        grid: &VoxelGrid,
        v: Voxel,
        lambda: &M,
    ) -> Result<bool> {
        if !grid.is_solid_masked(v, lambda) {
            return Err(Error::Contract(format!(
                "erosion queried at non-solid voxel {v}"
            )));
        }
        if grid.top_layer() != Some(v.k as usize) {
            return Err(Error::Contract(format!(
                "erosion queried below the top layer at {v}"
            )));
        }
        Ok(self.erosion_feasible_unchecked(grid, v, lambda))
    }

    pub(crate) fn erosion_feasible_unchecked<M: VirtualEmpty>(
        &mut self,
        grid: &VoxelGrid,
        v: Voxel,
        lambda: &M,
    ) -> bool {
        let without_v = WithVoxel {
            base: lambda,
            lin: grid.lin(v),
            voxel: v,
        };
        if !am_feasible_unchecked(grid, v, &without_v) {
            return false;
        }
        match self.stability {
            StabilityMode::Local => self.local.remains_stable(grid, v, lambda),
            StabilityMode::Oracle => stability::stable_without(grid, v, lambda),
        }
    }

    /// First collision-free SM orientation for accreting the empty voxel `v`,
    /// provided `v` touches an unmasked solid voxel.
    ///
    /// The solid-neighbour test honours `lambda`; the collision test runs on
    /// the real grid, since the masked voxels are still present when the
    /// matching SM operation executes.
    pub fn is_accretion_feasible<M: VirtualEmpty>(
        &self,
        grid: &VoxelGrid,
        v: Voxel,
        lambda: &M,
    ) -> Option<SmOrientation> {
        if !grid.in_bounds(v) || grid.is_solid(v) || !grid.has_solid_neighbor(v, lambda) {
            return None;
        }
        tools::first_accessible(grid, v, self.tool.sm_length, &NoMask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{NoMask, VoxelMask};

    fn ctx() -> FeasibilityContext {
        FeasibilityContext::new(ToolSpec::new(2).unwrap(), 3, StabilityMode::Local).unwrap()
    }

    #[test]
    fn base_layer_always_supported() {
        let g = VoxelGrid::new(4, 4, 4).unwrap();
        for i in 0..4 {
            assert!(is_am_feasible(&g, Voxel::new(i, 1, 0), &NoMask).unwrap());
        }
    }

    #[test]
    fn directly_above_base_voxel() {
        let mut g = VoxelGrid::new(3, 3, 3).unwrap();
        g.set(Voxel::new(1, 1, 0)).unwrap();
        assert!(is_am_feasible(&g, Voxel::new(1, 1, 1), &NoMask).unwrap());
    }

    #[test]
    fn vertex_diagonal_does_not_support() {
        let mut g = VoxelGrid::new(3, 3, 3).unwrap();
        g.set(Voxel::new(1, 1, 0)).unwrap();
        assert!(!is_am_feasible(&g, Voxel::new(0, 0, 1), &NoMask).unwrap());
        // edge diagonal does
        assert!(is_am_feasible(&g, Voxel::new(0, 1, 1), &NoMask).unwrap());
    }

    #[test]
    fn am_on_solid_is_contract_violation() {
        let mut g = VoxelGrid::new(3, 3, 3).unwrap();
        g.set(Voxel::new(1, 1, 0)).unwrap();
        assert!(matches!(
            is_am_feasible(&g, Voxel::new(1, 1, 0), &NoMask),
            Err(Error::Contract(_))
        ));
        let mask = VoxelMask::from_voxels(&g, [Voxel::new(1, 1, 0)]);
        assert!(is_am_feasible(&g, Voxel::new(1, 1, 0), &mask).unwrap());
    }

    #[test]
    fn single_base_voxel_erodes() {
        let mut g = VoxelGrid::new(3, 3, 3).unwrap();
        g.set(Voxel::new(1, 1, 0)).unwrap();
        assert!(ctx()
            .is_erosion_feasible(&g, Voxel::new(1, 1, 0), &NoMask)
            .unwrap());
    }

    #[test]
    fn column_top_erodes_middle_rejected() {
        let mut g = VoxelGrid::new(3, 3, 4).unwrap();
        for k in 0..3 {
            g.set(Voxel::new(1, 1, k)).unwrap();
        }
        let mut c = ctx();
        assert!(c
            .is_erosion_feasible(&g, Voxel::new(1, 1, 2), &NoMask)
            .unwrap());
        assert!(matches!(
            c.is_erosion_feasible(&g, Voxel::new(1, 1, 1), &NoMask),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn unsupported_overhang_voxel_not_erodable() {
        // pillar at x=1, arm at k=2 reaching x=3; (3,1,2) has nothing below
        let mut g = VoxelGrid::new(5, 3, 4).unwrap();
        for k in 0..3 {
            g.set(Voxel::new(1, 1, k)).unwrap();
        }
        g.set(Voxel::new(2, 1, 2)).unwrap();
        g.set(Voxel::new(3, 1, 2)).unwrap();
        let mut c = ctx();
        assert!(!c
            .is_erosion_feasible(&g, Voxel::new(3, 1, 2), &NoMask)
            .unwrap());
        // (2,1,2) is supported by (1,1,1) but removing it strands (3,1,2)
        assert!(!c
            .is_erosion_feasible(&g, Voxel::new(2, 1, 2), &NoMask)
            .unwrap());
    }

    #[test]
    fn accretion_needs_unmasked_neighbor() {
        let mut g = VoxelGrid::new(5, 5, 5).unwrap();
        let c = ctx();
        assert_eq!(
            c.is_accretion_feasible(&g, Voxel::new(2, 2, 2), &NoMask),
            None
        );
        g.set(Voxel::new(2, 2, 0)).unwrap();
        assert_eq!(
            c.is_accretion_feasible(&g, Voxel::new(3, 2, 0), &NoMask),
            Some(SmOrientation::NegZ)
        );
        let mask = VoxelMask::from_voxels(&g, [Voxel::new(2, 2, 0)]);
        assert_eq!(
            c.is_accretion_feasible(&g, Voxel::new(3, 2, 0), &mask),
            None
        );
    }

    #[test]
    fn accretion_collision_ignores_mask() {
        // solid above the candidate stays an obstacle even when masked
        let mut g = VoxelGrid::new(5, 5, 5).unwrap();
        g.set(Voxel::new(2, 2, 0)).unwrap();
        g.set(Voxel::new(2, 2, 1)).unwrap();
        g.set(Voxel::new(3, 2, 1)).unwrap();
        let c = ctx();
        let v = Voxel::new(3, 2, 0);
        let mask = VoxelMask::from_voxels(&g, [Voxel::new(3, 2, 1)]);
        let o = c.is_accretion_feasible(&g, v, &mask);
        assert_ne!(o, Some(SmOrientation::NegZ));
    }
}
