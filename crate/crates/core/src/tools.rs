//! Tool occupancy sets and collision queries.
//!
//! The AM tool deposits from above and occupies every voxel strictly above
//! the deposition height. The SM tool of length `L` approaches along one of
//! five axis directions; its occupancy set is the ray of voxels between the
//! tool tip and the workspace on the approach side, plus the half-space that
//! starts `L` voxels behind the tip (the holder). Neither set contains the
//! target voxel itself.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{VirtualEmpty, Voxel, VoxelGrid};

/// Direction of travel of the SM tool.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SmOrientation {
    #[serde(rename = "-z")]
    NegZ,
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
}

impl SmOrientation {
    /// Preference order used when several orientations are collision-free.
    pub const ALL: [SmOrientation; 5] = [
        SmOrientation::NegZ,
        SmOrientation::PosX,
        SmOrientation::NegX,
        SmOrientation::PosY,
        SmOrientation::NegY,
    ];

    /// Unit vector of the tool's travel direction.
    pub fn direction(self) -> [i32; 3] {
        match self {
            SmOrientation::NegZ => [0, 0, -1],
            SmOrientation::PosX => [1, 0, 0],
            SmOrientation::NegX => [-1, 0, 0],
            SmOrientation::PosY => [0, 1, 0],
            SmOrientation::NegY => [0, -1, 0],
        }
    }

    pub fn is_horizontal(self) -> bool {
        self != SmOrientation::NegZ
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SmOrientation::NegZ => "-z",
            SmOrientation::PosX => "+x",
            SmOrientation::NegX => "-x",
            SmOrientation::PosY => "+y",
            SmOrientation::NegY => "-y",
        }
    }
}

impl fmt::Display for SmOrientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SmOrientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SmOrientation::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown SM orientation {s:?}")))
    }
}

/// Tool parameters shared by the planner, the verifier and the emitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    /// SM tool length in voxels.
    pub sm_length: i32,
}

impl ToolSpec {
    pub fn new(sm_length: i32) -> Result<Self> {
        if sm_length < 2 {
            return Err(Error::InvalidArgument(format!(
                "SM tool length must be at least 2 voxels, got {sm_length}"
            )));
        }
        Ok(ToolSpec { sm_length })
    }
}

impl Default for ToolSpec {
    fn default() -> Self {
        ToolSpec { sm_length: 10 }
    }
}

/// True iff an unmasked solid voxel lies strictly above `v`'s layer.
pub fn am_collides<M: VirtualEmpty>(grid: &VoxelGrid, v: Voxel, mask: &M) -> bool {
    grid.max_unmasked_z(mask).is_some_and(|top| top > v.k)
}

/// True iff an unmasked solid voxel lies in the SM occupancy set of `v` for
/// `orient` and tool length `len`.
///
/// The half-space part is answered from the per-slab counts; the ray part is
/// a scan of at most `len - 1` cells, clipped by the row or column extent.
pub fn sm_collides<M: VirtualEmpty>(
    grid: &VoxelGrid,
    v: Voxel,
    orient: SmOrientation,
    len: i32,
    mask: &M,
) -> bool {
    let solid = |i: i32, j: i32, k: i32| grid.is_solid_masked(Voxel::new(i, j, k), mask);
    match orient {
        SmOrientation::NegZ => {
            if grid.max_unmasked_z(mask).is_some_and(|m| m >= v.k + len) {
                return true;
            }
            let top = grid.column_top(v.i, v.j).min(v.k + len - 1);
            (v.k + 1..=top).any(|k| solid(v.i, v.j, k))
        }
        SmOrientation::PosX => {
            if grid.min_unmasked_x(mask).is_some_and(|m| m <= v.i - len) {
                return true;
            }
            match grid.row_x_extent(v.j, v.k) {
                Some((lo, _)) => (lo.max(v.i - len + 1)..v.i).any(|i| solid(i, v.j, v.k)),
                None => false,
            }
        }
        SmOrientation::NegX => {
            if grid.max_unmasked_x(mask).is_some_and(|m| m >= v.i + len) {
                return true;
            }
            match grid.row_x_extent(v.j, v.k) {
                Some((_, hi)) => (v.i + 1..=hi.min(v.i + len - 1)).any(|i| solid(i, v.j, v.k)),
                None => false,
            }
        }
        SmOrientation::PosY => {
            if grid.min_unmasked_y(mask).is_some_and(|m| m <= v.j - len) {
                return true;
            }
            match grid.row_y_extent(v.i, v.k) {
                Some((lo, _)) => (lo.max(v.j - len + 1)..v.j).any(|j| solid(v.i, j, v.k)),
                None => false,
            }
        }
        SmOrientation::NegY => {
            if grid.max_unmasked_y(mask).is_some_and(|m| m >= v.j + len) {
                return true;
            }
            match grid.row_y_extent(v.i, v.k) {
                Some((_, hi)) => (v.j + 1..=hi.min(v.j + len - 1)).any(|j| solid(v.i, j, v.k)),
                None => false,
            }
        }
    }
}

/// Orientations for which [`sm_collides`] is false, in preference order.
pub fn accessible_orientations<M: VirtualEmpty>(
    grid: &VoxelGrid,
    v: Voxel,
    len: i32,
    mask: &M,
) -> Vec<SmOrientation> {
    SmOrientation::ALL
        .into_iter()
        .filter(|&o| !sm_collides(grid, v, o, len, mask))
        .collect()
}

/// First collision-free orientation in preference order.
pub fn first_accessible<M: VirtualEmpty>(
    grid: &VoxelGrid,
    v: Voxel,
    len: i32,
    mask: &M,
) -> Option<SmOrientation> {
    SmOrientation::ALL
        .into_iter()
        .find(|&o| !sm_collides(grid, v, o, len, mask))
}

/// Literal membership test for the SM occupancy set, used as a test oracle.
pub fn in_sm_occupancy(v: Voxel, orient: SmOrientation, len: i32, w: Voxel) -> bool {
    match orient {
        SmOrientation::NegZ => w.k >= v.k + len || (w.i == v.i && w.j == v.j && w.k > v.k),
        SmOrientation::PosX => w.i <= v.i - len || (w.j == v.j && w.k == v.k && w.i < v.i),
        SmOrientation::NegX => w.i >= v.i + len || (w.j == v.j && w.k == v.k && w.i > v.i),
        SmOrientation::PosY => w.j <= v.j - len || (w.i == v.i && w.k == v.k && w.j < v.j),
        SmOrientation::NegY => w.j >= v.j + len || (w.i == v.i && w.k == v.k && w.j > v.j),
    }
}
