//! Dense voxel occupancy grid.
//!
//! Occupancy is a packed bit array in x-fastest order, so the linear index of
//! `(i, j, k)` is `i + nx * (j + ny * k)` and ascending linear order is the
//! lexicographic `(k, j, i)` order used for every deterministic iteration in
//! the planner. Height is the `k` axis and `k = 0` is the layer resting on the
//! build platform.
//!
//! Alongside the bits the grid keeps acceleration structures that are updated
//! on every [`VoxelGrid::set_state`]:
//!
//! * per-column top (`max k` of each `(i, j)` column, `-1` when empty),
//! * per-slab solid counts along each axis, which also yield the global extrema,
//! * per-row extrema: min/max solid `i` for each `(j, k)` row and min/max solid
//!   `j` for each `(i, k)` row.
//!
//! Memory is `nx*ny*nz/8` bytes for occupancy plus
//! `4*(2*nx*ny + 2*ny*nz + 2*nx*nz + nx + ny + nz)` bytes of acceleration data.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer grid coordinate. `k` is the height axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Voxel {
    pub i: i32,
    pub j: i32,
    pub k: i32,
}

impl Voxel {
    pub const fn new(i: i32, j: i32, k: i32) -> Self {
        Voxel { i, j, k }
    }

    pub const fn offset(self, d: [i32; 3]) -> Self {
        Voxel {
            i: self.i + d[0],
            j: self.j + d[1],
            k: self.k + d[2],
        }
    }

    /// Chebyshev (L-infinity) distance.
    pub fn chebyshev(self, other: Voxel) -> i32 {
        (self.i - other.i)
            .abs()
            .max((self.j - other.j).abs())
            .max((self.k - other.k).abs())
    }

    pub fn is_neighbor18(self, other: Voxel) -> bool {
        let d = [
            (self.i - other.i).abs(),
            (self.j - other.j).abs(),
            (self.k - other.k).abs(),
        ];
        let nonzero = d.iter().filter(|&&c| c != 0).count();
        d.iter().all(|&c| c <= 1) && (1..=2).contains(&nonzero)
    }
}

impl Ord for Voxel {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.k, self.j, self.i).cmp(&(other.k, other.j, other.i))
    }
}

impl PartialOrd for Voxel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Voxel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.i, self.j, self.k)
    }
}

/// The 18 face and edge neighbour offsets, sorted lexicographically as
/// `(di, dj, dk)` tuples. Vertex-only offsets are excluded.
pub const NEIGHBOR_OFFSETS_18: [[i32; 3]; 18] = [
    [-1, -1, 0],
    [-1, 0, -1],
    [-1, 0, 0],
    [-1, 0, 1],
    [-1, 1, 0],
    [0, -1, -1],
    [0, -1, 0],
    [0, -1, 1],
    [0, 0, -1],
    [0, 0, 1],
    [0, 1, -1],
    [0, 1, 0],
    [0, 1, 1],
    [1, -1, 0],
    [1, 0, -1],
    [1, 0, 0],
    [1, 0, 1],
    [1, 1, 0],
];

/// Offsets of the neighbours one layer down that can carry a voxel under a
/// 45 degree self-support rule. Same lexicographic order as above.
pub const SUPPORT_OFFSETS: [[i32; 3]; 5] =
    [[-1, 0, -1], [0, -1, -1], [0, 0, -1], [0, 1, -1], [1, 0, -1]];

/// In-layer 8-neighbourhood, i.e. the 18-neighbourhood restricted to `dk = 0`.
pub const LAYER_OFFSETS_8: [[i32; 3]; 8] = [
    [-1, -1, 0],
    [-1, 0, 0],
    [-1, 1, 0],
    [0, -1, 0],
    [0, 1, 0],
    [1, -1, 0],
    [1, 0, 0],
    [1, 1, 0],
];

/// Inclusive axis-aligned box of voxel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub min: Voxel,
    pub max: Voxel,
}

impl Region {
    pub fn cube(center: Voxel, radius: i32) -> Self {
        Region {
            min: center.offset([-radius, -radius, -radius]),
            max: center.offset([radius, radius, radius]),
        }
    }

    pub fn contains(&self, v: Voxel) -> bool {
        v.i >= self.min.i
            && v.i <= self.max.i
            && v.j >= self.min.j
            && v.j <= self.max.j
            && v.k >= self.min.k
            && v.k <= self.max.k
    }
}

/// Voxels treated as empty by a query without being removed from the grid.
///
/// Implementations must only contain voxels that are solid in the grid they
/// are used with: the per-slab counts are subtracted from the grid's counts.
pub trait VirtualEmpty {
    fn contains(&self, lin: usize) -> bool;
    fn count_x(&self, i: usize) -> u32;
    fn count_y(&self, j: usize) -> u32;
    fn count_z(&self, k: usize) -> u32;
    fn is_empty(&self) -> bool;
}

/// The empty mask.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoMask;

impl VirtualEmpty for NoMask {
    #[inline]
    fn contains(&self, _lin: usize) -> bool {
        false
    }
    fn count_x(&self, _i: usize) -> u32 {
        0
    }
    fn count_y(&self, _j: usize) -> u32 {
        0
    }
    fn count_z(&self, _k: usize) -> u32 {
        0
    }
    fn is_empty(&self) -> bool {
        true
    }
}

/// A set of solid voxels to be treated as empty, sized for one grid.
#[derive(Clone, Debug)]
pub struct VoxelMask {
    dims: Dims,
    bits: Vec<u64>,
    members: Vec<usize>,
    cx: Vec<u32>,
    cy: Vec<u32>,
    cz: Vec<u32>,
}

impl VoxelMask {
    pub fn new(dims: Dims) -> Self {
        VoxelMask {
            dims,
            bits: vec![0; dims.len().div_ceil(64)],
            members: Vec::new(),
            cx: vec![0; dims.nx],
            cy: vec![0; dims.ny],
            cz: vec![0; dims.nz],
        }
    }

    pub fn from_voxels(grid: &VoxelGrid, voxels: impl IntoIterator<Item = Voxel>) -> Self {
        let mut m = VoxelMask::new(grid.dims());
        for v in voxels {
            m.insert(grid, v);
        }
        m
    }

    /// Adds a solid voxel. Returns false if it was already present.
    pub fn insert(&mut self, grid: &VoxelGrid, v: Voxel) -> bool {
        debug_assert!(grid.is_solid(v), "masked voxels must be solid");
        let lin = self.dims.lin(v);
        if self.bits[lin >> 6] & (1 << (lin & 63)) != 0 {
            return false;
        }
        self.bits[lin >> 6] |= 1 << (lin & 63);
        self.members.push(lin);
        self.cx[v.i as usize] += 1;
        self.cy[v.j as usize] += 1;
        self.cz[v.k as usize] += 1;
        true
    }

    pub fn contains_voxel(&self, v: Voxel) -> bool {
        self.dims.in_bounds(v) && self.contains(self.dims.lin(v))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members in insertion order.
    pub fn voxels(&self) -> impl Iterator<Item = Voxel> + '_ {
        self.members.iter().map(|&l| self.dims.voxel(l))
    }

    pub fn clear(&mut self) {
        for &lin in &self.members {
            self.bits[lin >> 6] &= !(1 << (lin & 63));
            let v = self.dims.voxel(lin);
            self.cx[v.i as usize] -= 1;
            self.cy[v.j as usize] -= 1;
            self.cz[v.k as usize] -= 1;
        }
        self.members.clear();
    }
}

impl VirtualEmpty for VoxelMask {
    #[inline]
    fn contains(&self, lin: usize) -> bool {
        self.bits[lin >> 6] & (1 << (lin & 63)) != 0
    }
    fn count_x(&self, i: usize) -> u32 {
        self.cx[i]
    }
    fn count_y(&self, j: usize) -> u32 {
        self.cy[j]
    }
    fn count_z(&self, k: usize) -> u32 {
        self.cz[k]
    }
    fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A base mask plus one extra solid voxel.
#[derive(Clone, Copy, Debug)]
pub struct WithVoxel<'a, M: VirtualEmpty> {
    pub base: &'a M,
    pub lin: usize,
    pub voxel: Voxel,
}

impl<M: VirtualEmpty> VirtualEmpty for WithVoxel<'_, M> {
    #[inline]
    fn contains(&self, lin: usize) -> bool {
        lin == self.lin || self.base.contains(lin)
    }
    fn count_x(&self, i: usize) -> u32 {
        self.base.count_x(i) + u32::from(i as i32 == self.voxel.i && !self.base.contains(self.lin))
    }
    fn count_y(&self, j: usize) -> u32 {
        self.base.count_y(j) + u32::from(j as i32 == self.voxel.j && !self.base.contains(self.lin))
    }
    fn count_z(&self, k: usize) -> u32 {
        self.base.count_z(k) + u32::from(k as i32 == self.voxel.k && !self.base.contains(self.lin))
    }
    fn is_empty(&self) -> bool {
        false
    }
}

/// Grid resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid dimensions must be positive, got {nx}x{ny}x{nz}"
            )));
        }
        if nx > i32::MAX as usize || ny > i32::MAX as usize || nz > i32::MAX as usize {
            return Err(Error::InvalidArgument("grid dimension too large".into()));
        }
        Ok(Dims { nx, ny, nz })
    }

    /// Cell count; never zero since every extent is positive.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    #[inline]
    pub fn in_bounds(&self, v: Voxel) -> bool {
        v.i >= 0
            && v.j >= 0
            && v.k >= 0
            && (v.i as usize) < self.nx
            && (v.j as usize) < self.ny
            && (v.k as usize) < self.nz
    }

    #[inline]
    pub fn lin(&self, v: Voxel) -> usize {
        v.i as usize + self.nx * (v.j as usize + self.ny * v.k as usize)
    }

    #[inline]
    pub fn voxel(&self, lin: usize) -> Voxel {
        let i = lin % self.nx;
        let r = lin / self.nx;
        Voxel::new(i as i32, (r % self.ny) as i32, (r / self.ny) as i32)
    }
}

const EMPTY_MIN: i32 = i32::MAX;
const EMPTY_MAX: i32 = -1;

#[derive(Clone, Debug, PartialEq, Eq)]
struct Accel {
    column_top: Vec<i32>,
    count_x: Vec<u32>,
    count_y: Vec<u32>,
    count_z: Vec<u32>,
    // indexed by j + ny*k
    row_x_min: Vec<i32>,
    row_x_max: Vec<i32>,
    // indexed by i + nx*k
    row_y_min: Vec<i32>,
    row_y_max: Vec<i32>,
}

impl Accel {
    fn empty(d: Dims) -> Self {
        Accel {
            column_top: vec![-1; d.nx * d.ny],
            count_x: vec![0; d.nx],
            count_y: vec![0; d.ny],
            count_z: vec![0; d.nz],
            row_x_min: vec![EMPTY_MIN; d.ny * d.nz],
            row_x_max: vec![EMPTY_MAX; d.ny * d.nz],
            row_y_min: vec![EMPTY_MIN; d.nx * d.nz],
            row_y_max: vec![EMPTY_MAX; d.nx * d.nz],
        }
    }
}

/// Dense binary occupancy grid with incremental acceleration structures.
#[derive(Clone, Debug)]
pub struct VoxelGrid {
    dims: Dims,
    bits: Vec<u64>,
    solid: usize,
    accel: Accel,
}

impl PartialEq for VoxelGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.bits == other.bits
    }
}

impl Eq for VoxelGrid {}

impl VoxelGrid {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        Ok(Self::with_dims(Dims::new(nx, ny, nz)?))
    }

    pub fn with_dims(dims: Dims) -> Self {
        VoxelGrid {
            dims,
            bits: vec![0; dims.len().div_ceil(64)],
            solid: 0,
            accel: Accel::empty(dims),
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn solid_count(&self) -> usize {
        self.solid
    }

    pub fn is_null(&self) -> bool {
        self.solid == 0
    }

    #[inline]
    pub fn in_bounds(&self, v: Voxel) -> bool {
        self.dims.in_bounds(v)
    }

    #[inline]
    pub fn lin(&self, v: Voxel) -> usize {
        self.dims.lin(v)
    }

    #[inline]
    pub fn is_solid_lin(&self, lin: usize) -> bool {
        self.bits[lin >> 6] & (1 << (lin & 63)) != 0
    }

    /// Occupancy of `v`; out-of-bounds voxels are empty.
    #[inline]
    pub fn is_solid(&self, v: Voxel) -> bool {
        self.in_bounds(v) && self.is_solid_lin(self.lin(v))
    }

    /// Occupancy with the mask applied.
    #[inline]
    pub fn is_solid_masked<M: VirtualEmpty>(&self, v: Voxel, mask: &M) -> bool {
        if !self.in_bounds(v) {
            return false;
        }
        let lin = self.lin(v);
        self.is_solid_lin(lin) && !mask.contains(lin)
    }

    fn check(&self, v: Voxel) -> Result<()> {
        if self.in_bounds(v) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                voxel: v,
                dims: self.dims.as_array(),
            })
        }
    }

    /// Sets the occupancy of `v`. Returns whether the state changed.
    pub fn set_state(&mut self, v: Voxel, solid: bool) -> Result<bool> {
        self.check(v)?;
        let lin = self.lin(v);
        if self.is_solid_lin(lin) == solid {
            return Ok(false);
        }
        if solid {
            self.bits[lin >> 6] |= 1 << (lin & 63);
            self.solid += 1;
            self.accel_add(v);
        } else {
            self.bits[lin >> 6] &= !(1 << (lin & 63));
            self.solid -= 1;
            self.accel_remove(v);
        }
        Ok(true)
    }

    pub fn set(&mut self, v: Voxel) -> Result<bool> {
        self.set_state(v, true)
    }

    pub fn clear(&mut self, v: Voxel) -> Result<bool> {
        self.set_state(v, false)
    }

    fn accel_add(&mut self, v: Voxel) {
        let d = self.dims;
        let (i, j, k) = (v.i as usize, v.j as usize, v.k as usize);
        let a = &mut self.accel;
        let c = &mut a.column_top[i + d.nx * j];
        *c = (*c).max(v.k);
        a.count_x[i] += 1;
        a.count_y[j] += 1;
        a.count_z[k] += 1;
        let rx = j + d.ny * k;
        a.row_x_min[rx] = a.row_x_min[rx].min(v.i);
        a.row_x_max[rx] = a.row_x_max[rx].max(v.i);
        let ry = i + d.nx * k;
        a.row_y_min[ry] = a.row_y_min[ry].min(v.j);
        a.row_y_max[ry] = a.row_y_max[ry].max(v.j);
    }

    fn accel_remove(&mut self, v: Voxel) {
        let d = self.dims;
        let (i, j, k) = (v.i as usize, v.j as usize, v.k as usize);
        self.accel.count_x[i] -= 1;
        self.accel.count_y[j] -= 1;
        self.accel.count_z[k] -= 1;

        let col = i + d.nx * j;
        if self.accel.column_top[col] == v.k {
            let mut top = v.k - 1;
            while top >= 0 && !self.is_solid(Voxel::new(v.i, v.j, top)) {
                top -= 1;
            }
            self.accel.column_top[col] = top;
        }

        let rx = j + d.ny * k;
        if self.accel.row_x_min[rx] == v.i || self.accel.row_x_max[rx] == v.i {
            let (lo, hi) = self.scan_row_x(v.j, v.k);
            self.accel.row_x_min[rx] = lo;
            self.accel.row_x_max[rx] = hi;
        }
        let ry = i + d.nx * k;
        if self.accel.row_y_min[ry] == v.j || self.accel.row_y_max[ry] == v.j {
            let (lo, hi) = self.scan_row_y(v.i, v.k);
            self.accel.row_y_min[ry] = lo;
            self.accel.row_y_max[ry] = hi;
        }
    }

    fn scan_row_x(&self, j: i32, k: i32) -> (i32, i32) {
        let mut lo = EMPTY_MIN;
        let mut hi = EMPTY_MAX;
        for i in 0..self.dims.nx as i32 {
            if self.is_solid(Voxel::new(i, j, k)) {
                lo = lo.min(i);
                hi = i;
            }
        }
        (lo, hi)
    }

    fn scan_row_y(&self, i: i32, k: i32) -> (i32, i32) {
        let mut lo = EMPTY_MIN;
        let mut hi = EMPTY_MAX;
        for j in 0..self.dims.ny as i32 {
            if self.is_solid(Voxel::new(i, j, k)) {
                lo = lo.min(j);
                hi = j;
            }
        }
        (lo, hi)
    }

    fn rebuild(&self) -> Accel {
        let mut fresh = VoxelGrid::with_dims(self.dims);
        for v in self.solid_voxels() {
            let l = fresh.lin(v);
            fresh.bits[l >> 6] |= 1 << (l & 63);
            fresh.accel_add(v);
        }
        fresh.accel
    }

    /// Rebuilds the acceleration structures from scratch and compares them
    /// with the incrementally maintained ones.
    pub fn audit(&self) -> bool {
        let count = self
            .bits
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum::<usize>();
        count == self.solid && self.rebuild() == self.accel
    }

    /// Highest solid `k` of column `(i, j)`, or -1.
    pub fn column_top(&self, i: i32, j: i32) -> i32 {
        self.accel.column_top[i as usize + self.dims.nx * j as usize]
    }

    pub fn layer_count(&self, k: usize) -> usize {
        self.accel.count_z[k] as usize
    }

    /// Min/max solid `i` in row `(j, k)`, `None` when the row is empty.
    pub fn row_x_extent(&self, j: i32, k: i32) -> Option<(i32, i32)> {
        let r = j as usize + self.dims.ny * k as usize;
        let hi = self.accel.row_x_max[r];
        (hi >= 0).then(|| (self.accel.row_x_min[r], hi))
    }

    /// Min/max solid `j` in row `(i, k)`, `None` when the row is empty.
    pub fn row_y_extent(&self, i: i32, k: i32) -> Option<(i32, i32)> {
        let r = i as usize + self.dims.nx * k as usize;
        let hi = self.accel.row_y_max[r];
        (hi >= 0).then(|| (self.accel.row_y_min[r], hi))
    }

    /// Largest `k` holding a solid voxel; `None` for the null state.
    pub fn top_layer(&self) -> Option<usize> {
        self.max_unmasked_z(&NoMask).map(|k| k as usize)
    }

    pub fn max_unmasked_z<M: VirtualEmpty>(&self, mask: &M) -> Option<i32> {
        let c = &self.accel.count_z;
        (0..c.len())
            .rev()
            .find(|&k| c[k] > mask.count_z(k))
            .map(|k| k as i32)
    }

    pub fn min_unmasked_x<M: VirtualEmpty>(&self, mask: &M) -> Option<i32> {
        let c = &self.accel.count_x;
        (0..c.len())
            .find(|&i| c[i] > mask.count_x(i))
            .map(|i| i as i32)
    }

    pub fn max_unmasked_x<M: VirtualEmpty>(&self, mask: &M) -> Option<i32> {
        let c = &self.accel.count_x;
        (0..c.len())
            .rev()
            .find(|&i| c[i] > mask.count_x(i))
            .map(|i| i as i32)
    }

    pub fn min_unmasked_y<M: VirtualEmpty>(&self, mask: &M) -> Option<i32> {
        let c = &self.accel.count_y;
        (0..c.len())
            .find(|&j| c[j] > mask.count_y(j))
            .map(|j| j as i32)
    }

    pub fn max_unmasked_y<M: VirtualEmpty>(&self, mask: &M) -> Option<i32> {
        let c = &self.accel.count_y;
        (0..c.len())
            .rev()
            .find(|&j| c[j] > mask.count_y(j))
            .map(|j| j as i32)
    }

    /// All solid voxels in ascending `(k, j, i)` order.
    pub fn solid_voxels(&self) -> impl Iterator<Item = Voxel> + '_ {
        self.bits.iter().enumerate().flat_map(move |(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + b)
            })
            .map(move |lin| self.dims.voxel(lin))
        })
    }

    /// Solid voxels of layer `k` in ascending `(j, i)` order.
    pub fn layer_voxels(&self, k: usize) -> Vec<Voxel> {
        let mut out = Vec::with_capacity(self.layer_count(k));
        if self.layer_count(k) == 0 {
            return out;
        }
        for j in 0..self.dims.ny as i32 {
            let Some((lo, hi)) = self.row_x_extent(j, k as i32) else {
                continue;
            };
            for i in lo..=hi {
                let v = Voxel::new(i, j, k as i32);
                if self.is_solid(v) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// In-bounds face and edge neighbours of `v`, in offset order.
    pub fn neighbors18(&self, v: Voxel) -> Result<Vec<Voxel>> {
        self.check(v)?;
        Ok(NEIGHBOR_OFFSETS_18
            .iter()
            .map(|&d| v.offset(d))
            .filter(|&n| self.in_bounds(n))
            .collect())
    }

    /// In-bounds candidate support positions of `v` on layer `k - 1`.
    pub fn supporting_neighbors(&self, v: Voxel) -> Result<Vec<Voxel>> {
        self.check(v)?;
        Ok(SUPPORT_OFFSETS
            .iter()
            .map(|&d| v.offset(d))
            .filter(|&n| self.in_bounds(n))
            .collect())
    }

    /// Whether some support position of `v` is solid and unmasked.
    pub fn has_support<M: VirtualEmpty>(&self, v: Voxel, mask: &M) -> bool {
        SUPPORT_OFFSETS
            .iter()
            .any(|&d| self.is_solid_masked(v.offset(d), mask))
    }

    /// Whether some 18-neighbour of `v` is solid and unmasked.
    pub fn has_solid_neighbor<M: VirtualEmpty>(&self, v: Voxel, mask: &M) -> bool {
        NEIGHBOR_OFFSETS_18
            .iter()
            .any(|&d| self.is_solid_masked(v.offset(d), mask))
    }

    /// Connected components (18-connectivity) of solid, unmasked voxels
    /// reachable from `seeds`, optionally restricted to `region`.
    ///
    /// Components are returned in the order their first seed appears, each
    /// sorted in `(k, j, i)` order. Seeds that are empty, masked, outside the
    /// region or already covered by an earlier component are skipped.
    pub fn flood_components<M: VirtualEmpty>(
        &self,
        seeds: &[Voxel],
        virtual_empty: &M,
        region: Option<Region>,
    ) -> Vec<Vec<Voxel>> {
        let allowed = |v: Voxel| {
            self.is_solid_masked(v, virtual_empty) && region.is_none_or(|r| r.contains(v))
        };
        let mut visited = vec![0u64; self.dims.len().div_ceil(64)];
        let mut comps = Vec::new();
        let mut stack = Vec::new();
        for &s in seeds {
            if !allowed(s) {
                continue;
            }
            let sl = self.lin(s);
            if visited[sl >> 6] & (1 << (sl & 63)) != 0 {
                continue;
            }
            visited[sl >> 6] |= 1 << (sl & 63);
            stack.push(s);
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &d in &NEIGHBOR_OFFSETS_18 {
                    let n = v.offset(d);
                    if !allowed(n) {
                        continue;
                    }
                    let nl = self.lin(n);
                    if visited[nl >> 6] & (1 << (nl & 63)) == 0 {
                        visited[nl >> 6] |= 1 << (nl & 63);
                        stack.push(n);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Bounding box of the solid voxels.
    pub fn bounding_box(&self) -> Option<Region> {
        let mask = NoMask;
        Some(Region {
            min: Voxel::new(
                self.min_unmasked_x(&mask)?,
                self.min_unmasked_y(&mask)?,
                (0..self.dims.nz).find(|&k| self.layer_count(k) > 0)? as i32,
            ),
            max: Voxel::new(
                self.max_unmasked_x(&mask)?,
                self.max_unmasked_y(&mask)?,
                self.top_layer()? as i32,
            ),
        })
    }

    /// Raw packed occupancy words (x-fastest, LSB first).
    pub fn words(&self) -> &[u64] {
        &self.bits
    }
}
