//! Stability: every solid voxel must be 18-connected to the base layer.
//!
//! Two checks are provided. The global oracle floods from the base layer and
//! is exact. The localized check only looks at the Δ-box around the voxel
//! being removed and is one-sided: it may report a stable result as unstable,
//! never the reverse.

use crate::error::{Error, Result};
use crate::grid::{VirtualEmpty, Voxel, VoxelGrid, WithVoxel, NEIGHBOR_OFFSETS_18};

/// Stability test used by the planner when deciding erosions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityMode {
    #[default]
    Local,
    Oracle,
}

/// Returns a solid, unmasked voxel that is not connected to the base layer.
pub fn unstable_witness<M: VirtualEmpty>(grid: &VoxelGrid, mask: &M) -> Option<Voxel> {
    let reached = flood_from_base(grid, mask);
    let masked: usize = (0..grid.dims().nz).map(|k| mask.count_z(k) as usize).sum();
    if reached.1 == grid.solid_count() - masked {
        return None;
    }
    grid.solid_voxels().find(|&v| {
        let l = grid.lin(v);
        !mask.contains(l) && reached.0[l >> 6] & (1 << (l & 63)) == 0
    })
}

fn flood_from_base<M: VirtualEmpty>(grid: &VoxelGrid, mask: &M) -> (Vec<u64>, usize) {
    let d = grid.dims();
    let mut visited = vec![0u64; d.len().div_ceil(64)];
    let mut stack = Vec::new();
    let mut count = 0;
    if grid.layer_count(0) > 0 {
        for v in grid.layer_voxels(0) {
            let l = grid.lin(v);
            if !mask.contains(l) {
                visited[l >> 6] |= 1 << (l & 63);
                stack.push(v);
            }
        }
    }
    while let Some(v) = stack.pop() {
        count += 1;
        for &o in &NEIGHBOR_OFFSETS_18 {
            let n = v.offset(o);
            if !grid.in_bounds(n) {
                continue;
            }
            let l = grid.lin(n);
            if grid.is_solid_lin(l) && !mask.contains(l) && visited[l >> 6] & (1 << (l & 63)) == 0 {
                visited[l >> 6] |= 1 << (l & 63);
                stack.push(n);
            }
        }
    }
    (visited, count)
}

/// True iff every solid, unmasked voxel is connected to a base-layer voxel.
pub fn is_stable_global<M: VirtualEmpty>(grid: &VoxelGrid, mask: &M) -> bool {
    let masked: usize = (0..grid.dims().nz).map(|k| mask.count_z(k) as usize).sum();
    flood_from_base(grid, mask).1 == grid.solid_count() - masked
}

/// Global stability of the model with `v` (and the mask) removed, without
/// checking that the current model is stable.
pub fn stable_without<M: VirtualEmpty>(grid: &VoxelGrid, v: Voxel, mask: &M) -> bool {
    let extra = WithVoxel {
        base: mask,
        lin: grid.lin(v),
        voxel: v,
    };
    is_stable_global(grid, &extra)
}

/// Reference answer to "does the model stay stable if `v` is removed".
pub fn remains_stable_after_removal_oracle<M: VirtualEmpty>(
    grid: &VoxelGrid,
    v: Voxel,
    mask: &M,
) -> Result<bool> {
    if !grid.is_solid_masked(v, mask) {
        return Err(Error::Contract(format!("voxel {v} is not solid")));
    }
    if !is_stable_global(grid, mask) {
        return Err(Error::Contract(
            "stability oracle called on an unstable model".into(),
        ));
    }
    Ok(stable_without(grid, v, mask))
}

/// Solid voxels connected to `v` inside its Δ-box (including `v`).
pub fn delta_neighborhood<M: VirtualEmpty>(
    grid: &VoxelGrid,
    v: Voxel,
    delta: i32,
    mask: &M,
) -> Vec<Voxel> {
    if !grid.is_solid_masked(v, mask) {
        return Vec::new();
    }
    let region = crate::grid::Region::cube(v, delta);
    grid.flood_components(&[v], mask, Some(region))
        .pop()
        .unwrap_or_default()
}

/// Localized stability check with reusable scratch space.
#[derive(Clone, Debug)]
pub struct LocalStability {
    delta: i32,
    side: usize,
    stamp: Vec<u32>,
    generation: u32,
    stack: Vec<Voxel>,
}

enum Flood {
    /// Every neighbour of the removed voxel was reached.
    AllReached { grounded: bool },
    /// The flood stopped because it touched the base (or a grounded component).
    Grounded,
    /// The component was exhausted without touching the base.
    Floating,
    /// Exhausted, grounded, but not all neighbours reached.
    Exhausted,
}

impl LocalStability {
    pub fn new(delta: i32) -> Result<Self> {
        if delta < 1 {
            return Err(Error::InvalidArgument(format!(
                "delta must be >= 1, got {delta}"
            )));
        }
        let side = 2 * delta as usize + 1;
        Ok(LocalStability {
            delta,
            side,
            stamp: vec![0; side * side * side],
            generation: 0,
            stack: Vec::new(),
        })
    }

    pub fn delta(&self) -> i32 {
        self.delta
    }

    #[inline]
    fn slot(&self, center: Voxel, w: Voxel) -> usize {
        let d = self.delta;
        let (a, b, c) = (
            (w.i - center.i + d) as usize,
            (w.j - center.j + d) as usize,
            (w.k - center.k + d) as usize,
        );
        a + self.side * (b + self.side * c)
    }

    fn next_generation(&mut self) -> u32 {
        // Stamps `g..g + 19` belong to one query: `g` marks the removed voxel
        // and the first flood, `g + idx` the flood seeded at neighbour `idx`.
        if self.generation >= u32::MAX - 64 {
            self.stamp.fill(0);
            self.generation = 0;
        }
        self.generation += 20;
        self.generation
    }

    /// Whether removing `v` keeps the model stable, judged inside the Δ-box.
    ///
    /// Requires the masked model to be stable and `v` to be solid. A `true`
    /// answer is always correct; `false` may be conservative.
    pub fn remains_stable<M: VirtualEmpty>(
        &mut self,
        grid: &VoxelGrid,
        v: Voxel,
        mask: &M,
    ) -> bool {
        let mut neigh = [Voxel::new(0, 0, 0); 18];
        let mut n = 0;
        for &o in &NEIGHBOR_OFFSETS_18 {
            let w = v.offset(o);
            if grid.is_solid_masked(w, mask) {
                neigh[n] = w;
                n += 1;
            }
        }
        let neigh = &neigh[..n];
        if neigh.is_empty() {
            // an elevated isolated voxel cannot occur in a stable model
            return v.k == 0;
        }
        let base = self.next_generation();
        let vs = self.slot(v, v);
        self.stamp[vs] = base;

        let mut reached = [false; 18];
        match self.flood(grid, v, neigh, &mut reached, 0, base, base, mask) {
            Flood::AllReached { grounded } => return v.k > 0 || grounded,
            Flood::Floating => return false,
            Flood::Exhausted | Flood::Grounded => {}
        }
        for idx in 1..neigh.len() {
            if reached[idx] {
                continue;
            }
            let cur = base + idx as u32;
            if let Flood::Floating = self.flood(grid, v, neigh, &mut reached, idx, base, cur, mask)
            {
                return false;
            }
        }
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn flood<M: VirtualEmpty>(
        &mut self,
        grid: &VoxelGrid,
        center: Voxel,
        neigh: &[Voxel],
        reached: &mut [bool; 18],
        seed_idx: usize,
        base: u32,
        cur: u32,
        mask: &M,
    ) -> Flood {
        let first = cur == base;
        let mut remaining = reached.iter().take(neigh.len()).filter(|&&r| !r).count();
        let mut grounded = false;
        let seed = neigh[seed_idx];
        let s = self.slot(center, seed);
        self.stamp[s] = cur;
        reached[seed_idx] = true;
        remaining -= 1;
        self.stack.clear();
        self.stack.push(seed);
        while let Some(w) = self.stack.pop() {
            if w.k == 0 {
                grounded = true;
                if !first {
                    return Flood::Grounded;
                }
            }
            if first && remaining == 0 && (center.k > 0 || grounded) {
                return Flood::AllReached { grounded };
            }
            for &o in &NEIGHBOR_OFFSETS_18 {
                let x = w.offset(o);
                if x.chebyshev(center) > self.delta || !grid.is_solid_masked(x, mask) {
                    continue;
                }
                let sx = self.slot(center, x);
                let st = self.stamp[sx];
                if st == cur || st == base {
                    continue;
                }
                if st > base && st < cur {
                    // joined a component whose flood already stopped on the base
                    return Flood::Grounded;
                }
                self.stamp[sx] = cur;
                if x.chebyshev(center) <= 1 {
                    if let Some(p) = neigh.iter().position(|&y| y == x) {
                        if !reached[p] {
                            reached[p] = true;
                            remaining -= 1;
                        }
                    }
                }
                self.stack.push(x);
            }
        }
        if first && remaining == 0 {
            return Flood::AllReached { grounded };
        }
        if grounded {
            Flood::Exhausted
        } else {
            Flood::Floating
        }
    }
}

/// One-shot localized check; see [`LocalStability::remains_stable`].
pub fn remains_stable_local<M: VirtualEmpty>(
    grid: &VoxelGrid,
    v: Voxel,
    delta: i32,
    mask: &M,
) -> Result<bool> {
    let mut ls = LocalStability::new(delta)?;
    if !grid.is_solid_masked(v, mask) {
        return Err(Error::Contract(format!("voxel {v} is not solid")));
    }
    Ok(ls.remains_stable(grid, v, mask))
}
