//! Support pre-processing: grow pillars under unsupported voxels before
//! nullification starts, so that fewer supports have to be found on the fly.
//!
//! Each pillar voxel is accreted, so in the forward program it is printed
//! first and machined away later.

use std::collections::{HashMap, HashSet};

use crate::error::Result;
use crate::grid::{NoMask, Voxel, VoxelGrid, SUPPORT_OFFSETS};
use crate::nullifier::{InverseOp, Phase};
use crate::tools::{self, SmOrientation, ToolSpec};

/// Unsupported voxels above the base layer, innermost first.
///
/// The key is the distance to the nearest side face of the model's bounding
/// box (x and y only); ties go by `(k, j, i)`.
pub fn find_unsupported(grid: &VoxelGrid) -> Vec<Voxel> {
    let Some(bb) = grid.bounding_box() else {
        return Vec::new();
    };
    let (lo, hi) = (bb.min, bb.max);
    let mut out: Vec<(i32, Voxel)> = grid
        .solid_voxels()
        .filter(|&v| v.k > 0 && !grid.has_support(v, &NoMask))
        .map(|v| {
            let d = (v.i - lo.i).min(hi.i - v.i).min(v.j - lo.j).min(hi.j - v.j);
            (d, v)
        })
        .collect();
    out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    out.into_iter().map(|(_, v)| v).collect()
}

/// Grows a pillar downward from `v` by breadth-first search over support
/// positions. Candidates must be empty and accretable from some SM
/// orientation; they are written into `grid` as the search goes so later
/// candidates see them as obstacles.
///
/// The search ends at the first node that is on the base layer or rests on
/// a solid voxel accepted by `touchable`. Only the path from that node up to
/// `v` is kept; every other tentative voxel is removed again. Returns the
/// kept voxels top-down with their SM orientations, or `None` with `grid`
/// unchanged.
pub fn grow_support<F>(
    grid: &mut VoxelGrid,
    v: Voxel,
    tool: ToolSpec,
    touchable: F,
) -> Option<Vec<(Voxel, SmOrientation)>>
where
    F: Fn(Voxel) -> bool,
{
    let mut parent: HashMap<Voxel, Voxel> = HashMap::new();
    let mut orient: HashMap<Voxel, SmOrientation> = HashMap::new();
    let mut placed: Vec<Voxel> = Vec::new();
    let mut visited: HashSet<Voxel> = HashSet::new();
    let mut current = vec![v];
    let mut end: Option<Voxel> = None;

    'search: while !current.is_empty() {
        let mut next = Vec::new();
        for &u in &current {
            for &o in &SUPPORT_OFFSETS {
                let c = u.offset(o);
                if !grid.in_bounds(c) || !visited.insert(c) {
                    continue;
                }
                if grid.is_solid(c) {
                    if u != v && touchable(c) {
                        end = Some(u);
                        break 'search;
                    }
                    continue;
                }
                let Some(so) = tools::first_accessible(grid, c, tool.sm_length, &NoMask) else {
                    continue;
                };
                grid.set(c).expect("candidate in bounds");
                placed.push(c);
                parent.insert(c, u);
                orient.insert(c, so);
                if c.k == 0 {
                    end = Some(c);
                    break 'search;
                }
                next.push(c);
            }
        }
        current = next;
    }

    let Some(end) = end else {
        for &p in placed.iter().rev() {
            grid.clear(p).expect("placed voxel in bounds");
        }
        return None;
    };
    let mut path = Vec::new();
    let mut cur = end;
    while cur != v {
        path.push(cur);
        cur = parent[&cur];
    }
    let keep: HashSet<Voxel> = path.iter().copied().collect();
    for &p in placed.iter().rev() {
        if !keep.contains(&p) {
            grid.clear(p).expect("placed voxel in bounds");
        }
    }
    path.reverse();
    Some(path.into_iter().map(|p| (p, orient[&p])).collect())
}

/// Adds support pillars under every unsupported voxel it can. Returns the
/// enriched model and the accretions that produced it, in application
/// order. Voxels whose pillar search fails are left for the nullifier.
pub fn preprocess(model: &VoxelGrid, tool: ToolSpec) -> Result<(VoxelGrid, Vec<InverseOp>)> {
    let phi = find_unsupported(model);
    let phi_set: HashSet<Voxel> = phi.iter().copied().collect();
    let mut grid = model.clone();
    let mut ops = Vec::new();
    for v in phi {
        if grid.has_support(v, &NoMask) {
            continue;
        }
        // original unsupported voxels are not a valid footing; everything
        // else solid, including earlier pillars, is
        let touch = |c: Voxel| !phi_set.contains(&c);
        if let Some(path) = grow_support(&mut grid, v, tool, touch) {
            ops.extend(
                path.into_iter()
                    .map(|(p, o)| InverseOp::accretion(p, o, Phase::PrePlanned)),
            );
        }
    }
    Ok((grid, ops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability;

    fn cantilever() -> VoxelGrid {
        let mut g = VoxelGrid::new(10, 3, 6).unwrap();
        for k in 0..4 {
            g.set(Voxel::new(1, 1, k)).unwrap();
        }
        for i in 2..8 {
            g.set(Voxel::new(i, 1, 3)).unwrap();
        }
        g
    }

    #[test]
    fn unsupported_list() {
        let g = cantilever();
        let phi = find_unsupported(&g);
        assert_eq!(phi.len(), 5);
        assert!(phi.iter().all(|v| v.k == 3 && v.i >= 3));
        assert!(!phi.contains(&Voxel::new(2, 1, 3)));
    }

    #[test]
    fn pillars_support_everything() {
        let g = cantilever();
        let (h, ops) = preprocess(&g, ToolSpec::new(10).unwrap()).unwrap();
        assert!(find_unsupported(&h).is_empty());
        assert!(stability::is_stable_global(&h, &NoMask));
        assert_eq!(h.solid_count(), g.solid_count() + ops.len());
        assert!(ops.iter().all(|o| o.phase == Phase::PrePlanned));
        // each pillar is written top-down
        for w in ops.windows(2) {
            if w[0].voxel.i == w[1].voxel.i {
                assert!(w[0].voxel.k >= w[1].voxel.k);
            }
        }
    }

    #[test]
    fn failed_search_leaves_grid_unchanged() {
        let mut g = cantilever();
        let before = g.clone();
        // nothing may be touched and the short tool sees obstacles everywhere
        let r = grow_support(
            &mut g,
            Voxel::new(7, 1, 3),
            ToolSpec::new(2).unwrap(),
            |_| false,
        );
        if r.is_none() {
            assert_eq!(g, before);
        }
        assert!(g.audit());
    }
}
