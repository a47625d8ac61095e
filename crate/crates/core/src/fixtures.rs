//! Procedural test models. Every generator returns a stable grid: material
//! not connected to the base layer is dropped.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{NoMask, Voxel, VoxelGrid};

fn grid(nx: usize, ny: usize, nz: usize) -> VoxelGrid {
    VoxelGrid::new(nx, ny, nz).expect("fixture dimensions are positive")
}

/// Fills the inclusive box `[lo, hi]`, clipped to the grid.
pub fn fill_box(g: &mut VoxelGrid, lo: [i32; 3], hi: [i32; 3]) {
    let d = g.dims();
    for k in lo[2].max(0)..=hi[2].min(d.nz as i32 - 1) {
        for j in lo[1].max(0)..=hi[1].min(d.ny as i32 - 1) {
            for i in lo[0].max(0)..=hi[0].min(d.nx as i32 - 1) {
                let _ = g.set(Voxel::new(i, j, k));
            }
        }
    }
}

/// Empties the inclusive box `[lo, hi]`, clipped to the grid.
pub fn clear_box(g: &mut VoxelGrid, lo: [i32; 3], hi: [i32; 3]) {
    let d = g.dims();
    for k in lo[2].max(0)..=hi[2].min(d.nz as i32 - 1) {
        for j in lo[1].max(0)..=hi[1].min(d.ny as i32 - 1) {
            for i in lo[0].max(0)..=hi[0].min(d.nx as i32 - 1) {
                let _ = g.clear(Voxel::new(i, j, k));
            }
        }
    }
}

fn fill_ellipsoid(g: &mut VoxelGrid, c: [f64; 3], r: [f64; 3], solid: bool) {
    let d = g.dims();
    let lo = |a: usize| ((c[a] - r[a]).floor().max(0.0)) as i32;
    let hi = |a: usize, n: usize| ((c[a] + r[a]).ceil() as i32).min(n as i32 - 1);
    for k in lo(2)..=hi(2, d.nz) {
        for j in lo(1)..=hi(1, d.ny) {
            for i in lo(0)..=hi(0, d.nx) {
                let q = [i as f64, j as f64, k as f64];
                let s: f64 = (0..3).map(|a| ((q[a] - c[a]) / r[a]).powi(2)).sum();
                if s <= 1.0 {
                    let _ = g.set_state(Voxel::new(i, j, k), solid);
                }
            }
        }
    }
}

/// Drops every voxel that is not connected to the base layer.
pub fn keep_grounded(g: &VoxelGrid) -> VoxelGrid {
    let seeds = g.layer_voxels(0);
    let mut out = VoxelGrid::with_dims(g.dims());
    for comp in g.flood_components(&seeds, &NoMask, None) {
        for v in comp {
            let _ = out.set(v);
        }
    }
    out
}

/// Union of random ellipsoids and boxes on a base pad.
pub fn random_blob(seed: u64, n: usize) -> VoxelGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = grid(n, n, n);
    let nf = n as f64;
    let (a, b) = (rng.gen_range(0..n / 2), rng.gen_range(0..n / 2));
    let (w, h) = (rng.gen_range(2..=n / 2), rng.gen_range(2..=n / 2));
    fill_box(
        &mut g,
        [a as i32, b as i32, 0],
        [(a + w) as i32, (b + h) as i32, 1],
    );
    for _ in 0..rng.gen_range(3..8) {
        let c = [
            rng.gen_range(0.0..nf),
            rng.gen_range(0.0..nf),
            rng.gen_range(0.0..nf),
        ];
        let r = [
            rng.gen_range(1.5..nf / 3.0 + 2.0),
            rng.gen_range(1.5..nf / 3.0 + 2.0),
            rng.gen_range(1.5..nf / 3.0 + 2.0),
        ];
        if rng.gen_bool(0.6) {
            fill_ellipsoid(&mut g, c, r, true);
        } else {
            let lo = [
                (c[0] - r[0]) as i32,
                (c[1] - r[1]) as i32,
                (c[2] - r[2]) as i32,
            ];
            let hi = [
                (c[0] + r[0]) as i32,
                (c[1] + r[1]) as i32,
                (c[2] + r[2]) as i32,
            ];
            fill_box(&mut g, lo, hi);
        }
    }
    // pillars tie high blobs down
    for _ in 0..rng.gen_range(1..4) {
        let (i, j) = (rng.gen_range(0..n) as i32, rng.gen_range(0..n) as i32);
        let t = rng.gen_range(0..2);
        fill_box(&mut g, [i, j, 0], [i + t, j + t, n as i32 - 1]);
    }
    if rng.gen_bool(0.4) {
        let c = [
            rng.gen_range(0.0..nf),
            rng.gen_range(0.0..nf),
            rng.gen_range(nf / 3.0..nf),
        ];
        fill_ellipsoid(&mut g, c, [nf / 6.0 + 1.0; 3], false);
    }
    keep_grounded(&g)
}

/// Pillars carrying horizontal arms at random heights.
pub fn random_cantilever(seed: u64, n: usize) -> VoxelGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = grid(n, n, n);
    let n = n as i32;
    let (pi, pj) = (rng.gen_range(0..n / 2), rng.gen_range(0..n / 2));
    let pw = rng.gen_range(1..=(n / 4).max(1));
    let ph = rng.gen_range(n / 2..n);
    fill_box(&mut g, [pi, pj, 0], [pi + pw - 1, pj + pw - 1, ph - 1]);
    for _ in 0..rng.gen_range(1..4) {
        let k = rng.gen_range(1..ph);
        let t = rng.gen_range(1..=3);
        let len = rng.gen_range(2..n);
        let w = rng.gen_range(1..=(n / 3).max(1));
        if rng.gen_bool(0.5) {
            fill_box(&mut g, [pi, pj, k], [pi + len, pj + w - 1, k + t - 1]);
        } else {
            fill_box(&mut g, [pi, pj, k], [pi + w - 1, pj + len, k + t - 1]);
        }
    }
    keep_grounded(&g)
}

/// Two or more piers joined by a deck.
pub fn random_bridge(seed: u64, n: usize) -> VoxelGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = grid(n, n, n);
    let n = n as i32;
    let deck_k = rng.gen_range(n / 3..n - 1);
    let t = rng.gen_range(1..=3).min(n - deck_k);
    let j0 = rng.gen_range(0..n / 2);
    let w = rng.gen_range(1..=n / 2);
    let piers = rng.gen_range(2..=3);
    let pw = rng.gen_range(1..=3);
    for p in 0..piers {
        let i = (p * (n - pw)) / (piers - 1);
        fill_box(&mut g, [i, j0, 0], [i + pw - 1, j0 + w - 1, deck_k]);
    }
    fill_box(&mut g, [0, j0, deck_k], [n - 1, j0 + w - 1, deck_k + t - 1]);
    if rng.gen_bool(0.5) {
        // an arch cut out of a solid span
        let r = (n as f64 / 3.0, w as f64 * 2.0, deck_k as f64 * 0.8);
        fill_box(&mut g, [0, j0, 0], [n - 1, j0 + w - 1, deck_k]);
        fill_ellipsoid(
            &mut g,
            [n as f64 / 2.0, j0 as f64 + w as f64 / 2.0, 0.0],
            [r.0, r.1, r.2],
            false,
        );
    }
    keep_grounded(&g)
}

/// A solid box with one or more enclosed voids.
pub fn random_cavity(seed: u64, n: usize) -> VoxelGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = grid(n, n, n);
    let n = n as i32;
    let lo = [rng.gen_range(0..n / 4), rng.gen_range(0..n / 4), 0];
    let hi = [
        rng.gen_range(3 * n / 4..n),
        rng.gen_range(3 * n / 4..n),
        rng.gen_range(n / 2..n),
    ];
    fill_box(&mut g, lo, hi);
    for _ in 0..rng.gen_range(1..3) {
        let c = [
            rng.gen_range(lo[0] + 2..hi[0] - 1),
            rng.gen_range(lo[1] + 2..hi[1] - 1),
            rng.gen_range(2..(hi[2] - 1).max(3)),
        ];
        let r = [
            rng.gen_range(1..4),
            rng.gen_range(1..4),
            rng.gen_range(1..3),
        ];
        // keep a one-voxel shell
        let a = [
            (c[0] - r[0]).max(lo[0] + 1),
            (c[1] - r[1]).max(lo[1] + 1),
            (c[2] - r[2]).max(1),
        ];
        let b = [
            (c[0] + r[0]).min(hi[0] - 1),
            (c[1] + r[1]).min(hi[1] - 1),
            (c[2] + r[2]).min(hi[2] - 1),
        ];
        clear_box(&mut g, a, b);
    }
    keep_grounded(&g)
}

/// A pillar with a staircase overhang on both sides, one voxel deep.
pub fn staircase_bridge() -> VoxelGrid {
    let mut g = grid(16, 3, 8);
    fill_box(&mut g, [7, 0, 0], [8, 2, 6]);
    for s in 0..4 {
        fill_box(&mut g, [6 - 2 * s, 0, 3 + s], [9 + 2 * s, 2, 3 + s]);
    }
    keep_grounded(&g)
}

/// A wide deck on a central stem, about 60×30×40.
pub fn t_bridge() -> VoxelGrid {
    let mut g = grid(60, 30, 40);
    fill_box(&mut g, [25, 10, 0], [34, 19, 35]);
    fill_box(&mut g, [0, 0, 36], [59, 29, 39]);
    g
}

/// Truss-like beam on a 100×20×20 grid with roughly 4k voxels.
pub fn mbb_like() -> VoxelGrid {
    let mut g = grid(100, 20, 20);
    // chords
    fill_box(&mut g, [0, 6, 0], [99, 12, 1]);
    fill_box(&mut g, [0, 6, 17], [99, 12, 18]);
    // diagonals between chords
    for bay in 0..6 {
        let x0 = bay * 17;
        for k in 2..17 {
            let dx = ((k - 2) * 16) / 15;
            let x = if bay % 2 == 0 { x0 + dx } else { x0 + 16 - dx };
            fill_box(&mut g, [x, 6, k], [x + 1, 12, k]);
        }
    }
    keep_grounded(&g)
}

/// Bracket-like part on a 100×60×34 grid with roughly 16k voxels: a base
/// plate, bosses, and arched ribs with overhanging lugs.
pub fn bracket_like() -> VoxelGrid {
    let mut g = grid(100, 60, 34);
    fill_box(&mut g, [4, 6, 0], [95, 53, 1]);
    for &(i, j) in &[(10, 12), (89, 12), (10, 47), (89, 47)] {
        fill_ellipsoid(&mut g, [i as f64, j as f64, 2.0], [5.0, 5.0, 3.0], true);
        fill_ellipsoid(&mut g, [i as f64, j as f64, 2.0], [2.0, 2.0, 6.0], false);
    }
    // two ribs rising to a central block
    for k in 2..30 {
        let t = k as f64 / 30.0;
        let half = (40.0 * (1.0 - t)) as i32 + 6;
        for &j0 in &[18, 38] {
            fill_box(&mut g, [50 - half, j0, k], [50 - half + 3, j0 + 3, k]);
            fill_box(&mut g, [50 + half - 3, j0, k], [50 + half, j0 + 3, k]);
        }
    }
    fill_box(&mut g, [40, 18, 24], [60, 41, 33]);
    fill_ellipsoid(&mut g, [50.0, 30.0, 29.0], [6.0, 25.0, 3.5], false);
    // overhanging lugs
    fill_box(&mut g, [30, 22, 30], [39, 37, 33]);
    fill_box(&mut g, [61, 22, 30], [70, 37, 33]);
    keep_grounded(&g)
}

/// A stack of wide, thin plates on pillars: large flat layers.
pub fn flat_plates(seed: u64) -> VoxelGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = grid(24, 24, 14);
    for &(i, j) in &[(3, 3), (19, 3), (3, 19), (19, 19), (11, 11)] {
        fill_box(&mut g, [i, j, 0], [i + 1, j + 1, 12]);
    }
    for k in [4, 8, 12] {
        let a = rng.gen_range(0..3);
        fill_box(&mut g, [a, a, k], [23 - a, 23 - a, k + 1]);
        for _ in 0..3 {
            let (i, j) = (rng.gen_range(2..20), rng.gen_range(2..20));
            clear_box(&mut g, [i, j, k], [i + 1, j + 1, k + 1]);
        }
    }
    keep_grounded(&g)
}

/// A large porous block of at least `target` voxels: a lattice of pillars,
/// beams and slabs, grown one cell at a time.
pub fn large_lattice(target: usize) -> VoxelGrid {
    let mut side = 1;
    loop {
        let g = lattice(side);
        if g.solid_count() >= target {
            return g;
        }
        side += 1;
    }
}

fn lattice(side: i32) -> VoxelGrid {
    let cell = 8i32;
    let n = (side * cell) as usize;
    let mut g = grid(n, n, n);
    let n = n as i32;
    for ci in 0..side {
        for cj in 0..side {
            let (x, y) = (ci * cell, cj * cell);
            fill_box(&mut g, [x, y, 0], [x + 1, y + 1, n - 1]);
        }
    }
    for ck in 0..side {
        let z = ck * cell + cell - 2;
        for c in 0..side {
            let p = c * cell;
            fill_box(&mut g, [0, p, z], [n - 1, p + 1, z + 1]);
            fill_box(&mut g, [p, 0, z], [p + 1, n - 1, z + 1]);
        }
        // a thin slab on every other level
        if ck % 2 == 1 {
            fill_box(&mut g, [0, 0, z + 1], [n - 1, n - 1, z + 1]);
        }
    }
    keep_grounded(&g)
}

/// The procedural corpus: blobs, cantilevers, bridges and cavities at
/// assorted resolutions up to 40³.
pub fn corpus(count: usize, seed: u64) -> Vec<(String, VoxelGrid)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for n in 0..count {
        let s: u64 = rng.gen();
        let res = if n % 25 == 24 {
            40
        } else {
            rng.gen_range(8..=20)
        };
        let (name, g) = match n % 4 {
            0 => ("blob", random_blob(s, res)),
            1 => ("cantilever", random_cantilever(s, res)),
            2 => ("bridge", random_bridge(s, res)),
            _ => ("cavity", random_cavity(s, res)),
        };
        out.push((format!("{name}-{n}-{res}"), g));
    }
    out
}
