//! Binary STL reading and parity voxelization.

use crate::error::{Error, Result};
use crate::grid::{Dims, Voxel, VoxelGrid};

pub type Triangle = [[f64; 3]; 3];

// Column index with the solid layers found along it.
type Column = (usize, Vec<usize>);

pub fn parse_binary_stl(bytes: &[u8]) -> Result<Vec<Triangle>> {
    if bytes.len() < 84 {
        return Err(Error::parse(
            format!("offset {}", bytes.len()),
            "truncated STL header",
        ));
    }
    let n = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as usize;
    let need = 84 + 50 * n;
    if bytes.len() < need {
        if bytes.starts_with(b"solid") {
            return Err(Error::parse("offset 0", "ASCII STL is not supported"));
        }
        return Err(Error::parse(
            format!("offset {}", bytes.len()),
            format!("truncated STL: {n} triangles need {need} bytes"),
        ));
    }
    let f = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as f64;
    let mut tris = Vec::with_capacity(n);
    for t in 0..n {
        let base = 84 + 50 * t + 12;
        let mut tri = [[0.0; 3]; 3];
        for (vi, v) in tri.iter_mut().enumerate() {
            for (c, x) in v.iter_mut().enumerate() {
                *x = f(base + 12 * vi + 4 * c);
            }
        }
        tris.push(tri);
    }
    Ok(tris)
}

pub fn write_binary_stl(tris: &[Triangle]) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out.extend_from_slice(&(tris.len() as u32).to_le_bytes());
    for t in tris {
        out.extend_from_slice(&[0u8; 12]);
        for v in t {
            for &c in v {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0u8; 2]);
    }
    out
}

fn threads() -> usize {
    match std::env::var("HMPLAN_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        Some(n) if n > 0 => n,
        _ => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    }
}

/// Voxelizes a closed triangle mesh with `resolution` cells along its longest
/// axis. A voxel is solid iff its centre is inside by even-odd ray casting
/// along +z.
pub fn voxelize_mesh(tris: &[Triangle], resolution: usize) -> Result<VoxelGrid> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    if tris.is_empty() {
        return Err(Error::InvalidArgument("mesh has no triangles".into()));
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for t in tris {
        for v in t {
            for c in 0..3 {
                if !v[c].is_finite() {
                    return Err(Error::InvalidArgument(
                        "mesh has non-finite coordinates".into(),
                    ));
                }
                lo[c] = lo[c].min(v[c]);
                hi[c] = hi[c].max(v[c]);
            }
        }
    }
    let extent = (0..3).map(|c| hi[c] - lo[c]).fold(0.0, f64::max);
    if extent <= 0.0 {
        return Err(Error::InvalidArgument("mesh is degenerate".into()));
    }
    let h = extent / resolution as f64;
    let n: Vec<usize> = (0..3)
        .map(|c| (((hi[c] - lo[c]) / h).ceil() as usize).max(1))
        .collect();
    let dims = Dims::new(n[0], n[1], n[2])?;

    // Slightly off-centre rays avoid hitting shared edges and vertices.
    let jitter = [h * 1.0e-4 * 1.618_033_988, h * 1.0e-4 * std::f64::consts::E];
    // Triangles binned by the columns their xy bounding box overlaps.
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); dims.nx * dims.ny];
    for (ti, t) in tris.iter().enumerate() {
        let col = |x: f64, c: usize, nmax: usize| {
            (((x - lo[c]) / h - 0.5).floor().max(-1.0) as i64).min(nmax as i64 - 1)
        };
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for v in t {
            x0 = x0.min(v[0]);
            x1 = x1.max(v[0]);
            y0 = y0.min(v[1]);
            y1 = y1.max(v[1]);
        }
        let (i0, i1) = (
            col(x0, 0, dims.nx),
            (col(x1, 0, dims.nx) + 1).min(dims.nx as i64 - 1),
        );
        let (j0, j1) = (
            col(y0, 1, dims.ny),
            (col(y1, 1, dims.ny) + 1).min(dims.ny as i64 - 1),
        );
        for j in j0.max(0)..=j1 {
            for i in i0.max(0)..=i1 {
                bins[i as usize + dims.nx * j as usize].push(ti as u32);
            }
        }
    }

    let columns: Vec<usize> = (0..dims.nx * dims.ny).collect();
    let workers = threads().min(columns.len()).max(1);
    let chunk = columns.len().div_ceil(workers);
    let results: Vec<Result<Vec<Column>>> = std::thread::scope(|s| {
        let handles: Vec<_> = columns
            .chunks(chunk)
            .map(|cols| {
                let bins = &bins;
                s.spawn(move || {
                    let mut out = Vec::new();
                    let mut zs = Vec::new();
                    for &c in cols {
                        let (i, j) = (c % dims.nx, c / dims.nx);
                        let px = lo[0] + (i as f64 + 0.5) * h + jitter[0];
                        let py = lo[1] + (j as f64 + 0.5) * h + jitter[1];
                        zs.clear();
                        for &ti in &bins[c] {
                            if let Some(z) = ray_hit(&tris[ti as usize], px, py) {
                                zs.push(z);
                            }
                        }
                        if zs.len() % 2 == 1 {
                            return Err(Error::NotWatertight { i, j });
                        }
                        zs.sort_by(f64::total_cmp);
                        let mut solid = Vec::new();
                        for pair in zs.chunks(2) {
                            for k in 0..dims.nz {
                                let cz = lo[2] + (k as f64 + 0.5) * h;
                                if cz > pair[0] && cz < pair[1] {
                                    solid.push(k);
                                }
                            }
                        }
                        if !solid.is_empty() {
                            out.push((c, solid));
                        }
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("voxelizer thread"))
            .collect()
    });
    let mut g = VoxelGrid::with_dims(dims);
    for r in results {
        for (c, ks) in r? {
            for k in ks {
                g.set(Voxel::new(
                    (c % dims.nx) as i32,
                    (c / dims.nx) as i32,
                    k as i32,
                ))?;
            }
        }
    }
    Ok(g)
}

/// Height at which the vertical line through `(px, py)` crosses `t`.
fn ray_hit(t: &Triangle, px: f64, py: f64) -> Option<f64> {
    let [a, b, c] = *t;
    let d = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
    if d.abs() < 1e-300 {
        return None;
    }
    let l1 = ((b[1] - c[1]) * (px - c[0]) + (c[0] - b[0]) * (py - c[1])) / d;
    let l2 = ((c[1] - a[1]) * (px - c[0]) + (a[0] - c[0]) * (py - c[1])) / d;
    let l3 = 1.0 - l1 - l2;
    if l1 < 0.0 || l2 < 0.0 || l3 < 0.0 {
        return None;
    }
    Some(l1 * a[2] + l2 * b[2] + l3 * c[2])
}

/// Twelve triangles of an axis-aligned box.
pub fn box_mesh(lo: [f64; 3], hi: [f64; 3]) -> Vec<Triangle> {
    let p =
        |x: usize, y: usize, z: usize| [[lo[0], hi[0]][x], [lo[1], hi[1]][y], [lo[2], hi[2]][z]];
    let quads = [
        [p(0, 0, 0), p(0, 1, 0), p(1, 1, 0), p(1, 0, 0)],
        [p(0, 0, 1), p(1, 0, 1), p(1, 1, 1), p(0, 1, 1)],
        [p(0, 0, 0), p(1, 0, 0), p(1, 0, 1), p(0, 0, 1)],
        [p(0, 1, 0), p(0, 1, 1), p(1, 1, 1), p(1, 1, 0)],
        [p(0, 0, 0), p(0, 0, 1), p(0, 1, 1), p(0, 1, 0)],
        [p(1, 0, 0), p(1, 1, 0), p(1, 1, 1), p(1, 0, 1)],
    ];
    quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect()
}

/// Closed UV sphere.
pub fn sphere_mesh(center: [f64; 3], r: f64, stacks: usize, slices: usize) -> Vec<Triangle> {
    use std::f64::consts::PI;
    let pt = |s: usize, l: usize| {
        let th = PI * s as f64 / stacks as f64;
        let ph = 2.0 * PI * (l % slices) as f64 / slices as f64;
        [
            center[0] + r * th.sin() * ph.cos(),
            center[1] + r * th.sin() * ph.sin(),
            center[2] + r * th.cos(),
        ]
    };
    let mut out = Vec::new();
    for s in 0..stacks {
        for l in 0..slices {
            let (a, b, c, d) = (pt(s, l), pt(s + 1, l), pt(s + 1, l + 1), pt(s, l + 1));
            if s > 0 {
                out.push([a, b, d]);
            }
            if s + 1 < stacks {
                out.push([b, c, d]);
            }
        }
    }
    out
}
