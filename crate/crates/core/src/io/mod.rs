//! File formats: the `hmvox` text grid, the `HMVX1` binary grid, plan JSON
//! and binary STL.

pub mod plan;
pub mod stl;

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Dims, Voxel, VoxelGrid};

pub use plan::PlanFile;

const MAGIC: &[u8; 5] = b"HMVX1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridFormat {
    Text,
    Binary,
    Stl,
}

impl GridFormat {
    /// Picks a format from the file extension, falling back to the leading
    /// bytes.
    pub fn detect(path: &Path, bytes: &[u8]) -> GridFormat {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("stl") => GridFormat::Stl,
            Some("hmvx") | Some("bin") => GridFormat::Binary,
            Some("hmvox") | Some("txt") => GridFormat::Text,
            _ if bytes.starts_with(MAGIC) => GridFormat::Binary,
            _ if bytes.starts_with(b"hmvox") => GridFormat::Text,
            _ => GridFormat::Stl,
        }
    }
}

/// Parses a grid in the given format (`Stl` is rejected here; use
/// [`stl::voxelize_mesh`]).
pub fn parse_grid(bytes: &[u8], format: GridFormat) -> Result<VoxelGrid> {
    match format {
        GridFormat::Text => {
            let text = std::str::from_utf8(bytes)
                .map_err(|e| Error::parse(format!("byte {}", e.valid_up_to()), "invalid UTF-8"))?;
            parse_text(text)
        }
        GridFormat::Binary => parse_binary(bytes),
        GridFormat::Stl => Err(Error::InvalidArgument(
            "STL input must be voxelized first".into(),
        )),
    }
}

pub fn parse_text(text: &str) -> Result<VoxelGrid> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim_end_matches('\r')));
    let (hn, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::parse("line 1", "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "hmvox" {
        return Err(Error::parse(
            format!("line {hn}"),
            "expected header `hmvox <nx> <ny> <nz>`",
        ));
    }
    let mut dims = [0usize; 3];
    for (d, f) in dims.iter_mut().zip(&fields[1..]) {
        *d = f
            .parse()
            .map_err(|_| Error::parse(format!("line {hn}"), format!("bad dimension `{f}`")))?;
    }
    let dims = Dims::new(dims[0], dims[1], dims[2])
        .map_err(|e| Error::parse(format!("line {hn}"), e.to_string()))?;
    let mut g = VoxelGrid::with_dims(dims);
    let mut rows = lines.filter(|(_, l)| !l.trim().is_empty());
    for k in 0..dims.nz {
        for j in 0..dims.ny {
            let (ln, row) = rows.next().ok_or_else(|| {
                Error::parse("end of input", format!("missing row j={j} of layer k={k}"))
            })?;
            let row = row.trim_end();
            if row.chars().count() != dims.nx {
                return Err(Error::parse(
                    format!("line {ln}"),
                    format!(
                        "row j={j} of layer k={k} has {} cells, expected {}",
                        row.chars().count(),
                        dims.nx
                    ),
                ));
            }
            for (i, c) in row.chars().enumerate() {
                match c {
                    '#' => {
                        g.set(Voxel::new(i as i32, j as i32, k as i32))?;
                    }
                    '.' => {}
                    _ => {
                        return Err(Error::parse(
                            format!("line {ln}, column {}", i + 1),
                            format!("illegal character `{c}`"),
                        ))
                    }
                }
            }
        }
    }
    if let Some((ln, _)) = rows.next() {
        return Err(Error::parse(
            format!("line {ln}"),
            "unexpected data after the last layer",
        ));
    }
    Ok(g)
}

pub fn to_text(g: &VoxelGrid) -> String {
    let d = g.dims();
    let mut s = String::with_capacity(16 + (d.nx + 1) * d.ny * d.nz + d.nz);
    s.push_str(&format!("hmvox {} {} {}\n", d.nx, d.ny, d.nz));
    for k in 0..d.nz {
        if k > 0 {
            s.push('\n');
        }
        for j in 0..d.ny {
            for i in 0..d.nx {
                s.push(if g.is_solid(Voxel::new(i as i32, j as i32, k as i32)) {
                    '#'
                } else {
                    '.'
                });
            }
            s.push('\n');
        }
    }
    s
}

pub fn to_binary(g: &VoxelGrid) -> Vec<u8> {
    let d = g.dims();
    let n = d.len();
    let mut out = Vec::with_capacity(17 + n.div_ceil(8));
    out.extend_from_slice(MAGIC);
    for x in d.as_array() {
        out.extend_from_slice(&(x as u32).to_le_bytes());
    }
    let words = g.words();
    for b in 0..n.div_ceil(8) {
        out.push((words[b / 8] >> ((b % 8) * 8)) as u8);
    }
    out
}

pub fn parse_binary(bytes: &[u8]) -> Result<VoxelGrid> {
    if bytes.len() < 5 || &bytes[..5] != MAGIC {
        return Err(Error::parse("offset 0", "missing HMVX1 magic"));
    }
    if bytes.len() < 17 {
        return Err(Error::parse(
            format!("offset {}", bytes.len()),
            "truncated header",
        ));
    }
    let dim = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let dims =
        Dims::new(dim(5), dim(9), dim(13)).map_err(|e| Error::parse("offset 5", e.to_string()))?;
    let n = dims.len();
    let need = 17 + n.div_ceil(8);
    if bytes.len() < need {
        return Err(Error::parse(
            format!("offset {}", bytes.len()),
            format!("truncated payload, expected {need} bytes"),
        ));
    }
    if bytes.len() > need {
        return Err(Error::parse(
            format!("offset {need}"),
            "trailing bytes after payload",
        ));
    }
    let mut g = VoxelGrid::with_dims(dims);
    for (b, &byte) in bytes[17..].iter().enumerate() {
        if byte == 0 {
            continue;
        }
        for bit in 0..8 {
            if byte & (1 << bit) != 0 {
                let lin = b * 8 + bit;
                if lin >= n {
                    return Err(Error::parse(
                        format!("offset {}", 17 + b),
                        "non-zero padding bits",
                    ));
                }
                g.set(dims.voxel(lin))?;
            }
        }
    }
    Ok(g)
}

/// Reads a grid file, detecting the format when `format` is `None`. STL
/// files are voxelized with `stl_resolution` cells along the longest axis.
pub fn read_grid(
    path: &Path,
    format: Option<GridFormat>,
    stl_resolution: usize,
) -> Result<VoxelGrid> {
    let bytes = std::fs::read(path)?;
    let format = format.unwrap_or_else(|| GridFormat::detect(path, &bytes));
    match format {
        GridFormat::Stl => {
            let tris = stl::parse_binary_stl(&bytes)?;
            stl::voxelize_mesh(&tris, stl_resolution)
        }
        f => parse_grid(&bytes, f),
    }
}

/// Writes `g` as text unless the extension asks for the binary format.
pub fn write_grid(path: &Path, g: &VoxelGrid) -> Result<()> {
    let binary = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("hmvx") | Some("bin")
    );
    if binary {
        std::fs::write(path, to_binary(g))?;
    } else {
        std::fs::write(path, to_text(g))?;
    }
    Ok(())
}
