//! Patch grouping and machine-neutral toolpath emission.
//!
//! Forward operations are grouped greedily into patches of one kind (and one
//! orientation for SM, one layer for AM) that are spatially connected. Each
//! AM patch becomes a zig-zag of extrusion passes; each SM patch becomes a
//! sequence of plunge/retract moves along the tool axis, one per voxel, in
//! program order.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Voxel;
use crate::replay::{ForwardKind, ForwardOp};
use crate::tools::SmOrientation;

pub const TOOLPATH_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    pub kind: ForwardKind,
    pub orientation: Option<SmOrientation>,
    /// Members in program order.
    pub voxels: Vec<Voxel>,
    /// Program index of the first member.
    pub start: usize,
}

impl Patch {
    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }
}

/// Greedy left-to-right grouping. An op joins the open patch iff it has the
/// same kind, the same orientation (SM) or layer (AM), and is 18-adjacent to
/// a member.
pub fn group_patches(program: &[ForwardOp]) -> Result<Vec<Patch>> {
    let mut patches: Vec<Patch> = Vec::new();
    let mut members: HashSet<Voxel> = HashSet::new();
    for (n, op) in program.iter().enumerate() {
        let well_formed = match op.kind {
            ForwardKind::Am => op.orientation.is_none(),
            ForwardKind::Sm => op.orientation.is_some(),
        };
        if !well_formed {
            return Err(Error::InvalidArgument(format!(
                "forward op {n} at {} has an inconsistent orientation",
                op.voxel
            )));
        }
        let joins = patches.last().is_some_and(|p| {
            p.kind == op.kind
                && p.orientation == op.orientation
                && (op.kind == ForwardKind::Sm || p.voxels[0].k == op.voxel.k)
                && adjacent_to(&members, op.voxel)
        });
        if joins {
            patches
                .last_mut()
                .expect("open patch")
                .voxels
                .push(op.voxel);
        } else {
            members.clear();
            patches.push(Patch {
                kind: op.kind,
                orientation: op.orientation,
                voxels: vec![op.voxel],
                start: n,
            });
        }
        members.insert(op.voxel);
    }
    Ok(patches)
}

fn adjacent_to(members: &HashSet<Voxel>, v: Voxel) -> bool {
    crate::grid::NEIGHBOR_OFFSETS_18
        .iter()
        .any(|&o| members.contains(&v.offset(o)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchKind {
    Am,
    Sm,
}

impl From<ForwardKind> for PatchKind {
    fn from(k: ForwardKind) -> Self {
        match k {
            ForwardKind::Am => PatchKind::Am,
            ForwardKind::Sm => PatchKind::Sm,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Marker {
    /// Switch to the given process before this patch.
    ToolChange { to: PatchKind },
    /// Re-fixture the part so a horizontal tool axis is reachable.
    FixtureRotation { orientation: SmOrientation },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub voxel_size_mm: f64,
    pub nozzle_mm: f64,
    pub tool_length_voxels: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchPath {
    pub kind: PatchKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<SmOrientation>,
    /// Layer of an AM patch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<i32>,
    pub voxels: usize,
    pub markers: Vec<Marker>,
    /// Waypoints in millimetres.
    pub polyline: Vec<[f64; 3]>,
    /// One flag per polyline segment: extruding (AM) or cutting (SM) moves
    /// are `true`, travel moves `false`.
    pub active: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolpathDocument {
    pub version: u32,
    pub header: Header,
    pub patches: Vec<PatchPath>,
}

impl ToolpathDocument {
    pub fn tool_changes(&self) -> usize {
        self.patches
            .iter()
            .flat_map(|p| &p.markers)
            .filter(|m| matches!(m, Marker::ToolChange { .. }))
            .count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Flat G-code-like listing. `G0` is travel, `G1` an active move; tool
    /// changes and fixture rotations appear as comments plus `M6`.
    pub fn to_gcode(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "; hmplan toolpath v{} voxel={}mm nozzle={}mm tool_length={}",
            self.version,
            self.header.voxel_size_mm,
            self.header.nozzle_mm,
            self.header.tool_length_voxels
        );
        out.push_str("G21\nG90\n");
        for (n, p) in self.patches.iter().enumerate() {
            let _ = write!(out, "; patch {n} {:?} voxels={}", p.kind, p.voxels);
            if let Some(o) = p.orientation {
                let _ = write!(out, " orientation={o}");
            }
            if let Some(k) = p.layer {
                let _ = write!(out, " layer={k}");
            }
            out.push('\n');
            for m in &p.markers {
                match m {
                    Marker::ToolChange { to } => {
                        let t = match to {
                            PatchKind::Am => 1,
                            PatchKind::Sm => 2,
                        };
                        let _ = writeln!(out, "M6 T{t} ; tool change to {to:?}");
                    }
                    Marker::FixtureRotation { orientation } => {
                        let _ = writeln!(out, "; rotate fixture for {orientation}");
                    }
                }
            }
            if let Some(first) = p.polyline.first() {
                let _ = writeln!(out, "G0 X{:.4} Y{:.4} Z{:.4}", first[0], first[1], first[2]);
            }
            for (w, &a) in p.polyline.iter().skip(1).zip(&p.active) {
                let g = if a { "G1" } else { "G0" };
                let _ = writeln!(out, "{g} X{:.4} Y{:.4} Z{:.4}", w[0], w[1], w[2]);
            }
        }
        out
    }
}

/// Builds the toolpath document for `patches`.
///
/// `voxel_size` must be a positive integer multiple of `nozzle_diameter`
/// (up to a relative tolerance of 1e-9).
pub fn emit_toolpath(
    patches: &[Patch],
    voxel_size: f64,
    nozzle_diameter: f64,
    tool_length: i32,
) -> Result<ToolpathDocument> {
    if !(voxel_size > 0.0 && nozzle_diameter > 0.0) || !voxel_size.is_finite() {
        return Err(Error::InvalidArgument(
            "voxel size and nozzle must be positive".into(),
        ));
    }
    let ratio = voxel_size / nozzle_diameter;
    let passes = ratio.round();
    if passes < 1.0 || (ratio - passes).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "voxel size {voxel_size} is not a multiple of nozzle diameter {nozzle_diameter}"
        )));
    }
    let passes = passes as usize;
    let mut out = Vec::with_capacity(patches.len());
    let mut prev_kind: Option<ForwardKind> = None;
    for p in patches {
        let mut markers = Vec::new();
        if prev_kind != Some(p.kind) {
            markers.push(Marker::ToolChange { to: p.kind.into() });
        }
        prev_kind = Some(p.kind);
        let (polyline, active, layer) = match p.kind {
            ForwardKind::Am => {
                let (pl, ac) = am_zigzag(&p.voxels, voxel_size, nozzle_diameter, passes);
                (pl, ac, Some(p.voxels[0].k))
            }
            ForwardKind::Sm => {
                let o = p.orientation.expect("SM patch has an orientation");
                if o.is_horizontal() {
                    markers.push(Marker::FixtureRotation { orientation: o });
                }
                let (pl, ac) = sm_plunges(&p.voxels, o, voxel_size, tool_length);
                (pl, ac, None)
            }
        };
        out.push(PatchPath {
            kind: p.kind.into(),
            orientation: p.orientation,
            layer,
            voxels: p.voxels.len(),
            markers,
            polyline,
            active,
        });
    }
    Ok(ToolpathDocument {
        version: TOOLPATH_VERSION,
        header: Header {
            voxel_size_mm: voxel_size,
            nozzle_mm: nozzle_diameter,
            tool_length_voxels: tool_length,
        },
        patches: out,
    })
}

fn am_zigzag(voxels: &[Voxel], vs: f64, nozzle: f64, passes: usize) -> (Vec<[f64; 3]>, Vec<bool>) {
    let z = (voxels[0].k as f64 + 0.5) * vs;
    let mut rows: HashMap<i32, Vec<i32>> = HashMap::new();
    for v in voxels {
        rows.entry(v.j).or_default().push(v.i);
    }
    let mut js: Vec<i32> = rows.keys().copied().collect();
    js.sort_unstable();
    let mut polyline: Vec<[f64; 3]> = Vec::new();
    let mut active = Vec::new();
    let mut forward = true;
    for j in js {
        let mut is = rows.remove(&j).unwrap_or_default();
        is.sort_unstable();
        let mut runs: Vec<(i32, i32)> = Vec::new();
        for i in is {
            match runs.last_mut() {
                Some(r) if r.1 + 1 == i => r.1 = i,
                _ => runs.push((i, i)),
            }
        }
        for p in 0..passes {
            let y = j as f64 * vs + (p as f64 + 0.5) * nozzle;
            let ordered: Vec<(i32, i32)> = if forward {
                runs.clone()
            } else {
                runs.iter().rev().copied().collect()
            };
            for (lo, hi) in ordered {
                let (a, b) = (lo as f64 * vs, (hi + 1) as f64 * vs);
                let (start, end) = if forward { (a, b) } else { (b, a) };
                if !polyline.is_empty() {
                    active.push(false);
                }
                polyline.push([start, y, z]);
                polyline.push([end, y, z]);
                active.push(true);
            }
            forward = !forward;
        }
    }
    (polyline, active)
}

fn sm_plunges(
    voxels: &[Voxel],
    o: SmOrientation,
    vs: f64,
    tool_length: i32,
) -> (Vec<[f64; 3]>, Vec<bool>) {
    let d = o.direction();
    let back = tool_length as f64 * vs;
    let mut polyline = Vec::with_capacity(voxels.len() * 3);
    let mut active = Vec::with_capacity(voxels.len() * 3);
    for v in voxels {
        let c = voxel_center(*v, vs);
        let r = [
            c[0] - d[0] as f64 * back,
            c[1] - d[1] as f64 * back,
            c[2] - d[2] as f64 * back,
        ];
        if !polyline.is_empty() {
            active.push(false);
        }
        polyline.push(r);
        polyline.push(c);
        active.push(true);
        polyline.push(r);
        active.push(false);
    }
    (polyline, active)
}

/// Physical centre of a voxel.
pub fn voxel_center(v: Voxel, vs: f64) -> [f64; 3] {
    [
        (v.i as f64 + 0.5) * vs,
        (v.j as f64 + 0.5) * vs,
        (v.k as f64 + 0.5) * vs,
    ]
}

/// For every AM patch, counts how many active pass segments cover each voxel
/// of its layer over the voxel's full width. A well-formed document covers
/// every AM voxel exactly `passes` times and nothing else.
pub fn am_coverage(doc: &ToolpathDocument) -> HashMap<Voxel, usize> {
    let vs = doc.header.voxel_size_mm;
    let mut cover: HashMap<Voxel, usize> = HashMap::new();
    for p in doc.patches.iter().filter(|p| p.kind == PatchKind::Am) {
        let k = p.layer.unwrap_or(0);
        for (s, &a) in p.active.iter().enumerate() {
            if !a {
                continue;
            }
            let (u, w) = (p.polyline[s], p.polyline[s + 1]);
            let j = (u[1] / vs).floor() as i32;
            let (x0, x1) = if u[0] <= w[0] {
                (u[0], w[0])
            } else {
                (w[0], u[0])
            };
            let i0 = (x0 / vs).round() as i32;
            let i1 = (x1 / vs).round() as i32;
            for i in i0..i1 {
                *cover.entry(Voxel::new(i, j, k)).or_default() += 1;
            }
        }
    }
    cover
}
