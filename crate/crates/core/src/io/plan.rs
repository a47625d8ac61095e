//! Plan JSON.
//!
//! ```json
//! {
//!   "version": 1,
//!   "resolution": [nx, ny, nz],
//!   "tool": {"L": 10, "delta": 10, "mpfs": 10},
//!   "preprocess": true,
//!   "stability": "local",
//!   "initial": "hmvox ...",
//!   "ops": [{"t": "acc", "v": [i, j, k], "o": "-z", "phase": "pre"}, ...]
//! }
//! ```
//!
//! `initial` holds the input model inline in the text grid format; the ops
//! apply to it in order and end at the empty grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Voxel;
use crate::nullifier::{InverseOp, OpKind, Phase, PlanConfig, PlanSequence};
use crate::stability::StabilityMode;
use crate::tools::SmOrientation;

pub const PLAN_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSection {
    #[serde(rename = "L")]
    pub length: i32,
    pub delta: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mpfs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpTag {
    #[serde(rename = "ero")]
    Erosion,
    #[serde(rename = "acc")]
    Accretion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseTag {
    #[serde(rename = "pre")]
    Pre,
    #[serde(rename = "plan")]
    Plan,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpRecord {
    pub t: OpTag,
    pub v: [i32; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub o: Option<SmOrientation>,
    pub phase: PhaseTag,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanFile {
    pub version: u32,
    pub resolution: [usize; 3],
    pub tool: ToolSection,
    #[serde(default = "default_true")]
    pub preprocess: bool,
    #[serde(default)]
    pub stability: StabilityMode,
    pub initial: String,
    pub ops: Vec<OpRecord>,
}

fn default_true() -> bool {
    true
}

impl PlanFile {
    pub fn from_plan(p: &PlanSequence) -> Self {
        PlanFile {
            version: PLAN_VERSION,
            resolution: p.initial.dims().as_array(),
            tool: ToolSection {
                length: p.config.tool_length,
                delta: p.config.delta,
                mpfs: p.config.mpfs,
            },
            preprocess: p.config.preprocess,
            stability: p.config.stability,
            initial: super::to_text(&p.initial),
            ops: p
                .ops
                .iter()
                .map(|op| OpRecord {
                    t: match op.kind {
                        OpKind::Erosion => OpTag::Erosion,
                        OpKind::Accretion => OpTag::Accretion,
                    },
                    v: [op.voxel.i, op.voxel.j, op.voxel.k],
                    o: op.orientation,
                    phase: match op.phase {
                        Phase::PrePlanned => PhaseTag::Pre,
                        Phase::InPlan => PhaseTag::Plan,
                    },
                })
                .collect(),
        }
    }

    pub fn into_plan(self) -> Result<PlanSequence> {
        if self.version != PLAN_VERSION {
            return Err(Error::parse(
                "plan.version",
                format!("unsupported version {}", self.version),
            ));
        }
        let initial = super::parse_text(&self.initial)?;
        if initial.dims().as_array() != self.resolution {
            return Err(Error::parse(
                "plan.initial",
                "grid size does not match `resolution`",
            ));
        }
        let mut ops = Vec::with_capacity(self.ops.len());
        for (n, r) in self.ops.into_iter().enumerate() {
            let op = InverseOp {
                kind: match r.t {
                    OpTag::Erosion => OpKind::Erosion,
                    OpTag::Accretion => OpKind::Accretion,
                },
                voxel: Voxel::new(r.v[0], r.v[1], r.v[2]),
                orientation: r.o,
                phase: match r.phase {
                    PhaseTag::Pre => Phase::PrePlanned,
                    PhaseTag::Plan => Phase::InPlan,
                },
            };
            if !op.is_well_formed() {
                return Err(Error::parse(
                    format!("plan.ops[{n}]"),
                    "accretions need an orientation and erosions must not have one",
                ));
            }
            if !initial.in_bounds(op.voxel) {
                return Err(Error::parse(
                    format!("plan.ops[{n}]"),
                    "voxel outside the grid",
                ));
            }
            ops.push(op);
        }
        Ok(PlanSequence {
            ops,
            initial,
            config: PlanConfig {
                tool_length: self.tool.length,
                delta: self.tool.delta,
                mpfs: self.tool.mpfs,
                preprocess: self.preprocess,
                stability: self.stability,
            },
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn plan_to_json(p: &PlanSequence) -> Result<String> {
    PlanFile::from_plan(p).to_json()
}

pub fn plan_from_json(s: &str) -> Result<PlanSequence> {
    PlanFile::from_json(s)?.into_plan()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VoxelGrid;

    #[test]
    fn round_trip() {
        let mut g = VoxelGrid::new(2, 2, 2).unwrap();
        g.set(Voxel::new(0, 0, 0)).unwrap();
        let p = PlanSequence {
            ops: vec![
                InverseOp::accretion(Voxel::new(1, 0, 0), SmOrientation::PosX, Phase::PrePlanned),
                InverseOp::erosion(Voxel::new(0, 0, 0)),
                InverseOp::erosion(Voxel::new(1, 0, 0)),
            ],
            initial: g,
            config: PlanConfig {
                mpfs: Some(10),
                ..Default::default()
            },
        };
        let s = plan_to_json(&p).unwrap();
        assert!(
            s.contains("\"t\":\"acc\"")
                && s.contains("\"o\":\"+x\"")
                && s.contains("\"phase\":\"pre\"")
        );
        let back = plan_from_json(&s).unwrap();
        assert_eq!(back, p);
        assert_eq!(plan_to_json(&back).unwrap(), s);
    }

    #[test]
    fn malformed_op_rejected() {
        let s = r#"{"version":1,"resolution":[1,1,1],"tool":{"L":10,"delta":10},
            "initial":"hmvox 1 1 1\n#\n","ops":[{"t":"acc","v":[0,0,0],"phase":"plan"}]}"#;
        assert!(plan_from_json(s).is_err());
    }
}
