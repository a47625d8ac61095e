//! Forward program derivation, independent validation by replay, and plan
//! statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility;
use crate::grid::{NoMask, Voxel, VoxelGrid};
use crate::nullifier::{InverseOp, OpKind, Phase};
use crate::stability;
use crate::tools::{self, SmOrientation, ToolSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ForwardKind {
    Am,
    Sm,
}

/// One forward manufacturing step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForwardOp {
    pub kind: ForwardKind,
    pub voxel: Voxel,
    pub orientation: Option<SmOrientation>,
    pub phase: Phase,
}

/// Reverses Γ: erosions become AM deposits, accretions become SM removals.
pub fn forward_program(ops: &[InverseOp]) -> Result<Vec<ForwardOp>> {
    ops.iter()
        .rev()
        .map(|op| {
            if !op.is_well_formed() {
                return Err(Error::InvalidArgument(format!(
                    "malformed inverse operation at {}",
                    op.voxel
                )));
            }
            Ok(ForwardOp {
                kind: match op.kind {
                    OpKind::Erosion => ForwardKind::Am,
                    OpKind::Accretion => ForwardKind::Sm,
                },
                voxel: op.voxel,
                orientation: op.orientation,
                phase: op.phase,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// AM target already solid, SM target already empty, or out of bounds.
    StateMismatch,
    NotSelfSupported,
    AmCollision,
    SmCollision,
    Instability,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub step: usize,
    pub voxel: Voxel,
    pub kind: ViolationKind,
}

/// Summary numbers for a plan.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStatistics {
    pub model_voxels: usize,
    pub total_ops: usize,
    pub am_ops: usize,
    pub sm_ops: usize,
    pub preplanned_supports: usize,
    pub inplan_supports: usize,
    pub support_voxels: usize,
    /// Number of maximal same-kind runs in the forward program.
    pub tool_switches: usize,
    /// `total_ops / model_voxels`.
    pub operation_density: f64,
    /// AM deposits per layer, indexed by `k`.
    pub am_per_layer: Vec<usize>,
    /// SM removals per layer, indexed by `k`.
    pub sm_per_layer: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub valid: bool,
    pub steps_executed: usize,
    pub first_violation: Option<Violation>,
    /// All violations; only populated in audit mode.
    pub violations: Vec<Violation>,
    pub final_matches_target: bool,
    pub statistics: PlanStatistics,
}

pub fn plan_statistics(ops: &[InverseOp], model: &VoxelGrid) -> PlanStatistics {
    let nz = model.dims().nz;
    let mut s = PlanStatistics {
        model_voxels: model.solid_count(),
        total_ops: ops.len(),
        am_per_layer: vec![0; nz],
        sm_per_layer: vec![0; nz],
        ..Default::default()
    };
    for op in ops {
        let k = op.voxel.k.clamp(0, nz as i32 - 1) as usize;
        match op.kind {
            OpKind::Erosion => {
                s.am_ops += 1;
                s.am_per_layer[k] += 1;
            }
            OpKind::Accretion => {
                s.sm_ops += 1;
                s.sm_per_layer[k] += 1;
                match op.phase {
                    Phase::PrePlanned => s.preplanned_supports += 1,
                    Phase::InPlan => s.inplan_supports += 1,
                }
            }
        }
    }
    s.support_voxels = s.sm_ops;
    if !ops.is_empty() {
        s.tool_switches = 1 + ops.windows(2).filter(|w| w[0].kind != w[1].kind).count();
    }
    if s.model_voxels > 0 {
        s.operation_density = s.total_ops as f64 / s.model_voxels as f64;
    }
    s
}

/// Executes the forward program from the null state, checking every step.
///
/// AM steps need an empty target with a support below and nothing solid
/// above the layer. SM steps need a solid target, a collision-free tool at
/// the stated orientation and a stable result (checked with the exact
/// global flood). With `audit` the replay continues past violations and
/// collects all of them.
pub fn replay(
    ops: &[InverseOp],
    target: &VoxelGrid,
    tool: ToolSpec,
    audit: bool,
) -> Result<ReplayReport> {
    let program = forward_program(ops)?;
    let mut state = VoxelGrid::with_dims(target.dims());
    let mut violations = Vec::new();
    let mut executed = 0;
    for (step, op) in program.iter().enumerate() {
        let v = op.voxel;
        let violation = if !state.in_bounds(v) {
            Some(ViolationKind::StateMismatch)
        } else {
            match op.kind {
                ForwardKind::Am => {
                    if state.is_solid(v) {
                        Some(ViolationKind::StateMismatch)
                    } else if !(v.k == 0 || state.has_support(v, &NoMask)) {
                        Some(ViolationKind::NotSelfSupported)
                    } else if !feasibility::is_am_feasible(&state, v, &NoMask)? {
                        Some(ViolationKind::AmCollision)
                    } else {
                        None
                    }
                }
                ForwardKind::Sm => {
                    let o = op.orientation.expect("checked by forward_program");
                    if !state.is_solid(v) {
                        Some(ViolationKind::StateMismatch)
                    } else if tools::sm_collides(&state, v, o, tool.sm_length, &NoMask) {
                        Some(ViolationKind::SmCollision)
                    } else if !stability::stable_without(&state, v, &NoMask) {
                        Some(ViolationKind::Instability)
                    } else {
                        None
                    }
                }
            }
        };
        if let Some(kind) = violation {
            violations.push(Violation {
                step,
                voxel: v,
                kind,
            });
            if !audit {
                break;
            }
            if kind == ViolationKind::StateMismatch {
                executed += 1;
                continue;
            }
        }
        state.set_state(v, op.kind == ForwardKind::Am)?;
        executed += 1;
    }
    let final_matches_target = state == *target;
    Ok(ReplayReport {
        valid: violations.is_empty() && final_matches_target,
        steps_executed: executed,
        first_violation: violations.first().copied(),
        violations: if audit { violations } else { Vec::new() },
        final_matches_target,
        statistics: plan_statistics(ops, target),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column() -> VoxelGrid {
        let mut g = VoxelGrid::new(3, 3, 4).unwrap();
        for k in 0..3 {
            g.set(Voxel::new(1, 1, k)).unwrap();
        }
        g
    }

    #[test]
    fn forward_reverses_and_maps() {
        let ops = vec![
            InverseOp::accretion(Voxel::new(0, 0, 0), SmOrientation::NegZ, Phase::PrePlanned),
            InverseOp::erosion(Voxel::new(1, 0, 0)),
        ];
        let f = forward_program(&ops).unwrap();
        assert_eq!(f[0].kind, ForwardKind::Am);
        assert_eq!(f[0].voxel, Voxel::new(1, 0, 0));
        assert_eq!(f[1].kind, ForwardKind::Sm);
        assert_eq!(f[1].orientation, Some(SmOrientation::NegZ));
    }

    #[test]
    fn malformed_rejected() {
        let mut op = InverseOp::erosion(Voxel::new(0, 0, 0));
        op.orientation = Some(SmOrientation::PosX);
        assert!(forward_program(&[op]).is_err());
    }

    #[test]
    fn column_top_down_is_valid() {
        let g = column();
        let ops: Vec<_> = (0..3)
            .rev()
            .map(|k| InverseOp::erosion(Voxel::new(1, 1, k)))
            .collect();
        let r = replay(&ops, &g, ToolSpec::default(), false).unwrap();
        assert!(r.valid);
        assert_eq!(r.statistics.tool_switches, 1);
        assert_eq!(r.statistics.operation_density, 1.0);
    }

    #[test]
    fn wrong_order_is_caught() {
        let g = column();
        let ops: Vec<_> = (0..3)
            .map(|k| InverseOp::erosion(Voxel::new(1, 1, k)))
            .collect();
        let r = replay(&ops, &g, ToolSpec::default(), false).unwrap();
        assert!(!r.valid);
        let v = r.first_violation.unwrap();
        assert_eq!(v.step, 0);
        assert_eq!(v.kind, ViolationKind::NotSelfSupported);
    }

    #[test]
    fn audit_collects_all() {
        let g = column();
        let ops: Vec<_> = (0..3)
            .map(|k| InverseOp::erosion(Voxel::new(1, 1, k)))
            .collect();
        let r = replay(&ops, &g, ToolSpec::default(), true).unwrap();
        assert!(r.violations.len() >= 2);
        assert!(!r.valid);
    }

    #[test]
    fn missing_voxel_fails_target_match() {
        let g = column();
        let ops: Vec<_> = (0..2)
            .rev()
            .map(|k| InverseOp::erosion(Voxel::new(1, 1, k)))
            .collect();
        let r = replay(&ops, &g, ToolSpec::default(), false).unwrap();
        assert!(r.first_violation.is_none());
        assert!(!r.final_matches_target);
        assert!(!r.valid);
    }
}
