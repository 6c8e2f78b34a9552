//! Pushing and grasp-pretraining rewards computed from consecutive snapshots.

use crate::geom::{circle_rect_contact, rect_iou, OrientedRect, Vec2};

/// Coefficients of the pushing and grasp rewards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    pub w_iou: f64,
    pub w_goal: f64,
    pub w_reach: f64,
    pub w_grasp_abs: f64,
    pub w_block_move: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_iou: 100.0,
            w_goal: 250.0,
            w_reach: 750.0,
            w_grasp_abs: 100.0,
            w_block_move: 250.0,
        }
    }
}

impl RewardWeights {
    pub fn is_valid(&self) -> bool {
        [self.w_iou, self.w_goal, self.w_reach, self.w_grasp_abs, self.w_block_move]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0)
    }
}

/// How the three effector clearances collapse into one block/effector distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OeAggregate {
    #[default]
    Mean,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RewardKind {
    #[default]
    Push,
    Grasp,
}

/// Everything the rewards look at, taken at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub block: OrientedRect,
    pub block_center: Vec2,
    pub goal: OrientedRect,
    pub effector_centers: [Vec2; 3],
    pub effector_radius: f64,
}

pub fn dist_og(s: &Snapshot) -> f64 {
    (s.block_center - s.goal.center()).norm()
}

pub fn dist_oe(s: &Snapshot) -> f64 {
    dist_oe_with(s, OeAggregate::Mean)
}

pub fn dist_oe_with(s: &Snapshot, agg: OeAggregate) -> f64 {
    let clearances = s
        .effector_centers
        .map(|c| circle_rect_contact(c, s.effector_radius, &s.block).clearance);
    match agg {
        OeAggregate::Mean => clearances.iter().sum::<f64>() / 3.0,
        OeAggregate::Min => clearances.iter().cloned().fold(f64::INFINITY, f64::min),
    }
}

pub fn push_reward(prev: &Snapshot, cur: &Snapshot, w: &RewardWeights) -> f64 {
    push_reward_with(prev, cur, w, OeAggregate::Mean)
}

pub fn push_reward_with(
    prev: &Snapshot,
    cur: &Snapshot,
    w: &RewardWeights,
    agg: OeAggregate,
) -> f64 {
    w.w_iou * rect_iou(&cur.block, &cur.goal)
        - w.w_goal * (dist_og(cur) - dist_og(prev))
        - w.w_reach * (dist_oe_with(cur, agg) - dist_oe_with(prev, agg))
}

pub fn grasp_reward(prev: &Snapshot, cur: &Snapshot, w: &RewardWeights) -> f64 {
    grasp_reward_with(prev, cur, w, OeAggregate::Mean)
}

/// Rewards closing in on the block while penalising any block motion.
pub fn grasp_reward_with(
    prev: &Snapshot,
    cur: &Snapshot,
    w: &RewardWeights,
    agg: OeAggregate,
) -> f64 {
    let oe_cur = dist_oe_with(cur, agg);
    let oe_prev = dist_oe_with(prev, agg);
    -w.w_grasp_abs * oe_cur
        - w.w_block_move * (cur.block_center - prev.block_center).norm()
        - w.w_reach * (oe_cur - oe_prev)
}

pub fn reward(kind: RewardKind, prev: &Snapshot, cur: &Snapshot, w: &RewardWeights, agg: OeAggregate) -> f64 {
    match kind {
        RewardKind::Push => push_reward_with(prev, cur, w, agg),
        RewardKind::Grasp => grasp_reward_with(prev, cur, w, agg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Pose2D;
    use approx::assert_abs_diff_eq;

    fn rect(x: f64, y: f64) -> OrientedRect {
        OrientedRect::new(Pose2D::new(x, y, 0.0), 0.02, 0.02).unwrap()
    }

    fn snap(block: Vec2, goal: Vec2, eff: [Vec2; 3]) -> Snapshot {
        Snapshot {
            block: rect(block.x, block.y),
            block_center: block,
            goal: rect(goal.x, goal.y),
            effector_centers: eff,
            effector_radius: 0.01,
        }
    }

    // effectors at the given clearances from the right face of a block at origin
    fn effs(clear: [f64; 3]) -> [Vec2; 3] {
        clear.map(|c| Vec2::new(0.02 + 0.01 + c, 0.0))
    }

    #[test]
    fn dist_og_cases() {
        let s = snap(Vec2::ZERO, Vec2::ZERO, effs([0.0; 3]));
        assert_eq!(dist_og(&s), 0.0);
        let s = snap(Vec2::ZERO, Vec2::new(0.03, 0.04), effs([0.0; 3]));
        assert_abs_diff_eq!(dist_og(&s), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn dist_oe_cases() {
        let g = Vec2::new(0.1, 0.1);
        assert_eq!(dist_oe(&snap(Vec2::ZERO, g, effs([0.0; 3]))), 0.0);
        assert_abs_diff_eq!(dist_oe(&snap(Vec2::ZERO, g, effs([0.01, 0.02, 0.03]))), 0.02, epsilon = 1e-12);
        assert_abs_diff_eq!(dist_oe(&snap(Vec2::ZERO, g, effs([0.0, 0.03, 0.03]))), 0.02, epsilon = 1e-12);
        let s = snap(Vec2::ZERO, g, effs([0.01, 0.02, 0.03]));
        assert_abs_diff_eq!(dist_oe_with(&s, OeAggregate::Min), 0.01, epsilon = 1e-12);
    }

    #[test]
    fn push_reward_cases() {
        let w = RewardWeights::default();
        let on_goal = snap(Vec2::ZERO, Vec2::ZERO, effs([0.02; 3]));
        assert_eq!(push_reward(&on_goal, &on_goal, &w), 100.0);

        let far_goal = Vec2::new(0.15, 0.0);
        let still = snap(Vec2::ZERO, far_goal, effs([0.02; 3]));
        assert_eq!(push_reward(&still, &still, &w), 0.0);

        // block moves 0.01 toward the goal, effectors close 0.005 more than that
        let prev = snap(Vec2::ZERO, far_goal, effs([0.02; 3]));
        let b = Vec2::new(0.01, 0.0);
        let cur = snap(b, far_goal, effs([0.015; 3]).map(|e| e + b));
        assert_abs_diff_eq!(push_reward(&prev, &cur, &w), 6.25, epsilon = 1e-9);
    }

    #[test]
    fn grasp_reward_cases() {
        let w = RewardWeights::default();
        let g = Vec2::new(0.1, 0.1);
        let touching = snap(Vec2::ZERO, g, effs([0.0; 3]));
        assert_eq!(grasp_reward(&touching, &touching, &w), 0.0);

        let prev = snap(Vec2::ZERO, g, effs([0.12; 3]));
        let cur = snap(Vec2::ZERO, g, effs([0.10; 3]));
        assert_abs_diff_eq!(grasp_reward(&prev, &cur, &w), 5.0, epsilon = 1e-9);

        let b = Vec2::new(0.0, 0.01);
        let moved = snap(b, g, effs([0.0; 3]).map(|e| e + b));
        assert_abs_diff_eq!(grasp_reward(&touching, &moved, &w), -2.5, epsilon = 1e-12);
    }

    #[test]
    fn equal_snapshots_reduce_to_level_terms() {
        let w = RewardWeights::default();
        let s = snap(Vec2::new(0.01, 0.0), Vec2::new(0.02, 0.01), effs([0.01, 0.05, 0.0]));
        let iou = rect_iou(&s.block, &s.goal);
        assert_abs_diff_eq!(push_reward(&s, &s, &w), 100.0 * iou, epsilon = 1e-12);
        assert_abs_diff_eq!(grasp_reward(&s, &s, &w), -100.0 * dist_oe(&s), epsilon = 1e-12);
    }
}
