//! Step-triggered curriculum schedules over task sampling ranges.
//!
//! A schedule is an ordered list of stages. Each stage owns a full
//! [`TaskRanges`] bundle and becomes active at its `start_step` (inclusive)
//! and stays active until the next stage starts.

use std::f64::consts::PI;
use std::fmt;

use crate::env::{EnvConfig, Interval, TaskRanges};

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// `preliminary`, `intermediate`, `advanced` or any custom label.
    pub name: String,
    pub ranges: TaskRanges,
    pub start_step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumSchedule {
    stages: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoStages,
    FirstStageNotAtZero { start_step: u64 },
    NotIncreasing { stage: usize, start_step: u64, previous: u64 },
    EmptyInterval { stage: usize, variable: &'static str, min: f64, max: f64 },
    OutOfLimits { stage: usize, variable: &'static str, min: f64, max: f64, limit_min: f64, limit_max: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStages => write!(f, "schedule has no stages"),
            Violation::FirstStageNotAtZero { start_step } => {
                write!(f, "first stage starts at step {start_step}, expected 0")
            }
            Violation::NotIncreasing { stage, start_step, previous } => write!(
                f,
                "stage {stage} starts at {start_step}, not after the previous stage ({previous})"
            ),
            Violation::EmptyInterval { stage, variable, min, max } => {
                write!(f, "stage {stage}: {variable} interval [{min}, {max}] is empty or not finite")
            }
            Violation::OutOfLimits { stage, variable, min, max, limit_min, limit_max } => write!(
                f,
                "stage {stage}: {variable} interval [{min}, {max}] exceeds physical limits [{limit_min}, {limit_max}]"
            ),
        }
    }
}

impl CurriculumSchedule {
    /// Builds a schedule without validating it; see [`CurriculumSchedule::validate`].
    pub fn new(stages: Vec<Stage>) -> Self {
        Self { stages }
    }

    /// One stage covering the whole run.
    pub fn single(ranges: TaskRanges) -> Self {
        Self::new(vec![Stage {
            name: "advanced".into(),
            ranges,
            start_step: 0,
        }])
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Index of the last stage whose `start_step <= global_step`.
    pub fn active_stage(&self, global_step: u64) -> usize {
        self.stages
            .iter()
            .rposition(|s| s.start_step <= global_step)
            .unwrap_or(0)
    }

    pub fn stage_ranges(&self, global_step: u64) -> &TaskRanges {
        &self.stages[self.active_stage(global_step)].ranges
    }

    /// Collects every violation instead of stopping at the first.
    pub fn validate(&self, env: &EnvConfig) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.stages.is_empty() {
            return Err(vec![Violation::NoStages]);
        }
        if self.stages[0].start_step != 0 {
            out.push(Violation::FirstStageNotAtZero {
                start_step: self.stages[0].start_step,
            });
        }
        for (i, pair) in self.stages.windows(2).enumerate() {
            if pair[1].start_step <= pair[0].start_step {
                out.push(Violation::NotIncreasing {
                    stage: i + 1,
                    start_step: pair[1].start_step,
                    previous: pair[0].start_step,
                });
            }
        }
        let limits = env.limits();
        for (i, stage) in self.stages.iter().enumerate() {
            for ((variable, iv), (_, lim)) in stage.ranges.fields().into_iter().zip(limits.fields()) {
                if !iv.is_valid() {
                    out.push(Violation::EmptyInterval {
                        stage: i,
                        variable,
                        min: iv.min,
                        max: iv.max,
                    });
                } else if !lim.contains_interval(&iv) {
                    out.push(Violation::OutOfLimits {
                        stage: i,
                        variable,
                        min: iv.min,
                        max: iv.max,
                        limit_min: lim.min,
                        limit_max: lim.max,
                    });
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// The three benchmark task families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskFamily {
    /// Block size randomized (observed).
    Size,
    /// Goal pose randomized (observed).
    Goal,
    /// Block mass randomized (unobserved).
    Mass,
}

impl TaskFamily {
    pub fn id(&self) -> u8 {
        match self {
            TaskFamily::Size => 1,
            TaskFamily::Goal => 2,
            TaskFamily::Mass => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(TaskFamily::Size),
            2 => Some(TaskFamily::Goal),
            3 => Some(TaskFamily::Mass),
            _ => None,
        }
    }

    /// Out-of-distribution range extension used for this family.
    pub fn ood_pct(&self) -> f64 {
        match self {
            TaskFamily::Size => 0.67,
            TaskFamily::Goal => 0.13,
            TaskFamily::Mass => 0.21,
        }
    }
}

/// Fixed block edge used wherever size is not the randomized variable.
pub const FIXED_SIZE: f64 = 0.075;
/// Fixed goal of the size and mass tasks: (radial, angle, yaw).
pub const FIXED_GOAL: (f64, f64, f64) = (0.10, PI / 2.0, 0.0);
pub const FIXED_MASS: f64 = 0.15;
pub const DEFAULT_FRICTION: f64 = 0.5;

fn base_ranges(family: TaskFamily) -> TaskRanges {
    let (rho, phi, yaw) = match family {
        TaskFamily::Goal => (0.08, PI / 2.0, 0.0),
        _ => FIXED_GOAL,
    };
    TaskRanges {
        size: Interval::fixed(FIXED_SIZE),
        goal_radial: Interval::fixed(rho),
        goal_angle: Interval::fixed(phi),
        goal_yaw: Interval::fixed(yaw),
        mass: Interval::fixed(FIXED_MASS),
        friction: Interval::fixed(DEFAULT_FRICTION),
    }
}

/// Preliminary, intermediate and advanced ranges of one task family.
pub fn stage_rows(family: TaskFamily) -> [TaskRanges; 3] {
    let base = base_ranges(family);
    match family {
        TaskFamily::Size => [
            base,
            TaskRanges {
                size: Interval::new(0.015, 0.095),
                ..base
            },
            TaskRanges {
                size: Interval::new(0.015, 0.095),
                ..base
            },
        ],
        TaskFamily::Goal => [
            base,
            TaskRanges {
                goal_radial: Interval::new(0.04, 0.12),
                goal_angle: Interval::new(0.0, PI),
                goal_yaw: Interval::new(0.0, PI),
                ..base
            },
            TaskRanges {
                goal_radial: Interval::new(0.0, 0.15),
                goal_angle: Interval::new(-PI, PI),
                goal_yaw: Interval::new(-PI, PI),
                ..base
            },
        ],
        TaskFamily::Mass => [
            base,
            TaskRanges {
                mass: Interval::new(0.05, 0.25),
                ..base
            },
            TaskRanges {
                mass: Interval::new(0.015, 0.5),
                ..base
            },
        ],
    }
}

/// Single advanced stage: the no-curriculum baseline.
pub fn baseline(family: TaskFamily) -> CurriculumSchedule {
    CurriculumSchedule::single(stage_rows(family)[2])
}

/// Preliminary then advanced, switching at `boundary`.
pub fn two_stage(family: TaskFamily, boundary: u64) -> CurriculumSchedule {
    let [pre, _, adv] = stage_rows(family);
    CurriculumSchedule::new(vec![
        Stage { name: "preliminary".into(), ranges: pre, start_step: 0 },
        Stage { name: "advanced".into(), ranges: adv, start_step: boundary },
    ])
}

/// Preliminary, intermediate, advanced.
pub fn three_stage(family: TaskFamily, first: u64, second: u64) -> CurriculumSchedule {
    let [pre, mid, adv] = stage_rows(family);
    CurriculumSchedule::new(vec![
        Stage { name: "preliminary".into(), ranges: pre, start_step: 0 },
        Stage { name: "intermediate".into(), ranges: mid, start_step: first },
        Stage { name: "advanced".into(), ranges: adv, start_step: second },
    ])
}
