//! Task enumeration, motion planning, task allocation and Boltzmann-rational
//! action choice.

mod allocation;
mod boltzmann;
mod motion;
mod tasks;

pub use allocation::{
    allocate_tasks, plan_task, sequence_cost, Allocation, AllocationError, AllocationMode,
    Situation, TaskPlan,
};
pub use boltzmann::{boltzmann_probabilities, boltzmann_select, finite_costs, BoltzmannError};
pub use motion::{MotionGoal, MotionPlanner, PartnerModel, PlanError, PlanResult};
pub use tasks::{enumerate_tasks, is_useful, SoupSource, Task, TaskKind};
